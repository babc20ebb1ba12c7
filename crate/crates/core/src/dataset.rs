//! Node-classification datasets on disk.
//!
//! A dataset directory holds four files:
//!
//! * `edges.tsv`: `u<TAB>v` per line, 0-based ids, `#` comments allowed.
//!   Each undirected edge may appear once or twice.
//! * `features.bin`: `"GPCF"`, `u32` n, `u32` d, then `n·d` little-endian
//!   `f64` in row-major order. `features.tsv` (n lines of d tab-separated
//!   decimals) and `features.coo` (a `n<TAB>d` header, then
//!   `row<TAB>col<TAB>value` triplets for the nonzeros) are accepted too; the
//!   extension picks the parser.
//! * `labels.tsv`: `node<TAB>label`; nodes not listed are unlabeled.
//! * `splits.tsv`: `node<TAB>{train|val|test}`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::DenseMatrix;

pub const FEATURES_MAGIC: &[u8; 4] = b"GPCF";

/// Train/validation/test membership; the three masks are disjoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Masks {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

impl Masks {
    pub fn empty(n: usize) -> Masks {
        Masks {
            train: vec![false; n],
            val: vec![false; n],
            test: vec![false; n],
        }
    }

    pub fn indices(mask: &[bool]) -> Vec<usize> {
        mask.iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    fn permuted(&self, perm: &[usize]) -> Masks {
        let remap = |m: &[bool]| {
            let mut out = vec![false; m.len()];
            for (i, &v) in m.iter().enumerate() {
                out[perm[i]] = v;
            }
            out
        };
        Masks {
            train: remap(&self.train),
            val: remap(&self.val),
            test: remap(&self.test),
        }
    }
}

/// Which split a node belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitRole {
    Train,
    Val,
    Test,
}

impl SplitRole {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitRole::Train => "train",
            SplitRole::Val => "val",
            SplitRole::Test => "test",
        }
    }
}

/// Graph, node features, labels and masks, validated together.
#[derive(Clone, Debug)]
pub struct GraphDataset {
    pub graph: Graph,
    pub features: DenseMatrix,
    /// `None` marks an unlabeled node.
    pub labels: Vec<Option<usize>>,
    pub num_classes: usize,
    pub masks: Masks,
}

impl GraphDataset {
    /// Checks every cross-field invariant.
    pub fn new(
        graph: Graph,
        features: DenseMatrix,
        labels: Vec<Option<usize>>,
        num_classes: usize,
        masks: Masks,
    ) -> Result<GraphDataset> {
        let n = graph.num_nodes();
        if features.rows() != n {
            return Err(Error::shape("GraphDataset features", n, features.rows()));
        }
        for len in [labels.len(), masks.train.len(), masks.val.len(), masks.test.len()] {
            if len != n {
                return Err(Error::shape("GraphDataset labels/masks", n, len));
            }
        }
        features.check_finite("features")?;
        for (i, l) in labels.iter().enumerate() {
            if let Some(l) = *l {
                if l >= num_classes {
                    return Err(Error::InvalidConfig(format!(
                        "node {i}: label {l} >= num_classes {num_classes}"
                    )));
                }
            }
        }
        for i in 0..n {
            let roles = masks.train[i] as u8 + masks.val[i] as u8 + masks.test[i] as u8;
            if roles > 1 {
                return Err(Error::InvalidConfig(format!(
                    "node {i} is in more than one split"
                )));
            }
            if masks.train[i] && labels[i].is_none() {
                return Err(Error::InvalidConfig(format!(
                    "train node {i} has no label"
                )));
            }
        }
        Ok(GraphDataset {
            graph,
            features,
            labels,
            num_classes,
            masks,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    /// Labels of training nodes only; everything else is `None`. This is the
    /// only label view the supervised smoothing term may see.
    pub fn train_labels(&self) -> Vec<Option<usize>> {
        self.labels
            .iter()
            .zip(&self.masks.train)
            .map(|(l, &t)| if t { *l } else { None })
            .collect()
    }

    /// Copy with each feature row scaled to unit L1 norm (zero rows kept).
    pub fn with_row_normalized_features(&self) -> GraphDataset {
        let mut out = self.clone();
        let d = out.features.cols();
        for row in out.features.as_mut_slice().chunks_mut(d.max(1)) {
            let s: f64 = row.iter().map(|v| v.abs()).sum();
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        out
    }

    /// Relabels node `i` as `perm[i]` across every field.
    pub fn permuted(&self, perm: &[usize]) -> Result<GraphDataset> {
        let n = self.num_nodes();
        let graph = self.graph.permuted(perm)?;
        let mut features = DenseMatrix::zeros(n, self.num_features());
        let mut labels = vec![None; n];
        for i in 0..n {
            features.row_mut(perm[i]).copy_from_slice(self.features.row(i));
            labels[perm[i]] = self.labels[i];
        }
        GraphDataset::new(
            graph,
            features,
            labels,
            self.num_classes,
            self.masks.permuted(perm),
        )
    }
}

/// Locations of the four dataset files.
#[derive(Clone, Debug)]
pub struct DatasetPaths {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub splits: PathBuf,
}

impl DatasetPaths {
    /// Standard file names inside `dir`; the first existing features file of
    /// `features.bin`, `features.coo`, `features.tsv` wins.
    pub fn in_dir(dir: impl AsRef<Path>) -> DatasetPaths {
        let dir = dir.as_ref();
        let features = ["features.bin", "features.coo", "features.tsv"]
            .iter()
            .map(|f| dir.join(f))
            .find(|p| p.exists())
            .unwrap_or_else(|| dir.join("features.bin"));
        DatasetPaths {
            edges: dir.join("edges.tsv"),
            features,
            labels: dir.join("labels.tsv"),
            splits: dir.join("splits.tsv"),
        }
    }
}

pub fn load_dir(dir: impl AsRef<Path>) -> Result<GraphDataset> {
    load_dataset(&DatasetPaths::in_dir(dir), None)
}

/// Loads and validates a dataset. `num_classes` defaults to one more than
/// the largest label seen.
pub fn load_dataset(paths: &DatasetPaths, num_classes: Option<usize>) -> Result<GraphDataset> {
    let features = read_features(&paths.features)?;
    let n = features.rows();
    let edges = read_edges(&paths.edges, n)?;
    let graph = Graph::from_edges(n, &edges)?;
    let labels = read_labels(&paths.labels, n)?;
    let max_label = labels.iter().flatten().max().copied();
    let c = match (num_classes, max_label) {
        (Some(c), Some(m)) if m >= c => {
            return Err(Error::Parse {
                path: paths.labels.clone(),
                line: 0,
                reason: format!("label {m} >= num_classes {c}"),
            })
        }
        (Some(c), _) => c,
        (None, Some(m)) => m + 1,
        (None, None) => 0,
    };
    let masks = read_splits(&paths.splits, n, &labels)?;
    GraphDataset::new(graph, features, labels, c, masks)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push((i + 1, t.to_string()));
    }
    Ok(out)
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn fields<'a>(path: &Path, line: usize, text: &'a str, want: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = text.split_whitespace().collect();
    if f.len() != want {
        return Err(parse_err(
            path,
            line,
            format!("expected {want} fields, found {}", f.len()),
        ));
    }
    Ok(f)
}

fn parse_node(path: &Path, line: usize, s: &str, n: usize) -> Result<usize> {
    let id: usize = s
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad node id {s:?}")))?;
    if id >= n {
        return Err(parse_err(
            path,
            line,
            format!("node id {id} out of range (n = {n})"),
        ));
    }
    Ok(id)
}

pub fn read_edges(path: &Path, n: usize) -> Result<Vec<(usize, usize)>> {
    data_lines(path)?
        .into_iter()
        .map(|(ln, text)| {
            let f = fields(path, ln, &text, 2)?;
            Ok((parse_node(path, ln, f[0], n)?, parse_node(path, ln, f[1], n)?))
        })
        .collect()
}

pub fn read_labels(path: &Path, n: usize) -> Result<Vec<Option<usize>>> {
    let mut labels = vec![None; n];
    for (ln, text) in data_lines(path)? {
        let f = fields(path, ln, &text, 2)?;
        let id = parse_node(path, ln, f[0], n)?;
        let label: i64 = f[1]
            .parse()
            .map_err(|_| parse_err(path, ln, format!("bad label {:?}", f[1])))?;
        if label < 0 {
            continue;
        }
        if labels[id].is_some() {
            return Err(parse_err(path, ln, format!("duplicate label for node {id}")));
        }
        labels[id] = Some(label as usize);
    }
    Ok(labels)
}

pub fn read_splits(path: &Path, n: usize, labels: &[Option<usize>]) -> Result<Masks> {
    let mut masks = Masks::empty(n);
    let mut seen = vec![false; n];
    for (ln, text) in data_lines(path)? {
        let f = fields(path, ln, &text, 2)?;
        let id = parse_node(path, ln, f[0], n)?;
        if seen[id] {
            return Err(parse_err(path, ln, format!("node {id} listed twice")));
        }
        seen[id] = true;
        match f[1] {
            "train" => {
                if labels[id].is_none() {
                    return Err(parse_err(path, ln, format!("train node {id} is unlabeled")));
                }
                masks.train[id] = true;
            }
            "val" => masks.val[id] = true,
            "test" => masks.test[id] = true,
            other => return Err(parse_err(path, ln, format!("unknown split {other:?}"))),
        }
    }
    Ok(masks)
}

pub fn read_features(path: &Path) -> Result<DenseMatrix> {
    let m = match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => read_features_bin(path)?,
        Some("tsv") => read_features_tsv(path)?,
        Some("coo") => read_features_coo(path)?,
        _ => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: "unknown features extension (want .bin, .tsv or .coo)".into(),
            })
        }
    };
    if let Err(Error::NonFinite { row, col, .. }) = m.check_finite("features") {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("non-finite feature at row {row}, column {col}"),
        });
    }
    Ok(m)
}

fn read_features_bin(path: &Path) -> Result<DenseMatrix> {
    let mut bytes = Vec::new();
    open(path)?
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::Format {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 12 || &bytes[..4] != FEATURES_MAGIC {
        return Err(bad("missing GPCF header"));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if body.len() != n * d * 8 {
        return Err(bad(&format!(
            "expected {} payload bytes for {n}x{d}, found {}",
            n * d * 8,
            body.len()
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseMatrix::from_vec(n, d, data)
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad number {s:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value {s:?}")));
    }
    Ok(v)
}

fn read_features_tsv(path: &Path) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, text) in data_lines(path)? {
        let row = text
            .split_whitespace()
            .map(|s| parse_f64(path, ln, s))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    path,
                    ln,
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

fn read_features_coo(path: &Path) -> Result<DenseMatrix> {
    let lines = data_lines(path)?;
    let Some((hl, header)) = lines.first() else {
        return Err(parse_err(path, 1, "missing n<TAB>d header"));
    };
    let h = fields(path, *hl, header, 2)?;
    let parse_dim = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| parse_err(path, *hl, format!("bad dimension {s:?}")))
    };
    let (n, d) = (parse_dim(h[0])?, parse_dim(h[1])?);
    let mut m = DenseMatrix::zeros(n, d);
    let mut filled = vec![false; n * d];
    for (ln, text) in &lines[1..] {
        let f = fields(path, *ln, text, 3)?;
        let r = parse_node(path, *ln, f[0], n)?;
        let c: usize = f[1]
            .parse()
            .ok()
            .filter(|&c| c < d)
            .ok_or_else(|| parse_err(path, *ln, format!("bad column {:?} (d = {d})", f[1])))?;
        if std::mem::replace(&mut filled[r * d + c], true) {
            return Err(parse_err(path, *ln, format!("duplicate entry ({r}, {c})")));
        }
        m.set(r, c, parse_f64(path, *ln, f[2])?);
    }
    Ok(m)
}

/// On-disk layout for [`write_features`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureFormat {
    Bin,
    Tsv,
    Coo,
}

impl FeatureFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            FeatureFormat::Bin => "features.bin",
            FeatureFormat::Tsv => "features.tsv",
            FeatureFormat::Coo => "features.coo",
        }
    }
}

pub fn write_features(path: &Path, x: &DenseMatrix, format: FeatureFormat) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    match format {
        FeatureFormat::Bin => {
            let dims = |v: usize| -> Result<[u8; 4]> {
                u32::try_from(v)
                    .map(u32::to_le_bytes)
                    .map_err(|_| Error::InvalidConfig(format!("dimension {v} exceeds u32")))
            };
            w.write_all(FEATURES_MAGIC).map_err(io)?;
            w.write_all(&dims(x.rows())?).map_err(io)?;
            w.write_all(&dims(x.cols())?).map_err(io)?;
            for v in x.as_slice() {
                w.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
        FeatureFormat::Tsv => {
            for i in 0..x.rows() {
                let line: Vec<String> = x.row(i).iter().map(|v| format!("{v:?}")).collect();
                writeln!(w, "{}", line.join("\t")).map_err(io)?;
            }
        }
        FeatureFormat::Coo => {
            writeln!(w, "{}\t{}", x.rows(), x.cols()).map_err(io)?;
            for i in 0..x.rows() {
                for (j, v) in x.row(i).iter().enumerate() {
                    if *v != 0.0 {
                        writeln!(w, "{i}\t{j}\t{v:?}").map_err(io)?;
                    }
                }
            }
        }
    }
    w.flush().map_err(io)
}

/// Writes `ds` into `dir` using the standard file names.
pub fn write_dir(dir: &Path, ds: &GraphDataset, format: FeatureFormat) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_features(&dir.join(format.file_name()), &ds.features, format)?;

    let path = dir.join("edges.tsv");
    let mut w = create(&path)?;
    let io = |e| Error::io(&path, e);
    for (u, v) in ds.graph.edges() {
        writeln!(w, "{u}\t{v}").map_err(io)?;
    }
    w.flush().map_err(io)?;

    let path = dir.join("labels.tsv");
    let mut w = create(&path)?;
    let io = |e| Error::io(&path, e);
    for (i, l) in ds.labels.iter().enumerate() {
        if let Some(l) = l {
            writeln!(w, "{i}\t{l}").map_err(io)?;
        }
    }
    w.flush().map_err(io)?;

    let path = dir.join("splits.tsv");
    let mut w = create(&path)?;
    let io = |e| Error::io(&path, e);
    for i in 0..ds.num_nodes() {
        let role = if ds.masks.train[i] {
            SplitRole::Train
        } else if ds.masks.val[i] {
            SplitRole::Val
        } else if ds.masks.test[i] {
            SplitRole::Test
        } else {
            continue;
        };
        writeln!(w, "{i}\t{}", role.as_str()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// A raw citation corpus in the `.content` / `.cites` layout: one paper per
/// line as `<id> <binary word attributes> <class>`, and one citation per
/// line as `<cited id> <citing id>`.
#[derive(Clone, Debug)]
pub struct CitationCorpus {
    pub graph: Graph,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    /// Citation lines read, before symmetrization and deduplication.
    pub raw_edge_lines: usize,
    /// Citations naming a paper absent from the content file.
    pub dangling_citations: usize,
}

/// Parses a `.content` / `.cites` pair. Nodes keep the content-file order;
/// class ids follow the sorted class names.
pub fn import_citation_corpus(content: &Path, cites: &Path) -> Result<CitationCorpus> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut class_of: Vec<String> = Vec::new();
    for (ln, text) in data_lines(content)? {
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() < 3 {
            return Err(parse_err(content, ln, "expected id, attributes and class"));
        }
        if ids.insert(f[0].to_string(), rows.len()).is_some() {
            return Err(parse_err(content, ln, format!("duplicate paper id {}", f[0])));
        }
        let row = f[1..f.len() - 1]
            .iter()
            .map(|s| parse_f64(content, ln, s))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    content,
                    ln,
                    format!("expected {} attributes, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
        class_of.push(f[f.len() - 1].to_string());
    }
    let mut class_names = class_of.clone();
    class_names.sort();
    class_names.dedup();
    let labels = class_of
        .iter()
        .map(|c| class_names.binary_search(c).unwrap())
        .collect();

    let mut edges = Vec::new();
    let mut raw_edge_lines = 0;
    let mut dangling_citations = 0;
    for (ln, text) in data_lines(cites)? {
        let f = fields(cites, ln, &text, 2)?;
        raw_edge_lines += 1;
        match (ids.get(f[0]), ids.get(f[1])) {
            (Some(&u), Some(&v)) => edges.push((u, v)),
            _ => dangling_citations += 1,
        }
    }
    let features = DenseMatrix::from_rows(&rows)?;
    let graph = Graph::from_edges(features.rows(), &edges)?;
    Ok(CitationCorpus {
        graph,
        features,
        labels,
        class_names,
        raw_edge_lines,
        dangling_citations,
    })
}

/// Planetoid-style split: `per_class` training nodes from every class, then
/// `n_val` validation and `n_test` test nodes, all drawn from one seeded
/// shuffle of the labeled nodes.
pub fn planetoid_split(
    labels: &[Option<usize>],
    num_classes: usize,
    per_class: usize,
    n_val: usize,
    n_test: usize,
    seed: u64,
) -> Result<Masks> {
    let n = labels.len();
    let mut order: Vec<usize> = (0..n).filter(|&i| labels[i].is_some()).collect();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut masks = Masks::empty(n);
    let mut taken = vec![0usize; num_classes];
    let mut rest = Vec::with_capacity(order.len());
    for i in order {
        let c = labels[i].unwrap();
        if taken[c] < per_class {
            taken[c] += 1;
            masks.train[i] = true;
        } else {
            rest.push(i);
        }
    }
    if let Some(c) = taken.iter().position(|&t| t < per_class) {
        return Err(Error::InvalidConfig(format!(
            "class {c} has only {} labeled nodes, {per_class} requested",
            taken[c]
        )));
    }
    if rest.len() < n_val + n_test {
        return Err(Error::InvalidConfig(format!(
            "{} nodes remain for {n_val} validation + {n_test} test",
            rest.len()
        )));
    }
    for &i in &rest[..n_val] {
        masks.val[i] = true;
    }
    for &i in &rest[n_val..n_val + n_test] {
        masks.test[i] = true;
    }
    Ok(masks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    fn toy(dir: &Path) {
        write(dir, "edges.tsv", "# toy\n0\t1\n1\t2\n2\t1\n");
        write(dir, "features.tsv", "1\t0\n0\t1\n0.5\t0.5\n");
        write(dir, "labels.tsv", "0\t0\n1\t1\n2\t1\n");
        write(dir, "splits.tsv", "0\ttrain\n1\ttrain\n2\ttest\n");
    }

    #[test]
    fn toy_fixture_loads() {
        let dir = tempfile::tempdir().unwrap();
        toy(dir.path());
        let ds = load_dir(dir.path()).unwrap();
        assert_eq!(ds.num_nodes(), 3);
        assert_eq!(ds.num_features(), 2);
        assert_eq!(ds.num_classes, 2);
        assert_eq!(ds.graph.num_edges(), 2);
        assert_eq!(Masks::indices(&ds.masks.train), vec![0, 1]);
        assert_eq!(Masks::indices(&ds.masks.test), vec![2]);
    }

    #[test]
    fn nan_feature_is_rejected_with_row() {
        let dir = tempfile::tempdir().unwrap();
        toy(dir.path());
        write(dir.path(), "features.tsv", "1\t0\nNaN\t1\n0.5\t0.5\n");
        let err = load_dir(dir.path()).unwrap_err().to_string();
        assert!(err.contains("features.tsv:2"), "{err}");
    }

    #[test]
    fn loader_errors_name_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        toy(dir.path());
        write(dir.path(), "edges.tsv", "0\t1\n0\t7\n");
        let err = load_dir(dir.path()).unwrap_err().to_string();
        assert!(err.contains("edges.tsv:2") && err.contains("out of range"), "{err}");

        toy(dir.path());
        write(dir.path(), "edges.tsv", "0 1 2\n");
        assert!(load_dir(dir.path()).unwrap_err().to_string().contains("edges.tsv:1"));

        toy(dir.path());
        write(dir.path(), "labels.tsv", "0\t0\n2\t1\n");
        let err = load_dir(dir.path()).unwrap_err().to_string();
        assert!(err.contains("splits.tsv:2") && err.contains("unlabeled"), "{err}");

        toy(dir.path());
        let paths = DatasetPaths::in_dir(dir.path());
        assert!(load_dataset(&paths, Some(1)).is_err());
    }

    #[test]
    fn feature_formats_agree() {
        let dir = tempfile::tempdir().unwrap();
        let x = DenseMatrix::from_rows(&[[1.5, 0.0, -2.0], [0.0, 0.0, 0.25]]).unwrap();
        for f in [FeatureFormat::Bin, FeatureFormat::Tsv, FeatureFormat::Coo] {
            let p = dir.path().join(f.file_name());
            write_features(&p, &x, f).unwrap();
            assert_eq!(read_features(&p).unwrap(), x);
        }
        let bad = write(dir.path(), "bad.bin", "GPCX\0\0\0\0\0\0\0\0");
        assert!(read_features(&bad).is_err());
    }

    #[test]
    fn loading_is_deterministic_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        toy(dir.path());
        let a = load_dir(dir.path()).unwrap();
        let b = load_dir(dir.path()).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.features, b.features);

        let out = tempfile::tempdir().unwrap();
        write_dir(out.path(), &a, FeatureFormat::Bin).unwrap();
        let c = load_dir(out.path()).unwrap();
        assert_eq!(c.graph, a.graph);
        assert_eq!(c.features, a.features);
        assert_eq!(c.labels, a.labels);
        assert_eq!(c.masks, a.masks);
    }

    #[test]
    fn citation_corpus_import() {
        let dir = tempfile::tempdir().unwrap();
        let content = write(
            dir.path(),
            "toy.content",
            "p10 1 0 1 Theory\np20 0 1 0 Neural\np30 1 1 0 Theory\n",
        );
        let cites = write(dir.path(), "toy.cites", "p10 p20\np20 p10\np30 p10\np99 p10\n");
        let c = import_citation_corpus(&content, &cites).unwrap();
        assert_eq!(c.class_names, vec!["Neural", "Theory"]);
        assert_eq!(c.labels, vec![1, 0, 1]);
        assert_eq!(c.graph.num_edges(), 2);
        assert_eq!(c.raw_edge_lines, 4);
        assert_eq!(c.dangling_citations, 1);
        assert_eq!(c.features.row(2), &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn planetoid_split_counts() {
        let labels: Vec<Option<usize>> = (0..100).map(|i| Some(i % 3)).collect();
        let m = planetoid_split(&labels, 3, 5, 20, 30, 7).unwrap();
        let train = Masks::indices(&m.train);
        assert_eq!(train.len(), 15);
        for c in 0..3 {
            assert_eq!(train.iter().filter(|&&i| labels[i] == Some(c)).count(), 5);
        }
        assert_eq!(Masks::indices(&m.val).len(), 20);
        assert_eq!(Masks::indices(&m.test).len(), 30);
        assert!((0..100).all(|i| (m.train[i] as u8 + m.val[i] as u8 + m.test[i] as u8) <= 1));
        assert_eq!(m, planetoid_split(&labels, 3, 5, 20, 30, 7).unwrap());
        assert!(planetoid_split(&labels, 3, 40, 0, 0, 7).is_err());
    }
}
