use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gpca_cli::records::RunRecord;
use gpca_core::dataset::{write_dir, FeatureFormat, GraphDataset, Masks};
use gpca_core::graph::Graph;
use gpca_core::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Two noisy communities of 40 nodes with class-correlated features.
fn write_toy(dir: &Path, with_train: bool) {
    let n = 40;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
    let class = |i: usize| i % 2;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if class(i) == class(j) { 0.25 } else { 0.03 };
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let x = DenseMatrix::from_fn(n, 6, |i, j| {
        let signal = if j % 2 == class(i) { 1.0 } else { 0.0 };
        signal + rng.gen_range(-0.8..0.8)
    });
    let mut masks = Masks::empty(n);
    for i in 0..n {
        match i % 4 {
            0 if with_train => masks.train[i] = true,
            1 => masks.val[i] = true,
            _ => masks.test[i] = true,
        }
    }
    let labels = (0..n).map(|i| Some(class(i))).collect();
    let ds = GraphDataset::new(Graph::from_edges(n, &edges).unwrap(), x, labels, 2, masks).unwrap();
    write_dir(dir, &ds, FeatureFormat::Tsv).unwrap();
}

struct Run {
    out: Output,
    records: Vec<RunRecord>,
}

fn gpca(args: &[&str], metrics: &Path) -> Run {
    let _ = std::fs::remove_file(metrics);
    let out = Command::new(env!("CARGO_BIN_EXE_gpca"))
        .args(args)
        .env("GPCA_METRICS", metrics)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    let records = std::fs::read_to_string(metrics)
        .unwrap_or_default()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    Run { out, records }
}

fn setup(with_train: bool) -> (tempfile::TempDir, PathBuf, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("toy");
    write_toy(&data, with_train);
    let metrics = tmp.path().join("metrics.jsonl");
    (tmp, data, metrics)
}

#[test]
fn single_train_run_emits_one_record() {
    let (tmp, data, metrics) = setup(true);
    let d = data.to_str().unwrap();
    let summary = tmp.path().join("summary.tsv");
    let args = [
        "train", "--dataset-dir", d, "--method", "gpca-mlp", "--alpha", "2", "--hidden", "4",
        "--dropout", "0", "--weight-decay", "0.0005", "--seeds", "0", "--epochs", "50",
        "--out", summary.to_str().unwrap(),
    ];
    let a = gpca(&args, &metrics);
    assert!(a.out.status.success(), "{}", String::from_utf8_lossy(&a.out.stderr));
    assert_eq!(a.records.len(), 1);
    let r = &a.records[0];
    assert!(r.ok && r.test_acc.is_some() && r.val_acc.is_some());
    assert_eq!(r.command, "train");
    assert_eq!(r.config.cell.alpha, 2.0);
    let text = std::fs::read_to_string(&summary).unwrap();
    assert_eq!(text.lines().count(), 2);

    let b = gpca(&args, &metrics);
    let strip = |r: &RunRecord| RunRecord { wall_time_s: 0.0, ..r.clone() };
    assert_eq!(strip(&a.records[0]), strip(&b.records[0]));
}

#[test]
fn train_grid_covers_every_cell_and_seed() {
    let (_tmp, data, metrics) = setup(true);
    let run = gpca(
        &[
            "train", "--dataset-dir", data.to_str().unwrap(), "--method", "gcn", "--layers", "2",
            "--hidden", "4", "--dropout", "0,0.5", "--weight-decay", "0.0005", "--seeds", "0..3",
            "--epochs", "20", "--decay", "l2",
        ],
        &metrics,
    );
    assert!(run.out.status.success());
    assert_eq!(run.records.len(), 6);
    let mut ids: Vec<&str> = run.records.iter().map(|r| r.run_id.as_str()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 6);
    assert!(ids.iter().all(|id| id.contains("l2")));
}

#[test]
fn sweep_sub_grid_fills_every_cell() {
    let (tmp, data, metrics) = setup(true);
    let out = tmp.path().join("fig2.tsv");
    let run = gpca(
        &[
            "sweep-fig2", "--dataset-dir", data.to_str().unwrap(), "--layers", "2,3", "--alpha",
            "1,5", "--hidden", "4", "--dropout", "0", "--weight-decay", "0.0005", "--seeds", "0",
            "--epochs", "20", "--out", out.to_str().unwrap(),
        ],
        &metrics,
    );
    assert!(run.out.status.success(), "{}", String::from_utf8_lossy(&run.out.stderr));
    assert_eq!(run.records.len(), 4);
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| !r.contains("nan")));
}

#[test]
fn init_compare_pairs_both_initializations() {
    let (tmp, data, metrics) = setup(true);
    let out = tmp.path().join("compare.tsv");
    let run = gpca(
        &[
            "init-compare", "--dataset-dir", data.to_str().unwrap(), "--layers", "3", "--hidden",
            "4", "--dropout", "0.5", "--weight-decay", "0.0005", "--repeats", "3", "--epochs", "20",
            "--out", out.to_str().unwrap(),
        ],
        &metrics,
    );
    assert!(run.out.status.success(), "{}", String::from_utf8_lossy(&run.out.stderr));
    assert_eq!(run.records.len(), 6);
    let methods: Vec<String> = run.records.iter().map(|r| r.config.method.to_string()).collect();
    assert_eq!(methods.iter().filter(|m| *m == "gcn").count(), 3);
    assert_eq!(methods.iter().filter(|m| *m == "gcn-gpcainit").count(), 3);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 2);

    let bad = gpca(
        &["init-compare", "--dataset-dir", data.to_str().unwrap(), "--layers", "3", "--dropout", "0,0.5"],
        &metrics,
    );
    assert!(!bad.out.status.success());
}

#[test]
fn supervised_embedding_needs_train_labels() {
    let (_tmp, data, metrics) = setup(false);
    let d = data.to_str().unwrap();
    let run = gpca(&["embed", "--dataset-dir", d, "--beta", "0.2", "--k", "2"], &metrics);
    assert!(!run.out.status.success());
    let ok = gpca(&["embed", "--dataset-dir", d, "--beta", "0", "--k", "2"], &metrics);
    assert!(ok.out.status.success());
}

#[test]
fn zero_alpha_embedding_spans_the_principal_subspace() {
    let (tmp, data, metrics) = setup(true);
    let emb = tmp.path().join("z.tsv");
    let w = tmp.path().join("w.gpcw");
    let run = gpca(
        &[
            "embed", "--dataset-dir", data.to_str().unwrap(), "--alpha", "0", "--k", "3",
            "--embedding", emb.to_str().unwrap(), "--out", w.to_str().unwrap(),
        ],
        &metrics,
    );
    assert!(run.out.status.success(), "{}", String::from_utf8_lossy(&run.out.stderr));
    assert!(w.exists());
    let z = gpca_core::dataset::read_features(&emb).unwrap();
    let ds = gpca_core::dataset::load_dir(&data).unwrap();
    let xc = gpca_core::linalg::center_columns(&ds.features);
    let x = nalgebra::DMatrix::from_row_slice(xc.rows(), xc.cols(), xc.as_slice());
    let svd = x.clone().svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let v_t = svd.v_t.unwrap();
    let v = nalgebra::DMatrix::from_fn(xc.cols(), 3, |i, j| v_t[(order[j], i)]);
    let want = &x * &v * v.transpose() * x.transpose();
    let zm = nalgebra::DMatrix::from_row_slice(z.rows(), z.cols(), z.as_slice());
    let got = &zm * zm.transpose();
    assert!((got - &want).norm() / want.norm() < 1e-8);
}

#[test]
fn config_file_with_flag_override() {
    let (tmp, data, metrics) = setup(true);
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "# toy run\ndataset_dir = {}\nmethod = gpca-mlp\nalpha = 1\nhidden = 4\ndropout = 0\nweight_decay = 0.0005\nseeds = 0\nepochs = 10\n",
            data.display()
        ),
    )
    .unwrap();
    let run = gpca(&["train", "--config", cfg.to_str().unwrap(), "--alpha", "3"], &metrics);
    assert!(run.out.status.success(), "{}", String::from_utf8_lossy(&run.out.stderr));
    assert_eq!(run.records.len(), 1);
    assert_eq!(run.records[0].config.cell.alpha, 3.0);
    assert_eq!(run.records[0].config.epochs, 10);

    std::fs::write(&cfg, "alpah = 1\n").unwrap();
    let bad = gpca(&["train", "--config", cfg.to_str().unwrap()], &metrics);
    assert!(!bad.out.status.success());
    assert!(String::from_utf8_lossy(&bad.out.stderr).contains("alpah"));
}

#[test]
fn init_export_writes_loadable_weights() {
    let (tmp, data, metrics) = setup(true);
    let out = tmp.path().join("init.gpci");
    let run = gpca(
        &["init-export", "--dataset-dir", data.to_str().unwrap(), "--layers", "3", "--hidden", "4", "--out", out.to_str().unwrap()],
        &metrics,
    );
    assert!(run.out.status.success());
    let wf = gpca_core::gpcanet::WeightFile::load(&out).unwrap();
    let shapes: Vec<(usize, usize)> = wf.layers.iter().map(|s| (s.in_dim, s.out_dim)).collect();
    assert_eq!(shapes, [(6, 4), (4, 4), (4, 2)]);
}

#[test]
fn prepare_data_imports_a_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let content = tmp.path().join("toy.content");
    let cites = tmp.path().join("toy.cites");
    let mut body = String::new();
    for i in 0..12 {
        body.push_str(&format!("p{i} {} {} {}\n", i % 2, (i + 1) % 2, if i % 3 == 0 { "A" } else { "B" }));
    }
    std::fs::write(&content, body).unwrap();
    std::fs::write(&cites, "p0 p1\np1 p0\np2 p3\np4 ghost\n").unwrap();
    let out = tmp.path().join("ds");
    let o = Command::new(env!("CARGO_BIN_EXE_gpca"))
        .args(["prepare-data", "--content", content.to_str().unwrap(), "--cites", cites.to_str().unwrap()])
        .args(["--out", out.to_str().unwrap(), "--per-class", "2", "--val", "3", "--test", "4"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ds = gpca_core::dataset::load_dir(&out).unwrap();
    assert_eq!((ds.num_nodes(), ds.num_features(), ds.num_classes), (12, 2, 2));
    assert_eq!(ds.graph.num_edges(), 2);
    assert_eq!(ds.masks.train.iter().filter(|&&b| b).count(), 4);
}
