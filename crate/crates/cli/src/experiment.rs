//! Runs single (config, seed) pairs and whole grids, and selects the best
//! configuration by mean validation accuracy.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use anyhow::{bail, Context, Result};

use gpca_core::dataset::{load_dir, GraphDataset};
use gpca_core::gpca::{operator_for, GpcaDecomposition, GpcaSolution};
use gpca_core::gpcanet::{export_gcn_init, layer_specs, pretrain, GpcaNetConfig, WeightFile};
use gpca_core::graph::{normalize, NormalizedAdjacency};
use gpca_core::linalg::{DenseMatrix, EigenMethod};
use gpca_core::nn::{self, build_network, Init, Input, Metrics, Mixing, ModelKind, TrainConfig};
use gpca_core::par;
use gpca_core::smoother::{Propagation, SmootherConfig};

use crate::config::{Cell, ExperimentConfig, Method};
use crate::records::{run_id, InitKind, RunConfig, RunRecord, Sink, SCHEMA_VERSION};

type Key = (u64, u64, usize, usize, usize);

fn key(alpha: f64, beta: f64, a: usize, b: usize, c: usize) -> Key {
    (alpha.to_bits(), beta.to_bits(), a, b, c)
}

/// A loaded dataset plus everything that can be shared between runs.
pub struct Experiment {
    pub name: String,
    pub ds: GraphDataset,
    input: Input,
    adjacency: NormalizedAdjacency,
    embeddings: Mutex<HashMap<Key, Arc<GpcaSolution>>>,
    pretrained: Mutex<HashMap<Key, Arc<WeightFile>>>,
}

impl Experiment {
    pub fn load(dir: &Path, row_normalize: bool) -> Result<Experiment> {
        let ds = load_dir(dir).with_context(|| format!("loading dataset {}", dir.display()))?;
        let name = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        Ok(Experiment::new(name, ds, row_normalize))
    }

    pub fn new(name: impl Into<String>, ds: GraphDataset, row_normalize: bool) -> Experiment {
        let ds = if row_normalize {
            ds.with_row_normalized_features()
        } else {
            ds
        };
        Experiment {
            name: name.into(),
            input: Input::auto(&ds.features),
            adjacency: normalize(&ds.graph),
            ds,
            embeddings: Mutex::new(HashMap::new()),
            pretrained: Mutex::new(HashMap::new()),
        }
    }

    /// GPCA embedding of width `k`, computed once per `(α, β, T)` at width
    /// `k_max` and sliced.
    pub fn embedding(&self, alpha: f64, beta: f64, t: usize, k: usize, k_max: usize) -> Result<DenseMatrix> {
        let d = self.ds.num_features();
        let k_max = k_max.max(k).min(d);
        if k > d {
            bail!("embedding width {k} exceeds feature dimension {d}");
        }
        let sol = {
            let mut cache = self.embeddings.lock().unwrap();
            let key = key(alpha, beta, t, 0, 0);
            match cache.get(&key) {
                Some(s) if s.k() >= k => s.clone(),
                _ => {
                    let op = operator_for(&self.ds, alpha, beta)?;
                    let dec = GpcaDecomposition::compute(
                        &self.ds.features,
                        &op,
                        &SmootherConfig::with_iterations(t),
                        true,
                        EigenMethod::Auto,
                    )?;
                    let s = Arc::new(dec.solution(k_max)?);
                    cache.insert(key, s.clone());
                    s
                }
            }
        };
        let z = sol.embedding()?;
        let idx: Vec<usize> = (0..k).collect();
        Ok(z.select_columns(&idx))
    }

    fn gcn_init(&self, layers: usize, hidden: usize, seed: u64) -> Result<Arc<WeightFile>> {
        let mut cache = self.pretrained.lock().unwrap();
        let key = key(f64::NAN, 0.0, layers, hidden, seed as usize);
        if let Some(w) = cache.get(&key) {
            return Ok(w.clone());
        }
        let specs = layer_specs(self.ds.num_features(), hidden, self.ds.num_classes, layers);
        let w = Arc::new(export_gcn_init(&self.ds, &specs, seed)?);
        cache.insert(key, w.clone());
        Ok(w)
    }

    fn gpcanet_init(&self, cell: &Cell, t: usize, seed: u64) -> Result<Arc<WeightFile>> {
        let mut cache = self.pretrained.lock().unwrap();
        let key = key(cell.alpha, cell.beta, cell.layers, cell.hidden, (seed as usize) ^ (t << 32));
        if let Some(w) = cache.get(&key) {
            return Ok(w.clone());
        }
        let specs = layer_specs(self.ds.num_features(), cell.hidden, self.ds.num_classes, cell.layers);
        let cfg = GpcaNetConfig {
            beta: cell.beta,
            propagation: Propagation::Smooth(SmootherConfig::with_iterations(t)),
            seed,
            ..GpcaNetConfig::new(cell.alpha)
        };
        let w = Arc::new(pretrain(&self.ds, &specs, &cfg)?.weight_file());
        cache.insert(key, w.clone());
        Ok(w)
    }

    fn hidden_dims(&self, layers: usize, hidden: usize) -> Vec<usize> {
        let mut dims = vec![self.ds.num_features()];
        dims.extend(std::iter::repeat_n(hidden, layers - 1));
        dims.push(self.ds.num_classes);
        dims
    }

    /// Trains one configuration with one seed.
    pub fn run(&self, cfg: &RunConfig, seed: u64, k_max: usize, mlp_layers: usize, init_seed: u64) -> Result<Metrics> {
        let c = &cfg.cell;
        let mut tc = TrainConfig::new(cfg.lr, c.weight_decay, c.dropout, seed);
        tc.epochs = cfg.epochs;
        tc.patience = cfg.patience;
        tc.decay_mode = cfg.decay.into();
        let labels = &self.ds.labels;
        let masks = &self.ds.masks;
        match cfg.method {
            Method::GpcaMlp => {
                let z = self.embedding(c.alpha, c.beta, cfg.t, c.hidden, k_max)?;
                let mut dims = vec![c.hidden];
                if mlp_layers == 2 {
                    dims.push(c.hidden);
                }
                dims.push(self.ds.num_classes);
                let mut net = build_network(ModelKind::Mlp, Mixing::None, &dims, &Init::Xavier, seed)?;
                Ok(nn::train(&mut net, &Input::Dense(z), labels, masks, &tc)?)
            }
            Method::Gcn | Method::GcnGpcainit => {
                let init = if cfg.method == Method::Gcn {
                    Init::Xavier
                } else {
                    Init::Imported((*self.gcn_init(c.layers, c.hidden, init_seed)?).clone())
                };
                let dims = self.hidden_dims(c.layers, c.hidden);
                let mixing = Mixing::Adjacency(self.adjacency.clone());
                let mut net = build_network(ModelKind::Gcn, mixing, &dims, &init, seed)?;
                Ok(nn::train(&mut net, &self.input, labels, masks, &tc)?)
            }
            Method::Gpcanet => {
                let wf = self.gpcanet_init(c, cfg.t, init_seed)?;
                let op = operator_for(&self.ds, c.alpha, c.beta)?;
                let mixing = Mixing::Gpca {
                    op,
                    propagation: Propagation::Smooth(SmootherConfig::with_iterations(cfg.t)),
                };
                let init = Init::Imported((*wf).clone());
                let dims = self.hidden_dims(c.layers, c.hidden);
                let mut net = build_network(ModelKind::GpcaNet, mixing, &dims, &init, seed)?;
                Ok(nn::train(&mut net, &self.input, labels, masks, &tc)?)
            }
        }
    }
}

/// Turns a run outcome into a record.
pub fn record(command: &str, dataset: &str, cfg: &RunConfig, seed: u64, outcome: &Result<Metrics>, wall: f64) -> RunRecord {
    let (ok, error, m) = match outcome {
        Ok(m) => (true, None, Some(m)),
        Err(e) => (false, Some(format!("{e:#}")), None),
    };
    RunRecord {
        schema: SCHEMA_VERSION,
        run_id: run_id(cfg, seed),
        command: command.to_string(),
        dataset: dataset.to_string(),
        config: cfg.clone(),
        seed,
        ok,
        error,
        val_acc: m.map(|m| m.best_val_acc),
        test_acc: m.map(|m| m.test_acc),
        train_acc: m.map(|m| m.train_acc),
        best_epoch: m.map(|m| m.best_epoch),
        epochs_run: m.map(|m| m.val_acc.len()),
        wall_time_s: wall,
    }
}

pub fn run_config(exp: &ExperimentConfig, cell: Cell, init: InitKind) -> RunConfig {
    let layers = match exp.method {
        Method::GpcaMlp => exp.mlp_layers,
        _ => cell.layers,
    };
    RunConfig {
        method: exp.method,
        cell: Cell { layers, ..cell },
        lr: exp.lr,
        t: exp.t,
        epochs: exp.epochs,
        patience: exp.patience,
        row_normalize: exp.row_normalize,
        init,
        decay: exp.decay,
    }
}

pub fn default_init(method: Method) -> InitKind {
    match method {
        Method::Gcn | Method::GpcaMlp => InitKind::Xavier,
        Method::Gpcanet | Method::GcnGpcainit => InitKind::Gpcanet,
    }
}

/// Runs every `(config, seed)` pair, writing each record as it finishes.
pub fn run_all(
    exp: &Experiment,
    command: &str,
    runs: &[(RunConfig, u64)],
    k_max: usize,
    mlp_layers: usize,
    init_seed: u64,
    sink: &Sink,
) -> Vec<RunRecord> {
    par::map_collect(runs, |(cfg, seed)| {
        let start = Instant::now();
        let outcome = exp.run(cfg, *seed, k_max, mlp_layers, init_seed);
        let rec = record(command, &exp.name, cfg, *seed, &outcome, start.elapsed().as_secs_f64());
        match &outcome {
            Ok(_) => log::info!(
                "{}: val {:.4} test {:.4} ({:.1}s)",
                rec.run_id,
                rec.val_acc.unwrap(),
                rec.test_acc.unwrap(),
                rec.wall_time_s
            ),
            Err(e) => log::error!("{}: {e:#}", rec.run_id),
        }
        if let Err(e) = sink.write(&rec) {
            log::error!("writing record {}: {e:#}", rec.run_id);
        }
        rec
    })
}

/// Expands an experiment config into its run list.
pub fn plan(exp: &ExperimentConfig) -> Vec<(RunConfig, u64)> {
    let init = default_init(exp.method);
    exp.cells()
        .into_iter()
        .flat_map(|cell| {
            let rc = run_config(exp, cell, init);
            exp.seeds.iter().map(move |&s| (rc.clone(), s))
        })
        .collect()
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub config: RunConfig,
    pub runs: usize,
    pub failures: usize,
    pub val_mean: f64,
    pub val_std: f64,
    pub test_mean: f64,
    pub test_std: f64,
}

/// Groups records by configuration, in first-seen order.
pub fn summarize(records: &[RunRecord]) -> Vec<CellSummary> {
    let mut groups: Vec<(RunConfig, Vec<&RunRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(c, _)| *c == r.config) {
            Some((_, v)) => v.push(r),
            None => groups.push((r.config.clone(), vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(config, rs)| {
            let ok: Vec<&&RunRecord> = rs.iter().filter(|r| r.ok).collect();
            let val: Vec<f64> = ok.iter().filter_map(|r| r.val_acc).collect();
            let test: Vec<f64> = ok.iter().filter_map(|r| r.test_acc).collect();
            let (val_mean, val_std) = mean_std(&val);
            let (test_mean, test_std) = mean_std(&test);
            CellSummary {
                config,
                runs: ok.len(),
                failures: rs.len() - ok.len(),
                val_mean,
                val_std,
                test_mean,
                test_std,
            }
        })
        .collect()
}

/// Highest mean validation accuracy; ties go to fewer layers, then smaller
/// hidden size, then lower `α`, then grid order. Cells without a successful
/// run are skipped.
pub fn select(summaries: &[CellSummary]) -> Option<&CellSummary> {
    let mut best: Option<&CellSummary> = None;
    for s in summaries.iter().filter(|s| s.runs > 0) {
        let better = match best {
            None => true,
            Some(b) => {
                let (x, y) = (&s.config.cell, &b.config.cell);
                s.val_mean > b.val_mean
                    || (s.val_mean == b.val_mean
                        && (x.layers, x.hidden).cmp(&(y.layers, y.hidden)).then(
                            x.alpha.partial_cmp(&y.alpha).unwrap_or(std::cmp::Ordering::Equal),
                        ) == std::cmp::Ordering::Less)
            }
        };
        if better {
            best = Some(s);
        }
    }
    best
}
