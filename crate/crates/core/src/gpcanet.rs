//! Stacked GPCA layers: closed-form pretraining, replay and GCN weight export.
//!
//! Layer `l` centers its input `H`, propagates it to `F`, takes the top
//! eigenvectors of `sym(Hᵀ F)` as `W` and emits `σ(F W)`. ReLU layers use
//! `⌈d/2⌉` eigenvectors followed by the negatives of the first `⌊d/2⌋`, so
//! the activation keeps both signs of every projection. When a layer asks
//! for more columns than there are eigenvectors, the rest are filled with
//! seeded random unit-norm combinations of the eigenvectors.

use std::path::Path;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::binio::{Reader, Writer};
use crate::dataset::GraphDataset;
use crate::error::{Error, Result};
use crate::gpca::operator_for;
use crate::linalg::{center_columns, sym_eig_with, symmetrize, DenseMatrix, EigenMethod, EigenPairs};
use crate::smoother::{Propagation, SmoothingOperator};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"GPCI";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Identity,
    Relu,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Activation> {
        match code {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            _ => None,
        }
    }

    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Identity => v,
            Activation::Relu => v.max(0.0),
        }
    }

    pub fn apply_in_place(self, m: &mut DenseMatrix) {
        if self == Activation::Relu {
            m.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

/// `layers` layers mapping `d` to `classes`: ReLU hidden layers of width
/// `hidden`, then an identity output layer.
pub fn layer_specs(d: usize, hidden: usize, classes: usize, layers: usize) -> Vec<LayerSpec> {
    (0..layers)
        .map(|l| {
            let last = l + 1 == layers;
            LayerSpec {
                in_dim: if l == 0 { d } else { hidden },
                out_dim: if last { classes } else { hidden },
                activation: if last { Activation::Identity } else { Activation::Relu },
            }
        })
        .collect()
}

fn check_specs(specs: &[LayerSpec], d: usize) -> Result<()> {
    let first = specs
        .first()
        .ok_or_else(|| Error::InvalidConfig("at least one layer is required".into()))?;
    if first.in_dim != d {
        return Err(Error::shape("first layer in_dim", d, first.in_dim));
    }
    for (l, pair) in specs.windows(2).enumerate() {
        if pair[0].out_dim != pair[1].in_dim {
            return Err(Error::InvalidConfig(format!(
                "layer {} out_dim {} does not match layer {} in_dim {}",
                l,
                pair[0].out_dim,
                l + 1,
                pair[1].in_dim
            )));
        }
    }
    if let Some(l) = specs.iter().position(|s| s.out_dim == 0) {
        return Err(Error::InvalidConfig(format!("layer {l} has out_dim 0")));
    }
    Ok(())
}

/// What pretraining did at one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerReport {
    /// Full spectrum of `sym(Hᵀ F)`, descending.
    pub spectrum: Vec<f64>,
    /// Distinct eigenvectors placed in `W`.
    pub eigenvectors_used: usize,
    /// Negated duplicate columns from the ReLU rule.
    pub negated: usize,
    /// Random-combination columns.
    pub padded: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PretrainReport {
    pub layers: Vec<LayerReport>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpcaNetConfig {
    pub alpha: f64,
    pub beta: f64,
    pub propagation: Propagation,
    /// Seed of the padding generator.
    pub seed: u64,
    pub eigen: EigenMethod,
    /// Center each layer input before propagating.
    pub center: bool,
}

impl GpcaNetConfig {
    pub fn new(alpha: f64) -> Self {
        GpcaNetConfig {
            alpha,
            beta: 0.0,
            propagation: Propagation::default(),
            seed: 0,
            eigen: EigenMethod::Auto,
            center: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GpcaNetModel {
    pub layers: Vec<LayerSpec>,
    pub weights: Vec<DenseMatrix>,
    pub config: GpcaNetConfig,
    pub report: PretrainReport,
}

/// Chooses `out` weight columns from a full eigendecomposition.
fn select_columns(
    eig: &EigenPairs,
    out: usize,
    activation: Activation,
    rng: &mut Xoshiro256PlusPlus,
) -> (DenseMatrix, LayerReport) {
    let r = eig.len();
    let d = eig.vectors.rows();
    let distinct = match activation {
        Activation::Identity => out,
        Activation::Relu => out.div_ceil(2),
    };
    let used = distinct.min(r);
    let padded = distinct - used;

    let mut w = DenseMatrix::zeros(d, out);
    for j in 0..used {
        w.set_column(j, &eig.vectors.column(j));
    }
    for j in used..distinct {
        let g: Vec<f64> = (0..r).map(|_| StandardNormal.sample(rng)).collect();
        let mut v = eig.vectors.matmul(&DenseMatrix::column_vector(&g)).unwrap().into_vec();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        w.set_column(j, &v);
    }
    let negated = out - distinct;
    for j in 0..negated {
        let v: Vec<f64> = w.column(j).iter().map(|x| -x).collect();
        w.set_column(distinct + j, &v);
    }
    let report = LayerReport {
        spectrum: eig.values.clone(),
        eigenvectors_used: used,
        negated,
        padded,
    };
    (w, report)
}

/// One layer of the closed-form sweep. Returns `(W, report, H_next)`.
fn pretrain_layer(
    h: &DenseMatrix,
    spec: &LayerSpec,
    op: &SmoothingOperator,
    cfg: &GpcaNetConfig,
    rng: &mut Xoshiro256PlusPlus,
) -> Result<(DenseMatrix, LayerReport, DenseMatrix)> {
    let hc = if cfg.center { center_columns(h) } else { h.clone() };
    let f = op.propagate(&cfg.propagation, &hc)?;
    let c = symmetrize(&hc.t_matmul(&f)?)?;
    let eig = sym_eig_with(&c, cfg.eigen)?;
    let (w, report) = select_columns(&eig, spec.out_dim, spec.activation, rng);
    let mut next = f.matmul(&w)?;
    spec.activation.apply_in_place(&mut next);
    Ok((w, report, next))
}

fn sweep(
    x: &DenseMatrix,
    specs: &[LayerSpec],
    op: &SmoothingOperator,
    cfg: &GpcaNetConfig,
) -> Result<(Vec<DenseMatrix>, PretrainReport, DenseMatrix)> {
    check_specs(specs, x.cols())?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);
    let mut h = x.clone();
    let mut weights = Vec::with_capacity(specs.len());
    let mut report = PretrainReport::default();
    for spec in specs {
        let (w, r, next) = pretrain_layer(&h, spec, op, cfg, &mut rng)?;
        log::debug!(
            "pretrained layer {}x{}: {} eigenvectors, {} padded",
            spec.in_dim,
            spec.out_dim,
            r.eigenvectors_used,
            r.padded
        );
        weights.push(w);
        report.layers.push(r);
        h = next;
    }
    Ok((weights, report, h))
}

/// Closed-form pretraining; also returns the final representation.
pub fn pretrain_with_output(
    ds: &GraphDataset,
    specs: &[LayerSpec],
    cfg: &GpcaNetConfig,
) -> Result<(GpcaNetModel, DenseMatrix)> {
    let op = operator_for(ds, cfg.alpha, cfg.beta)?;
    pretrain_on(&ds.features, &op, specs, cfg)
}

/// [`pretrain_with_output`] with a prebuilt operator. `cfg.alpha` and
/// `cfg.beta` are taken from `op`.
pub fn pretrain_on(
    x: &DenseMatrix,
    op: &SmoothingOperator,
    specs: &[LayerSpec],
    cfg: &GpcaNetConfig,
) -> Result<(GpcaNetModel, DenseMatrix)> {
    let cfg = GpcaNetConfig {
        alpha: op.alpha(),
        beta: op.beta(),
        ..*cfg
    };
    let (weights, report, h) = sweep(x, specs, op, &cfg)?;
    let model = GpcaNetModel {
        layers: specs.to_vec(),
        weights,
        config: cfg,
        report,
    };
    Ok((model, h))
}

pub fn pretrain(ds: &GraphDataset, specs: &[LayerSpec], cfg: &GpcaNetConfig) -> Result<GpcaNetModel> {
    Ok(pretrain_with_output(ds, specs, cfg)?.0)
}

impl GpcaNetModel {
    /// Replays the layers with the stored weights.
    pub fn forward(&self, ds: &GraphDataset) -> Result<DenseMatrix> {
        let op = operator_for(ds, self.config.alpha, self.config.beta)?;
        self.forward_on(&ds.features, &op)
    }

    pub fn forward_on(&self, x: &DenseMatrix, op: &SmoothingOperator) -> Result<DenseMatrix> {
        check_specs(&self.layers, x.cols())?;
        let mut h = x.clone();
        for (spec, w) in self.layers.iter().zip(&self.weights) {
            let hc = if self.config.center { center_columns(&h) } else { h };
            let f = op.propagate(&self.config.propagation, &hc)?;
            h = f.matmul(w)?;
            spec.activation.apply_in_place(&mut h);
        }
        Ok(h)
    }

    pub fn weight_file(&self) -> WeightFile {
        WeightFile {
            layers: self.layers.clone(),
            weights: self.weights.clone(),
        }
    }
}

/// Weights for a GCN of shape `specs`, from the sweep with a single
/// `Ã_sym` propagation per layer.
pub fn export_gcn_init(ds: &GraphDataset, specs: &[LayerSpec], seed: u64) -> Result<WeightFile> {
    let op = operator_for(ds, 1.0, 0.0)?;
    export_gcn_init_on(&ds.features, &op, specs, seed, true)
}

/// [`export_gcn_init`] on raw features; `center = false` skips the per-layer
/// centering.
pub fn export_gcn_init_on(
    x: &DenseMatrix,
    op: &SmoothingOperator,
    specs: &[LayerSpec],
    seed: u64,
    center: bool,
) -> Result<WeightFile> {
    let cfg = GpcaNetConfig {
        propagation: Propagation::Adjacency,
        seed,
        center,
        ..GpcaNetConfig::new(op.alpha())
    };
    let (weights, _, _) = sweep(x, specs, op, &cfg)?;
    Ok(WeightFile {
        layers: specs.to_vec(),
        weights,
    })
}

/// A plain list of layer shapes, activations and weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFile {
    pub layers: Vec<LayerSpec>,
    pub weights: Vec<DenseMatrix>,
}

impl WeightFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = Writer::create(path)?;
        w.bytes(WEIGHTS_MAGIC)?;
        w.u32(self.layers.len())?;
        for (spec, m) in self.layers.iter().zip(&self.weights) {
            w.u32(spec.in_dim)?;
            w.u32(spec.out_dim)?;
            w.bytes(&[spec.activation.code()])?;
            w.f64s(m.as_slice())?;
        }
        w.finish()
    }

    pub fn load(path: &Path) -> Result<WeightFile> {
        let mut r = Reader::open(path)?;
        r.magic(WEIGHTS_MAGIC)?;
        let n = r.u32()?;
        let mut layers = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for l in 0..n {
            let in_dim = r.u32()?;
            let out_dim = r.u32()?;
            let code = r.u8()?;
            let activation = Activation::from_code(code)
                .ok_or_else(|| r.error(format!("layer {l}: unknown activation code {code}")))?;
            weights.push(r.matrix(in_dim, out_dim)?);
            layers.push(LayerSpec {
                in_dim,
                out_dim,
                activation,
            });
        }
        r.finish()?;
        if n > 0 {
            check_specs(&layers, layers[0].in_dim)?;
        }
        Ok(WeightFile { layers, weights })
    }
}
