//! Graph smoothing `F ≈ (I + αL̃)⁻¹X` by fixed-point iteration.
//!
//! The propagation matrix is
//! `P = (1−β)·Ã_sym + β·D^{-1/2} Y Yᵀ D^{-1/2}` where `Y` is the one-hot
//! matrix of training labels. Neither `YYᵀ` nor any `n × n` inverse is
//! formed: the label term is applied as a per-class projection followed by
//! an expansion back to nodes.

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::linalg::DenseMatrix;
use crate::par::Execution;

/// Starting point of the iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SmootherInit {
    #[default]
    Input,
    Zeros,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmootherConfig {
    pub iterations: usize,
    pub init: SmootherInit,
}

pub const DEFAULT_ITERATIONS: usize = 5;

impl Default for SmootherConfig {
    fn default() -> Self {
        SmootherConfig {
            iterations: DEFAULT_ITERATIONS,
            init: SmootherInit::Input,
        }
    }
}

impl SmootherConfig {
    pub fn with_iterations(iterations: usize) -> Self {
        SmootherConfig {
            iterations,
            ..Default::default()
        }
    }
}

/// `P` together with the regularization strength `α`.
#[derive(Clone, Debug)]
pub struct SmoothingOperator {
    adjacency: NormalizedAdjacency,
    alpha: f64,
    beta: f64,
    /// Class of every training node, `None` elsewhere.
    classes: Vec<Option<usize>>,
    num_classes: usize,
    ghost_scale: Vec<f64>,
    exec: Execution,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidConfig(format!("alpha = {alpha} must be finite and >= 0")));
    }
    if alpha > 50.0 {
        log::warn!("alpha = {alpha} is above the usual range (<= 50)");
    }
    Ok(())
}

impl SmoothingOperator {
    /// Label-free operator, `P = Ã_sym`.
    pub fn unsupervised(adjacency: NormalizedAdjacency, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let n = adjacency.num_nodes();
        Ok(SmoothingOperator {
            adjacency,
            alpha,
            beta: 0.0,
            classes: vec![None; n],
            num_classes: 0,
            ghost_scale: vec![0.0; n],
            exec: Execution::default(),
        })
    }

    /// Operator with ghost edges between training nodes of equal label.
    ///
    /// `train_labels` must hold training labels only. With `beta = 0` the
    /// labels are ignored and the result equals [`unsupervised`](Self::unsupervised).
    pub fn supervised(
        adjacency: NormalizedAdjacency,
        alpha: f64,
        beta: f64,
        train_labels: &[Option<usize>],
        num_classes: usize,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidConfig(format!("beta = {beta} must lie in [0, 1]")));
        }
        let n = adjacency.num_nodes();
        if train_labels.len() != n {
            return Err(Error::shape("SmoothingOperator labels", n, train_labels.len()));
        }
        if beta == 0.0 {
            return Self::unsupervised(adjacency, alpha);
        }
        check_alpha(alpha)?;
        let mut counts = vec![0usize; num_classes];
        for &l in train_labels.iter().flatten() {
            if l >= num_classes {
                return Err(Error::InvalidConfig(format!(
                    "label {l} >= num_classes {num_classes}"
                )));
            }
            counts[l] += 1;
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::NoTrainLabels);
        }
        let ghost_scale = train_labels
            .iter()
            .map(|l| l.map_or(0.0, |l| 1.0 / (counts[l] as f64).sqrt()))
            .collect();
        Ok(SmoothingOperator {
            adjacency,
            alpha,
            beta,
            classes: train_labels.to_vec(),
            num_classes,
            ghost_scale,
            exec: Execution::default(),
        })
    }

    /// Same operator scheduled with `exec`.
    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// Same operator with a different `α` (labels and `β` kept).
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(SmoothingOperator {
            alpha,
            ..self.clone()
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.num_nodes()
    }

    pub fn adjacency(&self) -> &NormalizedAdjacency {
        &self.adjacency
    }

    pub fn ghost_scale(&self) -> &[f64] {
        &self.ghost_scale
    }

    fn check_rows(&self, op: &'static str, f: &DenseMatrix) -> Result<()> {
        if f.rows() != self.num_nodes() {
            return Err(Error::shape(op, format!("{} rows", self.num_nodes()), f.rows()));
        }
        Ok(())
    }

    /// `P · f`.
    pub fn apply_p(&self, f: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows("apply_p", f)?;
        let mut out = self.adjacency.spmm_with(self.exec, f)?;
        if self.beta == 0.0 {
            return Ok(out);
        }
        out.scale(1.0 - self.beta);

        let d = f.cols();
        let mut proj = vec![0.0; self.num_classes * d];
        for (i, c) in self.classes.iter().enumerate() {
            if let Some(c) = *c {
                let g = self.ghost_scale[i];
                for (p, v) in proj[c * d..(c + 1) * d].iter_mut().zip(f.row(i)) {
                    *p += g * v;
                }
            }
        }
        for (i, c) in self.classes.iter().enumerate() {
            if let Some(c) = *c {
                let g = self.beta * self.ghost_scale[i];
                for (o, p) in out.row_mut(i).iter_mut().zip(&proj[c * d..(c + 1) * d]) {
                    *o += g * p;
                }
            }
        }
        Ok(out)
    }

    /// `L̃ z = z − P z`.
    pub fn apply_laplacian(&self, z: &DenseMatrix) -> Result<DenseMatrix> {
        z.sub(&self.apply_p(z)?)
    }

    /// `T` steps of `F ← α/(1+α)·P F + 1/(1+α)·X`.
    pub fn smooth(&self, x: &DenseMatrix, cfg: &SmootherConfig) -> Result<DenseMatrix> {
        self.check_rows("smooth", x)?;
        x.check_finite("smoother input")?;
        let a = self.alpha / (1.0 + self.alpha);
        let b = 1.0 / (1.0 + self.alpha);
        let mut f = match cfg.init {
            SmootherInit::Input => x.clone(),
            SmootherInit::Zeros => DenseMatrix::zeros(x.rows(), x.cols()),
        };
        if self.alpha == 0.0 {
            return Ok(if cfg.iterations == 0 { f } else { x.clone() });
        }
        for _ in 0..cfg.iterations {
            let mut next = self.apply_p(&f)?;
            for (o, xv) in next.as_mut_slice().iter_mut().zip(x.as_slice()) {
                *o = a * *o + b * xv;
            }
            f = next;
        }
        Ok(f)
    }

    /// First-order truncation `((1−α)I + α·P) x`.
    pub fn first_order_smooth(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if self.alpha > 1.0 {
            log::warn!(
                "first-order smoothing with alpha = {} > 1; the truncation is not meaningful",
                self.alpha
            );
        }
        let mut out = self.apply_p(x)?;
        let (s, t) = (1.0 - self.alpha, self.alpha);
        for (o, xv) in out.as_mut_slice().iter_mut().zip(x.as_slice()) {
            *o = s * xv + t * *o;
        }
        Ok(out)
    }

    /// Applies the operator selected by `mode`.
    pub fn propagate(&self, mode: &Propagation, x: &DenseMatrix) -> Result<DenseMatrix> {
        match mode {
            Propagation::Smooth(cfg) => self.smooth(x, cfg),
            Propagation::FirstOrder => self.first_order_smooth(x),
            Propagation::Adjacency => self.adjacency.spmm_with(self.exec, x),
        }
    }
}

/// How a layer turns its (centered) input into the smoothed signal `F`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Propagation {
    /// Power iteration towards `(I + αL̃_spr)⁻¹ x`.
    Smooth(SmootherConfig),
    /// `((1−α)I + α·Ã_spr) x`.
    FirstOrder,
    /// A single `Ã_sym x`, as in a graph convolution.
    Adjacency,
}

impl Default for Propagation {
    fn default() -> Self {
        Propagation::Smooth(SmootherConfig::default())
    }
}
