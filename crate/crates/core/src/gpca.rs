//! Closed-form graph-regularized PCA.
//!
//! Minimizing `‖X − ZWᵀ‖²_F + α·Tr(Zᵀ L̃ Z)` subject to `WᵀW = I` gives
//! `W` = top-`k` eigenvectors of `Xᵀ(I + αL̃)⁻¹X` and `Z = (I + αL̃)⁻¹XW`.
//! The inverse is replaced by the power-iteration smoother.

use std::path::Path;

use crate::binio::{Reader, Writer};
use crate::dataset::GraphDataset;
use crate::error::{Error, Result};
use crate::graph::normalize;
use crate::linalg::{center_columns_with_means, sym_eig_with, symmetrize, DenseMatrix, EigenMethod, EigenPairs};
use crate::smoother::{SmootherConfig, SmoothingOperator};

pub const SOLUTION_MAGIC: &[u8; 4] = b"GPCW";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpcaConfig {
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub smoother: SmootherConfig,
    pub center: bool,
    pub eigen: EigenMethod,
}

impl GpcaConfig {
    pub fn new(alpha: f64, k: usize) -> Self {
        GpcaConfig {
            alpha,
            beta: 0.0,
            k,
            smoother: SmootherConfig::default(),
            center: true,
            eigen: EigenMethod::Auto,
        }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        GpcaConfig { beta, ..self }
    }

    pub fn with_iterations(self, iterations: usize) -> Self {
        GpcaConfig {
            smoother: SmootherConfig::with_iterations(iterations),
            ..self
        }
    }
}

#[derive(Clone, Debug)]
pub struct GpcaSolution {
    /// `d × k`, orthonormal columns.
    pub w: DenseMatrix,
    /// `n × k` embedding, absent when loaded from a file saved without it.
    pub z: Option<DenseMatrix>,
    /// Top-`k` eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Means subtracted from each feature (all zero without centering).
    pub column_means: Vec<f64>,
}

impl GpcaSolution {
    pub fn k(&self) -> usize {
        self.w.cols()
    }

    pub fn embedding(&self) -> Result<&DenseMatrix> {
        self.z
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("solution carries no embedding".into()))
    }

    /// Saves `W`, the eigenvalues, the column means and, if `with_z`, the
    /// embedding.
    pub fn save(&self, path: &Path, with_z: bool) -> Result<()> {
        let (d, k) = self.w.shape();
        let mut w = Writer::create(path)?;
        w.bytes(SOLUTION_MAGIC)?;
        w.u32(d)?;
        w.u32(k)?;
        w.f64s(self.w.as_slice())?;
        w.f64s(&self.eigenvalues)?;
        w.f64s(&self.column_means)?;
        match (&self.z, with_z) {
            (Some(z), true) => {
                w.u32(z.rows())?;
                w.f64s(z.as_slice())?;
            }
            _ => w.u32(0)?,
        }
        w.finish()
    }

    pub fn load(path: &Path) -> Result<GpcaSolution> {
        let mut r = Reader::open(path)?;
        r.magic(SOLUTION_MAGIC)?;
        let d = r.u32()?;
        let k = r.u32()?;
        let w = r.matrix(d, k)?;
        let eigenvalues = r.f64s(k)?;
        let column_means = r.f64s(d)?;
        let n = r.u32()?;
        let z = if n > 0 { Some(r.matrix(n, k)?) } else { None };
        r.finish()?;
        Ok(GpcaSolution {
            w,
            z,
            eigenvalues,
            column_means,
        })
    }
}

/// Full spectrum of the GPCA matrix; any `k` can be cut from it.
#[derive(Clone, Debug)]
pub struct GpcaDecomposition {
    pub eigen: EigenPairs,
    /// Smoothed centered features `F`.
    pub smoothed: DenseMatrix,
    pub column_means: Vec<f64>,
}

impl GpcaDecomposition {
    /// Computes `F = smooth(center(X))` and the spectrum of `sym(XᵀF)`.
    pub fn compute(
        x: &DenseMatrix,
        op: &SmoothingOperator,
        smoother: &SmootherConfig,
        center: bool,
        eigen: EigenMethod,
    ) -> Result<GpcaDecomposition> {
        let (xc, column_means) = if center {
            center_columns_with_means(x)
        } else {
            (x.clone(), vec![0.0; x.cols()])
        };
        let smoothed = op.smooth(&xc, smoother)?;
        let c = symmetrize(&xc.t_matmul(&smoothed)?)?;
        let eigen = sym_eig_with(&c, eigen)?;
        Ok(GpcaDecomposition {
            eigen,
            smoothed,
            column_means,
        })
    }

    pub fn solution(&self, k: usize) -> Result<GpcaSolution> {
        let d = self.eigen.len();
        if k == 0 || k > d {
            return Err(Error::InvalidConfig(format!("k = {k} must lie in [1, {d}]")));
        }
        let top = self.eigen.clone().truncate(k);
        let z = self.smoothed.matmul(&top.vectors)?;
        Ok(GpcaSolution {
            w: top.vectors,
            z: Some(z),
            eigenvalues: top.values,
            column_means: self.column_means.clone(),
        })
    }
}

/// Smoothing operator on `ds` for the given `α` and `β`, using training
/// labels only.
pub fn operator_for(ds: &GraphDataset, alpha: f64, beta: f64) -> Result<SmoothingOperator> {
    let adj = normalize(&ds.graph);
    if beta == 0.0 {
        SmoothingOperator::unsupervised(adj, alpha)
    } else {
        SmoothingOperator::supervised(adj, alpha, beta, &ds.train_labels(), ds.num_classes)
    }
}

fn check_k(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::InvalidConfig(format!(
            "k = {k} must lie in [1, d = {d}]"
        )));
    }
    Ok(())
}

pub fn fit(ds: &GraphDataset, cfg: &GpcaConfig) -> Result<GpcaSolution> {
    check_k(cfg.k, ds.num_features())?;
    let op = operator_for(ds, cfg.alpha, cfg.beta)?;
    fit_with(&ds.features, &op, cfg)
}

/// [`fit`] with a prebuilt operator; `cfg.alpha` and `cfg.beta` are ignored
/// in favour of the operator's own.
pub fn fit_with(x: &DenseMatrix, op: &SmoothingOperator, cfg: &GpcaConfig) -> Result<GpcaSolution> {
    check_k(cfg.k, x.cols())?;
    GpcaDecomposition::compute(x, op, &cfg.smoother, cfg.center, cfg.eigen)?.solution(cfg.k)
}

/// `‖X − ZWᵀ‖²_F + α·Tr(Zᵀ L̃ Z)` for arbitrary `Z` and `W`.
pub fn objective(
    x_centered: &DenseMatrix,
    z: &DenseMatrix,
    w: &DenseMatrix,
    op: &SmoothingOperator,
) -> Result<f64> {
    let recon = x_centered.sub(&z.matmul_t(w)?)?.frobenius_sq();
    let smooth = z.dot(&op.apply_laplacian(z)?)?;
    Ok(recon + op.alpha() * smooth)
}

/// `Tr(Wᵀ Xᵀ F W)`, evaluated as `⟨XW, FW⟩`.
pub fn trace_objective(w: &DenseMatrix, x_centered: &DenseMatrix, f: &DenseMatrix) -> Result<f64> {
    x_centered.check_same_shape("trace_objective", f)?;
    x_centered.matmul(w)?.dot(&f.matmul(w)?)
}
