//! Dense symmetric eigendecomposition.
//!
//! Two full-spectrum solvers live here. Cyclic Jacobi is the reference
//! route: simple, very accurate, and quadratic-convergent, but each sweep costs
//! `O(n³)` and several sweeps are needed. Householder tridiagonalization
//! followed by implicit QL with Wilkinson shifts does the same job in roughly
//! the cost of two Jacobi sweeps and is what large feature dimensions use.
//! Both return the full spectrum; [`sym_eig_topk`] selects from it.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Largest dimension routed to Jacobi by [`EigenMethod::Auto`].
pub const JACOBI_MAX_DIM: usize = 256;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-8;

/// Eigenvalues in descending order with matching orthonormal eigenvectors
/// stored as columns.
///
/// Each column is signed so that its entry of largest magnitude is positive
/// (the lowest row index wins a tie).
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Keeps the first `k` pairs.
    pub fn truncate(self, k: usize) -> EigenPairs {
        let k = k.min(self.values.len());
        let idx: Vec<usize> = (0..k).collect();
        EigenPairs {
            values: self.values[..k].to_vec(),
            vectors: self.vectors.select_columns(&idx),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EigenMethod {
    Jacobi,
    Tridiagonal,
    /// Jacobi up to [`JACOBI_MAX_DIM`], tridiagonal QL above.
    #[default]
    Auto,
}

/// Top-`k` eigenpairs of the exactly symmetrized input.
pub fn sym_eig_topk(m: &DenseMatrix, k: usize) -> Result<EigenPairs> {
    sym_eig_topk_with(m, k, EigenMethod::Auto)
}

pub fn sym_eig_topk_with(m: &DenseMatrix, k: usize, method: EigenMethod) -> Result<EigenPairs> {
    if k == 0 || k > m.rows() {
        return Err(Error::InvalidConfig(format!(
            "k = {k} must lie in [1, {}]",
            m.rows()
        )));
    }
    Ok(sym_eig_with(m, method)?.truncate(k))
}

/// Full eigendecomposition, descending.
pub fn sym_eig(m: &DenseMatrix) -> Result<EigenPairs> {
    sym_eig_with(m, EigenMethod::Auto)
}

pub fn sym_eig_with(m: &DenseMatrix, method: EigenMethod) -> Result<EigenPairs> {
    let a = checked_symmetric(m)?;
    let n = a.rows();
    let method = match method {
        EigenMethod::Auto if n <= JACOBI_MAX_DIM => EigenMethod::Jacobi,
        EigenMethod::Auto => EigenMethod::Tridiagonal,
        other => other,
    };
    let (values, vectors) = match method {
        EigenMethod::Jacobi => jacobi(a)?,
        _ => tridiagonal_ql(a)?,
    };
    Ok(sorted_and_signed(values, vectors))
}

fn checked_symmetric(m: &DenseMatrix) -> Result<DenseMatrix> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::shape(
            "sym_eig",
            "square matrix",
            format!("{}x{}", m.rows(), m.cols()),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("empty matrix".into()));
    }
    m.check_finite("eigensolver input")?;
    let tol = SYMMETRY_TOL * m.max_abs().max(1.0);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m.get(i, j) - m.get(j, i)).abs());
        }
    }
    if worst > tol {
        return Err(Error::NotSymmetric {
            max_asymmetry: worst,
        });
    }
    super::symmetrize(m)
}

/// Sorts descending (stable on ties) and applies the sign rule. `vectors`
/// holds eigenvectors as columns.
fn sorted_and_signed(values: Vec<f64>, vectors: DenseMatrix) -> EigenPairs {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut out = DenseMatrix::zeros(vectors.rows(), n);
    let mut sorted = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        sorted.push(values[src]);
        let mut col = vectors.column(src);
        apply_sign_rule(&mut col);
        out.set_column(dst, &col);
    }
    EigenPairs {
        values: sorted,
        vectors: out,
    }
}

/// Flips `v` so that its first entry of largest magnitude is positive.
pub fn apply_sign_rule(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn off_diagonal_sq(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s
}

/// Cyclic-by-row Jacobi. Returns unsorted eigenvalues and eigenvectors as
/// columns.
fn jacobi(a: DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.rows();
    let mut a = a.into_vec();
    // Rows of `vt` are eigenvectors; keeps the rotation update contiguous.
    let mut vt = DenseMatrix::identity(n).into_vec();
    let norm_sq: f64 = a.iter().map(|v| v * v).sum();
    let threshold_sq = (JACOBI_REL_TOL * JACOBI_REL_TOL) * norm_sq;

    let mut converged = off_diagonal_sq(&a, n) <= threshold_sq;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A ← Jᵀ A J, rows then columns.
                for k in 0..n {
                    let akp = a[p * n + k];
                    let akq = a[q * n + k];
                    a[p * n + k] = c * akp - s * akq;
                    a[q * n + k] = s * akp + c * akq;
                }
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                let (head, tail) = vt.split_at_mut(q * n);
                let vp = &mut head[p * n..(p + 1) * n];
                let vq = &mut tail[..n];
                for (xp, xq) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (up, uq) = (*xp, *xq);
                    *xp = c * up - s * uq;
                    *xq = s * up + c * uq;
                }
            }
        }
        converged = off_diagonal_sq(&a, n) <= threshold_sq;
    }
    log::trace!("jacobi: n = {n}, {sweeps} sweeps");
    let values = (0..n).map(|i| a[i * n + i]).collect();
    let vectors = DenseMatrix::from_vec(n, n, vt)?.transpose();
    Ok((values, vectors))
}

/// Householder reduction to tridiagonal form followed by implicit QL.
///
/// Works on `u = Vᵀ` so that every inner loop of the reduction, the
/// back-accumulation and the QL rotations walks contiguous memory.
fn tridiagonal_ql(a: DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.rows();
    // `a` is symmetric, so its row-major buffer already equals Vᵀ = V.
    let mut u = a.into_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder_tridiagonalize(&mut u, &mut d, &mut e, n);
    ql_implicit(&mut u, &mut d, &mut e, n)?;
    let vectors = DenseMatrix::from_vec(n, n, u)?.transpose();
    Ok((d, vectors))
}

// `v(r, c)` of the classical formulation lives at `u[c * n + r]`.
fn householder_tridiagonalize(u: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    for j in 0..n {
        d[j] = u[j * n + (n - 1)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = u[j * n + (i - 1)];
                u[j * n + i] = 0.0;
                u[i * n + j] = 0.0;
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].iter_mut().for_each(|x| *x = 0.0);

            for j in 0..i {
                let f = d[j];
                u[i * n + j] = f;
                let col = &u[j * n..j * n + i];
                let mut g = e[j] + col[j] * f;
                for k in (j + 1)..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }

            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                let col = &mut u[j * n..j * n + i];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = u[j * n + (i - 1)];
                u[j * n + i] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate the transformations.
    for i in 0..n.saturating_sub(1) {
        u[i * n + (n - 1)] = u[i * n + i];
        u[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = u[(i + 1) * n + k] / h;
            }
            let (head, tail) = u.split_at_mut((i + 1) * n);
            let next = &tail[..=i];
            for j in 0..=i {
                let col = &mut head[j * n..j * n + i + 1];
                let g: f64 = next.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                for (c, dk) in col.iter_mut().zip(&d[..=i]) {
                    *c -= g * dk;
                }
            }
        }
        for k in 0..=i {
            u[(i + 1) * n + k] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = u[j * n + (n - 1)];
        u[j * n + (n - 1)] = 0.0;
    }
    u[(n - 1) * n + (n - 1)] = 1.0;
    e[0] = 0.0;
}

const QL_MAX_ITER_PER_VALUE: usize = 60;

fn ql_implicit(u: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        // e[n-1] is zero, so the scan always stops inside the matrix.
        let m = m.min(n - 1);

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITER_PER_VALUE {
                    return Err(Error::NoConvergence { sweeps: iter });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in &mut d[(l + 2)..n] {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (head, tail) = u.split_at_mut((i + 1) * n);
                    let vi = &mut head[i * n..(i + 1) * n];
                    let vi1 = &mut tail[..n];
                    for (a, b) in vi.iter_mut().zip(vi1.iter_mut()) {
                        let h = *b;
                        *b = s * *a + c * h;
                        *a = c * *a - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
