//! Small complex linear-algebra layer shared by the operator modules.
//!
//! Everything is deterministic: eigenvalues are sorted with explicit tie
//! breaks and eigenvectors get a canonical phase, so downstream reports are
//! byte-stable across runs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;

/// Condition-number ceiling for basis matrices that are only required to be
/// "invertible": anything beyond this is rejected as numerically singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative eigenvalue threshold for rank truncation of Gram matrices.
pub const RANK_TRUNCATION_REL: f64 = 1e-12;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(c)
}

/// (A + A^H) / 2.
pub fn hermitian_part(a: &DMatrix<C64>) -> DMatrix<C64> {
    (a + a.adjoint()).scale(0.5)
}

/// Eigendecomposition of the Hermitian part of a matrix, eigenvalues sorted
/// descending (ties keep the solver's order). `vectors` columns follow the
/// sorted order and are orthonormal.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

pub fn herm_eig(a: &DMatrix<C64>) -> HermEig {
    let h = hermitian_part(a);
    let se = h.symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        se.eigenvalues[j]
            .partial_cmp(&se.eigenvalues[i])
            .expect("hermitian eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(i));
    }
    HermEig { values, vectors }
}

impl HermEig {
    /// Solve (H + reg I) X = B through the eigendecomposition. Requires every
    /// shifted eigenvalue to be strictly positive.
    pub fn solve_regularized(&self, reg: f64, b: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let min_shifted = self.values.last().copied().unwrap_or(0.0) + reg;
        if min_shifted <= 0.0 {
            return Err(Error::NegativeForm { value: min_shifted });
        }
        let vt_b = self.vectors.adjoint() * b;
        let mut scaled = vt_b;
        for (i, &lam) in self.values.iter().enumerate() {
            let inv = c(1.0 / (lam + reg));
            for j in 0..scaled.ncols() {
                scaled[(i, j)] *= inv;
            }
        }
        Ok(&self.vectors * scaled)
    }

    /// Indices (into the sorted order) of eigenvalues kept by the relative
    /// rank truncation rule.
    pub fn retained(&self, rel_threshold: f64) -> Vec<usize> {
        let max = self.values.first().copied().unwrap_or(0.0);
        if max <= 0.0 {
            return Vec::new();
        }
        (0..self.values.len())
            .filter(|&i| self.values[i] > rel_threshold * max)
            .collect()
    }

    /// Whitening map W = V_r diag(1/sqrt(lambda_i + reg)) over the retained
    /// subspace, so that W^H (H + reg I) W = I_r.
    pub fn whiten(&self, reg: f64, rel_threshold: f64) -> Result<DMatrix<C64>> {
        let keep = self.retained(rel_threshold);
        if keep.is_empty() {
            return Err(Error::DegenerateDictionary);
        }
        let n = self.vectors.nrows();
        let mut w = DMatrix::zeros(n, keep.len());
        for (col, &i) in keep.iter().enumerate() {
            let shifted = self.values[i] + reg;
            if shifted <= 0.0 {
                return Err(Error::NegativeForm { value: shifted });
            }
            let s = c(1.0 / shifted.sqrt());
            let v = self.vectors.column(i) * s;
            w.set_column(col, &v);
        }
        Ok(w)
    }
}

/// Largest generalized eigenvalue of the Hermitian pencil (A, G + reg I)
/// restricted to the retained rank of G, with its coefficient vector in the
/// original coordinates. Returns (eigenvalue, vector, retained rank).
pub fn pencil_max(
    gram_eig: &HermEig,
    reg: f64,
    a: &DMatrix<C64>,
) -> Result<(f64, DVector<C64>, usize)> {
    let w = gram_eig.whiten(reg, RANK_TRUNCATION_REL)?;
    let rank = w.ncols();
    let s = hermitian_part(&(w.adjoint() * a * &w));
    let eig = herm_eig(&s);
    let top = eig.values[0];
    let u = eig.vectors.column(0).clone_owned();
    let mut vec = &w * u;
    canonical_phase(&mut vec);
    Ok((top, vec, rank))
}

/// Eigenpairs of a general complex matrix: Schur factorization, then
/// back-substitution on the triangular factor. Eigenvectors are normalized
/// and phase-fixed (largest-modulus component made positive real).
pub fn eig_general(m: &DMatrix<C64>) -> Result<Vec<(C64, DVector<C64>)>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let max_iter = 100 * n * n + 1000;
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, max_iter)
        .ok_or(Error::EigenFailure)?;
    let (q, t) = schur.unpack();
    let t_norm = t.norm();
    let mut pairs = Vec::with_capacity(n);
    for i in 0..n {
        let lam = t[(i, i)];
        let mut y = DVector::from_element(n, c(0.0));
        y[i] = c(1.0);
        for j in (0..i).rev() {
            let mut s = c(0.0);
            for k in (j + 1)..=i {
                s += t[(j, k)] * y[k];
            }
            let d = t[(j, j)] - lam;
            // Guard repeated eigenvalues: a floored divisor keeps the vector
            // finite; the caller sees any quality loss in the residual.
            let floor = (t_norm * f64::EPSILON).max(f64::MIN_POSITIVE);
            let d = if d.norm() < floor { c(floor) } else { d };
            y[j] = -s / d;
        }
        let mut v = &q * y;
        let norm = v.norm();
        if norm > 0.0 {
            v /= c(norm);
        }
        canonical_phase(&mut v);
        pairs.push((lam, v));
    }
    Ok(pairs)
}

/// Rotate a complex vector so its largest-modulus component is positive real.
/// Makes eigenvector output deterministic up to the eigensolver itself.
pub fn canonical_phase(v: &mut DVector<C64>) {
    let mut best = 0usize;
    let mut best_mod = 0.0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > best_mod {
            best_mod = z.norm();
            best = i;
        }
    }
    if best_mod > 0.0 {
        let phase = v[best] / c(best_mod);
        let rot = phase.conj();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// Condition estimate (2-norm) of a real square matrix via SVD.
pub fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Reject matrices whose condition estimate exceeds [`CONDITION_LIMIT`].
pub fn require_well_conditioned(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let cond = condition_estimate(m);
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(Error::IllConditioned {
            cond,
            limit: CONDITION_LIMIT,
        });
    }
    Ok(())
}
