//! Exact transfer-operator action on atomic kernel-mean embeddings, the
//! regularized least-distance projection onto a dictionary span, spectra of
//! the projected operator, operator-norm certificates from Hermitian
//! pencils, and finite-dimensional representation matrices.

use std::cmp::Ordering;

use nalgebra::DMatrix;

use crate::dynamics::DiscreteMap;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::{
    c, eig_general, herm_eig, pencil_max, require_well_conditioned, C64, HermEig,
    RANK_TRUNCATION_REL,
};
use crate::point::Point;

/// Weighted atom list: the embedding Sigma w_i k(x_i, .) and, dually, the
/// measure Sigma w_i delta_{x_i}. The zero element is the empty list.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    pub atoms: Vec<Point>,
    pub weights: Vec<C64>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Point>, weights: Vec<C64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: atoms.len(),
                got: weights.len(),
            });
        }
        Ok(AtomicMeasure { atoms, weights })
    }

    pub fn from_real_weights(atoms: Vec<Point>, weights: &[f64]) -> Result<Self> {
        Self::new(atoms, weights.iter().map(|&w| c(w)).collect())
    }

    pub fn dirac(x: Point) -> Self {
        AtomicMeasure {
            atoms: vec![x],
            weights: vec![c(1.0)],
        }
    }

    pub fn zero() -> Self {
        AtomicMeasure {
            atoms: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Evaluate the embedding of `measure` at `y`: Sigma w_i k(x_i, y).
pub fn embed_eval(measure: &AtomicMeasure, kernel: &Kernel, y: &Point) -> Result<C64> {
    let mut acc = c(0.0);
    for (i, (x, w)) in measure.atoms.iter().zip(&measure.weights).enumerate() {
        let k = kernel.eval(x, y).map_err(|e| Error::AtomEval {
            index: i,
            source: Box::new(e),
        })?;
        acc += w * k;
    }
    Ok(acc)
}

/// Integrate `g` against the measure: Sigma w_i g(x_i). Evaluation failures
/// carry the index of the offending atom.
pub fn pair<G>(g: G, measure: &AtomicMeasure) -> Result<C64>
where
    G: Fn(&Point) -> Result<C64>,
{
    let mut acc = c(0.0);
    for (i, (x, w)) in measure.atoms.iter().zip(&measure.weights).enumerate() {
        let v = g(x).map_err(|e| Error::AtomEval {
            index: i,
            source: Box::new(e),
        })?;
        acc += w * v;
    }
    Ok(acc)
}

/// Transfer-operator action on an atomic measure: atoms move through `f`,
/// weights are untouched. This is exact, not an approximation.
pub fn pf_apply(f: &DiscreteMap, measure: &AtomicMeasure) -> Result<AtomicMeasure> {
    let mut atoms = Vec::with_capacity(measure.len());
    for x in &measure.atoms {
        atoms.push(f.apply(x)?);
    }
    Ok(AtomicMeasure {
        atoms,
        weights: measure.weights.clone(),
    })
}

/// Composition-operator action on an observable: g(f(x)).
pub fn koopman_eval<G>(f: &DiscreteMap, g: G, x: &Point) -> Result<C64>
where
    G: Fn(&Point) -> Result<C64>,
{
    g(&f.apply(x)?)
}

/// Norm of the embedding Sigma w_i k(x_i, .) via the Hermitian quadratic
/// form over the Gram matrix. Only meaningful for positive-definite catalog
/// entries; tiny negative form values (roundoff) are clipped to zero.
pub fn rkhs_norm(measure: &AtomicMeasure, kernel: &Kernel) -> Result<f64> {
    if !kernel.positive_definite() {
        return Err(Error::Capability {
            kernel: kernel.id(),
            capability: "quadratic-form norm (kernel is not certified positive-definite)",
        });
    }
    if measure.is_empty() {
        return Ok(0.0);
    }
    let g = kernel.gram(&measure.atoms)?;
    let n = measure.len();
    let mut form = c(0.0);
    for i in 0..n {
        for j in 0..n {
            form += measure.weights[i] * measure.weights[j].conj() * g[(i, j)];
        }
    }
    let trace: f64 = (0..n).map(|i| g[(i, i)].re).sum();
    let val = form.re;
    if val < 0.0 {
        if val >= -1e-12 * trace.abs() {
            return Ok(0.0);
        }
        return Err(Error::NegativeForm { value: val });
    }
    Ok(val.sqrt())
}

/// A fixed sample-point set with its Gram matrix and the cached
/// eigendecomposition of the Gram's Hermitian part (used for rank
/// truncation and pencil certificates).
#[derive(Debug, Clone)]
pub struct Dictionary {
    pub kernel: Kernel,
    pub points: Vec<Point>,
    pub gram: DMatrix<C64>,
    pub eig: HermEig,
}

impl Dictionary {
    pub fn new(kernel: Kernel, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter {
                field: "points",
                reason: "a dictionary needs at least one point".into(),
            });
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::InvalidParameter {
                        field: "points",
                        reason: format!("points {i} and {j} coincide"),
                    });
                }
            }
        }
        let gram = kernel.gram(&points)?;
        let eig = herm_eig(&gram);
        Ok(Dictionary {
            kernel,
            points,
            gram,
            eig,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Default ridge parameter: 1e-10 * trace(G) / n. Smooth-kernel Gram
    /// matrices are numerically rank-deficient; this keeps solves finite
    /// without visibly moving retained eigenvalues.
    pub fn default_reg(&self) -> f64 {
        let n = self.len() as f64;
        let trace: f64 = (0..self.len()).map(|i| self.gram[(i, i)].re).sum();
        1e-10 * (trace / n).abs()
    }

    pub fn retained_rank(&self) -> usize {
        self.eig.retained(RANK_TRUNCATION_REL).len()
    }
}

/// Coefficient-matrix representation of the projected transfer operator on
/// a dictionary span: column i holds the coefficients of the projection of
/// k(y_i, .) onto span{k(x_j, .)}.
#[derive(Debug, Clone)]
pub struct ProjectedPF {
    pub dictionary: Dictionary,
    pub images: Vec<Point>,
    pub coeffs: DMatrix<C64>,
    pub reg: f64,
    /// Worst relative distance of a projected section from its target,
    /// measured in the quadratic-form norm; only computed for
    /// positive-definite kernels.
    pub rel_residual: Option<f64>,
}

/// Build the projected operator from sample pairs (x_i, y_i = f(x_i)):
/// solve (G + reg I) c = b per column, with b_j = k(y_i, x_j).
pub fn pf_project(
    kernel: &Kernel,
    pairs: &[(Point, Point)],
    reg: Option<f64>,
) -> Result<ProjectedPF> {
    let xs: Vec<Point> = pairs.iter().map(|p| p.0.clone()).collect();
    let ys: Vec<Point> = pairs.iter().map(|p| p.1.clone()).collect();
    let dict = Dictionary::new(kernel.clone(), xs)?;
    let reg = reg.unwrap_or_else(|| dict.default_reg());
    let n = dict.len();

    let mut b = DMatrix::from_element(n, n, c(0.0));
    for i in 0..n {
        dict.kernel
            .domain()
            .contains(&ys[i])
            .map_err(|e| Error::DomainViolation {
                constraint: format!("image {i}: {e}"),
            })?;
        for j in 0..n {
            b[(j, i)] = dict.kernel.eval(&ys[i], &dict.points[j])?;
        }
    }

    let mut lhs = dict.gram.clone();
    for i in 0..n {
        lhs[(i, i)] += c(reg);
    }
    let coeffs = lhs.lu().solve(&b).ok_or(Error::DegenerateDictionary)?;

    let rel_residual = if dict.kernel.positive_definite() {
        let mut worst = 0.0_f64;
        for i in 0..n {
            let kyy = dict.kernel.eval(&ys[i], &ys[i])?.re;
            let col = coeffs.column(i);
            let mut cross = c(0.0);
            for j in 0..n {
                cross += col[j].conj() * b[(j, i)];
            }
            let mut quad = c(0.0);
            for p in 0..n {
                for q in 0..n {
                    quad += col[p] * col[q].conj() * dict.gram[(p, q)];
                }
            }
            let r2 = (kyy - 2.0 * cross.re + quad.re).max(0.0);
            let rel = r2.sqrt() / kyy.max(f64::MIN_POSITIVE).sqrt();
            worst = worst.max(rel);
        }
        Some(worst)
    } else {
        None
    };

    Ok(ProjectedPF {
        dictionary: dict,
        images: ys,
        coeffs,
        reg,
        rel_residual,
    })
}

/// One eigenpair of the projected operator: the eigenvalue and the
/// coefficient vector of its eigen-section over the dictionary atoms.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: C64,
    pub coeffs: Vec<C64>,
}

/// Eigenpairs of the coefficient matrix, sorted by modulus descending with
/// ties broken by ascending phase angle. Deterministic for fixed input.
pub fn spectrum(op: &ProjectedPF) -> Result<Vec<EigenPair>> {
    let raw = eig_general(&op.coeffs)?;
    let mut pairs: Vec<EigenPair> = raw
        .into_iter()
        .map(|(value, vec)| EigenPair {
            value,
            coeffs: vec.iter().copied().collect(),
        })
        .collect();
    pairs.sort_by(|a, b| {
        match b.value.norm().total_cmp(&a.value.norm()) {
            Ordering::Equal => a.value.arg().total_cmp(&b.value.arg()),
            other => other,
        }
    });
    Ok(pairs)
}

/// Realize an eigenpair as an atomic measure over the dictionary points, so
/// the eigen-section is evaluable anywhere through `embed_eval`.
pub fn eigen_section(op: &ProjectedPF, pair: &EigenPair) -> AtomicMeasure {
    AtomicMeasure {
        atoms: op.dictionary.points.clone(),
        weights: pair.coeffs.clone(),
    }
}

/// Certificate for the squared amplification of the transfer operator on a
/// sampled span: `bound` is the largest generalized eigenvalue of the
/// pencil (G_f, G + reg I) on the retained rank, i.e. the supremum of
/// |K_f mu|^2 / |mu|^2 over the span of the dictionary sections.
#[derive(Debug, Clone)]
pub struct NormBoundReport {
    pub bound: f64,
    pub eigvec: Vec<C64>,
    pub pencil_rank: usize,
    pub reg: f64,
}

pub fn norm_bound_estimate(
    kernel: &Kernel,
    f: &DiscreteMap,
    points: &[Point],
    reg: Option<f64>,
) -> Result<NormBoundReport> {
    let dict = Dictionary::new(kernel.clone(), points.to_vec())?;
    let reg = reg.unwrap_or_else(|| dict.default_reg());
    let mut images = Vec::with_capacity(dict.len());
    for (i, p) in dict.points.iter().enumerate() {
        let img = f.apply(p).map_err(|e| Error::AtomEval {
            index: i,
            source: Box::new(e),
        })?;
        images.push(img);
    }
    let g_f = dict.kernel.gram(&images)?;
    let (bound, vec, rank) = pencil_max(&dict.eig, reg, &g_f)?;
    Ok(NormBoundReport {
        bound,
        eigvec: vec.iter().copied().collect(),
        pencil_rank: rank,
        reg,
    })
}

/// Representation of the transfer operator for permutation dynamics on the
/// finite-set kernel with basis matrix M, together with both readings of
/// the closed form M^-1 P M (P filled column-wise, P e_i = e_sigma(i), or
/// row-wise, P_(i,sigma(i)) = 1) and whether each matches the
/// first-principles result.
#[derive(Debug, Clone)]
pub struct DiscreteRep {
    pub rep: DMatrix<f64>,
    pub column_form: DMatrix<f64>,
    pub row_form: DMatrix<f64>,
    pub column_form_matches: bool,
    pub row_form_matches: bool,
}

pub fn rep_matrix_discrete(m: &DMatrix<f64>, sigma: &[usize]) -> Result<DiscreteRep> {
    let n = sigma.len();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.nrows(),
        });
    }
    // Reuse the permutation validation (bijectivity of 1..=n).
    DiscreteMap::permutation(sigma.to_vec())?;
    require_well_conditioned(m)?;

    let mut s = DMatrix::zeros(n, n);
    for (i, &img) in sigma.iter().enumerate() {
        s[(img - 1, i)] = 1.0;
    }
    // First principles: the section at index i has coordinates M^-1 e_i and
    // is sent to the section at sigma(i), so the representation R satisfies
    // M R = S M with S e_i = e_sigma(i).
    let sm = &s * m;
    let rep = m.clone().lu().solve(&sm).ok_or(Error::NotInvertible)?;
    let m_inv = m.clone().try_inverse().ok_or(Error::NotInvertible)?;
    let column_form = &m_inv * &s * m;
    let row_form = &m_inv * s.transpose() * m;
    let scale = rep.norm().max(1.0);
    Ok(DiscreteRep {
        column_form_matches: (&column_form - &rep).norm() <= 1e-10 * scale,
        row_form_matches: (&row_form - &rep).norm() <= 1e-10 * scale,
        rep,
        column_form,
        row_form,
    })
}

/// Representations of the operators attached to linear dynamics x -> Ax in
/// the basis encoded by M: the composition operator acts as A^T exactly;
/// the transfer operator on section coordinates solves M R = A M. The
/// reversed product M A M^-1 is reported with a match flag so the two
/// orderings can be told apart numerically.
#[derive(Debug, Clone)]
pub struct LinearRep {
    pub koopman_rep: DMatrix<f64>,
    pub pf_rep: DMatrix<f64>,
    pub reversed_form: DMatrix<f64>,
    pub reversed_form_matches: bool,
    /// |A M - M R| / max(1, |A M|): how well the computed representation
    /// intertwines A with the basis, which ties it to the A^T adjoint.
    pub intertwining_defect: f64,
}

pub fn rep_matrix_linear(m: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<LinearRep> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if m.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: a.nrows(),
        });
    }
    require_well_conditioned(m)?;
    let am = a * m;
    let pf_rep = m.clone().lu().solve(&am).ok_or(Error::NotInvertible)?;
    let m_inv = m.clone().try_inverse().ok_or(Error::NotInvertible)?;
    let reversed_form = m * a * &m_inv;
    let scale = pf_rep.norm().max(1.0);
    let reversed_form_matches = (&reversed_form - &pf_rep).norm() <= 1e-10 * scale;
    let intertwining_defect = (&am - m * &pf_rep).norm() / am.norm().max(1.0);
    Ok(LinearRep {
        koopman_rep: a.transpose(),
        pf_rep,
        reversed_form,
        reversed_form_matches,
        intertwining_defect,
    })
}
