//! Discrete maps, continuous vector fields with RK4 flows, and structural
//! relations between maps (conjugacy, symmetry, factor systems).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::{require_well_conditioned, C64};
use crate::point::Point;

/// Norm guard: a trajectory or iterate beyond this magnitude is treated as
/// divergent and reported as an error instead of propagating infinities.
pub const DIVERGENCE_GUARD: f64 = 1e12;

// ------------------------------------------------------------------
// Discrete maps
// ------------------------------------------------------------------

/// A map X -> X given in closed form, as snapshot data, or as a composition.
/// Application is deterministic; snapshot maps refuse anything but their
/// stored sources.
#[derive(Debug, Clone)]
pub enum DiscreteMap {
    Identity { dim: usize },
    /// x -> A x.
    Linear { a: DMatrix<f64> },
    /// x -> x + c.
    Translation { c: DVector<f64> },
    /// x -> factor * x (any dimension).
    Scaling { factor: f64, dim: usize },
    /// x -> r x (1 - x) on the unit interval.
    Logistic { r: f64 },
    /// z -> lambda (z - a) / (1 - z conj(a)) on the open unit disc,
    /// |lambda| = 1, |a| < 1.
    Mobius { lambda: C64, a: C64 },
    /// i -> sigma(i) on {1..n}; `sigma[i-1]` is the image of i.
    Permutation { sigma: Vec<usize> },
    /// Coordinatewise expressions over x1..xd.
    Expr { exprs: Vec<Expr>, dim: usize, src: Vec<String> },
    /// Lookup table of (source, image) pairs with unique sources.
    Snapshot {
        pairs: Vec<(Vec<f64>, Vec<f64>)>,
        dim_in: usize,
        dim_out: usize,
    },
    /// outer(inner(x)) — functional composition, applied literally.
    Composed { outer: Box<DiscreteMap>, inner: Box<DiscreteMap> },
}

impl DiscreteMap {
    pub fn linear(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        Ok(DiscreteMap::Linear { a })
    }

    pub fn translation(c: &[f64]) -> Self {
        DiscreteMap::Translation { c: DVector::from_column_slice(c) }
    }

    pub fn scaling(factor: f64, dim: usize) -> Self {
        DiscreteMap::Scaling { factor, dim }
    }

    /// 2-D rotation by `angle` radians.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        DiscreteMap::Linear {
            a: DMatrix::from_row_slice(2, 2, &[c, -s, s, c]),
        }
    }

    pub fn logistic(r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter {
                field: "r",
                reason: format!("logistic parameter must be positive, got {r}"),
            });
        }
        Ok(DiscreteMap::Logistic { r })
    }

    pub fn mobius(lambda: C64, a: C64) -> Result<Self> {
        if (lambda.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                field: "lambda",
                reason: format!("|lambda| must be 1, got {}", lambda.norm()),
            });
        }
        if !(a.norm() < 1.0) {
            return Err(Error::InvalidParameter {
                field: "a",
                reason: format!("|a| must be < 1, got {}", a.norm()),
            });
        }
        Ok(DiscreteMap::Mobius { lambda, a })
    }

    pub fn permutation(sigma: Vec<usize>) -> Result<Self> {
        let n = sigma.len();
        let mut seen = vec![false; n];
        for &img in &sigma {
            if img == 0 || img > n || seen[img - 1] {
                return Err(Error::InvalidParameter {
                    field: "sigma",
                    reason: format!("not a permutation of 1..={n}: {sigma:?}"),
                });
            }
            seen[img - 1] = true;
        }
        Ok(DiscreteMap::Permutation { sigma })
    }

    /// Map R^dim -> R^m with one expression per output coordinate, over
    /// variables x1..x{dim}. The output arity is the expression count, so
    /// non-square maps (projections, liftings) are allowed.
    pub fn from_exprs(sources: &[&str], dim: usize) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::InvalidParameter {
                field: "sources",
                reason: "need at least one coordinate expression".into(),
            });
        }
        let vars: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
        let var_refs: Vec<&str> = vars.iter().map(String::as_str).collect();
        let exprs = sources
            .iter()
            .map(|s| Expr::parse(s, &var_refs))
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscreteMap::Expr {
            exprs,
            dim,
            src: sources.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn snapshot(pairs: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let (first_in, first_out) = match pairs.first() {
            Some(p) => (p.0.len(), p.1.len()),
            None => {
                return Err(Error::InvalidParameter {
                    field: "pairs",
                    reason: "snapshot table is empty".into(),
                })
            }
        };
        for (i, (x, y)) in pairs.iter().enumerate() {
            if x.len() != first_in || y.len() != first_out {
                return Err(Error::InvalidParameter {
                    field: "pairs",
                    reason: format!("row {i} has inconsistent dimensions"),
                });
            }
            for (j, (x2, _)) in pairs.iter().enumerate().skip(i + 1) {
                if x == x2 {
                    return Err(Error::InvalidParameter {
                        field: "pairs",
                        reason: format!("duplicate source point at rows {i} and {j}"),
                    });
                }
            }
        }
        Ok(DiscreteMap::Snapshot {
            pairs,
            dim_in: first_in,
            dim_out: first_out,
        })
    }

    pub fn compose(outer: DiscreteMap, inner: DiscreteMap) -> Self {
        DiscreteMap::Composed {
            outer: Box::new(outer),
            inner: Box::new(inner),
        }
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        match self {
            DiscreteMap::Identity { dim } => {
                let v = x.as_real()?;
                check_dim(*dim, v.len())?;
                Ok(x.clone())
            }
            DiscreteMap::Linear { a } => {
                let v = x.as_real()?;
                check_dim(a.ncols(), v.len())?;
                let out = a * DVector::from_column_slice(v);
                Ok(Point::Real(out.iter().copied().collect()))
            }
            DiscreteMap::Translation { c } => {
                let v = x.as_real()?;
                check_dim(c.len(), v.len())?;
                Ok(Point::Real(v.iter().zip(c.iter()).map(|(a, b)| a + b).collect()))
            }
            DiscreteMap::Scaling { factor, dim } => {
                let v = x.as_real()?;
                check_dim(*dim, v.len())?;
                Ok(Point::Real(v.iter().map(|a| factor * a).collect()))
            }
            DiscreteMap::Logistic { r } => {
                let v = x.as_real()?;
                check_dim(1, v.len())?;
                Ok(Point::scalar(r * v[0] * (1.0 - v[0])))
            }
            DiscreteMap::Mobius { lambda, a } => {
                let z = x.as_complex()?;
                Ok(Point::Complex(lambda * (z - a) / (C64::new(1.0, 0.0) - z * a.conj())))
            }
            DiscreteMap::Permutation { sigma } => {
                let i = x.as_index()?;
                if i == 0 || i > sigma.len() {
                    return Err(Error::DomainViolation {
                        constraint: format!("index {i} outside 1..={}", sigma.len()),
                    });
                }
                Ok(Point::Index(sigma[i - 1]))
            }
            DiscreteMap::Expr { exprs, dim, .. } => {
                let v = x.as_real()?;
                check_dim(*dim, v.len())?;
                Ok(Point::Real(exprs.iter().map(|e| e.eval(v)).collect()))
            }
            DiscreteMap::Snapshot { pairs, dim_in, .. } => {
                let v = x.as_real()?;
                check_dim(*dim_in, v.len())?;
                pairs
                    .iter()
                    .find(|(src, _)| src.as_slice() == v)
                    .map(|(_, img)| Point::Real(img.clone()))
                    .ok_or(Error::UnknownSource)
            }
            DiscreteMap::Composed { outer, inner } => outer.apply(&inner.apply(x)?),
        }
    }

    /// Closed-form inverse where one exists. Snapshot, logistic, and
    /// expression maps have none.
    pub fn inverse(&self) -> Result<DiscreteMap> {
        match self {
            DiscreteMap::Identity { dim } => Ok(DiscreteMap::Identity { dim: *dim }),
            DiscreteMap::Linear { a } => {
                require_well_conditioned(a)?;
                let inv = a.clone().try_inverse().ok_or(Error::NotInvertible)?;
                Ok(DiscreteMap::Linear { a: inv })
            }
            DiscreteMap::Translation { c } => Ok(DiscreteMap::Translation { c: -c }),
            DiscreteMap::Scaling { factor, dim } => {
                if *factor == 0.0 {
                    return Err(Error::NotInvertible);
                }
                Ok(DiscreteMap::Scaling { factor: 1.0 / factor, dim: *dim })
            }
            DiscreteMap::Mobius { lambda, a } => {
                // (lambda (z - a) / (1 - z conj(a)))^{-1} is again a disc
                // automorphism with rotation conj(lambda) and center -lambda a.
                Ok(DiscreteMap::Mobius {
                    lambda: lambda.conj(),
                    a: -(lambda * a),
                })
            }
            DiscreteMap::Permutation { sigma } => {
                let mut inv = vec![0usize; sigma.len()];
                for (i, &img) in sigma.iter().enumerate() {
                    inv[img - 1] = i + 1;
                }
                Ok(DiscreteMap::Permutation { sigma: inv })
            }
            DiscreteMap::Composed { outer, inner } => Ok(DiscreteMap::Composed {
                outer: Box::new(inner.inverse()?),
                inner: Box::new(outer.inverse()?),
            }),
            DiscreteMap::Logistic { .. }
            | DiscreteMap::Expr { .. }
            | DiscreteMap::Snapshot { .. } => Err(Error::NotInvertible),
        }
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

// ------------------------------------------------------------------
// Vector fields and flows
// ------------------------------------------------------------------

/// Autonomous vector field on R^n.
#[derive(Debug, Clone)]
pub enum VectorField {
    Zero { dim: usize },
    Constant { c: DVector<f64> },
    /// x' = A x.
    Linear { a: DMatrix<f64> },
    /// (x1, x2)' = (x2, -x1).
    HarmonicOscillator,
    /// (x1, x2)' = (x2, mu (1 - x1^2) x2 - x1).
    VanDerPol { mu: f64 },
    /// Coordinatewise expressions over x1..xd.
    Expr { exprs: Vec<Expr>, dim: usize, src: Vec<String> },
}

impl VectorField {
    pub fn linear(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        Ok(VectorField::Linear { a })
    }

    pub fn from_exprs(sources: &[&str]) -> Result<Self> {
        let dim = sources.len();
        let vars: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
        let var_refs: Vec<&str> = vars.iter().map(String::as_str).collect();
        let exprs = sources
            .iter()
            .map(|s| Expr::parse(s, &var_refs))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorField::Expr {
            exprs,
            dim,
            src: sources.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            VectorField::Zero { dim } => *dim,
            VectorField::Constant { c } => c.len(),
            VectorField::Linear { a } => a.nrows(),
            VectorField::HarmonicOscillator | VectorField::VanDerPol { .. } => 2,
            VectorField::Expr { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            VectorField::Zero { dim } => vec![0.0; *dim],
            VectorField::Constant { c } => c.iter().copied().collect(),
            VectorField::Linear { a } => {
                let out = a * DVector::from_column_slice(x);
                out.iter().copied().collect()
            }
            VectorField::HarmonicOscillator => vec![x[1], -x[0]],
            VectorField::VanDerPol { mu } => {
                vec![x[1], mu * (1.0 - x[0] * x[0]) * x[1] - x[0]]
            }
            VectorField::Expr { exprs, .. } => exprs.iter().map(|e| e.eval(x)).collect(),
        })
    }
}

/// Semiflow of a vector field under classical fixed-step RK4. The final
/// partial step is shortened to land exactly on the requested time.
#[derive(Debug, Clone)]
pub struct Flow {
    pub field: VectorField,
    pub step: f64,
}

impl Flow {
    pub fn new(field: VectorField, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidParameter {
                field: "step",
                reason: format!("integrator step must be positive, got {step}"),
            });
        }
        Ok(Flow { field, step })
    }

    /// phi_t(x). Exact identity at t = 0 (the input is returned untouched).
    pub fn map(&self, x: &Point, t: f64) -> Result<Point> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter {
                field: "t",
                reason: format!("flow time must be nonnegative, got {t}"),
            });
        }
        let v = x.as_real()?;
        check_dim(self.field.dim(), v.len())?;
        if t == 0.0 {
            return Ok(x.clone());
        }
        let out = self.advance(v.to_vec(), t, 0.0)?;
        Ok(Point::Real(out))
    }

    /// Integrate from `state` over a duration `t`, reporting divergence
    /// against absolute time `t_base + elapsed`.
    fn advance(&self, mut state: Vec<f64>, t: f64, t_base: f64) -> Result<Vec<f64>> {
        let mut remaining = t;
        let mut elapsed = 0.0;
        while remaining > 0.0 {
            let h = self.step.min(remaining);
            state = self.rk4_step(&state, h)?;
            elapsed += h;
            remaining -= h;
            let norm: f64 = state.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !norm.is_finite() || norm > DIVERGENCE_GUARD {
                return Err(Error::Divergence { t: t_base + elapsed });
            }
        }
        Ok(state)
    }

    fn rk4_step(&self, x: &[f64], h: f64) -> Result<Vec<f64>> {
        let n = x.len();
        let k1 = self.field.eval(x)?;
        let mut tmp: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k1[i]).collect();
        let k2 = self.field.eval(&tmp)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        let k3 = self.field.eval(&tmp)?;
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        let k4 = self.field.eval(&tmp)?;
        Ok((0..n)
            .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }

    /// Defect of the semiflow identity phi_{t+s}(x) vs phi_t(phi_s(x)).
    pub fn check_semiflow(&self, x: &Point, t: f64, s: f64, tol: f64) -> Result<FlowReport> {
        let direct = self.map(x, t + s)?;
        let staged = self.map(&self.map(x, s)?, t)?;
        let defect = direct.distance(&staged)?;
        Ok(FlowReport { defect, pass: defect <= tol })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowReport {
    pub defect: f64,
    pub pass: bool,
}

// ------------------------------------------------------------------
// Structural relations
// ------------------------------------------------------------------

/// A structural hypothesis about a map f: conjugacy to g along phi, a
/// commuting symmetry psi, or a factor system (Pi, F).
#[derive(Debug, Clone)]
pub enum StructureRelation {
    /// phi o g = f o phi (phi_inv is carried for callers that need the
    /// change of variables itself, e.g. pullback kernels).
    Conjugacy {
        phi: DiscreteMap,
        phi_inv: DiscreteMap,
        g: DiscreteMap,
    },
    /// psi o f = f o psi.
    Symmetry { psi: DiscreteMap },
    /// Pi o f = F o Pi.
    Factor { pi: DiscreteMap, f_factor: DiscreteMap },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationReport {
    pub max_defect: f64,
    pub pass: bool,
}

/// Pointwise residual of the defining identity of `rel` for the map `f`,
/// maximized over `samples`.
pub fn check_relation(
    rel: &StructureRelation,
    f: &DiscreteMap,
    samples: &[Point],
    tol: f64,
) -> Result<RelationReport> {
    let mut max_defect: f64 = 0.0;
    for x in samples {
        let (lhs, rhs) = match rel {
            StructureRelation::Conjugacy { phi, g, .. } => {
                (phi.apply(&g.apply(x)?)?, f.apply(&phi.apply(x)?)?)
            }
            StructureRelation::Symmetry { psi } => {
                (psi.apply(&f.apply(x)?)?, f.apply(&psi.apply(x)?)?)
            }
            StructureRelation::Factor { pi, f_factor } => {
                (pi.apply(&f.apply(x)?)?, f_factor.apply(&pi.apply(x)?)?)
            }
        };
        let d = lhs.distance(&rhs).map_err(|e| match e {
            Error::DimensionMismatch { expected, got } => Error::RelationShape(format!(
                "relation sides have different dimensions ({expected} vs {got})"
            )),
            other => other,
        })?;
        max_defect = max_defect.max(d);
    }
    Ok(RelationReport {
        max_defect,
        pass: max_defect <= tol,
    })
}
