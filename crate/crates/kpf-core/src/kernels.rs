//! The kernel catalog: closed-form two-point functions with domain
//! enforcement, optional analytic first-argument gradients, Gram assembly,
//! pullback along a bijection, and invariance checks.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::DiscreteMap;
use crate::error::{Error, Result};
use crate::linalg::{c, herm_eig, require_well_conditioned, to_complex, C64};
use crate::point::{Domain, Point};
use crate::sampling::domain_probes;

/// Scalar field the kernel takes values in. Real kernels still evaluate to
/// complex scalars with zero imaginary part so callers handle one type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarField {
    Real,
    Complex,
}

/// Number of probe points used to validate a pullback bijection pair.
const PULLBACK_PROBES: usize = 20;
/// Round-trip tolerance for phi_inv(phi(y)) = y on those probes.
const PULLBACK_INVERSE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
enum KernelForm {
    /// (1/(sigma sqrt(2 pi))) exp(-|x-y|^2 / (2 sigma^2)) on R^n.
    Gaussian { sigma: f64 },
    /// (1 + x.y)^degree on R^n.
    Polynomial { degree: u32 },
    /// sin(2 pi A (x-y)) / (pi (x-y)) on R, value 2A on the diagonal.
    Sinc { bandwidth: f64 },
    /// 1 / (1 - z conj(w)) on the open unit disc.
    Szego,
    /// (1-y)x for x <= y, (1-x)y otherwise, on (0,1).
    Sobolev11,
    /// 1 - |x-y| on R.
    Abs1,
    /// exp(x y) on R.
    ExpXY,
    /// (1+y)^x on (0,1).
    PowBase,
    /// k(i,j) = (M^-1)_ij on the finite set {1..n}.
    Discrete { m_inv: DMatrix<f64> },
    /// k(x,y) = (M^-1 x) . y on R^n; positive-definite iff M is symmetric
    /// positive-definite.
    LinearForm { m_inv: DMatrix<f64>, pd: bool },
    /// k(phi(y1), phi(y2)) for a bijection phi of the base domain. The
    /// inverse is consumed at construction for the round-trip check.
    Pullback { base: Box<Kernel>, phi: DiscreteMap },
}

/// A catalog kernel: evaluable two-point function with a domain descriptor,
/// scalar-field tag, and (where the closed form allows) an analytic gradient
/// in the first argument. Immutable after construction; evaluation is pure.
#[derive(Debug, Clone)]
pub struct Kernel {
    form: KernelForm,
    domain: Domain,
}

impl Kernel {
    pub fn gaussian(sigma: f64, dim: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter {
                field: "sigma",
                reason: format!("width must be positive and finite, got {sigma}"),
            });
        }
        if dim == 0 {
            return Err(Error::InvalidParameter {
                field: "dim",
                reason: "dimension must be at least 1".into(),
            });
        }
        Ok(Kernel {
            form: KernelForm::Gaussian { sigma },
            domain: Domain::Euclidean(dim),
        })
    }

    pub fn polynomial(degree: u32, dim: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidParameter {
                field: "degree",
                reason: format!("degree must be >= 1, got {degree}"),
            });
        }
        if dim == 0 {
            return Err(Error::InvalidParameter {
                field: "dim",
                reason: "dimension must be at least 1".into(),
            });
        }
        Ok(Kernel {
            form: KernelForm::Polynomial { degree },
            domain: Domain::Euclidean(dim),
        })
    }

    pub fn sinc(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::InvalidParameter {
                field: "bandwidth",
                reason: format!("bandwidth must be positive and finite, got {bandwidth}"),
            });
        }
        Ok(Kernel {
            form: KernelForm::Sinc { bandwidth },
            domain: Domain::Euclidean(1),
        })
    }

    pub fn szego() -> Self {
        Kernel {
            form: KernelForm::Szego,
            domain: Domain::UnitDisc,
        }
    }

    pub fn sobolev11() -> Self {
        Kernel {
            form: KernelForm::Sobolev11,
            domain: Domain::Interval { lo: 0.0, hi: 1.0, open: true },
        }
    }

    pub fn abs1() -> Self {
        Kernel {
            form: KernelForm::Abs1,
            domain: Domain::Euclidean(1),
        }
    }

    pub fn expxy() -> Self {
        Kernel {
            form: KernelForm::ExpXY,
            domain: Domain::Euclidean(1),
        }
    }

    pub fn powbase() -> Self {
        Kernel {
            form: KernelForm::PowBase,
            domain: Domain::Interval { lo: 0.0, hi: 1.0, open: true },
        }
    }

    pub fn discrete(m: DMatrix<f64>) -> Result<Self> {
        require_well_conditioned(&m)?;
        let n = m.nrows();
        let m_inv = m.try_inverse().ok_or(Error::NotInvertible)?;
        Ok(Kernel {
            form: KernelForm::Discrete { m_inv },
            domain: Domain::FiniteSet(n),
        })
    }

    pub fn linearform(m: DMatrix<f64>) -> Result<Self> {
        require_well_conditioned(&m)?;
        let n = m.nrows();
        let sym_defect = (&m - m.transpose()).norm();
        let pd = if sym_defect <= 1e-12 * m.norm().max(1.0) {
            herm_eig(&to_complex(&m)).values.iter().all(|&v| v > 0.0)
        } else {
            false
        };
        let m_inv = m.try_inverse().ok_or(Error::NotInvertible)?;
        Ok(Kernel {
            form: KernelForm::LinearForm { m_inv, pd },
            domain: Domain::Euclidean(n),
        })
    }

    /// The pullback k_phi(y1, y2) = k(phi(y1), phi(y2)). `phi` must be a
    /// bijection of the base domain onto itself and `phi_inv` its inverse;
    /// the pair is validated on quasi-random probes before acceptance.
    pub fn pullback(base: Kernel, phi: DiscreteMap, phi_inv: DiscreteMap) -> Result<Self> {
        let probes = domain_probes(&base.domain, &[], PULLBACK_PROBES, 0);
        let mut max_defect: f64 = 0.0;
        for p in &probes {
            let img = phi.apply(p)?;
            base.domain.contains(&img).map_err(|e| Error::DomainViolation {
                constraint: format!("pullback map leaves the base domain: {e}"),
            })?;
            let back = phi_inv.apply(&img)?;
            max_defect = max_defect.max(back.distance(p)?);
        }
        if max_defect > PULLBACK_INVERSE_TOL {
            return Err(Error::InconsistentInverse { defect: max_defect });
        }
        let domain = base.domain.clone();
        Ok(Kernel {
            form: KernelForm::Pullback {
                base: Box::new(base),
                phi,
            },
            domain,
        })
    }

    pub fn id(&self) -> &'static str {
        match &self.form {
            KernelForm::Gaussian { .. } => "gaussian",
            KernelForm::Polynomial { .. } => "polynomial",
            KernelForm::Sinc { .. } => "sinc",
            KernelForm::Szego => "szego",
            KernelForm::Sobolev11 => "sobolev11",
            KernelForm::Abs1 => "abs1",
            KernelForm::ExpXY => "expxy",
            KernelForm::PowBase => "powbase",
            KernelForm::Discrete { .. } => "discrete",
            KernelForm::LinearForm { .. } => "linearform",
            KernelForm::Pullback { .. } => "pullback",
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn scalar_field(&self) -> ScalarField {
        match &self.form {
            KernelForm::Szego => ScalarField::Complex,
            KernelForm::Pullback { base, .. } => base.scalar_field(),
            _ => ScalarField::Real,
        }
    }

    /// Kernels whose Gram matrices are certified positive semidefinite and
    /// for which the quadratic-form norm is meaningful.
    pub fn positive_definite(&self) -> bool {
        match &self.form {
            KernelForm::Gaussian { .. }
            | KernelForm::Polynomial { .. }
            | KernelForm::Sinc { .. }
            | KernelForm::Sobolev11
            | KernelForm::Szego => true,
            KernelForm::LinearForm { pd, .. } => *pd,
            KernelForm::Pullback { base, .. } => base.positive_definite(),
            KernelForm::Abs1
            | KernelForm::ExpXY
            | KernelForm::PowBase
            | KernelForm::Discrete { .. } => false,
        }
    }

    pub fn has_analytic_gradient(&self) -> bool {
        matches!(
            &self.form,
            KernelForm::Gaussian { .. }
                | KernelForm::Polynomial { .. }
                | KernelForm::Sinc { .. }
                | KernelForm::Sobolev11
                | KernelForm::ExpXY
                | KernelForm::PowBase
                | KernelForm::LinearForm { .. }
        )
    }

    /// Whether grad_x can be served at all: analytically or by the
    /// finite-difference fallback (pullbacks of differentiable real kernels).
    pub fn gradient_capable(&self) -> bool {
        match &self.form {
            KernelForm::Pullback { base, .. } => base.gradient_capable(),
            _ => self.has_analytic_gradient(),
        }
    }

    /// k(x, y), with both arguments checked against the domain first.
    pub fn eval(&self, x: &Point, y: &Point) -> Result<C64> {
        self.domain.contains(x)?;
        self.domain.contains(y)?;
        self.eval_raw(x, y)
    }

    /// Real part of k(x, y); intended for the real-scalar catalog entries.
    pub fn eval_re(&self, x: &Point, y: &Point) -> Result<f64> {
        Ok(self.eval(x, y)?.re)
    }

    fn eval_raw(&self, x: &Point, y: &Point) -> Result<C64> {
        match &self.form {
            KernelForm::Gaussian { sigma } => {
                let (a, b) = (x.as_real()?, y.as_real()?);
                let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                let coef = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                Ok(c(coef * (-d2 / (2.0 * sigma * sigma)).exp()))
            }
            KernelForm::Polynomial { degree } => {
                let (a, b) = (x.as_real()?, y.as_real()?);
                let s: f64 = 1.0 + a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
                Ok(c(s.powi(*degree as i32)))
            }
            KernelForm::Sinc { bandwidth } => {
                let u = x.as_real()?[0] - y.as_real()?[0];
                if u == 0.0 {
                    return Ok(c(2.0 * bandwidth));
                }
                let cu = 2.0 * std::f64::consts::PI * bandwidth * u;
                Ok(c(cu.sin() / (std::f64::consts::PI * u)))
            }
            KernelForm::Szego => {
                let (z, w) = (x.as_complex()?, y.as_complex()?);
                Ok(c(1.0) / (c(1.0) - z * w.conj()))
            }
            KernelForm::Sobolev11 => {
                let (a, b) = (x.as_real()?[0], y.as_real()?[0]);
                Ok(c(if a <= b { (1.0 - b) * a } else { (1.0 - a) * b }))
            }
            KernelForm::Abs1 => {
                let (a, b) = (x.as_real()?[0], y.as_real()?[0]);
                Ok(c(1.0 - (a - b).abs()))
            }
            KernelForm::ExpXY => {
                let (a, b) = (x.as_real()?[0], y.as_real()?[0]);
                Ok(c((a * b).exp()))
            }
            KernelForm::PowBase => {
                let (a, b) = (x.as_real()?[0], y.as_real()?[0]);
                Ok(c((a * b.ln_1p()).exp()))
            }
            KernelForm::Discrete { m_inv } => {
                let (i, j) = (x.as_index()?, y.as_index()?);
                Ok(c(m_inv[(i - 1, j - 1)]))
            }
            KernelForm::LinearForm { m_inv, .. } => {
                let (a, b) = (x.as_real()?, y.as_real()?);
                let ta = m_inv * DVector::from_column_slice(a);
                Ok(c(ta.dot(&DVector::from_column_slice(b))))
            }
            KernelForm::Pullback { base, phi, .. } => {
                base.eval(&phi.apply(x)?, &phi.apply(y)?)
            }
        }
    }

    /// Analytic partial derivative of k in the l-th coordinate of the first
    /// argument, or a central finite difference for pullbacks of
    /// differentiable kernels. Gradient-incapable catalog entries and the
    /// Sobolev kernel's diagonal kink are rejected as capability errors.
    pub fn grad_x(&self, x: &Point, y: &Point, l: usize) -> Result<f64> {
        self.domain.contains(x)?;
        self.domain.contains(y)?;
        if l >= self.dim() {
            return Err(Error::InvalidParameter {
                field: "l",
                reason: format!("coordinate index {l} out of range for dimension {}", self.dim()),
            });
        }
        match &self.form {
            KernelForm::Gaussian { sigma } => {
                let (a, b) = (x.as_real()?, y.as_real()?);
                let k = self.eval_raw(x, y)?.re;
                Ok(k * (-(a[l] - b[l]) / (sigma * sigma)))
            }
            KernelForm::Polynomial { degree } => {
                let (a, b) = (x.as_real()?, y.as_real()?);
                let s: f64 = 1.0 + a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
                Ok(*degree as f64 * s.powi(*degree as i32 - 1) * b[l])
            }
            KernelForm::Sinc { bandwidth } => {
                let u = x.as_real()?[0] - y.as_real()?[0];
                let omega = 2.0 * std::f64::consts::PI * bandwidth;
                let cu = omega * u;
                if cu.abs() < 1e-3 {
                    // Series for (cu cos(cu) - sin(cu)) / (pi u^2): the direct
                    // form cancels catastrophically near the diagonal.
                    let c3 = omega * omega * omega;
                    Ok(-c3 * u / (3.0 * std::f64::consts::PI) * (1.0 - cu * cu / 10.0))
                } else {
                    Ok((cu * cu.cos() - cu.sin()) / (std::f64::consts::PI * u * u))
                }
            }
            KernelForm::Sobolev11 => {
                let (a, b) = (x.as_real()?[0], y.as_real()?[0]);
                if a == b {
                    return Err(Error::Capability {
                        kernel: "sobolev11",
                        capability: "gradient on the diagonal (slope kink)",
                    });
                }
                Ok(if a < b { 1.0 - b } else { -b })
            }
            KernelForm::ExpXY => {
                let (a, b) = (x.as_real()?[0], y.as_real()?[0]);
                Ok(b * (a * b).exp())
            }
            KernelForm::PowBase => {
                let (a, b) = (x.as_real()?[0], y.as_real()?[0]);
                let lnb = b.ln_1p();
                Ok(lnb * (a * lnb).exp())
            }
            KernelForm::LinearForm { m_inv, .. } => {
                let b = y.as_real()?;
                Ok(m_inv
                    .column(l)
                    .iter()
                    .zip(b)
                    .map(|(p, q)| p * q)
                    .sum())
            }
            KernelForm::Pullback { base, .. } => {
                if !base.gradient_capable() || base.scalar_field() == ScalarField::Complex {
                    return Err(Error::Capability {
                        kernel: "pullback",
                        capability: "gradient (base kernel is not differentiable or not real)",
                    });
                }
                let v = x.as_real()?;
                let h = f64::EPSILON.cbrt() * v[l].abs().max(1.0);
                let mut fwd = v.to_vec();
                let mut bwd = v.to_vec();
                fwd[l] += h;
                bwd[l] -= h;
                let kf = self.eval(&Point::Real(fwd), y)?.re;
                let kb = self.eval(&Point::Real(bwd), y)?.re;
                Ok((kf - kb) / (2.0 * h))
            }
            KernelForm::Abs1 => Err(Error::Capability {
                kernel: "abs1",
                capability: "gradient (non-differentiable)",
            }),
            KernelForm::Discrete { .. } => Err(Error::Capability {
                kernel: "discrete",
                capability: "gradient (finite domain)",
            }),
            KernelForm::Szego => Err(Error::Capability {
                kernel: "szego",
                capability: "real-coordinate gradient (complex domain)",
            }),
        }
    }

    /// Gram matrix G_ij = k(x_i, x_j). Domain violations are reported with
    /// the index of the offending point.
    pub fn gram(&self, points: &[Point]) -> Result<DMatrix<C64>> {
        for (i, p) in points.iter().enumerate() {
            self.domain.contains(p).map_err(|e| Error::DomainViolation {
                constraint: format!("point {i}: {e}"),
            })?;
        }
        let n = points.len();
        let mut g = DMatrix::from_element(n, n, c(0.0));
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = self.eval_raw(&points[i], &points[j])?;
            }
        }
        Ok(g)
    }

    /// Max over all sample pairs of |k(f(x), f(y)) - k(x, y)|. An image
    /// leaving the domain is an error naming the sample, not a defect.
    pub fn check_invariance(
        &self,
        f: &DiscreteMap,
        samples: &[Point],
        tol: f64,
    ) -> Result<InvarianceReport> {
        let mut images = Vec::with_capacity(samples.len());
        for (i, p) in samples.iter().enumerate() {
            let img = f.apply(p)?;
            self.domain.contains(&img).map_err(|e| Error::DomainViolation {
                constraint: format!("image of sample {i}: {e}"),
            })?;
            images.push(img);
        }
        let mut max_defect: f64 = 0.0;
        for (i, x) in samples.iter().enumerate() {
            for (j, y) in samples.iter().enumerate() {
                let before = self.eval_raw(x, y)?;
                let after = self.eval_raw(&images[i], &images[j])?;
                max_defect = max_defect.max((after - before).norm());
            }
        }
        Ok(InvarianceReport {
            max_defect,
            pass: max_defect <= tol,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceReport {
    pub max_defect: f64,
    pub pass: bool,
}
