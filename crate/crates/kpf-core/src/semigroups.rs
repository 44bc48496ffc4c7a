//! Continuous-time machinery: semigroup generators on kernel sections,
//! path-integral domain elements, growth-bound certificates, Lyapunov decay
//! checks, and a characteristics-based transport solver.

use nalgebra::DMatrix;

use crate::dynamics::{Flow, VectorField, DIVERGENCE_GUARD};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::kernels::Kernel;
use crate::linalg::{c, pencil_max, C64};
use crate::operators::{embed_eval, AtomicMeasure, Dictionary};
use crate::point::Point;
use crate::quad::composite_on_interval;
use crate::sampling::domain_probes;

/// Observable with a value and a gradient: the minimal surface the Koopman
/// generator needs.
pub trait C1Observable {
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// Observable parsed from an expression string over x1..xd, differentiated
/// by forward-mode sweeps of the expression tree.
#[derive(Debug, Clone)]
pub struct ExprObservable {
    expr: Expr,
    dim: usize,
    pub src: String,
}

impl ExprObservable {
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        let vars: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
        let var_refs: Vec<&str> = vars.iter().map(String::as_str).collect();
        Ok(ExprObservable {
            expr: Expr::parse(src, &var_refs)?,
            dim,
            src: src.to_string(),
        })
    }
}

impl C1Observable for ExprObservable {
    fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.expr.eval(x))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.expr.eval_grad(x).1)
    }
}

/// The observable x -> k(x, anchor): a kernel section against a fixed
/// anchor, differentiable wherever the kernel's first-argument gradient is.
#[derive(Debug, Clone)]
pub struct KernelSectionObservable {
    pub kernel: Kernel,
    pub anchor: Point,
}

impl KernelSectionObservable {
    pub fn new(kernel: Kernel, anchor: Point) -> Result<Self> {
        kernel.domain().contains(&anchor)?;
        Ok(KernelSectionObservable { kernel, anchor })
    }
}

impl C1Observable for KernelSectionObservable {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.kernel.eval(&Point::real(x), &self.anchor)?.re)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = Point::real(x);
        (0..self.kernel.dim())
            .map(|l| self.kernel.grad_x(&p, &self.anchor, l))
            .collect()
    }
}

/// The transfer-operator generator applied to the section at x: the object
/// Sigma_l f_l(x) d/dx_l k(x, .), evaluable at any y.
#[derive(Debug, Clone)]
pub struct GeneratorSection {
    pub kernel: Kernel,
    pub x: Point,
    pub field_values: Vec<f64>,
}

impl GeneratorSection {
    pub fn eval(&self, y: &Point) -> Result<f64> {
        let mut acc = 0.0;
        for (l, fv) in self.field_values.iter().enumerate() {
            if *fv != 0.0 {
                acc += fv * self.kernel.grad_x(&self.x, y, l)?;
            }
        }
        Ok(acc)
    }
}

pub fn pf_generator_section(
    kernel: &Kernel,
    field: &VectorField,
    x: &Point,
) -> Result<GeneratorSection> {
    if !kernel.gradient_capable() {
        return Err(Error::Capability {
            kernel: kernel.id(),
            capability: "generator section (no first-argument gradient)",
        });
    }
    kernel.domain().contains(x)?;
    let field_values = field.eval(x.as_real()?)?;
    Ok(GeneratorSection {
        kernel: kernel.clone(),
        x: x.clone(),
        field_values,
    })
}

/// Koopman generator on a differentiable observable: grad g(x) . f(x).
pub fn koopman_generator_eval<G: C1Observable>(
    field: &VectorField,
    g: &G,
    x: &Point,
) -> Result<f64> {
    let v = x.as_real()?;
    let grad = g.gradient(v)?;
    let fv = field.eval(v)?;
    if grad.len() != fv.len() {
        return Err(Error::DimensionMismatch {
            expected: fv.len(),
            got: grad.len(),
        });
    }
    Ok(grad.iter().zip(&fv).map(|(a, b)| a * b).sum())
}

/// Quadrature realization of the trajectory integral int_0^T k(phi_t(x), .) dt
/// as an atomic measure: atoms at flow samples, Gauss-Legendre weights.
#[derive(Debug, Clone)]
pub struct PathIntegral {
    pub x: Point,
    pub horizon: f64,
    pub node_times: Vec<f64>,
    pub measure: AtomicMeasure,
}

pub fn path_integral(
    kernel: &Kernel,
    flow: &Flow,
    x: &Point,
    horizon: f64,
    nodes: usize,
) -> Result<PathIntegral> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter {
            field: "horizon",
            reason: format!("integration horizon must be positive, got {horizon}"),
        });
    }
    if nodes < 2 {
        return Err(Error::InvalidParameter {
            field: "nodes",
            reason: format!("need at least 2 quadrature nodes, got {nodes}"),
        });
    }
    kernel.domain().contains(x)?;
    let (ts, ws) = composite_on_interval(horizon, nodes);
    let mut atoms = Vec::with_capacity(ts.len());
    for (q, &t) in ts.iter().enumerate() {
        let atom = flow.map(x, t)?;
        kernel.domain().contains(&atom).map_err(|e| Error::DomainViolation {
            constraint: format!("trajectory sample {q} (t = {t}): {e}"),
        })?;
        atoms.push(atom);
    }
    let measure = AtomicMeasure::from_real_weights(atoms, &ws)?;
    Ok(PathIntegral {
        x: x.clone(),
        horizon,
        node_times: ts,
        measure,
    })
}

/// Advance every atom of a measure along the flow for time t; weights are
/// untouched. The continuous-time analogue of the discrete pushforward.
pub fn pf_semigroup_apply(flow: &Flow, t: f64, measure: &AtomicMeasure) -> Result<AtomicMeasure> {
    let mut atoms = Vec::with_capacity(measure.len());
    for (i, a) in measure.atoms.iter().enumerate() {
        let moved = flow.map(a, t).map_err(|e| Error::AtomEval {
            index: i,
            source: Box::new(e),
        })?;
        atoms.push(moved);
    }
    Ok(AtomicMeasure {
        atoms,
        weights: measure.weights.clone(),
    })
}

/// Difference-quotient check of the fundamental-theorem identity for path
/// integrals: applying the generator to int_0^T k(phi_t(x),.) dt must give
/// k(phi_T(x),.) - k(x,.). For each ladder step h the defect is the worst
/// probe error of ((K_h - id) I)/h against that right-hand side.
#[derive(Debug, Clone)]
pub struct GeneratorIdentityReport {
    pub hs: Vec<f64>,
    pub defects: Vec<f64>,
    /// defects[i] / defects[i+1] for consecutive ladder steps.
    pub ratios: Vec<f64>,
    /// True when every ratio sits within 20% of the step ratio (first-order
    /// decay), or the defects are already at roundoff level.
    pub first_order: bool,
}

pub fn generator_identity_check(
    kernel: &Kernel,
    flow: &Flow,
    x: &Point,
    horizon: f64,
    h_ladder: &[f64],
) -> Result<GeneratorIdentityReport> {
    if h_ladder.is_empty() {
        return Err(Error::InvalidParameter {
            field: "h_ladder",
            reason: "need at least one difference step".into(),
        });
    }
    for &h in h_ladder {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter {
                field: "h_ladder",
                reason: format!("difference steps must be positive, got {h}"),
            });
        }
    }
    let nodes = ((32.0 * horizon).ceil() as usize).max(8);
    let integral = path_integral(kernel, flow, x, horizon, nodes)?;
    let end = flow.map(x, horizon)?;

    let mut probes = integral.measure.atoms.clone();
    probes.push(x.clone());
    probes.push(end.clone());
    probes.extend(domain_probes(kernel.domain(), &integral.measure.atoms, 20, 0));

    let mut rhs = Vec::with_capacity(probes.len());
    let mut base = Vec::with_capacity(probes.len());
    for y in &probes {
        rhs.push(kernel.eval(&end, y)? - kernel.eval(x, y)?);
        base.push(embed_eval(&integral.measure, kernel, y)?);
    }

    let mut defects = Vec::with_capacity(h_ladder.len());
    for &h in h_ladder {
        let advanced = pf_semigroup_apply(flow, h, &integral.measure)?;
        let mut worst = 0.0_f64;
        for ((y, r), b) in probes.iter().zip(&rhs).zip(&base) {
            let lhs = (embed_eval(&advanced, kernel, y)? - b) / c(h);
            worst = worst.max((lhs - r).norm());
        }
        defects.push(worst);
    }

    let mut ratios = Vec::new();
    let mut first_order = true;
    for i in 0..defects.len().saturating_sub(1) {
        let expected = h_ladder[i] / h_ladder[i + 1];
        let ratio = defects[i] / defects[i + 1].max(f64::MIN_POSITIVE);
        ratios.push(ratio);
        let at_roundoff = defects[i] <= 1e-14 && defects[i + 1] <= 1e-14;
        if !at_roundoff && !(ratio >= 0.8 * expected && ratio <= 1.2 * expected) {
            first_order = false;
        }
    }
    Ok(GeneratorIdentityReport {
        hs: h_ladder.to_vec(),
        defects,
        ratios,
        first_order,
    })
}

/// Certificate for the semigroup growth rate on a sampled span: `bound` is
/// the largest generalized eigenvalue of (Herm(H), G + reg I) with
/// H_ij = Sigma_l f_l(x_i) d/dx_l k(x_i, x_j), so that on the span
/// d/dt |K_t mu|^2 at t = 0 is at most 2 * bound * |mu|^2.
#[derive(Debug, Clone)]
pub struct GrowthCertificate {
    pub bound: f64,
    pub eigvec: Vec<C64>,
    pub pencil_rank: usize,
    pub reg: f64,
}

pub fn growth_bound(
    kernel: &Kernel,
    field: &VectorField,
    points: &[Point],
    reg: Option<f64>,
) -> Result<GrowthCertificate> {
    if !kernel.gradient_capable() {
        return Err(Error::Capability {
            kernel: kernel.id(),
            capability: "growth bound (no first-argument gradient)",
        });
    }
    if !kernel.positive_definite() {
        return Err(Error::Capability {
            kernel: kernel.id(),
            capability: "growth bound (kernel is not certified positive-definite)",
        });
    }
    let dict = Dictionary::new(kernel.clone(), points.to_vec())?;
    let reg = reg.unwrap_or_else(|| dict.default_reg());
    let n = dict.len();
    let dim = kernel.dim();
    let mut h = DMatrix::from_element(n, n, c(0.0));
    for i in 0..n {
        let fv = field.eval(dict.points[i].as_real()?)?;
        for j in 0..n {
            let mut s = 0.0;
            for (l, f_l) in fv.iter().enumerate().take(dim) {
                if *f_l != 0.0 {
                    s += f_l * kernel.grad_x(&dict.points[i], &dict.points[j], l)?;
                }
            }
            h[(i, j)] = c(s);
        }
    }
    let (bound, vec, rank) = pencil_max(&dict.eig, reg, &h)?;
    Ok(GrowthCertificate {
        bound,
        eigvec: vec.iter().copied().collect(),
        pencil_rank: rank,
        reg,
    })
}

/// V(t) = k(phi_t(x), phi_t(x)) sampled along the trajectory, with a
/// monotone-nonincreasing flag (1e-10 slack relative to the initial value).
#[derive(Debug, Clone)]
pub struct LyapunovReport {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub monotone_nonincreasing: bool,
}

pub fn lyapunov_check(
    kernel: &Kernel,
    flow: &Flow,
    x: &Point,
    horizon: f64,
    samples: usize,
) -> Result<LyapunovReport> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter {
            field: "horizon",
            reason: format!("horizon must be positive, got {horizon}"),
        });
    }
    if samples < 2 {
        return Err(Error::InvalidParameter {
            field: "samples",
            reason: format!("need at least 2 samples, got {samples}"),
        });
    }
    kernel.domain().contains(x)?;
    let mut times = Vec::with_capacity(samples);
    let mut values = Vec::with_capacity(samples);
    let mut state = x.clone();
    let mut prev_t = 0.0;
    for i in 0..samples {
        let t = horizon * i as f64 / (samples - 1) as f64;
        state = flow.map(&state, t - prev_t)?;
        prev_t = t;
        kernel.domain().contains(&state).map_err(|e| Error::DomainViolation {
            constraint: format!("trajectory left the kernel domain at t = {t}: {e}"),
        })?;
        times.push(t);
        values.push(kernel.eval(&state, &state)?.re);
    }
    let slack = 1e-10 * values[0].abs().max(1.0);
    let monotone_nonincreasing = values.windows(2).all(|w| w[1] <= w[0] + slack);
    Ok(LyapunovReport {
        times,
        values,
        monotone_nonincreasing,
    })
}

/// 1-D transport problem: field b(t, x), initial datum u0(x), and the RK4
/// step for characteristic integration.
#[derive(Debug, Clone)]
pub struct TransportProblem {
    b: Expr,
    u0: Expr,
    pub step: f64,
    pub b_src: String,
    pub u0_src: String,
}

impl TransportProblem {
    pub fn new(b_src: &str, u0_src: &str, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidParameter {
                field: "step",
                reason: format!("integrator step must be positive, got {step}"),
            });
        }
        Ok(TransportProblem {
            b: Expr::parse(b_src, &["t", "x"])?,
            u0: Expr::parse(u0_src, &["x"])?,
            step,
            b_src: b_src.to_string(),
            u0_src: u0_src.to_string(),
        })
    }
}

/// Solve the 1-D transport equation du/dt - b(t,x) du/dx = 0 by the
/// characteristics representation u(t, x) = u0(chi_t(x)), where chi solves
/// d/ds chi = b(s, chi) forward from chi_0 = x. Divergence reports carry
/// the index of the offending grid point.
pub fn transport_solve(problem: &TransportProblem, t: f64, xs: &[f64]) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            field: "t",
            reason: format!("time must be nonnegative, got {t}"),
        });
    }
    let mut out = Vec::with_capacity(xs.len());
    for (idx, &x0) in xs.iter().enumerate() {
        let chi = integrate_characteristic(problem, t, x0).map_err(|e| Error::AtomEval {
            index: idx,
            source: Box::new(e),
        })?;
        out.push(problem.u0.eval(&[chi]));
    }
    Ok(out)
}

fn integrate_characteristic(problem: &TransportProblem, t: f64, x0: f64) -> Result<f64> {
    let mut y = x0;
    let mut s = 0.0;
    while s < t {
        let h = problem.step.min(t - s);
        let k1 = problem.b.eval(&[s, y]);
        let k2 = problem.b.eval(&[s + 0.5 * h, y + 0.5 * h * k1]);
        let k3 = problem.b.eval(&[s + 0.5 * h, y + 0.5 * h * k2]);
        let k4 = problem.b.eval(&[s + h, y + h * k3]);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += h;
        if !y.is_finite() || y.abs() > DIVERGENCE_GUARD {
            return Err(Error::Divergence { t: s });
        }
    }
    Ok(y)
}
