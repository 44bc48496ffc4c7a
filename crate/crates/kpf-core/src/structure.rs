//! Structural relations measured through kernel embeddings: symmetry
//! commutators on the transfer side, symmetry checks on the composition
//! side, and factor-map intertwining defects.

use crate::dynamics::DiscreteMap;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::C64;
use crate::operators::{embed_eval, pf_apply, AtomicMeasure};
use crate::point::{Domain, Point};
use crate::sampling::domain_probes;

/// Residual of an operator-commutation relation measured at probe points.
#[derive(Debug, Clone)]
pub struct CommutationReport {
    pub max_defect: f64,
    pub probes_used: usize,
    pub pass: bool,
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter {
            field: "tol",
            reason: format!("tolerance must be nonnegative, got {tol}"),
        });
    }
    Ok(())
}

/// Anchors plus 20 quasi-random points of the domain. Anchor sets that
/// contain every image affected by a relation make violations visible.
fn with_default_probes(domain: &Domain, anchor_sets: &[&[Point]]) -> Vec<Point> {
    let mut anchors: Vec<Point> = Vec::new();
    for set in anchor_sets {
        anchors.extend_from_slice(set);
    }
    let mut probes = anchors.clone();
    probes.extend(domain_probes(domain, &anchors, 20, 0));
    probes
}

/// Worst probe difference between pushing a measure through psi-after-f and
/// f-after-psi. Both compositions act atom by atom, so a genuinely commuting
/// pair leaves only roundoff. Callers wanting to certify the pointwise
/// relation first should run `dynamics::check_relation`; running without it
/// measures the violation instead.
pub fn symmetry_commutator(
    kernel: &Kernel,
    f: &DiscreteMap,
    psi: &DiscreteMap,
    measure: &AtomicMeasure,
    probes: Option<&[Point]>,
    tol: f64,
) -> Result<CommutationReport> {
    check_tol(tol)?;
    let f_then_psi = pf_apply(psi, &pf_apply(f, measure)?)?;
    let psi_then_f = pf_apply(f, &pf_apply(psi, measure)?)?;
    let default_probes;
    let probe_set: &[Point] = match probes {
        Some(p) => {
            if p.is_empty() {
                return Err(Error::InvalidParameter {
                    field: "probes",
                    reason: "probe set must not be empty".into(),
                });
            }
            p
        }
        None => {
            default_probes = with_default_probes(
                kernel.domain(),
                &[&measure.atoms, &f_then_psi.atoms, &psi_then_f.atoms],
            );
            &default_probes
        }
    };
    let mut max_defect = 0.0_f64;
    for y in probe_set {
        let a = embed_eval(&f_then_psi, kernel, y)?;
        let b = embed_eval(&psi_then_f, kernel, y)?;
        max_defect = max_defect.max((a - b).norm());
    }
    Ok(CommutationReport {
        max_defect,
        probes_used: probe_set.len(),
        pass: max_defect <= tol,
    })
}

/// Worst probe difference of the composed observables g(psi(f(x))) and
/// g(f(psi(x))). The composition-operator counterpart of
/// `symmetry_commutator`.
pub fn koopman_symmetry_check<G>(
    f: &DiscreteMap,
    psi: &DiscreteMap,
    g: G,
    probes: &[Point],
    tol: f64,
) -> Result<CommutationReport>
where
    G: Fn(&Point) -> Result<C64>,
{
    check_tol(tol)?;
    if probes.is_empty() {
        return Err(Error::InvalidParameter {
            field: "probes",
            reason: "probe set must not be empty".into(),
        });
    }
    let mut max_defect = 0.0_f64;
    for x in probes {
        let a = g(&psi.apply(&f.apply(x)?)?)?;
        let b = g(&f.apply(&psi.apply(x)?)?)?;
        max_defect = max_defect.max((a - b).norm());
    }
    Ok(CommutationReport {
        max_defect,
        probes_used: probes.len(),
        pass: max_defect <= tol,
    })
}

/// Worst probe difference between transporting a measure by pi-after-f and
/// by F-after-pi, embedded against the factor-space kernel `k_y`. `k_x`
/// certifies the source measure; probes live in the factor space.
#[allow(clippy::too_many_arguments)]
pub fn factor_intertwiner(
    k_x: &Kernel,
    k_y: &Kernel,
    f: &DiscreteMap,
    pi: &DiscreteMap,
    f_factor: &DiscreteMap,
    measure: &AtomicMeasure,
    probes: Option<&[Point]>,
    tol: f64,
) -> Result<CommutationReport> {
    check_tol(tol)?;
    for (i, atom) in measure.atoms.iter().enumerate() {
        k_x.domain().contains(atom).map_err(|e| Error::AtomEval {
            index: i,
            source: Box::new(e),
        })?;
    }
    let projected = pf_apply(pi, measure)?;
    let upper = pf_apply(pi, &pf_apply(f, measure)?)?;
    let lower = pf_apply(f_factor, &projected)?;
    for m in [&projected, &upper, &lower] {
        for (i, atom) in m.atoms.iter().enumerate() {
            k_y.domain().contains(atom).map_err(|e| Error::AtomEval {
                index: i,
                source: Box::new(e),
            })?;
        }
    }
    let default_probes;
    let probe_set: &[Point] = match probes {
        Some(p) => {
            if p.is_empty() {
                return Err(Error::InvalidParameter {
                    field: "probes",
                    reason: "probe set must not be empty".into(),
                });
            }
            p
        }
        None => {
            default_probes = with_default_probes(
                k_y.domain(),
                &[&projected.atoms, &upper.atoms, &lower.atoms],
            );
            &default_probes
        }
    };
    let mut max_defect = 0.0_f64;
    for y in probe_set {
        let a = embed_eval(&upper, k_y, y)?;
        let b = embed_eval(&lower, k_y, y)?;
        max_defect = max_defect.max((a - b).norm());
    }
    Ok(CommutationReport {
        max_defect,
        probes_used: probe_set.len(),
        pass: max_defect <= tol,
    })
}
