//! End-to-end acceptance checks for the whole toolkit.
//!
//! Each test covers one headline guarantee, prints a single scoreboard line
//! `acceptance NN <name>: PASS|FAIL (details)`, and then asserts. Run with
//! `cargo test -p kpf-cli --test acceptance -- --nocapture` to see the
//! scoreboard; tolerances are pinned in the assertions, not configurable.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use kpf_cli::report::fmt_f64;
use kpf_core::dynamics::{DiscreteMap, Flow, VectorField};
use kpf_core::kernels::Kernel;
use kpf_core::operators::{
    embed_eval, koopman_eval, norm_bound_estimate, pair, pf_apply, pf_project, rep_matrix_discrete,
    rep_matrix_linear, rkhs_norm, spectrum, AtomicMeasure,
};
use kpf_core::sampling::domain_probes;
use kpf_core::semigroups::{
    generator_identity_check, growth_bound, path_integral, pf_generator_section,
    pf_semigroup_apply, transport_solve, TransportProblem,
};
use kpf_core::structure::{factor_intertwiner, symmetry_commutator};
use kpf_core::{C64, Domain, Point};

// ------------------------------------------------------------------
// Scoreboard plumbing
// ------------------------------------------------------------------

struct Criterion {
    label: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new(label: &'static str) -> Self {
        Criterion {
            label,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, detail: String) {
        if !ok {
            self.failures.push(detail);
        }
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    fn finish(self) {
        let verdict = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("acceptance {}: {} ({})", self.label, verdict, self.notes.join(", "));
        assert!(
            self.failures.is_empty(),
            "acceptance {} failed:\n{}",
            self.label,
            self.failures.join("\n")
        );
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn random_complex_weight(rng: &mut ChaCha8Rng) -> C64 {
    let r = rng.gen_range(0.3..1.2);
    let th = rng.gen_range(0.0..std::f64::consts::TAU);
    C64::new(r * th.cos(), r * th.sin())
}

/// A random planar map drawn from the closed-form families.
fn random_planar_map(rng: &mut ChaCha8Rng) -> DiscreteMap {
    match rng.gen_range(0..4) {
        0 => DiscreteMap::rotation(rng.gen_range(-3.0..3.0)),
        1 => DiscreteMap::translation(&[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]),
        2 => DiscreteMap::scaling(rng.gen_range(0.3..2.0), 2),
        _ => {
            let m = DMatrix::from_fn(2, 2, |i, j| {
                (if i == j { 1.5 } else { 0.0 }) + rng.gen_range(-0.4..0.4)
            });
            DiscreteMap::linear(m).expect("square matrix")
        }
    }
}

fn random_planar_measure(rng: &mut ChaCha8Rng, max_atoms: usize) -> AtomicMeasure {
    let n = rng.gen_range(1..=max_atoms);
    let atoms: Vec<Point> = (0..n)
        .map(|_| Point::real(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]))
        .collect();
    let weights: Vec<C64> = (0..n).map(|_| random_complex_weight(rng)).collect();
    AtomicMeasure::new(atoms, weights).expect("matching lengths")
}

// ------------------------------------------------------------------
// 01: pushforward composition and inverse laws are exact on atoms
// ------------------------------------------------------------------

#[test]
fn t01_pushforward_composition_and_inverse_are_exact_on_atoms() {
    let mut cr = Criterion::new("01 pushforward-composition-inverse");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let started = Instant::now();

    for trial in 0..100 {
        // Composition: applying g then f must be bit-identical to applying
        // the composed map once, for arbitrary closed-form maps.
        let f = random_planar_map(&mut rng);
        let g = random_planar_map(&mut rng);
        let mu = random_planar_measure(&mut rng, 5);
        let seq = pf_apply(&f, &pf_apply(&g, &mu).unwrap()).unwrap();
        let fused = pf_apply(&DiscreteMap::compose(f.clone(), g.clone()), &mu).unwrap();
        cr.require(
            seq.atoms == fused.atoms && seq.weights == fused.weights,
            format!("trial {trial}: composed pushforward differs from sequential application"),
        );

        // Inverse: families whose inverse round-trips exactly in floating
        // point (integer translations on a dyadic grid, powers-of-two
        // scalings, index permutations).
        let (inv_map, nu) = match rng.gen_range(0..3) {
            0 => {
                let shift = [
                    rng.gen_range(-4..=4) as f64,
                    rng.gen_range(-4..=4) as f64,
                ];
                let n = rng.gen_range(1..=5);
                let atoms: Vec<Point> = (0..n)
                    .map(|_| {
                        Point::real(&[
                            rng.gen_range(-8192..=8192) as f64 / 1024.0,
                            rng.gen_range(-8192..=8192) as f64 / 1024.0,
                        ])
                    })
                    .collect();
                let weights = (0..n).map(|_| random_complex_weight(&mut rng)).collect();
                (
                    DiscreteMap::translation(&shift),
                    AtomicMeasure::new(atoms, weights).unwrap(),
                )
            }
            1 => {
                let pow: i32 = *[-3, -2, -1, 1, 2, 3].choose(&mut rng).unwrap();
                (
                    DiscreteMap::scaling(2.0f64.powi(pow), 2),
                    random_planar_measure(&mut rng, 5),
                )
            }
            _ => {
                let n = rng.gen_range(2..=5);
                let mut sigma: Vec<usize> = (1..=n).collect();
                sigma.shuffle(&mut rng);
                let atoms: Vec<Point> = (0..3)
                    .map(|_| Point::Index(rng.gen_range(1..=n)))
                    .collect();
                let weights = (0..3).map(|_| random_complex_weight(&mut rng)).collect();
                (
                    DiscreteMap::permutation(sigma).unwrap(),
                    AtomicMeasure::new(atoms, weights).unwrap(),
                )
            }
        };
        let back = pf_apply(&inv_map.inverse().unwrap(), &pf_apply(&inv_map, &nu).unwrap()).unwrap();
        cr.require(
            back.atoms == nu.atoms && back.weights == nu.weights,
            format!("trial {trial}: inverse pushforward failed to restore the measure bitwise"),
        );
    }

    let elapsed = started.elapsed().as_secs_f64();
    cr.require(elapsed < 1.0, format!("took {elapsed:.3}s, budget 1s"));
    cr.note("100 random (f, g, mu) triples, all bitwise".to_string());
    cr.note(format!("{elapsed:.3}s"));
    cr.finish();
}

// ------------------------------------------------------------------
// 02: the composition operator is dual to the pushforward
// ------------------------------------------------------------------

#[test]
fn t02_composition_operator_is_dual_to_pushforward() {
    let mut cr = Criterion::new("02 adjoint-duality");
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let started = Instant::now();
    let gauss = Kernel::gaussian(0.8, 2).unwrap();
    let szego = Kernel::szego();
    let mut max_defect: f64 = 0.0;

    for trial in 0..100 {
        let defect = if trial % 3 == 2 {
            // Hardy-space flavor: disc automorphisms acting on disc atoms.
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let ph = rng.gen_range(0.0..std::f64::consts::TAU);
            let ra = rng.gen_range(0.0..0.6);
            let f = DiscreteMap::mobius(
                C64::new(th.cos(), th.sin()),
                C64::new(ra * ph.cos(), ra * ph.sin()),
            )
            .unwrap();
            let disc_measure = |rng: &mut ChaCha8Rng| {
                let n = rng.gen_range(1..=5);
                let atoms: Vec<Point> = (0..n)
                    .map(|_| {
                        let r = 0.9 * rng.gen_range(0.0f64..1.0).sqrt();
                        let t = rng.gen_range(0.0..std::f64::consts::TAU);
                        Point::disc(r * t.cos(), r * t.sin())
                    })
                    .collect();
                let weights = (0..n).map(|_| random_complex_weight(rng)).collect();
                AtomicMeasure::new(atoms, weights).unwrap()
            };
            let mu = disc_measure(&mut rng);
            let nu = disc_measure(&mut rng);
            let g = |p: &Point| embed_eval(&nu, &szego, p);
            let lhs = pair(|x: &Point| koopman_eval(&f, g, x), &mu).unwrap();
            let rhs = pair(g, &pf_apply(&f, &mu).unwrap()).unwrap();
            (lhs - rhs).norm()
        } else {
            let f = random_planar_map(&mut rng);
            let mu = random_planar_measure(&mut rng, 5);
            let nu = random_planar_measure(&mut rng, 5);
            let g = |p: &Point| embed_eval(&nu, &gauss, p);
            let lhs = pair(|x: &Point| koopman_eval(&f, g, x), &mu).unwrap();
            let rhs = pair(g, &pf_apply(&f, &mu).unwrap()).unwrap();
            (lhs - rhs).norm()
        };
        max_defect = max_defect.max(defect);
        cr.require(
            defect <= 1e-12,
            format!("trial {trial}: duality defect {defect:.3e} exceeds 1e-12"),
        );
    }

    let elapsed = started.elapsed().as_secs_f64();
    cr.require(elapsed < 1.0, format!("took {elapsed:.3}s, budget 1s"));
    cr.note(format!("100 triples, max defect {max_defect:.3e}"));
    cr.note(format!("{elapsed:.3}s"));
    cr.finish();
}

// ------------------------------------------------------------------
// 03: translations act isometrically under a translation-invariant kernel
// ------------------------------------------------------------------

#[test]
fn t03_translation_invariant_kernel_gives_an_isometry() {
    let mut cr = Criterion::new("03 translation-isometry");
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let kernel = Kernel::gaussian(0.8, 2).unwrap();
    let mut max_rel: f64 = 0.0;

    for trial in 0..50 {
        // Atoms kept apart so the quadratic form stays well away from zero
        // and the relative comparison is meaningful.
        let n = rng.gen_range(1..=6);
        let mut atoms: Vec<Point> = Vec::new();
        while atoms.len() < n {
            let cand = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let ok = atoms.iter().all(|p| match p {
                Point::Real(v) => {
                    let dx = v[0] - cand[0];
                    let dy = v[1] - cand[1];
                    (dx * dx + dy * dy).sqrt() > 0.5
                }
                _ => true,
            });
            if ok {
                atoms.push(Point::real(&cand));
            }
        }
        let weights: Vec<C64> = (0..n).map(|_| random_complex_weight(&mut rng)).collect();
        let mu = AtomicMeasure::new(atoms, weights).unwrap();
        let f = DiscreteMap::translation(&[
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ]);

        let before = rkhs_norm(&mu, &kernel).unwrap();
        let after = rkhs_norm(&pf_apply(&f, &mu).unwrap(), &kernel).unwrap();
        let rel = (after - before).abs() / before;
        max_rel = max_rel.max(rel);
        cr.require(
            rel <= 1e-10,
            format!("trial {trial}: relative norm defect {rel:.3e} exceeds 1e-10"),
        );
    }

    // Certificate side: the estimated operator norm on a sampled span must
    // come out as 1 for a translation.
    let domain = Domain::Euclidean(2);
    let anchors = [Point::real(&[0.0, 0.0]), Point::real(&[1.0, -1.0])];
    let points = domain_probes(&domain, &anchors, 25, 3);
    let f = DiscreteMap::translation(&[0.7, -0.3]);
    let report = norm_bound_estimate(&kernel, &f, &points, None).unwrap();
    cr.require(
        (report.bound - 1.0).abs() <= 1e-8,
        format!("norm bound {:.12} is not 1 within 1e-8", report.bound),
    );
    cr.note(format!("50 measures, max relative defect {max_rel:.3e}"));
    cr.note(format!("norm bound {:.12}", report.bound));
    cr.finish();
}

// ------------------------------------------------------------------
// 04: disc-automorphism norm estimates respect the closed-form ceiling
// ------------------------------------------------------------------

#[test]
fn t04_disc_automorphism_norm_bounds_approach_the_closed_form() {
    let mut cr = Criterion::new("04 hardy-automorphism-bound");
    let started = Instant::now();
    let szego = Kernel::szego();
    let phi = DiscreteMap::mobius(c(1.0), c(0.5)).unwrap();
    // phi(0) = -0.5, so the squared-norm ceiling is (1 + 0.5)/(1 - 0.5) = 3.
    let ceiling = 3.0;

    let dict = domain_probes(&Domain::UnitDisc, &[], 200, 0);
    let mut bounds = Vec::new();
    for &n in &[25usize, 50, 100, 200] {
        // A shared absolute regularizer keeps the nested estimates exactly
        // comparable: a larger dictionary can only enlarge the search span.
        let report = norm_bound_estimate(&szego, &phi, &dict[..n], Some(1e-9)).unwrap();
        bounds.push((n, report.bound));
    }
    for w in bounds.windows(2) {
        cr.require(
            w[1].1 >= w[0].1 - 1e-12,
            format!(
                "bound decreased between n = {} ({:.12}) and n = {} ({:.12})",
                w[0].0, w[0].1, w[1].0, w[1].1
            ),
        );
    }
    for &(n, b) in &bounds {
        cr.require(
            b <= ceiling + 1e-8,
            format!("bound {b:.12} at n = {n} exceeds the ceiling {ceiling}"),
        );
    }

    // The pulled-back kernel inherits rotation invariance through the
    // conjugated map phi^-1 . rho . phi.
    let pulled = Kernel::pullback(szego.clone(), phi.clone(), phi.inverse().unwrap()).unwrap();
    let rho = DiscreteMap::mobius(C64::new(0.9f64.cos(), 0.9f64.sin()), c(0.0)).unwrap();
    let conjugated = DiscreteMap::compose(
        phi.inverse().unwrap(),
        DiscreteMap::compose(rho, phi.clone()),
    );
    let probes = domain_probes(&Domain::UnitDisc, &[], 40, 7);
    let inv = pulled.check_invariance(&conjugated, &probes, 1e-10).unwrap();
    cr.require(
        inv.pass && inv.max_defect <= 1e-10,
        format!("pullback invariance defect {:.3e} exceeds 1e-10", inv.max_defect),
    );

    let elapsed = started.elapsed().as_secs_f64();
    cr.require(elapsed < 10.0, format!("took {elapsed:.3}s, budget 10s"));
    let tail: Vec<String> = bounds.iter().map(|(n, b)| format!("n={n}: {b:.6}")).collect();
    cr.note(tail.join(" <= "));
    cr.note(format!("invariance defect {:.3e}", inv.max_defect));
    cr.note(format!("{elapsed:.3}s"));
    cr.finish();
}

// ------------------------------------------------------------------
// 05: the growth bound recovers linear decay and growth rates exactly
// ------------------------------------------------------------------

#[test]
fn t05_growth_bound_recovers_linear_decay_and_growth_rates() {
    let mut cr = Criterion::new("05 growth-bound-exactness");
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let started = Instant::now();
    let kernel = Kernel::linearform(DMatrix::identity(1, 1)).unwrap();
    let points = [
        Point::scalar(0.5),
        Point::scalar(1.0),
        Point::scalar(-0.7),
        Point::scalar(2.0),
    ];

    for &rate in &[-1.0f64, 1.0] {
        let field = VectorField::linear(DMatrix::from_element(1, 1, rate)).unwrap();
        let cert = growth_bound(&kernel, &field, &points, None).unwrap();
        cr.require(
            (cert.bound - rate).abs() <= 1e-10,
            format!("rate {rate}: bound {:.15} is off by more than 1e-10", cert.bound),
        );
        cr.note(format!("rate {rate}: bound {:.12}", cert.bound));

        // Derivative soundness on the sampled span: a one-sided second-order
        // difference of t -> |K_t mu|^2 at t = 0 must respect 2 * bound.
        let flow = Flow::new(field, 1e-5).unwrap();
        let h = 1e-3;
        let mut max_gap: f64 = 0.0;
        for _ in 0..10 {
            let weights: Vec<f64> = loop {
                let w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.2..1.5)).collect();
                let signed: f64 = w
                    .iter()
                    .zip(&[0.5, 1.0, -0.7, 2.0])
                    .map(|(wi, xi)| wi * xi)
                    .sum();
                if signed.abs() > 0.3 {
                    break w;
                }
            };
            let mu = AtomicMeasure::from_real_weights(points.to_vec(), &weights).unwrap();
            let sq = |t: f64| -> f64 {
                let moved = pf_semigroup_apply(&flow, t, &mu).unwrap();
                let nrm = rkhs_norm(&moved, &kernel).unwrap();
                nrm * nrm
            };
            let (f0, f1, f2) = (sq(0.0), sq(h), sq(2.0 * h));
            let fd = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
            cr.require(
                fd <= 2.0 * (cert.bound + 1e-4) * f0,
                format!("rate {rate}: sampled derivative {fd:.6e} violates 2*bound*|mu|^2"),
            );
            max_gap = max_gap.max((fd / f0 - 2.0 * cert.bound).abs());
        }
        cr.require(
            max_gap <= 1e-4,
            format!("rate {rate}: derivative mismatch {max_gap:.3e} exceeds 1e-4"),
        );
    }

    let elapsed = started.elapsed().as_secs_f64();
    cr.require(elapsed < 1.0, format!("took {elapsed:.3}s, budget 1s"));
    cr.note(format!("{elapsed:.3}s"));
    cr.finish();
}

// ------------------------------------------------------------------
// 06: representation matrices match brute-force coordinates
// ------------------------------------------------------------------

/// Solve B C = W column by column with LU; B carries basis-function values
/// at probe points, W the values of the operator images.
fn coordinates_by_value_matching(b: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    b.clone().lu().solve(w).expect("probe matrix is invertible")
}

#[test]
fn t06_representation_matrices_match_brute_force_coordinates() {
    let mut cr = Criterion::new("06 representation-matrices");
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut max_discrete: f64 = 0.0;
    let mut max_linear: f64 = 0.0;

    for trial in 0..20 {
        let n = rng.gen_range(2..=4usize);
        // Diagonally dominant basis matrix: comfortably invertible without
        // being anywhere near orthogonal or symmetric.
        let m = DMatrix::from_fn(n, n, |i, j| {
            (if i == j { n as f64 } else { 0.0 }) + rng.gen_range(-0.3..0.3)
        });

        // Finite-set dynamics: a random permutation of the index set.
        let mut sigma: Vec<usize> = (1..=n).collect();
        sigma.shuffle(&mut rng);
        let discrete = rep_matrix_discrete(&m, &sigma).unwrap();
        let kernel = Kernel::discrete(m.clone()).unwrap();
        // Value table of the index sections over the whole finite set.
        let sec_values = DMatrix::from_fn(n, n, |l, j| {
            kernel
                .eval(&Point::Index(j + 1), &Point::Index(l + 1))
                .unwrap()
                .re
        });
        // Basis functions are M-combinations of sections; the operator sends
        // the section at j to the section at sigma(j).
        let basis_values = &sec_values * &m;
        let mut image_values = DMatrix::zeros(n, n);
        for i in 0..n {
            for l in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += m[(j, i)] * sec_values[(l, sigma[j] - 1)];
                }
                image_values[(l, i)] = acc;
            }
        }
        let oracle = coordinates_by_value_matching(&basis_values, &image_values);
        let defect = (&oracle - &discrete.rep).norm() / discrete.rep.norm().max(1.0);
        max_discrete = max_discrete.max(defect);
        cr.require(
            defect <= 1e-10,
            format!("trial {trial}: finite-set oracle deviates by {defect:.3e}"),
        );

        // Linear dynamics x -> Ax against the bilinear-form kernel carrying
        // the same basis matrix.
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let linear = rep_matrix_linear(&m, &a).unwrap();
        cr.require(
            linear.koopman_rep == a.transpose(),
            format!("trial {trial}: composition-operator matrix is not exactly A^T"),
        );
        let form_kernel = Kernel::linearform(m.clone()).unwrap();
        let probes: Vec<Vec<f64>> = (0..n)
            .map(|l| {
                (0..n)
                    .map(|i| (if i == l { 1.0 } else { 0.0 }) + rng.gen_range(-0.3..0.3))
                    .collect()
            })
            .collect();
        let eval_at = |x: &DMatrix<f64>, col: usize, probe: &[f64]| {
            let pt: Vec<f64> = (0..n).map(|r| x[(r, col)]).collect();
            form_kernel
                .eval(&Point::real(&pt), &Point::real(probe))
                .unwrap()
                .re
        };
        let basis_values =
            DMatrix::from_fn(n, n, |l, i| eval_at(&m, i, &probes[l]));
        let am = &a * &m;
        let image_values =
            DMatrix::from_fn(n, n, |l, i| eval_at(&am, i, &probes[l]));
        let oracle = coordinates_by_value_matching(&basis_values, &image_values);
        let defect = (&oracle - &linear.pf_rep).norm() / linear.pf_rep.norm().max(1.0);
        max_linear = max_linear.max(defect);
        cr.require(
            defect <= 1e-10,
            format!("trial {trial}: linear-dynamics oracle deviates by {defect:.3e}"),
        );
    }

    cr.note(format!(
        "20 trials, finite-set defect {max_discrete:.3e}, linear defect {max_linear:.3e}"
    ));
    cr.note("composition matrices equal A^T bitwise".to_string());
    cr.finish();
}

// ------------------------------------------------------------------
// 07: projected spectra recover contraction rates
// ------------------------------------------------------------------

#[test]
fn t07_projected_spectra_recover_contraction_rates() {
    let mut cr = Criterion::new("07 spectrum-recovery");

    // Cubic polynomial kernel: the span of sections over six distinct
    // points carries the monomials up to degree three, so halving the line
    // exposes the rates 1, 1/2, 1/4, 1/8.
    let poly = Kernel::polynomial(3, 1).unwrap();
    let xs = [1.5, -1.5, 0.75, -0.75, 0.25, -0.25];
    let pairs: Vec<(Point, Point)> = xs
        .iter()
        .map(|&x| (Point::scalar(x), Point::scalar(0.5 * x)))
        .collect();
    let op = pf_project(&poly, &pairs, None).unwrap();
    let eigs = spectrum(&op).unwrap();
    let expected = [1.0, 0.5, 0.25, 0.125];
    for (k, want) in expected.iter().enumerate() {
        let got = eigs[k].value;
        cr.require(
            (got - c(*want)).norm() <= 1e-6,
            format!("eigenvalue {k}: got {got}, want {want} within 1e-6"),
        );
    }
    for (k, pair) in eigs.iter().enumerate().skip(4) {
        cr.require(
            pair.value.norm() <= 1e-6,
            format!("eigenvalue {k} should vanish, got modulus {:.3e}", pair.value.norm()),
        );
    }
    cr.note(format!(
        "cubic kernel spectrum [{:.6}, {:.6}, {:.6}, {:.6}]",
        eigs[0].value.re, eigs[1].value.re, eigs[2].value.re, eigs[3].value.re
    ));

    // Bilinear kernel in one dimension: the span is one-dimensional, so
    // x -> a x leaves exactly the rate a.
    let linear = Kernel::linearform(DMatrix::identity(1, 1)).unwrap();
    let a = 0.7;
    let pairs: Vec<(Point, Point)> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&x| (Point::scalar(x), Point::scalar(a * x)))
        .collect();
    let op = pf_project(&linear, &pairs, None).unwrap();
    let eigs = spectrum(&op).unwrap();
    cr.require(
        (eigs[0].value - c(a)).norm() <= 1e-10,
        format!("leading eigenvalue {} is not {a} within 1e-10", eigs[0].value),
    );
    for pair in &eigs[1..] {
        cr.require(
            pair.value.norm() <= 1e-8,
            format!("spurious eigenvalue of modulus {:.3e}", pair.value.norm()),
        );
    }
    cr.note(format!("bilinear kernel leading eigenvalue {:.12}", eigs[0].value.re));
    cr.finish();
}

// ------------------------------------------------------------------
// 08: generator sections, defect decay, and closed-orbit integrals
// ------------------------------------------------------------------

#[test]
fn t08_generator_sections_match_flow_differences() {
    let mut cr = Criterion::new("08 generator-identities");

    // Section values against one-sided second-order flow differences, for
    // two kernels and two vector fields.
    let kernels = [
        Kernel::gaussian(0.9, 2).unwrap(),
        Kernel::linearform(DMatrix::identity(2, 2)).unwrap(),
    ];
    let fields = [
        (
            "linear",
            VectorField::linear(DMatrix::from_row_slice(2, 2, &[-0.3, 1.0, -1.0, -0.2])).unwrap(),
        ),
        ("van-der-pol", VectorField::VanDerPol { mu: 1.0 }),
    ];
    let x = Point::real(&[0.4, -0.3]);
    let probes = [
        Point::real(&[0.8, 0.1]),
        Point::real(&[-0.5, 0.7]),
        Point::real(&[0.2, -0.9]),
        Point::real(&[1.2, 0.4]),
        Point::real(&[-1.0, -0.6]),
    ];
    let h = 1e-4;
    let mut worst_rel: f64 = 0.0;
    for kernel in &kernels {
        for (field_name, field) in &fields {
            let section = pf_generator_section(kernel, field, &x).unwrap();
            let flow = Flow::new(field.clone(), 1e-5).unwrap();
            let x1 = flow.map(&x, h).unwrap();
            let x2 = flow.map(&x, 2.0 * h).unwrap();
            let mut scale: f64 = 0.0;
            let mut gap: f64 = 0.0;
            for y in &probes {
                let exact = section.eval(y).unwrap();
                let k0 = kernel.eval(&x, y).unwrap().re;
                let k1 = kernel.eval(&x1, y).unwrap().re;
                let k2 = kernel.eval(&x2, y).unwrap().re;
                let fd = (-3.0 * k0 + 4.0 * k1 - k2) / (2.0 * h);
                scale = scale.max(exact.abs());
                gap = gap.max((fd - exact).abs());
            }
            let rel = gap / scale.max(1e-6);
            worst_rel = worst_rel.max(rel);
            cr.require(
                rel <= 1e-6,
                format!(
                    "kernel {} with field {field_name}: section vs flow difference defect {rel:.3e}",
                    kernel.id(),
                ),
            );
        }
    }
    cr.note(format!("section vs flow-difference rel defect {worst_rel:.3e}"));

    // First-order decay of the semigroup difference quotient against the
    // generator section, in the span norm.
    let kernel = Kernel::gaussian(0.9, 1).unwrap();
    let field = VectorField::linear(DMatrix::from_element(1, 1, -1.0)).unwrap();
    let flow = Flow::new(field, 1e-4).unwrap();
    let ladder = [1e-2, 1e-3, 1e-4];
    let report =
        generator_identity_check(&kernel, &flow, &Point::scalar(0.7), 1.0, &ladder).unwrap();
    cr.require(report.first_order, "difference quotients fail first-order decay".into());
    for r in &report.ratios {
        cr.require(
            (8.0..=12.0).contains(r),
            format!("defect ratio {r:.3} is outside [8, 12] per decade"),
        );
    }
    cr.note(format!(
        "defect ratios per decade {:?}",
        report.ratios.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>()
    ));

    // A full turn of the harmonic oscillator: the trajectory integral over
    // one period is invariant under the semigroup.
    let kernel = Kernel::gaussian(1.0, 2).unwrap();
    let flow = Flow::new(VectorField::HarmonicOscillator, 2e-3).unwrap();
    let x0 = Point::real(&[1.0, 0.0]);
    let period = std::f64::consts::TAU;
    let orbit = path_integral(&kernel, &flow, &x0, period, 256).unwrap();
    let moved = pf_semigroup_apply(&flow, 0.7, &orbit.measure).unwrap();
    let embed_probes = [
        Point::real(&[1.0, 0.0]),
        Point::real(&[0.0, 1.0]),
        Point::real(&[-1.0, 0.0]),
        Point::real(&[0.0, -1.0]),
        Point::real(&[0.5, 0.5]),
        Point::real(&[1.2, -0.3]),
        Point::real(&[0.0, 0.0]),
        Point::real(&[0.7, -0.7]),
    ];
    let mut orbit_defect: f64 = 0.0;
    for y in &embed_probes {
        let before = embed_eval(&orbit.measure, &kernel, y).unwrap();
        let after = embed_eval(&moved, &kernel, y).unwrap();
        orbit_defect = orbit_defect.max((after - before).norm());
    }
    cr.require(
        orbit_defect <= 1e-5,
        format!("closed-orbit pairing defect {orbit_defect:.3e} exceeds 1e-5"),
    );
    cr.note(format!("closed-orbit pairing defect {orbit_defect:.3e}"));
    cr.finish();
}

// ------------------------------------------------------------------
// 09: transport solutions match characteristics and satisfy the PDE
// ------------------------------------------------------------------

#[test]
fn t09_transport_solutions_match_characteristics() {
    let mut cr = Criterion::new("09 transport-closed-forms");
    let t = 0.8;
    let grid = |lo: f64, hi: f64| -> Vec<f64> {
        (0..200)
            .map(|i| lo + (hi - lo) * i as f64 / 199.0)
            .collect()
    };

    // Unit drift: u(t, x) = sin(x + t).
    let constant = TransportProblem::new("1", "sin(x)", 1e-3).unwrap();
    let xs = grid(-3.0, 3.0);
    let u = transport_solve(&constant, t, &xs).unwrap();
    let mut err_const: f64 = 0.0;
    for (x, v) in xs.iter().zip(&u) {
        err_const = err_const.max((v - (x + t).sin()).abs());
    }
    cr.require(
        err_const <= 1e-6,
        format!("unit drift: deviation {err_const:.3e} from sin(x + t) exceeds 1e-6"),
    );

    // Linear drift: u(t, x) = sin(x e^t).
    let dilation = TransportProblem::new("x", "sin(x)", 1e-3).unwrap();
    let xs = grid(-2.0, 2.0);
    let u = transport_solve(&dilation, t, &xs).unwrap();
    let mut err_dil: f64 = 0.0;
    for (x, v) in xs.iter().zip(&u) {
        err_dil = err_dil.max((v - (x * t.exp()).sin()).abs());
    }
    cr.require(
        err_dil <= 1e-6,
        format!("linear drift: deviation {err_dil:.3e} from sin(x e^t) exceeds 1e-6"),
    );
    cr.note(format!(
        "closed-form deviations {err_const:.3e} (unit drift), {err_dil:.3e} (linear drift)"
    ));

    // PDE residual u_t - b(t, x) u_x by central differences on both
    // problems over a 200-point grid.
    let delta = 1e-4;
    for (label, problem, lo, hi, b) in [
        ("unit drift", &constant, -3.0, 3.0, (|_x: f64| 1.0) as fn(f64) -> f64),
        ("linear drift", &dilation, -2.0, 2.0, (|x: f64| x) as fn(f64) -> f64),
    ] {
        let xs = grid(lo, hi);
        let xs_plus: Vec<f64> = xs.iter().map(|x| x + delta).collect();
        let xs_minus: Vec<f64> = xs.iter().map(|x| x - delta).collect();
        let u_tp = transport_solve(problem, t + delta, &xs).unwrap();
        let u_tm = transport_solve(problem, t - delta, &xs).unwrap();
        let u_xp = transport_solve(problem, t, &xs_plus).unwrap();
        let u_xm = transport_solve(problem, t, &xs_minus).unwrap();
        let mut residual: f64 = 0.0;
        for i in 0..xs.len() {
            let ut = (u_tp[i] - u_tm[i]) / (2.0 * delta);
            let ux = (u_xp[i] - u_xm[i]) / (2.0 * delta);
            residual = residual.max((ut - b(xs[i]) * ux).abs());
        }
        cr.require(
            residual <= 1e-4,
            format!("{label}: PDE residual {residual:.3e} exceeds 1e-4"),
        );
        cr.note(format!("{label} residual {residual:.3e}"));
    }
    cr.finish();
}

// ------------------------------------------------------------------
// 10: structure checks certify commutation and flag injected violations
// ------------------------------------------------------------------

struct CliRun {
    dir: tempfile::TempDir,
}

impl CliRun {
    fn new() -> Self {
        CliRun {
            dir: tempfile::tempdir().expect("create temp dir"),
        }
    }

    fn write(&self, name: &str, content: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, content).expect("write file");
        p
    }

    fn out(&self, name: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::create_dir_all(&p).expect("create out dir");
        p
    }

    fn kpf(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_kpf"))
            .args(args)
            .output()
            .expect("spawn CLI")
    }
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn report_field(out_dir: &std::path::Path, key: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(out_dir.join("report.json")).expect("read report");
    let v: serde_json::Value = serde_json::from_str(&text).expect("parse report");
    v[key].clone()
}

#[test]
fn t10_structure_checks_certify_and_flag() {
    let mut cr = Criterion::new("10 structure-defects");

    // Library side: a scaled rotation commutes with every rotation.
    let kernel = Kernel::gaussian(1.1, 2).unwrap();
    let f = DiscreteMap::compose(DiscreteMap::scaling(0.5, 2), DiscreteMap::rotation(0.9));
    let psi = DiscreteMap::rotation(0.4);
    let mu = AtomicMeasure::new(
        vec![Point::real(&[0.8, -0.2]), Point::real(&[-0.3, 0.5])],
        vec![C64::new(1.0, 0.3), C64::new(0.5, -0.2)],
    )
    .unwrap();
    let sym = symmetry_commutator(&kernel, &f, &psi, &mu, None, 1e-12).unwrap();
    cr.require(
        sym.pass && sym.max_defect <= 1e-12,
        format!("commuting pair defect {:.3e} exceeds 1e-12", sym.max_defect),
    );

    // Triangular dynamics factor exactly onto their first coordinate.
    let k_y = Kernel::gaussian(1.1, 1).unwrap();
    let tri =
        DiscreteMap::linear(DMatrix::from_row_slice(2, 2, &[0.6, 0.0, 0.8, 1.2])).unwrap();
    let pi = DiscreteMap::from_exprs(&["x1"], 2).unwrap();
    let factor = DiscreteMap::scaling(0.6, 1);
    let fac = factor_intertwiner(&kernel, &k_y, &tri, &pi, &factor, &mu, None, 1e-12).unwrap();
    cr.require(
        fac.pass && fac.max_defect <= 1e-12,
        format!("triangular factor defect {:.3e} exceeds 1e-12", fac.max_defect),
    );
    cr.note(format!(
        "library defects {:.3e} (symmetry), {:.3e} (factor)",
        sym.max_defect, fac.max_defect
    ));

    // CLI side: the same checks pass through the binary, and injected
    // violations come back with exit code 2 and a visible defect.
    let run = CliRun::new();
    let commuting = run.write(
        "commuting.json",
        r#"{
  "kernel": {"id": "gaussian", "params": {"sigma": 1.1, "dim": 2}},
  "map": {"id": "compose", "params": {
    "outer": {"id": "scaling", "params": {"factor": 0.5, "dim": 2}},
    "inner": {"id": "rotation", "params": {"angle": 0.9}}}},
  "symmetry": {"id": "rotation", "params": {"angle": 0.4}},
  "measure": {"atoms": [[0.8, -0.2], [-0.3, 0.5]], "weights": [[1.0, 0.3], [0.5, -0.2]]}
}"#,
    );
    let out_good = run.out("sym-good");
    let res = run.kpf(&[
        "check-symmetry",
        "--config",
        commuting.to_str().unwrap(),
        "--out",
        out_good.to_str().unwrap(),
        "--tol",
        "1e-12",
    ]);
    cr.require(
        exit_code(&res) == 0,
        format!(
            "commuting pair exited {} through the CLI: {}",
            exit_code(&res),
            String::from_utf8_lossy(&res.stderr)
        ),
    );

    let broken = run.write(
        "broken.json",
        r#"{
  "kernel": {"id": "gaussian", "params": {"sigma": 1.1, "dim": 2}},
  "map": {"id": "scaling", "params": {"factor": 1.7, "dim": 2}},
  "symmetry": {"id": "translation", "params": {"shift": [0.4, 0.0]}},
  "measure": {"atoms": [[0.8, -0.2]], "weights": [1.0]}
}"#,
    );
    let out_bad = run.out("sym-bad");
    let res = run.kpf(&[
        "check-symmetry",
        "--config",
        broken.to_str().unwrap(),
        "--out",
        out_bad.to_str().unwrap(),
        "--tol",
        "1e-3",
    ]);
    let defect = report_field(&out_bad, "max_defect").as_f64().unwrap_or(0.0);
    cr.require(
        exit_code(&res) == 2,
        format!("broken symmetry exited {} instead of 2", exit_code(&res)),
    );
    cr.require(
        defect > 1e-3,
        format!("broken symmetry defect {defect:.3e} is not above 1e-3"),
    );

    let factor_base = r#""kernel": {"id": "gaussian", "params": {"sigma": 1.1, "dim": 2}},
  "kernel_y": {"id": "gaussian", "params": {"sigma": 1.1, "dim": 1}},
  "map": {"id": "linear", "params": {"matrix": [[0.6, 0.0], [0.8, 1.2]]}},
  "projection": {"id": "exprs", "params": {"exprs": ["x1"], "dim": 2}},
  "measure": {"atoms": [[0.8, -0.2], [-0.3, 0.5]], "weights": [1.0, 0.5]}"#;
    let wrong_factor = run.write(
        "wrong-factor.json",
        &format!(
            "{{{factor_base}, \"factor_map\": {{\"id\": \"scaling\", \"params\": {{\"factor\": 0.75, \"dim\": 1}}}}}}"
        ),
    );
    let out_fac = run.out("fac-bad");
    let res = run.kpf(&[
        "check-factor",
        "--config",
        wrong_factor.to_str().unwrap(),
        "--out",
        out_fac.to_str().unwrap(),
        "--tol",
        "1e-3",
    ]);
    let fac_defect = report_field(&out_fac, "max_defect").as_f64().unwrap_or(0.0);
    cr.require(
        exit_code(&res) == 2,
        format!("broken factor exited {} instead of 2", exit_code(&res)),
    );
    cr.require(
        fac_defect > 1e-3,
        format!("broken factor defect {fac_defect:.3e} is not above 1e-3"),
    );
    cr.note(format!(
        "injected defects {defect:.3e} (symmetry), {fac_defect:.3e} (factor), both exit 2"
    ));
    cr.finish();
}

// ------------------------------------------------------------------
// 11: identical configurations produce byte-identical reports
// ------------------------------------------------------------------

#[test]
fn t11_cli_reports_are_deterministic() {
    let mut cr = Criterion::new("11 deterministic-reports");
    let run = CliRun::new();

    // A spectrum computation with irrational inputs: every float in the
    // report exercises the fixed-width formatting.
    let mut pairs_csv = String::from("x1,y1\n");
    for i in 0..6 {
        let x = (i as f64 + 1.0) / 3.0 - 1.2;
        pairs_csv.push_str(&format!("{},{}\n", fmt_f64(x), fmt_f64(0.5 * x)));
    }
    let pairs = run.write("pairs.csv", &pairs_csv);
    let config = run.write(
        "run.json",
        &format!(
            r#"{{
  "kernel": {{"id": "polynomial", "params": {{"degree": 3, "dim": 1}}}},
  "pairs": {}
}}"#,
            serde_json::to_string(pairs.to_str().unwrap()).unwrap()
        ),
    );

    let mut artifacts: Vec<(Vec<u8>, Vec<u8>, Vec<u8>)> = Vec::new();
    for name in ["first", "second"] {
        let out = run.out(name);
        let res = run.kpf(&[
            "spectrum",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        cr.require(
            exit_code(&res) == 0,
            format!(
                "spectrum run exited {}: {}",
                exit_code(&res),
                String::from_utf8_lossy(&res.stderr)
            ),
        );
        let report = std::fs::read(out.join("report.json")).expect("read report");
        let table = std::fs::read(out.join("eigenvalues.csv")).expect("read table");
        artifacts.push((report, table, res.stdout.clone()));
    }
    cr.require(
        artifacts[0].0 == artifacts[1].0,
        "report.json differs between identical runs".into(),
    );
    cr.require(
        artifacts[0].1 == artifacts[1].1,
        "eigenvalues.csv differs between identical runs".into(),
    );
    cr.require(
        artifacts[0].2 == artifacts[1].2,
        "stdout differs between identical runs".into(),
    );
    cr.note(format!(
        "report.json ({} bytes), eigenvalues.csv ({} bytes), stdout all byte-identical",
        artifacts[0].0.len(),
        artifacts[0].1.len()
    ));
    cr.finish();
}
