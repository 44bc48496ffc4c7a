//! Deterministic quasi-random sampling.
//!
//! Probe and dictionary points come from Halton sequences: low-discrepancy,
//! nested under prefix extension, and reproducible without carrying RNG
//! state. A `seed` shifts the start index of the sequence, which is how the
//! CLI exposes "different but reproducible" probe sets.

use crate::linalg::C64;
use crate::point::{Domain, Point};

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical-inverse (van der Corput) value of `index` in the given base.
/// `index` starts at 1; the value lies strictly inside (0, 1).
pub fn halton(index: u64, base: u32) -> f64 {
    debug_assert!(index >= 1);
    let b = base as f64;
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= b;
        r += f * (i % base as u64) as f64;
        i /= base as u64;
    }
    r
}

/// `n` points of the `dim`-dimensional Halton sequence in the open unit
/// cube, starting at index `seed + 1`.
pub fn unit_cube(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
    (0..n)
        .map(|i| {
            (0..dim)
                .map(|d| halton(seed + 1 + i as u64, PRIMES[d]))
                .collect()
        })
        .collect()
}

/// `n` quasi-uniform points of an axis-aligned box.
pub fn box_points(n: usize, lo: &[f64], hi: &[f64], seed: u64) -> Vec<Point> {
    let dim = lo.len();
    unit_cube(n, dim, seed)
        .into_iter()
        .map(|u| {
            Point::Real(
                u.iter()
                    .enumerate()
                    .map(|(d, &t)| lo[d] + (hi[d] - lo[d]) * t)
                    .collect(),
            )
        })
        .collect()
}

/// `n` quasi-uniform (area-uniform) points of the disc of radius `r_max`
/// centered at the origin. Prefixes of the sequence are nested.
pub fn disc_points(n: usize, r_max: f64, seed: u64) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let u1 = halton(seed + 1 + i as u64, 2);
            let u2 = halton(seed + 1 + i as u64, 3);
            let r = r_max * u1.sqrt();
            let theta = 2.0 * std::f64::consts::PI * u2;
            Point::Complex(C64::new(r * theta.cos(), r * theta.sin()))
        })
        .collect()
}

/// Quasi-random probe points inside a domain. For Euclidean domains the
/// probes fill the bounding box of `anchors` inflated by half its extent
/// (falling back to [-1, 1]^n when there are no anchors); interval domains
/// use their own range; finite sets enumerate every index.
pub fn domain_probes(domain: &Domain, anchors: &[Point], n: usize, seed: u64) -> Vec<Point> {
    match domain {
        Domain::Euclidean(dim) => {
            let mut lo = vec![f64::INFINITY; *dim];
            let mut hi = vec![f64::NEG_INFINITY; *dim];
            let mut seen = false;
            for p in anchors {
                if let Point::Real(v) = p {
                    if v.len() == *dim {
                        seen = true;
                        for d in 0..*dim {
                            lo[d] = lo[d].min(v[d]);
                            hi[d] = hi[d].max(v[d]);
                        }
                    }
                }
            }
            if !seen {
                lo = vec![-1.0; *dim];
                hi = vec![1.0; *dim];
            } else {
                for d in 0..*dim {
                    let span = (hi[d] - lo[d]).max(1.0);
                    lo[d] -= 0.5 * span;
                    hi[d] += 0.5 * span;
                }
            }
            box_points(n, &lo, &hi, seed)
        }
        Domain::Interval { lo, hi, .. } => {
            // Halton values are strictly interior, so open intervals are safe.
            unit_cube(n, 1, seed)
                .into_iter()
                .map(|u| Point::scalar(lo + (hi - lo) * u[0]))
                .collect()
        }
        Domain::UnitDisc => disc_points(n, 0.95, seed),
        Domain::FiniteSet(len) => (1..=*len).map(Point::Index).collect(),
    }
}
