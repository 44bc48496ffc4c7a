use crate::error::{Error, Result};
use crate::linalg::C64;

/// A point of the space a kernel or map acts on. Real vectors cover the
/// Euclidean and interval domains, a single complex scalar covers the open
/// unit disc, and a 1-based index covers finite sets.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Real(Vec<f64>),
    Complex(C64),
    Index(usize),
}

impl Point {
    pub fn real(coords: &[f64]) -> Self {
        Point::Real(coords.to_vec())
    }

    pub fn scalar(x: f64) -> Self {
        Point::Real(vec![x])
    }

    pub fn disc(re: f64, im: f64) -> Self {
        Point::Complex(C64::new(re, im))
    }

    pub fn as_real(&self) -> Result<&[f64]> {
        match self {
            Point::Real(v) => Ok(v),
            _ => Err(Error::DomainViolation {
                constraint: format!("expected a real vector point, got {self:?}"),
            }),
        }
    }

    pub fn as_complex(&self) -> Result<C64> {
        match self {
            Point::Complex(z) => Ok(*z),
            _ => Err(Error::DomainViolation {
                constraint: format!("expected a complex scalar point, got {self:?}"),
            }),
        }
    }

    pub fn as_index(&self) -> Result<usize> {
        match self {
            Point::Index(i) => Ok(*i),
            _ => Err(Error::DomainViolation {
                constraint: format!("expected a finite-set index point, got {self:?}"),
            }),
        }
    }

    /// Euclidean distance between points of the same kind. Finite-set indices
    /// are 0 when equal and 1 when different (discrete metric).
    pub fn distance(&self, other: &Point) -> Result<f64> {
        match (self, other) {
            (Point::Real(a), Point::Real(b)) => {
                if a.len() != b.len() {
                    return Err(Error::DimensionMismatch {
                        expected: a.len(),
                        got: b.len(),
                    });
                }
                Ok(a.iter()
                    .zip(b)
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum::<f64>()
                    .sqrt())
            }
            (Point::Complex(a), Point::Complex(b)) => Ok((a - b).norm()),
            (Point::Index(a), Point::Index(b)) => Ok(if a == b { 0.0 } else { 1.0 }),
            _ => Err(Error::DomainViolation {
                constraint: format!("cannot compare points of different kinds: {self:?} vs {other:?}"),
            }),
        }
    }
}

/// Domain descriptor attached to each kernel. Membership is enforced eagerly:
/// evaluation outside the domain is an error, never a clamped value.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// All of R^n.
    Euclidean(usize),
    /// A 1-D interval; `open` excludes the endpoints.
    Interval { lo: f64, hi: f64, open: bool },
    /// The open unit disc in the complex plane.
    UnitDisc,
    /// The finite set {1, ..., n}.
    FiniteSet(usize),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Euclidean(n) => *n,
            Domain::Interval { .. } => 1,
            Domain::UnitDisc => 1,
            Domain::FiniteSet(_) => 1,
        }
    }

    pub fn contains(&self, p: &Point) -> Result<()> {
        match self {
            Domain::Euclidean(n) => {
                let v = p.as_real()?;
                if v.len() != *n {
                    return Err(Error::DimensionMismatch {
                        expected: *n,
                        got: v.len(),
                    });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::DomainViolation {
                        constraint: "coordinates must be finite".into(),
                    });
                }
                Ok(())
            }
            Domain::Interval { lo, hi, open } => {
                let v = p.as_real()?;
                if v.len() != 1 {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        got: v.len(),
                    });
                }
                let x = v[0];
                let inside = if *open { x > *lo && x < *hi } else { x >= *lo && x <= *hi };
                if !inside {
                    let brackets = if *open { ("(", ")") } else { ("[", "]") };
                    return Err(Error::DomainViolation {
                        constraint: format!(
                            "x = {x} is outside {}{lo}, {hi}{}",
                            brackets.0, brackets.1
                        ),
                    });
                }
                Ok(())
            }
            Domain::UnitDisc => {
                let z = p.as_complex()?;
                if !(z.norm() < 1.0) {
                    return Err(Error::DomainViolation {
                        constraint: format!("|z| = {} is not < 1", z.norm()),
                    });
                }
                Ok(())
            }
            Domain::FiniteSet(n) => {
                let i = p.as_index()?;
                if i == 0 || i > *n {
                    return Err(Error::DomainViolation {
                        constraint: format!("index {i} is outside 1..={n}"),
                    });
                }
                Ok(())
            }
        }
    }
}
