//! Run configuration: one JSON object per invocation. Every command reads
//! the subset of fields it needs; unknown fields are rejected so typos fail
//! loudly. Relative file paths resolve against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use kpf_core::dynamics::{DiscreteMap, VectorField};
use kpf_core::kernels::Kernel;
use kpf_core::operators::AtomicMeasure;
use kpf_core::{C64, Domain, Point};

use crate::error::CliError;
use crate::ingest;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: Option<KernelSpec>,
    /// Codomain kernel for factor checks.
    pub kernel_y: Option<KernelSpec>,
    pub map: Option<MapSpec>,
    /// Candidate symmetry psi for check-symmetry.
    pub symmetry: Option<MapSpec>,
    /// Projection Pi for check-factor.
    pub projection: Option<MapSpec>,
    /// Factor dynamics F for check-factor.
    pub factor_map: Option<MapSpec>,
    pub conjugacy: Option<ConjugacySpec>,
    pub field: Option<FieldSpec>,
    pub points: Option<String>,
    pub pairs: Option<String>,
    pub trajectory: Option<String>,
    pub probes: Option<String>,
    pub measure: Option<MeasureSpec>,
    pub x0: Option<Vec<f64>>,
    pub horizon: Option<f64>,
    pub t: Option<f64>,
    pub step: Option<f64>,
    pub reg: Option<f64>,
    pub tol: Option<f64>,
    pub nodes: Option<usize>,
    pub samples: Option<usize>,
    pub h_ladder: Option<Vec<f64>>,
    pub b: Option<String>,
    pub u0: Option<String>,
    pub grid: Option<GridSpec>,
    pub weight_matrix: Option<Vec<Vec<f64>>>,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub permutation: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub id: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub id: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub id: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugacySpec {
    pub g: MapSpec,
    pub phi: MapSpec,
    pub phi_inv: MapSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub atoms: Vec<serde_json::Value>,
    pub weights: Vec<WeightSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug)]
pub struct LoadedConfig {
    pub run: RunConfig,
    /// Directory of the config file; anchors relative data paths.
    pub base_dir: PathBuf,
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::new(format!("cannot read config {}: {e}", path.display())))?;
    let run: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::new(format!("{}: config parse error: {e}", path.display())))?;
    let base_dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    Ok(LoadedConfig { run, base_dir })
}

impl LoadedConfig {
    pub fn resolve(&self, rel: &str) -> PathBuf {
        let p = Path::new(rel);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

fn params<T: serde::de::DeserializeOwned>(
    what: &str,
    id: &str,
    v: &serde_json::Value,
) -> Result<T, CliError> {
    serde_json::from_value(v.clone())
        .map_err(|e| CliError::new(format!("{what} `{id}`: bad params: {e}")))
}

fn no_params(what: &str, id: &str, v: &serde_json::Value) -> Result<(), CliError> {
    if v.is_null() || v.as_object().is_some_and(|o| o.is_empty()) {
        Ok(())
    } else {
        Err(CliError::new(format!("{what} `{id}` takes no params")))
    }
}

pub fn matrix_from(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    let nr = rows.len();
    if nr == 0 {
        return Err(CliError::new(format!("{what}: matrix must be non-empty")));
    }
    let nc = rows[0].len();
    if nc == 0 || rows.iter().any(|r| r.len() != nc) {
        return Err(CliError::new(format!(
            "{what}: matrix rows must be non-empty and of equal length"
        )));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

pub fn build_kernel(cfg: &LoadedConfig, spec: &KernelSpec) -> Result<Kernel, CliError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct GaussianP {
        sigma: f64,
        dim: usize,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct PolyP {
        degree: u32,
        dim: usize,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct SincP {
        bandwidth: f64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct MatrixP {
        matrix: Vec<Vec<f64>>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct PullbackP {
        base: KernelSpec,
        phi: MapSpec,
        phi_inv: MapSpec,
    }

    let id = spec.id.as_str();
    let k = match id {
        "gaussian" => {
            let p: GaussianP = params("kernel", id, &spec.params)?;
            Kernel::gaussian(p.sigma, p.dim)?
        }
        "polynomial" => {
            let p: PolyP = params("kernel", id, &spec.params)?;
            Kernel::polynomial(p.degree, p.dim)?
        }
        "sinc" => {
            let p: SincP = params("kernel", id, &spec.params)?;
            Kernel::sinc(p.bandwidth)?
        }
        "szego" => {
            no_params("kernel", id, &spec.params)?;
            Kernel::szego()
        }
        "sobolev11" => {
            no_params("kernel", id, &spec.params)?;
            Kernel::sobolev11()
        }
        "abs1" => {
            no_params("kernel", id, &spec.params)?;
            Kernel::abs1()
        }
        "expxy" => {
            no_params("kernel", id, &spec.params)?;
            Kernel::expxy()
        }
        "powbase" => {
            no_params("kernel", id, &spec.params)?;
            Kernel::powbase()
        }
        "discrete" => {
            let p: MatrixP = params("kernel", id, &spec.params)?;
            Kernel::discrete(matrix_from(&p.matrix, "kernel `discrete`")?)?
        }
        "linearform" => {
            let p: MatrixP = params("kernel", id, &spec.params)?;
            Kernel::linearform(matrix_from(&p.matrix, "kernel `linearform`")?)?
        }
        "pullback" => {
            let p: PullbackP = params("kernel", id, &spec.params)?;
            let base = build_kernel(cfg, &p.base)?;
            let phi = build_map(cfg, &p.phi)?;
            let phi_inv = build_map(cfg, &p.phi_inv)?;
            Kernel::pullback(base, phi, phi_inv)?
        }
        other => {
            return Err(CliError::new(format!(
                "unknown kernel id `{other}`; catalog: gaussian, polynomial, sinc, szego, \
                 sobolev11, abs1, expxy, powbase, discrete, linearform, pullback"
            )))
        }
    };
    Ok(k)
}

pub fn build_map(cfg: &LoadedConfig, spec: &MapSpec) -> Result<DiscreteMap, CliError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct DimP {
        dim: usize,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct MatrixP {
        matrix: Vec<Vec<f64>>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct ShiftP {
        shift: Vec<f64>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct ScalingP {
        factor: f64,
        dim: usize,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct AngleP {
        angle: f64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct LogisticP {
        r: f64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct MobiusP {
        lambda: [f64; 2],
        a: [f64; 2],
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct PermP {
        sigma: Vec<usize>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct ExprsP {
        exprs: Vec<String>,
        dim: usize,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct SnapshotP {
        pairs: String,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct ComposeP {
        outer: MapSpec,
        inner: MapSpec,
    }

    let id = spec.id.as_str();
    let m = match id {
        "identity" => {
            let p: DimP = params("map", id, &spec.params)?;
            DiscreteMap::Identity { dim: p.dim }
        }
        "linear" => {
            let p: MatrixP = params("map", id, &spec.params)?;
            DiscreteMap::linear(matrix_from(&p.matrix, "map `linear`")?)?
        }
        "translation" => {
            let p: ShiftP = params("map", id, &spec.params)?;
            DiscreteMap::translation(&p.shift)
        }
        "scaling" => {
            let p: ScalingP = params("map", id, &spec.params)?;
            DiscreteMap::scaling(p.factor, p.dim)
        }
        "rotation" => {
            let p: AngleP = params("map", id, &spec.params)?;
            DiscreteMap::rotation(p.angle)
        }
        "logistic" => {
            let p: LogisticP = params("map", id, &spec.params)?;
            DiscreteMap::logistic(p.r)?
        }
        "mobius" => {
            let p: MobiusP = params("map", id, &spec.params)?;
            DiscreteMap::mobius(
                C64::new(p.lambda[0], p.lambda[1]),
                C64::new(p.a[0], p.a[1]),
            )?
        }
        "permutation" => {
            let p: PermP = params("map", id, &spec.params)?;
            DiscreteMap::permutation(p.sigma)?
        }
        "exprs" => {
            let p: ExprsP = params("map", id, &spec.params)?;
            let refs: Vec<&str> = p.exprs.iter().map(String::as_str).collect();
            DiscreteMap::from_exprs(&refs, p.dim)?
        }
        "snapshot" => {
            let p: SnapshotP = params("map", id, &spec.params)?;
            let pairs = ingest::read_pairs(&cfg.resolve(&p.pairs))?;
            DiscreteMap::snapshot(pairs)?
        }
        "compose" => {
            let p: ComposeP = params("map", id, &spec.params)?;
            let outer = build_map(cfg, &p.outer)?;
            let inner = build_map(cfg, &p.inner)?;
            DiscreteMap::compose(outer, inner)
        }
        other => {
            return Err(CliError::new(format!(
                "unknown map id `{other}`; available: identity, linear, translation, scaling, \
                 rotation, logistic, mobius, permutation, exprs, snapshot, compose"
            )))
        }
    };
    Ok(m)
}

pub fn build_field(spec: &FieldSpec) -> Result<VectorField, CliError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct DimP {
        dim: usize,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct ValuesP {
        values: Vec<f64>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct MatrixP {
        matrix: Vec<Vec<f64>>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct MuP {
        mu: f64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct ExprsP {
        exprs: Vec<String>,
    }

    let id = spec.id.as_str();
    let f = match id {
        "zero" => {
            let p: DimP = params("field", id, &spec.params)?;
            VectorField::Zero { dim: p.dim }
        }
        "constant" => {
            let p: ValuesP = params("field", id, &spec.params)?;
            VectorField::Constant {
                c: DVector::from_vec(p.values),
            }
        }
        "linear" => {
            let p: MatrixP = params("field", id, &spec.params)?;
            VectorField::linear(matrix_from(&p.matrix, "field `linear`")?)?
        }
        "harmonic-oscillator" => {
            no_params("field", id, &spec.params)?;
            VectorField::HarmonicOscillator
        }
        "van-der-pol" => {
            let p: MuP = params("field", id, &spec.params)?;
            VectorField::VanDerPol { mu: p.mu }
        }
        "exprs" => {
            let p: ExprsP = params("field", id, &spec.params)?;
            let refs: Vec<&str> = p.exprs.iter().map(String::as_str).collect();
            VectorField::from_exprs(&refs)?
        }
        other => {
            return Err(CliError::new(format!(
                "unknown field id `{other}`; available: zero, constant, linear, \
                 harmonic-oscillator, van-der-pol, exprs"
            )))
        }
    };
    Ok(f)
}

/// Translate a numeric row into a point of the kernel's domain: real vectors
/// on Euclidean/interval domains, `[re, im]` on the disc, a single 1-based
/// integer on finite sets.
pub fn point_for_domain(domain: &Domain, row: &[f64], what: &str) -> Result<Point, CliError> {
    let p = match domain {
        Domain::Euclidean(_) | Domain::Interval { .. } => Point::real(row),
        Domain::UnitDisc => {
            if row.len() != 2 {
                return Err(CliError::new(format!(
                    "{what}: disc-domain points need exactly 2 columns (re, im); got {}",
                    row.len()
                )));
            }
            Point::disc(row[0], row[1])
        }
        Domain::FiniteSet(_) => {
            if row.len() != 1 || row[0].fract() != 0.0 || row[0] < 1.0 {
                return Err(CliError::new(format!(
                    "{what}: finite-set points are single 1-based integers; got {row:?}"
                )));
            }
            Point::Index(row[0] as usize)
        }
    };
    domain.contains(&p)?;
    Ok(p)
}

pub fn points_for_domain(
    domain: &Domain,
    rows: &[Vec<f64>],
    what: &str,
) -> Result<Vec<Point>, CliError> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| point_for_domain(domain, r, &format!("{what} row {}", i + 1)))
        .collect()
}

pub fn build_measure(spec: &MeasureSpec, domain: &Domain) -> Result<AtomicMeasure, CliError> {
    if spec.atoms.len() != spec.weights.len() {
        return Err(CliError::new(format!(
            "measure: {} atoms but {} weights",
            spec.atoms.len(),
            spec.weights.len()
        )));
    }
    let mut atoms = Vec::with_capacity(spec.atoms.len());
    for (i, raw) in spec.atoms.iter().enumerate() {
        let row: Vec<f64> = match raw {
            serde_json::Value::Number(n) => vec![n.as_f64().ok_or_else(|| {
                CliError::new(format!("measure atom {}: invalid number", i + 1))
            })?],
            serde_json::Value::Array(_) => serde_json::from_value(raw.clone())
                .map_err(|e| CliError::new(format!("measure atom {}: {e}", i + 1)))?,
            _ => {
                return Err(CliError::new(format!(
                    "measure atom {}: expected a number or an array of numbers",
                    i + 1
                )))
            }
        };
        atoms.push(point_for_domain(domain, &row, &format!("measure atom {}", i + 1))?);
    }
    let weights: Vec<C64> = spec
        .weights
        .iter()
        .map(|w| match w {
            WeightSpec::Real(r) => C64::new(*r, 0.0),
            WeightSpec::Complex([re, im]) => C64::new(*re, *im),
        })
        .collect();
    Ok(AtomicMeasure::new(atoms, weights)?)
}
