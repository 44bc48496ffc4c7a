//! One function per subcommand. Each builds its inputs from the config,
//! calls the library, writes `report.json` (echoed to stdout) plus any CSV
//! tables into the output directory, and returns the process exit code:
//! 0 for success/pass, 2 for a failed check. Input problems surface as
//! `CliError` and exit 1 in `main`.

use std::path::PathBuf;

use kpf_core::dynamics::{check_relation, Flow, StructureRelation, VectorField};
use kpf_core::kernels::Kernel;
use kpf_core::operators::{
    norm_bound_estimate, pf_project, rep_matrix_discrete, rep_matrix_linear, spectrum,
};
use kpf_core::sampling::domain_probes;
use kpf_core::semigroups::{
    generator_identity_check, growth_bound, lyapunov_check, path_integral, transport_solve,
    TransportProblem,
};
use kpf_core::structure::{factor_intertwiner, symmetry_commutator};
use kpf_core::{C64, Domain, Point};
use nalgebra::DMatrix;

use crate::config::{
    build_field, build_kernel, build_map, build_measure, matrix_from, point_for_domain,
    points_for_domain, LoadedConfig,
};
use crate::error::CliError;
use crate::ingest;
use crate::report::{emit, JsonReport};

pub struct CommonOpts {
    pub out: PathBuf,
    pub seed: u64,
    pub tol: Option<f64>,
    pub reg: Option<f64>,
}

const DEFAULT_CHECK_TOL: f64 = 1e-10;
const DEFAULT_FLOW_STEP: f64 = 1e-3;
const GENERATED_PROBES: usize = 20;

pub fn dispatch(name: &str, cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    match name {
        "gram" => cmd_gram(cfg, opts),
        "pf-project" => cmd_pf_project(cfg, opts),
        "spectrum" => cmd_spectrum(cfg, opts),
        "norm-bound" => cmd_norm_bound(cfg, opts),
        "growth-bound" => cmd_growth_bound(cfg, opts),
        "check-invariant" => cmd_check_invariant(cfg, opts),
        "check-symmetry" => cmd_check_symmetry(cfg, opts),
        "check-factor" => cmd_check_factor(cfg, opts),
        "check-conjugacy" => cmd_check_conjugacy(cfg, opts),
        "pathint" => cmd_pathint(cfg, opts),
        "generator-check" => cmd_generator_check(cfg, opts),
        "lyapunov" => cmd_lyapunov(cfg, opts),
        "transport" => cmd_transport(cfg, opts),
        "repmatrix" => cmd_repmatrix(cfg, opts),
        other => Err(CliError::new(format!("unknown command `{other}`"))),
    }
}

// ---------------------------------------------------------------- helpers

fn require<'a, T>(opt: &'a Option<T>, key: &str) -> Result<&'a T, CliError> {
    opt.as_ref()
        .ok_or_else(|| CliError::new(format!("config field `{key}` is required by this command")))
}

fn kernel_of(cfg: &LoadedConfig) -> Result<Kernel, CliError> {
    build_kernel(cfg, require(&cfg.run.kernel, "kernel")?)
}

fn field_of(cfg: &LoadedConfig) -> Result<VectorField, CliError> {
    build_field(require(&cfg.run.field, "field")?)
}

fn flow_of(cfg: &LoadedConfig) -> Result<Flow, CliError> {
    let field = field_of(cfg)?;
    let step = cfg.run.step.unwrap_or(DEFAULT_FLOW_STEP);
    Ok(Flow::new(field, step)?)
}

fn load_points(cfg: &LoadedConfig, domain: &Domain) -> Result<Vec<Point>, CliError> {
    let path = require(&cfg.run.points, "points")?;
    let rows = ingest::read_points(&cfg.resolve(path))?;
    points_for_domain(domain, &rows, "points")
}

/// Snapshot pairs for projection: either an explicit pairs file or a
/// trajectory whose consecutive states become (x, f(x)) samples. The second
/// return is the trajectory monotonicity warning flag when one was read.
fn load_pairs(
    cfg: &LoadedConfig,
    domain: &Domain,
) -> Result<(Vec<(Point, Point)>, Option<bool>), CliError> {
    if let Some(path) = &cfg.run.pairs {
        let raw = ingest::read_pairs(&cfg.resolve(path))?;
        let mut pairs = Vec::with_capacity(raw.len());
        for (i, (x, y)) in raw.iter().enumerate() {
            let px = point_for_domain(domain, x, &format!("pair {} source", i + 1))?;
            let py = point_for_domain(domain, y, &format!("pair {} image", i + 1))?;
            pairs.push((px, py));
        }
        return Ok((pairs, None));
    }
    if let Some(path) = &cfg.run.trajectory {
        let tr = ingest::read_trajectory(&cfg.resolve(path))?;
        let pts = points_for_domain(domain, &tr.states, "trajectory")?;
        let pairs = pts.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        return Ok((pairs, Some(tr.monotone)));
    }
    Err(CliError::new(
        "config field `pairs` or `trajectory` is required by this command",
    ))
}

fn x0_of(cfg: &LoadedConfig, domain: &Domain) -> Result<Point, CliError> {
    let row = require(&cfg.run.x0, "x0")?;
    point_for_domain(domain, row, "x0")
}

fn effective_tol(cfg: &LoadedConfig, opts: &CommonOpts) -> f64 {
    opts.tol.or(cfg.run.tol).unwrap_or(DEFAULT_CHECK_TOL)
}

fn effective_reg(cfg: &LoadedConfig, opts: &CommonOpts) -> Option<f64> {
    opts.reg.or(cfg.run.reg)
}

/// Probe points for relation checks. An explicit `probes` file wins; a
/// non-default seed generates atoms + quasi-random fill; otherwise None lets
/// the library build its default probe set.
fn probe_set(
    cfg: &LoadedConfig,
    domain: &Domain,
    anchors: &[Point],
    opts: &CommonOpts,
) -> Result<Option<Vec<Point>>, CliError> {
    if let Some(path) = &cfg.run.probes {
        let rows = ingest::read_points(&cfg.resolve(path))?;
        return Ok(Some(points_for_domain(domain, &rows, "probes")?));
    }
    if opts.seed != 0 {
        let mut probes = anchors.to_vec();
        probes.extend(domain_probes(domain, anchors, GENERATED_PROBES, opts.seed));
        return Ok(Some(probes));
    }
    Ok(None)
}

fn point_row(p: &Point) -> Vec<f64> {
    match p {
        Point::Real(v) => v.clone(),
        Point::Complex(z) => vec![z.re, z.im],
        Point::Index(i) => vec![*i as f64],
    }
}

fn point_columns(domain: &Domain) -> Vec<String> {
    match domain {
        Domain::Euclidean(d) => (1..=*d).map(|i| format!("x{i}")).collect(),
        Domain::Interval { .. } => vec!["x1".into()],
        Domain::UnitDisc => vec!["re".into(), "im".into()],
        Domain::FiniteSet(_) => vec!["i".into()],
    }
}

fn complex_matrix_rows(m: &DMatrix<C64>) -> (Vec<String>, Vec<Vec<f64>>) {
    let header: Vec<String> = (1..=m.ncols())
        .flat_map(|j| [format!("c{j}_re"), format!("c{j}_im")])
        .collect();
    let rows = (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .flat_map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect();
    (header, rows)
}

fn real_matrix_rows(m: &DMatrix<f64>) -> (Vec<String>, Vec<Vec<f64>>) {
    let header: Vec<String> = (1..=m.ncols()).map(|j| format!("c{j}")).collect();
    let rows = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect();
    (header, rows)
}

fn write_commutation_report(
    command: &str,
    rep_defect: f64,
    probes_used: usize,
    pass: bool,
    tol: f64,
    opts: &CommonOpts,
) -> Result<i32, CliError> {
    let mut r = JsonReport::new(command);
    r.field_num("max_defect", rep_defect);
    r.field_int("probes_used", probes_used as u64);
    r.field_num("tol", tol);
    r.field_bool("pass", pass);
    emit(&opts.out, r.finish())?;
    Ok(if pass { 0 } else { 2 })
}

// --------------------------------------------------------------- commands

fn cmd_gram(cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    let kernel = kernel_of(cfg)?;
    let pts = load_points(cfg, kernel.domain())?;
    let g = kernel.gram(&pts)?;
    let trace: C64 = (0..g.nrows()).map(|i| g[(i, i)]).sum();

    let complex = matches!(kernel.scalar_field(), kpf_core::kernels::ScalarField::Complex);
    let (header, rows): (Vec<String>, Vec<Vec<f64>>) = if complex {
        let h = (1..=g.ncols())
            .flat_map(|j| [format!("g{j}_re"), format!("g{j}_im")])
            .collect();
        let r = (0..g.nrows())
            .map(|i| {
                (0..g.ncols())
                    .flat_map(|j| [g[(i, j)].re, g[(i, j)].im])
                    .collect()
            })
            .collect();
        (h, r)
    } else {
        let h = (1..=g.ncols()).map(|j| format!("g{j}")).collect();
        let r = (0..g.nrows())
            .map(|i| (0..g.ncols()).map(|j| g[(i, j)].re).collect())
            .collect();
        (h, r)
    };
    std::fs::create_dir_all(&opts.out)
        .map_err(|e| CliError::new(format!("cannot create {}: {e}", opts.out.display())))?;
    ingest::write_table(&opts.out.join("gram.csv"), &header, &rows)?;

    let mut r = JsonReport::new("gram");
    r.field_str("kernel", kernel.id());
    r.field_int("n", pts.len() as u64);
    r.field_complex("trace", trace);
    r.field_str("table", "gram.csv");
    emit(&opts.out, r.finish())?;
    Ok(0)
}

fn cmd_pf_project(cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    let kernel = kernel_of(cfg)?;
    let (pairs, monotone) = load_pairs(cfg, kernel.domain())?;
    let op = pf_project(&kernel, &pairs, effective_reg(cfg, opts))?;

    std::fs::create_dir_all(&opts.out)
        .map_err(|e| CliError::new(format!("cannot create {}: {e}", opts.out.display())))?;
    let (header, rows) = complex_matrix_rows(&op.coeffs);
    ingest::write_table(&opts.out.join("coeffs.csv"), &header, &rows)?;

    let mut r = JsonReport::new("pf-project");
    r.field_str("kernel", kernel.id());
    r.field_int("n", pairs.len() as u64);
    r.field_num("reg", op.reg);
    r.field_int("retained_rank", op.dictionary.retained_rank() as u64);
    r.field_opt_num("rel_residual", op.rel_residual);
    if let Some(m) = monotone {
        r.field_bool("trajectory_monotone", m);
    }
    r.field_str("table", "coeffs.csv");
    emit(&opts.out, r.finish())?;
    Ok(0)
}

fn cmd_spectrum(cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    let kernel = kernel_of(cfg)?;
    let (pairs, monotone) = load_pairs(cfg, kernel.domain())?;
    let op = pf_project(&kernel, &pairs, effective_reg(cfg, opts))?;
    let eigs = spectrum(&op)?;
    let values: Vec<C64> = eigs.iter().map(|e| e.value).collect();

    std::fs::create_dir_all(&opts.out)
        .map_err(|e| CliError::new(format!("cannot create {}: {e}", opts.out.display())))?;
    let rows: Vec<Vec<f64>> = values.iter().map(|v| vec![v.re, v.im]).collect();
    ingest::write_table(
        &opts.out.join("eigenvalues.csv"),
        &["re".to_string(), "im".to_string()],
        &rows,
    )?;

    let mut r = JsonReport::new("spectrum");
    r.field_str("kernel", kernel.id());
    r.field_int("n", pairs.len() as u64);
    r.field_num("reg", op.reg);
    r.field_int("retained_rank", op.dictionary.retained_rank() as u64);
    r.field_opt_num("rel_residual", op.rel_residual);
    if let Some(m) = monotone {
        r.field_bool("trajectory_monotone", m);
    }
    r.field_complex_list("eigenvalues", &values);
    r.field_str("table", "eigenvalues.csv");
    emit(&opts.out, r.finish())?;
    Ok(0)
}

fn cmd_norm_bound(cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    let kernel = kernel_of(cfg)?;
    let f = build_map(cfg, require(&cfg.run.map, "map")?)?;
    let pts = load_points(cfg, kernel.domain())?;
    let rep = norm_bound_estimate(&kernel, &f, &pts, effective_reg(cfg, opts))?;

    std::fs::create_dir_all(&opts.out)
        .map_err(|e| CliError::new(format!("cannot create {}: {e}", opts.out.display())))?;
    let rows: Vec<Vec<f64>> = rep.eigvec.iter().map(|v| vec![v.re, v.im]).collect();
    ingest::write_table(
        &opts.out.join("certificate.csv"),
        &["re".to_string(), "im".to_string()],
        &rows,
    )?;

    let mut r = JsonReport::new("norm-bound");
    r.field_str("kernel", kernel.id());
    r.field_int("n", pts.len() as u64);
    r.field_num("bound", rep.bound);
    r.field_int("pencil_rank", rep.pencil_rank as u64);
    r.field_num("reg", rep.reg);
    r.field_str("table", "certificate.csv");
    emit(&opts.out, r.finish())?;
    Ok(0)
}

fn cmd_growth_bound(cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    let kernel = kernel_of(cfg)?;
    let field = field_of(cfg)?;
    let pts = load_points(cfg, kernel.domain())?;
    let cert = growth_bound(&kernel, &field, &pts, effective_reg(cfg, opts))?;

    std::fs::create_dir_all(&opts.out)
        .map_err(|e| CliError::new(format!("cannot create {}: {e}", opts.out.display())))?;
    let rows: Vec<Vec<f64>> = cert.eigvec.iter().map(|v| vec![v.re, v.im]).collect();
    ingest::write_table(
        &opts.out.join("certificate.csv"),
        &["re".to_string(), "im".to_string()],
        &rows,
    )?;

    let mut r = JsonReport::new("growth-bound");
    r.field_str("kernel", kernel.id());
    r.field_int("n", pts.len() as u64);
    r.field_num("bound", cert.bound);
    r.field_int("pencil_rank", cert.pencil_rank as u64);
    r.field_num("reg", cert.reg);
    r.field_str("table", "certificate.csv");
    emit(&opts.out, r.finish())?;
    Ok(0)
}

fn cmd_check_invariant(cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    let kernel = kernel_of(cfg)?;
    let f = build_map(cfg, require(&cfg.run.map, "map")?)?;
    let tol = effective_tol(cfg, opts);
    let samples = if cfg.run.points.is_some() {
        load_points(cfg, kernel.domain())?
    } else {
        domain_probes(kernel.domain(), &[], GENERATED_PROBES, opts.seed)
    };
    let rep = kernel.check_invariance(&f, &samples, tol)?;
    write_commutation_report("check-invariant", rep.max_defect, samples.len(), rep.pass, tol, opts)
}

fn cmd_check_symmetry(cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    let kernel = kernel_of(cfg)?;
    let f = build_map(cfg, require(&cfg.run.map, "map")?)?;
    let psi = build_map(cfg, require(&cfg.run.symmetry, "symmetry")?)?;
    let mu = build_measure(require(&cfg.run.measure, "measure")?, kernel.domain())?;
    let tol = effective_tol(cfg, opts);
    let probes = probe_set(cfg, kernel.domain(), &mu.atoms, opts)?;
    let rep = symmetry_commutator(&kernel, &f, &psi, &mu, probes.as_deref(), tol)?;
    write_commutation_report("check-symmetry", rep.max_defect, rep.probes_used, rep.pass, tol, opts)
}

fn cmd_check_factor(cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    let k_x = kernel_of(cfg)?;
    let k_y = build_kernel(cfg, require(&cfg.run.kernel_y, "kernel_y")?)?;
    let f = build_map(cfg, require(&cfg.run.map, "map")?)?;
    let pi = build_map(cfg, require(&cfg.run.projection, "projection")?)?;
    let f_factor = build_map(cfg, require(&cfg.run.factor_map, "factor_map")?)?;
    let mu = build_measure(require(&cfg.run.measure, "measure")?, k_x.domain())?;
    let tol = effective_tol(cfg, opts);
    // Probe generation happens on the codomain side, anchored at the
    // projected atoms.
    let anchors: Vec<Point> = mu
        .atoms
        .iter()
        .map(|a| pi.apply(a))
        .collect::<Result<_, _>>()?;
    let probes = probe_set(cfg, k_y.domain(), &anchors, opts)?;
    let rep = factor_intertwiner(&k_x, &k_y, &f, &pi, &f_factor, &mu, probes.as_deref(), tol)?;
    write_commutation_report("check-factor", rep.max_defect, rep.probes_used, rep.pass, tol, opts)
}

fn cmd_check_conjugacy(cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    let f = build_map(cfg, require(&cfg.run.map, "map")?)?;
    let spec = require(&cfg.run.conjugacy, "conjugacy")?;
    let rel = StructureRelation::Conjugacy {
        phi: build_map(cfg, &spec.phi)?,
        phi_inv: build_map(cfg, &spec.phi_inv)?,
        g: build_map(cfg, &spec.g)?,
    };
    // Samples live wherever the maps act; a kernel entry types them, plain
    // real rows otherwise.
    let samples = match &cfg.run.kernel {
        Some(kspec) => {
            let kernel = build_kernel(cfg, kspec)?;
            load_points(cfg, kernel.domain())?
        }
        None => {
            let path = require(&cfg.run.points, "points")?;
            let rows = ingest::read_points(&cfg.resolve(path))?;
            rows.iter().map(|r| Point::real(r)).collect()
        }
    };
    let tol = effective_tol(cfg, opts);
    let rep = check_relation(&rel, &f, &samples, tol)?;
    write_commutation_report("check-conjugacy", rep.max_defect, samples.len(), rep.pass, tol, opts)
}

fn cmd_pathint(cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    let kernel = kernel_of(cfg)?;
    let flow = flow_of(cfg)?;
    let x0 = x0_of(cfg, kernel.domain())?;
    let horizon = *require(&cfg.run.horizon, "horizon")?;
    let nodes = cfg
        .run
        .nodes
        .unwrap_or_else(|| (32.0 * horizon).ceil().max(8.0) as usize);
    let pi = path_integral(&kernel, &flow, &x0, horizon, nodes)?;

    std::fs::create_dir_all(&opts.out)
        .map_err(|e| CliError::new(format!("cannot create {}: {e}", opts.out.display())))?;
    let mut header = vec!["t".to_string()];
    header.extend(point_columns(kernel.domain()));
    header.push("w".to_string());
    let rows: Vec<Vec<f64>> = pi
        .node_times
        .iter()
        .zip(pi.measure.atoms.iter())
        .zip(pi.measure.weights.iter())
        .map(|((t, a), w)| {
            let mut row = vec![*t];
            row.extend(point_row(a));
            row.push(w.re);
            row
        })
        .collect();
    ingest::write_table(&opts.out.join("measure.csv"), &header, &rows)?;

    let weight_sum: f64 = pi.measure.weights.iter().map(|w| w.re).sum();
    let mut r = JsonReport::new("pathint");
    r.field_str("kernel", kernel.id());
    r.field_int("nodes", pi.measure.atoms.len() as u64);
    r.field_num("horizon", horizon);
    r.field_num("weight_sum", weight_sum);
    r.field_str("table", "measure.csv");
    emit(&opts.out, r.finish())?;
    Ok(0)
}

fn cmd_generator_check(cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    let kernel = kernel_of(cfg)?;
    let flow = flow_of(cfg)?;
    let x0 = x0_of(cfg, kernel.domain())?;
    let horizon = cfg.run.horizon.unwrap_or(1.0);
    let ladder = cfg
        .run
        .h_ladder
        .clone()
        .unwrap_or_else(|| vec![1e-2, 1e-3, 1e-4]);
    let rep = generator_identity_check(&kernel, &flow, &x0, horizon, &ladder)?;

    let mut r = JsonReport::new("generator-check");
    r.field_str("kernel", kernel.id());
    r.field_num("horizon", horizon);
    r.field_num_list("h", &rep.hs);
    r.field_num_list("defects", &rep.defects);
    r.field_num_list("ratios", &rep.ratios);
    r.field_bool("first_order", rep.first_order);
    emit(&opts.out, r.finish())?;
    Ok(if rep.first_order { 0 } else { 2 })
}

fn cmd_lyapunov(cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    let kernel = kernel_of(cfg)?;
    let flow = flow_of(cfg)?;
    let x0 = x0_of(cfg, kernel.domain())?;
    let horizon = *require(&cfg.run.horizon, "horizon")?;
    let samples = cfg.run.samples.unwrap_or(20);
    let rep = lyapunov_check(&kernel, &flow, &x0, horizon, samples)?;

    std::fs::create_dir_all(&opts.out)
        .map_err(|e| CliError::new(format!("cannot create {}: {e}", opts.out.display())))?;
    let rows: Vec<Vec<f64>> = rep
        .times
        .iter()
        .zip(rep.values.iter())
        .map(|(t, v)| vec![*t, *v])
        .collect();
    ingest::write_table(
        &opts.out.join("lyapunov.csv"),
        &["t".to_string(), "v".to_string()],
        &rows,
    )?;

    let mut r = JsonReport::new("lyapunov");
    r.field_str("kernel", kernel.id());
    r.field_num("horizon", horizon);
    r.field_int("samples", rep.times.len() as u64);
    r.field_num("v_first", rep.values[0]);
    r.field_num("v_last", *rep.values.last().unwrap());
    r.field_bool("monotone_nonincreasing", rep.monotone_nonincreasing);
    r.field_str("table", "lyapunov.csv");
    emit(&opts.out, r.finish())?;
    Ok(if rep.monotone_nonincreasing { 0 } else { 2 })
}

fn cmd_transport(cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    let b = require(&cfg.run.b, "b")?;
    let u0 = require(&cfg.run.u0, "u0")?;
    let t = *require(&cfg.run.t, "t")?;
    let grid = require(&cfg.run.grid, "grid")?;
    let step = cfg.run.step.unwrap_or(DEFAULT_FLOW_STEP);
    if grid.count < 2 || !(grid.max > grid.min) {
        return Err(CliError::new(
            "grid needs count >= 2 and max > min".to_string(),
        ));
    }
    let problem = TransportProblem::new(b, u0, step)?;
    let n = grid.count;
    let xs: Vec<f64> = (0..n)
        .map(|i| grid.min + (grid.max - grid.min) * (i as f64) / ((n - 1) as f64))
        .collect();
    let us = transport_solve(&problem, t, &xs)?;

    std::fs::create_dir_all(&opts.out)
        .map_err(|e| CliError::new(format!("cannot create {}: {e}", opts.out.display())))?;
    let rows: Vec<Vec<f64>> = xs.iter().zip(us.iter()).map(|(x, u)| vec![*x, *u]).collect();
    ingest::write_table(
        &opts.out.join("transport.csv"),
        &["x".to_string(), "u".to_string()],
        &rows,
    )?;

    let mut r = JsonReport::new("transport");
    r.field_num("t", t);
    r.field_num("step", step);
    r.field_int("count", n as u64);
    r.field_str("table", "transport.csv");
    emit(&opts.out, r.finish())?;
    Ok(0)
}

fn cmd_repmatrix(cfg: &LoadedConfig, opts: &CommonOpts) -> Result<i32, CliError> {
    let m_rows = require(&cfg.run.weight_matrix, "weight_matrix")?;
    let m = matrix_from(m_rows, "weight_matrix")?;
    match (&cfg.run.permutation, &cfg.run.matrix) {
        (Some(sigma), None) => {
            let rep = rep_matrix_discrete(&m, sigma)?;
            std::fs::create_dir_all(&opts.out)
                .map_err(|e| CliError::new(format!("cannot create {}: {e}", opts.out.display())))?;
            let (header, rows) = real_matrix_rows(&rep.rep);
            ingest::write_table(&opts.out.join("rep.csv"), &header, &rows)?;

            let mut r = JsonReport::new("repmatrix");
            r.field_str("kind", "discrete");
            r.field_int("n", sigma.len() as u64);
            r.field_matrix("rep", &rep.rep);
            r.field_bool("column_form_matches", rep.column_form_matches);
            r.field_bool("row_form_matches", rep.row_form_matches);
            r.field_str("table", "rep.csv");
            emit(&opts.out, r.finish())?;
            Ok(0)
        }
        (None, Some(a_rows)) => {
            let a = matrix_from(a_rows, "matrix")?;
            let rep = rep_matrix_linear(&m, &a)?;
            std::fs::create_dir_all(&opts.out)
                .map_err(|e| CliError::new(format!("cannot create {}: {e}", opts.out.display())))?;
            let (header, rows) = real_matrix_rows(&rep.pf_rep);
            ingest::write_table(&opts.out.join("rep.csv"), &header, &rows)?;

            let mut r = JsonReport::new("repmatrix");
            r.field_str("kind", "linear");
            r.field_int("n", a.nrows() as u64);
            r.field_matrix("pf_rep", &rep.pf_rep);
            r.field_matrix("koopman_rep", &rep.koopman_rep);
            r.field_bool("reversed_form_matches", rep.reversed_form_matches);
            r.field_num("intertwining_defect", rep.intertwining_defect);
            r.field_str("table", "rep.csv");
            emit(&opts.out, r.finish())?;
            Ok(0)
        }
        _ => Err(CliError::new(
            "repmatrix needs exactly one of `permutation` (discrete view) or `matrix` (linear view)",
        )),
    }
}
