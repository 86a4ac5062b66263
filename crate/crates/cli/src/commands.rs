//! One function per subcommand: load inputs, compute, write files, check
//! tolerances.

use serde::Serialize;
use serde_json::json;
use vecfekete::asymptotics::{
    bergman_density_current, bm_constant, brute_force_free_energy, derivative_check,
    extrapolate_limit, fekete_built_measure, free_energy, gram_system, mesh_counting_measure,
    product_formula_check, random_direction, rel_diff, sandwich_bounds, write_convergence_csv,
    ConvergenceRow, DerivativeCheck, ProductFormulaReport, FREE_ENERGY_BUDGET,
};
use vecfekete::currents::{measure_pairing, DiscreteVectorMeasure};
use vecfekete::forms::{
    form_fekete, lambda_basis, lebesgue_estimate, polynomial_field, segment_shrinkage_experiment,
    spread_segments, write_trace_csv, Interpolator,
};
use vecfekete::indexing::SpaceDims;
use vecfekete::io::{fmt_f64, write_table, HeaderBlock};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vecfekete::polyspace::{Mesh, Point, ScalarField, UVector, WeightVector, C64};
use vecfekete::selftest::{run_all, run_invariants, Scale};
use vecfekete::vandermonde::{brute_force_fekete, vector_fekete, vector_fekete_with};
use vecfekete::FeketeError;

use crate::config::{
    weight_vector, BergmanCmd, DiameterCmd, EnergyCmd, FeketeCmd, FormsCmd, GramCmd,
    MeasureConfig, ScaleConfig, SelftestCmd, SetConfig, SetKind,
};
use crate::report::{Assertions, CliError, CliResult, Output};

fn dims_label(d: &SpaceDims) -> String {
    format!("n={} r={} s={} N={}", d.n, d.r, d.s, d.big_n)
}

fn mesh_label(m: &Mesh) -> String {
    format!("{} density={} points={}", m.kind.name(), m.density, m.len())
}

fn mesh_kind_label(set: &SetConfig) -> String {
    match (&set.kind, &set.path) {
        (SetKind::File, Some(p)) => format!("file {}", p.display()),
        (kind, _) => format!("{kind:?}").to_lowercase(),
    }
}

fn header(cmd: &str, seed: u64) -> HeaderBlock {
    HeaderBlock::new().with("command", cmd).with("seed", seed)
}

fn build_measure(
    source: &MeasureConfig,
    mesh: &Mesh,
    w: &WeightVector,
    d: &SpaceDims,
    seed: u64,
) -> CliResult<DiscreteVectorMeasure> {
    Ok(match source {
        MeasureConfig::Fekete => fekete_built_measure(mesh, w, d)?.0,
        MeasureConfig::FeketeEmpirical => vector_fekete(mesh, w, d)?.empirical_measure()?,
        MeasureConfig::MeshCounting => mesh_counting_measure(mesh, d.s)?,
        MeasureConfig::File { path } => {
            let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
            let mu = DiscreteVectorMeasure::read_csv(file)
                .map_err(|e| CliError::config("measure.path", e.to_string()))?;
            if mu.atoms.iter().any(|a| a.x.dim() != d.n || a.v.len() != d.s) {
                return Err(CliError::config("measure.path", "atom dimensions do not match dims"));
            }
            mu
        }
        MeasureConfig::Random { atoms } => {
            let count = atoms.unwrap_or(d.big_n + 2);
            DiscreteVectorMeasure::random_on_mesh(mesh, d.s, count, seed)
                .map_err(|e| CliError::config("measure.atoms", e.to_string()))?
        }
    })
}

fn fields_or_random(given: &[ScalarField], d: &SpaceDims, seed: u64, key: &str) -> CliResult<Vec<ScalarField>> {
    if given.is_empty() {
        return Ok(random_direction(d.n, d.r, d.s, seed));
    }
    if given.len() != d.s {
        return Err(CliError::config(key, format!("{} fields given, s = {}", given.len(), d.s)));
    }
    Ok(given.to_vec())
}

#[derive(Serialize)]
struct FeketeReport {
    mesh: String,
    summary: vecfekete::vandermonde::FeketeSummary,
    frame_directed: bool,
    brute_force_ratio: Option<f64>,
}

pub fn fekete(cfg: &FeketeCmd, seed: u64, out: &mut Output) -> CliResult<()> {
    let d = cfg.dims.dims()?;
    let w = weight_vector(&cfg.weight, d.s)?;
    let mesh = cfg.set.mesh(d.r, d.n)?;
    let conf = vector_fekete_with(&mesh, &w, &d, &cfg.search)?;
    let h = header("fekete", seed)
        .with("dims", dims_label(&d))
        .with("weight", w.describe())
        .with("mesh", mesh_label(&mesh));
    out.file("configuration.csv", |f| conf.write_csv(f, &h))?;
    let mut checks = Assertions::default();
    let brute_force_ratio = if cfg.brute_force {
        let best = brute_force_fekete(&mesh, &w, &d)?;
        let ratio = conf.rth_diameter / best.rth_diameter;
        checks.check(ratio >= cfg.tolerances.greedy_ratio, || {
            format!("greedy/brute-force diameter ratio {ratio} < {}", cfg.tolerances.greedy_ratio)
        });
        Some(ratio)
    } else {
        None
    };
    out.json(
        "summary.json",
        &FeketeReport {
            mesh: mesh_label(&mesh),
            summary: conf.summary(),
            frame_directed: conf.is_frame_directed(),
            brute_force_ratio,
        },
    )?;
    checks.finish()
}

#[derive(Serialize)]
struct DiameterRow {
    r: usize,
    density: usize,
    diameter: f64,
    log_abs_det: f64,
    product: Option<ProductFormulaReport>,
}

pub fn diameter(cfg: &DiameterCmd, seed: u64, out: &mut Output) -> CliResult<()> {
    if cfg.r_values.is_empty() {
        return Err(CliError::config("r_values", "at least one degree required"));
    }
    let w = weight_vector(&cfg.weight, cfg.s)?;
    let mut rows = Vec::with_capacity(cfg.r_values.len());
    let mut checks = Assertions::default();
    for &r in &cfg.r_values {
        let d = SpaceDims::new(cfg.n, r, cfg.s).map_err(|e| CliError::config("r_values", e.to_string()))?;
        let mesh = cfg.set.mesh(r, cfg.n)?;
        let conf = vector_fekete_with(&mesh, &w, &d, &cfg.search)?;
        let product = if cfg.product_formula && r > 0 {
            let rep = product_formula_check(&mesh, &w, &d, &cfg.search)?;
            if cfg.search.continuous_directions {
                checks.check(rep.gap.abs() <= rep.slack, || {
                    format!("r={r}: |gap| {} exceeds log(N!)/(2 s ell_r) = {}", rep.gap.abs(), rep.slack)
                });
            } else {
                checks.check(rep.gap.abs() <= cfg.tolerances.product_gap, || {
                    format!("r={r}: product formula gap {} > {}", rep.gap.abs(), cfg.tolerances.product_gap)
                });
            }
            Some(rep)
        } else {
            None
        };
        rows.push(DiameterRow {
            r,
            density: mesh.density,
            diameter: conf.rth_diameter,
            log_abs_det: conf.log_abs_det,
            product,
        });
    }
    let h = header("diameter", seed)
        .with("dims", format!("n={} s={}", cfg.n, cfg.s))
        .with("weight", w.describe())
        .with("mesh", format!("{} density per row", mesh_kind_label(&cfg.set)));
    let mut cols = vec!["r", "density", "diameter", "log_abs_det"];
    if cfg.product_formula {
        cols.extend(["product_lhs", "product_rhs", "product_gap", "product_slack"]);
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let mut v = vec![
                row.r.to_string(),
                row.density.to_string(),
                fmt_f64(row.diameter),
                fmt_f64(row.log_abs_det),
            ];
            if cfg.product_formula {
                match &row.product {
                    Some(p) => v.extend([fmt_f64(p.lhs), fmt_f64(p.rhs), fmt_f64(p.gap), fmt_f64(p.slack)]),
                    None => v.extend(std::iter::repeat(String::new()).take(4)),
                }
            }
            v
        })
        .collect();
    out.file("diameter.csv", |f| write_table(f, &h, &cols, &body))?;
    let fit: Vec<(usize, f64)> = rows.iter().filter(|p| p.r >= 1).map(|p| (p.r, p.diameter)).collect();
    let limit = if fit.len() >= 3 { Some(extrapolate_limit(&fit)?) } else { None };
    if let Some(reference) = cfg.reference {
        let conv: Vec<ConvergenceRow> = rows
            .iter()
            .map(|p| ConvergenceRow::new(p.r, "diameter", p.diameter, reference))
            .collect();
        out.file("convergence.csv", |f| write_convergence_csv(f, &h, &conv))?;
        if let Some(l) = limit {
            let rel = (l - reference).abs() / reference.abs();
            checks.check(rel <= cfg.tolerances.limit_rel, || {
                format!("extrapolated limit {l} is {rel} relative from {reference}")
            });
        }
    }
    let decreasing = rows.windows(2).all(|p| p[1].diameter < p[0].diameter);
    out.json(
        "summary.json",
        &json!({ "rows": rows, "extrapolated_limit": limit, "reference": cfg.reference, "decreasing": decreasing }),
    )?;
    checks.finish()
}

pub fn gram(cfg: &GramCmd, seed: u64, out: &mut Output) -> CliResult<()> {
    let d = cfg.dims.dims()?;
    let w = weight_vector(&cfg.weight, d.s)?;
    let mesh = cfg.set.mesh(d.r, d.n)?;
    let mu = build_measure(&cfg.measure, &mesh, &w, &d, seed)?;
    let g = gram_system(&mu, &w, &d)?;
    let fe = free_energy(&mu, &w, &d)?;
    let m_r = bm_constant(&g, &w, &mesh)?;
    let h = header("gram", seed)
        .with("dims", dims_label(&d))
        .with("weight", w.describe())
        .with("mesh", mesh_label(&mesh))
        .with("atoms", mu.len());
    let body: Vec<Vec<String>> = (0..d.big_n)
        .flat_map(|i| (0..d.big_n).map(move |j| (i, j)))
        .map(|(i, j)| {
            let z = g.gram[(i, j)];
            vec![(i + 1).to_string(), (j + 1).to_string(), fmt_f64(z.re), fmt_f64(z.im)]
        })
        .collect();
    out.file("gram.csv", |f| write_table(f, &h, &["i", "j", "re", "im"], &body))?;
    out.file("measure.csv", |f| {
        h.write(f)?;
        mu.write_csv(f)
    })?;
    let mut checks = Assertions::default();
    let mut oracle = serde_json::Value::Null;
    if cfg.oracle {
        match brute_force_free_energy(&mu, &w, &d) {
            Ok(z) => {
                let rel = (fe.z - z).abs() / z.abs();
                checks.check(rel <= cfg.tolerances.free_energy_rel, || {
                    format!("free energy relative error {rel} > {}", cfg.tolerances.free_energy_rel)
                });
                oracle = json!({ "z": z, "relative_error": rel });
            }
            Err(FeketeError::BudgetExceeded { needed, .. }) => {
                oracle = json!({ "skipped": format!("{needed} tuples exceed budget {FREE_ENERGY_BUDGET}") });
            }
            Err(e) => return Err(e.into()),
        }
    }
    let sandwich = if d.r >= 1 && matches!(cfg.measure, MeasureConfig::Fekete) {
        let conf = vector_fekete(&mesh, &w, &d)?;
        let rep = sandwich_bounds(conf.rth_diameter.ln(), &g, mu.total_mass(), m_r)?;
        checks.check(rep.holds(), || format!("sandwich violated: {rep:?}"));
        Some(rep)
    } else {
        None
    };
    out.json(
        "summary.json",
        &json!({
            "dims": d,
            "atoms": mu.len(),
            "total_mass": mu.total_mass(),
            "log_det_gram": g.log_det,
            "log_z": fe.log_z,
            "z": fe.z,
            "oracle": oracle,
            "bm_constant": m_r,
            "sandwich": sandwich,
        }),
    )?;
    checks.finish()
}

pub fn energy(cfg: &EnergyCmd, seed: u64, out: &mut Output) -> CliResult<()> {
    let d = cfg.dims.dims()?;
    if d.r == 0 {
        return Err(CliError::config("dims.r", "energy needs r >= 1"));
    }
    if cfg.t_values.is_empty() {
        return Err(CliError::config("t_values", "at least one value required"));
    }
    let w = weight_vector(&cfg.weight, d.s)?;
    let mesh = cfg.set.mesh(d.r, d.n)?;
    let mu = build_measure(&cfg.measure, &mesh, &w, &d, seed)?;
    let omega = fields_or_random(&cfg.direction, &d, seed, "direction")?;
    let checks_at: Vec<DerivativeCheck> = cfg
        .t_values
        .iter()
        .map(|&t| derivative_check(&mu, &w, &omega, &d, t))
        .collect::<vecfekete::Result<_>>()?;
    let h = header("energy", seed)
        .with("dims", dims_label(&d))
        .with("weight", w.describe())
        .with("mesh", mesh_label(&mesh))
        .with("atoms", mu.len());
    let cols = ["t", "f", "d1_closed", "d2_closed", "d1_trace", "d2_trace", "d1_fd", "d2_fd"];
    let body: Vec<Vec<String>> = checks_at
        .iter()
        .map(|c| {
            [c.t, c.closed.f, c.closed.d1, c.closed.d2, c.trace.d1, c.trace.d2, c.fd.d1, c.fd.d2]
                .into_iter()
                .map(fmt_f64)
                .collect()
        })
        .collect();
    out.file("energy.csv", |f| write_table(f, &h, &cols, &body))?;
    let tol = cfg.tolerances;
    let mut checks = Assertions::default();
    let worst = |f: &dyn Fn(&DerivativeCheck) -> f64| checks_at.iter().map(f).fold(0.0, f64::max);
    let d1_trace = worst(&|c| c.d1_closed_vs_trace);
    let d2_trace = worst(&|c| c.d2_closed_vs_trace);
    let d1_fd = worst(&|c| c.d1_closed_vs_fd);
    let d2_fd = worst(&|c| rel_diff(c.closed.d2, c.fd.d2));
    let max_d2 = checks_at.iter().map(|c| c.closed.d2).fold(f64::NEG_INFINITY, f64::max);
    checks.check(d1_trace <= tol.trace_rel, || format!("f' closed vs trace {d1_trace} > {}", tol.trace_rel));
    checks.check(d1_fd <= tol.fd_rel, || format!("f' closed vs finite differences {d1_fd} > {}", tol.fd_rel));
    if let Some(bound) = tol.concavity {
        checks.check(max_d2 <= bound, || format!("max f'' {max_d2} > {bound}"));
    }
    out.json(
        "summary.json",
        &json!({
            "dims": d,
            "atoms": mu.len(),
            "direction": omega,
            "d1_closed_vs_trace": d1_trace,
            "d2_closed_vs_trace": d2_trace,
            "d1_closed_vs_fd": d1_fd,
            "d2_closed_vs_fd": d2_fd,
            "max_d2": max_d2,
        }),
    )?;
    checks.finish()
}

pub fn bergman(cfg: &BergmanCmd, seed: u64, out: &mut Output) -> CliResult<()> {
    let d = cfg.dims.dims()?;
    let w = weight_vector(&cfg.weight, d.s)?;
    let mesh = cfg.set.mesh(d.r, d.n)?;
    let mu = build_measure(&cfg.measure, &mesh, &w, &d, seed)?;
    let fields = fields_or_random(&cfg.omega, &d, seed, "omega")?;
    let omega = |x: &Point| -> vecfekete::Result<UVector> {
        Ok(UVector(fields.iter().map(|f| C64::new(f.eval(x), 0.0)).collect()))
    };
    let rep = bergman_density_current(&mu, &w, &d, &omega)?;
    let direct = measure_pairing(&mu, &omega)?.re;
    let h = header("bergman", seed)
        .with("dims", dims_label(&d))
        .with("weight", w.describe())
        .with("mesh", mesh_label(&mesh))
        .with("atoms", mu.len());
    let mut cols = vec!["atom".to_string()];
    for i in 1..=d.n {
        cols.push(format!("x{i}_re"));
        cols.push(format!("x{i}_im"));
    }
    cols.extend(["mass".into(), "density_factor".into()]);
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let body: Vec<Vec<String>> = mu
        .atoms
        .iter()
        .zip(&rep.factors)
        .enumerate()
        .map(|(a, (atom, f))| {
            let mut row = vec![(a + 1).to_string()];
            for z in &atom.x.coords {
                row.push(fmt_f64(z.re));
                row.push(fmt_f64(z.im));
            }
            row.push(fmt_f64(atom.mass));
            row.push(fmt_f64(*f));
            row
        })
        .collect();
    out.file("bergman.csv", |f| write_table(f, &h, &col_refs, &body))?;
    let mut checks = Assertions::default();
    if matches!(cfg.measure, MeasureConfig::FeketeEmpirical) {
        let worst = rep.factors.iter().map(|f| (f - 1.0).abs()).fold(0.0, f64::max);
        checks.check(worst <= 1e-8, || format!("density factors deviate from 1 by {worst}"));
        checks.check((rep.value - direct).abs() <= 1e-8 * direct.abs().max(1.0), || {
            format!("Bergman value {} differs from the empirical pairing {direct}", rep.value)
        });
    }
    out.json(
        "summary.json",
        &json!({
            "dims": d,
            "atoms": mu.len(),
            "omega": fields,
            "bergman_value": rep.value,
            "measure_value": direct,
        }),
    )?;
    checks.finish()
}

pub fn forms(cfg: &FormsCmd, seed: u64, out: &mut Output) -> CliResult<()> {
    let fc = cfg.form;
    let basis = lambda_basis(fc.n, fc.k).map_err(|e| CliError::config("form", e.to_string()))?;
    let d = basis.dims(fc.r).map_err(|e| CliError::config("form.r", e.to_string()))?;
    let set = match &cfg.set {
        Some(s) => s.clone(),
        None => SetConfig {
            kind: match fc.n {
                1 => SetKind::Interval,
                2 => SetKind::Square,
                3 => SetKind::Cube,
                _ => return Err(CliError::config("set", format!("no default set for n = {}", fc.n))),
            },
            density: None,
            path: None,
        },
    };
    let mesh = set.mesh(fc.r, fc.n)?;
    let conf = form_fekete(&basis, fc.r, &mesh)?;
    let w = WeightVector::unit(basis.s());
    let interp = Interpolator::from_configuration(&conf, &w)?;
    let h = header("forms", seed)
        .with("form", format!("n={} k={} r={} binomial={} N={}", fc.n, fc.k, fc.r, basis.s(), d.big_n))
        .with("mesh", mesh_label(&mesh));
    out.file("currents.csv", |f| conf.write_csv(f, &h))?;
    // seeded random form of degree r, reproduced coefficientwise
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<C64> = (0..d.big_n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let theta = polynomial_field(coeffs.clone(), w.clone(), d);
    let p = interp.interpolate(&theta)?;
    out.file("coefficients.csv", |f| p.write_csv(f, &basis, &h))?;
    let reproduction = p
        .coefficients
        .iter()
        .zip(&coeffs)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let lebesgue = lebesgue_estimate(&interp, &mesh)?;
    let mut checks = Assertions::default();
    checks.check(reproduction <= cfg.tolerances.reproduction, || {
        format!("reproduction error {reproduction} > {}", cfg.tolerances.reproduction)
    });
    checks.check(lebesgue <= d.big_n as f64, || format!("Lebesgue estimate {lebesgue} > N = {}", d.big_n));
    let mut segment = serde_json::Value::Null;
    if let Some(sc) = cfg.segment {
        if fc.k != 1 {
            return Err(CliError::config("segment", "the segment experiment needs k = 1"));
        }
        let initial = spread_segments(&d, sc.length).map_err(|e| CliError::config("segment", e.to_string()))?;
        let res = segment_shrinkage_experiment(initial, &d, sc.sweeps, sc.initial_step)?;
        out.file("segment_trace.csv", |f| write_trace_csv(f, &h, &res.trace))?;
        let monotone = res.trace.windows(2).all(|p| p[1].log_abs_det >= p[0].log_abs_det);
        checks.check(monotone, || "segment log|det| trace decreased".into());
        segment = json!({
            "sweeps": sc.sweeps,
            "monotone": monotone,
            "initial": res.trace.first(),
            "final": res.trace.last(),
            "segments": res.segments,
        });
    }
    out.json(
        "summary.json",
        &json!({
            "form": { "n": fc.n, "k": fc.k, "r": fc.r },
            "basis": (0..basis.s()).map(|a| basis.label(a)).collect::<Vec<_>>(),
            "dims": d,
            "log_abs_det": conf.log_abs_det,
            "reproduction_error": reproduction,
            "lebesgue_estimate": lebesgue,
            "segment": segment,
        }),
    )?;
    checks.finish()
}

pub fn selftest(cfg: &SelftestCmd, out: &mut Output) -> CliResult<()> {
    let scale = match cfg.scale {
        ScaleConfig::Quick => Scale::Quick,
        ScaleConfig::Full => Scale::Full,
    };
    let mut checks = run_all(scale);
    checks.extend(run_invariants(scale));
    for c in &checks {
        println!("{}", c.line());
    }
    out.json("selftest.json", &checks)?;
    let mut a = Assertions::default();
    for c in &checks {
        a.check(c.passed, || format!("check {} ({}) failed: {}", c.id, c.name, c.detail));
    }
    a.finish()
}
