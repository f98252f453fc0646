//! Driver for the `sweepcl` binary: resolves a problem, runs its solver
//! pipeline and writes one self-contained output directory per run.

pub mod report;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sweepcl::euler2d::{solve_oblique, solve_reflection, EulerSolution, TrackOptions};
use sweepcl::oracle::{
    cached_reference_euler, characteristics_scalar, exact_nozzle, theta_beta_mach, CacheHeader, MarchOptions,
};
use sweepcl::propagate::{fmt_real, Integrator};
use sweepcl::scalar2d::{solve_interior_shock, solve_rarefaction, Form, ScalarSolution, Scheme, SweepOptions};
use sweepcl::sweep1d::{solve_single_shock, solve_sonic_then_shock};
use sweepcl::systems::{make_burgers2d, ProblemInstance, ProblemKind, Side};
use sweepcl::SolverError;

pub use report::{RunReport, Table};

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or an unknown problem.
    Usage(String),
    Solver(SolverError),
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Output(_) => 4,
        }
    }

    /// Diagnostic JSON for solver failures.
    pub fn diagnostic(&self) -> String {
        let (class, message) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Solver(e) => ("solver", e.to_string()),
            CliError::Output(m) => ("output", m.clone()),
        };
        let mut obj = serde_json::Map::new();
        obj.insert("error".into(), class.into());
        obj.insert("message".into(), message.into());
        if let CliError::Solver(e) = self {
            obj.insert("detail".into(), format!("{e:?}").into());
        }
        serde_json::to_string_pretty(&serde_json::Value::Object(obj)).expect("json")
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Solver(e) => write!(f, "solver error: {e}"),
            CliError::Output(m) => write!(f, "output error: {m}"),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Io(m) => CliError::Output(m),
            other => CliError::Solver(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Registry name or path to a config file.
    pub problem: String,
    pub n: usize,
    pub scheme: Option<String>,
    pub form: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub emit_plots: bool,
    /// Overrides for problem parameters.
    pub seed_overrides: BTreeMap<String, f64>,
    /// Solver repetitions for the timing median.
    pub repetitions: usize,
}

impl RunConfig {
    pub fn new(problem: &str, n: usize) -> Self {
        Self {
            problem: problem.to_string(),
            n,
            scheme: None,
            form: None,
            output_dir: None,
            emit_plots: false,
            seed_overrides: BTreeMap::new(),
            repetitions: 3,
        }
    }
}

pub fn resolve_problem(name: &str, overrides: &BTreeMap<String, f64>) -> CliResult<ProblemInstance> {
    let mut p = match ProblemInstance::named(name) {
        Some(p) => p,
        None if Path::new(name).is_file() => {
            let text = fs::read_to_string(name)?;
            ProblemInstance::parse_config(&text).map_err(|e| CliError::Usage(format!("{name}: {e}")))?
        }
        None => {
            let known: Vec<String> = sweepcl::systems::registry().into_iter().map(|p| p.name).collect();
            return Err(CliError::Usage(format!("unknown problem `{name}` (known: {})", known.join(", "))));
        }
    };
    for (k, v) in overrides {
        p.params.insert(k.clone(), *v);
    }
    Ok(p)
}

/// Numerical method selected for a problem.
#[derive(Debug, Clone, Copy)]
enum Method {
    Nozzle(Integrator),
    Scalar(Scheme, Form),
    Euler,
}

impl Method {
    fn names(&self) -> (String, String) {
        match self {
            Method::Nozzle(i) => (i.name().into(), "conservative".into()),
            Method::Scalar(s, f) => (s.name().into(), f.name().into()),
            Method::Euler => ("lf".into(), "conservative".into()),
        }
    }
}

fn method_for(problem: &ProblemInstance, scheme: Option<&str>, form: Option<&str>) -> CliResult<Method> {
    let bad = |what: &str, v: &str| CliError::Usage(format!("{what} `{v}` is not valid for {}", problem.name));
    match problem.kind {
        ProblemKind::NozzleShock | ProblemKind::NozzleSonic => {
            if let Some(f) = form.filter(|f| *f != "conservative") {
                return Err(bad("form", f));
            }
            let s = scheme.unwrap_or("trap");
            Integrator::parse(s).map(Method::Nozzle).ok_or_else(|| bad("scheme", s))
        }
        ProblemKind::InteriorShock | ProblemKind::Rarefaction => {
            let s = scheme.unwrap_or("lf");
            let f = form.unwrap_or("conservative");
            let sch = Scheme::parse(s).ok_or_else(|| bad("scheme", s))?;
            let fm = Form::parse(f).ok_or_else(|| bad("form", f))?;
            Ok(Method::Scalar(sch, fm))
        }
        _ => {
            if let Some(s) = scheme.filter(|s| *s != "lf") {
                return Err(bad("scheme", s));
            }
            if let Some(f) = form.filter(|f| *f != "conservative") {
                return Err(bad("form", f));
            }
            Ok(Method::Euler)
        }
    }
}

/// Everything a finished solve writes out.
struct Outputs {
    field_csv: Vec<u8>,
    curves_csv: Vec<u8>,
    plot: String,
}

enum Solved {
    Shock1d(sweepcl::sweep1d::MatchResult1D<3>),
    Sonic(sweepcl::sweep1d::SonicShockResult),
    Scalar(ScalarSolution),
    Euler(EulerSolution),
}

fn solve_once(problem: &ProblemInstance, method: Method, n: usize) -> CliResult<Solved> {
    Ok(match (problem.kind, method) {
        (ProblemKind::NozzleShock, Method::Nozzle(i)) => Solved::Shock1d(solve_single_shock(problem, i, n)?),
        (ProblemKind::NozzleSonic, Method::Nozzle(i)) => Solved::Sonic(solve_sonic_then_shock(problem, i, n)?),
        (ProblemKind::InteriorShock, Method::Scalar(scheme, form)) => {
            let opts = SweepOptions { scheme, form, ..SweepOptions::default() };
            Solved::Scalar(solve_interior_shock(problem, &make_burgers2d(), &opts, n)?)
        }
        (ProblemKind::Rarefaction, Method::Scalar(scheme, form)) => {
            let opts = SweepOptions { scheme, form, ..SweepOptions::default() };
            Solved::Scalar(solve_rarefaction(problem, &make_burgers2d(), &opts, n)?)
        }
        (ProblemKind::Reflection, Method::Euler) => Solved::Euler(solve_reflection(problem, n, &TrackOptions::default())?),
        (ProblemKind::Oblique | ProblemKind::ObliqueNonconstant, Method::Euler) => {
            Solved::Euler(solve_oblique(problem, n, &TrackOptions::default())?)
        }
        _ => return Err(CliError::Usage(format!("no pipeline for {}", problem.name))),
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Solves `config` and fills a report; writes the output directory when one is set.
pub fn run(config: &RunConfig) -> CliResult<RunReport> {
    if config.n < 8 {
        return Err(CliError::Usage(format!("N must be at least 8, got {}", config.n)));
    }
    let problem = resolve_problem(&config.problem, &config.seed_overrides)?;
    let method = method_for(&problem, config.scheme.as_deref(), config.form.as_deref())?;
    let reps = config.repetitions.max(1);
    let mut samples = Vec::with_capacity(reps);
    let mut solved = None;
    for _ in 0..reps {
        let t = Instant::now();
        let s = solve_once(&problem, method, config.n)?;
        samples.push(t.elapsed().as_secs_f64());
        solved = Some(s);
    }
    let solved = solved.expect("at least one repetition");
    let (scheme, form) = method.names();
    let mut report = RunReport::new(&problem.name, &problem.hash_hex(), config.n, &scheme, &form);
    report.timings.repetitions = reps;
    report.timings.median_seconds = median(samples.clone());
    report.timings.samples = samples;
    let outputs = describe(&problem, &solved, &mut report)?;
    if let Some(dir) = &config.output_dir {
        write_outputs(dir, config, &problem, &report, &outputs)?;
    }
    Ok(report)
}

fn write_outputs(dir: &Path, config: &RunConfig, problem: &ProblemInstance, report: &RunReport, out: &Outputs) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let mut echo = problem.to_config_string();
    let _ = writeln!(echo, "\n[run]");
    let _ = writeln!(echo, "n = {}", config.n);
    let _ = writeln!(echo, "scheme = {}", report.scheme);
    let _ = writeln!(echo, "form = {}", report.form);
    let _ = writeln!(echo, "repetitions = {}", report.timings.repetitions);
    fs::write(dir.join("config.echo"), echo)?;
    fs::write(dir.join("field.csv"), &out.field_csv)?;
    fs::write(dir.join("curves.csv"), &out.curves_csv)?;
    fs::write(dir.join("report.json"), report.to_json())?;
    if config.emit_plots {
        fs::write(dir.join("plot.gp"), &out.plot)?;
    }
    Ok(())
}

fn csv_rows(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn plot_1d(ylabel: &str, column: usize) -> String {
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'x'\nset ylabel '{ylabel}'\n\
         set terminal pngcairo size 900,600\nset output 'field.png'\nplot 'field.csv' using 1:{column} with linespoints pt 7 ps 0.4\n"
    )
}

fn plot_2d(column: usize, label: &str) -> String {
    format!(
        "set datafile separator ','\nset xlabel 'x'\nset ylabel 'y'\nset title '{label}'\nset view map\n\
         set terminal pngcairo size 900,700\nset output 'field.png'\n\
         splot 'field.csv' using 1:2:{column} every ::1 with points pt 5 ps 0.3 palette notitle, \\\n  \
         'curves.csv' using 3:4:(0) every ::1 with points pt 7 ps 0.3 lc rgb 'black' notitle\n"
    )
}

fn describe(problem: &ProblemInstance, solved: &Solved, report: &mut RunReport) -> CliResult<Outputs> {
    match solved {
        Solved::Shock1d(r) => describe_shock1d(problem, r, report),
        Solved::Sonic(r) => describe_sonic(problem, r, report),
        Solved::Scalar(s) => describe_scalar(problem, s, report),
        Solved::Euler(s) => describe_euler(problem, s, report),
    }
}

fn nozzle_field(problem: &ProblemInstance, xs: &[f64], us: &[sweepcl::systems::State<3>], x_s: f64) -> CliResult<Vec<u8>> {
    let sys = problem.nozzle_system()?;
    let mut rows = Vec::with_capacity(xs.len());
    for (x, u) in xs.iter().zip(us) {
        let p = sys.primitive(u, *x)?;
        let branch = if *x <= x_s { 0 } else { 1 };
        rows.push(vec![fmt_real(*x), fmt_real(p.rho), fmt_real(p.u), fmt_real(p.p), branch.to_string()]);
    }
    Ok(csv_rows(&["x", "rho", "u", "p", "branch_id"], rows.into_iter()))
}

fn describe_shock1d(
    problem: &ProblemInstance,
    r: &sweepcl::sweep1d::MatchResult1D<3>,
    report: &mut RunReport,
) -> CliResult<Outputs> {
    let sys = problem.nozzle_system()?;
    let exact = exact_nozzle(problem)?;
    let (xs, us) = r.nodes();
    let (lo, hi) = problem.interval()?;
    let h = (hi - lo) / (xs.len() as f64 - 1.0).max(1.0);
    let h = r.left_branch.grid.get(1).map_or(h, |x1| x1 - r.left_branch.grid[0]);
    let mut errs = Vec::with_capacity(xs.len());
    for (x, u) in xs.iter().zip(&us) {
        errs.push(sys.primitive(u, *x)?.rho - exact.primitive(*x).rho);
    }
    let left = (lo, lo + 0.45 * (hi - lo));
    let right = (lo + 0.55 * (hi - lo), hi);
    report.error("l2", "rho", &format!("[{},{}]", left.0, left.1), report::scaled_l2(&xs, &errs, left.0, left.1, h));
    report.error("l2", "rho", &format!("[{},{}]", right.0, right.1), report::scaled_l2(&xs, &errs, right.0, right.1, h));
    report.shock.insert("x_s".into(), r.shock_location);
    report.shock.insert("x_s_exact".into(), exact.shock_x);
    report.shock.insert("x_s_error".into(), (r.shock_location - exact.shock_x).abs());
    report.residuals.insert("jump".into(), r.jump_residual);
    report.residuals.insert("boundary".into(), r.boundary_residual);
    report.counts.insert("evaluations".into(), r.evaluations);
    Ok(Outputs {
        field_csv: nozzle_field(problem, &xs, &us, r.shock_location)?,
        curves_csv: csv_rows(&["name", "x"], std::iter::once(vec!["shock".into(), fmt_real(r.shock_location)])),
        plot: plot_1d("density", 2),
    })
}

fn describe_sonic(
    problem: &ProblemInstance,
    r: &sweepcl::sweep1d::SonicShockResult,
    report: &mut RunReport,
) -> CliResult<Outputs> {
    let sys = problem.nozzle_system()?;
    let exact = exact_nozzle(problem)?;
    let m = &r.matched;
    let (xs, us) = m.nodes();
    let (lo, hi) = problem.interval()?;
    let h = m.left_branch.grid[1] - m.left_branch.grid[0];
    let (a, b) = (m.shock_location.min(exact.shock_x), m.shock_location.max(exact.shock_x));
    let mut errs = Vec::with_capacity(xs.len());
    for (x, u) in xs.iter().zip(&us) {
        let e = if *x >= a && *x <= b { 0.0 } else { sys.primitive(u, *x)?.p - exact.primitive(*x).p };
        errs.push(e);
    }
    report.error("l2", "p", &format!("[{lo},{hi}]"), report::scaled_l2(&xs, &errs, lo, hi, h));
    report.shock.insert("x_t".into(), r.turning.x_t);
    if let Some(sx) = exact.sonic_x {
        report.shock.insert("x_t_exact".into(), sx);
    }
    if let Some(alpha) = r.turning.alpha {
        report.shock.insert("alpha".into(), alpha);
        report.shock.insert("alpha_error".into(), (alpha - exact.inlet_mach).abs());
    }
    report.shock.insert("x_s".into(), m.shock_location);
    report.shock.insert("x_s_exact".into(), exact.shock_x);
    report.shock.insert("x_s_error".into(), (m.shock_location - exact.shock_x).abs());
    report.residuals.insert("jump".into(), m.jump_residual);
    report.residuals.insert("boundary".into(), m.boundary_residual);
    report.residuals.insert("compatibility".into(), r.turning.compatibility);
    report.counts.insert("alpha_evaluations".into(), r.alpha_evaluations);
    let curves = csv_rows(
        &["name", "x"],
        [
            vec!["turning_point".to_string(), fmt_real(r.turning.x_t)],
            vec!["shock".to_string(), fmt_real(m.shock_location)],
        ]
        .into_iter(),
    );
    Ok(Outputs {
        field_csv: nozzle_field(problem, &xs, &us, m.shock_location)?,
        curves_csv: curves,
        plot: plot_1d("density", 2),
    })
}

fn describe_scalar(problem: &ProblemInstance, s: &ScalarSolution, report: &mut RunReport) -> CliResult<Outputs> {
    let law = make_burgers2d();
    let exact = characteristics_scalar(problem, &law)?;
    let g = s.field.grid;
    let mut l1 = 0.0;
    let (mut umin, mut umax) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let u = s.field.at(i, j)[0];
            l1 += (u - exact.eval(g.x(i), g.y(j))).abs();
            umin = umin.min(u);
            umax = umax.max(u);
        }
    }
    report.error("l1", "u", "domain", l1 * g.hx() * g.hy());
    report.shock.insert("u_min".into(), umin);
    report.shock.insert("u_max".into(), umax);
    if let Some((x, y)) = s.focal_point {
        report.shock.insert("focus_x".into(), x);
        report.shock.insert("focus_y".into(), y);
        if let Some((ex, ey)) = exact.focal_point {
            report.shock.insert("focus_error".into(), (x - ex).hypot(y - ey));
        }
    }
    report.counts.insert("sweeps".into(), s.sweeps);
    report.counts.insert("curves".into(), s.curves.len());
    for (k, name) in s.branch_names.iter().enumerate() {
        report.provenance.insert(format!("branch_{k}"), name.clone());
    }
    let mut field = Vec::new();
    s.write_csv(&mut field)?;
    let mut rows = Vec::new();
    for c in &s.curves {
        let kind = format!("{:?}", c.kind).to_lowercase();
        let name = format!("{}|{}", c.left_branch, c.right_branch);
        for (x, y) in &c.nodes {
            rows.push(vec![name.clone(), kind.clone(), fmt_real(*x), fmt_real(*y)]);
        }
    }
    Ok(Outputs {
        field_csv: field,
        curves_csv: csv_rows(&["name", "kind", "x", "y"], rows.into_iter()),
        plot: plot_2d(3, "u"),
    })
}

fn describe_euler(problem: &ProblemInstance, s: &EulerSolution, report: &mut RunReport) -> CliResult<Outputs> {
    let sys = problem.euler_system();
    let gamma = problem.gamma();
    for c in &s.curves {
        let max_res = c.residuals.iter().cloned().fold(0.0, f64::max);
        report.residuals.insert(format!("{}_rh", c.name), max_res);
        report.shock.insert(format!("{}_angle_deg", c.name), c.mean_angle_deg());
        let machs: Vec<f64> = c.downstream.iter().map(|u| sys.mach(u)).collect();
        report
            .shock
            .insert(format!("{}_downstream_mach", c.name), machs.iter().sum::<f64>() / machs.len().max(1) as f64);
    }
    if let Some(x) = s.x_star {
        report.shock.insert("x_star".into(), x);
    }
    // oblique-shock relation for constant upstream data
    let left = problem.euler_state_at(Side::Left, 0.25 * problem.rectangle()?.3)?;
    let lp = sys.primitive(&left)?;
    match problem.kind {
        ProblemKind::Oblique => {
            if let sweepcl::systems::BoundaryCondition::Wedge { angle_deg, .. } = problem.boundary(Side::Bottom) {
                let rel = theta_beta_mach(lp.mach(gamma), angle_deg.to_radians(), gamma)?;
                report.shock.insert("expected_angle_deg".into(), rel.beta.to_degrees());
                report.shock.insert("expected_downstream_mach".into(), rel.mach_post);
            }
        }
        ProblemKind::Reflection => {
            let top = sys.primitive(&problem.euler_state_at(Side::Top, 0.0)?)?;
            let inc = theta_beta_mach(lp.mach(gamma), -top.flow_angle(), gamma)?;
            let refl = theta_beta_mach(top.mach(gamma), -top.flow_angle(), gamma)?;
            report.shock.insert("expected_incident_angle_deg".into(), -inc.beta.to_degrees());
            report
                .shock
                .insert("expected_reflected_angle_deg".into(), (refl.beta + top.flow_angle()).to_degrees());
        }
        _ => {}
    }
    let g = s.field.grid;
    let wall_v = (0..=g.nx)
        .filter(|&i| s.region_id[g.idx(i, 0)] == 2)
        .map(|i| sys.primitive_unchecked(&s.field.at(i, 0)).v.abs())
        .fold(0.0, f64::max);
    if problem.kind == ProblemKind::Reflection {
        report.residuals.insert("wall_v".into(), wall_v);
    }
    report.counts.insert("passes".into(), s.passes);
    report.counts.insert("track_iterations".into(), s.stats.iterations);
    report.counts.insert("track_fallbacks".into(), s.stats.fallbacks);
    for (k, name) in s.region_names.iter().enumerate() {
        report.provenance.insert(format!("region_{k}"), name.clone());
    }
    let mut field = Vec::new();
    s.write_csv(&sys, &mut field)?;
    let mut rows = Vec::new();
    for c in &s.curves {
        for k in 0..c.nodes.len() {
            let d = sys.primitive_unchecked(&c.downstream[k]);
            rows.push(vec![
                c.name.clone(),
                k.to_string(),
                fmt_real(c.nodes[k].0),
                fmt_real(c.nodes[k].1),
                fmt_real(c.angles[k].to_degrees()),
                fmt_real(d.mach(gamma)),
                fmt_real(c.residuals[k]),
            ]);
        }
    }
    Ok(Outputs {
        field_csv: field,
        curves_csv: csv_rows(&["name", "node", "x", "y", "angle_deg", "downstream_mach", "residual"], rows.into_iter()),
        plot: plot_2d(7, "Mach"),
    })
}

/// Runs `config` once per grid size and tabulates errors, rates and times.
pub fn table(config: &RunConfig, ns: &[usize]) -> CliResult<(Vec<RunReport>, Table)> {
    if ns.len() < 2 {
        return Err(CliError::Usage("a table needs at least two values of N".into()));
    }
    let mut reports = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut c = config.clone();
        c.n = n;
        c.output_dir = config.output_dir.as_ref().map(|d| d.join(format!("n{n}")));
        reports.push(run(&c)?);
    }
    let title = format!("{} ({})", reports[0].problem, reports[0].scheme);
    let t = Table::from_reports(&title, &reports);
    if let Some(dir) = &config.output_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("table.csv"), t.to_csv())?;
        fs::write(dir.join("table.txt"), t.render())?;
        let mut summary = reports[0].clone();
        summary.tables = vec![t.clone()];
        fs::write(dir.join("report.json"), summary.to_json())?;
    }
    Ok((reports, t))
}

/// Generates (or reads from the cache) the reference field for a problem
/// and writes it out. Euler problems use the time-marched reference;
/// the others sample their exact solution.
pub fn oracle(problem_name: &str, n: usize, out: Option<&Path>) -> CliResult<RunReport> {
    if n < 2 {
        return Err(CliError::Usage(format!("N must be at least 2, got {n}")));
    }
    let problem = resolve_problem(problem_name, &BTreeMap::new())?;
    let mut report = RunReport::new(&problem.name, &problem.hash_hex(), n, "oracle", "-");
    let field;
    match problem.kind {
        ProblemKind::NozzleShock | ProblemKind::NozzleSonic => {
            let ex = exact_nozzle(&problem)?;
            let (lo, hi) = problem.interval()?;
            let rows = (0..=n).map(|k| {
                let x = lo + (hi - lo) * k as f64 / n as f64;
                let p = ex.primitive(x);
                vec![fmt_real(x), fmt_real(p.rho), fmt_real(p.u), fmt_real(p.p)]
            });
            field = csv_rows(&["x", "rho", "u", "p"], rows);
            report.shock.insert("x_s".into(), ex.shock_x);
        }
        ProblemKind::InteriorShock | ProblemKind::Rarefaction => {
            let ex = characteristics_scalar(&problem, &make_burgers2d())?;
            let (x0, x1, y0, y1) = problem.rectangle()?;
            let mut rows = Vec::new();
            for j in 0..=n {
                for i in 0..=n {
                    let x = x0 + (x1 - x0) * i as f64 / n as f64;
                    let y = y0 + (y1 - y0) * j as f64 / n as f64;
                    rows.push(vec![fmt_real(x), fmt_real(y), fmt_real(ex.eval(x, y))]);
                }
            }
            field = csv_rows(&["x", "y", "u"], rows.into_iter());
        }
        _ => {
            let opts = MarchOptions::default();
            let r = cached_reference_euler(&problem, n, &opts)?;
            let sys = problem.euler_system();
            let header = CacheHeader {
                problem: problem.name.clone(),
                hash: problem.hash_hex(),
                n,
                cfl: opts.cfl,
                tol: opts.tol,
                steps: r.steps,
                final_update: r.final_update,
                components: 4,
            };
            report.counts.insert("steps".into(), r.steps);
            report.residuals.insert("final_update".into(), r.final_update);
            report.provenance.insert("cache_dir".into(), sweepcl::oracle::cache_dir().display().to_string());
            report.provenance.insert("cache_hash".into(), header.hash.clone());
            let g = r.field.grid;
            let mut rows = Vec::new();
            for j in 0..=g.ny {
                for i in 0..=g.nx {
                    let mut row = vec![fmt_real(g.x(i)), fmt_real(g.y(j))];
                    if r.field.is_valid(i, j) {
                        let p = sys.primitive_unchecked(&r.field.at(i, j));
                        row.extend([p.rho, p.u, p.v, p.p, p.mach(problem.gamma())].map(fmt_real));
                    } else {
                        row.extend(std::iter::repeat("NaN".to_string()).take(5));
                    }
                    rows.push(row);
                }
            }
            field = csv_rows(&["x", "y", "rho", "u", "v", "p", "mach"], rows.into_iter());
        }
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("field.csv"), &field)?;
        fs::write(dir.join("report.json"), report.to_json())?;
    }
    Ok(report)
}
