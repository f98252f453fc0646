//! Two-dimensional scalar laws `f(u)_x + g(u)_y = 0`: line-by-line sweeps with
//! three-point schemes, matching of branches along shock and continuity
//! curves, and the two composite constructions (a shock born inside the
//! domain, and a centred rarefaction).

use serde::Serialize;

use crate::error::{Result, SolverError};
use crate::grid::{Field2D, Grid2D, SweepDir};
use crate::oracle::gauss_legendre;
use crate::systems::{ProblemInstance, ProblemKind, Profile, ScalarLaw, Side, State};

/// A swept solution branch. Only nodes with `valid` set carry values.
pub type Branch2D = Field2D<1>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    LaxFriedrichs,
    LaxWendroff,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::LaxFriedrichs => "lf",
            Scheme::LaxWendroff => "lw",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        match s {
            "lf" | "lax-friedrichs" => Some(Scheme::LaxFriedrichs),
            "lw" | "lax-wendroff" => Some(Scheme::LaxWendroff),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    Conservative,
    Nonconservative,
}

impl Form {
    pub fn name(self) -> &'static str {
        match self {
            Form::Conservative => "conservative",
            Form::Nonconservative => "nonconservative",
        }
    }

    pub fn parse(s: &str) -> Option<Form> {
        match s {
            "conservative" | "c" => Some(Form::Conservative),
            "nonconservative" | "nc" => Some(Form::Nonconservative),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub scheme: Scheme,
    pub form: Form,
    /// Target stability ratio when substeps are chosen automatically.
    pub cfl: f64,
    /// Substeps per grid line; `None` picks the smallest stable count per line.
    pub substeps: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::LaxFriedrichs,
            form: Form::Conservative,
            cfl: 0.9,
            substeps: None,
        }
    }
}

const MAX_SUBSTEPS: usize = 100_000;

/// Condition on a side parallel to the marching direction.
#[derive(Clone, Copy)]
pub enum Lateral<'a> {
    /// Zeroth-order extrapolation from the neighbour.
    Copy,
    /// Linear extrapolation from the two nearest nodes.
    Extrapolate,
    /// Value as a function of the marched coordinate.
    Dirichlet(&'a dyn Fn(f64) -> f64),
}

/// Data for one sweep: values on the starting line (as a function of the
/// coordinate along it) and the two lateral sides, lower coordinate first.
#[derive(Clone, Copy)]
pub struct SweepData<'a> {
    pub inflow: &'a dyn Fn(f64) -> f64,
    pub lower: Lateral<'a>,
    pub upper: Lateral<'a>,
}

/// The marched and transverse fluxes for a sweep direction.
struct Axes<'a> {
    law: &'a ScalarLaw,
    along_y: bool,
}

impl Axes<'_> {
    fn t(&self, u: f64) -> f64 {
        if self.along_y {
            (self.law.g)(u)
        } else {
            (self.law.f)(u)
        }
    }

    fn dt(&self, u: f64) -> f64 {
        if self.along_y {
            (self.law.dg)(u)
        } else {
            (self.law.df)(u)
        }
    }

    fn s(&self, u: f64) -> f64 {
        if self.along_y {
            (self.law.f)(u)
        } else {
            (self.law.g)(u)
        }
    }

    fn ds(&self, u: f64) -> f64 {
        if self.along_y {
            (self.law.df)(u)
        } else {
            (self.law.dg)(u)
        }
    }

    /// Transverse characteristic speed per unit of marched distance.
    fn speed(&self, u: f64) -> f64 {
        self.ds(u) / self.dt(u)
    }

    /// `u` with `t(u) = target`, Newton from `guess`.
    fn invert(&self, target: f64, guess: f64) -> Result<f64> {
        let mut u = guess;
        for it in 0..60 {
            let r = self.t(u) - target;
            if r.abs() <= 1e-14 * (1.0 + target.abs()) {
                return Ok(u);
            }
            let d = self.dt(u);
            if d == 0.0 || !d.is_finite() {
                return Err(SolverError::InversionFailure {
                    iterations: it,
                    residual: r.abs(),
                });
            }
            let mut step = r / d;
            // keep to the branch of the guess: t' must not change sign
            while self.dt(u - step).signum() != d.signum() && step.abs() > 1e-300 {
                step *= 0.5;
            }
            u -= step;
        }
        let r = (self.t(u) - target).abs();
        if r <= 1e-10 * (1.0 + target.abs()) {
            Ok(u)
        } else {
            Err(SolverError::InversionFailure {
                iterations: 60,
                residual: r,
            })
        }
    }
}

/// One scheme step on a line; `rho` is the signed marched step over the
/// transverse spacing. Only interior points are written.
fn advance(ax: &Axes, opts: &SweepOptions, rho: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
    let n = u.len();
    match (opts.scheme, opts.form) {
        (Scheme::LaxFriedrichs, Form::Conservative) => {
            for i in 1..n - 1 {
                let t = 0.5 * (ax.t(u[i + 1]) + ax.t(u[i - 1])) - 0.5 * rho * (ax.s(u[i + 1]) - ax.s(u[i - 1]));
                out[i] = ax.invert(t, u[i])?;
            }
        }
        (Scheme::LaxFriedrichs, Form::Nonconservative) => {
            for i in 1..n - 1 {
                out[i] = 0.5 * (u[i + 1] + u[i - 1]) - 0.5 * rho * ax.speed(u[i]) * (u[i + 1] - u[i - 1]);
            }
        }
        (Scheme::LaxWendroff, Form::Conservative) => {
            // Richtmyer two-step form
            let mut half = vec![0.0; n - 1];
            for i in 0..n - 1 {
                let t = 0.5 * (ax.t(u[i]) + ax.t(u[i + 1])) - 0.5 * rho * (ax.s(u[i + 1]) - ax.s(u[i]));
                half[i] = ax.invert(t, 0.5 * (u[i] + u[i + 1]))?;
            }
            for i in 1..n - 1 {
                let t = ax.t(u[i]) - rho * (ax.s(half[i]) - ax.s(half[i - 1]));
                out[i] = ax.invert(t, u[i])?;
            }
        }
        (Scheme::LaxWendroff, Form::Nonconservative) => {
            for i in 1..n - 1 {
                let c = rho * ax.speed(u[i]);
                out[i] = u[i] - 0.5 * c * (u[i + 1] - u[i - 1]) + 0.5 * c * c * (u[i + 1] - 2.0 * u[i] + u[i - 1]);
            }
        }
    }
    Ok(())
}

/// Fills a branch line by line from the side the sweep starts on.
///
/// For sweeps from the top or right the law is marched backwards, i.e. as
/// `-f(u)_x - g(u)_y = 0` forward in the reversed coordinate.
pub fn sweep_scalar(
    law: &ScalarLaw,
    grid: Grid2D,
    dir: SweepDir,
    data: &SweepData,
    opts: &SweepOptions,
) -> Result<Branch2D> {
    let (along_y, sign) = match dir {
        SweepDir::FromBottom => (true, 1.0),
        SweepDir::FromTop => (true, -1.0),
        SweepDir::FromLeft => (false, 1.0),
        SweepDir::FromRight => (false, -1.0),
        other => return Err(SolverError::Config(format!("{other:?} is not a sweep direction"))),
    };
    let ax = Axes { law, along_y };
    let (ns, nt) = if along_y { (grid.nx, grid.ny) } else { (grid.ny, grid.nx) };
    let (hs, ht) = if along_y { (grid.hx(), grid.hy()) } else { (grid.hy(), grid.hx()) };
    let scoord = |i: usize| if along_y { grid.x(i) } else { grid.y(i) };
    let tcoord = |k: usize| {
        let k = if sign > 0.0 { k } else { nt - k };
        if along_y {
            grid.y(k)
        } else {
            grid.x(k)
        }
    };
    let mut field = Field2D::filled(grid, State::<1>::zeros(), dir);
    let store = |k: usize, line: &[f64], field: &mut Branch2D| {
        let k = if sign > 0.0 { k } else { nt - k };
        for (i, &v) in line.iter().enumerate() {
            let (gi, gj) = if along_y { (i, k) } else { (k, i) };
            field.set(gi, gj, State::<1>::new(v));
        }
    };
    let mut line: Vec<f64> = (0..=ns).map(|i| (data.inflow)(scoord(i))).collect();
    let orient = ax.dt(line[0]).signum();
    if let Some(bad) = line.iter().find(|&&u| ax.dt(u).signum() != orient || ax.dt(u) == 0.0) {
        return Err(SolverError::Config(format!(
            "marched axis not time-like: the marched flux has zero or mixed slope (u = {bad})"
        )));
    }
    store(0, &line, &mut field);
    let mut next = line.clone();
    for k in 1..=nt {
        let t_new = tcoord(k);
        let maxc = line.iter().map(|&u| ax.speed(u).abs()).fold(0.0, f64::max);
        let ratio = ht / hs * maxc;
        let m = match opts.substeps {
            Some(m) => {
                let m = m.max(1);
                if ratio / m as f64 > 1.0 {
                    return Err(SolverError::Cfl {
                        ratio: ratio / m as f64,
                        limit: 1.0,
                    });
                }
                m
            }
            None => {
                let m = (ratio / opts.cfl).ceil().max(1.0);
                if !(m <= MAX_SUBSTEPS as f64) {
                    return Err(SolverError::Cfl {
                        ratio: ratio / MAX_SUBSTEPS as f64,
                        limit: opts.cfl,
                    });
                }
                m as usize
            }
        };
        let rho = sign * ht / (m as f64 * hs);
        let t_old = tcoord(k - 1);
        for q in 1..=m {
            advance(&ax, opts, rho, &line, &mut next)?;
            let t = t_old + (t_new - t_old) * q as f64 / m as f64;
            next[0] = match data.lower {
                Lateral::Copy => next[1],
                Lateral::Extrapolate => 2.0 * next[1] - next[2],
                Lateral::Dirichlet(f) => f(t),
            };
            next[ns] = match data.upper {
                Lateral::Copy => next[ns - 1],
                Lateral::Extrapolate => 2.0 * next[ns - 1] - next[ns - 2],
                Lateral::Dirichlet(f) => f(t),
            };
            std::mem::swap(&mut line, &mut next);
        }
        if let Some(bad) = line.iter().find(|u| !u.is_finite()) {
            return Err(SolverError::Numerical {
                what: format!("sweep produced {bad} on line {k}"),
                residual: f64::NAN,
            });
        }
        store(k, &line, &mut field);
    }
    Ok(field)
}

/// Smooth continuation of data given on `x < x_star` into `x > x_star`:
/// linear over `[x_star, x_star + eps]` to the value `data(x_star + eps)`,
/// constant beyond, then convolved with a smooth bump of half-width
/// `width`. Constant data come back unchanged.
pub fn extend_boundary_data(
    data: impl Fn(f64) -> f64 + 'static,
    x_star: f64,
    eps: f64,
    width: f64,
) -> Box<dyn Fn(f64) -> f64> {
    let u0 = data(x_star);
    let ue = data(x_star + eps);
    let ramp = move |x: f64| -> f64 {
        if x <= x_star {
            data(x)
        } else if x >= x_star + eps {
            ue
        } else {
            u0 + (x - x_star) / eps * (ue - u0)
        }
    };
    if width <= 0.0 {
        return Box::new(ramp);
    }
    let (nodes, weights) = gauss_legendre(24);
    let bump = |t: f64| if t.abs() < 1.0 { (-1.0 / (1.0 - t * t)).exp() } else { 0.0 };
    // normalise the kernel with the same quadrature it is applied with
    let pieces = 8;
    let mut mass = 0.0;
    for p in 0..pieces {
        let (a, b) = (-1.0 + 2.0 * p as f64 / pieces as f64, -1.0 + 2.0 * (p + 1) as f64 / pieces as f64);
        for (xi, wi) in nodes.iter().zip(&weights) {
            mass += 0.5 * (b - a) * wi * bump(0.5 * (a + b) + 0.5 * (b - a) * xi);
        }
    }
    Box::new(move |x: f64| {
        let mut acc = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in 0..pieces {
            let (a, b) = (-1.0 + 2.0 * p as f64 / pieces as f64, -1.0 + 2.0 * (p + 1) as f64 / pieces as f64);
            for (xi, wi) in nodes.iter().zip(&weights) {
                let t = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                let v = ramp(x - width * t);
                lo = lo.min(v);
                hi = hi.max(v);
                acc += 0.5 * (b - a) * wi * bump(t) * v;
            }
        }
        // a convex combination; the clamp only removes rounding
        (acc / mass).clamp(lo, hi)
    })
}

/// Mirror image of [`extend_boundary_data`]: data on `x > x_star` continued
/// into `x < x_star`.
pub fn extend_boundary_data_leftward(
    data: impl Fn(f64) -> f64 + 'static,
    x_star: f64,
    eps: f64,
    width: f64,
) -> Box<dyn Fn(f64) -> f64> {
    let mirrored = extend_boundary_data(move |x| data(2.0 * x_star - x), x_star, eps, width);
    Box::new(move |x| mirrored(2.0 * x_star - x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchKind {
    Shock,
    Continuity,
}

/// Polyline separating two branches; `left` is used on the side of smaller x.
#[derive(Debug, Clone, Serialize)]
pub struct MatchCurve {
    pub nodes: Vec<(f64, f64)>,
    pub kind: MatchKind,
    pub left_branch: String,
    pub right_branch: String,
    /// The curve left the region where both branches are valid.
    pub truncated: bool,
    /// `|u_left - u_right|` at each node, NaN where a branch has no value.
    pub gaps: Vec<f64>,
}

impl MatchCurve {
    /// `x` of the curve at height `y`, for curves monotone in `y`.
    pub fn x_at(&self, y: f64) -> Option<f64> {
        let mut pts = self.nodes.clone();
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (first, last) = (pts.first()?, pts.last()?);
        if y < first.1 - 1e-12 || y > last.1 + 1e-12 {
            return None;
        }
        if pts.len() == 1 {
            return Some(first.0);
        }
        let k = pts.partition_point(|p| p.1 < y).clamp(1, pts.len() - 1);
        let (a, b) = (pts[k - 1], pts[k]);
        if b.1 == a.1 {
            return Some(a.0);
        }
        Some(a.0 + (y - a.1) / (b.1 - a.1) * (b.0 - a.0))
    }

    pub fn end(&self) -> (f64, f64) {
        *self.nodes.last().expect("curves hold their seed")
    }
}

/// Where a curve stops, besides the domain boundary.
#[derive(Debug, Clone, Copy)]
pub enum MatchStop {
    /// Shock curves: march in x to this abscissa.
    AtX(f64),
    /// Continuity curves: follow grid rows down to this height.
    DownToY(f64),
}

fn valid_at(b: &Branch2D, x: f64, y: f64) -> bool {
    let g = b.grid;
    if x < g.x0 - 1e-12 || x > g.x1 + 1e-12 || y < g.y0 - 1e-12 || y > g.y1 + 1e-12 {
        return false;
    }
    let (i, j, _, _) = g.locate(x, y);
    b.is_valid(i, j) && b.is_valid(i + 1, j) && b.is_valid(i, j + 1) && b.is_valid(i + 1, j + 1)
}

fn value(b: &Branch2D, x: f64, y: f64) -> f64 {
    b.bilinear(x, y)[0]
}

/// `dy/dx = [g] / [f]`, with the characteristic limit for equal states.
fn shock_slope(law: &ScalarLaw, ul: f64, ur: f64) -> f64 {
    let df = (law.f)(ul) - (law.f)(ur);
    let dg = (law.g)(ul) - (law.g)(ur);
    if (ul - ur).abs() <= 1e-12 * (1.0 + ul.abs()) {
        let m = 0.5 * (ul + ur);
        (law.dg)(m) / (law.df)(m)
    } else {
        dg / df
    }
}

/// Marches a curve separating `left` and `right` from `start`.
///
/// Shock curves integrate `dy/dx = [g]/[f]` by the explicit midpoint rule
/// with step `h_x`, branch values interpolated bilinearly. Continuity curves
/// follow `u_left = u_right` row by row.
pub fn match_branches(
    left: &Branch2D,
    right: &Branch2D,
    law: &ScalarLaw,
    start: (f64, f64),
    kind: MatchKind,
    stop: MatchStop,
    names: (&str, &str),
) -> Result<MatchCurve> {
    let mut curve = MatchCurve {
        nodes: vec![start],
        kind,
        left_branch: names.0.to_string(),
        right_branch: names.1.to_string(),
        truncated: false,
        gaps: Vec::new(),
    };
    match (kind, stop) {
        (MatchKind::Shock, MatchStop::AtX(x_end)) => {
            march_shock(left, right, law, &mut curve, x_end)?;
        }
        (MatchKind::Continuity, MatchStop::DownToY(y_end)) => {
            follow_continuity(left, right, &mut curve, y_end);
        }
        _ => return Err(SolverError::Config("shock curves stop at an abscissa, continuity curves at a height".into())),
    }
    curve.gaps = curve
        .nodes
        .iter()
        .map(|&(x, y)| match (value_near(left, x, y), value_near(right, x, y)) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => f64::NAN,
        })
        .collect();
    Ok(curve)
}

/// Branch value with `y` clamped into the branch's rows when it lies within
/// two cells of them.
fn value_near(b: &Branch2D, x: f64, y: f64) -> Option<f64> {
    let g = b.grid;
    if y < g.y0 - 2.0 * g.hy() || y > g.y1 + 2.0 * g.hy() {
        return None;
    }
    let yc = y.clamp(g.y0, g.y1);
    valid_at(b, x, yc).then(|| value(b, x, yc))
}

fn march_shock(left: &Branch2D, right: &Branch2D, law: &ScalarLaw, curve: &mut MatchCurve, x_end: f64) -> Result<()> {
    let g = left.grid;
    let (y_lo, y_hi) = (g.y0.min(right.grid.y0), g.y1.max(right.grid.y1));
    let (mut x, mut y) = curve.nodes[0];
    let dir = (x_end - x).signum();
    if dir == 0.0 {
        return Ok(());
    }
    let h = g.hx() * dir;
    // weak matches sit where both branches nearly agree; only reversed
    // jumps well above the discretisation level count as violations
    let entropy_slack = g.hx().max(g.hy()).sqrt();
    let states = |x: f64, y: f64| Some((value_near(left, x, y)?, value_near(right, x, y)?));
    let slope_at = |x: f64, y: f64| states(x, y).map(|(a, b)| shock_slope(law, a, b));
    loop {
        let remaining = x_end - x;
        if remaining * dir <= 1e-12 * g.hx() {
            break;
        }
        let step = if remaining.abs() < h.abs() { remaining } else { h };
        let Some((ul, ur)) = states(x, y) else {
            curve.truncated = true;
            break;
        };
        let scale = 1.0f64.max(law.char_slope(ul).abs()).max(law.char_slope(ur).abs());
        if law.char_slope(ul) < law.char_slope(ur) - entropy_slack * scale {
            return Err(SolverError::NoJump(format!(
                "entropy violated on the {}|{} curve at ({x:.4}, {y:.4}): {ul} vs {ur}",
                curve.left_branch, curve.right_branch
            )));
        }
        let Some(k1) = slope_at(x, y) else {
            curve.truncated = true;
            break;
        };
        let Some(k2) = slope_at(x + 0.5 * step, y + 0.5 * step * k1) else {
            curve.truncated = true;
            break;
        };
        let (xn, yn) = (x + step, y + step * k2);
        if yn > y_hi || yn < y_lo {
            let yb = if yn > y_hi { y_hi } else { y_lo };
            let t = (yb - y) / (yn - y);
            curve.nodes.push((x + t * step, yb));
            break;
        }
        x = xn;
        y = yn;
        curve.nodes.push((x, y));
    }
    Ok(())
}

/// Up-crossings of `sigma * d` through `level` along a row.
fn crossings(d: &[f64], xs: &[f64], sigma: f64, level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    // already above the level at the edge: the seam hugs the boundary
    if sigma * d[0] - level > 0.0 {
        out.push(xs[0]);
    }
    for i in 1..d.len() {
        let (a, b) = (sigma * d[i - 1] - level, sigma * d[i] - level);
        if a <= 0.0 && b > 0.0 {
            out.push(xs[i - 1] + (xs[i] - xs[i - 1]) * a / (a - b));
        }
    }
    out
}

fn follow_continuity(left: &Branch2D, right: &Branch2D, curve: &mut MatchCurve, y_end: f64) {
    let g = left.grid;
    let (x0, y0) = curve.nodes[0];
    let xs: Vec<f64> = (0..=g.nx).map(|i| g.x(i)).collect();
    let row_diff = |j: usize| -> Option<Vec<f64>> {
        (0..=g.nx)
            .map(|i| (left.is_valid(i, j) && right.is_valid(i, j)).then(|| left.at(i, j)[0] - right.at(i, j)[0]))
            .collect()
    };
    let j_start = ((y0 - g.y0) / g.hy()).round() as usize;
    let Some(d0) = row_diff(j_start.min(g.ny)) else {
        curve.truncated = true;
        return;
    };
    // orientation: sign of d on the right branch's side of the seed
    let i0 = ((x0 - g.x0) / g.hx()).round() as usize;
    let sigma = match (i0 + 1..=g.nx).map(|i| d0[i]).find(|d| d.abs() > 1e-14) {
        Some(d) => d.signum(),
        None => return,
    };
    let level = 0.5 * g.hx().min(g.hy());
    let window = 4.0 * g.hx();
    let mut x_prev = x0;
    let mut j = j_start;
    while j > 0 && g.y(j - 1) >= y_end - 1e-12 {
        j -= 1;
        let Some(d) = row_diff(j) else {
            curve.truncated = true;
            return;
        };
        // the seam leaves the band |d| <= level; a sign change within one
        // cell behind that point is the sharper estimate
        let pick = |cands: Vec<f64>, near: f64, reach: f64| {
            cands
                .into_iter()
                .filter(|x| (x - near).abs() <= reach)
                .min_by(|a, b| (a - near).abs().total_cmp(&(b - near).abs()))
        };
        let x = pick(crossings(&d, &xs, sigma, level), x_prev, window).map(|xb| {
            crossings(&d, &xs, sigma, 0.0)
                .into_iter()
                .filter(|&x0| x0 <= xb && xb - x0 <= g.hx())
                .fold(xb, f64::min)
        });
        let Some(x) = x else {
            curve.truncated = true;
            return;
        };
        curve.nodes.push((x, g.y(j)));
        x_prev = x;
    }
}

/// First point along the top row where the two branches agree, scanning
/// from the left.
fn agreement_on_row(left: &Branch2D, right: &Branch2D, j: usize) -> Option<f64> {
    let g = left.grid;
    let d: Vec<f64> = (0..=g.nx).map(|i| left.at(i, j)[0] - right.at(i, j)[0]).collect();
    let tol = 1e-12;
    if d[0].abs() <= tol {
        return Some(g.x(0));
    }
    (1..=g.nx).find_map(|i| {
        if d[i].abs() <= tol {
            Some(g.x(i))
        } else if d[i - 1].signum() != d[i].signum() {
            Some(g.x(i - 1) + g.hx() * d[i - 1] / (d[i - 1] - d[i]))
        } else {
            None
        }
    })
}

/// A composite scalar field and the curves that assemble it.
#[derive(Debug, Clone)]
pub struct ScalarSolution {
    pub field: Field2D<1>,
    /// Index into `branch_names` per node.
    pub branch_id: Vec<u8>,
    pub branch_names: Vec<String>,
    pub curves: Vec<MatchCurve>,
    pub focal_point: Option<(f64, f64)>,
    /// Number of full-grid sweeps performed.
    pub sweeps: usize,
}

impl ScalarSolution {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let ids = &self.branch_id;
        let g = self.field.grid;
        let id = move |i: usize, j: usize, _: &State<1>| ids[g.idx(i, j)] as f64;
        self.field.write_csv(out, &["u"], &[("branch_id", &id)])
    }
}

fn constant_side(problem: &ProblemInstance, side: Side) -> Result<f64> {
    match problem.boundary(side).component("u") {
        Some(Profile::Constant(c)) => Ok(c),
        _ => Err(SolverError::Config(format!("{}: {} data must be a constant u", problem.name, side.name()))),
    }
}

fn square_grid(problem: &ProblemInstance, n: usize) -> Result<Grid2D> {
    if n < 8 {
        return Err(SolverError::Arity { needed: 8, got: n });
    }
    let (x0, x1, y0, y1) = problem.rectangle()?;
    Ok(Grid2D::new(n, n, x0, x1, y0, y1))
}

/// Where `f'(u(x, y0))` changes sign along the bottom, by linear
/// interpolation between grid nodes.
pub fn vertical_characteristic_point(law: &ScalarLaw, grid: &Grid2D, bottom: &dyn Fn(f64) -> f64) -> Option<f64> {
    let c = |i: usize| (law.df)(bottom(grid.x(i)));
    (1..=grid.nx).find_map(|i| {
        let (a, b) = (c(i - 1), c(i));
        if a == 0.0 {
            Some(grid.x(i - 1))
        } else if a.signum() != b.signum() {
            Some(grid.x(i - 1) + grid.hx() * a / (a - b))
        } else {
            None
        }
    })
}

/// Height above the bottom at which neighbouring characteristics of the
/// bottom data first cross, `-1 / min (dx/dy)'`; `None` if they never do.
pub fn breaking_height(law: &ScalarLaw, grid: &Grid2D, bottom: &dyn Fn(f64) -> f64) -> Option<f64> {
    let c = |i: usize| law.char_slope(bottom(grid.x(i)));
    let min = (1..=grid.nx).map(|i| (c(i) - c(i - 1)) / grid.hx()).fold(f64::INFINITY, f64::min);
    (min < 0.0).then(|| -1.0 / min)
}

/// Shock born at an interior focal point: bottom, left and right branches
/// matched below the focus, then the strip above it solved as a
/// boundary-origin problem with the matched values as bottom data.
pub fn solve_interior_shock(
    problem: &ProblemInstance,
    law: &ScalarLaw,
    opts: &SweepOptions,
    n: usize,
) -> Result<ScalarSolution> {
    if problem.kind != ProblemKind::InteriorShock {
        return Err(SolverError::Config(format!("{} is not an interior-shock problem", problem.name)));
    }
    let grid = square_grid(problem, n)?;
    let bottom_profile = problem
        .boundary(Side::Bottom)
        .component("u")
        .ok_or_else(|| SolverError::Config("bottom data missing".into()))?;
    let bottom = move |x: f64| bottom_profile.eval(x);
    let ul = constant_side(problem, Side::Left)?;
    let ur = constant_side(problem, Side::Right)?;
    let left_data = move |_: f64| ul;
    let right_data = move |_: f64| ur;

    let x_star = vertical_characteristic_point(law, &grid, &bottom)
        .ok_or_else(|| SolverError::StructureMismatch("bottom characteristics never vertical".into()))?;
    // the bottom branch continues the bottom data smoothly through the sides
    // and stops below the height where its characteristics first cross
    let rows = match breaking_height(law, &grid, &bottom) {
        Some(hb) => (0..=grid.ny).filter(|&j| grid.y(j) < grid.y0 + hb).count().saturating_sub(1),
        None => grid.ny,
    };
    if rows < 2 {
        return Err(SolverError::StructureMismatch("bottom characteristics cross within two rows".into()));
    }
    let lower_grid = Grid2D::new(grid.nx, rows, grid.x0, grid.x1, grid.y0, grid.y(rows));
    let u_b = sweep_scalar(
        law,
        lower_grid,
        SweepDir::FromBottom,
        &SweepData {
            inflow: &bottom,
            lower: Lateral::Extrapolate,
            upper: Lateral::Extrapolate,
        },
        opts,
    )?;
    let side_sweep = |dir: SweepDir, data: &dyn Fn(f64) -> f64| {
        sweep_scalar(
            law,
            grid,
            dir,
            &SweepData {
                inflow: data,
                lower: Lateral::Copy,
                upper: Lateral::Copy,
            },
            opts,
        )
    };
    let u_l = side_sweep(SweepDir::FromLeft, &left_data)?;
    let u_r = side_sweep(SweepDir::FromRight, &right_data)?;

    let c_left = match_branches(
        &u_l,
        &u_b,
        law,
        (grid.x0, grid.y0),
        MatchKind::Shock,
        MatchStop::AtX(x_star),
        ("left", "bottom"),
    )?;
    let c_right = match_branches(
        &u_b,
        &u_r,
        law,
        (grid.x1, grid.y0),
        MatchKind::Shock,
        MatchStop::AtX(x_star),
        ("bottom", "right"),
    )?;
    if c_left.truncated || c_right.truncated {
        return Err(SolverError::StructureMismatch("lower matching curves did not reach the focus".into()));
    }
    let y_star = c_left.end().1;
    if !(y_star > grid.y0 && y_star < grid.y1) {
        return Err(SolverError::StructureMismatch(format!("focus height {y_star} outside the domain")));
    }

    // bottom composite, also the data for the strip above the focus
    let seams = |y: f64| (c_left.x_at(y).unwrap_or(x_star), c_right.x_at(y).unwrap_or(x_star));
    let lower_value = |x: f64, y: f64, (xl, xr): (f64, f64)| -> (u8, f64) {
        if x <= xl {
            (0, value(&u_l, x, y))
        } else if x <= xr {
            (1, value(&u_b, x, y))
        } else {
            (2, value(&u_r, x, y))
        }
    };
    let j0 = (((y_star - grid.y0) / grid.hy()).ceil() as usize).min(grid.ny);
    let mut solution = ScalarSolution {
        field: Field2D::filled(grid, State::<1>::zeros(), SweepDir::Composed),
        branch_id: vec![0; grid.len()],
        branch_names: ["left", "bottom", "right", "top-left", "top-right"].map(String::from).to_vec(),
        curves: vec![c_left.clone(), c_right.clone()],
        focal_point: Some((x_star, y_star)),
        sweeps: 3,
    };
    for j in 0..j0 {
        let row = seams(grid.y(j));
        for i in 0..=grid.nx {
            let (id, v) = lower_value(grid.x(i), grid.y(j), row);
            solution.field.set(i, j, State::<1>::new(v));
            solution.branch_id[grid.idx(i, j)] = id;
        }
    }
    if j0 < grid.ny {
        let strip = Grid2D::new(grid.nx, grid.ny - j0, grid.x0, grid.x1, grid.y(j0), grid.y1);
        let trace_l = {
            let v = lower_value(x_star - grid.hx(), y_star, seams(y_star)).1;
            move |_: f64| v
        };
        let trace_r = {
            let v = lower_value(x_star + grid.hx(), y_star, seams(y_star)).1;
            move |_: f64| v
        };
        let eps = grid.hx();
        let width = 0.5 * grid.hx();
        let top_left_in = extend_boundary_data(trace_l, x_star, eps, width);
        let top_right_in = extend_boundary_data_leftward(trace_r, x_star, eps, width);
        let tl = sweep_scalar(
            law,
            strip,
            SweepDir::FromBottom,
            &SweepData {
                inflow: &*top_left_in,
                lower: Lateral::Dirichlet(&left_data),
                upper: Lateral::Copy,
            },
            opts,
        )?;
        let tr = sweep_scalar(
            law,
            strip,
            SweepDir::FromBottom,
            &SweepData {
                inflow: &*top_right_in,
                lower: Lateral::Copy,
                upper: Lateral::Dirichlet(&right_data),
            },
            opts,
        )?;
        solution.sweeps += 2;
        let shock = match_branches(
            &tl,
            &tr,
            law,
            (x_star, y_star),
            MatchKind::Shock,
            MatchStop::AtX(grid.x1),
            ("top-left", "top-right"),
        )?;
        for j in j0..=grid.ny {
            let y = grid.y(j);
            let xs = shock.x_at(y).unwrap_or(grid.x1);
            for i in 0..=grid.nx {
                let x = grid.x(i);
                let (id, b) = if x <= xs { (3, &tl) } else { (4, &tr) };
                solution.field.set(i, j, b.at(i, j - j0));
                solution.branch_id[grid.idx(i, j)] = id;
            }
        }
        solution.curves.push(shock);
    }
    Ok(solution)
}

/// True when a stationary jump from `ul` (left) to `ur` (right) would be an
/// admissible shock: characteristics run into it from both sides.
pub fn shock_admissible(law: &ScalarLaw, ul: f64, ur: f64) -> bool {
    law.char_slope(ul) > law.char_slope(ur)
}

/// `u` on the top boundary whose characteristic passes through `(x_star, y0)`:
/// the root of `f'(u) = g'(u) (x - x_star) / (y1 - y0)`.
pub fn fan_value(law: &ScalarLaw, x: f64, x_star: f64, height: f64, bracket: (f64, f64)) -> Result<f64> {
    let s = (x - x_star) / height;
    let r = |u: f64| (law.df)(u) - (law.dg)(u) * s;
    let (mut lo, mut hi) = bracket;
    // widen until the sign changes
    for _ in 0..60 {
        if r(lo).signum() != r(hi).signum() || r(lo) == 0.0 || r(hi) == 0.0 {
            break;
        }
        let w = hi - lo;
        lo -= w;
        hi += w;
    }
    crate::roots::illinois(
        r,
        lo,
        hi,
        crate::roots::RootOptions {
            f_tol: 1e-14,
            x_tol: 1e-15,
            max_iter: 200,
        },
    )
}

/// Centred rarefaction from a bottom step: left and right branches swept
/// from smoothly extended bottom data, a fan branch swept down from the top,
/// and continuity seams joining them.
pub fn solve_rarefaction(
    problem: &ProblemInstance,
    law: &ScalarLaw,
    opts: &SweepOptions,
    n: usize,
) -> Result<ScalarSolution> {
    if problem.kind != ProblemKind::Rarefaction {
        return Err(SolverError::Config(format!("{} is not a rarefaction problem", problem.name)));
    }
    let grid = square_grid(problem, n)?;
    let (x_star, below, above) = match problem.boundary(Side::Bottom).component("u") {
        Some(Profile::Step { at, below, above }) => (at, below, above),
        _ => return Err(SolverError::Config("bottom data must be a step".into())),
    };
    if shock_admissible(law, below, above) {
        return Err(SolverError::StructureMismatch(
            "bottom step forms an admissible shock, not a fan".into(),
        ));
    }
    let eps = grid.hx();
    let width = 0.5 * grid.hx();
    let left_in = extend_boundary_data(move |_| below, x_star, eps, width);
    let right_in = extend_boundary_data_leftward(move |_| above, x_star, eps, width);
    let bottom_sweep = |data: &dyn Fn(f64) -> f64| {
        sweep_scalar(
            law,
            grid,
            SweepDir::FromBottom,
            &SweepData {
                inflow: data,
                lower: Lateral::Copy,
                upper: Lateral::Copy,
            },
            opts,
        )
    };
    let u_l = bottom_sweep(&*left_in)?;
    let u_r = bottom_sweep(&*right_in)?;
    let height = grid.y1 - grid.y0;
    let bracket = (below.min(above), below.max(above));
    let top_values: Vec<f64> = (0..=grid.nx)
        .map(|i| fan_value(law, grid.x(i), x_star, height, bracket))
        .collect::<Result<_>>()?;
    let top_in = |x: f64| {
        let (i, _, s, _) = grid.locate(x, grid.y1);
        top_values[i] * (1.0 - s) + top_values[i + 1] * s
    };
    // the sides of the fan sweep carry the neighbouring branches
    let side_l = |y: f64| value(&u_l, grid.x0, y);
    let side_r = |y: f64| value(&u_r, grid.x1, y);
    let u_t = sweep_scalar(
        law,
        grid,
        SweepDir::FromTop,
        &SweepData {
            inflow: &top_in,
            lower: Lateral::Dirichlet(&side_l),
            upper: Lateral::Dirichlet(&side_r),
        },
        opts,
    )?;
    let top = grid.ny;
    let start_l = agreement_on_row(&u_l, &u_t, top)
        .ok_or_else(|| SolverError::StructureMismatch("left and fan branches never agree on the top".into()))?;
    let start_r = agreement_on_row(&u_t, &u_r, top)
        .ok_or_else(|| SolverError::StructureMismatch("fan and right branches never agree on the top".into()))?;
    let seam_l = match_branches(
        &u_l,
        &u_t,
        law,
        (start_l, grid.y1),
        MatchKind::Continuity,
        MatchStop::DownToY(grid.y0),
        ("left", "fan"),
    )?;
    let seam_r = match_branches(
        &u_t,
        &u_r,
        law,
        (start_r, grid.y1),
        MatchKind::Continuity,
        MatchStop::DownToY(grid.y0),
        ("fan", "right"),
    )?;
    let mut solution = ScalarSolution {
        field: Field2D::filled(grid, State::<1>::zeros(), SweepDir::Composed),
        branch_id: vec![0; grid.len()],
        branch_names: ["left", "fan", "right"].map(String::from).to_vec(),
        curves: vec![seam_l.clone(), seam_r.clone()],
        focal_point: None,
        sweeps: 3,
    };
    for j in 0..=grid.ny {
        let y = grid.y(j);
        let xl = seam_l.x_at(y).unwrap_or(x_star);
        let xr = seam_r.x_at(y).unwrap_or(x_star);
        for i in 0..=grid.nx {
            let x = grid.x(i);
            let (id, b) = if x <= xl {
                (0, &u_l)
            } else if x <= xr {
                (1, &u_t)
            } else {
                (2, &u_r)
            };
            solution.field.set(i, j, b.at(i, j));
            solution.branch_id[grid.idx(i, j)] = id;
        }
    }
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::characteristics_scalar;
    use crate::systems::make_burgers2d;

    fn l1_error(sol: &ScalarSolution, problem: &ProblemInstance) -> f64 {
        let law = make_burgers2d();
        let exact = characteristics_scalar(problem, &law).unwrap();
        let g = sol.field.grid;
        let mut acc = 0.0;
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                acc += (sol.field.at(i, j)[0] - exact.eval(g.x(i), g.y(j))).abs();
            }
        }
        acc * g.hx() * g.hy()
    }

    #[test]
    fn constants_are_preserved_by_every_scheme() {
        let law = make_burgers2d();
        let grid = Grid2D::new(16, 16, 0.0, 1.0, 0.0, 1.0);
        let c = |_: f64| 0.7;
        for scheme in [Scheme::LaxFriedrichs, Scheme::LaxWendroff] {
            for form in [Form::Conservative, Form::Nonconservative] {
                for dir in [SweepDir::FromBottom, SweepDir::FromTop, SweepDir::FromLeft, SweepDir::FromRight] {
                    let opts = SweepOptions {
                        scheme,
                        form,
                        ..Default::default()
                    };
                    let data = SweepData {
                        inflow: &c,
                        lower: Lateral::Copy,
                        upper: Lateral::Dirichlet(&c),
                    };
                    let b = sweep_scalar(&law, grid, dir, &data, &opts).unwrap();
                    assert!(b.values.iter().all(|v| (v[0] - 0.7).abs() < 1e-14), "{scheme:?} {form:?} {dir:?}");
                    assert!(b.valid.iter().all(|&v| v));
                }
            }
        }
    }

    #[test]
    fn fixed_substeps_must_be_stable() {
        let law = make_burgers2d();
        let grid = Grid2D::new(16, 16, 0.0, 1.0, 0.0, 1.0);
        let c = |_: f64| 1.5;
        let data = SweepData {
            inflow: &c,
            lower: Lateral::Copy,
            upper: Lateral::Copy,
        };
        let opts = SweepOptions {
            substeps: Some(1),
            ..Default::default()
        };
        match sweep_scalar(&law, grid, SweepDir::FromBottom, &data, &opts) {
            Err(SolverError::Cfl { ratio, .. }) => assert!((ratio - 1.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let opts = SweepOptions {
            substeps: Some(2),
            ..Default::default()
        };
        assert!(sweep_scalar(&law, grid, SweepDir::FromBottom, &data, &opts).is_ok());
    }

    #[test]
    fn bottom_branch_follows_the_fan() {
        let law = make_burgers2d();
        let p = ProblemInstance::named("interior-shock").unwrap();
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let grid = square_grid(&p, n).unwrap();
            let bottom = |x: f64| 1.5 - 2.0 * x;
            let l = |_: f64| 1.5;
            let r = |_: f64| -0.5;
            let b = sweep_scalar(
                &law,
                grid,
                SweepDir::FromBottom,
                &SweepData {
                    inflow: &bottom,
                    lower: Lateral::Dirichlet(&l),
                    upper: Lateral::Dirichlet(&r),
                },
                &SweepOptions::default(),
            )
            .unwrap();
            // a point well inside the fan
            let exact = (1.5 - 2.0 * 0.6) / (1.0 - 2.0 * 0.25);
            errs.push((value(&b, 0.6, 0.25) - exact).abs());
        }
        assert!(errs[2] < errs[0] / 3.0, "{errs:?}");
        assert!(errs[2] < 1e-2, "{errs:?}");
    }

    #[test]
    fn shock_slope_of_constant_states() {
        let law = make_burgers2d();
        assert_eq!(shock_slope(&law, 1.5, -0.5), 2.0);
        assert!((shock_slope(&law, 1.5, 1.5) - 1.0 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn identical_branches_give_a_degenerate_seam() {
        let law = make_burgers2d();
        let grid = Grid2D::new(8, 8, 0.0, 1.0, 0.0, 1.0);
        let mut b = Field2D::filled(grid, State::<1>::new(0.3), SweepDir::FromBottom);
        b.valid.iter_mut().for_each(|v| *v = true);
        let c = match_branches(&b, &b, &law, (0.5, 1.0), MatchKind::Continuity, MatchStop::DownToY(0.0), ("a", "b"))
            .unwrap();
        assert_eq!(c.nodes, vec![(0.5, 1.0)]);
    }

    #[test]
    fn extension_of_constant_and_linear_data() {
        let e = extend_boundary_data(|_| -1.0, 0.0, 0.1, 0.05);
        for x in [-0.5, 0.0, 0.03, 0.2, 3.0] {
            assert!((e(x) + 1.0).abs() < 1e-14, "{x}");
        }
        let e = extend_boundary_data(|x| x, 0.0, 0.1, 0.05);
        // linear data are reproduced away from the freeze point
        assert!((e(-0.3) + 0.3).abs() < 1e-12);
        assert!((e(0.02) - 0.02).abs() < 1e-12);
        assert!((e(0.5) - 0.1).abs() < 1e-12);
        let d = 1e-5;
        let left = (e(0.0) - e(-d)) / d;
        let right = (e(d) - e(0.0)) / d;
        assert!((left - right).abs() < 1e-8, "{left} {right}");
        // total variation over a fine sampling
        let xs: Vec<f64> = (0..=2000).map(|k| -1.0 + 2.0 * k as f64 / 2000.0).collect();
        let tv: f64 = xs.windows(2).map(|w| (e(w[1]) - e(w[0])).abs()).sum();
        assert!(tv <= 0.1 + 1.0 + 1e-9, "{tv}");
        let m = extend_boundary_data_leftward(|_| 0.5, 0.0, 0.1, 0.05);
        assert!((m(-0.7) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn interior_shock_composite() {
        let law = make_burgers2d();
        let p = ProblemInstance::named("interior-shock").unwrap();
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let s = solve_interior_shock(&p, &law, &SweepOptions::default(), n).unwrap();
            let h = 1.0 / n as f64;
            let (xf, yf) = s.focal_point.unwrap();
            assert!((xf - 0.75).abs() <= h && (yf - 0.5).abs() <= h, "{n}: focus {xf} {yf}");
            assert!(s.field.values.iter().all(|v| v[0] >= -0.5 - 1e-12 && v[0] <= 1.5 + 1e-12));
            errs.push(l1_error(&s, &p));
        }
        assert!(errs[1] < 0.65 * errs[0] && errs[2] < 0.65 * errs[1], "{errs:?}");
    }

    #[test]
    fn rarefaction_composite() {
        let law = make_burgers2d();
        let p = ProblemInstance::named("rarefaction").unwrap();
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let s = solve_rarefaction(&p, &law, &SweepOptions::default(), n).unwrap();
            let hx = 2.0 / n as f64;
            let top_l = s.curves[0].nodes[0].0;
            let top_r = s.curves[1].nodes[0].0;
            assert!((top_l + 1.0).abs() <= hx && (top_r - 0.5).abs() <= hx, "{top_l} {top_r}");
            errs.push(l1_error(&s, &p));
        }
        assert!(errs[1] < 0.7 * errs[0] && errs[2] < 0.7 * errs[1], "{errs:?}");
    }
}
