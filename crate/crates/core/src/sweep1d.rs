//! One-dimensional sweeping: a single shock placed by matching the right
//! boundary condition, and turning points crossed by Hermite extrapolation
//! with the missing inflow data fixed by the compatibility condition
//! `(P^{-1} a)_i = 0`.

use std::cell::RefCell;

use serde::Serialize;

use crate::error::{Result, SolverError};
use crate::jump::{jump_1d_with, JumpOptions, JumpSystem};
use crate::propagate::{state_derivative, step, uniform_grid, Branch1D, Direction, Integrator};
use crate::roots::{illinois, RootOptions};
use crate::systems::{
    BoundaryCondition, ConservationLaw, NozzleEuler, Primitive1d, ProblemInstance, ProblemKind, Side, State,
};

/// Residual tolerance of the outer solves for `x_S` and `alpha`.
pub const OUTER_TOL: f64 = 1e-12;

fn outer_opts() -> RootOptions {
    RootOptions {
        f_tol: OUTER_TOL,
        x_tol: 4.0 * f64::EPSILON,
        max_iter: 200,
    }
}

/// Two smooth branches joined by a shock at `shock_location`.
#[derive(Debug, Clone)]
pub struct MatchResult1D<const M: usize> {
    pub shock_location: f64,
    /// Grid nodes left of the shock, then the pre-shock state at `x_S`.
    pub left_branch: Branch1D<M>,
    /// The post-shock state at `x_S`, then the grid nodes right of it.
    pub right_branch: Branch1D<M>,
    pub boundary_residual: f64,
    pub jump_residual: f64,
    pub evaluations: usize,
}

impl<const M: usize> MatchResult1D<M> {
    /// The solution at the nodes of the uniform grid; a node exactly at the
    /// shock takes the left state.
    pub fn nodes(&self) -> (Vec<f64>, Vec<State<M>>) {
        let l = self.left_branch.grid.len() - 1;
        let mut xs: Vec<f64> = self.left_branch.grid[..l].to_vec();
        let mut us: Vec<State<M>> = self.left_branch.states[..l].to_vec();
        if self.left_branch.grid[l] != self.shock_location {
            xs.push(self.left_branch.grid[l]);
            us.push(self.left_branch.states[l]);
        }
        xs.extend_from_slice(&self.right_branch.grid[1..]);
        us.extend_from_slice(&self.right_branch.states[1..]);
        (xs, us)
    }
}

/// Located turning point of field `field_index`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TurningPoint<const M: usize> {
    pub x_t: f64,
    #[serde(skip)]
    pub u_t: State<M>,
    pub field_index: usize,
    /// Resolved inflow parameter, when one was solved for.
    pub alpha: Option<f64>,
    /// `lambda_i(U_T)`.
    pub eigenvalue: f64,
    /// `(P^{-1} a(U_T, x_T))_i`.
    pub compatibility: f64,
}

/// `(P^{-1} a(u, x))_i`.
pub fn compatibility<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    u: &State<M>,
    x: f64,
    field: usize,
) -> f64 {
    let eig = system.eigen_x(u);
    (eig.left.row(field) * system.source(u, x))[0]
}

fn branch<const M: usize>(grid: Vec<f64>, states: Vec<State<M>>) -> Branch1D<M> {
    let valid_to = states.len().saturating_sub(1);
    Branch1D {
        grid,
        states,
        derivatives: None,
        direction: Direction::LeftToRight,
        valid_to,
    }
}

struct ShockEval<const M: usize> {
    residual: f64,
    jump_residual: f64,
    left: Branch1D<M>,
    right: Branch1D<M>,
}

/// `B_R(P Phi P U_L)` for a shock at `x_s`. `left` must hold valid states on
/// `grid[first..]` up to the node at or before `x_s`.
#[allow(clippy::too_many_arguments)]
fn shock_eval<const M: usize, S: JumpSystem<M> + ?Sized>(
    system: &S,
    integrator: Integrator,
    left: &Branch1D<M>,
    first: usize,
    x_s: f64,
    boundary: &dyn Fn(&State<M>) -> Result<f64>,
    jump: JumpOptions,
    keep: bool,
) -> Result<ShockEval<M>> {
    let grid = &left.grid;
    let last = grid.len() - 1;
    let k = grid.partition_point(|&x| x <= x_s).saturating_sub(1).clamp(first, last - 1);
    let (xk, uk) = (grid[k], left.states[k]);
    let u_minus = if x_s > xk {
        step(system, integrator, xk, &uk, &system.flux_x(&uk), x_s - xk)?.0
    } else {
        uk
    };
    let j = jump_1d_with(system, &u_minus, jump)?;
    let mut u = j.post_state;
    let mut v = system.flux_x(&u);
    let mut x = x_s;
    let mut right_states = Vec::new();
    if keep {
        right_states.push(u);
    }
    for &xn in &grid[k + 1..] {
        if xn > x {
            (u, v) = step(system, integrator, x, &u, &v, xn - x)?;
        }
        x = xn;
        if keep {
            right_states.push(u);
        }
    }
    let residual = boundary(&u)?;
    let (left_b, right_b) = if keep {
        let mut lg = grid[..=k].to_vec();
        let mut ls = left.states[..=k].to_vec();
        if x_s > xk {
            lg.push(x_s);
            ls.push(u_minus);
        }
        let mut rg = vec![x_s];
        rg.extend_from_slice(&grid[k + 1..]);
        (branch(lg, ls), branch(rg, right_states))
    } else {
        (branch(Vec::new(), Vec::new()), branch(Vec::new(), Vec::new()))
    };
    Ok(ShockEval {
        residual,
        jump_residual: j.residual,
        left: left_b,
        right: right_b,
    })
}

/// Solves `B_R(P Phi P U_L) = 0` for the shock position inside `bracket`.
pub fn match_shock<const M: usize, S: JumpSystem<M> + ?Sized>(
    system: &S,
    integrator: Integrator,
    left: &Branch1D<M>,
    first: usize,
    bracket: (f64, f64),
    boundary: &dyn Fn(&State<M>) -> Result<f64>,
    jump: JumpOptions,
) -> Result<MatchResult1D<M>> {
    let failure = RefCell::new(None);
    let mut evaluations = 0;
    let mut f = |x: f64| {
        evaluations += 1;
        match shock_eval(system, integrator, left, first, x, boundary, jump, false) {
            Ok(e) => e.residual,
            Err(err) => {
                failure.borrow_mut().get_or_insert(err);
                f64::NAN
            }
        }
    };
    let (lo, hi) = bracket;
    let (flo, fhi) = (f(lo), f(hi));
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    if flo.signum() == fhi.signum() && flo.abs() > OUTER_TOL && fhi.abs() > OUTER_TOL {
        return Err(SolverError::StructureMismatch(format!(
            "boundary residual does not change sign on [{lo}, {hi}] ({flo:e}, {fhi:e})"
        )));
    }
    let root = crate::roots::illinois_with_values(&mut f, lo, hi, flo, fhi, outer_opts());
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let x_s = root?;
    let e = shock_eval(system, integrator, left, first, x_s, boundary, jump, true)?;
    Ok(MatchResult1D {
        shock_location: x_s,
        left_branch: e.left,
        right_branch: e.right,
        boundary_residual: e.residual,
        jump_residual: e.jump_residual,
        evaluations: evaluations + 1,
    })
}

/// Value of a primitive nozzle quantity (`rho`, `u`, `p` or `mach`).
pub fn nozzle_component(system: &NozzleEuler, u: &State<3>, x: f64, name: &str) -> Result<f64> {
    let prim = system.primitive(u, x)?;
    match name {
        "rho" => Ok(prim.rho),
        "u" => Ok(prim.u),
        "p" => Ok(prim.p),
        "mach" => Ok(prim.mach(system.gamma)),
        _ => Err(SolverError::Config(format!("unknown nozzle component `{name}`"))),
    }
}

fn right_condition(problem: &ProblemInstance, system: NozzleEuler) -> Result<impl Fn(&State<3>) -> Result<f64>> {
    let (_, x_r) = problem.interval()?;
    match problem.boundary(Side::Right) {
        BoundaryCondition::Partial { component, value } => {
            let (component, value) = (component.clone(), *value);
            if !["rho", "u", "p", "mach"].contains(&component.as_str()) {
                return Err(SolverError::Config(format!("unknown nozzle component `{component}`")));
            }
            Ok(move |u: &State<3>| Ok(nozzle_component(&system, u, x_r, &component)? - value))
        }
        other => Err(SolverError::Config(format!(
            "{}: right boundary must be partial, got {}",
            problem.name,
            other.kind_name()
        ))),
    }
}

fn require_kind(problem: &ProblemInstance, kind: ProblemKind) -> Result<()> {
    if problem.kind != kind {
        return Err(SolverError::Config(format!("{} is not a {} problem", problem.name, kind.name())));
    }
    Ok(())
}

/// Shock position and branches for a nozzle with full left data.
pub fn solve_single_shock(problem: &ProblemInstance, integrator: Integrator, n: usize) -> Result<MatchResult1D<3>> {
    require_kind(problem, ProblemKind::NozzleShock)?;
    if n < 2 {
        return Err(SolverError::Arity { needed: 2, got: n });
    }
    let sys = problem.nozzle_system()?;
    let (x_l, x_r) = problem.interval()?;
    let prim = Primitive1d {
        rho: problem.component_at(Side::Left, "rho", 0.0)?,
        u: problem.component_at(Side::Left, "u", 0.0)?,
        p: problem.component_at(Side::Left, "p", 0.0)?,
    };
    let u_l = sys.conserved(&prim, x_l);
    let left = crate::propagate::propagate(&sys, integrator, &u_l, x_l, x_r, n)?;
    let bracket = (problem.param("shock_lo")?, problem.param("shock_hi")?);
    let boundary = right_condition(problem, sys)?;
    match_shock(&sys, integrator, &left, 0, bracket, &boundary, JumpOptions::default())
}

/// Value at `x_j + h` of the Hermite interpolant through the last `count`
/// samples `(x, U, U_x)`. Built from divided differences on doubled nodes.
pub fn hermite_extrapolate_n<const M: usize>(points: &[(f64, State<M>, State<M>)], count: usize, h: f64) -> Result<State<M>> {
    if count < 1 || points.len() < count.max(2) {
        return Err(SolverError::Arity {
            needed: count.max(2),
            got: points.len(),
        });
    }
    let pts = &points[points.len() - count..];
    let target = pts[count - 1].0 + h;
    let n = 2 * count;
    let z: Vec<f64> = pts.iter().flat_map(|p| [p.0, p.0]).collect();
    // table[k] holds the k-th order divided differences, updated in place.
    let mut table: Vec<State<M>> = pts.iter().flat_map(|p| [p.1, p.1]).collect();
    let mut coeffs = vec![table[0]];
    for order in 1..n {
        for i in (order..n).rev() {
            table[i] = if z[i] == z[i - order] {
                // only possible for order 1 on a doubled node
                pts[i / 2].2
            } else {
                (table[i] - table[i - 1]) / (z[i] - z[i - order])
            };
        }
        coeffs.push(table[order]);
    }
    let mut acc = coeffs[n - 1];
    for k in (0..n - 1).rev() {
        acc = acc * (target - z[k]) + coeffs[k];
    }
    Ok(acc)
}

/// Two-point cubic Hermite extrapolation from `(x_{j-1}, x_j)`.
pub fn hermite_extrapolate<const M: usize>(points: &[(f64, State<M>, State<M>)], h: f64) -> Result<State<M>> {
    hermite_extrapolate_n(points, 2, h)
}

fn samples<const M: usize>(b: &Branch1D<M>) -> Result<Vec<(f64, State<M>, State<M>)>> {
    let d = b
        .derivatives
        .as_ref()
        .ok_or_else(|| SolverError::Config("branch has no derivative data".into()))?;
    let top = b.valid_to.min(d.len() - 1).min(b.states.len() - 1);
    Ok((0..=top).map(|k| (b.grid[k], b.states[k], d[k])).collect())
}

/// Turning point within `cells` grid spacings beyond the last valid point of
/// `branch`: the first root of `lambda_i(H(h))` with `H` the Hermite
/// extrapolant.
pub fn locate_turning_point_within<const M: usize, S: ConservationLaw<M> + ?Sized>(
    branch: &Branch1D<M>,
    system: &S,
    field_index: usize,
    cells: f64,
) -> Result<TurningPoint<M>> {
    let pts = samples(branch)?;
    if pts.len() < 2 {
        return Err(SolverError::Arity {
            needed: 2,
            got: pts.len(),
        });
    }
    let (xj, uj, _) = pts[pts.len() - 1];
    let dx = xj - pts[pts.len() - 2].0;
    let lam = |h: f64| -> f64 {
        match hermite_extrapolate(&pts, h) {
            Ok(u) if system.validate(&u).is_ok() => system.eigenvalues_x(&u)[field_index],
            _ => f64::NAN,
        }
    };
    let l0 = system.eigenvalues_x(&uj)[field_index];
    let window = cells * dx;
    let samples = 64;
    let mut prev = (0.0, l0);
    let mut bracket = None;
    for s in 1..=samples {
        let h = window * s as f64 / samples as f64;
        let l = lam(h);
        if !l.is_finite() {
            break;
        }
        if (l >= 0.0) != (prev.1 >= 0.0) {
            bracket = Some((prev.0, h));
            break;
        }
        prev = (h, l);
    }
    let (lo, hi) = bracket.ok_or(SolverError::NotBracketed { lo: xj, hi: xj + window })?;
    let opts = RootOptions {
        f_tol: 1e-13 * l0.abs().max(1e-300),
        ..outer_opts()
    };
    let h = illinois(lam, lo, hi, opts)?;
    let u_t = hermite_extrapolate(&pts, h)?;
    let x_t = xj + h;
    Ok(TurningPoint {
        x_t,
        u_t,
        field_index,
        alpha: None,
        eigenvalue: system.eigenvalues_x(&u_t)[field_index],
        compatibility: compatibility(system, &u_t, x_t, field_index),
    })
}

/// Turning point within one cell of the last valid point of `branch`.
pub fn locate_turning_point<const M: usize, S: ConservationLaw<M> + ?Sized>(
    branch: &Branch1D<M>,
    system: &S,
    field_index: usize,
) -> Result<TurningPoint<M>> {
    locate_turning_point_within(branch, system, field_index, 1.0)
}

/// Search window of the turning-point root, in cells past the handoff point.
pub const TURNING_WINDOW: f64 = 2.0;
/// Stepping hands off to extrapolation once the linear prediction of
/// `lambda_i` reaches zero within this many cells.
pub const HANDOFF_CELLS: f64 = 1.5;

/// Steps within this fraction of the interval from a sonic point are split
/// into `ceil(sqrt(L / d))` substeps, `d` the distance to the sonic point.
pub const GRADING_FRACTION: f64 = 0.1;

/// One grid step from `x0` to `x1`, subdivided near a sonic point at
/// distance `dist`. Uniform steps lose an order there: the local error grows
/// like `h^5 / d^3` while the solution is most sensitive to it.
pub fn graded_step<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    integrator: Integrator,
    x0: f64,
    u: &State<M>,
    v: &State<M>,
    x1: f64,
    dist: f64,
    length: f64,
) -> Result<(State<M>, State<M>)> {
    let d = dist.max(0.5 * (x1 - x0).abs());
    let m = if d < length { ((length / d).sqrt().ceil() as usize).min(64) } else { 1 };
    let (mut u, mut v) = (*u, *v);
    for q in 0..m {
        let xa = x0 + (x1 - x0) * q as f64 / m as f64;
        let xb = if q + 1 == m { x1 } else { x0 + (x1 - x0) * (q + 1) as f64 / m as f64 };
        (u, v) = step(system, integrator, xa, &u, &v, xb - xa)?;
    }
    Ok((u, v))
}

/// How a branch started from `U_L^alpha` approaches the sonic field.
#[derive(Debug, Clone)]
pub enum Approach<const M: usize> {
    /// Stepping stopped near the predicted sonic point; the
    /// branch holds derivatives up to there.
    Handoff(Branch1D<M>),
    /// `lambda_i` turned back down (or the grid ended) before reaching zero.
    Passed,
    /// The branch became sonic too early: inversion or stepping failed.
    Choked(SolverError),
}

/// Steps from `u0` until the sonic field `field` is close, using
/// `|lambda_j| < HANDOFF_CELLS kappa dx` with `kappa` the largest recent
/// slope of `lambda`.
pub fn approach_turning<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    integrator: Integrator,
    grid: &[f64],
    u0: &State<M>,
    field: usize,
) -> Result<Approach<M>> {
    system.validate(u0)?;
    let mut b = Branch1D {
        grid: grid.to_vec(),
        states: vec![*u0],
        derivatives: Some(vec![state_derivative(system, u0, grid[0])?]),
        direction: Direction::LeftToRight,
        valid_to: 0,
    };
    let mut lam = vec![system.eigenvalues_x(u0)[field]];
    if lam[0] >= 0.0 {
        return Err(SolverError::Config("sonic field must start negative".into()));
    }
    let mut u = *u0;
    let mut v = system.flux_x(u0);
    let mut rising = false;
    let grading = GRADING_FRACTION * (grid[grid.len() - 1] - grid[0]);
    for k in 0..grid.len() - 1 {
        let (x0, x1) = (grid[k], grid[k + 1]);
        let dist = if k >= 1 {
            let sl = (lam[k] - lam[k - 1]) / (x0 - grid[k - 1]);
            if sl > 0.0 { -lam[k] / sl } else { f64::INFINITY }
        } else {
            f64::INFINITY
        };
        let uv = graded_step(system, integrator, x0, &u, &v, x1, dist, grading);
        let (u1, v1) = match uv {
            Ok(s) => s,
            Err(e) => return Ok(Approach::Choked(e)),
        };
        let l1 = system.eigenvalues_x(&u1)[field];
        if l1 >= 0.0 {
            return Ok(Approach::Choked(SolverError::NearSonic {
                eigenvalue: l1,
                field,
                index: Some(k + 1),
            }));
        }
        let d1 = match state_derivative(system, &u1, x1) {
            Ok(d) => d,
            Err(e) => return Ok(Approach::Choked(e)),
        };
        (u, v) = (u1, v1);
        b.states.push(u1);
        b.derivatives.as_mut().unwrap().push(d1);
        b.valid_to = k + 1;
        lam.push(l1);
        let dx = x1 - x0;
        let slope = (l1 - lam[k]) / dx;
        if slope > 0.0 {
            rising = true;
            let prev = if k >= 1 { (lam[k] - lam[k - 1]) / (x0 - grid[k - 1]) } else { slope };
            let kappa = slope.max(prev);
            if k >= 1 && -l1 < HANDOFF_CELLS * kappa * dx {
                return Ok(Approach::Handoff(b));
            }
        } else if rising {
            return Ok(Approach::Passed);
        }
    }
    Ok(Approach::Passed)
}

/// Outcome of one trial inflow parameter.
#[derive(Debug, Clone)]
pub enum AlphaProbe<const M: usize> {
    /// Turning point found, with the compatibility residual oriented so that
    /// early (choked) turning points are positive.
    Located {
        residual: f64,
        turning: TurningPoint<M>,
        approach: Branch1D<M>,
    },
    /// Sonic too early: positive side.
    TooLarge,
    /// Never sonic: negative side.
    TooSmall,
}

impl<const M: usize> AlphaProbe<M> {
    pub fn signed(&self) -> f64 {
        match self {
            AlphaProbe::Located { residual, .. } => *residual,
            AlphaProbe::TooLarge => 1.0,
            AlphaProbe::TooSmall => -1.0,
        }
    }
}

/// Classifies the branch started from `family(alpha)`.
pub fn probe_alpha<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    integrator: Integrator,
    grid: &[f64],
    family: &dyn Fn(f64) -> Result<State<M>>,
    field: usize,
    alpha: f64,
) -> Result<AlphaProbe<M>> {
    let u0 = family(alpha)?;
    let orient = compatibility(system, &u0, grid[0], field).signum();
    Ok(match approach_turning(system, integrator, grid, &u0, field)? {
        Approach::Handoff(b) => match locate_turning_point_within(&b, system, field, TURNING_WINDOW) {
            Ok(mut tp) => {
                tp.alpha = Some(alpha);
                AlphaProbe::Located {
                    residual: orient * tp.compatibility,
                    turning: tp,
                    approach: b,
                }
            }
            Err(SolverError::NotBracketed { .. }) => AlphaProbe::TooSmall,
            Err(e) => return Err(e),
        },
        Approach::Passed => AlphaProbe::TooSmall,
        Approach::Choked(_) => AlphaProbe::TooLarge,
    })
}

/// Resolved inflow parameter with its turning point and the subsonic branch
/// that reaches it.
#[derive(Debug, Clone)]
pub struct TurningSolve<const M: usize> {
    pub alpha: f64,
    pub turning: TurningPoint<M>,
    pub approach: Branch1D<M>,
    pub evaluations: usize,
}

/// Solves `(P^{-1} a(P U_L^alpha, x_T))_i = 0` for `alpha` in `bracket`:
/// bisection on the classification until both ends locate a turning point,
/// then Illinois on the compatibility residual.
pub fn solve_unknown_boundary_with<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    integrator: Integrator,
    grid: &[f64],
    family: &dyn Fn(f64) -> Result<State<M>>,
    field: usize,
    bracket: (f64, f64),
) -> Result<TurningSolve<M>> {
    let mut evaluations = 0;
    let mut probe = |a: f64| {
        evaluations += 1;
        probe_alpha(system, integrator, grid, family, field, a)
    };
    let (mut a, mut b) = bracket;
    let (mut pa, mut pb) = (probe(a)?, probe(b)?);
    if pa.signed().signum() == pb.signed().signum() {
        return Err(SolverError::StructureMismatch(format!(
            "no admissible inflow parameter in [{a}, {b}]"
        )));
    }
    while !(matches!(pa, AlphaProbe::Located { .. }) && matches!(pb, AlphaProbe::Located { .. })) {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let pm = probe(m)?;
        if let AlphaProbe::Located { residual, .. } = pm {
            if residual.abs() <= OUTER_TOL {
                return finish(pm, evaluations);
            }
        }
        if pm.signed().signum() == pa.signed().signum() {
            (a, pa) = (m, pm);
        } else {
            (b, pb) = (m, pm);
        }
    }
    let located = |p: &AlphaProbe<M>| matches!(p, AlphaProbe::Located { .. });
    if !located(&pa) && !located(&pb) {
        return Err(SolverError::StructureMismatch("no turning point near the critical inflow".into()));
    }
    let failure = RefCell::new(None);
    let best = RefCell::new(None::<(f64, AlphaProbe<M>)>);
    let root = crate::roots::illinois_with_values(
        |x| match probe(x) {
            Ok(p) => {
                let s = p.signed();
                if located(&p) {
                    let mut bst = best.borrow_mut();
                    if bst.as_ref().is_none_or(|(r, _)| s.abs() < r.abs()) {
                        *bst = Some((s, p));
                    }
                }
                s
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        a,
        b,
        pa.signed(),
        pb.signed(),
        outer_opts(),
    );
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let root = root?;
    let final_probe = probe_alpha(system, integrator, grid, family, field, root)?;
    evaluations += 1;
    let chosen = match final_probe {
        p @ AlphaProbe::Located { .. } => p,
        _ => match best.into_inner() {
            Some((_, p)) => p,
            None if located(&pa) => pa,
            None => pb,
        },
    };
    finish(chosen, evaluations)
}

fn finish<const M: usize>(p: AlphaProbe<M>, evaluations: usize) -> Result<TurningSolve<M>> {
    match p {
        AlphaProbe::Located { turning, approach, .. } => Ok(TurningSolve {
            alpha: turning.alpha.unwrap_or(f64::NAN),
            turning,
            approach,
            evaluations,
        }),
        _ => Err(SolverError::StructureMismatch("turning point lost".into())),
    }
}

/// Isentropic inflow from stagnation conditions at inlet Mach number `alpha`.
pub fn stagnation_state(system: &NozzleEuler, p0: f64, t0: f64, alpha: f64, x: f64) -> Result<State<3>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SolverError::Config(format!("inlet Mach {alpha} outside (0, 1)")));
    }
    let g = system.gamma;
    let t = t0 / (1.0 + 0.5 * (g - 1.0) * alpha * alpha);
    let p = p0 * (t / t0).powf(g / (g - 1.0));
    let rho = p / (system.gas_constant * t);
    let u = alpha * (g * system.gas_constant * t).sqrt();
    Ok(system.conserved(&Primitive1d { rho, u, p }, x))
}

struct SonicSetup {
    system: NozzleEuler,
    grid: Vec<f64>,
    p0: f64,
    t0: f64,
    bracket: (f64, f64),
}

fn sonic_setup(problem: &ProblemInstance, n: usize) -> Result<SonicSetup> {
    require_kind(problem, ProblemKind::NozzleSonic)?;
    if n < 4 {
        return Err(SolverError::Arity { needed: 4, got: n });
    }
    let (x_l, x_r) = problem.interval()?;
    let inflow = match problem.boundary(Side::Left) {
        BoundaryCondition::Stagnation(s) => *s,
        other => {
            return Err(SolverError::Config(format!(
                "{}: left boundary must be stagnation data, got {}",
                problem.name,
                other.kind_name()
            )))
        }
    };
    Ok(SonicSetup {
        system: problem.nozzle_system()?,
        grid: uniform_grid(x_l, x_r, n),
        p0: inflow.p0,
        t0: inflow.t0,
        bracket: (problem.param("alpha_lo")?, problem.param("alpha_hi")?),
    })
}

/// Inlet Mach number fixed by sonic compatibility, and the turning point.
pub fn solve_unknown_boundary(
    problem: &ProblemInstance,
    integrator: Integrator,
    n: usize,
) -> Result<(f64, TurningPoint<3>)> {
    let s = sonic_setup(problem, n)?;
    let x_l = s.grid[0];
    let family = |a: f64| stagnation_state(&s.system, s.p0, s.t0, a, x_l);
    let sol = solve_unknown_boundary_with(&s.system, integrator, &s.grid, &family, 0, s.bracket)?;
    Ok((sol.alpha, sol.turning))
}

/// Full-grid branch through the turning point: nodes up to the handoff are
/// kept, nodes before `restart` are extrapolated, and stepping resumes at the
/// first node at least half a cell past `x_T`. Returns the branch and the
/// restart index.
pub fn continue_past_turning<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    integrator: Integrator,
    solve: &TurningSolve<M>,
) -> Result<(Branch1D<M>, usize)> {
    let ap = &solve.approach;
    let pts = samples(ap)?;
    let j = pts.len() - 1;
    let grid = &ap.grid;
    let dx = grid[j] - grid[j - 1];
    let restart = (j + 1..grid.len())
        .find(|&m| grid[m] >= solve.turning.x_t + 0.5 * dx)
        .ok_or_else(|| SolverError::StructureMismatch("turning point too close to the outlet".into()))?;
    let mut states: Vec<State<M>> = ap.states[..=j].to_vec();
    for &x in &grid[j + 1..=restart] {
        states.push(hermite_extrapolate(&pts, x - grid[j])?);
    }
    let mut u = states[restart];
    system.validate(&u)?;
    let mut v = system.flux_x(&u);
    let grading = GRADING_FRACTION * (grid[grid.len() - 1] - grid[0]);
    let x_t = solve.turning.x_t;
    for k in restart..grid.len() - 1 {
        (u, v) = graded_step(system, integrator, grid[k], &u, &v, grid[k + 1], grid[k] - x_t, grading).map_err(|e| match e {
            SolverError::NearSonic { eigenvalue, field, .. } => SolverError::NearSonic {
                eigenvalue,
                field,
                index: Some(k),
            },
            other => other,
        })?;
        states.push(u);
    }
    Ok((branch(grid.clone(), states), restart))
}

/// Transonic nozzle with a shock downstream of the throat.
#[derive(Debug, Clone)]
pub struct SonicShockResult {
    pub matched: MatchResult1D<3>,
    pub turning: TurningPoint<3>,
    /// Grid index where stepping resumed after the turning point.
    pub restart_index: usize,
    pub alpha_evaluations: usize,
}

pub fn solve_sonic_then_shock(problem: &ProblemInstance, integrator: Integrator, n: usize) -> Result<SonicShockResult> {
    let s = sonic_setup(problem, n)?;
    let x_l = s.grid[0];
    let family = |a: f64| stagnation_state(&s.system, s.p0, s.t0, a, x_l);
    let solve = solve_unknown_boundary_with(&s.system, integrator, &s.grid, &family, 0, s.bracket)?;
    let (through, restart) = continue_past_turning(&s.system, integrator, &solve)?;
    let lo = problem.param("shock_lo")?.max(s.grid[restart]);
    let hi = problem.param("shock_hi")?;
    let boundary = right_condition(problem, s.system)?;
    let matched = match_shock(
        &s.system,
        integrator,
        &through,
        restart,
        (lo, hi),
        &boundary,
        JumpOptions::default(),
    )?;
    Ok(SonicShockResult {
        matched,
        turning: solve.turning,
        restart_index: restart,
        alpha_evaluations: solve.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{exact_nozzle, ExactNozzleSolution};
    use crate::systems::ScalarLaw;

    fn st(x: f64) -> State<1> {
        State::<1>::new(x)
    }

    #[test]
    fn hermite_constant_and_cubic() {
        let c = [(0.0, st(2.0), st(0.0)), (0.1, st(2.0), st(0.0))];
        for h in [0.0, 0.03, 0.1] {
            assert_eq!(hermite_extrapolate(&c, h).unwrap()[0], 2.0);
        }
        let cube = |x: f64| (st(x * x * x), st(3.0 * x * x));
        let pts: Vec<_> = [0.0, 0.1].iter().map(|&x| (x, cube(x).0, cube(x).1)).collect();
        let v = hermite_extrapolate(&pts, 0.05).unwrap()[0];
        assert!((v - 0.003375).abs() < 1e-15, "{v}");
        assert!(matches!(hermite_extrapolate(&pts[..1], 0.05), Err(SolverError::Arity { .. })));
    }

    #[test]
    fn hermite_sine_order() {
        let err = |dx: f64| {
            let pts: Vec<_> = [1.0 - dx, 1.0].iter().map(|&x: &f64| (x, st(x.sin()), st(x.cos()))).collect();
            (hermite_extrapolate(&pts, dx).unwrap()[0] - (1.0 + dx).sin()).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        let rate = (e1 / e2).log2();
        assert!(rate > 3.8 && rate < 4.3, "{rate}");
        // three points with derivatives is exact for quintics
        let q = |x: f64| (st(x.powi(5) - x), st(5.0 * x.powi(4) - 1.0));
        let pts: Vec<_> = [0.0, 0.1, 0.2].iter().map(|&x| (x, q(x).0, q(x).1)).collect();
        let v = hermite_extrapolate_n(&pts, 3, 0.07).unwrap()[0];
        assert!((v - q(0.27).0[0]).abs() < 1e-15);
    }

    fn sonic_law() -> ScalarLaw {
        ScalarLaw {
            name: "sonic",
            f: |u| 0.5 * u * u,
            df: |u| u,
            g: |u| u,
            dg: |_| 1.0,
            source: |_, x| x - 0.5,
            dsource: |_, _| 0.0,
        }
    }

    #[test]
    fn linear_eigenvalue_root_recovered() {
        // u = x - 0.53 has lambda = u crossing zero mid-cell
        let grid: Vec<f64> = vec![0.4, 0.5];
        let b = Branch1D {
            grid: grid.clone(),
            states: grid.iter().map(|x| st(x - 0.53)).collect(),
            derivatives: Some(vec![st(1.0), st(1.0)]),
            direction: Direction::LeftToRight,
            valid_to: 1,
        };
        let tp = locate_turning_point(&b, &sonic_law(), 0).unwrap();
        assert!((tp.x_t - 0.53).abs() < 1e-14);
        let b2 = Branch1D {
            states: grid.iter().map(|x| st(x - 0.75)).collect(),
            ..b
        };
        assert!(matches!(
            locate_turning_point(&b2, &sonic_law(), 0),
            Err(SolverError::NotBracketed { .. })
        ));
    }

    #[test]
    fn manufactured_scalar_alpha() {
        let law = sonic_law();
        let grid = uniform_grid(0.0, 1.0, 40);
        let family = |a: f64| Ok(st(a));
        // both schemes integrate the linear flux derivative exactly
        for integ in [Integrator::Trapezoid, Integrator::Rk4] {
            let sol = solve_unknown_boundary_with(&law, integ, &grid, &family, 0, (-0.7, -0.3)).unwrap();
            assert!((sol.alpha + 0.5).abs() < 1e-10, "{integ:?} {}", sol.alpha);
            assert!((sol.turning.x_t - 0.5).abs() < 1e-8, "{}", sol.turning.x_t);
        }
        let flip = |a: f64| probe_alpha(&law, Integrator::Rk4, &grid, &family, 0, a).unwrap().signed();
        assert!(flip(-0.5 + 1e-3) * flip(-0.5 - 1e-3) < 0.0);
    }

    fn max_err(sol: &ExactNozzleSolution, res: &MatchResult1D<3>, sys: &NozzleEuler) -> f64 {
        let (xs, us) = res.nodes();
        xs.iter()
            .zip(&us)
            .filter(|(x, _)| (**x - sol.shock_x).abs() > 0.2)
            .map(|(x, u)| (sys.primitive(u, *x).unwrap().rho - sol.primitive(*x).rho).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn single_shock_matches_exact() {
        let p = ProblemInstance::named("nozzle-shock").unwrap();
        let sys = p.nozzle_system().unwrap();
        let exact = exact_nozzle(&p).unwrap();
        let r = solve_single_shock(&p, Integrator::Rk4, 100).unwrap();
        assert!(r.boundary_residual.abs() <= OUTER_TOL);
        assert!(r.jump_residual < 1e-11);
        assert!((r.shock_location - exact.shock_x).abs() < 1e-5);
        assert!(max_err(&exact, &r, &sys) < 1e-6);
        let (xs, _) = r.nodes();
        assert_eq!(xs.len(), 101);
    }

    #[test]
    fn wrong_bracket_is_structure_error() {
        let mut p = ProblemInstance::named("nozzle-shock").unwrap();
        p.params.insert("shock_lo".into(), 6.0);
        p.params.insert("shock_hi".into(), 9.0);
        let r = solve_single_shock(&p, Integrator::Trapezoid, 50);
        assert!(matches!(r, Err(SolverError::StructureMismatch(_))), "{r:?}");
    }

    #[test]
    fn transonic_pipeline() {
        let p = ProblemInstance::named("nozzle-sonic").unwrap();
        let exact = exact_nozzle(&p).unwrap();
        let sys = p.nozzle_system().unwrap();
        let r = solve_sonic_then_shock(&p, Integrator::Rk4, 100).unwrap();
        let h = 0.03;
        assert!((r.turning.x_t - 1.5).abs() < h, "{}", r.turning.x_t);
        assert!(r.turning.eigenvalue.abs() < 1e-10);
        assert!(r.turning.compatibility.abs() < 1e-9, "{}", r.turning.compatibility);
        assert!((r.turning.alpha.unwrap() - exact.inlet_mach).abs() < 1e-5);
        assert!(r.matched.shock_location > r.turning.x_t);
        assert!((r.matched.shock_location - exact.shock_x).abs() < 1e-3);
        let (xs, us) = r.matched.nodes();
        let worst = xs
            .iter()
            .zip(&us)
            .filter(|(x, _)| (**x - exact.shock_x).abs() > 0.1)
            .map(|(x, u)| (sys.primitive(u, *x).unwrap().p - exact.primitive(*x).p).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "{worst}");
    }
}
