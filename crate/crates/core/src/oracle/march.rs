//! First-order pseudo-time marching to steady state with the classical
//! four-point Lax–Friedrichs scheme. Only used to build smeared references.

use crate::error::{Result, SolverError};
use crate::grid::{Field2D, Grid2D, SweepDir};
use crate::systems::{
    BoundaryCondition, ConservationLaw2d, ProblemInstance, ProblemKind, ScalarLaw, Side, State,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchOptions {
    pub cfl: f64,
    /// Stop once the L-infinity update of one step drops below this.
    pub tol: f64,
    /// Defaults to `200 N^2`.
    pub max_steps: Option<usize>,
}

impl Default for MarchOptions {
    fn default() -> Self {
        Self {
            cfl: 0.45,
            tol: 1e-10,
            max_steps: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MarchResult<const M: usize> {
    /// Masked on solid nodes.
    pub field: Field2D<M>,
    pub steps: usize,
    pub final_update: f64,
}

#[derive(Debug, Clone, Copy)]
enum Neighbour {
    Node(usize),
    /// Mirror image of a node's state across a wall with the given normal.
    Ghost(usize, [f64; 2]),
}

#[derive(Debug, Clone, Copy)]
enum NodeKind {
    Update([Neighbour; 4]),
    Fixed,
    Copy(usize),
    Solid,
}

/// Boundary and wall treatment for every node.
struct Layout<const M: usize> {
    kinds: Vec<NodeKind>,
    initial: Vec<State<M>>,
}

fn wall_normal(problem: &ProblemInstance, x: f64) -> [f64; 2] {
    match problem.boundary(Side::Bottom) {
        BoundaryCondition::Wedge { start, angle_deg } if x >= *start => {
            let d = angle_deg.to_radians();
            [-d.sin(), d.cos()]
        }
        _ => [0.0, 1.0],
    }
}

fn is_solid(problem: &ProblemInstance, x: f64, y: f64) -> bool {
    match problem.boundary(Side::Bottom) {
        BoundaryCondition::Wedge { start, angle_deg } => y < (x - start) * angle_deg.to_radians().tan() - 1e-12,
        _ => false,
    }
}

fn is_wall(bc: &BoundaryCondition) -> bool {
    matches!(bc, BoundaryCondition::Reflection | BoundaryCondition::Wedge { .. })
}

/// Node classification. `data(side, s)` returns Dirichlet data where a side
/// prescribes a state, `fill(i, j)` the initial guess.
fn layout<const M: usize>(
    problem: &ProblemInstance,
    grid: &Grid2D,
    data: &dyn Fn(Side, f64) -> Result<State<M>>,
    fill: &dyn Fn(f64, f64) -> Result<State<M>>,
) -> Result<Layout<M>> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut kinds = vec![NodeKind::Solid; grid.len()];
    let mut initial = vec![State::<M>::zeros(); grid.len()];
    let fixed = |side: Side| matches!(problem.boundary(side), BoundaryCondition::State(_));
    let solid = |i: isize, j: isize| -> bool {
        i >= 0 && j >= 0 && i <= nx as isize && j <= ny as isize && is_solid(problem, grid.x(i as usize), grid.y(j as usize))
    };
    for j in 0..=ny {
        for i in 0..=nx {
            let k = grid.idx(i, j);
            let (x, y) = (grid.x(i), grid.y(j));
            if is_solid(problem, x, y) {
                continue;
            }
            initial[k] = fill(x, y)?;
            let on = |side: Side| match side {
                Side::Left => i == 0,
                Side::Right => i == nx,
                Side::Bottom => j == 0,
                Side::Top => j == ny,
            };
            if let Some(side) = Side::ALL.into_iter().find(|&s| on(s) && fixed(s)) {
                let s = if matches!(side, Side::Left | Side::Right) { y } else { x };
                initial[k] = data(side, s)?;
                kinds[k] = NodeKind::Fixed;
                continue;
            }
            let copy_i = if i == nx { Some(nx - 1) } else if i == 0 { Some(1) } else { None };
            let bottom_wall = is_wall(problem.boundary(Side::Bottom));
            let copy_j = if j == ny {
                Some(ny - 1)
            } else if j == 0 && !bottom_wall {
                Some(1)
            } else {
                None
            };
            if copy_i.is_some() || copy_j.is_some() {
                let ci = copy_i.unwrap_or(i);
                let cj = copy_j.unwrap_or(j);
                kinds[k] = NodeKind::Copy(grid.idx(ci, cj));
                continue;
            }
            // interior or wall node
            let (ii, jj) = (i as isize, j as isize);
            let offsets = [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)];
            let mut nb = [Neighbour::Node(k); 4];
            for (slot, (di, dj)) in offsets.into_iter().enumerate() {
                let (qi, qj) = (ii + di, jj + dj);
                let outside = qj < 0;
                nb[slot] = if outside || solid(qi, qj) {
                    let (mi, mj) = (ii - di, jj - dj);
                    let mirror = if mi >= 0 && mj >= 0 && mi <= nx as isize && mj <= ny as isize && !solid(mi, mj) {
                        grid.idx(mi as usize, mj as usize)
                    } else {
                        k
                    };
                    let xq = grid.x0 + grid.hx() * qi as f64;
                    Neighbour::Ghost(mirror, wall_normal(problem, xq))
                } else {
                    Neighbour::Node(grid.idx(qi as usize, qj as usize))
                };
            }
            kinds[k] = NodeKind::Update(nb);
        }
    }
    Ok(Layout { kinds, initial })
}

fn march<const M: usize, S: ConservationLaw2d<M>>(
    system: &S,
    grid: Grid2D,
    layout: Layout<M>,
    reflect: &dyn Fn(&State<M>, [f64; 2]) -> State<M>,
    n: usize,
    opts: &MarchOptions,
) -> Result<MarchResult<M>> {
    let Layout { kinds, initial } = layout;
    let max_steps = opts.max_steps.unwrap_or(200 * n * n);
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut u = initial;
    let mut next = u.clone();
    let mut fx = vec![State::<M>::zeros(); u.len()];
    let mut fy = fx.clone();
    let mut update = f64::INFINITY;
    let mut steps = 0;
    while steps < max_steps {
        let (mut sx, mut sy) = (0.0f64, 0.0f64);
        for (k, kind) in kinds.iter().enumerate() {
            if matches!(kind, NodeKind::Solid) {
                continue;
            }
            fx[k] = system.flux_x(&u[k]);
            fy[k] = system.flux_y(&u[k]);
            let [a, b] = system.wave_speeds(&u[k]);
            sx = sx.max(a);
            sy = sy.max(b);
        }
        let dt = opts.cfl / (sx / hx + sy / hy);
        let (rx, ry) = (0.5 * dt / hx, 0.5 * dt / hy);
        let term = |nbr: Neighbour| -> (State<M>, State<M>, State<M>) {
            match nbr {
                Neighbour::Node(q) => (u[q], fx[q], fy[q]),
                Neighbour::Ghost(q, normal) => {
                    let g = reflect(&u[q], normal);
                    (g, system.flux_x(&g), system.flux_y(&g))
                }
            }
        };
        update = 0.0;
        for (k, kind) in kinds.iter().enumerate() {
            if let NodeKind::Update(nb) = kind {
                let (ue, fe, _) = term(nb[0]);
                let (uw, fw, _) = term(nb[1]);
                let (un, _, gn) = term(nb[2]);
                let (us, _, gs) = term(nb[3]);
                let v = (ue + uw + un + us) * 0.25 - (fe - fw) * rx - (gn - gs) * ry;
                update = update.max((v - u[k]).amax());
                next[k] = v;
            }
        }
        for (k, kind) in kinds.iter().enumerate() {
            if let NodeKind::Copy(q) = kind {
                next[k] = next[*q];
            }
        }
        std::mem::swap(&mut u, &mut next);
        steps += 1;
        if !update.is_finite() {
            return Err(SolverError::Numerical {
                what: format!("time march blew up at step {steps}"),
                residual: update,
            });
        }
        if update < opts.tol {
            break;
        }
    }
    if update >= opts.tol {
        return Err(SolverError::Stagnation { steps, residual: update });
    }
    let mut field = Field2D::filled(grid, State::<M>::zeros(), SweepDir::Marched);
    for (k, kind) in kinds.iter().enumerate() {
        field.values[k] = u[k];
        field.valid[k] = !matches!(kind, NodeKind::Solid);
    }
    Ok(MarchResult {
        field,
        steps,
        final_update: update,
    })
}

fn grid_for(problem: &ProblemInstance, n: usize) -> Result<Grid2D> {
    if n < 2 {
        return Err(SolverError::Arity { needed: 2, got: n });
    }
    let (x0, x1, y0, y1) = problem.rectangle()?;
    Ok(Grid2D::new(n, n, x0, x1, y0, y1))
}

/// Steady state of `f(u)_x + g(u)_y = 0` on an `(n+1) x (n+1)` node grid.
/// The initial guess extends the bottom data vertically.
pub fn reference_time_march_scalar(
    problem: &ProblemInstance,
    law: &ScalarLaw,
    n: usize,
    opts: &MarchOptions,
) -> Result<MarchResult<1>> {
    if !matches!(problem.kind, ProblemKind::InteriorShock | ProblemKind::Rarefaction) {
        return Err(SolverError::Config(format!("{} is not a scalar problem", problem.name)));
    }
    let grid = grid_for(problem, n)?;
    let data = |side: Side, s: f64| problem.component_at(side, "u", s).map(State::<1>::new);
    let fill = |x: f64, _y: f64| data(Side::Bottom, x);
    let lay = layout(problem, &grid, &data, &fill)?;
    march(law, grid, lay, &|u, _| *u, n, opts)
}

/// Steady Euler state on an `(n+1) x (n+1)` node grid. The initial guess
/// extends the left inflow data horizontally.
pub fn reference_time_march_euler(problem: &ProblemInstance, n: usize, opts: &MarchOptions) -> Result<MarchResult<4>> {
    if problem.kind.is_1d() || matches!(problem.kind, ProblemKind::InteriorShock | ProblemKind::Rarefaction) {
        return Err(SolverError::Config(format!("{} is not an Euler problem", problem.name)));
    }
    let sys = problem.euler_system();
    let grid = grid_for(problem, n)?;
    let data = |side: Side, s: f64| problem.euler_state_at(side, s);
    let fill = |_x: f64, y: f64| data(Side::Left, y);
    let lay = layout(problem, &grid, &data, &fill)?;
    let reflect = |u: &State<4>, n: [f64; 2]| {
        let dot = u[1] * n[0] + u[2] * n[1];
        State::<4>::new(u[0], u[1] - 2.0 * dot * n[0], u[2] - 2.0 * dot * n[1], u[3])
    };
    march(&sys, grid, lay, &reflect, n, opts)
}
