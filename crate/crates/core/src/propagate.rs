//! The propagation operator: integrates `V_x = a(f^{-1}(V), x)` in flux
//! space along a sweep direction and samples the result on a uniform grid.

use std::io::Write;

use crate::error::{Result, SolverError};
use crate::systems::{solve_linear, ConservationLaw, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Integrator {
    Euler,
    Trapezoid,
    Rk4,
}

impl Integrator {
    pub const ALL: [Integrator; 3] = [Integrator::Euler, Integrator::Trapezoid, Integrator::Rk4];

    pub fn order(self) -> u32 {
        match self {
            Integrator::Euler => 1,
            Integrator::Trapezoid => 2,
            Integrator::Rk4 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Integrator::Euler => "euler",
            Integrator::Trapezoid => "trap",
            Integrator::Rk4 => "rk4",
        }
    }

    pub fn parse(s: &str) -> Option<Integrator> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Some(Integrator::Euler),
            "trap" | "trapezoid" => Some(Integrator::Trapezoid),
            "rk4" => Some(Integrator::Rk4),
            _ => None,
        }
    }
}

/// Settings for the damped Newton iteration behind [`invert_flux`].
#[derive(Debug, Clone, Copy)]
pub struct InversionOptions {
    /// Accept once `|f(U) - V| <= tolerance * max(|V|, 1e-300)`.
    pub tolerance: f64,
    pub max_iters: usize,
    pub max_halvings: u32,
    /// An eigenvalue with `|lambda| < sonic_tolerance * max |lambda|` is treated as sonic.
    pub sonic_tolerance: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-14,
            max_iters: 60,
            max_halvings: 40,
            sonic_tolerance: 1e-8,
        }
    }
}

/// Result of a flux inversion together with the Newton iterations it took.
#[derive(Debug, Clone, Copy)]
pub struct Inversion<const M: usize> {
    pub state: State<M>,
    pub iterations: usize,
    pub residual: f64,
}

fn spectral_scale<const M: usize, S: ConservationLaw<M> + ?Sized>(system: &S, u: &State<M>) -> f64 {
    system.eigenvalues_x(u).iter().fold(0.0f64, |m, l| m.max(l.abs()))
}

/// Fails when some eigenvalue at `u` is below `tol * scale` in magnitude.
fn sonic_check<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    u: &State<M>,
    tol: f64,
    scale: f64,
) -> Result<()> {
    let ev = system.eigenvalues_x(u);
    for (i, l) in ev.iter().enumerate() {
        if l.abs() < tol * scale || scale == 0.0 {
            return Err(SolverError::NearSonic {
                eigenvalue: *l,
                field: i,
                index: None,
            });
        }
    }
    Ok(())
}

/// Solves `f(U) = V` on the branch of `hint`, i.e. by Newton seeded at `hint`.
pub fn invert_flux<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    v: &State<M>,
    hint: &State<M>,
) -> Result<State<M>> {
    invert_flux_with(system, v, hint, &InversionOptions::default()).map(|r| r.state)
}

pub fn invert_flux_with<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    v: &State<M>,
    hint: &State<M>,
    opts: &InversionOptions,
) -> Result<Inversion<M>> {
    system.validate(hint)?;
    let scale = spectral_scale(system, hint);
    let fail = |u: &State<M>, iterations, residual| {
        sonic_check(system, u, opts.sonic_tolerance, scale)
            .err()
            .unwrap_or(SolverError::InversionFailure { iterations, residual })
    };
    let target = opts.tolerance * v.amax().max(1e-300);
    let mut u = *hint;
    let mut r = system.flux_x(&u) - v;
    let mut rn = r.amax();
    let mut iterations = 0;
    while rn > target {
        if iterations == opts.max_iters {
            return Err(fail(&u, iterations, rn));
        }
        iterations += 1;
        let jac = system.jacobian_x(&u);
        let step = solve_linear(&jac, &r).ok_or_else(|| {
            let ev = system.eigenvalues_x(&u);
            let (field, eigenvalue) = ev
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(i, l)| (i, *l))
                .unwrap_or((0, 0.0));
            SolverError::NearSonic {
                eigenvalue,
                field,
                index: None,
            }
        })?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial = u - step * t;
            if system.validate(&trial).is_ok() {
                let tr = system.flux_x(&trial) - v;
                let tn = tr.amax();
                if tn < rn || tn <= target {
                    u = trial;
                    r = tr;
                    rn = tn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            // Stalled at round-off: accept if already close, otherwise give up.
            if rn <= 1e3 * target {
                break;
            }
            return Err(fail(&u, iterations, rn));
        }
    }
    sonic_check(system, &u, opts.sonic_tolerance, scale)?;
    Ok(Inversion {
        state: u,
        iterations,
        residual: rn,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

/// A smooth branch sampled on a uniform grid. Only `states[..=valid_to]` exist.
#[derive(Debug, Clone)]
pub struct Branch1D<const M: usize> {
    pub grid: Vec<f64>,
    pub states: Vec<State<M>>,
    /// `U_x` at each stored state, when requested.
    pub derivatives: Option<Vec<State<M>>>,
    pub direction: Direction,
    pub valid_to: usize,
}

impl<const M: usize> Branch1D<M> {
    pub fn is_complete(&self) -> bool {
        self.states.len() == self.grid.len()
    }

    pub fn last(&self) -> (f64, State<M>) {
        (self.grid[self.valid_to], self.states[self.valid_to])
    }

    /// Writes `x, u0, .., u{M-1}` and, when present, `du0, ..` columns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x".to_string()];
        header.extend((0..M).map(|k| format!("u{k}")));
        if self.derivatives.is_some() {
            header.extend((0..M).map(|k| format!("du{k}")));
        }
        w.write_record(&header).map_err(csv_err)?;
        for (k, u) in self.states.iter().enumerate() {
            let mut row = vec![fmt_real(self.grid[k])];
            row.extend(u.iter().map(|c| fmt_real(*c)));
            if let Some(d) = &self.derivatives {
                row.extend(d[k].iter().map(|c| fmt_real(*c)));
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> SolverError {
    SolverError::Io(e.to_string())
}

/// Seventeen significant digits, the precision used by every CSV writer.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Tolerances for the implicit trapezoid stage.
const TRAP_TOL: f64 = 1e-13;
const TRAP_MAX_ITERS: usize = 30;

/// One integrator step from `(x, U, V)` to `x + h`. Returns the new `(U, V)`.
///
/// `V` is carried alongside `U` so that repeated steps integrate in flux
/// space without accumulating inversion error.
pub fn step<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    integrator: Integrator,
    x: f64,
    u: &State<M>,
    v: &State<M>,
    h: f64,
) -> Result<(State<M>, State<M>)> {
    let a0 = system.source(u, x);
    match integrator {
        Integrator::Euler => {
            let v1 = v + a0 * h;
            Ok((invert_flux(system, &v1, u)?, v1))
        }
        Integrator::Rk4 => {
            let xm = x + 0.5 * h;
            let u2 = invert_flux(system, &(v + a0 * (0.5 * h)), u)?;
            let k2 = system.source(&u2, xm);
            let u3 = invert_flux(system, &(v + k2 * (0.5 * h)), &u2)?;
            let k3 = system.source(&u3, xm);
            let u4 = invert_flux(system, &(v + k3 * h), &u3)?;
            let k4 = system.source(&u4, x + h);
            let v1 = v + (a0 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
            Ok((invert_flux(system, &v1, &u4)?, v1))
        }
        Integrator::Trapezoid => {
            let x1 = x + h;
            let base = v + a0 * (0.5 * h);
            // Euler predictor, then Newton on f(U) - h/2 a(U, x1) = V + h/2 a0.
            // Near a sonic point the predictor can overshoot the fold of f;
            // the current state is then the seed.
            let mut w = invert_flux(system, &(v + a0 * h), u).unwrap_or(*u);
            let scale = TRAP_TOL * base.amax().max(1.0);
            let mut converged = false;
            for _ in 0..TRAP_MAX_ITERS {
                let res = system.flux_x(&w) - system.source(&w, x1) * (0.5 * h) - base;
                if res.amax() <= scale {
                    converged = true;
                    break;
                }
                let jac = system.jacobian_x(&w) - system.source_jacobian(&w, x1) * (0.5 * h);
                let d = solve_linear(&jac, &res).ok_or(SolverError::NearSonic {
                    eigenvalue: 0.0,
                    field: 0,
                    index: None,
                })?;
                let mut t = 1.0;
                let rn = res.amax();
                let mut next = w - d;
                for _ in 0..40 {
                    if system.validate(&next).is_ok() {
                        let r2 = system.flux_x(&next) - system.source(&next, x1) * (0.5 * h) - base;
                        if r2.amax() < rn {
                            break;
                        }
                    }
                    t *= 0.5;
                    next = w - d * t;
                }
                w = next;
            }
            if !converged {
                let res = system.flux_x(&w) - system.source(&w, x1) * (0.5 * h) - base;
                if res.amax() > 1e3 * scale {
                    return Err(SolverError::Numerical {
                        what: "trapezoid stage did not converge".into(),
                        residual: res.amax(),
                    });
                }
            }
            sonic_check(
                system,
                &w,
                InversionOptions::default().sonic_tolerance,
                spectral_scale(system, u),
            )?;
            let v1 = base + system.source(&w, x1) * (0.5 * h);
            Ok((w, v1))
        }
    }
}

/// `U_x = (grad f)^{-1} a`.
pub fn state_derivative<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    u: &State<M>,
    x: f64,
) -> Result<State<M>> {
    solve_linear(&system.jacobian_x(u), &system.source(u, x)).ok_or(SolverError::NearSonic {
            eigenvalue: 0.0,
            field: 0,
            index: None,
        })
}

/// Uniform grid of `n_steps + 1` points from `x_start` to `x_end` (either order).
pub fn uniform_grid(x_start: f64, x_end: f64, n_steps: usize) -> Vec<f64> {
    (0..=n_steps)
        .map(|k| {
            if k == n_steps {
                x_end
            } else {
                x_start + (x_end - x_start) * (k as f64 / n_steps as f64)
            }
        })
        .collect()
}

fn propagate_impl<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    integrator: Integrator,
    u_start: &State<M>,
    x_start: f64,
    x_end: f64,
    n_steps: usize,
    with_derivatives: bool,
) -> (Branch1D<M>, Option<SolverError>) {
    let grid = uniform_grid(x_start, x_end, n_steps.max(1));
    let direction = if x_end >= x_start {
        Direction::LeftToRight
    } else {
        Direction::RightToLeft
    };
    let mut branch = Branch1D {
        grid,
        states: Vec::with_capacity(n_steps + 1),
        derivatives: with_derivatives.then(|| Vec::with_capacity(n_steps + 1)),
        direction,
        valid_to: 0,
    };
    if let Err(e) = system.validate(u_start) {
        return (branch, Some(e));
    }
    let push = |b: &mut Branch1D<M>, u: State<M>, x: f64| -> Result<()> {
        if let Some(d) = b.derivatives.as_mut() {
            d.push(state_derivative(system, &u, x)?);
        }
        b.states.push(u);
        Ok(())
    };
    if let Err(e) = push(&mut branch, *u_start, x_start) {
        branch.states.push(*u_start);
        return (branch, Some(e));
    }
    let mut u = *u_start;
    let mut v = system.flux_x(&u);
    let start_scale = spectral_scale(system, &u);
    for k in 0..branch.grid.len() - 1 {
        let (x0, x1) = (branch.grid[k], branch.grid[k + 1]);
        let stepped = step(system, integrator, x0, &u, &v, x1 - x0).and_then(|(u1, v1)| {
            push(&mut branch, u1, x1)?;
            Ok((u1, v1))
        });
        match stepped {
            Ok((u1, v1)) => {
                u = u1;
                v = v1;
                branch.valid_to = k + 1;
            }
            Err(e) => {
                let e = match e {
                    SolverError::NearSonic {
                        eigenvalue, field, ..
                    } => SolverError::NearSonic {
                        eigenvalue,
                        field,
                        index: Some(k),
                    },
                    // No root past a nearly sonic state: the branch ran into the sonic point.
                    SolverError::InversionFailure { .. } => {
                        let ev = system.eigenvalues_x(&u);
                        let (field, eigenvalue) = ev
                            .iter()
                            .enumerate()
                            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                            .map(|(i, l)| (i, *l))
                            .unwrap_or((0, 0.0));
                        if eigenvalue.abs() < 1e-3 * start_scale {
                            SolverError::NearSonic {
                                eigenvalue,
                                field,
                                index: Some(k),
                            }
                        } else {
                            e
                        }
                    }
                    other => other,
                };
                return (branch, Some(e));
            }
        }
    }
    (branch, None)
}

/// Propagates `U_start` from `x_start` to `x_end` in `n_steps` uniform steps.
pub fn propagate<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    integrator: Integrator,
    u_start: &State<M>,
    x_start: f64,
    x_end: f64,
    n_steps: usize,
) -> Result<Branch1D<M>> {
    match propagate_impl(system, integrator, u_start, x_start, x_end, n_steps, false) {
        (b, None) => Ok(b),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`propagate`] but also records `U_x` at every accepted point.
pub fn propagate_with_derivatives<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    integrator: Integrator,
    u_start: &State<M>,
    x_start: f64,
    x_end: f64,
    n_steps: usize,
) -> Result<Branch1D<M>> {
    match propagate_impl(system, integrator, u_start, x_start, x_end, n_steps, true) {
        (b, None) => Ok(b),
        (_, Some(e)) => Err(e),
    }
}

/// Propagates as far as possible; on failure the branch holds every point
/// reached (`valid_to`) and the error is returned alongside it.
pub fn propagate_partial<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    integrator: Integrator,
    u_start: &State<M>,
    x_start: f64,
    x_end: f64,
    n_steps: usize,
    with_derivatives: bool,
) -> (Branch1D<M>, Option<SolverError>) {
    propagate_impl(system, integrator, u_start, x_start, x_end, n_steps, with_derivatives)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{make_burgers2d, make_nozzle_euler, AreaProfile, Primitive1d, ScalarLaw};

    fn growth() -> ScalarLaw {
        ScalarLaw {
            name: "growth",
            f: |u| u,
            df: |_| 1.0,
            g: |u| u,
            dg: |_| 1.0,
            source: |u, _| u,
            dsource: |_, _| 1.0,
        }
    }

    fn shock_nozzle() -> crate::systems::NozzleEuler {
        make_nozzle_euler(
            AreaProfile::Tanh {
                base: 1.398,
                amplitude: 0.347,
                slope: 0.8,
                shift: 4.0,
            },
            1.4,
            8.3144,
        )
    }

    #[test]
    fn burgers_inversion_follows_hint() {
        let b = make_burgers2d();
        let v = State::<1>::new(1.125);
        assert!((invert_flux(&b, &v, &State::<1>::new(1.4)).unwrap()[0] - 1.5).abs() < 1e-14);
        assert!((invert_flux(&b, &v, &State::<1>::new(-1.4)).unwrap()[0] + 1.5).abs() < 1e-14);
    }

    #[test]
    fn inversion_at_fixed_point_takes_no_step() {
        let n = shock_nozzle();
        let u0 = n.conserved(&Primitive1d { rho: 0.502, u: 1.299, p: 0.3809 }, 0.0);
        let r = invert_flux_with(&n, &n.flux_x(&u0), &u0, &InversionOptions::default()).unwrap();
        assert!(r.iterations <= 1);
        assert!((r.state - u0).amax() <= 1e-12 * u0.amax());
    }

    #[test]
    fn inversion_round_trip_from_perturbed_hint() {
        let n = shock_nozzle();
        let u0 = n.conserved(&Primitive1d { rho: 0.502, u: 1.299, p: 0.3809 }, 0.0);
        let hint = u0 * 1.03;
        let back = invert_flux(&n, &n.flux_x(&u0), &hint).unwrap();
        assert!((back - u0).amax() <= 1e-12 * u0.amax());
    }

    #[test]
    fn sonic_state_is_refused() {
        let b = make_burgers2d();
        let e = invert_flux(&b, &State::<1>::new(0.0), &State::<1>::new(0.0)).unwrap_err();
        assert!(matches!(e, SolverError::NearSonic { .. }));
    }

    #[test]
    fn zero_source_keeps_state() {
        let b = make_burgers2d();
        let br = propagate(&b, Integrator::Rk4, &State::<1>::new(0.7), 0.0, 1.0, 10).unwrap();
        assert!(br.is_complete());
        assert!(br.states.iter().all(|u| u[0] == 0.7));
        let br = propagate_with_derivatives(&b, Integrator::Trapezoid, &State::<1>::new(0.7), 0.0, 1.0, 10)
            .unwrap();
        assert!(br.derivatives.unwrap().iter().all(|d| d[0] == 0.0));
    }

    #[test]
    fn rk4_reproduces_exponential() {
        let g = growth();
        // one RK4 step multiplies by 1 + h + .. + h^4/24, so the global error is ~ e h^4 / 120
        let br = propagate_with_derivatives(&g, Integrator::Rk4, &State::<1>::new(1.0), 0.0, 1.0, 16).unwrap();
        let h: f64 = 1.0 / 16.0;
        for (x, u) in br.grid.iter().zip(&br.states) {
            assert!((u[0] - x.exp()).abs() <= 1.05 * x.exp() * x * h.powi(4) / 120.0);
        }
        let fine = propagate(&g, Integrator::Rk4, &State::<1>::new(1.0), 0.0, 1.0, 64).unwrap();
        assert!((fine.states[64][0] - 1f64.exp()).abs() < 1e-8);
        for (u, d) in br.states.iter().zip(br.derivatives.as_ref().unwrap()) {
            assert!((u[0] - d[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn integrator_orders() {
        let g = growth();
        for integ in Integrator::ALL {
            let err = |n| {
                let br = propagate(&g, integ, &State::<1>::new(1.0), 0.0, 1.0, n).unwrap();
                (br.states[n][0] - 1f64.exp()).abs()
            };
            let rate = (err(20) / err(40)).log2();
            let k = integ.order() as f64;
            assert!(rate > k - 0.3 && rate < k + 0.5, "{} rate {rate}", integ.name());
        }
    }

    #[test]
    fn near_sonic_reports_index() {
        // u u_x = -1 from u = 1 hits u = 0 at x = 0.5
        let law = ScalarLaw {
            name: "decel",
            f: |u| 0.5 * u * u,
            df: |u| u,
            g: |u| u,
            dg: |_| 1.0,
            source: |_, _| -1.0,
            dsource: |_, _| 0.0,
        };
        let (br, err) = propagate_partial(&law, Integrator::Euler, &State::<1>::new(1.0), 0.0, 1.0, 10, false);
        assert!(matches!(err, Some(SolverError::NearSonic { index: Some(_), .. })));
        assert!(br.valid_to < 10);
        assert_eq!(br.states.len(), br.valid_to + 1);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let g = growth();
        let br = propagate_with_derivatives(&g, Integrator::Euler, &State::<1>::new(1.0), 0.0, 1.0, 4).unwrap();
        let mut buf = Vec::new();
        br.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "x,u0,du0");
        assert_eq!(lines.len(), 6);
    }
}
