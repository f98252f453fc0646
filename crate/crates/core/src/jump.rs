//! Rankine–Hugoniot jumps: the 1D operator `Phi` with `f(Phi U) = f(U)`, and
//! oblique jumps of the 2D Euler equations across a line with normal `n`.
//!
//! For the Euler systems the jump reduces to a quadratic in the post-shock
//! normal velocity. With mass flux `m`, momentum flux `P` and total enthalpy
//! `h` (less the tangential kinetic energy), and `g = gamma / (gamma - 1)`,
//!
//! ```text
//! (1/2 - g) w^2 + g (P / m) w - h = 0,
//! ```
//!
//! whose two roots are the pre- and post-shock normal velocities.

use serde::Serialize;

use crate::error::{Result, SolverError};
use crate::roots::{golden_max, illinois, newton_bisect, RootOptions};
use crate::systems::{ConservationLaw, Euler2d, NozzleEuler, ScalarLaw, State};

/// Relative margin that separates the shock root from the continuous one.
const CONTINUOUS_MARGIN: f64 = 1e-6;
/// Slack in the Lax and entropy inequalities.
const ENTROPY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct JumpOptions {
    pub check_entropy: bool,
    /// Return the continuous root when it is the only one (a degenerate shock).
    pub allow_degenerate: bool,
}

impl Default for JumpOptions {
    fn default() -> Self {
        Self {
            check_entropy: true,
            allow_degenerate: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct JumpSolution<const M: usize> {
    #[serde(skip)]
    pub post_state: State<M>,
    /// `max |f(Phi U) - f(U)|`.
    pub residual: f64,
    pub entropy_ok: bool,
}

/// Systems whose stationary x-jump can be computed.
pub trait JumpSystem<const M: usize>: ConservationLaw<M> {
    /// The state on the other side of a stationary discontinuity, or `None`
    /// when only the continuous root exists.
    fn other_root(&self, u: &State<M>) -> Result<Option<State<M>>>;

    /// `Some(s_down - s_up)` for the physical entropy where one is defined.
    fn entropy_gain(&self, _left: &State<M>, _right: &State<M>) -> Option<f64> {
        None
    }
}

/// Lax's inequalities for a stationary shock with `left` on the left.
pub fn lax_admissible<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    left: &State<M>,
    right: &State<M>,
) -> bool {
    let ll = system.eigenvalues_x(left);
    let lr = system.eigenvalues_x(right);
    let scale = ll.amax().max(lr.amax()).max(1e-300);
    let tol = ENTROPY_TOL * scale;
    (0..M).any(|k| {
        let crosses = ll[k] > tol && lr[k] < -tol;
        let below = k == 0 || ll[k - 1] < tol;
        let above = k + 1 == M || lr[k + 1] > -tol;
        crosses && below && above
    })
}

pub fn jump_1d<const M: usize, S: JumpSystem<M> + ?Sized>(system: &S, u_minus: &State<M>) -> Result<JumpSolution<M>> {
    jump_1d_with(system, u_minus, JumpOptions::default())
}

pub fn jump_1d_with<const M: usize, S: JumpSystem<M> + ?Sized>(
    system: &S,
    u_minus: &State<M>,
    opts: JumpOptions,
) -> Result<JumpSolution<M>> {
    system.validate(u_minus)?;
    let f_minus = system.flux_x(u_minus);
    let post = match system.other_root(u_minus)? {
        Some(p) => p,
        None if opts.allow_degenerate => *u_minus,
        None => return Err(SolverError::NoJump("only the continuous root exists".into())),
    };
    system.validate(&post)?;
    let residual = (system.flux_x(&post) - f_minus).amax();
    if residual > 1e-11 * (1.0 + f_minus.amax()) {
        return Err(SolverError::Numerical {
            what: "Rankine-Hugoniot residual".into(),
            residual,
        });
    }
    let degenerate = (post - u_minus).amax() == 0.0;
    let entropy_ok = degenerate
        || (lax_admissible(system, u_minus, &post)
            && system
                .entropy_gain(u_minus, &post)
                .is_none_or(|ds| ds > ENTROPY_TOL * (1.0 + ds.abs())));
    if opts.check_entropy && !entropy_ok {
        return Err(SolverError::NoJump("entropy condition violated".into()));
    }
    Ok(JumpSolution {
        post_state: post,
        residual,
        entropy_ok,
    })
}

impl JumpSystem<1> for ScalarLaw {
    fn other_root(&self, u: &State<1>) -> Result<Option<State<1>>> {
        let u0 = u[0];
        let target = (self.f)(u0);
        let lam = (self.df)(u0);
        if lam == 0.0 {
            return Ok(None);
        }
        // An even flux has the exact mirror root.
        if (self.f)(-u0) == target && (self.df)(-u0) * lam < 0.0 {
            return Ok(Some(State::<1>::new(-u0)));
        }
        // March away from u0 against the sign of f' until f' flips and f
        // climbs back to the target level.
        let dir = -lam.signum();
        let mut delta = 1e-3 * (1.0 + u0.abs());
        let mut prev = u0;
        let mut passed = false;
        for _ in 0..200 {
            let cand = u0 + dir * delta;
            let d = (self.df)(cand);
            if !passed && d * lam < 0.0 {
                passed = true;
            }
            if passed {
                let g = (self.f)(cand) - target;
                if g * ((self.f)(prev) - target) <= 0.0 && (prev - u0).abs() > 0.0 {
                    let (lo, hi) = if prev < cand { (prev, cand) } else { (cand, prev) };
                    let r = newton_bisect(
                        |w| ((self.f)(w) - target, (self.df)(w)),
                        lo,
                        hi,
                        RootOptions {
                            f_tol: 0.0,
                            ..Default::default()
                        },
                    )?;
                    return Ok(Some(State::<1>::new(r)));
                }
            }
            prev = cand;
            delta *= 1.5;
        }
        Ok(None)
    }
}

/// Post-shock normal velocity from the quadratic in the module docs, on the
/// side of the vertex opposite to `w_minus`. `None` if the roots merge.
pub(crate) fn normal_shock_velocity(m: f64, p_flux: f64, h: f64, w_minus: f64, gamma: f64) -> Result<Option<f64>> {
    let g = gamma / (gamma - 1.0);
    let a = 0.5 - g;
    let b = g * p_flux / m;
    let c = -h;
    let vertex = -b / (2.0 * a);
    if !(vertex > 0.0) {
        return Err(SolverError::NoJump("no positive normal velocity".into()));
    }
    if (w_minus - vertex).abs() <= CONTINUOUS_MARGIN * vertex {
        return Ok(None);
    }
    let q = |w: f64| (a * w * w + b * w + c, 2.0 * a * w + b);
    // Vieta gives the other root without cancellation; polish in its bracket.
    let guess = c / (a * w_minus);
    let (lo, hi) = if w_minus > vertex {
        (f64::MIN_POSITIVE, vertex * (1.0 - CONTINUOUS_MARGIN))
    } else {
        (vertex * (1.0 + CONTINUOUS_MARGIN), 2.0 * vertex)
    };
    if guess > lo && guess < hi && q(guess).0.abs() <= 4.0 * f64::EPSILON * (b * guess).abs().max(c.abs()) {
        return Ok(Some(guess));
    }
    let w = newton_bisect(
        q,
        lo,
        hi,
        RootOptions {
            f_tol: 0.0,
            ..Default::default()
        },
    )?;
    Ok(Some(w))
}

impl JumpSystem<3> for NozzleEuler {
    fn other_root(&self, u: &State<3>) -> Result<Option<State<3>>> {
        let f = self.flux_x(u);
        let (m, pf, hf) = (f[0], f[1], f[2]);
        let w_minus = u[1] / u[0];
        if m <= 0.0 {
            return Err(SolverError::NoJump("non-positive mass flux".into()));
        }
        Ok(normal_shock_velocity(m, pf, hf / m, w_minus, self.gamma)?.map(|w| {
            // Every quantity carries the same area factor, so A cancels.
            let rho_a = m / w;
            let pa = pf - m * w;
            State::<3>::new(rho_a, m, pa / (self.gamma - 1.0) + 0.5 * m * w)
        }))
    }

    fn entropy_gain(&self, left: &State<3>, right: &State<3>) -> Option<f64> {
        let s = |u: &State<3>| self.pressure_area(u) * u[0].powf(-self.gamma);
        // the area factor scales both entropies equally
        Some(if left[1] > 0.0 { s(right) - s(left) } else { s(left) - s(right) } / s(left))
    }
}

impl JumpSystem<4> for Euler2d {
    fn other_root(&self, u: &State<4>) -> Result<Option<State<4>>> {
        Ok(normal_jump_state(self, u, [1.0, 0.0])?.map(|(s, _)| s))
    }

    fn entropy_gain(&self, left: &State<4>, right: &State<4>) -> Option<f64> {
        let s = |u: &State<4>| self.pressure(u) * u[0].powf(-self.gamma);
        Some(if left[1] > 0.0 { s(right) - s(left) } else { s(left) - s(right) } / s(left))
    }
}

/// Post state across a line with unit normal `n` (upstream normal velocity
/// must be positive). Also returns the post normal velocity.
fn normal_jump_state(system: &Euler2d, u: &State<4>, n: [f64; 2]) -> Result<Option<(State<4>, f64)>> {
    let prim = system.primitive(u)?;
    let t = [-n[1], n[0]];
    let wn = prim.u * n[0] + prim.v * n[1];
    let wt = prim.u * t[0] + prim.v * t[1];
    if wn <= 0.0 {
        return Err(SolverError::NoJump("flow does not cross the line along n".into()));
    }
    let g = system.gamma;
    let m = prim.rho * wn;
    let pf = m * wn + prim.p;
    let h = g / (g - 1.0) * prim.p / prim.rho + 0.5 * wn * wn;
    Ok(normal_shock_velocity(m, pf, h, wn, g)?.map(|w| {
        let rho = m / w;
        let p = pf - m * w;
        let vel = [w * n[0] + wt * t[0], w * n[1] + wt * t[1]];
        let e = p / (g - 1.0) + 0.5 * rho * (vel[0] * vel[0] + vel[1] * vel[1]);
        (State::<4>::new(rho, rho * vel[0], rho * vel[1], e), w)
    }))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ObliqueJumpSolution {
    #[serde(skip)]
    pub post_state: State<4>,
    /// Unit normal, oriented so the upstream normal velocity is positive.
    pub normal: [f64; 2],
    /// Angle of the shock line measured from the positive x axis.
    pub shock_angle: f64,
    /// `max |(F(U_left) - F(U_post)) . n|`.
    pub residual: f64,
    pub entropy_ok: bool,
}

/// What fixes the oblique jump besides the upstream state.
#[derive(Debug, Clone, Copy)]
pub enum JumpConstraint {
    /// The shock normal is given; orientation is fixed internally.
    Normal([f64; 2]),
    /// The post-shock flow angle (`atan2(v, u)`) is pinned, e.g. `0` for a
    /// wall `v = 0` or `delta` for a wedge. The shock angle is unknown and the
    /// weak branch is selected.
    FlowAngle(f64),
}

pub fn jump_2d(system: &Euler2d, u_left: &State<4>, constraint: JumpConstraint) -> Result<ObliqueJumpSolution> {
    match constraint {
        JumpConstraint::Normal(n) => jump_with_normal(system, u_left, n),
        JumpConstraint::FlowAngle(theta) => jump_with_flow_angle(system, u_left, theta),
    }
}

fn jump_with_normal(system: &Euler2d, u_left: &State<4>, n: [f64; 2]) -> Result<ObliqueJumpSolution> {
    let len = n[0].hypot(n[1]);
    if !(len > 0.0) {
        return Err(SolverError::Config("zero shock normal".into()));
    }
    let mut n = [n[0] / len, n[1] / len];
    let prim = system.primitive(u_left)?;
    if prim.u * n[0] + prim.v * n[1] < 0.0 {
        n = [-n[0], -n[1]];
    }
    let (post, w) = normal_jump_state(system, u_left, n)?
        .ok_or_else(|| SolverError::NoJump("sonic normal incidence: only the continuous root".into()))?;
    let post_prim = system.primitive(&post)?;
    let wn = prim.u * n[0] + prim.v * n[1];
    let c_minus = prim.sound_speed(system.gamma);
    let c_plus = post_prim.sound_speed(system.gamma);
    let lax = wn > c_minus * (1.0 + ENTROPY_TOL) && w < c_plus * (1.0 - ENTROPY_TOL);
    let ds = post_prim.entropy(system.gamma) / prim.entropy(system.gamma) - 1.0;
    let entropy_ok = lax && ds > ENTROPY_TOL;
    if !entropy_ok {
        return Err(SolverError::NoJump("entropy condition violated".into()));
    }
    let fl = system.normal_flux(u_left, n);
    let residual = (fl - system.normal_flux(&post, n)).amax();
    if residual > 1e-11 * (1.0 + fl.amax()) {
        return Err(SolverError::Numerical {
            what: "oblique Rankine-Hugoniot residual".into(),
            residual,
        });
    }
    // the shock line is perpendicular to n
    let shock_angle = (-n[0]).atan2(n[1]);
    Ok(ObliqueJumpSolution {
        post_state: post,
        normal: n,
        shock_angle: wrap_line_angle(shock_angle),
        residual,
        entropy_ok,
    })
}

/// Maps a line direction into `(-pi/2, pi/2]`.
fn wrap_line_angle(a: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut a = a % pi;
    if a <= -0.5 * pi {
        a += pi;
    } else if a > 0.5 * pi {
        a -= pi;
    }
    a
}

/// Normal to a shock line at absolute angle `theta_s`.
pub fn normal_of_line(theta_s: f64) -> [f64; 2] {
    [theta_s.sin(), -theta_s.cos()]
}

fn jump_with_flow_angle(system: &Euler2d, u_left: &State<4>, theta: f64) -> Result<ObliqueJumpSolution> {
    let prim = system.primitive(u_left)?;
    let mach = prim.mach(system.gamma);
    if mach <= 1.0 {
        return Err(SolverError::NoJump("subsonic upstream flow".into()));
    }
    let theta_up = prim.flow_angle();
    let deflection = theta - theta_up;
    if deflection == 0.0 {
        return Err(SolverError::NoJump("zero deflection: only the continuous root".into()));
    }
    let sense = deflection.signum();
    let target = deflection.abs();
    let mu = (1.0 / mach).asin();
    // Deflection produced by a shock at angle beta to the upstream flow.
    let turn = |beta: f64| -> f64 {
        let n = normal_of_line(theta_up + sense * beta);
        match jump_with_normal(system, u_left, n) {
            Ok(s) => {
                let p = system.primitive_unchecked(&s.post_state);
                sense * (p.flow_angle() - theta_up)
            }
            Err(_) => 0.0,
        }
    };
    let half_pi = 0.5 * std::f64::consts::PI;
    let beta_max = golden_max(turn, mu, half_pi, 1e-12);
    if turn(beta_max) < target {
        return Err(SolverError::NoJump(format!(
            "deflection {:.4} deg exceeds the attached maximum {:.4} deg",
            target.to_degrees(),
            turn(beta_max).to_degrees()
        )));
    }
    let beta = illinois(
        |b| turn(b) - target,
        mu,
        beta_max,
        RootOptions {
            f_tol: 1e-15,
            x_tol: 1e-15,
            max_iter: 400,
        },
    )?;
    jump_with_normal(system, u_left, normal_of_line(theta_up + sense * beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{make_burgers2d, make_euler2d, make_nozzle_euler, AreaProfile, Primitive1d, Primitive2d};

    #[test]
    fn burgers_mirror() {
        let b = make_burgers2d();
        let s = jump_1d(&b, &State::<1>::new(1.5)).unwrap();
        assert_eq!(s.post_state[0], -1.5);
        assert_eq!(s.residual, 0.0);
        assert!(matches!(jump_1d(&b, &State::<1>::new(-0.5)), Err(SolverError::NoJump(_))));
    }

    #[test]
    fn searched_scalar_root() {
        // f = u^2/2 + u^3/10 is not even, so the bracket search is exercised
        let law = ScalarLaw {
            name: "cubic",
            f: |u| 0.5 * u * u + 0.1 * u * u * u,
            df: |u| u + 0.3 * u * u,
            ..make_burgers2d()
        };
        let s = jump_1d(&law, &State::<1>::new(0.8)).unwrap();
        let w = s.post_state[0];
        assert!(w < 0.0);
        assert!(((law.f)(w) - (law.f)(0.8)).abs() < 1e-14);
    }

    #[test]
    fn nozzle_jump_is_conservative_and_admissible() {
        let n = make_nozzle_euler(
            AreaProfile::Tanh {
                base: 1.398,
                amplitude: 0.347,
                slope: 0.8,
                shift: 4.0,
            },
            1.4,
            8.3144,
        );
        let u = n.conserved(&Primitive1d { rho: 0.3, u: 1.9, p: 0.15 }, 5.0);
        let s = jump_1d(&n, &u).unwrap();
        assert!(s.entropy_ok);
        assert!(s.residual <= 1e-12);
        let post = n.primitive(&s.post_state, 5.0).unwrap();
        assert!(post.mach(1.4) < 1.0);
        // the reverse jump (subsonic to supersonic) is an expansion shock
        assert!(jump_1d(&n, &s.post_state).is_err());
        let back = jump_1d_with(
            &n,
            &s.post_state,
            JumpOptions {
                check_entropy: false,
                allow_degenerate: false,
            },
        )
        .unwrap();
        assert!((back.post_state - u).amax() < 1e-12);
    }

    #[test]
    fn oblique_wedge_fifteen_degrees() {
        let e = make_euler2d(1.4);
        let u = e.conserved(&Primitive2d::new(1.0, 3.0, 0.0, 1.0 / 1.4));
        let s = jump_2d(&e, &u, JumpConstraint::FlowAngle(15f64.to_radians())).unwrap();
        let post = e.primitive(&s.post_state).unwrap();
        assert!((post.flow_angle().to_degrees() - 15.0).abs() < 1e-10);
        assert!((post.mach(1.4) - 2.255).abs() < 5e-4);
        assert!((s.shock_angle.to_degrees() - 32.24).abs() < 5e-3);
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn sonic_normal_incidence_has_no_jump() {
        let e = make_euler2d(1.4);
        let u = e.conserved(&Primitive2d::new(1.0, 1.0, 0.0, 1.0 / 1.4));
        assert!(matches!(
            jump_2d(&e, &u, JumpConstraint::Normal([1.0, 0.0])),
            Err(SolverError::NoJump(_))
        ));
    }

    #[test]
    fn given_normal_flips_orientation() {
        let e = make_euler2d(1.4);
        let u = e.conserved(&Primitive2d::new(1.0, 3.0, 0.0, 1.0 / 1.4));
        let a = jump_2d(&e, &u, JumpConstraint::Normal([0.5, -0.8])).unwrap();
        let b = jump_2d(&e, &u, JumpConstraint::Normal([-0.5, 0.8])).unwrap();
        assert_eq!(a.post_state, b.post_state);
        assert!(a.normal[0] > 0.0);
    }

    #[test]
    fn detached_deflection_is_rejected() {
        let e = make_euler2d(1.4);
        let u = e.conserved(&Primitive2d::new(1.0, 1.5, 0.0, 1.0 / 1.4));
        assert!(jump_2d(&e, &u, JumpConstraint::FlowAngle(20f64.to_radians())).is_err());
    }
}
