//! Exact quasi-1D nozzle flow from the isentropic area–Mach relation and the
//! normal-shock relations. Nothing here calls the sweeping solvers.

use serde::Serialize;

use crate::error::{Result, SolverError};
use crate::roots::{bisect, RootOptions};
use crate::systems::{AreaProfile, BoundaryCondition, NozzleEuler, Primitive1d, ProblemInstance, ProblemKind, Side, State};

/// Quantities conserved along a smooth isentropic branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowInvariants {
    /// `rho u A`
    pub mass_flux: f64,
    /// `(E + p) / rho`
    pub total_enthalpy: f64,
    /// `p / rho^gamma`
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    x_hi: f64,
    supersonic: bool,
    a_star: f64,
    p0: f64,
    rho0: f64,
}

#[derive(Debug, Clone)]
pub struct ExactNozzleSolution {
    pub gamma: f64,
    pub area: AreaProfile,
    /// Stagnation sound speed squared (shared by all branches).
    pub c0_sq: f64,
    pub shock_x: f64,
    /// Sonic throat, for transonic solutions.
    pub sonic_x: Option<f64>,
    pub invariants_left: FlowInvariants,
    pub invariants_right: FlowInvariants,
    /// Inlet Mach number.
    pub inlet_mach: f64,
    segments: Vec<Segment>,
}

fn theta(gamma: f64, m: f64) -> f64 {
    1.0 + 0.5 * (gamma - 1.0) * m * m
}

/// `ln(A / A*)` as a function of Mach number, and its derivative.
fn log_area_ratio(gamma: f64, m: f64) -> (f64, f64) {
    let e = (gamma + 1.0) / (2.0 * (gamma - 1.0));
    let t = theta(gamma, m);
    let val = -m.ln() + e * (2.0 * t / (gamma + 1.0)).ln();
    let der = (m * m - 1.0) / (m * t);
    (val, der)
}

/// Mach number with `A/A* = ratio` on the requested branch.
pub fn mach_from_area_ratio(gamma: f64, ratio: f64, supersonic: bool) -> Result<f64> {
    if ratio < 1.0 {
        if ratio > 1.0 - 1e-14 {
            return Ok(1.0);
        }
        return Err(SolverError::StructureMismatch(format!("area ratio {ratio} below 1")));
    }
    if ratio == 1.0 {
        return Ok(1.0);
    }
    let target = ratio.ln();
    let f = |m: f64| log_area_ratio(gamma, m).0 - target;
    let (lo, hi) = if supersonic {
        let mut hi = 2.0;
        while f(hi) < 0.0 {
            hi *= 2.0;
        }
        (1.0, hi)
    } else {
        (f64::MIN_POSITIVE.sqrt(), 1.0)
    };
    let mut m = bisect(
        f,
        lo,
        hi,
        RootOptions {
            f_tol: 0.0,
            x_tol: 1e-10,
            max_iter: 400,
        },
    )?;
    for _ in 0..4 {
        let (v, d) = log_area_ratio(gamma, m);
        if d == 0.0 {
            break;
        }
        let next = m - (v - target) / d;
        if !(next > lo && next < hi) {
            break;
        }
        m = next;
    }
    Ok(m)
}

/// Post-shock Mach number and stagnation-pressure ratio `p02 / p01`.
pub fn normal_shock(gamma: f64, m1: f64) -> (f64, f64) {
    let g = gamma;
    let m2 = ((1.0 + 0.5 * (g - 1.0) * m1 * m1) / (g * m1 * m1 - 0.5 * (g - 1.0))).sqrt();
    let a = (0.5 * (g + 1.0) * m1 * m1 / theta(g, m1)).powf(g / (g - 1.0));
    let b = (2.0 * g / (g + 1.0) * m1 * m1 - (g - 1.0) / (g + 1.0)).powf(-1.0 / (g - 1.0));
    (m2, a * b)
}

impl ExactNozzleSolution {
    fn segment(&self, x: f64) -> &Segment {
        self.segments
            .iter()
            .find(|s| x <= s.x_hi)
            .unwrap_or_else(|| self.segments.last().expect("at least one segment"))
    }

    pub fn mach(&self, x: f64) -> f64 {
        let s = self.segment(x);
        if Some(x) == self.sonic_x {
            return 1.0;
        }
        mach_from_area_ratio(self.gamma, self.area.area(x) / s.a_star, s.supersonic).unwrap_or(f64::NAN)
    }

    /// Primitive state at `x`; at the shock itself the upstream value is returned.
    pub fn primitive(&self, x: f64) -> Primitive1d {
        let s = *self.segment(x);
        let m = self.mach(x);
        let g = self.gamma;
        let t = theta(g, m);
        let rho = s.rho0 * t.powf(-1.0 / (g - 1.0));
        let p = s.p0 * t.powf(-g / (g - 1.0));
        let c = (self.c0_sq / t).sqrt();
        Primitive1d { rho, u: m * c, p }
    }

    pub fn conserved(&self, system: &NozzleEuler, x: f64) -> State<3> {
        system.conserved(&self.primitive(x), x)
    }

    /// Invariants recomputed from the state at `x`.
    pub fn invariants_at(&self, x: f64) -> FlowInvariants {
        let p = self.primitive(x);
        let g = self.gamma;
        FlowInvariants {
            mass_flux: p.rho * p.u * self.area.area(x),
            total_enthalpy: g / (g - 1.0) * p.p / p.rho + 0.5 * p.u * p.u,
            entropy: p.p / p.rho.powf(g),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn with_shock(
        gamma: f64,
        area: AreaProfile,
        c0_sq: f64,
        upstream: Vec<Segment>,
        x_start: f64,
        x_end: f64,
        shock_x: f64,
        sonic_x: Option<f64>,
        inlet_mach: f64,
    ) -> Result<Self> {
        let mut segments = upstream;
        let last = segments.last_mut().expect("upstream branch");
        if !last.supersonic {
            return Err(SolverError::StructureMismatch("shock placed in subsonic flow".into()));
        }
        last.x_hi = shock_x;
        let a_star_1 = last.a_star;
        let (p01, rho01) = (last.p0, last.rho0);
        let m1 = mach_from_area_ratio(gamma, area.area(shock_x) / a_star_1, true)?;
        let (_, ratio) = normal_shock(gamma, m1);
        segments.push(Segment {
            x_hi: x_end,
            supersonic: false,
            a_star: a_star_1 / ratio,
            p0: p01 * ratio,
            rho0: rho01 * ratio,
        });
        let mut sol = Self {
            gamma,
            area,
            c0_sq,
            shock_x,
            sonic_x,
            invariants_left: FlowInvariants {
                mass_flux: 0.0,
                total_enthalpy: 0.0,
                entropy: 0.0,
            },
            invariants_right: FlowInvariants {
                mass_flux: 0.0,
                total_enthalpy: 0.0,
                entropy: 0.0,
            },
            inlet_mach,
            segments,
        };
        sol.invariants_left = sol.invariants_at(x_start);
        sol.invariants_right = sol.invariants_at(x_end);
        Ok(sol)
    }
}

struct Setup {
    gamma: f64,
    area: AreaProfile,
    c0_sq: f64,
    upstream: Vec<Segment>,
    x_start: f64,
    x_end: f64,
    sonic_x: Option<f64>,
    inlet_mach: f64,
    shock_range: (f64, f64),
}

fn setup(problem: &ProblemInstance) -> Result<Setup> {
    let gamma = problem.gamma();
    let area = problem.area_profile()?;
    let (x_start, x_end) = problem.interval()?;
    match (problem.kind, problem.boundary(Side::Left)) {
        (ProblemKind::NozzleShock, BoundaryCondition::State(_)) => {
            let rho = problem.component_at(Side::Left, "rho", 0.0)?;
            let u = problem.component_at(Side::Left, "u", 0.0)?;
            let p = problem.component_at(Side::Left, "p", 0.0)?;
            let c_sq = gamma * p / rho;
            let m = u / c_sq.sqrt();
            if m <= 1.0 {
                return Err(SolverError::StructureMismatch("inlet is not supersonic".into()));
            }
            let (ratio, _) = log_area_ratio(gamma, m);
            let t = theta(gamma, m);
            Ok(Setup {
                gamma,
                area,
                c0_sq: c_sq * t,
                upstream: vec![Segment {
                    x_hi: x_end,
                    supersonic: true,
                    a_star: area.area(x_start) / ratio.exp(),
                    p0: p * t.powf(gamma / (gamma - 1.0)),
                    rho0: rho * t.powf(1.0 / (gamma - 1.0)),
                }],
                x_start,
                x_end,
                sonic_x: None,
                inlet_mach: m,
                shock_range: (x_start, x_end),
            })
        }
        (ProblemKind::NozzleSonic, BoundaryCondition::Stagnation(st)) => {
            let (a_star, throat) = match area {
                AreaProfile::Parabolic {
                    throat_area,
                    throat,
                    ..
                } => (throat_area, throat),
                _ => return Err(SolverError::Config("transonic oracle needs a parabolic throat".into())),
            };
            let r = problem.gas_constant();
            let rho0 = st.p0 / (r * st.t0);
            let inlet_mach = mach_from_area_ratio(gamma, area.area(x_start) / a_star, false)?;
            let seg = |x_hi, supersonic| Segment {
                x_hi,
                supersonic,
                a_star,
                p0: st.p0,
                rho0,
            };
            Ok(Setup {
                gamma,
                area,
                c0_sq: gamma * r * st.t0,
                upstream: vec![seg(throat, false), seg(x_end, true)],
                x_start,
                x_end,
                sonic_x: Some(throat),
                inlet_mach,
                shock_range: (throat, x_end),
            })
        }
        _ => Err(SolverError::Config(format!("{} is not a nozzle problem", problem.name))),
    }
}

/// Exact solution with the shock where the outlet condition demands it.
pub fn exact_nozzle(problem: &ProblemInstance) -> Result<ExactNozzleSolution> {
    let s = setup(problem)?;
    let (component, value) = match problem.boundary(Side::Right) {
        BoundaryCondition::Partial { component, value } => (component.clone(), *value),
        _ => return Err(SolverError::Config("outlet needs a partial condition".into())),
    };
    let build = |xs: f64| {
        ExactNozzleSolution::with_shock(
            s.gamma,
            s.area,
            s.c0_sq,
            s.upstream.clone(),
            s.x_start,
            s.x_end,
            xs,
            s.sonic_x,
            s.inlet_mach,
        )
    };
    let outlet = |xs: f64| -> f64 {
        match build(xs) {
            Ok(sol) => {
                let p = sol.primitive(s.x_end);
                let v = match component.as_str() {
                    "rho" => p.rho,
                    "p" => p.p,
                    "u" => p.u,
                    _ => f64::NAN,
                };
                v - value
            }
            Err(_) => f64::NAN,
        }
    };
    let span = s.shock_range.1 - s.shock_range.0;
    let (lo, hi) = (s.shock_range.0 + 1e-9 * span, s.shock_range.1 - 1e-9 * span);
    let (flo, fhi) = (outlet(lo), outlet(hi));
    if !(flo.is_finite() && fhi.is_finite()) || (flo < 0.0) == (fhi < 0.0) {
        return Err(SolverError::StructureMismatch(format!(
            "outlet {component} = {value} is not reachable by a single shock"
        )));
    }
    let xs = bisect(
        outlet,
        lo,
        hi,
        RootOptions {
            f_tol: 0.0,
            x_tol: 2.0 * f64::EPSILON,
            max_iter: 2000,
        },
    )?;
    build(xs)
}

/// Exact solution with the shock forced to `shock_x`; used to manufacture
/// outlet data with a known answer.
pub fn exact_nozzle_with_shock(problem: &ProblemInstance, shock_x: f64) -> Result<ExactNozzleSolution> {
    let s = setup(problem)?;
    if !(shock_x > s.shock_range.0 && shock_x < s.shock_range.1) {
        return Err(SolverError::StructureMismatch(format!("shock {shock_x} outside the supersonic region")));
    }
    ExactNozzleSolution::with_shock(
        s.gamma,
        s.area,
        s.c0_sq,
        s.upstream,
        s.x_start,
        s.x_end,
        shock_x,
        s.sonic_x,
        s.inlet_mach,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{ConservationLaw, ProblemInstance};

    #[test]
    fn area_mach_round_trip() {
        for &(m, sup) in &[(0.2, false), (0.9, false), (1.3, true), (3.5, true)] {
            let (lr, _) = log_area_ratio(1.4, m);
            let back = mach_from_area_ratio(1.4, lr.exp(), sup).unwrap();
            assert!((back - m).abs() < 1e-13 * m, "{m} {back}");
        }
    }

    #[test]
    fn normal_shock_textbook_values() {
        // M1 = 2: M2 = 0.57735, p02/p01 = 0.72087
        let (m2, r) = normal_shock(1.4, 2.0);
        assert!((m2 - 0.577_350_269).abs() < 1e-8);
        assert!((r - 0.720_873_861).abs() < 1e-8);
    }

    #[test]
    fn shock_nozzle_structure() {
        let p = ProblemInstance::named("nozzle-shock").unwrap();
        let sol = exact_nozzle(&p).unwrap();
        assert!((sol.shock_x - 5.0).abs() < 0.5, "{}", sol.shock_x);
        assert!((sol.primitive(10.0).rho - 0.7519).abs() < 1e-13);
        let inlet = sol.primitive(0.0);
        assert!((inlet.rho - 0.502).abs() < 1e-13);
        assert!((inlet.u - 1.299).abs() < 1e-13);
        assert!((inlet.p - 0.3809).abs() < 1e-13);
        for k in 0..=40 {
            let x = 0.25 * k as f64;
            let inv = sol.invariants_at(x);
            let reference = if x < sol.shock_x {
                sol.invariants_left
            } else {
                sol.invariants_right
            };
            for (a, b) in [
                (inv.mass_flux, reference.mass_flux),
                (inv.total_enthalpy, reference.total_enthalpy),
                (inv.entropy, reference.entropy),
            ] {
                assert!((a - b).abs() <= 1e-13 * b.abs(), "x={x}: {a} vs {b}");
            }
        }
        // Rankine-Hugoniot across the exact shock
        let sys = p.nozzle_system().unwrap();
        let eps = 1e-12;
        let ul = sol.conserved(&sys, sol.shock_x);
        let ur = sys.conserved(&sol.primitive(sol.shock_x + eps), sol.shock_x);
        let diff = (sys.flux_x(&ul) - sys.flux_x(&ur)).amax();
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn transonic_nozzle_structure() {
        let p = ProblemInstance::named("nozzle-sonic").unwrap();
        let sol = exact_nozzle(&p).unwrap();
        assert!(sol.shock_x > 1.5 && sol.shock_x < 3.0);
        assert_eq!(sol.mach(1.5), 1.0);
        assert!(sol.mach(1.4) < 1.0 && sol.mach(1.6) > 1.0);
        assert!((sol.primitive(3.0).p - 0.6784).abs() < 1e-13);
        assert!((sol.inlet_mach - 0.097_820_603_494).abs() < 1e-10);
    }
}
