use serde::{Deserialize, Serialize};

use super::{ConservationLaw, EigenDecomposition, Mat, State};
use crate::error::{Result, SolverError};

/// Cross-sectional area `A(x)` of a quasi-1D nozzle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AreaProfile {
    /// `base + amplitude * tanh(slope * x - shift)`
    Tanh {
        base: f64,
        amplitude: f64,
        slope: f64,
        shift: f64,
    },
    /// `throat_area + curvature * (x - throat)^2`
    Parabolic {
        throat_area: f64,
        curvature: f64,
        throat: f64,
    },
}

impl AreaProfile {
    pub fn area(&self, x: f64) -> f64 {
        match *self {
            AreaProfile::Tanh {
                base,
                amplitude,
                slope,
                shift,
            } => base + amplitude * (slope * x - shift).tanh(),
            AreaProfile::Parabolic {
                throat_area,
                curvature,
                throat,
            } => throat_area + curvature * (x - throat).powi(2),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            AreaProfile::Tanh {
                amplitude,
                slope,
                shift,
                ..
            } => {
                let t = (slope * x - shift).tanh();
                amplitude * slope * (1.0 - t * t)
            }
            AreaProfile::Parabolic {
                curvature, throat, ..
            } => 2.0 * curvature * (x - throat),
        }
    }
}

/// Density, velocity and pressure of a nozzle state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive1d {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

impl Primitive1d {
    pub fn sound_speed(&self, gamma: f64) -> f64 {
        (gamma * self.p / self.rho).sqrt()
    }

    pub fn mach(&self, gamma: f64) -> f64 {
        self.u / self.sound_speed(gamma)
    }
}

/// Quasi-1D Euler equations with conserved `U = (rho A, rho u A, E A)`.
#[derive(Debug, Clone, Copy)]
pub struct NozzleEuler {
    pub area: AreaProfile,
    pub gamma: f64,
    pub gas_constant: f64,
}

pub fn make_nozzle_euler(area: AreaProfile, gamma: f64, gas_constant: f64) -> NozzleEuler {
    NozzleEuler {
        area,
        gamma,
        gas_constant,
    }
}

impl NozzleEuler {
    /// `p A`, which depends on the conserved state only.
    #[inline]
    pub fn pressure_area(&self, u: &State<3>) -> f64 {
        (self.gamma - 1.0) * (u[2] - 0.5 * u[1] * u[1] / u[0])
    }

    /// Conserved to primitive at abscissa `x`; rejects non-physical states.
    pub fn primitive(&self, u: &State<3>, x: f64) -> Result<Primitive1d> {
        let a = self.area.area(x);
        let prim = Primitive1d {
            rho: u[0] / a,
            u: u[1] / u[0],
            p: self.pressure_area(u) / a,
        };
        if !(prim.rho > 0.0 && prim.p > 0.0 && prim.u.is_finite()) {
            return Err(SolverError::Physicality {
                density: prim.rho,
                pressure: prim.p,
            });
        }
        Ok(prim)
    }

    pub fn conserved(&self, prim: &Primitive1d, x: f64) -> State<3> {
        let a = self.area.area(x);
        let energy = prim.p / (self.gamma - 1.0) + 0.5 * prim.rho * prim.u * prim.u;
        State::<3>::new(prim.rho * a, prim.rho * prim.u * a, energy * a)
    }

    /// Temperature from `p = rho R T`.
    pub fn temperature(&self, prim: &Primitive1d) -> f64 {
        prim.p / (prim.rho * self.gas_constant)
    }

    fn velocity_sound_enthalpy(&self, u: &State<3>) -> (f64, f64, f64) {
        let vel = u[1] / u[0];
        let pa = self.pressure_area(u);
        let c = (self.gamma * pa / u[0]).sqrt();
        let h = (u[2] + pa) / u[0];
        (vel, c, h)
    }
}

impl ConservationLaw<3> for NozzleEuler {
    fn flux_x(&self, u: &State<3>) -> State<3> {
        let pa = self.pressure_area(u);
        let vel = u[1] / u[0];
        State::<3>::new(u[1], u[1] * vel + pa, vel * (u[2] + pa))
    }

    fn jacobian_x(&self, u: &State<3>) -> Mat<3> {
        let g = self.gamma;
        let (vel, _, h) = self.velocity_sound_enthalpy(u);
        Mat::<3>::new(
            0.0,
            1.0,
            0.0,
            0.5 * (g - 3.0) * vel * vel,
            (3.0 - g) * vel,
            g - 1.0,
            vel * (0.5 * (g - 1.0) * vel * vel - h),
            h - (g - 1.0) * vel * vel,
            g * vel,
        )
    }

    fn eigen_x(&self, u: &State<3>) -> EigenDecomposition<3> {
        let (vel, c, h) = self.velocity_sound_enthalpy(u);
        let right = Mat::<3>::new(
            1.0,
            1.0,
            1.0,
            vel - c,
            vel,
            vel + c,
            h - vel * c,
            0.5 * vel * vel,
            h + vel * c,
        );
        let b1 = (self.gamma - 1.0) / (c * c);
        let b2 = 0.5 * b1 * vel * vel;
        let left = Mat::<3>::new(
            0.5 * (b2 + vel / c),
            0.5 * (-b1 * vel - 1.0 / c),
            0.5 * b1,
            1.0 - b2,
            b1 * vel,
            -b1,
            0.5 * (b2 - vel / c),
            0.5 * (-b1 * vel + 1.0 / c),
            0.5 * b1,
        );
        EigenDecomposition {
            values: State::<3>::new(vel - c, vel, vel + c),
            right,
            left,
        }
    }

    fn eigenvalues_x(&self, u: &State<3>) -> State<3> {
        let (vel, c, _) = self.velocity_sound_enthalpy(u);
        State::<3>::new(vel - c, vel, vel + c)
    }

    fn source(&self, u: &State<3>, x: f64) -> State<3> {
        let ratio = self.area.derivative(x) / self.area.area(x);
        State::<3>::new(0.0, self.pressure_area(u) * ratio, 0.0)
    }

    fn source_jacobian(&self, u: &State<3>, x: f64) -> Mat<3> {
        let ratio = self.area.derivative(x) / self.area.area(x);
        let g1 = self.gamma - 1.0;
        let vel = u[1] / u[0];
        let mut m = Mat::<3>::zeros();
        m[(1, 0)] = g1 * 0.5 * vel * vel * ratio;
        m[(1, 1)] = -g1 * vel * ratio;
        m[(1, 2)] = g1 * ratio;
        m
    }

    fn validate(&self, u: &State<3>) -> Result<()> {
        let pa = self.pressure_area(u);
        if !(u[0] > 0.0 && pa > 0.0 && u[1].is_finite()) {
            return Err(SolverError::Physicality {
                density: u[0],
                pressure: pa,
            });
        }
        Ok(())
    }
}
