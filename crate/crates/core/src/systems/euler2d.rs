use super::{ConservationLaw, ConservationLaw2d, EigenDecomposition, Mat, State};
use crate::error::{Result, SolverError};

/// Steady 2D Euler equations with `U = (rho, rho u, rho v, E)`.
#[derive(Debug, Clone, Copy)]
pub struct Euler2d {
    pub gamma: f64,
}

pub fn make_euler2d(gamma: f64) -> Euler2d {
    assert!(gamma > 1.0, "gamma must exceed 1");
    Euler2d { gamma }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive2d {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
}

impl Primitive2d {
    pub fn new(rho: f64, u: f64, v: f64, p: f64) -> Self {
        Self { rho, u, v, p }
    }

    pub fn sound_speed(&self, gamma: f64) -> f64 {
        (gamma * self.p / self.rho).sqrt()
    }

    pub fn mach(&self, gamma: f64) -> f64 {
        self.u.hypot(self.v) / self.sound_speed(gamma)
    }

    /// Physical entropy `p / rho^gamma`.
    pub fn entropy(&self, gamma: f64) -> f64 {
        self.p / self.rho.powf(gamma)
    }

    /// Flow angle from the x axis.
    pub fn flow_angle(&self) -> f64 {
        self.v.atan2(self.u)
    }
}

impl Euler2d {
    #[inline]
    pub fn pressure(&self, u: &State<4>) -> f64 {
        (self.gamma - 1.0) * (u[3] - 0.5 * (u[1] * u[1] + u[2] * u[2]) / u[0])
    }

    pub fn primitive(&self, u: &State<4>) -> Result<Primitive2d> {
        let prim = self.primitive_unchecked(u);
        if !(prim.rho > 0.0 && prim.p > 0.0 && prim.u.is_finite() && prim.v.is_finite()) {
            return Err(SolverError::Physicality {
                density: prim.rho,
                pressure: prim.p,
            });
        }
        Ok(prim)
    }

    #[inline]
    pub fn primitive_unchecked(&self, u: &State<4>) -> Primitive2d {
        Primitive2d {
            rho: u[0],
            u: u[1] / u[0],
            v: u[2] / u[0],
            p: self.pressure(u),
        }
    }

    pub fn conserved(&self, prim: &Primitive2d) -> State<4> {
        let e = prim.p / (self.gamma - 1.0) + 0.5 * prim.rho * (prim.u * prim.u + prim.v * prim.v);
        State::<4>::new(prim.rho, prim.rho * prim.u, prim.rho * prim.v, e)
    }

    pub fn mach(&self, u: &State<4>) -> f64 {
        self.primitive_unchecked(u).mach(self.gamma)
    }

    /// Flux through a face with unit normal `n`.
    pub fn normal_flux(&self, u: &State<4>, n: [f64; 2]) -> State<4> {
        self.flux_x(u) * n[0] + self.flux_y(u) * n[1]
    }
}

impl ConservationLaw<4> for Euler2d {
    fn flux_x(&self, u: &State<4>) -> State<4> {
        let p = self.pressure(u);
        let vx = u[1] / u[0];
        State::<4>::new(u[1], u[1] * vx + p, u[2] * vx, vx * (u[3] + p))
    }

    fn jacobian_x(&self, u: &State<4>) -> Mat<4> {
        let g = self.gamma;
        let prim = self.primitive_unchecked(u);
        let (vx, vy) = (prim.u, prim.v);
        let q2 = vx * vx + vy * vy;
        let h = (u[3] + prim.p) / u[0];
        Mat::<4>::new(
            0.0,
            1.0,
            0.0,
            0.0,
            0.5 * (g - 1.0) * q2 - vx * vx,
            (3.0 - g) * vx,
            -(g - 1.0) * vy,
            g - 1.0,
            -vx * vy,
            vy,
            vx,
            0.0,
            vx * (0.5 * (g - 1.0) * q2 - h),
            h - (g - 1.0) * vx * vx,
            -(g - 1.0) * vx * vy,
            g * vx,
        )
    }

    fn eigen_x(&self, u: &State<4>) -> EigenDecomposition<4> {
        let prim = self.primitive_unchecked(u);
        let (vx, vy) = (prim.u, prim.v);
        let c = prim.sound_speed(self.gamma);
        let h = (u[3] + prim.p) / u[0];
        let q2 = vx * vx + vy * vy;
        let right = Mat::<4>::new(
            1.0,
            1.0,
            0.0,
            1.0,
            vx - c,
            vx,
            0.0,
            vx + c,
            vy,
            vy,
            1.0,
            vy,
            h - vx * c,
            0.5 * q2,
            vy,
            h + vx * c,
        );
        let b1 = (self.gamma - 1.0) / (c * c);
        let b2 = 0.5 * b1 * q2;
        let left = Mat::<4>::new(
            0.5 * (b2 + vx / c),
            0.5 * (-b1 * vx - 1.0 / c),
            -0.5 * b1 * vy,
            0.5 * b1,
            1.0 - b2,
            b1 * vx,
            b1 * vy,
            -b1,
            -vy,
            0.0,
            1.0,
            0.0,
            0.5 * (b2 - vx / c),
            0.5 * (-b1 * vx + 1.0 / c),
            -0.5 * b1 * vy,
            0.5 * b1,
        );
        EigenDecomposition {
            values: State::<4>::new(vx - c, vx, vx, vx + c),
            right,
            left,
        }
    }

    fn eigenvalues_x(&self, u: &State<4>) -> State<4> {
        let prim = self.primitive_unchecked(u);
        let c = prim.sound_speed(self.gamma);
        State::<4>::new(prim.u - c, prim.u, prim.u, prim.u + c)
    }

    fn validate(&self, u: &State<4>) -> Result<()> {
        self.primitive(u).map(|_| ())
    }
}

impl ConservationLaw2d<4> for Euler2d {
    fn flux_y(&self, u: &State<4>) -> State<4> {
        let p = self.pressure(u);
        let vy = u[2] / u[0];
        State::<4>::new(u[2], u[1] * vy, u[2] * vy + p, vy * (u[3] + p))
    }

    fn wave_speeds(&self, u: &State<4>) -> [f64; 2] {
        let prim = self.primitive_unchecked(u);
        let c = prim.sound_speed(self.gamma);
        [prim.u.abs() + c, prim.v.abs() + c]
    }

    fn jacobian_y(&self, u: &State<4>) -> Mat<4> {
        let g = self.gamma;
        let prim = self.primitive_unchecked(u);
        let (vx, vy) = (prim.u, prim.v);
        let q2 = vx * vx + vy * vy;
        let h = (u[3] + prim.p) / u[0];
        Mat::<4>::new(
            0.0,
            0.0,
            1.0,
            0.0,
            -vx * vy,
            vy,
            vx,
            0.0,
            0.5 * (g - 1.0) * q2 - vy * vy,
            -(g - 1.0) * vx,
            (3.0 - g) * vy,
            g - 1.0,
            vy * (0.5 * (g - 1.0) * q2 - h),
            -(g - 1.0) * vx * vy,
            h - (g - 1.0) * vy * vy,
            g * vy,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_boundary_flux() {
        let e = make_euler2d(1.4);
        let u = e.conserved(&Primitive2d::new(1.0, 2.9, 0.0, 1.0 / 1.4));
        let f = e.flux_x(&u);
        assert!((f[0] - 2.9).abs() < 1e-15);
        assert!((f[1] - (2.9 * 2.9 + 1.0 / 1.4)).abs() < 1e-14);
        assert_eq!(f[2], 0.0);
    }

    #[test]
    fn oblique_inflow_is_mach_three() {
        let e = make_euler2d(1.4);
        let u = e.conserved(&Primitive2d::new(1.0, 3.0, 0.0, 1.0 / 1.4));
        assert!((e.mach(&u) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn y_flux_without_cross_flow() {
        let e = make_euler2d(1.4);
        let u = e.conserved(&Primitive2d::new(1.3, 2.0, 0.0, 0.9));
        let g = e.flux_y(&u);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 0.0);
        assert!((g[2] - 0.9).abs() < 1e-14);
        assert_eq!(g[3], 0.0);
    }

    #[test]
    fn eigen_pair_inverts() {
        let e = make_euler2d(1.4);
        let u = e.conserved(&Primitive2d::new(0.8, 1.7, -0.4, 0.6));
        let d = e.eigen_x(&u);
        assert!((d.right * d.left - Mat::<4>::identity()).norm() < 1e-13);
    }
}
