use super::{ConservationLaw, ConservationLaw2d, EigenDecomposition, Mat, State};

/// A scalar law `f(u)_x + g(u)_y = a(u, x)` described by plain function pointers.
#[derive(Clone, Copy, Debug)]
pub struct ScalarLaw {
    pub name: &'static str,
    pub f: fn(f64) -> f64,
    pub df: fn(f64) -> f64,
    pub g: fn(f64) -> f64,
    pub dg: fn(f64) -> f64,
    pub source: fn(f64, f64) -> f64,
    pub dsource: fn(f64, f64) -> f64,
}

fn zero2(_: f64, _: f64) -> f64 {
    0.0
}

/// `(u^2/2)_x + u_y = 0`.
pub fn make_burgers2d() -> ScalarLaw {
    ScalarLaw {
        name: "burgers2d",
        f: |u| 0.5 * u * u,
        df: |u| u,
        g: |u| u,
        dg: |_| 1.0,
        source: zero2,
        dsource: zero2,
    }
}

impl ScalarLaw {
    /// Characteristic slope `dx/dy = f'(u) / g'(u)`.
    pub fn char_slope(&self, u: f64) -> f64 {
        (self.df)(u) / (self.dg)(u)
    }
}

impl ConservationLaw<1> for ScalarLaw {
    fn flux_x(&self, u: &State<1>) -> State<1> {
        State::<1>::new((self.f)(u[0]))
    }

    fn jacobian_x(&self, u: &State<1>) -> Mat<1> {
        Mat::<1>::new((self.df)(u[0]))
    }

    fn eigen_x(&self, u: &State<1>) -> EigenDecomposition<1> {
        EigenDecomposition {
            values: State::<1>::new((self.df)(u[0])),
            right: Mat::<1>::identity(),
            left: Mat::<1>::identity(),
        }
    }

    fn source(&self, u: &State<1>, x: f64) -> State<1> {
        State::<1>::new((self.source)(u[0], x))
    }

    fn source_jacobian(&self, u: &State<1>, x: f64) -> Mat<1> {
        Mat::<1>::new((self.dsource)(u[0], x))
    }
}

impl ConservationLaw2d<1> for ScalarLaw {
    fn flux_y(&self, u: &State<1>) -> State<1> {
        State::<1>::new((self.g)(u[0]))
    }

    fn jacobian_y(&self, u: &State<1>) -> Mat<1> {
        Mat::<1>::new((self.dg)(u[0]))
    }

    fn wave_speeds(&self, u: &State<1>) -> [f64; 2] {
        [(self.df)(u[0]).abs(), (self.dg)(u[0]).abs()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burgers_fluxes() {
        let b = make_burgers2d();
        assert_eq!(b.flux_x(&State::<1>::new(1.5))[0], 1.125);
        assert_eq!(b.flux_x(&State::<1>::new(-0.5))[0], 0.125);
        assert_eq!(b.flux_y(&State::<1>::new(-0.5))[0], -0.5);
        assert_eq!(b.jacobian_x(&State::<1>::new(0.0))[(0, 0)], 0.0);
        assert_eq!(b.source(&State::<1>::new(3.0), 0.2)[0], 0.0);
    }
}
