//! Conservation-law systems `div F(U) = a(U, x)` and the concrete problem
//! instances the solvers are exercised on.

mod euler2d;
mod nozzle;
mod problem;
mod scalar;

pub use euler2d::{make_euler2d, Euler2d, Primitive2d};
pub use nozzle::{make_nozzle_euler, AreaProfile, NozzleEuler, Primitive1d};
pub use problem::{
    registry, BoundaryCondition, Domain, Profile, ProblemInstance, ProblemKind, Side,
    StagnationInflow,
};
pub use scalar::{make_burgers2d, ScalarLaw};

use nalgebra::{SMatrix, SVector};

use crate::error::Result;

/// Conserved variables at one point.
pub type State<const M: usize> = SVector<f64, M>;
/// Square matrix acting on [`State`].
pub type Mat<const M: usize> = SMatrix<f64, M, M>;

/// Ratio of specific heats used throughout unless a problem overrides it.
pub const DEFAULT_GAMMA: f64 = 1.4;
/// Gas constant used by the nozzle problems.
pub const DEFAULT_GAS_CONSTANT: f64 = 8.3144;

/// `P^{-1} (grad f) P = diag(values)`, eigenvalues sorted ascending.
#[derive(Debug, Clone, Copy)]
pub struct EigenDecomposition<const M: usize> {
    pub values: State<M>,
    /// Right eigenvectors as columns (`P`).
    pub right: Mat<M>,
    /// Left eigenvectors as rows (`P^{-1}`).
    pub left: Mat<M>,
}

impl<const M: usize> EigenDecomposition<M> {
    /// `P diag(values) P^{-1}`.
    pub fn reconstruct(&self) -> Mat<M> {
        self.right * Mat::<M>::from_diagonal(&self.values) * self.left
    }
}

/// A one-dimensional (or x-directional) conservation law `f(U)_x = a(U, x)`.
///
/// Implementations are pure; hot loops call `flux_x` and friends on states
/// that were validated at construction time.
pub trait ConservationLaw<const M: usize>: Send + Sync {
    fn flux_x(&self, u: &State<M>) -> State<M>;

    fn jacobian_x(&self, u: &State<M>) -> Mat<M>;

    fn eigen_x(&self, u: &State<M>) -> EigenDecomposition<M>;

    fn eigenvalues_x(&self, u: &State<M>) -> State<M> {
        self.eigen_x(u).values
    }

    fn source(&self, _u: &State<M>, _x: f64) -> State<M> {
        State::<M>::zeros()
    }

    /// Derivative of the source with respect to the conserved state.
    fn source_jacobian(&self, _u: &State<M>, _x: f64) -> Mat<M> {
        Mat::<M>::zeros()
    }

    /// Rejects non-physical states.
    fn validate(&self, _u: &State<M>) -> Result<()> {
        Ok(())
    }
}

/// A two-dimensional law `f(U)_x + g(U)_y = 0`.
pub trait ConservationLaw2d<const M: usize>: ConservationLaw<M> {
    fn flux_y(&self, u: &State<M>) -> State<M>;

    fn jacobian_y(&self, u: &State<M>) -> Mat<M>;

    /// Spectral radii of the x and y flux Jacobians.
    fn wave_speeds(&self, u: &State<M>) -> [f64; 2];
}

/// Central-difference Jacobian of `flux_x`, used by tests and diagnostics.
pub fn finite_difference_jacobian<const M: usize, S: ConservationLaw<M> + ?Sized>(
    system: &S,
    u: &State<M>,
    rel_step: f64,
) -> Mat<M> {
    let mut jac = Mat::<M>::zeros();
    for k in 0..M {
        let h = rel_step * u[k].abs().max(1.0);
        let mut up = *u;
        let mut dn = *u;
        up[k] += h;
        dn[k] -= h;
        let col = (system.flux_x(&up) - system.flux_x(&dn)) / (2.0 * h);
        jac.set_column(k, &col);
    }
    jac
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot vanishes relative to the matrix scale.
pub fn solve_linear<const M: usize>(a: &Mat<M>, b: &State<M>) -> Option<State<M>> {
    let mut m = *a;
    let mut x = *b;
    let scale = m.amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    for col in 0..M {
        let mut piv = col;
        for r in col + 1..M {
            if m[(r, col)].abs() > m[(piv, col)].abs() {
                piv = r;
            }
        }
        if m[(piv, col)].abs() <= 1e-15 * scale {
            return None;
        }
        if piv != col {
            m.swap_rows(piv, col);
            x.swap_rows(piv, col);
        }
        let d = m[(col, col)];
        for r in col + 1..M {
            let f = m[(r, col)] / d;
            if f != 0.0 {
                for c in col..M {
                    m[(r, c)] -= f * m[(col, c)];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for col in (0..M).rev() {
        let mut s = x[col];
        for c in col + 1..M {
            s -= m[(col, c)] * x[c];
        }
        x[col] = s / m[(col, col)];
    }
    Some(x)
}
