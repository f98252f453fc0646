//! Steady hyperbolic conservation laws solved by directional sweeping, with
//! shocks fitted through the Rankine–Hugoniot conditions.
//!
//! Smooth branches are computed by marching the steady equations along a
//! sweep direction ([`propagate`], [`scalar2d`], [`euler2d`]); shocks and
//! seams between branches are placed by root-finding on jump and boundary
//! conditions ([`jump`], [`sweep1d`]). [`oracle`] holds independent reference
//! solutions used for verification.

pub mod error;
pub mod euler2d;
pub mod grid;
pub mod jump;
pub mod oracle;
pub mod propagate;
pub mod roots;
pub mod scalar2d;
pub mod sweep1d;
pub mod systems;

pub use error::{Result, SolverError};
