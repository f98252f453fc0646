//! Reference solutions computed independently of the sweeping solvers.

mod cache;
mod characteristics;
mod march;
mod nozzle;
mod oblique;

pub use characteristics::{characteristics_scalar, contour_flux, gauss_legendre, CharacteristicSolution, Curve, CurveKind};
pub use nozzle::{
    exact_nozzle, exact_nozzle_with_shock, mach_from_area_ratio, normal_shock, ExactNozzleSolution, FlowInvariants,
};
pub use march::{reference_time_march_euler, reference_time_march_scalar, MarchOptions, MarchResult};
pub use oblique::{line_rh_residual, oblique_post_state, theta_beta_mach, ObliqueRelation};
pub use cache::{cache_dir, cached_reference_euler, cached_reference_euler_in, CacheHeader, CACHE_ENV};
