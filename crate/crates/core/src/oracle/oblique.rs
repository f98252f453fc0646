//! Closed-form oblique-shock relations.

use crate::error::{Result, SolverError};
use crate::roots::{bisect, golden_max, RootOptions};
use crate::systems::{Euler2d, Primitive2d, State};

#[derive(Debug, Clone, Copy)]
pub struct ObliqueRelation {
    /// Shock angle measured from the upstream velocity.
    pub beta: f64,
    pub mach_post: f64,
    pub pressure_ratio: f64,
    pub density_ratio: f64,
}

/// `tan(theta)` as a function of the shock angle.
fn tan_deflection(m: f64, beta: f64, gamma: f64) -> f64 {
    let ms = m * m * beta.sin().powi(2);
    2.0 / beta.tan() * (ms - 1.0) / (m * m * (gamma + (2.0 * beta).cos()) + 2.0)
}

/// Weak-branch shock angle and normal-shock ratios for deflection `delta`
/// (radians, non-negative) of a uniform stream at Mach `m`.
pub fn theta_beta_mach(m: f64, delta: f64, gamma: f64) -> Result<ObliqueRelation> {
    if !(m > 1.0) || delta < 0.0 {
        return Err(SolverError::Config(format!("need M > 1 and delta >= 0, got M={m}, delta={delta}")));
    }
    let mu = (1.0 / m).asin();
    let beta = if delta == 0.0 {
        mu
    } else {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let beta_max = golden_max(|b| tan_deflection(m, b, gamma), mu, half_pi, 1e-12);
        let target = delta.tan();
        if tan_deflection(m, beta_max, gamma) < target {
            return Err(SolverError::NoJump(format!(
                "deflection {:.4} deg exceeds detachment at M={m}",
                delta.to_degrees()
            )));
        }
        let opts = RootOptions {
            f_tol: 0.0,
            x_tol: 1e-15,
            max_iter: 200,
        };
        bisect(|b| tan_deflection(m, b, gamma) - target, mu, beta_max, opts)?
    };
    let mn1_sq = (m * beta.sin()).powi(2);
    let mn2_sq = (1.0 + 0.5 * (gamma - 1.0) * mn1_sq) / (gamma * mn1_sq - 0.5 * (gamma - 1.0));
    Ok(ObliqueRelation {
        beta,
        mach_post: mn2_sq.sqrt() / (beta - delta).sin(),
        pressure_ratio: 1.0 + 2.0 * gamma / (gamma + 1.0) * (mn1_sq - 1.0),
        density_ratio: (gamma + 1.0) * mn1_sq / ((gamma - 1.0) * mn1_sq + 2.0),
    })
}

/// Post-shock state for a uniform stream turned by `delta` radians
/// (positive turns counter-clockwise). Returns the absolute shock-line angle.
pub fn oblique_post_state(upstream: &Primitive2d, delta: f64, gamma: f64) -> Result<(f64, Primitive2d)> {
    let rel = theta_beta_mach(upstream.mach(gamma), delta.abs(), gamma)?;
    let sense = delta.signum();
    let sense = if sense == 0.0 { 1.0 } else { sense };
    let theta_up = upstream.flow_angle();
    let rho = upstream.rho * rel.density_ratio;
    let p = upstream.p * rel.pressure_ratio;
    let q = rel.mach_post * (gamma * p / rho).sqrt();
    let theta_post = theta_up + delta;
    let post = Primitive2d::new(rho, q * theta_post.cos(), q * theta_post.sin(), p);
    Ok((theta_up + sense * rel.beta, post))
}

/// Largest component of the normal-flux mismatch across a straight shock
/// line at angle `shock_angle`.
pub fn line_rh_residual(sys: &Euler2d, left: &State<4>, right: &State<4>, shock_angle: f64) -> f64 {
    let n = [shock_angle.sin(), -shock_angle.cos()];
    (sys.normal_flux(left, n) - sys.normal_flux(right, n)).amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::make_euler2d;

    #[test]
    fn wedge_fifteen_degrees() {
        let rel = theta_beta_mach(3.0, 15f64.to_radians(), 1.4).unwrap();
        assert!((rel.beta.to_degrees() - 32.24).abs() < 5e-3, "{}", rel.beta.to_degrees());
        assert!((rel.mach_post - 2.2549).abs() < 5e-4, "{}", rel.mach_post);
    }

    #[test]
    fn zero_deflection_is_mach_wave() {
        let rel = theta_beta_mach(3.0, 0.0, 1.4).unwrap();
        assert_eq!(rel.beta, (1.0f64 / 3.0).asin());
        assert!((rel.mach_post - 3.0).abs() < 1e-12);
        assert!((rel.pressure_ratio - 1.0).abs() < 1e-14);
    }

    #[test]
    fn detached_regime_refused() {
        assert!(matches!(theta_beta_mach(1.5, 30f64.to_radians(), 1.4), Err(SolverError::NoJump(_))));
    }

    #[test]
    fn post_states_satisfy_jump_conditions() {
        let g = 1.4;
        let sys = make_euler2d(g);
        let up = Primitive2d::new(1.0, 3.0, 0.0, 1.0 / g);
        for d in [15.0f64, -10.0, 5.0] {
            let (angle, post) = oblique_post_state(&up, d.to_radians(), g).unwrap();
            let r = line_rh_residual(&sys, &sys.conserved(&up), &sys.conserved(&post), angle);
            assert!(r < 1e-10, "{d}: {r}");
            assert!((post.flow_angle() - d.to_radians()).abs() < 1e-12);
            // turn the post state back
            let (angle2, back) = oblique_post_state(&post, -d.to_radians(), g).unwrap();
            let r = line_rh_residual(&sys, &sys.conserved(&post), &sys.conserved(&back), angle2);
            assert!(r < 1e-10, "{d}: {r}");
            assert!(back.flow_angle().abs() < 1e-12);
        }
    }
}
