//! Method-of-characteristics solutions of `f(u)_x + g(u)_y = 0` for the two
//! scalar problems, with Burgers-type characteristics `dx/dy = u`.

use crate::error::{Result, SolverError};
use crate::systems::{ProblemInstance, ProblemKind, Profile, ScalarLaw, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Shock,
    /// Continuous across, with a jump in the derivative.
    Kink,
}

/// Straight piece of a discontinuity or kink curve.
#[derive(Debug, Clone, Copy)]
pub struct Curve {
    pub kind: CurveKind,
    pub from: (f64, f64),
    pub to: (f64, f64),
}

#[derive(Debug, Clone, Copy)]
enum Layout {
    /// Compressive linear bottom data focusing at one point, then a shock.
    Focusing {
        c0: f64,
        c1: f64,
        left: f64,
        right: f64,
        x_right: f64,
        focus: (f64, f64),
        shock_slope: f64,
    },
    /// Centred fan from a bottom step.
    Fan { x_star: f64, left: f64, right: f64 },
}

#[derive(Debug, Clone)]
pub struct CharacteristicSolution {
    layout: Layout,
    /// Discontinuity and kink curves, clipped to the domain.
    pub curves: Vec<Curve>,
    /// Where the bottom characteristics meet, when they do.
    pub focal_point: Option<(f64, f64)>,
}

impl CharacteristicSolution {
    /// Value at `(x, y)`; points on a shock take the left state.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self.layout {
            Layout::Focusing {
                c0,
                c1,
                left,
                right,
                x_right,
                focus,
                shock_slope,
            } => {
                if y >= focus.1 {
                    if x <= focus.0 + shock_slope * (y - focus.1) {
                        left
                    } else {
                        right
                    }
                } else if x <= left * y {
                    left
                } else if x >= x_right + right * y {
                    right
                } else {
                    (c0 + c1 * x) / (1.0 + c1 * y)
                }
            }
            Layout::Fan { x_star, left, right } => {
                let s = x - x_star;
                if s <= left * y {
                    left
                } else if s >= right * y {
                    right
                } else {
                    s / y
                }
            }
        }
    }

    /// `x` of the shock at height `y`, above the focal point.
    pub fn shock_x(&self, y: f64) -> Option<f64> {
        match self.layout {
            Layout::Focusing { focus, shock_slope, .. } if y >= focus.1 => Some(focus.0 + shock_slope * (y - focus.1)),
            _ => None,
        }
    }
}

fn constant(problem: &ProblemInstance, side: Side) -> Result<f64> {
    match problem.boundary(side).component("u") {
        Some(Profile::Constant(c)) => Ok(c),
        _ => Err(SolverError::Config(format!("{} data must be a constant u", side.name()))),
    }
}

pub fn characteristics_scalar(problem: &ProblemInstance, law: &ScalarLaw) -> Result<CharacteristicSolution> {
    let (x0, x1, y0, y1) = problem.rectangle()?;
    if y0 != 0.0 {
        return Err(SolverError::Config("bottom side must be y = 0".into()));
    }
    match problem.kind {
        ProblemKind::InteriorShock => {
            let left = constant(problem, Side::Left)?;
            let right = constant(problem, Side::Right)?;
            let (c0, c1) = match problem.boundary(Side::Bottom).component("u") {
                Some(Profile::Linear { c0, c1 }) => (c0 + c1 * x0, c1),
                _ => return Err(SolverError::Config("bottom data must be linear".into())),
            };
            // shift so the left corner is x = 0
            let width = x1 - x0;
            if c1 >= 0.0 || (c0 - left).abs() > 1e-14 || (c0 + c1 * width - right).abs() > 1e-14 {
                return Err(SolverError::StructureMismatch("bottom data must join the side data compressively".into()));
            }
            let focus = (-c0 / c1, -1.0 / c1);
            if !(focus.1 > 0.0 && focus.1 < y1 - y0) {
                return Err(SolverError::StructureMismatch("focal point outside the domain".into()));
            }
            let shock_slope = ((law.f)(left) - (law.f)(right)) / ((law.g)(left) - (law.g)(right));
            let top = (focus.0 + shock_slope * (y1 - focus.1)).clamp(0.0, width);
            let y_top = if shock_slope != 0.0 {
                focus.1 + (top - focus.0) / shock_slope
            } else {
                y1
            };
            let sol = CharacteristicSolution {
                layout: Layout::Focusing {
                    c0,
                    c1,
                    left,
                    right,
                    x_right: width,
                    focus,
                    shock_slope,
                },
                curves: vec![
                    Curve {
                        kind: CurveKind::Kink,
                        from: (0.0, 0.0),
                        to: focus,
                    },
                    Curve {
                        kind: CurveKind::Kink,
                        from: (width, 0.0),
                        to: focus,
                    },
                    Curve {
                        kind: CurveKind::Shock,
                        from: focus,
                        to: (top, y_top),
                    },
                ],
                focal_point: Some(focus),
            };
            if x0 != 0.0 {
                return Err(SolverError::Config("left side must be x = 0".into()));
            }
            Ok(sol)
        }
        ProblemKind::Rarefaction => {
            let (x_star, left, right) = match problem.boundary(Side::Bottom).component("u") {
                Some(Profile::Step { at, below, above }) => (at, below, above),
                _ => return Err(SolverError::Config("bottom data must be a step".into())),
            };
            if left >= right {
                return Err(SolverError::StructureMismatch("step is compressive, not a fan".into()));
            }
            let h = y1 - y0;
            let clip = |slope: f64| {
                let xe = x_star + slope * h;
                if xe < x0 {
                    (x0, (x0 - x_star) / slope)
                } else if xe > x1 {
                    (x1, (x1 - x_star) / slope)
                } else {
                    (xe, h)
                }
            };
            Ok(CharacteristicSolution {
                layout: Layout::Fan { x_star, left, right },
                curves: vec![
                    Curve {
                        kind: CurveKind::Kink,
                        from: (x_star, 0.0),
                        to: clip(left),
                    },
                    Curve {
                        kind: CurveKind::Kink,
                        from: (x_star, 0.0),
                        to: clip(right),
                    },
                ],
                focal_point: None,
            })
        }
        _ => Err(SolverError::Config(format!("{} is not a scalar problem", problem.name))),
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn segment_intersection(p: (f64, f64), q: (f64, f64), c: &Curve) -> Option<f64> {
    let r = (q.0 - p.0, q.1 - p.1);
    let s = (c.to.0 - c.from.0, c.to.1 - c.from.1);
    let den = r.0 * s.1 - r.1 * s.0;
    if den == 0.0 {
        return None;
    }
    let w = (c.from.0 - p.0, c.from.1 - p.1);
    let t = (w.0 * s.1 - w.1 * s.0) / den;
    let u = (w.0 * r.1 - w.1 * r.0) / den;
    (t > 0.0 && t < 1.0 && (-1e-14..=1.0 + 1e-14).contains(&u)).then_some(t)
}

/// `closed polygon integral of f(u) dy - g(u) dx`, which vanishes for weak
/// solutions. Edges are split where they cross a solution curve.
pub fn contour_flux(sol: &CharacteristicSolution, law: &ScalarLaw, polygon: &[(f64, f64)]) -> f64 {
    let (gx, gw) = gauss_legendre(20);
    let mut total = 0.0;
    for k in 0..polygon.len() {
        let p = polygon[k];
        let q = polygon[(k + 1) % polygon.len()];
        let mut cuts = vec![0.0, 1.0];
        cuts.extend(sol.curves.iter().filter_map(|c| segment_intersection(p, q, c)));
        let pieces = 16;
        cuts.extend((1..pieces).map(|m| m as f64 / pieces as f64));
        cuts.sort_by(f64::total_cmp);
        let (dx, dy) = (q.0 - p.0, q.1 - p.1);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut acc = 0.0;
            for (xi, wi) in gx.iter().zip(&gw) {
                let t = mid + half * xi;
                let u = sol.eval(p.0 + t * dx, p.1 + t * dy);
                acc += wi * ((law.f)(u) * dy - (law.g)(u) * dx);
            }
            total += acc * half;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::make_burgers2d;

    fn interior() -> CharacteristicSolution {
        characteristics_scalar(&ProblemInstance::named("interior-shock").unwrap(), &make_burgers2d()).unwrap()
    }

    fn fan() -> CharacteristicSolution {
        characteristics_scalar(&ProblemInstance::named("rarefaction").unwrap(), &make_burgers2d()).unwrap()
    }

    #[test]
    fn interior_geometry() {
        let s = interior();
        assert_eq!(s.focal_point, Some((0.75, 0.5)));
        assert!((s.eval(0.3, 0.0) - 0.9).abs() < 1e-15);
        assert_eq!(s.eval(0.1, 0.9), 1.5);
        assert_eq!(s.eval(0.98, 0.9), -0.5);
        assert_eq!(s.shock_x(1.0), Some(1.0));
        let shock = s.curves.iter().find(|c| c.kind == CurveKind::Shock).unwrap();
        assert_eq!(shock.to, (1.0, 1.0));
    }

    #[test]
    fn fan_values() {
        let s = fan();
        assert_eq!(s.eval(0.25, 1.0), 0.25);
        assert_eq!(s.eval(-0.9, 0.5), -1.0);
        assert_eq!(s.eval(0.4, 0.5), 0.5);
    }

    #[test]
    fn quadrature_integrates_polynomials() {
        let (x, w) = gauss_legendre(20);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((i - 2.0 / 39.0).abs() < 1e-15);
    }

    #[test]
    fn weak_form_on_contours() {
        let b = make_burgers2d();
        // crosses the shock and both states above the focus
        let c = contour_flux(&interior(), &b, &[(0.6, 0.6), (0.98, 0.6), (0.98, 0.95), (0.6, 0.95)]);
        assert!(c.abs() < 1e-12, "{c}");
        // inside the compression fan
        let c = contour_flux(&interior(), &b, &[(0.4, 0.05), (0.9, 0.05), (0.8, 0.3), (0.6, 0.3)]);
        assert!(c.abs() < 1e-12, "{c}");
        let c = contour_flux(&fan(), &b, &[(-0.8, 0.2), (0.7, 0.2), (0.7, 0.9), (-0.8, 0.9)]);
        assert!(c.abs() < 1e-12, "{c}");
    }
}
