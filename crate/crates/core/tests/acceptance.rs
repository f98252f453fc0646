//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the lines are printed whether or not a check fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use sweepcl::euler2d::{solve_oblique, solve_reflection, EulerSolution, TrackOptions};
use sweepcl::grid::Field2D;
use sweepcl::jump::{jump_2d, JumpConstraint};
use sweepcl::oracle::{
    cached_reference_euler_in, characteristics_scalar, contour_flux, exact_nozzle, theta_beta_mach, MarchOptions,
};
use sweepcl::propagate::{invert_flux, Integrator};
use sweepcl::scalar2d::{solve_interior_shock, solve_rarefaction, MatchKind, ScalarSolution, SweepOptions};
use sweepcl::sweep1d::{hermite_extrapolate, solve_single_shock, solve_sonic_then_shock};
use sweepcl::systems::{
    make_burgers2d, ConservationLaw, Euler2d, Primitive2d, ProblemInstance, Side, State,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn scaled_l2(xs: &[f64], e: &[f64], lo: f64, hi: f64, h: f64) -> f64 {
    let s: f64 = xs.iter().zip(e).filter(|(x, _)| **x >= lo && **x <= hi).map(|(_, v)| v * v).sum();
    h * s.sqrt()
}

fn rates(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn min(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Observed order as tabulated, to one decimal.
fn tabulated(rate: f64) -> f64 {
    (rate * 10.0).round() / 10.0
}

fn within_factor(v: f64, target: f64, k: f64) -> bool {
    v <= k * target && v >= target / k
}

fn nozzle_shock_errors(integ: Integrator, n: usize) -> (f64, f64, f64) {
    let p = ProblemInstance::named("nozzle-shock").unwrap();
    let sys = p.nozzle_system().unwrap();
    let ex = exact_nozzle(&p).unwrap();
    let r = solve_single_shock(&p, integ, n).unwrap();
    let (xs, us) = r.nodes();
    let e: Vec<f64> = xs
        .iter()
        .zip(&us)
        .map(|(x, u)| sys.primitive(u, *x).unwrap().rho - ex.primitive(*x).rho)
        .collect();
    let h = 10.0 / n as f64;
    (
        scaled_l2(&xs, &e, 0.0, 4.5, h),
        scaled_l2(&xs, &e, 5.5, 10.0, h),
        (r.shock_location - ex.shock_x).abs(),
    )
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let trap: Vec<_> = [50, 100, 200, 400].map(|n| nozzle_shock_errors(Integrator::Trapezoid, n)).to_vec();
    let rk4: Vec<_> = [50, 100, 200].map(|n| nozzle_shock_errors(Integrator::Rk4, n)).to_vec();
    let secs = t.elapsed().as_secs_f64();
    let tl: Vec<f64> = trap.iter().map(|e| e.0).collect();
    let tr: Vec<f64> = trap.iter().map(|e| e.1).collect();
    let rl: Vec<f64> = rk4.iter().map(|e| e.0).collect();
    let rr: Vec<f64> = rk4.iter().map(|e| e.1).collect();
    let pass = tl[1] <= 2e-5
        && tr[1] <= 5e-5
        && tabulated(min(&rates(&tl))) >= 2.0
        && tabulated(min(&rates(&tr))) >= 2.0
        && tabulated(min(&rates(&rl))) >= 4.0
        && tabulated(min(&rates(&rr))) >= 4.0
        && within_factor(rl[1], 0.076e-8, 3.0)
        && within_factor(rr[1], 0.276e-8, 3.0)
        && secs < 5.0;
    outcome(
        pass,
        format!(
            "trap N=100 L2 {:.3e}/{:.3e}, rates {:.2}/{:.2}; rk4 N=100 {:.3e}/{:.3e}, rates {:.2}/{:.2}; {secs:.2}s",
            tl[1],
            tr[1],
            min(&rates(&tl)),
            min(&rates(&tr)),
            rl[1],
            rr[1],
            min(&rates(&rl)),
            min(&rates(&rr))
        ),
    )
}

fn criterion_2() -> Outcome {
    let table = [1.412e-3, 0.428e-3, 0.116e-3, 0.030e-3];
    let trap: Vec<f64> = [50, 100, 200, 400].map(|n| nozzle_shock_errors(Integrator::Trapezoid, n).2).to_vec();
    let rk4: Vec<f64> = [50, 100, 200].map(|n| nozzle_shock_errors(Integrator::Rk4, n).2).to_vec();
    let close = trap.iter().zip(table).all(|(e, t)| within_factor(*e, t, 3.0));
    let pass = close && tabulated(min(&rates(&trap))) >= 1.7 && tabulated(min(&rates(&rk4))) >= 4.0;
    outcome(
        pass,
        format!(
            "trap shock errors {:?}, rate {:.2}; rk4 rate {:.2}",
            trap.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>(),
            min(&rates(&trap)),
            min(&rates(&rk4))
        ),
    )
}

fn criterion_3() -> Outcome {
    let p = ProblemInstance::named("nozzle-sonic").unwrap();
    let sys = p.nozzle_system().unwrap();
    let ex = exact_nozzle(&p).unwrap();
    let mut detail = String::new();
    let mut pass = true;
    for (integ, need) in [(Integrator::Trapezoid, 2.5), (Integrator::Rk4, 4.0)] {
        let mut errs = Vec::new();
        for n in [50usize, 100, 200] {
            let r = solve_sonic_then_shock(&p, integ, n).unwrap();
            let (xs, us) = r.matched.nodes();
            let (lo, hi) = (r.matched.shock_location.min(ex.shock_x), r.matched.shock_location.max(ex.shock_x));
            let e: Vec<f64> = xs
                .iter()
                .zip(&us)
                .map(|(x, u)| {
                    if *x >= lo && *x <= hi {
                        0.0
                    } else {
                        sys.primitive(u, *x).unwrap().p - ex.primitive(*x).p
                    }
                })
                .collect();
            let h = 3.0 / n as f64;
            errs.push(scaled_l2(&xs, &e, 0.0, 3.0, h));
            pass &= (r.turning.x_t - 1.5).abs() <= h;
        }
        let rate = min(&rates(&errs));
        pass &= tabulated(rate) >= need;
        detail += &format!("{} rate {rate:.2}; ", integ.name());
    }
    outcome(pass, format!("{detail}x_T within h of 1.5"))
}

fn scalar_l1(sol: &ScalarSolution, problem: &ProblemInstance) -> f64 {
    let exact = characteristics_scalar(problem, &make_burgers2d()).unwrap();
    let g = sol.field.grid;
    let mut e = 0.0;
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            e += (sol.field.at(i, j)[0] - exact.eval(g.x(i), g.y(j))).abs();
        }
    }
    e * g.hx() * g.hy()
}

/// Observed L1 orders must stay at least this close to one.
const FIRST_ORDER: f64 = 0.8;

fn criterion_4() -> Outcome {
    let p = ProblemInstance::named("interior-shock").unwrap();
    let law = make_burgers2d();
    let mut errs = Vec::new();
    let mut pass = true;
    let mut widest = 0usize;
    let mut focus_err: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for n in [64usize, 128, 256] {
        let s = solve_interior_shock(&p, &law, &SweepOptions::default(), n).unwrap();
        errs.push(scalar_l1(&s, &p));
        let g = s.field.grid;
        let (fx, fy) = s.focal_point.unwrap();
        let cell = g.hx().max(g.hy());
        focus_err = focus_err.max(((fx - 0.75).abs().max((fy - 0.5).abs())) / cell);
        pass &= (fx - 0.75).abs() <= cell && (fy - 0.5).abs() <= cell;
        for v in s.field.values.iter() {
            lo = lo.min(v[0]);
            hi = hi.max(v[0]);
        }
        // rows above the focus: the jump sits in a single cell
        for j in 0..=g.ny {
            if g.y(j) <= fy {
                continue;
            }
            let row: Vec<f64> = (0..=g.nx).map(|i| s.field.at(i, j)[0]).collect();
            let jump = row[0] - row[g.nx];
            let cells = row.windows(2).filter(|w| (w[0] - w[1]) > 0.05 * jump).count();
            widest = widest.max(cells);
        }
    }
    let rate = min(&rates(&errs));
    pass &= rate >= FIRST_ORDER && widest <= 1 && lo >= -0.5 && hi <= 1.5;
    outcome(
        pass,
        format!(
            "L1 {:?}, rate {rate:.2}; jump width {widest} cell; focus error {focus_err:.2} cells; range [{lo:.4}, {hi:.4}]",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>()
        ),
    )
}

fn criterion_5() -> Outcome {
    let p = ProblemInstance::named("rarefaction").unwrap();
    let law = make_burgers2d();
    let mut errs = Vec::new();
    let mut pass = true;
    let mut seam_top: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    for n in [64usize, 128, 256] {
        let s = solve_rarefaction(&p, &law, &SweepOptions::default(), n).unwrap();
        errs.push(scalar_l1(&s, &p));
        let g = s.field.grid;
        let tops: Vec<f64> = s
            .curves
            .iter()
            .map(|c| c.nodes.iter().cloned().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0)
            .collect();
        for target in [-1.0, 0.5] {
            let d = tops.iter().map(|x| (x - target).abs()).fold(f64::INFINITY, f64::min);
            seam_top = seam_top.max(d / g.hx());
            pass &= d <= g.hx();
        }
        worst_gap = worst_gap.max(seam_gap(&s) / g.hx());
    }
    let rate = min(&rates(&errs));
    pass &= rate >= FIRST_ORDER && worst_gap <= 3.0;
    outcome(
        pass,
        format!(
            "L1 {:?}, rate {rate:.2}; top seams within {seam_top:.2} cells; max |u_L-u_R| {worst_gap:.2} h",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>()
        ),
    )
}

/// Largest `|u_L - u_R|` over the nodes of the continuity seams.
fn seam_gap(s: &ScalarSolution) -> f64 {
    s.curves
        .iter()
        .filter(|c| c.kind == MatchKind::Continuity)
        .flat_map(|c| c.gaps.iter().copied())
        .filter(|g| g.is_finite())
        .fold(0.0, f64::max)
}

fn criterion_6() -> Outcome {
    let p = ProblemInstance::named("reflection").unwrap();
    let sys = p.euler_system();
    let s = solve_reflection(&p, 256, &TrackOptions::default()).unwrap();
    let left = sys.primitive(&p.euler_state_at(Side::Left, 0.5).unwrap()).unwrap();
    let top = sys.primitive(&p.euler_state_at(Side::Top, 1.0).unwrap()).unwrap();
    let inc = theta_beta_mach(left.mach(1.4), -top.flow_angle(), 1.4).unwrap();
    let refl = theta_beta_mach(top.mach(1.4), -top.flow_angle(), 1.4).unwrap();
    let want_inc = -inc.beta.to_degrees();
    let want_ref = (refl.beta + top.flow_angle()).to_degrees();
    let dev = |c: usize, want: f64| {
        s.curves[c].angles.iter().map(|a| (a.to_degrees() - want).abs()).fold(0.0, f64::max)
    };
    let (di, dr) = (dev(0, want_inc), dev(1, want_ref));
    let g = s.field.grid;
    let wall_v = (0..=g.nx)
        .filter(|&i| s.region_id[g.idx(i, 0)] == 2)
        .map(|i| sys.primitive(&s.field.at(i, 0)).unwrap().v.abs())
        .fold(0.0, f64::max);
    let pass = di <= 0.1 && dr <= 0.1 && wall_v <= 1e-10 && s.passes == 3;
    outcome(
        pass,
        format!("incident dev {di:.2e} deg, reflected dev {dr:.2e} deg, max |v| at wall {wall_v:.1e}, passes {}", s.passes),
    )
}

fn downstream_machs(sys: &Euler2d, s: &EulerSolution) -> Vec<f64> {
    let g = s.field.grid;
    (0..g.len()).filter(|k| s.region_id[*k] == 1).map(|k| sys.mach(&s.field.values[k])).collect()
}

fn criterion_7() -> Outcome {
    let p = ProblemInstance::named("oblique").unwrap();
    let sys = p.euler_system();
    let s = solve_oblique(&p, 256, &TrackOptions::default()).unwrap();
    let machs = downstream_machs(&sys, &s);
    let mach_dev = machs.iter().map(|m| (m - 2.2549).abs()).fold(0.0, f64::max);
    let ang_dev = s.curves[0].angles.iter().map(|a| (a.to_degrees() - 32.24).abs()).fold(0.0, f64::max);
    let pass = !machs.is_empty() && mach_dev <= 0.002 && ang_dev <= 0.05;
    outcome(
        pass,
        format!("{} downstream nodes, max |M-2.2549| {mach_dev:.2e}, max |angle-32.24| {ang_dev:.2e} deg", machs.len()),
    )
}

fn oracle_cache() -> PathBuf {
    std::env::var_os(sweepcl::oracle::CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/oracle-cache"))
}

/// Mach at `(x, y)` from the reference, when its whole cell is fluid.
fn reference_mach(sys: &Euler2d, f: &Field2D<4>, x: f64, y: f64) -> Option<f64> {
    let g = f.grid;
    let i = (((x - g.x0) / g.hx()).floor() as usize).min(g.nx - 1);
    let j = (((y - g.y0) / g.hy()).floor() as usize).min(g.ny - 1);
    let corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)];
    corners.iter().all(|(a, b)| f.is_valid(*a, *b)).then(|| sys.mach(&f.bilinear(x, y)))
}

/// Cells spanned by the 10-90% rise of a profile across a jump, after
/// removing the linear trend fitted on each end of the window.
fn transition_cells(ms: &[f64]) -> usize {
    let n = ms.len();
    let k = 4;
    let sl = (ms[k - 1] - ms[0]) / (k - 1) as f64;
    let sr = (ms[n - 1] - ms[n - k]) / (k - 1) as f64;
    let inside = (0..n)
        .filter(|&j| {
            let l = ms[0] + sl * j as f64;
            let r = ms[n - 1] - sr * (n - 1 - j) as f64;
            let t = (ms[j] - l) / (r - l);
            t > 0.1 && t < 0.9
        })
        .count();
    inside + 1
}

fn column_profile(sys: &Euler2d, f: &Field2D<4>, x: f64, yc: f64, half: usize) -> Vec<f64> {
    let g = f.grid;
    let i = ((x - g.x0) / g.hx()).round() as usize;
    (0..=g.ny)
        .filter(|&j| (g.y(j) - yc).abs() <= half as f64 * g.hy() && f.is_valid(i, j))
        .map(|j| sys.mach(&f.at(i, j)))
        .collect()
}

fn criterion_8() -> Outcome {
    let p = ProblemInstance::named("oblique-nonconstant").unwrap();
    let sys = p.euler_system();
    let reference = cached_reference_euler_in(&oracle_cache(), &p, 800, &MarchOptions::default()).unwrap().field;
    let n = 200;
    let s = solve_oblique(&p, n, &TrackOptions::default()).unwrap();
    let g = s.field.grid;
    let curve = &s.curves[0];
    let mut worst: (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut compared = 0;
    let mut over = 0;
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            if !s.field.is_valid(i, j) {
                continue;
            }
            let (x, y) = (g.x(i), g.y(j));
            if curve.y_at(x).is_some_and(|yc| (y - yc).abs() <= 3.0 * g.hy()) {
                continue;
            }
            let Some(mr) = reference_mach(&sys, &reference, x, y) else { continue };
            compared += 1;
            let e = (sys.mach(&s.field.at(i, j)) - mr).abs() / mr;
            over += usize::from(e > 0.02);
            if e > worst.0 {
                worst = (e, x, y);
            }
        }
    }
    let (mut sweep_w, mut ref_w) = (0usize, usize::MAX);
    for x in [0.7, 0.8, 0.9] {
        let yc = curve.y_at(x).unwrap();
        sweep_w = sweep_w.max(transition_cells(&column_profile(&sys, &s.field, x, yc, 8)));
        ref_w = ref_w.min(transition_cells(&column_profile(&sys, &reference, x, yc, 32)));
    }
    let pass = worst.0 <= 0.02 && sweep_w <= 2 && ref_w >= 6;
    outcome(
        pass,
        format!(
            "N={n} vs 801x801 reference over {compared} nodes: max rel Mach error {:.2}% at ({:.3}, {:.3}), {over} nodes above 2%; shock {sweep_w} cells, reference {ref_w} cells",
            100.0 * worst.0,
            worst.1,
            worst.2
        ),
    )
}

fn median_time(f: &dyn Fn()) -> f64 {
    let mut t: Vec<f64> = (0..3)
        .map(|_| {
            let s = Instant::now();
            f();
            s.elapsed().as_secs_f64()
        })
        .collect();
    t.sort_by(f64::total_cmp);
    t[1]
}

fn criterion_9() -> Outcome {
    let law = make_burgers2d();
    let names = ["interior-shock", "rarefaction", "reflection", "oblique", "oblique-nonconstant"];
    let mut worst = (0.0, "", 0usize);
    for name in names {
        let p = ProblemInstance::named(name).unwrap();
        let run = |n: usize| match name {
            "interior-shock" => drop(solve_interior_shock(&p, &law, &SweepOptions::default(), n).unwrap()),
            "rarefaction" => drop(solve_rarefaction(&p, &law, &SweepOptions::default(), n).unwrap()),
            "reflection" => drop(solve_reflection(&p, n, &TrackOptions::default()).unwrap()),
            _ => drop(solve_oblique(&p, n, &TrackOptions::default()).unwrap()),
        };
        run(64);
        let times: Vec<f64> = [64, 128, 256, 512].map(|n| median_time(&|| run(n))).to_vec();
        for (k, w) in times.windows(2).enumerate() {
            let r = w[1] / w[0];
            if r > worst.0 {
                worst = (r, name, 64 << k);
            }
        }
    }
    outcome(worst.0 <= 5.0, format!("largest time(2N)/time(N) {:.2} ({} at N={})", worst.0, worst.1, worst.2))
}

fn criterion_10() -> Outcome {
    use proptest::prelude::*;
    use proptest::test_runner::{Config, TestRunner};
    let sys = sweepcl::systems::make_euler2d(1.4);
    let mut runner = TestRunner::new(Config {
        cases: 256,
        ..Config::default()
    });
    let mut failures = Vec::new();
    let states = (0.2f64..4.0, 1.2f64..5.0, -0.4f64..0.4, 0.2f64..4.0);

    // eigen reconstruction and flux inversion round trips
    let r = runner.run(&states, |(rho, mach, ang, p)| {
        let c = (1.4 * p / rho).sqrt();
        let w = sys.conserved(&Primitive2d::new(rho, mach * c * ang.cos(), mach * c * ang.sin(), p));
        let e = sys.eigen_x(&w);
        let a = sys.jacobian_x(&w);
        prop_assert!((e.reconstruct() - a).amax() <= 1e-9 * (1.0 + a.amax()));
        let f = sys.flux_x(&w);
        let hint = w * 1.01;
        let back = invert_flux(&sys, &f, &hint).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!((back - w).amax() <= 1e-11 * w.amax());
        Ok(())
    });
    if let Err(e) = r {
        failures.push(format!("eigen/inversion: {e}"));
    }

    // R-H residual and entropy on returned oblique jumps
    let r = runner.run(&(states, 0.02f64..0.3), |((rho, mach, ang, p), defl)| {
        prop_assume!(mach > 1.5);
        let c = (1.4 * p / rho).sqrt();
        let up = Primitive2d::new(rho, mach * c * ang.cos(), mach * c * ang.sin(), p);
        let w = sys.conserved(&up);
        let Ok(j) = jump_2d(&sys, &w, JumpConstraint::FlowAngle(ang + defl)) else {
            return Ok(());
        };
        prop_assert!(j.residual <= 1e-10);
        let down = sys.primitive(&j.post_state).unwrap();
        prop_assert!(down.entropy(1.4) > up.entropy(1.4));
        Ok(())
    });
    if let Err(e) = r {
        failures.push(format!("jump: {e}"));
    }

    // Hermite extrapolation is exact for cubics
    let r = runner.run(&(-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0), |(a, b, c, d)| {
        let f = |x: f64| State::<1>::new(a + b * x + c * x * x + d * x * x * x);
        let df = |x: f64| State::<1>::new(b + 2.0 * c * x + 3.0 * d * x * x);
        let h = 0.1;
        let pts = [(0.0, f(0.0), df(0.0)), (h, f(h), df(h))];
        let v = hermite_extrapolate(&pts, h).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!((v - f(2.0 * h))[0].abs() <= 1e-12);
        Ok(())
    });
    if let Err(e) = r {
        failures.push(format!("hermite: {e}"));
    }

    // weak form of the oracle solutions on boxes across their curves
    let law = make_burgers2d();
    let mut worst_contour: f64 = 0.0;
    for name in ["interior-shock", "rarefaction"] {
        let p = ProblemInstance::named(name).unwrap();
        let sol = characteristics_scalar(&p, &law).unwrap();
        let (x0, x1, y0, y1) = p.rectangle().unwrap();
        for k in 0..8 {
            let t = k as f64 / 8.0;
            let (ya, yb) = (y0 + (y1 - y0) * (0.05 + 0.85 * t), y0 + (y1 - y0) * (0.15 + 0.85 * t));
            let (xa, xb) = (x0 + 0.1 * (x1 - x0), x1 - 0.1 * (x1 - x0));
            let poly = [(xa, ya), (xb, ya), (xb, yb.min(y1)), (xa, yb.min(y1))];
            worst_contour = worst_contour.max(contour_flux(&sol, &law, &poly).abs());
        }
    }
    if worst_contour > 1e-12 {
        failures.push(format!("contour integral {worst_contour:e}"));
    }

    // R-H residuals on every fitted Euler shock, and bit-equal re-runs
    let refl = ProblemInstance::named("reflection").unwrap();
    let a = solve_reflection(&refl, 64, &TrackOptions::default()).unwrap();
    let b = solve_reflection(&refl, 64, &TrackOptions::default()).unwrap();
    let worst_rh = a.curves.iter().flat_map(|c| c.residuals.iter()).cloned().fold(0.0, f64::max);
    if worst_rh > 1e-10 {
        failures.push(format!("fitted shock residual {worst_rh:e}"));
    }
    let same = a.field.values.iter().zip(&b.field.values).all(|(u, v)| u.iter().zip(v.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
    let p = ProblemInstance::named("interior-shock").unwrap();
    let s1 = solve_interior_shock(&p, &law, &SweepOptions::default(), 64).unwrap();
    let s2 = solve_interior_shock(&p, &law, &SweepOptions::default(), 64).unwrap();
    let same = same && s1.field.values.iter().zip(&s2.field.values).all(|(u, v)| u[0].to_bits() == v[0].to_bits());
    if !same {
        failures.push("re-run differs".into());
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("all property suites hold; contour {worst_contour:.1e}, fitted R-H {worst_rh:.1e}")
        } else {
            failures.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let checks: [(u8, &str, fn() -> Outcome); 10] = [
        (1, "nozzle-shock convergence", criterion_1),
        (2, "shock location", criterion_2),
        (3, "transonic nozzle", criterion_3),
        (4, "interior shock", criterion_4),
        (5, "rarefaction", criterion_5),
        (6, "shock reflection", criterion_6),
        (7, "oblique shock", criterion_7),
        (8, "oblique nonconstant", criterion_8),
        (9, "complexity", criterion_9),
        (10, "property suites", criterion_10),
    ];
    let filter: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in checks {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let o = check();
        println!("criterion {id:>2} {name}: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
