//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use cgflow::cp2::{self, CP2Constants};
use cgflow::eguchi_hanson::{self as eh, EHOrbitConstants};
use cgflow::flows::{self, acceleration_from_c, integrate, CGState, Initial, IntegratorConfig, Trajectory};
use cgflow::invariants::{cky_residual, involution_matrix, taubnut_integrals, taubnut_set, PhasePoint};
use cgflow::killing::{killing_cg_criterion, monopole_residual, KillingField};
use cgflow::{taubnut, ChartId, ChartPoint, GhData, MetricModel};
use common::{lorentz, polar_point, random_conformal, random_lorentz, rng, unit4};
use nalgebra::Vector4;
use rand::Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn tight() -> IntegratorConfig {
    IntegratorConfig { rel_tol: 1e-10, abs_tol: 1e-12, samples: 501, ..Default::default() }
}

/// Run random initial data until `n` trajectories stay inside the chart.
fn completed_runs<F>(model: &MetricModel, seed: u64, n: usize, span: f64, make: F) -> Vec<(Initial, Trajectory)>
where
    F: Fn(&MetricModel, &mut rand_chacha::ChaCha8Rng) -> Initial + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(seed * 1000 + i);
            loop {
                let init = make(model, &mut r);
                if let Ok(t) = integrate(model, &init, (0.0, span), &tight()) {
                    if t.completed() {
                        return (init, t);
                    }
                }
            }
        })
        .collect()
}

fn einstein_conservation() -> Outcome {
    let models =
        [MetricModel::TaubNut { m: 1.0 }, MetricModel::EguchiHanson { alpha: 1.0 }, MetricModel::Cp2, MetricModel::Flat4];
    let mut parts = vec![];
    let mut worst = 0.0_f64;
    for (k, m) in models.iter().enumerate() {
        let runs = completed_runs(m, 1 + k as u64, 20, 50.0, |m, r| Initial::Conformal(random_conformal(m, r)));
        let d = runs.iter().map(|(_, t)| t.max_drift("|a|^2").unwrap()).fold(0.0, f64::max);
        worst = worst.max(d);
        parts.push(format!("{} {d:.1e}", m.name()));
    }
    outcome(worst < 1e-7, format!("max |a|² drift over s∈[0,50]: {}", parts.join(", ")))
}

fn lorentz_equivalence() -> Outcome {
    let models = [
        MetricModel::TaubNut { m: 1.0 },
        MetricModel::EguchiHanson { alpha: 1.0 },
        MetricModel::GibbonsHawking(GhData::eguchi_hanson(1.0)),
        MetricModel::GibbonsHawking(GhData::taub_nut(1.0)),
    ];
    let mut worst = 0.0_f64;
    for (k, m) in models.iter().enumerate() {
        for (init, lor) in completed_runs(m, 10 + k as u64, 5, 10.0, |m, r| random_lorentz(m, r)) {
            let Initial::Lorentz(st) = &init else { unreachable!() };
            let a = acceleration_from_c(m, &st.point, &st.u, &st.c).unwrap();
            let full = Initial::Conformal(CGState { point: st.point.clone(), u: st.u.clone(), a });
            let conf = integrate(m, &full, (0.0, 10.0), &tight()).unwrap();
            let dev = lor
                .samples
                .iter()
                .zip(&conf.samples)
                .flat_map(|(p, q)| p.coords.iter().zip(&q.coords).map(|(x, y)| (x - y).abs()))
                .fold(0.0, f64::max);
            worst = worst.max(if conf.completed() { dev } else { f64::INFINITY });
        }
    }
    outcome(worst < 1e-6, format!("max position deviation over s∈[0,10], 20 trajectories: {worst:.1e}"))
}

fn tn_charged(seed: u64, m: f64, e: f64, span: f64) -> Trajectory {
    let model = MetricModel::TaubNut { m };
    let mut r = rng(seed);
    loop {
        let q = polar_point(&mut r, 1.5, 4.0);
        let ub = unit4(&mut r);
        let traj = integrate(&model, &lorentz(&model, q, ub, [0.0, 0.0, e]), (0.0, span), &tight()).unwrap();
        if traj.completed() {
            return traj;
        }
    }
}

fn tn_phase(traj: &Trajectory, i: usize, e: f64) -> PhasePoint {
    let s = &traj.samples[i];
    PhasePoint::from_velocity(&traj.model, &ChartPoint::new(ChartId::Polar, s.coords.clone()), &s.u, e).unwrap()
}

fn taub_nut_integrability() -> Outcome {
    let mut drift = 0.0_f64;
    for (seed, m, e) in [(1, 1.0, 0.7), (2, 0.5, -1.2), (3, 2.0, 0.3)] {
        let traj = tn_charged(seed, m, e, 30.0);
        let first = taubnut_integrals(&tn_phase(&traj, 0, e), m).unwrap();
        for i in 0..traj.samples.len() {
            let t = taubnut_integrals(&tn_phase(&traj, i, e), m).unwrap();
            drift = drift
                .max((t.k - first.k).abs())
                .max((t.l - first.l).abs())
                .max((t.h - first.h).abs())
                .max((t.w - first.w).abs());
        }
    }
    let m = 1.0;
    let mut r = rng(11);
    let pts: Vec<PhasePoint> = (0..50)
        .map(|_| {
            let q = polar_point(&mut r, 0.8, 4.0);
            let p: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
            PhasePoint::new(ChartPoint::new(ChartId::Polar, q.to_vec()), p, r.random_range(-1.5..1.5)).unwrap()
        })
        .collect();
    let rep = involution_matrix(&taubnut_set(m), &pts, &|q| taubnut::maxwell_field(m, q)).unwrap();
    outcome(
        drift < 1e-7 && rep.max < 1e-5,
        format!("max integral drift {drift:.1e}; max Poisson bracket over 50 points {:.1e}", rep.max),
    )
}

fn taub_nut_separability() -> Outcome {
    let (mut hj, mut quad) = (0.0_f64, 0.0_f64);
    for (seed, m, e) in [(1, 1.0, 0.7), (2, 0.5, -1.2), (4, 1.0, 1.5)] {
        let traj = tn_charged(seed, m, e, 30.0);
        let k = taubnut::extract_constants(&traj).unwrap();
        hj = hj.max(taubnut::hj_residual(&traj, &k).unwrap().max_residual);
        quad = quad.max(taubnut::quadrature_check(&traj, &k).unwrap().mismatch);
    }
    outcome(hj < 1e-6 && quad < 1e-6, format!("HJ residual {hj:.1e}; quadrature mismatch {quad:.1e}"))
}

fn eh_orbits() -> Outcome {
    let cases = [
        (1.6, [0.7, -0.3, 0.4], [0.5, -0.4, 0.6]),
        (2.5, [-0.2, 0.9, 0.1], [0.1, 0.8, -0.3]),
        (1.2, [0.3, 0.3, -0.8], [-0.6, 0.2, 0.2]),
    ];
    let (mut tangential, mut normal, mut rel, mut hode) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for (r, c, v) in cases {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) as f64;
        let v0 = [v[0] / n.sqrt(), v[1] / n.sqrt(), v[2] / n.sqrt()];
        let k = EHOrbitConstants::from_initial(1.0, r, c, v0, [0.0; 3]).unwrap();
        for smp in eh::orbit_solution(&k, v0, 10.0, 201).unwrap() {
            let res = eh::orbit_frame_residual(&k, &smp);
            tangential = tangential.max(res[..3].iter().fold(0.0, |a, b| a.max(b.abs())));
            normal = normal.max(res[3].abs());
            let ss = eh::starstar_residual(&smp.u, &k).unwrap();
            rel = rel.max(ss.unit.abs()).max(ss.linear.abs());
            hode = hode.max(eh::h_ode_residual(smp.h, smp.hd, smp.hdd, smp.hddd, k.m0).abs());
        }
    }
    let worst = tangential.max(normal).max(rel).max(hode);
    outcome(
        worst < 1e-6,
        format!(
            "frame system: tangential {tangential:.1e}, u⁴ component {normal:.1e}; orbit relations {rel:.1e}; h-equation {hode:.1e}"
        ),
    )
}

fn two_centre(seed: u64, c: [f64; 3]) -> Trajectory {
    let m = eh::two_centre_model(1.0);
    let mut r = rng(seed);
    let cfg = IntegratorConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..Default::default() };
    loop {
        let x: [f64; 4] = [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-1.5..1.5), 0.0];
        if x[0].hypot(x[1]) < 0.5 {
            continue;
        }
        let ub = unit4(&mut r);
        if let Ok(t) = integrate(&m, &lorentz(&m, x, ub, c), (0.0, 5.0), &cfg) {
            if t.completed() {
                return t;
            }
        }
    }
}

fn eh_prolate() -> Outcome {
    let special = [21, 22, 23]
        .iter()
        .map(|&s| eh::eh_hj_residual(&two_centre(s, [0.0, 0.0, -1.0])).unwrap().max_residual)
        .fold(0.0, f64::max);
    let generic = eh::eh_hj_residual(&two_centre(25, [0.6, 0.0, -0.8])).unwrap().max_residual;
    outcome(
        special < 1e-6 && generic > 1e-2,
        format!("residual c=(0,0,−1): {special:.1e}; generic c=(0.6,0,−0.8): {generic:.1e}"),
    )
}

fn cp2_constant_r() -> Outcome {
    let cases = [
        CP2Constants::new(0.9, 0.35, [0.3, 0.8, 1.2, 0.5]).unwrap(),
        CP2Constants::new(0.7, -0.55, [1.0, -0.3, 2.5, 0.0]).unwrap(),
        CP2Constants::new(1.3, 0.8, [2.0, 0.2, -1.4, 1.0]).unwrap(),
    ];
    let worst = cases.iter().map(|k| cp2::constant_r_residual(k, 10.0, 41).unwrap()).fold(0.0, f64::max);
    let mut exact = true;
    for (r, g) in [(0.6, 1.0), (1.0, -1.0), (2.2, 1.0)] {
        let k = CP2Constants::new(r, g, [0.4, 1.1, 0.3, 0.0]).unwrap();
        let smp = cp2::constant_r_solution(&k, &[0.0, 1.0]).unwrap();
        exact &= smp.iter().all(|s| Vector4::from(s.a).norm_squared() == ((r * r - 1.0) / r).powi(2));
    }
    outcome(
        worst < 1e-6 && exact,
        format!("closed-form residual {worst:.1e}; γ=±1 branch |a|² exact: {exact}"),
    )
}

fn cp2_cubic() -> Outcome {
    let (mut f2, mut f12) = (0.0_f64, 0.0_f64);
    for i in 0..20 {
        for j in 0..20 {
            let a = 0.05 + 0.2 * i as f64;
            let t = -0.95 + 0.1 * j as f64;
            let ck2 = t * t * a;
            let m = 2.0 * a - 1.0;
            f2 = f2.max((cp2::cubic_f(2.0, a, ck2) - m.powi(3)).abs() / (1.0 + a.powi(3)));
            f12 = f12.max((cp2::cubic_f(1.0 + 2.0 * a, a, ck2) + ck2 * m.powi(3)).abs() / (1.0 + a.powi(3)).powi(2));
        }
    }
    let taus: Vec<f64> = (0..20).map(|i| -0.95 + 0.1 * i as f64).collect();
    let accels: Vec<f64> = (0..20).map(|i| 0.1 * 1.3f64.powi(i)).collect();
    let (mut rt, mut below) = (0.0_f64, true);
    for c in cp2::classify_grid(&taus, &accels) {
        match c {
            Ok(c) => {
                rt = rt.max(c.checks.tau_error).max(c.checks.a_error);
                below &= c.checks.gamma2_below_one;
            }
            Err(_) => rt = f64::INFINITY,
        }
    }
    let machine = 64.0 * f64::EPSILON;
    outcome(
        f2 < machine && f12 < machine && rt < 1e-8 && below,
        format!("F(2) error {f2:.1e}, F(1+2A) error {f12:.1e} (scaled); round trip {rt:.1e}; γ²<1: {below}"),
    )
}

fn half_plane() -> Outcome {
    let c = IntegratorConfig { samples: 2001, ..Default::default() };
    let open = flows::halfplane_orbit(0.5, 12.0, &c).unwrap();
    let horo = flows::halfplane_orbit(1.0, 12.0, &c).unwrap();
    let closed = flows::halfplane_orbit(3.0, 4.0, &c).unwrap();
    let ok_open = open.regime == flows::HalfPlaneRegime::OpenUnbounded;
    let ok_horo = horo.regime == flows::HalfPlaneRegime::Horocircle;
    let radius = match closed.regime {
        flows::HalfPlaneRegime::Closed { radius, .. } => radius,
        _ => f64::NAN,
    };
    let closure = closed.closure_error.unwrap_or(f64::INFINITY);
    outcome(
        ok_open && ok_horo && (radius - 1.0 / 3.0).abs() < 1e-6 && closure < 1e-6,
        format!(
            "B=0.5 {:?} (ratio {:.6}); B=1 {:?}; B=3 radius {radius:.9}, closure {closure:.1e}",
            open.regime, open.radius_ratio, horo.regime
        ),
    )
}

fn killing_trajectory_criterion() -> Outcome {
    let mut r = rng(7);
    let pts: Vec<[f64; 4]> = (0..50).map(|_| polar_point(&mut r, 0.3, 3.0)).collect();
    let psi = KillingField::coordinate("psi", 3);
    let phi = KillingField::coordinate("phi", 2);
    let (mut zero, mut nonzero) = (0.0_f64, f64::INFINITY);
    let mut phi_max = 0.0_f64;
    for q in &pts {
        zero = zero.max(killing_cg_criterion(&MetricModel::Cp2, &psi, q).unwrap().value);
        let v = killing_cg_criterion(&MetricModel::Cp2, &phi, q).unwrap().value;
        nonzero = nonzero.min(v);
        phi_max = phi_max.max(v);
    }
    outcome(
        zero < 1e-8 && phi_max > 1e-2,
        format!("∂ψ max {zero:.1e}; ∂φ range [{nonzero:.1e}, {phi_max:.1e}] over 50 points"),
    )
}

fn cky_and_monopole() -> Outcome {
    let m = 1.0;
    let tn = MetricModel::TaubNut { m };
    let mut r = rng(8);
    let pts: Vec<[f64; 4]> = (0..20).map(|_| polar_point(&mut r, 0.5, 5.0)).collect();
    let mut cky = 0.0_f64;
    for c in [taubnut::cky_y(m).unwrap(), taubnut::cky_w(m).unwrap(), taubnut::ky_z(m)] {
        cky = cky.max(cky_residual(&tn, &c, &pts).unwrap());
    }
    let cpts: Vec<[f64; 4]> = (0..20).map(|_| polar_point(&mut r, 0.3, 3.0)).collect();
    cky = cky.max(cky_residual(&MetricModel::Cp2, &cp2::kahler_cky(), &cpts).unwrap());
    let gpts: Vec<[f64; 3]> = (0..100)
        .map(|_| loop {
            let p: [f64; 3] = std::array::from_fn(|_| r.random_range(-2.0..2.0));
            if p[0].hypot(p[1]) > 0.3 {
                break p;
            }
        })
        .collect();
    let mono = monopole_residual(&GhData::taub_nut(m), &gpts).max(monopole_residual(&GhData::eguchi_hanson(1.0), &gpts));
    outcome(cky < 1e-6 && mono < 1e-8, format!("max CKY residual {cky:.1e}; monopole residual {mono:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("acceleration norm conserved", einstein_conservation),
        ("Lorentz reduction equivalence", lorentz_equivalence),
        ("Taub–NUT integrals and involution", taub_nut_integrability),
        ("Taub–NUT separability", taub_nut_separability),
        ("Eguchi–Hanson orbit solutions", eh_orbits),
        ("Eguchi–Hanson prolate separation", eh_prolate),
        ("CP² constant-r closed forms", cp2_constant_r),
        ("CP² cubic and classification", cp2_cubic),
        ("half-plane magnetic regimes", half_plane),
        ("Killing trajectory criterion", killing_trajectory_criterion),
        ("CKY residuals and monopole equation", cky_and_monopole),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !res.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} ({:.1}s)",
            if res.pass { "PASS" } else { "FAIL" },
            i + 1,
            res.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
