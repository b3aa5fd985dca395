mod common;

use cgflow::flows::{integrate, lorentz_rhs, IntegratorConfig, LorentzState, Trajectory};
use cgflow::geometry::{ChartId, ChartPoint, MetricModel};
use cgflow::invariants::{
    cky_first_integral, cky_residual, involution_matrix, poisson_bracket, taubnut_hamiltonian, taubnut_integrals,
    taubnut_set, PhasePoint,
};
use cgflow::taubnut;
use nalgebra::Vector4;
use rand::Rng;

fn charged(seed: u64, m: f64, e: f64, span: f64) -> Trajectory {
    let model = MetricModel::TaubNut { m };
    let mut r = common::rng(seed);
    loop {
        let q = common::polar_point(&mut r, 1.5, 4.0);
        let ub = common::unit4(&mut r);
        let init = common::lorentz(&model, q, ub, [0.0, 0.0, e]);
        let traj = integrate(&model, &init, (0.0, span), &IntegratorConfig::default()).unwrap();
        if traj.completed() {
            return traj;
        }
    }
}

fn phase(traj: &Trajectory, i: usize, e: f64) -> PhasePoint {
    let s = &traj.samples[i];
    PhasePoint::from_velocity(&traj.model, &ChartPoint::new(ChartId::Polar, s.coords.clone()), &s.u, e).unwrap()
}

fn q4(v: &[f64]) -> [f64; 4] {
    [v[0], v[1], v[2], v[3]]
}

#[test]
fn integrals_conserved_along_charged_trajectories() {
    for (seed, m, e) in [(1, 1.0, 0.7), (2, 0.5, -1.2), (3, 2.0, 0.3)] {
        let traj = charged(seed, m, e, 30.0);
        let first = taubnut_integrals(&phase(&traj, 0, e), m).unwrap();
        for i in 0..traj.samples.len() {
            let t = taubnut_integrals(&phase(&traj, i, e), m).unwrap();
            assert!((t.k - first.k).abs() < 1e-7);
            assert!((t.l - first.l).abs() < 1e-7);
            assert!((t.h - first.h).abs() < 1e-7);
            assert!((t.w - first.w).abs() < 1e-7, "seed {seed}: W drift {}", t.w - first.w);
        }
    }
}

#[test]
fn velocity_and_momentum_forms_agree() {
    let (m, e) = (1.0, 0.7);
    let traj = charged(4, m, e, 10.0);
    for (i, s) in traj.samples.iter().enumerate().step_by(25) {
        let t = taubnut_integrals(&phase(&traj, i, e), m).unwrap();
        let wv = taubnut::w_integral_velocity(m, e, &q4(&s.coords), &s.u).unwrap();
        assert!((wv - t.w).abs() < 1e-10, "{wv} vs {}", t.w);
        // K and L as K^a(u_a + eΦ_a)
        let l = traj.model.local(&q4(&s.coords)).unwrap();
        let p = l.g * Vector4::from_column_slice(&s.u);
        let phi = taubnut::potential(&q4(&s.coords), m);
        assert!((p[3] + e * phi[3] - t.k).abs() < 1e-12);
        assert!((p[2] + e * phi[2] - t.l).abs() < 1e-12);
    }
}

#[test]
fn cky_integrals_reduce_to_known_ones() {
    // Y gives back K; W gives minus the quadratic integral.
    let (m, e) = (1.0, 0.7);
    let traj = charged(3, m, e, 20.0);
    let (cy, cw) = (taubnut::cky_y(m).unwrap(), taubnut::cky_w(m).unwrap());
    let kpsi = taubnut::killing_psi_form(m);
    for (i, s) in traj.samples.iter().enumerate().step_by(50) {
        let st = s.state(ChartId::Polar);
        let t = taubnut_integrals(&phase(&traj, i, e), m).unwrap();
        assert!((cky_first_integral(&cy, &st) - t.k).abs() < 1e-8);
        assert!((cky_first_integral(&cw, &st) + t.w).abs() < 1e-8);
        let q = q4(&s.coords);
        assert!((cw.k_at(&q) - kpsi(&q)).norm() < 1e-8);
        assert!((cy.k_at(&q) - kpsi(&q)).norm() < 1e-8);
    }
}

fn random_phase(r: &mut impl Rng, m: f64) -> PhasePoint {
    let q = common::polar_point(r, 0.8, 4.0);
    let p: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
    let _ = m;
    PhasePoint::new(ChartPoint::new(ChartId::Polar, q.to_vec()), p, r.random_range(-1.5..1.5)).unwrap()
}

#[test]
fn integrals_in_involution() {
    let m = 1.0;
    let mut r = common::rng(11);
    let samples: Vec<PhasePoint> = (0..50).map(|_| random_phase(&mut r, m)).collect();
    let rep = involution_matrix(&taubnut_set(m), &samples, &|q| taubnut::maxwell_field(m, q)).unwrap();
    assert!(rep.max < 1e-5, "{:?}", rep.matrix);

    // {H, r} is a velocity component, not zero.
    let h = move |pp: &PhasePoint| taubnut_hamiltonian(pp, m).unwrap();
    let rr = |pp: &PhasePoint| pp.q.coords[0];
    let f = taubnut::maxwell_field(m, &samples[0].q.as4());
    assert!(poisson_bracket(&h, &rr, &samples[0], &f).unwrap().abs() > 1e-3);
}

#[test]
fn hamilton_equations_reproduce_lorentz_force() {
    let m = 1.0;
    let model = MetricModel::TaubNut { m };
    let mut r = common::rng(5);
    for _ in 0..10 {
        let pp = random_phase(&mut r, m);
        let q = pp.q.as4();
        let u = pp.velocity(&model).unwrap();
        let f = taubnut::maxwell_field(m, &q);
        let h = move |x: &PhasePoint| taubnut_hamiltonian(x, m).unwrap();
        let st = LorentzState { point: pp.q.clone(), u: u.clone(), c: [0.0, 0.0, pp.e] };
        let d = lorentz_rhs(&model, &st).unwrap();
        // Ṗ_a = ∂_c g_ab u^c u^b + g_ab u̇^b
        let (e0, de) = model.coframe_with_derivatives(&q);
        let uv = Vector4::from_column_slice(&u);
        let du = Vector4::from_column_slice(&d.du);
        let g = e0.transpose() * e0;
        let mut pdot = g * du;
        for c in 0..4 {
            let t = de[c].transpose() * e0;
            pdot += (t + t.transpose()) * uv * u[c];
        }
        for a in 0..4 {
            let qa = move |x: &PhasePoint| x.q.coords[a];
            let pa = move |x: &PhasePoint| x.p[a];
            assert!((poisson_bracket(&qa, &h, &pp, &f).unwrap() - u[a]).abs() < 1e-6);
            assert!((poisson_bracket(&pa, &h, &pp, &f).unwrap() - pdot[a]).abs() < 1e-6);
        }
    }
}

#[test]
fn separation_residuals_along_trajectories() {
    for (seed, m, e) in [(1, 1.0, 0.7), (2, 0.5, -1.2), (6, 1.0, 0.0)] {
        let traj = charged(seed, m, e, 30.0);
        let k = taubnut::extract_constants(&traj).unwrap();
        // E and J are the integrals K and L.
        let t = taubnut_integrals(&phase(&traj, 0, e), m).unwrap();
        assert_eq!((k.p_psi, k.p_phi), (t.k, t.l));
        let rep = taubnut::hj_residual(&traj, &k).unwrap();
        assert!(rep.max_residual < 1e-6, "seed {seed}: {rep:?}");
        let qc = taubnut::quadrature_check(&traj, &k).unwrap();
        assert!(qc.mismatch < 1e-6, "{qc:?}");
        assert!((qc.eta_integral.abs() - qc.arc_integral).abs() < 1e-6);

        let bad = taubnut::SeparationConstants { q: k.q * 1.01, ..k };
        assert!(taubnut::hj_residual(&traj, &bad).unwrap().max_residual > 1e-3);
    }
}

#[test]
fn quadrature_rejects_interior_turning_point() {
    let k = taubnut::extract_constants(&charged(1, 1.0, 0.7, 1.0)).unwrap();
    let roots = cgflow::roots::polynomial_roots(&taubnut::quartic_coeffs(k.p_psi, k.q, &k), 0.0, 100.0, 1e-12);
    assert_eq!(roots.len(), 2, "{roots:?}");
    let r0 = roots[1];
    let res = taubnut::unparam_quadrature((r0 * 0.5, r0 * 1.5), (1.0, 1.0), &k);
    assert!(matches!(res, Err(cgflow::Error::SplitRequired { .. })));
}

#[test]
fn killing_yano_tensors() {
    let m = 1.0;
    let model = MetricModel::TaubNut { m };
    let mut r = common::rng(8);
    let pts: Vec<[f64; 4]> = (0..20).map(|_| common::polar_point(&mut r, 0.5, 5.0)).collect();
    for cky in [taubnut::cky_y(m).unwrap(), taubnut::cky_w(m).unwrap(), taubnut::ky_z(m)] {
        let res = cky_residual(&model, &cky, &pts).unwrap();
        assert!(res < 1e-6, "{}: {res}", cky.name);
    }
    // a generic two-form fails
    let junk = cgflow::invariants::CKYData::from_two_form(
        &model,
        "junk",
        std::sync::Arc::new(|q: &[f64; 4]| nalgebra::Matrix4::from_fn(|i, j| (i as f64 - j as f64) * q[0].sin())),
    );
    assert!(cky_residual(&model, &junk, &pts).unwrap() > 1e-2);
}

#[test]
fn sigma_structure_equations() {
    use cgflow::invariants::exterior_derivative;
    let mut r = common::rng(9);
    for _ in 0..10 {
        let q = common::polar_point(&mut r, 1.0, 2.0);
        let s = taubnut::sigma_forms(&q);
        let wedge = |a: &[f64; 4], b: &[f64; 4]| nalgebra::Matrix4::from_fn(|i, j| a[i] * b[j] - a[j] * b[i]);
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let d = exterior_derivative(|x| taubnut::sigma_forms(x)[i], &q);
            assert!((d + wedge(&s[j], &s[k])).abs().max() < 1e-8);
        }
    }
}

#[test]
fn parabolic_round_trip() {
    let mut r = common::rng(10);
    for _ in 0..100 {
        let q = common::polar_point(&mut r, 0.1, 10.0);
        let p = ChartPoint::new(ChartId::Polar, q.to_vec());
        let pb = taubnut::to_parabolic(&p).unwrap();
        let (z, rho) = taubnut::cylindrical(&pb);
        assert!((z - q[0] * q[1].cos()).abs() < 1e-12 * q[0].max(1.0));
        assert!((rho - q[0] * q[1].sin()).abs() < 1e-12 * q[0].max(1.0));
        let back = taubnut::from_parabolic(&pb);
        for i in 0..4 {
            assert!((back.coords[i] - q[i]).abs() < 1e-12 * q[i].abs().max(1.0));
        }
    }
}
