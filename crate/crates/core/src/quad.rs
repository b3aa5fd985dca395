//! Definite integrals with integrable inverse-square-root endpoint singularities.

use quadrature::double_exponential;

/// `∫_a^b f(x) dx` after `x = a + (b − a)(1 − cos t)/2`, which turns simple
/// `1/√` endpoint singularities into smooth integrands on `t ∈ [0, π]`.
///
/// The integrand receives `(x, x − a, b − x)`; the two distances are exact even
/// where `x` itself cannot resolve them, so factors vanishing at an endpoint
/// should be formed from them.
pub fn integrate_endpoint_singular<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    // x − a = (b − a) sin²(t/2) and b − x = (b − a) cos²(t/2): measure from the
    // nearer endpoint so the distance to it is computed without cancellation.
    let g = |t: f64| {
        let (sh, ch) = (0.5 * t).sin_cos();
        let (da, db) = (2.0 * half * sh * sh, 2.0 * half * ch * ch);
        let x = if t <= std::f64::consts::FRAC_PI_2 { a + da } else { b - db };
        let v = f(x, da, db) * half * t.sin();
        if v.is_finite() { v } else { 0.0 }
    };
    let pi = std::f64::consts::PI;
    double_exponential::integrate(&g, 0.0, 0.5 * pi, 0.5 * tol).integral
        + double_exponential::integrate(&g, 0.5 * pi, pi, 0.5 * tol).integral
}

/// Plain smooth-integrand quadrature.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    double_exponential::integrate(f, a, b, tol).integral
}
