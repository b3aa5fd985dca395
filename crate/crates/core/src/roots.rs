//! Scalar root finding: bracket scanning and a safeguarded Newton–bisection hybrid.

use crate::error::{Error, Result};

/// Sub-intervals of `[lo, hi]` on which `f` changes sign, from `n` uniform cells.
pub fn scan_brackets<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![];
    let mut x0 = lo;
    let mut f0 = f(lo);
    for i in 1..=n {
        let x1 = lo + (hi - lo) * i as f64 / n as f64;
        let f1 = f(x1);
        if f0 == 0.0 {
            out.push((x0, x0));
        } else if f0 * f1 < 0.0 {
            out.push((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        out.push((hi, hi));
    }
    out
}

/// Root of `f` in a sign-changing bracket. Newton steps (using `df` when given)
/// are accepted only while they stay inside the shrinking bracket.
pub fn solve<F, D>(f: F, df: Option<D>, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa * fb < 0.0) {
        return Err(Error::Bracket { lo: a, hi: b, flo: fa, fhi: fb });
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fa * fx < 0.0 {
            b = x;
        } else {
            a = x;
            fa = fx;
        }
        let newton = df.as_ref().map(|d| x - fx / d(x)).filter(|xn| xn.is_finite() && *xn > a && *xn < b);
        let next = newton.unwrap_or(0.5 * (a + b));
        let scale = tol * next.abs().max(1.0);
        if (next - x).abs() <= scale || (b - a) <= scale {
            return Ok(next);
        }
        x = next;
    }
    Ok(0.5 * (a + b))
}

/// All sign-change roots of `f` in `[lo, hi]` found on an `n`-cell scan.
pub fn all_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, tol: f64) -> Vec<f64> {
    scan_brackets(&f, lo, hi, n)
        .into_iter()
        .filter_map(|(a, b)| if a == b { Some(a) } else { solve(&f, None::<fn(f64) -> f64>, a, b, tol).ok() })
        .collect()
}

/// Real roots of `c0 + c1 x + … + cn xⁿ` inside `[lo, hi]`.
pub fn polynomial_roots(coeffs: &[f64], lo: f64, hi: f64, tol: f64) -> Vec<f64> {
    let p = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let dp = |x: f64| {
        coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * x + k as f64 * c)
    };
    let mut roots: Vec<f64> = scan_brackets(p, lo, hi, 2000)
        .into_iter()
        .filter_map(|(a, b)| if a == b { Some(a) } else { solve(p, Some(dp), a, b, tol).ok() })
        .collect();
    roots.dedup_by(|a, b| (*a - *b).abs() <= tol);
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let r = solve(|x| x * x - 2.0, Some(|x: f64| 2.0 * x), 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn no_bracket() {
        assert!(matches!(solve(|x| x * x + 1.0, None::<fn(f64) -> f64>, -1.0, 1.0, 1e-12), Err(Error::Bracket { .. })));
    }

    #[test]
    fn cubic_roots() {
        // (x−1)(x−2)(x+3) = x³ − 7x + 6
        let r = polynomial_roots(&[6.0, -7.0, 0.0, 1.0], -5.0, 5.0, 1e-13);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}
