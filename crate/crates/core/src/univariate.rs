//! Dense univariate complex polynomials (ascending coefficients) and root finding.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;

/// Horner evaluation of `c[0] + c[1] z + ...`.
pub fn eval(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// Value and first derivative in one pass.
pub fn eval_with_derivative(c: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

pub fn derivative(c: &[C64]) -> Vec<C64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| a * k as f64)
        .collect()
}

/// Drops leading coefficients that are negligible relative to the largest one.
pub fn trim(c: &[C64], rel: f64) -> Vec<C64> {
    let scale = c.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut end = c.len();
    while end > 0 && c[end - 1].norm() <= rel * scale {
        end -= 1;
    }
    c[..end].to_vec()
}

pub fn mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Monic polynomial with the given roots.
pub fn from_roots(roots: &[C64]) -> Vec<C64> {
    roots.iter().fold(vec![C64::new(1.0, 0.0)], |acc, &r| {
        mul(&acc, &[-r, C64::new(1.0, 0.0)])
    })
}

/// Newton polish of a single root; keeps the best iterate.
pub fn polish(c: &[C64], z0: C64, tol: f64) -> C64 {
    let scale: f64 = c.iter().map(|a| a.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut z = z0;
    let mut best = (eval(c, z).norm(), z);
    for _ in 0..50 {
        let (p, dp) = eval_with_derivative(c, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        z -= step;
        let r = eval(c, z).norm();
        if r < best.0 {
            best = (r, z);
        }
        if step.norm() <= tol * z.norm().max(1.0) || r <= tol * 1e-4 * scale {
            break;
        }
    }
    best.1
}

/// All roots of a polynomial: companion-matrix eigenvalues followed by Newton polish,
/// with Aberth-Ehrlich simultaneous iteration as fallback.
pub fn roots(c: &[C64], tol: f64) -> Vec<C64> {
    let c = trim(c, 1e-14);
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let mut comp = DMatrix::<C64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    let raw: Vec<C64> = match comp.try_schur(f64::EPSILON, 200 * deg).and_then(|s| s.eigenvalues()) {
        Some(ev) if ev.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
            ev.iter().copied().collect()
        }
        _ => aberth(&c, tol),
    };
    raw.into_iter().map(|z| polish(&c, z, tol)).collect()
}

/// Aberth-Ehrlich iteration.
pub fn aberth(c: &[C64], tol: f64) -> Vec<C64> {
    let deg = c.len() - 1;
    let lead = c[deg];
    let radius = c[..deg]
        .iter()
        .enumerate()
        .map(|(k, a)| (a / lead).norm().powf(1.0 / (deg - k) as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut z: Vec<C64> = (0..deg)
        .map(|k| C64::from_polar(radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64))
        .collect();
    for _ in 0..500 {
        let mut worst: f64 = 0.0;
        for i in 0..deg {
            let (p, dp) = eval_with_derivative(c, z[i]);
            let ratio = p / dp;
            let repulsion: C64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| C64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let w = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            if w.re.is_finite() && w.im.is_finite() {
                z[i] -= w;
                worst = worst.max(w.norm() / z[i].norm().max(1.0));
            }
        }
        if worst < tol {
            break;
        }
    }
    z
}
