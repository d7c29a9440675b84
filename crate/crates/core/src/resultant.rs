//! Sylvester resultants evaluated numerically and recovered as polynomials by
//! interpolation on circles (inverse DFT).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::linalg;

pub type C64 = Complex64;

/// Determinant of the Sylvester matrix of `a` and `b`, taken with their formal degrees
/// `a.len() - 1` and `b.len() - 1` (ascending coefficients).
pub fn sylvester(a: &[C64], b: &[C64]) -> C64 {
    let p = a.len() - 1;
    let q = b.len() - 1;
    let n = p + q;
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut m = vec![vec![C64::new(0.0, 0.0); n]; n];
    for r in 0..q {
        for (k, &c) in a.iter().rev().enumerate() {
            m[r][r + k] = c;
        }
    }
    for r in 0..p {
        for (k, &c) in b.iter().rev().enumerate() {
            m[q + r][r + k] = c;
        }
    }
    linalg::det(&m)
}

/// Sample points `radius * exp(2 pi i k / count)`.
pub fn circle_nodes(count: usize, radius: f64) -> Vec<C64> {
    (0..count)
        .map(|k| C64::from_polar(radius, 2.0 * PI * k as f64 / count as f64))
        .collect()
}

/// Coefficients of the polynomial of degree `< values.len()` taking `values` at
/// `circle_nodes(values.len(), radius)`.
pub fn interpolate_circle(values: &[C64], radius: f64) -> Vec<C64> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let s: C64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| v * C64::from_polar(1.0, -2.0 * PI * (j * k % n) as f64 / n as f64))
                .sum();
            s / (n as f64 * radius.powi(k as i32))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::univariate;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn resultant_of_linear_factors() {
        // Res((y - 1)(y - 2), (y - 3)) = (1 - 3)(2 - 3) = 2 up to the sign convention
        let a = univariate::from_roots(&[c(1.0), c(2.0)]);
        let b = univariate::from_roots(&[c(3.0)]);
        assert!((sylvester(&a, &b).norm() - 2.0).abs() < 1e-13);
        // common root gives zero
        let b = univariate::from_roots(&[c(2.0)]);
        assert!(sylvester(&a, &b).norm() < 1e-13);
    }

    #[test]
    fn discriminant_of_depressed_cubic() {
        // Res(y^3 + q, 3 y^2) = 27 q^2
        let q = c(0.7);
        let r = sylvester(&[q, c(0.0), c(0.0), c(1.0)], &[c(0.0), c(0.0), c(3.0)]);
        assert!((r.norm() - 27.0 * 0.49).abs() < 1e-12);
    }

    #[test]
    fn interpolation_roundtrip() {
        let p = vec![c(1.0), C64::new(0.0, 2.0), c(-0.5), c(0.25)];
        let nodes = circle_nodes(6, 1.7);
        let vals: Vec<C64> = nodes.iter().map(|&z| univariate::eval(&p, z)).collect();
        let q = interpolate_circle(&vals, 1.7);
        for (k, qk) in q.iter().enumerate() {
            let want = p.get(k).copied().unwrap_or_default();
            assert!((qk - want).norm() < 1e-13);
        }
    }
}
