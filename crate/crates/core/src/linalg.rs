//! Small dense complex linear algebra: pivoted elimination and least squares.

use num_complex::Complex64;

pub type C64 = Complex64;
pub type Matrix = Vec<Vec<C64>>;

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(m: &[Vec<C64>]) -> C64 {
    let n = m.len();
    let mut a: Matrix = m.to_vec();
    let mut d = C64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))
            .expect("nonempty");
        if a[p][k].norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if p != k {
            a.swap(p, k);
            d = -d;
        }
        let pivot = a[k][k];
        d *= pivot;
        for i in k + 1..n {
            let f = a[i][k] / pivot;
            if f.norm() == 0.0 {
                continue;
            }
            for j in k..n {
                let v = a[k][j];
                a[i][j] -= f * v;
            }
        }
    }
    d
}

/// Solves `m x = b`; `None` when singular.
/// Exact determinant of an integer matrix by fraction-free (Bareiss) elimination.
pub fn det_i64(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

pub fn solve(m: &[Vec<C64>], b: &[C64]) -> Option<Vec<C64>> {
    let n = m.len();
    let mut a: Matrix = m.to_vec();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))?;
        if a[p][k].norm() == 0.0 {
            return None;
        }
        a.swap(p, k);
        rhs.swap(p, k);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let v = a[k][j];
                a[i][j] -= f * v;
            }
            let v = rhs[k];
            rhs[i] -= f * v;
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for k in (0..n).rev() {
        let s: C64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (rhs[k] - s) / a[k][k];
    }
    Some(x)
}

/// Least-squares polynomial fit of the given degree; returns ascending coefficients and
/// the relative residual `||r|| / ||v||`.
pub fn polyfit(ts: &[C64], vs: &[C64], degree: usize) -> (Vec<C64>, f64) {
    use nalgebra::{DMatrix, DVector};
    let center: C64 = ts.iter().sum::<C64>() / ts.len() as f64;
    let scale = ts.iter().map(|t| (t - center).norm()).fold(0.0, f64::max).max(1e-300);
    let a = DMatrix::from_fn(ts.len(), degree + 1, |i, j| ((ts[i] - center) / scale).powu(j as u32));
    let b = DVector::from_iterator(vs.len(), vs.iter().copied());
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-14).expect("svd solve");
    let r = &a * &x - &b;
    let rel = r.norm() / b.norm().max(1e-300);
    // Re-expand (t - center)/scale powers into plain powers of t.
    let mut coeffs = vec![C64::new(0.0, 0.0); degree + 1];
    for (j, cj) in x.iter().enumerate() {
        let term = crate::univariate::from_roots(&vec![center; j]);
        for (k, tk) in term.iter().enumerate() {
            coeffs[k] += cj * tk / scale.powi(j as i32);
        }
    }
    (coeffs, rel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn det_of_permutation_and_triangular() {
        let m = vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ];
        assert_eq!(det(&m), c(-1.0, 0.0));
        let t = vec![
            vec![c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(-3.0, 0.0)],
        ];
        assert!((det(&t) - c(-9.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn solve_roundtrip() {
        let m = vec![
            vec![c(2.0, 1.0), c(1.0, 0.0)],
            vec![c(0.0, 1.0), c(-1.0, 3.0)],
        ];
        let x = vec![c(0.5, -0.25), c(1.0, 2.0)];
        let b: Vec<C64> = m.iter().map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
        let y = solve(&m, &b).unwrap();
        assert!((y[0] - x[0]).norm() < 1e-14 && (y[1] - x[1]).norm() < 1e-14);
    }

    #[test]
    fn polyfit_recovers_exact_polynomial() {
        let p = [c(1.0, 0.0), c(-2.0, 1.0), c(0.0, 0.5), c(3.0, 0.0)];
        let ts: Vec<C64> = (0..9).map(|k| C64::from_polar(4.0, 0.7 * k as f64)).collect();
        let vs: Vec<C64> = ts.iter().map(|&t| crate::univariate::eval(&p, t)).collect();
        let (q, rel) = polyfit(&ts, &vs, 3);
        assert!(rel < 1e-13);
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn integer_determinants() {
        assert_eq!(det_i64(&[vec![2, 1], vec![1, 3]]), 5);
        assert_eq!(det_i64(&[vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 4]]), -4);
        let sym = vec![vec![0, 1, -1, 1], vec![-1, 0, 1, 0], vec![1, -1, 0, 1], vec![-1, 0, -1, 0]];
        // Pfaffian of the antisymmetric matrix squared: (a12 a34 - a13 a24 + a14 a23)^2
        assert_eq!(det_i64(&sym), (1 * 1 - (-1) * 0 + 1 * 1) * (1 * 1 - (-1) * 0 + 1 * 1));
        assert_eq!(det_i64(&[vec![0, -1, -1, 1], vec![1, 0, 0, 1], vec![1, 0, 0, 1], vec![-1, -1, -1, 0]]), 0);
    }
}
