use std::f64::consts::PI;

use proptest::prelude::*;

use periodlab::bounds::{bound_table, BoundExtras};
use periodlab::cycles::{intersection_matrix, star_basis, transport};
use periodlab::detformula::FormTuple;
use periodlab::genericity::{normalize, NormalizationMode};
use periodlab::integrals::{circle_samples, determinant_samples, integrate_forms};
use periodlab::poly::unitary;
use periodlab::projection::{branch_points, track_branches_with_step, PolyPath};
use periodlab::{BivariatePolynomial, Config, C64};

fn testbed() -> BivariatePolynomial {
    BivariatePolynomial::from_real_terms(&[(3, 0, 1.0), (1, 0, -3.0), (0, 3, 2.0), (0, 1, -6.0)])
}

fn normalized_testbed() -> BivariatePolynomial {
    normalize(&testbed(), NormalizationMode::Normalized, &Config::default()).unwrap().poly
}

fn homogeneous(deg: usize, coeffs: &[(f64, f64)]) -> BivariatePolynomial {
    let terms: Vec<(usize, usize, C64)> =
        (0..=deg).map(|i| (i, deg - i, C64::new(coeffs[i].0, coeffs[i].1))).collect();
    BivariatePolynomial::from_terms(deg, &terms).unwrap()
}

fn homogeneous_strategy(max_deg: usize) -> impl Strategy<Value = BivariatePolynomial> {
    (1..=max_deg).prop_flat_map(|deg| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), deg + 1)
            .prop_filter("nonzero", |c| c.iter().any(|&(a, b)| a.abs() + b.abs() > 1e-3))
            .prop_map(move |c| homogeneous(deg, &c))
    })
}

/// Brute-force maximum of `|p|` over a grid on the unit sphere; a lower bound.
fn sphere_max(p: &BivariatePolynomial) -> f64 {
    let mut best = 0.0f64;
    for a in 0..=96 {
        let theta = 0.5 * PI * a as f64 / 96.0;
        for b in 0..192 {
            let psi = 2.0 * PI * b as f64 / 192.0;
            let z = [C64::new(theta.cos(), 0.0), C64::from_polar(theta.sin(), psi)];
            best = best.max(p.eval(z[0], z[1]).norm());
        }
    }
    best
}

/// Maximum of `|G|` over the torus `|x| = |y| = 1`, which bounds the closed bidisc.
fn torus_max(g: &BivariatePolynomial) -> f64 {
    let mut best = 0.0f64;
    for a in 0..128 {
        for b in 0..128 {
            let x = C64::from_polar(1.0, 2.0 * PI * a as f64 / 128.0);
            let y = C64::from_polar(1.0, 2.0 * PI * b as f64 / 128.0);
            best = best.max(g.eval(x, y).norm());
        }
    }
    best
}

fn unit_vector(a: f64, b: f64, c: f64) -> [C64; 2] {
    [C64::new(a.cos(), 0.0) * C64::from_polar(1.0, c), C64::from_polar(a.sin(), b)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, .. ProptestConfig::default() })]

    #[test]
    fn hermitian_vs_max_norm(q in homogeneous_strategy(7)) {
        let s = q.degree().unwrap() as f64;
        let m = q.max_norm();
        let h2 = q.hermitian_norm().unwrap();
        prop_assert!(m / (s + 1.0).sqrt() <= h2 * (1.0 + 1e-9));
        prop_assert!(h2 <= 2f64.powf(s / 2.0) * m * (1.0 + 1e-9));
    }

    #[test]
    fn max_norm_agrees_with_sphere_sampling(q in homogeneous_strategy(5)) {
        let m = q.max_norm();
        let s = sphere_max(&q);
        prop_assert!(s <= m * (1.0 + 1e-9), "sampled {s} exceeds {m}");
        prop_assert!(m <= s * (1.0 + 2e-2), "sampled {s} far below {m}");
    }

    #[test]
    fn product_of_lines_bounds_leading_factor(
        k in 1usize..=6,
        g0 in (0.1f64..3.0, -3.0f64..3.0),
        angles in prop::collection::vec((0.0f64..PI / 2.0, 0.0f64..2.0 * PI, 0.0f64..2.0 * PI), 6),
    ) {
        let g0 = C64::new(g0.0, g0.1);
        let mut g = BivariatePolynomial::constant(g0);
        for &(a, b, c) in angles.iter().take(k) {
            let u = unit_vector(a, b, c);
            // ((x, y), u) = x conj(u0) + y conj(u1)
            let f = BivariatePolynomial::from_terms(1, &[(1, 0, u[0].conj()), (0, 1, u[1].conj())]).unwrap();
            g = &g * &f;
        }
        let m = g.max_norm();
        let kf = k as f64;
        prop_assert!(m <= g0.norm() * (1.0 + 1e-9));
        prop_assert!(g0.norm() <= m * (2.0 * kf.sqrt()).powf(kf) * (1.0 + 1e-9));
    }

    #[test]
    fn max_norm_of_product(g in homogeneous_strategy(4), q in homogeneous_strategy(4)) {
        let (k, m) = (g.degree().unwrap() as f64, q.degree().unwrap() as f64);
        let lhs = (&g * &q).max_norm();
        let rhs = (2.0 * (k + m).sqrt()).powf(-(k + m)) * g.max_norm() * q.max_norm();
        prop_assert!(lhs >= rhs * (1.0 - 1e-9));
    }

    #[test]
    fn max_norm_against_bidisc(
        n in 1usize..=5,
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 21),
    ) {
        let mut terms = Vec::new();
        let mut k = 0;
        for i in 0..=n {
            for j in 0..=(n - i) {
                terms.push((i, j, C64::new(coeffs[k].0, coeffs[k].1)));
                k += 1;
            }
        }
        let g = BivariatePolynomial::from_terms(n, &terms).unwrap();
        prop_assert!(g.max_norm() <= 2.0 * n as f64 * torus_max(&g) * (1.0 + 1e-9));
    }

    #[test]
    fn max_norm_is_unitary_invariant(
        q in homogeneous_strategy(5),
        t in (0.0f64..PI / 2.0, 0.0f64..2.0 * PI, 0.0f64..2.0 * PI, 0.0f64..2.0 * PI),
    ) {
        let u = unitary(t.0, t.1, t.2, t.3);
        let rotated = q.compose_affine(u, [C64::new(0.0, 0.0); 2]);
        prop_assert!((rotated.max_norm() - q.max_norm()).abs() <= 1e-6 * q.max_norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, .. ProptestConfig::default() })]

    #[test]
    fn branch_point_count_is_n_times_n_plus_one(re in -8.0f64..8.0, im in -8.0f64..8.0) {
        let set = branch_points(&testbed(), C64::new(re, im), &Config::default()).unwrap();
        prop_assert_eq!(set.multiplicity_sum(), 6);
    }

    #[test]
    fn bound_table_monotone_in_constants(n in 2usize..=5, c1 in 0.05f64..0.9, c2 in 0.05f64..0.9) {
        let e = BoundExtras { alpha_len: Some(3.0), beta: Some(0.1), alpha_tilde_len: Some(2.0), v: Some(1.0), ..Default::default() };
        let base = bound_table(n, c1, c2, &e).unwrap();
        let up1 = bound_table(n, c1 * 1.05, c2, &e).unwrap();
        let up2 = bound_table(n, c1, c2 * 1.05, &e).unwrap();
        for name in ["r0", "nonlin", "x_n", "y_n", "uppi1", "uppi2", "uppi3"] {
            prop_assert!(up1.get(name).unwrap() < base.get(name).unwrap(), "{name} should fall with c'");
        }
        for name in ["delta0", "r_n", "det_lower", "lowerch", "pd_lower"] {
            prop_assert!(up1.get(name).unwrap() > base.get(name).unwrap(), "{name} should grow with c'");
        }
        prop_assert!(up2.get("uppi1").unwrap() < base.get("uppi1").unwrap());
        prop_assert!(up2.get("det_lower").unwrap() > base.get("det_lower").unwrap());
        prop_assert_eq!(bound_table(n, c1, c2, &e).unwrap(), base);
    }
}

#[test]
fn tracking_is_step_consistent() {
    let h = testbed();
    let cfg = Config::default();
    let path = PolyPath::new(vec![C64::new(0.5, 7.0), C64::new(4.0, 1.0), C64::new(-3.0, -2.0)]).unwrap();
    let coarse = track_branches_with_step(&h, &path, 1.0 / 64.0, &cfg).unwrap();
    let fine = track_branches_with_step(&h, &path, 1.0 / 128.0, &cfg).unwrap();
    let mut worst = 0.0f64;
    for (k, &tau) in coarse.taus.iter().enumerate() {
        let j = fine.taus.iter().position(|&s| (s - tau).abs() < 1e-15).expect("shared grid point");
        for (a, b) in coarse.states[k].points.iter().zip(&fine.states[j].points) {
            worst = worst.max((a[0] - b[0]).norm());
        }
    }
    assert!(worst < 1e-8, "labels disagree by {worst}");
}

#[test]
fn determinant_is_single_valued_around_all_critical_values() {
    let h = normalized_testbed();
    let ts = circle_samples(C64::new(0.0, 0.0), 3.5, 10, 0.3);
    let forms = FormTuple::lexicographic(2).forms;
    let s = determinant_samples(&h, &forms, &ts, &Config::default()).unwrap();
    assert!(s.loop_rel_change < 1e-6, "{}", s.loop_rel_change);
}

/// Monodromy around `a_i` acts as `delta -> delta + eps <delta, delta_i> delta_i` for a
/// single global sign `eps`; periods of four forms separate the classes.
#[test]
fn intersection_indices_match_monodromy() {
    let h = normalized_testbed();
    let cfg = Config::default();
    let (_, t0, values, _, cycles) = star_basis(&h, None, &cfg).unwrap();
    let m = intersection_matrix(&h, &cycles, &cfg).unwrap();
    let forms = FormTuple::lexicographic(2).forms;
    let periods: Vec<Vec<C64>> = cycles.iter().map(|c| integrate_forms(&h, c, &forms, &cfg).unwrap()).collect();
    let gap = values
        .iter()
        .enumerate()
        .flat_map(|(i, a)| values[i + 1..].iter().map(move |b| (a - b).norm()))
        .fold(f64::INFINITY, f64::min);
    let rho = 0.2 * gap;
    let mut agree = [true, true];
    for (i, &a) in values.iter().enumerate() {
        let u = (t0 - a) / (t0 - a).norm();
        let start = a + u * rho;
        let mut verts = vec![t0, start];
        for k in 1..=16 {
            verts.push(a + u * rho * C64::from_polar(1.0, 2.0 * PI * k as f64 / 16.0));
        }
        *verts.last_mut().unwrap() = start;
        verts.push(t0);
        let path = PolyPath::new(verts).unwrap();
        for (j, c) in cycles.iter().enumerate() {
            let moved = transport(&h, c, &path, &cfg).unwrap();
            let got = integrate_forms(&h, &moved, &forms, &cfg).unwrap();
            for (s, eps) in [1.0, -1.0].iter().enumerate() {
                let k = eps * m[j][i] as f64;
                let ok = got
                    .iter()
                    .zip(&periods[j])
                    .zip(&periods[i])
                    .all(|((g, pj), pi)| (g - (pj + pi * k)).norm() < 1e-6 * (1.0 + pj.norm() + pi.norm()));
                agree[s] &= ok;
            }
        }
    }
    assert!(agree[0] || agree[1], "no global sign reproduces the monodromy: {m:?}");
}
