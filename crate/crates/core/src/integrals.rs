//! Abelian integrals of monomial forms over cycles, the period matrix and samples of
//! its determinant.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::Config;
use crate::cycles::{star_basis, transport, Arc, ArcSheet, CanonicalCycle, PLPath};
use crate::error::{Error, Result};
use crate::genericity::CriticalData;
use crate::linalg;
use crate::poly::{BivariatePolynomial, MonomialForm};

pub type C64 = Complex64;

/// Gauss-Legendre rule on `[-1, 1]` from the Jacobi matrix eigenproblem.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        let jac = DMatrix::<f64>::from_fn(order, order, |i, j| {
            if i + 1 == j || j + 1 == i {
                let k = i.max(j) as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }
}

/// Values and `|values|` of a panel rule on `[a, b]`.
fn panel<F>(rule: &GaussLegendre, a: f64, b: f64, f: &mut F) -> Result<(Vec<C64>, f64)>
where
    F: FnMut(f64) -> Result<Vec<C64>>,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc: Vec<C64> = Vec::new();
    let mut abs = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let v = f(mid + half * x)?;
        if acc.is_empty() {
            acc = vec![C64::new(0.0, 0.0); v.len()];
        }
        for (s, vi) in acc.iter_mut().zip(&v) {
            *s += vi * (w * half);
            abs += vi.norm() * w * half;
        }
    }
    Ok((acc, abs))
}

/// Adaptive composite Gauss-Legendre on `[0, 1]` of a vector integrand: a panel is
/// accepted when it agrees with its two halves within `quad_tol` of the absolute
/// integral.
pub fn adaptive<F>(rule: &GaussLegendre, mut f: F, cfg: &Config) -> Result<Vec<C64>>
where
    F: FnMut(f64) -> Result<Vec<C64>>,
{
    let (whole, abs) = panel(rule, 0.0, 1.0, &mut f)?;
    let scale = abs.max(f64::MIN_POSITIVE);
    let mut stack = vec![(0.0, 1.0, whole, 0usize)];
    let mut total: Vec<C64> = Vec::new();
    while let Some((a, b, est, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let (l, _) = panel(rule, a, m, &mut f)?;
        let (r, _) = panel(rule, m, b, &mut f)?;
        let refined: Vec<C64> = l.iter().zip(&r).map(|(x, y)| x + y).collect();
        let err = refined.iter().zip(&est).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        if err <= cfg.quad_tol * scale * (b - a).max(1e-3) {
            if total.is_empty() {
                total = vec![C64::new(0.0, 0.0); refined.len()];
            }
            for (s, v) in total.iter_mut().zip(&refined) {
                *s += v;
            }
        } else if depth >= cfg.quad_max_depth {
            return Err(Error::RefinementExhausted(format!(
                "quadrature did not converge on [{a}, {b}] after {depth} bisections"
            )));
        } else {
            stack.push((a, m, l, depth + 1));
            stack.push((m, b, r, depth + 1));
        }
    }
    Ok(total)
}

/// `int f(x, y, dx, dy)` along one arc in its traversal direction.
pub fn integrate_arc<F>(h: &BivariatePolynomial, t: C64, arc: &Arc, rule: &GaussLegendre, f: F, cfg: &Config) -> Result<Vec<C64>>
where
    F: Fn(C64, C64, C64, C64) -> Vec<C64>,
{
    let sheet = ArcSheet::new(h, t, *arc, cfg.arc_samples, cfg)?;
    let mut out = adaptive(
        rule,
        |u| {
            let x = arc.x_at(u);
            let y = sheet.y(u)?;
            let dx = arc.dx_du(u);
            let (_, g) = h.eval_and_gradient(x, y);
            let dy = -g[0] / g[1] * dx;
            Ok(f(x, y, dx, dy))
        },
        cfg,
    )?;
    if arc.orientation < 0 {
        for v in &mut out {
            *v = -*v;
        }
    }
    Ok(out)
}

/// `int f(x, y, dx, dy)` over a cycle.
pub fn integrate_cycle<F>(h: &BivariatePolynomial, c: &CanonicalCycle, f: F, cfg: &Config) -> Result<Vec<C64>>
where
    F: Fn(C64, C64, C64, C64) -> Vec<C64>,
{
    let rule = GaussLegendre::new(cfg.quad_order);
    let mut total: Vec<C64> = Vec::new();
    for arc in &c.arcs {
        let v = integrate_arc(h, c.t, arc, &rule, &f, cfg)?;
        if total.is_empty() {
            total = v;
        } else {
            for (s, x) in total.iter_mut().zip(v) {
                *s += x;
            }
        }
    }
    Ok(total)
}

/// `int_c x^l y^{m+1} dx` for each form.
pub fn integrate_forms(h: &BivariatePolynomial, c: &CanonicalCycle, forms: &[MonomialForm], cfg: &Config) -> Result<Vec<C64>> {
    integrate_cycle(h, c, |x, y, dx, _| forms.iter().map(|w| w.integrand(x, y) * dx).collect(), cfg)
}

pub fn integrate_form(h: &BivariatePolynomial, c: &CanonicalCycle, form: &MonomialForm, cfg: &Config) -> Result<C64> {
    Ok(integrate_forms(h, c, std::slice::from_ref(form), cfg)?[0])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodMatrix {
    pub t: C64,
    /// `entries[i][j] = int_{delta_j} omega_i`.
    pub entries: Vec<Vec<C64>>,
    pub det: C64,
}

pub fn period_matrix(h: &BivariatePolynomial, cycles: &[CanonicalCycle], forms: &[MonomialForm], cfg: &Config) -> Result<PeriodMatrix> {
    if forms.len() != cycles.len() {
        return Err(Error::TupleSize {
            expected: cycles.len(),
            found: forms.len(),
        });
    }
    let t = cycles.first().map_or(C64::new(0.0, 0.0), |c| c.t);
    if cycles.iter().any(|c| (c.t - t).norm() > 1e-12 * (1.0 + t.norm())) {
        return Err(Error::LevelMismatch);
    }
    let columns: Vec<Vec<C64>> = cycles
        .iter()
        .map(|c| integrate_forms(h, c, forms, cfg))
        .collect::<Result<_>>()?;
    let entries: Vec<Vec<C64>> = (0..forms.len())
        .map(|i| columns.iter().map(|col| col[i]).collect())
        .collect();
    let det = linalg::det(&entries);
    Ok(PeriodMatrix { t, entries, det })
}

/// Transports every cycle along `path`.
pub fn transport_all(h: &BivariatePolynomial, cycles: &[CanonicalCycle], path: &PLPath, cfg: &Config) -> Result<Vec<CanonicalCycle>> {
    cycles.iter().map(|c| transport(h, c, path, cfg)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeterminantSamples {
    pub ts: Vec<C64>,
    pub values: Vec<C64>,
    /// Least-squares fit of degree `n^2`, ascending.
    pub fit: Vec<C64>,
    pub fit_residual: f64,
    /// `Delta` at the first sample recomputed after transporting the basis once around
    /// the circle.
    pub loop_value: C64,
    pub loop_rel_change: f64,
}

/// Sample points `center + radius exp(i (offset + 2 pi k / count))`.
pub fn circle_samples(center: C64, radius: f64, count: usize, offset: f64) -> Vec<C64> {
    (0..count)
        .map(|k| center + C64::from_polar(radius, offset + 2.0 * PI * k as f64 / count as f64))
        .collect()
}

/// The default sample circle: twice the radius of the disc enclosing the critical values.
pub fn default_samples(crit: &CriticalData, count: usize) -> Vec<C64> {
    circle_samples(
        crit.enclosing_disc.center,
        2.0 * crit.enclosing_disc.radius,
        count,
        PI / 12.0,
    )
}

/// `Delta(t)` along a closed polygon of samples: one star basis at the first sample,
/// transported along the chords.
pub fn determinant_samples(h: &BivariatePolynomial, forms: &[MonomialForm], ts: &[C64], cfg: &Config) -> Result<DeterminantSamples> {
    if ts.is_empty() {
        return Err(Error::InvalidInput("no sample points".into()));
    }
    let (_, _, _, _, mut basis) = star_basis(h, Some(ts[0]), cfg)?;
    let mut values = Vec::with_capacity(ts.len());
    for k in 0..ts.len() {
        if k > 0 {
            let chord = PLPath::new(vec![ts[k - 1], ts[k]])?;
            basis = transport_all(h, &basis, &chord, cfg)?;
        }
        values.push(period_matrix(h, &basis, forms, cfg)?.det);
    }
    let closing = PLPath::new(vec![*ts.last().expect("nonempty"), ts[0]])?;
    let back = transport_all(h, &basis, &closing, cfg)?;
    let loop_value = period_matrix(h, &back, forms, cfg)?.det;
    let (fit, fit_residual) = linalg::polyfit(ts, &values, forms.len());
    Ok(DeterminantSamples {
        loop_rel_change: (loop_value - values[0]).norm() / values[0].norm().max(f64::MIN_POSITIVE),
        ts: ts.to_vec(),
        values,
        fit,
        fit_residual,
        loop_value,
    })
}

/// `|Delta(a + eps u)| / |Delta(a + eps u / 10)|` with `u` pointing from `a` back to the
/// base point of the star: the basis is transported along the path of `a`.
pub fn linear_decay_ratio(h: &BivariatePolynomial, forms: &[MonomialForm], t0: C64, a: C64, eps: f64, cfg: &Config) -> Result<f64> {
    let (_, _, _, _, basis) = star_basis(h, Some(t0), cfg)?;
    let u = (t0 - a) / (t0 - a).norm();
    let t1 = a + u * eps;
    let t2 = a + u * (eps / 10.0);
    let b1 = transport_all(h, &basis, &PLPath::new(vec![t0, t1])?, cfg)?;
    let d1 = period_matrix(h, &b1, forms, cfg)?.det;
    let b2 = transport_all(h, &b1, &PLPath::new(vec![t1, t2])?, cfg)?;
    let d2 = period_matrix(h, &b2, forms, cfg)?.det;
    Ok(d1.norm() / d2.norm())
}

/// `(int_c d(x^2 y), int_c dH)` evaluated as line integrals; both vanish on a closed
/// cycle.
pub fn exact_form_check(h: &BivariatePolynomial, c: &CanonicalCycle, cfg: &Config) -> Result<(C64, C64)> {
    let r = integrate_cycle(
        h,
        c,
        |x, y, dx, dy| {
            let (_, g) = h.eval_and_gradient(x, y);
            vec![x * y * 2.0 * dx + x * x * dy, g[0] * dx + g[1] * dy]
        },
        cfg,
    )?;
    Ok((r[0], r[1]))
}
