//! The projection of a level curve `H = t` onto the x-axis: its discriminant, the branch
//! points, the sheets over a given `x` and continuation of branch points in `t`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::poly::BivariatePolynomial;
use crate::resultant;
use crate::univariate;

pub type C64 = Complex64;

/// Number of levels `n`, checking that `H` is monic-like in `y`.
pub fn level_degree(h: &BivariatePolynomial) -> Result<usize> {
    let deg = h.degree().ok_or(Error::ZeroPolynomial)?;
    if deg < 3 {
        return Err(Error::DegreeTooLow { found: deg, required: 3 });
    }
    if h.coeff(0, deg).norm() <= 1e-10 * h.coeff_scale() {
        return Err(Error::LeadingCoefficientVanishes);
    }
    Ok(deg - 1)
}

/// `D(x, t) = Res_y(H - t, dH/dy)` stored as `coeffs[i][k]` for `x^i t^k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscriminantCurve {
    pub coeffs: Vec<Vec<C64>>,
    pub degree_in_x: usize,
}

impl DiscriminantCurve {
    pub fn eval(&self, x: C64, t: C64) -> C64 {
        univariate::eval(&self.x_coeffs(t), x)
    }

    pub fn x_coeffs(&self, t: C64) -> Vec<C64> {
        self.coeffs.iter().map(|row| univariate::eval(row, t)).collect()
    }
}

/// y-coefficients of `H(x, .) - t`, of formal degree `n + 1`.
pub fn fiber_coeffs(h: &BivariatePolynomial, t: C64, x: C64) -> Vec<C64> {
    let n1 = h.degree().unwrap_or(0);
    let mut c = h.y_coeffs_at(x);
    c.resize(n1 + 1, C64::new(0.0, 0.0));
    c[0] -= t;
    c
}

fn discriminant_value(h: &BivariatePolynomial, t: C64, x: C64) -> C64 {
    let f = fiber_coeffs(h, t, x);
    let df = univariate::derivative(&f);
    resultant::sylvester(&f, &df)
}

pub fn discriminant_curve(h: &BivariatePolynomial) -> Result<DiscriminantCurve> {
    let n = level_degree(h)?;
    let nx = n * (n + 1) + 1;
    let nt = n + 2;
    let xs = resultant::circle_nodes(nx, 1.0);
    let ts = resultant::circle_nodes(nt, 1.0);
    // interpolate in t for every x-node, then in x for every t-power
    let by_x: Vec<Vec<C64>> = xs
        .iter()
        .map(|&x| {
            let vals: Vec<C64> = ts.iter().map(|&t| discriminant_value(h, t, x)).collect();
            resultant::interpolate_circle(&vals, 1.0)
        })
        .collect();
    let mut coeffs = vec![vec![C64::new(0.0, 0.0); nt]; nx];
    for k in 0..nt {
        let column: Vec<C64> = by_x.iter().map(|row| row[k]).collect();
        for (i, c) in resultant::interpolate_circle(&column, 1.0).into_iter().enumerate() {
            coeffs[i][k] = c;
        }
    }
    let scale = coeffs.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
    for c in coeffs.iter_mut().flatten() {
        if c.norm() <= 1e-12 * scale {
            *c = C64::new(0.0, 0.0);
        }
    }
    let degree_in_x = coeffs
        .iter()
        .rposition(|row| row.iter().any(|c| c.norm() > 0.0))
        .unwrap_or(0);
    Ok(DiscriminantCurve { coeffs, degree_in_x })
}

/// A generalized critical value of the projection together with the point of the
/// level curve above it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchPoint {
    pub x: C64,
    pub y: C64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchSet {
    pub t: C64,
    pub points: Vec<BranchPoint>,
    pub distinct_count: usize,
    pub cluster_tol: f64,
}

impl BranchSet {
    pub fn multiplicity_sum(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    pub fn xs(&self) -> Vec<C64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn is_simple(&self) -> bool {
        self.points.iter().all(|p| p.multiplicity == 1)
    }
}

/// Roots of `D(., t)` from a one-dimensional interpolation at the given `t`.
pub fn discriminant_roots(h: &BivariatePolynomial, t: C64, cfg: &Config) -> Result<Vec<C64>> {
    let n = level_degree(h)?;
    let count = n * (n + 1) + 1;
    let mut radius = 1.0;
    let mut roots = Vec::new();
    for _ in 0..2 {
        let nodes = resultant::circle_nodes(count, radius);
        let vals: Vec<C64> = nodes.iter().map(|&x| discriminant_value(h, t, x)).collect();
        let coeffs = univariate::trim(&resultant::interpolate_circle(&vals, radius), 1e-13);
        roots = univariate::roots(&coeffs, cfg.tol_root);
        let mut mods: Vec<f64> = roots.iter().map(|r| r.norm()).collect();
        mods.sort_by(f64::total_cmp);
        let next = mods.get(mods.len() / 2).copied().unwrap_or(1.0).max(1e-3);
        if (next / radius - 1.0).abs() < 0.5 {
            break;
        }
        radius = next;
    }
    Ok(roots)
}

/// Greedy clustering, largest multiplicity first: `k` roots form one cluster when they
/// are the `k` nearest to one of them, have diameter at most
/// `spread * max(tol, 10 * 1e-13^(1/k))` (the perturbation size of a `k`-fold root) and
/// the next root is farther than twice that diameter.
pub fn cluster_roots(roots: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let spread = diameter(roots)
        .max(roots.iter().map(|r| r.norm()).fold(0.0, f64::max))
        .max(1e-300);
    let allow = |k: usize| spread * tol.max(10.0 * 1e-13f64.powf(1.0 / k as f64));
    let mut free: Vec<C64> = roots.to_vec();
    let mut out: Vec<(C64, usize)> = Vec::new();
    for k in (2..=roots.len()).rev() {
        let mut i = 0;
        while i < free.len() {
            if free.len() < k {
                break;
            }
            let mut order: Vec<usize> = (0..free.len()).collect();
            order.sort_by(|&a, &b| (free[a] - free[i]).norm().total_cmp(&(free[b] - free[i]).norm()));
            let group: Vec<C64> = order[..k].iter().map(|&j| free[j]).collect();
            let diam = diameter(&group);
            let isolated = order
                .get(k)
                .map_or(true, |&j| (free[j] - free[i]).norm() > 2.0 * diam);
            if diam <= allow(k) && isolated {
                out.push((group.iter().sum::<C64>() / k as f64, k));
                let mut taken: Vec<usize> = order[..k].to_vec();
                taken.sort_unstable_by(|a, b| b.cmp(a));
                for j in taken {
                    free.remove(j);
                }
                i = 0;
            } else {
                i += 1;
            }
        }
    }
    out.extend(free.into_iter().map(|r| (r, 1)));
    out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    out
}

fn diameter(pts: &[C64]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max((pts[i] - pts[j]).norm());
        }
    }
    d
}

/// Newton iteration on `(H - t, dH/dy) = 0`; `None` if it does not converge.
pub fn newton_branch(h: &BivariatePolynomial, hy: &BivariatePolynomial, t: C64, z: [C64; 2]) -> Option<[C64; 2]> {
    let mut z = z;
    let scale = 1.0 + h.coeff_scale();
    for it in 0..40 {
        let (f, g) = h.eval_and_gradient(z[0], z[1]);
        let f = f - t;
        let (q, gq) = hy.eval_and_gradient(z[0], z[1]);
        let det = g[0] * gq[1] - g[1] * gq[0];
        if det.norm() == 0.0 || !det.re.is_finite() {
            return None;
        }
        let dx = (f * gq[1] - q * g[1]) / det;
        let dy = (g[0] * q - gq[0] * f) / det;
        z = [z[0] - dx, z[1] - dy];
        let size = 1.0 + z[0].norm() + z[1].norm();
        if dx.norm() + dy.norm() <= 1e-14 * size {
            let (f, _) = h.eval_and_gradient(z[0], z[1]);
            let r = (f - t).norm() + hy.eval(z[0], z[1]).norm();
            return (r <= 1e-9 * scale * size.powi(h.degree().unwrap_or(1) as i32)).then_some(z);
        }
        if it > 30 && dx.norm() + dy.norm() > 1e-6 * size {
            return None;
        }
    }
    None
}

/// The y above a branch point: the root of `dH/dy(x, .)` closest to the level.
fn branch_y(h: &BivariatePolynomial, hy: &BivariatePolynomial, t: C64, x: C64, cfg: &Config) -> C64 {
    let c = hy.y_coeffs_at(x);
    let dy = hy.degree_in_y().unwrap_or(0);
    univariate::roots(&c[..=dy], cfg.tol_root)
        .into_iter()
        .min_by(|a, b| (h.eval(x, *a) - t).norm().total_cmp(&(h.eval(x, *b) - t).norm()))
        .unwrap_or(C64::new(0.0, 0.0))
}

pub fn branch_points(h: &BivariatePolynomial, t: C64, cfg: &Config) -> Result<BranchSet> {
    let roots = discriminant_roots(h, t, cfg)?;
    let hy = h.partial_y();
    let clusters = cluster_roots(&roots, cfg.tol_cluster);
    let points: Vec<BranchPoint> = clusters
        .into_iter()
        .map(|(x, k)| {
            let y = branch_y(h, &hy, t, x, cfg);
            let z = if k == 1 {
                newton_branch(h, &hy, t, [x, y]).unwrap_or([x, y])
            } else {
                [x, y]
            };
            BranchPoint { x: z[0], y: z[1], multiplicity: k }
        })
        .collect();
    Ok(BranchSet {
        t,
        distinct_count: points.len(),
        points,
        cluster_tol: cfg.tol_cluster,
    })
}

/// The `n + 1` roots of `H(x, .) = t`.
pub fn sheets_at(h: &BivariatePolynomial, t: C64, x: C64, cfg: &Config) -> Vec<C64> {
    let c = fiber_coeffs(h, t, x);
    // y = s w with s the Fujiwara radius keeps every coefficient comparable at large |x|
    let top = c.len() - 1;
    let lead = c[top].norm();
    let s = (0..top)
        .map(|k| (c[k].norm() / lead).powf(1.0 / (top - k) as f64))
        .fold(0.0, f64::max)
        .max(1.0);
    let scaled: Vec<C64> = c.iter().enumerate().map(|(k, &a)| a * s.powi(k as i32 - top as i32)).collect();
    univariate::roots(&scaled, cfg.tol_root).into_iter().map(|w| w * s).collect()
}

/// Smallest pairwise distance in a set.
pub fn min_separation(pts: &[C64]) -> f64 {
    let mut d = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.min((pts[i] - pts[j]).norm());
        }
    }
    d
}

/// Labelled branch points at one value of `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchState {
    pub t: C64,
    pub points: Vec<[C64; 2]>,
}

impl BranchState {
    /// Labelled simple branch points; fails when two of them coincide.
    pub fn new(h: &BivariatePolynomial, t: C64, tau: f64, cfg: &Config) -> Result<Self> {
        let n = level_degree(h)?;
        let set = branch_points(h, t, cfg)?;
        if set.distinct_count != n * (n + 1) {
            return Err(Error::NotCriticallyRegular(tau));
        }
        Ok(Self {
            t,
            points: set.points.iter().map(|p| [p.x, p.y]).collect(),
        })
    }

    pub fn xs(&self) -> Vec<C64> {
        self.points.iter().map(|p| p[0]).collect()
    }
}

/// Predictor-corrector step of every branch point from `state.t` to `t_to`. Returns
/// `None` when a corrector fails or some displacement is not small against the
/// separation of the branch points.
pub fn try_step(h: &BivariatePolynomial, hy: &BivariatePolynomial, state: &BranchState, t_to: C64) -> Option<BranchState> {
    let dt = t_to - state.t;
    let sep = min_separation(&state.xs());
    let mut out = Vec::with_capacity(state.points.len());
    for z in &state.points {
        let (_, g) = h.eval_and_gradient(z[0], z[1]);
        let (_, gq) = hy.eval_and_gradient(z[0], z[1]);
        // J dz = (dt, 0)
        let det = g[0] * gq[1] - g[1] * gq[0];
        if det.norm() == 0.0 {
            return None;
        }
        let pred = [z[0] + dt * gq[1] / det, z[1] - dt * gq[0] / det];
        let w = newton_branch(h, hy, t_to, pred)?;
        if (w[0] - z[0]).norm() >= 0.25 * sep {
            return None;
        }
        out.push(w);
    }
    let next = BranchState { t: t_to, points: out };
    (min_separation(&next.xs()) >= 0.5 * sep).then_some(next)
}

/// Piecewise-linear path in the t-plane parametrised by normalised arclength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyPath {
    pub vertices: Vec<C64>,
}

impl PolyPath {
    pub fn new(vertices: Vec<C64>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidPath("a path needs at least two vertices".into()));
        }
        Ok(Self { vertices })
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Point at normalised arclength `tau in [0, 1]`.
    pub fn at(&self, tau: f64) -> C64 {
        let total = self.length();
        if total == 0.0 {
            return self.vertices[0];
        }
        let mut s = tau.clamp(0.0, 1.0) * total;
        for w in self.vertices.windows(2) {
            let len = (w[1] - w[0]).norm();
            if s <= len && len > 0.0 {
                return w[0] + (w[1] - w[0]) * (s / len);
            }
            s -= len;
        }
        *self.vertices.last().expect("nonempty")
    }

    /// Normalised arclength of every vertex.
    pub fn vertex_taus(&self) -> Vec<f64> {
        let total = self.length().max(f64::MIN_POSITIVE);
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for w in self.vertices.windows(2) {
            acc += (w[1] - w[0]).norm();
            out.push(acc / total);
        }
        out
    }
}

/// Branch points along a path; `states[k]` sits at `taus[k]` and labels are stable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectories {
    pub taus: Vec<f64>,
    pub states: Vec<BranchState>,
}

impl Trajectories {
    /// x-plane polyline of one label.
    pub fn polyline(&self, label: usize) -> Vec<C64> {
        self.states.iter().map(|s| s.points[label][0]).collect()
    }

    pub fn labels(&self) -> usize {
        self.states.first().map_or(0, |s| s.points.len())
    }

    /// Position of every label at `tau`, by linear interpolation between stored states.
    pub fn x_at(&self, tau: f64) -> Vec<C64> {
        let k = self.taus.partition_point(|&s| s < tau).min(self.taus.len() - 1);
        if k == 0 || self.taus[k] == tau {
            return self.states[k].xs();
        }
        let (a, b) = (self.taus[k - 1], self.taus[k]);
        let w = (tau - a) / (b - a);
        self.states[k - 1]
            .xs()
            .iter()
            .zip(self.states[k].xs())
            .map(|(p, q)| p + (q - p) * w)
            .collect()
    }
}

/// Continues an initial state from `tau_from` to `tau_to` with step control, calling
/// `visit` on every accepted state.
pub fn advance<F>(
    h: &BivariatePolynomial,
    hy: &BivariatePolynomial,
    path: &PolyPath,
    start: BranchState,
    tau_from: f64,
    tau_to: f64,
    max_step: f64,
    mut visit: F,
) -> Result<BranchState>
where
    F: FnMut(f64, &BranchState),
{
    let length = path.length().max(f64::MIN_POSITIVE);
    let min_step = 2f64.powi(-20);
    let mut corners: Vec<f64> = path
        .vertex_taus()
        .into_iter()
        .filter(|&s| (s - tau_from) * (tau_to - s) > 0.0)
        .collect();
    if tau_to < tau_from {
        corners.reverse();
    }
    let dir = (tau_to - tau_from).signum();
    let mut state = start;
    let mut tau = tau_from;
    let mut step = max_step;
    let _ = length;
    while (tau_to - tau) * dir > 0.0 {
        let mut target = tau + dir * step;
        if (tau_to - target) * dir < 0.0 {
            target = tau_to;
        }
        if let Some(&c) = corners.iter().find(|&&c| (c - tau) * dir > 1e-15) {
            if (target - c) * dir > 0.0 {
                target = c;
            }
        }
        match try_step(h, hy, &state, path.at(target)) {
            Some(next) => {
                state = next;
                tau = target;
                visit(tau, &state);
                step = (step * 2.0).min(max_step);
            }
            None => {
                step *= 0.5;
                if step < min_step {
                    let sep = min_separation(&state.xs());
                    return Err(if sep < 1e-6 {
                        Error::NotCriticallyRegular(tau)
                    } else {
                        Error::TrackingFailed(tau)
                    });
                }
            }
        }
    }
    Ok(state)
}

/// Continuous labelling of the `n(n+1)` branch points along a path.
pub fn track_branches(h: &BivariatePolynomial, path: &PolyPath, cfg: &Config) -> Result<Trajectories> {
    track_branches_with_step(h, path, 1.0 / 256.0, cfg)
}

pub fn track_branches_with_step(h: &BivariatePolynomial, path: &PolyPath, step: f64, cfg: &Config) -> Result<Trajectories> {
    let hy = h.partial_y();
    let start = BranchState::new(h, path.at(0.0), 0.0, cfg)?;
    let mut taus = vec![0.0];
    let mut states = vec![start.clone()];
    // fixed sample grid so runs with different steps can be compared
    let grid: Vec<f64> = {
        let mut g: Vec<f64> = (1..=((1.0 / step).ceil() as usize)).map(|k| (k as f64 * step).min(1.0)).collect();
        g.extend(path.vertex_taus());
        g.retain(|&s| s > 0.0);
        g.sort_by(f64::total_cmp);
        g.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        g
    };
    let mut state = start;
    let mut tau = 0.0;
    for &next in &grid {
        state = advance(h, &hy, path, state, tau, next, next - tau, |_, _| {})?;
        tau = next;
        taus.push(tau);
        states.push(state.clone());
    }
    Ok(Trajectories { taus, states })
}
