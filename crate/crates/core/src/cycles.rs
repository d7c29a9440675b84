//! Vanishing cycles on a level curve `S_t = {H = t}` represented as closed chains of
//! lifted segments between branch points. Cycles are born at a critical value and
//! continued backward along a path; an edge is split when a foreign branch point comes
//! close to its interior.

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::genericity::{critical_data, CriticalData};
use crate::poly::BivariatePolynomial;
use crate::projection::{self, min_separation, newton_branch, sheets_at, try_step, BranchState, PolyPath};

pub type C64 = Complex64;

pub type PLPath = PolyPath;

/// Lift of the segment `[x0, x1]` to the sheet through `(midpoint, ymid)`. With
/// orientation `+1` it is traversed from `x0` to `x1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub x0: C64,
    pub x1: C64,
    pub ymid: C64,
    #[serde(rename = "or")]
    pub orientation: i8,
}

impl Arc {
    /// `x(u) = x0 + (x1 - x0) sin^2(pi u / 2)`; the square-root behaviour of the sheet
    /// at a branch endpoint becomes analytic in `u`.
    pub fn x_at(&self, u: f64) -> C64 {
        let s = (0.5 * PI * u).sin();
        self.x0 + (self.x1 - self.x0) * (s * s)
    }

    pub fn dx_du(&self, u: f64) -> C64 {
        (self.x1 - self.x0) * (0.5 * PI * (PI * u).sin())
    }

    pub fn midpoint(&self) -> C64 {
        (self.x0 + self.x1) * 0.5
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalCycle {
    pub t: C64,
    pub arcs: Vec<Arc>,
    pub arc_couple_count: usize,
    /// Edge splits performed while continuing the cycle.
    pub events: usize,
    pub source_path: Option<PLPath>,
}

impl CanonicalCycle {
    pub fn from_arcs(t: C64, arcs: Vec<Arc>) -> Self {
        Self {
            t,
            arc_couple_count: arcs.len() / 2,
            arcs,
            events: 0,
            source_path: None,
        }
    }

    /// The same cycle with the opposite orientation.
    pub fn reversed(&self) -> Self {
        let mut c = self.clone();
        c.arcs.reverse();
        for a in &mut c.arcs {
            a.orientation = -a.orientation;
        }
        c
    }
}

fn lex(a: C64, b: C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Index of the root nearest to `pred` when it is unambiguous: the runner-up is more
/// than `ratio` times farther away.
fn match_root(roots: &[C64], pred: C64, ratio: f64) -> Option<C64> {
    let mut best = (f64::INFINITY, C64::new(0.0, 0.0));
    let mut second = f64::INFINITY;
    for &r in roots {
        let d = (r - pred).norm();
        if d < best.0 {
            second = best.0;
            best = (d, r);
        } else if d < second {
            second = d;
        }
    }
    (best.0 * ratio < second || (best.0 == 0.0 && second > 0.0)).then_some(best.1)
}

/// `dy/dx` along `H = t`.
fn slope(h: &BivariatePolynomial, x: C64, y: C64) -> Option<C64> {
    let (_, g) = h.eval_and_gradient(x, y);
    (g[1].norm() > 1e-300).then(|| -g[0] / g[1])
}

/// Continues a sheet of `H = t` from `(x(s0), y0)` to `x(s1)` along a parametrised curve
/// in the x-plane.
fn continue_on<X, D>(
    h: &BivariatePolynomial,
    t: C64,
    x_of: X,
    dx_of: D,
    s0: f64,
    y0: C64,
    s1: f64,
    cfg: &Config,
) -> Result<C64>
where
    X: Fn(f64) -> C64,
    D: Fn(f64) -> C64,
{
    let total = s1 - s0;
    if total == 0.0 {
        return Ok(y0);
    }
    let mut s = s0;
    let mut y = y0;
    let mut step = total;
    let min_step = total.abs() * 1e-12;
    while (s1 - s) * total.signum() > 0.0 {
        let next = if (s1 - s).abs() <= step.abs() { s1 } else { s + step };
        let pred = match slope(h, x_of(s), y) {
            Some(k) if k.re.is_finite() => y + k * dx_of(s) * (next - s),
            _ => y,
        };
        let roots = sheets_at(h, t, x_of(next), cfg);
        match match_root(&roots, pred, cfg.tol_match) {
            Some(r) => {
                s = next;
                y = r;
                step = (step * 2.0).clamp(-total.abs(), total.abs());
            }
            None => {
                step *= 0.5;
                if step.abs() < min_step {
                    return Err(Error::RefinementExhausted(format!(
                        "sheet continuation stalled at x = {}",
                        x_of(s)
                    )));
                }
            }
        }
    }
    Ok(y)
}

/// Continues a sheet along the straight segment `[xa, xb]`.
pub fn continue_segment(h: &BivariatePolynomial, t: C64, xa: C64, xb: C64, ya: C64, cfg: &Config) -> Result<C64> {
    continue_on(h, t, |s| xa + (xb - xa) * s, |_| xb - xa, 0.0, ya, 1.0, cfg)
}

/// The value of a sheet at a branch endpoint; a double root is refined on the
/// ramification system.
fn endpoint_y(h: &BivariatePolynomial, hy: &BivariatePolynomial, t: C64, x: C64, y_near: C64, cfg: &Config) -> C64 {
    let roots = sheets_at(h, t, x, cfg);
    let mut sorted = roots.clone();
    sorted.sort_by(|a, b| (a - y_near).norm().total_cmp(&(b - y_near).norm()));
    let y = sorted[0];
    let scale = 1.0 + y.norm();
    let ramified = sorted[1..].iter().any(|r| (r - y).norm() < 1e-4 * scale);
    if ramified {
        if let Some(z) = newton_branch(h, hy, t, [x, y]) {
            if (z[0] - x).norm() < 1e-9 * (1.0 + x.norm()) {
                return z[1];
            }
        }
        // average of the pair straddling the double root
        let pair: Vec<C64> = sorted.iter().filter(|r| (*r - y).norm() < 1e-4 * scale).copied().collect();
        return pair.iter().sum::<C64>() / pair.len() as f64;
    }
    y
}

/// A sheet of one arc sampled at `u_k = k / samples`, with endpoint values.
#[derive(Clone, Debug)]
pub struct ArcSheet<'a> {
    h: &'a BivariatePolynomial,
    t: C64,
    pub arc: Arc,
    pub us: Vec<f64>,
    pub ys: Vec<C64>,
    cfg: &'a Config,
}

impl<'a> ArcSheet<'a> {
    pub fn new(h: &'a BivariatePolynomial, t: C64, arc: Arc, samples: usize, cfg: &'a Config) -> Result<Self> {
        let samples = samples.max(4) & !1;
        let hy = h.partial_y();
        let mid = samples / 2;
        let us: Vec<f64> = (0..=samples).map(|k| k as f64 / samples as f64).collect();
        let mut ys = vec![C64::new(0.0, 0.0); samples + 1];
        let roots = sheets_at(h, t, arc.midpoint(), cfg);
        ys[mid] = *roots
            .iter()
            .min_by(|a, b| (*a - arc.ymid).norm().total_cmp(&(*b - arc.ymid).norm()))
            .ok_or_else(|| Error::InvalidInput("empty fiber".into()))?;
        let x_of = |u: f64| arc.x_at(u);
        let dx_of = |u: f64| arc.dx_du(u);
        for k in mid + 1..samples {
            ys[k] = continue_on(h, t, x_of, dx_of, us[k - 1], ys[k - 1], us[k], cfg)?;
        }
        for k in (1..mid).rev() {
            ys[k] = continue_on(h, t, x_of, dx_of, us[k + 1], ys[k + 1], us[k], cfg)?;
        }
        ys[samples] = endpoint_y(h, &hy, t, arc.x1, ys[samples - 1], cfg);
        ys[0] = endpoint_y(h, &hy, t, arc.x0, ys[1], cfg);
        Ok(Self { h, t, arc, us, ys, cfg })
    }

    /// Sheet value at `u in (0, 1)`, continued from the nearest interior sample.
    pub fn y(&self, u: f64) -> Result<C64> {
        let last = self.us.len() - 1;
        let k = ((u * last as f64).round() as usize).clamp(1, last - 1);
        let arc = self.arc;
        continue_on(self.h, self.t, |s| arc.x_at(s), |s| arc.dx_du(s), self.us[k], self.ys[k], u, self.cfg)
    }

    pub fn start(&self) -> [C64; 2] {
        [self.arc.x0, self.ys[0]]
    }

    pub fn end(&self) -> [C64; 2] {
        [self.arc.x1, *self.ys.last().expect("nonempty")]
    }

    pub fn points(&self) -> Vec<[C64; 2]> {
        self.us.iter().zip(&self.ys).map(|(&u, &y)| [self.arc.x_at(u), y]).collect()
    }
}

/// The closed polyline of a cycle in `C^2`, in traversal order, first point not repeated.
pub fn cycle_polyline(h: &BivariatePolynomial, c: &CanonicalCycle, samples: usize, cfg: &Config) -> Result<Vec<[C64; 2]>> {
    let mut out = Vec::new();
    for arc in &c.arcs {
        let mut pts = ArcSheet::new(h, c.t, *arc, samples, cfg)?.points();
        if arc.orientation < 0 {
            pts.reverse();
        }
        pts.pop();
        out.extend(pts);
    }
    Ok(out)
}

/// Largest mismatch between the end of one arc and the start of the next.
pub fn closure_error(h: &BivariatePolynomial, c: &CanonicalCycle, cfg: &Config) -> Result<f64> {
    let ends: Vec<([C64; 2], [C64; 2])> = c
        .arcs
        .iter()
        .map(|a| {
            let s = ArcSheet::new(h, c.t, *a, cfg.arc_samples, cfg)?;
            Ok(if a.orientation >= 0 { (s.start(), s.end()) } else { (s.end(), s.start()) })
        })
        .collect::<Result<_>>()?;
    let mut err: f64 = 0.0;
    for k in 0..ends.len() {
        let (_, e) = ends[k];
        let (s, _) = ends[(k + 1) % ends.len()];
        err = err.max((e[0] - s[0]).norm() + (e[1] - s[1]).norm());
    }
    Ok(err)
}

fn polyline_length(pts: &[[C64; 2]]) -> f64 {
    (0..pts.len())
        .map(|k| {
            let a = pts[k];
            let b = pts[(k + 1) % pts.len()];
            ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt()
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleMetrics {
    /// Richardson-extrapolated length in `C^2`.
    pub length: f64,
    /// Polyline lengths at `arc_samples` and twice as many samples per arc.
    pub length_coarse: f64,
    pub length_fine: f64,
    pub m: usize,
    pub contained: bool,
    pub closure_error: f64,
}

pub fn cycle_metrics(h: &BivariatePolynomial, c: &CanonicalCycle, bidisc: (f64, f64), cfg: &Config) -> Result<CycleMetrics> {
    let coarse = cycle_polyline(h, c, cfg.arc_samples, cfg)?;
    let fine = cycle_polyline(h, c, 2 * cfg.arc_samples, cfg)?;
    let (lc, lf) = (polyline_length(&coarse), polyline_length(&fine));
    let contained = fine.iter().all(|p| p[0].norm() <= bidisc.0 && p[1].norm() <= bidisc.1);
    Ok(CycleMetrics {
        length: (4.0 * lf - lc) / 3.0,
        length_coarse: lc,
        length_fine: lf,
        m: c.arc_couple_count,
        contained,
        closure_error: closure_error(h, c, cfg)?,
    })
}

/// An arc over the edge between two labelled branch points.
#[derive(Clone, Copy, Debug, PartialEq)]
struct LiveArc {
    p: usize,
    q: usize,
    ymid: C64,
    or: i8,
}

struct Live {
    state: BranchState,
    arcs: Vec<LiveArc>,
    events: usize,
}

struct Engine<'a> {
    h: &'a BivariatePolynomial,
    hy: BivariatePolynomial,
    cfg: &'a Config,
}

/// Position of `r` in the frame where `p = 0` and `q = 1`.
fn frame(xp: C64, xq: C64, xr: C64) -> C64 {
    (xr - xp) / (xq - xp)
}

impl<'a> Engine<'a> {
    fn new(h: &'a BivariatePolynomial, cfg: &'a Config) -> Self {
        Self { h, hy: h.partial_y(), cfg }
    }

    fn mid(state: &BranchState, a: &LiveArc) -> C64 {
        (state.points[a.p][0] + state.points[a.q][0]) * 0.5
    }

    fn edges(arcs: &[LiveArc]) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = arcs.iter().map(|a| (a.p.min(a.q), a.p.max(a.q))).collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Some foreign branch point passed through the open edge during the step.
    fn jumped(old: &BranchState, new: &BranchState, arcs: &[LiveArc]) -> bool {
        for (p, q) in Self::edges(arcs) {
            for r in 0..old.points.len() {
                if r == p || r == q {
                    continue;
                }
                let w0 = frame(old.points[p][0], old.points[q][0], old.points[r][0]);
                let w1 = frame(new.points[p][0], new.points[q][0], new.points[r][0]);
                if w0.im * w1.im < 0.0 {
                    let lam = w0.im / (w0.im - w1.im);
                    let re = w0.re + lam * (w1.re - w0.re);
                    if re > 0.0 && re < 1.0 {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn update_arcs(&self, old: &BranchState, new: &BranchState, arcs: &[LiveArc]) -> Option<Vec<LiveArc>> {
        let dt = new.t - old.t;
        arcs.iter()
            .map(|a| {
                let m0 = Self::mid(old, a);
                let m1 = Self::mid(new, a);
                let (_, g) = self.h.eval_and_gradient(m0, a.ymid);
                let pred = if g[1].norm() > 0.0 { a.ymid + (dt - g[0] * (m1 - m0)) / g[1] } else { a.ymid };
                let roots = sheets_at(self.h, new.t, m1, self.cfg);
                match_root(&roots, pred, self.cfg.tol_match).map(|y| LiveArc { ymid: y, ..*a })
            })
            .collect()
    }

    /// A foreign branch point inside the band of some edge: `(p, q, r)`.
    fn find_event(&self, state: &BranchState, arcs: &[LiveArc]) -> Option<(usize, usize, usize)> {
        let kappa = self.cfg.split_band;
        for (p, q) in Self::edges(arcs) {
            let mut best: Option<(f64, usize)> = None;
            for r in 0..state.points.len() {
                if r == p || r == q {
                    continue;
                }
                let w = frame(state.points[p][0], state.points[q][0], state.points[r][0]);
                if w.re > 0.0 && w.re < 1.0 && w.im.abs() < kappa && best.map_or(true, |b| w.im.abs() < b.0) {
                    best = Some((w.im.abs(), r));
                }
            }
            if let Some((_, r)) = best {
                return Some((p, q, r));
            }
        }
        None
    }

    /// Splits every arc over the edge `{p, q}` at `r`. The triangle `p q r` holds no other
    /// branch point, so the new seeds are continued inside it from the old midpoint.
    fn split(&self, state: &BranchState, arcs: Vec<LiveArc>, p: usize, q: usize, r: usize) -> Result<Vec<LiveArc>> {
        let x = |i: usize| state.points[i][0];
        let mut out = Vec::with_capacity(arcs.len() + 2);
        for a in arcs {
            if (a.p.min(a.q), a.p.max(a.q)) != (p.min(q), p.max(q)) {
                out.push(a);
                continue;
            }
            let m = (x(a.p) + x(a.q)) * 0.5;
            let m1 = (x(a.p) + x(r)) * 0.5;
            let m2 = (x(r) + x(a.q)) * 0.5;
            let y1 = continue_segment(self.h, state.t, m, m1, a.ymid, self.cfg)?;
            let y2 = continue_segment(self.h, state.t, m, m2, a.ymid, self.cfg)?;
            let first = LiveArc { p: a.p, q: r, ymid: y1, or: a.or };
            let second = LiveArc { p: r, q: a.q, ymid: y2, or: a.or };
            if a.or >= 0 {
                out.push(first);
                out.push(second);
            } else {
                out.push(second);
                out.push(first);
            }
        }
        Ok(out)
    }

    fn split_all(&self, live: &mut Live) -> Result<()> {
        for _ in 0..10_000 {
            match self.find_event(&live.state, &live.arcs) {
                Some((p, q, r)) => {
                    let arcs = std::mem::take(&mut live.arcs);
                    live.arcs = self.split(&live.state, arcs, p, q, r)?;
                    live.events += 1;
                }
                None => return Ok(()),
            }
        }
        Err(Error::RefinementExhausted("edge splitting does not terminate".into()))
    }

    /// Continues the arcs from `tau_from` to `tau_to` along `path`.
    fn run(&self, path: &PolyPath, mut live: Live, tau_from: f64, tau_to: f64) -> Result<Live> {
        self.split_all(&mut live)?;
        let max_step = 1.0 / 256.0;
        let min_step = 2f64.powi(-30);
        let dir = (tau_to - tau_from).signum();
        let mut corners: Vec<f64> = path
            .vertex_taus()
            .into_iter()
            .filter(|&s| (s - tau_from) * (tau_to - s) > 0.0)
            .collect();
        if dir < 0.0 {
            corners.reverse();
        }
        let mut tau = tau_from;
        let mut step = max_step;
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
            let accepted = try_step(self.h, &self.hy, &live.state, path.at(target)).and_then(|ns| {
                if Self::jumped(&live.state, &ns, &live.arcs) {
                    return None;
                }
                self.update_arcs(&live.state, &ns, &live.arcs).map(|a| (ns, a))
            });
            match accepted {
                Some((ns, arcs)) => {
                    live.state = ns;
                    live.arcs = arcs;
                    self.split_all(&mut live)?;
                    tau = target;
                    step = (step * 2.0).min(max_step);
                }
                None => {
                    step *= 0.5;
                    if step < min_step {
                        let sep = min_separation(&live.state.xs());
                        return Err(if sep < 1e-6 {
                            Error::NotCriticallyRegular(tau)
                        } else {
                            Error::TrackingFailed(tau)
                        });
                    }
                }
            }
        }
        Ok(live)
    }

    fn to_cycle(live: &Live, source: Option<PLPath>) -> CanonicalCycle {
        let x = |i: usize| live.state.points[i][0];
        let arcs: Vec<Arc> = live
            .arcs
            .iter()
            .map(|a| Arc { x0: x(a.p), x1: x(a.q), ymid: a.ymid, orientation: a.or })
            .collect();
        CanonicalCycle {
            t: live.state.t,
            arc_couple_count: arcs.len() / 2,
            arcs,
            events: live.events,
            source_path: source,
        }
    }

    /// Labels the arcs of a cycle by the branch points at its level.
    fn attach(&self, c: &CanonicalCycle) -> Result<Live> {
        let state = BranchState::new(self.h, c.t, 0.0, self.cfg)?;
        let xs = state.xs();
        let scale = 1e-6 * (1.0 + xs.iter().map(|x| x.norm()).fold(0.0, f64::max));
        let label = |x: C64| -> Result<usize> {
            let (k, d) = xs
                .iter()
                .enumerate()
                .map(|(k, &b)| (k, (b - x).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("branch points");
            if d <= scale {
                Ok(k)
            } else {
                Err(Error::InvalidInput(format!("arc endpoint {x} is not a branch point")))
            }
        };
        let arcs = c
            .arcs
            .iter()
            .map(|a| {
                let (p, q) = (label(a.x0)?, label(a.x1)?);
                let m = (xs[p] + xs[q]) * 0.5;
                let y = continue_segment(self.h, c.t, a.midpoint(), m, a.ymid, self.cfg)?;
                Ok(LiveArc { p, q, ymid: y, or: a.orientation })
            })
            .collect::<Result<_>>()?;
        Ok(Live { state, arcs, events: c.events })
    }

    /// The colliding pair near a critical value and its two lifted segments.
    fn seed(&self, t_near: C64, tau: f64) -> Result<Live> {
        let state = BranchState::new(self.h, t_near, tau, self.cfg)?;
        let xs = state.xs();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                pairs.push(((xs[i] - xs[j]).norm(), i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (gap, i, j) = pairs[0];
        let rest = pairs
            .iter()
            .filter(|p| !(p.1 == i && p.2 == j) && (p.1 == i || p.1 == j || p.2 == i || p.2 == j))
            .map(|p| p.0)
            .fold(f64::INFINITY, f64::min);
        if rest < 10.0 * gap {
            return Err(Error::NoIsolatedPair);
        }
        let (p, q) = if lex(xs[i], xs[j]).is_le() { (i, j) } else { (j, i) };
        let m = (xs[p] + xs[q]) * 0.5;
        let yc = (state.points[p][1] + state.points[q][1]) * 0.5;
        let mut roots = sheets_at(self.h, t_near, m, self.cfg);
        roots.sort_by(|a, b| (a - yc).norm().total_cmp(&(b - yc).norm()));
        let (mut ya, mut yb) = (roots[0], roots[1]);
        if lex(yb, ya).is_lt() {
            std::mem::swap(&mut ya, &mut yb);
        }
        Ok(Live {
            state,
            arcs: vec![
                LiveArc { p, q, ymid: ya, or: 1 },
                LiveArc { p, q, ymid: yb, or: -1 },
            ],
            events: 0,
        })
    }
}

/// Local vanishing cycle over the segment joining the two branch points that collide
/// as `t_near` tends to the critical value `a`.
pub fn local_cycle_seed(h: &BivariatePolynomial, a: C64, t_near: C64, cfg: &Config) -> Result<CanonicalCycle> {
    let _ = a;
    let eng = Engine::new(h, cfg);
    let mut live = eng.seed(t_near, 1.0)?;
    eng.split_all(&mut live)?;
    Ok(Engine::to_cycle(&live, None))
}

/// Radius of the seed disc around the end of `path`: shrunk until the colliding pair is
/// isolated.
fn seed_live(eng: &Engine, path: &PolyPath) -> Result<(Live, f64)> {
    let total = path.length();
    if total <= 0.0 {
        return Err(Error::InvalidPath("path has zero length".into()));
    }
    let verts = &path.vertices;
    let last = (verts[verts.len() - 1] - verts[verts.len() - 2]).norm();
    let mut rho = 0.05 * last;
    for _ in 0..12 {
        let tau = 1.0 - rho / total;
        match eng.seed(path.at(tau), tau) {
            Ok(live) => return Ok((live, tau)),
            Err(Error::NoIsolatedPair) => rho *= 0.25,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoIsolatedPair)
}

/// Vanishing cycle at the start of `path`, born at the critical value at its end.
pub fn continue_cycle(h: &BivariatePolynomial, path: &PLPath, cfg: &Config) -> Result<CanonicalCycle> {
    let eng = Engine::new(h, cfg);
    let (live, tau) = seed_live(&eng, path)?;
    let live = eng.run(path, live, tau, 0.0)?;
    Ok(Engine::to_cycle(&live, Some(path.clone())))
}

/// The cycle at `tau` of the vanishing cycle along `path`; `tau = 0` agrees with
/// `continue_cycle`.
pub fn cycle_along(h: &BivariatePolynomial, path: &PLPath, tau: f64, cfg: &Config) -> Result<CanonicalCycle> {
    let eng = Engine::new(h, cfg);
    let (live, tau_near) = seed_live(&eng, path)?;
    let live = eng.run(path, live, tau_near, tau.min(tau_near))?;
    Ok(Engine::to_cycle(&live, Some(path.clone())))
}

/// Parallel transport of a cycle along a path starting at its level.
pub fn transport(h: &BivariatePolynomial, c: &CanonicalCycle, path: &PLPath, cfg: &Config) -> Result<CanonicalCycle> {
    if (path.vertices[0] - c.t).norm() > 1e-12 * (1.0 + c.t.norm()) {
        return Err(Error::InvalidPath("path does not start at the level of the cycle".into()));
    }
    let eng = Engine::new(h, cfg);
    let live = eng.attach(c)?;
    let live = eng.run(path, live, 0.0, 1.0)?;
    let mut out = Engine::to_cycle(&live, c.source_path.clone());
    out.t = *path.vertices.last().expect("nonempty");
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkedBasis {
    pub base_point: C64,
    pub critical_values: Vec<C64>,
    pub paths: Vec<PLPath>,
    pub cycles: Vec<CanonicalCycle>,
    pub intersection_matrix: Vec<Vec<i64>>,
}

fn distinct_arguments(t0: C64, values: &[C64]) -> bool {
    let mut args: Vec<f64> = values.iter().map(|a| (a - t0).arg()).collect();
    args.sort_by(f64::total_cmp);
    let gaps = args.windows(2).map(|w| w[1] - w[0]);
    let wrap = args.first().map_or(PI, |f| f + 2.0 * PI - args.last().expect("nonempty"));
    gaps.chain(std::iter::once(wrap)).all(|g| g > 1e-3) && values.iter().all(|a| (a - t0).norm() > 1e-9)
}

/// Vanishing cycles along straight paths from `t0` to every critical value, ordered
/// by the argument of `a_j - t0`.
pub fn star_cycles(h: &BivariatePolynomial, crit: &CriticalData, t0: C64, cfg: &Config) -> Result<(Vec<C64>, Vec<PLPath>, Vec<CanonicalCycle>)> {
    let mut values = crit.values();
    let center = crit.enclosing_disc.center;
    let base = (center - t0).arg();
    let rel = |a: &C64| {
        let mut d = (a - t0).arg() - base;
        while d <= -PI {
            d += 2.0 * PI;
        }
        while d > PI {
            d -= 2.0 * PI;
        }
        d
    };
    values.sort_by(|a, b| rel(a).total_cmp(&rel(b)));
    let paths: Vec<PLPath> = values.iter().map(|&a| PolyPath::new(vec![t0, a])).collect::<Result<_>>()?;
    let cycles = paths.iter().map(|p| continue_cycle(h, p, cfg)).collect::<Result<Vec<_>>>()?;
    Ok((values, paths, cycles))
}

/// A base point and its star of vanishing cycles: the given `t0`, or a point on a
/// circle around the critical values with pairwise distinct arguments.
pub fn star_basis(h: &BivariatePolynomial, t0: Option<C64>, cfg: &Config) -> Result<(CriticalData, C64, Vec<C64>, Vec<PLPath>, Vec<CanonicalCycle>)> {
    let crit = critical_data(h, cfg)?;
    if !crit.ultra_morse {
        return Err(Error::NotUltraMorse);
    }
    let values = crit.values();
    if let Some(t0) = t0 {
        if !distinct_arguments(t0, &values) {
            return Err(Error::BasePointSelection(0));
        }
        let (v, p, c) = star_cycles(h, &crit, t0, cfg)?;
        return Ok((crit, t0, v, p, c));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xBA5E);
    let r = 2.0 * crit.enclosing_disc.radius.max(1e-3);
    for attempt in 0..100 {
        let theta = if attempt == 0 { 0.5 * PI + 0.1 } else { rng.gen_range(0.0..2.0 * PI) };
        let t0 = crit.enclosing_disc.center + C64::from_polar(r, theta);
        if !distinct_arguments(t0, &values) {
            continue;
        }
        match star_cycles(h, &crit, t0, cfg) {
            Ok((v, p, c)) => return Ok((crit, t0, v, p, c)),
            Err(Error::NotCriticallyRegular(_) | Error::TrackingFailed(_) | Error::NoIsolatedPair) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::BasePointSelection(100))
}

pub fn marked_basis(h: &BivariatePolynomial, t0: Option<C64>, cfg: &Config) -> Result<MarkedBasis> {
    let (_, t0, values, paths, cycles) = star_basis(h, t0, cfg)?;
    let intersection_matrix = intersection_matrix(h, &cycles, cfg)?;
    Ok(MarkedBasis {
        base_point: t0,
        critical_values: values,
        paths,
        cycles,
        intersection_matrix,
    })
}

/// Every entry computed independently, including the diagonal.
pub fn intersection_matrix(h: &BivariatePolynomial, cycles: &[CanonicalCycle], cfg: &Config) -> Result<Vec<Vec<i64>>> {
    let polys: Vec<Vec<[C64; 2]>> = cycles
        .iter()
        .map(|c| cycle_polyline(h, c, cfg.arc_samples, cfg))
        .collect::<Result<_>>()?;
    (0..cycles.len())
        .map(|i| {
            (0..cycles.len())
                .map(|j| index_of_polylines(h, &cycles[i], &cycles[j], &polys[i], &polys[j], cfg))
                .collect()
        })
        .collect()
}

fn cycle_hash(c: &CanonicalCycle, hasher: &mut DefaultHasher) {
    for a in &c.arcs {
        for v in [a.x0, a.x1, a.ymid] {
            v.re.to_bits().hash(hasher);
            v.im.to_bits().hash(hasher);
        }
        a.orientation.hash(hasher);
    }
}

/// Flows every point along the unit tangent field `lambda (H_y, -H_x) / |grad H|` of the
/// level curve for time `eps`, reprojecting onto `H = t` after each sub-step.
fn push_off(h: &BivariatePolynomial, t: C64, pts: &[[C64; 2]], lambda: C64, eps: f64) -> Vec<[C64; 2]> {
    const SUB: usize = 8;
    pts.iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..SUB {
                let (_, g) = h.eval_and_gradient(z[0], z[1]);
                let norm = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
                let v = [g[1] * lambda / norm, -g[0] * lambda / norm];
                z = [z[0] + v[0] * (eps / SUB as f64), z[1] + v[1] * (eps / SUB as f64)];
                for _ in 0..3 {
                    let (f, g) = h.eval_and_gradient(z[0], z[1]);
                    let n2 = g[0].norm_sqr() + g[1].norm_sqr();
                    let k = (f - t) / n2;
                    z = [z[0] - k * g[0].conj(), z[1] - k * g[1].conj()];
                }
            }
            z
        })
        .collect()
}

fn cross(u: C64, v: C64) -> f64 {
    (u.conj() * v).im
}

/// Signed count of transverse crossings of two closed polylines on the level curve.
/// `None` signals a degenerate configuration.
fn count_crossings(h: &BivariatePolynomial, a: &[[C64; 2]], b: &[[C64; 2]], eps: f64) -> Option<i64> {
    let seg = |p: &[[C64; 2]], k: usize| (p[k], p[(k + 1) % p.len()]);
    let len = |s: ([C64; 2], [C64; 2])| ((s.0[0] - s.1[0]).norm_sqr() + (s.0[1] - s.1[1]).norm_sqr()).sqrt();
    let bbox = |s: ([C64; 2], [C64; 2])| {
        [
            s.0[0].re.min(s.1[0].re),
            s.0[0].re.max(s.1[0].re),
            s.0[0].im.min(s.1[0].im),
            s.0[0].im.max(s.1[0].im),
            s.0[1].re.min(s.1[1].re),
            s.0[1].re.max(s.1[1].re),
            s.0[1].im.min(s.1[1].im),
            s.0[1].im.max(s.1[1].im),
        ]
    };
    let bsegs: Vec<(([C64; 2], [C64; 2]), [f64; 8], f64)> = (0..b.len())
        .map(|k| {
            let s = seg(b, k);
            (s, bbox(s), len(s))
        })
        .collect();
    let mut total = 0i64;
    for ka in 0..a.len() {
        let sa = seg(a, ka);
        let ba = bbox(sa);
        let la = len(sa);
        let (_, g) = h.eval_and_gradient((sa.0[0] + sa.1[0]) * 0.5, (sa.0[1] + sa.1[1]) * 0.5);
        // chart coordinate: the one the level curve is locally a graph over
        let chart = if g[1].norm() >= g[0].norm() { 0 } else { 1 };
        let other = 1 - chart;
        for &(sb, bb, lb) in &bsegs {
            let margin = 4.0 * (la + lb) + 4.0 * eps;
            if ba[1] + margin < bb[0]
                || bb[1] + margin < ba[0]
                || ba[3] + margin < bb[2]
                || bb[3] + margin < ba[2]
                || ba[5] + margin < bb[4]
                || bb[5] + margin < ba[4]
                || ba[7] + margin < bb[6]
                || bb[7] + margin < ba[6]
            {
                continue;
            }
            let da = sa.1[chart] - sa.0[chart];
            let db = sb.1[chart] - sb.0[chart];
            let e = sb.0[chart] - sa.0[chart];
            let den = cross(da, db);
            if den.abs() <= 1e-9 * da.norm() * db.norm() {
                if cross(da, e).abs() <= 1e-12 * da.norm().max(1e-300) * (1.0 + e.norm()) && da.norm() > 0.0 {
                    // collinear overlap in the chart
                    let s0 = (e / da).re;
                    let s1 = ((sb.1[chart] - sa.0[chart]) / da).re;
                    if s0.max(s1) > 0.0 && s0.min(s1) < 1.0 {
                        let oa = sa.0[other] + (sa.1[other] - sa.0[other]) * s0.clamp(0.0, 1.0);
                        if (oa - sb.0[other]).norm() <= margin {
                            return None;
                        }
                    }
                }
                continue;
            }
            let s = cross(e, db) / den;
            let r = cross(e, da) / den;
            if !(0.0..1.0).contains(&s) || !(0.0..1.0).contains(&r) {
                continue;
            }
            let oa = sa.0[other] + (sa.1[other] - sa.0[other]) * s;
            let ob = sb.0[other] + (sb.1[other] - sb.0[other]) * r;
            if (oa - ob).norm() > 4.0 * (la + lb) + 4.0 * eps {
                continue;
            }
            if den.abs() <= 1e-6 * da.norm() * db.norm() {
                return None;
            }
            total += if den > 0.0 { 1 } else { -1 };
        }
    }
    Some(total)
}

fn index_of_polylines(
    h: &BivariatePolynomial,
    c1: &CanonicalCycle,
    c2: &CanonicalCycle,
    p1: &[[C64; 2]],
    p2: &[[C64; 2]],
    cfg: &Config,
) -> Result<i64> {
    if (c1.t - c2.t).norm() > 1e-12 * (1.0 + c1.t.norm()) {
        return Err(Error::LevelMismatch);
    }
    let mut ends: Vec<C64> = c1.arcs.iter().chain(&c2.arcs).flat_map(|a| [a.x0, a.x1]).collect();
    ends.sort_by(|a, b| lex(*a, *b));
    ends.dedup_by(|a, b| (*a - *b).norm() < 1e-12);
    let sep = min_separation(&ends);
    let scale = if sep.is_finite() { sep } else { 1.0 };
    let eps = cfg.perturbation * scale;
    let mut hasher = DefaultHasher::new();
    cfg.seed.hash(&mut hasher);
    cycle_hash(c1, &mut hasher);
    cycle_hash(c2, &mut hasher);
    let mut rng = ChaCha8Rng::seed_from_u64(hasher.finish());
    for _ in 0..10 {
        let lambda = C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
        let shifted = push_off(h, c1.t, p2, lambda, eps);
        if let Some(k) = count_crossings(h, p1, &shifted, eps) {
            return Ok(k);
        }
    }
    Err(Error::GeneralPosition(10))
}

/// Intersection index `<c1, c2>` of two cycles on the same level curve.
pub fn intersection_index(h: &BivariatePolynomial, c1: &CanonicalCycle, c2: &CanonicalCycle, cfg: &Config) -> Result<i64> {
    if (c1.t - c2.t).norm() > 1e-12 * (1.0 + c1.t.norm()) {
        return Err(Error::LevelMismatch);
    }
    let p1 = cycle_polyline(h, c1, cfg.arc_samples, cfg)?;
    let p2 = cycle_polyline(h, c2, cfg.arc_samples, cfg)?;
    index_of_polylines(h, c1, c2, &p1, &p2, cfg)
}

/// Branch points of the projection at `t`, for callers holding only a cycle.
pub fn branch_xs(h: &BivariatePolynomial, t: C64, cfg: &Config) -> Result<Vec<C64>> {
    Ok(projection::branch_points(h, t, cfg)?.xs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn testbed() -> BivariatePolynomial {
        BivariatePolynomial::from_real_terms(&[(3, 0, 1.0), (1, 0, -3.0), (0, 3, 2.0), (0, 1, -6.0)])
    }

    #[test]
    fn local_seed_is_closed_single_edge() {
        let h = testbed();
        let cfg = Config::default();
        let seed = local_cycle_seed(&h, c(-6.0), c(-6.0) + 0.01, &cfg).unwrap();
        assert_eq!(seed.arcs.len(), 2);
        assert_eq!(seed.arc_couple_count, 1);
        assert_eq!(seed.arcs[0].orientation, -seed.arcs[1].orientation);
        let m = cycle_metrics(&h, &seed, (1e3, 1e3), &cfg).unwrap();
        assert!(m.closure_error <= 1e-8 * m.length, "{m:?}");
    }

    #[test]
    fn seeds_shrink_towards_critical_value() {
        let h = testbed();
        let cfg = Config::default();
        let lengths: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| {
                let s = local_cycle_seed(&h, c(-6.0), c(-6.0) + e, &cfg).unwrap();
                cycle_metrics(&h, &s, (1e3, 1e3), &cfg).unwrap().length
            })
            .collect();
        assert!(lengths[0] > lengths[1] && lengths[1] > lengths[2], "{lengths:?}");
    }

    #[test]
    fn self_intersection_of_seed_vanishes() {
        let h = testbed();
        let cfg = Config::default();
        let s = local_cycle_seed(&h, c(-6.0), c(-6.0) + 0.01, &cfg).unwrap();
        assert_eq!(intersection_index(&h, &s, &s, &cfg).unwrap(), 0);
    }

    #[test]
    fn continued_cycle_closes() {
        let h = testbed();
        let cfg = Config::default();
        let path = PolyPath::new(vec![C64::new(0.0, 4.0), c(-6.0)]).unwrap();
        let cyc = continue_cycle(&h, &path, &cfg).unwrap();
        assert_eq!(cyc.arc_couple_count, cyc.events + 1);
        let m = cycle_metrics(&h, &cyc, (1e3, 1e3), &cfg).unwrap();
        assert!(m.closure_error <= 1e-8 * m.length, "{m:?}");
    }

    #[test]
    fn reversed_cycle_flips_index() {
        let h = testbed();
        let cfg = Config::default();
        let t0 = C64::new(0.0, 4.0);
        let a = continue_cycle(&h, &PolyPath::new(vec![t0, c(-2.0)]).unwrap(), &cfg).unwrap();
        let b = continue_cycle(&h, &PolyPath::new(vec![t0, c(2.0)]).unwrap(), &cfg).unwrap();
        let k = intersection_index(&h, &a, &b, &cfg).unwrap();
        assert_eq!(intersection_index(&h, &b, &a, &cfg).unwrap(), -k);
        assert_eq!(intersection_index(&h, &a.reversed(), &b, &cfg).unwrap(), -k);
    }
}
