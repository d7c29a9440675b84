//! Explicit constants in log10 space and literal audits of the inequalities they enter.

use std::collections::BTreeMap;
use std::f64::consts::{LOG10_2, LOG10_E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cycles::{cycle_metrics, star_basis};
use crate::detformula::FormTuple;
use crate::genericity::{choose_coordinates, critical_data, genericity_profile, normalize, NormalizationMode};
use crate::integrals::period_matrix;
use crate::projection::{branch_points, min_separation, sheets_at, PolyPath};
use crate::{BivariatePolynomial, Config, Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundEntry {
    pub log10: f64,
    pub citation: &'static str,
}

/// Optional path and sample data; entries depending on a missing field are omitted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct BoundExtras {
    pub eps: Option<f64>,
    pub alpha_len: Option<f64>,
    pub m_alpha: Option<usize>,
    pub beta: Option<f64>,
    pub alpha_tilde_len: Option<f64>,
    pub v: Option<f64>,
    pub t: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundTable {
    pub n: usize,
    pub c_prime: f64,
    pub c_doubleprime: f64,
    pub entries: BTreeMap<String, BoundEntry>,
}

impl BoundTable {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.get(name).map(|e| e.log10)
    }
}

pub fn l_n(n: usize) -> f64 {
    24.0 * (n as f64).powi(12)
}

/// Every bound as a log10 value, computed from `(n, c', c'')` and the optional extras.
pub fn bound_table(n: usize, c_prime: f64, c_doubleprime: f64, extras: &BoundExtras) -> Result<BoundTable> {
    if n < 2 {
        return Err(Error::DegreeTooLow { found: n + 1, required: 3 });
    }
    for (name, v) in [("c'", c_prime), ("c''", c_doubleprime)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::OutOfRange(format!("{name} = {v} outside (0, 1]")));
        }
    }
    let nf = n as f64;
    let (ln, lc1, lc2) = (nf.log10(), c_prime.log10(), c_doubleprime.log10());
    let (n2, n3, n4, n12) = (nf.powi(2), nf.powi(3), nf.powi(4), nf.powi(12));
    let mut e = BTreeMap::new();
    let mut put = |name: &str, log10: f64, citation: &'static str| {
        e.insert(name.to_string(), BoundEntry { log10, citation });
    };

    put("r0", -14.0 * n3 * lc1 + 65.0 * n3 * ln, "R0 = c'^(-14n^3) n^(65n^3)");
    put("nonlin", -13.0 * n4 * lc1 + 64.0 * n4 * ln, "||H'|| < c'^(-13n^4) n^(64n^4)");
    put("x_n", 7.0 * nf * ln - 2.0 * nf * lc1, "X_n = n^(7n) c'^(-2n)");
    put("y_n", 8.0 * nf * ln - 2.0 * nf * lc1, "Y_n = n^(8n) c'^(-2n)");
    put("delta0", 13.0 * n4 * lc1 - 63.0 * n4 * ln, "delta0 = c'^(13n^4) n^(-63n^4)");
    put("r_n", 7.0 * n2 * lc1 - 35.0 * n2 * ln, "r(n) = c'^(7n^2) n^(-35n^2)");
    put("l_n", l_n(n).log10(), "l(n) = 24 n^12");
    put("eps_cap", (c_doubleprime / (8.0 * n2)).log10(), "|eps| = c''/(8n^2)");
    put("alpha_cap", (36.0 * n2 + 10.0).log10(), "|alpha| <= 36n^2 + 10");
    put("nu", (c_doubleprime / (4.0 * n2)).log10(), "nu = c''/(4n^2)");
    let pi_tail = -28.0 * n4 * lc1;
    put(
        "uppi1",
        2600.0 * nf.powi(16) / c_doubleprime * LOG10_2 + pi_tail,
        "|I| < 2^(2600n^16/c'') c'^(-28n^4)",
    );
    put(
        "det_lower",
        6.0 * n3 * lc1 + n2 * lc2 - 62.0 * n3 * ln,
        "|Delta(t)| > c'^(6n^3) c''^(n^2) n^(-62n^3)",
    );
    put("lowerch", 6.0 * n3 * lc1 - 60.0 * n3 * ln, "C(h, Omega) > c'^(6n^3) n^(-60n^3)");
    put("pd_lower", 6.0 * n2 * lc1 - 44.0 * n2 * ln, "P_d > n^(-44n^2) c'^(6n^2)");
    put("sigma_upper", 6.0 * n2 * ln, "Sigma(h) < n^(6n^2)");
    put("cn_lower", -12.0 * n2 * LOG10_E, "C_n > e^(-12n^2)");

    if let Some(t) = extras.t {
        let chi = if t.abs() <= 5.0 { 0.0 } else { (t.abs() / 5.0).log10() / (nf + 1.0) };
        put("chi", chi, "chi(t) = max(1, (|t|/5)^(1/(n+1)))");
        put("r0_chi", -14.0 * n3 * lc1 + 65.0 * n3 * ln + chi, "R0 chi(|t|)");
    }
    if let Some(eps) = extras.eps {
        put(
            "delta_n_eps",
            4.0 * n3 * lc1 - 17.0 * n3 * ln + nf * (nf + 1.0) * eps.log10(),
            "Delta(n, eps) = c'^(4n^3) n^(-17n^3) eps^(n(n+1))",
        );
    }
    if let Some(m) = extras.m_alpha {
        let e_alpha = 23.0 * n12 * m as f64;
        put("e_alpha", e_alpha.log10(), "E(alpha) = 23 n^12 m(alpha)");
        put("pieces_cap", e_alpha * LOG10_2, "m(canonical representative) <= 2^E(alpha)");
        put("rln_factor", l_n(n) * m as f64 * LOG10_2, "|delta| < 2^(l(n) m(alpha)) R");
    }
    if let (Some(a), Some(b)) = (extras.alpha_len, extras.beta) {
        put(
            "uppi2",
            (10.0 * n12 * (a + 5.0) / b - 2.0 * nf) * LOG10_2 + pi_tail,
            "|I| < 2^(10n^12 (|alpha|+5)/beta - 2n) c'^(-28n^4)",
        );
        put("lengthup", l_n(n) * (a / b + 5.0) / 3.0 * LOG10_2, "|delta| < 2^(l(n)(|alpha|/beta+5)/3) R");
    }
    if let (Some(at), Some(v), Some(b)) = (extras.alpha_tilde_len, extras.v, extras.beta) {
        let t_factor = extras.t.map_or(0.0, |t| 2.0 * (t.abs() / 5.0).log10().max(0.0));
        put(
            "uppi3",
            (20.0 * n12 * (at + v + 5.0) / b - 2.0 * nf) * LOG10_2 + pi_tail + t_factor,
            "|I(t0)| < 2^(20n^12 (|alpha~|+V+5)/beta - 2n) c'^(-28n^4) max(1, (|t0|/5)^2)",
        );
    }
    Ok(BoundTable { n, c_prime, c_doubleprime, entries: e })
}

/// Length data of a path to the critical value `a` among `values`, at disc radius `beta`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathMeasures {
    pub length: f64,
    /// Length inside the closed 3-disc and outside every `D_beta(a_i)`.
    pub tilde_length: f64,
    pub v: f64,
    pub edges: usize,
}

pub fn path_measures(path: &PolyPath, values: &[C64], beta: f64) -> PathMeasures {
    const PER_EDGE: usize = 4096;
    let mut pts = Vec::new();
    for w in path.vertices.windows(2) {
        for k in 0..PER_EDGE {
            pts.push(w[0] + (w[1] - w[0]) * (k as f64 / PER_EDGE as f64));
        }
    }
    pts.push(*path.vertices.last().expect("path has vertices"));
    let a = *pts.last().expect("nonempty");
    // hat-alpha ends where the path enters D_beta(a) for good
    let cut = pts.iter().rposition(|p| (p - a).norm() >= beta).map_or(0, |i| i + 1);
    let hat = &pts[..cut.min(pts.len())];

    let mut tilde = 0.0;
    for w in pts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if mid.norm() <= 3.0 && values.iter().all(|&ai| (mid - ai).norm() >= beta) {
            tilde += (w[1] - w[0]).norm();
        }
    }
    let darg = |p: C64, q: C64| (q / p).arg().abs();
    let mut v = 0.0;
    for w in hat.windows(2) {
        for &ai in values {
            if (w[0] - ai).norm() < beta && (w[1] - ai).norm() < beta {
                v += beta * darg(w[0] - ai, w[1] - ai);
            }
        }
        if w[0].norm() > 3.0 && w[1].norm() > 3.0 {
            v += 3.0 * darg(w[0], w[1]);
        }
    }
    PathMeasures {
        length: path.length(),
        tilde_length: tilde,
        v,
        edges: path.vertices.len() - 1,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub log10_margin: f64,
    pub citation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub checks: Vec<Check>,
    pub note: String,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const NOTE: &str = "The bounds are far from tight at small degree; these are literal sanity assertions, \
                    and the margins rather than the verdicts carry the information.";

fn check(name: &str, log10_margin: f64, citation: &str) -> Check {
    Check {
        name: name.into(),
        pass: log10_margin > 0.0,
        log10_margin,
        citation: citation.into(),
    }
}

fn exact(name: &str, pass: bool, citation: &str) -> Check {
    Check { name: name.into(), pass, log10_margin: 0.0, citation: citation.into() }
}

fn c_prime_of(h: &BivariatePolynomial, cfg: &Config) -> Result<f64> {
    let (top, _) = h.homogeneous_split()?;
    Ok(genericity_profile(&top, cfg)?.c_prime)
}

fn circle(r: f64, count: usize) -> impl Iterator<Item = C64> {
    (0..count).map(move |k| C64::from_polar(r, 2.0 * PI * (k as f64 + 0.5) / count as f64))
}

/// Bidisc containment of the topology of `S_t` for a unit-scaled `H`, checked at each `t`.
pub fn audit_topology(h_unit: &BivariatePolynomial, ts: &[C64], cfg: &Config) -> Result<AuditReport> {
    let (change, _) = choose_coordinates(h_unit, cfg)?;
    let h = h_unit.apply_affine(&change)?.compact();
    let n = h.degree().ok_or(Error::ZeroPolynomial)? - 1;
    let cp = c_prime_of(&h, cfg)?;
    let table = bound_table(n, cp, 1.0, &BoundExtras::default())?;
    let mut checks = Vec::new();
    for &t in ts {
        let (lx, ly, tag) = if t.norm() <= 5.0 {
            (table.get("x_n").expect("x_n"), table.get("y_n").expect("y_n"), "X_n, Y_n")
        } else {
            let chi = (t.norm() / 5.0).log10() / (n as f64 + 1.0);
            let r = table.get("r0").expect("r0") + chi;
            (r, r, "R0 chi(|t|)")
        };
        let big_x = 10f64.powf(lx);
        let label = format!("t={:+.3}{:+.3}i", t.re, t.im);

        let cs = branch_points(&h, t, cfg)?;
        let reach = cs.points.iter().map(|p| p.x.norm()).fold(0.0, f64::max);
        checks.push(check(
            &format!("topology.a.branch_points_in_disc[{label}]"),
            lx - reach.max(1e-300).log10(),
            &format!("every generalized critical value lies in |x| < X ({tag})"),
        ));

        let mut ymax = 0.0f64;
        let mut unbranched = true;
        let steps = 512;
        let mut prev = sheets_at(&h, t, C64::new(big_x, 0.0), cfg);
        unbranched &= prev.len() == n + 1;
        let start = prev.clone();
        for k in 1..=steps {
            let x = C64::from_polar(big_x, 2.0 * PI * k as f64 / steps as f64);
            let next = sheets_at(&h, t, x, cfg);
            if next.len() != n + 1 {
                unbranched = false;
                break;
            }
            ymax = next.iter().map(|y| y.norm()).fold(ymax, f64::max);
            let sep = min_separation(&next);
            for y in &prev {
                let d = next.iter().map(|z| (z - y).norm()).fold(f64::INFINITY, f64::min);
                unbranched &= 4.0 * d < sep;
            }
            prev = next;
        }
        let sep0 = min_separation(&start);
        unbranched &= prev.iter().all(|y| start.iter().any(|z| (z - y).norm() < 0.25 * sep0));
        checks.push(check(
            &format!("topology.b.sheets_bounded[{label}]"),
            ly - ymax.max(1e-300).log10(),
            &format!("on |x| = X every sheet satisfies |y_i| <= Y ({tag})"),
        ));
        checks.push(exact(
            &format!("topology.b.sheets_unbranched[{label}]"),
            unbranched,
            "n+1 sheets continue around |x| = X without collision and return as a permutation",
        ));

        let mut worst = f64::INFINITY;
        for scale in [1.0, 2.0, 4.0] {
            for x in circle(scale * big_x, 64) {
                let ys = sheets_at(&h, t, x, cfg);
                let need = cp / (3.0 * n as f64) * x.norm();
                worst = worst.min((min_separation(&ys) / need).log10());
            }
        }
        checks.push(check(
            &format!("topology.c.sheet_gaps[{label}]"),
            worst,
            "|y_i(x) - y_j(x)| > c'/(3n) |x| on |x| in {X, 2X, 4X}",
        ));
    }
    Ok(AuditReport { checks, note: NOTE.into() })
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct AuditOptions {
    pub random_t: usize,
    pub ldr_samples: usize,
    /// Include the cycle, intersection and integral checks on the normalized polynomial.
    pub cycles: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { random_t: 50, ldr_samples: 16, cycles: true }
    }
}

/// The radius in `(0, max|b|)` farthest from every `|b|`, `b` in `CS_0`.
fn separating_radius(radii: &[f64]) -> (f64, f64) {
    let mut rs: Vec<f64> = radii.to_vec();
    rs.sort_by(f64::total_cmp);
    let top = *rs.last().expect("nonempty");
    let mut best = (0.5 * rs[0], 0.5 * rs[0]);
    for w in rs.windows(2) {
        if w[1] < top && 0.5 * (w[1] - w[0]) > best.1 {
            best = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        }
    }
    // also the gap just below the top radius
    let below: Vec<f64> = rs.iter().copied().filter(|&r| r < top).collect();
    let lo = below.last().copied().unwrap_or(0.0);
    if 0.5 * (top - lo) > best.1 {
        best = (0.5 * (lo + top), 0.5 * (top - lo));
    }
    best
}

/// Audits the theorem statements on `H`, normalizing as each statement requires.
pub fn audit_theorems(h_full: &BivariatePolynomial, opts: &AuditOptions, cfg: &Config) -> Result<AuditReport> {
    let mut checks = Vec::new();
    let central = normalize(h_full, NormalizationMode::CentrallyRescaled, cfg)?;
    let (change, _) = choose_coordinates(&central.poly, cfg)?;
    let hc = central.poly.apply_affine(&change)?.compact();
    let n = hc.degree().ok_or(Error::ZeroPolynomial)? - 1;
    let eta = n * (n + 1);
    let cp = c_prime_of(&hc, cfg)?;
    let table = bound_table(n, cp, 1.0, &BoundExtras::default())?;
    let (l_delta0, l_rn) = (table.get("delta0").expect("delta0"), table.get("r_n").expect("r_n"));

    let crit_c = critical_data(&hc, cfg)?;
    let amax = crit_c.values().iter().map(|a| a.norm()).fold(0.0, f64::max);
    checks.push(check(
        "central.max_critical_value",
        amax.max(1e-300).log10() - l_delta0,
        "centrally rescaled: max |a_i| >= delta0 = c'^(13n^4) n^(-63n^4)",
    ));

    let cs0 = branch_points(&hc, C64::new(0.0, 0.0), cfg)?;
    let radii: Vec<f64> = cs0.points.iter().map(|p| p.x.norm()).collect();
    let bmax = radii.iter().copied().fold(0.0, f64::max);
    checks.push(check(
        "central.max_branch_point",
        bmax.max(1e-300).log10() - l_rn,
        "centrally rescaled: some b in CS_0 has |b| > r(n) = c'^(7n^2) n^(-35n^2)",
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xA0D1);
    let spread = 2.0 * amax + 1.0;
    let mut counts_ok = true;
    for _ in 0..opts.random_t {
        let t = C64::new(rng.gen_range(-spread..spread), rng.gen_range(-spread..spread));
        counts_ok &= branch_points(&hc, t, cfg)?.multiplicity_sum() == eta;
    }
    checks.push(exact(
        "central.branch_point_count",
        counts_ok,
        "CS_t has n(n+1) points with multiplicity at random t",
    ));

    let (r, half_gap) = separating_radius(&radii);
    let l_need = l_rn - (2.0 * eta as f64).log10();
    let inside0 = radii.iter().filter(|&&q| q < r).count();
    let delta0 = 10f64.powf(l_delta0);
    let mut min_dist = half_gap;
    let mut same = true;
    for t in circle(delta0, opts.ldr_samples) {
        let cs = branch_points(&hc, t, cfg)?;
        let rs: Vec<f64> = cs.points.iter().map(|p| p.x.norm()).collect();
        same &= rs.iter().filter(|&&q| q < r).count() == inside0;
        min_dist = rs.iter().map(|q| (q - r).abs()).fold(min_dist, f64::min);
    }
    checks.push(check(
        "central.separating_circle_width",
        half_gap.max(1e-300).log10() - l_need,
        "the circle |x| = r separating CS_0 keeps distance >= r(n)/(2 n(n+1))",
    ));
    checks.push(Check {
        pass: same && min_dist > 0.0,
        ..check(
            "central.separating_circle_not_crossed",
            min_dist.max(1e-300).log10() - l_need,
            "CS_t does not cross |x| = r while |t| <= delta0 (margin in units of r(n)/(2 n(n+1)))",
        )
    });

    let x_probe = C64::new(r, 0.0);
    let eps = cs0.points.iter().map(|p| (p.x - x_probe).norm()).fold(1.0, f64::min);
    let l_de = bound_table(n, cp, 1.0, &BoundExtras { eps: Some(eps), ..Default::default() })?
        .get("delta_n_eps")
        .expect("delta_n_eps");
    let mut probe_dist = f64::INFINITY;
    for t in circle(10f64.powf(l_de), opts.ldr_samples) {
        let cs = branch_points(&hc, t, cfg)?;
        probe_dist = cs.points.iter().map(|p| (p.x - x_probe).norm()).fold(probe_dist, f64::min);
    }
    checks.push(Check {
        pass: probe_dist > 0.0,
        ..check(
            "central.probe_outside_cs_t",
            (probe_dist / eps).max(1e-300).log10(),
            "x not in CS_t for |t| < Delta(n, eps), eps = min(dist(x, CS_0), 1) (margin: log10 dist/eps)",
        )
    });

    if opts.cycles {
        checks.extend(cycle_checks(h_full, cfg)?);
    }
    Ok(AuditReport { checks, note: NOTE.into() })
}

fn cycle_checks(h_full: &BivariatePolynomial, cfg: &Config) -> Result<Vec<Check>> {
    let hn = normalize(h_full, NormalizationMode::Normalized, cfg)?.poly;
    let n = hn.degree().ok_or(Error::ZeroPolynomial)? - 1;
    let cp = c_prime_of(&hn, cfg)?;
    let (crit, t0, values, paths, cycles) = star_basis(&hn, None, cfg)?;
    let cpp = crit.c_doubleprime;
    let beta = cpp / (4.0 * (n * n) as f64);
    let base = bound_table(n, cp, cpp, &BoundExtras { t: Some(t0.norm()), ..Default::default() })?;
    let l_r = base.get("r0").expect("r0");
    let forms = FormTuple::lexicographic(n).forms;
    let pm = period_matrix(&hn, &cycles, &forms, cfg)?;
    let inter = crate::cycles::intersection_matrix(&hn, &cycles, cfg)?;

    let mut margins: BTreeMap<&str, f64> = BTreeMap::new();
    let mut worst = |k: &'static str, m: f64| {
        let e = margins.entry(k).or_insert(f64::INFINITY);
        *e = e.min(m);
    };
    let measures: Vec<PathMeasures> = paths.iter().map(|p| path_measures(p, &values, beta)).collect();
    for (j, c) in cycles.iter().enumerate() {
        let pmj = &measures[j];
        let tab = bound_table(
            n,
            cp,
            cpp,
            &BoundExtras {
                m_alpha: Some(pmj.edges),
                alpha_len: Some(pmj.length),
                alpha_tilde_len: Some(pmj.tilde_length),
                v: Some(pmj.v),
                beta: Some(beta),
                t: Some(t0.norm()),
                ..Default::default()
            },
        )?;
        let metrics = cycle_metrics(&hn, c, (f64::INFINITY, f64::INFINITY), cfg)?;
        worst("rln", tab.get("rln_factor").expect("rln") + l_r - metrics.length.log10());
        worst("lengthup", tab.get("lengthup").expect("lengthup") + l_r - metrics.length.log10());
        worst("pieces", tab.get("pieces_cap").expect("pieces") - (c.arc_couple_count as f64).log10());
        for row in &pm.entries {
            let li = row[j].norm().max(1e-300).log10();
            worst("uppi1", tab.get("uppi1").expect("uppi1") - li);
            worst("uppi2", tab.get("uppi2").expect("uppi2") - li);
            worst("uppi3", tab.get("uppi3").expect("uppi3") - li);
        }
        for (k, other) in measures.iter().enumerate() {
            let cap = 24.0 * (n as f64).powi(12) * (pmj.edges + other.edges) as f64 * LOG10_2;
            worst("tindex", cap - (inter[j][k].unsigned_abs() as f64).max(1e-300).log10());
        }
    }
    let path_ok = t0.norm() <= 5.0 && measures.iter().all(|m| m.length <= 36.0 * (n * n) as f64 + 10.0);
    let cite = |k: &str| -> &'static str {
        match k {
            "rln" => "|delta| < 2^(l(n) m(alpha)) R, l(n) = 24n^12, R = R0",
            "lengthup" => "|delta| < 2^(l(n)(|alpha|/beta+5)/3) R, beta = c''/(4n^2)",
            "pieces" => "m(canonical representative) <= 2^(23 n^12 m(alpha))",
            "uppi1" => "|I| < 2^(2600n^16/c'') c'^(-28n^4)",
            "uppi2" => "|I| < 2^(10n^12 (|alpha|+5)/beta - 2n) c'^(-28n^4)",
            "uppi3" => "|I(t0)| < 2^(20n^12 (|alpha~|+V+5)/beta - 2n) c'^(-28n^4) max(1, (|t0|/5)^2)",
            _ => "|intersection index| < 2^(24n^12 (m(alpha_1) + m(alpha_2)))",
        }
    };
    let mut out = vec![exact(
        "cycles.path_hypotheses",
        path_ok,
        "|t0| <= 5 and every path has |alpha| <= 36n^2 + 10",
    )];
    for (k, m) in margins {
        out.push(check(&format!("cycles.{k}"), m, cite(k)));
    }
    Ok(out)
}
