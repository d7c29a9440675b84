//! Zero lines of the highest part, critical data, normalisations and the choice of
//! coordinates adapted to the projection along the y-axis.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Config;
use crate::disc::{enclosing_disc, Disc};
use crate::error::{Error, Result};
use crate::poly::{self, AffineChange, BivariatePolynomial};
use crate::resultant;
use crate::univariate;

pub type C64 = Complex64;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Minimal Fubini-Study distance under which two zero lines count as equal.
pub const GENERIC_LINE_TOL: f64 = 1e-6;

/// `h = c_{-1} prod (y - c_i x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineFactorization {
    pub c_minus1: C64,
    pub slopes: Vec<C64>,
    /// The y-axis itself is a zero line; `slopes` then lists only the finite ones.
    pub contains_y_axis: bool,
}

impl LineFactorization {
    /// Unit spanning vectors of every zero line.
    pub fn directions(&self) -> Vec<[C64; 2]> {
        let mut v: Vec<[C64; 2]> = self.slopes.iter().map(|&c| line_direction(c)).collect();
        if self.contains_y_axis {
            v.push([ZERO, ONE]);
        }
        v
    }

    pub fn reconstruct(&self) -> BivariatePolynomial {
        poly::from_univariate_roots_in_slope(self.c_minus1, &self.slopes)
    }
}

/// Unit vector spanning `y = c x`.
pub fn line_direction(c: C64) -> [C64; 2] {
    let r = (1.0 + c.norm_sqr()).sqrt();
    [ONE / r, c / r]
}

/// Fubini-Study distance `arccos |<a, b>|` of the lines spanned by unit vectors.
pub fn line_distance(a: [C64; 2], b: [C64; 2]) -> f64 {
    let ip = a[0] * b[0].conj() + a[1] * b[1].conj();
    ip.norm().min(1.0).acos()
}

pub fn factor_zero_lines(h: &BivariatePolynomial, cfg: &Config) -> Result<LineFactorization> {
    if h.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if !h.is_homogeneous() {
        return Err(Error::NotHomogeneous);
    }
    let d = h.degree().expect("nonzero");
    let q = poly::slope_polynomial(h);
    let scale = h.coeff_scale();
    let lead = q[d];
    if lead.norm() <= cfg.tol_coeff * scale {
        let trimmed = univariate::trim(&q, cfg.tol_coeff);
        let c_minus1 = *trimmed.last().expect("nonzero");
        return Ok(LineFactorization {
            c_minus1,
            slopes: univariate::roots(&trimmed, cfg.tol_root),
            contains_y_axis: true,
        });
    }
    Ok(LineFactorization {
        c_minus1: lead,
        slopes: univariate::roots(&q, cfg.tol_root),
        contains_y_axis: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenericityProfile {
    pub is_generic: bool,
    pub min_line_distance: f64,
    pub c1: f64,
    pub c_prime: f64,
    /// Same quantities measured with the chordal metric `sin(arccos |<a, b>|)`.
    pub c1_chordal: f64,
    pub c_prime_chordal: f64,
}

pub fn genericity_profile(h: &BivariatePolynomial, cfg: &Config) -> Result<GenericityProfile> {
    let deg = h.degree().ok_or(Error::ZeroPolynomial)?;
    if deg < 3 {
        return Err(Error::DegreeTooLow { found: deg, required: 3 });
    }
    let lines = factor_zero_lines(h, cfg)?;
    Ok(profile_from_lines(&lines.directions(), deg - 1))
}

fn profile_from_lines(dirs: &[[C64; 2]], n: usize) -> GenericityProfile {
    let mut min = f64::INFINITY;
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            min = min.min(line_distance(dirs[i], dirs[j]));
        }
    }
    let c1 = n as f64 * min;
    let c1_chordal = n as f64 * min.sin();
    GenericityProfile {
        is_generic: min > GENERIC_LINE_TOL,
        min_line_distance: min,
        c1,
        c_prime: c1.min(1.0),
        c1_chordal,
        c_prime_chordal: c1_chordal.min(1.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub x: C64,
    pub y: C64,
    pub value: C64,
    pub hessian_det: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnclosingDisc {
    pub center: C64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalData {
    pub n: usize,
    pub points: Vec<CriticalPoint>,
    pub ultra_morse: bool,
    pub c1: f64,
    pub c_prime: f64,
    /// `n^2` times the minimal distance between critical values.
    pub c2: f64,
    pub c_doubleprime: f64,
    pub enclosing_disc: EnclosingDisc,
    /// `c2` is meaningful only when the input was normalised.
    pub normalized_input: bool,
    /// `dH/dy` has no multiple factors.
    pub hy_squarefree: bool,
}

impl CriticalData {
    pub fn values(&self) -> Vec<C64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// Critical values sorted by `(Re, Im)`.
    pub fn sorted_values(&self) -> Vec<C64> {
        sort_values(self.values())
    }
}

/// Sorts by `(Re, Im)`.
pub fn sort_values(mut v: Vec<C64>) -> Vec<C64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

fn newton_gradient(hx: &BivariatePolynomial, hy: &BivariatePolynomial, mut z: [C64; 2], tol: f64) -> Option<([C64; 2], f64)> {
    let scale = 1.0 + hx.coeff_scale() + hy.coeff_scale();
    let mut res = f64::INFINITY;
    for _ in 0..60 {
        let (fx, gx) = hx.eval_and_gradient(z[0], z[1]);
        let (fy, gy) = hy.eval_and_gradient(z[0], z[1]);
        res = fx.norm().max(fy.norm());
        let det = gx[0] * gy[1] - gx[1] * gy[0];
        if det.norm() < 1e-300 {
            break;
        }
        let dx = (fx * gy[1] - fy * gx[1]) / det;
        let dy = (gx[0] * fy - gy[0] * fx) / det;
        z = [z[0] - dx, z[1] - dy];
        if !(z[0].re.is_finite() && z[1].re.is_finite()) {
            return None;
        }
        if dx.norm() + dy.norm() <= 1e-15 * (1.0 + z[0].norm() + z[1].norm()) {
            let (fx, _) = hx.eval_and_gradient(z[0], z[1]);
            let (fy, _) = hy.eval_and_gradient(z[0], z[1]);
            res = fx.norm().max(fy.norm());
            break;
        }
    }
    (res <= tol.max(1e-10) * scale * (1.0 + z[0].norm() + z[1].norm()).powi(4)).then_some((z, res))
}

/// Critical points of `H` from the resultant in `y` of the two partials.
pub fn critical_data(h_full: &BivariatePolynomial, cfg: &Config) -> Result<CriticalData> {
    let deg = h_full.degree().ok_or(Error::ZeroPolynomial)?;
    if deg < 3 {
        return Err(Error::DegreeTooLow { found: deg, required: 3 });
    }
    let n = deg - 1;
    let (h, _) = h_full.homogeneous_split()?;
    let profile = genericity_profile(&h, cfg)?;
    if !profile.is_generic {
        return Err(Error::NotGeneric);
    }
    let expected = n * n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xC817);
    let mut last_detail = String::new();
    for attempt in 0..8 {
        let rot = if attempt == 0 {
            AffineChange::identity()
        } else {
            AffineChange::linear(random_unitary(&mut rng))
        };
        let g = h_full.apply_affine(&rot)?;
        let pts = match critical_points_raw(&g, n, cfg) {
            Ok(p) => p,
            Err(Error::DegenerateCriticalLocus) => return Err(Error::DegenerateCriticalLocus),
            Err(e) => {
                last_detail = e.to_string();
                continue;
            }
        };
        let hess_scale = 1.0 + h_full.coeff_scale();
        let degenerate = pts
            .iter()
            .any(|p| p.hessian_det.norm() <= 1e-8 * hess_scale * hess_scale);
        if pts.len() < expected && !degenerate {
            last_detail = format!("attempt {attempt}: {} Morse points", pts.len());
            continue;
        }
        // back to the original coordinates: old z = U w
        let m = rot.matrix;
        let points: Vec<CriticalPoint> = pts
            .into_iter()
            .map(|p| {
                let x = m[0][0] * p.x + m[0][1] * p.y;
                let y = m[1][0] * p.x + m[1][1] * p.y;
                let hs = h_full.hessian(x, y);
                CriticalPoint {
                    x,
                    y,
                    value: h_full.eval(x, y),
                    hessian_det: hs[0] * hs[2] - hs[1] * hs[1],
                }
            })
            .collect();
        return Ok(assemble(h_full, n, points, &profile, cfg));
    }
    Err(Error::CriticalPointCount {
        found: 0,
        expected,
        detail: last_detail,
    })
}

fn critical_points_raw(g: &BivariatePolynomial, n: usize, cfg: &Config) -> Result<Vec<CriticalPoint>> {
    let hx = g.partial_x();
    let hy = g.partial_y();
    let dy_a = hx.degree_in_y().unwrap_or(0);
    let dy_b = hy.degree_in_y().unwrap_or(0);
    let bound = n * n + 1;
    let count = bound + 1;
    let radius = 1.0;
    let nodes = resultant::circle_nodes(count, radius);
    let values: Vec<C64> = nodes
        .iter()
        .map(|&x| {
            let a = &hx.y_coeffs_at(x)[..=dy_a];
            let b = &hy.y_coeffs_at(x)[..=dy_b];
            resultant::sylvester(a, b)
        })
        .collect();
    let vscale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let cscale = (1.0 + hx.coeff_scale() + hy.coeff_scale()).powi((dy_a + dy_b) as i32);
    if vscale <= 1e-11 * cscale {
        return Err(Error::DegenerateCriticalLocus);
    }
    let coeffs = interpolate_trimmed(&values, radius);
    let xs = univariate::roots(&coeffs, cfg.tol_root);
    let mut found: Vec<[C64; 2]> = Vec::new();
    let scale = 1.0 + xs.iter().map(|x| x.norm()).fold(0.0, f64::max);
    for &x in &xs {
        let ys = univariate::roots(&hy.y_coeffs_at(x)[..=dy_b], cfg.tol_root);
        for y in ys {
            if let Some((z, _)) = newton_gradient(&hx, &hy, [x, y], cfg.tol_root) {
                let dup = found.iter().any(|w| {
                    (w[0] - z[0]).norm() + (w[1] - z[1]).norm() <= 1e-9 * (scale + z[1].norm())
                });
                if !dup {
                    found.push(z);
                }
            }
        }
    }
    found.sort_by(|a, b| {
        a[0].re
            .total_cmp(&b[0].re)
            .then(a[0].im.total_cmp(&b[0].im))
            .then(a[1].re.total_cmp(&b[1].re))
            .then(a[1].im.total_cmp(&b[1].im))
    });
    Ok(found
        .into_iter()
        .map(|z| {
            let hs = g.hessian(z[0], z[1]);
            CriticalPoint {
                x: z[0],
                y: z[1],
                value: g.eval(z[0], z[1]),
                hessian_det: hs[0] * hs[2] - hs[1] * hs[1],
            }
        })
        .collect())
}

/// Interpolates and drops negligible top coefficients.
pub(crate) fn interpolate_trimmed(values: &[C64], radius: f64) -> Vec<C64> {
    let coeffs = resultant::interpolate_circle(values, radius);
    univariate::trim(&coeffs, 1e-11)
}

fn assemble(
    h_full: &BivariatePolynomial,
    n: usize,
    mut points: Vec<CriticalPoint>,
    profile: &GenericityProfile,
    cfg: &Config,
) -> CriticalData {
    points.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
            .then(a.x.re.total_cmp(&b.x.re))
            .then(a.x.im.total_cmp(&b.x.im))
    });
    let values: Vec<C64> = points.iter().map(|p| p.value).collect();
    let vscale = 1.0 + values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut min_gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            min_gap = min_gap.min((values[i] - values[j]).norm());
        }
    }
    let hscale = 1.0 + h_full.coeff_scale();
    let morse = points.iter().all(|p| p.hessian_det.norm() > 1e-8 * hscale * hscale);
    let ultra_morse = morse && points.len() == n * n && min_gap > 1e-9 * vscale;
    let Disc { center, radius } = enclosing_disc(&values);
    let c2 = if min_gap.is_finite() { (n * n) as f64 * min_gap } else { 0.0 };
    let (h, _) = h_full.homogeneous_split().expect("nonzero");
    let normalized_input = (h.max_norm() - 1.0).abs() < 1e-8 && (radius - 2.0).abs() < 1e-8;
    CriticalData {
        n,
        points,
        ultra_morse,
        c1: profile.c1,
        c_prime: profile.c_prime,
        c2,
        c_doubleprime: c2.min(1.0),
        enclosing_disc: EnclosingDisc { center, radius },
        normalized_input,
        hy_squarefree: hy_squarefree(h_full, cfg),
    }
}

/// `dH/dy` squarefree: a repeated factor would give repeated roots in `y` over every `x`.
fn hy_squarefree(h_full: &BivariatePolynomial, cfg: &Config) -> bool {
    let hy = h_full.partial_y();
    let Some(dy) = hy.degree_in_y() else {
        return true;
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5F);
    (0..2).any(|_| {
        let x0 = C64::new(rng.gen_range(-1.3..1.3), rng.gen_range(-1.3..1.3));
        let c = &hy.y_coeffs_at(x0)[..=dy];
        let r = univariate::roots(c, cfg.tol_root);
        let scale = 1.0 + r.iter().map(|z| z.norm()).fold(0.0, f64::max);
        (0..r.len()).all(|i| (i + 1..r.len()).all(|j| (r[i] - r[j]).norm() > 1e-6 * scale))
    })
}

pub fn random_unitary<R: Rng>(rng: &mut R) -> [[C64; 2]; 2] {
    let u: f64 = rng.gen();
    let theta = u.sqrt().asin();
    poly::unitary(
        theta,
        rng.gen_range(0.0..2.0 * PI),
        rng.gen_range(0.0..2.0 * PI),
        rng.gen_range(0.0..2.0 * PI),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    Weak,
    Normalized,
    UnitScaled,
    CentrallyRescaled,
}

impl std::str::FromStr for NormalizationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weak" => Ok(Self::Weak),
            "normalized" => Ok(Self::Normalized),
            "unit_scaled" | "unit-scaled" => Ok(Self::UnitScaled),
            "centrally_rescaled" | "centrally-rescaled" => Ok(Self::CentrallyRescaled),
            other => Err(Error::InvalidInput(format!("unknown normalization mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalizationReport {
    pub mode: NormalizationMode,
    pub max_norm_h: f64,
    pub max_norm_lower: f64,
    pub value_at_origin: C64,
    pub enclosing_center: C64,
    pub enclosing_radius: f64,
    pub critical_values: Vec<C64>,
    /// The defining identities of the requested mode hold within 1e-8.
    pub verified: bool,
}

#[derive(Clone, Debug)]
pub struct Normalized {
    pub poly: BivariatePolynomial,
    pub transform: AffineChange,
    pub report: NormalizationReport,
}

fn lower_norm(p: &BivariatePolynomial) -> f64 {
    let (_, lower) = p.homogeneous_split().expect("nonzero");
    lower.max_norm()
}

/// Brings `H` into one of the four normal forms.
pub fn normalize(h_full: &BivariatePolynomial, mode: NormalizationMode, cfg: &Config) -> Result<Normalized> {
    let deg = h_full.degree().ok_or(Error::ZeroPolynomial)?;
    let n = deg - 1;
    let crit = critical_data(h_full, cfg)?;
    let (h, _) = h_full.homogeneous_split()?;
    let hn = h.max_norm();
    let values = crit.values();

    let mut transform = match mode {
        NormalizationMode::Weak
            if (hn - 1.0).abs() < 1e-9 && values.iter().all(|v| v.norm() <= 2.0 + 1e-9) =>
        {
            AffineChange::identity()
        }
        NormalizationMode::Weak | NormalizationMode::Normalized | NormalizationMode::UnitScaled => {
            disc_transform(&crit, hn, deg)?
        }
        NormalizationMode::CentrallyRescaled => central_transform(h_full, &crit, hn, deg, cfg)?,
    };
    let mut poly_out = h_full.apply_affine(&transform)?.compact();

    if mode == NormalizationMode::UnitScaled {
        // (H(lambda z) - H(0)) / lambda^{n+1}, lambda >= 1 the least value with ||H'|| <= 1
        let h0 = poly_out.coeff(0, 0);
        let shifted = AffineChange::image(ONE, -h0);
        let base = poly_out.apply_affine(&shifted)?;
        let norms = homogeneous_norms(&base, n);
        let lambda = solve_lower_norm(&norms, n, true);
        let step = AffineChange::homothety(C64::new(lambda, 0.0))
            .then(&AffineChange::image(C64::new(lambda.powi(-(deg as i32)), 0.0), ZERO));
        transform = transform.then(&shifted).then(&step);
        poly_out = h_full.apply_affine(&transform)?.compact();
    }

    let (h_new, _) = poly_out.homogeneous_split()?;
    let max_norm_h = h_new.max_norm();
    let max_norm_lower = lower_norm(&poly_out);
    let new_values: Vec<C64> = values.iter().map(|&a| transform.map_value(a)).collect();
    let Disc { center, radius } = enclosing_disc(&new_values);
    let h0 = poly_out.coeff(0, 0);
    let tol = 1e-8;
    let verified = match mode {
        NormalizationMode::Weak => {
            (max_norm_h - 1.0).abs() < tol && new_values.iter().all(|v| v.norm() <= 2.0 + tol)
        }
        NormalizationMode::Normalized => {
            (max_norm_h - 1.0).abs() < tol && (radius - 2.0).abs() < tol && center.norm() < tol
        }
        NormalizationMode::UnitScaled => (max_norm_h - 1.0).abs() < tol && max_norm_lower <= 1.0 + tol,
        NormalizationMode::CentrallyRescaled => {
            h0.norm() < tol && (max_norm_h - 1.0).abs() < tol && (max_norm_lower - 1.0).abs() < tol
        }
    };
    Ok(Normalized {
        poly: poly_out,
        transform,
        report: NormalizationReport {
            mode,
            max_norm_h,
            max_norm_lower,
            value_at_origin: h0,
            enclosing_center: center,
            enclosing_radius: radius,
            critical_values: new_values,
            verified,
        },
    })
}

/// Image map onto the radius-2 disc, then a preimage homothety making `||h|| = 1`.
fn disc_transform(crit: &CriticalData, hn: f64, deg: usize) -> Result<AffineChange> {
    let EnclosingDisc { center, radius } = crit.enclosing_disc.clone();
    if radius <= 1e-300 {
        return Err(Error::OutOfRange(
            "all critical values coincide; no disc normalisation exists".into(),
        ));
    }
    let mu = 2.0 / radius;
    let lambda = (1.0 / (mu * hn)).powf(1.0 / deg as f64);
    Ok(AffineChange::homothety(C64::new(lambda, 0.0)).then(&AffineChange::image(C64::new(mu, 0.0), -center * mu)))
}

fn homogeneous_norms(p: &BivariatePolynomial, n: usize) -> Vec<f64> {
    (0..=n).map(|k| p.homogeneous_part(k).max_norm()).collect()
}

/// Solves `sum_k lambda^{k-n-1} norms[k] = 1` (strictly decreasing in lambda). With
/// `at_least_one`, returns 1 when the sum is already <= 1 there.
fn solve_lower_norm(norms: &[f64], n: usize, at_least_one: bool) -> f64 {
    let f = |l: f64| -> f64 {
        norms
            .iter()
            .enumerate()
            .map(|(k, &v)| v * l.powi(k as i32 - n as i32 - 1))
            .sum::<f64>()
    };
    if at_least_one && f(1.0) <= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (if at_least_one { 1.0f64 } else { 1e-12 }, 1e12f64);
    for _ in 0..300 {
        let mid = (lo * hi).sqrt();
        if f(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    (lo * hi).sqrt()
}

fn central_transform(
    h_full: &BivariatePolynomial,
    crit: &CriticalData,
    hn: f64,
    deg: usize,
    _cfg: &Config,
) -> Result<AffineChange> {
    let n = deg - 1;
    let p = crit
        .points
        .iter()
        .min_by(|a, b| {
            a.value
                .norm()
                .total_cmp(&b.value.norm())
                .then(a.value.re.total_cmp(&b.value.re))
                .then(a.value.im.total_cmp(&b.value.im))
        })
        .ok_or(Error::NotUltraMorse)?;
    // translate the critical point to 0, subtract its value and scale ||h|| to 1
    let t0 = AffineChange::translation([p.x, p.y])
        .then(&AffineChange::image(C64::new(1.0 / hn, 0.0), -p.value / hn));
    let base = h_full.apply_affine(&t0)?;
    let norms = homogeneous_norms(&base, n);
    if norms.iter().all(|&v| v <= 1e-14 * (1.0 + base.coeff_scale())) {
        return Err(Error::TrivialLowerPart);
    }
    let lambda = solve_lower_norm(&norms, n, false);
    Ok(t0
        .then(&AffineChange::homothety(C64::new(lambda, 0.0)))
        .then(&AffineChange::image(C64::new(lambda.powi(-(deg as i32)), 0.0), ZERO)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoordinateCertificate {
    /// Smallest distance from a zero line of `h` to the new y-axis.
    pub min_line_distance: f64,
    /// `min_line_distance - 1/sqrt(n)`.
    pub disty0_margin: f64,
    /// Smallest distance between a local branch tangent at a critical point and the
    /// y-axis; `None` when the polynomial is not ultra-Morse.
    pub locbr_margin: Option<f64>,
    pub attempts: usize,
}

const LOCBR_MIN: f64 = 1e-3;

/// Picks a unitary change `H -> H o U` making the y-axis far from the zero lines of `h`
/// and transversal to the branch tangents at the critical points.
pub fn choose_coordinates(h_full: &BivariatePolynomial, cfg: &Config) -> Result<(AffineChange, CoordinateCertificate)> {
    let deg = h_full.degree().ok_or(Error::ZeroPolynomial)?;
    let n = deg - 1;
    let (h, _) = h_full.homogeneous_split()?;
    let lines = factor_zero_lines(&h, cfg)?;
    let dirs = lines.directions();
    let crit = critical_data(h_full, cfg).ok().filter(|c| c.ultra_morse);
    let tangents: Vec<[C64; 2]> = crit
        .as_ref()
        .map(|c| c.points.iter().flat_map(|p| branch_tangents(h_full, p)).collect())
        .unwrap_or_default();
    let threshold = 1.0 / (n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for attempt in 0..1000 {
        let u = if attempt == 0 {
            [[ONE, ZERO], [ZERO, ONE]]
        } else {
            random_unitary(&mut rng)
        };
        // new coordinates w with z = U w; the new y-axis is U e_2 in old coordinates
        let axis = [u[0][1], u[1][1]];
        let line_min = dirs.iter().map(|&d| line_distance(d, axis)).fold(f64::INFINITY, f64::min);
        if line_min <= threshold {
            continue;
        }
        let locbr = (!tangents.is_empty())
            .then(|| tangents.iter().map(|&d| line_distance(d, axis)).fold(f64::INFINITY, f64::min));
        if matches!(locbr, Some(m) if m <= LOCBR_MIN) {
            continue;
        }
        return Ok((
            AffineChange::linear(u),
            CoordinateCertificate {
                min_line_distance: line_min,
                disty0_margin: line_min - threshold,
                locbr_margin: locbr,
                attempts: attempt + 1,
            },
        ));
    }
    Err(Error::CoordinateSearchExhausted(1000))
}

/// The two null directions of the Hessian quadratic form at a critical point.
pub fn branch_tangents(h_full: &BivariatePolynomial, p: &CriticalPoint) -> Vec<[C64; 2]> {
    let [hxx, hxy, hyy] = h_full.hessian(p.x, p.y);
    // hxx a^2 + 2 hxy a b + hyy b^2 = 0
    let unit = |v: [C64; 2]| {
        let r = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        [v[0] / r, v[1] / r]
    };
    if hyy.norm() >= hxx.norm() {
        // direction (1, k): hyy k^2 + 2 hxy k + hxx = 0
        univariate::roots(&[hxx, hxy * 2.0, hyy], 1e-14)
            .into_iter()
            .map(|k| unit([ONE, k]))
            .collect()
    } else {
        // direction (k, 1): hxx k^2 + 2 hxy k + hyy = 0
        univariate::roots(&[hyy, hxy * 2.0, hxx], 1e-14)
            .into_iter()
            .map(|k| unit([k, ONE]))
            .collect()
    }
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

    fn cfg() -> Config {
        Config::default()
    }

    #[test]
    fn factor_cube_roots() {
        let h = BivariatePolynomial::from_real_terms(&[(0, 3, 1.0), (3, 0, -1.0)]);
        let f = factor_zero_lines(&h, &cfg()).unwrap();
        assert!(!f.contains_y_axis);
        assert!((f.c_minus1 - 1.0).norm() < 1e-15);
        for s in &f.slopes {
            assert!((s.powu(3) - 1.0).norm() < 1e-12);
        }
        assert!(f.reconstruct().approx_eq(&h, 1e-9));
    }

    #[test]
    fn factor_testbed_highest_part() {
        let h = BivariatePolynomial::from_real_terms(&[(3, 0, 1.0), (0, 3, 2.0)]);
        let f = factor_zero_lines(&h, &cfg()).unwrap();
        assert!((f.c_minus1 - 2.0).norm() < 1e-15);
        for s in &f.slopes {
            assert!((s.powu(3) * 2.0 + 1.0).norm() < 1e-12);
        }
        assert!(f.reconstruct().approx_eq(&h, 1e-9));
    }

    #[test]
    fn y_axis_flag() {
        // xy(x + y) = x^2 y + x y^2 has x as a factor
        let h = BivariatePolynomial::from_real_terms(&[(2, 1, 1.0), (1, 2, 1.0)]);
        assert!(factor_zero_lines(&h, &cfg()).unwrap().contains_y_axis);
    }

    #[test]
    fn profile_of_cube_roots() {
        let h = BivariatePolynomial::from_real_terms(&[(0, 3, 1.0), (3, 0, -1.0)]);
        let p = genericity_profile(&h, &cfg()).unwrap();
        assert!(p.is_generic);
        assert!((p.min_line_distance - PI / 3.0).abs() < 1e-12);
        assert!((p.c1 - 2.0 * PI / 3.0).abs() < 1e-12);
        assert_eq!(p.c_prime, 1.0);
    }

    #[test]
    fn orthogonal_lines_distance() {
        let d = line_distance(line_direction(c(1.0)), line_direction(c(-1.0)));
        assert!((d - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_slope_is_not_generic() {
        // y^2 (y - x)
        let h = BivariatePolynomial::from_real_terms(&[(0, 3, 1.0), (1, 2, -1.0)]);
        assert!(!genericity_profile(&h, &cfg()).unwrap().is_generic);
        let q = BivariatePolynomial::from_real_terms(&[(2, 0, 1.0), (0, 2, 1.0)]);
        assert!(matches!(genericity_profile(&q, &cfg()), Err(Error::DegreeTooLow { .. })));
    }

    #[test]
    fn testbed_critical_data() {
        let d = critical_data(&testbed(), &cfg()).unwrap();
        assert!(d.ultra_morse);
        assert_eq!(d.points.len(), 4);
        let vals = d.sorted_values();
        for (v, want) in vals.iter().zip([-6.0, -2.0, 2.0, 6.0]) {
            assert!((v - want).norm() < 1e-10, "{v}");
        }
        for p in &d.points {
            assert!((p.x.norm() - 1.0).abs() < 1e-10 && (p.y.norm() - 1.0).abs() < 1e-10);
        }
        assert!((d.c2 - 16.0).abs() < 1e-9);
        assert_eq!(d.c_doubleprime, 1.0);
        assert!((d.enclosing_disc.radius - 6.0).abs() < 1e-10);
        assert!(d.hy_squarefree);
        assert!(!d.normalized_input);
    }

    #[test]
    fn homogeneous_cubic_has_one_degenerate_point() {
        let h = BivariatePolynomial::from_real_terms(&[(3, 0, 1.0), (0, 3, 1.0)]);
        let d = critical_data(&h, &cfg()).unwrap();
        assert!(!d.ultra_morse);
        assert_eq!(d.points.len(), 1);
        assert!(d.points[0].value.norm() < 1e-12);
    }

    #[test]
    fn repeated_value_not_ultra_morse() {
        let h = BivariatePolynomial::from_real_terms(&[(3, 0, 1.0), (1, 0, -3.0), (0, 3, 1.0), (0, 1, -3.0)]);
        let d = critical_data(&h, &cfg()).unwrap();
        assert_eq!(d.points.len(), 4);
        assert!(!d.ultra_morse);
        let vals = d.sorted_values();
        for (v, want) in vals.iter().zip([-4.0, 0.0, 0.0, 4.0]) {
            assert!((v - want).norm() < 1e-10);
        }
    }

    #[test]
    fn normalize_testbed() {
        let out = normalize(&testbed(), NormalizationMode::Normalized, &cfg()).unwrap();
        assert!(out.report.verified);
        assert!((out.transform.scale - 1.0 / 3.0).norm() < 1e-12);
        let mut v = out.report.critical_values.clone();
        v.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (a, want) in v.iter().zip([-2.0, -2.0 / 3.0, 2.0 / 3.0, 2.0]) {
            assert!((a - want).norm() < 1e-10);
        }
        let again = critical_data(&out.poly, &cfg()).unwrap();
        assert!(again.normalized_input);
        // idempotence of the weak mode on normalised input
        let weak = normalize(&out.poly, NormalizationMode::Weak, &cfg()).unwrap();
        assert!(weak.transform.is_identity(1e-12));
    }

    #[test]
    fn centrally_rescaled_translated_testbed() {
        let shifted = testbed().apply_affine(&AffineChange::translation([c(1.0), c(1.0)])).unwrap();
        let out = normalize(&shifted, NormalizationMode::CentrallyRescaled, &cfg()).unwrap();
        assert!(out.report.verified, "{:?}", out.report);
        assert!(out.poly.coeff(0, 0).norm() < 1e-8);
        assert!((out.report.max_norm_h - 1.0).abs() < 1e-8);
        assert!((out.report.max_norm_lower - 1.0).abs() < 1e-8);
    }

    #[test]
    fn unit_scaled_bounds_lower_terms() {
        let out = normalize(&testbed(), NormalizationMode::UnitScaled, &cfg()).unwrap();
        assert!(out.report.verified, "{:?}", out.report);
    }

    #[test]
    fn coordinates_for_testbed_keep_identity() {
        let (u, cert) = choose_coordinates(&testbed(), &cfg()).unwrap();
        assert!(u.is_identity(0.0));
        assert!(cert.disty0_margin > 0.0);
        assert!(cert.locbr_margin.unwrap() > 0.0);
    }

    #[test]
    fn coordinates_for_cube_roots() {
        let h = BivariatePolynomial::from_real_terms(&[(0, 3, 1.0), (3, 0, -1.0)]);
        let (_, cert) = choose_coordinates(&h, &cfg()).unwrap();
        assert!(cert.min_line_distance > 1.0 / 2f64.sqrt());
    }
}
