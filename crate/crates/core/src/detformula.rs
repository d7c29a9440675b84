//! The closed form of the period determinant: form tuples, the matrices `A_d`, the
//! discriminant of the highest part, the universal constant `C_n` and the comparison
//! with numerically computed determinants.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::genericity::{critical_data, factor_zero_lines};
use crate::linalg;
use crate::poly::{BivariatePolynomial, MonomialForm};

pub type C64 = Complex64;

/// Largest `n` for which tuple enumeration is supported.
pub const MAX_TUPLE_N: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct FormTuple {
    pub forms: Vec<MonomialForm>,
}

/// Serialised as `{"l": .., "m": ..}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormIndex {
    pub l: u32,
    pub m: u32,
}

impl FormTuple {
    pub fn from_pairs(pairs: &[(u32, u32)]) -> Self {
        Self {
            forms: pairs.iter().map(|&(l, m)| MonomialForm::new(l, m)).collect(),
        }
    }

    pub fn pairs(&self) -> Vec<FormIndex> {
        self.forms.iter().map(|w| FormIndex { l: w.l, m: w.m }).collect()
    }

    /// `x^l y^{m+1} dx` for `(l, m)` in lexicographic order, `0 <= l, m <= n - 1`.
    pub fn lexicographic(n: usize) -> Self {
        let n = n as u32;
        Self::from_pairs(&(0..n).flat_map(|l| (0..n).map(move |m| (l, m))).collect::<Vec<_>>())
    }

    /// Forms of degree `d + 1`, in tuple order.
    pub fn group(&self, d: usize) -> Vec<MonomialForm> {
        self.forms.iter().filter(|w| (w.l + w.m) as usize == d).copied().collect()
    }

    /// Standard and d-standard for the given `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.forms.len() != n * n {
            return Err(Error::TupleSize {
                expected: n * n,
                found: self.forms.len(),
            });
        }
        for w in &self.forms {
            if w.degree() > 2 * n - 1 {
                return Err(Error::WrongFormDegree {
                    l: w.l,
                    m1: w.m + 1,
                    found: w.degree(),
                    expected: 2 * n - 1,
                });
            }
        }
        for d in 0..n {
            for l in 0..=d as u32 {
                let m = d as u32 - l;
                if !self.forms.iter().any(|w| w.l == l && w.m == m) {
                    return Err(Error::InvalidInput(format!(
                        "tuple misses the mandatory form x^{l} y^{} dx",
                        m + 1
                    )));
                }
            }
        }
        for d in n..=2 * n - 2 {
            let s = self.group(d).len();
            if s != 2 * n - d - 1 {
                return Err(Error::TupleSize {
                    expected: 2 * n - d - 1,
                    found: s,
                });
            }
        }
        Ok(())
    }
}

/// Coefficient row of a degree-`d` form in the columns `y^d, y^{d-1} x, ..., x^d`.
fn row(p: &BivariatePolynomial, d: usize) -> Vec<C64> {
    (0..=d).map(|c| p.coeff(c, d - c)).collect()
}

/// The `(d+1) x (d+1)` matrix attached to the forms of degree `d + 1`.
pub fn build_a_d(h: &BivariatePolynomial, group: &[MonomialForm], d: usize) -> Result<Vec<Vec<C64>>> {
    let n = h.degree().ok_or(Error::ZeroPolynomial)? - 1;
    let s = if d <= n - 1 { d + 1 } else { 2 * n - d - 1 };
    if group.len() != s {
        return Err(Error::TupleSize {
            expected: s,
            found: group.len(),
        });
    }
    for w in group {
        if (w.l + w.m) as usize != d {
            return Err(Error::WrongFormDegree {
                l: w.l,
                m1: w.m + 1,
                found: w.degree(),
                expected: d + 1,
            });
        }
    }
    let scaled = |r: usize, denom: usize| row(&group[r].d_operator().scale(C64::new(1.0 / denom as f64, 0.0)), d);
    if d <= n - 1 {
        return Ok((0..s).map(|r| scaled(r, d - (r + 1) + 2)).collect());
    }
    let hx = h.partial_x();
    let hy = h.partial_y();
    let shifts = |g: &BivariatePolynomial| -> Vec<Vec<C64>> {
        (0..=d - n)
            .map(|j| row(&(&BivariatePolynomial::monomial(j, d - n - j, C64::new(1.0, 0.0)) * g), d))
            .collect()
    };
    let mut rows = shifts(&hy);
    rows.extend((0..s).map(|r| scaled(r, n - (r + 1) + 1)));
    rows.extend(shifts(&hx));
    Ok(rows)
}

pub fn p_d(h: &BivariatePolynomial, group: &[MonomialForm], d: usize) -> Result<C64> {
    Ok(linalg::det(&build_a_d(h, group, d)?))
}

/// `c_{-1}^{2n} prod_{j<i} (c_i - c_j)^2` for `h = c_{-1} prod (y - c_i x)`.
pub fn sigma_discriminant(h: &BivariatePolynomial, cfg: &Config) -> Result<C64> {
    let f = factor_zero_lines(h, cfg)?;
    if f.contains_y_axis {
        return Err(Error::YAxisZeroLine);
    }
    let n = f.slopes.len() - 1;
    let mut s = f.c_minus1.powu(2 * n as u32);
    for i in 0..f.slopes.len() {
        for j in 0..i {
            let d = f.slopes[i] - f.slopes[j];
            s *= d * d;
        }
    }
    Ok(s)
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// `ln |C_n|`.
pub fn ln_abs_cn(n: usize) -> f64 {
    let nf = n as f64;
    0.5 * nf * (nf + 1.0) * (2.0 * std::f64::consts::PI).ln()
        + 0.5 * (nf * nf + nf - 4.0) * (nf + 1.0).ln()
        + nf * ln_factorial(n + 1)
        - (1..n).map(|m| ln_factorial(m + n + 1)).sum::<f64>()
}

/// The sign factor `(-1)^{n(3n-1)/4}` as a unit complex number, taking the principal
/// branch `exp(i pi n(3n-1)/4)`; it is never asserted.
pub fn cn_phase(n: usize) -> C64 {
    C64::from_polar(1.0, std::f64::consts::PI * (n * (3 * n - 1)) as f64 / 4.0)
}

/// Ordered tuple of forms satisfying the (d-)standard conditions, with the forms of
/// each degree above `n - 1` chosen to maximise `|P_d|`.
pub fn choose_form_tuple(h: &BivariatePolynomial) -> Result<FormTuple> {
    let n = h.degree().ok_or(Error::ZeroPolynomial)? - 1;
    if n > MAX_TUPLE_N {
        return Err(Error::UnsupportedDegree(n));
    }
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for d in 0..n as u32 {
        for l in 0..=d {
            pairs.push((l, d - l));
        }
    }
    for d in n..=2 * n - 2 {
        let s = 2 * n - d - 1;
        let candidates: Vec<MonomialForm> = (0..=d as u32).map(|l| MonomialForm::new(l, d as u32 - l)).collect();
        let mut best: Option<(f64, Vec<MonomialForm>)> = None;
        for subset in combinations(candidates.len(), s) {
            let group: Vec<MonomialForm> = subset.iter().map(|&i| candidates[i]).collect();
            let v = p_d(h, &group, d)?.norm();
            // strict improvement keeps the lexicographically first maximiser
            if best.as_ref().map_or(true, |b| v > b.0 * (1.0 + 1e-12)) {
                best = Some((v, group));
            }
        }
        let (v, group) = best.expect("nonempty subsets");
        if v < 1e-12 {
            return Err(Error::AllSubsetsDegenerate);
        }
        pairs.extend(group.iter().map(|w| (w.l, w.m)));
    }
    Ok(FormTuple::from_pairs(&pairs))
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedFormConstant {
    pub n: usize,
    pub ln_abs_cn: f64,
    pub sigma: C64,
    pub p_d: Vec<C64>,
    /// `ln |C(h, Omega)|`.
    pub ln_abs_c: f64,
    /// Phase of `cn_phase * Sigma^{1/2-n} * P` on the principal branch; informational.
    pub nominal_phase: C64,
}

impl ClosedFormConstant {
    pub fn abs_c(&self) -> f64 {
        self.ln_abs_c.exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedForm {
    pub constant: ClosedFormConstant,
    pub critical_values: Vec<C64>,
}

impl ClosedForm {
    /// `|C| prod (t - a_i)` with the nominal phase.
    pub fn eval(&self, t: C64) -> C64 {
        let prod: C64 = self.critical_values.iter().map(|a| t - a).product();
        self.constant.nominal_phase * self.constant.abs_c() * prod
    }
}

pub fn closed_form_constant(h: &BivariatePolynomial, tuple: &FormTuple, cfg: &Config) -> Result<ClosedFormConstant> {
    let n = h.degree().ok_or(Error::ZeroPolynomial)? - 1;
    tuple.validate(n)?;
    let sigma = sigma_discriminant(h, cfg)?;
    let p: Vec<C64> = (n..=2 * n - 2)
        .map(|d| p_d(h, &tuple.group(d), d))
        .collect::<Result<_>>()?;
    let ln_cn = ln_abs_cn(n);
    let exponent = 0.5 - n as f64;
    let ln_abs_c = ln_cn + exponent * sigma.norm().ln() + p.iter().map(|v| v.norm().ln()).sum::<f64>();
    let phase = cn_phase(n)
        * C64::from_polar(1.0, exponent * sigma.arg())
        * p.iter().fold(C64::new(1.0, 0.0), |acc, v| acc * v / v.norm());
    Ok(ClosedFormConstant {
        n,
        ln_abs_cn: ln_cn,
        sigma,
        p_d: p,
        ln_abs_c,
        nominal_phase: phase,
    })
}

pub fn closed_form_delta(h_full: &BivariatePolynomial, tuple: &FormTuple, cfg: &Config) -> Result<ClosedForm> {
    let (h, _) = h_full.homogeneous_split()?;
    let constant = closed_form_constant(&h, tuple, cfg)?;
    let crit = critical_data(h_full, cfg)?;
    if !crit.ultra_morse {
        return Err(Error::NotUltraMorse);
    }
    Ok(ClosedForm {
        constant,
        critical_values: crit.values(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub max_rel_err: f64,
    pub phase: C64,
    pub log_abs_c: f64,
    /// Largest relative deviation of `Delta_numeric` from `phase * Delta_closed`.
    pub max_rel_err_complex: f64,
}

/// Tolerance of the verdict on moduli.
pub const VERDICT_TOL: f64 = 1e-4;

/// Compares numerical determinants with the closed form after fitting one unimodular
/// phase.
pub fn compare(closed: &ClosedForm, ts: &[C64], numeric: &[C64]) -> Verdict {
    let cl: Vec<C64> = ts.iter().map(|&t| closed.eval(t)).collect();
    let s: C64 = numeric.iter().zip(&cl).map(|(a, b)| a * b.conj()).sum();
    let phase = if s.norm() > 0.0 { s / s.norm() } else { C64::new(1.0, 0.0) };
    let mut err: f64 = 0.0;
    let mut err_c: f64 = 0.0;
    for (a, b) in numeric.iter().zip(&cl) {
        err = err.max((a.norm() - b.norm()).abs() / b.norm());
        err_c = err_c.max((a - phase * b).norm() / b.norm());
    }
    Verdict {
        pass: err < VERDICT_TOL,
        max_rel_err: err,
        phase,
        log_abs_c: closed.constant.ln_abs_c,
        max_rel_err_complex: err_c,
    }
}

/// Numerical determinants at `ts` against the closed form.
pub fn verify_formula(h_full: &BivariatePolynomial, tuple: &FormTuple, ts: &[C64], cfg: &Config) -> Result<(Verdict, crate::integrals::DeterminantSamples)> {
    let closed = closed_form_delta(h_full, tuple, cfg)?;
    let samples = crate::integrals::determinant_samples(h_full, &tuple.forms, ts, cfg)?;
    Ok((compare(&closed, ts, &samples.values), samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic_lines() -> BivariatePolynomial {
        BivariatePolynomial::from_real_terms(&[(0, 3, 1.0), (3, 0, -1.0)])
    }

    #[test]
    fn a2_rows_for_difference_of_cubes() {
        let a = build_a_d(&cubic_lines(), &[MonomialForm::new(1, 1)], 2).unwrap();
        let want = [[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -3.0]];
        for (r, w) in a.iter().zip(want) {
            for (x, y) in r.iter().zip(w) {
                assert!((x - y).norm() < 1e-15);
            }
        }
        assert!((p_d(&cubic_lines(), &[MonomialForm::new(1, 1)], 2).unwrap() + 9.0).norm() < 1e-12);
    }

    #[test]
    fn sigma_of_difference_of_cubes() {
        let s = sigma_discriminant(&cubic_lines(), &Config::default()).unwrap();
        assert!((s + 27.0).norm() < 1e-10, "{s}");
    }

    #[test]
    fn c2_modulus() {
        assert!((ln_abs_cn(2).exp() - 1116.20).abs() < 0.05);
        let direct = (2.0 * std::f64::consts::PI).powi(3) * 3.0 * 36.0 / 24.0;
        assert!((ln_abs_cn(2).exp() - direct).abs() < 1e-9);
    }

    #[test]
    fn tuple_cardinality_identity() {
        for n in 2..=8 {
            let t = FormTuple::lexicographic(n);
            t.validate(n).unwrap();
            let mandatory = n * (n + 1) / 2;
            let extra: usize = (n..=2 * n - 2).map(|d| 2 * n - d - 1).sum();
            assert_eq!(mandatory + extra, n * n);
        }
    }

    #[test]
    fn chosen_tuple_for_n2_is_valid() {
        let h = BivariatePolynomial::from_real_terms(&[(3, 0, 1.0), (0, 3, 2.0)]);
        let t = choose_form_tuple(&h).unwrap();
        t.validate(2).unwrap();
        assert_eq!(t.forms.len(), 4);
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(3, 3).len(), 1);
        assert_eq!(combinations(3, 0).len(), 1);
    }

    #[test]
    fn testbed_constant() {
        let h = BivariatePolynomial::from_real_terms(&[(3, 0, 1.0), (0, 3, 2.0)]);
        let c = closed_form_constant(&h, &FormTuple::lexicographic(2), &Config::default()).unwrap();
        assert!((c.sigma + 108.0).norm() < 1e-9, "{}", c.sigma);
        assert!((c.p_d[0].norm() - 18.0).abs() < 1e-9);
        let expect = 1116.2053 * 108f64.powf(-1.5) * 18.0;
        assert!((c.abs_c() - expect).abs() < 1e-3 * expect);
    }
}
