//! Complex bivariate polynomials, their norms, monomial 1-forms and affine changes.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Dense polynomial in `(x, y)` with complex coefficients; the coefficient of
/// `x^i y^j` lives at slot `(i, j)` and only `i + j <= degree_bound` is stored.
#[derive(Clone, PartialEq)]
pub struct BivariatePolynomial {
    degree_bound: usize,
    coeffs: Vec<C64>,
}

impl fmt::Debug for BivariatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .terms()
            .map(|(i, j, c)| format!("({}{:+}i)x^{}y^{}", c.re, c.im, i, j))
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl BivariatePolynomial {
    pub fn zero(degree_bound: usize) -> Self {
        let w = degree_bound + 1;
        Self {
            degree_bound,
            coeffs: vec![ZERO; w * w],
        }
    }

    pub fn constant(c: C64) -> Self {
        let mut p = Self::zero(0);
        p.coeffs[0] = c;
        p
    }

    pub fn monomial(i: usize, j: usize, c: C64) -> Self {
        let mut p = Self::zero(i + j);
        p.set_coeff(i, j, c);
        p
    }

    /// Builds a polynomial from `(i, j, coefficient)` triples; duplicates are rejected.
    pub fn from_terms(degree_bound: usize, terms: &[(usize, usize, C64)]) -> Result<Self> {
        let mut p = Self::zero(degree_bound);
        let mut seen = std::collections::HashSet::new();
        for &(i, j, c) in terms {
            if i + j > degree_bound {
                return Err(Error::InvalidInput(format!(
                    "monomial x^{i}y^{j} exceeds degree bound {degree_bound}"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidInput(format!("duplicate monomial x^{i}y^{j}")));
            }
            p.set_coeff(i, j, c);
        }
        Ok(p)
    }

    /// Real-coefficient convenience constructor.
    pub fn from_real_terms(terms: &[(usize, usize, f64)]) -> Self {
        let d = terms.iter().map(|&(i, j, _)| i + j).max().unwrap_or(0);
        let mut p = Self::zero(d);
        for &(i, j, c) in terms {
            let old = p.coeff(i, j);
            p.set_coeff(i, j, old + c);
        }
        p
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.degree_bound + 1) + j
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn coeff(&self, i: usize, j: usize) -> C64 {
        if i + j > self.degree_bound {
            ZERO
        } else {
            self.coeffs[self.idx(i, j)]
        }
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, c: C64) {
        if i + j > self.degree_bound {
            self.grow(i + j);
        }
        let k = self.idx(i, j);
        self.coeffs[k] = c;
    }

    fn grow(&mut self, new_bound: usize) {
        let mut q = Self::zero(new_bound);
        for (i, j, c) in self.terms() {
            let k = q.idx(i, j);
            q.coeffs[k] = c;
        }
        *self = q;
    }

    /// Nonzero terms in lexicographic `(i, j)` order.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        let d = self.degree_bound;
        (0..=d).flat_map(move |i| {
            (0..=d - i).filter_map(move |j| {
                let c = self.coeffs[i * (d + 1) + j];
                (c != ZERO).then_some((i, j, c))
            })
        })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    /// Actual total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms().map(|(i, j, _)| i + j).max()
    }

    /// Degree in `y` alone.
    pub fn degree_in_y(&self) -> Option<usize> {
        self.terms().map(|(_, j, _)| j).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms().map(|(i, j, _)| i + j);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    /// Shrinks the degree bound to the actual degree.
    pub fn compact(&self) -> Self {
        let d = self.degree().unwrap_or(0);
        let mut q = Self::zero(d);
        for (i, j, c) in self.terms() {
            q.set_coeff(i, j, c);
        }
        q
    }

    pub fn eval(&self, x: C64, y: C64) -> C64 {
        let d = self.degree_bound;
        let mut acc = ZERO;
        for i in (0..=d).rev() {
            let mut row = ZERO;
            for j in (0..=d - i).rev() {
                row = row * y + self.coeffs[i * (d + 1) + j];
            }
            acc = acc * x + row;
        }
        acc
    }

    /// Value and gradient `(dp/dx, dp/dy)` at `(x, y)`.
    pub fn eval_and_gradient(&self, x: C64, y: C64) -> (C64, [C64; 2]) {
        let d = self.degree_bound;
        // p = sum_i x^i r_i(y); track r_i and r_i' per row with Horner in x.
        let mut p = ZERO;
        let mut px = ZERO;
        let mut py = ZERO;
        for i in (0..=d).rev() {
            let mut r = ZERO;
            let mut dr = ZERO;
            for j in (0..=d - i).rev() {
                dr = dr * y + r;
                r = r * y + self.coeffs[i * (d + 1) + j];
            }
            px = px * x + p;
            p = p * x + r;
            py = py * x + dr;
        }
        (p, [px, py])
    }

    /// Second derivatives `(p_xx, p_xy, p_yy)`.
    pub fn hessian(&self, x: C64, y: C64) -> [C64; 3] {
        let (px, py) = (self.partial_x(), self.partial_y());
        let (_, gx) = px.eval_and_gradient(x, y);
        let (_, gy) = py.eval_and_gradient(x, y);
        [gx[0], gx[1], gy[1]]
    }

    pub fn partial_x(&self) -> Self {
        let mut q = Self::zero(self.degree_bound.saturating_sub(1));
        for (i, j, c) in self.terms() {
            if i > 0 {
                q.set_coeff(i - 1, j, c * i as f64);
            }
        }
        q
    }

    pub fn partial_y(&self) -> Self {
        let mut q = Self::zero(self.degree_bound.saturating_sub(1));
        for (i, j, c) in self.terms() {
            if j > 0 {
                q.set_coeff(i, j - 1, c * j as f64);
            }
        }
        q
    }

    /// Degree-`k` homogeneous component.
    pub fn homogeneous_part(&self, k: usize) -> Self {
        let mut q = Self::zero(k);
        for (i, j, c) in self.terms() {
            if i + j == k {
                q.set_coeff(i, j, c);
            }
        }
        q
    }

    /// Splits `p = h + lower` with `h` the highest homogeneous part.
    pub fn homogeneous_split(&self) -> Result<(Self, Self)> {
        let d = self.degree().ok_or(Error::UndefinedHighestPart)?;
        let h = self.homogeneous_part(d);
        let mut lower = Self::zero(d);
        for (i, j, c) in self.terms() {
            if i + j < d {
                lower.set_coeff(i, j, c);
            }
        }
        Ok((h, lower))
    }

    /// Coefficients in `y` (ascending) of `p(x, .)` at fixed `x`.
    pub fn y_coeffs_at(&self, x: C64) -> Vec<C64> {
        let d = self.degree_bound;
        let mut out = vec![ZERO; d + 1];
        let mut xp = ONE;
        for i in 0..=d {
            for (j, slot) in out.iter_mut().enumerate().take(d - i + 1) {
                *slot += self.coeffs[i * (d + 1) + j] * xp;
            }
            xp *= x;
        }
        out
    }

    /// Coefficients in `x` (ascending) of `p(., y)` at fixed `y`.
    pub fn x_coeffs_at(&self, y: C64) -> Vec<C64> {
        self.swap_xy().y_coeffs_at(y)
    }

    pub fn swap_xy(&self) -> Self {
        let mut q = Self::zero(self.degree_bound);
        for (i, j, c) in self.terms() {
            q.set_coeff(j, i, c);
        }
        q
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            degree_bound: self.degree_bound,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `p(lambda x, lambda y)`.
    pub fn homothety(&self, lambda: C64) -> Self {
        let mut q = Self::zero(self.degree_bound);
        for (i, j, c) in self.terms() {
            q.set_coeff(i, j, c * lambda.powu((i + j) as u32));
        }
        q
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let d = self.degree_bound.max(other.degree_bound);
        (0..=d).all(|i| (0..=d - i).all(|j| (self.coeff(i, j) - other.coeff(i, j)).norm() <= tol))
    }

    /// Largest coefficient modulus.
    pub fn coeff_scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Sup of `|p|` on the unit sphere for homogeneous `p`; for general `p` the sum
    /// over homogeneous parts.
    pub fn max_norm(&self) -> f64 {
        match self.degree() {
            None => 0.0,
            Some(d) => (0..=d)
                .map(|k| homogeneous_max_norm(&self.homogeneous_part(k), k))
                .sum(),
        }
    }

    /// Square root of the sum of squared coefficient moduli (homogeneous input only).
    pub fn hermitian_norm(&self) -> Result<f64> {
        if !self.is_homogeneous() {
            return Err(Error::NotHomogeneous);
        }
        Ok(self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
    }

    /// Substitutes `x -> a x + b y + e`, `y -> c x + d y + f`.
    pub fn compose_affine(&self, m: [[C64; 2]; 2], shift: [C64; 2]) -> Self {
        let d = self.degree().unwrap_or(0);
        let lx = Self::from_terms(1, &[(1, 0, m[0][0]), (0, 1, m[0][1]), (0, 0, shift[0])])
            .expect("linear form");
        let ly = Self::from_terms(1, &[(1, 0, m[1][0]), (0, 1, m[1][1]), (0, 0, shift[1])])
            .expect("linear form");
        let mut xp = vec![Self::constant(ONE)];
        let mut yp = vec![Self::constant(ONE)];
        for k in 1..=d {
            xp.push(&xp[k - 1] * &lx);
            yp.push(&yp[k - 1] * &ly);
        }
        let mut out = Self::zero(d);
        for (i, j, c) in self.terms() {
            out = &out + &(&xp[i] * &yp[j]).scale(c);
        }
        out
    }

    /// `mu * p(T_pre(x, y)) + nu`.
    pub fn apply_affine(&self, t: &AffineChange) -> Result<Self> {
        if t.determinant().norm() < 1e-300 {
            return Err(Error::SingularMatrix);
        }
        let mut q = self.compose_affine(t.matrix, t.shift).scale(t.scale);
        let c0 = q.coeff(0, 0);
        q.set_coeff(0, 0, c0 + t.offset);
        Ok(q)
    }

    /// The linear form `((x, y), u) = x conj(u0) + y conj(u1)`.
    pub fn linear_form(u: [C64; 2]) -> Self {
        Self::from_terms(1, &[(1, 0, u[0].conj()), (0, 1, u[1].conj())]).expect("linear form")
    }
}

impl Add for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn add(self, rhs: Self) -> BivariatePolynomial {
        let d = self.degree_bound.max(rhs.degree_bound);
        let mut out = BivariatePolynomial::zero(d);
        for i in 0..=d {
            for j in 0..=d - i {
                out.set_coeff(i, j, self.coeff(i, j) + rhs.coeff(i, j));
            }
        }
        out
    }
}

impl Sub for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn sub(self, rhs: Self) -> BivariatePolynomial {
        self + &(-rhs)
    }
}

impl Neg for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn neg(self) -> BivariatePolynomial {
        self.scale(-ONE)
    }
}

impl Mul for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn mul(self, rhs: Self) -> BivariatePolynomial {
        let mut out = BivariatePolynomial::zero(self.degree_bound + rhs.degree_bound);
        for (i, j, a) in self.terms() {
            for (k, l, b) in rhs.terms() {
                let c = out.coeff(i + k, j + l);
                out.set_coeff(i + k, j + l, c + a * b);
            }
        }
        out
    }
}

/// Restriction of a degree-`k` homogeneous polynomial to the sphere, written in
/// `(theta, psi)` after factoring out the global phase:
/// `S = sum_j c_{k-j,j} cos^{k-j} sin^j e^{i j psi}`.
struct SphereSlice {
    k: usize,
    c: Vec<C64>,
}

impl SphereSlice {
    fn new(p: &BivariatePolynomial, k: usize) -> Self {
        Self {
            k,
            c: (0..=k).map(|j| p.coeff(k - j, j)).collect(),
        }
    }

    /// `(S, dS/dtheta, dS/dpsi)`.
    fn eval(&self, theta: f64, psi: f64) -> (C64, C64, C64) {
        let (s, c) = theta.sin_cos();
        let k = self.k as i32;
        let mut v = ZERO;
        let mut dt = ZERO;
        let mut dp = ZERO;
        for (j, &a) in self.c.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let ji = j as i32;
            let ph = C64::from_polar(1.0, ji as f64 * psi) * a;
            let base = powi(c, k - ji) * powi(s, ji);
            v += ph * base;
            let d = -((k - ji) as f64) * powi(c, k - ji - 1) * powi(s, ji + 1)
                + ji as f64 * powi(c, k - ji + 1) * powi(s, ji - 1);
            dt += ph * d;
            dp += ph * C64::new(0.0, ji as f64) * base;
        }
        (v, dt, dp)
    }

    fn objective(&self, theta: f64, psi: f64) -> (f64, [f64; 2]) {
        let (v, dt, dp) = self.eval(theta, psi);
        let g = v.norm_sqr();
        (g, [2.0 * (v.conj() * dt).re, 2.0 * (v.conj() * dp).re])
    }
}

fn powi(x: f64, e: i32) -> f64 {
    if e <= 0 {
        if e == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        x.powi(e)
    }
}

const GRID: usize = 128;
const STARTS: usize = 5;
const ASCENT_STEPS: usize = 60;

fn homogeneous_max_norm(p: &BivariatePolynomial, k: usize) -> f64 {
    if p.is_zero() {
        return 0.0;
    }
    if k == 0 {
        return p.coeff(0, 0).norm();
    }
    let slice = SphereSlice::new(p, k);
    let half_pi = PI / 2.0;
    let mut grid: Vec<(f64, f64, f64)> = Vec::with_capacity(GRID * GRID);
    for a in 0..GRID {
        let theta = half_pi * a as f64 / (GRID - 1) as f64;
        for b in 0..GRID {
            let psi = 2.0 * PI * b as f64 / GRID as f64;
            grid.push((slice.objective(theta, psi).0, theta, psi));
        }
    }
    grid.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = grid[0].0;
    for &(_, theta0, psi0) in grid.iter().take(STARTS) {
        best = best.max(ascend(&slice, theta0, psi0));
    }
    best.sqrt()
}

/// Projected Newton/gradient ascent on `|S|^2`, theta clamped to `[0, pi/2]`.
fn ascend(slice: &SphereSlice, mut theta: f64, mut psi: f64) -> f64 {
    let clamp = |t: f64| t.clamp(0.0, PI / 2.0);
    let (mut g, mut grad) = slice.objective(theta, psi);
    let mut step = 0.05;
    for _ in 0..ASCENT_STEPS {
        // Newton direction from a finite-difference Hessian of the analytic gradient.
        let h = 1e-6;
        let (_, gt) = slice.objective(theta + h, psi);
        let (_, gp) = slice.objective(theta, psi + h);
        let (_, gtm) = slice.objective(theta - h, psi);
        let (_, gpm) = slice.objective(theta, psi - h);
        let htt = (gt[0] - gtm[0]) / (2.0 * h);
        let hpp = (gp[1] - gpm[1]) / (2.0 * h);
        let htp = 0.5 * ((gt[1] - gtm[1]) + (gp[0] - gpm[0])) / (2.0 * h);
        let det = htt * hpp - htp * htp;
        let mut moved = false;
        if htt < 0.0 && det > 0.0 {
            let dt = -(hpp * grad[0] - htp * grad[1]) / det;
            let dp = -(-htp * grad[0] + htt * grad[1]) / det;
            let (nt, np) = (clamp(theta + dt), psi + dp);
            let (ng, ngrad) = slice.objective(nt, np);
            if ng >= g {
                theta = nt;
                psi = np;
                g = ng;
                grad = ngrad;
                moved = true;
            }
        }
        if !moved {
            let norm = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
            if norm == 0.0 {
                break;
            }
            loop {
                let nt = clamp(theta + step * grad[0] / norm);
                let np = psi + step * grad[1] / norm;
                let (ng, ngrad) = slice.objective(nt, np);
                if ng > g {
                    theta = nt;
                    psi = np;
                    g = ng;
                    grad = ngrad;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
                if step < 1e-14 {
                    return g;
                }
            }
        }
    }
    g
}

/// A monomial 1-form `c x^l y^{m+1} dx`; its degree is `l + m + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonomialForm {
    pub l: u32,
    pub m: u32,
    pub coefficient: C64,
}

impl MonomialForm {
    pub fn new(l: u32, m: u32) -> Self {
        Self {
            l,
            m,
            coefficient: ONE,
        }
    }

    pub fn scaled(self, s: C64) -> Self {
        Self {
            coefficient: self.coefficient * s,
            ..self
        }
    }

    pub fn degree(&self) -> usize {
        (self.l + self.m + 1) as usize
    }

    /// `D omega = (m + 1) x^l y^m`, with the positive sign convention of the
    /// coefficient-matrix construction.
    pub fn d_operator(&self) -> BivariatePolynomial {
        BivariatePolynomial::monomial(
            self.l as usize,
            self.m as usize,
            self.coefficient * (self.m + 1) as f64,
        )
    }

    /// Integrand `x^l y^{m+1}` of the form against `dx`.
    #[inline]
    pub fn integrand(&self, x: C64, y: C64) -> C64 {
        self.coefficient * x.powu(self.l) * y.powu(self.m + 1)
    }
}

/// Affine change in the preimage, `z -> matrix z + shift`, combined with an affine map
/// `t -> scale t + offset` of the image. Acting on a polynomial it produces
/// `scale * p(matrix z + shift) + offset`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AffineChange {
    pub matrix: [[C64; 2]; 2],
    pub shift: [C64; 2],
    pub scale: C64,
    pub offset: C64,
}

impl Default for AffineChange {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineChange {
    pub fn identity() -> Self {
        Self {
            matrix: [[ONE, ZERO], [ZERO, ONE]],
            shift: [ZERO, ZERO],
            scale: ONE,
            offset: ZERO,
        }
    }

    pub fn linear(matrix: [[C64; 2]; 2]) -> Self {
        Self {
            matrix,
            ..Self::identity()
        }
    }

    pub fn homothety(lambda: C64) -> Self {
        Self::linear([[lambda, ZERO], [ZERO, lambda]])
    }

    pub fn translation(shift: [C64; 2]) -> Self {
        Self {
            shift,
            ..Self::identity()
        }
    }

    pub fn image(scale: C64, offset: C64) -> Self {
        Self {
            scale,
            offset,
            ..Self::identity()
        }
    }

    pub fn determinant(&self) -> C64 {
        self.matrix[0][0] * self.matrix[1][1] - self.matrix[0][1] * self.matrix[1][0]
    }

    /// The change obtained by applying `self` first and then `next`.
    pub fn then(&self, next: &AffineChange) -> AffineChange {
        let a = &self.matrix;
        let b = &next.matrix;
        let mut m = [[ZERO; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        let s = [
            a[0][0] * next.shift[0] + a[0][1] * next.shift[1] + self.shift[0],
            a[1][0] * next.shift[0] + a[1][1] * next.shift[1] + self.shift[1],
        ];
        AffineChange {
            matrix: m,
            shift: s,
            scale: next.scale * self.scale,
            offset: next.scale * self.offset + next.offset,
        }
    }

    /// Image of a critical value of the old polynomial.
    pub fn map_value(&self, t: C64) -> C64 {
        self.scale * t + self.offset
    }

    /// Where an old preimage point sits in the new coordinates.
    pub fn pull_point(&self, z: [C64; 2]) -> Result<[C64; 2]> {
        let det = self.determinant();
        if det.norm() < 1e-300 {
            return Err(Error::SingularMatrix);
        }
        let u = [z[0] - self.shift[0], z[1] - self.shift[1]];
        let m = &self.matrix;
        Ok([
            (m[1][1] * u[0] - m[0][1] * u[1]) / det,
            (-m[1][0] * u[0] + m[0][0] * u[1]) / det,
        ])
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        let id = Self::identity();
        let d = |a: C64, b: C64| (a - b).norm() <= tol;
        (0..2).all(|i| (0..2).all(|j| d(self.matrix[i][j], id.matrix[i][j])))
            && d(self.shift[0], ZERO)
            && d(self.shift[1], ZERO)
            && d(self.scale, ONE)
            && d(self.offset, ZERO)
    }
}

/// The unitary matrix of a rotation by `(theta, phases)`, used by coordinate searches.
pub fn unitary(theta: f64, alpha: f64, beta: f64, gamma: f64) -> [[C64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    let e = |a: f64| C64::from_polar(1.0, a);
    [
        [e(alpha) * c, -e(alpha + beta - gamma) * s],
        [e(gamma) * s, e(beta) * c],
    ]
}

pub fn from_univariate_roots_in_slope(c_minus1: C64, slopes: &[C64]) -> BivariatePolynomial {
    // c_{-1} prod (y - c_i x)
    let mut p = BivariatePolynomial::constant(c_minus1);
    for &s in slopes {
        let f = BivariatePolynomial::from_terms(1, &[(1, 0, -s), (0, 1, ONE)]).expect("linear");
        p = &p * &f;
    }
    p
}

/// Univariate polynomial `c -> h(1, c)` in the slope variable (ascending), for homogeneous `h`.
pub fn slope_polynomial(h: &BivariatePolynomial) -> Vec<C64> {
    let d = h.degree().unwrap_or(0);
    (0..=d).map(|j| h.coeff(d - j, j)).collect()
}
