//! Exact (untruncated) polynomial maps of ℂ² and one-variable series.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet2::{invert_matrix, Jet2Scalar, JetMap2};
use crate::point::{self, Point};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A single monomial `coeff · z^i w^j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "(usize, usize, f64, f64)", from = "(usize, usize, f64, f64)")]
pub struct Term {
    pub i: usize,
    pub j: usize,
    pub coeff: Complex64,
}

impl From<Term> for (usize, usize, f64, f64) {
    fn from(t: Term) -> Self {
        (t.i, t.j, t.coeff.re, t.coeff.im)
    }
}

impl From<(usize, usize, f64, f64)> for Term {
    fn from((i, j, re, im): (usize, usize, f64, f64)) -> Self {
        Term { i, j, coeff: Complex64::new(re, im) }
    }
}

impl Term {
    pub fn new(i: usize, j: usize, coeff: Complex64) -> Self {
        Self { i, j, coeff }
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.i + self.j
    }
}

/// Sparse polynomial in `(z, w)`, terms kept merged and sorted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly2 {
    terms: Vec<Term>,
}

impl Poly2 {
    pub fn new(terms: impl IntoIterator<Item = Term>) -> Self {
        let mut v: Vec<Term> = terms.into_iter().collect();
        v.sort_by_key(|t| (t.degree(), t.i));
        let mut merged: Vec<Term> = Vec::with_capacity(v.len());
        for t in v {
            match merged.last_mut() {
                Some(last) if last.i == t.i && last.j == t.j => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != ZERO);
        Self { terms: merged }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        self.terms.iter().find(|t| t.i == i && t.j == j).map_or(ZERO, |t| t.coeff)
    }

    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        let mut acc = ZERO;
        for t in &self.terms {
            acc += t.coeff * z.powu(t.i as u32) * w.powu(t.j as u32);
        }
        acc
    }

    /// `(∂/∂z, ∂/∂w)` at `(z, w)`.
    pub fn gradient(&self, z: Complex64, w: Complex64) -> [Complex64; 2] {
        let mut dz = ZERO;
        let mut dw = ZERO;
        for t in &self.terms {
            if t.i > 0 {
                dz += t.coeff * (t.i as f64) * z.powu(t.i as u32 - 1) * w.powu(t.j as u32);
            }
            if t.j > 0 {
                dw += t.coeff * (t.j as f64) * z.powu(t.i as u32) * w.powu(t.j as u32 - 1);
            }
        }
        [dz, dw]
    }

    fn to_jet(&self, degree: usize) -> Jet2Scalar {
        let mut s = Jet2Scalar::zero(degree);
        for t in self.terms.iter().filter(|t| t.degree() <= degree) {
            s.set(t.i, t.j, t.coeff);
        }
        s
    }
}

/// A polynomial map ℂ² → ℂ² with its full coefficient list.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolyMap2 {
    pub first: Poly2,
    pub second: Poly2,
}

impl PolyMap2 {
    pub fn new(first: Poly2, second: Poly2) -> Self {
        Self { first, second }
    }

    pub fn from_terms(first: &[(usize, usize, Complex64)], second: &[(usize, usize, Complex64)]) -> Self {
        let mk = |v: &[(usize, usize, Complex64)]| Poly2::new(v.iter().map(|&(i, j, c)| Term::new(i, j, c)));
        Self { first: mk(first), second: mk(second) }
    }

    pub fn diagonal(a: Complex64, b: Complex64) -> Self {
        Self::from_terms(&[(1, 0, a)], &[(0, 1, b)])
    }

    pub fn component(&self, c: usize) -> &Poly2 {
        if c == 0 {
            &self.first
        } else {
            &self.second
        }
    }

    pub fn degree(&self) -> usize {
        self.first.degree().max(self.second.degree())
    }

    pub fn eval(&self, p: &Point) -> Point {
        [self.first.eval(p[0], p[1]), self.second.eval(p[0], p[1])]
    }

    /// Rows are components, columns `(∂/∂z, ∂/∂w)`.
    pub fn jacobian(&self, p: &Point) -> [[Complex64; 2]; 2] {
        [self.first.gradient(p[0], p[1]), self.second.gradient(p[0], p[1])]
    }

    pub fn linear_part(&self) -> [[Complex64; 2]; 2] {
        [[self.first.coeff(1, 0), self.first.coeff(0, 1)], [self.second.coeff(1, 0), self.second.coeff(0, 1)]]
    }

    /// Truncation of the polynomial to a jet of the given degree.
    pub fn to_jet(&self, degree: usize) -> JetMap2 {
        JetMap2::new(self.first.to_jet(degree), self.second.to_jet(degree)).expect("components share the degree")
    }

    /// Solve `self(x) = y`: in closed form for elementary shears, otherwise
    /// by Newton's method from the linear guess.
    pub fn invert_point(&self, y: &Point) -> Result<Point> {
        if let Some(x) = self.elementary_inverse(y) {
            if point::is_finite(&x) {
                return Ok(x);
            }
        }
        let lin_inv = invert_matrix(self.linear_part())?;
        let mut x = mat_vec(&lin_inv, y);
        let scale = point::norm(y).max(f64::MIN_POSITIVE);
        for _ in 0..60 {
            let fx = self.eval(&x);
            let r = [fx[0] - y[0], fx[1] - y[1]];
            let jac = invert_matrix(self.jacobian(&x))?;
            let dx = mat_vec(&jac, &r);
            x = [x[0] - dx[0], x[1] - dx[1]];
            if point::norm(&dx) <= 1e-15 * point::norm(&x).max(scale) {
                let fx = self.eval(&x);
                let res = point::dist(&fx, y);
                if res <= 1e-12 * scale.max(point::norm(&fx)) || res == 0.0 {
                    return Ok(x);
                }
            }
            if !point::is_finite(&x) {
                break;
            }
        }
        Err(Error::Inverse { n: 0, detail: format!("Newton did not converge for target norm {scale:.3e}") })
    }

    /// Back-substitution when one component is `α u` for a single variable
    /// `u` and the other is `β v + p(u)`.
    fn elementary_inverse(&self, y: &Point) -> Option<Point> {
        let comps = [&self.first, &self.second];
        for lc in 0..2 {
            let lin = comps[lc].terms();
            if lin.len() != 1 || lin[0].degree() != 1 || lin[0].coeff == ZERO {
                continue;
            }
            let u_is_z = lin[0].i == 1;
            let u = y[lc] / lin[0].coeff;
            let mut beta = ZERO;
            let mut rest = ZERO;
            let mut ok = true;
            for t in comps[1 - lc].terms() {
                let (pu, pv) = if u_is_z { (t.i, t.j) } else { (t.j, t.i) };
                match (pu, pv) {
                    (0, 1) => beta = t.coeff,
                    (_, 0) => rest += t.coeff * u.powu(pu as u32),
                    _ => ok = false,
                }
            }
            if ok && beta != ZERO {
                let v = (y[1 - lc] - rest) / beta;
                return Some(if u_is_z { [u, v] } else { [v, u] });
            }
        }
        None
    }

    /// Apply the polynomial to a pair of one-variable series.
    pub fn apply_series(&self, z: &Series1, w: &Series1) -> [Series1; 2] {
        let t = z.len().max(w.len());
        let zp = powers_series(z, self.max_power(true), t);
        let wp = powers_series(w, self.max_power(false), t);
        let apply = |p: &Poly2| {
            let mut out = Series1::zero(t);
            for term in p.terms() {
                let prod = zp[term.i].mul(&wp[term.j]);
                out.add_scaled(&prod, term.coeff);
            }
            out
        };
        [apply(&self.first), apply(&self.second)]
    }

    /// Apply the polynomial to a pair of two-variable jets (constants allowed).
    pub fn apply_jets(&self, z: &Jet2Scalar, w: &Jet2Scalar) -> [Jet2Scalar; 2] {
        let k = z.degree();
        let mut zp = vec![Jet2Scalar::constant(k, ONE)];
        for d in 1..=self.max_power(true) {
            zp.push(zp[d - 1].mul(z));
        }
        let mut wp = vec![Jet2Scalar::constant(k, ONE)];
        for d in 1..=self.max_power(false) {
            wp.push(wp[d - 1].mul(w));
        }
        let apply = |p: &Poly2| {
            let mut out = Jet2Scalar::zero(k);
            for term in p.terms() {
                let prod = zp[term.i].mul(&wp[term.j]);
                out = out.add(&prod.scale(term.coeff));
            }
            out
        };
        [apply(&self.first), apply(&self.second)]
    }

    fn max_power(&self, z: bool) -> usize {
        self.first.terms().iter().chain(self.second.terms()).map(|t| if z { t.i } else { t.j }).max().unwrap_or(0)
    }
}

pub fn mat_vec(m: &[[Complex64; 2]; 2], v: &Point) -> Point {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn powers_series(s: &Series1, max: usize, len: usize) -> Vec<Series1> {
    let mut out = vec![Series1::one(len)];
    for d in 1..=max {
        let next = out[d - 1].mul(s);
        out.push(next);
    }
    out
}

/// One-variable power series truncated to a fixed number of coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Series1 {
    coeffs: Vec<Complex64>,
}

impl Series1 {
    pub fn zero(len: usize) -> Self {
        Self { coeffs: vec![ZERO; len] }
    }

    pub fn one(len: usize) -> Self {
        let mut s = Self::zero(len);
        if len > 0 {
            s.coeffs[0] = ONE;
        }
        s
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    /// Truncate or zero-pad to `len` coefficients.
    pub fn resized(&self, len: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(len, ZERO);
        Self { coeffs: c }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or(ZERO)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let len = self.len();
        let mut out = Self::zero(len);
        for (a_idx, a) in self.coeffs.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            for (b_idx, b) in other.coeffs.iter().take(len - a_idx).enumerate() {
                out.coeffs[a_idx + b_idx] += a * b;
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Self, c: Complex64) {
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * c;
        }
    }

    /// `t ↦ s(λ t)`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        let mut f = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let v = c * f;
                f *= lambda;
                v
            })
            .collect();
        Self { coeffs }
    }

    pub fn eval(&self, t: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * t + c)
    }

    pub fn derivative_at_zero(&self) -> Complex64 {
        self.coeff(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn f_map() -> PolyMap2 {
        PolyMap2::from_terms(&[(1, 0, c(0.5)), (0, 2, c(1.0))], &[(0, 1, c(1.0 / 9.0))])
    }

    #[test]
    fn merges_and_drops_zero_terms() {
        let p = Poly2::new([Term::new(1, 0, c(1.0)), Term::new(1, 0, c(-1.0)), Term::new(0, 2, c(2.0))]);
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.coeff(0, 2), c(2.0));
    }

    #[test]
    fn newton_inverse_matches_closed_form() {
        let f = f_map();
        let y = [Complex64::new(0.3, -0.1), Complex64::new(0.02, 0.01)];
        let x = f.invert_point(&y).unwrap();
        let w = y[1] * 9.0;
        let z = (y[0] - w * w) * 2.0;
        assert!(point::dist(&x, &[z, w]) < 1e-15);
    }

    #[test]
    fn series_application_matches_pointwise() {
        let f = f_map();
        let z = Series1::from_coeffs(vec![c(0.1), c(0.3), c(0.0), c(0.0), c(0.0)]);
        let w = Series1::from_coeffs(vec![c(0.0), c(0.0), c(0.2), c(0.0), c(0.0)]);
        let out = f.apply_series(&z, &w);
        let t = Complex64::new(0.4, 0.2);
        let direct = f.eval(&[z.eval(t), w.eval(t)]);
        assert!((out[0].eval(t) - direct[0]).norm() < 1e-15);
        assert!((out[1].eval(t) - direct[1]).norm() < 1e-15);
    }

    #[test]
    fn jacobian_of_shear() {
        let j = f_map().jacobian(&[c(1.0), c(2.0)]);
        assert_eq!(j, [[c(0.5), c(4.0)], [c(0.0), c(1.0 / 9.0)]]);
    }
}
