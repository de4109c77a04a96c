//! Truncated bivariate power series and germs of maps ℂ² → ℂ² at the origin.
//!
//! Coefficients are stored densely in graded lexicographic order: all
//! monomials of total degree 0, then degree 1, and so on, with the exponent
//! of `z` increasing inside each degree. A [`Jet2Scalar`] of degree `K`
//! therefore always holds exactly `(K + 1)(K + 2) / 2` coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;

/// Determinant modulus below which a linear part counts as singular.
pub const DET_FLOOR: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Number of monomials `z^i w^j` with `i + j <= degree`.
#[inline]
pub const fn monomial_count(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Position of `z^i w^j` in the graded lexicographic layout.
#[inline]
pub const fn index(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + i
}

/// Iterate `(i, j)` in storage order up to `degree`.
pub fn monomials(degree: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=degree).flat_map(|d| (0..=d).map(move |i| (i, d - i)))
}

/// A scalar power series in `(z, w)` truncated at total degree `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2Scalar {
    degree: usize,
    coeffs: Vec<Complex64>,
}

impl Jet2Scalar {
    pub fn zero(degree: usize) -> Self {
        Self { degree, coeffs: vec![ZERO; monomial_count(degree)] }
    }

    pub fn constant(degree: usize, c: Complex64) -> Self {
        let mut s = Self::zero(degree);
        s.coeffs[0] = c;
        s
    }

    /// The coordinate function `z`.
    pub fn z(degree: usize) -> Self {
        let mut s = Self::zero(degree);
        if degree >= 1 {
            s.coeffs[index(1, 0)] = ONE;
        }
        s
    }

    /// The coordinate function `w`.
    pub fn w(degree: usize) -> Self {
        let mut s = Self::zero(degree);
        if degree >= 1 {
            s.coeffs[index(0, 1)] = ONE;
        }
        s
    }

    /// Build from `(i, j, coefficient)` triples; repeated monomials add up.
    pub fn from_terms(degree: usize, terms: &[(usize, usize, Complex64)]) -> Result<Self> {
        let mut s = Self::zero(degree);
        for &(i, j, c) in terms {
            if i + j > degree {
                return Err(Error::MonomialOutOfRange { i, j, k: degree });
            }
            s.coeffs[index(i, j)] += c;
        }
        Ok(s)
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `z^i w^j`; zero above the truncation degree.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i + j > self.degree {
            ZERO
        } else {
            self.coeffs[index(i, j)]
        }
    }

    /// Panics if `i + j` exceeds the truncation degree.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, c: Complex64) {
        assert!(i + j <= self.degree, "z^{i} w^{j} beyond degree {}", self.degree);
        self.coeffs[index(i, j)] = c;
    }

    /// Drop (or zero-extend to) the given truncation degree.
    pub fn truncate(&self, degree: usize) -> Self {
        let mut out = Self::zero(degree);
        let n = monomial_count(degree.min(self.degree));
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        out
    }

    /// Homogeneous part of total degree `d`, as a jet of the same degree.
    pub fn homogeneous(&self, d: usize) -> Self {
        let mut out = Self::zero(self.degree);
        if d <= self.degree {
            for i in 0..=d {
                out.coeffs[index(i, d - i)] = self.coeffs[index(i, d - i)];
            }
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { degree: self.degree, coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    /// `(z, w) ↦ s(λz, λw)`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        let mut f = 1.0;
        for d in 0..=self.degree {
            for i in 0..=d {
                out.coeffs[index(i, d - i)] *= f;
            }
            f *= lambda;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.degree, other.degree);
        Self { degree: self.degree, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.degree, other.degree);
        Self { degree: self.degree, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() }
    }

    /// Truncated product.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.degree, other.degree);
        let k = self.degree;
        let mut out = Self::zero(k);
        for d1 in 0..=k {
            for i1 in 0..=d1 {
                let a = self.coeffs[index(i1, d1 - i1)];
                if a == ZERO {
                    continue;
                }
                for d2 in 0..=(k - d1) {
                    let base = index(i1, d1 - i1 + d2);
                    for i2 in 0..=d2 {
                        let b = other.coeffs[index(i2, d2 - i2)];
                        if b != ZERO {
                            // z^{i1+i2} w^{d1+d2-i1-i2} sits at base + i2
                            out.coeffs[base + i2] += a * b;
                        }
                    }
                }
            }
        }
        out
    }

    /// Horner evaluation: outer loop over powers of `z`, inner over `w`.
    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        let k = self.degree;
        let mut acc = ZERO;
        for i in (0..=k).rev() {
            let mut inner = ZERO;
            for j in (0..=(k - i)).rev() {
                inner = inner * w + self.coeffs[index(i, j)];
            }
            acc = acc * z + inner;
        }
        acc
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Nonzero terms in storage order.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        monomials(self.degree).zip(self.coeffs.iter()).filter(|(_, c)| **c != ZERO).map(|((i, j), c)| (i, j, *c))
    }
}

/// A germ of a holomorphic map ℂ² → ℂ², truncated at degree `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetMap2 {
    first: Jet2Scalar,
    second: Jet2Scalar,
}

impl JetMap2 {
    pub fn new(first: Jet2Scalar, second: Jet2Scalar) -> Result<Self> {
        if first.degree != second.degree {
            return Err(Error::DegreeMismatch { requested: first.degree, available: second.degree });
        }
        Ok(Self { first, second })
    }

    pub fn identity(degree: usize) -> Self {
        Self { first: Jet2Scalar::z(degree), second: Jet2Scalar::w(degree) }
    }

    /// The linear map with matrix `m` (rows are components).
    pub fn linear(degree: usize, m: [[Complex64; 2]; 2]) -> Self {
        let mut f = Self::zero(degree);
        if degree >= 1 {
            f.first.set(1, 0, m[0][0]);
            f.first.set(0, 1, m[0][1]);
            f.second.set(1, 0, m[1][0]);
            f.second.set(0, 1, m[1][1]);
        }
        f
    }

    pub fn zero(degree: usize) -> Self {
        Self { first: Jet2Scalar::zero(degree), second: Jet2Scalar::zero(degree) }
    }

    pub fn from_terms(
        degree: usize,
        first: &[(usize, usize, Complex64)],
        second: &[(usize, usize, Complex64)],
    ) -> Result<Self> {
        Ok(Self { first: Jet2Scalar::from_terms(degree, first)?, second: Jet2Scalar::from_terms(degree, second)? })
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.first.degree
    }

    #[inline]
    pub fn first(&self) -> &Jet2Scalar {
        &self.first
    }

    #[inline]
    pub fn second(&self) -> &Jet2Scalar {
        &self.second
    }

    #[inline]
    pub fn component(&self, c: usize) -> &Jet2Scalar {
        if c == 0 {
            &self.first
        } else {
            &self.second
        }
    }

    pub fn component_mut(&mut self, c: usize) -> &mut Jet2Scalar {
        if c == 0 {
            &mut self.first
        } else {
            &mut self.second
        }
    }

    /// Degree-one coefficients; row `c` holds `(∂/∂z, ∂/∂w)` of component `c`.
    pub fn linear_part(&self) -> [[Complex64; 2]; 2] {
        [[self.first.get(1, 0), self.first.get(0, 1)], [self.second.get(1, 0), self.second.get(0, 1)]]
    }

    pub fn constant_term(&self) -> Point {
        [self.first.get(0, 0), self.second.get(0, 0)]
    }

    pub fn truncate(&self, degree: usize) -> Self {
        Self { first: self.first.truncate(degree), second: self.second.truncate(degree) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { first: self.first.add(&other.first), second: self.second.add(&other.second) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { first: self.first.sub(&other.first), second: self.second.sub(&other.second) }
    }

    pub fn homogeneous(&self, d: usize) -> Self {
        Self { first: self.first.homogeneous(d), second: self.second.homogeneous(d) }
    }

    pub fn evaluate(&self, p: &Point) -> Point {
        [self.first.eval(p[0], p[1]), self.second.eval(p[0], p[1])]
    }

    pub fn max_abs(&self) -> f64 {
        self.first.max_abs().max(self.second.max_abs())
    }

    /// Truncation to degree `K` of `self ∘ inner`.
    pub fn compose(&self, inner: &JetMap2, degree: usize) -> Result<JetMap2> {
        compose(self, inner, degree)
    }
}

/// Truncation to degree `degree` of `outer ∘ inner`.
pub fn compose(outer: &JetMap2, inner: &JetMap2, degree: usize) -> Result<JetMap2> {
    let available = outer.degree().min(inner.degree());
    if degree > available {
        return Err(Error::DegreeMismatch { requested: degree, available });
    }
    let c = inner.constant_term();
    let c_mod = c[0].norm().max(c[1].norm());
    if c_mod != 0.0 {
        return Err(Error::NonzeroConstant(c_mod));
    }
    let z = inner.first.truncate(degree);
    let w = inner.second.truncate(degree);
    // powers of the inner components; both have zero constant term so
    // z^i vanishes below degree i and the truncation is exact
    let mut zp = Vec::with_capacity(degree + 1);
    let mut wp = Vec::with_capacity(degree + 1);
    zp.push(Jet2Scalar::constant(degree, ONE));
    wp.push(Jet2Scalar::constant(degree, ONE));
    for d in 1..=degree {
        zp.push(zp[d - 1].mul(&z));
        wp.push(wp[d - 1].mul(&w));
    }
    let mut out = JetMap2::zero(degree);
    for (i, j) in monomials(degree) {
        let c1 = outer.first.get(i, j);
        let c2 = outer.second.get(i, j);
        if c1 == ZERO && c2 == ZERO {
            continue;
        }
        let m = zp[i].mul(&wp[j]);
        for (slot, v) in m.coeffs.iter().enumerate() {
            if *v != ZERO {
                out.first.coeffs[slot] += c1 * v;
                out.second.coeffs[slot] += c2 * v;
            }
        }
    }
    Ok(out)
}

/// Inverse of a 2×2 complex matrix with the determinant floor applied.
pub fn invert_matrix(m: [[Complex64; 2]; 2]) -> Result<[[Complex64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.norm() < DET_FLOOR {
        return Err(Error::SingularLinearPart { det: det.norm(), floor: DET_FLOOR });
    }
    let inv = ONE / det;
    Ok([[m[1][1] * inv, -m[0][1] * inv], [-m[1][0] * inv, m[0][0] * inv]])
}

/// Formal inverse of a germ fixing the origin, solved degree by degree.
///
/// Writing `f = L + N`, the inverse satisfies `g = L⁻¹ ∘ (Id − N ∘ g)`;
/// each fixed-point pass fixes one more degree of `g`.
pub fn invert(f: &JetMap2) -> Result<JetMap2> {
    let k = f.degree();
    let c = f.constant_term();
    let c_mod = c[0].norm().max(c[1].norm());
    if c_mod != 0.0 {
        return Err(Error::NonzeroConstant(c_mod));
    }
    let lin = f.linear_part();
    let lin_inv = invert_matrix(lin)?;
    let linv = JetMap2::linear(k, lin_inv);
    let nonlinear = f.sub(&JetMap2::linear(k, lin));
    let id = JetMap2::identity(k);
    let mut g = linv.clone();
    for _ in 2..=k {
        let ng = compose(&nonlinear, &g, k)?;
        g = compose(&linv, &id.sub(&ng), k)?;
    }
    Ok(g)
}

/// Max coefficient difference over all monomials of degree `<= degree`.
pub fn jet_distance(f: &JetMap2, g: &JetMap2, degree: usize) -> f64 {
    let mut best: f64 = 0.0;
    for (i, j) in monomials(degree) {
        best = best.max((f.first.get(i, j) - g.first.get(i, j)).norm());
        best = best.max((f.second.get(i, j) - g.second.get(i, j)).norm());
    }
    best
}

/// JSON layout: `{ "K": int, "first": [[i, j, re, im], …], "second": […] }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JetJson {
    #[serde(rename = "K")]
    pub degree: usize,
    pub first: Vec<(usize, usize, f64, f64)>,
    pub second: Vec<(usize, usize, f64, f64)>,
}

fn to_terms(v: &[(usize, usize, f64, f64)]) -> Vec<(usize, usize, Complex64)> {
    v.iter().map(|&(i, j, re, im)| (i, j, Complex64::new(re, im))).collect()
}

fn from_jet(s: &Jet2Scalar) -> Vec<(usize, usize, f64, f64)> {
    s.terms().map(|(i, j, c)| (i, j, c.re, c.im)).collect()
}

impl From<&JetMap2> for JetJson {
    fn from(f: &JetMap2) -> Self {
        Self { degree: f.degree(), first: from_jet(&f.first), second: from_jet(&f.second) }
    }
}

impl TryFrom<&JetJson> for JetMap2 {
    type Error = Error;

    fn try_from(j: &JetJson) -> Result<Self> {
        JetMap2::from_terms(j.degree, &to_terms(&j.first), &to_terms(&j.second))
    }
}

impl Serialize for JetMap2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        JetJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for JetMap2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = JetJson::deserialize(d)?;
        JetMap2::try_from(&j).map_err(serde::de::Error::custom)
    }
}
