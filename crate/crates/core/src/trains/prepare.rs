//! Reduction to the prepared form `(a z + c w^k, b w + d z^k) + O(k+1)`.
//!
//! Each removable degree-`k` monomial is killed by a time-dependent shear
//! `s_n = Id + P_n`; its coefficient `π_n` solves the backward recursion
//! `π_n = ρ_n π_{n+1} + N_n / λ_n`, where `λ_n` is `a_n` or `b_n` and
//! `ρ_n = a^i b^j / λ_n`. The bounded solution is computed from zero at a
//! horizon far enough out that the neglected tail is below `1e-14`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::autoseq::SequenceSpec;
use crate::error::{Error, Result};
use crate::jet2::JetMap2;
use crate::point::Point;

pub const TAIL_EPS: f64 = 1e-14;
/// Removable recursions must have ratio modulus below `1 − RATIO_GUARD`.
pub const RATIO_GUARD: f64 = 1e-9;
/// Longest tail a backward recursion may request.
pub const MAX_TAIL: usize = 10_000_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Linear and kept degree-`k` coefficients of one prepared step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparedStep {
    pub a: Complex64,
    pub b: Complex64,
    /// `w^k` in the first component.
    pub c: Complex64,
    /// `z^k` in the second component.
    pub d: Complex64,
}

/// Degree-`k` coefficients of `P_n`, indexed by the power of `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearCoeffs {
    pub first: Vec<Complex64>,
    pub second: Vec<Complex64>,
}

impl ShearCoeffs {
    pub fn is_zero(&self) -> bool {
        self.first.iter().chain(&self.second).all(|c| *c == ZERO)
    }

    pub fn max_abs(&self) -> f64 {
        self.first.iter().chain(&self.second).map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prepared {
    pub k: usize,
    /// Prepared steps for `n < len`.
    pub steps: Vec<PreparedStep>,
    /// `P_n` for `n <= len`.
    pub shears: Vec<ShearCoeffs>,
    /// Extra steps used past `len` to start the backward recursions.
    pub tail: usize,
    /// Largest removable-recursion ratio seen.
    pub max_ratio: f64,
    /// Whether `w^k` and `z^k` were kept in their components.
    pub keep: bool,
}

impl Prepared {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `s_n = Id + P_n` as a degree-`k` jet.
    pub fn shear_jet(&self, n: usize) -> JetMap2 {
        let k = self.k;
        let mut h = JetMap2::identity(k);
        let s = &self.shears[n];
        for i in 0..=k {
            h.component_mut(0).set(i, k - i, s.first[i]);
            h.component_mut(1).set(i, k - i, s.second[i]);
        }
        h
    }

    /// `s_n(p)`, exact.
    pub fn shear_apply(&self, n: usize, p: &Point) -> Point {
        let s = &self.shears[n];
        if s.is_zero() {
            return *p;
        }
        let k = self.k;
        let (mut u, mut v) = (ZERO, ZERO);
        for i in 0..=k {
            let m = p[0].powu(i as u32) * p[1].powu((k - i) as u32);
            u += s.first[i] * m;
            v += s.second[i] * m;
        }
        [p[0] + u, p[1] + v]
    }

    /// The prepared step `n` as a degree-`k` jet.
    pub fn step_jet(&self, n: usize) -> JetMap2 {
        let k = self.k;
        let st = self.steps[n];
        let mut f = JetMap2::linear(k, [[st.a, ZERO], [ZERO, st.b]]);
        let (c1, c2) = (f.first().get(0, k), f.second().get(k, 0));
        f.component_mut(0).set(0, k, c1 + st.c);
        f.component_mut(1).set(k, 0, c2 + st.d);
        f
    }
}

/// Raw data of one step: diagonal and all degree-`k` coefficients.
struct RawStep {
    a: Complex64,
    b: Complex64,
    first: Vec<Complex64>,
    second: Vec<Complex64>,
}

fn raw_step(spec: &SequenceSpec, n: usize) -> Result<RawStep> {
    let step = spec.step(n);
    let (a, b) = step.diagonal().ok_or_else(|| {
        let m = step.poly.linear_part();
        Error::NotDiagonal { n, value: m[0][1].norm().max(m[1][0].norm()) }
    })?;
    let k = spec.k;
    Ok(RawStep {
        a,
        b,
        first: (0..=k).map(|i| step.coeff(0, i, k - i)).collect(),
        second: (0..=k).map(|i| step.coeff(1, i, k - i)).collect(),
    })
}

/// Ratio and divisor of the recursion for monomial `z^i w^(k−i)` in `comp`,
/// or `None` when the monomial is kept.
fn recursion(raw: &RawStep, comp: usize, i: usize, k: usize, keep: bool) -> Option<(Complex64, Complex64)> {
    let j = k - i;
    let kept = if comp == 0 { i == 0 } else { j == 0 };
    if keep && kept {
        return None;
    }
    let mono = raw.a.powu(i as u32) * raw.b.powu(j as u32);
    let lam = if comp == 0 { raw.a } else { raw.b };
    Some((mono / lam, lam))
}

/// Steps needed so that `ratio^m · sup < TAIL_EPS`.
pub fn tail_len(ratio: f64, sup: f64) -> usize {
    if sup <= 0.0 {
        return 0;
    }
    if ratio <= 0.0 {
        return 1;
    }
    let m = (TAIL_EPS.ln() - sup.ln()) / ratio.ln();
    m.max(0.0).ceil() as usize + 1
}

/// Prepared form of the first `len` steps, keeping `w^k` and `z^k`.
pub fn prepare(spec: &SequenceSpec, len: usize) -> Result<Prepared> {
    prepare_with(spec, len, true)
}

/// As [`prepare`]; with `keep = false` every degree-`k` monomial is removed.
pub fn prepare_with(spec: &SequenceSpec, len: usize, keep: bool) -> Result<Prepared> {
    let k = spec.k;
    spec.check_order_of_contact(len)?;
    let mut raws = (0..len).map(|n| raw_step(spec, n)).collect::<Result<Vec<_>>>()?;
    let mut max_ratio: f64 = 0.0;
    let mut sup: f64 = 0.0;
    let guard = |n: usize, comp: usize, i: usize, ratio: f64| -> Result<()> {
        if ratio >= 1.0 - RATIO_GUARD {
            return Err(Error::RatioNotContracting { n, component: comp + 1, i, j: k - i, ratio });
        }
        Ok(())
    };
    for (n, raw) in raws.iter().enumerate() {
        for comp in 0..2 {
            let coeffs = if comp == 0 { &raw.first } else { &raw.second };
            for i in 0..=k {
                if let Some((rho, lam)) = recursion(raw, comp, i, k, keep) {
                    guard(n, comp, i, rho.norm())?;
                    max_ratio = max_ratio.max(rho.norm());
                    sup = sup.max(coeffs[i].norm() / lam.norm());
                }
            }
        }
    }
    let tail = tail_len(max_ratio, sup / (1.0 - max_ratio));
    if tail > MAX_TAIL {
        return Err(Error::Budget(format!("backward recursion needs {tail} tail steps (ratio {max_ratio})")));
    }
    for n in len..len + tail {
        let raw = raw_step(spec, n)?;
        for comp in 0..2 {
            for i in 0..=k {
                if let Some((rho, _)) = recursion(&raw, comp, i, k, keep) {
                    guard(n, comp, i, rho.norm())?;
                }
            }
        }
        raws.push(raw);
    }
    let zero_shear = || ShearCoeffs { first: vec![ZERO; k + 1], second: vec![ZERO; k + 1] };
    let mut shears = vec![zero_shear(); len + 1];
    let mut next = zero_shear();
    for n in (0..len + tail).rev() {
        let raw = &raws[n];
        let mut cur = zero_shear();
        for comp in 0..2 {
            let (coeffs, nxt, out) = if comp == 0 {
                (&raw.first, &next.first, &mut cur.first)
            } else {
                (&raw.second, &next.second, &mut cur.second)
            };
            for i in 0..=k {
                if let Some((rho, lam)) = recursion(raw, comp, i, k, keep) {
                    out[i] = rho * nxt[i] + coeffs[i] / lam;
                }
            }
        }
        if n <= len {
            shears[n] = cur.clone();
        }
        next = cur;
    }
    let steps = raws[..len]
        .iter()
        .map(|r| {
            let (c, d) = if keep { (r.first[0], r.second[k]) } else { (ZERO, ZERO) };
            PreparedStep { a: r.a, b: r.b, c, d }
        })
        .collect();
    Ok(Prepared { k, steps, shears, tail, max_ratio, keep })
}

/// `max_n jet_distance(s_{n+1} ∘ f_n ∘ s_n^{-1}, prepared_n)` at degree `k`.
pub fn prepared_residual(spec: &SequenceSpec, prep: &Prepared) -> Result<f64> {
    let k = prep.k;
    let mut worst: f64 = 0.0;
    for n in 0..prep.len() {
        let f = spec.step(n).jet.truncate(k);
        let s_next = prep.shear_jet(n + 1);
        // s_n^{-1} = Id − P_n modulo degree k + 1
        let s_inv = JetMap2::identity(k).sub(&prep.shear_jet(n).sub(&JetMap2::identity(k)));
        let lhs = crate::jet2::compose(&crate::jet2::compose(&s_next, &f, k)?, &s_inv, k)?;
        worst = worst.max(crate::jet2::jet_distance(&lhs, &prep.step_jet(n), k));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::PolyMap2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn already_prepared_gives_identity_shears() {
        let m = PolyMap2::from_terms(&[(1, 0, c(0.5)), (0, 2, c(1.0))], &[(0, 1, c(0.3)), (2, 0, c(0.7))]);
        let spec = SequenceSpec::constant(&m, 2, 0.2, 0.6);
        let prep = prepare(&spec, 30).unwrap();
        assert!(prep.shears.iter().all(ShearCoeffs::is_zero));
        assert_eq!(prepared_residual(&spec, &prep).unwrap(), 0.0);
        assert_eq!(prep.steps[3], PreparedStep { a: c(0.5), b: c(0.3), c: c(1.0), d: c(0.7) });
    }

    #[test]
    fn zw_in_first_component_fixed_point() {
        let m = PolyMap2::from_terms(&[(1, 0, c(0.3)), (1, 1, c(1.0))], &[(0, 1, c(0.2))]);
        let spec = SequenceSpec::constant(&m, 2, 0.1, 0.5);
        let prep = prepare(&spec, 20).unwrap();
        // α = b α + c / a
        for n in 0..=20 {
            assert!((prep.shears[n].first[1] - c(25.0 / 6.0)).norm() < 1e-12);
        }
        assert!(prepared_residual(&spec, &prep).unwrap() < 1e-12);
    }

    #[test]
    fn zw_in_second_component_fixed_point() {
        let m = PolyMap2::from_terms(&[(1, 0, c(0.3))], &[(0, 1, c(0.2)), (1, 1, c(1.0))]);
        let spec = SequenceSpec::constant(&m, 2, 0.1, 0.5);
        let prep = prepare(&spec, 20).unwrap();
        // β = a β + 1 / b
        let expect = (1.0 / 0.2) / (1.0 - 0.3);
        assert!((prep.shears[0].second[1] - c(expect)).norm() < 1e-12);
        assert!(prepared_residual(&spec, &prep).unwrap() < 1e-12);
    }

    #[test]
    fn random_specs_reduce_exactly() {
        for seed in 0..5 {
            let spec = SequenceSpec::random_diagonal(seed, 2, 0.13, 0.5);
            let prep = prepare(&spec, 200).unwrap();
            assert!(prep.max_ratio <= 0.5 + 1e-12);
            assert!(prepared_residual(&spec, &prep).unwrap() < 1e-12);
            let spec3 = SequenceSpec::random_diagonal(seed, 3, 0.13, 0.5);
            let prep3 = prepare(&spec3, 100).unwrap();
            assert!(prep3.max_ratio <= 0.25 + 1e-12);
            assert!(prepared_residual(&spec3, &prep3).unwrap() < 1e-12);
        }
    }

    #[test]
    fn full_removal_needs_contracting_kept_ratios() {
        // b^2/a = 0.64/0.5 > 1 for w^2 in the first component
        let m = PolyMap2::from_terms(&[(1, 0, c(0.5)), (0, 2, c(1.0))], &[(0, 1, c(0.8))]);
        let spec = SequenceSpec::constant(&m, 2, 0.4, 0.9);
        assert!(matches!(prepare_with(&spec, 10, false), Err(Error::RatioNotContracting { .. })));
        assert!(prepare_with(&spec, 10, true).is_ok());
    }
}
