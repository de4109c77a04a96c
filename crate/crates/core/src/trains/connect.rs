//! Connecting: single-monomial shears `h_n` and triangular `g_n` with
//! `g_n ∘ h_n = h_{n+1} ∘ f_n` modulo degree `k + 1`.
//!
//! On odd trains `h_n = (z + α_n w^k, w)` and `g_n = (a z, b w + γ_n z^k)`;
//! interior steps satisfy `α_n = (b^k/a) α_{n+1} + c/a`, `γ_n = d`. At the
//! last step of a train, `α = c/a` and `γ = d + β_{n+1} a^k`, which makes
//! `h` independent of the next train. Even trains mirror this with
//! `h_n = (z, w + β_n z^k)` and `g_n = (a z + δ_n w^k, b w)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::prepare::{Prepared, PreparedStep, RATIO_GUARD};
use crate::error::{Error, Result};
use crate::jet2::JetMap2;
use crate::normalform::check_diagram;
use crate::point::Point;

pub const CONNECT_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyChain {
    pub k: usize,
    /// Parity of each step's train; decides the shape of `h_n` and `g_n`.
    pub odd: Vec<bool>,
    /// `α_n` on odd steps, `β_n` on even steps, for `n < len`; `h_len = Id`.
    pub shear: Vec<Complex64>,
    /// Linear coefficients of `g_n`.
    pub ga: Vec<Complex64>,
    pub gb: Vec<Complex64>,
    /// `γ_n` on odd steps, `δ_n` on even steps.
    pub target: Vec<Complex64>,
    pub residuals: Vec<f64>,
}

impl ConjugacyChain {
    pub fn len(&self) -> usize {
        self.shear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shear.is_empty()
    }

    fn shear_at(&self, n: usize) -> Option<(bool, Complex64)> {
        (n < self.len()).then(|| (self.odd[n], self.shear[n]))
    }

    pub fn h_jet(&self, n: usize) -> JetMap2 {
        let k = self.k;
        let mut h = JetMap2::identity(k);
        if let Some((odd, s)) = self.shear_at(n) {
            if odd {
                h.component_mut(0).set(0, k, s);
            } else {
                h.component_mut(1).set(k, 0, s);
            }
        }
        h
    }

    pub fn g_jet(&self, n: usize) -> JetMap2 {
        let k = self.k;
        let mut g = JetMap2::linear(k, [[self.ga[n], ZERO], [ZERO, self.gb[n]]]);
        if self.odd[n] {
            g.component_mut(1).set(k, 0, self.target[n]);
        } else {
            g.component_mut(0).set(0, k, self.target[n]);
        }
        g
    }

    pub fn h_apply(&self, n: usize, p: &Point) -> Point {
        match self.shear_at(n) {
            Some((true, s)) => [p[0] + s * p[1].powu(self.k as u32), p[1]],
            Some((false, s)) => [p[0], p[1] + s * p[0].powu(self.k as u32)],
            None => *p,
        }
    }

    /// `g_n^{-1}(p)` in closed form.
    pub fn g_inverse(&self, n: usize, p: &Point) -> Point {
        let k = self.k as u32;
        if self.odd[n] {
            let z = p[0] / self.ga[n];
            [z, (p[1] - self.target[n] * z.powu(k)) / self.gb[n]]
        } else {
            let w = p[1] / self.gb[n];
            [(p[0] - self.target[n] * w.powu(k)) / self.ga[n], w]
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// `sup |α_n|` over odd steps and `sup |β_n|` over even steps.
    pub fn shear_sups(&self) -> (f64, f64) {
        let mut out = (0.0f64, 0.0f64);
        for (s, &odd) in self.shear.iter().zip(&self.odd) {
            if odd {
                out.0 = out.0.max(s.norm());
            } else {
                out.1 = out.1.max(s.norm());
            }
        }
        out
    }
}

/// Degree-`k` jet of a prepared step.
pub fn prepared_jet(k: usize, st: &PreparedStep) -> JetMap2 {
    let mut f = JetMap2::linear(k, [[st.a, ZERO], [ZERO, st.b]]);
    let (c1, c2) = (f.first().get(0, k), f.second().get(k, 0));
    f.component_mut(0).set(0, k, c1 + st.c);
    f.component_mut(1).set(k, 0, c2 + st.d);
    f
}

/// Solve the backward recursions over directed steps with per-step parity.
pub fn connect_trains(steps: &[PreparedStep], odd: &[bool], k: usize) -> Result<ConjugacyChain> {
    let len = steps.len();
    let ku = k as u32;
    let mut shear = vec![ZERO; len];
    let mut target = vec![ZERO; len];
    for n in (0..len).rev() {
        let st = steps[n];
        let junction = n + 1 == len || odd[n + 1] != odd[n];
        let next = if n + 1 < len { shear[n + 1] } else { ZERO };
        if odd[n] {
            if junction {
                shear[n] = st.c / st.a;
                target[n] = st.d + next * st.a.powu(ku);
            } else {
                let ratio = st.b.powu(ku) / st.a;
                guard(n, 1, ratio.norm())?;
                shear[n] = ratio * next + st.c / st.a;
                target[n] = st.d;
            }
        } else if junction {
            shear[n] = st.d / st.b;
            target[n] = st.c + next * st.b.powu(ku);
        } else {
            let ratio = st.a.powu(ku) / st.b;
            guard(n, 2, ratio.norm())?;
            shear[n] = ratio * next + st.d / st.b;
            target[n] = st.c;
        }
    }
    let mut chain = ConjugacyChain {
        k,
        odd: odd.to_vec(),
        shear,
        ga: steps.iter().map(|s| s.a).collect(),
        gb: steps.iter().map(|s| s.b).collect(),
        target,
        residuals: Vec::new(),
    };
    chain.residuals = (0..len)
        .into_par_iter()
        .map(|n| check_diagram((&chain.h_jet(n), &chain.h_jet(n + 1)), &prepared_jet(k, &steps[n]), &chain.g_jet(n), k))
        .collect();
    if let Some((n, &r)) = chain.residuals.iter().enumerate().find(|(_, r)| !(**r <= CONNECT_TOL)) {
        return Err(Error::Residual { n, residual: r, tol: CONNECT_TOL });
    }
    Ok(chain)
}

fn guard(n: usize, component: usize, ratio: f64) -> Result<()> {
    if ratio >= 1.0 - RATIO_GUARD {
        return Err(Error::RatioNotContracting { n, component, i: 0, j: 0, ratio });
    }
    Ok(())
}

/// Conjugacy for `D^k < C`: `h_n` is the full shear removing every
/// degree-`k` monomial and `g_n` is the linear part of `f_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WoldChain {
    pub prepared: Prepared,
    pub residuals: Vec<f64>,
}

impl WoldChain {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn wold_fastpath(spec: &crate::autoseq::SequenceSpec, len: usize) -> Result<WoldChain> {
    let k = spec.k;
    if !(spec.d.powi(k as i32) < spec.c) {
        return Err(Error::Precondition(format!(
            "D^k < C fails ({}^{k} >= {}); use the full trains pipeline",
            spec.d, spec.c
        )));
    }
    let prepared = super::prepare::prepare_with(spec, len, false)?;
    let residuals = (0..len)
        .into_par_iter()
        .map(|n| -> Result<f64> {
            let f = spec.step(n).jet.truncate(k);
            let st = prepared.steps[n];
            let g = JetMap2::linear(k, [[st.a, ZERO], [ZERO, st.b]]);
            Ok(check_diagram((&prepared.shear_jet(n), &prepared.shear_jet(n + 1)), &f, &g, k))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some((n, &r)) = residuals.iter().enumerate().find(|(_, r)| !(**r <= CONNECT_TOL)) {
        return Err(Error::Residual { n, residual: r, tol: CONNECT_TOL });
    }
    Ok(WoldChain { prepared, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoseq::SequenceSpec;
    use crate::poly::PolyMap2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constant_case_reaches_18_over_7() {
        let st = PreparedStep { a: c(0.5), b: c(1.0 / 3.0), c: c(1.0), d: ZERO };
        let chain = connect_trains(&vec![st; 200], &vec![true; 200], 2).unwrap();
        assert!((chain.shear[0] - c(18.0 / 7.0)).norm() < 1e-12);
        assert!((chain.shear[100] - c(18.0 / 7.0)).norm() < 1e-12);
        assert!(chain.max_residual() <= 1e-10);
    }

    #[test]
    fn zero_coefficients_give_identity() {
        let st = PreparedStep { a: c(0.5), b: c(0.3), c: ZERO, d: ZERO };
        let chain = connect_trains(&vec![st; 20], &vec![true; 20], 3).unwrap();
        assert!(chain.shear.iter().chain(&chain.target).all(|s| *s == ZERO));
        assert_eq!(chain.h_jet(4), JetMap2::identity(3));
    }

    #[test]
    fn junction_between_odd_and_even() {
        let r = 12;
        let mut steps = vec![PreparedStep { a: c(0.5), b: c(0.3), c: c(0.7), d: c(-0.4) }; r];
        steps.extend(vec![PreparedStep { a: c(0.25), b: c(0.45), c: c(1.1), d: c(0.9) }; r]);
        let odd: Vec<bool> = (0..2 * r).map(|n| n < r).collect();
        let chain = connect_trains(&steps, &odd, 2).unwrap();
        // h_{r−1} only sees f_{r−1}
        assert!((chain.shear[r - 1] - steps[r - 1].c / steps[r - 1].a).norm() < 1e-15);
        // direct composition at the junction
        let lhs = crate::jet2::compose(&chain.g_jet(r - 1), &chain.h_jet(r - 1), 2).unwrap();
        let rhs = crate::jet2::compose(&chain.h_jet(r), &prepared_jet(2, &steps[r - 1]), 2).unwrap();
        assert!(crate::jet2::jet_distance(&lhs, &rhs, 2) <= 1e-10);
        assert!(chain.max_residual() <= 1e-10);
    }

    #[test]
    fn g_inverse_is_exact() {
        let steps = vec![
            PreparedStep { a: c(0.5), b: c(0.3), c: c(0.7), d: c(-0.4) },
            PreparedStep { a: c(0.25), b: c(0.45), c: c(1.1), d: c(0.9) },
        ];
        let chain = connect_trains(&steps, &[true, false], 2).unwrap();
        let p = [Complex64::new(0.1, 0.2), Complex64::new(-0.3, 0.05)];
        for n in 0..2 {
            let q = chain.g_jet(n).evaluate(&chain.g_inverse(n, &p));
            assert!(crate::point::dist(&q, &p) < 1e-15);
        }
    }

    #[test]
    fn wold_examples() {
        let lin = SequenceSpec::constant(&PolyMap2::diagonal(c(0.4), c(0.35)), 2, 0.3, 0.5);
        let w = wold_fastpath(&lin, 10).unwrap();
        assert!(w.prepared.shears.iter().all(|s| s.is_zero()));
        let m = PolyMap2::from_terms(
            &[(1, 0, c(0.45)), (0, 2, c(1.0)), (1, 1, c(0.3))],
            &[(0, 1, c(0.35)), (2, 0, c(-0.8))],
        );
        let w = wold_fastpath(&SequenceSpec::constant(&m, 2, 0.3, 0.5), 30).unwrap();
        assert!(w.max_residual() <= 1e-10);
        assert!(matches!(
            wold_fastpath(&SequenceSpec::random_diagonal(1, 2, 0.13, 0.5), 10),
            Err(Error::Precondition(_))
        ));
    }
}
