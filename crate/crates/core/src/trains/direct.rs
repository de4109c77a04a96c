//! Directing: diagonal conjugations `l_n = (θ_n z, τ_n w)` making one
//! coordinate dominate at every step of a train.
//!
//! `θ` and `τ` are carried as logarithms. The step `n → n + 1` follows the
//! rule of the train containing `n`; on odd trains
//!
//! ```text
//! θ' = θ                 if |a| >= |b|,   (|b|/|a|) θ otherwise,
//! τ' = τ                 if |b| >= |a|,   min((|a|/|b|) τ, θ'^k) otherwise,
//! ```
//!
//! and on even trains the roles of `(θ, a)` and `(τ, b)` are exchanged.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::prepare::PreparedStep;
use super::select::TrainPartition;
use crate::autoseq::MapSequence;
use crate::error::{Error, Result};
use crate::point::Point;

pub const DIRECT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectingChain {
    pub k: usize,
    /// `log θ_n` for `n <= len`.
    pub log_theta: Vec<f64>,
    pub log_tau: Vec<f64>,
    /// Directed steps `f̃_n = l_{n+1} ∘ f_n ∘ l_n^{-1}` in prepared form.
    pub steps: Vec<PreparedStep>,
    /// Parity of the governing train per step.
    pub odd: Vec<bool>,
}

/// `log θ_0 = k²/(k²−1)` and `log τ_0 = k/(k²−1)`.
pub fn initial_logs(k: usize) -> (f64, f64) {
    let k = k as f64;
    let den = k * k - 1.0;
    (k * k / den, k / den)
}

impl DirectingChain {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `l_n(p)`.
    pub fn l_apply(&self, n: usize, p: &Point) -> Point {
        [scale_exp(p[0], self.log_theta[n]), scale_exp(p[1], self.log_tau[n])]
    }

    pub fn l_inverse(&self, n: usize, p: &Point) -> Point {
        [scale_exp(p[0], -self.log_theta[n]), scale_exp(p[1], -self.log_tau[n])]
    }
}

/// `z · e^s` without overflowing the intermediate factor.
pub(crate) fn scale_exp(z: Complex64, s: f64) -> Complex64 {
    if s.abs() < 700.0 {
        z * s.exp()
    } else {
        z * (s / 2.0).exp() * (s / 2.0).exp()
    }
}

/// Direct the prepared steps along the partition.
pub fn direct_trains(steps: &[PreparedStep], partition: &TrainPartition) -> DirectingChain {
    let k = partition.k;
    let kf = k as f64;
    let (t0, u0) = initial_logs(k);
    let mut log_theta = Vec::with_capacity(steps.len() + 1);
    let mut log_tau = Vec::with_capacity(steps.len() + 1);
    log_theta.push(t0);
    log_tau.push(u0);
    let mut out = Vec::with_capacity(steps.len());
    let mut odd = Vec::with_capacity(steps.len());
    for (n, st) in steps.iter().enumerate() {
        let (th, ta) = (log_theta[n], log_tau[n]);
        let (la, lb) = (st.a.norm().ln(), st.b.norm().ln());
        let is_odd = partition.is_odd(n);
        let (th2, ta2) = if is_odd {
            let th2 = if la >= lb { th } else { th + lb - la };
            let ta2 = if lb >= la { ta } else { (ta + la - lb).min(kf * th2) };
            (th2, ta2)
        } else {
            let ta2 = if lb >= la { ta } else { ta + la - lb };
            let th2 = if la >= lb { th } else { (th + lb - la).min(kf * ta2) };
            (th2, ta2)
        };
        log_theta.push(th2);
        log_tau.push(ta2);
        odd.push(is_odd);
        out.push(PreparedStep {
            a: scale_exp(st.a, th2 - th),
            b: scale_exp(st.b, ta2 - ta),
            c: scale_exp(st.c, th2 - kf * ta),
            d: scale_exp(st.d, ta2 - kf * th),
        });
    }
    DirectingChain { k, log_theta, log_tau, steps: out, odd }
}

/// Counts of failed directing conditions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DirectingReport {
    pub distortion: usize,
    pub domination: usize,
    pub start_hypothesis: usize,
    pub coefficient_bound: usize,
    pub first_failure: Option<String>,
}

impl DirectingReport {
    pub fn is_clean(&self) -> bool {
        self.distortion + self.domination + self.start_hypothesis + self.coefficient_bound == 0
    }

    fn fail(&mut self, what: String) {
        self.first_failure.get_or_insert(what);
    }
}

/// Check `θ^k >= τ`, `θ <= τ^k`, per-train domination, the start hypothesis
/// at every train start `p_j` with `j >= 1`, and the coefficient bound
/// `|c̃| <= (D/C)|c|`, `|d̃| <= (D/C)|d|` against the undirected steps.
pub fn check_directing(
    chain: &DirectingChain,
    original: &[PreparedStep],
    partition: &TrainPartition,
    c: f64,
    d: f64,
) -> DirectingReport {
    let k = chain.k as f64;
    let mut rep = DirectingReport::default();
    for n in 0..=chain.len() {
        let (th, ta) = (chain.log_theta[n], chain.log_tau[n]);
        if k * th < ta - DIRECT_TOL || th > k * ta + DIRECT_TOL {
            rep.distortion += 1;
            rep.fail(format!("distortion at n = {n}: log θ = {th}, log τ = {ta}"));
        }
    }
    for (n, st) in chain.steps.iter().enumerate() {
        let gap = st.a.norm().ln() - st.b.norm().ln();
        let ok = if chain.odd[n] { gap >= -DIRECT_TOL } else { gap <= DIRECT_TOL };
        if !ok {
            rep.domination += 1;
            rep.fail(format!("domination at n = {n}: log|ã/b̃| = {gap}"));
        }
        let bound = d / c * (1.0 + DIRECT_TOL);
        if st.c.norm() > bound * original[n].c.norm() || st.d.norm() > bound * original[n].d.norm() {
            rep.coefficient_bound += 1;
            rep.fail(format!("coefficient bound at n = {n}"));
        }
    }
    let den = k * k - 1.0;
    for t in partition.trains.iter().filter(|t| t.j >= 1 && t.start <= chain.len()) {
        let kj = k.powi(t.j as i32);
        let (big, small) = if t.is_odd() {
            (chain.log_theta[t.start], chain.log_tau[t.start])
        } else {
            (chain.log_tau[t.start], chain.log_theta[t.start])
        };
        if big < k / den * kj - DIRECT_TOL || small < kj / den - DIRECT_TOL {
            rep.start_hypothesis += 1;
            rep.fail(format!("start hypothesis at p_{} = {}", t.j, t.start));
        }
    }
    rep
}

/// Hard-error form of [`check_directing`] for the distortion condition.
pub fn require_distortion(chain: &DirectingChain) -> Result<()> {
    let k = chain.k as f64;
    for n in 0..=chain.len() {
        let (th, ta) = (chain.log_theta[n], chain.log_tau[n]);
        if k * th < ta - DIRECT_TOL || th > k * ta + DIRECT_TOL {
            return Err(Error::Distortion { n, detail: format!("log θ = {th}, log τ = {ta}, k = {}", chain.k) });
        }
    }
    Ok(())
}

/// `f̃_n = l_{n+1} ∘ f_n ∘ l_n^{-1}` evaluated exactly.
pub struct DirectedSequence<'a, S: MapSequence> {
    pub seq: &'a S,
    pub chain: &'a DirectingChain,
}

impl<S: MapSequence> MapSequence for DirectedSequence<'_, S> {
    fn apply(&self, n: usize, p: &Point) -> Point {
        let q = self.seq.apply(n, &self.chain.l_inverse(n, p));
        self.chain.l_apply(n + 1, &q)
    }
}
