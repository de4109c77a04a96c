//! Trains: prepare the sequence, select trains from `σ`, direct them with
//! diagonal conjugations, connect them with shears, and evaluate the
//! resulting candidate biholomorphism.

pub mod biholo;
pub mod connect;
pub mod direct;
pub mod prepare;
pub mod select;
pub mod sparse;

use serde::{Deserialize, Serialize};

pub use biholo::{
    biholo_eval, biholo_points, biholo_trajectory, write_csv as write_biholo_csv, BiholoTrajectory, Conjugacy,
};
pub use connect::{connect_trains, wold_fastpath, ConjugacyChain, WoldChain};
pub use direct::{check_directing, direct_trains, DirectedSequence, DirectingChain, DirectingReport};
pub use prepare::{prepare, prepare_with, Prepared, PreparedStep};
pub use select::{check_partition, select_trains, select_trains_from_steps, Train, TrainPartition};
pub use sparse::{sparse_check, SparseReport};

use crate::autoseq::SequenceSpec;
use crate::error::{Error, Result};
use crate::point::Point;

/// The whole pipeline for one spec, serializable as `chain.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainChain {
    pub spec_hash: String,
    pub k: usize,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub n_max: usize,
    /// Steps computed past `n_max` so backward recursions start far out.
    pub horizon: usize,
    pub partition: TrainPartition,
    pub prepared: Prepared,
    pub directing: DirectingChain,
    pub conjugacy: ConjugacyChain,
}

/// `D^{k+1} < C`, the standing hypothesis of the train construction.
pub fn check_gap(spec: &SequenceSpec) -> Result<()> {
    let lhs = spec.d.powi(spec.k as i32 + 1);
    if lhs < spec.c {
        Ok(())
    } else {
        Err(Error::Precondition(format!("D^(k+1) < C fails: {}^{} = {lhs} >= C = {}", spec.d, spec.k + 1, spec.c)))
    }
}

/// Run prepare, select, direct and connect for `n < n_max`.
pub fn build_chain(spec: &SequenceSpec, n_max: usize) -> Result<TrainChain> {
    spec.validate()?;
    check_gap(spec)?;
    let k = spec.k;
    let partition = select_trains(spec, k, n_max)?;
    // the open last train continues past n_max; size its tail from the
    // kept coefficients, which directing enlarges by at most D/C
    let probe = prepare(spec, n_max)?;
    let rho = spec.d.powi(k as i32 - 1);
    let sup = probe.steps.iter().map(|s| (s.c.norm() / s.a.norm()).max(s.d.norm() / s.b.norm())).fold(0.0, f64::max)
        * (spec.d / spec.c)
        / (1.0 - rho);
    let horizon = n_max + prepare::tail_len(rho, sup);
    let prepared = prepare(spec, horizon)?;
    let directing = direct_trains(&prepared.steps, &partition);
    direct::require_distortion(&directing)?;
    let conjugacy = connect_trains(&directing.steps, &directing.odd, k)?;
    Ok(TrainChain {
        spec_hash: spec.hash(),
        k,
        c: spec.c,
        d: spec.d,
        n_max,
        horizon,
        partition,
        prepared,
        directing,
        conjugacy,
    })
}

impl TrainChain {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `H_n = h_n ∘ l_n ∘ s_n`.
    pub fn h_total(&self, n: usize, p: &Point) -> Point {
        let q = self.prepared.shear_apply(n, p);
        self.conjugacy.h_apply(n, &self.directing.l_apply(n, &q))
    }

    /// `(sup|α|, sup|β|)` and their bounds `max|c̃/ã|/(1 − D^{k−1})`,
    /// `max|d̃/b̃|/(1 − D^{k−1})` over the steps of each parity.
    pub fn shear_bounds(&self) -> ([f64; 2], [f64; 2]) {
        let rho = self.d.powi(self.k as i32 - 1);
        let (mut ba, mut bb) = (0.0f64, 0.0f64);
        for (st, &odd) in self.directing.steps.iter().zip(&self.directing.odd) {
            if odd {
                ba = ba.max(st.c.norm() / st.a.norm());
            } else {
                bb = bb.max(st.d.norm() / st.b.norm());
            }
        }
        let (sa, sb) = self.conjugacy.shear_sups();
        ([sa, sb], [ba / (1.0 - rho), bb / (1.0 - rho)])
    }

    pub fn summary(&self) -> ChainSummary {
        let (sups, bounds) = self.shear_bounds();
        ChainSummary {
            trains: self.partition.trains.len(),
            closed_trains: self.partition.closed().count(),
            boundaries: self.partition.boundaries(),
            horizon: self.horizon,
            max_prepare_ratio: self.prepared.max_ratio,
            max_residual: self.conjugacy.max_residual(),
            shear_sups: sups,
            shear_bounds: bounds,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub trains: usize,
    pub closed_trains: usize,
    pub boundaries: Vec<usize>,
    pub horizon: usize,
    pub max_prepare_ratio: f64,
    pub max_residual: f64,
    pub shear_sups: [f64; 2],
    pub shear_bounds: [f64; 2],
}

impl Conjugacy for TrainChain {
    fn horizon(&self) -> usize {
        self.n_max
    }

    fn forward(&self, n: usize, p: &Point) -> Point {
        self.h_total(n, p)
    }

    fn g_inverse(&self, n: usize, p: &Point) -> Point {
        self.conjugacy.g_inverse(n, p)
    }
}

impl Conjugacy for WoldChain {
    fn horizon(&self) -> usize {
        self.prepared.len()
    }

    fn forward(&self, n: usize, p: &Point) -> Point {
        self.prepared.shear_apply(n, p)
    }

    fn g_inverse(&self, n: usize, p: &Point) -> Point {
        let st = self.prepared.steps[n];
        [p[0] / st.a, p[1] / st.b]
    }
}

/// `l_0(p)`, the map carrying the basin onto the directed basin.
pub fn l0(chain: &TrainChain, p: &Point) -> Point {
    chain.directing.l_apply(0, p)
}
