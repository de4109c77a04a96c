//! Train selection from the accumulated log-ratios `σ`.

use serde::{Deserialize, Serialize};

use crate::autoseq::SequenceSpec;
use crate::error::Result;
use crate::util::prefix_sums;

/// Log-space tolerance shared by selection and the partition checks.
pub const SIGMA_TOL: f64 = 1e-9;

/// `I_j = [start, end)` with `Ĩ_j = [start, tilde_end)`.
///
/// Train 0 is the lead-in before the first selected interval and may be
/// empty. Odd `j` means the first coordinate is dominated on average.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Train {
    pub j: usize,
    pub start: usize,
    pub tilde_end: usize,
    pub end: usize,
    /// No later interval closed before `n_max`; `end` is then `n_max`.
    pub open: bool,
}

impl Train {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn is_odd(&self) -> bool {
        self.j % 2 == 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainPartition {
    pub k: usize,
    pub n_max: usize,
    pub trains: Vec<Train>,
}

impl TrainPartition {
    /// Boundaries `p_0 = 0, p_1, …` of the nonempty-or-not trains in order.
    pub fn boundaries(&self) -> Vec<usize> {
        self.trains.iter().map(|t| t.start).collect()
    }

    pub fn closed(&self) -> impl Iterator<Item = &Train> {
        self.trains.iter().filter(|t| !t.open)
    }

    /// The train containing `n`; indices past `n_max` belong to the last one.
    pub fn train_of(&self, n: usize) -> &Train {
        let idx = self.trains.partition_point(|t| t.end <= n);
        &self.trains[idx.min(self.trains.len() - 1)]
    }

    pub fn is_odd(&self, n: usize) -> bool {
        self.train_of(n).is_odd()
    }

    /// Partition with prescribed boundaries `0 = p_0 <= p_1 <= …`; the last
    /// train runs to `n_max` and is open.
    pub fn from_boundaries(k: usize, n_max: usize, starts: &[usize]) -> Self {
        let mut trains = Vec::with_capacity(starts.len());
        for (j, &s) in starts.iter().enumerate() {
            let end = starts.get(j + 1).copied().unwrap_or(n_max);
            trains.push(Train { j, start: s, tilde_end: s, end, open: j + 1 == starts.len() });
        }
        Self { k, n_max, trains }
    }
}

/// Trains of `spec` over the first `n_max` steps.
pub fn select_trains(spec: &SequenceSpec, k: usize, n_max: usize) -> Result<TrainPartition> {
    Ok(select_trains_from_steps(&spec.sigma_steps(n_max)?, k))
}

/// Select trains from per-step increments `log|a_n| − log|b_n|`.
///
/// From `Ĩ_j = [p, q)` the next interval `[r, s)` has `s >= r >= q`,
/// `(−1)^j σ_{s,r} >= k^{j+1}`, `s` minimal and then `(−1)^j σ_{s,r}` maximal
/// (ties to the largest `r`); `I_j = [p, r)`. The scan starts with `j = 0`
/// and `q = 0`, so `I_0` is a possibly empty lead-in.
pub fn select_trains_from_steps(steps: &[f64], k: usize) -> TrainPartition {
    let n_max = steps.len();
    let s_pref = prefix_sums(steps);
    let mut trains = Vec::new();
    let (mut j, mut p, mut q) = (0usize, 0usize, 0usize);
    loop {
        let eps = if j % 2 == 0 { 1.0 } else { -1.0 };
        let thresh = (k as f64).powi(j as i32 + 1) - SIGMA_TOL;
        let mut best_low = f64::INFINITY;
        let mut found = None;
        for s in q..=n_max {
            best_low = best_low.min(eps * s_pref[s]);
            if eps * s_pref[s] - best_low >= thresh {
                found = Some(s);
                break;
            }
        }
        let Some(s) = found else {
            trains.push(Train { j, start: p, tilde_end: q, end: n_max, open: true });
            break;
        };
        let value = |r: usize| eps * (s_pref[s] - s_pref[r]);
        let best = (q..=s).map(value).fold(f64::NEG_INFINITY, f64::max);
        let r = (q..=s).rev().find(|&r| value(r) >= best - SIGMA_TOL).expect("nonempty range");
        trains.push(Train { j, start: p, tilde_end: q, end: r, open: false });
        j += 1;
        p = r;
        q = s;
    }
    TrainPartition { k, n_max, trains }
}

/// One failed inequality of the partition checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionViolation {
    pub j: usize,
    /// Which family failed: 1 the lower bounds on the selected part, 2 its
    /// endpoints and total, 3 the interval after it.
    pub family: u8,
    pub n: usize,
    pub detail: String,
}

/// Check the three families of train inequalities from stored increments.
///
/// `log_c` is `log C`, used by the upper slack of the second family.
pub fn check_partition(partition: &TrainPartition, steps: &[f64], log_c: f64) -> Vec<PartitionViolation> {
    let s_pref = prefix_sums(steps);
    let sig = |m: usize, n: usize| s_pref[m] - s_pref[n];
    let k = partition.k as f64;
    let mut out = Vec::new();
    let mut bad =
        |j: usize, family: u8, n: usize, detail: String| out.push(PartitionViolation { j, family, n, detail });
    for t in &partition.trains {
        let j = t.j;
        let eps = if j % 2 == 1 { 1.0 } else { -1.0 };
        let (p, q, r) = (t.start, t.tilde_end, t.end);
        if j >= 1 {
            for n in p..q {
                let v = eps * sig(n, p);
                if v < -SIGMA_TOL {
                    bad(j, 1, n, format!("(−1)^(j+1) σ(n, p_j) = {v}"));
                }
                let v = eps * sig(q, n);
                if v < -SIGMA_TOL {
                    bad(j, 2, n, format!("(−1)^(j+1) σ(q_j, n) = {v}"));
                }
            }
            let v = eps * sig(q, p);
            let kj = k.powi(j as i32);
            if v < kj - SIGMA_TOL || v > kj - log_c + SIGMA_TOL {
                bad(j, 2, q, format!("(−1)^(j+1) σ(q_j, p_j) = {v} outside [{kj}, {}]", kj - log_c));
            }
        }
        if r < q {
            continue;
        }
        // min over q <= l <= n <= r of eps·σ(n, l)
        let mut hi = f64::NEG_INFINITY;
        let mut worst = f64::INFINITY;
        let mut at = q;
        for n in q..=r {
            hi = hi.max(eps * s_pref[n]);
            let v = eps * s_pref[n] - hi;
            if v < worst {
                worst = v;
                at = n;
            }
        }
        let bound = -k.powi(j as i32 + 1);
        if !(worst > bound - SIGMA_TOL) {
            bad(j, 3, at, format!("(−1)^(j+1) σ(n, l) = {worst} <= {bound}"));
        }
        if !t.open {
            let v = eps * sig(r, q);
            if v < -SIGMA_TOL {
                bad(j, 3, r, format!("(−1)^(j+1) σ(p_(j+1), q_j) = {v}"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_step_closes_at_two() {
        let steps = vec![4.5f64.ln(); 50];
        let part = select_trains_from_steps(&steps, 2);
        assert_eq!(part.trains[0], Train { j: 0, start: 0, tilde_end: 0, end: 0, open: false });
        let t1 = part.trains[1];
        assert_eq!((t1.start, t1.tilde_end), (0, 2));
        assert!(t1.open && t1.end == 50);
        assert!(check_partition(&part, &steps, 0.1f64.ln()).is_empty());
    }

    #[test]
    fn balanced_steps_never_close() {
        let part = select_trains_from_steps(&[0.0; 100], 2);
        assert_eq!(part.trains, vec![Train { j: 0, start: 0, tilde_end: 0, end: 100, open: true }]);
    }

    #[test]
    fn negative_drift_stays_in_even_lead_in() {
        let part = select_trains_from_steps(&[-0.7; 40], 3);
        assert_eq!(part.trains.len(), 1);
        assert!(!part.trains[0].is_odd());
    }

    #[test]
    fn train_lookup() {
        let part = TrainPartition::from_boundaries(2, 20, &[0, 2, 6, 14]);
        assert_eq!(part.train_of(0).j, 0);
        assert_eq!(part.train_of(5).j, 1);
        assert_eq!(part.train_of(6).j, 2);
        assert_eq!(part.train_of(19).j, 3);
        assert_eq!(part.train_of(500).j, 3);
    }
}
