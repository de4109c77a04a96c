//! Partial sums `S_J = Σ_{j=1..J} |I_j| / k^j` of the train lengths.

use serde::{Deserialize, Serialize};

use super::select::TrainPartition;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseReport {
    /// `S_1, …, S_J` over closed trains `j >= 1`.
    pub partial_sums: Vec<f64>,
    /// `|Ĩ_j|` for the trains summed.
    pub tilde_lengths: Vec<usize>,
    /// `k^j / log(D/C)`, the lower bound on `|Ĩ_j|` from the threshold.
    pub tilde_lower_bounds: Vec<f64>,
    pub meaningful: bool,
    pub note: String,
}

/// `log_ratio` is `log(D/C)`, the largest possible per-step `|σ|`.
pub fn sparse_check(partition: &TrainPartition, j_max: usize, log_ratio: f64) -> SparseReport {
    let k = partition.k as f64;
    let closed: Vec<_> = partition.trains.iter().filter(|t| t.j >= 1 && !t.open).take(j_max).collect();
    let mut acc = 0.0;
    let mut partial_sums = Vec::with_capacity(closed.len());
    let mut tilde_lengths = Vec::with_capacity(closed.len());
    let mut tilde_lower_bounds = Vec::with_capacity(closed.len());
    for t in &closed {
        let kj = k.powi(t.j as i32);
        acc += t.len() as f64 / kj;
        partial_sums.push(acc);
        tilde_lengths.push(t.tilde_end - t.start);
        tilde_lower_bounds.push(kj / log_ratio);
    }
    let meaningful = !closed.is_empty();
    let note = if !meaningful {
        "no closed train with j >= 1; partial sums are not meaningful".to_string()
    } else if closed.len() < j_max {
        format!("only {} closed trains available, requested {j_max}", closed.len())
    } else {
        String::new()
    };
    SparseReport { partial_sums, tilde_lengths, tilde_lower_bounds, meaningful, note }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths_k_to_the_j_sum_to_j() {
        // I_0 empty, then |I_j| = 2^j
        let mut starts = vec![0, 0];
        for j in 1..8 {
            let last = *starts.last().unwrap();
            starts.push(last + (1 << j));
        }
        let part = TrainPartition::from_boundaries(2, 1 << 12, &starts);
        let rep = sparse_check(&part, 6, 1.0);
        assert!(rep.meaningful);
        for (j, s) in rep.partial_sums.iter().enumerate() {
            assert_eq!(*s, (j + 1) as f64);
        }
    }

    #[test]
    fn single_open_train_is_flagged() {
        let part = TrainPartition::from_boundaries(2, 100, &[0]);
        let rep = sparse_check(&part, 3, 1.0);
        assert!(!rep.meaningful && rep.partial_sums.is_empty());
    }
}
