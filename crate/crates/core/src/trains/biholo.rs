//! Evaluation of `Φ_n = (g_{n−1} ∘ ⋯ ∘ g_0)^{-1} ∘ H_n ∘ f^n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autoseq::MapSequence;
use crate::basin::{self, OrbitOptions};
use crate::error::{Error, Result};
use crate::point::{self, Point};

/// Consecutive non-decreasing increments that count as non-convergence.
pub const STALL_RUN: usize = 10;

/// A conjugacy `H_n` with triangular targets `g_n`, `g_n ∘ H_n ≈ H_{n+1} ∘ f_n`.
pub trait Conjugacy: Sync {
    /// Largest `n` for which `H_n` is available.
    fn horizon(&self) -> usize;
    fn forward(&self, n: usize, p: &Point) -> Point;
    fn g_inverse(&self, n: usize, p: &Point) -> Point;
}

fn pull_back(conj: &impl Conjugacy, n: usize, y: Point) -> Point {
    (0..n).rev().fold(y, |acc, m| conj.g_inverse(m, &acc))
}

pub fn biholo_eval(seq: &impl MapSequence, conj: &impl Conjugacy, p: &Point, n: usize) -> Result<Point> {
    if n > conj.horizon() {
        return Err(Error::Precondition(format!("chain covers n <= {}, requested {n}", conj.horizon())));
    }
    let x = (0..n).fold(*p, |acc, m| seq.apply(m, &acc));
    Ok(pull_back(conj, n, conj.forward(n, &x)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiholoTrajectory {
    pub point: Point,
    /// `Φ_0(p), …, Φ_{n_max}(p)`.
    pub values: Vec<Point>,
    /// `increments[n] = ‖Φ_n(p) − Φ_{n−1}(p)‖`, with `increments[0] = 0`.
    pub increments: Vec<f64>,
    pub entry_index: Option<usize>,
    /// First `n` completing a run of [`STALL_RUN`] non-decreasing increments
    /// past the entry index.
    pub stalled_at: Option<usize>,
    /// Smallest `m` after which increments above the rounding floor never grow.
    pub monotone_from: Option<usize>,
}

impl BiholoTrajectory {
    pub fn last_increment(&self) -> f64 {
        self.increments.last().copied().unwrap_or(0.0)
    }

    pub fn converged(&self, tol: f64) -> bool {
        self.stalled_at.is_none() && self.last_increment() <= tol
    }

    /// Last increment over `max(1, |Φ_n(p)|)`. Where `|Φ|` is large an
    /// absolute tolerance can sit below the spacing of f64 near `Φ`.
    pub fn scaled_increment(&self) -> f64 {
        let mag = self.values.last().map_or(0.0, point::norm);
        self.last_increment() / mag.max(1.0)
    }

    /// [`converged`](Self::converged) against [`scaled_increment`](Self::scaled_increment).
    pub fn converged_scaled(&self, tol: f64) -> bool {
        self.stalled_at.is_none() && self.scaled_increment() <= tol
    }
}

/// Effect on `Φ_n` of moving the forward image by one ulp. The inverse
/// steps can amplify this far past `|Φ|·ε`.
fn ulp_noise(conj: &impl Conjugacy, n: usize, y: &Point, v: &Point) -> f64 {
    let e = 1.0 + f64::EPSILON;
    point::dist(&pull_back(conj, n, [y[0] * e, y[1] * e]), v)
}

/// Increments below this are rounding noise. The one-ulp probe is spiky (it
/// often rounds to zero), so its maximum over a trailing window is used.
fn floor(noise: &[f64], n: usize, v: &Point) -> f64 {
    let window = noise[n.saturating_sub(2 * STALL_RUN)..=n].iter().copied().fold(0.0, f64::max);
    1e-14 * (1.0 + point::norm(v)) + 8.0 * window
}

pub fn biholo_trajectory(
    seq: &impl MapSequence,
    conj: &impl Conjugacy,
    p: &Point,
    n_max: usize,
    orbit: &OrbitOptions,
) -> Result<BiholoTrajectory> {
    if n_max > conj.horizon() {
        return Err(Error::Precondition(format!("chain covers n <= {}, requested {n_max}", conj.horizon())));
    }
    let entry_index = basin::exhaustion_index(seq, p, orbit);
    let mut values = Vec::with_capacity(n_max + 1);
    let mut increments = Vec::with_capacity(n_max + 1);
    let mut noise = Vec::with_capacity(n_max + 1);
    let mut x = *p;
    for n in 0..=n_max {
        if n > 0 {
            x = seq.apply(n - 1, &x);
        }
        let y = conj.forward(n, &x);
        let v = pull_back(conj, n, y);
        noise.push(ulp_noise(conj, n, &y, &v));
        increments.push(if n == 0 { 0.0 } else { point::dist(&v, &values[n - 1]) });
        values.push(v);
    }
    let start = entry_index.unwrap_or(0) + 1;
    let mut run = 0;
    let mut stalled_at = None;
    let mut monotone_from = Some(0);
    for n in 2..=n_max {
        let grows = increments[n] >= increments[n - 1] && increments[n] > floor(&noise, n, &values[n]);
        if grows {
            monotone_from = Some(n);
        }
        if n > start && grows {
            run += 1;
            if run >= STALL_RUN && stalled_at.is_none() {
                stalled_at = Some(n);
            }
        } else {
            run = 0;
        }
    }
    if monotone_from == Some(n_max) && n_max > 0 {
        monotone_from = None;
    }
    Ok(BiholoTrajectory { point: *p, values, increments, entry_index, stalled_at, monotone_from })
}

/// Trajectories as CSV: `point,n,re1,im1,re2,im2,increment`, one row per
/// point and `n`, values in shortest round-trip exponent form.
pub fn write_csv(trajectories: &[BiholoTrajectory], out: &mut impl std::io::Write) -> Result<()> {
    writeln!(out, "point,n,re1,im1,re2,im2,increment")?;
    for (i, tr) in trajectories.iter().enumerate() {
        for (n, (v, inc)) in tr.values.iter().zip(&tr.increments).enumerate() {
            let r = point::to_reals(v);
            writeln!(out, "{i},{n},{:e},{:e},{:e},{:e},{inc:e}", r[0], r[1], r[2], r[3])?;
        }
    }
    Ok(())
}

/// [`biholo_trajectory`] over many points in parallel.
pub fn biholo_points(
    seq: &impl MapSequence,
    conj: &impl Conjugacy,
    points: &[Point],
    n_max: usize,
    orbit: &OrbitOptions,
) -> Result<Vec<BiholoTrajectory>> {
    points.par_iter().map(|p| biholo_trajectory(seq, conj, p, n_max, orbit)).collect()
}
