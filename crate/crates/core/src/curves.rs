//! Entire curves and maps into a basin by repeated disk extension, and the
//! bound that rules out bounded psh functions.
//!
//! A chart is stored as `z ↦ f^{-depth}(P(z / radius))` with `P` a truncated
//! polynomial in the normalized variable. One extension round pushes the
//! chart forward until its image sits deep inside the contraction ball,
//! truncates the Taylor series at degree `L·N`, and pulls back by the exact
//! inverses. The truncated series is bounded on a larger disk, so the new
//! chart lives on a radius `1 + δ` times bigger while agreeing with the old
//! one to second order at 0.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autoseq::{Sequence, SequenceKind, SequenceSpec};
use crate::basin::{self, OrbitOptions, DIVERGENCE_CEILING};
use crate::error::{Error, Result};
use crate::jet2::{invert_matrix, JetMap2};
use crate::point::{self, Point};
use crate::poly::{mat_vec, PolyMap2, Series1};

/// Grid spacing for `δ`.
pub const DELTA_GRID: f64 = 1e-4;
pub const CIRCLE_SAMPLES: usize = 720;
pub const SPHERE_SAMPLES: usize = 2048;
/// Sampled sups are inflated by this factor before any comparison.
pub const SAMPLE_SLACK: f64 = 1.1;
pub const PIN_TOL: f64 = 1e-12;
/// Search horizon for the smallest admissible `N`.
pub const DEFAULT_HORIZON: usize = 1_000_000;
pub const MAX_CURVE_DEGREE: usize = 1024;
pub const MAX_MAP_DEGREE: usize = 64;
pub const MAX_ROUNDS: usize = 2000;
/// Per-round tolerances never go below this; sampled errors at this level
/// are rounding, not truncation.
pub const EPS_FLOOR: f64 = 1e-10;
pub const NOISE_PROBE: f64 = 1e-14;
pub const NOISE_FACTOR: f64 = 10.0;
/// Steps materialized for non-periodic specs.
const SEQ_LEN: usize = 4096;

/// Truncation budget for `R > 1`, `c < 1`, `r < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionBudget {
    #[serde(rename = "L")]
    pub l: usize,
    pub delta: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub c: f64,
    pub r: f64,
    /// Smallest `N` meeting both thresholds at `ε = 1`.
    pub smallest_n: Option<usize>,
}

/// `L` is the smallest integer with `r^L < c`; `δ` the largest grid value
/// with `(1+δ)^L < R`.
pub fn truncation_budget(big_r: f64, c: f64, r: f64) -> Result<ExtensionBudget> {
    if !(big_r > 1.0 && c > 0.0 && c < 1.0 && r > 0.0 && r < 1.0) {
        return Err(Error::Precondition(format!(
            "need R > 1, 0 < c < 1, 0 < r < 1; got R = {big_r}, c = {c}, r = {r}"
        )));
    }
    let mut l = 1usize;
    while r.powi(l as i32) >= c {
        l += 1;
    }
    let fits = |m: i64| (1.0 + m as f64 * DELTA_GRID).powi(l as i32) < big_r;
    let mut m = ((big_r.powf(1.0 / l as f64) - 1.0) / DELTA_GRID).floor() as i64;
    while m > 0 && !fits(m) {
        m -= 1;
    }
    while fits(m + 1) {
        m += 1;
    }
    if m <= 0 {
        return Err(Error::Precondition(format!("R = {big_r} leaves no positive δ on the grid for L = {l}")));
    }
    let mut budget = ExtensionBudget { l, delta: m as f64 * DELTA_GRID, big_r, c, r, smallest_n: None };
    budget.smallest_n = budget.smallest_admissible_n(budget.delta, 1.0, DEFAULT_HORIZON);
    Ok(budget)
}

impl ExtensionBudget {
    /// `((1+δ)^{LN+1} − 1)/δ < R^N` and `r^{LN}/(1−r) < c^N ε`, in logs.
    pub fn admissible(&self, n: usize, delta: f64, eps: f64) -> bool {
        let e = (self.l * n + 1) as f64 * delta.ln_1p();
        let lhs1 = e + (-(-e).exp()).ln_1p() - delta.ln();
        let lhs2 = (self.l * n) as f64 * self.r.ln() - (1.0 - self.r).ln();
        lhs1 < n as f64 * self.big_r.ln() && lhs2 < n as f64 * self.c.ln() + eps.ln()
    }

    pub fn smallest_admissible_n(&self, delta: f64, eps: f64, horizon: usize) -> Option<usize> {
        (1..=horizon).find(|&n| self.admissible(n, delta, eps))
    }

    /// The radius factor used per round. Half the grid maximum, so that the
    /// first threshold holds at moderate `N`.
    pub fn delta_used(&self) -> f64 {
        self.delta / 2.0
    }
}

/// `−log D / log C`.
pub fn psh_bound(c: f64, d: f64) -> Result<f64> {
    if !(0.0 < c && c < d && d < 1.0) {
        return Err(Error::Precondition(format!("need 0 < C < D < 1, got C = {c}, D = {d}")));
    }
    Ok(d.ln() / c.ln())
}

/// `−(n − k) log D / (n log C)`, the bound after `n` steps on `B_k`.
pub fn psh_chain(c: f64, d: f64, n: usize, k: usize) -> Result<f64> {
    let b = psh_bound(c, d)?;
    if n <= k {
        return Err(Error::Precondition(format!("need n > k, got n = {n}, k = {k}")));
    }
    Ok((n - k) as f64 / n as f64 * b)
}

/// Truncated polynomial part of a chart.
pub trait ChartPoly: Clone + Send + Sync {
    /// Domain variable: `Complex64` for disks, `Point` for balls.
    type Var: Copy + Send + Sync;
    fn push(&self, step: &PolyMap2) -> Self;
    /// Drop or zero-extend to the given degree.
    fn truncated(&self, degree: usize) -> Self;
    fn eval(&self, x: &Self::Var) -> Point;
    /// `x ↦ P(s x)`.
    fn rescaled(&self, s: f64) -> Self;
    /// Degree-one coefficients, one column per domain direction.
    fn columns(&self) -> Vec<Point>;
    fn scale_var(x: &Self::Var, s: f64) -> Self::Var;
    fn zero_var() -> Self::Var;
    /// Quasi-uniform samples of the unit boundary.
    fn boundary() -> Vec<Self::Var>;
}

/// A pair of one-variable series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoly {
    pub first: Series1,
    pub second: Series1,
}

impl CurvePoly {
    /// `t ↦ Σ coeffs[n] t^n`.
    pub fn from_coeffs(coeffs: &[Point]) -> Self {
        Self {
            first: Series1::from_coeffs(coeffs.iter().map(|c| c[0]).collect()),
            second: Series1::from_coeffs(coeffs.iter().map(|c| c[1]).collect()),
        }
    }

    pub fn coeff(&self, n: usize) -> Point {
        [self.first.coeff(n), self.second.coeff(n)]
    }
}

impl ChartPoly for CurvePoly {
    type Var = Complex64;

    fn push(&self, step: &PolyMap2) -> Self {
        let [first, second] = step.apply_series(&self.first, &self.second);
        Self { first, second }
    }

    fn truncated(&self, degree: usize) -> Self {
        Self { first: self.first.resized(degree + 1), second: self.second.resized(degree + 1) }
    }

    fn eval(&self, x: &Complex64) -> Point {
        [self.first.eval(*x), self.second.eval(*x)]
    }

    fn rescaled(&self, s: f64) -> Self {
        Self { first: self.first.rescaled(s), second: self.second.rescaled(s) }
    }

    fn columns(&self) -> Vec<Point> {
        vec![self.coeff(1)]
    }

    fn scale_var(x: &Complex64, s: f64) -> Complex64 {
        x * s
    }

    fn zero_var() -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    fn boundary() -> Vec<Complex64> {
        point::circle(CIRCLE_SAMPLES, 1.0).collect()
    }
}

impl ChartPoly for JetMap2 {
    type Var = Point;

    fn push(&self, step: &PolyMap2) -> Self {
        let [first, second] = step.apply_jets(self.first(), self.second());
        JetMap2::new(first, second).expect("components share the degree")
    }

    fn truncated(&self, degree: usize) -> Self {
        self.truncate(degree)
    }

    fn eval(&self, x: &Point) -> Point {
        self.evaluate(x)
    }

    fn rescaled(&self, s: f64) -> Self {
        JetMap2::new(self.first().rescaled(s), self.second().rescaled(s)).expect("components share the degree")
    }

    fn columns(&self) -> Vec<Point> {
        let m = self.linear_part();
        vec![[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
    }

    fn scale_var(x: &Point, s: f64) -> Point {
        [x[0] * s, x[1] * s]
    }

    fn zero_var() -> Point {
        point::ORIGIN
    }

    fn boundary() -> Vec<Point> {
        point::sphere_samples(SPHERE_SAMPLES)
    }
}

/// `x ↦ f^{-depth}(P(x / radius))` on the disk or ball of the given radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesChart<P> {
    /// The image of 0.
    pub center: Point,
    pub poly: P,
    pub radius: f64,
    pub depth: usize,
}

pub type DiskMapSeries = SeriesChart<CurvePoly>;
pub type BallMapSeries = SeriesChart<JetMap2>;

impl DiskMapSeries {
    /// `z ↦ p + z v` on `|z| < radius`.
    pub fn affine(p: Point, v: Point, radius: f64) -> Self {
        let poly = CurvePoly::from_coeffs(&[p, [v[0] * radius, v[1] * radius]]);
        Self { center: p, poly, radius, depth: 0 }
    }

    /// A polynomial disk `z ↦ Σ coeffs[n] z^n` on `|z| < radius`.
    pub fn polynomial(coeffs: &[Point], radius: f64) -> Self {
        let poly = CurvePoly::from_coeffs(coeffs).rescaled(radius);
        Self { center: coeffs.first().copied().unwrap_or(point::ORIGIN), poly, radius, depth: 0 }
    }
}

impl BallMapSeries {
    /// `x ↦ p + x` on `‖x‖ < radius`.
    pub fn affine(p: Point, radius: f64, degree: usize) -> Self {
        let mut poly = JetMap2::linear(
            degree.max(1),
            [
                [Complex64::new(radius, 0.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(0.0, 0.0), Complex64::new(radius, 0.0)],
            ],
        );
        poly.component_mut(0).set(0, 0, p[0]);
        poly.component_mut(1).set(0, 0, p[1]);
        Self { center: p, poly, radius, depth: 0 }
    }

    /// The chart `x ↦ (f_n ∘ ⋯ ∘ f_0)^{-1}(ρ x)` of the exhaustion set
    /// `U_n` taken with respect to the ball of radius `ρ`.
    pub fn exhaustion(n: usize, rho: f64) -> Self {
        let r = Complex64::new(rho, 0.0);
        let z = Complex64::new(0.0, 0.0);
        Self { center: point::ORIGIN, poly: JetMap2::linear(1, [[r, z], [z, r]]), radius: 1.0, depth: n + 1 }
    }
}

/// Pull a time-`depth` point back to time 0 with the exact inverses.
pub fn pull_back(seq: &Sequence, depth: usize, y: &Point) -> Result<Point> {
    let mut x = *y;
    for m in (0..depth).rev() {
        x = seq.step(m).poly.invert_point(&x).map_err(|e| Error::Inverse { n: m, detail: e.to_string() })?;
    }
    Ok(x)
}

impl<P: ChartPoly> SeriesChart<P> {
    /// Evaluate at a point of the chart's own domain.
    pub fn eval(&self, seq: &Sequence, x: &P::Var) -> Result<Point> {
        self.eval_unit(seq, &P::scale_var(x, 1.0 / self.radius))
    }

    fn eval_unit(&self, seq: &Sequence, x: &P::Var) -> Result<Point> {
        pull_back(seq, self.depth, &self.poly.eval(x))
    }

    /// Derivative at 0, one column per domain direction, through the
    /// Jacobians along the orbit of the center.
    pub fn derivative_at_zero(&self, seq: &Sequence) -> Result<Vec<Point>> {
        let mut jac = Vec::with_capacity(self.depth);
        let mut x = self.center;
        for m in 0..self.depth {
            let step = seq.step(m);
            jac.push(invert_matrix(step.poly.jacobian(&x))?);
            x = step.eval(&x);
        }
        Ok(self
            .poly
            .columns()
            .into_iter()
            .map(|col| {
                let v = jac.iter().rev().fold(col, |v, inv| mat_vec(inv, &v));
                [v[0] / self.radius, v[1] / self.radius]
            })
            .collect())
    }
}

/// Knobs of one extension round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendOptions {
    /// Approximation holds on the inner radius `r` of the normalized domain.
    pub r: f64,
    pub eps: f64,
    /// Radius of the ball on which the uniform bounds hold.
    pub ball_radius: f64,
    /// Lower contraction constant, used for the stability bound.
    pub c_lower: f64,
    pub budget: ExtensionBudget,
    pub delta: f64,
    pub max_degree: usize,
    pub max_iter: usize,
}

impl ExtendOptions {
    /// Budget from `R = 1/D`, `c = C/D`, ball radius from the uniform bounds.
    pub fn for_spec(spec: &SequenceSpec, r: f64, eps: f64) -> Result<Self> {
        // extension pulls charts back through every step
        if spec.kind == SequenceKind::RandomDiagonal {
            return Err(Error::Precondition(
                "curves need automorphisms; random_diagonal steps carry degree-k terms in both components and are not injective".into(),
            ));
        }
        let budget = truncation_budget(1.0 / spec.d, spec.c / spec.d, r)?;
        Ok(Self {
            r,
            eps,
            ball_radius: basin::default_radius(spec, 64),
            c_lower: spec.c,
            delta: budget.delta_used(),
            budget,
            max_degree: MAX_CURVE_DEGREE,
            max_iter: basin::DEFAULT_MAX_ITER,
        })
    }
}

/// Certification data of one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionRecord {
    pub radius_before: f64,
    pub radius_after: f64,
    /// Tolerance applied: the requested one, raised to the noise level.
    pub eps: f64,
    /// Effect on `F` of a relative perturbation [`NOISE_PROBE`] of its
    /// time-`depth` values; no certificate can go below it.
    pub noise: f64,
    /// Steps until the pushed disk sits in half the ball.
    pub n0: usize,
    /// Extra steps `N`; the series is truncated at `L·N`.
    pub n_extra: usize,
    pub depth: usize,
    pub degree: usize,
    /// Sampled sup of the truncated series on the enlarged boundary.
    pub containment_sup: f64,
    /// Sampled sup of `|F − G|` on the inner circle.
    pub sampled_sup: f64,
    /// Sampled sup of the dropped tail at time `n0 + N`.
    pub tail_sup: f64,
    /// Tail divided by `C^{n0+N}`, when representable.
    pub stability_eta: Option<f64>,
    pub stability_certified: bool,
}

fn sup<T: Sync>(xs: &[T], f: impl Fn(&T) -> f64 + Sync + Send) -> f64 {
    xs.par_iter().map(f).reduce(|| 0.0, f64::max)
}

/// First time at which the orbit of `P(x)`, pulled back or pushed forward
/// from time `depth`, sits in `‖·‖ < target`.
fn entry_time<P: ChartPoly>(
    seq: &Sequence,
    f: &SeriesChart<P>,
    x: &P::Var,
    target: f64,
    max_iter: usize,
) -> Result<usize> {
    let y = f.poly.eval(x);
    let mut back = vec![y];
    for m in (0..f.depth).rev() {
        match seq.step(m).poly.invert_point(back.last().unwrap()) {
            Ok(p) => back.push(p),
            Err(_) => break,
        }
    }
    // back[i] is the point at time depth − i
    let reached = back.len() - 1;
    for t in (f.depth - reached)..=f.depth {
        if SAMPLE_SLACK * point::norm(&back[f.depth - t]) < target {
            return Ok(t);
        }
    }
    let mut p = y;
    for t in f.depth + 1..=f.depth + max_iter {
        p = seq.step(t - 1).eval(&p);
        let n = point::norm(&p);
        if !n.is_finite() || n > DIVERGENCE_CEILING {
            break;
        }
        if SAMPLE_SLACK * n < target {
            return Ok(t);
        }
    }
    Err(Error::Precondition("the chart leaves the basin: a boundary sample never enters the ball".into()))
}

/// One extension round: a chart on radius `R` becomes a chart on `R(1+δ)`
/// agreeing to within `eps` on the inner radius and to second order at 0.
pub fn extend<P: ChartPoly>(
    seq: &Sequence,
    f: &SeriesChart<P>,
    opts: &ExtendOptions,
) -> Result<(SeriesChart<P>, ExtensionRecord)> {
    let l = opts.budget.l;
    let rho = opts.ball_radius;
    let boundary = P::boundary();
    let rim: Vec<P::Var> =
        [1.0 / 3.0, 2.0 / 3.0, 1.0].iter().flat_map(|s| boundary.iter().map(move |x| P::scale_var(x, *s))).collect();
    let n0 = rim
        .par_iter()
        .map(|x| entry_time(seq, f, x, rho / 2.0, opts.max_iter))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);
    let inner: Vec<P::Var> = boundary.iter().map(|x| P::scale_var(x, opts.r)).collect();
    let outer: Vec<P::Var> = boundary.iter().map(|x| P::scale_var(x, 1.0 + opts.delta)).collect();
    let exact = inner.par_iter().map(|x| f.eval_unit(seq, x)).collect::<Result<Vec<_>>>()?;
    // what a relative perturbation of 1e-14 at time `depth` does to F
    let noise = inner
        .par_iter()
        .zip(&exact)
        .map(|(x, e)| {
            let y = f.poly.eval(x);
            let y = [y[0] * (1.0 + NOISE_PROBE), y[1] * (1.0 - NOISE_PROBE)];
            pull_back(seq, f.depth, &y).map(|p| point::dist(&p, e))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let tol = opts.eps.max(NOISE_FACTOR * noise);
    let n_start = (f.depth.saturating_sub(n0)).max(1);
    if l * n_start > opts.max_degree {
        return Err(Error::Budget(format!(
            "degree {} needed to reach depth {} exceeds {}",
            l * n_start,
            f.depth,
            opts.max_degree
        )));
    }
    let mut cap = (l * (n_start + 8)).min(opts.max_degree);
    let mut last_failure = String::from("no candidate met the containment bound");
    loop {
        let mut s = f.poly.truncated(cap);
        let mut fwd: Vec<Point> = inner.iter().map(|x| f.poly.eval(x)).collect();
        for m in f.depth..n0 + n_start {
            let step = seq.step(m);
            s = s.push(&step.poly);
            fwd.iter_mut().for_each(|p| *p = step.eval(p));
        }
        let mut n = n_start;
        while l * n <= cap {
            let q = s.truncated(l * n);
            let containment = sup(&outer, |x| point::norm(&q.eval(x)));
            if SAMPLE_SLACK * containment < rho {
                let depth = n0 + n;
                let pulled: Result<Vec<Point>> = inner.par_iter().map(|x| pull_back(seq, depth, &q.eval(x))).collect();
                match pulled {
                    Ok(g) => {
                        let sampled = g.iter().zip(&exact).map(|(a, b)| point::dist(a, b)).fold(0.0, f64::max);
                        if SAMPLE_SLACK * sampled < tol {
                            let tail =
                                inner.iter().zip(&fwd).map(|(x, p)| point::dist(&q.eval(x), p)).fold(0.0, f64::max);
                            let eta = tail / opts.c_lower.powi(depth as i32);
                            let g = SeriesChart {
                                center: f.center,
                                poly: q.rescaled(1.0 + opts.delta),
                                radius: f.radius * (1.0 + opts.delta),
                                depth,
                            };
                            check_pinning(seq, f, &g)?;
                            let rec = ExtensionRecord {
                                radius_before: f.radius,
                                radius_after: g.radius,
                                eps: tol,
                                noise,
                                n0,
                                n_extra: n,
                                depth,
                                degree: l * n,
                                containment_sup: containment,
                                sampled_sup: sampled,
                                tail_sup: tail,
                                stability_eta: eta.is_finite().then_some(eta),
                                stability_certified: eta < tol.min(0.5),
                            };
                            return Ok((g, rec));
                        }
                        last_failure = format!("sampled error {sampled:.3e} at N = {n}");
                    }
                    Err(e) => last_failure = format!("pull-back failed at N = {n}: {e}; a larger N is needed"),
                }
            }
            let step = seq.step(n0 + n);
            s = s.push(&step.poly);
            fwd.iter_mut().for_each(|p| *p = step.eval(p));
            n += 1;
        }
        if cap >= opts.max_degree {
            return Err(Error::Budget(format!(
                "no N with L·N <= {} certified the round ({last_failure})",
                opts.max_degree
            )));
        }
        cap = (2 * cap).min(opts.max_degree);
    }
}

fn check_pinning<P: ChartPoly>(seq: &Sequence, f: &SeriesChart<P>, g: &SeriesChart<P>) -> Result<()> {
    let value = point::dist(&g.eval(seq, &P::zero_var())?, &f.center);
    let df = f.derivative_at_zero(seq)?;
    let dg = g.derivative_at_zero(seq)?;
    let derivative = df.iter().zip(&dg).map(|(a, b)| point::dist(a, b) / (1.0 + point::norm(a))).fold(0.0, f64::max);
    if value > PIN_TOL * (1.0 + point::norm(&f.center)) || derivative > PIN_TOL {
        return Err(Error::Pinning { value, derivative });
    }
    Ok(())
}

/// Disk extension for a single chart.
pub fn extend_disk(
    seq: &Sequence,
    f: &DiskMapSeries,
    opts: &ExtendOptions,
) -> Result<(DiskMapSeries, ExtensionRecord)> {
    extend(seq, f, opts)
}

/// The ball analogue of [`extend_disk`].
pub fn extend_ball(
    seq: &Sequence,
    f: &BallMapSeries,
    opts: &ExtendOptions,
) -> Result<(BallMapSeries, ExtensionRecord)> {
    let mut opts = opts.clone();
    opts.max_degree = opts.max_degree.min(MAX_MAP_DEGREE);
    extend(seq, f, &opts)
}

/// Largest radius `s` with `p + s·(unit domain)·|frame|` certified inside
/// the basin: inside the contraction ball when possible, else by sampled
/// membership with halving.
fn initial_radius(seq: &Sequence, p: &Point, dirs: &[Point], rho: f64) -> Result<f64> {
    let scale = dirs.iter().map(point::norm).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Precondition("tangent direction must be nonzero".into()));
    }
    let opts = OrbitOptions::new(basin::DEFAULT_MAX_ITER, rho);
    if !basin::orbit(seq, p, &opts).member {
        return Err(Error::Precondition("base point is not a basin member".into()));
    }
    if point::norm(p) < rho {
        return Ok(0.9 * (rho - point::norm(p)) / scale);
    }
    let circle: Vec<Complex64> = point::circle(CIRCLE_SAMPLES, 1.0).collect();
    let mut s = 1.0 / scale;
    for _ in 0..60 {
        let ok = circle.par_iter().all(|t| {
            dirs.iter().all(|d| {
                [1.0 / 3.0, 2.0 / 3.0, 1.0].iter().all(|a| {
                    let q = [p[0] + t * s * a * d[0], p[1] + t * s * a * d[1]];
                    basin::orbit(seq, &q, &opts).member
                })
            })
        });
        if ok {
            return Ok(s);
        }
        s /= 2.0;
    }
    Err(Error::Precondition("no disk around the base point passed the membership samples".into()))
}

/// Repeated rounds with `eps_j = max(eps0 / 2^j, EPS_FLOOR)` until the
/// radius reaches the target.
fn grow<P: ChartPoly>(
    seq: &Sequence,
    mut chart: SeriesChart<P>,
    target: f64,
    eps0: f64,
    opts: &ExtendOptions,
) -> Result<(SeriesChart<P>, Vec<ExtensionRecord>)> {
    let mut rounds = Vec::new();
    let mut opts = opts.clone();
    while chart.radius < target {
        let j = rounds.len();
        if j >= MAX_ROUNDS {
            return Err(Error::Budget(format!("{MAX_ROUNDS} rounds did not reach radius {target}")));
        }
        opts.eps = (eps0 * 0.5f64.powi(j as i32)).max(EPS_FLOOR);
        let (next, rec) = extend(seq, &chart, &opts).map_err(|e| Error::Round { round: j, source: Box::new(e) })?;
        chart = next;
        rounds.push(rec);
    }
    Ok((chart, rounds))
}

/// An entire-curve approximation: a chart valid on at least the target radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntireCurve {
    pub spec_hash: String,
    pub p: Point,
    pub v: Point,
    pub target_radius: f64,
    pub options: ExtendOptions,
    pub initial_radius: f64,
    pub map: DiskMapSeries,
    pub rounds: Vec<ExtensionRecord>,
}

/// Grow the affine disk `z ↦ p + z v` to `target_radius`.
pub fn entire_curve(
    spec: &SequenceSpec,
    p: Point,
    v: Point,
    target_radius: f64,
    eps0: f64,
    r: f64,
) -> Result<EntireCurve> {
    let seq = Sequence::new(spec, SEQ_LEN);
    let options = ExtendOptions::for_spec(spec, r, eps0)?;
    let initial = initial_radius(&seq, &p, &[v], options.ball_radius)?;
    let start = DiskMapSeries::affine(p, v, initial);
    let (map, rounds) = grow(&seq, start, target_radius, eps0, &options)?;
    let d = map.derivative_at_zero(&seq)?[0];
    let value = point::dist(&map.eval(&seq, &Complex64::new(0.0, 0.0))?, &p);
    let derivative = point::dist(&d, &v);
    if value > 1e-10 * (1.0 + point::norm(&p)) || derivative > 1e-10 * (1.0 + point::norm(&v)) {
        return Err(Error::Pinning { value, derivative });
    }
    Ok(EntireCurve { spec_hash: spec.hash(), p, v, target_radius, options, initial_radius: initial, map, rounds })
}

impl EntireCurve {
    pub fn eval(&self, spec: &SequenceSpec, z: Complex64) -> Result<Point> {
        self.map.eval(&Sequence::new(spec, SEQ_LEN), &z)
    }
}

/// The two-variable analogue: a ball chart with invertible derivative at 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntireMap {
    pub spec_hash: String,
    pub p: Point,
    pub target_radius: f64,
    pub options: ExtendOptions,
    pub initial_radius: f64,
    pub map: BallMapSeries,
    pub rounds: Vec<ExtensionRecord>,
    pub det: f64,
}

/// Floor on `|det DΦ(0)|`.
pub const DET_MIN: f64 = 1e-8;

/// Grow the affine chart `x ↦ p + x` to `target_radius`.
pub fn entire_map(spec: &SequenceSpec, p: Point, target_radius: f64, eps0: f64, r: f64) -> Result<EntireMap> {
    let seq = Sequence::new(spec, SEQ_LEN);
    let mut options = ExtendOptions::for_spec(spec, r, eps0)?;
    options.max_degree = MAX_MAP_DEGREE;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let initial = initial_radius(&seq, &p, &[[one, zero], [zero, one]], options.ball_radius)?;
    let start = BallMapSeries::affine(p, initial, 1);
    let (map, rounds) = grow(&seq, start, target_radius, eps0, &options)?;
    let cols = map.derivative_at_zero(&seq)?;
    let det = (cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1]).norm();
    if det < DET_MIN {
        return Err(Error::SingularLinearPart { det, floor: DET_MIN });
    }
    Ok(EntireMap { spec_hash: spec.hash(), p, target_radius, options, initial_radius: initial, map, rounds, det })
}
