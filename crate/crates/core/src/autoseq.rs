//! Automorphism sequences `(f_n)`: specification, generation, uniform
//! contraction checks and the log-ratio cocycle `σ`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::jet2::{monomials, JetMap2};
use crate::point::{self, Point};
use crate::poly::{Poly2, PolyMap2, Term};
use crate::util::NeumaierSum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    /// `f_n = steps[0]`.
    Constant,
    /// `f_n = steps[n mod len]`.
    Alternating,
    /// `(z² + a_n w, a_n z)` with `a_{n+1} = a_n²`.
    ShortSquare,
    /// Diagonal linear part with log-moduli uniform in `[log C, log D]`
    /// plus random degree-`k` terms.
    RandomDiagonal,
    /// `f_n = steps[n]`; the last entry repeats past the end of the list.
    Explicit,
}

/// One step given by its full monomial lists.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDesc {
    pub first: Vec<Term>,
    pub second: Vec<Term>,
}

impl StepDesc {
    pub fn from_map(map: &PolyMap2) -> Self {
        Self { first: map.first.terms().to_vec(), second: map.second.terms().to_vec() }
    }

    pub fn to_map(&self) -> PolyMap2 {
        PolyMap2::new(Poly2::new(self.first.iter().copied()), Poly2::new(self.second.iter().copied()))
    }
}

fn default_bound() -> f64 {
    1.0
}

/// Generator of an automorphism sequence. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    /// Order of contact.
    pub k: usize,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub steps: Vec<StepDesc>,
    #[serde(default)]
    pub short_a0: f64,
    /// Modulus bound for the random degree-`k` coefficients.
    #[serde(default = "default_bound")]
    pub coeff_bound: f64,
}

impl SequenceSpec {
    pub fn constant(map: &PolyMap2, k: usize, c: f64, d: f64) -> Self {
        Self::with_steps(SequenceKind::Constant, vec![map.clone()], k, c, d)
    }

    pub fn alternating(maps: Vec<PolyMap2>, k: usize, c: f64, d: f64) -> Self {
        Self::with_steps(SequenceKind::Alternating, maps, k, c, d)
    }

    pub fn explicit(maps: Vec<PolyMap2>, k: usize, c: f64, d: f64) -> Self {
        Self::with_steps(SequenceKind::Explicit, maps, k, c, d)
    }

    pub fn short_square(a0: f64, c: f64, d: f64) -> Self {
        Self {
            kind: SequenceKind::ShortSquare,
            k: 2,
            c,
            d,
            seed: 0,
            steps: Vec::new(),
            short_a0: a0,
            coeff_bound: default_bound(),
        }
    }

    pub fn random_diagonal(seed: u64, k: usize, c: f64, d: f64) -> Self {
        Self {
            kind: SequenceKind::RandomDiagonal,
            k,
            c,
            d,
            seed,
            steps: Vec::new(),
            short_a0: 0.0,
            coeff_bound: default_bound(),
        }
    }

    fn with_steps(kind: SequenceKind, maps: Vec<PolyMap2>, k: usize, c: f64, d: f64) -> Self {
        Self {
            kind,
            k,
            c,
            d,
            seed: 0,
            steps: maps.iter().map(StepDesc::from_map).collect(),
            short_a0: 0.0,
            coeff_bound: default_bound(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c && self.c < self.d && self.d < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "contraction bounds must satisfy 0 < C < D < 1, got C = {}, D = {}",
                self.c, self.d
            )));
        }
        if self.k < 2 {
            return Err(Error::InvalidSpec(format!("order of contact k must be >= 2, got {}", self.k)));
        }
        match self.kind {
            SequenceKind::Constant | SequenceKind::Alternating | SequenceKind::Explicit if self.steps.is_empty() => {
                Err(Error::InvalidSpec(format!("{:?} sequence needs at least one step", self.kind)))
            }
            SequenceKind::ShortSquare if !(self.short_a0.abs() < 1.0) => {
                Err(Error::InvalidSpec(format!("short_a0 must satisfy |a_0| < 1, got {}", self.short_a0)))
            }
            SequenceKind::RandomDiagonal if !(self.coeff_bound >= 0.0) => {
                Err(Error::InvalidSpec("coeff_bound must be nonnegative".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// SHA-256 of the compact canonical serialization.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("spec serializes");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    /// Length of the cycle of distinct steps, when the sequence repeats.
    pub fn period(&self) -> Option<usize> {
        match self.kind {
            SequenceKind::Constant => Some(1),
            SequenceKind::Alternating => Some(self.steps.len()),
            _ => None,
        }
    }

    /// The map `f_n`. Deterministic in `(self, n)`.
    pub fn step(&self, n: usize) -> StepMap {
        let poly = match self.kind {
            SequenceKind::Constant => self.steps[0].to_map(),
            SequenceKind::Alternating => self.steps[n % self.steps.len()].to_map(),
            SequenceKind::Explicit => self.steps[n.min(self.steps.len() - 1)].to_map(),
            SequenceKind::ShortSquare => {
                let a = Complex64::new(short_coefficient(self.short_a0, n), 0.0);
                PolyMap2::from_terms(&[(2, 0, Complex64::new(1.0, 0.0)), (0, 1, a)], &[(1, 0, a)])
            }
            SequenceKind::RandomDiagonal => self.random_step(n),
        };
        StepMap::new(poly, self.k)
    }

    fn random_step(&self, n: usize) -> PolyMap2 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(n as u64);
        let (lc, ld) = (self.c.ln(), self.d.ln());
        let mut diag = || {
            let m = rng.gen_range(lc..=ld).exp();
            let arg = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(m, arg)
        };
        let a = diag();
        let b = diag();
        let k = self.k;
        let mut coeff = || {
            let m = rng.gen_range(0.0..=self.coeff_bound);
            let arg = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(m, arg)
        };
        let mut first = vec![Term::new(1, 0, a)];
        let mut second = vec![Term::new(0, 1, b)];
        for i in 0..=k {
            first.push(Term::new(i, k - i, coeff()));
        }
        for i in 0..=k {
            second.push(Term::new(i, k - i, coeff()));
        }
        PolyMap2::new(Poly2::new(first), Poly2::new(second))
    }

    /// Per-step diagonal coefficients `(a_n, b_n)` for `n < count`.
    pub fn diagonal_coeffs(&self, count: usize) -> Result<Vec<(Complex64, Complex64)>> {
        (0..count)
            .map(|n| {
                self.step(n).diagonal().ok_or_else(|| Error::NotDiagonal { n, value: self.step(n).off_diagonal() })
            })
            .collect()
    }

    /// Per-step increments `log|a_n| − log|b_n|` for `n < count`.
    pub fn sigma_steps(&self, count: usize) -> Result<Vec<f64>> {
        Ok(self.diagonal_coeffs(count)?.into_iter().map(|(a, b)| a.norm().ln() - b.norm().ln()).collect())
    }

    /// Fails if some step in `0..count` has a monomial of degree in `[2, k − 1]`.
    pub fn check_order_of_contact(&self, count: usize) -> Result<()> {
        for n in 0..count {
            let step = self.step(n);
            for c in 0..2 {
                if let Some(t) = step.poly.component(c).terms().iter().find(|t| (2..self.k).contains(&t.degree())) {
                    return Err(Error::InvalidSpec(format!(
                        "step {n} has z^{} w^{} in component {} below the order of contact {}",
                        t.i,
                        t.j,
                        c + 1,
                        self.k
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `a_n = a_0^(2^n)`, by repeated squaring.
pub fn short_coefficient(a0: f64, n: usize) -> f64 {
    let mut a = a0;
    for _ in 0..n {
        a *= a;
    }
    a
}

/// One map of the sequence: exact evaluator plus its jet.
#[derive(Clone, Debug, PartialEq)]
pub struct StepMap {
    pub poly: PolyMap2,
    pub jet: JetMap2,
}

impl StepMap {
    /// The jet is the polynomial truncated at `max(k, degree)`, i.e. exact.
    pub fn new(poly: PolyMap2, k: usize) -> Self {
        let jet = poly.to_jet(k.max(poly.degree()));
        Self { poly, jet }
    }

    pub fn eval(&self, p: &Point) -> Point {
        self.poly.eval(p)
    }

    /// `(a, b)` when the linear part is exactly diagonal.
    pub fn diagonal(&self) -> Option<(Complex64, Complex64)> {
        let m = self.poly.linear_part();
        (m[0][1] == Complex64::new(0.0, 0.0) && m[1][0] == Complex64::new(0.0, 0.0)).then_some((m[0][0], m[1][1]))
    }

    fn off_diagonal(&self) -> f64 {
        let m = self.poly.linear_part();
        m[0][1].norm().max(m[1][0].norm())
    }

    /// Coefficient of `z^i w^j` in component `c` (0 or 1).
    pub fn coeff(&self, c: usize, i: usize, j: usize) -> Complex64 {
        self.poly.component(c).coeff(i, j)
    }
}

/// Something that maps time-`n` points to time-`n+1` points.
pub trait MapSequence: Sync {
    fn apply(&self, n: usize, p: &Point) -> Point;
}

/// A spec with its steps materialized for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct Sequence {
    spec: SequenceSpec,
    cache: Vec<StepMap>,
    period: Option<usize>,
}

impl Sequence {
    /// Materializes `len` steps (or one period for periodic kinds).
    pub fn new(spec: &SequenceSpec, len: usize) -> Self {
        let period = spec.period();
        let count = period.unwrap_or(len);
        Self { spec: spec.clone(), cache: (0..count).map(|n| spec.step(n)).collect(), period }
    }

    pub fn spec(&self) -> &SequenceSpec {
        &self.spec
    }

    pub fn step(&self, n: usize) -> std::borrow::Cow<'_, StepMap> {
        let idx = match self.period {
            Some(p) => Some(n % p),
            None => (n < self.cache.len()).then_some(n),
        };
        match idx {
            Some(i) => std::borrow::Cow::Borrowed(&self.cache[i]),
            None => std::borrow::Cow::Owned(self.spec.step(n)),
        }
    }
}

impl MapSequence for Sequence {
    fn apply(&self, n: usize, p: &Point) -> Point {
        self.step(n).eval(p)
    }
}

impl MapSequence for SequenceSpec {
    fn apply(&self, n: usize, p: &Point) -> Point {
        self.step(n).eval(p)
    }
}

/// Sample radii used by [`verify_uniform_bounds`].
pub const BOUND_RADII: [f64; 3] = [0.1, 0.5, 1.0];

const RATIO_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusBounds {
    pub radius: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub lower_violation: bool,
    pub upper_violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepBounds {
    pub n: usize,
    pub radii: Vec<RadiusBounds>,
}

/// Observed `‖f_n(z)‖ / ‖z‖` ranges against `[C, D]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformBoundsReport {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub samples: usize,
    pub steps: Vec<StepBounds>,
    pub lower_violations: usize,
    pub upper_violations: usize,
    /// First step index with a lower-bound violation, if any.
    pub first_lower_violation: Option<usize>,
    /// Largest sampled radius `ρ` such that no radius `<= ρ` saw a violation.
    pub largest_clean_radius: Option<f64>,
    pub note: String,
}

impl UniformBoundsReport {
    pub fn has_violations(&self) -> bool {
        self.lower_violations + self.upper_violations > 0
    }

    /// Observed ratio range over all steps and radii.
    pub fn ratio_range(&self) -> (f64, f64) {
        self.steps
            .iter()
            .flat_map(|s| &s.radii)
            .fold((f64::INFINITY, 0.0), |(lo, hi), r| (lo.min(r.min_ratio), hi.max(r.max_ratio)))
    }
}

/// Sample `‖f_n(z)‖/‖z‖` on spheres of radii 0.1, 0.5, 1 for every `n <= n_max`.
pub fn verify_uniform_bounds(spec: &SequenceSpec, n_max: usize, samples: usize) -> UniformBoundsReport {
    let dirs = point::sphere_samples(samples.max(1));
    let mut steps = Vec::with_capacity(n_max + 1);
    let (mut lower, mut upper) = (0, 0);
    let mut first_lower = None;
    let mut clean = [true; BOUND_RADII.len()];
    for n in 0..=n_max {
        let f = spec.step(n);
        let mut radii = Vec::with_capacity(BOUND_RADII.len());
        for (ri, &r) in BOUND_RADII.iter().enumerate() {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for u in &dirs {
                let z = [u[0] * r, u[1] * r];
                let ratio = point::norm(&f.eval(&z)) / point::norm(&z);
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            let lv = lo < spec.c * (1.0 - RATIO_TOL);
            let uv = hi > spec.d * (1.0 + RATIO_TOL);
            if lv {
                lower += 1;
                first_lower.get_or_insert(n);
            }
            if uv {
                upper += 1;
            }
            if lv || uv {
                clean[ri] = false;
            }
            radii.push(RadiusBounds {
                radius: r,
                min_ratio: lo,
                max_ratio: hi,
                lower_violation: lv,
                upper_violation: uv,
            });
        }
        steps.push(StepBounds { n, radii });
    }
    let largest_clean_radius = BOUND_RADII.iter().zip(clean).take_while(|(_, ok)| *ok).map(|(r, _)| *r).last();
    UniformBoundsReport {
        c: spec.c,
        d: spec.d,
        samples: dirs.len(),
        steps,
        lower_violations: lower,
        upper_violations: upper,
        first_lower_violation: first_lower,
        largest_clean_radius,
        note: "global invertibility of the steps is taken as an input contract and not checked".into(),
    }
}

/// `σ_{m,n} = Σ_{j=n}^{m−1} (log|a_j| − log|b_j|)`, compensated.
pub fn sigma(spec: &SequenceSpec, m: usize, n: usize) -> Result<f64> {
    if m < n {
        return Err(Error::Precondition(format!("sigma needs m >= n, got m = {m}, n = {n}")));
    }
    let mut acc = NeumaierSum::default();
    for j in n..m {
        let step = spec.step(j);
        let (a, b) = step.diagonal().ok_or_else(|| Error::NotDiagonal { n: j, value: step.off_diagonal() })?;
        acc.add(a.norm().ln());
        acc.add(-b.norm().ln());
    }
    Ok(acc.value())
}

/// Monomials of exact total degree `k`, ordered by the power of `z`.
pub fn degree_k_monomials(k: usize) -> impl Iterator<Item = (usize, usize)> {
    monomials(k).filter(move |(i, j)| i + j == k)
}
