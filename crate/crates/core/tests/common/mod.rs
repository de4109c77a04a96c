//! Oracles shared by the integration tests.
#![allow(dead_code)]

use basinforge::jet2::monomials;
use basinforge::trains::Train;
use basinforge::{Jet2Scalar, JetMap2, PolyMap2, SequenceSpec};
use num_complex::Complex64;
use rand::Rng;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// All-pairs scan: σ_{s,r} by direct summation, r walking down from s.
pub fn brute_force_partition(steps: &[f64], k: usize) -> Vec<Train> {
    let n_max = steps.len();
    let mut out = Vec::new();
    let (mut j, mut p, mut q) = (0usize, 0usize, 0usize);
    loop {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let thresh = (k as f64).powi(j as i32 + 1);
        let mut closed = None;
        'scan: for s in q..=n_max {
            let mut values = Vec::with_capacity(s - q + 1);
            let mut acc = 0.0;
            for r in (q..=s).rev() {
                if r < s {
                    acc += steps[r];
                }
                values.push((r, sign * acc));
            }
            let best = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
            if best >= thresh - 1e-9 {
                // values run from r = s downwards: the first near-maximal one has the largest r
                let r = values.iter().find(|v| v.1 >= best - 1e-9).unwrap().0;
                closed = Some((r, s));
                break 'scan;
            }
        }
        match closed {
            Some((r, s)) => {
                out.push(Train { j, start: p, tilde_end: q, end: r, open: false });
                j += 1;
                p = r;
                q = s;
            }
            None => {
                out.push(Train { j, start: p, tilde_end: q, end: n_max, open: true });
                return out;
            }
        }
    }
}

fn unit_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Random jet with zero constant term; the linear part is `Id + small` so it
/// stays well conditioned.
pub fn random_jet(rng: &mut impl Rng, degree: usize) -> JetMap2 {
    let mut comps = [Jet2Scalar::zero(degree), Jet2Scalar::zero(degree)];
    for (ci, comp) in comps.iter_mut().enumerate() {
        for (i, j) in monomials(degree).filter(|(i, j)| i + j >= 1) {
            let mut v = unit_complex(rng);
            if i + j == 1 {
                v *= 0.3;
                if (ci == 0 && i == 1) || (ci == 1 && j == 1) {
                    v += 1.0;
                }
            }
            comp.set(i, j, v);
        }
    }
    let [a, b] = comps;
    JetMap2::new(a, b).unwrap()
}

/// Sum of `|coeff|` per component, maximised over components.
pub fn coeff_mass(f: &JetMap2) -> f64 {
    (0..2).map(|c| f.component(c).coeffs().iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Majorant bound on the degree `> K` part of `f(g(p))` for `‖p‖_∞ <= s <= 1`:
/// every term of `f` sees `|g_i(p)| <= G s` and the tail of a positive
/// series below radius 1 is at most `s^{K+1}` times its value at 1.
pub fn eval_compose_bound(f: &JetMap2, g: &JetMap2, s: f64) -> f64 {
    let k = f.degree();
    let gm = coeff_mass(g);
    let m1: f64 = (0..2)
        .map(|c| f.component(c).terms().map(|(i, j, x)| x.norm() * gm.powi((i + j) as i32)).sum::<f64>())
        .fold(0.0, f64::max);
    std::f64::consts::SQRT_2 * m1 * s.powi(k as i32 + 1)
}

pub fn f_map() -> PolyMap2 {
    PolyMap2::from_terms(&[(1, 0, c(0.5)), (0, 2, c(1.0))], &[(0, 1, c(1.0 / 9.0))])
}

pub fn g_map() -> PolyMap2 {
    PolyMap2::from_terms(&[(1, 0, c(1.0 / 9.0))], &[(0, 1, c(0.5)), (2, 0, c(1.0))])
}

/// Constant sequence of the worked example map.
pub fn example_spec() -> SequenceSpec {
    SequenceSpec::constant(&f_map(), 2, 0.1, 0.6)
}

/// Alternating the example map with its mirror makes the composed degrees grow.
pub fn mixed_spec() -> SequenceSpec {
    SequenceSpec::alternating(vec![f_map(), g_map()], 2, 0.1, 0.6)
}

/// The `w²` coefficient of `X` removing `w²` from `(λ₁z + w², λ₂w)`:
/// `X₁ = z + x w²` and `X₁∘F = λ₁X₁` give `1 + x λ₂² = λ₁ x`.
pub fn w_squared_oracle(l1: f64, l2: f64) -> f64 {
    1.0 / (l1 - l2 * l2)
}

/// Fixed point of `α = (b^k/a) α + c/a`.
pub fn affine_fixed_point(a: f64, b: f64, cc: f64, k: i32) -> f64 {
    (cc / a) / (1.0 - b.powi(k) / a)
}
