//! Lower triangular normal forms of attracting germs, the limit maps
//! `Φ_n = G^{-n} ∘ X ∘ F^n`, and unitary triangularization of sequences of
//! linear parts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::autoseq::SequenceSpec;
use crate::error::{Error, Result};
use crate::jet2::{self, JetMap2};
use crate::point::{self, Point};
use crate::poly::mat_vec;

pub type Mat2 = [[Complex64; 2]; 2];

pub const RESONANCE_FLOOR: f64 = 1e-8;
/// Norm below which a truncated normal form is trusted.
pub const VALIDITY_RADIUS: f64 = 0.5;
pub const RESIDUAL_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `X ∘ F = G ∘ X` up to order `k`, with `G = (λ₁ z, λ₂ w + H(z))`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AutonomousNormalForm {
    #[serde(rename = "F")]
    pub f: JetMap2,
    #[serde(rename = "X")]
    pub x: JetMap2,
    #[serde(rename = "G")]
    pub g: JetMap2,
    pub k: usize,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub residual: f64,
}

impl AutonomousNormalForm {
    /// `G⁻¹(p)` by back-substitution.
    pub fn g_inverse(&self, p: &Point) -> Point {
        let z = p[0] / self.lambda1;
        let mut h = ZERO;
        let mut zp = z;
        for d in 1..=self.k {
            h += self.g.second().get(d, 0) * zp;
            zp *= z;
        }
        [z, (p[1] - h) / self.lambda2]
    }
}

/// Solve for `X = Id + …` and triangular `G` degree by degree.
///
/// The linear part of `F` must already be lower triangular with
/// `|λ₁| >= |λ₂|` on the diagonal.
pub fn rosay_rudin(f: &JetMap2, k: usize) -> Result<AutonomousNormalForm> {
    let c = f.constant_term();
    if c[0] != ZERO || c[1] != ZERO {
        return Err(Error::NonzeroConstant(c[0].norm().max(c[1].norm())));
    }
    let f = f.truncate(k);
    let lin = f.linear_part();
    let (l1, l2, sub) = (lin[0][0], lin[1][1], lin[1][0]);
    let scale = l1.norm().max(l2.norm()).max(sub.norm());
    if lin[0][1].norm() > 1e-14 * scale.max(1.0) {
        return Err(Error::Precondition(format!(
            "linear part must be lower triangular, upper-right entry is {:.3e}",
            lin[0][1].norm()
        )));
    }
    let (m1, m2) = (l1.norm(), l2.norm());
    if !(m1 > 0.0 && m1 < 1.0 && m2 > 0.0 && m2 < 1.0) {
        return Err(Error::NotContracting(m1, m2));
    }
    if m1 < m2 {
        return Err(Error::Precondition(format!("eigenvalues must be ordered |λ₁| >= |λ₂|, got {m1} < {m2}")));
    }
    let lambda = [l1, l2];
    let mut x = JetMap2::identity(k);
    let mut g = JetMap2::linear(k, [[l1, ZERO], [sub, l2]]);
    for d in 2..=k {
        let lhs = jet2::compose(&g, &x, k)?;
        let rhs = jet2::compose(&x, &f, k)?;
        let mut r = lhs.sub(&rhs).homogeneous(d);
        // unknowns: component 0 then 1, each with i ascending
        for t in 0..2 {
            for i in 0..=d {
                let j = d - i;
                let rem = r.component(t).get(i, j);
                let factor = l1.powu(i as u32) * l2.powu(j as u32) - lambda[t];
                if factor.norm() < RESONANCE_FLOOR {
                    if t == 1 && j == 0 {
                        g.component_mut(1).set(i, 0, -rem);
                        continue;
                    }
                    return Err(Error::NearResonance { component: t + 1, i, j, factor: factor.norm() });
                }
                let xu = rem / factor;
                if xu == ZERO {
                    continue;
                }
                x.component_mut(t).set(i, j, xu);
                // off-diagonal part of e ↦ e∘L − L·e applied to x_u
                let base = xu * l1.powu(i as u32);
                let mut binom = 1.0;
                for m in 1..=j {
                    binom = binom * (j - m + 1) as f64 / m as f64;
                    let v = base * binom * sub.powu(m as u32) * l2.powu((j - m) as u32);
                    let slot = r.component_mut(t);
                    slot.set(i + m, j - m, slot.get(i + m, j - m) - v);
                }
                if t == 0 {
                    let slot = r.component_mut(1);
                    slot.set(i, j, slot.get(i, j) + sub * xu);
                }
            }
        }
    }
    let residual = check_diagram((&x, &x), &f, &g, k);
    if residual > RESIDUAL_TOL {
        return Err(Error::Residual { n: 0, residual, tol: RESIDUAL_TOL });
    }
    Ok(AutonomousNormalForm { f, x, g, k, lambda1: l1, lambda2: l2, residual })
}

/// `Φ_n(p)` with the default validity radius.
pub fn phi_n(nf: &AutonomousNormalForm, n: usize, p: &Point) -> Result<Point> {
    phi_n_within(nf, n, p, VALIDITY_RADIUS)
}

pub fn phi_n_within(nf: &AutonomousNormalForm, n: usize, p: &Point, radius: f64) -> Result<Point> {
    let mut q = *p;
    for _ in 0..n {
        q = nf.f.evaluate(&q);
    }
    let norm = point::norm(&q);
    if !(norm <= radius) {
        return Err(Error::OutsideValidity { norm, radius });
    }
    q = nf.x.evaluate(&q);
    for _ in 0..n {
        q = nf.g_inverse(&q);
    }
    Ok(q)
}

/// `jet_distance(g ∘ h_n, h_{n+1} ∘ f)` at degree `K`.
pub fn check_diagram(h: (&JetMap2, &JetMap2), f: &JetMap2, g: &JetMap2, degree: usize) -> f64 {
    match (jet2::compose(g, h.0, degree), jet2::compose(h.1, f, degree)) {
        (Ok(a), Ok(b)) => jet2::jet_distance(&a, &b, degree),
        _ => f64::INFINITY,
    }
}

/// Unitaries `U_n` with `U_{n+1} · D(f_n ∘ ⋯ ∘ f_0)(0) v_0 = λ_n · e₂`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitaryChain {
    pub v0: Point,
    /// `U_0, …, U_{n_max+1}`; `U_0 v_0 = e₂`.
    pub unitaries: Vec<Mat2>,
    pub lambdas: Vec<Complex64>,
    /// `log|λ_n|`, kept separately since `λ_n` underflows for long chains.
    pub log_abs_lambdas: Vec<f64>,
}

impl UnitaryChain {
    /// `U_{n+1} L U_n^*`.
    pub fn conjugated(&self, n: usize, l: &Mat2) -> Mat2 {
        mat_mul(&mat_mul(&self.unitaries[n + 1], l), &adjoint(&self.unitaries[n]))
    }
}

/// Unitary taking the unit vector `u` to a multiple of `e₂`, with the
/// diagonal entries real and nonnegative.
pub fn unitary_to_e2(u: &Point) -> Mat2 {
    let (u1, u2) = (u[0], u[1]);
    let (phi, psi) = if u2.norm() > 0.0 {
        let ph = u2 / u2.norm();
        (ph.conj(), ph)
    } else {
        let ph = u1 / u1.norm();
        (-ph.conj(), ph)
    };
    [[phi * u2, -phi * u1], [psi * u1.conj(), psi * u2.conj()]]
}

pub fn qr_direct(spec: &SequenceSpec, v0: &Point, n_max: usize) -> Result<UnitaryChain> {
    let nv = point::norm(v0);
    if (nv - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("v0 must be a unit vector, got norm {nv}")));
    }
    let mut unitaries = vec![unitary_to_e2(v0)];
    let mut lambdas = Vec::with_capacity(n_max + 1);
    let mut logs = Vec::with_capacity(n_max + 1);
    let mut u = *v0;
    let mut log_acc = 0.0;
    for n in 0..=n_max {
        let l = spec.step(n).poly.linear_part();
        let fro = l.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let v = mat_vec(&l, &u);
        let nv = point::norm(&v);
        if !(nv > 1e-14 * fro) {
            return Err(Error::DegenerateDirection(n));
        }
        u = [v[0] / nv, v[1] / nv];
        log_acc += nv.ln();
        let un = unitary_to_e2(&u);
        let phase = un[1][0] * u[0] + un[1][1] * u[1];
        lambdas.push(phase * log_acc.exp());
        logs.push(log_acc);
        unitaries.push(un);
    }
    Ok(UnitaryChain { v0: *v0, unitaries, lambdas, log_abs_lambdas: logs })
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

pub fn adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// Max entry modulus of `U^* U − Id`.
pub fn unitarity_defect(u: &Mat2) -> f64 {
    let p = mat_mul(&adjoint(u), u);
    let id = [[ONE, ZERO], [ZERO, ONE]];
    (0..4).map(|e| (p[e / 2][e % 2] - id[e / 2][e % 2]).norm()).fold(0.0, f64::max)
}
