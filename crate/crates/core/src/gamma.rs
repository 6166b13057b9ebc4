//! The bilinear forms Γ₁, Γ₁ᶻ, Γ₂ and Γ₂^{z,ρ*} evaluated exactly at a
//! point from jets.
//!
//! `LΓ₁(f,f)` is obtained by building `Γ₁(f,f)` as an order-2 jet field
//! (coefficient jets times derivatives of an order-3 jet of `f`) and
//! applying the generator to it analytically, so no finite differences are
//! nested anywhere.

use crate::error::Result;
use crate::exprdsl::Expr;
use crate::jets::Jet3;
use crate::structure::{PointEval, Structure};

/// All Gamma quantities for one `f` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEval {
    pub point: Vec<f64>,
    pub gamma1: f64,
    pub gamma1_z: f64,
    pub gamma2: f64,
    pub gamma2_z_rho: f64,
    /// `div_z^{ρ*}(Γ_{1,∇(aa^T)}(f,f))`
    pub corr_z: f64,
    /// `div_a^{ρ*}(Γ_{1,∇(zz^T)}(f,f))`
    pub corr_a: f64,
}

impl GammaEval {
    /// `Γ₂ + Γ₂^{z,ρ*}`, the left side of the z-Bochner identity.
    pub fn lhs(&self) -> f64 {
        self.gamma2 + self.gamma2_z_rho
    }
}

fn dot_values(u: &[Jet3], w: &[Jet3]) -> f64 {
    u.iter().zip(w).map(|(a, b)| a.value() * b.value()).sum()
}

fn sum_squares(u: &[Jet3], d: usize) -> Jet3 {
    let mut s = Jet3::zero(d, 3);
    for h in u {
        s += *h * *h;
    }
    s
}

/// `Γ₁(f,g) = ⟨a^T∇f, a^T∇g⟩`.
pub fn gamma1_jet(pe: &PointEval, f: &Jet3, g: &Jet3) -> f64 {
    dot_values(&pe.horizontal_gradient(f), &pe.horizontal_gradient(g))
}

/// `Γ₁ᶻ(f,g) = ⟨z^T∇f, z^T∇g⟩`.
pub fn gamma1_z_jet(pe: &PointEval, f: &Jet3, g: &Jet3) -> f64 {
    dot_values(&pe.vertical_gradient(f), &pe.vertical_gradient(g))
}

/// `div_c^{ρ*}(F) = Σ_i ∂_i(cc^T F)_i + ⟨∇log ρ*, cc^T F⟩` for `c ∈ {a, z}`
/// selected by `gram` (`aa^T` or `zz^T` entries), `F` an order-1 jet field.
fn weighted_div(pe: &PointEval, gram: impl Fn(usize, usize) -> Jet3, field: &[Jet3]) -> f64 {
    let d = pe.dim();
    let mut out = 0.0;
    for i in 0..d {
        let mut w = Jet3::zero(d, 1);
        for (j, fj) in field.iter().enumerate() {
            w += gram(i, j) * *fj;
        }
        out += w.d1(i) + pe.log_rho().d1(i) * w.value();
    }
    out
}

/// `Γ_{1,∇M}(f,f)_k̂ = ∇f^T ∂_k̂ M ∇f` as order-1 jets.
fn gamma1_nabla(pe: &PointEval, gram: impl Fn(usize, usize) -> Jet3, f: &Jet3) -> Vec<Jet3> {
    let d = pe.dim();
    let df: Vec<Jet3> = (0..d).map(|j| f.deriv(j).truncate(1)).collect();
    (0..d)
        .map(|k| {
            let mut s = Jet3::zero(d, 1);
            for i in 0..d {
                for j in 0..d {
                    s += df[i] * gram(i, j).deriv(k) * df[j];
                }
            }
            s
        })
        .collect()
}

/// Every Gamma quantity for `f` given as an order-3 jet.
pub fn evaluate(pe: &PointEval, f: &Jet3) -> GammaEval {
    assert!(f.order() >= 3, "Γ₂ needs an order-3 jet of f");
    let d = pe.dim();
    let hg = pe.horizontal_gradient(f);
    let vg = pe.vertical_gradient(f);
    let g1 = sum_squares(&hg, d);
    let g1z = sum_squares(&vg, d);
    let lf = pe.generator(f);

    let gamma2 = 0.5 * pe.generator(&g1).value() - dot_values(&pe.horizontal_gradient(&lf), &hg);
    let bracket_z =
        0.5 * pe.generator(&g1z).value() - dot_values(&pe.vertical_gradient(&lf), &vg);

    let aat = |i, j| *pe.aat(i, j);
    let zzt = |i, j| *pe.zzt(i, j);
    let corr_z = weighted_div(pe, zzt, &gamma1_nabla(pe, aat, f));
    let corr_a = weighted_div(pe, aat, &gamma1_nabla(pe, zzt, f));

    GammaEval {
        point: pe.point().to_vec(),
        gamma1: g1.value(),
        gamma1_z: g1z.value(),
        gamma2,
        gamma2_z_rho: bracket_z + corr_z - corr_a,
        corr_z,
        corr_a,
    }
}

pub fn gamma1(s: &Structure, f: &Expr, g: &Expr, x: &[f64]) -> Result<f64> {
    let pe = s.eval_point(x)?;
    Ok(gamma1_jet(&pe, &f.eval_jet(x, 1)?, &g.eval_jet(x, 1)?))
}

pub fn gamma1_z(s: &Structure, f: &Expr, g: &Expr, x: &[f64]) -> Result<f64> {
    let pe = s.eval_point(x)?;
    Ok(gamma1_z_jet(&pe, &f.eval_jet(x, 1)?, &g.eval_jet(x, 1)?))
}

pub fn gamma2(s: &Structure, f: &Expr, x: &[f64]) -> Result<f64> {
    Ok(gamma_eval(s, f, x)?.gamma2)
}

pub fn gamma2_z_rho(s: &Structure, f: &Expr, x: &[f64]) -> Result<f64> {
    Ok(gamma_eval(s, f, x)?.gamma2_z_rho)
}

pub fn gamma_eval(s: &Structure, f: &Expr, x: &[f64]) -> Result<GammaEval> {
    let pe = s.eval_point(x)?;
    Ok(evaluate(&pe, &f.eval_jet(x, 3)?))
}
