//! The z-Bochner decomposition: frame objects, shift vectors, Hessian
//! square, curvature tensors and the curvature matrix in the `U`-basis.
//!
//! Index conventions (`N = n + m`):
//!
//! * Hessian pairs `(î, k̂)` map to `î·N + k̂`, so `X[î·N + k̂] = ∂²f/∂x_î∂x_k̂`.
//! * Rows of `Q` and `D` are pairs `(i, k)` with `i, k < n`, index `i·n + k`.
//! * Rows of `P` and `E` are pairs `(j, k)` with `j < m`, `k < n`, index `j·n + k`.
//! * A [`GradLinearField`] of length `r` is an `r × N` matrix `M`; its value
//!   for a given `∇f` is `M ∇f`.
//! * Quadratic forms in `∇f` are symmetric `N × N` matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exprdsl::Expr;
use crate::gamma;
use crate::jets::Jet3;
use crate::linalg;
use crate::structure::{PointEval, Preset, Structure};

/// Residual above which the shift-vector system counts as unsolved.
pub const LAMBDA_TOL: f64 = 1e-9;
/// `|det [a|z]|` below which the frame counts as degenerate.
pub const SINGULAR_TOL: f64 = 1e-12;

/// A vector whose entries are linear functionals of `∇f`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradLinearField {
    pub coef: DMatrix<f64>,
}

impl GradLinearField {
    fn zeros(rows: usize, dim: usize) -> GradLinearField {
        GradLinearField {
            coef: DMatrix::zeros(rows, dim),
        }
    }

    pub fn len(&self) -> usize {
        self.coef.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coef.nrows() == 0
    }

    /// Entry values for a concrete gradient.
    pub fn eval(&self, grad: &[f64]) -> DVector<f64> {
        &self.coef * DVector::from_column_slice(grad)
    }
}

/// Frame objects at a point.
#[derive(Debug, Clone)]
pub struct BochnerFrame {
    pub point: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub q: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub c: GradLinearField,
    pub d: GradLinearField,
    pub e: GradLinearField,
    pub f: GradLinearField,
    pub g: GradLinearField,
}

impl BochnerFrame {
    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    /// `w = F + C + G + Q^T D + P^T E`, the cross-term coefficients.
    pub fn cross(&self) -> DMatrix<f64> {
        &self.f.coef
            + &self.c.coef
            + &self.g.coef
            + self.q.transpose() * &self.d.coef
            + self.p.transpose() * &self.e.coef
    }
}

/// Point values of the frame and its derivatives.
struct Vals<'a> {
    pe: &'a PointEval,
}

impl Vals<'_> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.pe.at(i, j).value()
    }
    #[inline]
    fn dat(&self, i: usize, j: usize, l: usize) -> f64 {
        self.pe.at(i, j).d1(l)
    }
    #[inline]
    fn zt(&self, i: usize, j: usize) -> f64 {
        self.pe.zt(i, j).value()
    }
    #[inline]
    fn dzt(&self, i: usize, j: usize, l: usize) -> f64 {
        self.pe.zt(i, j).d1(l)
    }
}

/// Build `Q, P, C, D, E, F, G` at the point of `pe`.
pub fn build_frame(pe: &PointEval) -> BochnerFrame {
    let (n, m) = (pe.n(), pe.m());
    let nn = n + m;
    let v = Vals { pe };
    let mut q = DMatrix::zeros(n * n, nn * nn);
    let mut p = DMatrix::zeros(m * n, nn * nn);
    for ih in 0..nn {
        for kh in 0..nn {
            let col = ih * nn + kh;
            for i in 0..n {
                for k in 0..n {
                    q[(i * n + k, col)] = v.at(i, ih) * v.at(k, kh);
                }
            }
            for j in 0..m {
                for k in 0..n {
                    p[(j * n + k, col)] = v.zt(j, ih) * v.at(k, kh);
                }
            }
        }
    }

    let mut c = GradLinearField::zeros(nn * nn, nn);
    let mut f = GradLinearField::zeros(nn * nn, nn);
    let mut g = GradLinearField::zeros(nn * nn, nn);
    for ih in 0..nn {
        for kh in 0..nn {
            let row = ih * nn + kh;
            for i in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for ip in 0..nn {
                        s += v.at(i, ih) * v.at(i, ip) * v.dat(k, kh, ip)
                            - v.at(k, ip) * v.at(i, kh) * v.dat(i, ih, ip);
                    }
                    for col in 0..nn {
                        c.coef[(row, col)] += s * v.at(k, col);
                    }
                }
                for k in 0..m {
                    let mut s = 0.0;
                    for ip in 0..nn {
                        s += v.at(i, ih) * v.at(i, ip) * v.dzt(k, kh, ip)
                            - v.zt(k, ip) * v.at(i, kh) * v.dat(i, ih, ip);
                    }
                    for col in 0..nn {
                        f.coef[(row, col)] += s * v.zt(k, col);
                    }
                }
            }
            // G pairs (î, ĵ) = (ih, kh)
            let jh = kh;
            for i in 0..n {
                for j in 0..m {
                    let mut zz_da = 0.0; // Σ_{j'} z_{jĵ} z_{jj'} ∂_{j'} a_{iî}
                    let mut aa_dz = 0.0; // Σ_{i'} a_{iî} a_{ii'} ∂_{i'} z_{jĵ}
                    for jp in 0..nn {
                        zz_da += v.zt(j, jh) * v.zt(j, jp) * v.dat(i, ih, jp);
                        aa_dz += v.at(i, ih) * v.at(i, jp) * v.dzt(j, jh, jp);
                    }
                    for col in 0..nn {
                        let mut s = zz_da * v.at(i, col) - aa_dz * v.zt(j, col);
                        for jp in 0..nn {
                            s += v.zt(j, jh) * v.zt(j, jp) * v.dat(i, col, jp) * v.at(i, ih)
                                - v.at(i, ih) * v.at(i, jp) * v.dzt(j, col, jp) * v.zt(j, jh);
                        }
                        g.coef[(row, col)] += s;
                    }
                }
            }
        }
    }

    let mut d = GradLinearField::zeros(n * n, nn);
    for i in 0..n {
        for k in 0..n {
            for col in 0..nn {
                d.coef[(i * n + k, col)] = (0..nn).map(|ih| v.at(i, ih) * v.dat(k, col, ih)).sum();
            }
        }
    }
    let mut e = GradLinearField::zeros(m * n, nn);
    for j in 0..m {
        for k in 0..n {
            for col in 0..nn {
                e.coef[(j * n + k, col)] = (0..nn).map(|ih| v.at(k, ih) * v.dzt(j, col, ih)).sum();
            }
        }
    }

    BochnerFrame {
        point: pe.point().to_vec(),
        n,
        m,
        q,
        p,
        c,
        d,
        e,
        f,
        g,
    }
}

/// How the shift vectors are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaMode {
    /// The closed-form choices for a built-in structure.
    Preset,
    /// Minimum-norm least squares on the symmetrized system.
    LeastSquares,
    /// `Preset` when the structure is a built-in one, else `LeastSquares`.
    Auto,
}

impl std::str::FromStr for LambdaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<LambdaMode> {
        match s {
            "preset" => Ok(LambdaMode::Preset),
            "lsq" | "least_squares" | "least-squares" => Ok(LambdaMode::LeastSquares),
            "auto" => Ok(LambdaMode::Auto),
            _ => Err(Error::InvalidArgument(format!("unknown lambda mode `{s}`"))),
        }
    }
}

/// Shift vectors `Λ₁, Λ₂` (each `N² × N`) and the residual of the
/// symmetrized system they solve.
#[derive(Debug, Clone)]
pub struct LambdaPair {
    pub l1: GradLinearField,
    pub l2: GradLinearField,
    pub residual: f64,
}

/// Average over `(î,k̂) ↔ (k̂,î)`.
fn symmetrize_pairs(mat: &DMatrix<f64>, nn: usize) -> DMatrix<f64> {
    let mut out = mat.clone();
    for ih in 0..nn {
        for kh in 0..nn {
            let (r, t) = (ih * nn + kh, kh * nn + ih);
            for c in 0..mat.ncols() {
                out[(r, c)] = 0.5 * (mat[(r, c)] + mat[(t, c)]);
            }
        }
    }
    out
}

fn preset_lambda(s: &Structure, pe: &PointEval) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let nn = pe.dim();
    let mut l1 = DMatrix::zeros(nn * nn, nn);
    let mut l2 = DMatrix::zeros(nn * nn, nn);
    let at = |i: usize, j: usize| pe.at(i, j).value();
    match s.preset_kind() {
        Some(Preset::Heisenberg) => {
            for c in 0..3 {
                l2[(6, c)] = at(1, c);
                l2[(7, c)] = -at(0, c);
            }
        }
        Some(Preset::Martinet) => {
            let y = pe.point()[1];
            l1[(1, 2)] = y / 2.0;
            l1[(3, 2)] = y / 2.0;
            l2[(6, 1)] = -y;
            l2[(7, 0)] = y;
            l2[(7, 2)] = y.powi(3) / 2.0;
        }
        Some(Preset::Se2) => {
            let beta = s.params().get("beta").copied().unwrap_or(1.0);
            let g = -pe.zt(0, 2).value();
            if g == 0.0 {
                return Err(Error::Domain("g vanishes; preset shift vectors undefined".into()));
            }
            let g2 = g * g;
            l1[(1, 1)] = beta;
            l1[(2, 2)] = beta / 2.0;
            l1[(3, 1)] = beta;
            l1[(6, 2)] = beta / 2.0;
            l1[(8, 0)] = -beta;
            for c in 0..3 {
                l2[(6, c)] = -beta * at(1, c) / g2;
            }
            l2[(8, 0)] = beta / g2;
        }
        Some(Preset::Ou1d) => {}
        None => return Err(Error::NoPresetLambda),
    }
    Ok((l1, l2))
}

/// Choose `Λ₁, Λ₂` with `sym(Q^TQΛ₁ + P^TPΛ₂) = sym(w)`.
pub fn solve_lambda(
    s: &Structure,
    pe: &PointEval,
    frame: &BochnerFrame,
    mode: LambdaMode,
) -> Result<LambdaPair> {
    let nn = frame.dim();
    let qtq = frame.q.transpose() * &frame.q;
    let ptp = frame.p.transpose() * &frame.p;
    let rhs = symmetrize_pairs(&frame.cross(), nn);
    let use_preset = match mode {
        LambdaMode::Preset => true,
        LambdaMode::LeastSquares => false,
        LambdaMode::Auto => s.preset_kind().is_some(),
    };
    let (l1, l2) = if use_preset {
        preset_lambda(s, pe)?
    } else {
        let mut k = DMatrix::zeros(nn * nn, 2 * nn * nn);
        k.view_mut((0, 0), (nn * nn, nn * nn)).copy_from(&qtq);
        k.view_mut((0, nn * nn), (nn * nn, nn * nn)).copy_from(&ptp);
        let k = symmetrize_pairs(&k, nn);
        let sol = linalg::min_norm_solve(&k, &rhs);
        (
            sol.rows(0, nn * nn).into_owned(),
            sol.rows(nn * nn, nn * nn).into_owned(),
        )
    };
    let lhs = symmetrize_pairs(&(&qtq * &l1 + &ptp * &l2), nn);
    let residual = (lhs - &rhs).norm() / rhs.norm().max(1.0);
    if !(residual <= LAMBDA_TOL) {
        return Err(Error::AssumptionUnsatisfied { residual });
    }
    Ok(LambdaPair {
        l1: GradLinearField { coef: l1 },
        l2: GradLinearField { coef: l2 },
        residual,
    })
}

fn hessian_vector(f: &Jet3) -> DVector<f64> {
    let nn = f.dim();
    DVector::from_fn(nn * nn, |r, _| f.d2(r / nn, r % nn))
}

fn gradient(f: &Jet3) -> DVector<f64> {
    DVector::from_fn(f.dim(), |i, _| f.d1(i))
}

/// `|Hess|²` for `f` (order ≥ 2) and the quadratic form `R^G`.
pub fn hess_and_rg(frame: &BochnerFrame, lambda: &LambdaPair, f: &Jet3) -> (f64, DMatrix<f64>) {
    let x = hessian_vector(f);
    let g = gradient(f);
    let v1 = &frame.q * (&x + &lambda.l1.coef * &g);
    let v2 = &frame.p * (&x + &lambda.l2.coef * &g);
    let hess = v1.norm_squared() + v2.norm_squared();
    let ql = &frame.q * &lambda.l1.coef;
    let pl = &frame.p * &lambda.l2.coef;
    let rg = frame.d.coef.transpose() * &frame.d.coef + frame.e.coef.transpose() * &frame.e.coef
        - ql.transpose() * &ql
        - pl.transpose() * &pl;
    (hess, symmetric_part(&rg))
}

fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Accumulates `Σ (u·∇f)(w·∇f)` as a symmetric matrix.
struct QuadForm {
    m: DMatrix<f64>,
}

impl QuadForm {
    fn new(nn: usize) -> QuadForm {
        QuadForm {
            m: DMatrix::zeros(nn, nn),
        }
    }

    fn add_product(&mut self, scale: f64, u: &[f64], w: &[f64]) {
        let nn = u.len();
        for r in 0..nn {
            for c in 0..nn {
                self.m[(r, c)] += 0.5 * scale * (u[r] * w[c] + u[c] * w[r]);
            }
        }
    }
}

/// One frame field `W` (rows of `a^T` or `z^T`) as jets.
#[derive(Clone, Copy)]
enum Which {
    A,
    Z,
}

impl Which {
    fn rows(self, pe: &PointEval) -> usize {
        match self {
            Which::A => pe.n(),
            Which::Z => pe.m(),
        }
    }

    fn jet(self, pe: &PointEval, i: usize, j: usize) -> &Jet3 {
        match self {
            Which::A => pe.at(i, j),
            Which::Z => pe.zt(i, j),
        }
    }
}

/// Drift-coupled tensor for `W ∈ {a^T, z^T}`: `R_ab` or `R_zb`.
fn r_drift(pe: &PointEval, w: Which) -> DMatrix<f64> {
    let nn = pe.dim();
    let n = pe.n();
    let nk = w.rows(pe);
    let a = |i, j| pe.at(i, j);
    let wj = |k, j| w.jet(pe, k, j);
    let b: Vec<Jet3> = (0..nn).map(|k| pe.drift_b(k)).collect();
    let mut form = QuadForm::new(nn);
    for k in 0..nk {
        let wrow: Vec<f64> = (0..nn).map(|c| wj(k, c).value()).collect();
        let mut u = vec![0.0; nn];
        for i in 0..n {
            for ip in 0..nn {
                for ih in 0..nn {
                    for kh in 0..nn {
                        u[kh] += a(i, ip).value() * a(i, ih).d1(ip) * wj(k, kh).d1(ih)
                            + a(i, ip).value() * a(i, ih).value() * wj(k, kh).d2(ip, ih);
                        u[ih] -= wj(k, kh).value() * a(i, ip).d1(kh) * a(i, ih).d1(ip)
                            + wj(k, kh).value() * a(i, ip).value() * a(i, ih).d2(kh, ip);
                    }
                }
            }
        }
        for ih in 0..nn {
            for kh in 0..nn {
                u[kh] -= 2.0 * wj(k, ih).value() * b[kh].d1(ih);
                u[ih] += 2.0 * b[kh].value() * wj(k, ih).d1(kh);
            }
        }
        form.add_product(1.0, &u, &wrow);
    }
    form.m
}

/// `Σ_{k,i} 2(α_{ki}·∇f)(Y_i·∇f) + 2(β_{ki}·∇f)²` with `X` the outer field
/// and `Y` the differentiated one.
fn rho_part(pe: &PointEval, x: Which, y: Which) -> DMatrix<f64> {
    let nn = pe.dim();
    let lr = pe.log_rho();
    let mut form = QuadForm::new(nn);
    for k in 0..x.rows(pe) {
        let xv = |j| x.jet(pe, k, j).value();
        let div_x: f64 = (0..nn).map(|kp| x.jet(pe, k, kp).d1(kp)).sum();
        let x_lr: f64 = (0..nn).map(|j| xv(j) * lr.d1(j)).sum();
        // coefficient multiplying ∂_k̂ Y: (div X_k + X_k·∇log ρ*) X_{kk̂} + Σ X_{kk'} ∂_{k'} X_{kk̂}
        let first: Vec<f64> = (0..nn)
            .map(|kh| {
                (div_x + x_lr) * xv(kh)
                    + (0..nn).map(|kp| xv(kp) * x.jet(pe, k, kh).d1(kp)).sum::<f64>()
            })
            .collect();
        for i in 0..y.rows(pe) {
            let yrow: Vec<f64> = (0..nn).map(|c| y.jet(pe, i, c).value()).collect();
            let mut alpha = vec![0.0; nn];
            let mut beta = vec![0.0; nn];
            for ih in 0..nn {
                let yj = y.jet(pe, i, ih);
                for kh in 0..nn {
                    alpha[ih] += first[kh] * yj.d1(kh);
                    beta[ih] += xv(kh) * yj.d1(kh);
                    for kp in 0..nn {
                        alpha[ih] += xv(kp) * xv(kh) * yj.d2(kp, kh);
                    }
                }
            }
            form.add_product(2.0, &alpha, &yrow);
            form.add_product(2.0, &beta, &beta);
        }
    }
    form.m
}

/// `(R_ab, R_zb, R_ρ*)` as quadratic forms in `∇f`.
pub fn curvature_tensors(pe: &PointEval) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let r_ab = r_drift(pe, Which::A);
    let r_zb = r_drift(pe, Which::Z);
    let r_rho = rho_part(pe, Which::Z, Which::A) - rho_part(pe, Which::A, Which::Z);
    (r_ab, r_zb, r_rho)
}

/// Every quadratic form of the decomposition at one point, in the `∇f` basis.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub frame: BochnerFrame,
    pub lambda: LambdaPair,
    pub r_g: DMatrix<f64>,
    pub r_ab: DMatrix<f64>,
    pub r_zb: DMatrix<f64>,
    pub r_rho: DMatrix<f64>,
}

impl Decomposition {
    pub fn new(s: &Structure, pe: &PointEval, mode: LambdaMode) -> Result<Decomposition> {
        let frame = build_frame(pe);
        let lambda = solve_lambda(s, pe, &frame, mode)?;
        let dummy = Jet3::zero(pe.dim(), 2);
        let (_, r_g) = hess_and_rg(&frame, &lambda, &dummy);
        let (r_ab, r_zb, r_rho) = curvature_tensors(pe);
        Ok(Decomposition {
            frame,
            lambda,
            r_g,
            r_ab,
            r_zb,
            r_rho,
        })
    }

    /// `R^G + R_ab + R_zb + R_ρ*`.
    pub fn total(&self) -> DMatrix<f64> {
        &self.r_g + &self.r_ab + &self.r_zb + &self.r_rho
    }

    /// Right side `|Hess|² + R_total(∇f,∇f)` for `f` of order ≥ 2.
    pub fn rhs(&self, f: &Jet3) -> f64 {
        let (hess, _) = hess_and_rg(&self.frame, &self.lambda, f);
        let g = gradient(f);
        hess + (g.transpose() * self.total() * &g)[(0, 0)]
    }
}

/// Curvature matrix in the basis `U = (a^T∇f, z^T∇f)`.
#[derive(Debug, Clone)]
pub struct CurvatureMatrix {
    pub point: Vec<f64>,
    pub a: DMatrix<f64>,
    pub rg_ab: DMatrix<f64>,
    pub r_zb: DMatrix<f64>,
    pub r_rho: DMatrix<f64>,
    /// Total form in the `∇f` basis.
    pub b: DMatrix<f64>,
    pub lambda_residual: f64,
}

/// `M = [a | z]`, columns are the rows of `a^T` then `z^T`.
pub fn frame_matrix(pe: &PointEval) -> DMatrix<f64> {
    let (n, nn) = (pe.n(), pe.dim());
    DMatrix::from_fn(nn, nn, |r, c| {
        if c < n {
            pe.at(c, r).value()
        } else {
            pe.zt(c - n, r).value()
        }
    })
}

/// Transform every form of `dec` to the `U`-basis.
pub fn curvature_matrix(pe: &PointEval, dec: &Decomposition) -> Result<CurvatureMatrix> {
    let m = frame_matrix(pe);
    let det = m.determinant();
    if !(det.abs() >= SINGULAR_TOL) {
        return Err(Error::SingularFrame {
            det,
            point: pe.point().to_vec(),
        });
    }
    let minv = m.try_inverse().ok_or_else(|| Error::SingularFrame {
        det,
        point: pe.point().to_vec(),
    })?;
    let to_u = |b: &DMatrix<f64>| symmetric_part(&(&minv * b * minv.transpose()));
    let rg_ab = to_u(&(&dec.r_g + &dec.r_ab));
    let r_zb = to_u(&dec.r_zb);
    let r_rho = to_u(&dec.r_rho);
    Ok(CurvatureMatrix {
        point: pe.point().to_vec(),
        a: &rg_ab + &r_zb + &r_rho,
        rg_ab,
        r_zb,
        r_rho,
        b: symmetric_part(&dec.total()),
        lambda_residual: dec.lambda.residual,
    })
}

/// The curvature matrix `A` at `x`.
pub fn extract_a(s: &Structure, x: &[f64], mode: LambdaMode) -> Result<CurvatureMatrix> {
    let pe = s.eval_point(x)?;
    let det = frame_matrix(&pe).determinant();
    if !(det.abs() >= SINGULAR_TOL) {
        return Err(Error::SingularFrame { det, point: x.to_vec() });
    }
    let dec = Decomposition::new(s, &pe, mode)?;
    curvature_matrix(&pe, &dec)
}

/// `|LHS − RHS| / (1 + |LHS|)` for the z-Bochner identity with `f` an
/// order-3 jet.
pub fn bochner_residual(pe: &PointEval, dec: &Decomposition, f: &Jet3) -> f64 {
    let lhs = gamma::evaluate(pe, f).lhs();
    let rhs = dec.rhs(f);
    (lhs - rhs).abs() / (1.0 + lhs.abs())
}

pub fn verify_bochner(s: &Structure, f: &Expr, x: &[f64], mode: LambdaMode) -> Result<f64> {
    let pe = s.eval_point(x)?;
    let dec = Decomposition::new(s, &pe, mode)?;
    Ok(bochner_residual(&pe, &dec, &f.eval_jet(x, 3)?))
}
