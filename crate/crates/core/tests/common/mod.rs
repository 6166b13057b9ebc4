//! Shared fixtures: preset structures with potentials, random polynomials,
//! and closed-form curvature matrices derived independently by computer
//! algebra and frozen here.
#![allow(dead_code)]

use std::collections::BTreeMap;

use gammaz::jets::Jet3;
use gammaz::{Preset, Structure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn heisenberg(v: &str) -> Structure {
    Structure::preset(Preset::Heisenberg, &BTreeMap::new(), None).unwrap().with_potential(v).unwrap()
}

pub fn martinet(v: &str) -> Structure {
    Structure::preset(Preset::Martinet, &BTreeMap::new(), None).unwrap().with_potential(v).unwrap()
}

pub fn se2(beta: f64, g: Option<&str>, v: &str) -> Structure {
    Structure::preset(Preset::Se2, &params(&[("beta", beta)]), g).unwrap().with_potential(v).unwrap()
}

pub fn ou1d(v: &str) -> Structure {
    Structure::preset(Preset::Ou1d, &BTreeMap::new(), None).unwrap().with_potential(v).unwrap()
}

/// Every preset with a non-trivial potential, labelled.
pub fn identity_suite() -> Vec<(&'static str, Structure)> {
    vec![
        ("heisenberg", heisenberg("x^2 + (y^2 + z^2)/2 + x*y*z/3")),
        ("se2 g=beta", se2(1.0, None, "theta^2/2 + sin(x)*y + y^2/3")),
        ("se2 g=2+sin(theta)", se2(1.0, Some("2 + sin(theta)"), "theta^2/2 + sin(x)*y + y^2/3")),
        ("martinet", martinet("(x^2 + y^2)/2 + x*z^2/4")),
        ("ou1d", ou1d("x^2/2 + x^4/12")),
    ]
}

pub fn uniform_point(r: &mut ChaCha8Rng, d: usize, half: f64) -> Vec<f64> {
    (0..d).map(|_| r.random_range(-half..half)).collect()
}

/// A polynomial as a list of (coefficient, exponent vector).
#[derive(Debug, Clone)]
pub struct Poly {
    pub terms: Vec<(f64, Vec<u32>)>,
}

fn exponents(d: usize, deg: u32) -> Vec<Vec<u32>> {
    if d == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for e in 0..=deg {
        for mut rest in exponents(d - 1, deg - e) {
            rest.insert(0, e);
            out.push(rest);
        }
    }
    out
}

impl Poly {
    /// Dense random polynomial of total degree `<= deg`.
    pub fn random(r: &mut ChaCha8Rng, d: usize, deg: u32) -> Poly {
        Poly {
            terms: exponents(d, deg).into_iter().map(|e| (r.random_range(-1.0..1.0), e)).collect(),
        }
    }

    pub fn to_expr(&self, names: &[String]) -> String {
        let mut s = String::from("0");
        for (c, e) in &self.terms {
            s.push_str(&format!(" + ({c:?})"));
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    s.push_str(&format!("*{}^{}", names[i], k));
                }
            }
        }
        s
    }

    /// Exact partial derivative for the multi-index `idx`.
    pub fn partial(&self, idx: &[usize], x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (c, e) in &self.terms {
            let mut e = e.clone();
            let mut coef = *c;
            for &i in idx {
                if e[i] == 0 {
                    coef = 0.0;
                    break;
                }
                coef *= e[i] as f64;
                e[i] -= 1;
            }
            if coef != 0.0 {
                total += coef * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>();
            }
        }
        total
    }

    /// Exact jet at `x`.
    pub fn jet(&self, x: &[f64], order: u8) -> Jet3 {
        let d = x.len();
        let mut j = Jet3::constant(self.partial(&[], x), d, order);
        for a in 0..d {
            if order >= 1 {
                j.set_partial(&[a], self.partial(&[a], x));
            }
            for b in a..d {
                if order >= 2 {
                    j.set_partial(&[a, b], self.partial(&[a, b], x));
                }
                for c in b..d {
                    if order >= 3 {
                        j.set_partial(&[a, b, c], self.partial(&[a, b, c], x));
                    }
                }
            }
        }
        j
    }
}

pub type Mat3 = [[f64; 3]; 3];

fn sym(u: [f64; 6]) -> Mat3 {
    [[u[0], u[1], u[2]], [u[1], u[3], u[4]], [u[2], u[4], u[5]]]
}

/// Potential derivatives needed by the closed forms.
pub struct Vd {
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl Vd {
    pub fn of(s: &Structure, x: &[f64]) -> Vd {
        let j = s.potential().eval_jet(x, 2).unwrap();
        let mut h = [[0.0; 3]; 3];
        for (a, row) in h.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = j.d2(a, b);
            }
        }
        Vd { g: [j.d1(0), j.d1(1), j.d1(2)], h }
    }
}

// ---- closed forms derived from the generic decomposition by computer
// ---- algebra (frozen); coordinates (x, y, z) or (theta, x, y)

pub fn heisenberg_a(p: &[f64], v: &Vd) -> Mat3 {
    let (x, y) = (p[0], p[1]);
    let [vx, vy, vz] = v.g;
    let h = v.h;
    let (vxx, vxy, vxz, vyy, vyz, vzz) = (h[0][0], h[0][1], h[0][2], h[1][1], h[1][2], h[2][2]);
    sym([
        vxx + y * y / 4.0 * vzz - y * vxz - 1.0,
        vxy + x / 2.0 * vxz - y / 2.0 * vyz - x * y / 4.0 * vzz,
        x / 4.0 * vz - y / 4.0 * vzz + vy / 2.0 + vxz / 2.0,
        vyy + x * x / 4.0 * vzz + x * vyz - 1.0,
        x / 4.0 * vzz + y / 4.0 * vz - vx / 2.0 + vyz / 2.0,
        0.5,
    ])
}

pub fn martinet_a(p: &[f64], v: &Vd) -> Mat3 {
    let y = p[1];
    let [vx, vy, vz] = v.g;
    let h = v.h;
    let (vxx, vxy, vxz, vyy, vyz, vzz) = (h[0][0], h[0][1], h[0][2], h[1][1], h[1][2], h[2][2]);
    sym([
        vxx + y * y * vxz + y.powi(4) / 4.0 * vzz - y * y,
        vxy + y * y / 2.0 * vyz + y / 2.0 * vz,
        0.5 - y / 2.0 * vy + vxz / 2.0 + y * y / 4.0 * vzz,
        vyy - y * y,
        y.powi(3) / 4.0 * vz + y / 2.0 * vx + vyz / 2.0,
        y * y / 2.0,
    ])
}

/// `gj` is the order-2 jet of `g` at the point.
pub fn se2_a(p: &[f64], beta: f64, gj: &Jet3, v: &Vd) -> Mat3 {
    let e = (beta * p[0]).exp();
    let [vt, vx, vy] = v.g;
    let h = v.h;
    let (vtt, vtx, vty, vxx, vxy, vyy) = (h[0][0], h[0][1], h[0][2], h[1][1], h[1][2], h[2][2]);
    let g = gj.value();
    let (gt, gx, gy) = (gj.d1(0), gj.d1(1), gj.d1(2));
    let (gtt, gxx, gxy, gyy) = (gj.d2(0, 0), gj.d2(1, 1), gj.d2(1, 2), gj.d2(2, 2));
    let b2 = beta * beta;
    let a33 = (b2 / 2.0
        + g * (e * e * vx * gx + e * vx * gy + e * vy * gx + vt * gt + vy * gy)
        - g * (e * e * gxx + 2.0 * e * gxy + gtt + gyy)
        - (e * e * gx * gx + 2.0 * e * gx * gy + gt * gt + gy * gy))
        / (g * g);
    sym([
        vtt - b2 - b2 / (g * g),
        beta * e * vx + beta * vy / 2.0 + e * vtx + vty,
        (beta * e * vx + beta * vy - g * g * vty) / (2.0 * g),
        -b2 / (g * g) - beta * vt + e * e * vxx + 2.0 * e * vxy + vyy,
        (b2 - beta * vt - g * g * e * vxy - g * g * vyy) / (2.0 * g),
        a33,
    ])
}

pub fn max_abs_diff(a: &nalgebra::DMatrix<f64>, b: &Mat3) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            m = m.max((a[(i, j)] - b[i][j]).abs());
        }
    }
    m
}

// ---- frame fixtures: rows are coefficient vectors of the gradient

pub type Rows = Vec<[f64; 3]>;

pub struct FrameFixture {
    pub c: Rows,
    pub d: Rows,
    pub e: Rows,
    pub f: Rows,
    pub g: Rows,
}

const O: [f64; 3] = [0.0; 3];

pub fn heisenberg_fixture(p: &[f64]) -> FrameFixture {
    let (x, y) = (p[0], p[1]);
    let c1 = [0.0, 0.5, x / 4.0];
    let c2 = [-0.5, 0.0, y / 4.0];
    FrameFixture {
        c: vec![O, O, c1, O, O, c2, c1, c2, [-x / 2.0, -y / 2.0, 0.0]],
        d: vec![O, [0.0, 0.0, 0.5], [0.0, 0.0, -0.5], O],
        e: vec![O, O],
        f: vec![O; 9],
        g: vec![O; 9],
    }
}

pub fn martinet_fixture(p: &[f64]) -> FrameFixture {
    let y = p[1];
    FrameFixture {
        c: vec![O, O, O, O, O, [y, 0.0, y.powi(3) / 2.0], [0.0, -y, 0.0], O, [0.0, -y.powi(3) / 2.0, 0.0]],
        d: vec![O, O, [0.0, 0.0, y], O],
        e: vec![O, O],
        f: vec![O; 9],
        g: vec![O; 9],
    }
}

/// Coordinates `(theta, x, y)`; `gj` is an order ≥ 1 jet of `g`.
pub fn se2_fixture(p: &[f64], beta: f64, gj: &Jet3) -> FrameFixture {
    let e = (beta * p[0]).exp();
    let (gv, gt, gx, gy) = (gj.value(), gj.d1(0), gj.d1(1), gj.d1(2));
    let f2 = [0.0, 0.0, gv * gt];
    let f5 = [0.0, 0.0, e * gv * gy + e * e * gv * gx];
    let f8 = [0.0, 0.0, gv * gy + e * gv * gx];
    let neg2 = |v: [f64; 3]| [-2.0 * v[0], -2.0 * v[1], -2.0 * v[2]];
    FrameFixture {
        c: vec![
            O,
            [0.0, beta * e * e, beta * e],
            O,
            O,
            [-beta * e * e, 0.0, 0.0],
            [-beta * e, 0.0, 0.0],
            O,
            O,
            O,
        ],
        d: vec![O, [0.0, beta * e, 0.0], O, O],
        e: vec![[0.0, 0.0, -gt], [0.0, 0.0, -gy - e * gx]],
        f: vec![O, O, f2, O, O, f5, O, O, f8],
        g: vec![O, O, neg2(f2), O, O, neg2(f5), O, O, neg2(f8)],
    }
}

fn rows_dev(got: &nalgebra::DMatrix<f64>, want: &Rows) -> f64 {
    if got.nrows() != want.len() || got.ncols() != 3 {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for (r, w) in want.iter().enumerate() {
        for c in 0..3 {
            worst = worst.max((got[(r, c)] - w[c]).abs());
        }
    }
    worst
}

/// Largest entrywise deviation of the built frame (Q, P and the gradient
/// fields) from `fx` for a 3d structure with `n = 2`, `m = 1`.
pub fn frame_deviation(s: &Structure, x: &[f64], fx: &FrameFixture) -> f64 {
    let fr = gammaz::bochner::build_frame(&s.eval_point(x).unwrap());
    let at = |i: usize, j: usize| s.a_t(i, j).eval(x).unwrap();
    let zt = |i: usize, j: usize| s.z_t(i, j).eval(x).unwrap();
    let mut worst: f64 = 0.0;
    for ih in 0..3 {
        for kh in 0..3 {
            for i in 0..2 {
                for k in 0..2 {
                    worst = worst.max((fr.q[(i * 2 + k, ih * 3 + kh)] - at(i, ih) * at(k, kh)).abs());
                }
                worst = worst.max((fr.p[(i, ih * 3 + kh)] - zt(0, ih) * at(i, kh)).abs());
            }
        }
    }
    for (got, want) in [(&fr.c, &fx.c), (&fr.d, &fx.d), (&fr.e, &fx.e), (&fr.f, &fx.f), (&fr.g, &fx.g)] {
        worst = worst.max(rows_dev(&got.coef, want));
    }
    worst
}
