//! Order-3 truncated multivariate Taylor arithmetic (forward-mode AD).
//!
//! A [`Jet3`] carries the value of a scalar field at a point together with
//! all partial derivatives up to a runtime order `0..=3` in `d <= 8`
//! variables.  Second and third partials are stored once per multi-index
//! (fully symmetric), packed in colexicographic order so the packing does
//! not depend on `d`:
//!
//! * pair `i <= j`       -> `j(j+1)/2 + i`
//! * triple `i <= j <= k` -> `k(k+1)(k+2)/6 + j(j+1)/2 + i`
//!
//! Arithmetic between jets of orders `p` and `q` yields order `min(p, q)`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Largest supported number of variables.
pub const MAX_DIM: usize = 8;
const N2: usize = MAX_DIM * (MAX_DIM + 1) / 2;
const N3: usize = MAX_DIM * (MAX_DIM + 1) * (MAX_DIM + 2) / 6;

/// Packed slot of the symmetric pair `(i, j)`.
#[inline]
pub fn idx2(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    b * (b + 1) / 2 + a
}

/// Packed slot of the symmetric triple `(i, j, k)`.
#[inline]
pub fn idx3(i: usize, j: usize, k: usize) -> usize {
    let mut s = [i, j, k];
    s.sort_unstable();
    s[2] * (s[2] + 1) * (s[2] + 2) / 6 + s[1] * (s[1] + 1) / 2 + s[0]
}

#[inline]
fn n2(d: usize) -> usize {
    d * (d + 1) / 2
}

#[inline]
fn n3(d: usize) -> usize {
    d * (d + 1) * (d + 2) / 6
}

/// Truncated Taylor jet of a scalar in `d` variables.
#[derive(Clone, Copy)]
pub struct Jet3 {
    dim: u8,
    order: u8,
    v: f64,
    g: [f64; MAX_DIM],
    h: [f64; N2],
    t: [f64; N3],
}

impl fmt::Debug for Jet3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.dim();
        let mut s = f.debug_struct("Jet3");
        s.field("dim", &d).field("order", &self.order).field("value", &self.v);
        if self.order >= 1 {
            s.field("grad", &&self.g[..d]);
        }
        if self.order >= 2 {
            s.field("hess", &&self.h[..n2(d)]);
        }
        if self.order >= 3 {
            s.field("third", &&self.t[..n3(d)]);
        }
        s.finish()
    }
}

impl Jet3 {
    /// The constant `c` as a jet.
    pub fn constant(c: f64, d: usize, order: u8) -> Jet3 {
        assert!(d <= MAX_DIM, "jet dimension {d} exceeds {MAX_DIM}");
        assert!(order <= 3, "jet order {order} exceeds 3");
        Jet3 {
            dim: d as u8,
            order,
            v: c,
            g: [0.0; MAX_DIM],
            h: [0.0; N2],
            t: [0.0; N3],
        }
    }

    pub fn zero(d: usize, order: u8) -> Jet3 {
        Jet3::constant(0.0, d, order)
    }

    /// The coordinate function `x_index` at `value`.
    pub fn variable(index: usize, value: f64, d: usize, order: u8) -> Jet3 {
        assert!(index < d, "variable index {index} out of range for d = {d}");
        let mut j = Jet3::constant(value, d, order);
        if order >= 1 {
            j.g[index] = 1.0;
        }
        j
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn order(&self) -> u8 {
        self.order
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.v
    }

    /// First partial `∂_i`; zero above the active order.
    #[inline]
    pub fn d1(&self, i: usize) -> f64 {
        if self.order >= 1 {
            self.g[i]
        } else {
            0.0
        }
    }

    #[inline]
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        if self.order >= 2 {
            self.h[idx2(i, j)]
        } else {
            0.0
        }
    }

    #[inline]
    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        if self.order >= 3 {
            self.t[idx3(i, j, k)]
        } else {
            0.0
        }
    }

    /// Partial derivative for an arbitrary multi-index of length <= 3.
    pub fn partial(&self, idx: &[usize]) -> f64 {
        match idx {
            [] => self.v,
            [i] => self.d1(*i),
            [i, j] => self.d2(*i, *j),
            [i, j, k] => self.d3(*i, *j, *k),
            _ => panic!("jets carry partials up to order 3"),
        }
    }

    /// Overwrite one partial (all permutations share the slot).
    pub fn set_partial(&mut self, idx: &[usize], value: f64) {
        assert!(idx.len() <= self.order as usize, "partial above active order");
        match idx {
            [] => self.v = value,
            [i] => self.g[*i] = value,
            [i, j] => self.h[idx2(*i, *j)] = value,
            [i, j, k] => self.t[idx3(*i, *j, *k)] = value,
            _ => unreachable!(),
        }
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.d1(i)).collect()
    }

    /// Dense Hessian, row-major `d x d`.
    pub fn hessian(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = self.d2(i, j);
            }
        }
        out
    }

    /// Drop coefficients above `order`.
    pub fn truncate(&self, order: u8) -> Jet3 {
        let mut j = *self;
        j.order = self.order.min(order);
        j
    }

    /// `∂_i` of the jet as a jet one order lower.
    pub fn deriv(&self, i: usize) -> Jet3 {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let d = self.dim();
        let mut out = Jet3::constant(self.g[i], d, self.order - 1);
        if self.order >= 2 {
            for a in 0..d {
                out.g[a] = self.h[idx2(i, a)];
            }
        }
        if self.order >= 3 {
            for b in 0..d {
                for a in 0..=b {
                    out.h[idx2(a, b)] = self.t[idx3(i, a, b)];
                }
            }
        }
        out
    }

    /// `outer ∘ self` where `c = [g, g', g'', g''']` are the derivatives of
    /// the univariate outer function at `self.value()` (Faà di Bruno).
    pub fn compose(&self, c: [f64; 4]) -> Jet3 {
        let d = self.dim();
        let mut out = Jet3::constant(c[0], d, self.order);
        if self.order >= 1 {
            for i in 0..d {
                out.g[i] = c[1] * self.g[i];
            }
        }
        if self.order >= 2 {
            let mut s = 0;
            for j in 0..d {
                for i in 0..=j {
                    out.h[s] = c[1] * self.h[s] + c[2] * self.g[i] * self.g[j];
                    s += 1;
                }
            }
        }
        if self.order >= 3 {
            let (g, h) = (&self.g, &self.h);
            let mut s = 0;
            for k in 0..d {
                for j in 0..=k {
                    for i in 0..=j {
                        out.t[s] = c[1] * self.t[s]
                            + c[2]
                                * (h[idx2(i, j)] * g[k]
                                    + h[idx2(i, k)] * g[j]
                                    + h[idx2(j, k)] * g[i])
                            + c[3] * g[i] * g[j] * g[k];
                        s += 1;
                    }
                }
            }
        }
        out
    }

    pub fn exp(&self) -> Jet3 {
        let e = self.v.exp();
        self.compose([e, e, e, e])
    }

    /// Natural logarithm; the caller guarantees `value > 0`.
    pub fn ln(&self) -> Jet3 {
        let x = self.v;
        let r = 1.0 / x;
        self.compose([x.ln(), r, -r * r, 2.0 * r * r * r])
    }

    /// Square root; the caller guarantees `value > 0` (or order 0).
    pub fn sqrt(&self) -> Jet3 {
        let s = self.v.sqrt();
        let x = self.v;
        self.compose([
            s,
            0.5 / s,
            -0.25 / (s * x),
            0.375 / (s * x * x),
        ])
    }

    pub fn sin(&self) -> Jet3 {
        let (s, c) = self.v.sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet3 {
        let (s, c) = self.v.sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn tanh(&self) -> Jet3 {
        let t = self.v.tanh();
        let s = 1.0 - t * t;
        self.compose([t, s, -2.0 * t * s, s * (6.0 * t * t - 2.0)])
    }

    /// `1 / self`; the caller guarantees `value != 0`.
    pub fn recip(&self) -> Jet3 {
        let r = 1.0 / self.v;
        let r2 = r * r;
        self.compose([r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2])
    }

    /// `self^p` for a real constant `p`; the caller guarantees `value > 0`.
    pub fn powf(&self, p: f64) -> Jet3 {
        let x = self.v;
        let xp = x.powf(p);
        self.compose([
            xp,
            p * xp / x,
            p * (p - 1.0) * xp / (x * x),
            p * (p - 1.0) * (p - 2.0) * xp / (x * x * x),
        ])
    }

    /// Integer power by repeated multiplication (exact for polynomials).
    pub fn powi(&self, n: u32) -> Jet3 {
        let mut acc = Jet3::constant(1.0, self.dim(), self.order);
        let mut base = *self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        acc
    }

    fn check_dims(&self, other: &Jet3) {
        assert_eq!(self.dim, other.dim, "jet dimension mismatch");
    }

    fn scale(mut self, c: f64) -> Jet3 {
        let d = self.dim();
        self.v *= c;
        if self.order >= 1 {
            self.g[..d].iter_mut().for_each(|x| *x *= c);
        }
        if self.order >= 2 {
            self.h[..n2(d)].iter_mut().for_each(|x| *x *= c);
        }
        if self.order >= 3 {
            self.t[..n3(d)].iter_mut().for_each(|x| *x *= c);
        }
        self
    }

    fn axpy(mut self, c: f64, other: &Jet3) -> Jet3 {
        self.check_dims(other);
        let d = self.dim();
        self.order = self.order.min(other.order);
        self.v += c * other.v;
        if self.order >= 1 {
            for i in 0..d {
                self.g[i] += c * other.g[i];
            }
        }
        if self.order >= 2 {
            for s in 0..n2(d) {
                self.h[s] += c * other.h[s];
            }
        }
        if self.order >= 3 {
            for s in 0..n3(d) {
                self.t[s] += c * other.t[s];
            }
        }
        self
    }

    fn product(&self, o: &Jet3) -> Jet3 {
        self.check_dims(o);
        let d = self.dim();
        let order = self.order.min(o.order);
        let (f, g) = (self, o);
        let mut out = Jet3::constant(f.v * g.v, d, order);
        if order >= 1 {
            for i in 0..d {
                out.g[i] = f.g[i] * g.v + f.v * g.g[i];
            }
        }
        if order >= 2 {
            let mut s = 0;
            for j in 0..d {
                for i in 0..=j {
                    out.h[s] = f.h[s] * g.v + f.g[i] * g.g[j] + f.g[j] * g.g[i] + f.v * g.h[s];
                    s += 1;
                }
            }
        }
        if order >= 3 {
            let mut s = 0;
            for k in 0..d {
                for j in 0..=k {
                    for i in 0..=j {
                        let hij = idx2(i, j);
                        let hik = idx2(i, k);
                        let hjk = idx2(j, k);
                        out.t[s] = f.t[s] * g.v
                            + f.h[hij] * g.g[k]
                            + f.h[hik] * g.g[j]
                            + f.h[hjk] * g.g[i]
                            + f.g[i] * g.h[hjk]
                            + f.g[j] * g.h[hik]
                            + f.g[k] * g.h[hij]
                            + f.v * g.t[s];
                        s += 1;
                    }
                }
            }
        }
        out
    }
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(self, o: Jet3) -> Jet3 {
        self.axpy(1.0, &o)
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, o: Jet3) -> Jet3 {
        self.axpy(-1.0, &o)
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, o: Jet3) -> Jet3 {
        self.product(&o)
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet3 {
    type Output = Jet3;
    fn add(mut self, c: f64) -> Jet3 {
        self.v += c;
        self
    }
}

impl Mul<f64> for Jet3 {
    type Output = Jet3;
    fn mul(self, c: f64) -> Jet3 {
        self.scale(c)
    }
}

impl Mul<Jet3> for f64 {
    type Output = Jet3;
    fn mul(self, j: Jet3) -> Jet3 {
        j.scale(self)
    }
}

impl AddAssign for Jet3 {
    fn add_assign(&mut self, o: Jet3) {
        *self = self.axpy(1.0, &o);
    }
}

impl SubAssign for Jet3 {
    fn sub_assign(&mut self, o: Jet3) {
        *self = self.axpy(-1.0, &o);
    }
}

impl MulAssign for Jet3 {
    fn mul_assign(&mut self, o: Jet3) {
        *self = self.product(&o);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packing_is_a_bijection() {
        let d = MAX_DIM;
        let mut seen = vec![false; n3(d)];
        for k in 0..d {
            for j in 0..=k {
                for i in 0..=j {
                    let s = idx3(i, j, k);
                    assert!(!seen[s]);
                    seen[s] = true;
                    assert_eq!(s, idx3(k, i, j));
                }
            }
        }
        assert!(seen.iter().all(|&b| b));
        assert_eq!(idx2(3, 1), idx2(1, 3));
    }

    #[test]
    fn variable_examples() {
        let x = Jet3::variable(0, 2.0, 3, 3);
        assert_eq!(x.value(), 2.0);
        assert_eq!(x.gradient(), vec![1.0, 0.0, 0.0]);
        assert!(x.hessian().iter().all(|&h| h == 0.0));
        let z = Jet3::variable(2, -1.0, 3, 1);
        assert_eq!(z.value(), -1.0);
        assert_eq!(z.gradient(), vec![0.0, 0.0, 1.0]);
        assert_eq!(z.d2(2, 2), 0.0);
    }

    #[test]
    fn square_of_sum() {
        let p = [0.5, -1.0, 2.0];
        let mut s = Jet3::zero(3, 3);
        for (i, &pi) in p.iter().enumerate() {
            s += Jet3::variable(i, pi, 3, 3);
        }
        let sq = s * s;
        let total: f64 = p.iter().sum();
        for i in 0..3 {
            assert_eq!(sq.d1(i), 2.0 * total);
            for j in 0..3 {
                assert_eq!(sq.d2(i, j), 2.0);
            }
        }
    }

    #[test]
    fn compose_exp_and_log() {
        let x = Jet3::variable(0, 0.0, 1, 3);
        let e = x.exp();
        for k in 0..=3usize {
            assert_eq!(e.partial(&vec![0; k]), 1.0);
        }
        let l = (x + 1.0).ln();
        assert_eq!(l.d1(0), 1.0);
        assert_eq!(l.d2(0, 0), -1.0);
        assert_eq!(l.d3(0, 0, 0), 2.0);
    }

    #[test]
    fn deriv_lowers_order() {
        // f = x^2 y^2 at (1, 2)
        let x = Jet3::variable(0, 1.0, 2, 3);
        let y = Jet3::variable(1, 2.0, 2, 3);
        let f = x * x * y * y;
        let fx = f.deriv(0); // 2 x y^2
        assert_eq!(fx.order(), 2);
        assert_eq!(fx.value(), 8.0);
        assert_eq!(fx.d1(1), 8.0); // 4 x y
        assert_eq!(fx.d2(1, 1), 4.0); // 4 x
        assert_eq!(fx.d2(0, 1), 8.0); // 4 y
    }

    #[test]
    fn mixed_orders_truncate() {
        let a = Jet3::variable(0, 1.0, 2, 3);
        let b = Jet3::variable(1, 1.0, 2, 1);
        assert_eq!((a * b).order(), 1);
        assert_eq!((a + b).order(), 1);
    }
}
