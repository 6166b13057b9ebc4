//! Sub-Riemannian structures: the matrix fields `a`, `z`, the potential `V`
//! and the log-volume, plus the primitive fields built from them.
//!
//! Matrices are stored transposed: `a_t(i, j)` is `a^T_{ij}`, row `i < n`,
//! column `j < n + m`.  The invariant density only ever enters through
//! `∇log ρ* = −∇V + ∇log Vol`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exprdsl::{parse, Expr};
use crate::jets::{Jet3, MAX_DIM};

/// Built-in structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Heisenberg,
    Se2,
    Martinet,
    Ou1d,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Heisenberg, Preset::Se2, Preset::Martinet, Preset::Ou1d];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Heisenberg => "heisenberg",
            Preset::Se2 => "se2",
            Preset::Martinet => "martinet",
            Preset::Ou1d => "ou1d",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Preset> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset `{s}`")))
    }
}

/// Data of a sub-Riemannian structure; immutable once built.
#[derive(Debug, Clone)]
pub struct Structure {
    coords: Vec<String>,
    n: usize,
    m: usize,
    a_t: Vec<Expr>,
    z_t: Vec<Expr>,
    v: Expr,
    log_vol: Expr,
    params: BTreeMap<String, f64>,
    preset: Option<Preset>,
}

impl Structure {
    /// Build from string matrices.  `a` is `(n+m) × n` and `z` is
    /// `(n+m) × m`, i.e. their columns are the horizontal and vertical
    /// vector fields.
    pub fn new<S: AsRef<str>>(
        coords: &[S],
        a: &[Vec<String>],
        z: &[Vec<String>],
        v: &str,
        log_vol: &str,
        params: BTreeMap<String, f64>,
    ) -> Result<Structure> {
        let coords: Vec<String> = coords.iter().map(|s| s.as_ref().to_string()).collect();
        let dim = coords.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidStructure(format!(
                "need between 1 and {MAX_DIM} coordinates, got {dim}"
            )));
        }
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].contains(c) {
                return Err(Error::InvalidStructure(format!("duplicate coordinate `{c}`")));
            }
            if params.contains_key(c) {
                return Err(Error::InvalidStructure(format!(
                    "`{c}` is both a coordinate and a parameter"
                )));
            }
        }
        if a.len() != dim || z.len() != dim {
            return Err(Error::InvalidStructure(format!(
                "a and z need {dim} rows (one per coordinate), got {} and {}",
                a.len(),
                z.len()
            )));
        }
        let n = a[0].len();
        let m = z[0].len();
        if n == 0 {
            return Err(Error::InvalidStructure("a needs at least one column".into()));
        }
        if n + m != dim {
            return Err(Error::InvalidStructure(format!(
                "n + m = {} + {} does not match {dim} coordinates",
                n, m
            )));
        }
        if a.iter().any(|r| r.len() != n) || z.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidStructure("ragged a or z matrix".into()));
        }
        let p = |s: &str| parse(s, &coords, &params);
        let mut a_t = Vec::with_capacity(n * dim);
        for i in 0..n {
            for row in a {
                a_t.push(p(&row[i])?);
            }
        }
        let mut z_t = Vec::with_capacity(m * dim);
        for i in 0..m {
            for row in z {
                z_t.push(p(&row[i])?);
            }
        }
        let v = p(v)?;
        let log_vol = p(log_vol)?;
        Ok(Structure {
            coords,
            n,
            m,
            a_t,
            z_t,
            v,
            log_vol,
            params,
            preset: None,
        })
    }

    /// A built-in structure with `V = 0`.  `se2` reads the parameter
    /// `beta` (default 1) and the expression `g` (default `beta`).
    pub fn preset(p: Preset, params: &BTreeMap<String, f64>, g: Option<&str>) -> Result<Structure> {
        let s = |rows: &[&[&str]]| -> Vec<Vec<String>> {
            rows.iter().map(|r| r.iter().map(|e| e.to_string()).collect()).collect()
        };
        let mut params = params.clone();
        if g.is_some() && p != Preset::Se2 {
            return Err(Error::InvalidArgument(format!("preset {p} takes no g expression")));
        }
        let mut st = match p {
            Preset::Heisenberg => Structure::new(
                &["x", "y", "z"],
                &s(&[&["1", "0"], &["0", "1"], &["-y/2", "x/2"]]),
                &s(&[&["0"], &["0"], &["1"]]),
                "0",
                "0",
                params,
            )?,
            Preset::Se2 => {
                params.entry("beta".into()).or_insert(1.0);
                let g = g.unwrap_or("beta");
                let minus_g = format!("-({g})");
                Structure::new(
                    &["theta", "x", "y"],
                    &s(&[&["1", "0"], &["0", "exp(beta*theta)"], &["0", "1"]]),
                    &[vec!["0".into()], vec!["0".into()], vec![minus_g]],
                    "0",
                    "0",
                    params,
                )?
            }
            Preset::Martinet => Structure::new(
                &["x", "y", "z"],
                &s(&[&["1", "0"], &["0", "1"], &["y^2/2", "0"]]),
                &s(&[&["0"], &["0"], &["1"]]),
                "0",
                "-y^2/2",
                params,
            )?,
            Preset::Ou1d => Structure::new(&["x"], &s(&[&["1"]]), &[vec![]], "0", "0", params)?,
        };
        st.preset = Some(p);
        Ok(st)
    }

    /// Replace the potential.
    pub fn with_potential(&self, v: &str) -> Result<Structure> {
        let mut s = self.clone();
        s.v = self.parse_expr(v)?;
        Ok(s)
    }

    /// Replace the log-volume.
    pub fn with_log_vol(&self, lv: &str) -> Result<Structure> {
        let mut s = self.clone();
        s.log_vol = self.parse_expr(lv)?;
        Ok(s)
    }

    /// Replace one entry `a^T_{ij}` (drops the preset tag).
    pub fn with_a_t_entry(&self, i: usize, j: usize, e: &str) -> Result<Structure> {
        if i >= self.n || j >= self.dim() {
            return Err(Error::InvalidArgument(format!(
                "a^T entry ({i}, {j}) out of range for {} x {}",
                self.n,
                self.dim()
            )));
        }
        let mut s = self.clone();
        s.a_t[i * self.dim() + j] = self.parse_expr(e)?;
        s.preset = None;
        Ok(s)
    }

    /// Replace one entry but keep the preset tag, so preset shift vectors
    /// are still applied.  Useful for checking that a perturbed frame breaks
    /// the identity.
    pub fn with_a_t_entry_tagged(&self, i: usize, j: usize, e: &str) -> Result<Structure> {
        let mut s = self.with_a_t_entry(i, j, e)?;
        s.preset = self.preset;
        Ok(s)
    }

    /// Parse an expression over this structure's coordinates and parameters.
    pub fn parse_expr(&self, text: &str) -> Result<Expr> {
        parse(text, &self.coords, &self.params)
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn preset_kind(&self) -> Option<Preset> {
        self.preset
    }

    pub fn a_t(&self, i: usize, j: usize) -> &Expr {
        &self.a_t[i * self.dim() + j]
    }

    pub fn z_t(&self, i: usize, j: usize) -> &Expr {
        &self.z_t[i * self.dim() + j]
    }

    pub fn potential(&self) -> &Expr {
        &self.v
    }

    pub fn log_vol(&self) -> &Expr {
        &self.log_vol
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "point has {} components, structure has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite point {x:?}")));
        }
        Ok(())
    }

    /// Jets of every coefficient field at `x` (order 2).
    pub fn eval_point(&self, x: &[f64]) -> Result<PointEval> {
        self.check_point(x)?;
        let d = self.dim();
        let (n, m) = (self.n, self.m);
        let jet = |e: &Expr| e.eval_jet(x, 2);
        let at = self.a_t.iter().map(jet).collect::<Result<Vec<_>>>()?;
        let zt = self.z_t.iter().map(jet).collect::<Result<Vec<_>>>()?;
        let v = jet(&self.v)?;
        let log_vol = jet(&self.log_vol)?;
        for j in at.iter().chain(&zt) {
            if !j.value().is_finite() {
                return Err(Error::Domain(format!("non-finite frame entry at {x:?}")));
            }
        }
        let outer = |w: &[Jet3], rows: usize| -> Vec<Jet3> {
            let mut out = vec![Jet3::zero(d, 2); d * d];
            for i in 0..d {
                for j in i..d {
                    let mut s = Jet3::zero(d, 2);
                    for k in 0..rows {
                        s += w[k * d + i] * w[k * d + j];
                    }
                    out[i * d + j] = s;
                    out[j * d + i] = s;
                }
            }
            out
        };
        let aat = outer(&at, n);
        let zzt = outer(&zt, m);
        // (a⊗∇a)_k̂ = Σ_k a_{k̂k} Σ_{k'} ∂_{k'} a_{k'k}
        let mut aona = vec![Jet3::zero(d, 1); d];
        for k in 0..n {
            let mut div = Jet3::zero(d, 1);
            for kp in 0..d {
                div += at[k * d + kp].deriv(kp);
            }
            for (kh, slot) in aona.iter_mut().enumerate() {
                *slot += at[k * d + kh] * div;
            }
        }
        let log_rho = log_vol - v;
        Ok(PointEval {
            x: x.to_vec(),
            n,
            m,
            at,
            zt,
            v,
            log_vol,
            log_rho,
            aat,
            zzt,
            aona,
        })
    }

    /// `(a^T∇f)(x)`, length `n`.
    pub fn horizontal_gradient(&self, f: &Expr, x: &[f64]) -> Result<Vec<f64>> {
        let pe = self.eval_point(x)?;
        let fj = f.eval_jet(x, 1)?;
        Ok(pe.horizontal_gradient(&fj).iter().map(Jet3::value).collect())
    }

    /// `(z^T∇f)(x)`, length `m`.
    pub fn vertical_gradient(&self, f: &Expr, x: &[f64]) -> Result<Vec<f64>> {
        let pe = self.eval_point(x)?;
        let fj = f.eval_jet(x, 1)?;
        Ok(pe.vertical_gradient(&fj).iter().map(Jet3::value).collect())
    }

    /// The contraction `a⊗∇a` at `x`, length `n + m`.
    pub fn a_otimes_nabla_a(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pe = self.eval_point(x)?;
        Ok(pe.aona.iter().map(Jet3::value).collect())
    }

    /// `max_x ‖a⊗∇a + aa^T∇log Vol‖∞` over the samples.  Points where an
    /// expression cannot be evaluated count as an infinite residual.
    pub fn check_invariant_measure(&self, samples: &[Vec<f64>]) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for x in samples {
            let pe = match self.eval_point(x) {
                Ok(pe) => pe,
                Err(_) => return f64::INFINITY,
            };
            for i in 0..d {
                let mut r = pe.aona[i].value();
                for j in 0..d {
                    r += pe.aat(i, j).value() * pe.log_vol.d1(j);
                }
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// `b = −½ aa^T∇V` at `x`.
    pub fn drift_b(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pe = self.eval_point(x)?;
        Ok((0..self.dim()).map(|k| pe.drift_b(k).value()).collect())
    }

    /// `(Lf)(x)` from exact jets.
    pub fn generator_l(&self, f: &Expr, x: &[f64]) -> Result<f64> {
        let pe = self.eval_point(x)?;
        let fj = f.eval_jet(x, 2)?;
        Ok(pe.generator(&fj).value())
    }

    /// `∇log ρ*(x) = −∇V + ∇log Vol`.
    pub fn grad_log_rho_star(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pe = self.eval_point(x)?;
        Ok(pe.grad_log_rho())
    }
}

/// Coefficient jets of a structure at one point.
#[derive(Debug, Clone)]
pub struct PointEval {
    x: Vec<f64>,
    n: usize,
    m: usize,
    at: Vec<Jet3>,
    zt: Vec<Jet3>,
    v: Jet3,
    log_vol: Jet3,
    log_rho: Jet3,
    aat: Vec<Jet3>,
    zzt: Vec<Jet3>,
    aona: Vec<Jet3>,
}

impl PointEval {
    pub fn point(&self) -> &[f64] {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &Jet3 {
        &self.at[i * self.dim() + j]
    }

    #[inline]
    pub fn zt(&self, i: usize, j: usize) -> &Jet3 {
        &self.zt[i * self.dim() + j]
    }

    #[inline]
    pub fn aat(&self, i: usize, j: usize) -> &Jet3 {
        &self.aat[i * self.dim() + j]
    }

    #[inline]
    pub fn zzt(&self, i: usize, j: usize) -> &Jet3 {
        &self.zzt[i * self.dim() + j]
    }

    pub fn potential(&self) -> &Jet3 {
        &self.v
    }

    pub fn log_vol(&self) -> &Jet3 {
        &self.log_vol
    }

    pub fn log_rho(&self) -> &Jet3 {
        &self.log_rho
    }

    pub fn grad_log_rho(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.log_rho.d1(i)).collect()
    }

    /// `a⊗∇a` component `k` as an order-1 jet.
    pub fn aona(&self, k: usize) -> &Jet3 {
        &self.aona[k]
    }

    /// Drift component `b_k = −½ Σ_j (aa^T)_{kj} ∂_j V` as an order-1 jet.
    pub fn drift_b(&self, k: usize) -> Jet3 {
        let d = self.dim();
        let mut s = Jet3::zero(d, 1);
        for j in 0..d {
            s += self.aat(k, j).truncate(1) * self.v.deriv(j);
        }
        s * -0.5
    }

    /// `(a^T∇f)_k` for each `k < n`, one order below `f` (at most 2).
    pub fn horizontal_gradient(&self, f: &Jet3) -> Vec<Jet3> {
        self.frame_gradient(&self.at, self.n, f)
    }

    /// `(z^T∇f)_k` for each `k < m`.
    pub fn vertical_gradient(&self, f: &Jet3) -> Vec<Jet3> {
        self.frame_gradient(&self.zt, self.m, f)
    }

    fn frame_gradient(&self, w: &[Jet3], rows: usize, f: &Jet3) -> Vec<Jet3> {
        let d = self.dim();
        let df: Vec<Jet3> = (0..d).map(|j| f.deriv(j)).collect();
        (0..rows)
            .map(|k| {
                let mut s = Jet3::zero(d, 3);
                for j in 0..d {
                    s += w[k * d + j] * df[j];
                }
                s
            })
            .collect()
    }

    /// `Lh` as a jet of order `min(order(h) − 2, 1)`.
    pub fn generator(&self, h: &Jet3) -> Jet3 {
        assert!(h.order() >= 2, "generator needs a jet of order >= 2");
        let d = self.dim();
        let dh: Vec<Jet3> = (0..d).map(|j| h.deriv(j)).collect();
        let mut out = Jet3::zero(d, 1);
        for i in 0..d {
            let dhi_j: Vec<Jet3> = (0..d).map(|j| dh[i].deriv(j)).collect();
            for j in 0..d {
                // ∂_i((aa^T)_{ij} ∂_j h) − ∂_iV (aa^T)_{ij} ∂_j h
                let c = self.aat(i, j);
                let coef = c.deriv(i) - self.v.deriv(i) * c.truncate(1);
                out += coef * dh[j] + c.truncate(1) * dhi_j[j];
            }
            out -= self.aona[i] * dh[i];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heis() -> Structure {
        Structure::preset(Preset::Heisenberg, &BTreeMap::new(), None).unwrap()
    }

    #[test]
    fn gradients() {
        let h = heis();
        let fx = h.parse_expr("x").unwrap();
        let fz = h.parse_expr("z").unwrap();
        assert_eq!(h.horizontal_gradient(&fx, &[0.3, 0.2, 0.1]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(h.horizontal_gradient(&fz, &[1.0, 1.0, 0.0]).unwrap(), vec![-0.5, 0.5]);
        assert_eq!(h.vertical_gradient(&fz, &[1.0, 1.0, 0.0]).unwrap(), vec![1.0]);

        let mut p = BTreeMap::new();
        p.insert("beta".to_string(), 2.0);
        let se2 = Structure::preset(Preset::Se2, &p, None).unwrap();
        let fy = se2.parse_expr("y").unwrap();
        assert_eq!(se2.vertical_gradient(&fy, &[0.1, 0.2, 0.3]).unwrap(), vec![-2.0]);

        let mart = Structure::preset(Preset::Martinet, &BTreeMap::new(), None).unwrap();
        let fz = mart.parse_expr("z").unwrap();
        assert_eq!(mart.horizontal_gradient(&fz, &[0.0, 2.0, 0.0]).unwrap(), vec![2.0, 0.0]);
        let fx = mart.parse_expr("x").unwrap();
        assert_eq!(mart.vertical_gradient(&fx, &[0.0, 2.0, 0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn contraction_and_measure() {
        assert_eq!(heis().a_otimes_nabla_a(&[0.4, -0.7, 2.0]).unwrap(), vec![0.0; 3]);
        // the literal contraction vanishes for Martinet: the only
        // non-constant entry y²/2 is differentiated in z
        let mart = Structure::preset(Preset::Martinet, &BTreeMap::new(), None).unwrap();
        assert_eq!(mart.a_otimes_nabla_a(&[0.0, 3.0, 0.0]).unwrap(), vec![0.0; 3]);
        let samples = vec![vec![0.1, -0.5, 0.3], vec![1.0, 0.25, -2.0]];
        let r = mart.with_log_vol("0").unwrap().check_invariant_measure(&samples);
        assert!(r.abs() < 1e-15, "{r}");
        let r = mart.check_invariant_measure(&samples);
        assert!((r - 0.5).abs() < 1e-15, "{r}");
    }

    #[test]
    fn drift_examples() {
        assert_eq!(heis().drift_b(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
        let h = heis().with_potential("x^2 + (y^2 + z^2)/2").unwrap();
        assert_eq!(h.drift_b(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        let ou = Structure::preset(Preset::Ou1d, &BTreeMap::new(), None)
            .unwrap()
            .with_potential("x^2/2")
            .unwrap();
        assert_eq!(ou.drift_b(&[3.0]).unwrap(), vec![-1.5]);
    }

    #[test]
    fn generator_examples() {
        let h = heis();
        let f = h.parse_expr("x^2").unwrap();
        for p in [[0.0, 0.0, 0.0], [0.3, -1.2, 2.0]] {
            assert!((h.generator_l(&f, &p).unwrap() - 2.0).abs() < 1e-14);
        }
        let hv = h.with_potential("x^2 + (y^2 + z^2)/2").unwrap();
        let f = hv.parse_expr("z").unwrap();
        let (x, y, z) = (0.7, -0.4, 1.3);
        let want = x * y / 2.0 - z * (x * x + y * y) / 4.0;
        assert!((hv.generator_l(&f, &[x, y, z]).unwrap() - want).abs() < 1e-14);
        let c = hv.parse_expr("5").unwrap();
        assert_eq!(hv.generator_l(&c, &[x, y, z]).unwrap(), 0.0);
    }

    #[test]
    fn shape_validation() {
        let bad = Structure::new(
            &["x", "y"],
            &[vec!["1".into()], vec!["0".into()]],
            &[vec![], vec![]],
            "0",
            "0",
            BTreeMap::new(),
        );
        assert!(matches!(bad, Err(Error::InvalidStructure(_))));
        assert!("nope".parse::<Preset>().is_err());
        assert_eq!("se2".parse::<Preset>().unwrap(), Preset::Se2);
    }
}
