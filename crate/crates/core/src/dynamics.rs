//! Degenerate Fokker–Planck evolution `∂_tρ = ∇·(ρ aa^T ∇log(ρ/ρ*))` on a
//! box, its entropy diagnostics, and an Euler–Maruyama particle sampler for
//! the underlying diffusion.
//!
//! The finite-volume scheme uses zero-flux boundaries, so the box-restricted
//! `ρ* ∝ e^{−V} Vol` is stationary at the discrete level and mass telescopes.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bound::{decay_envelope, lambda_min, Region};
use crate::error::{Error, Result};
use crate::exprdsl::Expr;
use crate::jets::MAX_DIM;
use crate::structure::Structure;

const LOG_FLOOR: f64 = 1e-300;

/// Cell-averaged density on a uniform rectangular grid (row-major, last
/// axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid {
    pub bbox: Region,
    pub shape: Vec<usize>,
    pub h: Vec<f64>,
    pub rho: Vec<f64>,
}

impl DensityGrid {
    fn layout(bbox: &Region, shape: &[usize]) -> Result<Vec<f64>> {
        if bbox.axes.len() != shape.len() || shape.is_empty() || shape.len() > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "box has {} axes but shape has {}",
                bbox.axes.len(),
                shape.len()
            )));
        }
        let mut h = Vec::with_capacity(shape.len());
        for (&(lo, hi), &k) in bbox.axes.iter().zip(shape) {
            if k == 0 || !(hi > lo) {
                return Err(Error::InvalidArgument(format!("degenerate axis {lo}:{hi} with {k} cells")));
            }
            h.push((hi - lo) / k as f64);
        }
        Ok(h)
    }

    /// Evaluate `f` at cell centres and normalize to unit mass.
    pub fn from_fn(bbox: &Region, shape: &[usize], mut f: impl FnMut(&[f64]) -> f64) -> Result<DensityGrid> {
        let h = DensityGrid::layout(bbox, shape)?;
        let mut g = DensityGrid {
            bbox: bbox.clone(),
            shape: shape.to_vec(),
            h,
            rho: Vec::new(),
        };
        let mut x = vec![0.0; shape.len()];
        let rho: Vec<f64> = (0..g.cells())
            .map(|c| {
                g.center_into(c, &mut x);
                f(&x)
            })
            .collect();
        if let Some((i, v)) = rho.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::BadInitial(format!("cell {i} has value {v}")));
        }
        g.rho = rho;
        let m = g.mass();
        g.rho.iter_mut().for_each(|r| *r /= m);
        Ok(g)
    }

    /// Initial density from an expression over the structure's coordinates.
    pub fn from_expr(bbox: &Region, shape: &[usize], e: &Expr) -> Result<DensityGrid> {
        let h = DensityGrid::layout(bbox, shape)?;
        let probe = DensityGrid {
            bbox: bbox.clone(),
            shape: shape.to_vec(),
            h,
            rho: Vec::new(),
        };
        let mut x = vec![0.0; shape.len()];
        let mut vals = Vec::with_capacity(probe.cells());
        for c in 0..probe.cells() {
            probe.center_into(c, &mut x);
            vals.push(e.eval(&x).map_err(|err| Error::BadInitial(err.to_string()))?);
        }
        let mut it = vals.into_iter();
        DensityGrid::from_fn(bbox, shape, |_| it.next().unwrap())
    }

    pub fn cells(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.cell_volume()
    }

    fn center_into(&self, mut c: usize, x: &mut [f64]) {
        for ax in (0..self.shape.len()).rev() {
            let i = c % self.shape[ax];
            c /= self.shape[ax];
            x[ax] = self.bbox.axes[ax].0 + (i as f64 + 0.5) * self.h[ax];
        }
    }

    pub fn center(&self, c: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.shape.len()];
        self.center_into(c, &mut x);
        x
    }

    /// Little-endian `f64` values, row-major.
    pub fn write_raw<W: Write>(&self, mut w: W) -> io::Result<()> {
        for v in &self.rho {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// JSON sidecar describing a raw snapshot.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "format": "f64le",
            "order": "row-major",
            "box": self.bbox.axes.iter().map(|(a, b)| [a, b]).collect::<Vec<_>>(),
            "shape": self.shape,
        })
    }
}

/// `aa^T` (plus `zz^T` when `with_z`) at `x`, row-major.
fn gram_at(s: &Structure, x: &[f64], with_z: bool) -> Result<Vec<f64>> {
    let d = s.dim();
    let mut out = vec![0.0; d * d];
    let mut add = |rows: usize, z: bool| -> Result<()> {
        for k in 0..rows {
            let row = (0..d)
                .map(|j| if z { s.z_t(k, j) } else { s.a_t(k, j) }.eval(x))
                .collect::<Result<Vec<f64>>>()?;
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] += row[i] * row[j];
                }
            }
        }
        Ok(())
    };
    add(s.n(), false)?;
    if with_z {
        add(s.m(), true)?;
    }
    Ok(out)
}

/// Precomputed fields of a structure on a grid.
struct GridModel {
    shape: Vec<usize>,
    strides: Vec<usize>,
    h: Vec<f64>,
    vol: f64,
    /// log ρ* per cell, normalized on the grid.
    log_star: Vec<f64>,
    star: Vec<f64>,
    /// aa^T + zz^T per cell, `d×d` row-major.
    fisher_metric: Vec<f64>,
    /// For each axis `i`, row `i` of aa^T at the face above each cell.
    face_rows: Vec<Vec<f64>>,
    lam_max: f64,
    gersh: f64,
}

impl GridModel {
    fn new(s: &Structure, bbox: &Region, shape: &[usize]) -> Result<GridModel> {
        if bbox.axes.len() != s.dim() {
            return Err(Error::InvalidArgument(format!(
                "box has {} axes, structure has dimension {}",
                bbox.axes.len(),
                s.dim()
            )));
        }
        let h = DensityGrid::layout(bbox, shape)?;
        let d = shape.len();
        let cells: usize = shape.iter().product();
        let mut strides = vec![1; d];
        for ax in (0..d.saturating_sub(1)).rev() {
            strides[ax] = strides[ax + 1] * shape[ax + 1];
        }
        let probe = DensityGrid {
            bbox: bbox.clone(),
            shape: shape.to_vec(),
            h: h.clone(),
            rho: Vec::new(),
        };
        let gram = |x: &[f64], with_z: bool| gram_at(s, x, with_z);

        let mut log_star = Vec::with_capacity(cells);
        let mut fisher_metric = Vec::with_capacity(cells * d * d);
        let mut lam_max: f64 = 0.0;
        let mut gersh: f64 = 0.0;
        let mut x = vec![0.0; d];
        for c in 0..cells {
            probe.center_into(c, &mut x);
            log_star.push(s.log_vol().eval(&x)? - s.potential().eval(&x)?);
            fisher_metric.extend(gram(&x, true)?);
            let aat = gram(&x, false)?;
            let mat = nalgebra::DMatrix::from_row_slice(d, d, &aat);
            lam_max = lam_max.max(-lambda_min(&(-mat)));
            let mut gs = 0.0;
            for i in 0..d {
                for j in 0..d {
                    gs += aat[i * d + j].abs() / (h[i] * h[j]);
                }
            }
            gersh = gersh.max(gs);
        }
        let top = log_star.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = log_star.iter().map(|l| (l - top).exp()).sum::<f64>() * probe.cell_volume();
        let shift = top + z.ln();
        log_star.iter_mut().for_each(|l| *l -= shift);
        let star = log_star.iter().map(|l| l.exp()).collect();

        let mut face_rows = Vec::with_capacity(d);
        for ax in 0..d {
            let mut rows = vec![0.0; cells * d];
            for c in 0..cells {
                probe.center_into(c, &mut x);
                x[ax] += 0.5 * h[ax];
                let aat = gram(&x, false)?;
                rows[c * d..(c + 1) * d].copy_from_slice(&aat[ax * d..(ax + 1) * d]);
            }
            face_rows.push(rows);
        }
        Ok(GridModel {
            shape: shape.to_vec(),
            strides,
            vol: probe.cell_volume(),
            h,
            log_star,
            star,
            fisher_metric,
            face_rows,
            lam_max,
            gersh,
        })
    }

    fn cells(&self) -> usize {
        self.log_star.len()
    }

    fn potential_u(&self, rho: &[f64], u: &mut [f64]) {
        for c in 0..rho.len() {
            u[c] = rho[c].max(LOG_FLOOR).ln() - self.log_star[c];
        }
    }

    /// Cell gradients of `u`, central inside and one-sided at the walls.
    fn cell_gradients(&self, u: &[f64], out: &mut [f64]) {
        let d = self.shape.len();
        for c in 0..u.len() {
            for ax in 0..d {
                let st = self.strides[ax];
                let i = (c / st) % self.shape[ax];
                let k = self.shape[ax];
                out[c * d + ax] = if k == 1 {
                    0.0
                } else if i == 0 {
                    (u[c + st] - u[c]) / self.h[ax]
                } else if i == k - 1 {
                    (u[c] - u[c - st]) / self.h[ax]
                } else {
                    (u[c + st] - u[c - st]) / (2.0 * self.h[ax])
                };
            }
        }
    }

    fn kl(&self, rho: &[f64]) -> f64 {
        let mut s = 0.0;
        for (c, &r) in rho.iter().enumerate() {
            if r > 0.0 {
                s += r * (r.ln() - self.log_star[c]);
            }
        }
        (s * self.vol).max(0.0)
    }

    fn l1(&self, rho: &[f64]) -> f64 {
        rho.iter().zip(&self.star).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.vol
    }

    fn fisher(&self, rho: &[f64], grads: &[f64]) -> f64 {
        let d = self.shape.len();
        let mut s = 0.0;
        for (c, &r) in rho.iter().enumerate() {
            if r <= 0.0 {
                continue;
            }
            let g = &grads[c * d..(c + 1) * d];
            let m = &self.fisher_metric[c * d * d..(c + 1) * d * d];
            let mut q = 0.0;
            for i in 0..d {
                for j in 0..d {
                    q += g[i] * m[i * d + j] * g[j];
                }
            }
            s += r * q;
        }
        s * self.vol
    }

    /// `dρ/dt` into `out` (overwritten).
    fn rate(&self, rho: &[f64], u: &[f64], grads: &[f64], out: &mut [f64]) {
        let d = self.shape.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut g = [0.0; MAX_DIM];
        for ax in 0..d {
            let st = self.strides[ax];
            let k = self.shape[ax];
            let hi = self.h[ax];
            let rows = &self.face_rows[ax];
            for c in 0..rho.len() {
                if (c / st) % k == k - 1 {
                    continue;
                }
                let up = c + st;
                for j in 0..d {
                    g[j] = if j == ax {
                        (u[up] - u[c]) / hi
                    } else {
                        0.5 * (grads[c * d + j] + grads[up * d + j])
                    };
                }
                let row = &rows[c * d..(c + 1) * d];
                let mut flux = 0.0;
                for j in 0..d {
                    flux += row[j] * g[j];
                }
                let flux = 0.5 * (rho[c] + rho[up]) * flux / hi;
                out[c] += flux;
                out[up] -= flux;
            }
        }
    }

    fn auto_dt(&self) -> f64 {
        let hmin2 = self.h.iter().map(|h| h * h).fold(f64::INFINITY, f64::min);
        let parabolic = 0.2 * hmin2 / self.lam_max.max(f64::MIN_POSITIVE);
        // the mixed-derivative stencil needs the row-sum bound as well
        let rowsum = 0.45 / self.gersh.max(f64::MIN_POSITIVE);
        parabolic.min(rowsum)
    }
}

/// One recorded state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagSample {
    pub t: f64,
    pub kl: f64,
    pub fisher_az: f64,
    pub l1: f64,
}

/// Time series and run statistics of [`fp_run`].
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub samples: Vec<DiagSample>,
    pub dt: f64,
    pub steps: usize,
    pub clip_events: usize,
    pub cell_steps: usize,
    /// Largest relative mass change over any single step.
    pub max_step_mass_drift: f64,
    /// Relative mass change over the whole run.
    pub mass_drift: f64,
    /// Largest single-step increase of D_KL (≤ 0 when monotone).
    pub max_step_kl_increase: f64,
}

impl Diagnostics {
    /// CSV with header `# gammaz dissipate v1`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# gammaz dissipate v1")?;
        writeln!(w, "t,kl,fisher_az,l1")?;
        for s in &self.samples {
            writeln!(w, "{},{},{},{}", s.t, s.kl, s.fisher_az, s.l1)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FpOptions {
    /// Fixed step; `None` picks the stability bound.
    pub dt: Option<f64>,
    /// Number of recording intervals (the initial state is always recorded).
    pub samples: usize,
}

impl Default for FpOptions {
    fn default() -> Self {
        FpOptions { dt: None, samples: 100 }
    }
}

/// Evolve `rho0` to `t_end` with explicit Euler steps.
pub fn fp_run(s: &Structure, rho0: &DensityGrid, t_end: f64, opts: FpOptions) -> Result<(DensityGrid, Diagnostics)> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end must be positive, got {t_end}")));
    }
    if let Some(i) = rho0.rho.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::BadInitial(format!("cell {i} has value {}", rho0.rho[i])));
    }
    let model = GridModel::new(s, &rho0.bbox, &rho0.shape)?;
    let dt_max = model.auto_dt();
    let dt_req = match opts.dt {
        Some(dt) if !(dt > 0.0) => return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}"))),
        Some(dt) => dt,
        None => dt_max,
    };
    let steps = (t_end / dt_req).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let samples = opts.samples.clamp(1, steps);

    let n = model.cells();
    let d = model.shape.len();
    let mut rho = rho0.rho.clone();
    let mut u = vec![0.0; n];
    let mut grads = vec![0.0; n * d];
    let mut drho = vec![0.0; n];
    let mass0 = rho.iter().sum::<f64>();

    let mut diag = Diagnostics {
        samples: Vec::with_capacity(samples + 1),
        dt,
        steps,
        clip_events: 0,
        cell_steps: 0,
        max_step_mass_drift: 0.0,
        mass_drift: 0.0,
        max_step_kl_increase: f64::NEG_INFINITY,
    };
    model.potential_u(&rho, &mut u);
    model.cell_gradients(&u, &mut grads);
    let record = |t: f64, rho: &[f64], grads: &[f64]| DiagSample {
        t,
        kl: model.kl(rho),
        fisher_az: model.fisher(rho, grads),
        l1: model.l1(rho),
    };
    diag.samples.push(record(0.0, &rho, &grads));
    let mut kl_prev = model.kl(&rho);
    let mut next_sample = 1;

    for step in 1..=steps {
        model.rate(&rho, &u, &grads, &mut drho);
        let before = rho.iter().sum::<f64>();
        let mut clipped = false;
        for c in 0..n {
            rho[c] += dt * drho[c];
            if !rho[c].is_finite() {
                return Err(Error::Unstable { step });
            }
            if rho[c] < 0.0 {
                rho[c] = 0.0;
                diag.clip_events += 1;
                clipped = true;
            }
        }
        if clipped {
            let after = rho.iter().sum::<f64>();
            rho.iter_mut().for_each(|r| *r *= before / after);
        }
        let after = rho.iter().sum::<f64>();
        diag.max_step_mass_drift = diag.max_step_mass_drift.max(((after - before) / before).abs());
        diag.cell_steps += n;

        let kl = model.kl(&rho);
        diag.max_step_kl_increase = diag.max_step_kl_increase.max(kl - kl_prev);
        kl_prev = kl;

        model.potential_u(&rho, &mut u);
        model.cell_gradients(&u, &mut grads);
        if step * samples >= next_sample * steps {
            diag.samples.push(record(step as f64 * dt, &rho, &grads));
            next_sample += 1;
        }
    }
    diag.mass_drift = ((rho.iter().sum::<f64>() - mass0) / mass0).abs();
    let out = DensityGrid {
        rho,
        ..rho0.clone()
    };
    Ok((out, diag))
}

/// The grid-normalized invariant density `ρ* ∝ e^{−V} Vol`.
pub fn stationary_density(s: &Structure, bbox: &Region, shape: &[usize]) -> Result<DensityGrid> {
    let model = GridModel::new(s, bbox, shape)?;
    Ok(DensityGrid {
        bbox: bbox.clone(),
        shape: shape.to_vec(),
        h: model.h.clone(),
        rho: model.star,
    })
}

pub fn kl_divergence(rho: &DensityGrid, s: &Structure) -> Result<f64> {
    let model = GridModel::new(s, &rho.bbox, &rho.shape)?;
    Ok(model.kl(&rho.rho))
}

pub fn fisher_az(rho: &DensityGrid, s: &Structure) -> Result<f64> {
    let model = GridModel::new(s, &rho.bbox, &rho.shape)?;
    let mut u = vec![0.0; rho.rho.len()];
    let mut g = vec![0.0; rho.rho.len() * rho.shape.len()];
    model.potential_u(&rho.rho, &mut u);
    model.cell_gradients(&u, &mut g);
    Ok(model.fisher(&rho.rho, &g))
}

pub fn l1_distance(rho: &DensityGrid, s: &Structure) -> Result<f64> {
    let model = GridModel::new(s, &rho.bbox, &rho.shape)?;
    Ok(model.l1(&rho.rho))
}

/// Envelope and monotonicity checks for a diagnostics series.
#[derive(Debug, Clone, Serialize)]
pub struct DissipationReport {
    pub kappa: f64,
    /// `None` when `κ ≤ 0` (envelopes do not apply).
    pub kl_envelope: Option<Vec<bool>>,
    pub l1_envelope: Option<Vec<bool>>,
    pub pinsker: Vec<bool>,
    pub monotone: bool,
    /// `−slope` of a least-squares fit of `ln D_KL` over the second half.
    pub measured_rate: f64,
}

impl DissipationReport {
    pub fn all_ok(&self) -> bool {
        let all = |v: &Option<Vec<bool>>| v.as_ref().is_none_or(|v| v.iter().all(|b| *b));
        self.monotone && all(&self.kl_envelope) && all(&self.l1_envelope) && self.pinsker.iter().all(|b| *b)
    }
}

/// Tolerance for the per-sample monotonicity and Pinsker checks.
pub const DISSIPATION_TOL: f64 = 1e-12;

pub fn verify_dissipation(diag: &Diagnostics, kappa: f64) -> DissipationReport {
    let xs = &diag.samples;
    let monotone = xs.windows(2).all(|w| w[1].kl <= w[0].kl + DISSIPATION_TOL);
    let pinsker = xs
        .iter()
        .map(|s| s.l1 <= (2.0 * s.kl).sqrt() + 1e-10)
        .collect();
    let (kl_envelope, l1_envelope) = if kappa > 0.0 {
        let i0 = xs.first().map_or(0.0, |s| s.fisher_az);
        let mut kl_ok = Vec::with_capacity(xs.len());
        let mut l1_ok = Vec::with_capacity(xs.len());
        for s in xs {
            let (kb, lb) = decay_envelope(kappa, i0, s.t).expect("kappa checked positive");
            kl_ok.push(s.kl <= kb);
            l1_ok.push(s.l1 <= lb);
        }
        (Some(kl_ok), Some(l1_ok))
    } else {
        (None, None)
    };
    DissipationReport {
        kappa,
        kl_envelope,
        l1_envelope,
        pinsker,
        monotone,
        measured_rate: decay_rate(xs),
    }
}

/// `−slope` of `ln D_KL` against `t` over the second half of the samples.
pub fn decay_rate(xs: &[DiagSample]) -> f64 {
    let tail: Vec<(f64, f64)> = xs[xs.len() / 2..]
        .iter()
        .filter(|s| s.kl > 0.0)
        .map(|s| (s.t, s.kl.ln()))
        .collect();
    if tail.len() < 2 {
        return f64::NAN;
    }
    let k = tail.len() as f64;
    let mt = tail.iter().map(|p| p.0).sum::<f64>() / k;
    let ml = tail.iter().map(|p| p.1).sum::<f64>() / k;
    let num: f64 = tail.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let den: f64 = tail.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    -num / den
}

/// Itô drift `∇·(aa^T) − a⊗∇a − aa^T∇V` and the matrix `a` (row-major
/// `d×n`) at `x`.
pub fn ito_coefficients(s: &Structure, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = s.dim();
    let n = s.n();
    let mut at = Vec::with_capacity(n * d);
    for i in 0..n {
        for j in 0..d {
            at.push(s.a_t(i, j).eval_grad(x)?);
        }
    }
    let dv = s.potential().eval_grad(x)?;
    let mut mu = vec![0.0; d];
    for i in 0..n {
        let row = &at[i * d..(i + 1) * d];
        let div_row: f64 = (0..d).map(|j| row[j].grad[j]).sum();
        let row_dv: f64 = (0..d).map(|j| row[j].value * dv.grad[j]).sum();
        for k in 0..d {
            // ∂_j(a_{ki} a_{ji}) − a_{ki} ∂_j a_{ji} − a_{ki} a_{ji} ∂_jV
            let mut s = 0.0;
            for j in 0..d {
                s += row[k].grad[j] * row[j].value + row[k].value * row[j].grad[j];
            }
            mu[k] += s - row[k].value * div_row - row[k].value * row_dv;
        }
    }
    let mut a = vec![0.0; d * n];
    for i in 0..n {
        for k in 0..d {
            a[k * n + i] = at[i * d + k].value;
        }
    }
    Ok((mu, a))
}

/// Euler–Maruyama paths from each starting point; particle `p` draws from
/// its own ChaCha stream so results do not depend on scheduling.
pub fn em_particles(s: &Structure, x0: &[Vec<f64>], t_end: f64, dt: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and t_end >= 0, got {dt}, {t_end}")));
    }
    let steps = (t_end / dt).round() as usize;
    let d = s.dim();
    let n = s.n();
    let sq = (2.0 * dt).sqrt();
    x0.par_iter()
        .enumerate()
        .map(|(p, start)| {
            if start.len() != d {
                return Err(Error::InvalidArgument(format!("particle {p} has wrong dimension")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let mut x = start.clone();
            let mut db = vec![0.0; n];
            for _ in 0..steps {
                let (mu, a) = ito_coefficients(s, &x)?;
                for b in db.iter_mut() {
                    *b = StandardNormal.sample(&mut rng);
                }
                for k in 0..d {
                    let noise: f64 = (0..n).map(|i| a[k * n + i] * db[i]).sum();
                    x[k] += mu[k] * dt + sq * noise;
                }
            }
            Ok(x)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Preset;
    use std::collections::BTreeMap;

    fn ou() -> Structure {
        Structure::preset(Preset::Ou1d, &BTreeMap::new(), None)
            .unwrap()
            .with_potential("x^2/2")
            .unwrap()
    }

    #[test]
    fn stationary_is_fixed() {
        let s = ou();
        let bbox: Region = "-6:6".parse().unwrap();
        let star = stationary_density(&s, &bbox, &[64]).unwrap();
        let (end, diag) = fp_run(&s, &star, 0.5, FpOptions::default()).unwrap();
        for (a, b) in end.rho.iter().zip(&star.rho) {
            assert!((a - b).abs() <= 1e-10 * b.max(1e-300) + 1e-300, "{a} vs {b}");
        }
        assert!(diag.samples.iter().all(|s| s.kl < 1e-14 && s.l1 < 1e-10 && s.fisher_az < 1e-20));
    }

    #[test]
    fn gaussian_kl() {
        let s = ou();
        let bbox: Region = "-10:10".parse().unwrap();
        let mu = 1.5;
        let rho = DensityGrid::from_fn(&bbox, &[512], |x| (-(x[0] - mu).powi(2) / 2.0).exp()).unwrap();
        let kl = kl_divergence(&rho, &s).unwrap();
        assert!((kl - mu * mu / 2.0).abs() < 1e-4, "{kl}");
        let l1 = l1_distance(&rho, &s).unwrap();
        assert!(l1 <= (2.0 * kl).sqrt());
    }

    #[test]
    fn rejects_bad_input() {
        let s = ou();
        let bbox: Region = "-1:1".parse().unwrap();
        assert!(matches!(
            DensityGrid::from_fn(&bbox, &[8], |x| x[0]),
            Err(Error::BadInitial(_))
        ));
        let rho = DensityGrid::from_fn(&bbox, &[8], |_| 1.0).unwrap();
        assert!(fp_run(&s, &rho, 0.0, FpOptions::default()).is_err());
    }
}
