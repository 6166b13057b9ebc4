//! Region-level constants from pointwise curvature matrices: smallest
//! eigenvalues, grid scans, log-Sobolev constants and decay envelopes.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::bochner::{extract_a, LambdaMode};
use crate::error::{Error, Result};
use crate::linalg;
use crate::structure::Structure;

/// Smallest eigenvalue of the symmetric part of `a` (cyclic Jacobi).
pub fn lambda_min(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "lambda_min needs a square matrix");
    if n == 0 || a.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    linalg::sym_eigen(a).0.min()
}

/// `A − κI` is positive semidefinite up to `tol`.
pub fn satisfies_cd(a: &DMatrix<f64>, kappa: f64, tol: f64) -> bool {
    let shifted = a - DMatrix::identity(a.nrows(), a.ncols()) * kappa;
    lambda_min(&shifted) >= -tol
}

/// Axis-aligned box, one `lo:hi` interval per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    pub axes: Vec<(f64, f64)>,
}

impl FromStr for Region {
    type Err = Error;
    fn from_str(s: &str) -> Result<Region> {
        let axes = s
            .split(',')
            .map(|tok| {
                let (lo, hi) = tok
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidArgument(format!("expected lo:hi, got `{tok}`")))?;
                let p = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad number `{v}` in `{tok}`")))
                };
                let (lo, hi) = (p(lo)?, p(hi)?);
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::InvalidArgument(format!("bad interval `{tok}`")));
                }
                Ok((lo, hi))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Region { axes })
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.axes.iter().map(|(a, b)| format!("{a}:{b}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Parse a grid spec such as `81,81,1`.
pub fn parse_grid(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad grid count `{t}`")))
        })
        .collect()
}

/// Row-major grid nodes (last axis fastest).
pub fn grid_points(region: &Region, grid: &[usize]) -> Result<Vec<Vec<f64>>> {
    if region.axes.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "region has {} axes but grid has {}",
            region.axes.len(),
            grid.len()
        )));
    }
    for (&(lo, hi), &g) in region.axes.iter().zip(grid) {
        if g == 0 || (g == 1 && lo != hi) {
            return Err(Error::InvalidArgument(format!(
                "axis {lo}:{hi} needs a grid count >= 2 (or a fixed value with count 1)"
            )));
        }
    }
    let total: usize = grid.iter().product();
    let node = |(lo, hi): (f64, f64), g: usize, i: usize| {
        if g == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (g - 1) as f64
        }
    };
    Ok((0..total)
        .map(|mut flat| {
            let mut x = vec![0.0; grid.len()];
            for ax in (0..grid.len()).rev() {
                x[ax] = node(region.axes[ax], grid[ax], flat % grid[ax]);
                flat /= grid[ax];
            }
            x
        })
        .collect())
}

/// One evaluated grid cell; `lambda_min` is NaN for a hole.
#[derive(Debug, Clone, Serialize)]
pub struct ScanCell {
    pub point: Vec<f64>,
    pub lambda_min: f64,
    /// Upper triangle of `A`, row by row (empty for holes or when not kept).
    pub a_upper: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub region: Region,
    pub grid: Vec<usize>,
    pub cells: Vec<ScanCell>,
    /// Minimum over non-hole cells (NaN when every cell is a hole).
    pub kappa: f64,
    pub argmin: Option<Vec<f64>>,
    pub argmin_index: Option<usize>,
    pub holes: usize,
}

/// Options for [`scan_region`].
#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub mode: LambdaMode,
    pub keep_a: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            mode: LambdaMode::Auto,
            keep_a: true,
            threads: None,
        }
    }
}

fn upper(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push(a[(i, j)]);
        }
    }
    out
}

/// Evaluate `λ_min(A)` on every grid node.  Degenerate frames become holes;
/// every other error aborts the scan (lowest failing index reported).
pub fn scan_region(s: &Structure, region: &Region, grid: &[usize], opts: ScanOptions) -> Result<ScanResult> {
    if region.axes.len() != s.dim() {
        return Err(Error::InvalidArgument(format!(
            "region has {} axes, structure has dimension {}",
            region.axes.len(),
            s.dim()
        )));
    }
    let points = grid_points(region, grid)?;
    let eval = |x: &Vec<f64>| -> Result<ScanCell> {
        match extract_a(s, x, opts.mode) {
            Ok(cm) => Ok(ScanCell {
                point: x.clone(),
                lambda_min: lambda_min(&cm.a),
                a_upper: if opts.keep_a { upper(&cm.a) } else { Vec::new() },
            }),
            Err(Error::SingularFrame { .. }) => Ok(ScanCell {
                point: x.clone(),
                lambda_min: f64::NAN,
                a_upper: Vec::new(),
            }),
            Err(e) => Err(e),
        }
    };
    let run = || points.par_iter().map(eval).collect::<Vec<_>>();
    let results = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(run),
        None => run(),
    };
    let cells = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut kappa = f64::NAN;
    let mut argmin_index = None;
    let mut holes = 0;
    for (i, c) in cells.iter().enumerate() {
        if c.lambda_min.is_nan() {
            holes += 1;
        } else if argmin_index.is_none() || c.lambda_min < kappa {
            kappa = c.lambda_min;
            argmin_index = Some(i);
        }
    }
    Ok(ScanResult {
        region: region.clone(),
        grid: grid.to_vec(),
        argmin: argmin_index.map(|i| cells[i].point.clone()),
        cells,
        kappa,
        argmin_index,
        holes,
    })
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

impl ScanResult {
    /// CSV with header `# gammaz scan v1`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let dim = self.grid.len();
        writeln!(w, "# gammaz scan v1")?;
        let mut cols: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
        cols.push("lambda_min".into());
        let with_a = self.cells.iter().any(|c| !c.a_upper.is_empty());
        if with_a {
            for i in 1..=dim {
                for j in i..=dim {
                    cols.push(format!("A{i}{j}"));
                }
            }
        }
        writeln!(w, "{}", cols.join(","))?;
        let na = dim * (dim + 1) / 2;
        for c in &self.cells {
            let mut row: Vec<String> = c.point.iter().map(|&v| num(v)).collect();
            row.push(num(c.lambda_min));
            if with_a {
                if c.a_upper.is_empty() {
                    row.extend(std::iter::repeat_n("nan".to_string(), na));
                } else {
                    row.extend(c.a_upper.iter().map(|&v| num(v)));
                }
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Log-Sobolev constant `1/(2κ)`.
pub fn zlsi_constant(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::NonpositiveKappa(kappa));
    }
    Ok(1.0 / (2.0 * kappa))
}

/// `(KL bound, L¹ bound)` at time `t` for initial Fisher information `i0`:
/// `e^{−2κt} I₀ / (2κ)` and `√(I₀/κ) e^{−κt}`.
pub fn decay_envelope(kappa: f64, i0: f64, t: f64) -> Result<(f64, f64)> {
    if !(kappa > 0.0) {
        return Err(Error::NonpositiveKappa(kappa));
    }
    if !(i0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("Fisher information {i0} < 0")));
    }
    Ok((
        (-2.0 * kappa * t).exp() * i0 / (2.0 * kappa),
        (i0 / kappa).sqrt() * (-kappa * t).exp(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_examples() {
        assert_eq!(lambda_min(&DMatrix::identity(3, 3)), 1.0);
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, 0.0, 0.5, 0.0, 0.0]);
        assert!((lambda_min(&a) - (1.0 - 2f64.sqrt()) / 2.0).abs() < 1e-15);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -2.0, 7.0]));
        assert_eq!(lambda_min(&d), -2.0);
    }

    #[test]
    fn envelopes() {
        assert_eq!(decay_envelope(1.0, 2.0, 0.0).unwrap(), (1.0, 2f64.sqrt()));
        let (kl, l1) = decay_envelope(0.5, 1.0, 2.0).unwrap();
        // (1/2κ) e^{−2κt} I₀ with κt = 1
        assert!((kl - (-2f64).exp()).abs() < 1e-16);
        assert!((l1 - 2f64.sqrt() * (-1f64).exp()).abs() < 1e-15);
        assert!(matches!(decay_envelope(0.0, 1.0, 1.0), Err(Error::NonpositiveKappa(_))));
        assert!(matches!(zlsi_constant(-1.0), Err(Error::NonpositiveKappa(_))));
        assert_eq!(zlsi_constant(0.25).unwrap(), 2.0);
    }

    #[test]
    fn grid_layout() {
        let r: Region = "-1:1,10:10".parse().unwrap();
        let pts = grid_points(&r, &[3, 1]).unwrap();
        assert_eq!(pts, vec![vec![-1.0, 10.0], vec![0.0, 10.0], vec![1.0, 10.0]]);
        assert!(grid_points(&r, &[1, 1]).is_err());
        assert!(grid_points(&r, &[3]).is_err());
        assert!("1:0".parse::<Region>().is_err());
    }
}
