//! `gammaz`: curvature matrices, region scans, identity checks and
//! Fokker–Planck dissipation runs from the command line.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 usage or configuration
//! error, 3 mathematical degeneracy (singular frame, unsatisfiable shift
//! vectors, domain errors, unstable runs).

mod config;
mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gammaz::bochner::{self, LambdaMode};
use gammaz::bound::{self, Region, ScanOptions};
use gammaz::dynamics::{self, DensityGrid, FpOptions};
use gammaz::{Error, Structure};
use nalgebra::DMatrix;
use serde_json::json;

/// A failed command: message plus exit code.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    pub fn usage(msg: String) -> Failure {
        Failure { code: 2, msg }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::SingularFrame { .. }
            | Error::AssumptionUnsatisfied { .. }
            | Error::Domain(_)
            | Error::Unstable { .. } => 3,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "gammaz", version, about = "Generalized Gamma-z curvature bounds for degenerate diffusions")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug)]
struct StructureArgs {
    /// TOML structure file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in structure: heisenberg, se2, martinet, ou1d
    #[arg(long)]
    preset: Option<String>,
    /// Potential V
    #[arg(long = "V", value_name = "EXPR")]
    v: Option<String>,
    /// log Vol (weighted volume)
    #[arg(long, value_name = "EXPR")]
    log_vol: Option<String>,
    /// Parameter `key=value`; value is a number or expression (`g` for se2)
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Shift-vector mode: auto, preset or lsq
    #[arg(long, default_value = "auto")]
    lambda: String,
    /// Machine-readable output
    #[arg(long)]
    json: bool,
}

impl StructureArgs {
    fn structure(&self) -> Result<Structure, Failure> {
        config::build(&config::Sources {
            config: self.config.clone(),
            preset: self.preset.clone(),
            v: self.v.clone(),
            log_vol: self.log_vol.clone(),
            params: self.params.clone(),
        })
    }

    fn mode(&self) -> Result<LambdaMode, Failure> {
        self.lambda.parse().map_err(Failure::from)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Curvature matrix and its parts at one point
    Tensor {
        #[command(flatten)]
        s: StructureArgs,
        /// Comma-separated coordinates
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Smallest eigenvalue of the curvature matrix over a grid
    Scan {
        #[command(flatten)]
        s: StructureArgs,
        /// `lo:hi` per axis, comma separated
        #[arg(long, allow_hyphen_values = true)]
        region: String,
        /// Node count per axis, comma separated
        #[arg(long)]
        grid: String,
        /// CSV output file
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check the Bochner identity at random points and functions
    Verify {
        #[command(flatten)]
        s: StructureArgs,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Half-width of the sampling cube
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Fokker–Planck run with entropy diagnostics
    Dissipate {
        #[command(flatten)]
        s: StructureArgs,
        /// Box `lo:hi` per axis
        #[arg(long = "box", allow_hyphen_values = true)]
        bbox: String,
        /// Cells per axis (one number for all axes, or comma separated)
        #[arg(long, default_value = "32")]
        cells: String,
        #[arg(long, allow_hyphen_values = true)]
        t_end: f64,
        /// Fixed time step (default: stability bound)
        #[arg(long)]
        dt: Option<f64>,
        /// Unnormalized initial density expression
        #[arg(long, allow_hyphen_values = true)]
        init: Option<String>,
        /// Number of recorded samples
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Curvature bound for the envelopes (default: scanned on the box)
        #[arg(long, allow_hyphen_values = true)]
        kappa: Option<f64>,
        /// Scan nodes per axis used to estimate kappa
        #[arg(long, default_value_t = 9)]
        kappa_grid: usize,
        /// Diagnostics CSV output
        #[arg(long)]
        out: Option<PathBuf>,
        /// Final density: raw little-endian f64 file plus `<path>.json`
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
}

fn parse_point(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("bad coordinate `{t}` in --point")))
        })
        .collect()
}

fn mat_json(m: &DMatrix<f64>) -> serde_json::Value {
    json!((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn print_matrix(name: &str, m: &DMatrix<f64>) {
    println!("{name}:");
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:>14.8}", m[(i, j)])).collect();
        println!("  [{} ]", row.join(""));
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn io_fail(path: &PathBuf) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::usage(format!("cannot write {}: {e}", path.display()))
}

fn cmd_tensor(a: &StructureArgs, point: &str) -> Result<(), Failure> {
    let s = a.structure()?;
    let x = parse_point(point)?;
    if x.len() != s.dim() {
        return Err(Failure::usage(format!("--point has {} coordinates, structure has {}", x.len(), s.dim())));
    }
    let cm = bochner::extract_a(&s, &x, a.mode()?)?;
    let lmin = bound::lambda_min(&cm.a);
    if a.json {
        let out = json!({
            "point": x,
            "A": mat_json(&cm.a),
            "R_G_ab": mat_json(&cm.rg_ab),
            "R_zb": mat_json(&cm.r_zb),
            "R_rho": mat_json(&cm.r_rho),
            "lambda_min": lmin,
            "lambda_residual": cm.lambda_residual,
        });
        println!("{out}");
    } else {
        println!("point: {x:?}");
        print_matrix("A", &cm.a);
        print_matrix("R^G_ab", &cm.rg_ab);
        print_matrix("R_zb", &cm.r_zb);
        print_matrix("R_rho*", &cm.r_rho);
        println!("lambda_min(A) = {lmin}");
    }
    Ok(())
}

fn cmd_scan(a: &StructureArgs, region: &str, grid: &str, out: Option<&PathBuf>, threads: Option<usize>) -> Result<(), Failure> {
    let s = a.structure()?;
    let region: Region = region.parse()?;
    let grid = bound::parse_grid(grid)?;
    if grid.len() != s.dim() {
        return Err(Failure::usage(format!("--grid has {} counts, structure has dimension {}", grid.len(), s.dim())));
    }
    let opts = ScanOptions { mode: a.mode()?, keep_a: out.is_some(), threads };
    let res = bound::scan_region(&s, &region, &grid, opts)?;
    if let Some(path) = out {
        let mut w = create(path)?;
        res.write_csv(&mut w).and_then(|_| w.flush()).map_err(io_fail(path))?;
    }
    let kappa = if res.kappa.is_nan() { None } else { Some(res.kappa) };
    let summary = json!({
        "kappa": kappa,
        "argmin": res.argmin,
        "holes": res.holes,
        "nodes": res.cells.len(),
        "region": region.to_string(),
        "grid": grid,
        "zlsi_constant": kappa.and_then(|k| bound::zlsi_constant(k).ok()),
    });
    println!("{summary}");
    Ok(())
}

fn cmd_dissipate(a: &StructureArgs, d: &DissipateArgs) -> Result<bool, Failure> {
    let s = a.structure()?;
    let bbox: Region = d.bbox.parse()?;
    if bbox.axes.len() != s.dim() {
        return Err(Failure::usage(format!("--box has {} axes, structure has dimension {}", bbox.axes.len(), s.dim())));
    }
    if !(d.t_end > 0.0) {
        return Err(Failure::usage(format!("--t-end must be positive, got {}", d.t_end)));
    }
    let mut shape = bound::parse_grid(&d.cells)?;
    if shape.len() == 1 {
        shape = vec![shape[0]; s.dim()];
    }
    if shape.len() != s.dim() || shape.contains(&0) {
        return Err(Failure::usage(format!("--cells must give {} positive counts", s.dim())));
    }
    let init = match &d.init {
        Some(e) => e.clone(),
        None => default_init(&s, &bbox),
    };
    let init = s.parse_expr(&init)?;
    let rho0 = DensityGrid::from_expr(&bbox, &shape, &init)?;
    let kappa = match d.kappa {
        Some(k) => k,
        None => {
            let grid = vec![d.kappa_grid.max(2); s.dim()];
            let scan = bound::scan_region(&s, &bbox, &grid, ScanOptions { mode: a.mode()?, keep_a: false, threads: None })?;
            scan.kappa
        }
    };
    let (end, diag) = dynamics::fp_run(&s, &rho0, d.t_end, FpOptions { dt: d.dt, samples: d.samples })?;
    let rep = dynamics::verify_dissipation(&diag, kappa);
    if let Some(path) = &d.out {
        let mut w = create(path)?;
        diag.write_csv(&mut w).and_then(|_| w.flush()).map_err(io_fail(path))?;
    }
    if let Some(path) = &d.snapshot {
        let mut w = create(path)?;
        end.write_raw(&mut w).and_then(|_| w.flush()).map_err(io_fail(path))?;
        let side = PathBuf::from(format!("{}.json", path.display()));
        std::fs::write(&side, end.sidecar().to_string()).map_err(io_fail(&side))?;
    }
    let all = |v: &Option<Vec<bool>>| v.as_ref().map(|v| v.iter().all(|b| *b));
    let first = diag.samples.first().copied();
    let last = diag.samples.last().copied();
    if a.json {
        println!(
            "{}",
            json!({
                "kappa": kappa,
                "dt": diag.dt,
                "steps": diag.steps,
                "kl_initial": first.map(|x| x.kl),
                "kl_final": last.map(|x| x.kl),
                "fisher_initial": first.map(|x| x.fisher_az),
                "measured_rate": rep.measured_rate,
                "monotone": rep.monotone,
                "pinsker": rep.pinsker.iter().all(|b| *b),
                "kl_envelope": all(&rep.kl_envelope),
                "l1_envelope": all(&rep.l1_envelope),
                "mass_drift": diag.mass_drift,
                "clip_events": diag.clip_events,
                "ok": rep.all_ok(),
            })
        );
    } else {
        println!("kappa (box) = {kappa}");
        println!("dt = {}, steps = {}", diag.dt, diag.steps);
        if let (Some(f), Some(l)) = (first, last) {
            println!("KL: {} -> {}", f.kl, l.kl);
        }
        println!("measured rate = {}", rep.measured_rate);
        println!("monotone = {}, pinsker = {}", rep.monotone, rep.pinsker.iter().all(|b| *b));
        match (all(&rep.kl_envelope), all(&rep.l1_envelope)) {
            (Some(k), Some(l)) => println!("KL envelope = {k}, L1 envelope = {l}"),
            _ => println!("envelopes not applicable (kappa <= 0)"),
        }
        println!("mass drift = {:e}, clip events = {}", diag.mass_drift, diag.clip_events);
    }
    Ok(rep.all_ok())
}

/// A Gaussian bump off the box centre, a quarter of the box wide per axis.
fn default_init(s: &Structure, bbox: &Region) -> String {
    let terms: Vec<String> = s
        .coords()
        .iter()
        .zip(&bbox.axes)
        .map(|(c, &(lo, hi))| {
            let mid = 0.5 * (lo + hi) + 0.1 * (hi - lo);
            let w = 0.25 * (hi - lo);
            format!("(({c}) - ({mid:?}))^2/({:?})", 2.0 * w * w)
        })
        .collect();
    format!("exp(-({}))", terms.join(" + "))
}

struct DissipateArgs {
    bbox: String,
    cells: String,
    t_end: f64,
    dt: Option<f64>,
    init: Option<String>,
    samples: usize,
    kappa: Option<f64>,
    kappa_grid: usize,
    out: Option<PathBuf>,
    snapshot: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.cmd {
        Command::Tensor { s, point } => cmd_tensor(&s, &point).map(|_| true),
        Command::Scan { s, region, grid, out, threads } => cmd_scan(&s, &region, &grid, out.as_ref(), threads).map(|_| true),
        Command::Verify { s, trials, seed, radius } => verify::run(&s.structure()?, s.mode()?, trials, seed, radius, s.json),
        Command::Dissipate { s, bbox, cells, t_end, dt, init, samples, kappa, kappa_grid, out, snapshot } => cmd_dissipate(
            &s,
            &DissipateArgs { bbox, cells, t_end, dt, init, samples, kappa, kappa_grid, out, snapshot },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("gammaz: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
