//! Randomized check of the Bochner identity.

use gammaz::bochner::{self, Decomposition, LambdaMode};
use gammaz::jets::Jet3;
use gammaz::{Error, Structure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::Failure;

/// Pass threshold on the relative residual.
pub const TOLERANCE: f64 = 1e-8;

/// A random cubic polynomial, returned directly as its exact order-3 jet
/// at `x` (monomials expanded around the origin).
fn random_cubic_jet(r: &mut ChaCha8Rng, x: &[f64]) -> Jet3 {
    let d = x.len();
    let vars: Vec<Jet3> = (0..d).map(|i| Jet3::variable(i, x[i], d, 3)).collect();
    let mut f = Jet3::zero(d, 3);
    for i in 0..d {
        f += r.random_range(-1.0..1.0) * vars[i];
        for j in i..d {
            f += r.random_range(-1.0..1.0) * (vars[i] * vars[j]);
            for k in j..d {
                f += r.random_range(-1.0..1.0) * (vars[i] * vars[j] * vars[k]);
            }
        }
    }
    f
}

/// Returns `Ok(true)` when every trial is within [`TOLERANCE`].
pub fn run(s: &Structure, mode: LambdaMode, trials: usize, seed: u64, radius: f64, as_json: bool) -> Result<bool, Failure> {
    if trials == 0 || !(radius > 0.0) {
        return Err(Failure::usage("--trials must be positive and --radius > 0".into()));
    }
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let d = s.dim();
    let mut worst = 0.0f64;
    let mut worst_at: Vec<f64> = Vec::new();
    let mut samples = Vec::with_capacity(trials);
    let mut unsolvable = 0usize;
    for _ in 0..trials {
        let x: Vec<f64> = (0..d).map(|_| r.random_range(-radius..radius)).collect();
        let pe = s.eval_point(&x)?;
        let f = random_cubic_jet(&mut r, &x);
        let res = match Decomposition::new(s, &pe, mode) {
            Ok(dec) => bochner::bochner_residual(&pe, &dec, &f),
            // no admissible shift vectors: the identity cannot hold here
            Err(Error::AssumptionUnsatisfied { .. }) => {
                unsolvable += 1;
                f64::INFINITY
            }
            Err(e) => return Err(e.into()),
        };
        if !(res <= worst) {
            worst = res;
            worst_at = x.clone();
        }
        samples.push(x);
    }
    let measure = s.check_invariant_measure(&samples);
    let pass = worst <= TOLERANCE;
    if as_json {
        println!(
            "{}",
            json!({
                "trials": trials,
                "seed": seed,
                "max_residual": worst,
                "worst_point": worst_at,
                "tolerance": TOLERANCE,
                "invariant_measure_residual": measure,
                "unsolvable_points": unsolvable,
                "pass": pass,
            })
        );
    } else {
        println!("trials: {trials} (seed {seed})");
        println!("max relative residual: {worst:e} at {worst_at:?}");
        if unsolvable > 0 {
            println!("shift-vector system unsolvable at {unsolvable} of {trials} points");
        }
        println!("invariant-measure residual: {measure:e} (informational)");
        println!("{}", if pass { "PASS" } else { "FAIL" });
    }
    Ok(pass)
}
