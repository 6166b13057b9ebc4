//! Eigenvalue bounds and region scans.

mod common;

use common::*;
use gammaz::bochner::{extract_a, LambdaMode};
use gammaz::bound::{self, grid_points, lambda_min, satisfies_cd, scan_region, Region, ScanOptions};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn sym_from(v: &[f64], n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_row_slice(n, n, &v[..n * n]);
    (&m + m.transpose()) * 0.5
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lambda_min_is_a_rayleigh_lower_bound(v in prop::collection::vec(-3.0f64..3.0, 9), w in prop::collection::vec(-1.0f64..1.0, 3)) {
        let a = sym_from(&v, 3);
        let lm = lambda_min(&a);
        let w = DVector::from_vec(w);
        let n2 = w.norm_squared();
        prop_assume!(n2 > 1e-6);
        let rq = (w.transpose() * &a * &w)[(0, 0)] / n2;
        prop_assert!(rq >= lm - 1e-12);
        // and it agrees with a library eigen-solver
        let lib = a.clone().symmetric_eigenvalues().min();
        prop_assert!((lm - lib).abs() <= 1e-12 * (1.0 + lib.abs()));
    }

    #[test]
    fn cd_verdict_matches_shifted_eigenvalue(v in prop::collection::vec(-3.0f64..3.0, 9), kappa in -2.0f64..2.0) {
        let a = sym_from(&v, 3);
        let lm = lambda_min(&a);
        prop_assume!((lm - kappa).abs() > 1e-9);
        prop_assert_eq!(satisfies_cd(&a, kappa, 0.0), lm >= kappa);
    }
}

#[test]
fn nested_grids_refine_downward() {
    let h = heisenberg("x^2 + (y^2 + z^2)/2");
    let region: Region = "-1:1,-1:1,-1:1".parse().unwrap();
    let opts = ScanOptions { keep_a: false, ..Default::default() };
    let coarse = scan_region(&h, &region, &[21, 21, 21], opts).unwrap();
    let fine = scan_region(&h, &region, &[41, 41, 41], opts).unwrap();
    // every coarse node is a fine node
    assert!(fine.kappa <= coarse.kappa + 1e-15);
    assert_eq!(coarse.holes + fine.holes, 0);
    let n = 21 * 21 * 21;
    assert_eq!(coarse.cells.len(), n);
    let pts = grid_points(&region, &[21, 21, 21]).unwrap();
    assert_eq!(coarse.argmin.as_ref().unwrap(), &pts[coarse.argmin_index.unwrap()]);
}

#[test]
fn martinet_scan_matches_closed_form_eigenvalues() {
    let m = martinet("(x^2 + y^2)/2");
    let region: Region = "-1:1,-1:1,0:0".parse().unwrap();
    let res = scan_region(&m, &region, &[41, 41, 1], ScanOptions::default()).unwrap();
    let mut want_min = f64::INFINITY;
    for c in &res.cells {
        let a = martinet_a(&c.point, &Vd::of(&m, &c.point));
        let a = DMatrix::from_fn(3, 3, |i, j| a[i][j]);
        let lm = a.symmetric_eigenvalues().min();
        assert!((c.lambda_min - lm).abs() < 1e-12);
        want_min = want_min.min(lm);
        assert_eq!(c.a_upper.len(), 6);
    }
    assert!((res.kappa - want_min).abs() < 1e-12);
}

#[test]
fn single_node_grid() {
    let h = heisenberg("x^2 + (y^2 + z^2)/2");
    let region: Region = "0.5:0.5,-0.25:-0.25,1:1".parse().unwrap();
    let res = scan_region(&h, &region, &[1, 1, 1], ScanOptions::default()).unwrap();
    assert_eq!(res.cells.len(), 1);
    let a = extract_a(&h, &[0.5, -0.25, 1.0], LambdaMode::Preset).unwrap().a;
    assert_eq!(res.kappa, lambda_min(&a));
}

#[test]
fn scans_are_thread_count_independent() {
    let s = se2(1.0, Some("2 + sin(theta)"), "theta^2/2 + sin(x)*y + y^2/3");
    let region: Region = "-1:1,-1:1,-1:1".parse().unwrap();
    let one = scan_region(&s, &region, &[9, 9, 9], ScanOptions { threads: Some(1), ..Default::default() }).unwrap();
    let four = scan_region(&s, &region, &[9, 9, 9], ScanOptions { threads: Some(4), ..Default::default() }).unwrap();
    for (a, b) in one.cells.iter().zip(&four.cells) {
        assert_eq!(a.lambda_min.to_bits(), b.lambda_min.to_bits());
    }
}

#[test]
fn degenerate_nodes_become_holes() {
    // g = theta vanishes on the theta = 0 plane
    let s = se2(1.0, Some("theta"), "theta^2/2");
    let region: Region = "-1:1,0:0,0:0".parse().unwrap();
    let res = scan_region(&s, &region, &[5, 1, 1], ScanOptions::default()).unwrap();
    assert_eq!(res.holes, 1);
    assert!(res.cells[2].lambda_min.is_nan());
    assert!(res.kappa.is_finite());
    let mut csv = Vec::new();
    res.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# gammaz scan v1"));
    assert_eq!(lines.next(), Some("x1,x2,x3,lambda_min,A11,A12,A13,A22,A23,A33"));
    assert!(text.lines().nth(4).unwrap().contains(",nan,nan"));
}

#[test]
fn dimension_mismatch_is_rejected() {
    let h = heisenberg("0");
    let region: Region = "-1:1,-1:1".parse().unwrap();
    assert!(scan_region(&h, &region, &[3, 3], ScanOptions::default()).is_err());
}

#[test]
fn envelope_and_constant() {
    assert_eq!(bound::zlsi_constant(0.5).unwrap(), 1.0);
    let (kl, l1) = bound::decay_envelope(2.0, 3.0, 0.25).unwrap();
    assert!((kl - 3.0 / 4.0 * (-1f64).exp()).abs() < 1e-15);
    assert!((l1 - 1.5f64.sqrt() * (-0.5f64).exp()).abs() < 1e-15);
}
