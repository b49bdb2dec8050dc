//! Theta-window inference from the standard sweeps.

use hardylab_core::scaling::{fit_loglog, infer_window, LabeledSweep};
use hardylab_core::{make_exponents, Exponents, LorentzIndex, TrialFamily};

fn slopes(sw: &LabeledSweep, exps: &Exponents) -> (f64, f64, f64) {
    let f = sw.fits(exps).unwrap();
    (f.h_reduced.slope, f.b.slope, f.norm_p.slope)
}

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= 0.02
}

#[test]
fn critical_d3_window_is_one_point() {
    let exps = make_exponents(3, 2.0, 6.0).unwrap();
    let (sweeps, inf) = infer_window(&exps).unwrap();
    for sw in &sweeps {
        let (a, b, n) = slopes(sw, &exps);
        match sw.label.as_str() {
            "eps_small" | "eps_large" => {
                assert!(near(a, 1.0) && near(b, -1.0) && near(n, -1.0 / 3.0))
            }
            "multi_bubble" => assert!(near(a, 1.0) && near(b, 0.0) && near(n, 1.0 / 3.0)),
            other => panic!("unexpected sweep {other}"),
        }
    }
    let w = inf.admissible.expect("nonempty window");
    assert!(w.upper - w.lower < 1e-4);
    assert!((w.lower - 1.0 / 3.0).abs() < 1e-4);
    assert!(inf.refused.is_empty());
}

#[test]
fn weak_d3_window_is_third_to_half() {
    let exps = make_exponents(3, 2.0, LorentzIndex::Infinite).unwrap();
    let (sweeps, inf) = infer_window(&exps).unwrap();
    for sw in &sweeps {
        let (a, b, n) = slopes(sw, &exps);
        if sw.label == "eps_small" {
            assert!(near(a, 1.0) && near(b, -1.0) && near(n, 0.0));
        }
    }
    let w = inf.admissible.unwrap();
    assert!((w.lower - 1.0 / 3.0).abs() < 0.02, "{w:?}");
    assert!((w.upper - 0.5).abs() < 0.02, "{w:?}");
}

#[test]
fn d4_critical_window_is_empty() {
    let exps = make_exponents(4, 2.0, 4.0).unwrap();
    let (_, inf) = infer_window(&exps).unwrap();
    assert!(inf.is_empty());
    let lower = inf
        .lower_bounds
        .iter()
        .find(|b| b.source == "multi_bubble")
        .unwrap();
    let upper = inf
        .upper_bounds
        .iter()
        .find(|b| b.source == "eps_small")
        .unwrap();
    assert!(near(lower.value, 0.5) && near(upper.value, 0.25));
    assert!(lower.conservative > upper.conservative);
}

#[test]
fn eps_sweep_b_slope() {
    let exps = make_exponents(3, 2.0, 6.0).unwrap();
    let params = [1.0, 0.5, 0.25, 0.125];
    let sw = LabeledSweep::run("eps", TrialFamily::PiecewisePower, params.to_vec(), &exps).unwrap();
    let bs: Vec<f64> = sw.reports.iter().map(|r| r.b).collect();
    assert!((fit_loglog(&params, &bs).unwrap().slope + 1.0).abs() < 1e-6);
}
