//! Command dispatch.

use std::path::Path;

use hardylab_core::functionals::evaluate;
use hardylab_core::invariants::{verify, Check, InvariantSummary};
use hardylab_core::scaling::{
    infer_theta_bounds, standard_battery, Degeneration, LabeledSweep, SweepFits, SweepPlan,
    ThetaInference,
};
use hardylab_core::varsolve::{
    minimize_multistart, minimize_reduced_quotient, radial_constant_2star, radial_constant_inf,
    SolverResult,
};
use hardylab_core::{Error, Exponents, FunctionalReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Command, Keyword, RunConfig, ThetaSpec};
use crate::error::CliError;
use crate::output::{OutputDir, Provenance};

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub files: Vec<String>,
    /// False only when `verify` recorded failing assertions.
    pub passed: bool,
    /// Human-readable summary lines.
    pub lines: Vec<String>,
}

/// Runs `cfg`, writing every artifact into `out`.
///
/// On a numerical failure the outputs computed so far are kept and the
/// manifest is marked partial.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let hash = cfg.hash();
    let mut dir = OutputDir::create(out)?;
    let result = match cfg.command {
        Command::Eval => run_eval(cfg, &hash, &mut dir),
        Command::Constants => run_constants(cfg, &hash, &mut dir),
        Command::Optimize => run_optimize(cfg, &hash, &mut dir),
        Command::Scaling => run_scaling(cfg, &hash, &mut dir),
        Command::Verify => run_verify(cfg, &hash, &mut dir),
    };
    match result {
        Ok((passed, lines)) => {
            dir.finish(cfg.command.name(), &hash, None)?;
            Ok(RunOutcome {
                files: dir.files().to_vec(),
                passed,
                lines,
            })
        }
        Err(e) => {
            dir.finish(cfg.command.name(), &hash, Some(&e))?;
            Err(e)
        }
    }
}

type CommandResult = Result<(bool, Vec<String>), CliError>;

fn provenance(cfg: &RunConfig, hash: &str) -> Result<Provenance, CliError> {
    let g = cfg.grid()?;
    Ok(Provenance {
        config_hash: hash.to_string(),
        s_min: g.s_min(),
        s_max: g.s_max(),
        n: g.len(),
    })
}

#[derive(Serialize)]
struct EvalRow<'a> {
    param: f64,
    report: &'a FunctionalReport,
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    command: &'static str,
    config_hash: &'a str,
    exponents: &'a Exponents,
    family: &'static str,
    parameter: &'static str,
    rows: Vec<EvalRow<'a>>,
}

fn run_eval(cfg: &RunConfig, hash: &str, dir: &mut OutputDir) -> CommandResult {
    let exps = cfg.exponents()?;
    let spec = cfg.family.as_ref().expect("validated");
    let fam = spec.resolve(exps.d)?;
    let results: Vec<_> = fam
        .values
        .par_iter()
        .map(|&v| {
            fam.family
                .instantiate(v, &exps)
                .and_then(|u| evaluate(&u, &exps))
                .map_err(|e| Error::Sweep {
                    family: fam.family.id().to_string(),
                    parameter: fam.parameter.to_string(),
                    value: v,
                    source: Box::new(e),
                })
        })
        .collect();
    let mut rows = Vec::new();
    let mut first_error = None;
    for (v, r) in fam.values.iter().zip(results) {
        match r {
            Ok(report) => rows.push((*v, report)),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    dir.write_report_csv("eval.csv", &rows, &provenance(cfg, hash)?)?;
    dir.write_json(
        "eval.json",
        &EvalOutput {
            command: "eval",
            config_hash: hash,
            exponents: &exps,
            family: fam.family.id(),
            parameter: fam.parameter,
            rows: rows
                .iter()
                .map(|(param, report)| EvalRow {
                    param: *param,
                    report,
                })
                .collect(),
        },
    )?;
    if rows.len() > 1 {
        dir.write_report_curves("eval", fam.parameter, &rows)?;
    }
    if let Some(e) = first_error {
        return Err(e.into());
    }
    let lines = rows
        .iter()
        .map(|(v, r)| {
            format!(
                "{} = {v}: A = {:.12e}, B = {:.12e}, quotient = {:.12e}",
                fam.parameter, r.a, r.b, r.quotient
            )
        })
        .collect();
    Ok((true, lines))
}

#[derive(Serialize)]
struct ConstantRecord {
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    converged: Option<bool>,
    provenance: &'static str,
}

#[derive(Serialize)]
struct ConstantsOutput<'a> {
    command: &'static str,
    config_hash: &'a str,
    d: u32,
    grid: &'a Provenance,
    c_rad_inf: ConstantRecord,
    c_rad_2star: ConstantRecord,
}

fn run_constants(cfg: &RunConfig, hash: &str, dir: &mut OutputDir) -> CommandResult {
    let d = cfg.exponents()?.d;
    let inf = radial_constant_inf(d)?;
    let opts = cfg.solver_options()?;
    let two_star = radial_constant_2star(d, &opts)?;
    let prov = provenance(cfg, hash)?;
    dir.write_json(
        "constants.json",
        &ConstantsOutput {
            command: "constants",
            config_hash: hash,
            d,
            grid: &prov,
            c_rad_inf: ConstantRecord {
                value: inf,
                q_star: None,
                converged: None,
                provenance: "closed form |S^{d-1}| |B(0,1)|^{-2/2*}",
            },
            c_rad_2star: ConstantRecord {
                value: two_star.value,
                q_star: Some(two_star.q_star),
                converged: Some(two_star.converged),
                provenance: "q_star |S^{d-1}|^{1-2/2*} with q_star the descent minimum of the reduced quotient at theta = 1/d",
            },
        },
    )?;
    Ok((
        true,
        vec![
            format!("C_rad,inf = {inf:.15e}"),
            format!(
                "C_rad,2* = {:.15e} (q_star = {:.15e}, converged = {})",
                two_star.value, two_star.q_star, two_star.converged
            ),
        ],
    ))
}

#[derive(Serialize)]
struct RunSummary {
    seed_offset: usize,
    q_star: f64,
    q_initial: f64,
    iterations: usize,
    converged: bool,
    gradient_norm: f64,
    alignment_error: f64,
    fitted_eta: f64,
    fitted_shift: f64,
    scale_invariant: bool,
}

impl RunSummary {
    fn of(k: usize, r: &SolverResult) -> Self {
        Self {
            seed_offset: k,
            q_star: r.q_star,
            q_initial: r.q_initial,
            iterations: r.iterations,
            converged: r.converged,
            gradient_norm: r.gradient_norm,
            alignment_error: r.alignment_error,
            fitted_eta: r.fitted_eta,
            fitted_shift: r.fitted_shift,
            scale_invariant: r.scale_invariant,
        }
    }
}

#[derive(Serialize)]
struct OptimizeOutput<'a> {
    command: &'static str,
    config_hash: &'a str,
    d: u32,
    theta: f64,
    seed: u64,
    grid: &'a Provenance,
    best: RunSummary,
    runs: Vec<RunSummary>,
}

fn run_optimize(cfg: &RunConfig, hash: &str, dir: &mut OutputDir) -> CommandResult {
    let spec = cfg.exponents.as_ref().expect("validated");
    let d = spec.d;
    let theta = match spec.theta {
        ThetaSpec::Keyword(Keyword::Auto) => 1.0 / d as f64,
        ThetaSpec::Value(t) => t,
    };
    let opts = cfg.solver_options()?;
    let runs = match cfg.starts() {
        1 => vec![minimize_reduced_quotient(d, theta, &opts)?],
        n => minimize_multistart(d, theta, &opts, n)?,
    };
    let (best_k, best) = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.q_star.total_cmp(&b.1.q_star))
        .expect("at least one start");
    let prov = provenance(cfg, hash)?;
    dir.write_json(
        "optimize.json",
        &OptimizeOutput {
            command: "optimize",
            config_hash: hash,
            d,
            theta,
            seed: cfg.seed,
            grid: &prov,
            best: RunSummary::of(best_k, best),
            runs: runs
                .iter()
                .enumerate()
                .map(|(k, r)| RunSummary::of(k, r))
                .collect(),
        },
    )?;
    let grid = best.psi_star.grid();
    dir.write_dat(
        "psi_star.dat",
        ("s", "psi"),
        grid.nodes().zip(best.psi_star.values().iter().copied()),
    )?;
    dir.write_dat(
        "history.dat",
        ("iteration", "quotient"),
        best.history
            .iter()
            .enumerate()
            .map(|(i, q)| ((i + 1) as f64, *q)),
    )?;
    Ok((
        true,
        vec![format!(
            "q_star = {:.15e} after {} iterations (converged = {}, alignment error = {:.3e})",
            best.q_star, best.iterations, best.converged, best.alignment_error
        )],
    ))
}

#[derive(Serialize)]
struct SweepRecord<'a> {
    label: &'a str,
    family: &'static str,
    parameter: &'static str,
    direction: Degeneration,
    params: &'a [f64],
    fits: SweepFits,
}

#[derive(Serialize)]
struct ScalingOutput<'a> {
    command: &'static str,
    config_hash: &'a str,
    exponents: &'a Exponents,
    sweeps: Vec<SweepRecord<'a>>,
    inference: &'a ThetaInference,
}

fn run_scaling(cfg: &RunConfig, hash: &str, dir: &mut OutputDir) -> CommandResult {
    let exps = cfg.exponents()?;
    let plans = match &cfg.sweeps {
        Some(specs) => specs
            .iter()
            .map(|s| {
                let fam = s.family.resolve(exps.d)?;
                Ok(SweepPlan {
                    label: s.label.clone(),
                    family: fam.family,
                    params: fam.values,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?,
        None => standard_battery(&exps),
    };
    let prov = provenance(cfg, hash)?;
    let mut sweeps = Vec::new();
    for plan in &plans {
        let sw = LabeledSweep::run(&plan.label, plan.family.clone(), plan.params.clone(), &exps)?;
        let rows: Vec<(f64, FunctionalReport)> = sw
            .params
            .iter()
            .copied()
            .zip(sw.reports.iter().cloned())
            .collect();
        dir.write_report_csv(&format!("scaling_{}.csv", sw.label), &rows, &prov)?;
        dir.write_report_curves(
            &format!("scaling_{}", sw.label),
            sw.family.parameter_name(),
            &rows,
        )?;
        sweeps.push(sw);
    }
    let inference = infer_theta_bounds(&sweeps, &exps)?;
    let records = sweeps
        .iter()
        .map(|sw| {
            Ok(SweepRecord {
                label: &sw.label,
                family: sw.family.id(),
                parameter: sw.family.parameter_name(),
                direction: sw.direction(),
                params: &sw.params,
                fits: sw.fits(&exps)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut lines: Vec<String> = records
        .iter()
        .map(|r| {
            format!(
                "{}: slopes h = {:.4}, B = {:.4}, norm^p = {:.4}",
                r.label, r.fits.h_reduced.slope, r.fits.b.slope, r.fits.norm_p.slope
            )
        })
        .collect();
    lines.push(match &inference.admissible {
        Some(w) => format!("admissible theta window [{:.6}, {:.6}]", w.lower, w.upper),
        None => "admissible theta window is empty".to_string(),
    });
    dir.write_json(
        "scaling.json",
        &ScalingOutput {
            command: "scaling",
            config_hash: hash,
            exponents: &exps,
            sweeps: records,
            inference: &inference,
        },
    )?;
    Ok((true, lines))
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    command: &'static str,
    config_hash: &'a str,
    dims: &'a [u32],
    seed: u64,
    assertions: usize,
    all_passed: bool,
    summaries: &'a [InvariantSummary],
    failures: Vec<&'a Check>,
}

fn run_verify(cfg: &RunConfig, hash: &str, dir: &mut OutputDir) -> CommandResult {
    let vc = cfg.verify_config();
    let report = verify(&vc)?;
    let summaries = report.summaries();
    dir.write_json(
        "verify.json",
        &VerifyOutput {
            command: "verify",
            config_hash: hash,
            dims: &vc.dims,
            seed: vc.seed,
            assertions: report.assertions(),
            all_passed: report.all_passed(),
            summaries: &summaries,
            failures: report.failures().collect(),
        },
    )?;
    let mut csv = String::from("invariant,case,lhs,rhs,passed,config_hash\n");
    for c in &report.checks {
        csv.push_str(&format!(
            "{},{},{},{},{},{hash}\n",
            c.invariant,
            c.case.replace(',', ";"),
            crate::output::fmt_num(c.lhs),
            crate::output::fmt_num(c.rhs),
            c.passed
        ));
    }
    dir.write_text("verify.csv", &csv)?;
    let mut lines: Vec<String> = summaries
        .iter()
        .map(|s| {
            format!(
                "{} {}: {} assertions, {} failures",
                if s.failures == 0 { "PASS" } else { "FAIL" },
                s.invariant,
                s.assertions,
                s.failures
            )
        })
        .collect();
    lines.push(format!("total assertions: {}", report.assertions()));
    Ok((report.all_passed(), lines))
}
