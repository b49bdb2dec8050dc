//! Run configuration: parsing, validation and hashing.

use std::collections::BTreeMap;
use std::path::Path;

use hardylab_core::invariants::VerifyConfig;
use hardylab_core::varsolve::{Initial, SolverOptions};
use hardylab_core::{make_exponents, Exponents, LogGrid, LorentzIndex, TrialFamily};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Eval,
    Constants,
    Optimize,
    Scaling,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Constants => "constants",
            Command::Optimize => "optimize",
            Command::Scaling => "scaling",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keyword {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    Value(f64),
    Keyword(Keyword),
}

impl Default for ThetaSpec {
    fn default() -> Self {
        ThetaSpec::Keyword(Keyword::Auto)
    }
}

fn default_p() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsSpec {
    pub d: u32,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Defaults to `p*`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<LorentzIndex>,
    #[serde(default)]
    pub theta: ThetaSpec,
}

/// A number, or a list of numbers (a sweep, or a vector-valued parameter).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub id: String,
    pub params: BTreeMap<String, ParamValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub label: String,
    pub family: FamilySpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub s_min: f64,
    pub s_max: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        let g = SolverOptions::default().grid;
        Self {
            s_min: g.s_min(),
            s_max: g.s_max(),
            n: g.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    /// Number of seeded random starts; 1 by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    /// Width of the Gaussian starting profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_profiles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotonicity_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<ExponentsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<Vec<SweepSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ParamKind {
    /// The family parameter; a list means a sweep.
    Swept,
    /// Displacement vector of length `d`.
    Vector,
}

struct ParamSchema {
    name: &'static str,
    kind: ParamKind,
    required: bool,
}

const fn swept(name: &'static str) -> ParamSchema {
    ParamSchema {
        name,
        kind: ParamKind::Swept,
        required: true,
    }
}

const Z: ParamSchema = ParamSchema {
    name: "z",
    kind: ParamKind::Vector,
    required: false,
};

/// Family ids accepted in configs.
pub const FAMILY_IDS: [&str; 5] = [
    "terracini",
    "piecewise_power",
    "uc_profile",
    "multi_bubble",
    "dyadic_chain",
];

fn schema(id: &str) -> Option<Vec<ParamSchema>> {
    Some(match id {
        "terracini" => vec![swept("eta")],
        "piecewise_power" => vec![swept("eps")],
        "uc_profile" => vec![swept("c")],
        "multi_bubble" | "dyadic_chain" => vec![swept("N"), Z],
        _ => return None,
    })
}

/// A family with the values of its swept parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedFamily {
    pub family: TrialFamily,
    pub parameter: &'static str,
    pub values: Vec<f64>,
}

impl FamilySpec {
    /// Checks names and shapes against the family schema and builds the family.
    pub fn resolve(&self, d: u32) -> Result<ResolvedFamily, CliError> {
        let schema = schema(&self.id).ok_or_else(|| {
            CliError::Config(format!(
                "unknown family id {:?}; expected one of {}",
                self.id,
                FAMILY_IDS.join(", ")
            ))
        })?;
        if let Some(name) = self
            .params
            .keys()
            .find(|k| !schema.iter().any(|s| s.name == k.as_str()))
        {
            let known: Vec<&str> = schema.iter().map(|s| s.name).collect();
            return Err(CliError::Config(format!(
                "family {} has no parameter {name:?}; expected {}",
                self.id,
                known.join(", ")
            )));
        }
        let mut values = Vec::new();
        let mut parameter = "";
        let mut z = None;
        for s in &schema {
            let Some(v) = self.params.get(s.name) else {
                if s.required {
                    return Err(CliError::Config(format!(
                        "family {} requires parameter {:?}",
                        self.id, s.name
                    )));
                }
                continue;
            };
            match (s.kind, v) {
                (ParamKind::Swept, ParamValue::Scalar(x)) => values = vec![*x],
                (ParamKind::Swept, ParamValue::List(xs)) if !xs.is_empty() => values = xs.clone(),
                (ParamKind::Vector, ParamValue::List(xs)) if xs.len() == d as usize => {
                    z = Some(xs.clone())
                }
                (ParamKind::Vector, _) => {
                    return Err(CliError::Config(format!(
                        "parameter {:?} of {} must be a list of {d} numbers",
                        s.name, self.id
                    )))
                }
                (ParamKind::Swept, _) => {
                    return Err(CliError::Config(format!(
                        "parameter {:?} of {} must be a number or a nonempty list",
                        s.name, self.id
                    )))
                }
            }
            if s.kind == ParamKind::Swept {
                parameter = s.name;
            }
        }
        if let Some(bad) = values.iter().find(|x| !x.is_finite()) {
            return Err(CliError::Config(format!(
                "parameter {parameter:?} of {} has non-finite value {bad}",
                self.id
            )));
        }
        let family = match self.id.as_str() {
            "terracini" => TrialFamily::Terracini,
            "piecewise_power" => TrialFamily::PiecewisePower,
            "uc_profile" => TrialFamily::UcProfile,
            "multi_bubble" => TrialFamily::MultiBubble { z },
            _ => TrialFamily::DyadicChain { z },
        };
        Ok(ResolvedFamily {
            family,
            parameter,
            values,
        })
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Everything that can be checked without running a computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let needs_exponents = !matches!(self.command, Command::Verify);
        let d = match (&self.exponents, needs_exponents) {
            (Some(e), _) => {
                self.exponents()?;
                Some(e.d)
            }
            (None, true) => {
                return Err(CliError::Config(format!(
                    "command {} requires \"exponents\"",
                    self.command.name()
                )))
            }
            (None, false) => None,
        };
        match (self.command, &self.family) {
            (Command::Eval, None) => {
                return Err(CliError::Config("command eval requires \"family\"".into()))
            }
            (Command::Eval, Some(f)) => {
                f.resolve(d.unwrap_or(3))?;
            }
            (_, Some(_)) => {
                return Err(CliError::Config(format!(
                    "\"family\" is not used by command {}",
                    self.command.name()
                )))
            }
            _ => {}
        }
        if let Some(sweeps) = &self.sweeps {
            if self.command != Command::Scaling {
                return Err(CliError::Config(format!(
                    "\"sweeps\" is not used by command {}",
                    self.command.name()
                )));
            }
            if sweeps.is_empty() {
                return Err(CliError::Config("\"sweeps\" must not be empty".into()));
            }
            for s in sweeps {
                let r = s.family.resolve(d.unwrap_or(3))?;
                if r.values.len() < 4 {
                    return Err(CliError::Config(format!(
                        "sweep {} needs at least 4 values of {}",
                        s.label, r.parameter
                    )));
                }
                if s.label.is_empty()
                    || !s
                        .label
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || c == '_')
                {
                    return Err(CliError::Config(format!(
                        "sweep label {:?} must be nonempty ASCII letters, digits or '_'",
                        s.label
                    )));
                }
            }
        }
        self.grid()?;
        self.solver_options()?;
        if let Some(v) = &self.verify {
            if self.command != Command::Verify {
                return Err(CliError::Config(format!(
                    "\"verify\" is not used by command {}",
                    self.command.name()
                )));
            }
            if v.dims
                .as_ref()
                .is_some_and(|ds| ds.is_empty() || ds.iter().any(|d| *d < 3))
            {
                return Err(CliError::Config(
                    "verify dims must be a nonempty list of d >= 3".into(),
                ));
            }
        }
        if let (Some(d), Command::Constants | Command::Optimize) = (d, self.command) {
            if d < 3 {
                return Err(CliError::Config(format!(
                    "command {} needs d >= 3, got {d}",
                    self.command.name()
                )));
            }
        }
        Ok(())
    }

    /// Exponents with `theta` resolved; `auto` keeps the lower window endpoint.
    pub fn exponents(&self) -> Result<Exponents, CliError> {
        let spec = self
            .exponents
            .as_ref()
            .ok_or_else(|| CliError::Config("missing \"exponents\"".into()))?;
        let config_err = |e: hardylab_core::Error| CliError::Config(e.to_string());
        let r = match spec.r {
            Some(r) => r,
            None => LorentzIndex::Finite(
                make_exponents(spec.d, spec.p, LorentzIndex::Infinite)
                    .map_err(config_err)?
                    .p_star,
            ),
        };
        let exps = make_exponents(spec.d, spec.p, r).map_err(config_err)?;
        match spec.theta {
            ThetaSpec::Keyword(Keyword::Auto) => Ok(exps),
            ThetaSpec::Value(t) => exps.with_theta(t).map_err(config_err),
        }
    }

    pub fn grid(&self) -> Result<LogGrid, CliError> {
        let g = self.grid.unwrap_or_default();
        LogGrid::new(g.s_min, g.s_max, g.n).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn solver_options(&self) -> Result<SolverOptions, CliError> {
        let s = self.solver.unwrap_or_default();
        let mut opts = SolverOptions {
            grid: self.grid()?,
            seed: self.seed,
            ..SolverOptions::default()
        };
        if let Some(v) = s.max_iters {
            opts.max_iters = v;
        }
        if let Some(v) = s.step0 {
            opts.step0 = v;
        }
        if let Some(v) = s.grad_tol {
            opts.grad_tol = v;
        }
        if let Some(v) = s.rel_tol {
            opts.rel_tol = v;
        }
        if let Some(width) = s.initial_width {
            opts.initial = Initial::Gaussian { width };
        }
        if s.starts == Some(0) {
            return Err(CliError::Config("solver starts must be at least 1".into()));
        }
        opts.validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(opts)
    }

    pub fn starts(&self) -> usize {
        self.solver.and_then(|s| s.starts).unwrap_or(1)
    }

    pub fn verify_config(&self) -> VerifyConfig {
        let base = VerifyConfig {
            seed: self.seed,
            ..VerifyConfig::default()
        };
        let Some(v) = &self.verify else {
            return base;
        };
        VerifyConfig {
            dims: v.dims.clone().unwrap_or(base.dims),
            random_profiles: v.random_profiles.unwrap_or(base.random_profiles),
            monotonicity_samples: v.monotonicity_samples.unwrap_or(base.monotonicity_samples),
            seed: self.seed,
        }
    }

    /// SHA-256 of the canonical JSON of the config, output paths excluded.
    pub fn hash(&self) -> String {
        let canonical = RunConfig {
            output: None,
            ..self.clone()
        };
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_config(params: &str) -> String {
        format!(
            r#"{{"command": "eval", "exponents": {{"d": 3, "p": 2, "r": "inf"}},
                "family": {{"id": "piecewise_power", "params": {params}}}}}"#
        )
    }

    #[test]
    fn parses_scalar_and_sweep_parameters() {
        let cfg = RunConfig::from_json(&eval_config(r#"{"eps": 0.5}"#)).unwrap();
        let fam = cfg.family.as_ref().unwrap().resolve(3).unwrap();
        assert_eq!((fam.parameter, fam.values), ("eps", vec![0.5]));
        let cfg = RunConfig::from_json(&eval_config(r#"{"eps": [1, 0.5]}"#)).unwrap();
        assert_eq!(
            cfg.family.unwrap().resolve(3).unwrap().values,
            vec![1.0, 0.5]
        );
    }

    #[test]
    fn rejects_unknown_parameter_names() {
        let err = RunConfig::from_json(&eval_config(r#"{"epsilon": 0.5}"#)).unwrap_err();
        assert!(
            matches!(err, CliError::Config(ref m) if m.contains("epsilon")),
            "{err}"
        );
        let err = RunConfig::from_json(&eval_config(r#"{}"#)).unwrap_err();
        assert!(err.to_string().contains("requires parameter"));
    }

    #[test]
    fn bubble_displacement_must_match_dimension() {
        let spec = FamilySpec {
            id: "multi_bubble".into(),
            params: BTreeMap::from([
                ("N".to_string(), ParamValue::Scalar(4.0)),
                ("z".to_string(), ParamValue::List(vec![3.0, 0.0])),
            ]),
        };
        assert!(spec.resolve(3).is_err());
        assert_eq!(
            spec.resolve(2).unwrap().family,
            TrialFamily::MultiBubble {
                z: Some(vec![3.0, 0.0])
            }
        );
    }

    #[test]
    fn theta_and_r_defaults() {
        let cfg = RunConfig::from_json(r#"{"command": "scaling", "exponents": {"d": 3}}"#).unwrap();
        let e = cfg.exponents().unwrap();
        assert_eq!(e.r, LorentzIndex::Finite(6.0));
        assert!((e.theta - 1.0 / 3.0).abs() < 1e-15);
        let cfg = RunConfig::from_json(
            r#"{"command": "scaling", "exponents": {"d": 3, "r": "inf", "theta": 0.5}}"#,
        )
        .unwrap();
        assert_eq!(cfg.exponents().unwrap().theta, 0.5);
        assert!(RunConfig::from_json(
            r#"{"command": "scaling", "exponents": {"d": 3, "theta": "sometimes"}}"#
        )
        .is_err());
    }

    #[test]
    fn command_specific_fields_are_checked() {
        for text in [
            r#"{"command": "eval", "exponents": {"d": 3}}"#,
            r#"{"command": "constants"}"#,
            r#"{"command": "constants", "exponents": {"d": 3}, "verify": {}}"#,
            r#"{"command": "verify", "verify": {"dims": [2]}}"#,
            r#"{"command": "optimize", "exponents": {"d": 3}, "solver": {"starts": 0}}"#,
            r#"{"command": "optimize", "exponents": {"d": 3}, "grid": {"s_min": 1, "s_max": 0, "n": 11}}"#,
            r#"{"command": "scaling", "exponents": {"d": 3}, "sweeps": [{"label": "a",
                "family": {"id": "terracini", "params": {"eta": [1, 2, 3]}}}]}"#,
            r#"{"command": "verify", "colour": "blue"}"#,
        ] {
            assert!(RunConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn hash_ignores_output_directory_but_not_seed() {
        let text = r#"{"command": "verify", "output": {"dir": "a"}}"#;
        let a = RunConfig::from_json(text).unwrap();
        let mut b = a.clone();
        b.output = Some(OutputSpec { dir: "b".into() });
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
