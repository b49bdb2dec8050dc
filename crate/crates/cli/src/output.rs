//! Output directory with a manifest of everything written to it.

use std::fs;
use std::path::{Path, PathBuf};

use hardylab_core::FunctionalReport;
use serde::Serialize;

use crate::error::{CliError, ErrorRecord};

/// 17 significant digits, with `inf`, `-inf` and `nan` spelled out.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

pub const CSV_HEADER: &str =
    "param,A,B,h_reduced,lorentz,weak_norm,morrey,quotient,config_hash,s_min,s_max,n";

pub type Column = (&'static str, fn(&FunctionalReport) -> f64);

/// Report columns with their CSV names, in CSV order.
pub const COLUMNS: [Column; 7] = [
    ("A", |r| r.a),
    ("B", |r| r.b),
    ("h_reduced", |r| r.h_reduced),
    ("lorentz", |r| r.lorentz),
    ("weak_norm", |r| r.weak_norm),
    ("morrey", |r| r.morrey),
    ("quotient", |r| r.quotient),
];

/// The reproducibility fields appended to every row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    #[serde(skip)]
    pub config_hash: String,
    pub s_min: f64,
    pub s_max: f64,
    pub n: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    status: &'a str,
    partial: bool,
    files: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorRecord>,
}

pub struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write_text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.write_text(name, &text)
    }

    /// One row per report, in the order given.
    pub fn write_report_csv(
        &mut self,
        name: &str,
        rows: &[(f64, FunctionalReport)],
        prov: &Provenance,
    ) -> Result<(), CliError> {
        let mut text = String::from(CSV_HEADER);
        text.push('\n');
        for (param, report) in rows {
            let mut fields = vec![fmt_num(*param)];
            fields.extend(COLUMNS.iter().map(|(_, get)| fmt_num(get(report))));
            fields.push(prov.config_hash.clone());
            fields.push(fmt_num(prov.s_min));
            fields.push(fmt_num(prov.s_max));
            fields.push(prov.n.to_string());
            text.push_str(&fields.join(","));
            text.push('\n');
        }
        self.write_text(name, &text)
    }

    /// Two-column whitespace-separated data with a `#` header line.
    pub fn write_dat(
        &mut self,
        name: &str,
        labels: (&str, &str),
        points: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<(), CliError> {
        let mut text = format!("# {} {}\n", labels.0, labels.1);
        for (x, y) in points {
            text.push_str(&format!("{} {}\n", fmt_num(x), fmt_num(y)));
        }
        self.write_text(name, &text)
    }

    /// One `.dat` file per report column, named `<stem>_<column>.dat`.
    pub fn write_report_curves(
        &mut self,
        stem: &str,
        parameter: &str,
        rows: &[(f64, FunctionalReport)],
    ) -> Result<(), CliError> {
        for (col, get) in COLUMNS {
            self.write_dat(
                &format!("{stem}_{col}.dat"),
                (parameter, col),
                rows.iter().map(|(x, r)| (*x, get(r))),
            )?;
        }
        Ok(())
    }

    /// Writes `manifest.json` last; `error` marks the outputs as partial.
    pub fn finish(
        &mut self,
        command: &str,
        config_hash: &str,
        error: Option<&CliError>,
    ) -> Result<(), CliError> {
        if let Some(e) = error {
            self.write_json("error.json", &e.record())?;
        }
        let files = self.files.clone();
        let manifest = Manifest {
            command,
            config_hash,
            status: if error.is_some() {
                "partial"
            } else {
                "complete"
            },
            partial: error.is_some(),
            files: &files,
            error: error.map(CliError::record),
        };
        self.write_json("manifest.json", &manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    #[test]
    fn manifest_lists_files_and_marks_errors() {
        let tmp = tempfile::tempdir().unwrap();
        let mut dir = OutputDir::create(tmp.path()).unwrap();
        dir.write_dat("x.dat", ("a", "b"), [(1.0, 2.0)]).unwrap();
        let err = CliError::Config("bad".into());
        dir.finish("eval", "h", Some(&err)).unwrap();
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(m["status"], "partial");
        assert_eq!(m["files"][0], "x.dat");
        assert_eq!(m["files"][1], "error.json");
        assert_eq!(
            fs::read_to_string(tmp.path().join("x.dat")).unwrap(),
            "# a b\n1.0000000000000000e0 2.0000000000000000e0\n"
        );
    }
}
