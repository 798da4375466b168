//! Structured verification reports.
//!
//! Each identity check produces one [`CheckRecord`]; a run collects them into
//! a [`VerificationReport`] together with metadata describing the anisotropy,
//! the surface, and the numerical parameters. Reports serialize to JSON with
//! a fixed key order and render as plain-text tables, so repeated runs with
//! the same inputs produce byte-identical output.

use crate::error::Error;
use crate::io::Json;
use crate::Result;

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    /// Stable identifier; the merged report is sorted by this.
    pub name: String,
    /// Plain-text statement of the identity under test.
    pub statement: String,
    /// Largest pointwise residual observed.
    pub max_pointwise: f64,
    /// Residual of the integral form, when the check has one.
    pub integral_residual: f64,
    /// Number of samples or quadrature points inspected.
    pub samples: usize,
    /// Tolerance the residuals were held to.
    pub tolerance: f64,
    pub passed: bool,
    /// Auxiliary facts: flags, fitted values, convergence data.
    pub notes: Vec<String>,
}

impl CheckRecord {
    pub fn new(name: &str, statement: &str) -> Self {
        CheckRecord {
            name: name.to_string(),
            statement: statement.to_string(),
            max_pointwise: 0.0,
            integral_residual: 0.0,
            samples: 0,
            tolerance: 0.0,
            passed: false,
            notes: Vec::new(),
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    fn to_json(&self) -> Json {
        let mut obj = Json::obj();
        obj.push("name", Json::Str(self.name.clone()));
        obj.push("statement", Json::Str(self.statement.clone()));
        obj.push("max_pointwise", Json::Num(self.max_pointwise));
        obj.push("integral_residual", Json::Num(self.integral_residual));
        obj.push("samples", Json::Int(self.samples as i64));
        obj.push("tolerance", Json::Num(self.tolerance));
        obj.push("passed", Json::Bool(self.passed));
        obj.push(
            "notes",
            Json::Arr(self.notes.iter().cloned().map(Json::Str).collect()),
        );
        obj
    }

    fn from_json(json: &Json) -> Result<Self> {
        let field = |key: &str| {
            json.get(key).ok_or_else(|| Error::Format {
                what: "report".to_string(),
                message: format!("check record missing key {key:?}"),
            })
        };
        let text = |key: &str| -> Result<String> {
            field(key)?.as_str().map(str::to_string).ok_or_else(|| Error::Format {
                what: "report".to_string(),
                message: format!("check record key {key:?} is not a string"),
            })
        };
        let num = |key: &str| -> Result<f64> {
            field(key)?.as_f64().ok_or_else(|| Error::Format {
                what: "report".to_string(),
                message: format!("check record key {key:?} is not a number"),
            })
        };
        let passed = match field("passed")? {
            Json::Bool(b) => *b,
            _ => {
                return Err(Error::Format {
                    what: "report".to_string(),
                    message: "check record key \"passed\" is not a bool".to_string(),
                })
            }
        };
        let notes = match field("notes")? {
            Json::Arr(items) => items
                .iter()
                .map(|item| {
                    item.as_str().map(str::to_string).ok_or_else(|| Error::Format {
                        what: "report".to_string(),
                        message: "non-string note".to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            _ => {
                return Err(Error::Format {
                    what: "report".to_string(),
                    message: "check record key \"notes\" is not an array".to_string(),
                })
            }
        };
        Ok(CheckRecord {
            name: text("name")?,
            statement: text("statement")?,
            max_pointwise: num("max_pointwise")?,
            integral_residual: num("integral_residual")?,
            samples: num("samples")? as usize,
            tolerance: num("tolerance")?,
            passed,
            notes,
        })
    }
}

/// Run metadata attached to every report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportMeta {
    /// Anisotropy description, e.g. `quadratic(diag 1 1 4)`.
    pub gamma: String,
    /// Surface description, e.g. `wulff` or `ellipsoid(1,1,2)`.
    pub surface: String,
    pub quadrature_order: usize,
    pub seed: u64,
}

impl ReportMeta {
    fn to_json(&self) -> Json {
        let mut obj = Json::obj();
        obj.push("gamma", Json::Str(self.gamma.clone()));
        obj.push("surface", Json::Str(self.surface.clone()));
        obj.push("quadrature_order", Json::Int(self.quadrature_order as i64));
        obj.push("seed", Json::Int(self.seed as i64));
        obj
    }

    fn from_json(json: &Json) -> Result<Self> {
        let missing = |key: &str| Error::Format {
            what: "report".to_string(),
            message: format!("meta missing key {key:?}"),
        };
        let gamma = json
            .get("gamma")
            .and_then(Json::as_str)
            .ok_or_else(|| missing("gamma"))?
            .to_string();
        let surface = json
            .get("surface")
            .and_then(Json::as_str)
            .ok_or_else(|| missing("surface"))?
            .to_string();
        let quadrature_order = json
            .get("quadrature_order")
            .and_then(Json::as_f64)
            .ok_or_else(|| missing("quadrature_order"))? as usize;
        let seed = json
            .get("seed")
            .and_then(Json::as_f64)
            .ok_or_else(|| missing("seed"))? as u64;
        Ok(ReportMeta { gamma, surface, quadrature_order, seed })
    }
}

/// A full verification run: metadata plus one record per check.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub meta: ReportMeta,
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new(meta: ReportMeta) -> Self {
        VerificationReport { meta, checks: Vec::new() }
    }

    /// Adds a record; duplicate names are rejected so each check appears once.
    pub fn push(&mut self, record: CheckRecord) -> Result<()> {
        if self.checks.iter().any(|c| c.name == record.name) {
            return Err(Error::param(
                "check",
                format!("duplicate check record {:?}", record.name),
            ));
        }
        self.checks.push(record);
        Ok(())
    }

    /// Sorts records by name; call once after all checks have run.
    pub fn finalize(mut self) -> Self {
        self.checks.sort_by(|a, b| a.name.cmp(&b.name));
        self
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_names(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn to_json(&self) -> Json {
        let mut obj = Json::obj();
        obj.push("meta", self.meta.to_json());
        obj.push(
            "checks",
            Json::Arr(self.checks.iter().map(CheckRecord::to_json).collect()),
        );
        obj.push("all_passed", Json::Bool(self.all_passed()));
        obj
    }

    pub fn from_json(json: &Json) -> Result<Self> {
        let meta = ReportMeta::from_json(json.get("meta").ok_or_else(|| Error::Format {
            what: "report".to_string(),
            message: "missing key \"meta\"".to_string(),
        })?)?;
        let checks = match json.get("checks") {
            Some(Json::Arr(items)) => {
                items.iter().map(CheckRecord::from_json).collect::<Result<Vec<_>>>()?
            }
            _ => {
                return Err(Error::Format {
                    what: "report".to_string(),
                    message: "missing or non-array key \"checks\"".to_string(),
                })
            }
        };
        Ok(VerificationReport { meta, checks })
    }

    /// Fixed-width table rendering for terminal output.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "gamma: {}  surface: {}  quadrature: {}  seed: {}\n",
            self.meta.gamma, self.meta.surface, self.meta.quadrature_order, self.meta.seed
        ));
        let name_width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .chain(std::iter::once("check".len()))
            .max()
            .unwrap_or(5);
        out.push_str(&format!(
            "{:<name_width$}  {:>12}  {:>12}  {:>12}  {:>7}  result\n",
            "check", "max_pointwise", "integral", "tolerance", "samples"
        ));
        for c in &self.checks {
            out.push_str(&format!(
                "{:<name_width$}  {:>13.4e}  {:>12.4e}  {:>12.4e}  {:>7}  {}\n",
                c.name,
                c.max_pointwise,
                c.integral_residual,
                c.tolerance,
                c.samples,
                if c.passed { "pass" } else { "FAIL" }
            ));
            for note in &c.notes {
                out.push_str(&format!("{:name_width$}    note: {}\n", "", note));
            }
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.all_passed() { "pass" } else { "FAIL" }
        ));
        out
    }
}

/// Combines reports from several runs into one document, ordered by
/// (gamma, surface, seed) so the merge is independent of argument order.
pub fn merge_reports(mut reports: Vec<VerificationReport>) -> Json {
    reports.sort_by(|a, b| {
        (&a.meta.gamma, &a.meta.surface, a.meta.seed).cmp(&(
            &b.meta.gamma,
            &b.meta.surface,
            b.meta.seed,
        ))
    });
    let all_passed = reports.iter().all(VerificationReport::all_passed);
    let total: usize = reports.iter().map(|r| r.checks.len()).sum();
    let mut failed: Vec<String> = reports
        .iter()
        .flat_map(|r| {
            r.failed_names()
                .into_iter()
                .map(move |name| format!("{}/{}/{}", r.meta.gamma, r.meta.surface, name))
        })
        .collect();
    failed.sort();
    let mut obj = Json::obj();
    obj.push("runs", Json::Arr(reports.iter().map(VerificationReport::to_json).collect()));
    obj.push("total_checks", Json::Int(total as i64));
    obj.push("failed", Json::Arr(failed.into_iter().map(Json::Str).collect()));
    obj.push("all_passed", Json::Bool(all_passed));
    obj
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> VerificationReport {
        let mut report = VerificationReport::new(ReportMeta {
            gamma: "isotropic".to_string(),
            surface: "wulff".to_string(),
            quadrature_order: 32,
            seed: 7,
        });
        let mut b = CheckRecord::new("beta_check", "b = b");
        b.max_pointwise = 1e-9;
        b.tolerance = 1e-6;
        b.samples = 100;
        b.passed = true;
        b.note("fitted slope 2.01");
        let mut a = CheckRecord::new("alpha_check", "a = a");
        a.max_pointwise = 3e-4;
        a.tolerance = 1e-5;
        a.samples = 10;
        a.passed = false;
        report.push(b).unwrap();
        report.push(a).unwrap();
        report.finalize()
    }

    #[test]
    fn records_sort_by_name_and_roundtrip_through_json() {
        let report = sample_report();
        assert_eq!(report.checks[0].name, "alpha_check");
        assert!(!report.all_passed());
        assert_eq!(report.failed_names(), vec!["alpha_check"]);

        let encoded = report.to_json().encode();
        let back = VerificationReport::from_json(&Json::parse(&encoded).unwrap()).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.to_json().encode(), encoded);
    }

    #[test]
    fn duplicate_check_names_are_rejected() {
        let mut report = sample_report();
        let err = report.push(CheckRecord::new("alpha_check", "again")).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn text_table_lists_every_check_and_verdict() {
        let text = sample_report().to_text();
        assert!(text.contains("alpha_check"));
        assert!(text.contains("FAIL"));
        assert!(text.contains("pass"));
        assert!(text.contains("note: fitted slope 2.01"));
        assert!(text.ends_with("overall: FAIL\n"));
    }

    #[test]
    fn merge_is_order_independent() {
        let r1 = sample_report();
        let mut r2 = sample_report();
        r2.meta.gamma = "quadratic".to_string();
        let a = merge_reports(vec![r1.clone(), r2.clone()]).encode();
        let b = merge_reports(vec![r2, r1]).encode();
        assert_eq!(a, b);
        assert!(a.contains("total_checks"));
    }
}
