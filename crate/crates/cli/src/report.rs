use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use gpa_core::analysis::linf_db;
use gpa_core::{Decibels, Image, OrderEstimate};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::{ReportFormat, Spatial};
use crate::CliError;

/// Every flag that shaped a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub height: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spatial: Option<Spatial>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub w0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub half_range: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub center: Option<f64>,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub allow_small_sigma_r: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    #[serde(rename = "N0")]
    pub n0: usize,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub newton_trace: Vec<f64>,
}

impl OrderReport {
    pub fn explicit(n0: usize) -> Self {
        OrderReport {
            n0,
            method: "explicit".into(),
            epsilon: None,
            lambda: None,
            newton_trace: Vec::new(),
        }
    }
}

impl From<&OrderEstimate> for OrderReport {
    fn from(e: &OrderEstimate) -> Self {
        let method = serde_json::to_value(e.method)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        OrderReport {
            n0: e.n0,
            method,
            epsilon: e.epsilon,
            lambda: e.lambda,
            newton_trace: e.newton_trace.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Errors {
    pub linf: f64,
    pub linf_db: Decibels,
    pub mse_db: Decibels,
}

impl Errors {
    pub fn between(a: &Image, b: &Image) -> Result<Self, CliError> {
        let linf = gpa_core::linf_error(a, b)?;
        Ok(Errors {
            linf,
            linf_db: Decibels(linf_db(linf)),
            mse_db: Decibels(gpa_core::mse_db(a, b)?),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kernel_sup: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kernel_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sup_within_bound: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub accuracy_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub spatial: Spatial,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub window: Option<usize>,
    #[serde(rename = "N")]
    pub n: usize,
    pub filterings: usize,
    pub median_ms: f64,
    pub samples_ms: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub params: Params,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub order: Option<OrderReport>,
    /// Order estimates by every method, for the `order` command.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub methods: Vec<OrderEstimate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spatial_filterings: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub errors: Option<Errors>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bounds: Option<Bounds>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub bench: Vec<BenchRow>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub runtime_ms: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(params: Params) -> Self {
        Report {
            params,
            ..Report::default()
        }
    }

    pub fn render(&self, format: ReportFormat) -> Result<String, CliError> {
        let value = serde_json::to_value(self).map_err(|e| CliError::Report(e.to_string()))?;
        match format {
            ReportFormat::Json => serde_json::to_string_pretty(&value)
                .map(|s| s + "\n")
                .map_err(|e| CliError::Report(e.to_string())),
            ReportFormat::Csv => to_csv(&value),
        }
    }

    /// Writes to `path`, or to standard output when no path is given.
    pub fn emit(&self, path: Option<&Path>, format: ReportFormat) -> Result<(), CliError> {
        let text = self.render(format)?;
        match path {
            Some(p) => fs::write(p, text).map_err(|e| CliError::Io(p.to_path_buf(), e)),
            None => std::io::stdout()
                .lock()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io("<stdout>".into(), e)),
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_owned()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::String(s) => out.push((prefix.to_owned(), s.clone())),
        Value::Null => out.push((prefix.to_owned(), String::new())),
        other => out.push((prefix.to_owned(), other.to_string())),
    }
}

/// One header row of dotted keys and one row of values.
fn to_csv(value: &Value) -> Result<String, CliError> {
    let mut cells = Vec::new();
    flatten("", value, &mut cells);
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Report(e.to_string());
    w.write_record(cells.iter().map(|(k, _)| k)).map_err(err)?;
    w.write_record(cells.iter().map(|(_, v)| v)).map_err(err)?;
    let bytes = w.into_inner().map_err(|e| CliError::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Report(e.to_string()))
}
