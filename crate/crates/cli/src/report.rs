//! Result emission: the plan-report JSON document, waypoint CSV, and the
//! benchmark report (per-trial CSV plus a JSON file carrying records and
//! aggregate quartiles).
//!
//! Column orders and field names are frozen; see `docs/formats.md`. The
//! benchmark CSV deliberately omits `runtime_ms` so reruns of the same
//! seeds are byte-identical; timing lives in the JSON report only.

use serde::{Deserialize, Serialize};
use surfplan_core::planner::{CostBreakdown, PlanResult, Waypoint};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Malformed(String),
}

// ---------------------------------------------------------------------------
// Plan report
// ---------------------------------------------------------------------------

/// The JSON document written by `surfplan plan`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanReport {
    pub succeeded: bool,
    /// Present exactly when `succeeded` is false.
    pub failure_reason: Option<String>,
    pub alpha: f64,
    pub seed: u64,
    pub iterations: usize,
    pub iterations_used: usize,
    pub tree_size: usize,
    pub cost: CostBreakdown,
    pub waypoints: Vec<Waypoint>,
}

impl PlanReport {
    pub fn from_result(result: &PlanResult, alpha: f64, seed: u64, iterations: usize) -> Self {
        PlanReport {
            succeeded: result.succeeded,
            failure_reason: (!result.succeeded)
                .then(|| "no tree node reached the goal tolerance within the iteration budget".into()),
            alpha,
            seed,
            iterations,
            iterations_used: result.iterations_used,
            tree_size: result.tree_size,
            cost: result.cost,
            waypoints: result.waypoints.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Waypoint CSV: `x,y,z,w,q0..q{n-1}`, one row per waypoint.
pub fn write_waypoint_csv(waypoints: &[Waypoint]) -> String {
    let dof = waypoints.first().map_or(0, |w| w.config.len());
    let mut out = String::from("x,y,z,w");
    for i in 0..dof {
        out.push_str(&format!(",q{i}"));
    }
    out.push('\n');
    for w in waypoints {
        out.push_str(&format!("{},{},{},{}", w.position[0], w.position[1], w.position[2], w.w));
        for q in &w.config.0 {
            out.push_str(&format!(",{q}"));
        }
        out.push('\n');
    }
    out
}

/// Reads back [`write_waypoint_csv`] output.
pub fn parse_waypoint_csv(text: &str) -> Result<Vec<Waypoint>, ReportError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.len() < 4 || &headers[0] != "x" || &headers[3] != "w" {
        return Err(ReportError::Malformed("waypoint csv header".into()));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let num = |i: usize| -> Result<f64, ReportError> {
            record
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| ReportError::Malformed(format!("bad number in column {i}")))
        };
        let config: Vec<f64> = (4..record.len()).map(num).collect::<Result<_, _>>()?;
        out.push(Waypoint {
            position: [num(0)?, num(1)?, num(2)?],
            config: surfplan_core::kinematics::JointConfig(config),
            w: num(3)?,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Benchmark report
// ---------------------------------------------------------------------------

/// One planning trial of the benchmark protocol.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrialRecord {
    pub object: String,
    pub seed: u64,
    pub alpha: f64,
    pub path_length: Option<f64>,
    /// Mean waypoint manipulability of the path.
    pub mean_w: Option<f64>,
    /// Minimum waypoint manipulability of the path.
    pub min_w: Option<f64>,
    pub c_total: Option<f64>,
    pub tree_size: usize,
    /// Wall-clock planning time. JSON only; excluded from the CSV to keep
    /// it deterministic.
    pub runtime_ms: f64,
    pub succeeded: bool,
}

impl TrialRecord {
    pub fn from_result(
        object: &str,
        seed: u64,
        alpha: f64,
        result: &PlanResult,
        runtime_ms: f64,
    ) -> Self {
        let stats = result.succeeded.then(|| path_stats(&result.waypoints));
        TrialRecord {
            object: object.to_string(),
            seed,
            alpha,
            path_length: result.succeeded.then_some(result.cost.c_dist),
            mean_w: stats.map(|s| s.0),
            min_w: stats.map(|s| s.1),
            c_total: result.succeeded.then_some(result.cost.c_total),
            tree_size: result.tree_size,
            runtime_ms,
            succeeded: result.succeeded,
        }
    }
}

/// `(mean_w, min_w)` over the path waypoints.
pub fn path_stats(waypoints: &[Waypoint]) -> (f64, f64) {
    let n = waypoints.len().max(1) as f64;
    let mean = waypoints.iter().map(|w| w.w).sum::<f64>() / n;
    let min = waypoints.iter().map(|w| w.w).fold(f64::INFINITY, f64::min);
    (mean, min)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Linear-interpolation quantile (type 7) of an unsorted sample.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

pub fn quartiles(values: &[f64]) -> Quartiles {
    Quartiles {
        q1: quantile(values, 0.25),
        median: quantile(values, 0.5),
        q3: quantile(values, 0.75),
    }
}

/// Per-(object, alpha) aggregate. Path statistics summarise the succeeded
/// trials only; runtime covers all trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateRow {
    pub object: String,
    pub alpha: f64,
    pub trials: usize,
    pub succeeded: usize,
    pub path_length: Option<Quartiles>,
    pub mean_w: Option<Quartiles>,
    pub min_w: Option<Quartiles>,
    pub c_total: Option<Quartiles>,
    pub runtime_ms: Quartiles,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
}

impl BenchmarkReport {
    /// Sorts records by (object, alpha, seed) and computes the aggregates.
    pub fn from_records(mut records: Vec<TrialRecord>) -> Self {
        records.sort_by(|a, b| {
            a.object
                .cmp(&b.object)
                .then(a.alpha.total_cmp(&b.alpha))
                .then(a.seed.cmp(&b.seed))
        });
        let mut aggregates = Vec::new();
        let mut i = 0;
        while i < records.len() {
            let j = records[i..]
                .iter()
                .position(|r| r.object != records[i].object || r.alpha != records[i].alpha)
                .map_or(records.len(), |off| i + off);
            let group = &records[i..j];
            let of = |f: fn(&TrialRecord) -> Option<f64>| -> Option<Quartiles> {
                let vals: Vec<f64> = group.iter().filter_map(f).collect();
                (!vals.is_empty()).then(|| quartiles(&vals))
            };
            aggregates.push(AggregateRow {
                object: records[i].object.clone(),
                alpha: records[i].alpha,
                trials: group.len(),
                succeeded: group.iter().filter(|r| r.succeeded).count(),
                path_length: of(|r| r.path_length),
                mean_w: of(|r| r.mean_w),
                min_w: of(|r| r.min_w),
                c_total: of(|r| r.c_total),
                runtime_ms: quartiles(&group.iter().map(|r| r.runtime_ms).collect::<Vec<_>>()),
            });
            i = j;
        }
        BenchmarkReport {
            records,
            aggregates,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub const BENCHMARK_CSV_HEADER: &str =
    "object,seed,alpha,path_length,mean_w,min_w,c_total,tree_size,succeeded";

/// Deterministic per-trial CSV (no runtime column).
pub fn write_benchmark_csv(report: &BenchmarkReport) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from(BENCHMARK_CSV_HEADER);
    out.push('\n');
    for r in &report.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.object,
            r.seed,
            r.alpha,
            opt(r.path_length),
            opt(r.mean_w),
            opt(r.min_w),
            opt(r.c_total),
            r.tree_size,
            r.succeeded
        ));
    }
    out
}

/// Reads back [`write_benchmark_csv`] output; `runtime_ms` is not in the
/// CSV and comes back as zero.
pub fn parse_benchmark_csv(text: &str) -> Result<Vec<TrialRecord>, ReportError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let expect: Vec<&str> = BENCHMARK_CSV_HEADER.split(',').collect();
    let headers = reader.headers()?;
    if headers.iter().collect::<Vec<_>>() != expect {
        return Err(ReportError::Malformed(format!(
            "benchmark csv header `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or_default();
        let opt = |i: usize| -> Result<Option<f64>, ReportError> {
            let s = get(i);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| ReportError::Malformed(format!("bad number `{s}`")))
        };
        out.push(TrialRecord {
            object: get(0).to_string(),
            seed: get(1)
                .parse()
                .map_err(|_| ReportError::Malformed("bad seed".into()))?,
            alpha: get(2)
                .parse()
                .map_err(|_| ReportError::Malformed("bad alpha".into()))?,
            path_length: opt(3)?,
            mean_w: opt(4)?,
            min_w: opt(5)?,
            c_total: opt(6)?,
            tree_size: get(7)
                .parse()
                .map_err(|_| ReportError::Malformed("bad tree_size".into()))?,
            runtime_ms: 0.0,
            succeeded: get(8)
                .parse()
                .map_err(|_| ReportError::Malformed("bad succeeded".into()))?,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Structural schema validation (the subset of JSON Schema the shipped
// schema files use: type, required, properties, items, additionalProperties)
// ---------------------------------------------------------------------------

/// Validates `value` against a JSON-Schema-subset document. Returns the
/// first violation as `path: message`.
pub fn validate_schema(value: &serde_json::Value, schema: &serde_json::Value) -> Result<(), String> {
    validate_at(value, schema, "$")
}

fn validate_at(
    value: &serde_json::Value,
    schema: &serde_json::Value,
    path: &str,
) -> Result<(), String> {
    use serde_json::Value;
    let fail = |m: String| Err(format!("{path}: {m}"));

    if let Some(types) = schema.get("type") {
        let allowed: Vec<&str> = match types {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(|v| v.as_str()).collect(),
            _ => vec![],
        };
        let actual = match value {
            Value::Null => "null",
            Value::Bool(_) => "boolean",
            Value::Number(n) => {
                if n.is_u64() || n.is_i64() {
                    "integer"
                } else {
                    "number"
                }
            }
            Value::String(_) => "string",
            Value::Array(_) => "array",
            Value::Object(_) => "object",
        };
        // JSON Schema treats integers as numbers too.
        let ok = allowed.contains(&actual) || (actual == "integer" && allowed.contains(&"number"));
        if !ok {
            return fail(format!("expected type {allowed:?}, got {actual}"));
        }
    }
    if let Some(obj) = value.as_object() {
        if let Some(required) = schema.get("required").and_then(|r| r.as_array()) {
            for key in required.iter().filter_map(|k| k.as_str()) {
                if !obj.contains_key(key) {
                    return fail(format!("missing required field `{key}`"));
                }
            }
        }
        let props = schema.get("properties").and_then(|p| p.as_object());
        if let Some(props) = props {
            for (key, sub) in obj {
                match props.get(key) {
                    Some(subschema) => {
                        validate_at(sub, subschema, &format!("{path}.{key}"))?;
                    }
                    None => {
                        if schema.get("additionalProperties") == Some(&Value::Bool(false)) {
                            return fail(format!("unexpected field `{key}`"));
                        }
                    }
                }
            }
        }
    }
    if let (Some(arr), Some(items)) = (value.as_array(), schema.get("items")) {
        for (i, item) in arr.iter().enumerate() {
            validate_at(item, items, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}
