//! CSV and JSON trace files.
//!
//! CSV files start with `# key=value` lines: `format`, `schema_version`,
//! `created_unix` (the only line that varies between identical runs) and
//! `header`, the JSON-encoded run header. Floats are written in shortest
//! round-trip form, so loading a saved trace reproduces it bit for bit.
//!
//! RCTM columns, one row per iterate `x_k`; step columns describe the step
//! from `x_k` and are empty on the last row:
//!
//! | column | meaning |
//! |---|---|
//! | `k` | iteration |
//! | `F_gap` | `F(x_k) − F*`, empty without `F*` |
//! | `eta` | minimal subgradient norm at `x_k` |
//! | `step_norm` | `‖x_{k+1} − x_k‖` |
//! | `Fprime_norm` | `‖F′(x_{k+1})‖_*` |
//! | `cert_gradient_bound_margin` | margin of the step gradient bound |
//! | `cert_decrease_margin` | margin of the step decrease bound (`β = p` constant) |
//! | `oracle_calls` | tensor-oracle calls before `x_k` |
//! | `F_value` | `F(x_k)` |
//! | `inner_product`, `residual`, `inner_tolerance`, `subsolver_iterations`, `gradient_scale`, `value_before`, `value_after`, `cert_lipschitz`, `cert_regularization` | remaining step certificate fields |
//! | `calls_value`, `calls_gradient`, `calls_hessian`, `calls_third` | per-order evaluation counts |
//! | `x0`, `x1`, … | coordinates of `x_k` |
//!
//! Proximal traces add a `row` column: `outer` rows carry `a_k`, `delta_k`,
//! `g_norm`, `Fprime_norm`, `inner_iterations`, `t_k_bound`,
//! `oracle_calls` (cumulative inner steps), `F_value`, `F_gap`, `F_avg`,
//! `F_avg_gap`, `dist_to_minimizer`, `x*` and `xbar*`; `inner` rows carry
//! one inner step of outer iteration `k` with `phi_before`, `phi_after` and
//! the certificate columns above.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rctm_core::oracle::OracleCounts;
use rctm_core::prox::{InnerStep, OuterRecord, ProxHeader, ProxTrace};
use rctm_core::rctm::{IterationRecord, RunHeader};
use rctm_core::step::verify_step;
use rctm_core::{Inequality, RunTrace, StepCertificate};
use serde::{Deserialize, Serialize};

use crate::config::Format;
use crate::error::CliError;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "trace", rename_all = "lowercase")]
pub enum TraceFile {
    Rctm(RunTrace),
    Prox(ProxTrace),
}

#[derive(Serialize, Deserialize)]
struct JsonEnvelope {
    schema_version: u32,
    #[serde(flatten)]
    trace: TraceFile,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn to_json_string(trace: &TraceFile) -> Result<String, CliError> {
    let env = JsonEnvelope {
        schema_version: TRACE_SCHEMA_VERSION,
        trace: trace.clone(),
    };
    serde_json::to_string_pretty(&env).map_err(|e| bad(format!("json: {e}")))
}

pub fn from_json_str(text: &str) -> Result<TraceFile, CliError> {
    let env: JsonEnvelope = serde_json::from_str(text).map_err(|e| bad(format!("json: {e}")))?;
    if env.schema_version != TRACE_SCHEMA_VERSION {
        return Err(bad(format!("trace schema_version {} is not supported", env.schema_version)));
    }
    Ok(env.trace)
}

const CERT_COLUMNS: [&str; 9] = [
    "inner_product",
    "residual",
    "inner_tolerance",
    "subsolver_iterations",
    "gradient_scale",
    "value_before",
    "value_after",
    "cert_lipschitz",
    "cert_regularization",
];

fn cert_fields(c: Option<&StepCertificate>) -> Vec<String> {
    match c {
        Some(c) => vec![
            num(c.inner_product),
            num(c.residual),
            num(c.inner_tolerance),
            c.inner_iterations.to_string(),
            num(c.gradient_scale),
            num(c.value_before),
            num(c.value_after),
            num(c.lipschitz),
            num(c.regularization),
        ],
        None => vec![String::new(); CERT_COLUMNS.len()],
    }
}

fn margins(c: &StepCertificate) -> (Option<f64>, Option<f64>) {
    let v = verify_step(c, None);
    (
        v.worst_margin(Inequality::StepGradientBound),
        v.worst_margin(Inequality::StepDecreaseAtP)
            .or_else(|| v.worst_margin(Inequality::StepDecrease)),
    )
}

fn write_rows(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(&header).map_err(|e| bad(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| bad(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| bad(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| bad(e.to_string()))
}

fn preamble(kind: &str, created: Option<u64>, header_json: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# format={kind}");
    let _ = writeln!(s, "# schema_version={TRACE_SCHEMA_VERSION}");
    if let Some(t) = created {
        let _ = writeln!(s, "# created_unix={t}");
    }
    let _ = writeln!(s, "# header={header_json}");
    s
}

fn coordinate_columns(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn rctm_csv(t: &RunTrace, created: Option<u64>) -> Result<String, CliError> {
    let header_json = serde_json::to_string(&t.header).map_err(|e| bad(e.to_string()))?;
    let mut cols: Vec<String> = [
        "k",
        "F_gap",
        "eta",
        "step_norm",
        "Fprime_norm",
        "cert_gradient_bound_margin",
        "cert_decrease_margin",
        "oracle_calls",
        "F_value",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(CERT_COLUMNS.iter().map(|s| s.to_string()));
    cols.extend(
        ["calls_value", "calls_gradient", "calls_hessian", "calls_third"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols.extend(coordinate_columns("x", t.header.dim));
    let mut rows = Vec::with_capacity(t.records.len());
    for (k, r) in t.records.iter().enumerate() {
        let (m1, m2) = r.certificate.as_ref().map_or((None, None), margins);
        let mut row = vec![
            r.k.to_string(),
            opt(t.gap(k)),
            num(r.eta),
            opt(r.step_norm),
            opt(r.fprime_norm),
            opt(m1),
            opt(m2),
            r.oracle_calls.to_string(),
            num(r.f_value),
        ];
        row.extend(cert_fields(r.certificate.as_ref()));
        let c = r.oracle_counts;
        row.extend([c.value, c.gradient, c.hessian, c.third].iter().map(|v| v.to_string()));
        row.extend(r.x.iter().map(|&v| num(v)));
        rows.push(row);
    }
    Ok(preamble("rctm-trace", created, &header_json) + &write_rows(cols, rows)?)
}

fn prox_csv(t: &ProxTrace, created: Option<u64>) -> Result<String, CliError> {
    let header_json = serde_json::to_string(&t.header).map_err(|e| bad(e.to_string()))?;
    let n = t.header.dim;
    let mut cols: Vec<String> = [
        "row",
        "k",
        "t",
        "a_k",
        "delta_k",
        "F_value",
        "F_gap",
        "F_avg",
        "F_avg_gap",
        "g_norm",
        "Fprime_norm",
        "inner_iterations",
        "t_k_bound",
        "oracle_calls",
        "dist_to_minimizer",
        "phi_before",
        "phi_after",
        "step_norm",
        "cert_fprime_norm",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(CERT_COLUMNS.iter().map(|s| s.to_string()));
    cols.extend(coordinate_columns("x", n));
    cols.extend(coordinate_columns("xbar", n));
    let gap = |v: f64| t.header.optimal_value.map(|fs| v - fs);
    let mut rows = Vec::new();
    for r in &t.records {
        let mut row = vec![
            "outer".to_string(),
            r.k.to_string(),
            String::new(),
            num(r.coefficient),
            num(r.delta),
            num(r.f_value),
            opt(gap(r.f_value)),
            num(r.averaged_value),
            opt(gap(r.averaged_value)),
            num(r.g_norm),
            num(r.fprime_norm),
            r.inner_iterations.to_string(),
            r.inner_bound.map(|b| b.to_string()).unwrap_or_default(),
            r.cumulative_inner.to_string(),
            opt(r.distance_to_minimizer),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ];
        row.extend(cert_fields(None));
        row.extend(r.x.iter().map(|&v| num(v)));
        row.extend(r.averaged_point.iter().map(|&v| num(v)));
        rows.push(row);
        for (i, s) in r.inner_steps.iter().enumerate() {
            let mut row = vec![String::new(); 19];
            row[0] = "inner".into();
            row[1] = r.k.to_string();
            row[2] = i.to_string();
            row[15] = num(s.before);
            row[16] = num(s.after);
            row[17] = num(s.certificate.step_norm);
            row[18] = num(s.certificate.fprime_norm);
            row.extend(cert_fields(Some(&s.certificate)));
            row.extend(std::iter::repeat(String::new()).take(2 * n));
            rows.push(row);
        }
    }
    Ok(preamble("prox-trace", created, &header_json) + &write_rows(cols, rows)?)
}

/// CSV text; `created` is the `created_unix` header value, omitted when `None`.
pub fn to_csv_string(trace: &TraceFile, created: Option<u64>) -> Result<String, CliError> {
    match trace {
        TraceFile::Rctm(t) => rctm_csv(t, created),
        TraceFile::Prox(t) => prox_csv(t, created),
    }
}

struct Table {
    meta: HashMap<String, String>,
    index: HashMap<String, usize>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn parse(text: &str) -> Result<Self, CliError> {
        let mut meta = HashMap::new();
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else { break };
            if let Some((k, v)) = rest.trim_start().split_once('=') {
                meta.insert(k.trim().to_string(), v.to_string());
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| bad(format!("csv: {e}")))?.clone();
        let index = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.to_string(), i))
            .collect();
        let rows = rdr
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("csv: {e}")))?;
        Ok(Self { meta, index, rows })
    }

    fn cell<'a>(&self, row: &'a csv::StringRecord, col: &str) -> Result<&'a str, CliError> {
        let i = *self
            .index
            .get(col)
            .ok_or_else(|| bad(format!("csv: missing column {col}")))?;
        Ok(row.get(i).unwrap_or(""))
    }

    fn opt_f64(&self, row: &csv::StringRecord, col: &str) -> Result<Option<f64>, CliError> {
        let s = self.cell(row, col)?;
        if s.is_empty() {
            return Ok(None);
        }
        s.parse()
            .map(Some)
            .map_err(|_| bad(format!("csv: column {col}: {s:?} is not a number")))
    }

    fn f64(&self, row: &csv::StringRecord, col: &str) -> Result<f64, CliError> {
        self.opt_f64(row, col)?
            .ok_or_else(|| bad(format!("csv: column {col} is empty")))
    }

    fn usize(&self, row: &csv::StringRecord, col: &str) -> Result<usize, CliError> {
        let s = self.cell(row, col)?;
        s.parse()
            .map_err(|_| bad(format!("csv: column {col}: {s:?} is not an integer")))
    }

    fn opt_usize(&self, row: &csv::StringRecord, col: &str) -> Result<Option<usize>, CliError> {
        if self.cell(row, col)?.is_empty() {
            Ok(None)
        } else {
            self.usize(row, col).map(Some)
        }
    }

    fn vector(&self, row: &csv::StringRecord, prefix: &str, n: usize) -> Result<Vec<f64>, CliError> {
        (0..n).map(|i| self.f64(row, &format!("{prefix}{i}"))).collect()
    }

    fn certificate(
        &self,
        row: &csv::StringRecord,
        degree: usize,
        step_norm: f64,
        fprime_norm: f64,
    ) -> Result<StepCertificate, CliError> {
        Ok(StepCertificate {
            degree,
            lipschitz: self.f64(row, "cert_lipschitz")?,
            regularization: self.f64(row, "cert_regularization")?,
            step_norm,
            fprime_norm,
            inner_product: self.f64(row, "inner_product")?,
            residual: self.f64(row, "residual")?,
            inner_tolerance: self.f64(row, "inner_tolerance")?,
            inner_iterations: self.usize(row, "subsolver_iterations")?,
            value_before: self.f64(row, "value_before")?,
            value_after: self.f64(row, "value_after")?,
            gradient_scale: self.f64(row, "gradient_scale")?,
        })
    }

    fn header<T: for<'de> Deserialize<'de>>(&self) -> Result<T, CliError> {
        let h = self
            .meta
            .get("header")
            .ok_or_else(|| bad("csv: missing '# header=' line"))?;
        serde_json::from_str(h).map_err(|e| bad(format!("csv header: {e}")))
    }
}

fn check_gap(
    k: usize,
    col: &str,
    stored: Option<f64>,
    value: f64,
    fstar: Option<f64>,
) -> Result<(), CliError> {
    if let (Some(g), Some(fs)) = (stored, fstar) {
        let expect = value - fs;
        if (g - expect).abs() > 1e-12 * value.abs().max(1.0) {
            return Err(bad(format!(
                "csv: row {k}: {col} = {g:e} disagrees with F_value − F* = {expect:e}"
            )));
        }
    }
    Ok(())
}

fn rctm_from_table(t: &Table) -> Result<RunTrace, CliError> {
    let header: RunHeader = t.header()?;
    let mut records = Vec::with_capacity(t.rows.len());
    for row in &t.rows {
        let k = t.usize(row, "k")?;
        let f_value = t.f64(row, "F_value")?;
        check_gap(k, "F_gap", t.opt_f64(row, "F_gap")?, f_value, header.optimal_value)?;
        let step_norm = t.opt_f64(row, "step_norm")?;
        let fprime_norm = t.opt_f64(row, "Fprime_norm")?;
        let certificate = match (step_norm, fprime_norm) {
            (Some(s), Some(g)) => Some(t.certificate(row, header.degree, s, g)?),
            _ => None,
        };
        records.push(IterationRecord {
            k,
            x: t.vector(row, "x", header.dim)?,
            f_value,
            eta: t.f64(row, "eta")?,
            step_norm,
            fprime_norm,
            certificate,
            oracle_calls: t.usize(row, "oracle_calls")?,
            oracle_counts: OracleCounts {
                value: t.usize(row, "calls_value")? as u64,
                gradient: t.usize(row, "calls_gradient")? as u64,
                hessian: t.usize(row, "calls_hessian")? as u64,
                third: t.usize(row, "calls_third")? as u64,
            },
        });
    }
    if records.is_empty() {
        return Err(bad("csv: trace has no rows"));
    }
    Ok(RunTrace { header, records })
}

fn prox_from_table(t: &Table) -> Result<ProxTrace, CliError> {
    let header: ProxHeader = t.header()?;
    let n = header.dim;
    let mut records: Vec<OuterRecord> = Vec::new();
    for row in &t.rows {
        let k = t.usize(row, "k")?;
        match t.cell(row, "row")? {
            "outer" => {
                let f_value = t.f64(row, "F_value")?;
                check_gap(k, "F_gap", t.opt_f64(row, "F_gap")?, f_value, header.optimal_value)?;
                let averaged_value = t.f64(row, "F_avg")?;
                check_gap(k, "F_avg_gap", t.opt_f64(row, "F_avg_gap")?, averaged_value, header.optimal_value)?;
                records.push(OuterRecord {
                    k,
                    coefficient: t.f64(row, "a_k")?,
                    delta: t.f64(row, "delta_k")?,
                    x: t.vector(row, "x", n)?,
                    f_value,
                    g_norm: t.f64(row, "g_norm")?,
                    fprime_norm: t.f64(row, "Fprime_norm")?,
                    inner_iterations: t.usize(row, "inner_iterations")?,
                    inner_bound: t.opt_usize(row, "t_k_bound")?,
                    averaged_value,
                    averaged_point: t.vector(row, "xbar", n)?,
                    distance_to_minimizer: t.opt_f64(row, "dist_to_minimizer")?,
                    cumulative_inner: t.usize(row, "oracle_calls")?,
                    inner_steps: Vec::new(),
                });
            }
            "inner" => {
                let outer = records
                    .last_mut()
                    .filter(|r| r.k == k)
                    .ok_or_else(|| bad(format!("csv: inner row for k = {k} precedes its outer row")))?;
                let certificate = t.certificate(
                    row,
                    header.degree,
                    t.f64(row, "step_norm")?,
                    t.f64(row, "cert_fprime_norm")?,
                )?;
                outer.inner_steps.push(InnerStep {
                    before: t.f64(row, "phi_before")?,
                    after: t.f64(row, "phi_after")?,
                    certificate,
                });
            }
            other => return Err(bad(format!("csv: unknown row kind {other:?}"))),
        }
    }
    if records.is_empty() {
        return Err(bad("csv: trace has no rows"));
    }
    Ok(ProxTrace { header, records })
}

pub fn from_csv_str(text: &str) -> Result<TraceFile, CliError> {
    let table = Table::parse(text)?;
    if let Some(v) = table.meta.get("schema_version") {
        if v.trim() != TRACE_SCHEMA_VERSION.to_string() {
            return Err(bad(format!("trace schema_version {v} is not supported")));
        }
    }
    match table.meta.get("format").map(|s| s.trim()) {
        Some("rctm-trace") => Ok(TraceFile::Rctm(rctm_from_table(&table)?)),
        Some("prox-trace") => Ok(TraceFile::Prox(prox_from_table(&table)?)),
        Some(other) => Err(bad(format!("csv: unknown format {other:?}"))),
        None => Err(bad("csv: missing '# format=' line")),
    }
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub fn write_trace(path: &Path, trace: &TraceFile, format: Format) -> Result<(), CliError> {
    let text = match format {
        Format::Csv => to_csv_string(trace, Some(unix_now()))?,
        Format::Json => to_json_string(trace)?,
    };
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Reads either format; JSON is recognized by a leading `{`.
pub fn read_trace(path: &Path) -> Result<TraceFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        from_json_str(&text)
    } else {
        from_csv_str(&text)
    }
}
