//! Batch front-end: TOML configuration, bundled presets, result tables and
//! run manifests.
//!
//! A configuration is a flat set of keys, optionally followed by `[[grid]]`
//! sections. Each section inherits the top-level keys and overrides any of
//! them; the grid is the concatenation of every section's Cartesian product
//! over the list-valued axes `N`, `p` and `tau`. Without sections the
//! top-level keys alone form the grid.
//!
//! ```toml
//! N = [2, 3]
//! p = [0, 2]
//! tau = 40.0
//! Th = 0.5
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::agp::AgpEvaluation;
use crate::cycle::{
    CycleConfig, CycleReport, GridPoint, SweepOutcome, DEFAULT_CONVERGENCE_TOL,
    DEFAULT_STEPS_PER_UNIT_TIME,
};
use crate::error::{Error, Result};
use crate::model::{n_pairs, EndpointParams, UniformEndpoints};

/// Scalar keys accepted at the top level and inside `[[grid]]` sections.
const SCALAR_KEYS: &[&str] = &[
    "N",
    "p",
    "tau",
    "tau1",
    "tau2",
    "tau3",
    "tau4",
    "Tc",
    "Th",
    "nu",
    "h_i",
    "b_i",
    "J_i",
    "h_f",
    "b_f",
    "J_f",
    "steps_per_unit_time",
    "convergence_tol",
    "max_doublings",
    "agp",
    "agp_table_tol",
    "agp_table_max_nodes",
    "clip_p",
];

/// Result table columns, in output order.
pub const CSV_COLUMNS: [&str; 23] = [
    "N",
    "p",
    "tau1",
    "tau3",
    "tau2",
    "tau4",
    "Tc",
    "Th",
    "Qc",
    "Qh",
    "W1",
    "W3",
    "W0_total",
    "WCD_total",
    "J",
    "cop",
    "cop_defined",
    "cop_carnot",
    "Qc_adiabatic",
    "cost1",
    "cost3",
    "steps",
    "converged",
];

/// Bundled parameter grids, selectable by name from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Fig2, Preset::Fig3, Preset::Fig4, Preset::Fig5];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            Preset::Fig2 => include_str!("../presets/fig2.toml"),
            Preset::Fig3 => include_str!("../presets/fig3.toml"),
            Preset::Fig4 => include_str!("../presets/fig4.toml"),
            Preset::Fig5 => include_str!("../presets/fig5.toml"),
        }
    }

    pub fn load(self) -> Result<Vec<CycleConfig>> {
        load_config_str(self.source())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}`")))
    }
}

/// Output table format.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format `{s}`"))),
        }
    }
}

impl Format {
    pub fn file_name(self) -> &'static str {
        match self {
            Format::Csv => "results.csv",
            Format::Json => "results.json",
        }
    }
}

/// Read and expand a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<Vec<CycleConfig>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_config_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Expand a configuration document.
pub fn load_config_str(text: &str) -> Result<Vec<CycleConfig>> {
    expand(parse_document(text)?)
}

/// Overlay the top-level keys of `overlay` onto `base`. A `[[grid]]` list in
/// the overlay replaces the base's.
pub fn merge_documents(base: &str, overlay: &str) -> Result<Vec<CycleConfig>> {
    let mut doc = parse_document(base)?;
    for (k, v) in parse_document(overlay)? {
        doc.insert(k, v);
    }
    expand(doc)
}

fn parse_document(text: &str) -> Result<Table> {
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string().trim_end().to_owned()))?;
    for (k, v) in &doc {
        if k == "grid" {
            let Value::Array(sections) = v else {
                return Err(Error::Config("`grid` must be an array of tables ([[grid]])".into()));
            };
            for (i, s) in sections.iter().enumerate() {
                let Value::Table(t) = s else {
                    return Err(Error::Config(format!("grid section {} is not a table", i + 1)));
                };
                check_keys(t, &format!("grid section {}", i + 1))?;
            }
        } else {
            check_keys(&Table::from_iter([(k.clone(), v.clone())]), "top level")?;
        }
    }
    Ok(doc)
}

fn check_keys(t: &Table, ctx: &str) -> Result<()> {
    match t.keys().find(|k| !SCALAR_KEYS.contains(&k.as_str())) {
        Some(k) => Err(Error::Config(format!("unknown key `{k}` at {ctx}"))),
        None => Ok(()),
    }
}

fn expand(mut doc: Table) -> Result<Vec<CycleConfig>> {
    let has_grid = doc.contains_key("grid");
    let sections = match doc.remove("grid") {
        Some(Value::Array(a)) => a
            .into_iter()
            .map(|s| match s {
                Value::Table(t) => t,
                _ => unreachable!("validated in parse_document"),
            })
            .collect(),
        _ => vec![Table::new()],
    };
    let mut out = Vec::new();
    for (i, section) in sections.into_iter().enumerate() {
        let mut merged = doc.clone();
        merged.extend(section);
        let ctx = if has_grid {
            format!("grid section {}", i + 1)
        } else {
            "top level".to_owned()
        };
        out.extend(expand_section(&merged).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
            Error::Domain(m) => Error::Config(format!("{ctx}: {m}")),
            other => other,
        })?);
    }
    Ok(out)
}

fn number(t: &Table, key: &str) -> Result<Option<f64>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Float(x)) => Ok(Some(*x)),
        Some(Value::Integer(x)) => Ok(Some(*x as f64)),
        Some(v) => Err(Error::Config(format!("`{key}` must be a number, got {}", v.type_str()))),
    }
}

fn numbers(t: &Table, key: &str) -> Result<Option<Vec<f64>>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| match v {
                Value::Float(x) => Ok(*x),
                Value::Integer(x) => Ok(*x as f64),
                _ => Err(Error::Config(format!("`{key}` entries must be numbers"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some),
        Some(_) => number(t, key).map(|x| x.map(|x| vec![x])),
    }
}

fn integers(t: &Table, key: &str) -> Result<Option<Vec<usize>>> {
    let conv = |v: &Value| match v {
        Value::Integer(x) if *x >= 0 => Ok(*x as usize),
        _ => Err(Error::Config(format!("`{key}` must be a non-negative integer or a list of them"))),
    };
    match t.get(key) {
        None => Ok(None),
        Some(Value::Array(a)) => a.iter().map(conv).collect::<Result<Vec<_>>>().map(Some),
        Some(v) => conv(v).map(|x| Some(vec![x])),
    }
}

/// Scalar broadcasts to `len` entries; an array must have exactly `len`.
fn field(t: &Table, key: &str, default: f64, len: usize) -> Result<Vec<f64>> {
    match t.get(key) {
        Some(Value::Array(_)) => {
            let v = numbers(t, key)?.unwrap_or_default();
            if v.len() != len {
                return Err(Error::Config(format!(
                    "`{key}` has {} entries, expected {len}",
                    v.len()
                )));
            }
            Ok(v)
        }
        _ => Ok(vec![number(t, key)?.unwrap_or(default); len]),
    }
}

fn expand_section(t: &Table) -> Result<Vec<CycleConfig>> {
    let ns = integers(t, "N")?;
    let ps = integers(t, "p")?;
    let missing: Vec<&str> = [("N", ns.is_none()), ("p", ps.is_none())]
        .into_iter()
        .filter_map(|(k, m)| m.then_some(k))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Config(format!("missing required keys: {}", missing.join(", "))));
    }
    let (ns, ps) = (ns.unwrap_or_default(), ps.unwrap_or_default());
    let taus = numbers(t, "tau")?;
    let (tau1, tau3) = (number(t, "tau1")?, number(t, "tau3")?);
    let taus = match (taus, tau1.or(tau3)) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("`tau` cannot be combined with `tau1`/`tau3`".into()))
        }
        (Some(v), None) => v.into_iter().map(|x| (x, x)).collect(),
        (None, _) => vec![(tau1.unwrap_or(1.0), tau3.unwrap_or(1.0))],
    };
    let clip_p = match t.get("clip_p") {
        None => false,
        Some(Value::Boolean(b)) => *b,
        Some(_) => return Err(Error::Config("`clip_p` must be a boolean".into())),
    };
    let convergence_tol = match t.get("convergence_tol") {
        None => Some(DEFAULT_CONVERGENCE_TOL),
        Some(Value::Boolean(false)) => None,
        Some(_) => match number(t, "convergence_tol")? {
            Some(x) if x > 0.0 => Some(x),
            _ => None,
        },
    };
    let max_doublings = match integers(t, "max_doublings")?.as_deref() {
        None => 3,
        Some([x]) => *x as u32,
        Some(_) => return Err(Error::Config("`max_doublings` must be a single integer".into())),
    };
    let agp = match t.get("agp") {
        None => AgpEvaluation::default(),
        Some(Value::String(s)) if s == "table" => {
            let AgpEvaluation::Table { tol, max_nodes } = AgpEvaluation::default() else {
                unreachable!()
            };
            let max_nodes = match integers(t, "agp_table_max_nodes")?.as_deref() {
                Some([x]) => *x,
                Some(_) => return Err(Error::Config("`agp_table_max_nodes` must be an integer".into())),
                None => max_nodes,
            };
            AgpEvaluation::Table {
                tol: number(t, "agp_table_tol")?.unwrap_or(tol),
                max_nodes,
            }
        }
        Some(Value::String(s)) if s == "exact" => AgpEvaluation::Exact,
        Some(_) => return Err(Error::Config("`agp` must be \"table\" or \"exact\"".into())),
    };
    if matches!(agp, AgpEvaluation::Exact)
        && (t.contains_key("agp_table_tol") || t.contains_key("agp_table_max_nodes"))
    {
        return Err(Error::Config("table settings given with agp = \"exact\"".into()));
    }
    let r = UniformEndpoints::REFERENCE;
    let mut out = Vec::new();
    for &n in &ns {
        let m = n_pairs(n);
        let params = EndpointParams::new(
            n,
            field(t, "h_i", r.h_i, n)?,
            field(t, "b_i", r.b_i, n)?,
            field(t, "J_i", r.j_i, m)?,
            field(t, "h_f", r.h_f, n)?,
            field(t, "b_f", r.b_f, n)?,
            field(t, "J_f", r.j_f, m)?,
        )?;
        for &p in &ps {
            let p = if clip_p { p.min(n) } else { p };
            for &(tau1, tau3) in &taus {
                let cfg = CycleConfig {
                    params: params.clone(),
                    tc: number(t, "Tc")?.unwrap_or(0.2),
                    th: number(t, "Th")?.unwrap_or(0.4),
                    tau1,
                    tau2: number(t, "tau2")?.unwrap_or(0.1),
                    tau3,
                    tau4: number(t, "tau4")?.unwrap_or(0.1),
                    p,
                    nu: number(t, "nu")?.unwrap_or(0.01),
                    steps_per_unit_time: number(t, "steps_per_unit_time")?
                        .unwrap_or(DEFAULT_STEPS_PER_UNIT_TIME),
                    convergence_tol,
                    max_doublings,
                    agp,
                };
                cfg.validate()?;
                out.push(cfg);
            }
        }
    }
    Ok(out)
}

/// SHA-256 of the canonical JSON form of a resolved grid.
pub fn config_digest(grid: &[CycleConfig]) -> String {
    let json = serde_json::to_vec(grid).expect("config serializes");
    hex::encode(Sha256::digest(json))
}

/// One row of the result table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub p: usize,
    pub tau1: f64,
    pub tau3: f64,
    pub tau2: f64,
    pub tau4: f64,
    #[serde(rename = "Tc")]
    pub tc: f64,
    #[serde(rename = "Th")]
    pub th: f64,
    #[serde(rename = "Qc")]
    pub qc: f64,
    #[serde(rename = "Qh")]
    pub qh: f64,
    #[serde(rename = "W1")]
    pub w1: f64,
    #[serde(rename = "W3")]
    pub w3: f64,
    #[serde(rename = "W0_total")]
    pub w0_total: f64,
    #[serde(rename = "WCD_total")]
    pub wcd_total: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub cop: Option<f64>,
    pub cop_defined: bool,
    pub cop_carnot: f64,
    #[serde(rename = "Qc_adiabatic")]
    pub qc_adiabatic: f64,
    pub cost1: f64,
    pub cost3: f64,
    pub steps: usize,
    pub converged: bool,
}

impl From<&CycleReport> for ResultRow {
    fn from(r: &CycleReport) -> Self {
        Self {
            n: r.n,
            p: r.p,
            tau1: r.tau1,
            tau3: r.tau3,
            tau2: r.tau2,
            tau4: r.tau4,
            tc: r.tc,
            th: r.th,
            qc: r.qc,
            qh: r.qh,
            w1: r.w1,
            w3: r.w3,
            w0_total: r.w0_total,
            wcd_total: r.wcd_total,
            j: r.j,
            cop: r.cop,
            cop_defined: r.cop.is_some(),
            cop_carnot: r.cop_carnot,
            qc_adiabatic: r.qc_adiabatic,
            cost1: r.cost1,
            cost3: r.cost3,
            steps: r.steps,
            converged: r.converged,
        }
    }
}

/// Shortest round-trip decimal; exponent form for very small or large values.
fn num(x: f64) -> String {
    format!("{x:?}")
}

impl ResultRow {
    fn csv_line(&self) -> String {
        let cop = self.cop.map(num).unwrap_or_default();
        [
            self.n.to_string(),
            self.p.to_string(),
            num(self.tau1),
            num(self.tau3),
            num(self.tau2),
            num(self.tau4),
            num(self.tc),
            num(self.th),
            num(self.qc),
            num(self.qh),
            num(self.w1),
            num(self.w3),
            num(self.w0_total),
            num(self.wcd_total),
            num(self.j),
            cop,
            self.cop_defined.to_string(),
            num(self.cop_carnot),
            num(self.qc_adiabatic),
            num(self.cost1),
            num(self.cost3),
            self.steps.to_string(),
            self.converged.to_string(),
        ]
        .join(",")
    }
}

/// CSV text for a set of rows, header included.
pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut s = CSV_COLUMNS.join(",");
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.csv_line());
    }
    s
}

/// Parse a CSV table written by [`to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_COLUMNS.join(",").as_str()) {
        return Err(Error::Config("unexpected CSV header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |what: &str| Error::Config(format!("CSV row {}: bad {what}", i + 1));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != CSV_COLUMNS.len() {
                return Err(bad("column count"));
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad(CSV_COLUMNS[k]));
            let int = |k: usize| f[k].parse::<usize>().map_err(|_| bad(CSV_COLUMNS[k]));
            let flag = |k: usize| f[k].parse::<bool>().map_err(|_| bad(CSV_COLUMNS[k]));
            Ok(ResultRow {
                n: int(0)?,
                p: int(1)?,
                tau1: num(2)?,
                tau3: num(3)?,
                tau2: num(4)?,
                tau4: num(5)?,
                tc: num(6)?,
                th: num(7)?,
                qc: num(8)?,
                qh: num(9)?,
                w1: num(10)?,
                w3: num(11)?,
                w0_total: num(12)?,
                wcd_total: num(13)?,
                j: num(14)?,
                cop: if f[15].is_empty() { None } else { Some(num(15)?) },
                cop_defined: flag(16)?,
                cop_carnot: num(17)?,
                qc_adiabatic: num(18)?,
                cost1: num(19)?,
                cost3: num(20)?,
                steps: int(21)?,
                converged: flag(22)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub point: GridPoint,
    pub error: String,
}

/// Provenance record written next to every result table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub tool_version: String,
    pub grid_size: usize,
    pub format: Format,
    pub started: String,
    pub finished: String,
    pub failures: Vec<Failure>,
}

impl RunManifest {
    /// Start a manifest for `grid`; the start timestamp is taken now.
    pub fn begin(grid: &[CycleConfig], format: Format) -> Self {
        Self {
            config_digest: config_digest(grid),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            grid_size: grid.len(),
            format,
            started: now(),
            finished: String::new(),
            failures: Vec::new(),
        }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Create `dir` if needed and confirm it accepts writes.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".otto-write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Paths written by [`emit_results`].
#[derive(Clone, Debug)]
pub struct Emitted {
    pub table: PathBuf,
    pub manifest: PathBuf,
    pub manifest_data: RunManifest,
}

/// Write the result table, then the manifest. Failed grid points are listed
/// in the manifest and contribute no row.
pub fn emit_results(
    outcomes: &[SweepOutcome],
    mut manifest: RunManifest,
    out_dir: &Path,
) -> Result<Emitted> {
    prepare_output_dir(out_dir)?;
    let mut rows = Vec::new();
    for o in outcomes {
        match &o.result {
            Ok(r) => rows.push(ResultRow::from(r)),
            Err(e) => manifest.failures.push(Failure {
                point: o.point.clone(),
                error: e.to_string(),
            }),
        }
    }
    let table = out_dir.join(manifest.format.file_name());
    let body = match manifest.format {
        Format::Csv => to_csv(&rows),
        Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
    };
    fs::write(&table, body).map_err(|e| Error::io(&table, e))?;
    manifest.finished = now();
    let path = out_dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(Emitted {
        table,
        manifest: path,
        manifest_data: manifest,
    })
}
