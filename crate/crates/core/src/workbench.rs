//! Workspace configuration, persistence and the command implementations
//! behind the `fuzzloc` binary.
//!
//! Every command returns a serializable report; rendering and exit codes
//! live here too so the binary stays a thin argument parser.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dedup::{
    apply_merges, merge_group, records_from_store, DuplicateGroup, Matcher, MergeResult,
    DEFAULT_THRESHOLD,
};
use crate::fuzzy::LinguisticVariable;
use crate::knowledge::{
    load_manifest, KnowledgeBase, LoadError, RiskAssessment, Thresholds,
};
use crate::location::{
    assess_network_risk, load_network, load_scenario, run, write_trace_csv, MetricsWindow,
    SimError, SimMetrics,
};
use crate::query::{explain, parse_query, FuzzificationCatalog, Plan, QueryResult, DEFAULT_ALPHA};
use crate::store::{ColumnKind, StoreError, SubscriberStore, DEFAULT_TABLE};

pub const WORKSPACE_ENV: &str = "FUZZLOC_WORKSPACE";

/// Exit codes: 2 parse, 3 semantic or validation, 4 I/O.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Semantic(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Semantic(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

fn store_error(path: &Path, e: StoreError) -> CliError {
    let msg = format!("{}: {e}", path.display());
    match e {
        StoreError::Io(_) => CliError::Io(msg),
        _ => CliError::Parse(msg),
    }
}

fn kb_error(e: LoadError) -> CliError {
    let msg = e.to_string();
    match e {
        LoadError::Io { .. } => CliError::Io(msg),
        LoadError::Json { .. } | LoadError::Parse(_) => CliError::Parse(msg),
        LoadError::Invalid { .. } => CliError::Semantic(msg),
    }
}

fn sim_error(e: SimError) -> CliError {
    let msg = e.to_string();
    match e {
        SimError::Io { .. } => CliError::Io(msg),
        SimError::Json { .. } => CliError::Parse(msg),
        _ => CliError::Semantic(msg),
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Io(format!("{}: file not found", path.display())))
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Workspace settings. Relative paths resolve against the config file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceConfig {
    #[serde(default)]
    pub store: Option<PathBuf>,
    #[serde(default = "default_table")]
    pub table: String,
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    #[serde(default)]
    pub kb: Option<PathBuf>,
    #[serde(default)]
    pub network_kb: Option<PathBuf>,
    #[serde(default)]
    pub network: Option<PathBuf>,
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_threshold")]
    pub dedup_threshold: f64,
    #[serde(default)]
    pub risk_thresholds: Option<[f64; 2]>,
}

fn default_table() -> String {
    DEFAULT_TABLE.to_string()
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl Default for WorkspaceConfig {
    fn default() -> Self {
        Self {
            store: None,
            table: default_table(),
            catalog: None,
            kb: None,
            network_kb: None,
            network: None,
            scenario: None,
            alpha: DEFAULT_ALPHA,
            dedup_threshold: DEFAULT_THRESHOLD,
            risk_thresholds: None,
        }
    }
}

impl WorkspaceConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: Self = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.store,
            &mut cfg.catalog,
            &mut cfg.kb,
            &mut cfg.network_kb,
            &mut cfg.network,
            &mut cfg.scenario,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check_alpha(self.alpha)?;
        check_threshold(self.dedup_threshold)?;
        if let Some(t) = self.risk_thresholds {
            check_risk_thresholds(t)?;
        }
        Ok(())
    }

    /// `--config` first, then `$FUZZLOC_WORKSPACE`, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, CliError> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(WORKSPACE_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }
}

pub fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(CliError::Semantic(format!("alpha {alpha} outside [0, 1]")))
    }
}

pub fn check_threshold(t: f64) -> Result<(), CliError> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(CliError::Semantic(format!("dedup threshold {t} outside (0, 1]")))
    }
}

fn check_risk_thresholds([low, high]: [f64; 2]) -> Result<(), CliError> {
    if low.is_finite() && high.is_finite() && low < high {
        Ok(())
    } else {
        Err(CliError::Semantic(format!(
            "risk thresholds [{low}, {high}] must be finite with low < high"
        )))
    }
}

pub fn load_store(path: &Path, table: &str) -> Result<SubscriberStore, CliError> {
    require_file(path)?;
    SubscriberStore::load(path, table).map_err(|e| store_error(path, e))
}

/// A missing catalog file is an empty catalog.
pub fn load_catalog(path: Option<&Path>) -> Result<FuzzificationCatalog, CliError> {
    match path {
        Some(p) if p.exists() => read_json(p),
        _ => Ok(FuzzificationCatalog::new()),
    }
}

pub fn load_knowledge_base(path: &Path, thresholds: Option<[f64; 2]>) -> Result<KnowledgeBase, CliError> {
    require_file(path)?;
    let mut draft = load_manifest(path).map_err(kb_error)?;
    if let Some([low, high]) = thresholds {
        check_risk_thresholds([low, high])?;
        draft.thresholds = Thresholds { low, high };
    }
    KnowledgeBase::build(draft).map_err(|e| CliError::Semantic(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnReport {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadReport {
    pub table: String,
    pub rows: usize,
    pub columns: Vec<ColumnReport>,
    /// Columns of the standard subscriber profile absent from this file.
    pub missing_profile_columns: Vec<String>,
}

impl std::fmt::Display for LoadReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} rows, {} columns", self.rows, self.columns.len())?;
        for c in &self.columns {
            let kind = match c.kind {
                ColumnKind::Numeric => "numeric",
                ColumnKind::Text => "text",
                ColumnKind::Empty => "empty",
            };
            writeln!(f, "  {:<20} {kind}", c.name)?;
        }
        if !self.missing_profile_columns.is_empty() {
            writeln!(f, "missing profile columns: {}", self.missing_profile_columns.join(", "))?;
        }
        Ok(())
    }
}

pub fn cmd_load(store: &Path, table: &str) -> Result<LoadReport, CliError> {
    let s = load_store(store, table)?;
    Ok(LoadReport {
        table: s.table().to_string(),
        rows: s.len(),
        columns: s
            .columns()
            .iter()
            .enumerate()
            .map(|(i, name)| ColumnReport {
                name: name.clone(),
                kind: s.column_kind(i),
            })
            .collect(),
        missing_profile_columns: s
            .missing_profile_columns()
            .into_iter()
            .map(String::from)
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzifyReport {
    pub table: String,
    pub column: String,
    pub terms: Vec<String>,
    pub materialized_rows: Option<usize>,
    pub catalog: PathBuf,
}

/// Binds the variable in `variable_file` to `column` and saves the catalog.
pub fn cmd_fuzzify(
    store: &Path,
    table: &str,
    catalog_path: &Path,
    column: &str,
    variable_file: &Path,
    materialize: bool,
) -> Result<FuzzifyReport, CliError> {
    let s = load_store(store, table)?;
    require_file(variable_file)?;
    let var: LinguisticVariable = read_json(variable_file)?;
    let mut catalog = load_catalog(Some(catalog_path))?;
    let entry = catalog
        .fuzzify_column(&s, column, var, materialize)
        .map_err(|e| CliError::Semantic(e.to_string()))?;
    let report = FuzzifyReport {
        table: entry.table.clone(),
        column: entry.column.clone(),
        terms: entry.variable.term_labels().into_iter().map(String::from).collect(),
        materialized_rows: entry.materialized.as_ref().map(|m| m.rows),
        catalog: catalog_path.to_path_buf(),
    };
    write_json(catalog_path, &catalog)?;
    Ok(report)
}

pub fn cmd_query(
    store: &Path,
    table: &str,
    catalog: Option<&Path>,
    sql: &str,
    alpha: f64,
) -> Result<QueryResult, CliError> {
    check_alpha(alpha)?;
    let q = parse_query(sql).map_err(|e| CliError::Parse(e.to_string()))?;
    let s = load_store(store, table)?;
    let c = load_catalog(catalog)?;
    crate::query::execute(&q, &s, &c, alpha).map_err(|e| CliError::Semantic(e.to_string()))
}

pub fn cmd_explain(catalog: Option<&Path>, sql: &str) -> Result<Plan, CliError> {
    let q = parse_query(sql).map_err(|e| CliError::Parse(e.to_string()))?;
    Ok(explain(&q, &load_catalog(catalog)?))
}

pub fn render_query(r: &QueryResult) -> String {
    let mut header: Vec<String> = vec!["row".into()];
    header.extend(r.columns.iter().cloned());
    header.push("degree".into());
    let body: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|row| {
            let mut cells = vec![row.row_id.to_string()];
            cells.extend(row.values.iter().cloned());
            cells.push(format!("{:.4}", row.degree));
            cells
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            body.iter()
                .map(|r| r[i].chars().count())
                .chain([header[i].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(&header);
    out.push('\n');
    for r in &body {
        out.push_str(&line(r));
        out.push('\n');
    }
    let _ = writeln!(out, "({} rows, alpha {})", r.rows.len(), r.alpha);
    out
}

/// Parses `name=value` pairs.
pub fn parse_inputs(pairs: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    for p in pairs {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::Parse(format!("input {p:?} is not name=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| CliError::Parse(format!("input {p:?} has no finite number")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

pub fn cmd_infer(
    kb: &Path,
    inputs: &BTreeMap<String, f64>,
    thresholds: Option<[f64; 2]>,
) -> Result<RiskAssessment, CliError> {
    let kb = load_knowledge_base(kb, thresholds)?;
    crate::knowledge::infer(&kb, inputs).map_err(|e| CliError::Semantic(e.to_string()))
}

pub fn render_assessment(a: &RiskAssessment) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "fired rules: {}",
        if a.fired_rules.is_empty() {
            "none".to_string()
        } else {
            a.fired_rules.join(", ")
        }
    );
    for o in &a.outputs {
        let _ = writeln!(
            out,
            "{}: score {}",
            o.variable,
            o.score.map_or("none".into(), |s| format!("{s:.3}"))
        );
        for t in &o.terms {
            let _ = writeln!(out, "  {:<12} {:.4}", t.term, t.degree.value());
        }
    }
    if !a.clamped_inputs.is_empty() {
        let _ = writeln!(out, "clamped inputs: {}", a.clamped_inputs.join(", "));
    }
    let _ = writeln!(
        out,
        "{} = {} -> {} ({}){}",
        a.risk_variable,
        a.score.map_or("none".into(), |s| format!("{s:.3}")),
        a.level,
        a.level.description(),
        if a.no_fire { " [no rule fired]" } else { "" }
    );
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DedupReport {
    pub threshold: f64,
    pub records: usize,
    pub groups: Vec<DuplicateGroup>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merges: Option<Vec<MergeResult>>,
}

pub struct MergeOutputs<'a> {
    pub store: &'a Path,
    pub history: &'a Path,
}

/// Writes the groups file and, with `merge`, the merged store and its
/// history.
pub fn cmd_dedup(
    store: &Path,
    table: &str,
    threshold: f64,
    groups_out: &Path,
    merge: Option<MergeOutputs<'_>>,
) -> Result<DedupReport, CliError> {
    check_threshold(threshold)?;
    let s = load_store(store, table)?;
    let (schema, records) = records_from_store(&s);
    let groups = Matcher::default()
        .find_duplicate_groups(&records, threshold)
        .map_err(|e| CliError::Semantic(e.to_string()))?;
    let mut report = DedupReport {
        threshold,
        records: records.len(),
        groups,
        merges: None,
    };
    write_json(groups_out, &report)?;
    if let Some(out) = merge {
        let merges = report
            .groups
            .iter()
            .map(|g| merge_group(g, &records))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Semantic(e.to_string()))?;
        let merged = apply_merges(&records, &merges);
        let columns = schema.columns.iter().map(|(c, _)| c.clone()).collect();
        let rows = merged.iter().map(|r| schema.row(r)).collect();
        let merged_store = SubscriberStore::new(s.table(), columns, rows)
            .map_err(|e| CliError::Semantic(e.to_string()))?;
        let mut buf = Vec::new();
        merged_store
            .write_csv(&mut buf)
            .map_err(|e| io_error(out.store, e))?;
        write_atomic(out.store, &buf)?;
        write_json(out.history, &merges)?;
        report.merges = Some(merges);
    }
    Ok(report)
}

pub fn render_dedup(r: &DedupReport) -> String {
    let mut out = format!(
        "{} records, {} duplicate groups at threshold {}\n",
        r.records,
        r.groups.len(),
        r.threshold
    );
    for g in &r.groups {
        let _ = writeln!(
            out,
            "  members {:?}  primary {}  min score {:.3}",
            g.members, g.primary, g.min_score
        );
    }
    if let Some(m) = &r.merges {
        let changes: usize = m.iter().map(|m| m.history.len()).sum();
        let _ = writeln!(out, "merged {} groups, {changes} history entries", m.len());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub ticks: usize,
    pub totals: SimMetrics,
    pub window: MetricsWindow,
    pub assessment: Option<RiskAssessment>,
}

/// Runs the scenario, writes the per-tick CSV and assesses the whole run
/// as one window when a kb is given.
pub fn cmd_simulate(
    network: &Path,
    scenario: &Path,
    seed: Option<u64>,
    kb: Option<&Path>,
    metrics_out: &Path,
) -> Result<SimReport, CliError> {
    require_file(network)?;
    require_file(scenario)?;
    let net = load_network(network).map_err(sim_error)?;
    let sc = load_scenario(scenario).map_err(sim_error)?;
    let kb = kb.map(|p| load_knowledge_base(p, None)).transpose()?;
    let result = run(net, &sc, seed).map_err(sim_error)?;
    let mut buf = Vec::new();
    write_trace_csv(&result.trace, &mut buf).map_err(|e| io_error(metrics_out, e))?;
    write_atomic(metrics_out, &buf)?;
    let window = MetricsWindow::from_trace(&result.trace);
    let assessment = kb
        .map(|kb| assess_network_risk(&window, &kb))
        .transpose()
        .map_err(|e| CliError::Semantic(e.to_string()))?;
    Ok(SimReport {
        ticks: result.trace.len(),
        totals: result.totals,
        window,
        assessment,
    })
}

pub fn render_sim(r: &SimReport) -> String {
    let t = &r.totals;
    let mut out = format!(
        "{} ticks: {} location updates, {} HLR->VLR transfers, {} pages ({:.2} cells/page, {} failed), {} dropped signals\n",
        r.ticks,
        t.location_updates,
        t.profile_transfers,
        t.paging_requests,
        t.cells_per_page(),
        t.failed_pages,
        t.dropped_signals
    );
    let _ = writeln!(
        out,
        "update_rate {:.4}  drop_rate {:.4}  mean_rx_dbm {:.2}",
        r.window.update_rate(),
        r.window.drop_rate(),
        r.window.mean_rx_dbm()
    );
    if let Some(a) = &r.assessment {
        out.push_str(&render_assessment(a));
    }
    out
}
