//! Experiment driver behind the `rieszlab` binary: single solves, cached
//! sweeps over `N`, and reports aggregating one or more traces.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rieszlab::asymptotics::{
    self, AsymptoticTrace, AsymptoticsError, SplitPrediction, TraceError, TraceSummary, DEFAULT_TAIL_FRACTION,
    TRACE_SCHEMA_VERSION,
};
use rieszlab::energy::normalized_energy;
use rieszlab::geometry::{preset, GeometryError, SetDef, SetSpec};
use rieszlab::optimizer::{
    self, minimize_local_search_from, minimize_union_with, Cache, Depth, SearchParams, SolveError, SolveResult,
    Status, SweepFailure, SweepOptions, UnionHints,
};

/// Environment variable overriding the default cache location.
pub const CACHE_ENV: &str = "RIESZLAB_CACHE";
pub const DEFAULT_CACHE: &str = "rieszlab_cache.json";
pub const DEFAULT_OUT: &str = "rieszlab_out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error("incompatible traces: {0}")]
    Incompatible(String),
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{failed} of {total} N values failed; partial trace written")]
    PartialSweep { failed: usize, total: usize },
}

impl CliError {
    /// 2 for invalid input, 3 when the solver cannot satisfy the request,
    /// 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_)
            | CliError::Geometry(_)
            | CliError::Trace(_)
            | CliError::Asymptotics(_)
            | CliError::Incompatible(_)
            | CliError::Parse { .. } => 2,
            CliError::Solve(SolveError::InvalidParams(_) | SolveError::WrongSetKind { .. }) => 2,
            CliError::Solve(SolveError::Geometry(_)) => 2,
            CliError::Solve(SolveError::Cache(_)) | CliError::Io { .. } => 4,
            CliError::Solve(_) | CliError::PartialSweep { .. } => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "validation",
            3 => "solver",
            _ => "io",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A set given by preset name or by full definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetSource {
    Preset(String),
    Definition(SetDef),
}

impl SetSource {
    pub fn build(&self) -> Result<SetSpec, GeometryError> {
        match self {
            SetSource::Preset(name) => preset(name),
            SetSource::Definition(def) => SetSpec::from_def(def),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub set: SetSource,
    pub s: f64,
    #[serde(default = "default_n_min")]
    pub n_min: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub search: SearchParams,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default)]
    pub deterministic: bool,
    /// Predicted `A₁` fraction used to center union split windows.
    #[serde(default)]
    pub alpha: Option<f64>,
}

fn default_n_min() -> usize {
    2
}

fn default_n_max() -> usize {
    40
}

impl ExperimentConfig {
    pub fn new(set: SetSource, s: f64) -> Self {
        ExperimentConfig {
            set,
            s,
            n_min: default_n_min(),
            n_max: default_n_max(),
            search: SearchParams::default(),
            out: None,
            cache: None,
            deterministic: false,
            alpha: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|source| CliError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Builds the set and checks the configuration: `s > d`, a nonempty
    /// `N` range, valid search parameters, and enough sites at an explicit
    /// depth.
    pub fn validate(&self) -> Result<SetSpec, CliError> {
        let set = self.set.build()?;
        let d = set.dimension();
        if !(self.s.is_finite() && self.s > d) {
            return Err(CliError::Validation(format!(
                "s = {} must exceed the set dimension d = {d}",
                self.s
            )));
        }
        if self.n_min > self.n_max {
            return Err(CliError::Validation(format!(
                "n_min = {} exceeds n_max = {}",
                self.n_min, self.n_max
            )));
        }
        if self.n_min < 1 {
            return Err(CliError::Validation("n_min must be at least 1".into()));
        }
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(CliError::Validation(format!("alpha = {a} must lie in [0, 1]")));
            }
        }
        self.params().validate()?;
        if let Some(cap) = capacity(&set, &self.params()) {
            if (self.n_max as u64) > cap {
                return Err(SolveError::Infeasible {
                    needed: self.n_max,
                    available: cap,
                }
                .into());
            }
        }
        Ok(set)
    }

    pub fn params(&self) -> SearchParams {
        let mut p = self.search.clone();
        p.deterministic |= self.deterministic;
        p
    }

    /// `--cache`/config value, else `$RIESZLAB_CACHE`, else the default.
    pub fn cache_path(&self) -> PathBuf {
        self.cache
            .clone()
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }
}

/// Distinct sites at an explicit depth or grid; `None` when unbounded.
fn capacity(set: &SetSpec, params: &SearchParams) -> Option<u64> {
    match set {
        SetSpec::Ifs(f) => match params.depth {
            Depth::Fixed(m) => Some((f.map_count() as u64).saturating_pow(m as u32)),
            Depth::Auto => None,
        },
        SetSpec::Segment(_) => params.segment_grid.map(|g| g as u64),
        SetSpec::Union(u) => Some(capacity(u.a1(), params)?.saturating_add(capacity(u.a2(), params)?)),
    }
}

/// Written by [`cmd_solve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub schema_version: u32,
    pub set_id: String,
    pub s: f64,
    pub d: f64,
    pub n: usize,
    pub energy: f64,
    pub g: f64,
    pub n1: usize,
    pub n2: usize,
    pub status: Status,
    pub min_dist: Option<f64>,
    pub evaluations: u64,
    pub result: SolveResult,
}

/// Solves one `N`, updates the cache and writes `solve_N{n}.json` to the
/// output directory.
pub fn cmd_solve(config: &ExperimentConfig, n: usize) -> Result<SolveOutput, CliError> {
    let set = config.validate()?;
    let params = config.params();
    let cache_path = config.cache_path();
    let mut cache = Cache::load(&cache_path).map_err(SolveError::from)?;
    let warm: Vec<_> = cache.result(&set, config.s, n).into_iter().map(|r| r.config).collect();
    let result = match &set {
        SetSpec::Union(_) => {
            let hints = UnionHints {
                alpha: config.alpha,
                previous_frac: None,
                warm,
            };
            minimize_union_with(&set, n, config.s, &params, &hints, &mut cache)?
        }
        _ => minimize_local_search_from(&set, n, config.s, &params, &warm)?,
    };
    cache.offer(&set, config.s, &result);
    cache.save().map_err(SolveError::from)?;

    let d = set.dimension();
    let output = SolveOutput {
        schema_version: TRACE_SCHEMA_VERSION,
        set_id: set.content_hash(),
        s: config.s,
        d,
        n,
        energy: result.energy.total,
        g: normalized_energy(result.energy.total, n, config.s, d),
        n1: result.n1,
        n2: result.n2,
        status: result.status,
        min_dist: result.energy.min_dist,
        evaluations: result.evaluations,
        result,
    };
    let out = config.out_dir();
    fs::create_dir_all(&out).map_err(io_err(&out))?;
    write_json(&out.join(format!("solve_N{n}.json")), &output)?;
    Ok(output)
}

/// Written by [`cmd_sweep`] as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub set_id: String,
    pub s: f64,
    pub d: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub solved: Vec<usize>,
    pub reused: Vec<usize>,
    pub stabilized: Vec<usize>,
    pub failures: Vec<FailureRecord>,
    pub analysis: TraceSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub n: usize,
    pub error: String,
}

impl From<SweepFailure> for FailureRecord {
    fn from(f: SweepFailure) -> Self {
        FailureRecord { n: f.n, error: f.error }
    }
}

/// Paths written by [`cmd_sweep`].
#[derive(Debug, Clone)]
pub struct SweepFiles {
    pub csv: PathBuf,
    pub trace: PathBuf,
    pub summary: PathBuf,
}

impl SweepFiles {
    pub fn in_dir(dir: &Path) -> Self {
        SweepFiles {
            csv: dir.join("trace.csv"),
            trace: dir.join("trace.json"),
            summary: dir.join("summary.json"),
        }
    }
}

/// Sweeps `n_min..=n_max`, reusing cached `N` values unless `force`, and
/// writes `trace.csv`, `trace.json` and `summary.json`. The files are written
/// even when some `N` fail; the failure is then reported as an error.
pub fn cmd_sweep(config: &ExperimentConfig, force: bool) -> Result<(SweepSummary, SweepFiles), CliError> {
    let set = config.validate()?;
    let params = config.params();
    let mut cache = Cache::load(config.cache_path()).map_err(SolveError::from)?;
    let options = SweepOptions {
        force,
        alpha: config.alpha,
        ..SweepOptions::default()
    };
    let outcome = optimizer::sweep(&set, config.s, config.n_min..=config.n_max, &params, &mut cache, &options)?;

    let out = config.out_dir();
    fs::create_dir_all(&out).map_err(io_err(&out))?;
    let files = SweepFiles::in_dir(&out);
    let mut csv = Vec::new();
    outcome
        .trace
        .write_csv(&mut csv)
        .map_err(|e| CliError::Validation(format!("cannot format CSV: {e}")))?;
    fs::write(&files.csv, csv).map_err(io_err(&files.csv))?;
    write_json(&files.trace, &outcome.trace)?;

    let summary = SweepSummary {
        schema_version: TRACE_SCHEMA_VERSION,
        set_id: outcome.trace.set_id.clone(),
        s: config.s,
        d: outcome.trace.d,
        n_min: config.n_min,
        n_max: config.n_max,
        solved: outcome.solved,
        reused: outcome.reused,
        stabilized: outcome.stabilized,
        failures: outcome.failures.into_iter().map(Into::into).collect(),
        analysis: asymptotics::summarize(&outcome.trace, DEFAULT_TAIL_FRACTION, 0.0)?,
    };
    write_json(&files.summary, &summary)?;
    if !summary.failures.is_empty() {
        return Err(CliError::PartialSweep {
            failed: summary.failures.len(),
            total: config.n_max - config.n_min + 1,
        });
    }
    Ok((summary, files))
}

/// Written by [`cmd_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub s: f64,
    pub traces: Vec<TraceSummary>,
    /// Split prediction from the component traces, when available.
    pub prediction: Option<SplitPrediction>,
    /// `(tail min, tail max)` of `N₁/N` on the union trace next to the
    /// predicted fractions.
    pub observed_frac1: Option<(f64, f64)>,
}

pub fn load_trace(path: &Path) -> Result<AsymptoticTrace, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let version = value.get("schema_version").and_then(|v| v.as_u64());
    if version != Some(TRACE_SCHEMA_VERSION as u64) {
        return Err(TraceError::SchemaVersion {
            found: version.unwrap_or(0) as u32,
            expected: TRACE_SCHEMA_VERSION,
        }
        .into());
    }
    let trace: AsymptoticTrace = serde_json::from_value(value).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    trace.check()?;
    Ok(trace)
}

/// Summarizes each trace. With one union trace and traces of both of its
/// components (or, without a union trace, exactly two single traces taken
/// as `A₁` then `A₂`), also predicts the split fractions from the component
/// gamma estimates; `A₂`'s constant is the midpoint of its estimates.
pub fn cmd_report(paths: &[PathBuf]) -> Result<Report, CliError> {
    if paths.is_empty() {
        return Err(CliError::Validation("report needs at least one trace file".into()));
    }
    let traces: Vec<AsymptoticTrace> = paths.iter().map(|p| load_trace(p)).collect::<Result<_, _>>()?;
    let s = traces[0].s;
    if let Some(t) = traces.iter().find(|t| t.s != s) {
        return Err(CliError::Incompatible(format!("s = {} and s = {}", s, t.s)));
    }
    let unions: Vec<&AsymptoticTrace> = traces.iter().filter(|t| t.is_union()).collect();
    if unions.iter().any(|u| u.set_id != unions[0].set_id) {
        return Err(CliError::Incompatible("traces of different unions".into()));
    }
    let singles: Vec<&AsymptoticTrace> = traces.iter().filter(|t| !t.is_union()).collect();

    let components: Option<(&AsymptoticTrace, &AsymptoticTrace)> = match unions.first() {
        Some(u) => {
            let [h1, h2] = u.components.as_ref().expect("union traces carry component hashes");
            for t in &singles {
                if t.set_id != *h1 && t.set_id != *h2 {
                    return Err(CliError::Incompatible(format!(
                        "trace of set {} is not a component of union {}",
                        short(&t.set_id),
                        short(&u.set_id)
                    )));
                }
            }
            let a1 = singles.iter().find(|t| t.set_id == *h1);
            let a2 = singles.iter().find(|t| t.set_id == *h2);
            a1.zip(a2).map(|(a, b)| (*a, *b))
        }
        None if singles.len() == 2 => Some((singles[0], singles[1])),
        None => None,
    };

    let prediction = match components {
        Some((a1, a2)) => {
            if (a1.d - a2.d).abs() > 1e-12 {
                return Err(CliError::Incompatible(format!("dimensions {} and {} differ", a1.d, a2.d)));
            }
            let g1 = asymptotics::estimate_gamma(a1, DEFAULT_TAIL_FRACTION)?;
            let g2 = asymptotics::estimate_gamma(a2, DEFAULT_TAIL_FRACTION)?;
            let g_a2 = 0.5 * (g2.g_low_hat + g2.g_up_hat);
            Some(SplitPrediction::new(g1.g_low_hat, g1.g_up_hat, g_a2, s, a1.d, "estimate")?)
        }
        None => None,
    };
    let observed_frac1 = match unions.first() {
        Some(u) => {
            let w = asymptotics::weak_star_trace(u)?;
            (!w.insufficient_data).then_some((w.tail_min, w.tail_max))
        }
        None => None,
    };
    Ok(Report {
        schema_version: TRACE_SCHEMA_VERSION,
        s,
        traces: traces
            .iter()
            .map(|t| asymptotics::summarize(t, DEFAULT_TAIL_FRACTION, 0.0))
            .collect::<Result<_, _>>()?,
        prediction,
        observed_frac1,
    })
}

fn short(hash: &str) -> &str {
    &hash[..hash.len().min(12)]
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("output types serialize");
    fs::write(path, text + "\n").map_err(io_err(path))
}
