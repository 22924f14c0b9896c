//! Seeded, reproducible batch experiments.
//!
//! An experiment is described by an [`ExperimentSpec`] (JSON or TOML). Every
//! replicate `i` draws from `replicate_stream(seed, i)`, so any replicate can
//! be rerun alone. A run produces [`TrialRow`]s, sorted by id, and a
//! [`Summary`] that is recomputed from the rows by [`summarize`].
//!
//! On disk a report is two files:
//!
//! * `rows.jsonl`: a header line `{"spec": .., "seed": ..}` followed by one
//!   row per line.
//! * `summary.json`: `{"spec": .., "seed": .., "summary": ..}`.

mod lemmas;
mod runs;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpp::{GppInstance, NMode, SamplerKind, SubBox};
use crate::rng::{replicate_seed, replicate_stream, StreamRng};

pub use lemmas::{run_lemma_suite, LemmaOptions, LemmaSummary, LemmaTally};
pub use runs::{
    run_approximate_z, run_concentration, run_connective, run_sample_validate, run_ssm, ApproximateSummary,
    ConcentrationRow, ConcentrationSummary, ConnectiveOptions, ConnectiveSummary, SampleValidateSummary,
    SamplingOptions, SsmGraph, SsmOptions, SsmSummary, VoidCheck,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Concentration,
    ApproximateZ,
    SampleValidate,
    LemmaSuite,
    Connective,
    Ssm,
}

fn default_trials() -> usize {
    1
}

fn default_eps() -> f64 {
    0.2
}

fn default_delta() -> f64 {
    1.0 / 3.0
}

/// One experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<GppInstance>,
    /// Number of graph vertices. For the pipeline kinds, `None` selects the
    /// worst-case bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Several vertex counts (concentration only); overrides `n`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub lemma: LemmaOptions,
    #[serde(default)]
    pub sampling: SamplingOptions,
    #[serde(default)]
    pub connective: ConnectiveOptions,
    #[serde(default)]
    pub ssm: SsmOptions,
}

impl ExperimentSpec {
    /// A spec of the given kind with every option at its default.
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        ExperimentSpec {
            kind,
            instance: None,
            n: None,
            n_grid: Vec::new(),
            trials: default_trials(),
            eps: default_eps(),
            delta: default_delta(),
            seed,
            output: None,
            lemma: LemmaOptions::default(),
            sampling: SamplingOptions::default(),
            connective: ConnectiveOptions::default(),
            ssm: SsmOptions::default(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s).map_err(|e| Error::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: Self = toml::from_str(s).map_err(|e| Error::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a spec file; `.toml` files are parsed as TOML, anything else as
    /// JSON.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
            Self::from_toml_str(&text)
        } else {
            Self::from_json_str(&text)
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("spec serializes")
    }

    fn require_instance(&self) -> Result<&GppInstance> {
        self.instance
            .as_ref()
            .ok_or_else(|| Error::Spec(format!("kind {:?} needs an instance", self.kind)))
    }

    /// Vertex-count mode for the pipeline kinds.
    pub fn n_mode(&self) -> NMode {
        self.n.map_or(NMode::Paper, NMode::Practical)
    }

    /// Checks that every parameter the kind uses is present and in range.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Spec(m.to_string()));
        if self.trials < 1 {
            return bad("trials must be at least 1");
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return bad("eps must lie in (0, 1]");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if let Some(inst) = &self.instance {
            inst.validate().map_err(|e| Error::Spec(e.to_string()))?;
        }
        if self.n == Some(0) || self.n_grid.contains(&0) {
            return bad("n must be at least 1");
        }
        match self.kind {
            ExperimentKind::Concentration => {
                self.require_instance()?;
                if self.n.is_none() && self.n_grid.is_empty() {
                    return bad("concentration needs n or n_grid");
                }
            }
            ExperimentKind::ApproximateZ | ExperimentKind::SampleValidate => {
                self.require_instance()?;
                self.sampling.validate()?;
                if let (Some(b), Some(inst)) = (&self.sampling.sub_box, &self.instance) {
                    if b.lo.dim() != inst.region.dim() || !inst.region.contains_box(&b.lo, &b.sides) {
                        return bad("sub_box must lie inside the region");
                    }
                }
            }
            ExperimentKind::LemmaSuite => self.lemma.validate()?,
            ExperimentKind::Connective => {
                self.require_instance()?;
                if self.n.is_none() {
                    return bad("connective needs n");
                }
                self.connective.validate()?;
            }
            ExperimentKind::Ssm => self.ssm.validate(self.instance.is_some(), self.n)?,
        }
        Ok(())
    }
}

/// What a row records.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowRole {
    /// A measured replicate.
    #[default]
    Trial,
    /// A reference value the trials are compared with.
    Oracle,
    /// A replicate used to fit a constant, not judged itself.
    Calibration,
    /// An auxiliary replicate (for example a domination check).
    Auxiliary,
}

/// One replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    /// Unique within a run; also the stream index under the master seed.
    pub id: u64,
    #[serde(default)]
    pub role: RowRole,
    /// `replicate_seed(master, id)`.
    pub seed: u64,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
    #[serde(default)]
    pub flags: BTreeMap<String, bool>,
    /// Not part of the reproducibility contract.
    #[serde(default)]
    pub wall_time_ms: f64,
}

impl TrialRow {
    pub fn new(master: u64, id: u64, role: RowRole) -> Self {
        TrialRow {
            id,
            role,
            seed: replicate_seed(master, id),
            values: BTreeMap::new(),
            flags: BTreeMap::new(),
            wall_time_ms: 0.0,
        }
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn flag(&self, key: &str) -> Option<bool> {
        self.flags.get(key).copied()
    }

    pub fn set(&mut self, key: &str, v: f64) -> &mut Self {
        self.values.insert(key.to_string(), v);
        self
    }

    pub fn set_flag(&mut self, key: &str, v: bool) -> &mut Self {
        self.flags.insert(key.to_string(), v);
        self
    }

    /// Equality ignoring wall time.
    pub fn same_measurement(&self, other: &TrialRow) -> bool {
        self.id == other.id
            && self.role == other.role
            && self.seed == other.seed
            && self.flags == other.flags
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|((ka, a), (kb, b))| ka == kb && a.to_bits() == b.to_bits())
    }
}

/// Runs `f` for each id in parallel with its own stream and collects the
/// rows in id order.
pub(crate) fn par_rows<F>(
    master: u64,
    ids: std::ops::Range<u64>,
    role: RowRole,
    f: F,
) -> Result<Vec<TrialRow>>
where
    F: Fn(&mut TrialRow, &mut StreamRng) -> Result<()> + Sync,
{
    ids.into_par_iter()
        .map(|id| {
            let start = Instant::now();
            let mut row = TrialRow::new(master, id, role);
            let mut rng = replicate_stream(master, id);
            f(&mut row, &mut rng)?;
            row.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            Ok(row)
        })
        .collect()
}

/// Kind-specific summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Summary {
    Concentration(ConcentrationSummary),
    ApproximateZ(ApproximateSummary),
    SampleValidate(SampleValidateSummary),
    LemmaSuite(LemmaSummary),
    Connective(ConnectiveSummary),
    Ssm(SsmSummary),
}

impl Summary {
    /// Whether every assertion of the run held.
    pub fn passed(&self) -> bool {
        match self {
            Summary::Concentration(s) => s.passed,
            Summary::ApproximateZ(s) => s.passed,
            Summary::SampleValidate(s) => s.passed,
            Summary::LemmaSuite(s) => s.passed,
            Summary::Connective(s) => s.passed,
            Summary::Ssm(s) => s.passed,
        }
    }
}

/// The outcome of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub spec: ExperimentSpec,
    pub seed: u64,
    pub rows: Vec<TrialRow>,
    pub summary: Summary,
}

/// Recomputes the summary of a run from its rows alone.
pub fn summarize(spec: &ExperimentSpec, rows: &[TrialRow]) -> Result<Summary> {
    Ok(match spec.kind {
        ExperimentKind::Concentration => Summary::Concentration(runs::summarize_concentration(spec, rows)?),
        ExperimentKind::ApproximateZ => Summary::ApproximateZ(runs::summarize_approximate(spec, rows)?),
        ExperimentKind::SampleValidate => {
            Summary::SampleValidate(runs::summarize_sample_validate(spec, rows)?)
        }
        ExperimentKind::LemmaSuite => Summary::LemmaSuite(lemmas::summarize_lemmas(rows)),
        ExperimentKind::Connective => Summary::Connective(runs::summarize_connective(spec, rows)?),
        ExperimentKind::Ssm => Summary::Ssm(runs::summarize_ssm(rows)),
    })
}

/// Runs the experiment described by `spec`.
pub fn run(spec: &ExperimentSpec) -> Result<Report> {
    spec.validate()?;
    let rows = match spec.kind {
        ExperimentKind::Concentration => runs::concentration_rows(spec)?,
        ExperimentKind::ApproximateZ => runs::approximate_rows(spec)?,
        ExperimentKind::SampleValidate => runs::sample_validate_rows(spec)?,
        ExperimentKind::LemmaSuite => lemmas::lemma_rows(spec)?,
        ExperimentKind::Connective => runs::connective_rows(spec)?,
        ExperimentKind::Ssm => runs::ssm_rows(spec)?,
    };
    let summary = summarize(spec, &rows)?;
    log::info!(
        "{:?}: {} rows, passed = {}",
        spec.kind,
        rows.len(),
        summary.passed()
    );
    Ok(Report {
        spec: spec.clone(),
        seed: spec.seed,
        rows,
        summary,
    })
}

#[derive(Serialize, Deserialize)]
struct Header {
    spec: ExperimentSpec,
    seed: u64,
}

/// Writes `rows.jsonl` and `summary.json` into `dir` (created if missing).
pub fn write_report(report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("rows.jsonl"))?);
    let header = Header {
        spec: report.spec.clone(),
        seed: report.seed,
    };
    serde_json::to_writer(&mut w, &header)?;
    writeln!(w)?;
    for row in &report.rows {
        serde_json::to_writer(&mut w, row)?;
        writeln!(w)?;
    }
    w.flush()?;
    let summary = serde_json::json!({
        "spec": report.spec,
        "seed": report.seed,
        "summary": report.summary,
    });
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(())
}

/// Reads a `rows.jsonl` file back.
pub fn read_rows(path: &Path) -> Result<(ExperimentSpec, Vec<TrialRow>)> {
    let mut lines = BufReader::new(fs::File::open(path)?).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Spec("empty rows file".into()))??;
    let header: Header = serde_json::from_str(&first)?;
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            rows.push(serde_json::from_str(&line)?);
        }
    }
    Ok((header.spec, rows))
}

pub(crate) fn default_sub_box(instance: &GppInstance) -> SubBox {
    SubBox::new(
        crate::geometry::Point::origin(instance.region.dim()),
        instance.region.sides().iter().map(|s| s / 4.0).collect(),
    )
}

pub(crate) fn sampler_or_default(s: Option<SamplerKind>) -> SamplerKind {
    s.unwrap_or_default()
}
