//! Monte-Carlo experiments over randomly placed users.
//!
//! Users are drawn sequentially from a seeded ChaCha stream, evaluated in
//! parallel, collected in user order and reduced on one thread, so reports do
//! not depend on the worker count.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::array::{synthesize_channel, ArrayConfig, ChannelRealization, Normalization, PolarPoint};
use crate::container::StoredCodebook;
use crate::error::{Error, Result};
use crate::lower::{build_lower_codebook, LowerCodebook};
use crate::search::{exhaustive_search_top, hierarchical_search, topk_agreement};
use crate::upper::{build_hierarchy, HierarchicalCodebook, HierarchyConfig, PatternKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangeDistribution {
    /// Distance uniform on `(r_min, r_max]`.
    #[default]
    Uniform,
    /// Inverse distance uniform, i.e. uniform in curvature at broadside.
    UniformInverse,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserDistribution {
    pub kind: RangeDistribution,
    /// Largest user distance in metres; ten Fresnel distances when absent.
    pub r_max: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FarFieldBaseline {
    /// As many directions as the proposed codebook, far-field ring only.
    #[default]
    Oversampled,
    /// `n_w` directions.
    Dft,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSize {
    pub n_angles: usize,
    pub n_rings: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Gain,
    Search,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_elements: usize,
    pub carrier_hz: f64,
    /// Recorded only; the narrowband model does not use it.
    pub bandwidth_hz: f64,
    /// Element spacing in metres; half a wavelength when absent.
    pub spacing: Option<f64>,
    pub n_users: usize,
    pub rho: f64,
    pub users: UserDistribution,
    pub snr_db: f64,
    pub seed: u64,
    /// Fixed lower grid; searched from `rho` when absent.
    pub lower_grid: Option<GridSize>,
    /// Hierarchy depth including the lower level; `log2(n_angles)` when absent.
    pub n_levels: Option<usize>,
    pub half_gain_fraction: f64,
    pub normalization: Normalization,
    pub far_field_baseline: FarFieldBaseline,
    /// Hierarchies compared by the search experiment; all three when absent.
    pub patterns: Option<Vec<PatternKind>>,
    pub experiment: Option<Experiment>,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_elements: 256,
            carrier_hz: 40e9,
            bandwidth_hz: 1e9,
            spacing: None,
            n_users: 100_000,
            rho: 0.64,
            users: UserDistribution::default(),
            snr_db: 20.0,
            seed: 0,
            lower_grid: None,
            n_levels: None,
            half_gain_fraction: 0.5,
            normalization: Normalization::default(),
            far_field_baseline: FarFieldBaseline::default(),
            patterns: None,
            experiment: None,
            threads: None,
        }
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn array(&self) -> Result<ArrayConfig> {
        match self.spacing {
            Some(d) => ArrayConfig::with_spacing(self.n_elements, self.carrier_hz, d),
            None => ArrayConfig::new(self.n_elements, self.carrier_hz),
        }
    }

    pub fn r_max(&self) -> Result<f64> {
        let r_min = self.array()?.fresnel_distance();
        Ok(self.users.r_max.unwrap_or(10.0 * r_min))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = self.array()?;
        if self.n_users == 0 {
            return Err(Error::InvalidConfig("need at least one user".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidConfig(format!("SNR must be finite, got {}", self.snr_db)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "rho must lie in (0, 1), got {}",
                self.rho
            )));
        }
        let r_max = self.r_max()?;
        if !(r_max > cfg.fresnel_distance()) {
            return Err(Error::InvalidConfig(format!(
                "r_max = {r_max} must exceed the Fresnel distance {}",
                cfg.fresnel_distance()
            )));
        }
        if let Some(p) = &self.patterns {
            if p.is_empty() {
                return Err(Error::InvalidConfig("pattern list is empty".into()));
            }
            if PatternKind::ALL
                .iter()
                .any(|k| p.iter().filter(|q| *q == k).count() > 1)
            {
                return Err(Error::InvalidConfig(format!("pattern list {p:?} repeats an entry")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("thread count must be positive".into()));
        }
        Ok(())
    }

    fn n_levels_for(&self, lower: &LowerCodebook) -> Result<usize> {
        if let Some(n) = self.n_levels {
            return Ok(n);
        }
        let n = lower.n_angles();
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidConfig(format!(
                "cannot derive a level count from {n} directions; set n_levels"
            )));
        }
        Ok(n.trailing_zeros() as usize)
    }
}

/// `n_users` locations in the Fresnel region, reproducible from the seed.
pub fn sample_users(sim: &SimConfig) -> Result<Vec<PolarPoint>> {
    sim.validate()?;
    let r_min = sim.array()?.fresnel_distance();
    let r_max = sim.r_max()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    (0..sim.n_users)
        .map(|_| {
            let theta = 2.0 * rng.gen::<f64>() - 1.0;
            let v: f64 = rng.gen();
            // v in [0, 1) keeps every draw strictly beyond r_min
            let r = match sim.users.kind {
                RangeDistribution::Uniform => r_max - v * (r_max - r_min),
                RangeDistribution::UniformInverse => 1.0 / (1.0 / r_max + v * (1.0 / r_min - 1.0 / r_max)),
            };
            PolarPoint::from_range(theta, r)
        })
        .collect()
}

/// The proposed lower codebook for a configuration.
pub fn experiment_lower(sim: &SimConfig) -> Result<LowerCodebook> {
    let cfg = sim.array()?;
    match sim.lower_grid {
        Some(g) => LowerCodebook::with_grid(&cfg, sim.rho, g.n_angles, g.n_rings),
        None => build_lower_codebook(&cfg, sim.rho),
    }
}

pub fn experiment_hierarchy(
    sim: &SimConfig,
    lower: &LowerCodebook,
    pattern: PatternKind,
) -> Result<HierarchicalCodebook> {
    let hcfg = HierarchyConfig {
        n_levels: sim.n_levels_for(lower)?,
        pattern,
        half_gain_fraction: sim.half_gain_fraction,
        normalization: sim.normalization,
    };
    build_hierarchy(lower.cfg(), &hcfg, lower.clone())
}

fn far_field_codebook(sim: &SimConfig, proposed: &LowerCodebook) -> Result<LowerCodebook> {
    let cfg = proposed.cfg();
    let n_angles = match sim.far_field_baseline {
        FarFieldBaseline::Oversampled => proposed.n_angles(),
        FarFieldBaseline::Dft => cfg.n_elements(),
    };
    LowerCodebook::with_grid(cfg, sim.rho, n_angles, 1)
}

fn under_sampled_codebook(sim: &SimConfig, proposed: &LowerCodebook) -> Result<LowerCodebook> {
    let n_angles = (proposed.n_angles() / 2).max(1);
    let n_rings = proposed.n_rings().saturating_sub(1).max(1);
    LowerCodebook::with_grid(proposed.cfg(), sim.rho, n_angles, n_rings)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    #[serde(serialize_with = "full_precision")]
    pub value: f64,
}

fn full_precision<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_none();
    }
    let raw = RawValue::from_string(format!("{x:.16e}")).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodebookReport {
    pub name: String,
    pub n_angles: usize,
    /// Rings per level, lower codebook last.
    pub rings: Vec<usize>,
    pub content_hash: String,
    pub metrics: Vec<Metric>,
}

impl CodebookReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub config: SimConfig,
    #[serde(serialize_with = "full_precision")]
    pub r_min: f64,
    #[serde(serialize_with = "full_precision")]
    pub r_max: f64,
    pub n_users: usize,
    pub codebooks: Vec<CodebookReport>,
}

impl ExperimentReport {
    pub fn codebook(&self, name: &str) -> Option<&CodebookReport> {
        self.codebooks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialises");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One `codebook,metric,value` row per metric.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("codebook,metric,value\n");
        for cb in &self.codebooks {
            for m in &cb.metrics {
                writeln!(out, "{},{},{:.16e}", cb.name, m.name, m.value).expect("writing to a String cannot fail");
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidParameter(format!(
                "unknown format '{other}', expected csv or json"
            ))),
        }
    }
}

pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json(),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

fn los_channel(cfg: &ArrayConfig, user: &PolarPoint) -> Result<Vec<num_complex::Complex64>> {
    synthesize_channel(cfg, &ChannelRealization::line_of_sight(*user))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

fn minimum(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(f64::INFINITY, f64::min)
}

fn metric(name: &str, value: f64) -> Metric {
    Metric {
        name: name.to_string(),
        value,
    }
}

fn lower_report(name: &str, cb: &LowerCodebook, metrics: Vec<Metric>) -> CodebookReport {
    CodebookReport {
        name: name.to_string(),
        n_angles: cb.n_angles(),
        rings: vec![cb.n_rings()],
        content_hash: StoredCodebook::Lower(cb.clone()).content_hash(),
        metrics,
    }
}

fn report_shell(sim: &SimConfig, experiment: Experiment) -> Result<ExperimentReport> {
    let mut config = sim.clone();
    config.experiment = Some(experiment);
    Ok(ExperimentReport {
        experiment,
        config,
        r_min: sim.array()?.fresnel_distance(),
        r_max: sim.r_max()?,
        n_users: sim.n_users,
        codebooks: Vec::new(),
    })
}

/// Average and minimum gain of exhaustive selection over three codebooks.
pub fn run_gain_experiment(sim: &SimConfig) -> Result<ExperimentReport> {
    let users = sample_users(sim)?;
    let proposed = experiment_lower(sim)?;
    let under = under_sampled_codebook(sim, &proposed)?;
    let far = far_field_codebook(sim, &proposed)?;
    let cfg = *proposed.cfg();
    let books = [("proposed", &proposed), ("under-sampled", &under), ("far-field", &far)];

    let per_user: Vec<[f64; 3]> = in_pool(sim.threads, || {
        users
            .par_iter()
            .map(|u| -> Result<[f64; 3]> {
                let h = los_channel(&cfg, u)?;
                let mut g = [0.0; 3];
                for (slot, (_, cb)) in g.iter_mut().zip(&books) {
                    *slot = exhaustive_search_top(cb, &h, 1)?.achieved_gain;
                }
                Ok(g)
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut report = report_shell(sim, Experiment::Gain)?;
    for (k, (name, cb)) in books.iter().enumerate() {
        let metrics = vec![
            metric("average_gain", mean(per_user.iter().map(|g| g[k]))),
            metric("minimum_gain", minimum(per_user.iter().map(|g| g[k]))),
            metric("steps", cb.len() as f64),
        ];
        report.codebooks.push(lower_report(name, cb, metrics));
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug)]
struct SearchOutcome {
    steps: usize,
    upper_steps: usize,
    gain: f64,
    top1: bool,
    top3: bool,
}

/// Hierarchical search with each pattern against the exhaustive oracle.
pub fn run_search_experiment(sim: &SimConfig) -> Result<ExperimentReport> {
    let users = sample_users(sim)?;
    let lower = experiment_lower(sim)?;
    let cfg = *lower.cfg();
    let hierarchies = sim
        .patterns
        .as_deref()
        .unwrap_or(&PatternKind::ALL)
        .iter()
        .map(|&p| experiment_hierarchy(sim, &lower, p))
        .collect::<Result<Vec<_>>>()?;
    let keep = 3.min(lower.len());

    type UserRow = (f64, Vec<SearchOutcome>);
    let per_user: Vec<UserRow> = in_pool(sim.threads, || {
        users
            .par_iter()
            .map(|u| -> Result<UserRow> {
                let h = los_channel(&cfg, u)?;
                let oracle = exhaustive_search_top(&lower, &h, keep)?;
                let oracle_slice = std::slice::from_ref(&oracle);
                let outcomes = hierarchies
                    .iter()
                    .map(|hier| {
                        let res = hierarchical_search(hier, &h)?;
                        let one = std::slice::from_ref(&res);
                        Ok(SearchOutcome {
                            steps: res.steps,
                            upper_steps: res.upper_steps,
                            gain: res.achieved_gain,
                            top1: topk_agreement(one, oracle_slice, 1)? == 1.0,
                            top3: topk_agreement(one, oracle_slice, keep)? == 1.0,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((oracle.achieved_gain, outcomes))
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let n = per_user.len() as f64;
    let mut report = report_shell(sim, Experiment::Search)?;
    report.codebooks.push(lower_report(
        "exhaustive",
        &lower,
        vec![
            metric("mean_steps", lower.len() as f64),
            metric("average_gain", mean(per_user.iter().map(|u| u.0))),
            metric("minimum_gain", minimum(per_user.iter().map(|u| u.0))),
        ],
    ));
    for (k, hier) in hierarchies.iter().enumerate() {
        let col = || per_user.iter().map(move |u| u.1[k]);
        let metrics = vec![
            metric("mean_steps", mean(col().map(|o| o.steps as f64))),
            metric("mean_upper_steps", mean(col().map(|o| o.upper_steps as f64))),
            metric("max_steps", col().map(|o| o.steps).max().unwrap_or(0) as f64),
            metric("top1", col().filter(|o| o.top1).count() as f64 / n),
            metric("top3", col().filter(|o| o.top3).count() as f64 / n),
            metric("average_gain", mean(col().map(|o| o.gain))),
            metric("minimum_gain", minimum(col().map(|o| o.gain))),
        ];
        report.codebooks.push(CodebookReport {
            name: hier.config().pattern.to_string(),
            n_angles: lower.n_angles(),
            rings: hier.ring_counts(),
            content_hash: StoredCodebook::Hierarchy(hier.clone()).content_hash(),
            metrics,
        });
    }
    Ok(report)
}
