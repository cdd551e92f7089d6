//! Reproducible experiment runs: generate or construct squares, count or
//! estimate their transversals, compare with the entropy bound and check the
//! counting claims, then emit one CSV/JSON row per square.
//!
//! A config is JSON:
//!
//! ```json
//! {
//!   "seed": 7,
//!   "instances": [
//!     {"source": {"kind": "cyclic", "n": [1, 2, 3, 4, 5, 6, 7]}, "count": "exact"},
//!     {"source": {"kind": "construct", "b": 3, "k": 1},
//!      "count": {"estimate": {"samples": 100000}}, "bounds": true},
//!     {"source": {"kind": "random", "n": [5, 6, 7, 8, 9]}, "claims": {"pairs": 20}}
//!   ]
//! }
//! ```
//!
//! Rows come out in config order whatever the execution schedule, and every
//! random choice is keyed by the master seed, so a config reproduces its
//! report byte for byte.

use std::path::PathBuf;

use rand::Rng as _;
use serde::{Deserialize, Serialize, Serializer};

use crate::bounds::{big_ln, upper_bound_log, verify_all_claims};
use crate::construction::{build_l_with, derive_params, relaxed_params, BuildOptions};
use crate::counting::{count_exact_with, enumerate_transversals_with, estimate_sis_with, random_transversal, CountOptions, SisOrder};
use crate::error::{Error, Result};
use crate::hypercube::{from_square, transversal_from_square};
use crate::latin::{cyclic_square, LatinSquare, Transversal};
use crate::par;
use crate::rng::{derive_seed, rng_from};
use crate::sampler::uniform_random_square;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Run instances (and the kernels inside them) on the rayon pool.
    #[serde(default = "default_true")]
    pub parallel: bool,
    pub instances: Vec<InstanceConfig>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub source: Source,
    #[serde(default)]
    pub count: CountMethod,
    /// Compare against the `d = 2` entropy bound.
    #[serde(default)]
    pub bounds: bool,
    #[serde(default)]
    pub claims: Option<ClaimsConfig>,
    /// Overrides the seed derived from the master seed.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Largest order counted exactly.
    #[serde(default)]
    pub guard: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Source {
    Cyclic { n: Orders },
    Random { n: Orders },
    Construct { b: usize, #[serde(default)] k: Option<usize> },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Orders {
    One(usize),
    Many(Vec<usize>),
}

impl Orders {
    fn to_vec(&self) -> Vec<usize> {
        match self {
            Orders::One(n) => vec![*n],
            Orders::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum CountMethod {
    #[default]
    None,
    Exact,
    Estimate {
        samples: u64,
        #[serde(default = "default_sis_order")]
        order: SisOrder,
    },
}

fn default_sis_order() -> SisOrder {
    SisOrder::MostConstrained
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimsConfig {
    /// Number of (square, transversal) pairs to check, every hyperplane each.
    pub pairs: usize,
}

fn config_err(path: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Config { path: path.into(), msg: msg.into() }
}

/// Parses and validates a config; errors carry the path of the offending key.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(path, e.into_inner().to_string())
    })?;
    validate_config(&config)?;
    Ok(config)
}

pub fn validate_config(config: &ExperimentConfig) -> Result<()> {
    if config.instances.is_empty() {
        return Err(config_err("instances", "at least one instance is required"));
    }
    for (i, inst) in config.instances.iter().enumerate() {
        let at = |key: &str| format!("instances[{i}].{key}");
        match &inst.source {
            Source::Cyclic { n } | Source::Random { n } => {
                let orders = n.to_vec();
                if orders.is_empty() || orders.contains(&0) {
                    return Err(config_err(at("source.n"), "orders must be positive"));
                }
            }
            Source::Construct { b, k } => {
                let params = match k {
                    Some(k) => relaxed_params(*b, *k),
                    None => derive_params(*b),
                };
                params.map_err(|e| config_err(at("source"), e.to_string()))?;
                if inst.count == CountMethod::Exact {
                    return Err(config_err(at("count"), "constructed squares are too large to count exactly"));
                }
            }
            Source::File { .. } => {}
        }
        if let CountMethod::Estimate { samples, .. } = inst.count {
            if samples < 2 {
                return Err(config_err(at("count.estimate.samples"), "need at least 2 samples"));
            }
        }
    }
    Ok(())
}

fn serialize_float<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        None => s.serialize_none(),
        Some(x) if x.is_finite() => s.serialize_f64(*x),
        Some(x) => s.serialize_str(&x.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub format_version: u32,
    pub instance: String,
    /// Order of the square (`N` for constructed ones).
    pub n: usize,
    pub b: Option<usize>,
    pub k: Option<usize>,
    pub seed: u64,
    pub exact_count: Option<String>,
    #[serde(serialize_with = "serialize_float")]
    pub sis_log_estimate: Option<f64>,
    /// Standard error of `sis_log_estimate`.
    #[serde(serialize_with = "serialize_float")]
    pub sis_stderr: Option<f64>,
    #[serde(serialize_with = "serialize_float")]
    pub log_lower_target: Option<f64>,
    #[serde(serialize_with = "serialize_float")]
    pub log_upper: Option<f64>,
    pub claims_checked: usize,
    pub claims_ok: usize,
    pub invariants_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub seed: u64,
    pub ok: bool,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("rows serialize");
        }
        if self.rows.is_empty() {
            return String::new();
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
    }

    /// JSON encoding. `generated_unix` adds a timestamp field, the only part
    /// of a report that differs between identical runs.
    pub fn to_json(&self, generated_unix: Option<u64>) -> String {
        let mut value = serde_json::to_value(self).expect("reports serialize");
        if let Some(ts) = generated_unix {
            value["generated_unix"] = ts.into();
        }
        let mut out = serde_json::to_string_pretty(&value).expect("reports serialize");
        out.push('\n');
        out
    }
}

struct Job<'a> {
    instance: &'a InstanceConfig,
    order: Option<usize>,
    seed: u64,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    validate_config(config)?;
    let mut jobs = Vec::new();
    for (index, instance) in config.instances.iter().enumerate() {
        let orders = match &instance.source {
            Source::Cyclic { n } | Source::Random { n } => n.to_vec().into_iter().map(Some).collect(),
            _ => vec![None],
        };
        for (j, order) in orders.into_iter().enumerate() {
            let seed = match instance.seed {
                Some(s) => derive_seed(s, &[j as u64]),
                None => derive_seed(config.seed, &[index as u64, j as u64]),
            };
            jobs.push(Job { instance, order, seed });
        }
    }
    let rows = par::map_ordered(jobs, config.parallel, |job| run_job(&job, config.parallel));
    let rows: Vec<ReportRow> = rows.into_iter().collect::<Result<_>>()?;
    Ok(ExperimentReport { format_version: REPORT_FORMAT_VERSION, seed: config.seed, ok: rows.iter().all(|r| r.invariants_ok), rows })
}

fn run_job(job: &Job<'_>, parallel: bool) -> Result<ReportRow> {
    let inst = job.instance;
    let (square, b, k, label) = match &inst.source {
        Source::Cyclic { .. } => {
            let n = job.order.expect("order");
            (cyclic_square(n)?, None, None, format!("cyclic-{n}"))
        }
        Source::Random { .. } => {
            let n = job.order.expect("order");
            (uniform_random_square(n, job.seed)?, None, None, format!("random-{n}"))
        }
        Source::Construct { b, k } => {
            let params = match k {
                Some(k) => relaxed_params(*b, *k)?,
                None => derive_params(*b)?,
            };
            let bs = build_l_with(&params, job.seed, &BuildOptions { parallel, ..BuildOptions::default() })?;
            (bs.l, Some(params.b), Some(params.k), format!("construct-b{}-k{}", params.b, params.k))
        }
        Source::File { path } => {
            let text = std::fs::read_to_string(path)?;
            (crate::io::parse_square(&text)?, None, None, path.display().to_string())
        }
    };
    let n = square.order();
    let instance = inst.name.clone().map(|name| format!("{name}/{label}")).unwrap_or(label);
    let mut row = ReportRow {
        format_version: REPORT_FORMAT_VERSION,
        instance,
        n,
        b,
        k,
        seed: job.seed,
        exact_count: None,
        sis_log_estimate: None,
        sis_stderr: None,
        log_lower_target: None,
        log_upper: None,
        claims_checked: 0,
        claims_ok: 0,
        invariants_ok: true,
    };
    let opts = CountOptions { guard: inst.guard.unwrap_or(crate::counting::DEFAULT_GUARD), parallel };
    let mut log_count = None;
    match inst.count {
        CountMethod::None => {}
        CountMethod::Exact => {
            let result = count_exact_with(&square, &opts)?;
            log_count = Some(big_ln(&result.count));
            row.exact_count = Some(result.count.to_string());
        }
        CountMethod::Estimate { samples, order } => {
            let est = estimate_sis_with(&square, samples, derive_seed(job.seed, &[0xe5]), order, parallel)?;
            row.sis_log_estimate = Some(est.log_mean);
            row.sis_stderr = Some(est.log_stderr);
        }
    }
    if inst.bounds && n > 4 {
        let bound = upper_bound_log(2, n as u64)?;
        row.log_upper = Some(bound.log_upper);
        row.log_lower_target = Some(bound.log_lower_target);
        if let Some(lc) = log_count {
            row.invariants_ok &= lc <= bound.log_upper;
        }
        if let (Some(est), Some(se)) = (row.sis_log_estimate, row.sis_stderr) {
            row.invariants_ok &= est - 3.0 * se <= bound.log_upper;
        }
    }
    if let Some(claims) = inst.claims {
        let (checked, ok) = check_claim_pairs(&inst.source, &square, claims.pairs, job.seed, &opts)?;
        row.claims_checked = checked;
        row.claims_ok = ok;
        row.invariants_ok &= checked == ok;
    }
    Ok(row)
}

/// Picks a transversal of `square`: uniformly from the full list when it is
/// small enough to enumerate, by randomized search otherwise.
pub fn pick_transversal(square: &LatinSquare, seed: u64, opts: &CountOptions) -> Option<Transversal> {
    if square.order() <= 9.min(opts.guard) {
        let all = enumerate_transversals_with(square, None, opts).ok()?;
        if all.is_empty() {
            return None;
        }
        let mut rng = rng_from(seed, &[0x9c]);
        let pick = rng.random_range(0..all.len());
        return all.into_iter().nth(pick);
    }
    (0..8).find_map(|attempt| random_transversal(square, |_, _| true, derive_seed(seed, &[attempt]), 200_000))
}

/// Checks both claims on every hyperplane for `pairs` (square, transversal)
/// pairs. Random sources draw a fresh square per pair (redrawing squares
/// without transversals); other sources reuse `square`. Returns
/// `(pairs checked, pairs with no failure)`.
fn check_claim_pairs(source: &Source, square: &LatinSquare, pairs: usize, seed: u64, opts: &CountOptions) -> Result<(usize, usize)> {
    let mut checked = 0;
    let mut ok = 0;
    for p in 0..pairs {
        let pair_seed = derive_seed(seed, &[0xc1a1, p as u64]);
        let found = match source {
            Source::Random { .. } => (0..64u64).find_map(|attempt| {
                let sq = uniform_random_square(square.order(), derive_seed(pair_seed, &[attempt])).ok()?;
                let t = pick_transversal(&sq, pair_seed, opts)?;
                Some((sq, t))
            }),
            _ => pick_transversal(square, pair_seed, opts).map(|t| (square.clone(), t)),
        };
        let Some((sq, t)) = found else { continue };
        let h = from_square(&sq)?;
        let x = transversal_from_square(&sq, &t);
        checked += 1;
        if verify_all_claims(&h, &x)?.is_empty() {
            ok += 1;
        }
    }
    Ok((checked, ok))
}
