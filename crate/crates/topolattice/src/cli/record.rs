//! Machine-readable experiment results: one record per parameter point, with
//! per-seed values, ensemble statistics, diagnostics, and the resolved config.

use serde::Serialize;
use std::collections::BTreeMap;

/// Outcome of one disorder realization inside a record.
#[derive(Debug, Clone, Serialize)]
pub struct SeedValue {
    pub seed: u64,
    /// Primary scalar; absent when this realization failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Named secondary scalars (companion routes, defects, gap edges, …).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One result record: a single parameter point of one experiment, aggregated
/// over the seed ensemble. Serializing a record is deterministic — maps are
/// key-sorted, sequences keep construction order, and no timestamps are
/// embedded unless timing is explicitly requested.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub experiment: String,
    /// SHA-256 of the resolved config; identical configs collide by design.
    pub fingerprint: String,
    /// Sweep coordinates of this record (field value, beta, mu, order, …).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<SeedValue>,
    /// Ensemble mean of the primary scalar over successful seeds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Standard error of the mean (absent below two successful seeds).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    /// Named vector payloads (eigenvalues, histogram masses, norm tables, …).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub vectors: BTreeMap<String, Vec<f64>>,
    /// Scalar diagnostics aggregated across the ensemble.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, f64>,
    /// Numeric failures carried without aborting the sweep.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
    /// Wall time of the run; populated only with `--timing` so that default
    /// outputs stay byte-identical across reruns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
    /// The fully resolved configuration this record was produced from.
    pub config: serde_json::Value,
}

impl ResultRecord {
    pub fn new(
        experiment: &str,
        fingerprint: &str,
        config: &serde_json::Value,
        params: BTreeMap<String, f64>,
    ) -> Self {
        ResultRecord {
            experiment: experiment.to_string(),
            fingerprint: fingerprint.to_string(),
            params,
            seeds: Vec::new(),
            per_seed: Vec::new(),
            value: None,
            stderr: None,
            vectors: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            errors: Vec::new(),
            wall_time_ms: None,
            config: config.clone(),
        }
    }

    /// Append one realization's outcome.
    pub fn push_seed(
        &mut self,
        seed: u64,
        outcome: Result<(f64, BTreeMap<String, f64>), String>,
    ) {
        self.seeds.push(seed);
        match outcome {
            Ok((value, extra)) => self.per_seed.push(SeedValue {
                seed,
                value: Some(value),
                extra,
                error: None,
            }),
            Err(message) => {
                self.errors.push(format!("seed {seed}: {message}"));
                self.per_seed.push(SeedValue {
                    seed,
                    value: None,
                    extra: BTreeMap::new(),
                    error: Some(message),
                });
            }
        }
    }

    /// Compute mean and standard error from the successful seeds.
    pub fn aggregate(&mut self) {
        let values: Vec<f64> = self.per_seed.iter().filter_map(|s| s.value).collect();
        if values.is_empty() {
            self.value = None;
            self.stderr = None;
            return;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        self.value = Some(mean);
        self.stderr = if values.len() >= 2 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (n - 1.0);
            Some((var / n).sqrt())
        } else {
            None
        };
    }

    /// Largest value of a named per-seed extra, when any seed reports it.
    pub fn max_extra(&self, name: &str) -> Option<f64> {
        self.per_seed
            .iter()
            .filter_map(|s| s.extra.get(name).copied())
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}

/// Everything a run produced: the records plus an optional CSV table
/// (one row per parameter point per seed).
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<ResultRecord>,
    pub csv: Option<String>,
}

impl RunOutput {
    pub fn any_errors(&self) -> bool {
        self.records.iter().any(|r| !r.errors.is_empty())
    }

    /// Deterministic pretty JSON of the record list.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.records)
            .expect("record serialization cannot fail");
        out.push('\n');
        out
    }
}
