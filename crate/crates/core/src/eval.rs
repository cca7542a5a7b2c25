//! Ranking metrics (accuracy, accuracy@k, mean reciprocal rank) and
//! Table-style reports.
//!
//! Metrics are computed from a histogram of true-label ranks, so the result
//! does not depend on the order in which test items were scored.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::VenueRanking;
use crate::corpus::{document_text, PaperCorpus};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("empty test set")]
    EmptyTestSet,
    #[error("{rankings} rankings but {labels} labels")]
    LengthMismatch { rankings: usize, labels: usize },
    #[error("k = {k} out of range 1..={venues}")]
    KOutOfRange { k: usize, venues: usize },
    #[error("ranking {index} does not contain the true venue {venue}")]
    LabelNotRanked { index: usize, venue: usize },
    #[error("pipeline failed on test record {index}: {message}")]
    Pipeline { index: usize, message: String },
    #[error("cannot average an empty list of reports")]
    NoReports,
}

/// Counts of true-label ranks; `counts[r]` is the number of items at rank `r` (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankHistogram {
    counts: Vec<u64>,
    total: u64,
    venues: usize,
}

impl RankHistogram {
    pub fn from_ranks(ranks: &[usize], venues: usize) -> Self {
        let mut counts = vec![0u64; venues + 1];
        for &r in ranks {
            debug_assert!(r >= 1 && r <= venues);
            counts[r] += 1;
        }
        Self {
            counts,
            total: ranks.len() as u64,
            venues,
        }
    }

    /// Ranks of the true labels, validating the inputs.
    pub fn from_rankings(rankings: &[VenueRanking], labels: &[usize]) -> Result<Self, EvalError> {
        if rankings.len() != labels.len() {
            return Err(EvalError::LengthMismatch {
                rankings: rankings.len(),
                labels: labels.len(),
            });
        }
        if rankings.is_empty() {
            return Err(EvalError::EmptyTestSet);
        }
        let venues = rankings.iter().map(VenueRanking::len).max().unwrap_or(0);
        let ranks = rankings
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(index, (r, &venue))| {
                r.rank_of(venue)
                    .ok_or(EvalError::LabelNotRanked { index, venue })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_ranks(&ranks, venues))
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn venues(&self) -> usize {
        self.venues
    }

    pub fn accuracy_at_k(&self, k: usize) -> Result<f64, EvalError> {
        if self.total == 0 {
            return Err(EvalError::EmptyTestSet);
        }
        if k == 0 || k > self.venues {
            return Err(EvalError::KOutOfRange {
                k,
                venues: self.venues,
            });
        }
        let hits: u64 = self.counts[1..=k].iter().sum();
        Ok(hits as f64 / self.total as f64)
    }

    pub fn mrr(&self) -> Result<f64, EvalError> {
        if self.total == 0 {
            return Err(EvalError::EmptyTestSet);
        }
        let sum: f64 = self
            .counts
            .iter()
            .enumerate()
            .skip(1)
            .map(|(r, &c)| c as f64 / r as f64)
            .sum();
        Ok(sum / self.total as f64)
    }
}

/// Fraction of items whose true venue is among the top `k`.
pub fn accuracy_at_k(rankings: &[VenueRanking], labels: &[usize], k: usize) -> Result<f64, EvalError> {
    RankHistogram::from_rankings(rankings, labels)?.accuracy_at_k(k)
}

/// Mean of `1 / rank(true venue)`.
pub fn mrr(rankings: &[VenueRanking], labels: &[usize]) -> Result<f64, EvalError> {
    RankHistogram::from_rankings(rankings, labels)?.mrr()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub test_size: usize,
    pub ks: Vec<usize>,
    pub accuracy: f64,
    pub accuracy_at_k: BTreeMap<usize, f64>,
    pub mrr: f64,
    /// Number of runs averaged into this report (1 for deterministic methods).
    pub runs: usize,
}

impl MetricsReport {
    pub fn from_histogram(
        method: impl Into<String>,
        hist: &RankHistogram,
        ks: &[usize],
    ) -> Result<Self, EvalError> {
        let mut accuracy_at_k = BTreeMap::new();
        for &k in ks {
            accuracy_at_k.insert(k, hist.accuracy_at_k(k)?);
        }
        Ok(Self {
            method: method.into(),
            test_size: hist.total() as usize,
            ks: ks.to_vec(),
            accuracy: hist.accuracy_at_k(1)?,
            accuracy_at_k,
            mrr: hist.mrr()?,
            runs: 1,
        })
    }

    /// Arithmetic mean of several reports of the same method and ks.
    pub fn mean(method: impl Into<String>, reports: &[MetricsReport]) -> Result<Self, EvalError> {
        let first = reports.first().ok_or(EvalError::NoReports)?;
        let n = reports.len() as f64;
        let avg = |f: &dyn Fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let accuracy_at_k = first
            .ks
            .iter()
            .map(|k| (*k, avg(&|r: &MetricsReport| r.accuracy_at_k[k])))
            .collect();
        Ok(Self {
            method: method.into(),
            test_size: first.test_size,
            ks: first.ks.clone(),
            accuracy: avg(&|r| r.accuracy),
            accuracy_at_k,
            mrr: avg(&|r| r.mrr),
            runs: reports.iter().map(|r| r.runs).sum(),
        })
    }
}

/// Runs `pipeline` on every test record's document text and aggregates the
/// metrics. The pipeline receives the record's position and its text.
pub fn evaluate<F, E>(
    method: &str,
    pipeline: F,
    test: &PaperCorpus,
    ks: &[usize],
) -> Result<MetricsReport, EvalError>
where
    F: Fn(usize, &str) -> Result<VenueRanking, E> + Sync,
    E: std::fmt::Display,
{
    if test.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let ranks = test
        .records()
        .par_iter()
        .zip(test.labels())
        .enumerate()
        .map(|(index, (record, &venue))| {
            let ranking = pipeline(index, &document_text(record)).map_err(|e| EvalError::Pipeline {
                index,
                message: e.to_string(),
            })?;
            ranking
                .rank_of(venue)
                .ok_or(EvalError::LabelNotRanked { index, venue })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let hist = RankHistogram::from_ranks(&ranks, test.venues().len());
    MetricsReport::from_histogram(method, &hist, ks)
}

/// Aligned text table with one row per report.
pub fn render_table(reports: &[MetricsReport]) -> String {
    let ks: Vec<usize> = {
        let mut all: Vec<usize> = reports.iter().flat_map(|r| r.ks.iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        all.retain(|&k| k != 1);
        all
    };
    let width = reports
        .iter()
        .map(|r| r.method.len())
        .max()
        .unwrap_or(6)
        .max("Method".len());
    let mut out = String::new();
    let _ = write!(out, "{:<width$}  {:>6}", "Method", "Acc");
    for k in &ks {
        let _ = write!(out, "  {:>6}", format!("Acc@{k}"));
    }
    let _ = writeln!(out, "  {:>6}", "MRR");
    for r in reports {
        let _ = write!(out, "{:<width$}  {:>6.3}", r.method, r.accuracy);
        for k in &ks {
            match r.accuracy_at_k.get(k) {
                Some(v) => {
                    let _ = write!(out, "  {v:>6.3}");
                }
                None => {
                    let _ = write!(out, "  {:>6}", "-");
                }
            }
        }
        let _ = writeln!(out, "  {:>6.3}", r.mrr);
    }
    out
}
