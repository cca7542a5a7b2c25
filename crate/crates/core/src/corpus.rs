//! Labeled paper corpora: loading, validation, label indexing and splitting.
//!
//! A corpus is a JSON-lines file with one paper per line:
//!
//! ```text
//! {"title": "...", "abstract": "...", "keywords": ["..."], "venue": "EMNLP"}
//! ```
//!
//! `keywords` is optional. Records that violate [`PaperRecord`] invariants are
//! skipped and counted in the [`LoadReport`] rather than aborting the load.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record on line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("corpus contains no valid records ({rejected} rejected)")]
    Empty { rejected: usize },
    #[error("venue {venue:?} has {count} record(s); stratified split needs at least 2")]
    VenueTooSmall { venue: String, count: usize },
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("split would leave the training set empty")]
    EmptyTrainSplit,
    #[error("unknown venue {0:?}")]
    UnknownVenue(String),
}

/// One labeled paper.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    /// Insertion-ordered; duplicates removed on ingestion.
    #[serde(default)]
    pub keywords: Vec<String>,
    pub venue: String,
}

impl PaperRecord {
    pub fn new(
        title: impl Into<String>,
        abstract_text: impl Into<String>,
        keywords: impl IntoIterator<Item = impl Into<String>>,
        venue: impl Into<String>,
    ) -> Self {
        let mut record = Self {
            title: title.into(),
            abstract_text: abstract_text.into(),
            keywords: keywords.into_iter().map(Into::into).collect(),
            venue: venue.into(),
        };
        record.dedup_keywords();
        record
    }

    /// Checks the record invariants, returning the reason on failure.
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.venue.trim().is_empty() {
            return Err("empty venue");
        }
        if self.title.trim().is_empty() && self.abstract_text.trim().is_empty() {
            return Err("empty title and abstract");
        }
        Ok(())
    }

    fn dedup_keywords(&mut self) {
        let mut seen = std::collections::HashSet::new();
        self.keywords.retain(|k| seen.insert(k.clone()));
    }
}

/// Title, abstract and keywords joined by single spaces, in that order.
/// Empty parts are skipped so that a record without keywords yields
/// `"title abstract"`.
pub fn document_text(record: &PaperRecord) -> String {
    let mut parts: Vec<&str> = Vec::with_capacity(2 + record.keywords.len());
    parts.push(&record.title);
    parts.push(&record.abstract_text);
    parts.extend(record.keywords.iter().map(String::as_str));
    parts.retain(|p| !p.is_empty());
    parts.join(" ")
}

/// Venue labels with stable, contiguous indices and occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "LabelIndexRepr", into = "LabelIndexRepr")]
pub struct LabelIndex {
    labels: Vec<String>,
    counts: Vec<usize>,
    lookup: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct LabelIndexRepr {
    labels: Vec<String>,
    counts: Vec<usize>,
}

impl From<LabelIndexRepr> for LabelIndex {
    fn from(repr: LabelIndexRepr) -> Self {
        let lookup = repr
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Self {
            labels: repr.labels,
            counts: repr.counts,
            lookup,
        }
    }
}

impl From<LabelIndex> for LabelIndexRepr {
    fn from(index: LabelIndex) -> Self {
        Self {
            labels: index.labels,
            counts: index.counts,
        }
    }
}

impl LabelIndex {
    /// Builds an index in first-appearance order.
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        let mut index = Self {
            labels: Vec::new(),
            counts: Vec::new(),
            lookup: HashMap::new(),
        };
        for label in labels {
            index.observe(label);
        }
        index
    }

    /// Builds an index from explicit labels and counts, e.g. for synthetic tests.
    pub fn with_counts(entries: impl IntoIterator<Item = (impl Into<String>, usize)>) -> Self {
        let (labels, counts): (Vec<String>, Vec<usize>) =
            entries.into_iter().map(|(l, c)| (l.into(), c)).unzip();
        LabelIndexRepr { labels, counts }.into()
    }

    fn observe(&mut self, label: &str) -> usize {
        if let Some(&i) = self.lookup.get(label) {
            self.counts[i] += 1;
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_owned());
        self.counts.push(1);
        self.lookup.insert(label.to_owned(), i);
        i
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.lookup.get(label).copied()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn count(&self, index: usize) -> usize {
        self.counts[index]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Same labels in the same positions with all counts reset to zero.
    fn zeroed(&self) -> Self {
        Self {
            labels: self.labels.clone(),
            counts: vec![0; self.labels.len()],
            lookup: self.lookup.clone(),
        }
    }
}

/// Outcome of a corpus load: how many lines were accepted and why others were not.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub accepted: usize,
    pub rejected: usize,
    /// (1-based line number, reason) for each rejected record.
    pub rejections: Vec<(usize, String)>,
}

/// An ordered collection of labeled papers and its venue index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperCorpus {
    records: Vec<PaperRecord>,
    venues: LabelIndex,
    /// Venue index per record, aligned with `records`.
    labels: Vec<usize>,
}

impl PaperCorpus {
    /// Builds a corpus from already-validated records. Invalid records are dropped.
    pub fn from_records(records: impl IntoIterator<Item = PaperRecord>) -> Self {
        let records: Vec<PaperRecord> = records
            .into_iter()
            .filter(|r| r.validate().is_ok())
            .collect();
        let venues = LabelIndex::from_labels(records.iter().map(|r| r.venue.as_str()));
        Self::with_index(records, venues.zeroed())
    }

    /// Records are counted into a copy of `index`; their venues must exist in it.
    fn with_index(records: Vec<PaperRecord>, mut venues: LabelIndex) -> Self {
        let labels = records.iter().map(|r| venues.observe(&r.venue)).collect();
        Self {
            records,
            venues,
            labels,
        }
    }

    /// Re-indexes this corpus against a fixed venue index (e.g. the training
    /// index of a bundle). Fails on venues the index does not know.
    pub fn reindex(&self, index: &LabelIndex) -> Result<Self, CorpusError> {
        for r in &self.records {
            if index.index_of(&r.venue).is_none() {
                return Err(CorpusError::UnknownVenue(r.venue.clone()));
            }
        }
        Ok(Self::with_index(self.records.clone(), index.zeroed()))
    }

    pub fn records(&self) -> &[PaperRecord] {
        &self.records
    }

    pub fn venues(&self) -> &LabelIndex {
        &self.venues
    }

    /// Venue index of every record.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn texts(&self) -> Vec<String> {
        self.records.iter().map(document_text).collect()
    }
}

/// Reads a JSON-lines corpus from a file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<(PaperCorpus, LoadReport), CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    read_corpus(BufReader::new(file)).map_err(|e| match e {
        CorpusError::Io { source, .. } => io_err(source),
        other => other,
    })
}

/// Reads a JSON-lines corpus from any buffered reader. Blank lines are ignored.
pub fn read_corpus(reader: impl BufRead) -> Result<(PaperCorpus, LoadReport), CorpusError> {
    let mut records = Vec::new();
    let mut report = LoadReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: String::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut record: PaperRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        record.dedup_keywords();
        match record.validate() {
            Ok(()) => records.push(record),
            Err(reason) => {
                report.rejected += 1;
                report.rejections.push((line_no, reason.to_owned()));
            }
        }
    }
    report.accepted = records.len();
    if records.is_empty() {
        return Err(CorpusError::Empty {
            rejected: report.rejected,
        });
    }
    Ok((PaperCorpus::from_records(records), report))
}

/// SHA-256 of the raw corpus bytes, hex encoded.
pub fn fingerprint_file(path: impl AsRef<Path>) -> Result<String, CorpusError> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Splits each venue's records independently so that every venue contributes
/// `round(count * test_fraction)` records to the test side, clamped to keep at
/// least one record on each side. Both outputs share the input's venue index
/// positions.
pub fn stratified_split(
    corpus: &PaperCorpus,
    test_fraction: f64,
    seed: u64,
) -> Result<(PaperCorpus, PaperCorpus), CorpusError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CorpusError::BadFraction(test_fraction));
    }
    let venues = corpus.venues();
    let mut by_venue: Vec<Vec<usize>> = vec![Vec::new(); venues.len()];
    for (i, &label) in corpus.labels().iter().enumerate() {
        by_venue[label].push(i);
    }
    for (v, members) in by_venue.iter().enumerate() {
        if members.len() < 2 {
            return Err(CorpusError::VenueTooSmall {
                venue: venues.label(v).to_owned(),
                count: members.len(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; corpus.len()];
    for members in &mut by_venue {
        members.shuffle(&mut rng);
        let n = members.len();
        let take = ((n as f64) * test_fraction).round() as usize;
        let take = take.clamp(1, n - 1);
        for &i in &members[..take] {
            is_test[i] = true;
        }
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (record, &t) in corpus.records().iter().zip(&is_test) {
        if t {
            test.push(record.clone());
        } else {
            train.push(record.clone());
        }
    }
    if train.is_empty() {
        return Err(CorpusError::EmptyTrainSplit);
    }
    Ok((
        PaperCorpus::with_index(train, venues.zeroed()),
        PaperCorpus::with_index(test, venues.zeroed()),
    ))
}
