//! Tokenization, vocabulary construction and tf / tf-idf vectorization.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TextError {
    #[error("no training texts given")]
    NoTexts,
    #[error("vocabulary is empty after filtering (min_df={min_df}, max_df_ratio={max_df_ratio})")]
    EmptyVocabulary { min_df: usize, max_df_ratio: f64 },
    #[error("sparse vector invariant violated: {0}")]
    InvalidSparse(String),
}

/// Lowercases, splits on every non-alphanumeric character and drops tokens
/// shorter than two characters or made only of digits.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().nth(1).is_some())
        .filter(|t| !t.chars().all(|c| c.is_numeric()))
        .map(str::to_lowercase)
        .collect()
}

/// Document-frequency filters applied when building a [`Vocabulary`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VocabularyFilter {
    pub min_df: usize,
    pub max_df_ratio: f64,
    pub max_features: Option<usize>,
}

impl Default for VocabularyFilter {
    fn default() -> Self {
        Self {
            min_df: 5,
            max_df_ratio: 0.5,
            max_features: None,
        }
    }
}

/// Term to index map with document frequencies. Terms are indexed in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    document_frequency: Vec<usize>,
    total_documents: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    document_frequency: Vec<usize>,
    total_documents: usize,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Self::from_parts(r.terms, r.document_frequency, r.total_documents)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        Self {
            terms: v.terms,
            document_frequency: v.document_frequency,
            total_documents: v.total_documents,
        }
    }
}

impl Vocabulary {
    pub fn from_parts(
        terms: Vec<String>,
        document_frequency: Vec<usize>,
        total_documents: usize,
    ) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            terms,
            document_frequency,
            total_documents,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn document_frequency(&self, index: usize) -> usize {
        self.document_frequency[index]
    }

    pub fn total_documents(&self) -> usize {
        self.total_documents
    }
}

/// Builds a vocabulary from training texts.
///
/// Keeps terms whose document frequency lies in `[min_df, max_df_ratio * N]`.
/// With `max_features`, only the most frequent surviving terms (by total
/// occurrence count, ties broken lexicographically) are kept.
pub fn build_vocabulary<S: AsRef<str> + Sync>(
    texts: &[S],
    filter: &VocabularyFilter,
) -> Result<Vocabulary, TextError> {
    if texts.is_empty() {
        return Err(TextError::NoTexts);
    }
    let n = texts.len();
    let per_doc: Vec<HashMap<String, usize>> = texts
        .par_iter()
        .map(|t| {
            let mut counts = HashMap::new();
            for tok in tokenize(t.as_ref()) {
                *counts.entry(tok).or_insert(0) += 1;
            }
            counts
        })
        .collect();

    // BTreeMap keeps terms in lexicographic order.
    let mut stats: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for doc in per_doc {
        for (term, count) in doc {
            let entry = stats.entry(term).or_insert((0, 0));
            entry.0 += 1;
            entry.1 += count;
        }
    }

    let max_df = filter.max_df_ratio * n as f64;
    let mut kept: Vec<(String, usize, usize)> = stats
        .into_iter()
        .filter(|(_, (df, _))| *df >= filter.min_df.max(1) && (*df as f64) <= max_df)
        .map(|(t, (df, freq))| (t, df, freq))
        .collect();

    if let Some(limit) = filter.max_features {
        if kept.len() > limit {
            kept.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
            kept.truncate(limit);
            kept.sort_by(|a, b| a.0.cmp(&b.0));
        }
    }
    if kept.is_empty() {
        return Err(TextError::EmptyVocabulary {
            min_df: filter.min_df,
            max_df_ratio: filter.max_df_ratio,
        });
    }
    let (terms, dfs): (Vec<String>, Vec<usize>) = kept.into_iter().map(|(t, df, _)| (t, df)).unzip();
    Ok(Vocabulary::from_parts(terms, dfs, n))
}

/// Nonnegative sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a vector from (index, value) pairs, validating the invariants.
    /// Zero entries are dropped.
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self, TextError> {
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if i >= dim {
                return Err(TextError::InvalidSparse(format!("index {i} >= dimension {dim}")));
            }
            if !(v >= 0.0 && v.is_finite()) {
                return Err(TextError::InvalidSparse(format!("weight {v} at index {i}")));
            }
            if let Some(&last) = indices.last() {
                if i <= last {
                    return Err(TextError::InvalidSparse("indices not strictly increasing".into()));
                }
            }
            if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
        }
        Ok(Self { dim, indices, values })
    }

    /// Entries must already be sorted by strictly increasing index.
    pub(crate) fn from_sorted_entries(dim: usize, entries: Vec<(usize, f64)>) -> Self {
        let (indices, values) = entries.into_iter().unzip();
        Self { dim, indices, values }
    }

    /// Sparse view of a dense slice, keeping nonzero entries.
    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .unzip();
        Self {
            dim: dense.len(),
            indices,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    /// Multiplies every weight by `factor` (which must be positive).
    pub fn scaled(&self, factor: f64) -> Self {
        debug_assert!(factor > 0.0);
        Self {
            dim: self.dim,
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Appends `other` after this vector's dimension.
    pub fn concat(&self, other: &SparseVector) -> Self {
        let mut indices = self.indices.clone();
        let mut values = self.values.clone();
        indices.extend(other.indices.iter().map(|i| i + self.dim));
        values.extend_from_slice(&other.values);
        Self {
            dim: self.dim + other.dim,
            indices,
            values,
        }
    }

    /// Restricts to the index range `[start, end)`, re-based at zero.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        let (indices, values) = self
            .iter()
            .filter(|(i, _)| *i >= start && *i < end)
            .map(|(i, v)| (i - start, v))
            .unzip();
        Self {
            dim: end - start,
            indices,
            values,
        }
    }
}

/// Compressed sparse row matrix; rows are documents.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Stacks sparse vectors of equal dimension as rows. `cols` is used when
    /// there are no rows.
    pub fn from_rows(rows: &[SparseVector], cols: usize) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let nnz = rows.iter().map(SparseVector::nnz).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut data = Vec::with_capacity(nnz);
        for row in rows {
            assert_eq!(row.dim(), cols, "row dimension mismatch");
            indices.extend_from_slice(row.indices());
            data.extend_from_slice(row.values());
            indptr.push(indices.len());
        }
        Self {
            cols,
            indptr,
            indices,
            data,
        }
    }

    /// Dense row-major input; zeros are not stored.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let sparse: Vec<SparseVector> = rows.iter().map(|r| SparseVector::from_dense(r)).collect();
        Self::from_rows(&sparse, cols)
    }

    pub fn rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// (column, value) pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.data[span].iter().copied())
    }

    pub fn row_vector(&self, r: usize) -> SparseVector {
        let span = self.indptr[r]..self.indptr[r + 1];
        SparseVector {
            dim: self.cols,
            indices: self.indices[span.clone()].to_vec(),
            values: self.data[span].to_vec(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Term weighting applied by [`vectorize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Tf,
    Tfidf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    L2,
}

/// Vocabulary plus smoothed idf weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    vocabulary: Vocabulary,
    idf: Vec<f64>,
    normalization: Normalization,
}

/// `ln((1 + N) / (1 + df)) + 1`
pub fn smoothed_idf(total_documents: usize, document_frequency: usize) -> f64 {
    ((1.0 + total_documents as f64) / (1.0 + document_frequency as f64)).ln() + 1.0
}

/// Computes document frequencies of the vocabulary terms over `train_texts`
/// and derives smoothed idf weights from them.
///
/// Terms that do not occur in `train_texts` are counted as occurring once so
/// that every idf stays finite and positive.
pub fn fit_tfidf<S: AsRef<str> + Sync>(train_texts: &[S], vocabulary: Vocabulary) -> TfidfModel {
    let mut df = vec![0usize; vocabulary.len()];
    let seen: Vec<Vec<usize>> = train_texts
        .par_iter()
        .map(|text| {
            let set: std::collections::BTreeSet<usize> = tokenize(text.as_ref())
                .iter()
                .filter_map(|t| vocabulary.index_of(t))
                .collect();
            set.into_iter().collect()
        })
        .collect();
    for doc in seen {
        for i in doc {
            df[i] += 1;
        }
    }
    let n = train_texts.len().max(1);
    let df: Vec<usize> = df.into_iter().map(|d| d.clamp(1, n)).collect();
    let idf = df.iter().map(|&d| smoothed_idf(n, d)).collect();
    let vocabulary = Vocabulary::from_parts(vocabulary.terms, df, n);
    TfidfModel {
        vocabulary,
        idf,
        normalization: Normalization::L2,
    }
}

impl TfidfModel {
    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }
}

/// Term counts restricted to the vocabulary, optionally idf-weighted, then
/// L2-normalized. Out-of-vocabulary tokens are ignored.
pub fn vectorize(text: &str, model: &TfidfModel, weighting: Weighting) -> SparseVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for tok in tokenize(text) {
        if let Some(i) = model.vocabulary.index_of(&tok) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    let (indices, mut values): (Vec<usize>, Vec<f64>) = counts
        .into_iter()
        .map(|(i, c)| match weighting {
            Weighting::Tf => (i, c),
            Weighting::Tfidf => (i, c * model.idf[i]),
        })
        .unzip();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    SparseVector {
        dim: model.dim(),
        indices,
        values,
    }
}

/// Vectorizes many texts in parallel; row order follows input order.
pub fn vectorize_all<S: AsRef<str> + Sync>(
    texts: &[S],
    model: &TfidfModel,
    weighting: Weighting,
) -> CsrMatrix {
    let rows: Vec<SparseVector> = texts
        .par_iter()
        .map(|t| vectorize(t.as_ref(), model, weighting))
        .collect();
    CsrMatrix::from_rows(&rows, model.dim())
}
