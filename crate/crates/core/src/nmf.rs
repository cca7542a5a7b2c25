//! Non-negative matrix factorization topic model.
//!
//! Factorizes a nonnegative document-term matrix `U (u x n)` as `U ≈ W H` with
//! `W (u x l)` holding per-document topic weights and `H (l x n)` holding one
//! term-importance row per topic. The objective is the squared Frobenius
//! error, minimized by damped multiplicative updates over row batches.
//!
//! Training keeps the sufficient statistics `A = Wᵀ U` and `B = Wᵀ W` for the
//! whole corpus. After a batch's `W` rows are refined, their contribution to
//! `A` and `B` is swapped in, so every `H` update is the exact multiplicative
//! step for the full objective. With `kappa = 1` each update therefore never
//! increases the reconstruction error.

use ndarray::{s, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{CsrMatrix, SparseVector, Vocabulary};

/// Added to every multiplicative-update denominator.
pub const DENOMINATOR_EPS: f64 = 1e-12;
/// Alternations between W-row and H updates within one batch.
pub const BATCH_ROUNDS: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum NmfError {
    #[error("input matrix is empty or all zero")]
    EmptyMatrix,
    #[error("input matrix has a negative or non-finite entry {value} in row {row}")]
    NegativeEntry { row: usize, value: f64 },
    #[error("invalid NMF configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("topic {topic} out of range (model has {topics} topics)")]
    TopicOutOfRange { topic: usize, topics: usize },
    #[error("topic {0} collapsed to an all-zero row; try fewer topics")]
    CollapsedTopic(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NmfConfig {
    pub num_topics: usize,
    /// Step damping in (0, 1]; 1 gives the classical multiplicative rule.
    pub kappa: f64,
    /// Update cap for a batch's W rows.
    pub w_max_iter: usize,
    /// Update cap for H after each batch.
    pub h_max_iter: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Stop when the relative change falls below this value, both per inner
    /// update loop and per epoch in reconstruction error. Zero disables it.
    pub tolerance: f64,
}

impl Default for NmfConfig {
    fn default() -> Self {
        Self {
            num_topics: 100,
            kappa: 1.0,
            w_max_iter: 300,
            h_max_iter: 100,
            epochs: 30,
            batch_size: 1024,
            seed: 0,
            tolerance: 1e-4,
        }
    }
}

impl NmfConfig {
    pub fn validate(&self) -> Result<(), NmfError> {
        let bad = |m: &str| Err(NmfError::InvalidConfig(m.to_owned()));
        if self.num_topics == 0 {
            return bad("num_topics must be at least 1");
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return bad("kappa must lie in (0, 1]");
        }
        if self.w_max_iter == 0 || self.h_max_iter == 0 {
            return bad("iteration caps must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return bad("tolerance must be nonnegative");
        }
        Ok(())
    }
}

/// Per-topic nonnegative weights of one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicVector(Vec<f64>);

impl TopicVector {
    pub fn new(weights: Vec<f64>) -> Self {
        debug_assert!(weights.iter().all(|&w| w >= 0.0));
        Self(weights)
    }

    pub fn zeros(topics: usize) -> Self {
        Self(vec![0.0; topics])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&w| w == 0.0)
    }

    /// Topic indices ordered by descending weight, ties by index.
    pub fn ranked(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.0.len()).collect();
        order.sort_by(|&a, &b| self.0[b].total_cmp(&self.0[a]).then(a.cmp(&b)));
        order
    }

    pub fn argmax(&self) -> Option<usize> {
        self.ranked().first().copied()
    }

    pub fn to_sparse(&self) -> SparseVector {
        SparseVector::from_dense(&self.0)
    }
}

/// A trained topic model: the `H` factor plus what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "NmfModelRepr", into = "NmfModelRepr")]
pub struct NmfModel {
    components: Array2<f64>,
    config: NmfConfig,
    error_trace: Vec<f64>,
    gram: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
struct NmfModelRepr {
    topics: usize,
    terms: usize,
    /// Row-major topics x terms.
    components: Vec<f64>,
    config: NmfConfig,
    error_trace: Vec<f64>,
}

impl From<NmfModelRepr> for NmfModel {
    fn from(r: NmfModelRepr) -> Self {
        let components = Array2::from_shape_vec((r.topics, r.terms), r.components)
            .unwrap_or_else(|_| Array2::zeros((0, 0)));
        Self::new(components, r.config, r.error_trace)
    }
}

impl From<NmfModel> for NmfModelRepr {
    fn from(m: NmfModel) -> Self {
        let (topics, terms) = m.components.dim();
        Self {
            topics,
            terms,
            components: m.components.iter().copied().collect(),
            config: m.config,
            error_trace: m.error_trace,
        }
    }
}

impl NmfModel {
    pub fn new(components: Array2<f64>, config: NmfConfig, error_trace: Vec<f64>) -> Self {
        let gram = components.dot(&components.t());
        Self {
            components,
            config,
            error_trace,
            gram,
        }
    }

    /// The `H` matrix, topics x terms.
    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    pub fn num_topics(&self) -> usize {
        self.components.nrows()
    }

    pub fn num_terms(&self) -> usize {
        self.components.ncols()
    }

    pub fn config(&self) -> &NmfConfig {
        &self.config
    }

    /// Relative reconstruction error after each training epoch.
    pub fn error_trace(&self) -> &[f64] {
        &self.error_trace
    }

    /// Nonnegative topic weights for an unseen document, with `H` held fixed.
    ///
    /// Starts from the best constant vector and applies at most `w_max_iter`
    /// multiplicative updates.
    pub fn transform(&self, x: &SparseVector) -> Result<TopicVector, NmfError> {
        if x.dim() != self.num_terms() {
            return Err(NmfError::DimensionMismatch {
                expected: self.num_terms(),
                actual: x.dim(),
            });
        }
        let l = self.num_topics();
        if x.nnz() == 0 {
            return Ok(TopicVector::zeros(l));
        }
        // x Hᵀ
        let mut numer = Array1::<f64>::zeros(l);
        for (t, row) in self.components.outer_iter().enumerate() {
            numer[t] = x.iter().map(|(j, v)| v * row[j]).sum();
        }
        let scale = numer.sum() / self.gram.sum();
        if scale.is_nan() || scale <= 0.0 {
            return Ok(TopicVector::zeros(l));
        }
        let mut w = Array1::from_elem(l, scale);
        let kappa = self.config.kappa;
        let tol = self.config.tolerance;
        for _ in 0..self.config.w_max_iter {
            let denom = self.gram.dot(&w);
            let mut change = 0.0;
            let mut norm = 0.0;
            for t in 0..l {
                let old = w[t];
                let new = damped(old, numer[t], denom[t], kappa);
                change += (new - old) * (new - old);
                norm += old * old;
                w[t] = new;
            }
            if tol > 0.0 && change.sqrt() <= tol * norm.sqrt() {
                break;
            }
        }
        Ok(TopicVector::new(w.to_vec()))
    }

    /// Term indices of `topic` by descending weight; ties by term string.
    pub fn top_term_indices(
        &self,
        topic: usize,
        m: usize,
        vocabulary: &Vocabulary,
    ) -> Result<Vec<usize>, NmfError> {
        if topic >= self.num_topics() {
            return Err(NmfError::TopicOutOfRange {
                topic,
                topics: self.num_topics(),
            });
        }
        let row = self.components.row(topic);
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| {
            row[b]
                .total_cmp(&row[a])
                .then_with(|| vocabulary.term(a).cmp(vocabulary.term(b)))
        });
        order.truncate(m);
        Ok(order)
    }

    /// The `m` highest-weighted terms of a topic.
    pub fn top_terms(
        &self,
        topic: usize,
        m: usize,
        vocabulary: &Vocabulary,
    ) -> Result<Vec<String>, NmfError> {
        if vocabulary.len() != self.num_terms() {
            return Err(NmfError::DimensionMismatch {
                expected: self.num_terms(),
                actual: vocabulary.len(),
            });
        }
        Ok(self
            .top_term_indices(topic, m, vocabulary)?
            .into_iter()
            .map(|j| vocabulary.term(j).to_owned())
            .collect())
    }
}

/// Fitted model together with the document-topic matrix of the training data.
#[derive(Debug, Clone)]
pub struct NmfFit {
    pub model: NmfModel,
    /// `W`, documents x topics.
    pub doc_topics: Array2<f64>,
}

#[inline]
fn damped(old: f64, numer: f64, denom: f64, kappa: f64) -> f64 {
    // Both terms are nonnegative in exact arithmetic; incremental statistics
    // can leave them a few ulps below zero.
    let factor = numer.max(0.0) / (denom.max(0.0) + DENOMINATOR_EPS);
    old * (1.0 - kappa + kappa * factor)
}

/// Returns `Uᵀ W` (n x l) and `Wᵀ W` (l x l).
fn sufficient_stats(u: &CsrMatrix, w: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let mut at = Array2::<f64>::zeros((u.cols(), w.ncols()));
    for i in 0..u.rows() {
        let wi = w.row(i);
        for (j, v) in u.row(i) {
            at.row_mut(j).scaled_add(v, &wi);
        }
    }
    (at, w.t().dot(w))
}

/// `sqrt(max(0, ‖U‖² − 2⟨A, H⟩ + ⟨B, G⟩)) / ‖U‖` with `A = Uᵀ W` in
/// transposed layout and `G = H Hᵀ`.
fn relative_error_from_stats(
    norm_u_sq: f64,
    at: &Array2<f64>,
    b: &Array2<f64>,
    ht: &Array2<f64>,
    g: &Array2<f64>,
) -> f64 {
    let cross: f64 = at.iter().zip(ht.iter()).map(|(a, h)| a * h).sum();
    let quad: f64 = b.iter().zip(g.iter()).map(|(x, y)| x * y).sum();
    ((norm_u_sq - 2.0 * cross + quad).max(0.0) / norm_u_sq).sqrt()
}

/// True when `‖new − old‖ ≤ tol · ‖old‖`.
fn settled(old: &Array2<f64>, new: &Array2<f64>, tol: f64) -> bool {
    let mut change = 0.0;
    let mut norm = 0.0;
    for (o, n) in old.iter().zip(new.iter()) {
        change += (n - o) * (n - o);
        norm += o * o;
    }
    change.sqrt() <= tol * norm.sqrt()
}

/// `U[start..end] Hᵀ`, the W-update numerator of a batch.
fn batch_numerator(u: &CsrMatrix, start: usize, end: usize, ht: &Array2<f64>) -> Array2<f64> {
    let mut numer = Array2::<f64>::zeros((end - start, ht.ncols()));
    for (r, i) in (start..end).enumerate() {
        let mut nrow = numer.row_mut(r);
        for (j, v) in u.row(i) {
            nrow.scaled_add(v, &ht.row(j));
        }
    }
    numer
}

/// Adds the contribution of batch rows `wb` to `A = Uᵀ W` and `B = Wᵀ W`
/// with the given sign.
fn add_batch_stats(
    u: &CsrMatrix,
    start: usize,
    wb: &Array2<f64>,
    sign: f64,
    at: &mut Array2<f64>,
    b: &mut Array2<f64>,
) {
    for (r, row) in wb.outer_iter().enumerate() {
        for (j, v) in u.row(start + r) {
            at.row_mut(j).scaled_add(sign * v, &row);
        }
    }
    b.scaled_add(sign, &wb.t().dot(wb));
}

/// Trains the topic model on a nonnegative document-term matrix.
pub fn fit_nmf(u: &CsrMatrix, config: &NmfConfig) -> Result<NmfFit, NmfError> {
    config.validate()?;
    if u.rows() == 0 || u.cols() == 0 || u.nnz() == 0 {
        return Err(NmfError::EmptyMatrix);
    }
    for i in 0..u.rows() {
        if let Some((_, value)) = u.row(i).find(|(_, v)| !(*v >= 0.0 && v.is_finite())) {
            return Err(NmfError::NegativeEntry { row: i, value });
        }
    }
    let norm_u_sq = u.frobenius_sq();
    if norm_u_sq == 0.0 {
        return Err(NmfError::EmptyMatrix);
    }

    let (docs, terms, l) = (u.rows(), u.cols(), config.num_topics);
    let kappa = config.kappa;
    let tol = config.tolerance;

    let mean = u.values().iter().sum::<f64>() / (docs as f64 * terms as f64);
    let scale = (mean / l as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w = Array2::from_shape_simple_fn((docs, l), || scale * rng.random::<f64>());
    let mut ht = Array2::from_shape_simple_fn((terms, l), || scale * rng.random::<f64>());
    for i in 0..docs {
        if u.row(i).next().is_none() {
            w.row_mut(i).fill(0.0);
        }
    }

    let (mut at, mut b) = sufficient_stats(u, &w);
    let mut trace = Vec::with_capacity(config.epochs);

    for _epoch in 0..config.epochs {
        for start in (0..docs).step_by(config.batch_size) {
            let end = (start + config.batch_size).min(docs);

            // W-row and H updates alternate in BATCH_ROUNDS rounds, each
            // taking an equal share of both iteration caps. The corpus
            // statistics are brought up to date before every H step.
            let rounds = BATCH_ROUNDS.min(config.w_max_iter.max(config.h_max_iter));
            let mut w_done = 0;
            let mut h_done = 0;
            // Statistics of the rows outside the batch. Cancellation can
            // leave entries a few ulps below zero; the true values are not.
            let mut wb = w.slice(s![start..end, ..]).to_owned();
            let (mut at_rest, mut b_rest) = (at.clone(), b.clone());
            add_batch_stats(u, start, &wb, -1.0, &mut at_rest, &mut b_rest);
            at_rest.mapv_inplace(|x| x.max(0.0));
            b_rest.mapv_inplace(|x| x.max(0.0));
            let mut g = ht.t().dot(&ht);
            let mut numer = batch_numerator(u, start, end, &ht);
            let mut w_settled = false;
            let mut h_settled = false;
            for r in 0..rounds {
                let w_target = (r + 1) * config.w_max_iter / rounds;
                while w_done < w_target {
                    let denom = wb.dot(&g);
                    let prev = (tol > 0.0).then(|| wb.clone());
                    ndarray::Zip::from(&mut wb)
                        .and(&numer)
                        .and(&denom)
                        .for_each(|x, &nu, &de| *x = damped(*x, nu, de, kappa));
                    w_done += 1;
                    w_settled = prev.is_some_and(|p| settled(&p, &wb, tol));
                }

                let h_target = (r + 1) * config.h_max_iter / rounds;
                if h_done < h_target {
                    (at, b) = (at_rest.clone(), b_rest.clone());
                    add_batch_stats(u, start, &wb, 1.0, &mut at, &mut b);
                    while h_done < h_target {
                        let denom = ht.dot(&b);
                        let prev = (tol > 0.0).then(|| ht.clone());
                        ndarray::Zip::from(&mut ht)
                            .and(&at)
                            .and(&denom)
                            .for_each(|x, &nu, &de| *x = damped(*x, nu, de, kappa));
                        h_done += 1;
                        h_settled = prev.is_some_and(|p| settled(&p, &ht, tol));
                    }
                    g = ht.t().dot(&ht);
                    numer = batch_numerator(u, start, end, &ht);
                }
                if w_settled && h_settled {
                    break;
                }
            }
            (at, b) = (at_rest, b_rest);
            add_batch_stats(u, start, &wb, 1.0, &mut at, &mut b);
            w.slice_mut(s![start..end, ..]).assign(&wb);
        }

        // Exact statistics each epoch so incremental drift never accumulates.
        (at, b) = sufficient_stats(u, &w);
        let g = ht.t().dot(&ht);
        let err = relative_error_from_stats(norm_u_sq, &at, &b, &ht, &g);
        let stalled = trace
            .last()
            .is_some_and(|&prev: &f64| prev > 0.0 && (prev - err) / prev < tol);
        trace.push(err);
        if stalled || err == 0.0 {
            break;
        }
    }

    let components = ht.reversed_axes().as_standard_layout().to_owned();
    if let Some(t) = components
        .axis_iter(Axis(0))
        .position(|row| row.iter().all(|&v| v == 0.0))
    {
        return Err(NmfError::CollapsedTopic(t));
    }
    Ok(NmfFit {
        model: NmfModel::new(components, config.clone(), trace),
        doc_topics: w,
    })
}

/// Relative reconstruction error `‖U − W H‖_F / ‖U‖_F`.
pub fn reconstruction_error(
    u: &CsrMatrix,
    doc_topics: &Array2<f64>,
    model: &NmfModel,
) -> Result<f64, NmfError> {
    if doc_topics.nrows() != u.rows() {
        return Err(NmfError::DimensionMismatch {
            expected: u.rows(),
            actual: doc_topics.nrows(),
        });
    }
    if doc_topics.ncols() != model.num_topics() {
        return Err(NmfError::DimensionMismatch {
            expected: model.num_topics(),
            actual: doc_topics.ncols(),
        });
    }
    if u.cols() != model.num_terms() {
        return Err(NmfError::DimensionMismatch {
            expected: model.num_terms(),
            actual: u.cols(),
        });
    }
    let norm_u_sq = u.frobenius_sq();
    if norm_u_sq == 0.0 {
        return Err(NmfError::EmptyMatrix);
    }
    let (at, b) = sufficient_stats(u, doc_topics);
    let ht = model.components.t();
    let cross: f64 = at.iter().zip(ht.iter()).map(|(a, h)| a * h).sum();
    let quad: f64 = b.iter().zip(model.gram.iter()).map(|(x, y)| x * y).sum();
    Ok(((norm_u_sq - 2.0 * cross + quad).max(0.0) / norm_u_sq).sqrt())
}
