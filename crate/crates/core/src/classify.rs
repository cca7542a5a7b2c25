//! Venue rankers: multinomial logistic regression plus the uniform-random and
//! most-frequent baselines.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LabelIndex;
use crate::text::{CsrMatrix, SparseVector};

/// Armijo sufficient-decrease constant for the backtracking line search.
const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-30;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("training data covers {0} distinct venue(s); at least 2 are required")]
    SingleClass(usize),
    #[error("feature matrix has {rows} rows but {labels} labels were given")]
    RowMismatch { rows: usize, labels: usize },
    #[error("label {label} out of range for {venues} venues")]
    LabelOutOfRange { label: usize, venues: usize },
    #[error("non-finite feature value in row {0}")]
    NonFinite(usize),
    #[error("feature dimension mismatch: model expects {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("l2_strength must be positive, got {0}")]
    BadStrength(f64),
    #[error("cannot rank an empty venue index")]
    NoVenues,
}

/// One ranked venue: its label index and score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedVenue {
    pub venue: usize,
    pub score: f64,
}

/// A full ordering of the venue set, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VenueRanking {
    entries: Vec<RankedVenue>,
}

impl VenueRanking {
    /// Sorts venues by descending score; equal scores keep label-index order.
    pub fn from_scores(scores: &[f64]) -> Self {
        let mut entries: Vec<RankedVenue> = scores
            .iter()
            .enumerate()
            .map(|(venue, &score)| RankedVenue { venue, score })
            .collect();
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.venue.cmp(&b.venue)));
        Self { entries }
    }

    /// A ranking in the given venue order with equal scores.
    pub fn uniform(order: Vec<usize>) -> Self {
        let score = 1.0 / order.len() as f64;
        Self {
            entries: order
                .into_iter()
                .map(|venue| RankedVenue { venue, score })
                .collect(),
        }
    }

    pub fn entries(&self) -> &[RankedVenue] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn venues(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.venue)
    }

    /// 1-based position of `venue`, if ranked.
    pub fn rank_of(&self, venue: usize) -> Option<usize> {
        self.entries.iter().position(|e| e.venue == venue).map(|p| p + 1)
    }

    pub fn top(&self, k: usize) -> &[RankedVenue] {
        &self.entries[..k.min(self.entries.len())]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogitParams {
    /// Inverse regularization strength; the penalty is ‖W‖² / (2 · l2_strength).
    pub l2_strength: f64,
    pub max_iter: usize,
    /// Stop once the gradient norm drops below this value.
    pub tol: f64,
}

impl Default for LogitParams {
    fn default() -> Self {
        Self {
            l2_strength: 1.0,
            max_iter: 500,
            tol: 1e-5,
        }
    }
}

/// Multinomial logistic regression over sparse features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "LogitRepr", into = "LogitRepr")]
pub struct LogitModel {
    /// Feature-major weights, features x venues.
    coef: Array2<f64>,
    intercept: Vec<f64>,
    labels: LabelIndex,
    l2_strength: f64,
    loss_log: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LogitRepr {
    features: usize,
    venues: usize,
    /// Row-major venues x features.
    weights: Vec<f64>,
    intercept: Vec<f64>,
    labels: LabelIndex,
    l2_strength: f64,
    loss_log: Vec<f64>,
}

impl From<LogitRepr> for LogitModel {
    fn from(r: LogitRepr) -> Self {
        let weights = Array2::from_shape_vec((r.venues, r.features), r.weights)
            .unwrap_or_else(|_| Array2::zeros((r.venues, r.features)));
        Self {
            coef: weights.reversed_axes().as_standard_layout().to_owned(),
            intercept: r.intercept,
            labels: r.labels,
            l2_strength: r.l2_strength,
            loss_log: r.loss_log,
        }
    }
}

impl From<LogitModel> for LogitRepr {
    fn from(m: LogitModel) -> Self {
        let (features, venues) = m.coef.dim();
        Self {
            features,
            venues,
            weights: m.coef.t().iter().copied().collect(),
            intercept: m.intercept,
            labels: m.labels,
            l2_strength: m.l2_strength,
            loss_log: m.loss_log,
        }
    }
}

impl LogitModel {
    pub fn labels(&self) -> &LabelIndex {
        &self.labels
    }

    pub fn num_features(&self) -> usize {
        self.coef.nrows()
    }

    pub fn num_venues(&self) -> usize {
        self.coef.ncols()
    }

    /// Weight of `feature` for `venue`.
    pub fn weight(&self, venue: usize, feature: usize) -> f64 {
        self.coef[[feature, venue]]
    }

    pub fn intercept(&self) -> &[f64] {
        &self.intercept
    }

    pub fn l2_strength(&self) -> f64 {
        self.l2_strength
    }

    /// Objective value before the first step and after every accepted step.
    pub fn loss_log(&self) -> &[f64] {
        &self.loss_log
    }

    /// Shifts every intercept by `delta`.
    pub fn shift_intercepts(&mut self, delta: f64) {
        self.intercept.iter_mut().for_each(|b| *b += delta);
    }

    /// Linear scores `b + xᵀW` of one sparse vector.
    pub fn linear_scores(&self, x: &SparseVector) -> Result<Vec<f64>, ClassifyError> {
        if x.dim() != self.num_features() {
            return Err(ClassifyError::DimensionMismatch {
                expected: self.num_features(),
                actual: x.dim(),
            });
        }
        let mut scores = self.intercept.clone();
        for (j, v) in x.iter() {
            for (s, w) in scores.iter_mut().zip(self.coef.row(j)) {
                *s += v * w;
            }
        }
        Ok(scores)
    }

    /// Softmax probabilities in label-index order.
    pub fn predict_proba(&self, x: &SparseVector) -> Result<Vec<f64>, ClassifyError> {
        let mut scores = self.linear_scores(x)?;
        softmax_in_place(&mut scores);
        Ok(scores)
    }

    pub fn predict_ranking(&self, x: &SparseVector) -> Result<VenueRanking, ClassifyError> {
        Ok(VenueRanking::from_scores(&self.predict_proba(x)?))
    }
}

/// Numerically stable softmax; returns the log-sum-exp of the inputs.
fn softmax_in_place(scores: &mut [f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
    max + sum.ln()
}

/// Training data with a transposed copy for the gradient pass.
struct Problem<'a> {
    x: &'a CsrMatrix,
    xt: CsrMatrix,
    y: &'a [usize],
    venues: usize,
    l2_strength: f64,
}

impl<'a> Problem<'a> {
    fn new(x: &'a CsrMatrix, y: &'a [usize], venues: usize, l2_strength: f64) -> Self {
        Self {
            x,
            xt: transpose(x),
            y,
            venues,
            l2_strength,
        }
    }

    /// Objective value and the class probabilities of every row.
    fn forward(&self, coef: &Array2<f64>, intercept: &[f64]) -> (f64, Array2<f64>) {
        let rows = self.x.rows();
        let mut probs = Array2::<f64>::zeros((rows, self.venues));
        let losses: Vec<f64> = probs
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .map(|(i, mut p)| {
                let mut scores = intercept.to_vec();
                for (j, v) in self.x.row(i) {
                    for (s, w) in scores.iter_mut().zip(coef.row(j)) {
                        *s += v * w;
                    }
                }
                let true_score = scores[self.y[i]];
                let lse = softmax_in_place(&mut scores);
                p.iter_mut().zip(&scores).for_each(|(dst, &src)| *dst = src);
                lse - true_score
            })
            .collect();
        let data_loss: f64 = losses.iter().sum();
        let penalty = coef.iter().map(|w| w * w).sum::<f64>() / (2.0 * self.l2_strength);
        (data_loss + penalty, probs)
    }

    /// Gradient with respect to (coef, intercept) given forward probabilities.
    fn gradient(&self, coef: &Array2<f64>, mut probs: Array2<f64>) -> (Array2<f64>, Vec<f64>) {
        for (i, &label) in self.y.iter().enumerate() {
            probs[[i, label]] -= 1.0;
        }
        let residual = probs;
        let mut grad = coef / self.l2_strength;
        grad.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(j, mut g)| {
                for (i, v) in self.xt.row(j) {
                    g.scaled_add(v, &residual.row(i));
                }
            });
        let grad_b = residual.sum_axis(Axis(0)).to_vec();
        (grad, grad_b)
    }
}

/// Column-major copy of `x` as a CSR matrix of its transpose.
fn transpose(x: &CsrMatrix) -> CsrMatrix {
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); x.cols()];
    for i in 0..x.rows() {
        for (j, v) in x.row(i) {
            cols[j].push((i, v));
        }
    }
    let rows: Vec<SparseVector> = cols
        .into_iter()
        .map(|entries| SparseVector::from_sorted_entries(x.rows(), entries))
        .collect();
    CsrMatrix::from_rows(&rows, x.rows())
}

/// Objective value and gradient for explicit parameters. Exposed for
/// gradient checking.
pub fn loss_and_gradient(
    x: &CsrMatrix,
    y: &[usize],
    venues: usize,
    coef: &Array2<f64>,
    intercept: &[f64],
    l2_strength: f64,
) -> (f64, Array2<f64>, Vec<f64>) {
    let problem = Problem::new(x, y, venues, l2_strength);
    let (loss, probs) = problem.forward(coef, intercept);
    let (g, gb) = problem.gradient(coef, probs);
    (loss, g, gb)
}

/// Fits multinomial logistic regression by full-batch gradient descent with
/// a backtracking (Armijo) line search, starting from zero weights.
///
/// Minimizes `Σ_i CE(x_i, y_i) + ‖W‖² / (2 · l2_strength)`; intercepts are
/// not penalized.
pub fn fit_logit(
    x: &CsrMatrix,
    y: &[usize],
    labels: &LabelIndex,
    params: &LogitParams,
) -> Result<LogitModel, ClassifyError> {
    if x.rows() != y.len() {
        return Err(ClassifyError::RowMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if !(params.l2_strength > 0.0 && params.l2_strength.is_finite()) {
        return Err(ClassifyError::BadStrength(params.l2_strength));
    }
    let venues = labels.len();
    if let Some(&label) = y.iter().find(|&&l| l >= venues) {
        return Err(ClassifyError::LabelOutOfRange { label, venues });
    }
    let mut present = vec![false; venues];
    y.iter().for_each(|&l| present[l] = true);
    let distinct = present.iter().filter(|&&p| p).count();
    if distinct < 2 {
        return Err(ClassifyError::SingleClass(distinct));
    }
    for i in 0..x.rows() {
        if x.row(i).any(|(_, v)| !v.is_finite()) {
            return Err(ClassifyError::NonFinite(i));
        }
    }

    let problem = Problem::new(x, y, venues, params.l2_strength);
    let mut coef = Array2::<f64>::zeros((x.cols(), venues));
    let mut intercept = vec![0.0; venues];
    let (mut loss, mut probs) = problem.forward(&coef, &intercept);
    let mut loss_log = vec![loss];

    // Softmax curvature is at most 1/2 per row; the squared Frobenius norm of
    // [X 1] bounds the squared spectral norm.
    let frob: f64 = x.frobenius_sq() + x.rows() as f64;
    let mut step = 1.0 / (0.5 * frob + 1.0 / params.l2_strength);

    for _ in 0..params.max_iter {
        let (grad, grad_b) = problem.gradient(&coef, probs.clone());
        let gnorm_sq = grad.iter().map(|g| g * g).sum::<f64>()
            + grad_b.iter().map(|g| g * g).sum::<f64>();
        if gnorm_sq.sqrt() < params.tol {
            break;
        }
        let accepted = loop {
            let trial = &coef - &(&grad * step);
            let trial_b: Vec<f64> = intercept
                .iter()
                .zip(&grad_b)
                .map(|(b, g)| b - step * g)
                .collect();
            let (trial_loss, trial_probs) = problem.forward(&trial, &trial_b);
            if trial_loss <= loss - ARMIJO_C * step * gnorm_sq {
                break Some((trial, trial_b, trial_loss, trial_probs));
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((c, b, l, p)) = accepted else { break };
        coef = c;
        intercept = b;
        loss = l;
        probs = p;
        loss_log.push(loss);
        step *= 2.0;
    }

    Ok(LogitModel {
        coef,
        intercept,
        labels: labels.clone(),
        l2_strength: params.l2_strength,
        loss_log,
    })
}

/// A uniformly random permutation of the venues with equal scores.
pub fn uniform_random_ranking(venues: &LabelIndex, seed: u64) -> Result<VenueRanking, ClassifyError> {
    if venues.is_empty() {
        return Err(ClassifyError::NoVenues);
    }
    let mut order: Vec<usize> = (0..venues.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(VenueRanking::uniform(order))
}

/// Venues by descending training count (ties by label index), scored by
/// their share of the training set.
pub fn most_frequent_ranking(venues: &LabelIndex) -> Result<VenueRanking, ClassifyError> {
    if venues.is_empty() {
        return Err(ClassifyError::NoVenues);
    }
    let total = venues.total().max(1) as f64;
    let scores: Vec<f64> = venues.counts().iter().map(|&c| c as f64 / total).collect();
    Ok(VenueRanking::from_scores(&scores))
}

/// Mixes a base seed with an item index (splitmix64 finalizer) so that
/// per-item random rankings are independent of evaluation order.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn labels(n: usize) -> LabelIndex {
        LabelIndex::with_counts((0..n).map(|i| (format!("V{i}"), 1)))
    }

    #[test]
    fn separable_one_dimensional() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..100 {
            let class = i % 2;
            rows.push(vec![if class == 0 { -1.0 } else { 1.0 }]);
            y.push(class);
        }
        let x = CsrMatrix::from_dense(&rows);
        let model = fit_logit(&x, &y, &labels(2), &LogitParams::default()).unwrap();
        let correct = (0..100)
            .filter(|&i| model.predict_ranking(&x.row_vector(i)).unwrap().entries()[0].venue == y[i])
            .count();
        assert_eq!(correct, 100);
        for pair in model.loss_log().windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9);
        }
    }

    #[test]
    fn zero_iterations_give_uniform_scores() {
        let x = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let params = LogitParams {
            max_iter: 0,
            ..LogitParams::default()
        };
        let model = fit_logit(&x, &[0, 1, 2], &labels(3), &params).unwrap();
        let r = model.predict_ranking(&x.row_vector(2)).unwrap();
        assert_eq!(r.venues().collect::<Vec<_>>(), [0, 1, 2]);
        for e in r.entries() {
            assert_abs_diff_eq!(e.score, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..5 {
            let (rows, feats, classes) = (5, 4, 3);
            let dense: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..feats).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let x = CsrMatrix::from_dense(&dense);
            let y: Vec<usize> = (0..rows).map(|i| (i + trial) % classes).collect();
            let coef = Array2::from_shape_simple_fn((feats, classes), || rng.random_range(-1.0..1.0));
            let b: Vec<f64> = (0..classes).map(|_| rng.random_range(-1.0..1.0)).collect();
            let l2 = 0.7;
            let (_, g, gb) = loss_and_gradient(&x, &y, classes, &coef, &b, l2);
            let h = 1e-5;
            for j in 0..feats {
                for c in 0..classes {
                    let mut plus = coef.clone();
                    plus[[j, c]] += h;
                    let mut minus = coef.clone();
                    minus[[j, c]] -= h;
                    let fp = loss_and_gradient(&x, &y, classes, &plus, &b, l2).0;
                    let fm = loss_and_gradient(&x, &y, classes, &minus, &b, l2).0;
                    assert!(((fp - fm) / (2.0 * h) - g[[j, c]]).abs() <= 1e-5);
                }
            }
            for c in 0..classes {
                let mut plus = b.clone();
                plus[c] += h;
                let mut minus = b.clone();
                minus[c] -= h;
                let fp = loss_and_gradient(&x, &y, classes, &coef, &plus, l2).0;
                let fm = loss_and_gradient(&x, &y, classes, &coef, &minus, l2).0;
                assert!(((fp - fm) / (2.0 * h) - gb[c]).abs() <= 1e-5);
            }
        }
    }

    #[test]
    fn input_validation() {
        let x = CsrMatrix::from_dense(&[vec![1.0], vec![2.0]]);
        let p = LogitParams::default();
        assert_eq!(fit_logit(&x, &[0, 0], &labels(2), &p).unwrap_err(), ClassifyError::SingleClass(1));
        assert!(matches!(fit_logit(&x, &[0], &labels(2), &p), Err(ClassifyError::RowMismatch { .. })));
        assert!(matches!(
            fit_logit(&x, &[0, 5], &labels(2), &p),
            Err(ClassifyError::LabelOutOfRange { .. })
        ));
        let nan = CsrMatrix::from_dense(&[vec![1.0], vec![f64::NAN]]);
        assert_eq!(fit_logit(&nan, &[0, 1], &labels(2), &p).unwrap_err(), ClassifyError::NonFinite(1));
    }

    #[test]
    fn predict_dimension_mismatch() {
        let x = CsrMatrix::from_dense(&[vec![1.0], vec![2.0]]);
        let m = fit_logit(&x, &[0, 1], &labels(2), &LogitParams::default()).unwrap();
        assert!(matches!(
            m.predict_ranking(&SparseVector::zeros(3)),
            Err(ClassifyError::DimensionMismatch { expected: 1, actual: 3 })
        ));
    }

    fn small_model() -> (LogitModel, CsrMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dense: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..6).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let x = CsrMatrix::from_dense(&dense);
        let y: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let params = LogitParams {
            max_iter: 50,
            ..LogitParams::default()
        };
        (fit_logit(&x, &y, &labels(4), &params).unwrap(), x)
    }

    #[test]
    fn intercept_shift_keeps_ranking() {
        let (model, x) = small_model();
        let mut shifted = model.clone();
        shifted.shift_intercepts(3.25);
        for i in 0..x.rows() {
            let a = model.predict_ranking(&x.row_vector(i)).unwrap();
            let b = shifted.predict_ranking(&x.row_vector(i)).unwrap();
            assert_eq!(a.venues().collect::<Vec<_>>(), b.venues().collect::<Vec<_>>());
            for (ea, eb) in a.entries().iter().zip(b.entries()) {
                assert_abs_diff_eq!(ea.score, eb.score, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn training_is_deterministic_and_monotone() {
        let (a, x) = small_model();
        let (b, _) = small_model();
        assert_eq!(a, b);
        for pair in a.loss_log().windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9);
        }
        let json = serde_json::to_string(&a).unwrap();
        let back: LogitModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        assert_eq!(
            back.predict_proba(&x.row_vector(0)).unwrap(),
            a.predict_proba(&x.row_vector(0)).unwrap()
        );
    }

    #[test]
    fn uniform_random_baseline() {
        let one = LabelIndex::with_counts([("only", 3)]);
        let r = uniform_random_ranking(&one, 1).unwrap();
        assert_eq!(r.entries(), [RankedVenue { venue: 0, score: 1.0 }]);

        let v = labels(78);
        assert_eq!(uniform_random_ranking(&v, 42).unwrap(), uniform_random_ranking(&v, 42).unwrap());
        assert!(uniform_random_ranking(&LabelIndex::with_counts(Vec::<(String, usize)>::new()), 0).is_err());
    }

    #[test]
    fn uniform_random_mean_rank() {
        let v = labels(78);
        let draws = 100_000u64;
        let mut rank_sum = vec![0u64; 78];
        for d in 0..draws {
            let r = uniform_random_ranking(&v, derive_seed(2024, d)).unwrap();
            for (pos, venue) in r.venues().enumerate() {
                rank_sum[venue] += pos as u64 + 1;
            }
        }
        for s in rank_sum {
            let mean = s as f64 / draws as f64;
            assert!((mean - 39.5).abs() <= 0.5, "mean rank {mean}");
        }
    }

    #[test]
    fn most_frequent_baseline() {
        let v = LabelIndex::with_counts([("A", 5), ("B", 3), ("C", 1)]);
        let r = most_frequent_ranking(&v).unwrap();
        assert_eq!(r.venues().collect::<Vec<_>>(), [0, 1, 2]);
        let scores: Vec<f64> = r.entries().iter().map(|e| e.score).collect();
        assert_eq!(scores, [5.0 / 9.0, 3.0 / 9.0, 1.0 / 9.0]);

        let tie = LabelIndex::with_counts([("X", 2), ("Y", 2), ("Z", 2)]);
        assert_eq!(most_frequent_ranking(&tie).unwrap().venues().collect::<Vec<_>>(), [0, 1, 2]);

        let reordered = LabelIndex::with_counts([("A", 1), ("B", 3), ("C", 3)]);
        assert_eq!(most_frequent_ranking(&reordered).unwrap().venues().collect::<Vec<_>>(), [1, 2, 0]);
    }

    proptest! {
        #[test]
        fn softmax_scores_sum_to_one(seed in 0u64..500, shift in -50.0f64..50.0) {
            let (mut model, _) = small_model();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dense: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..3.0)).collect();
            let x = SparseVector::from_dense(&dense);
            let before = model.predict_ranking(&x).unwrap();
            let total: f64 = before.entries().iter().map(|e| e.score).sum();
            prop_assert!((total - 1.0).abs() < 1e-6);
            model.shift_intercepts(shift);
            let after = model.predict_ranking(&x).unwrap();
            prop_assert_eq!(before.venues().collect::<Vec<_>>(), after.venues().collect::<Vec<_>>());
            let mut seen: Vec<usize> = after.venues().collect();
            seen.sort();
            prop_assert_eq!(seen, (0..4).collect::<Vec<_>>());
        }
    }
}
