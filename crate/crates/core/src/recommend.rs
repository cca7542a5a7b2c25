//! Query pipeline: ranks venues for a query and explains both the query and
//! each recommended venue through their strongest NMF topics.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::ModelBundle;
use crate::classify::{ClassifyError, VenueRanking};
use crate::corpus::LabelIndex;
use crate::features::{FeatureError, FeatureSpec};
use crate::nmf::{NmfError, NmfModel, TopicVector};
use crate::text::{vectorize, Vocabulary, Weighting};

#[derive(Debug, Error, PartialEq)]
pub enum RecommendError {
    #[error("k = {k} out of range 1..={venues}")]
    KOutOfRange { k: usize, venues: usize },
    #[error("terms_per_topic must be at least 1")]
    NoTerms,
    #[error("venue {0:?} has no training paper with a nonzero topic vector")]
    EmptyVenue(String),
    #[error("{rows} topic rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("bundle is not usable: {0}")]
    Untrained(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Nmf(#[from] NmfError),
}

/// Mean topic proportions of a venue's training papers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VenueProfile {
    pub venue: String,
    pub topics: TopicVector,
    /// Number of papers averaged.
    pub support: usize,
}

/// Averages the L1-normalized nonzero topic rows of each venue. All-zero
/// rows are skipped.
pub fn build_venue_profiles(
    doc_topics: &Array2<f64>,
    labels: &[usize],
    venues: &LabelIndex,
) -> Result<Vec<VenueProfile>, RecommendError> {
    if doc_topics.nrows() != labels.len() {
        return Err(RecommendError::LengthMismatch {
            rows: doc_topics.nrows(),
            labels: labels.len(),
        });
    }
    let l = doc_topics.ncols();
    let mut sums = vec![vec![0.0; l]; venues.len()];
    let mut support = vec![0usize; venues.len()];
    for (row, &venue) in doc_topics.outer_iter().zip(labels) {
        let total: f64 = row.sum();
        if total <= 0.0 {
            continue;
        }
        for (s, &w) in sums[venue].iter_mut().zip(row.iter()) {
            *s += w / total;
        }
        support[venue] += 1;
    }
    sums.into_iter()
        .zip(support)
        .enumerate()
        .map(|(v, (sum, n))| {
            if n == 0 {
                return Err(RecommendError::EmptyVenue(venues.label(v).to_owned()));
            }
            Ok(VenueProfile {
                venue: venues.label(v).to_owned(),
                topics: TopicVector::new(sum.into_iter().map(|s| s / n as f64).collect()),
                support: n,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicExplanation {
    pub topic_id: usize,
    /// Share of the explained vector's total weight.
    pub weight: f64,
    pub terms: Vec<String>,
}

/// Strongest topics of a document or venue, best first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Explanation {
    pub topics: Vec<TopicExplanation>,
}

impl Explanation {
    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn topic_ids(&self) -> Vec<usize> {
        self.topics.iter().map(|t| t.topic_id).collect()
    }
}

/// Top `top_topics` topics with positive weight, each with its
/// `terms_per_topic` strongest terms. Weights are shown as proportions.
pub fn explain(
    topics: &TopicVector,
    model: &NmfModel,
    vocabulary: &Vocabulary,
    top_topics: usize,
    terms_per_topic: usize,
) -> Result<Explanation, RecommendError> {
    if terms_per_topic == 0 {
        return Err(RecommendError::NoTerms);
    }
    if topics.len() != model.num_topics() {
        return Err(NmfError::DimensionMismatch {
            expected: model.num_topics(),
            actual: topics.len(),
        }
        .into());
    }
    let total: f64 = topics.weights().iter().sum();
    if total <= 0.0 {
        return Ok(Explanation::default());
    }
    let entries = topics
        .ranked()
        .into_iter()
        .filter(|&t| topics.weights()[t] > 0.0)
        .take(top_topics)
        .map(|t| {
            Ok(TopicExplanation {
                topic_id: t,
                weight: topics.weights()[t] / total,
                terms: model.top_terms(t, terms_per_topic, vocabulary)?,
            })
        })
        .collect::<Result<Vec<_>, NmfError>>()?;
    Ok(Explanation { topics: entries })
}

/// A paper to find venues for.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub keywords: Vec<String>,
}

impl Query {
    pub fn text(&self) -> String {
        let mut parts = vec![self.title.as_str(), self.abstract_text.as_str()];
        parts.extend(self.keywords.iter().map(String::as_str));
        parts.retain(|p| !p.is_empty());
        parts.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendOptions {
    pub k: usize,
    pub top_topics: usize,
    pub terms_per_topic: usize,
}

impl Default for RecommendOptions {
    fn default() -> Self {
        Self {
            k: 5,
            top_topics: 3,
            terms_per_topic: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VenueRecommendation {
    pub venue: String,
    pub score: f64,
    pub topics: Explanation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub query_topics: Explanation,
    pub recommendations: Vec<VenueRecommendation>,
}

impl ModelBundle {
    /// Full venue ranking of a document text under the bundle's classifier.
    pub fn rank(&self, text: &str) -> Result<VenueRanking, RecommendError> {
        let spec = FeatureSpec::new(self.feature_kind, &self.tfidf, Some(&self.nmf))?;
        Ok(self.logit.predict_ranking(&spec.featurize(text)?)?)
    }
}

/// Ranks venues for `query` and attaches topic explanations.
///
/// Query topics always come from the NMF transform of the query's tf-idf
/// vector, whatever feature kind the classifier was trained on.
pub fn recommend(
    query: &Query,
    options: &RecommendOptions,
    bundle: &ModelBundle,
) -> Result<Recommendation, RecommendError> {
    let venues = bundle.logit.num_venues();
    if options.k == 0 || options.k > venues {
        return Err(RecommendError::KOutOfRange {
            k: options.k,
            venues,
        });
    }
    if bundle.profiles.len() != venues {
        return Err(RecommendError::Untrained(format!(
            "{} venue profiles for {venues} venues",
            bundle.profiles.len()
        )));
    }
    let text = query.text();
    let ranking = bundle.rank(&text)?;

    let vocabulary = bundle.tfidf.vocabulary();
    let query_vec = vectorize(&text, &bundle.tfidf, Weighting::Tfidf);
    let query_topics = explain(
        &bundle.nmf.transform(&query_vec)?,
        &bundle.nmf,
        vocabulary,
        options.top_topics,
        options.terms_per_topic,
    )?;

    let recommendations = ranking
        .top(options.k)
        .iter()
        .map(|entry| {
            let profile = &bundle.profiles[entry.venue];
            Ok(VenueRecommendation {
                venue: bundle.logit.labels().label(entry.venue).to_owned(),
                score: entry.score,
                topics: explain(
                    &profile.topics,
                    &bundle.nmf,
                    vocabulary,
                    options.top_topics,
                    options.terms_per_topic,
                )?,
            })
        })
        .collect::<Result<Vec<_>, RecommendError>>()?;

    Ok(Recommendation {
        query_topics,
        recommendations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmf::NmfConfig;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn venues(n: usize) -> LabelIndex {
        LabelIndex::with_counts((0..n).map(|i| (format!("V{i}"), 1)))
    }

    #[test]
    fn profile_of_single_paper() {
        let p = build_venue_profiles(&array![[0.0, 2.0, 2.0]], &[0], &venues(1)).unwrap();
        assert_eq!(p[0].topics.weights(), [0.0, 0.5, 0.5]);
        assert_eq!(p[0].support, 1);
    }

    #[test]
    fn profile_averages_normalized_rows() {
        let p = build_venue_profiles(&array![[1.0, 0.0], [0.0, 1.0]], &[0, 0], &venues(1)).unwrap();
        assert_eq!(p[0].topics.weights(), [0.5, 0.5]);
        assert_eq!(p[0].support, 2);
    }

    #[test]
    fn profile_skips_zero_rows() {
        let p = build_venue_profiles(&array![[2.0, 0.0], [0.0, 0.0]], &[0, 0], &venues(1)).unwrap();
        assert_eq!(p[0].topics.weights(), [1.0, 0.0]);
        assert_eq!(p[0].support, 1);
    }

    #[test]
    fn profile_errors() {
        let err = build_venue_profiles(&array![[1.0, 0.0], [0.0, 0.0]], &[0, 1], &venues(2)).unwrap_err();
        assert_eq!(err, RecommendError::EmptyVenue("V1".into()));
        assert!(matches!(
            build_venue_profiles(&array![[1.0]], &[0, 0], &venues(1)),
            Err(RecommendError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn profiles_are_convex_combinations() {
        let w = array![[0.3, 0.0, 1.2], [0.0, 0.0, 0.0], [5.0, 1.0, 0.0], [0.1, 0.1, 0.1]];
        let p = build_venue_profiles(&w, &[0, 0, 1, 1], &venues(2)).unwrap();
        for profile in &p {
            let sum: f64 = profile.topics.weights().iter().sum();
            assert!(profile.topics.weights().iter().all(|&x| (0.0..=1.0).contains(&x)));
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
        }
    }

    fn model() -> (NmfModel, Vocabulary) {
        let vocab = Vocabulary::from_parts(
            ["alpha", "beta", "delta", "gamma"].iter().map(|s| s.to_string()).collect(),
            vec![1; 4],
            1,
        );
        let h = array![[3.0, 1.0, 0.0, 0.0], [0.0, 0.0, 2.0, 1.0], [0.5, 0.5, 0.5, 4.0]];
        let cfg = NmfConfig {
            num_topics: 3,
            ..NmfConfig::default()
        };
        (NmfModel::new(h, cfg, vec![]), vocab)
    }

    #[test]
    fn explain_zero_vector_is_empty() {
        let (m, v) = model();
        let e = explain(&TopicVector::zeros(3), &m, &v, 3, 5).unwrap();
        assert!(e.is_empty());
    }

    #[test]
    fn explain_sorts_and_truncates() {
        let (m, v) = model();
        let tv = TopicVector::new(vec![0.1, 0.7, 0.2]);
        let two = explain(&tv, &m, &v, 2, 2).unwrap();
        assert_eq!(two.topic_ids(), [1, 2]);
        assert_eq!(two.topics[0].terms, ["delta", "gamma"]);
        assert_abs_diff_eq!(two.topics[0].weight, 0.7, epsilon = 1e-12);

        let three = explain(&tv, &m, &v, 3, 2).unwrap();
        assert_eq!(&three.topics[..2], &two.topics[..]);
        assert_eq!(explain(&tv, &m, &v, 3, 0).unwrap_err(), RecommendError::NoTerms);
    }

    #[test]
    fn explain_omits_zero_weight_topics() {
        let (m, v) = model();
        let e = explain(&TopicVector::new(vec![0.0, 2.0, 0.0]), &m, &v, 3, 1).unwrap();
        assert_eq!(e.topic_ids(), [1]);
        assert_eq!(e.topics[0].weight, 1.0);
    }

    #[test]
    fn query_text_joins_fields() {
        let q = Query {
            title: "T".into(),
            abstract_text: "A".into(),
            keywords: vec!["k1".into(), "k2".into()],
        };
        assert_eq!(q.text(), "T A k1 k2");
        let json = serde_json::to_value(&q).unwrap();
        assert_eq!(json["abstract"], "A");
    }
}
