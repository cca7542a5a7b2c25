//! End-to-end training and evaluation driven by a [`RunConfig`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bundle::{BundleError, ModelBundle};
use crate::classify::{
    derive_seed, fit_logit, most_frequent_ranking, uniform_random_ranking, ClassifyError,
    LogitModel, LogitParams,
};
use crate::corpus::{stratified_split, CorpusError, LabelIndex, PaperCorpus};
use crate::eval::{evaluate, EvalError, MetricsReport};
use crate::features::{FeatureError, FeatureKind, FeatureSpec};
use crate::nmf::{fit_nmf, NmfConfig, NmfError, NmfFit};
use crate::recommend::{build_venue_profiles, RecommendError};
use crate::text::{
    build_vocabulary, fit_tfidf, vectorize_all, TextError, TfidfModel, VocabularyFilter, Weighting,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Nmf(#[from] NmfError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub ks: Vec<usize>,
    /// Seeded runs averaged for the uniform-random baseline.
    pub random_runs: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            ks: vec![1, 5, 10],
            random_runs: 20,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub bundle: PathBuf,
    pub report: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            bundle: PathBuf::from("model.bundle"),
            report: PathBuf::from("report.json"),
        }
    }
}

/// Everything a training or evaluation run depends on besides the corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub split: SplitConfig,
    pub vocabulary: VocabularyFilter,
    pub nmf: NmfConfig,
    pub logit: LogitParams,
    pub features: FeatureKind,
    pub eval: EvalConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, PipelineError> {
        toml::from_str(s).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is serializable")
    }

    /// SHA-256 over the config's canonical JSON form (object keys sorted), so
    /// the hash does not depend on field order in the source file.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config is serializable");
        hex::encode(Sha256::digest(canonical_json(&value).as_bytes()))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.nmf.validate()?;
        if self.eval.ks.is_empty() || self.eval.ks.contains(&0) {
            return Err(PipelineError::Config("eval.ks must be nonempty and positive".into()));
        }
        if self.eval.random_runs == 0 {
            return Err(PipelineError::Config("eval.random_runs must be at least 1".into()));
        }
        if self.logit.l2_strength.is_nan() || self.logit.l2_strength <= 0.0 {
            return Err(PipelineError::Config("logit.l2_strength must be positive".into()));
        }
        Ok(())
    }
}

fn canonical_json(value: &serde_json::Value) -> String {
    use serde_json::Value;
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let body: Vec<String> = keys
                .into_iter()
                .map(|k| format!("{}:{}", Value::String(k.clone()), canonical_json(&map[k])))
                .collect();
            format!("{{{}}}", body.join(","))
        }
        Value::Array(items) => {
            format!("[{}]", items.iter().map(canonical_json).collect::<Vec<_>>().join(","))
        }
        other => other.to_string(),
    }
}

/// A ranking method compared in evaluation reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    UniformRandom,
    MostFrequent,
    Logit(FeatureKind),
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::UniformRandom,
        Method::MostFrequent,
        Method::Logit(FeatureKind::Nmf),
        Method::Logit(FeatureKind::Tf),
        Method::Logit(FeatureKind::Tfidf),
        Method::Logit(FeatureKind::TfidfPlusNmf),
    ];

    /// Command-line name.
    pub fn as_str(self) -> &'static str {
        match self {
            Method::UniformRandom => "random",
            Method::MostFrequent => "most-frequent",
            Method::Logit(FeatureKind::Tf) => "logit-tf",
            Method::Logit(FeatureKind::Tfidf) => "logit-tfidf",
            Method::Logit(FeatureKind::Nmf) => "logit-nmf",
            Method::Logit(FeatureKind::TfidfPlusNmf) => "logit-tfidf-nmf",
        }
    }

    /// Row label in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Method::UniformRandom => "Uniform Random (avg)",
            Method::MostFrequent => "Most Frequent",
            Method::Logit(FeatureKind::Tf) => "Logit (tf)",
            Method::Logit(FeatureKind::Tfidf) => "Logit (tf-idf)",
            Method::Logit(FeatureKind::Nmf) => "Logit (NMF)",
            Method::Logit(FeatureKind::TfidfPlusNmf) => "Logit (tf-idf + NMF)",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "uniform-random" {
            return Ok(Method::UniformRandom);
        }
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown method {s:?}")))
    }
}

/// ks that fit the venue count; larger ks are dropped.
fn usable_ks(ks: &[usize], venues: usize) -> Vec<usize> {
    let mut out: Vec<usize> = ks.iter().copied().filter(|&k| k >= 1 && k <= venues).collect();
    out.sort_unstable();
    out.dedup();
    if out.first() != Some(&1) {
        out.insert(0, 1);
    }
    out
}

/// Mean metrics of `runs` seeded uniform-random rankers over `test`.
pub fn random_baseline_report(
    test: &PaperCorpus,
    venues: &LabelIndex,
    runs: usize,
    seed: u64,
    ks: &[usize],
) -> Result<MetricsReport, PipelineError> {
    let ks = usable_ks(ks, venues.len());
    let reports = (0..runs as u64)
        .map(|run| {
            let run_seed = derive_seed(seed, run);
            evaluate(
                Method::UniformRandom.display_name(),
                |i, _| uniform_random_ranking(venues, derive_seed(run_seed, i as u64)),
                test,
                &ks,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricsReport::mean(Method::UniformRandom.display_name(), &reports)?)
}

/// Text and topic models fitted on a training split.
pub struct TopicModels {
    pub tfidf: TfidfModel,
    pub nmf: NmfFit,
}

/// Fits the vocabulary, tf-idf weights and NMF on the training texts.
pub fn fit_topic_models(train: &PaperCorpus, config: &RunConfig) -> Result<TopicModels, PipelineError> {
    let texts = train.texts();
    let vocabulary = build_vocabulary(&texts, &config.vocabulary)?;
    let tfidf = fit_tfidf(&texts, vocabulary);
    let matrix = vectorize_all(&texts, &tfidf, Weighting::Tfidf);
    let nmf = fit_nmf(&matrix, &config.nmf)?;
    Ok(TopicModels { tfidf, nmf })
}

fn fit_classifier(
    train: &PaperCorpus,
    models: &TopicModels,
    kind: FeatureKind,
    params: &LogitParams,
) -> Result<LogitModel, PipelineError> {
    let spec = FeatureSpec::new(kind, &models.tfidf, Some(&models.nmf.model))?;
    let x = spec.featurize_all(&train.texts())?;
    Ok(fit_logit(&x, train.labels(), train.venues(), params)?)
}

/// Assembles and validates a bundle from fitted components.
pub fn assemble_bundle(
    train: &PaperCorpus,
    models: &TopicModels,
    logit: LogitModel,
    kind: FeatureKind,
    corpus_fingerprint: &str,
    config_hash: &str,
) -> Result<ModelBundle, PipelineError> {
    let profiles = build_venue_profiles(&models.nmf.doc_topics, train.labels(), train.venues())?;
    let bundle = ModelBundle {
        tfidf: models.tfidf.clone(),
        nmf: models.nmf.model.clone(),
        logit,
        feature_kind: kind,
        profiles,
        corpus_fingerprint: corpus_fingerprint.to_owned(),
        config_hash: config_hash.to_owned(),
    };
    bundle.validate()?;
    Ok(bundle)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub bundle: ModelBundle,
    /// Metrics of the bundle's classifier on the held-out split.
    pub report: MetricsReport,
    pub train_size: usize,
    pub test_size: usize,
}

/// Splits the corpus, trains every component on the training split and
/// evaluates the resulting bundle on the test split.
pub fn train(
    corpus: &PaperCorpus,
    corpus_fingerprint: &str,
    config: &RunConfig,
) -> Result<TrainOutcome, PipelineError> {
    config.validate()?;
    let (train, test) = stratified_split(corpus, config.split.test_fraction, config.split.seed)?;
    let models = fit_topic_models(&train, config)?;
    let logit = fit_classifier(&train, &models, config.features, &config.logit)?;
    let bundle = assemble_bundle(
        &train,
        &models,
        logit,
        config.features,
        corpus_fingerprint,
        &config.hash(),
    )?;
    let ks = usable_ks(&config.eval.ks, train.venues().len());
    let report = evaluate(
        Method::Logit(config.features).display_name(),
        |_, text| bundle.rank(text),
        &test,
        &ks,
    )?;
    Ok(TrainOutcome {
        bundle,
        report,
        train_size: train.len(),
        test_size: test.len(),
    })
}

/// Trains and evaluates each requested method on one split, sharing the text
/// and topic models between the logistic-regression variants.
pub fn evaluate_methods(
    corpus: &PaperCorpus,
    config: &RunConfig,
    methods: &[Method],
) -> Result<Vec<MetricsReport>, PipelineError> {
    config.validate()?;
    let (train, test) = stratified_split(corpus, config.split.test_fraction, config.split.seed)?;
    let venues = train.venues();
    let ks = usable_ks(&config.eval.ks, venues.len());

    let needs_models = methods.iter().any(|m| matches!(m, Method::Logit(_)));
    let models = if needs_models {
        Some(fit_topic_models(&train, config)?)
    } else {
        None
    };

    let mut reports = Vec::with_capacity(methods.len());
    for &method in methods {
        let report = match method {
            Method::UniformRandom => random_baseline_report(
                &test,
                venues,
                config.eval.random_runs,
                config.eval.seed,
                &ks,
            )?,
            Method::MostFrequent => {
                let ranking = most_frequent_ranking(venues)?;
                evaluate(method.display_name(), |_, _| Ok::<_, ClassifyError>(ranking.clone()), &test, &ks)?
            }
            Method::Logit(kind) => {
                let models = models.as_ref().expect("fitted above");
                let logit = fit_classifier(&train, models, kind, &config.logit)?;
                let spec = FeatureSpec::new(kind, &models.tfidf, Some(&models.nmf.model))?;
                evaluate(
                    method.display_name(),
                    |_, text| -> Result<_, PipelineError> {
                        Ok(logit.predict_ranking(&spec.featurize(text)?)?)
                    },
                    &test,
                    &ks,
                )?
            }
        };
        reports.push(report);
    }
    Ok(reports)
}

/// Report file written by `evaluate` and `train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub corpus_id: String,
    pub config_hash: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub ks: Vec<usize>,
    pub reports: Vec<MetricsReport>,
}

impl ReportFile {
    pub fn new(corpus_id: &str, config: &RunConfig, reports: Vec<MetricsReport>) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            corpus_id: corpus_id.to_owned(),
            config_hash: config.hash(),
            timestamp,
            ks: config.eval.ks.clone(),
            reports,
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("report is serializable");
        std::fs::write(path, json + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_hash_ignores_field_order() {
        let a = RunConfig::from_toml_str(
            "features = \"tfidf\"\n[nmf]\nnum_topics = 12\nkappa = 0.5\n[split]\nseed = 3\n",
        )
        .unwrap();
        let b = RunConfig::from_toml_str(
            "[split]\nseed = 3\n[nmf]\nkappa = 0.5\nnum_topics = 12\n",
        )
        .unwrap();
        let b = RunConfig {
            features: FeatureKind::Tfidf,
            ..b
        };
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), RunConfig::default().hash());
    }

    #[test]
    fn defaults_follow_reference_settings() {
        let c = RunConfig::default();
        assert_eq!(c.nmf.kappa, 1.0);
        assert_eq!(c.nmf.w_max_iter, 300);
        assert_eq!(c.nmf.h_max_iter, 100);
        assert_eq!(c.nmf.num_topics, 100);
        assert_eq!(c.vocabulary.min_df, 5);
        assert_eq!(c.vocabulary.max_df_ratio, 0.5);
        assert_eq!(c.logit.l2_strength, 1.0);
        assert_eq!(c.logit.max_iter, 500);
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_config_value_is_rejected() {
        assert!(RunConfig::from_toml_str("features = \"word2vec\"").is_err());
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert_eq!("uniform-random".parse::<Method>().unwrap(), Method::UniformRandom);
        assert!("textcnn".parse::<Method>().is_err());
    }

    #[test]
    fn ks_are_clamped_to_venue_count() {
        assert_eq!(usable_ks(&[5, 10, 1], 8), [1, 5]);
        assert_eq!(usable_ks(&[3], 8), [1, 3]);
    }
}
