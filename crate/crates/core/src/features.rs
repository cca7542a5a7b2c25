//! Document representations used by the classifiers: tf, tf-idf, NMF topic
//! weights, and tf-idf concatenated with topic weights.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nmf::{NmfError, NmfModel};
use crate::text::{vectorize, CsrMatrix, SparseVector, TfidfModel, Weighting};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("feature kind {0} requires a trained NMF model")]
    MissingNmf(FeatureKind),
    #[error("NMF model has {nmf} terms but the tf-idf vocabulary has {vocabulary}")]
    VocabularyMismatch { nmf: usize, vocabulary: usize },
    #[error("unknown feature kind {0:?}")]
    UnknownKind(String),
    #[error(transparent)]
    Nmf(#[from] NmfError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Tf,
    Tfidf,
    Nmf,
    #[default]
    TfidfPlusNmf,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 4] = [
        FeatureKind::Tf,
        FeatureKind::Tfidf,
        FeatureKind::Nmf,
        FeatureKind::TfidfPlusNmf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Tf => "tf",
            FeatureKind::Tfidf => "tfidf",
            FeatureKind::Nmf => "nmf",
            FeatureKind::TfidfPlusNmf => "tfidf_plus_nmf",
        }
    }

    pub fn needs_nmf(self) -> bool {
        matches!(self, FeatureKind::Nmf | FeatureKind::TfidfPlusNmf)
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| FeatureError::UnknownKind(s.to_owned()))
    }
}

/// A feature kind bound to the models it needs.
#[derive(Debug, Clone, Copy)]
pub struct FeatureSpec<'a> {
    kind: FeatureKind,
    tfidf: &'a TfidfModel,
    nmf: Option<&'a NmfModel>,
}

impl<'a> FeatureSpec<'a> {
    pub fn new(
        kind: FeatureKind,
        tfidf: &'a TfidfModel,
        nmf: Option<&'a NmfModel>,
    ) -> Result<Self, FeatureError> {
        if kind.needs_nmf() && nmf.is_none() {
            return Err(FeatureError::MissingNmf(kind));
        }
        if let Some(model) = nmf {
            if model.num_terms() != tfidf.dim() {
                return Err(FeatureError::VocabularyMismatch {
                    nmf: model.num_terms(),
                    vocabulary: tfidf.dim(),
                });
            }
        }
        Ok(Self { kind, tfidf, nmf })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        let n = self.tfidf.dim();
        let l = self.nmf.map_or(0, NmfModel::num_topics);
        match self.kind {
            FeatureKind::Tf | FeatureKind::Tfidf => n,
            FeatureKind::Nmf => l,
            FeatureKind::TfidfPlusNmf => n + l,
        }
    }

    /// Feature vector of one document text.
    pub fn featurize(&self, text: &str) -> Result<SparseVector, FeatureError> {
        match self.kind {
            FeatureKind::Tf => Ok(vectorize(text, self.tfidf, Weighting::Tf)),
            FeatureKind::Tfidf => Ok(vectorize(text, self.tfidf, Weighting::Tfidf)),
            FeatureKind::Nmf | FeatureKind::TfidfPlusNmf => {
                let nmf = self.nmf.ok_or(FeatureError::MissingNmf(self.kind))?;
                let tfidf = vectorize(text, self.tfidf, Weighting::Tfidf);
                let topics = nmf.transform(&tfidf)?.to_sparse();
                Ok(if self.kind == FeatureKind::Nmf {
                    topics
                } else {
                    tfidf.concat(&topics)
                })
            }
        }
    }

    /// Feature matrix of many texts, rows in input order.
    pub fn featurize_all<S: AsRef<str> + Sync>(
        &self,
        texts: &[S],
    ) -> Result<CsrMatrix, FeatureError> {
        let rows = texts
            .par_iter()
            .map(|t| self.featurize(t.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CsrMatrix::from_rows(&rows, self.dim()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmf::NmfConfig;
    use crate::text::{build_vocabulary, fit_tfidf, VocabularyFilter};
    use ndarray::Array2;

    fn models() -> (TfidfModel, NmfModel) {
        let docs = ["alpha beta", "beta gamma", "gamma delta alpha", "delta epsilon"];
        let filter = VocabularyFilter {
            min_df: 1,
            max_df_ratio: 1.0,
            max_features: None,
        };
        let tfidf = fit_tfidf(&docs, build_vocabulary(&docs, &filter).unwrap());
        let n = tfidf.dim();
        let h = Array2::from_shape_fn((3, n), |(t, j)| if j % 3 == t { 1.0 } else { 0.1 });
        let nmf = NmfModel::new(
            h,
            NmfConfig {
                num_topics: 3,
                ..NmfConfig::default()
            },
            vec![],
        );
        (tfidf, nmf)
    }

    #[test]
    fn kind_strings_roundtrip() {
        for k in FeatureKind::ALL {
            assert_eq!(k.as_str().parse::<FeatureKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.as_str()));
        }
        assert!("bogus".parse::<FeatureKind>().is_err());
    }

    #[test]
    fn nmf_kinds_require_model() {
        let (tfidf, _) = models();
        assert_eq!(
            FeatureSpec::new(FeatureKind::Nmf, &tfidf, None).unwrap_err(),
            FeatureError::MissingNmf(FeatureKind::Nmf)
        );
        assert!(FeatureSpec::new(FeatureKind::Tfidf, &tfidf, None).is_ok());
    }

    #[test]
    fn tfidf_delegates_to_vectorize() {
        let (tfidf, nmf) = models();
        let spec = FeatureSpec::new(FeatureKind::Tfidf, &tfidf, Some(&nmf)).unwrap();
        let text = "alpha gamma gamma unknown";
        assert_eq!(
            spec.featurize(text).unwrap(),
            vectorize(text, &tfidf, Weighting::Tfidf)
        );
        let tf = FeatureSpec::new(FeatureKind::Tf, &tfidf, None).unwrap();
        assert_eq!(tf.featurize(text).unwrap(), vectorize(text, &tfidf, Weighting::Tf));
    }

    #[test]
    fn concatenation_blocks_and_zero_propagation() {
        let (tfidf, nmf) = models();
        let spec = FeatureSpec::new(FeatureKind::TfidfPlusNmf, &tfidf, Some(&nmf)).unwrap();
        let n = tfidf.dim();
        assert_eq!(spec.dim(), n + 3);

        let zero = spec.featurize("nothing here").unwrap();
        assert_eq!(zero.dim(), n + 3);
        assert_eq!(zero.nnz(), 0);

        let text = "beta delta beta";
        let x = spec.featurize(text).unwrap();
        assert_eq!(x.slice(0, n), vectorize(text, &tfidf, Weighting::Tfidf));
        let topics = nmf.transform(&vectorize(text, &tfidf, Weighting::Tfidf)).unwrap();
        assert_eq!(x.slice(n, n + 3).to_dense(), topics.weights());

        let nmf_only = FeatureSpec::new(FeatureKind::Nmf, &tfidf, Some(&nmf)).unwrap();
        assert_eq!(nmf_only.featurize(text).unwrap().to_dense(), topics.weights());
    }

    #[test]
    fn featurize_all_matches_rows() {
        let (tfidf, nmf) = models();
        let spec = FeatureSpec::new(FeatureKind::TfidfPlusNmf, &tfidf, Some(&nmf)).unwrap();
        let texts = ["alpha", "gamma beta", "zzz"];
        let m = spec.featurize_all(&texts).unwrap();
        for (i, t) in texts.iter().enumerate() {
            assert_eq!(m.row_vector(i), spec.featurize(t).unwrap());
        }
    }
}
