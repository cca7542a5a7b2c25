#![allow(dead_code)]

use venuerec::bundle::ModelBundle;
use venuerec::pipeline::{train, RunConfig};
use venuerec::synthetic::{planted_corpus, PlantedCorpus, PlantedCorpusSpec};

pub fn small_planted() -> PlantedCorpus {
    planted_corpus(&PlantedCorpusSpec {
        venues: 6,
        docs_per_venue: 40,
        terms_per_venue: 20,
        seed: 5,
        ..PlantedCorpusSpec::default()
    })
}

pub fn small_config() -> RunConfig {
    let mut config = RunConfig::default();
    config.nmf.num_topics = 6;
    config.nmf.epochs = 20;
    config.vocabulary.min_df = 2;
    config
}

pub fn toy_bundle() -> ModelBundle {
    train(&small_planted().corpus, "toy", &small_config())
        .expect("toy training succeeds")
        .bundle
}
