//! Planted-topic corpora for tests and demos.
//!
//! Every venue owns a disjoint vocabulary; each paper draws its words from its
//! venue's vocabulary plus a small set of filler words shared by all venues.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{PaperCorpus, PaperRecord};

const FILLER: &[&str] = &["we", "the", "propose", "method", "results", "paper", "approach"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpusSpec {
    pub venues: usize,
    pub docs_per_venue: usize,
    pub terms_per_venue: usize,
    pub title_words: usize,
    pub abstract_words: usize,
    pub keywords: usize,
    pub seed: u64,
}

impl Default for PlantedCorpusSpec {
    fn default() -> Self {
        Self {
            venues: 8,
            docs_per_venue: 200,
            terms_per_venue: 30,
            title_words: 6,
            abstract_words: 40,
            keywords: 3,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub corpus: PaperCorpus,
    /// Planted vocabulary of each venue, aligned with the venue index.
    pub vocabularies: Vec<Vec<String>>,
}

/// Name of venue `v` in planted corpora.
pub fn venue_name(v: usize) -> String {
    format!("VENUE{v:02}")
}

/// Planted term `t` of venue `v`: letters only, so no tokenizer rule drops it.
pub fn planted_term(v: usize, t: usize) -> String {
    fn letters(mut n: usize) -> String {
        let mut s = Vec::new();
        loop {
            s.push(b'a' + (n % 26) as u8);
            n /= 26;
            if n == 0 {
                break;
            }
        }
        s.reverse();
        String::from_utf8(s).expect("ascii")
    }
    format!("{}x{}", letters(v), letters(t + 26))
}

pub fn planted_corpus(spec: &PlantedCorpusSpec) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vocabularies: Vec<Vec<String>> = (0..spec.venues)
        .map(|v| (0..spec.terms_per_venue).map(|t| planted_term(v, t)).collect())
        .collect();

    let mut records = Vec::with_capacity(spec.venues * spec.docs_per_venue);
    for _ in 0..spec.docs_per_venue {
        for (v, vocab) in vocabularies.iter().enumerate() {
            let draw = |n: usize, rng: &mut ChaCha8Rng| -> Vec<String> {
                (0..n)
                    .map(|_| {
                        if rng.random::<f64>() < 0.2 {
                            FILLER.choose(rng).expect("filler").to_string()
                        } else {
                            vocab.choose(rng).expect("vocabulary").clone()
                        }
                    })
                    .collect()
            };
            let title = draw(spec.title_words, &mut rng).join(" ");
            let abstract_text = format!("{}.", draw(spec.abstract_words, &mut rng).join(" "));
            let keywords: Vec<String> = (0..spec.keywords)
                .map(|_| vocab.choose(&mut rng).expect("vocabulary").clone())
                .collect();
            records.push(PaperRecord::new(title, abstract_text, keywords, venue_name(v)));
        }
    }
    PlantedCorpus {
        corpus: PaperCorpus::from_records(records),
        vocabularies,
    }
}

impl PlantedCorpus {
    /// Venue whose planted vocabulary holds the majority of `terms`, if any.
    pub fn owner_of(&self, terms: &[String]) -> Option<usize> {
        let mut votes = vec![0usize; self.vocabularies.len()];
        for term in terms {
            if let Some(v) = self.vocabularies.iter().position(|voc| voc.contains(term)) {
                votes[v] += 1;
            }
        }
        let (best, &count) = votes.iter().enumerate().max_by_key(|(_, c)| **c)?;
        (2 * count > terms.len()).then_some(best)
    }

    /// Writes the corpus as JSON lines.
    pub fn to_jsonl(&self) -> String {
        self.corpus
            .records()
            .iter()
            .map(|r| serde_json::to_string(r).expect("serializable record"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}
