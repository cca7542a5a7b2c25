mod common;

use proptest::prelude::*;
use venuerec::corpus::load_corpus;
use venuerec::nmf::fit_nmf;
use venuerec::pipeline::fit_topic_models;
use venuerec::text::{vectorize, vectorize_all, Weighting};

#[test]
fn transform_agrees_with_training_rows_on_top_topic() {
    let planted = common::small_planted();
    let config = common::small_config();
    let models = fit_topic_models(&planted.corpus, &config).unwrap();
    let texts = planted.corpus.texts();
    let u = vectorize_all(&texts, &models.tfidf, Weighting::Tfidf);
    let refit = fit_nmf(&u, &config.nmf).unwrap();
    assert_eq!(refit.model, models.nmf.model);

    let mut agree = 0;
    for (i, text) in texts.iter().enumerate() {
        let x = vectorize(text, &models.tfidf, Weighting::Tfidf);
        let inferred = models.nmf.model.transform(&x).unwrap().argmax();
        let row = models.nmf.doc_topics.row(i);
        let fitted = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a)));
        agree += usize::from(inferred == fitted);
    }
    assert!(agree as f64 >= 0.95 * texts.len() as f64, "{agree} of {}", texts.len());
}

#[test]
fn loading_a_written_corpus_is_idempotent() {
    let planted = common::small_planted();
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    std::fs::write(&a, planted.to_jsonl()).unwrap();
    let (first, report) = load_corpus(&a).unwrap();
    assert_eq!(report.rejected, 0);
    let b = dir.path().join("b.jsonl");
    let lines: Vec<String> = first.records().iter().map(|r| serde_json::to_string(r).unwrap()).collect();
    std::fs::write(&b, lines.join("\n")).unwrap();
    let (second, _) = load_corpus(&b).unwrap();
    assert_eq!(first, second);
    assert_eq!(first, planted.corpus);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transform_rank_order_is_scale_equivariant(
        picks in prop::collection::vec(0usize..120, 1..30),
        scale in 0.05f64..20.0,
    ) {
        let planted = common::small_planted();
        let config = common::small_config();
        thread_local! {
            static MODELS: std::cell::OnceCell<venuerec::pipeline::TopicModels> = const { std::cell::OnceCell::new() };
        }
        MODELS.with(|cell| {
            let models = cell.get_or_init(|| fit_topic_models(&planted.corpus, &config).unwrap());
            let terms = models.tfidf.vocabulary().terms();
            let text: Vec<&str> = picks.iter().map(|&p| terms[p % terms.len()].as_str()).collect();
            let x = vectorize(&text.join(" "), &models.tfidf, Weighting::Tfidf);
            let a = models.nmf.model.transform(&x).unwrap();
            let b = models.nmf.model.transform(&x.scaled(scale)).unwrap();
            let top = |v: &venuerec::nmf::TopicVector| {
                v.ranked().into_iter().filter(|&t| v.weights()[t] > 1e-6 * v.weights().iter().cloned().fold(0.0, f64::max)).collect::<Vec<_>>()
            };
            prop_assert_eq!(top(&a), top(&b));
            Ok(())
        })?;
    }
}
