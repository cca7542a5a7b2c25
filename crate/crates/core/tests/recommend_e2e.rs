mod common;

use approx::assert_abs_diff_eq;
use venuerec::recommend::{recommend, Query, RecommendError, RecommendOptions};

fn query(title: &str, abstract_text: &str) -> Query {
    Query {
        title: title.into(),
        abstract_text: abstract_text.into(),
        keywords: vec![],
    }
}

#[test]
fn full_k_is_a_permutation_of_venues() {
    let bundle = common::toy_bundle();
    let planted = common::small_planted();
    let q = query(&planted.vocabularies[2][..4].join(" "), "");
    let venues = bundle.venues().len();
    let rec = recommend(&q, &RecommendOptions { k: venues, ..Default::default() }, &bundle).unwrap();
    let mut names: Vec<&str> = rec.recommendations.iter().map(|r| r.venue.as_str()).collect();
    names.sort_unstable();
    let mut expected: Vec<&str> = bundle.venues().iter().map(String::as_str).collect();
    expected.sort_unstable();
    assert_eq!(names, expected);
    let total: f64 = rec.recommendations.iter().map(|r| r.score).sum();
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    assert!(rec.recommendations.windows(2).all(|w| w[0].score >= w[1].score));
}

#[test]
fn empty_query_has_uniform_order_and_no_query_topics() {
    let bundle = common::toy_bundle();
    let venues = bundle.venues().len();
    let rec = recommend(&Query::default(), &RecommendOptions { k: venues, ..Default::default() }, &bundle).unwrap();
    assert!(rec.query_topics.is_empty());
    // A zero feature vector leaves only the intercepts.
    let intercept = bundle.logit.intercept();
    let z: Vec<f64> = intercept.iter().map(|b| b.exp()).collect();
    let norm: f64 = z.iter().sum();
    for r in &rec.recommendations {
        let v = bundle.venues().iter().position(|n| *n == r.venue).unwrap();
        assert_abs_diff_eq!(r.score, z[v] / norm, epsilon = 1e-12);
        assert!(!r.topics.is_empty());
    }
}

#[test]
fn increasing_k_extends_the_prefix() {
    let bundle = common::toy_bundle();
    let q = query("zzz axba bxbb", "cxbc dxbd");
    let mut previous: Vec<String> = vec![];
    for k in 1..=bundle.venues().len() {
        let rec = recommend(&q, &RecommendOptions { k, ..Default::default() }, &bundle).unwrap();
        let names: Vec<String> = rec.recommendations.iter().map(|r| r.venue.clone()).collect();
        assert_eq!(names.len(), k);
        assert_eq!(&names[..k - 1], &previous[..]);
        previous = names;
    }
}

#[test]
fn explanations_respect_options() {
    let bundle = common::toy_bundle();
    let planted = common::small_planted();
    let q = query(&planted.vocabularies[0].join(" "), &planted.vocabularies[1][..3].join(" "));
    let opts = RecommendOptions { k: 3, top_topics: 2, terms_per_topic: 4 };
    let rec = recommend(&q, &opts, &bundle).unwrap();
    assert_eq!(rec.recommendations.len(), 3);
    assert!(!rec.query_topics.is_empty() && rec.query_topics.topics.len() <= 2);
    for r in rec.recommendations.iter().map(|r| &r.topics).chain([&rec.query_topics]) {
        assert!(r.topics.len() <= 2);
        assert!(r.topics.iter().all(|t| t.terms.len() == 4 && t.weight > 0.0 && t.weight <= 1.0));
        assert!(r.topics.windows(2).all(|w| w[0].weight >= w[1].weight));
    }
    let again = recommend(&q, &opts, &bundle).unwrap();
    assert_eq!(rec, again);
}

#[test]
fn k_outside_venue_range_is_an_error() {
    let bundle = common::toy_bundle();
    let venues = bundle.venues().len();
    for k in [0, venues + 1] {
        let err = recommend(&Query::default(), &RecommendOptions { k, ..Default::default() }, &bundle).unwrap_err();
        assert_eq!(err, RecommendError::KOutOfRange { k, venues });
    }
}
