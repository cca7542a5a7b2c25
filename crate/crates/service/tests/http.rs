use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use venuerec::bundle::ModelBundle;
use venuerec::pipeline::{train, RunConfig};
use venuerec::synthetic::{planted_corpus, PlantedCorpusSpec};
use venuerec_service::router;

fn bundle() -> Arc<ModelBundle> {
    static BUNDLE: OnceLock<Arc<ModelBundle>> = OnceLock::new();
    BUNDLE
        .get_or_init(|| {
            let planted = planted_corpus(&PlantedCorpusSpec {
                venues: 5,
                docs_per_venue: 40,
                terms_per_venue: 20,
                ..PlantedCorpusSpec::default()
            });
            let mut config = RunConfig::default();
            config.nmf.num_topics = 5;
            config.nmf.epochs = 15;
            config.vocabulary.min_df = 2;
            Arc::new(train(&planted.corpus, "toy", &config).unwrap().bundle)
        })
        .clone()
}

async fn call(req: Request<Body>) -> (StatusCode, Value, Vec<u8>) {
    let resp = router(bundle()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value, bytes)
}

fn post(body: impl Into<Body>) -> Request<Body> {
    Request::post("/recommend")
        .header("content-type", "application/json")
        .body(body.into())
        .unwrap()
}

#[tokio::test]
async fn health_reports_model_version() {
    let (status, body, _) = call(Request::get("/health").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["model_version"], venuerec::bundle::FORMAT_VERSION);
}

#[tokio::test]
async fn venues_lists_bundle_venues() {
    let (status, body, _) = call(Request::get("/venues").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "venues": bundle().venues() }));
}

#[tokio::test]
async fn empty_body_is_bad_request() {
    let (status, body, _) = call(post(Body::empty())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"]["code"].is_string());
    assert!(body["error"]["message"].is_string());
}

#[tokio::test]
async fn malformed_and_invalid_requests_are_bad_requests() {
    for (payload, code) in [
        (json!({"title": "x"}).to_string(), "invalid_request"),
        ("{not json".to_string(), "invalid_request"),
        (json!({"title": "", "abstract": " "}).to_string(), "empty_query"),
        (json!({"title": "a", "abstract": "b", "k": 0}).to_string(), "invalid_parameter"),
        (json!({"title": "a", "abstract": "b", "k": 99}).to_string(), "invalid_parameter"),
        (json!({"title": "a", "abstract": "b", "terms_per_topic": 0}).to_string(), "invalid_parameter"),
    ] {
        let (status, body, _) = call(post(payload.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{payload}");
        assert_eq!(body["error"]["code"], code, "{payload}");
    }
}

#[tokio::test]
async fn recommend_returns_k_venues_with_topics() {
    let b = bundle();
    let terms = b.tfidf.vocabulary().terms();
    let title = terms[..3].join(" ");
    let abstract_text = terms[3..10].join(" ");
    let req = json!({"title": title, "abstract": abstract_text, "keywords": [], "k": 3});
    let (status, body, _) = call(post(req.to_string())).await;
    assert_eq!(status, StatusCode::OK);
    let recs = body["recommendations"].as_array().unwrap();
    assert_eq!(recs.len(), 3);
    for r in recs {
        assert!(b.venues().contains(&r["venue"].as_str().unwrap().to_string()));
        assert!(r["score"].as_f64().unwrap() > 0.0);
        let topics = r["topics"].as_array().unwrap();
        assert!(!topics.is_empty() && topics.len() <= 3);
        for t in topics {
            assert_eq!(t["terms"].as_array().unwrap().len(), 5);
            assert!(t["topic_id"].is_u64() && t["weight"].is_f64());
        }
    }
    assert!(!body["query_topics"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn identical_requests_get_identical_bodies() {
    let req = json!({"title": "axba axbb", "abstract": "bxba cxbc", "keywords": ["dxbd"], "k": 4, "top_topics": 2});
    let (_, _, first) = call(post(req.to_string())).await;
    let (_, _, second) = call(post(req.to_string())).await;
    assert_eq!(first, second);
}

#[tokio::test]
async fn unknown_route_is_json_404() {
    let (status, body, _) = call(Request::get("/nope").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["code"], "not_found");
}

#[tokio::test]
async fn server_answers_over_tcp_and_shuts_down() {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(venuerec_service::serve_on(
        listener,
        (*bundle()).clone(),
        async {
            let _ = rx.await;
        },
    ));

    let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    stream
        .write_all(b"GET /health HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
        .await
        .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).await.unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("\"status\":\"ok\""));

    tx.send(()).unwrap();
    server.await.unwrap().unwrap();
}
