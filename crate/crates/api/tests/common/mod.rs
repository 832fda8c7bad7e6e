#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

use snuggle_api::{bundled_resources, build_app, AppState, SeedPolicy};
use snuggle_core::seed::{import_seed, BUNDLED_SEED};
use snuggle_core::{QuestionnaireSchema, Store};

pub const TOKEN: &str = "test-admin-token";

pub struct Harness {
    pub app: Router,
    pub state: AppState,
    _dir: TempDir,
}

impl Harness {
    pub fn new(seeded: bool) -> Self {
        let dir = TempDir::new().unwrap();
        let store = Arc::new(Store::open(dir.path(), Arc::new(QuestionnaireSchema::default_schema())).unwrap());
        if seeded {
            import_seed(&store, BUNDLED_SEED, false).unwrap();
        }
        let state = AppState::new(store, bundled_resources(), TOKEN, SeedPolicy::Fixed(7));
        let app = build_app(state.clone(), &["http://localhost:5173".to_string()]);
        Self { app, state, _dir: dir }
    }

    pub async fn send(&self, method: &str, uri: &str, body: Option<Value>, admin: bool) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if admin {
            req = req.header("authorization", format!("Bearer {TOKEN}"));
        }
        let req = match body {
            Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        self.raw(req).await
    }

    pub async fn raw(&self, req: Request<Body>) -> (StatusCode, Value) {
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
        (status, value)
    }

    pub async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.send("GET", uri, None, false).await
    }

    pub async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        self.send("POST", uri, Some(body), false).await
    }

    pub async fn put(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        self.send("PUT", uri, Some(body), false).await
    }

    pub async fn new_session(&self) -> String {
        let (status, body) = self.send("POST", "/sessions", None, false).await;
        assert_eq!(status, StatusCode::CREATED);
        body["session_id"].as_str().unwrap().to_string()
    }

    /// Walks a session to the drafting step.
    pub async fn drafting_session(&self) -> String {
        let id = self.new_session().await;
        let (s, _) = self.put(&format!("/sessions/{id}/harm"), harm_body()).await;
        assert_eq!(s, StatusCode::OK);
        let (s, _) = self
            .put(&format!("/sessions/{id}/impacts-needs"), json!({"impacts": "I stopped posting", "needs": "support"}))
            .await;
        assert_eq!(s, StatusCode::OK);
        id
    }
}

pub fn harm_body() -> Value {
    json!({
        "narrative": "Strangers kept replying to my posts with slurs.",
        "feelings": "scared",
        "profile": {
            "harm_type": ["offensive name-calling", "harassment"],
            "platform": ["social media site"],
            "offender_count": ["6-10"],
            "relationship": ["strangers"]
        }
    })
}
