//! HTTP front end for the sensemaking workflow.
//!
//! [`build_app`] wires a [`SessionManager`] and [`Store`] into an axum
//! router; [`serve`] opens the data directory from a [`Config`], imports the
//! seed corpus into an empty store and listens until shutdown.

pub mod config;
pub mod error;
pub mod routes;

use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Request, State};
use axum::http::{HeaderValue, Method};
use axum::middleware::{self, Next};
use axum::response::Response;
use axum::routing::{delete, get, patch, post, put};
use axum::Router;
use tower_http::cors::{AllowOrigin, CorsLayer};

use snuggle_core::seed::{import_seed, BUNDLED_SEED};
use snuggle_core::{QuestionnaireSchema, SessionManager, Store};

pub use config::{bundled_resources, Config, ConfigError, Resource, SeedPolicy};
pub use error::ApiError;

/// How often idle sessions are swept.
pub const EXPIRY_SWEEP: Duration = Duration::from_secs(600);

#[derive(Clone)]
pub struct AppState {
    pub manager: Arc<SessionManager>,
    pub store: Arc<Store>,
    pub resources: Arc<Vec<Resource>>,
    pub admin_token: Arc<str>,
    pub seed_policy: SeedPolicy,
}

impl AppState {
    pub fn new(
        store: Arc<Store>,
        resources: Vec<Resource>,
        admin_token: &str,
        seed_policy: SeedPolicy,
    ) -> Self {
        let schema = Arc::new(store.schema().clone());
        Self {
            manager: Arc::new(SessionManager::new(store.clone(), schema)),
            store,
            resources: Arc::new(resources),
            admin_token: admin_token.into(),
            seed_policy,
        }
    }
}

async fn require_admin(State(app): State<AppState>, req: Request, next: Next) -> Result<Response, ApiError> {
    if routes::authorized(req.headers(), &app.admin_token) {
        Ok(next.run(req).await)
    } else {
        Err(ApiError::unauthorized())
    }
}

async fn not_found() -> ApiError {
    ApiError::not_found()
}

async fn method_not_allowed() -> ApiError {
    ApiError::method_not_allowed()
}

fn cors(origins: &[String]) -> CorsLayer {
    let allowed: Vec<HeaderValue> = origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()).collect();
    CorsLayer::new()
        .allow_origin(AllowOrigin::list(allowed))
        .allow_methods([Method::GET, Method::POST, Method::PUT, Method::PATCH, Method::DELETE])
        .allow_headers([axum::http::header::CONTENT_TYPE, axum::http::header::AUTHORIZATION])
}

pub fn build_app(state: AppState, cors_origins: &[String]) -> Router {
    use routes::*;

    let admin = Router::new()
        .route("/moderation", get(moderation_queue))
        .route("/moderation/{id}", post(decide))
        .route("/records/{id}", delete(delete_record))
        .route("/stats", get(stats))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_admin));

    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/harm", put(submit_harm))
        .route("/sessions/{id}/impacts-needs", put(submit_impacts_needs))
        .route("/sessions/{id}/items", post(add_item))
        .route("/sessions/{id}/items/{item_id}", patch(edit_item))
        .route("/sessions/{id}/recommendations", get(recommendations))
        .route("/sessions/{id}/adopt", post(adopt))
        .route("/sessions/{id}/timeline", put(set_timeline))
        .route("/sessions/{id}/finalize", post(finalize))
        .route("/resources", get(resources))
        .route("/schema", get(schema))
        .nest("/admin", admin)
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(cors(cors_origins))
        .with_state(state)
}

/// Opens the store and builds state from a config, importing the seed
/// corpus when the store holds no records.
pub fn prepare(config: &Config) -> Result<AppState, Box<dyn std::error::Error + Send + Sync>> {
    let resources = config.resources()?;
    let store = Arc::new(Store::open(&config.data_dir, Arc::new(QuestionnaireSchema::default_schema()))?);
    if store.is_empty() {
        if let Some(seed) = &config.seed_path {
            let text = if seed == "bundled" { BUNDLED_SEED.to_string() } else { std::fs::read_to_string(seed)? };
            let summary = import_seed(&store, &text, false)?;
            tracing::info!(survivors = summary.survivors, items = summary.items, "imported seed corpus");
        }
    }
    Ok(AppState::new(store, resources, &config.admin_token, config.rng_seed_policy))
}

/// Serves until ctrl-c.
pub async fn serve(config: Config) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let state = prepare(&config)?;
    let manager = state.manager.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(EXPIRY_SWEEP);
        loop {
            tick.tick().await;
            let m = manager.clone();
            match tokio::task::spawn_blocking(move || m.sweep()).await {
                Ok(Ok(n)) if n > 0 => tracing::info!(expired = n, "expired idle sessions"),
                Ok(Err(e)) => tracing::error!(error = %e, "session expiry failed"),
                _ => {}
            }
        }
    });
    let app = build_app(state, &config.cors_origins);
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

