use std::collections::HashMap;

use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use snuggle_core::analytics::{plan_metrics, stats_report, PlanMetrics, StatsReport};
use snuggle_core::{
    Decision, ItemId, LabeledProfile, ModerationDecision, RecordId, SessionId, SessionView,
    SharedItem,
};

use crate::error::ApiError;
use crate::AppState;

/// JSON body extractor whose rejections use the API error shape.
pub struct JsonBody<T>(pub T);

impl<S, T> FromRequest<S> for JsonBody<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        use axum::extract::rejection::JsonRejection;
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(JsonBody(v)),
            Err(JsonRejection::JsonDataError(e)) => Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "invalid_body",
                e.body_text(),
            )),
            Err(e) => Err(ApiError::malformed(e.body_text())),
        }
    }
}

/// Runs blocking store/session work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

// ---------------------------------------------------------------------------
// survivor endpoints

pub async fn create_session(State(app): State<AppState>) -> Result<Response, ApiError> {
    let view = blocking(move || Ok(app.manager.start_session(app.seed_policy.next_seed()))).await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

pub async fn get_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    blocking(move || Ok(app.manager.view(&SessionId(id))?)).await.map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmBody {
    narrative: String,
    #[serde(default)]
    feelings: String,
    #[serde(default)]
    profile: LabeledProfile,
}

pub async fn submit_harm(
    State(app): State<AppState>,
    Path(id): Path<String>,
    JsonBody(body): JsonBody<HarmBody>,
) -> Result<Json<SessionView>, ApiError> {
    blocking(move || {
        Ok(app.manager.submit_harm(&SessionId(id), &body.narrative, &body.feelings, &body.profile)?)
    })
    .await
    .map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpactsNeedsBody {
    impacts: String,
    needs: String,
}

pub async fn submit_impacts_needs(
    State(app): State<AppState>,
    Path(id): Path<String>,
    JsonBody(body): JsonBody<ImpactsNeedsBody>,
) -> Result<Json<SessionView>, ApiError> {
    blocking(move || Ok(app.manager.submit_impacts_needs(&SessionId(id), &body.impacts, &body.needs)?))
        .await
        .map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemBody {
    stakeholder: String,
    action: String,
}

/// Session view plus the id of the item just created.
#[derive(Serialize)]
pub struct ItemCreated {
    item_id: ItemId,
    #[serde(flatten)]
    session: SessionView,
}

pub async fn add_item(
    State(app): State<AppState>,
    Path(id): Path<String>,
    JsonBody(body): JsonBody<ItemBody>,
) -> Result<Response, ApiError> {
    let (item_id, session) =
        blocking(move || Ok(app.manager.add_action_item(&SessionId(id), &body.stakeholder, &body.action)?))
            .await?;
    Ok((StatusCode::CREATED, Json(ItemCreated { item_id, session })).into_response())
}

pub async fn edit_item(
    State(app): State<AppState>,
    Path((id, item)): Path<(String, String)>,
    JsonBody(body): JsonBody<ItemBody>,
) -> Result<Json<SessionView>, ApiError> {
    blocking(move || {
        Ok(app.manager.edit_action_item(&SessionId(id), &ItemId(item), &body.stakeholder, &body.action)?)
    })
    .await
    .map(Json)
}

pub async fn recommendations(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    if let Some(unknown) = params.keys().find(|k| *k != "dimensions" && *k != "page") {
        return Err(ApiError::malformed(format!("unknown query parameter `{unknown}`")));
    }
    let dims: Vec<String> = params
        .get("dimensions")
        .map(|d| d.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect())
        .unwrap_or_default();
    let page: usize = match params.get("page") {
        None => 0,
        Some(p) => p.parse().map_err(|_| ApiError::malformed(format!("invalid page `{p}`")))?,
    };
    let page = blocking(move || Ok(app.manager.request_recommendations(&SessionId(id), dims, page)?)).await?;
    Ok(Json(page).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdoptBody {
    card_id: String,
}

pub async fn adopt(
    State(app): State<AppState>,
    Path(id): Path<String>,
    JsonBody(body): JsonBody<AdoptBody>,
) -> Result<Response, ApiError> {
    let (item_id, session) =
        blocking(move || Ok(app.manager.adopt_recommendation(&SessionId(id), &body.card_id)?)).await?;
    Ok((StatusCode::CREATED, Json(ItemCreated { item_id, session })).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineBody {
    ordering: Vec<ItemId>,
}

pub async fn set_timeline(
    State(app): State<AppState>,
    Path(id): Path<String>,
    JsonBody(body): JsonBody<TimelineBody>,
) -> Result<Json<SessionView>, ApiError> {
    blocking(move || Ok(app.manager.set_timeline(&SessionId(id), body.ordering)?)).await.map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalizeBody {
    share: bool,
}

pub async fn finalize(
    State(app): State<AppState>,
    Path(id): Path<String>,
    JsonBody(body): JsonBody<FinalizeBody>,
) -> Result<Json<SessionView>, ApiError> {
    blocking(move || Ok(app.manager.finalize(&SessionId(id), body.share)?)).await.map(Json)
}

// ---------------------------------------------------------------------------
// public, read-only

pub async fn resources(State(app): State<AppState>) -> Response {
    (
        [(header::CACHE_CONTROL, "public, max-age=3600")],
        Json(app.resources.as_ref().clone()),
    )
        .into_response()
}

pub async fn schema(State(app): State<AppState>) -> Response {
    (
        [(header::CACHE_CONTROL, "public, max-age=3600")],
        Json(app.manager.schema().clone()),
    )
        .into_response()
}

// ---------------------------------------------------------------------------
// admin

pub fn authorized(headers: &HeaderMap, token: &str) -> bool {
    let Some(value) = headers.get(header::AUTHORIZATION).and_then(|v| v.to_str().ok()) else {
        return false;
    };
    let Some(given) = value.strip_prefix("Bearer ") else {
        return false;
    };
    // constant time in the token length
    given.len() == token.len()
        && given.bytes().zip(token.bytes()).fold(0u8, |acc, (a, b)| acc | (a ^ b)) == 0
}

/// What a reviewer sees of a pending record: the shareable part only.
#[derive(Serialize)]
pub struct PendingEntry {
    record_id: RecordId,
    created_at: String,
    profile: LabeledProfile,
    items: Vec<SharedItem>,
}

pub async fn moderation_queue(State(app): State<AppState>) -> Result<Json<Vec<PendingEntry>>, ApiError> {
    blocking(move || {
        let schema = app.manager.schema();
        Ok(app
            .store
            .pending_queue()
            .into_iter()
            .map(|r| PendingEntry {
                created_at: r.created_at.to_rfc3339(),
                profile: r.profile.to_labels(schema),
                items: snuggle_core::PoolMember::from_record(&r, String::new()).items,
                record_id: r.id,
            })
            .collect())
    })
    .await
    .map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionBody {
    decision: Decision,
    #[serde(default)]
    note: String,
}

pub async fn decide(
    State(app): State<AppState>,
    Path(id): Path<String>,
    JsonBody(body): JsonBody<DecisionBody>,
) -> Result<Json<ModerationDecision>, ApiError> {
    blocking(move || Ok(app.store.decide_moderation(&RecordId(id), body.decision, &body.note)?))
        .await
        .map(Json)
}

#[derive(Serialize)]
pub struct Deleted {
    deleted: RecordId,
}

pub async fn delete_record(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Deleted>, ApiError> {
    blocking(move || {
        let id = RecordId(id);
        app.store.delete_record(&id)?;
        Ok(Deleted { deleted: id })
    })
    .await
    .map(Json)
}

#[derive(Serialize)]
pub struct StatsBody {
    report: StatsReport,
    plan_metrics: PlanMetrics,
}

pub async fn stats(State(app): State<AppState>) -> Result<Json<StatsBody>, ApiError> {
    blocking(move || {
        let records: Vec<_> =
            app.store.records().into_iter().filter(|r| r.is_recommendable()).collect();
        let report = stats_report(&records)
            .map_err(|e| ApiError::new(StatusCode::CONFLICT, "empty_pool", e.to_string()))?;
        let plans: Vec<_> = records.iter().map(|r| r.plan.clone()).collect();
        let plan_metrics = plan_metrics(&plans)
            .map_err(|e| ApiError::new(StatusCode::CONFLICT, "empty_pool", e.to_string()))?;
        Ok(StatsBody { report, plan_metrics })
    })
    .await
    .map(Json)
}
