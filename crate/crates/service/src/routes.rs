use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::request::Parts;
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use pointwise_core::games::PayoffConfig;
use pointwise_core::ledger::{leaderboard, velocity_series};
use pointwise_core::scalar::serde_rational;
use pointwise_core::session::Session;
use pointwise_core::{Rational, Scale};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::state::{AppState, Reply};

pub const TOKEN_HEADER: &str = "x-participant-token";
pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";
pub const VERSION_HEADER: &str = "x-session-version";

type App = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    let story = |path: &str| format!("/sessions/{{id}}/stories/{{sid}}/{path}");
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(snapshot))
        .route("/sessions/{id}/participants", post(join))
        .route("/sessions/{id}/stories", post(add_story))
        .route("/sessions/{id}/sprints/start", post(start_sprint))
        .route("/sessions/{id}/leaderboard", get(get_leaderboard))
        .route("/sessions/{id}/velocity", get(get_velocity))
        .route(&story("open"), post(open_estimation))
        .route(&story("estimates"), post(submit_estimate))
        .route(&story("clarifications"), post(clarify))
        .route(&story("reveal"), post(reveal).get(peek_reveal))
        .route(&story("commit"), post(commit))
        .route(&story("revise"), post(revise))
        .route(&story("actual"), post(record_actual))
        .route(&story("score"), post(score))
        .fallback(|| async { ApiError::new("NOT_FOUND", "no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new("METHOD_NOT_ALLOWED", "method not allowed on this endpoint")
        })
        .with_state(state)
}

/// Headers every command looks at, plus the request line for idempotency
/// fingerprints.
struct Ctx {
    token: Option<String>,
    idempotency_key: Option<String>,
    target: String,
}

impl<S: Send + Sync> FromRequestParts<S> for Ctx {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, Self::Rejection> {
        let header = |name: &str| -> Result<Option<String>, ApiError> {
            parts
                .headers
                .get(name)
                .map(|v| {
                    v.to_str()
                        .map(str::to_string)
                        .map_err(|_| ApiError::bad_request(format!("{name} must be ASCII")))
                })
                .transpose()
        };
        Ok(Ctx {
            token: header(TOKEN_HEADER)?,
            idempotency_key: header(IDEMPOTENCY_HEADER)?,
            target: format!("{} {}", parts.method, parts.uri.path()),
        })
    }
}

impl Ctx {
    fn idempotency<'a>(&'a self, fingerprint: &'a str) -> Option<(&'a str, &'a str)> {
        self.idempotency_key.as_deref().map(|k| (k, fingerprint))
    }

    fn fingerprint(&self, body: &[u8]) -> String {
        format!("{}\n{}", self.target, String::from_utf8_lossy(body))
    }
}

struct Ids {
    session: String,
    story: String,
}

impl<S: Send + Sync> FromRequestParts<S> for Ids {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        let Path(mut map) = Path::<HashMap<String, String>>::from_request_parts(parts, state)
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        Ok(Ids {
            session: map.remove("id").unwrap_or_default(),
            story: map.remove("sid").unwrap_or_default(),
        })
    }
}

/// Raw request body; an empty body reads as `{}`.
struct Body(Bytes);

impl<S: Send + Sync> FromRequest<S> for Body {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        Bytes::from_request(req, state)
            .await
            .map(Body)
            .map_err(|e| ApiError::bad_request(e.body_text()))
    }
}

impl Body {
    fn parse<T: DeserializeOwned>(&self) -> Result<T, ApiError> {
        let bytes: &[u8] = if self.0.iter().all(u8::is_ascii_whitespace) { b"{}" } else { &self.0 };
        serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
    }
}

fn respond(result: Result<Reply, ApiError>) -> Response {
    match result {
        Ok(reply) => {
            let version = reply.body.get("version").and_then(Value::as_u64);
            let mut response = (reply.status, Json(reply.body)).into_response();
            if let Some(v) = version {
                response.headers_mut().insert(VERSION_HEADER, HeaderValue::from(v));
            }
            response
        }
        Err(e) => e.into_response(),
    }
}

fn with_version(session: &Session, body: Value) -> Reply {
    let mut body = body;
    if let Value::Object(map) = &mut body {
        map.insert("version".into(), session.version().into());
    }
    Reply::new(StatusCode::OK, body)
}

fn to_value<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("response types serialize")
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    session_id: Option<String>,
    scale: Option<Scale>,
    cfg: Option<PayoffConfig>,
}

async fn create_session(State(app): App, ctx: Ctx, body: Body) -> Response {
    let fingerprint = ctx.fingerprint(&body.0);
    let result = body.parse::<CreateSession>().and_then(|input| {
        let id = input.session_id.unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
        let session = Session::create(
            &id,
            input.scale.unwrap_or_default(),
            input.cfg.unwrap_or_default(),
            Utc::now(),
        )?;
        app.create_session(session, ctx.idempotency(&fingerprint))
    });
    respond(result)
}

async fn snapshot(
    State(app): App,
    ids: Ids,
    query: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> Response {
    let query = match query {
        Ok(Query(q)) => q,
        Err(e) => return ApiError::bad_request(e.body_text()).into_response(),
    };
    let session = match app.snapshot(&ids.session) {
        Ok(s) => s,
        Err(e) => return e.into_response(),
    };
    if let Some(since) = query.get("since_version") {
        let Ok(since) = since.parse::<u64>() else {
            return ApiError::bad_request("since_version must be a non-negative integer").into_response();
        };
        if since == session.version() {
            let mut headers = HeaderMap::new();
            headers.insert(VERSION_HEADER, HeaderValue::from(since));
            return (StatusCode::NOT_MODIFIED, headers).into_response();
        }
    }
    respond(Ok(Reply::new(StatusCode::OK, to_value(&session.view()))))
}

async fn get_leaderboard(State(app): App, ids: Ids) -> Response {
    respond(app.snapshot(&ids.session).map(|s| {
        with_version(&s, json!({ "leaderboard": leaderboard(&s) }))
    }))
}

async fn get_velocity(State(app): App, ids: Ids) -> Response {
    respond(app.snapshot(&ids.session).map(|s| {
        with_version(&s, json!({ "velocity": velocity_series(&s) }))
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JoinInput {
    display_name: String,
}

async fn join(State(app): App, ids: Ids, ctx: Ctx, body: Body) -> Response {
    let fingerprint = ctx.fingerprint(&body.0);
    respond(body.parse::<JoinInput>().and_then(|input| {
        app.execute(&ids.session, None, ctx.idempotency(&fingerprint), |cmd| {
            let participant_id = cmd.session.join(&input.display_name, cmd.at)?;
            let token = cmd.issue_token(&participant_id);
            Ok(Reply::new(
                StatusCode::CREATED,
                json!({ "participant_id": participant_id, "token": token }),
            ))
        })
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StoryInput {
    role: String,
    function: String,
    benefit: String,
}

async fn add_story(State(app): App, ids: Ids, ctx: Ctx, body: Body) -> Response {
    let fingerprint = ctx.fingerprint(&body.0);
    respond(body.parse::<StoryInput>().and_then(|input| {
        app.execute(&ids.session, None, ctx.idempotency(&fingerprint), |cmd| {
            let story_id =
                cmd.session.add_story(&input.role, &input.function, &input.benefit, cmd.at)?;
            let sprint = cmd.session.story(&story_id)?.sprint;
            Ok(Reply::new(StatusCode::CREATED, json!({ "story_id": story_id, "sprint": sprint })))
        })
    }))
}

async fn start_sprint(State(app): App, ids: Ids, ctx: Ctx, body: Body) -> Response {
    let fingerprint = ctx.fingerprint(&body.0);
    respond(app.execute(&ids.session, None, ctx.idempotency(&fingerprint), |cmd| {
        let sprint = cmd.session.start_sprint(cmd.at)?;
        Ok(Reply::new(
            StatusCode::OK,
            json!({ "sprint": sprint, "sprint_counter": cmd.session.sprint_counter() }),
        ))
    }))
}

fn story_state(session: &Session, story_id: &str) -> Result<Value, ApiError> {
    Ok(to_value(&session.story(story_id)?.state))
}

async fn open_estimation(State(app): App, ids: Ids, ctx: Ctx, body: Body) -> Response {
    let fingerprint = ctx.fingerprint(&body.0);
    respond(app.execute(&ids.session, None, ctx.idempotency(&fingerprint), |cmd| {
        cmd.session.open_estimation(&ids.story, cmd.at)?;
        Ok(Reply::new(
            StatusCode::OK,
            json!({ "story_id": ids.story, "state": story_state(cmd.session, &ids.story)? }),
        ))
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValueInput {
    #[serde(with = "serde_rational")]
    value: Rational,
}

async fn submit_estimate(State(app): App, ids: Ids, ctx: Ctx, body: Body) -> Response {
    let fingerprint = ctx.fingerprint(&body.0);
    respond(body.parse::<ValueInput>().and_then(|input| {
        app.execute(&ids.session, ctx.token.as_deref(), ctx.idempotency(&fingerprint), |cmd| {
            let participant = cmd.participant()?.to_string();
            cmd.session.submit_estimate(&ids.story, &participant, input.value, cmd.at)?;
            // the value is deliberately not echoed: the story is still sealed
            let submitted = cmd.session.estimates_for(&ids.story).count();
            Ok(Reply::new(
                StatusCode::CREATED,
                json!({ "story_id": ids.story, "sealed": true, "submitted_count": submitted }),
            ))
        })
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClarificationInput {
    question: String,
}

async fn clarify(State(app): App, ids: Ids, ctx: Ctx, body: Body) -> Response {
    let fingerprint = ctx.fingerprint(&body.0);
    respond(body.parse::<ClarificationInput>().and_then(|input| {
        app.execute(&ids.session, ctx.token.as_deref(), ctx.idempotency(&fingerprint), |cmd| {
            let participant = cmd.participant()?.to_string();
            cmd.session.register_clarification(&ids.story, &participant, &input.question, cmd.at)?;
            let asked = cmd.session.clarifications().iter().filter(|c| c.story_id == ids.story).count();
            Ok(Reply::new(
                StatusCode::CREATED,
                json!({ "story_id": ids.story, "clarification_count": asked }),
            ))
        })
    }))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct RevealInput {
    quorum_override: bool,
}

async fn reveal(State(app): App, ids: Ids, ctx: Ctx, body: Body) -> Response {
    let fingerprint = ctx.fingerprint(&body.0);
    respond(body.parse::<RevealInput>().and_then(|input| {
        app.execute(&ids.session, None, ctx.idempotency(&fingerprint), |cmd| {
            let view = cmd.session.reveal(&ids.story, input.quorum_override, cmd.at)?;
            Ok(Reply::new(StatusCode::OK, to_value(&view)))
        })
    }))
}

/// Read-only reveal: the anonymized view once revealed, otherwise the error a
/// reveal attempt would hit right now.
async fn peek_reveal(State(app): App, ids: Ids) -> Response {
    respond(app.snapshot(&ids.session).and_then(|s| {
        if let Some(view) = s.reveal_view(&ids.story) {
            return Ok(with_version(&s, to_value(&view)));
        }
        let mut trial = (*s).clone();
        trial.reveal(&ids.story, false, Utc::now())?;
        Err(ApiError::new(
            "STORY_NOT_REVEALED",
            "every participant has submitted; POST to reveal",
        ))
    }))
}

async fn commit(State(app): App, ids: Ids, ctx: Ctx, body: Body) -> Response {
    let fingerprint = ctx.fingerprint(&body.0);
    respond(app.execute(&ids.session, None, ctx.idempotency(&fingerprint), |cmd| {
        let final_estimate = cmd.session.commit_final(&ids.story, cmd.at)?;
        Ok(Reply::new(
            StatusCode::OK,
            json!({ "story_id": ids.story, "final_estimate": to_value(&final_estimate) }),
        ))
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReviseInput {
    #[serde(with = "serde_rational")]
    value: Rational,
    #[serde(default)]
    note: String,
}

async fn revise(State(app): App, ids: Ids, ctx: Ctx, body: Body) -> Response {
    let fingerprint = ctx.fingerprint(&body.0);
    respond(body.parse::<ReviseInput>().and_then(|input| {
        app.execute(&ids.session, ctx.token.as_deref(), ctx.idempotency(&fingerprint), |cmd| {
            let participant = cmd.participant()?.to_string();
            cmd.session.revise_estimate(&ids.story, &participant, input.value, &input.note, cmd.at)?;
            Ok(Reply::new(StatusCode::OK, json!({ "story_id": ids.story, "revised": true })))
        })
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ActualInput {
    #[serde(with = "serde_rational")]
    actual: Rational,
}

async fn record_actual(State(app): App, ids: Ids, ctx: Ctx, body: Body) -> Response {
    let fingerprint = ctx.fingerprint(&body.0);
    respond(body.parse::<ActualInput>().and_then(|input| {
        app.execute(&ids.session, None, ctx.idempotency(&fingerprint), |cmd| {
            cmd.session.record_actual(&ids.story, input.actual, cmd.at)?;
            Ok(Reply::new(
                StatusCode::OK,
                json!({ "story_id": ids.story, "state": story_state(cmd.session, &ids.story)? }),
            ))
        })
    }))
}

async fn score(State(app): App, ids: Ids, ctx: Ctx, body: Body) -> Response {
    let fingerprint = ctx.fingerprint(&body.0);
    respond(app.execute(&ids.session, None, ctx.idempotency(&fingerprint), |cmd| {
        let score = cmd.session.score_story(&ids.story, cmd.at)?;
        Ok(Reply::new(StatusCode::OK, to_value(&score)))
    }))
}
