use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use evoform_core::expression::{emit_source, genome_tree};
use evoform_core::mesh::{displace_mesh, export_obj, load_obj};
use evoform_core::{
    GaParams, Individual, MemberSpec, Provenance, RoomId, RoomSpec, SearchSpace, Session,
    SessionId, TimeParam,
};
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use tokio_stream::wrappers::BroadcastStream;

use crate::error::ApiError;
use crate::state::{ApiEvent, AppState};

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/rooms", post(create_room))
        .route("/rooms/{room}", get(get_room))
        .route("/rooms/{room}/events", get(room_events))
        .route("/sessions/{session}", get(get_session))
        .route("/sessions/{session}/population", get(get_population))
        .route("/sessions/{session}/picks", post(post_picks))
        .route("/sessions/{session}/step", post(post_step))
        .route("/sessions/{session}/peers", get(get_peers))
        .route("/sessions/{session}/inject", post(post_inject))
        .route(
            "/sessions/{session}/individuals/{individual}/shader",
            get(get_shader),
        )
        .route(
            "/sessions/{session}/individuals/{individual}/mesh",
            get(get_mesh),
        )
        .route("/meshes", post(post_mesh))
        .route("/meshes/{mesh}", get(get_stored_mesh))
        .fallback(|| async { ApiError::not_found("not-found", "no such route") })
        .with_state(state)
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::invalid(e.body_text()))
}

fn path<T>(p: Result<Path<T>, PathRejection>) -> ApiResult<T> {
    p.map(|Path(v)| v)
        .map_err(|e| ApiError::not_found("not-found", e.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v)
        .map_err(|e| ApiError::invalid(e.body_text()))
}

fn text(content_type: &'static str, body: String) -> Response {
    ([(header::CONTENT_TYPE, content_type)], body).into_response()
}

const PLAIN: &str = "text/plain; charset=utf-8";

#[derive(Debug, Serialize, Deserialize)]
pub struct IndividualView {
    pub index: usize,
    pub id: u64,
    pub genome: String,
    pub fitness: f64,
    pub provenance: Provenance,
    pub space: SearchSpace,
    pub source: String,
}

impl IndividualView {
    fn new(index: usize, ind: &Individual) -> Self {
        let channels = ind.genome.channels();
        Self {
            index,
            id: ind.id,
            genome: ind.genome.to_hex(),
            fitness: ind.fitness,
            provenance: ind.provenance.clone(),
            space: ind.genome.space(),
            source: emit_source(&genome_tree(&ind.genome), channels)
                .expect("genome channels are nonempty"),
        }
    }
}

#[derive(Debug, Deserialize)]
struct CreateRoom {
    members: Vec<MemberSpec>,
    #[serde(default)]
    params: Map<String, Value>,
    visibility_k: Option<usize>,
    mesh_id: Option<String>,
    seed: Option<u64>,
}

fn merge_params(base: &GaParams, overrides: &Map<String, Value>) -> ApiResult<GaParams> {
    let mut params = base.clone();
    for (key, value) in overrides {
        let text = match value {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            Value::Null if key == "mutation_rate" => {
                params.mutation_rate = None;
                continue;
            }
            other => return Err(ApiError::invalid(format!("bad value {other} for {key}"))),
        };
        params.set(key, &text)?;
    }
    params.validate()?;
    Ok(params)
}

async fn create_room(
    State(state): State<Shared>,
    payload: Result<Json<CreateRoom>, JsonRejection>,
) -> ApiResult<Response> {
    let req = body(payload)?;
    let spec = RoomSpec {
        members: req.members,
        params: merge_params(&state.config.params, &req.params)?,
        visibility_k: req.visibility_k.unwrap_or(state.config.visibility_k),
        mesh_id: req.mesh_id.unwrap_or_else(|| state.config.mesh.clone()),
    };
    let created = state.create_room(spec, req.seed)?;
    tracing::info!(room = %created.room, sessions = created.sessions.len(), "room created");
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn get_room(
    State(state): State<Shared>,
    room: Result<Path<u64>, PathRejection>,
) -> ApiResult<Json<Value>> {
    let room = state.room(RoomId(path(room)?))?;
    Ok(Json(json!({
        "id": room.room.id(),
        "members": room.room.members(),
        "visibility_k": room.room.visibility_k(),
        "mesh_id": room.spec.mesh_id,
        "params": room.spec.params,
        "seed": room.seed,
        "last_seq": room.last_seq(),
    })))
}

fn session_view(session: &Session) -> Value {
    let pop = session.population();
    json!({
        "id": session.id(),
        "owner": session.owner(),
        "room": session.room(),
        "space": session.space(),
        "generation": pop.generation(),
        "population_size": pop.len(),
        "depth": pop.config().depth(),
        "params": session.params(),
        "mesh_id": session.mesh_id(),
        "pending_picks": session.pending_picks(),
    })
}

async fn get_session(
    State(state): State<Shared>,
    id: Result<Path<u64>, PathRejection>,
) -> ApiResult<Json<Value>> {
    let slot = state.slot(SessionId(path(id)?))?;
    let session = slot.lock().await;
    Ok(Json(session_view(&session)))
}

async fn get_population(
    State(state): State<Shared>,
    id: Result<Path<u64>, PathRejection>,
) -> ApiResult<Json<Value>> {
    let slot = state.slot(SessionId(path(id)?))?;
    let session = slot.lock().await;
    let individuals: Vec<IndividualView> = session
        .population()
        .individuals()
        .iter()
        .enumerate()
        .map(|(i, ind)| IndividualView::new(i, ind))
        .collect();
    Ok(Json(json!({
        "session": session.id(),
        "generation": session.population().generation(),
        "space": session.space(),
        "individuals": individuals,
    })))
}

#[derive(Debug, Deserialize)]
struct Picks {
    indices: Vec<usize>,
}

async fn post_picks(
    State(state): State<Shared>,
    id: Result<Path<u64>, PathRejection>,
    payload: Result<Json<Picks>, JsonRejection>,
) -> ApiResult<StatusCode> {
    let id = SessionId(path(id)?);
    let picks = body(payload)?;
    state.select(id, &picks.indices).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn post_step(
    State(state): State<Shared>,
    id: Result<Path<u64>, PathRejection>,
) -> ApiResult<Json<Value>> {
    let (event, session) = state.step(SessionId(path(id)?)).await?;
    let pop = session.population();
    Ok(Json(json!({
        "session": session.id(),
        "seq": event.seq,
        "generation": pop.generation(),
        "elites": event.payload["elites"],
        "space": session.space(),
        "individuals": pop.individuals().iter().map(|i| i.id).collect::<Vec<_>>(),
    })))
}

async fn get_peers(
    State(state): State<Shared>,
    id: Result<Path<u64>, PathRejection>,
) -> ApiResult<Json<Value>> {
    let viewer = SessionId(path(id)?);
    let slot = state.slot(viewer)?;
    let room = &slot.room.room;
    let mut peers = Vec::new();
    for peer in room.peers_of(viewer) {
        let peer_slot = state.slot(peer)?;
        let session = peer_slot.lock().await;
        let individuals: Vec<IndividualView> = session
            .top_k(room.visibility_k())
            .iter()
            .map(|ind| {
                let index = session
                    .population()
                    .individuals()
                    .iter()
                    .position(|i| i.id == ind.id)
                    .expect("top_k draws from the population");
                IndividualView::new(index, ind)
            })
            .collect();
        peers.push(json!({
            "session": peer,
            "owner": session.owner(),
            "space": session.space(),
            "generation": session.population().generation(),
            "individuals": individuals,
        }));
    }
    Ok(Json(
        json!({ "room": room.id(), "visibility_k": room.visibility_k(), "peers": peers }),
    ))
}

#[derive(Debug, Deserialize)]
struct Inject {
    donor_session: u64,
    individual_id: u64,
}

async fn post_inject(
    State(state): State<Shared>,
    id: Result<Path<u64>, PathRejection>,
    payload: Result<Json<Inject>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let host = SessionId(path(id)?);
    let req = body(payload)?;
    let (event, before, after) = state
        .inject(host, SessionId(req.donor_session), req.individual_id)
        .await?;
    Ok(Json(json!({
        "seq": event.seq,
        "kind": event.kind,
        "expanded": before != after,
        "previous_space": before,
        "space": after,
        "injected_id": event.payload["injected_id"],
        "replaced_id": event.payload["replaced_id"],
        "slot": event.payload["slot"],
    })))
}

async fn individual(
    state: &AppState,
    session: u64,
    individual: u64,
) -> ApiResult<(Individual, String)> {
    let slot = state.slot(SessionId(session))?;
    let session = slot.lock().await;
    let ind = session
        .population()
        .get(individual)
        .cloned()
        .ok_or(evoform_core::Error::UnknownIndividual(individual))?;
    Ok((ind, session.mesh_id().to_string()))
}

async fn get_shader(
    State(state): State<Shared>,
    ids: Result<Path<(u64, u64)>, PathRejection>,
) -> ApiResult<Response> {
    let (s, i) = path(ids)?;
    let (ind, _) = individual(&state, s, i).await?;
    let source = emit_source(&genome_tree(&ind.genome), ind.genome.channels())?;
    Ok(text(PLAIN, source + "\n"))
}

#[derive(Debug, Deserialize)]
struct MeshQuery {
    #[serde(default)]
    t: f64,
}

async fn get_mesh(
    State(state): State<Shared>,
    ids: Result<Path<(u64, u64)>, PathRejection>,
    q: Result<Query<MeshQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let (s, i) = path(ids)?;
    let t = query(q)?.t;
    if !t.is_finite() {
        return Err(ApiError::invalid("t must be finite"));
    }
    let (ind, mesh_id) = individual(&state, s, i).await?;
    let mesh = state.mesh(&mesh_id)?;
    let displaced = displace_mesh(
        &mesh,
        &genome_tree(&ind.genome),
        ind.genome.channels(),
        TimeParam::new(t),
    )?;
    Ok(text(PLAIN, export_obj(&displaced)))
}

async fn post_mesh(State(state): State<Shared>, obj: String) -> ApiResult<Response> {
    let mesh = load_obj(&obj)?;
    let (vertices, faces) = (mesh.vertices().len(), mesh.faces().len());
    let id = state.add_mesh(mesh);
    Ok((
        StatusCode::CREATED,
        Json(json!({ "id": id, "vertices": vertices, "faces": faces })),
    )
        .into_response())
}

async fn get_stored_mesh(
    State(state): State<Shared>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Response> {
    let mesh = state.mesh(&path(id)?)?;
    Ok(text(PLAIN, export_obj(&mesh)))
}

#[derive(Debug, Default, Deserialize)]
struct EventsQuery {
    since: Option<u64>,
    timeout_ms: Option<u64>,
}

fn wants_stream(headers: &HeaderMap) -> bool {
    headers
        .get_all(header::ACCEPT)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .any(|v| v.contains("text/event-stream"))
}

fn last_event_id(headers: &HeaderMap) -> Option<u64> {
    headers
        .get("last-event-id")?
        .to_str()
        .ok()?
        .trim()
        .parse()
        .ok()
}

/// Server-sent events when the client accepts `text/event-stream`,
/// otherwise a long poll returning `{"events": [...], "last_seq": n}`.
async fn room_events(
    State(state): State<Shared>,
    room: Result<Path<u64>, PathRejection>,
    q: Result<Query<EventsQuery>, QueryRejection>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let room = state.room(RoomId(path(room)?))?;
    let q = query(q)?;
    let since = q.since.or_else(|| last_event_id(&headers)).unwrap_or(0);
    let mut rx = room.subscribe();

    if wants_stream(&headers) {
        let backlog = room.events_after(since);
        let cursor = backlog.last().map_or(since, |e| e.seq);
        let live = BroadcastStream::new(rx)
            .take_while(|item| std::future::ready(item.is_ok()))
            .filter_map(move |item| std::future::ready(item.ok().filter(|e| e.seq > cursor)));
        let events = stream::iter(backlog).chain(live).map(sse_event);
        return Ok(Sse::new(events)
            .keep_alive(KeepAlive::default())
            .into_response());
    }

    let wait = q
        .timeout_ms
        .map_or(state.config.poll_timeout, Duration::from_millis);
    if room.last_seq() <= since {
        let deadline = tokio::time::Instant::now() + wait;
        loop {
            match tokio::time::timeout_at(deadline, rx.recv()).await {
                Ok(Ok(event)) if event.seq <= since => continue,
                _ => break,
            }
        }
    }
    let events = room.events_after(since);
    Ok(Json(json!({ "events": events, "last_seq": room.last_seq() })).into_response())
}

fn sse_event(event: ApiEvent) -> Result<Event, Infallible> {
    let kind = serde_json::to_value(event.kind).expect("kinds serialize");
    Ok(Event::default()
        .id(event.seq.to_string())
        .event(kind.as_str().unwrap_or("event"))
        .json_data(&event)
        .expect("events serialize"))
}
