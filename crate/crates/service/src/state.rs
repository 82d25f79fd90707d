//! Shared server state.
//!
//! Each session sits behind its own async mutex, so requests for one session
//! are serialized while different sessions proceed in parallel. Room logs are
//! appended while the mutating session is still locked; sequence numbers
//! therefore agree with the order in which sessions actually changed.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use evoform_core::collaboration::{visible_donor, EventKind, EventRecord, SessionEvent};
use evoform_core::mesh::{builtin, BUILTIN_MESHES};
use evoform_core::{seed, Mesh, Room, RoomId, RoomSpec, SearchSpace, Session, SessionId};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::{broadcast, Mutex, MutexGuard};

use crate::config::ServiceConfig;
use crate::error::ApiError;

/// A room event as published to clients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApiEvent {
    pub seq: u64,
    pub room: RoomId,
    pub session: SessionId,
    pub kind: EventKind,
    pub payload: Value,
}

impl ApiEvent {
    pub fn record(&self) -> EventRecord {
        EventRecord {
            seq: self.seq,
            session: self.session,
            kind: self.kind,
            payload: self.payload.clone(),
        }
    }
}

pub struct RoomState {
    pub room: Room,
    pub spec: RoomSpec,
    pub seed: u64,
    log: RwLock<Vec<ApiEvent>>,
    tx: broadcast::Sender<ApiEvent>,
}

impl RoomState {
    fn append(&self, session: SessionId, event: SessionEvent) -> ApiEvent {
        let mut log = self.log.write().expect("room log lock");
        let api = ApiEvent {
            seq: log.len() as u64 + 1,
            room: self.room.id(),
            session,
            kind: event.kind,
            payload: event.payload,
        };
        log.push(api.clone());
        // No receivers is fine; lagging receivers are dropped by the channel.
        let _ = self.tx.send(api.clone());
        api
    }

    pub fn events_after(&self, since: u64) -> Vec<ApiEvent> {
        let log = self.log.read().expect("room log lock");
        log.iter()
            .skip(since.min(log.len() as u64) as usize)
            .cloned()
            .collect()
    }

    pub fn last_seq(&self) -> u64 {
        self.log.read().expect("room log lock").len() as u64
    }

    pub fn subscribe(&self) -> broadcast::Receiver<ApiEvent> {
        self.tx.subscribe()
    }
}

pub struct SessionSlot {
    pub id: SessionId,
    pub room: Arc<RoomState>,
    session: Mutex<Session>,
}

impl SessionSlot {
    pub async fn lock(&self) -> MutexGuard<'_, Session> {
        self.session.lock().await
    }
}

#[derive(Default)]
struct Registry {
    rooms: BTreeMap<RoomId, Arc<RoomState>>,
    sessions: BTreeMap<SessionId, Arc<SessionSlot>>,
    next_room: u64,
    next_session: u64,
    next_mesh: u64,
}

pub struct AppState {
    pub config: ServiceConfig,
    registry: RwLock<Registry>,
    meshes: RwLock<HashMap<String, Arc<Mesh>>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CreatedRoom {
    pub room: RoomId,
    pub seed: u64,
    pub sessions: Vec<CreatedSession>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CreatedSession {
    pub id: SessionId,
    pub name: String,
    pub space: SearchSpace,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        let meshes = BUILTIN_MESHES
            .iter()
            .map(|name| {
                (
                    name.to_string(),
                    Arc::new(builtin(name).expect("builtin mesh")),
                )
            })
            .collect();
        Arc::new(Self {
            config,
            registry: RwLock::new(Registry {
                next_room: 1,
                next_session: 1,
                next_mesh: 1,
                ..Registry::default()
            }),
            meshes: RwLock::new(meshes),
        })
    }

    /// Creates a room; without an explicit seed, room `n` uses the same
    /// derivation as [`evoform_core::Studio`].
    pub fn create_room(
        &self,
        spec: RoomSpec,
        seed_override: Option<u64>,
    ) -> Result<CreatedRoom, ApiError> {
        if !self
            .meshes
            .read()
            .expect("mesh lock")
            .contains_key(&spec.mesh_id)
        {
            return Err(ApiError::invalid(format!(
                "unknown mesh '{}'",
                spec.mesh_id
            )));
        }
        if spec.members.len() < 2 {
            return Err(ApiError::invalid("a room needs at least two members"));
        }
        if spec.visibility_k == 0 {
            return Err(ApiError::invalid("visibility_k must be positive"));
        }
        let mut reg = self.registry.write().expect("registry lock");
        let room_id = RoomId(reg.next_room);
        let room_seed =
            seed_override.unwrap_or_else(|| seed::room_seed(self.config.seed, reg.next_room - 1));
        let mut sessions = Vec::with_capacity(spec.members.len());
        for (m, member) in spec.members.iter().enumerate() {
            let id = SessionId(reg.next_session + m as u64);
            let session = Session::new(
                id,
                member.name.clone(),
                member.space,
                spec.params.clone(),
                self.config.codec,
                seed::session_seed(room_seed, m as u64),
            )?
            .with_mesh(spec.mesh_id.clone())
            .in_room(room_id);
            sessions.push(session);
        }
        let room = Room::new(
            room_id,
            sessions.iter().map(Session::id).collect(),
            spec.visibility_k,
        )?;
        let (tx, _) = broadcast::channel(self.config.event_buffer);
        let state = Arc::new(RoomState {
            room,
            spec: spec.clone(),
            seed: room_seed,
            log: RwLock::new(Vec::new()),
            tx,
        });
        let created = CreatedRoom {
            room: room_id,
            seed: room_seed,
            sessions: sessions
                .iter()
                .map(|s| CreatedSession {
                    id: s.id(),
                    name: s.owner().to_string(),
                    space: s.space(),
                })
                .collect(),
        };
        reg.next_room += 1;
        reg.next_session += sessions.len() as u64;
        for session in sessions {
            let slot = Arc::new(SessionSlot {
                id: session.id(),
                room: state.clone(),
                session: Mutex::new(session),
            });
            reg.sessions.insert(slot.id, slot);
        }
        reg.rooms.insert(room_id, state);
        Ok(created)
    }

    pub fn room(&self, id: RoomId) -> Result<Arc<RoomState>, ApiError> {
        let reg = self.registry.read().expect("registry lock");
        reg.rooms
            .get(&id)
            .cloned()
            .ok_or_else(|| evoform_core::Error::UnknownRoom(id.0).into())
    }

    pub fn slot(&self, id: SessionId) -> Result<Arc<SessionSlot>, ApiError> {
        let reg = self.registry.read().expect("registry lock");
        reg.sessions
            .get(&id)
            .cloned()
            .ok_or_else(|| evoform_core::Error::UnknownSession(id.0).into())
    }

    pub fn mesh(&self, id: &str) -> Result<Arc<Mesh>, ApiError> {
        self.meshes
            .read()
            .expect("mesh lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("unknown-mesh", format!("unknown mesh '{id}'")))
    }

    pub fn add_mesh(&self, mesh: Mesh) -> String {
        let id = {
            let mut reg = self.registry.write().expect("registry lock");
            let id = format!("mesh-{}", reg.next_mesh);
            reg.next_mesh += 1;
            id
        };
        self.meshes
            .write()
            .expect("mesh lock")
            .insert(id.clone(), Arc::new(mesh));
        id
    }

    pub async fn select(&self, id: SessionId, picks: &[usize]) -> Result<ApiEvent, ApiError> {
        let slot = self.slot(id)?;
        let mut session = slot.lock().await;
        let event = session.select(picks)?;
        Ok(slot.room.append(id, event))
    }

    pub async fn step(&self, id: SessionId) -> Result<(ApiEvent, Session), ApiError> {
        let slot = self.slot(id)?;
        let mut session = slot.lock().await;
        let event = session.step()?;
        Ok((slot.room.append(id, event), session.clone()))
    }

    /// Copies a visible donor individual into `host`. Both sessions stay
    /// locked (in id order) until the event is logged, so the donor cannot
    /// step in between.
    pub async fn inject(
        &self,
        host: SessionId,
        donor: SessionId,
        individual: u64,
    ) -> Result<(ApiEvent, SearchSpace, SearchSpace), ApiError> {
        let host_slot = self.slot(host)?;
        let donor_slot = self.slot(donor)?;
        if host == donor || !host_slot.room.room.contains(donor) {
            return Err(evoform_core::Error::NotPermitted {
                host: host.0,
                donor: donor.0,
            }
            .into());
        }
        let (mut host_guard, donor_guard) = if host < donor {
            let h = host_slot.lock().await;
            (h, donor_slot.lock().await)
        } else {
            let d = donor_slot.lock().await;
            (host_slot.lock().await, d)
        };
        let sample = donor_guard.top_k(host_slot.room.room.visibility_k());
        let copy = visible_donor(&sample, donor, individual)?;
        let before = host_guard.space();
        let event = host_guard.inject(donor, &copy)?;
        let after = host_guard.space();
        let api = host_slot.room.append(host, event);
        drop(donor_guard);
        Ok((api, before, after))
    }
}
