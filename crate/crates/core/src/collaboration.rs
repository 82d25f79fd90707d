//! Rooms, peer visibility and user-triggered injection.
//!
//! A [`Session`] is one designer's GA. Sessions in the same [`Room`] see the
//! top `visibility_k` individuals of each other's current generation and may
//! inject any of them. Injection replaces the host's worst individual with a
//! copy of the donor, biases its fitness for a few generations and widens the
//! host's search space by the donor's header.
//!
//! Every mutation appends exactly one [`SessionEvent`] to the session history.
//! [`Studio`] owns a set of rooms for single-threaded drivers, numbers events
//! per room and can replay a room log.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::codec::CodecConfig;
use crate::error::{Error, Result};
use crate::evolution::{assign_fitness, step, GaParams, Individual, Population, Provenance};
use crate::seed;
use crate::space::SearchSpace;

pub const DEFAULT_VISIBILITY_K: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoomId(pub u64);

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for RoomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Generation,
    Injection,
    Selection,
    SpaceExpanded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub kind: EventKind,
    pub payload: Value,
}

/// One line of a room's event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub session: SessionId,
    pub kind: EventKind,
    pub payload: Value,
}

impl EventRecord {
    pub fn to_jsonl(records: &[EventRecord]) -> String {
        records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Vec<EventRecord>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| Error::InvalidEvent(e.to_string())))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    id: SessionId,
    owner: String,
    room: Option<RoomId>,
    space: SearchSpace,
    population: Population,
    params: GaParams,
    mesh_id: String,
    seed: u64,
    pending_picks: Vec<usize>,
    history: Vec<SessionEvent>,
}

impl Session {
    /// New session whose initial population is drawn inside `space`.
    pub fn new(
        id: SessionId,
        owner: impl Into<String>,
        space: SearchSpace,
        params: GaParams,
        config: CodecConfig,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        let population = Population::seeded(config, &space, params.population_size, seed)?;
        Ok(Self {
            id,
            owner: owner.into(),
            room: None,
            space,
            population,
            params,
            mesh_id: "sphere".into(),
            seed,
            pending_picks: Vec::new(),
            history: Vec::new(),
        })
    }

    pub fn with_mesh(mut self, mesh_id: impl Into<String>) -> Self {
        self.mesh_id = mesh_id.into();
        self
    }

    pub fn in_room(mut self, room: RoomId) -> Self {
        self.room = Some(room);
        self
    }

    pub fn id(&self) -> SessionId {
        self.id
    }

    pub fn owner(&self) -> &str {
        &self.owner
    }

    pub fn room(&self) -> Option<RoomId> {
        self.room
    }

    pub fn space(&self) -> SearchSpace {
        self.space
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn params(&self) -> &GaParams {
        &self.params
    }

    pub fn mesh_id(&self) -> &str {
        &self.mesh_id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn pending_picks(&self) -> &[usize] {
        &self.pending_picks
    }

    pub fn history(&self) -> &[SessionEvent] {
        &self.history
    }

    fn record(&mut self, kind: EventKind, payload: Value) -> SessionEvent {
        let event = SessionEvent { kind, payload };
        self.history.push(event.clone());
        event
    }

    /// Records the designer's picks for the current generation and updates
    /// fitness so peers see the ranking immediately.
    pub fn select(&mut self, picks: &[usize]) -> Result<SessionEvent> {
        self.population = assign_fitness(&self.population, picks, &self.params)?;
        let mut picks = picks.to_vec();
        picks.sort_unstable();
        picks.dedup();
        self.pending_picks = picks.clone();
        let generation = self.population.generation();
        Ok(self.record(
            EventKind::Selection,
            json!({ "indices": picks, "generation": generation }),
        ))
    }

    /// Advances one generation using the pending picks, then clears them.
    pub fn step(&mut self) -> Result<SessionEvent> {
        let step_seed = seed::step_seed(self.seed, self.population.generation());
        self.population = step(
            &self.population,
            &self.pending_picks,
            &self.params,
            step_seed,
        )?;
        let elites = std::mem::take(&mut self.pending_picks);
        let generation = self.population.generation();
        Ok(self.record(
            EventKind::Generation,
            json!({ "generation": generation, "elites": elites }),
        ))
    }

    /// Top `k` individuals by fitness, ties broken by lower id.
    pub fn top_k(&self, k: usize) -> Vec<Individual> {
        let mut ranked: Vec<&Individual> = self.population.individuals().iter().collect();
        ranked.sort_by(|a, b| b.fitness.total_cmp(&a.fitness).then(a.id.cmp(&b.id)));
        ranked.into_iter().take(k).cloned().collect()
    }

    /// Index of the individual an injection replaces: lowest fitness, ties
    /// broken by higher id. Injected individuals still under bias are only
    /// considered when nothing else is left.
    pub fn replacement_index(&self) -> usize {
        let individuals = self.population.individuals();
        let worst = |protect: bool| {
            individuals
                .iter()
                .enumerate()
                .filter(|(_, ind)| !protect || ind.provenance.bias_remaining() == 0)
                .min_by(|(_, a), (_, b)| a.fitness.total_cmp(&b.fitness).then(b.id.cmp(&a.id)))
                .map(|(i, _)| i)
        };
        worst(true)
            .or_else(|| worst(false))
            .expect("population is nonempty")
    }

    /// Copies `donor` into this population in place of the worst individual.
    ///
    /// Visibility is the caller's responsibility; see [`Studio::inject`].
    pub fn inject(&mut self, origin: SessionId, donor: &Individual) -> Result<SessionEvent> {
        if donor.genome.config() != self.population.config() {
            return Err(Error::ConfigMismatch);
        }
        let slot = self.replacement_index();
        let max = self.population.max_fitness();
        let injected_id = self.population.fresh_id();
        let bias = self.params.bias_generations;
        let replaced = std::mem::replace(
            &mut self.population.individuals_mut()[slot],
            Individual {
                id: injected_id,
                genome: donor.genome.clone(),
                fitness: max,
                provenance: Provenance::Injected {
                    origin: origin.0,
                    bias_remaining: bias,
                },
            },
        );
        let before = self.space;
        self.space = self.space.union(&donor.genome.space());
        let kind = if self.space != before {
            EventKind::SpaceExpanded
        } else {
            EventKind::Injection
        };
        let payload = json!({
            "donor_session": origin.0,
            "individual_id": donor.id,
            "replaced_id": replaced.id,
            "injected_id": injected_id,
            "slot": slot,
            "generation": self.population.generation(),
            "space": self.space,
        });
        Ok(self.record(kind, payload))
    }

    /// Resets the session to a fresh population inside `space`.
    pub fn reassign(&mut self, space: SearchSpace) -> Result<()> {
        self.space = space;
        self.population = Population::seeded(
            self.population.config(),
            &space,
            self.params.population_size,
            self.seed,
        )?;
        self.pending_picks.clear();
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Room {
    id: RoomId,
    members: Vec<SessionId>,
    visibility_k: usize,
}

impl Room {
    pub fn new(id: RoomId, members: Vec<SessionId>, visibility_k: usize) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::InvalidRoom(
                "a room needs at least two members".into(),
            ));
        }
        let mut unique = members.clone();
        unique.sort_unstable();
        unique.dedup();
        if unique.len() != members.len() {
            return Err(Error::InvalidRoom("duplicate member".into()));
        }
        Ok(Self {
            id,
            members,
            visibility_k,
        })
    }

    pub fn id(&self) -> RoomId {
        self.id
    }

    pub fn members(&self) -> &[SessionId] {
        &self.members
    }

    pub fn visibility_k(&self) -> usize {
        self.visibility_k
    }

    pub fn contains(&self, session: SessionId) -> bool {
        self.members.contains(&session)
    }

    pub fn check_member(&self, session: SessionId) -> Result<()> {
        if self.contains(session) {
            Ok(())
        } else {
            Err(Error::NotAMember {
                session: session.0,
                room: self.id.0,
            })
        }
    }

    /// Other members, in membership order.
    pub fn peers_of(&self, viewer: SessionId) -> impl Iterator<Item = SessionId> + '_ {
        self.members.iter().copied().filter(move |&m| m != viewer)
    }
}

/// For each peer of `viewer`, a snapshot of its top individuals.
pub fn peer_sample<'a, F>(
    room: &Room,
    viewer: SessionId,
    lookup: F,
) -> Result<BTreeMap<SessionId, Vec<Individual>>>
where
    F: Fn(SessionId) -> Option<&'a Session>,
{
    room.check_member(viewer)?;
    room.peers_of(viewer)
        .map(|peer| {
            let session = lookup(peer).ok_or(Error::UnknownSession(peer.0))?;
            Ok((peer, session.top_k(room.visibility_k)))
        })
        .collect()
}

/// Finds `individual` among the donor's currently visible individuals.
pub fn visible_donor(
    sample: &[Individual],
    donor: SessionId,
    individual: u64,
) -> Result<Individual> {
    sample
        .iter()
        .find(|i| i.id == individual)
        .cloned()
        .ok_or(Error::StaleDonor {
            donor: donor.0,
            individual,
        })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberSpec {
    pub name: String,
    pub space: SearchSpace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub members: Vec<MemberSpec>,
    #[serde(default)]
    pub params: GaParams,
    #[serde(default = "default_k")]
    pub visibility_k: usize,
    #[serde(default = "default_mesh")]
    pub mesh_id: String,
}

fn default_k() -> usize {
    DEFAULT_VISIBILITY_K
}

fn default_mesh() -> String {
    "sphere".into()
}

impl RoomSpec {
    pub fn new(members: Vec<MemberSpec>) -> Self {
        Self {
            members,
            params: GaParams::default(),
            visibility_k: DEFAULT_VISIBILITY_K,
            mesh_id: default_mesh(),
        }
    }
}

/// Single-threaded owner of rooms and sessions.
///
/// Room `n` (0-based creation order) is seeded from `seed::room_seed(seed, n)`
/// and its `m`-th member from `seed::session_seed(room_seed, m)`, so a fresh
/// studio with the same base seed reproduces every session.
#[derive(Clone, Debug)]
pub struct Studio {
    config: CodecConfig,
    seed: u64,
    sessions: BTreeMap<SessionId, Session>,
    rooms: BTreeMap<RoomId, Room>,
    logs: BTreeMap<RoomId, Vec<EventRecord>>,
    next_session: u64,
    next_room: u64,
}

impl Studio {
    pub fn new(config: CodecConfig, seed: u64) -> Self {
        Self {
            config,
            seed,
            sessions: BTreeMap::new(),
            rooms: BTreeMap::new(),
            logs: BTreeMap::new(),
            next_session: 1,
            next_room: 1,
        }
    }

    pub fn config(&self) -> CodecConfig {
        self.config
    }

    /// Creates a room and one session per member, each seeded inside its
    /// assigned space.
    pub fn create_room(&mut self, spec: &RoomSpec) -> Result<RoomId> {
        if spec.members.len() < 2 {
            return Err(Error::InvalidRoom(
                "a room needs at least two members".into(),
            ));
        }
        let room_id = RoomId(self.next_room);
        let room_seed = seed::room_seed(self.seed, self.next_room - 1);
        let mut ids = Vec::with_capacity(spec.members.len());
        let mut sessions = Vec::with_capacity(spec.members.len());
        for (m, member) in spec.members.iter().enumerate() {
            let id = SessionId(self.next_session + m as u64);
            let session = Session::new(
                id,
                member.name.clone(),
                member.space,
                spec.params.clone(),
                self.config,
                seed::session_seed(room_seed, m as u64),
            )?
            .with_mesh(spec.mesh_id.clone())
            .in_room(room_id);
            ids.push(id);
            sessions.push(session);
        }
        let room = Room::new(room_id, ids, spec.visibility_k)?;
        self.next_room += 1;
        self.next_session += sessions.len() as u64;
        for s in sessions {
            self.sessions.insert(s.id, s);
        }
        self.rooms.insert(room_id, room);
        self.logs.insert(room_id, Vec::new());
        Ok(room_id)
    }

    /// Reassigns every member's search space and reseeds its population.
    pub fn assign_spaces(&mut self, room: RoomId, split: &[SearchSpace]) -> Result<()> {
        let members = self.room(room)?.members().to_vec();
        if split.len() != members.len() {
            return Err(Error::InvalidSpace(format!(
                "split has {} entries for {} members",
                split.len(),
                members.len()
            )));
        }
        for (id, space) in members.iter().zip(split) {
            self.sessions
                .get_mut(id)
                .expect("members exist")
                .reassign(*space)?;
        }
        Ok(())
    }

    pub fn room(&self, id: RoomId) -> Result<&Room> {
        self.rooms.get(&id).ok_or(Error::UnknownRoom(id.0))
    }

    pub fn session(&self, id: SessionId) -> Result<&Session> {
        self.sessions.get(&id).ok_or(Error::UnknownSession(id.0))
    }

    pub fn sessions(&self) -> impl Iterator<Item = &Session> {
        self.sessions.values()
    }

    pub fn events(&self, room: RoomId) -> Result<&[EventRecord]> {
        self.logs
            .get(&room)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownRoom(room.0))
    }

    fn room_of(&self, session: SessionId) -> Result<RoomId> {
        self.session(session)?
            .room
            .ok_or(Error::UnknownSession(session.0))
    }

    fn log(&mut self, session: SessionId, event: SessionEvent) -> Result<EventRecord> {
        let room = self.room_of(session)?;
        let log = self.logs.get_mut(&room).expect("room log exists");
        let record = EventRecord {
            seq: log.len() as u64 + 1,
            session,
            kind: event.kind,
            payload: event.payload,
        };
        log.push(record.clone());
        Ok(record)
    }

    pub fn peer_sample(&self, viewer: SessionId) -> Result<BTreeMap<SessionId, Vec<Individual>>> {
        let room = self.room(self.room_of(viewer)?)?;
        peer_sample(room, viewer, |id| self.sessions.get(&id))
    }

    pub fn select(&mut self, session: SessionId, picks: &[usize]) -> Result<EventRecord> {
        let event = self
            .sessions
            .get_mut(&session)
            .ok_or(Error::UnknownSession(session.0))?
            .select(picks)?;
        self.log(session, event)
    }

    pub fn step(&mut self, session: SessionId) -> Result<EventRecord> {
        let event = self
            .sessions
            .get_mut(&session)
            .ok_or(Error::UnknownSession(session.0))?
            .step()?;
        self.log(session, event)
    }

    /// Injects `individual` from `donor` into `host`. The individual must be
    /// in the host's current peer sample of the donor.
    pub fn inject(
        &mut self,
        host: SessionId,
        donor: SessionId,
        individual: u64,
    ) -> Result<EventRecord> {
        let host_room = self.room_of(host)?;
        self.session(donor)?;
        let room = self.room(host_room)?;
        if host == donor || !room.contains(donor) {
            return Err(Error::NotPermitted {
                host: host.0,
                donor: donor.0,
            });
        }
        let sample = self.session(donor)?.top_k(room.visibility_k());
        let copy = visible_donor(&sample, donor, individual)?;
        let event = self
            .sessions
            .get_mut(&host)
            .expect("host exists")
            .inject(donor, &copy)?;
        self.log(host, event)
    }

    /// Re-issues the operation an event record describes.
    pub fn apply(&mut self, record: &EventRecord) -> Result<EventRecord> {
        let field = |name: &str| {
            record.payload.get(name).cloned().ok_or_else(|| {
                Error::InvalidEvent(format!("missing '{name}' in {:?} payload", record.kind))
            })
        };
        match record.kind {
            EventKind::Selection => {
                let picks: Vec<usize> = serde_json::from_value(field("indices")?)
                    .map_err(|e| Error::InvalidEvent(e.to_string()))?;
                self.select(record.session, &picks)
            }
            EventKind::Generation => self.step(record.session),
            EventKind::Injection | EventKind::SpaceExpanded => {
                let donor = field("donor_session")?
                    .as_u64()
                    .ok_or_else(|| Error::InvalidEvent("donor_session".into()))?;
                let individual = field("individual_id")?
                    .as_u64()
                    .ok_or_else(|| Error::InvalidEvent("individual_id".into()))?;
                self.inject(record.session, SessionId(donor), individual)
            }
        }
    }

    /// Rebuilds a studio from room specs (in creation order) and the
    /// concatenated event log.
    pub fn replay(
        config: CodecConfig,
        seed: u64,
        rooms: &[RoomSpec],
        events: &[EventRecord],
    ) -> Result<Studio> {
        let mut studio = Studio::new(config, seed);
        for spec in rooms {
            studio.create_room(spec)?;
        }
        for record in events {
            let replayed = studio.apply(record)?;
            if replayed.kind != record.kind || replayed.payload != record.payload {
                return Err(Error::InvalidEvent(format!(
                    "replay diverged at seq {} of session {}",
                    record.seq, record.session
                )));
            }
        }
        Ok(studio)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(c: &str, v: &str) -> SearchSpace {
        SearchSpace::parse(c, v).unwrap()
    }

    fn pair() -> (Studio, RoomId) {
        let mut studio = Studio::new(CodecConfig::default(), 42);
        let room = studio
            .create_room(&RoomSpec::new(vec![
                MemberSpec {
                    name: "a".into(),
                    space: space("x", "x,t"),
                },
                MemberSpec {
                    name: "b".into(),
                    space: space("y", "y,t"),
                },
            ]))
            .unwrap();
        (studio, room)
    }

    #[test]
    fn rooms_seed_members_within_space() {
        let (studio, room) = pair();
        let members = studio.room(room).unwrap().members().to_vec();
        assert_eq!(members, vec![SessionId(1), SessionId(2)]);
        let a = studio.session(SessionId(1)).unwrap();
        assert_eq!(a.population().len(), 9);
        assert!(a
            .population()
            .individuals()
            .iter()
            .all(|i| i.genome.space() == space("x", "x,t")));
        let b = studio.session(SessionId(2)).unwrap();
        assert!(b
            .population()
            .individuals()
            .iter()
            .all(|i| i.genome.space() == space("y", "y,t")));
    }

    #[test]
    fn rooms_need_two_members() {
        let mut studio = Studio::new(CodecConfig::default(), 1);
        let spec = RoomSpec::new(vec![MemberSpec {
            name: "solo".into(),
            space: space("x", "x"),
        }]);
        assert!(matches!(
            studio.create_room(&spec),
            Err(Error::InvalidRoom(_))
        ));
    }

    #[test]
    fn identical_and_three_member_rooms() {
        let mut studio = Studio::new(CodecConfig::default(), 1);
        let same = |n: &str| MemberSpec {
            name: n.into(),
            space: space("x", "x,t"),
        };
        studio
            .create_room(&RoomSpec::new(vec![same("a"), same("b")]))
            .unwrap();
        let r = studio
            .create_room(&RoomSpec::new(vec![same("c"), same("d"), same("e")]))
            .unwrap();
        assert_eq!(studio.room(r).unwrap().members().len(), 3);
        assert_eq!(studio.peer_sample(SessionId(3)).unwrap().len(), 2);
    }

    #[test]
    fn peer_sample_is_top_k_of_current_generation() {
        let (mut studio, _) = pair();
        studio.select(SessionId(2), &[4, 6, 7]).unwrap();
        let sample = studio.peer_sample(SessionId(1)).unwrap();
        let ids: Vec<u64> = sample[&SessionId(2)].iter().map(|i| i.id).collect();
        assert_eq!(ids, vec![4, 6, 7]);
        studio.step(SessionId(2)).unwrap();
        studio.select(SessionId(2), &[0, 8]).unwrap();
        let sample = studio.peer_sample(SessionId(1)).unwrap();
        let b = studio.session(SessionId(2)).unwrap();
        assert_eq!(sample[&SessionId(2)][0], b.population().individuals()[0]);
        assert_eq!(sample[&SessionId(2)][1], b.population().individuals()[8]);
    }

    #[test]
    fn solo_viewer_sees_nothing() {
        let room = Room {
            id: RoomId(1),
            members: vec![SessionId(1)],
            visibility_k: 3,
        };
        let sample = peer_sample(&room, SessionId(1), |_| None).unwrap();
        assert!(sample.is_empty());
        assert!(matches!(
            peer_sample(&room, SessionId(2), |_| None),
            Err(Error::NotAMember { .. })
        ));
    }

    #[test]
    fn injection_replaces_worst_and_expands_space() {
        let (mut studio, _) = pair();
        studio.select(SessionId(1), &[0, 1]).unwrap();
        studio.select(SessionId(2), &[3]).unwrap();
        let before = studio.session(SessionId(1)).unwrap().clone();
        let donor_before = studio.session(SessionId(2)).unwrap().population().clone();
        let record = studio.inject(SessionId(1), SessionId(2), 3).unwrap();
        assert_eq!(record.kind, EventKind::SpaceExpanded);

        let host = studio.session(SessionId(1)).unwrap();
        assert_eq!(host.population().len(), 9);
        assert_eq!(host.space(), space("x,y", "x,y,t"));
        // worst: fitness 0.1, highest id among those
        assert_eq!(record.payload["replaced_id"], 8);
        let slot = record.payload["slot"].as_u64().unwrap() as usize;
        let injected = &host.population().individuals()[slot];
        assert_eq!(injected.genome, donor_before.individuals()[3].genome);
        assert_eq!(injected.fitness, 1.0);
        assert_eq!(
            injected.provenance,
            Provenance::Injected {
                origin: 2,
                bias_remaining: 2
            }
        );
        assert_eq!(
            studio.session(SessionId(2)).unwrap().population(),
            &donor_before
        );
        assert!(host.space().contains(&before.space()));
    }

    #[test]
    fn second_injection_takes_next_worst_slot() {
        let (mut studio, _) = pair();
        studio.select(SessionId(2), &[0, 1, 2]).unwrap();
        let r1 = studio.inject(SessionId(1), SessionId(2), 0).unwrap();
        let r2 = studio.inject(SessionId(1), SessionId(2), 1).unwrap();
        assert_eq!(r2.kind, EventKind::Injection);
        assert_ne!(r1.payload["slot"], r2.payload["slot"]);
        let host = studio.session(SessionId(1)).unwrap();
        assert_eq!(host.population().len(), 9);
        let injected = host
            .population()
            .individuals()
            .iter()
            .filter(|i| matches!(i.provenance, Provenance::Injected { .. }))
            .count();
        assert_eq!(injected, 2);
    }

    #[test]
    fn stale_and_foreign_donors() {
        let (mut studio, _) = pair();
        studio.select(SessionId(2), &[0, 1, 2]).unwrap();
        assert_eq!(
            studio.inject(SessionId(1), SessionId(2), 5),
            Err(Error::StaleDonor {
                donor: 2,
                individual: 5
            })
        );
        let other = studio
            .create_room(&RoomSpec::new(vec![
                MemberSpec {
                    name: "c".into(),
                    space: space("z", "z"),
                },
                MemberSpec {
                    name: "d".into(),
                    space: space("z", "z"),
                },
            ]))
            .unwrap();
        let c = studio.room(other).unwrap().members()[0];
        assert!(matches!(
            studio.inject(SessionId(1), c, 0),
            Err(Error::NotPermitted { .. })
        ));
        assert!(matches!(
            studio.inject(SessionId(1), SessionId(1), 0),
            Err(Error::NotPermitted { .. })
        ));
        assert!(matches!(
            studio.inject(SessionId(1), SessionId(99), 0),
            Err(Error::UnknownSession(99))
        ));
    }

    #[test]
    fn injected_subpar_individual_can_be_ignored() {
        let (mut studio, _) = pair();
        studio.select(SessionId(2), &[0]).unwrap();
        studio.inject(SessionId(1), SessionId(2), 0).unwrap();
        for _ in 0..5 {
            studio.select(SessionId(1), &[0]).unwrap();
            studio.step(SessionId(1)).unwrap();
            assert_eq!(studio.session(SessionId(1)).unwrap().population().len(), 9);
        }
    }

    #[test]
    fn events_are_sequenced_per_room() {
        let (mut studio, room) = pair();
        studio.select(SessionId(1), &[0]).unwrap();
        studio.step(SessionId(1)).unwrap();
        studio.select(SessionId(2), &[1]).unwrap();
        let seqs: Vec<u64> = studio.events(room).unwrap().iter().map(|e| e.seq).collect();
        assert_eq!(seqs, vec![1, 2, 3]);
        let text = EventRecord::to_jsonl(studio.events(room).unwrap());
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with(r#"{"seq":1,"session":1,"kind":"selection","payload":"#));
        assert_eq!(
            EventRecord::from_jsonl(&text).unwrap(),
            studio.events(room).unwrap()
        );
    }

    #[test]
    fn replay_reproduces_sessions() {
        let (mut studio, room) = pair();
        let spec = RoomSpec::new(vec![
            MemberSpec {
                name: "a".into(),
                space: space("x", "x,t"),
            },
            MemberSpec {
                name: "b".into(),
                space: space("y", "y,t"),
            },
        ]);
        for g in 0..6 {
            studio.select(SessionId(1), &[g % 9, (g * 4) % 9]).unwrap();
            studio.select(SessionId(2), &[(g * 2) % 9]).unwrap();
            if g == 3 {
                let best = studio.peer_sample(SessionId(1)).unwrap()[&SessionId(2)][0].id;
                studio.inject(SessionId(1), SessionId(2), best).unwrap();
            }
            studio.step(SessionId(1)).unwrap();
            studio.step(SessionId(2)).unwrap();
        }
        let log =
            EventRecord::from_jsonl(&EventRecord::to_jsonl(studio.events(room).unwrap())).unwrap();
        let replayed = Studio::replay(CodecConfig::default(), 42, &[spec], &log).unwrap();
        for id in [SessionId(1), SessionId(2)] {
            assert_eq!(replayed.session(id).unwrap(), studio.session(id).unwrap());
        }
    }

    #[test]
    fn assign_spaces_reseeds() {
        let (mut studio, room) = pair();
        studio
            .assign_spaces(room, &[space("z", "z"), space("x,y,z", "x,y,z,t")])
            .unwrap();
        let a = studio.session(SessionId(1)).unwrap();
        assert_eq!(a.space(), space("z", "z"));
        assert!(a
            .population()
            .individuals()
            .iter()
            .all(|i| i.genome.space() == space("z", "z")));
        assert!(studio.assign_spaces(room, &[space("z", "z")]).is_err());
    }
}
