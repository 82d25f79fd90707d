use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bit string has length {found}, expected {expected}")]
    BitLength { expected: usize, found: usize },

    #[error("tree depth {0} is outside 1..={max}", max = crate::codec::MAX_DEPTH)]
    InvalidDepth(u32),

    #[error("invalid genome hex: {0}")]
    InvalidHex(String),

    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("channel mask must not be empty")]
    InvalidMask,

    #[error("pick index {index} out of range for population of {size}")]
    InvalidPick { index: usize, size: usize },

    #[error("{picks} picks exceed population size {size}")]
    TooManyPicks { picks: usize, size: usize },

    #[error("crossover point {point} outside 1..{body_len}")]
    CrossoverPoint { point: usize, body_len: usize },

    #[error("genomes use different codec configurations")]
    ConfigMismatch,

    #[error("invalid GA parameters: {0}")]
    InvalidParams(String),

    #[error("malformed mesh: {0}")]
    MalformedMesh(String),

    #[error("OBJ parse error on line {line}: {message}")]
    ObjParse { line: usize, message: String },

    #[error("snippet parse error at byte {offset}: {message}")]
    SnippetParse { offset: usize, message: String },

    #[error("unknown session {0}")]
    UnknownSession(u64),

    #[error("unknown room {0}")]
    UnknownRoom(u64),

    #[error("unknown individual {0}")]
    UnknownIndividual(u64),

    #[error("session {session} is not a member of room {room}")]
    NotAMember { session: u64, room: u64 },

    #[error("sessions {host} and {donor} do not share a room")]
    NotPermitted { host: u64, donor: u64 },

    #[error("individual {individual} of session {donor} is not in the current peer sample")]
    StaleDonor { donor: u64, individual: u64 },

    #[error("invalid room: {0}")]
    InvalidRoom(String),

    #[error("invalid event record: {0}")]
    InvalidEvent(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),
}
