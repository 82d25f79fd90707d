//! Collaborative interactive evolution of per-vertex displacement programs.
//!
//! Each designer steers a small interactive genetic algorithm whose genomes
//! decode into fixed-depth expression trees. A decoded tree is evaluated at
//! every vertex of a mesh and the result is added to a subset of the vertex
//! coordinates. Designers share a room; injecting a peer's individual copies
//! it into the host population and widens the host's search space with the
//! donor's variables and coordinate channels.
//!
//! Module map:
//!
//! * [`codec`] bit-level genome layout and lossless decode/encode
//! * [`expression`] expression trees, protected evaluation, shader snippets
//! * [`mesh`] OBJ ingestion, CPU displacement, export
//! * [`evolution`] fitness from picks, linear scaling, GA generation step
//! * [`collaboration`] sessions, rooms, peer visibility, injection, event log
//! * [`harness`] simulated evaluators and scenario runner

pub mod codec;
pub mod collaboration;
pub mod error;
pub mod evolution;
pub mod expression;
pub mod fixed;
pub mod harness;
pub mod mesh;
pub mod seed;
pub mod snippet;
pub mod space;

pub use codec::{
    decode, encode, random_genome, BinaryOp, BitString, CodecConfig, Genome, LeafGene, UnaryOp,
};
pub use collaboration::{
    EventKind, EventRecord, MemberSpec, Room, RoomId, RoomSpec, Session, SessionEvent, SessionId,
    Studio,
};
pub use error::{Error, Result};
pub use evolution::{
    assign_fitness, crossover, scale_fitness, step, GaParams, Individual, Population, Provenance,
};
pub use expression::{
    build_tree, displace, emit_source, evaluate, ExpressionTree, Shape, Terminal, TimeParam, Vertex,
};
pub use mesh::{displace_mesh, export_obj, load_obj, Mesh};
pub use space::{Channel, ChannelMask, SearchSpace, Variable, VariableMask};
