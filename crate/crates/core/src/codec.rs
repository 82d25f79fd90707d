//! Bit-level genome layout.
//!
//! A genome is one flat bit string, most-significant bit first:
//!
//! ```text
//! | channels (3) | variables (4) | binary ops (2 * internal) | unary ops (2 * nodes) | leaves (11 * leaf_count) |
//! ```
//!
//! The tree is a full binary tree stored in heap order: node `i` has children
//! `2i + 1` and `2i + 2`, internal nodes occupy `0..internal_count` and every
//! leaf sits at depth `D`. Each leaf is a 3-bit kind followed by an 8-bit
//! payload. Every field is read as an unsigned integer, MSB first; in the
//! masks, bit `k` of that integer selects the `k`-th element of `x, y, z(, t)`.
//!
//! Decoding keeps the raw bits: an all-zero mask survives decode and encode
//! unchanged and is only normalized when a tree is built.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::space::{Channel, ChannelMask, SearchSpace, Variable, VariableMask};

pub const HEADER_BITS: usize = ChannelMask::WIDTH + VariableMask::WIDTH;
pub const OP_BITS: usize = 2;
pub const LEAF_KIND_BITS: usize = 3;
pub const LEAF_PAYLOAD_BITS: usize = 8;
pub const LEAF_BITS: usize = LEAF_KIND_BITS + LEAF_PAYLOAD_BITS;
pub const MAX_DEPTH: u32 = 16;
pub const DEFAULT_DEPTH: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct CodecConfig {
    depth: u32,
}

impl CodecConfig {
    pub fn new(depth: u32) -> Result<Self> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::InvalidDepth(depth));
        }
        Ok(Self { depth })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn internal_count(&self) -> usize {
        (1 << self.depth) - 1
    }

    pub fn node_count(&self) -> usize {
        (1 << (self.depth + 1)) - 1
    }

    pub fn leaf_count(&self) -> usize {
        1 << self.depth
    }

    pub fn total_bits(&self) -> usize {
        HEADER_BITS
            + OP_BITS * self.internal_count()
            + OP_BITS * self.node_count()
            + LEAF_BITS * self.leaf_count()
    }

    /// Bits after the header; the region crossover and mutation act on.
    pub fn body_bits(&self) -> usize {
        self.total_bits() - HEADER_BITS
    }

    pub fn hex_digits(&self) -> usize {
        self.total_bits().div_ceil(4)
    }
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            depth: DEFAULT_DEPTH,
        }
    }
}

impl TryFrom<u32> for CodecConfig {
    type Error = Error;

    fn try_from(depth: u32) -> Result<Self> {
        Self::new(depth)
    }
}

impl From<CodecConfig> for u32 {
    fn from(config: CodecConfig) -> u32 {
        config.depth
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    /// Protected: returns the numerator when the denominator is near zero.
    Div,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> BinaryOp {
        Self::ALL[(code & 0b11) as usize]
    }

    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum UnaryOp {
    #[default]
    Identity,
    Sin,
    Cos,
    /// Output clamped so poles stay finite.
    Tan,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 4] = [UnaryOp::Identity, UnaryOp::Sin, UnaryOp::Cos, UnaryOp::Tan];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> UnaryOp {
        Self::ALL[(code & 0b11) as usize]
    }

    pub fn name(self) -> Option<&'static str> {
        match self {
            UnaryOp::Identity => None,
            UnaryOp::Sin => Some("sin"),
            UnaryOp::Cos => Some("cos"),
            UnaryOp::Tan => Some("tan"),
        }
    }
}

/// Raw leaf gene: kinds 0..=3 name a variable (x, y, z, t), 4..=7 a constant
/// whose value is carried by the payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LeafGene {
    kind: u8,
    payload: u8,
}

impl LeafGene {
    pub fn new(kind: u8, payload: u8) -> Self {
        Self {
            kind: kind & 0b111,
            payload,
        }
    }

    pub fn variable(variable: Variable) -> Self {
        Self::new(variable as u8, 0)
    }

    pub fn constant(payload: u8) -> Self {
        Self::new(4, payload)
    }

    pub fn kind(&self) -> u8 {
        self.kind
    }

    pub fn payload(&self) -> u8 {
        self.payload
    }

    pub fn is_constant(&self) -> bool {
        self.kind >= 4
    }
}

/// Owned bit string, most-significant bit first.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn random(len: usize, rng: &mut impl Rng) -> Self {
        Self((0..len).map(|_| rng.gen::<bool>()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [bool] {
        &mut self.0
    }

    pub fn push_field(&mut self, value: u32, width: usize) {
        for shift in (0..width).rev() {
            self.0.push((value >> shift) & 1 == 1);
        }
    }

    /// Lowercase hex of the bit string read as one big-endian integer,
    /// left-padded with zeros to `ceil(len / 4)` digits.
    pub fn to_hex(&self) -> String {
        let pad = (4 - self.0.len() % 4) % 4;
        let padded: Vec<bool> = std::iter::repeat_n(false, pad)
            .chain(self.0.iter().copied())
            .collect();
        padded
            .chunks(4)
            .map(|nibble| {
                let v = nibble.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
                char::from_digit(v, 16).expect("nibble < 16")
            })
            .collect()
    }

    /// Inverse of [`BitString::to_hex`] for a string of `len` bits. The
    /// padding bits above the top bit must be zero.
    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let hex = hex.trim();
        let digits = len.div_ceil(4);
        if hex.len() != digits {
            return Err(Error::InvalidHex(format!(
                "expected {digits} hex digits, found {}",
                hex.len()
            )));
        }
        let mut bits = Vec::with_capacity(digits * 4);
        for c in hex.chars() {
            let v = c
                .to_digit(16)
                .ok_or_else(|| Error::InvalidHex(format!("invalid hex digit '{c}'")))?;
            for shift in (0..4).rev() {
                bits.push((v >> shift) & 1 == 1);
            }
        }
        let pad = digits * 4 - len;
        if bits[..pad].iter().any(|&b| b) {
            return Err(Error::InvalidHex("nonzero padding bits".into()));
        }
        Ok(Self(bits.split_off(pad)))
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|&b| if b { '1' } else { '0' }).collect();
        write!(f, "BitString({s})")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

struct FieldReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl FieldReader<'_> {
    fn read(&mut self, width: usize) -> u32 {
        let value = self.bits[self.pos..self.pos + width]
            .iter()
            .fold(0u32, |acc, &b| (acc << 1) | b as u32);
        self.pos += width;
        value
    }
}

/// Structured view of a genome bit string.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Genome {
    config: CodecConfig,
    channel_bits: ChannelMask,
    variable_bits: VariableMask,
    binary_ops: Vec<BinaryOp>,
    unary_ops: Vec<UnaryOp>,
    leaves: Vec<LeafGene>,
}

impl Genome {
    /// The genome whose bit string is all zeros.
    pub fn zeroed(config: CodecConfig) -> Self {
        Self {
            config,
            channel_bits: ChannelMask::EMPTY,
            variable_bits: VariableMask::EMPTY,
            binary_ops: vec![BinaryOp::Add; config.internal_count()],
            unary_ops: vec![UnaryOp::Identity; config.node_count()],
            leaves: vec![LeafGene::default(); config.leaf_count()],
        }
    }

    pub fn config(&self) -> CodecConfig {
        self.config
    }

    /// Header channel bits as stored; may be empty.
    pub fn raw_channels(&self) -> ChannelMask {
        self.channel_bits
    }

    /// Header variable bits as stored; may be empty.
    pub fn raw_variables(&self) -> VariableMask {
        self.variable_bits
    }

    /// Header channels with an empty mask normalized to `{x}`.
    pub fn channels(&self) -> ChannelMask {
        if self.channel_bits.is_empty() {
            ChannelMask::of(&[Channel::X])
        } else {
            self.channel_bits
        }
    }

    /// Header variables with an empty mask normalized to `{x}`.
    pub fn variables(&self) -> VariableMask {
        if self.variable_bits.is_empty() {
            VariableMask::of(&[Variable::X])
        } else {
            self.variable_bits
        }
    }

    /// The normalized header as a search space.
    pub fn space(&self) -> SearchSpace {
        SearchSpace::new(self.channels(), self.variables()).expect("normalized masks are nonempty")
    }

    pub fn set_header(&mut self, channels: ChannelMask, variables: VariableMask) {
        self.channel_bits = channels;
        self.variable_bits = variables;
    }

    pub fn set_space(&mut self, space: &SearchSpace) {
        self.set_header(space.channels(), space.variables());
    }

    pub fn binary_ops(&self) -> &[BinaryOp] {
        &self.binary_ops
    }

    pub fn binary_ops_mut(&mut self) -> &mut [BinaryOp] {
        &mut self.binary_ops
    }

    pub fn unary_ops(&self) -> &[UnaryOp] {
        &self.unary_ops
    }

    pub fn unary_ops_mut(&mut self) -> &mut [UnaryOp] {
        &mut self.unary_ops
    }

    pub fn leaves(&self) -> &[LeafGene] {
        &self.leaves
    }

    pub fn leaves_mut(&mut self) -> &mut [LeafGene] {
        &mut self.leaves
    }

    pub fn to_bits(&self) -> BitString {
        encode(self)
    }

    pub fn to_hex(&self) -> String {
        encode(self).to_hex()
    }

    pub fn from_hex(hex: &str, config: CodecConfig) -> Result<Self> {
        decode(&BitString::from_hex(hex, config.total_bits())?, config)
    }
}

pub fn decode(bits: &BitString, config: CodecConfig) -> Result<Genome> {
    if bits.len() != config.total_bits() {
        return Err(Error::BitLength {
            expected: config.total_bits(),
            found: bits.len(),
        });
    }
    let mut reader = FieldReader {
        bits: bits.as_slice(),
        pos: 0,
    };
    let channel_bits = ChannelMask::from_bits(reader.read(ChannelMask::WIDTH) as u8);
    let variable_bits = VariableMask::from_bits(reader.read(VariableMask::WIDTH) as u8);
    let binary_ops = (0..config.internal_count())
        .map(|_| BinaryOp::from_code(reader.read(OP_BITS) as u8))
        .collect();
    let unary_ops = (0..config.node_count())
        .map(|_| UnaryOp::from_code(reader.read(OP_BITS) as u8))
        .collect();
    let leaves = (0..config.leaf_count())
        .map(|_| {
            let kind = reader.read(LEAF_KIND_BITS) as u8;
            let payload = reader.read(LEAF_PAYLOAD_BITS) as u8;
            LeafGene::new(kind, payload)
        })
        .collect();
    debug_assert_eq!(reader.pos, config.total_bits());
    Ok(Genome {
        config,
        channel_bits,
        variable_bits,
        binary_ops,
        unary_ops,
        leaves,
    })
}

pub fn encode(genome: &Genome) -> BitString {
    let mut bits = BitString(Vec::with_capacity(genome.config.total_bits()));
    bits.push_field(genome.channel_bits.bits().into(), ChannelMask::WIDTH);
    bits.push_field(genome.variable_bits.bits().into(), VariableMask::WIDTH);
    for op in &genome.binary_ops {
        bits.push_field(op.code().into(), OP_BITS);
    }
    for op in &genome.unary_ops {
        bits.push_field(op.code().into(), OP_BITS);
    }
    for leaf in &genome.leaves {
        bits.push_field(leaf.kind.into(), LEAF_KIND_BITS);
        bits.push_field(leaf.payload.into(), LEAF_PAYLOAD_BITS);
    }
    bits
}

/// Uniformly random body bits under a header fixed to `space`.
pub fn random_genome(config: CodecConfig, seed: u64, space: &SearchSpace) -> Genome {
    let mut rng = seed::rng(seed);
    let mut bits = BitString::zeros(HEADER_BITS);
    bits.0
        .extend((0..config.body_bits()).map(|_| rng.gen::<bool>()));
    let mut genome = decode(&bits, config).expect("length matches config");
    genome.set_space(space);
    genome
}
