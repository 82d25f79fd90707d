//! Expression trees decoded from genomes.
//!
//! Trees keep the heap layout of the genome. Genome-derived trees are full;
//! hand-built trees (fixtures, parsed snippets) may stop a branch early, in
//! which case the slots below a leaf stay empty.
//!
//! Evaluation is total. Division returns its numerator when the denominator
//! magnitude is below [`DIV_EPSILON`], trig outputs are clamped to
//! [`UNARY_LIMIT`], binary results to [`INTERMEDIATE_LIMIT`] and the final
//! value to [`OUTPUT_LIMIT`].

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec::{BinaryOp, Genome, UnaryOp};
use crate::error::{Error, Result};
use crate::fixed;
use crate::space::{Channel, ChannelMask, SearchSpace, Variable, VariableMask};

pub const DIV_EPSILON: f64 = 1e-6;
pub const UNARY_LIMIT: f64 = 1e4;
pub const INTERMEDIATE_LIMIT: f64 = 1e12;
pub const OUTPUT_LIMIT: f64 = 1e6;
/// Fractional digits of constants, both in trees and in emitted text.
pub const CONSTANT_DIGITS: u32 = 4;
pub const CONSTANT_MIN: f64 = -10.0;
pub const CONSTANT_MAX: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Vertex {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vertex {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn channel(&self, channel: Channel) -> f64 {
        match channel {
            Channel::X => self.x,
            Channel::Y => self.y,
            Channel::Z => self.z,
        }
    }

    fn channel_mut(&mut self, channel: Channel) -> &mut f64 {
        match channel {
            Channel::X => &mut self.x,
            Channel::Y => &mut self.y,
            Channel::Z => &mut self.z,
        }
    }

    pub fn distance(&self, other: &Vertex) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }
}

/// Animation time wrapped into `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct TimeParam(f64);

impl TimeParam {
    pub fn new(t: f64) -> Self {
        if !t.is_finite() {
            return Self(0.0);
        }
        let wrapped = t.rem_euclid(TAU);
        Self(if wrapped >= TAU { 0.0 } else { wrapped })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A constant on the fixed-point lattice used by emitted source, so that a
/// tree and its emitted text always denote the same numbers.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Constant(f64);

impl Constant {
    pub fn new(value: f64) -> Self {
        Self(fixed::snap(value, CONSTANT_DIGITS))
    }

    /// Constant encoded by a leaf payload: `-10 + 20 p / 255`.
    pub fn from_payload(payload: u8) -> Self {
        Self::new(CONSTANT_MIN + (CONSTANT_MAX - CONSTANT_MIN) * f64::from(payload) / 255.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fixed::format_fixed(self.0, CONSTANT_DIGITS))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Terminal {
    Var(Variable),
    Const(Constant),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeKind {
    Binary(BinaryOp),
    Leaf(Terminal),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub unary: UnaryOp,
}

/// Recursive description used to build trees by hand.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Binary {
        op: BinaryOp,
        left: Box<Shape>,
        right: Box<Shape>,
        unary: UnaryOp,
    },
    Leaf {
        terminal: Terminal,
        unary: UnaryOp,
    },
}

#[allow(clippy::should_implement_trait)]
impl Shape {
    pub fn var(variable: Variable) -> Shape {
        Shape::Leaf {
            terminal: Terminal::Var(variable),
            unary: UnaryOp::Identity,
        }
    }

    pub fn constant(value: f64) -> Shape {
        Shape::Leaf {
            terminal: Terminal::Const(Constant::new(value)),
            unary: UnaryOp::Identity,
        }
    }

    pub fn binary(op: BinaryOp, left: Shape, right: Shape) -> Shape {
        Shape::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
            unary: UnaryOp::Identity,
        }
    }

    pub fn add(left: Shape, right: Shape) -> Shape {
        Shape::binary(BinaryOp::Add, left, right)
    }

    pub fn sub(left: Shape, right: Shape) -> Shape {
        Shape::binary(BinaryOp::Sub, left, right)
    }

    pub fn mul(left: Shape, right: Shape) -> Shape {
        Shape::binary(BinaryOp::Mul, left, right)
    }

    pub fn div(left: Shape, right: Shape) -> Shape {
        Shape::binary(BinaryOp::Div, left, right)
    }

    /// Applies `op` to this node. A node holds one unary slot, so wrapping a
    /// node that already has one inserts a neutral `+ 0` node in between.
    pub fn apply(self, op: UnaryOp) -> Shape {
        if op == UnaryOp::Identity {
            return self;
        }
        match self {
            Shape::Binary {
                op: bin,
                left,
                right,
                unary: UnaryOp::Identity,
            } => Shape::Binary {
                op: bin,
                left,
                right,
                unary: op,
            },
            Shape::Leaf {
                terminal,
                unary: UnaryOp::Identity,
            } => Shape::Leaf {
                terminal,
                unary: op,
            },
            wrapped => Shape::Binary {
                op: BinaryOp::Add,
                left: Box::new(wrapped),
                right: Box::new(Shape::constant(0.0)),
                unary: op,
            },
        }
    }

    pub fn depth(&self) -> u32 {
        match self {
            Shape::Leaf { .. } => 0,
            Shape::Binary { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpressionTree {
    slots: Vec<Option<Node>>,
    depth: u32,
    active_vars: VariableMask,
}

impl ExpressionTree {
    /// Builds a tree from a hand-written shape. The active variables are the
    /// ones the shape references.
    pub fn from_shape(shape: &Shape) -> Result<Self> {
        let depth = shape.depth();
        if depth > crate::codec::MAX_DEPTH {
            return Err(Error::InvalidDepth(depth));
        }
        let mut slots = vec![None; (1usize << (depth + 1)) - 1];
        let mut active = VariableMask::EMPTY;
        place(shape, 0, &mut slots, &mut active);
        Ok(Self {
            slots,
            depth,
            active_vars: active,
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn active_vars(&self) -> VariableMask {
        self.active_vars
    }

    pub fn node(&self, index: usize) -> Option<&Node> {
        self.slots.get(index).and_then(Option::as_ref)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, &Node)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.as_ref().map(|n| (i, n)))
    }

    /// Variables that some leaf actually reads.
    pub fn referenced_vars(&self) -> VariableMask {
        self.nodes()
            .fold(VariableMask::EMPTY, |acc, (_, node)| match node.kind {
                NodeKind::Leaf(Terminal::Var(v)) => acc.union(VariableMask::of(&[v])),
                _ => acc,
            })
    }

    pub fn to_shape(&self) -> Shape {
        self.shape_at(0)
    }

    fn shape_at(&self, index: usize) -> Shape {
        let node = self.slots[index].expect("present slot");
        match node.kind {
            NodeKind::Leaf(terminal) => Shape::Leaf {
                terminal,
                unary: node.unary,
            },
            NodeKind::Binary(op) => Shape::Binary {
                op,
                left: Box::new(self.shape_at(2 * index + 1)),
                right: Box::new(self.shape_at(2 * index + 2)),
                unary: node.unary,
            },
        }
    }

    /// Infix rendering of the expression, as used in emitted source.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_at(0, &mut out);
        out
    }

    fn render_at(&self, index: usize, out: &mut String) {
        let node = self.slots[index].expect("present slot");
        let name = node.unary.name();
        if let Some(name) = name {
            out.push_str(name);
            out.push('(');
        }
        match node.kind {
            NodeKind::Leaf(Terminal::Var(v)) => out.push_str(match v {
                Variable::X => "p.x",
                Variable::Y => "p.y",
                Variable::Z => "p.z",
                Variable::T => "time",
            }),
            NodeKind::Leaf(Terminal::Const(c)) => out.push_str(&c.to_string()),
            NodeKind::Binary(op) => {
                out.push('(');
                self.render_at(2 * index + 1, out);
                out.push(' ');
                out.push(op.symbol());
                out.push(' ');
                self.render_at(2 * index + 2, out);
                out.push(')');
            }
        }
        if name.is_some() {
            out.push(')');
        }
    }

    fn eval_at(&self, index: usize, v: &Vertex, t: f64) -> f64 {
        let node = self.slots[index].expect("present slot");
        let raw = match node.kind {
            NodeKind::Leaf(Terminal::Var(Variable::X)) => v.x,
            NodeKind::Leaf(Terminal::Var(Variable::Y)) => v.y,
            NodeKind::Leaf(Terminal::Var(Variable::Z)) => v.z,
            NodeKind::Leaf(Terminal::Var(Variable::T)) => t,
            NodeKind::Leaf(Terminal::Const(c)) => c.value(),
            NodeKind::Binary(op) => {
                let a = self.eval_at(2 * index + 1, v, t);
                let b = self.eval_at(2 * index + 2, v, t);
                apply_binary(op, a, b)
            }
        };
        apply_unary(node.unary, raw)
    }
}

impl fmt::Display for ExpressionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn place(shape: &Shape, index: usize, slots: &mut [Option<Node>], active: &mut VariableMask) {
    match shape {
        Shape::Leaf { terminal, unary } => {
            if let Terminal::Var(v) = terminal {
                *active = active.union(VariableMask::of(&[*v]));
            }
            slots[index] = Some(Node {
                kind: NodeKind::Leaf(*terminal),
                unary: *unary,
            });
        }
        Shape::Binary {
            op,
            left,
            right,
            unary,
        } => {
            slots[index] = Some(Node {
                kind: NodeKind::Binary(*op),
                unary: *unary,
            });
            place(left, 2 * index + 1, slots, active);
            place(right, 2 * index + 2, slots, active);
        }
    }
}

fn apply_binary(op: BinaryOp, a: f64, b: f64) -> f64 {
    let r = match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div if b.abs() < DIV_EPSILON => a,
        BinaryOp::Div => a / b,
    };
    r.clamp(-INTERMEDIATE_LIMIT, INTERMEDIATE_LIMIT)
}

fn apply_unary(op: UnaryOp, x: f64) -> f64 {
    match op {
        UnaryOp::Identity => x,
        UnaryOp::Sin => x.sin().clamp(-UNARY_LIMIT, UNARY_LIMIT),
        UnaryOp::Cos => x.cos().clamp(-UNARY_LIMIT, UNARY_LIMIT),
        UnaryOp::Tan => x.tan().clamp(-UNARY_LIMIT, UNARY_LIMIT),
    }
}

/// Decodes a genome into a full tree over `space.variables()`.
///
/// A variable leaf outside the active set is remapped to element
/// `kind mod n` of the active variables in canonical `x, y, z, t` order.
pub fn build_tree(genome: &Genome, space: &SearchSpace) -> ExpressionTree {
    let config = genome.config();
    let active = space.variables();
    let active_list = active.to_vec();
    let internal = config.internal_count();
    let mut slots = Vec::with_capacity(config.node_count());
    for (i, &op) in genome.binary_ops().iter().enumerate() {
        slots.push(Some(Node {
            kind: NodeKind::Binary(op),
            unary: genome.unary_ops()[i],
        }));
    }
    for (j, leaf) in genome.leaves().iter().enumerate() {
        let terminal = if leaf.is_constant() {
            Terminal::Const(Constant::from_payload(leaf.payload()))
        } else {
            let v = Variable::from_index(leaf.kind()).expect("kind < 4");
            if active.contains(v) {
                Terminal::Var(v)
            } else {
                Terminal::Var(active_list[leaf.kind() as usize % active_list.len()])
            }
        };
        slots.push(Some(Node {
            kind: NodeKind::Leaf(terminal),
            unary: genome.unary_ops()[internal + j],
        }));
    }
    ExpressionTree {
        slots,
        depth: config.depth(),
        active_vars: active,
    }
}

/// Decodes a genome against its own (normalized) header.
pub fn genome_tree(genome: &Genome) -> ExpressionTree {
    build_tree(genome, &genome.space())
}

pub fn evaluate(tree: &ExpressionTree, v: &Vertex, t: TimeParam) -> f64 {
    let value = tree.eval_at(0, v, t.value());
    if value.is_nan() {
        0.0
    } else {
        value.clamp(-OUTPUT_LIMIT, OUTPUT_LIMIT)
    }
}

/// Adds the expression value, computed once from the original coordinates,
/// to every selected channel.
pub fn displace(
    tree: &ExpressionTree,
    channels: ChannelMask,
    v: &Vertex,
    t: TimeParam,
) -> Result<Vertex> {
    if channels.is_empty() {
        return Err(Error::InvalidMask);
    }
    Ok(displace_unchecked(tree, channels, v, t))
}

pub(crate) fn displace_unchecked(
    tree: &ExpressionTree,
    channels: ChannelMask,
    v: &Vertex,
    t: TimeParam,
) -> Vertex {
    let e = evaluate(tree, v, t);
    let mut out = *v;
    for channel in channels.iter() {
        *out.channel_mut(channel) += e;
    }
    out
}

pub fn swizzle(channels: ChannelMask) -> String {
    channels.iter().map(Channel::letter).collect()
}

/// `p.<swizzle> = p.<swizzle> + (<expr>);` with no trailing newline.
pub fn emit_source(tree: &ExpressionTree, channels: ChannelMask) -> Result<String> {
    if channels.is_empty() {
        return Err(Error::InvalidMask);
    }
    let sw = swizzle(channels);
    Ok(format!("p.{sw} = p.{sw} + ({});", tree.render()))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::codec::{CodecConfig, LeafGene};

    fn reference() -> ExpressionTree {
        ExpressionTree::from_shape(&Shape::add(
            Shape::sub(
                Shape::constant(2.2),
                Shape::div(Shape::var(Variable::X), Shape::constant(11.0)),
            ),
            Shape::mul(
                Shape::constant(7.0),
                Shape::var(Variable::Y).apply(UnaryOp::Cos),
            ),
        ))
        .unwrap()
    }

    fn t0() -> TimeParam {
        TimeParam::new(0.0)
    }

    #[test]
    fn reference_values() {
        let tree = reference();
        assert!((evaluate(&tree, &Vertex::new(11.0, 0.0, 0.0), t0()) - 8.2).abs() < 1e-9);
        assert!((evaluate(&tree, &Vertex::new(0.0, PI, 0.0), t0()) + 4.8).abs() < 1e-9);
        let d = displace(&tree, ChannelMask::FULL, &Vertex::new(11.0, 0.0, 0.0), t0()).unwrap();
        assert!((d.x - 19.2).abs() < 1e-9 && (d.y - 8.2).abs() < 1e-9 && (d.z - 8.2).abs() < 1e-9);
    }

    #[test]
    fn reference_emission() {
        assert_eq!(
            emit_source(&reference(), ChannelMask::FULL).unwrap(),
            "p.xyz = p.xyz + (((2.2000 - (p.x / 11.0000)) + (7.0000 * cos(p.y))));"
        );
    }

    #[test]
    fn single_channel_swizzle() {
        let tree =
            ExpressionTree::from_shape(&Shape::mul(Shape::var(Variable::X), Shape::constant(2.0)))
                .unwrap();
        let src = emit_source(&tree, ChannelMask::of(&[Channel::Y])).unwrap();
        assert_eq!(src, "p.y = p.y + ((p.x * 2.0000));");
        let d = displace(
            &tree,
            ChannelMask::of(&[Channel::Y]),
            &Vertex::new(1.0, 2.0, 3.0),
            t0(),
        )
        .unwrap();
        assert_eq!((d.x, d.y, d.z), (1.0, 4.0, 3.0));
    }

    #[test]
    fn empty_mask_rejected() {
        assert_eq!(
            emit_source(&reference(), ChannelMask::EMPTY),
            Err(Error::InvalidMask)
        );
        assert_eq!(
            displace(&reference(), ChannelMask::EMPTY, &Vertex::default(), t0()),
            Err(Error::InvalidMask)
        );
    }

    #[test]
    fn protected_division_returns_numerator() {
        let tree =
            ExpressionTree::from_shape(&Shape::div(Shape::var(Variable::X), Shape::constant(0.0)))
                .unwrap();
        assert_eq!(evaluate(&tree, &Vertex::new(3.5, 0.0, 0.0), t0()), 3.5);
    }

    #[test]
    fn tan_pole_is_clamped() {
        let tree =
            ExpressionTree::from_shape(&Shape::var(Variable::T).apply(UnaryOp::Tan)).unwrap();
        let v = evaluate(&tree, &Vertex::default(), TimeParam::new(PI / 2.0));
        assert_eq!(v, UNARY_LIMIT);
    }

    #[test]
    fn time_wraps() {
        assert_eq!(TimeParam::new(7.0), TimeParam::new(7.0 - TAU));
        assert_eq!(TimeParam::new(0.5), TimeParam::new(0.5 + TAU));
        assert_eq!(TimeParam::new(TAU).value(), 0.0);
        let t = TimeParam::new(-1e-20).value();
        assert!((0.0..TAU).contains(&t));
        assert_eq!(TimeParam::new(f64::NAN).value(), 0.0);
    }

    #[test]
    fn all_zero_genome_tree() {
        let genome = Genome::zeroed(CodecConfig::default());
        let space = SearchSpace::parse("x", "x").unwrap();
        let tree = build_tree(&genome, &space);
        assert_eq!(
            tree.render(),
            "(((p.x + p.x) + (p.x + p.x)) + ((p.x + p.x) + (p.x + p.x)))"
        );
        assert_eq!(evaluate(&tree, &Vertex::new(0.25, 9.0, 9.0), t0()), 2.0);
    }

    #[test]
    fn out_of_set_variable_is_remapped_in_canonical_order() {
        let mut genome = Genome::zeroed(CodecConfig::default());
        genome.leaves_mut()[0] = LeafGene::variable(Variable::Y);
        genome.leaves_mut()[1] = LeafGene::variable(Variable::Z);
        genome.leaves_mut()[2] = LeafGene::variable(Variable::T);
        let space = SearchSpace::parse("x", "x,t").unwrap();
        let tree = build_tree(&genome, &space);
        let leaf = |i: usize| tree.node(7 + i).unwrap().kind;
        // active list [x, t]: y (kind 1) -> t, z (kind 2) -> x, t stays t
        assert_eq!(leaf(0), NodeKind::Leaf(Terminal::Var(Variable::T)));
        assert_eq!(leaf(1), NodeKind::Leaf(Terminal::Var(Variable::X)));
        assert_eq!(leaf(2), NodeKind::Leaf(Terminal::Var(Variable::T)));
        assert!(tree.referenced_vars().is_subset(space.variables()));
    }

    #[test]
    fn payload_endpoints() {
        assert_eq!(Constant::from_payload(255).value(), 10.0);
        assert_eq!(Constant::from_payload(0).value(), -10.0);
        assert_eq!(Constant::from_payload(1).to_string(), "-9.9216");
    }

    #[test]
    fn nested_unary_inserts_neutral_node() {
        let shape = Shape::var(Variable::X)
            .apply(UnaryOp::Cos)
            .apply(UnaryOp::Sin);
        let tree = ExpressionTree::from_shape(&shape).unwrap();
        assert_eq!(tree.render(), "sin((cos(p.x) + 0.0000))");
        let v = Vertex::new(0.3, 0.0, 0.0);
        assert_eq!(evaluate(&tree, &v, t0()), 0.3f64.cos().sin());
    }

    #[test]
    fn shape_round_trip() {
        let tree = reference();
        assert_eq!(ExpressionTree::from_shape(&tree.to_shape()).unwrap(), tree);
    }
}
