//! Reads shader snippets back into expression trees.
//!
//! Accepts the emitted form `p.<swizzle> = p.<swizzle> + (<expr>);` as well
//! as hand-written statements with ordinary precedence, e.g.
//! `p.xyz = p.xyz + (2.2 - (p.x/11)) + (7 * cos(p.y));`.
//!
//! Grammar:
//!
//! ```text
//! statement := "p." swizzle "=" "p." swizzle "+" expr ";"?
//! expr      := term (("+" | "-") term)*
//! term      := factor (("*" | "/") factor)*
//! factor    := "-" factor | primary
//! primary   := number | "p.x" | "p.y" | "p.z" | "time"
//!            | ("sin" | "cos" | "tan") "(" expr ")" | "(" expr ")"
//! ```
//!
//! Negated non-literals become `0 - e`.

use crate::codec::{BinaryOp, UnaryOp};
use crate::error::{Error, Result};
use crate::expression::{ExpressionTree, Shape};
use crate::space::{Channel, ChannelMask, Variable};

pub fn parse_statement(text: &str) -> Result<(ChannelMask, ExpressionTree)> {
    let mut p = Parser::new(text);
    let lhs = p.swizzle()?;
    p.expect('=')?;
    let rhs = p.swizzle()?;
    if lhs != rhs {
        return Err(p.error("both sides of the assignment must use the same swizzle"));
    }
    p.expect('+')?;
    let shape = p.expr()?;
    p.skip_ws();
    if p.peek() == Some(';') {
        p.pos += 1;
    }
    p.finish()?;
    Ok((lhs, ExpressionTree::from_shape(&shape)?))
}

pub fn parse_expression(text: &str) -> Result<ExpressionTree> {
    let mut p = Parser::new(text);
    let shape = p.expr()?;
    p.finish()?;
    ExpressionTree::from_shape(&shape)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::SnippetParse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn finish(&mut self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(c) => Err(self.error(format!("unexpected '{c}'"))),
        }
    }

    fn ident(&mut self) -> &'a str {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '.'))
            .unwrap_or(self.rest().len());
        let word = &self.rest()[..len];
        self.pos += len;
        word
    }

    fn swizzle(&mut self) -> Result<ChannelMask> {
        let start = self.pos;
        let word = self.ident();
        let letters = word
            .strip_prefix("p.")
            .ok_or_else(|| self.error(format!("expected p.<swizzle>, found '{word}'")))?;
        let mut mask = ChannelMask::EMPTY;
        let mut last = None;
        for c in letters.chars() {
            let ch = Channel::ALL
                .into_iter()
                .find(|ch| ch.letter() == c)
                .ok_or_else(|| self.error(format!("bad swizzle '{letters}'")))?;
            if last.is_some_and(|l| l >= ch) {
                self.pos = start;
                return Err(self.error(format!(
                    "swizzle '{letters}' must list channels once in x,y,z order"
                )));
            }
            last = Some(ch);
            mask = mask.union(ChannelMask::of(&[ch]));
        }
        if mask.is_empty() {
            return Err(self.error("empty swizzle"));
        }
        Ok(mask)
    }

    fn expr(&mut self) -> Result<Shape> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek() {
                Some('+') => BinaryOp::Add,
                Some('-') => BinaryOp::Sub,
                _ => return Ok(left),
            };
            self.pos += 1;
            let right = self.term()?;
            left = Shape::binary(op, left, right);
        }
    }

    fn term(&mut self) -> Result<Shape> {
        let mut left = self.factor()?;
        loop {
            let op = match self.peek() {
                Some('*') => BinaryOp::Mul,
                Some('/') => BinaryOp::Div,
                _ => return Ok(left),
            };
            self.pos += 1;
            let right = self.factor()?;
            left = Shape::binary(op, left, right);
        }
    }

    fn factor(&mut self) -> Result<Shape> {
        if self.peek() == Some('-') {
            self.pos += 1;
            if matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
                let value = self.number()?;
                return Ok(Shape::constant(-value));
            }
            let inner = self.factor()?;
            return Ok(Shape::sub(Shape::constant(0.0), inner));
        }
        self.primary()
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_digit() || c == '.'))
            .unwrap_or(self.rest().len());
        let text = &self.rest()[..len];
        let value = text
            .parse::<f64>()
            .map_err(|_| self.error(format!("bad number '{text}'")))?;
        self.pos += len;
        Ok(value)
    }

    fn primary(&mut self) -> Result<Shape> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => Ok(Shape::constant(self.number()?)),
            Some(_) => {
                let start = self.pos;
                let word = self.ident();
                let unary = match word {
                    "p.x" => return Ok(Shape::var(Variable::X)),
                    "p.y" => return Ok(Shape::var(Variable::Y)),
                    "p.z" => return Ok(Shape::var(Variable::Z)),
                    "time" => return Ok(Shape::var(Variable::T)),
                    "sin" => UnaryOp::Sin,
                    "cos" => UnaryOp::Cos,
                    "tan" => UnaryOp::Tan,
                    _ => {
                        self.pos = start;
                        return Err(self.error(format!("unknown identifier '{word}'")));
                    }
                };
                self.expect('(')?;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner.apply(unary))
            }
            None => Err(self.error("unexpected end of input")),
        }
    }
}
