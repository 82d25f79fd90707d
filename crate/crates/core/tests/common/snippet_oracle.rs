//! Stand-alone reader and evaluator for emitted snippets.
//!
//! Written against the text format alone (no engine types) so it can check
//! emission fidelity and `evaluate` independently of the engine.

#[derive(Debug, Clone)]
pub enum Ast {
    Num(f64),
    Var(char),
    Call(String, Box<Ast>),
    Bin(char, Box<Ast>, Box<Ast>),
    Neg(Box<Ast>),
}

#[derive(Debug, Clone)]
pub struct Statement {
    pub swizzle: String,
    pub expr: Ast,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn lex(src: &str) -> Vec<Tok> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Num(s.parse().unwrap()));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '.') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else {
            out.push(Tok::Sym(c));
            i += 1;
        }
    }
    out
}

struct P {
    toks: Vec<Tok>,
    i: usize,
}

impl P {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i)
    }
    fn next(&mut self) -> Tok {
        self.i += 1;
        self.toks[self.i - 1].clone()
    }
    fn eat(&mut self, c: char) {
        assert_eq!(self.next(), Tok::Sym(c));
    }
    fn expr(&mut self) -> Ast {
        let mut l = self.term();
        while let Some(Tok::Sym(c @ ('+' | '-'))) = self.peek().cloned() {
            self.i += 1;
            l = Ast::Bin(c, Box::new(l), Box::new(self.term()));
        }
        l
    }
    fn term(&mut self) -> Ast {
        let mut l = self.factor();
        while let Some(Tok::Sym(c @ ('*' | '/'))) = self.peek().cloned() {
            self.i += 1;
            l = Ast::Bin(c, Box::new(l), Box::new(self.factor()));
        }
        l
    }
    fn factor(&mut self) -> Ast {
        match self.next() {
            Tok::Sym('-') => Ast::Neg(Box::new(self.factor())),
            Tok::Sym('(') => {
                let e = self.expr();
                self.eat(')');
                e
            }
            Tok::Num(v) => Ast::Num(v),
            Tok::Ident(name) => match name.as_str() {
                "p.x" => Ast::Var('x'),
                "p.y" => Ast::Var('y'),
                "p.z" => Ast::Var('z'),
                "time" => Ast::Var('t'),
                f @ ("sin" | "cos" | "tan") => {
                    self.eat('(');
                    let e = self.expr();
                    self.eat(')');
                    Ast::Call(f.to_string(), Box::new(e))
                }
                other => panic!("unknown identifier {other}"),
            },
            t => panic!("unexpected token {t:?}"),
        }
    }
}

/// Parses `p.S = p.S + (E);`.
pub fn parse(src: &str) -> Statement {
    let mut p = P {
        toks: lex(src),
        i: 0,
    };
    let Tok::Ident(lhs) = p.next() else {
        panic!("expected swizzle")
    };
    p.eat('=');
    let Tok::Ident(rhs) = p.next() else {
        panic!("expected swizzle")
    };
    assert_eq!(lhs, rhs);
    p.eat('+');
    let expr = p.expr();
    p.eat(';');
    assert!(p.peek().is_none(), "trailing input");
    Statement {
        swizzle: lhs.trim_start_matches("p.").to_string(),
        expr,
    }
}

/// Evaluation rules of the snippet language: protected division below 1e-6,
/// trig clamped to ±1e4, binary results to ±1e12, the final value to ±1e6.
pub fn eval(ast: &Ast, p: [f64; 3], t: f64) -> f64 {
    let v = eval_node(ast, p, t);
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-1e6, 1e6)
    }
}

fn eval_node(ast: &Ast, p: [f64; 3], t: f64) -> f64 {
    match ast {
        Ast::Num(v) => *v,
        Ast::Var('x') => p[0],
        Ast::Var('y') => p[1],
        Ast::Var('z') => p[2],
        Ast::Var(_) => t,
        Ast::Neg(e) => -eval_node(e, p, t),
        Ast::Call(f, e) => {
            let x = eval_node(e, p, t);
            let r = match f.as_str() {
                "sin" => x.sin(),
                "cos" => x.cos(),
                _ => x.tan(),
            };
            r.clamp(-1e4, 1e4)
        }
        Ast::Bin(op, a, b) => {
            let (a, b) = (eval_node(a, p, t), eval_node(b, p, t));
            let r = match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                _ => {
                    if b.abs() < 1e-6 {
                        a
                    } else {
                        a / b
                    }
                }
            };
            r.clamp(-1e12, 1e12)
        }
    }
}

/// Displaced position of `p` at wrapped time `t`.
pub fn displace(stmt: &Statement, p: [f64; 3], t: f64) -> [f64; 3] {
    let e = eval(&stmt.expr, p, t);
    let mut out = p;
    for (k, c) in ['x', 'y', 'z'].into_iter().enumerate() {
        if stmt.swizzle.contains(c) {
            out[k] += e;
        }
    }
    out
}

/// `t` reduced into `[0, 2π)`.
pub fn wrap(t: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let r = t - tau * (t / tau).floor();
    if r >= tau || r < 0.0 {
        0.0
    } else {
        r
    }
}
