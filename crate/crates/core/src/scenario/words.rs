//! Word expressions: a small recursive-descent grammar turning strings
//! like `"2*c*(p*c)^* - x"` into [`NcPoly`] values.
//!
//! Grammar (whitespace ignored; `^*` binds tightest, then `*`, then `+`/`-`;
//! a leading `-` negates the first term):
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := atom ('^*')*
//! atom   := number | name | '(' expr ')'
//! number := digits ['.' digits] [('e'|'E') ['+'|'-'] digits]
//! name   := [A-Za-z_][A-Za-z0-9_]*
//! ```
//!
//! A `name` resolves to a scene generator (its letter), to a named
//! coefficient constant, or to the builtin `one` (the unit coefficient).
//! The adjoint of a generator name is the starred letter; everything is a
//! polynomial, so sums, products, and adjoints compose freely.

use std::collections::HashMap;
use std::sync::Arc;

use crate::algebra::{AlgebraElement, MultiMatrixAlgebra, C64};
use crate::error::{CoreError, Result};
use crate::poly::{Letter, NcPoly, VarTable};

/// Name-resolution context for the parser.
pub struct WordContext {
    pub algebra: Arc<MultiMatrixAlgebra>,
    pub vars: Arc<VarTable>,
    /// Generator name → unstarred letter.
    pub letters: HashMap<String, Letter>,
    /// Named coefficient constants.
    pub constants: HashMap<String, AlgebraElement>,
}

impl WordContext {
    fn resolve(&self, name: &str) -> Option<NcPoly> {
        if let Some(&l) = self.letters.get(name) {
            return Some(NcPoly::letter(&self.algebra, &self.vars, l));
        }
        if let Some(c) = self.constants.get(name) {
            return Some(NcPoly::constant(&self.algebra, &self.vars, c.clone()));
        }
        if name == "one" {
            return Some(NcPoly::constant(
                &self.algebra,
                &self.vars,
                AlgebraElement::unit(&self.algebra),
            ));
        }
        None
    }
}

/// Parse one word expression.  `field` names the config entry being parsed
/// and is included in every error message.
pub fn parse_word(src: &str, field: &str, ctx: &WordContext) -> Result<NcPoly> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        field,
        ctx,
    };
    let poly = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing input after the expression"));
    }
    Ok(poly)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    field: &'a str,
    ctx: &'a WordContext,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> CoreError {
        CoreError::Config(format!(
            "{}: {} at byte {} of {:?}",
            self.field,
            msg,
            self.pos,
            String::from_utf8_lossy(self.src),
        ))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<NcPoly> {
        let negate = self.eat(b'-');
        let mut acc = self.term()?;
        if negate {
            acc = acc.scale(C64::new(-1.0, 0.0));
        }
        loop {
            if self.eat(b'+') {
                acc = acc.add(&self.term()?);
            } else if self.eat(b'-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<NcPoly> {
        let mut acc = self.factor()?;
        while self.eat(b'*') {
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<NcPoly> {
        let mut acc = self.atom()?;
        loop {
            self.skip_ws();
            if self.src[self.pos..].starts_with(b"^*") {
                self.pos += 2;
                acc = acc.adjoint();
            } else {
                return Ok(acc);
            }
        }
    }

    fn atom(&mut self) -> Result<NcPoly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.name(),
            Some(_) => Err(self.err("expected a number, a name, or '('")),
            None => Err(self.err("unexpected end of expression")),
        }
    }

    fn number(&mut self) -> Result<NcPoly> {
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit() || *b == b'.')
        {
            self.pos += 1;
        }
        if self.src.get(self.pos).is_some_and(|b| *b == b'e' || *b == b'E') {
            self.pos += 1;
            if self.src.get(self.pos).is_some_and(|b| *b == b'+' || *b == b'-') {
                self.pos += 1;
            }
            while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                self.pos += 1;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        let value: f64 = text
            .parse()
            .map_err(|_| self.err(&format!("invalid number literal {text:?}")))?;
        Ok(NcPoly::constant(
            &self.ctx.algebra,
            &self.ctx.vars,
            AlgebraElement::unit(&self.ctx.algebra).scale(C64::new(value, 0.0)),
        ))
    }

    fn name(&mut self) -> Result<NcPoly> {
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        self.ctx
            .resolve(text)
            .ok_or_else(|| self.err(&format!("unknown name {text:?}")))
    }
}

/// Resolve a variable reference of the form `name` or `name^*` to a letter.
pub fn parse_letter(src: &str, field: &str, ctx: &WordContext) -> Result<Letter> {
    let trimmed = src.trim();
    let (base, starred) = match trimmed.strip_suffix("^*") {
        Some(b) => (b.trim_end(), true),
        None => (trimmed, false),
    };
    let l = ctx.letters.get(base).ok_or_else(|| {
        CoreError::Config(format!("{field}: unknown generator {base:?}"))
    })?;
    let l = if starred { ctx.vars.adjoint_letter(*l) } else { *l };
    Ok(ctx.vars.canonical(l))
}
