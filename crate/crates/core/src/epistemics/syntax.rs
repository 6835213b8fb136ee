//! Textual formula syntax.
//!
//! ```text
//! formula := unary ('&' unary)*
//! unary   := '!' unary
//!          | 'K' '[' agent ']' unary
//!          | 'C' '{' agent (',' agent)* '}' unary
//!          | 'occ' '(' ident ')'
//!          | '(' formula ')'
//! agent   := number | ident
//! ```
//!
//! Unary operators bind tighter than `&`, so `K[0] p & q` is `(K[0] p) & q`.
//! Named agents are resolved against the network when one is supplied.

use thiserror::Error;

use super::Formula;
use crate::network::{AgentId, Network};
use crate::structures::AgentSet;

/// Nesting limit; deeper inputs are rejected rather than overflowing the stack.
const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at offset {offset}: {message}")]
pub struct FormulaParseError {
    pub offset: usize,
    pub message: String,
}

pub fn parse_formula(text: &str, network: Option<&Network>) -> Result<Formula, FormulaParseError> {
    let mut p = Parser { src: text, pos: 0, network, depth: 0 };
    let f = p.formula()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    network: Option<&'a Network>,
    depth: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> FormulaParseError {
        FormulaParseError { offset: self.pos, message: message.into() }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), FormulaParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn ident(&mut self) -> Result<&str, FormulaParseError> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':')))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.error("expected an identifier"));
        }
        let start = self.pos;
        self.pos += len;
        Ok(&self.src[start..self.pos])
    }

    fn enter(&mut self) -> Result<(), FormulaParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("formula nested too deeply"));
        }
        Ok(())
    }

    fn formula(&mut self) -> Result<Formula, FormulaParseError> {
        self.enter()?;
        let mut f = self.unary()?;
        while self.eat('&') {
            let rhs = self.unary()?;
            f = Formula::and(f, rhs);
        }
        self.depth -= 1;
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, FormulaParseError> {
        self.enter()?;
        self.skip_ws();
        let f = if self.eat('!') {
            Formula::not(self.unary()?)
        } else if self.eat('(') {
            let f = self.formula()?;
            self.expect(')')?;
            f
        } else {
            let at = self.pos;
            let word = self.ident()?.to_string();
            match word.as_str() {
                "K" => {
                    self.expect('[')?;
                    let a = self.agent()?;
                    self.expect(']')?;
                    Formula::k(a, self.unary()?)
                }
                "C" => {
                    self.expect('{')?;
                    let mut group = AgentSet::new();
                    loop {
                        group.insert(self.agent()?);
                        if !self.eat(',') {
                            break;
                        }
                    }
                    self.expect('}')?;
                    Formula::c(group, self.unary()?)
                }
                "occ" => {
                    self.expect('(')?;
                    let e = self.ident()?.to_string();
                    self.expect(')')?;
                    Formula::occ(e)
                }
                _ => {
                    self.pos = at;
                    return Err(self.error(format!("expected '!', '(', 'K', 'C' or 'occ', found '{word}'")));
                }
            }
        };
        self.depth -= 1;
        Ok(f)
    }

    fn agent(&mut self) -> Result<AgentId, FormulaParseError> {
        let at = self.pos;
        let word = self.ident()?;
        if let Ok(n) = word.parse::<u32>() {
            let a = AgentId(n);
            return match self.network {
                Some(net) if !net.contains(a) => {
                    self.pos = at;
                    Err(self.error(format!("unknown agent {n}")))
                }
                _ => Ok(a),
            };
        }
        let name = word.to_string();
        match self.network.and_then(|net| net.agent_named(&name)) {
            Some(a) => Ok(a),
            None => {
                self.pos = at;
                Err(self.error(format!("unknown agent '{name}'")))
            }
        }
    }
}
