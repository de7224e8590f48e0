//! Plain-text model files (`.fcm`): parsing, canonical printing and compilation.

mod ast;
mod compile;
mod parser;

use std::fmt;

pub use ast::{BinOp, Expr, Func};
pub use compile::{compile, CompileError, CompiledModel};
pub use parser::{parse_model, ErrorKind, ParseError};

/// A parsed model. Statement order is preserved for printing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelDocument {
    pub states: Vec<String>,
    pub params: Vec<(String, f64)>,
    pub lets: Vec<(String, Expr)>,
    pub equations: Vec<(String, Expr)>,
    pub bounds: Vec<(String, (f64, f64))>,
}

impl ModelDocument {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn equation(&self, state: &str) -> Option<&Expr> {
        self.equations.iter().find(|(n, _)| n == state).map(|(_, e)| e)
    }
}

/// Canonical text: states, params, lets, equations, bounds.
impl fmt::Display for ModelDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "state {}", self.states.join(" "))?;
        for (name, value) in &self.params {
            writeln!(f, "param {name} = {value:?}")?;
        }
        for (name, e) in &self.lets {
            writeln!(f, "let {name} = {e}")?;
        }
        for (name, e) in &self.equations {
            writeln!(f, "eq {name}' = {e}")?;
        }
        for (name, (lo, hi)) in &self.bounds {
            writeln!(f, "bound {name} = [{lo:?}, {hi:?}]")?;
        }
        Ok(())
    }
}
