use std::collections::{BTreeMap, HashMap};
use std::fmt;

use dynclass_core::{Bounds, Scalar, System, VectorField};

use super::ast::{BinOp, Expr, Func};
use super::ModelDocument;

/// Largest integer exponent evaluated by repeated multiplication.
const POWI_LIMIT: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub enum CompileError {
    UnknownOverride(String),
    UnknownIdentifier(String),
    MissingEquation(String),
    UnknownBoundState(String),
    InvalidBounds(String),
    NoStates,
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompileError::UnknownOverride(n) => write!(f, "unknown parameter '{n}' in override"),
            CompileError::UnknownIdentifier(n) => write!(f, "unknown identifier '{n}'"),
            CompileError::MissingEquation(n) => write!(f, "state '{n}' has no equation"),
            CompileError::UnknownBoundState(n) => write!(f, "bound given for unknown state '{n}'"),
            CompileError::InvalidBounds(m) => write!(f, "invalid bounds: {m}"),
            CompileError::NoStates => write!(f, "model declares no states"),
        }
    }
}

impl std::error::Error for CompileError {}

/// Expression with names resolved to slots and parameters folded in.
#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Slot(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    PowI(Box<Node>, i32),
    Call1(Func, Box<Node>),
    Call2(Func, Box<Node>, Box<Node>),
}

fn apply_bin<S: Scalar>(op: BinOp, a: S, b: S) -> S {
    match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => a / b,
        BinOp::Pow => a.powf(b),
    }
}

fn apply1<S: Scalar>(f: Func, a: S) -> S {
    match f {
        Func::Exp => a.exp(),
        Func::Log => a.ln(),
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Tan => a.tan(),
        Func::Tanh => a.tanh(),
        Func::Sqrt => a.sqrt(),
        Func::Abs => a.abs(),
        Func::Min | Func::Max => unreachable!("binary function"),
    }
}

fn apply2<S: Scalar>(f: Func, a: S, b: S) -> S {
    match f {
        Func::Min => a.min(b),
        Func::Max => a.max(b),
        _ => unreachable!("unary function"),
    }
}

impl Node {
    fn eval<S: Scalar>(&self, slots: &[S]) -> S {
        match self {
            Node::Const(v) => S::from(*v),
            Node::Slot(i) => slots[*i],
            Node::Neg(a) => -a.eval(slots),
            Node::Bin(op, a, b) => apply_bin(*op, a.eval(slots), b.eval(slots)),
            Node::PowI(a, n) => a.eval(slots).powi(*n),
            Node::Call1(f, a) => apply1(*f, a.eval(slots)),
            Node::Call2(f, a, b) => apply2(*f, a.eval(slots), b.eval(slots)),
        }
    }

    fn constant(&self) -> Option<f64> {
        match self {
            Node::Const(v) => Some(*v),
            _ => None,
        }
    }

    /// Folds the node to a constant when every operand is constant.
    fn fold(self) -> Node {
        let folded = match &self {
            Node::Neg(a) => a.constant().map(|a| -a),
            Node::Bin(op, a, b) => a.constant().zip(b.constant()).map(|(a, b)| apply_bin(*op, a, b)),
            Node::PowI(a, n) => a.constant().map(|a| Scalar::powi(a, *n)),
            Node::Call1(f, a) => a.constant().map(|a| apply1(*f, a)),
            Node::Call2(f, a, b) => a.constant().zip(b.constant()).map(|(a, b)| apply2(*f, a, b)),
            Node::Const(_) | Node::Slot(_) => None,
        };
        folded.map_or(self, Node::Const)
    }
}

enum Binding {
    Value(f64),
    Slot(usize),
}

fn lower(e: &Expr, scope: &HashMap<&str, Binding>) -> Result<Node, CompileError> {
    let node = match e {
        Expr::Num(v) => Node::Const(*v),
        Expr::Var(name) => match scope.get(name.as_str()) {
            Some(Binding::Value(v)) => Node::Const(*v),
            Some(Binding::Slot(i)) => Node::Slot(*i),
            None => return Err(CompileError::UnknownIdentifier(name.clone())),
        },
        Expr::Neg(a) => Node::Neg(Box::new(lower(a, scope)?)),
        Expr::Binary(op, a, b) => {
            let a = lower(a, scope)?;
            let b = lower(b, scope)?;
            match (op, b.constant()) {
                (BinOp::Pow, Some(n)) if n.fract() == 0.0 && n.abs() <= POWI_LIMIT => {
                    Node::PowI(Box::new(a), n as i32)
                }
                _ => Node::Bin(*op, Box::new(a), Box::new(b)),
            }
        }
        Expr::Call(f, args) => match args.as_slice() {
            [a] if f.arity() == 1 => Node::Call1(*f, Box::new(lower(a, scope)?)),
            [a, b] if f.arity() == 2 => Node::Call2(*f, Box::new(lower(a, scope)?), Box::new(lower(b, scope)?)),
            _ => return Err(CompileError::UnknownIdentifier(f.name().to_string())),
        },
    };
    Ok(node.fold())
}

/// Evaluator over slots `[states..., lets...]`.
#[derive(Debug, Clone)]
struct DslSystem {
    n_states: usize,
    lets: Vec<Node>,
    equations: Vec<Node>,
}

impl System for DslSystem {
    fn eval<S: Scalar>(&self, x: &[S], out: &mut [S]) {
        let mut slots: Vec<S> = Vec::with_capacity(self.n_states + self.lets.len());
        slots.extend_from_slice(&x[..self.n_states]);
        for l in &self.lets {
            let v = l.eval(&slots);
            slots.push(v);
        }
        for (o, e) in out.iter_mut().zip(&self.equations) {
            *o = e.eval(&slots);
        }
    }
}

/// Output of [`compile`].
#[derive(Debug)]
pub struct CompiledModel {
    pub field: VectorField,
    /// Present only when every state has a bound in the file.
    pub bounds: Option<Bounds>,
    pub params: BTreeMap<String, f64>,
}

/// Resolves names, applies parameter overrides and builds the vector field.
/// State order follows the `state` declarations.
pub fn compile(doc: &ModelDocument, overrides: &BTreeMap<String, f64>) -> Result<CompiledModel, CompileError> {
    if let Some(key) = overrides.keys().find(|k| doc.param(k).is_none()) {
        return Err(CompileError::UnknownOverride(key.clone()));
    }
    let mut params = BTreeMap::new();
    let mut scope: HashMap<&str, Binding> = HashMap::new();
    for (name, default) in &doc.params {
        let v = overrides.get(name).copied().unwrap_or(*default);
        params.insert(name.clone(), v);
        scope.insert(name, Binding::Value(v));
    }
    for (i, s) in doc.states.iter().enumerate() {
        scope.insert(s, Binding::Slot(i));
    }
    let mut lets = Vec::with_capacity(doc.lets.len());
    for (name, e) in &doc.lets {
        let node = lower(e, &scope)?;
        // constant lets fold away; others claim the next slot
        let binding = match node.constant() {
            Some(v) => Binding::Value(v),
            None => {
                lets.push(node);
                Binding::Slot(doc.states.len() + lets.len() - 1)
            }
        };
        scope.insert(name, binding);
    }
    let equations = doc
        .states
        .iter()
        .map(|s| {
            let e = doc.equation(s).ok_or_else(|| CompileError::MissingEquation(s.clone()))?;
            lower(e, &scope)
        })
        .collect::<Result<Vec<_>, _>>()?;

    if let Some((name, _)) = doc.bounds.iter().find(|(n, _)| !doc.states.contains(n)) {
        return Err(CompileError::UnknownBoundState(name.clone()));
    }
    let axes: Option<Vec<(f64, f64)>> = doc
        .states
        .iter()
        .map(|s| doc.bounds.iter().find(|(n, _)| n == s).map(|(_, b)| *b))
        .collect();
    let bounds = axes
        .map(Bounds::new)
        .transpose()
        .map_err(|e| CompileError::InvalidBounds(e.to_string()))?;

    let n = doc.states.len();
    let field = VectorField::new(n, DslSystem { n_states: n, lets, equations }).map_err(|_| CompileError::NoStates)?;
    Ok(CompiledModel { field, bounds, params })
}
