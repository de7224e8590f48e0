#![allow(dead_code)]

use std::process::Command;

use dynclass::modeldsl::{BinOp, Expr, Func, ModelDocument};
use proptest::prelude::*;

pub const STATES: [&str; 4] = ["x", "y", "z", "w"];

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the compiled binary.
pub fn cli(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_dynclass")).args(args).output().expect("binary runs");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

pub fn model_path(name: &str) -> String {
    format!("{}/models/{name}.fcm", env!("CARGO_MANIFEST_DIR"))
}

fn var(names: Vec<String>) -> impl Strategy<Value = Expr> {
    prop::sample::select(names).prop_map(Expr::Var)
}

fn literal() -> impl Strategy<Value = Expr> {
    use proptest::num::f64::{NORMAL, POSITIVE, SUBNORMAL, ZERO};
    prop_oneof![
        3 => (0u32..20).prop_map(|v| Expr::Num(f64::from(v))),
        2 => (0.0f64..10.0).prop_map(Expr::Num),
        1 => (POSITIVE | ZERO | NORMAL | SUBNORMAL).prop_map(Expr::Num),
    ]
}

/// Arbitrary expression trees of depth at most `depth` over `names`.
pub fn any_expr(names: Vec<String>, depth: u32) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![literal(), var(names)];
    leaf.prop_recursive(depth, 48, 3, |inner| {
        let ops = prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]);
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (ops, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (prop::sample::select(Func::ALL.to_vec()), inner.clone(), inner).prop_map(|(f, a, b)| {
                let args = if f.arity() == 2 { vec![a, b] } else { vec![a] };
                Expr::Call(f, args)
            }),
        ]
    })
}

/// Smooth, bounded-derivative expressions: polynomials composed with
/// sin, cos, tanh, exp∘tanh and rational damping `a / (1 + b^2)`.
pub fn smooth_expr(n: usize, depth: u32) -> impl Strategy<Value = Expr> {
    let names: Vec<String> = STATES[..n].iter().map(|s| s.to_string()).collect();
    let leaf = prop_oneof![
        (0.0f64..2.0).prop_map(Expr::Num),
        var(names),
    ];
    leaf.prop_recursive(depth, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinOp::Sub, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinOp::Mul, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(
                BinOp::Div,
                a,
                Expr::binary(BinOp::Add, Expr::Num(1.0), Expr::binary(BinOp::Pow, b, Expr::Num(2.0)))
            )),
            (prop::sample::select(vec![Func::Sin, Func::Cos, Func::Tanh]), inner.clone())
                .prop_map(|(f, a)| Expr::Call(f, vec![a])),
            inner.prop_map(|a| Expr::Call(Func::Exp, vec![Expr::Call(Func::Tanh, vec![a])])),
        ]
    })
}

/// A random field with `1 ≤ n ≤ 4` states and a point in `[-2, 2]ⁿ`.
pub fn smooth_field() -> impl Strategy<Value = (ModelDocument, Vec<f64>)> {
    (1usize..=4).prop_flat_map(|n| {
        (prop::collection::vec(smooth_expr(n, 4), n), prop::collection::vec(-2.0f64..2.0, n))
            .prop_map(move |(eqs, point)| (document(n, eqs), point))
    })
}

pub fn document(n: usize, eqs: Vec<Expr>) -> ModelDocument {
    let states: Vec<String> = STATES[..n].iter().map(|s| s.to_string()).collect();
    ModelDocument {
        equations: states.iter().cloned().zip(eqs).collect(),
        states,
        ..ModelDocument::default()
    }
}
