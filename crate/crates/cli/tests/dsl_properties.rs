mod common;

use std::collections::BTreeMap;

use common::{any_expr, document, STATES};
use dynclass::modeldsl::{compile, parse_model, Expr, ModelDocument};
use dynclass_core::vectorfield::builtin;
use dynclass_core::{Dual, ParamMap};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, TestRunner};

fn full_document() -> impl Strategy<Value = ModelDocument> {
    (1usize..=3, 0usize..=2, 0usize..=2).prop_flat_map(|(n, n_params, n_lets)| {
        let states: Vec<String> = STATES[..n].iter().map(|s| s.to_string()).collect();
        let params: Vec<String> = (0..n_params).map(|i| format!("p{i}")).collect();
        let lets: Vec<String> = (0..n_lets).map(|i| format!("l{i}")).collect();
        let base: Vec<String> = states.iter().chain(&params).cloned().collect();
        let all: Vec<String> = base.iter().chain(&lets).cloned().collect();
        let values = prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), n_params);
        let let_exprs = prop::collection::vec(any_expr(base, 4), n_lets);
        let eq_exprs = prop::collection::vec(any_expr(all, 6), n);
        let bounds = prop::option::of(prop::collection::vec((-1e3f64..1e3, 1e-3f64..1e3), n));
        (values, let_exprs, eq_exprs, bounds).prop_map(move |(values, let_exprs, eq_exprs, bounds)| ModelDocument {
            states: states.clone(),
            params: params.iter().cloned().zip(values).collect(),
            lets: lets.iter().cloned().zip(let_exprs).collect(),
            equations: states.iter().cloned().zip(eq_exprs).collect(),
            bounds: bounds
                .map(|b| states.iter().cloned().zip(b.into_iter().map(|(lo, w)| (lo, lo + w))).collect())
                .unwrap_or_default(),
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printed_documents_parse_back_identically(doc in full_document()) {
        let text = doc.to_string();
        let back = parse_model(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, doc);
    }

    #[test]
    fn dual_and_real_evaluation_agree(
        e in any_expr(STATES[..3].iter().map(|s| s.to_string()).collect(), 6),
        x in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let doc = document(3, vec![e.clone(), Expr::Num(0.0), Expr::Num(0.0)]);
        let field = compile(&doc, &BTreeMap::new()).unwrap().field;
        let real = field.eval(&x);
        let seeds: Vec<Dual> = x.iter().enumerate().map(|(i, &v)| Dual::new(v, if i == 0 { 1.0 } else { 0.0 })).collect();
        let mut out = vec![Dual::default(); 3];
        let dual = field.eval_dual_into(&seeds, &mut out);
        prop_assert_eq!(real.is_ok(), dual.is_ok(), "{}", e);
        if let Ok(r) = real {
            let tol = 1e-12 * r[0].abs().max(1.0);
            prop_assert!((r[0] - out[0].re).abs() <= tol, "{} vs {} for {}", r[0], out[0].re, e);
        }
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        let text = String::from_utf8_lossy(&bytes);
        if let Err(e) = parse_model(&text) {
            prop_assert!(e.line >= 1 && e.column >= 1);
        }
    }

    #[test]
    fn token_soup_never_panics(tokens in prop::collection::vec(prop::sample::select(vec![
        "state", "param", "let", "eq", "bound", "x", "y", "'", "=", "[", "]", ",", "(", ")", "+", "-", "*", "/", "^",
        "1", "2.5e3", "1e999", ".", "exp", "min", "#", "\n", "\r\n", " ", "é", "\t",
    ]), 0..64)) {
        let text: String = tokens.concat();
        if let Ok(doc) = parse_model(&text) {
            let _ = compile(&doc, &BTreeMap::new());
        }
    }
}

#[test]
fn stem_cell_file_matches_builtin() {
    let text = std::fs::read_to_string(common::model_path("stemcell")).unwrap();
    let doc = parse_model(&text).unwrap();
    for lif in [10.0, 50.0, 150.0] {
        let overrides: BTreeMap<String, f64> = [("L".to_string(), lif)].into();
        let dsl = compile(&doc, &overrides).unwrap().field;
        let reference = builtin("stemcell", &ParamMap::from([("L".to_string(), lif)])).unwrap();
        let mut runner = TestRunner::new(Config::default());
        for _ in 0..100 {
            let x = prop::collection::vec(0.0f64..120.0, 4).new_tree(&mut runner).unwrap().current();
            let (a, b) = (dsl.eval(&x).unwrap(), reference.eval(&x).unwrap());
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() <= 1e-12, "{p} vs {q} at {x:?}");
            }
        }
    }
}

#[test]
fn shipped_models_load() {
    for name in dynclass_core::vectorfield::MODEL_NAMES {
        let text = std::fs::read_to_string(common::model_path(name)).unwrap();
        let doc = parse_model(&text).unwrap();
        let m = compile(&doc, &BTreeMap::new()).unwrap();
        let bounds = m.bounds.expect("shipped models declare bounds");
        assert_eq!(&bounds, &dynclass_core::vectorfield::default_bounds(name).unwrap());
        let reference = builtin(name, &ParamMap::new()).unwrap();
        let x: Vec<f64> = bounds.axes().iter().map(|(lo, hi)| 0.3 * lo + 0.7 * hi).collect();
        let (a, b) = (m.field.eval(&x).unwrap(), reference.eval(&x).unwrap());
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() <= 1e-12 * q.abs().max(1.0), "{name}: {p} vs {q}");
        }
    }
}
