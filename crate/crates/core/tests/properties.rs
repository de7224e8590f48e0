use dynclass_core::classify::{classify_system, ClassifySettings, SystemClass};
use dynclass_core::fixedpoints::{classify_at, classify_eigenvalues, DEFAULT_HYPER_TOL};
use dynclass_core::manifolds::{stable_manifold, unstable_manifold, ManifoldOptions};
use dynclass_core::numerics::{distance, eigen, fd_jacobian, jacobian, Complex64, Matrix};
use dynclass_core::odeint::{monodromy, IntegrationSettings};
use dynclass_core::structure::{curl_magnitude, relative_symmetry_error};
use dynclass_core::vectorfield::{builtin, default_bounds};
use dynclass_core::{Dual, ParamMap, Scalar, System, VectorField};
use proptest::prelude::*;

#[derive(Clone)]
struct Linear {
    n: usize,
    a: Vec<f64>,
}

impl System for Linear {
    fn eval<S: Scalar>(&self, x: &[S], out: &mut [S]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.a[r * self.n..(r + 1) * self.n];
            *o = x.iter().zip(row).fold(S::from(0.0), |acc, (&xi, &a)| acc + xi * a);
        }
    }
}

fn square(max_n: usize, range: f64) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1..=max_n).prop_flat_map(move |n| (Just(n), prop::collection::vec(-range..range, n * n)))
}

/// exp(A) by scaling and squaring of a Taylor series.
fn expm(a: &Matrix) -> Matrix {
    let n = a.rows();
    let norm = a.max_abs() * n as f64;
    let mut s = 0;
    while norm / f64::from(1u32 << s) > 0.25 {
        s += 1;
    }
    let b = a.scaled(1.0 / f64::from(1u32 << s));
    let mut term = Matrix::identity(n);
    let mut sum = Matrix::identity(n);
    for k in 1..30 {
        term = term.matmul(&b).scaled(1.0 / k as f64);
        sum = Matrix::from_row_major(n, n, sum.as_slice().iter().zip(term.as_slice()).map(|(x, y)| x + y).collect())
            .unwrap();
    }
    for _ in 0..s {
        sum = sum.matmul(&sum);
    }
    sum
}

fn det(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut m = a.to_rows();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            let pivot = m[c].clone();
            for (t, p) in m[r][c..].iter_mut().zip(&pivot[c..]) {
                *t -= f * p;
            }
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn eigenpairs_have_small_residuals((n, data) in square(6, 3.0)) {
        let a = Matrix::from_row_major(n, n, data).unwrap();
        let e = eigen(&a).unwrap();
        let scale = a.max_abs().max(1.0) * n as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut prod = Complex64::new(1.0, 0.0);
        for (lambda, v) in e.values.iter().zip(&e.vectors) {
            sum += lambda;
            prod *= lambda;
            let vnorm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!((vnorm - 1.0).abs() < 1e-9);
            let mut res = 0.0;
            for r in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..n {
                    acc += v[c] * a[(r, c)];
                }
                res += (acc - lambda * v[r]).norm_sqr();
            }
            // defective clusters only admit residuals near sqrt(eps)
            prop_assert!(res.sqrt() <= 1e-6 * scale, "residual {} for {}", res.sqrt(), lambda);
        }
        prop_assert!((sum.re - a.trace()).abs() <= 1e-9 * scale);
        prop_assert!(sum.im.abs() <= 1e-9 * scale);
        let d = det(&a);
        prop_assert!((prod.re - d).abs() <= 1e-8 * scale.powi(n as i32), "{} vs {}", prod, d);
        for w in e.values.windows(2) {
            prop_assert!(w[0].re > w[1].re || (w[0].re == w[1].re && w[0].im >= w[1].im));
        }
    }

    #[test]
    fn monodromy_of_linear_system_is_matrix_exponential((n, data) in square(3, 1.0), t in 0.1f64..2.0) {
        let a = Matrix::from_row_major(n, n, data.clone()).unwrap();
        let field = VectorField::new(n, Linear { n, a: data }).unwrap();
        let settings = IntegrationSettings::default().tightened(1e-2);
        let start = vec![0.3; n];
        let phi = monodromy(&field, &start, t, &settings).unwrap();
        let exact = expm(&a.scaled(t));
        for (x, y) in phi.as_slice().iter().zip(exact.as_slice()) {
            prop_assert!((x - y).abs() < 1e-6, "{} vs {}", x, y);
        }
    }

    #[test]
    fn linear_classification_matches_spectrum((n, data) in square(4, 2.0)) {
        let field = VectorField::new(n, Linear { n, a: data.clone() }).unwrap();
        let origin = vec![0.0; n];
        if let Ok(rec) = classify_at(&field, &origin, DEFAULT_HYPER_TOL) {
            let e = eigen(&Matrix::from_row_major(n, n, data).unwrap()).unwrap();
            prop_assert_eq!(rec.kind, classify_eigenvalues(&e.values, DEFAULT_HYPER_TOL));
            prop_assert_eq!(rec.residual, 0.0);
        }
    }

    #[test]
    fn dual_jacobian_matches_finite_differences(
        c in prop::collection::vec(-1.0f64..1.0, 9),
        x in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let cc = c.clone();
        let field = VectorField::from_fn(3, move |x: &[Dual]| {
            vec![
                x[0] * x[1] * cc[0] + (x[2] * cc[1]).sin(),
                (x[0] * cc[2]).exp() - x[1].powi(3) * cc[3] + (x[2] * x[0]).tanh() * cc[4],
                (x[1] * x[1] + 1.0).sqrt() * cc[5] + (x[0] * cc[6]).cos() * x[2] + cc[7] * x[2] / (x[0] * x[0] + 1.0) + cc[8],
            ]
        }).unwrap();
        let j = jacobian(&field, &x).unwrap();
        let fd = fd_jacobian(&field, &x, 1e-6).unwrap();
        for (a, b) in j.as_slice().iter().zip(fd.as_slice()) {
            prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
        }
    }

    #[test]
    fn gradients_of_polynomials_are_curl_free(
        c in prop::collection::vec(-1.0f64..1.0, 6),
        x in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        // F = −∇V, V = c0 x² y + c1 y z² + c2 x z + c3 x⁴ + c4 y² + c5 x y z
        let cc = c.clone();
        let field = VectorField::from_fn(3, move |x: &[Dual]| {
            let (a, b, z) = (x[0], x[1], x[2]);
            vec![
                -(a * b * 2.0 * cc[0] + z * cc[2] + a.powi(3) * 4.0 * cc[3] + b * z * cc[5]),
                -(a * a * cc[0] + z * z * cc[1] + b * 2.0 * cc[4] + a * z * cc[5]),
                -(b * z * 2.0 * cc[1] + a * cc[2] + a * b * cc[5]),
            ]
        }).unwrap();
        prop_assert!(curl_magnitude(&field, &x).unwrap() < 1e-12);
        prop_assert!(relative_symmetry_error(&jacobian(&field, &x).unwrap()) < 1e-12);
    }

    #[test]
    fn stable_manifold_is_unstable_manifold_of_reversed_field(a in 0.3f64..3.0, b in 0.3f64..3.0, k in -0.5f64..0.5) {
        let field = VectorField::from_fn(2, move |x: &[Dual]| {
            vec![x[0] * a + x[1] * x[1] * k, -(x[1] * b) + x[0] * x[0] * k]
        }).unwrap();
        let reversed = field.negated();
        let s = classify_at(&field, &[0.0, 0.0], DEFAULT_HYPER_TOL).unwrap();
        let r = classify_at(&reversed, &[0.0, 0.0], DEFAULT_HYPER_TOL).unwrap();
        let opts = ManifoldOptions::default();
        let st = stable_manifold(&field, &s, &opts).unwrap();
        let un = unstable_manifold(&reversed, &r, &opts).unwrap();
        prop_assert_eq!(st.len(), un.len());
        for (p, q) in st.iter().zip(&un) {
            prop_assert_eq!(p.points.len(), q.points.len());
            for (u, v) in p.points.iter().zip(&q.points) {
                prop_assert!(distance(u, v) < 1e-8);
            }
        }
    }

    #[test]
    fn class_predicates_are_monotone(i in 0usize..5) {
        let c = SystemClass::ALL[i];
        prop_assert!(!c.is_gradient() || c.is_gradient_like());
        prop_assert!(!c.is_gradient_like() || c.is_morse_smale());
        prop_assert_eq!(c.allows_periodic_orbits(), !c.is_gradient_like());
    }
}

#[test]
fn stable_branches_flow_back_to_the_saddle() {
    let field = VectorField::new(2, Linear { n: 2, a: vec![1.5, 0.0, 0.0, -0.7] }).unwrap();
    let s = classify_at(&field, &[0.0, 0.0], DEFAULT_HYPER_TOL).unwrap();
    let delta = dynclass_core::manifolds::seed_offset(&s.location);
    for b in stable_manifold(&field, &s, &ManifoldOptions::default()).unwrap() {
        for p in b.points.iter().step_by(10) {
            let end = dynclass_core::odeint::integrate(&field, p, &IntegrationSettings::default().with_t_end(40.0), None)
                .unwrap();
            assert!(distance(end.last_state(), &s.location) <= 10.0 * delta);
        }
    }
}

#[test]
fn class_is_invariant_under_positive_rescaling() {
    for name in ["gradient2d", "rotation", "toggle"] {
        let field = builtin(name, &ParamMap::new()).unwrap();
        let bounds = default_bounds(name).unwrap();
        let settings = ClassifySettings::default();
        let base = classify_system(&field, &bounds, &settings).unwrap();
        for c in [0.5, 3.0] {
            let scaled = classify_system(&field.scaled(c), &bounds, &settings).unwrap();
            assert_eq!(scaled.system_class, base.system_class, "{name} scaled by {c}");
            assert!((scaled.jacobian_symmetry - base.jacobian_symmetry).abs() <= 1e-12);
            assert!((scaled.curl_gradient_ratio - base.curl_gradient_ratio).abs() <= 1e-9 * base.curl_gradient_ratio.max(1.0));
            assert_eq!(scaled.fixed_points.len(), base.fixed_points.len());
        }
    }
}

#[test]
fn reports_are_reproducible() {
    let field = builtin("vanderpol", &ParamMap::new()).unwrap();
    let bounds = default_bounds("vanderpol").unwrap();
    let settings = ClassifySettings { seed: 11, ..ClassifySettings::default() };
    let a = classify_system(&field, &bounds, &settings).unwrap();
    let b = classify_system(&field, &bounds, &settings).unwrap();
    assert_eq!(a, b);
}
