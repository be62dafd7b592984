//! Minimal reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Tape`] records ops as they run; [`Tape::backward`] returns gradients
//! for every [`ParamStore`] entry that took part in the computation.

pub mod gradcheck;
mod params;
mod tape;
mod tensor;

pub use params::{Gradients, ParamStore};
pub use tape::{Adjoints, Tape, Var};
pub use tensor::{log_sum_exp, sigmoid, softmax, Tensor};


#[cfg(test)]
mod tests {
    use super::gradcheck::{check_gradients, GradCheckConfig};
    use super::*;
    use crate::error::Error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar_grad(tape: &Tape, out: Var, of: Var) -> f64 {
        let (_, adj) = tape
            .backward_full(out, &Tensor::scalar(1.0))
            .unwrap();
        adj.of(of).map(|t| t.data()[0]).unwrap_or(0.0)
    }

    #[test]
    fn matmul_of_scalars() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::matrix(1, 1, vec![2.0]).unwrap()).unwrap();
        let b = tape.constant(Tensor::matrix(1, 1, vec![3.0]).unwrap()).unwrap();
        let c = tape.matmul(a, b).unwrap();
        assert_eq!(tape.value(c).data(), &[6.0]);
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::vector(vec![0.0; 3])).unwrap();
        let y = tape.softmax(x).unwrap();
        for &p in tape.value(y).data() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn tanh_at_origin() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::vector(vec![0.0])).unwrap();
        let y = tape.tanh(x).unwrap();
        assert_eq!(tape.value(y).data(), &[0.0]);
    }

    #[test]
    fn square_has_derivative_two_x() {
        let mut tape = Tape::new();
        let x = tape.bind_input("x", Tensor::scalar(3.0)).unwrap();
        let x2 = tape.mul(x, x).unwrap();
        assert_eq!(scalar_grad(&tape, x2, tape.input("x").unwrap()), 6.0);
    }

    #[test]
    fn constant_graph_has_zero_gradients() {
        let mut store = ParamStore::new();
        store.insert("w", Tensor::vector(vec![1.0, -2.0]));
        let mut tape = Tape::new();
        let _w = tape.param(&store, "w").unwrap();
        let c = tape.constant(Tensor::scalar(4.0)).unwrap();
        let out = tape.scale(c, 2.0).unwrap();
        let grads = tape.backward(out, &Tensor::scalar(1.0)).unwrap();
        assert!(grads.get("w").is_none_or(|g| g.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn backward_errors() {
        let tape = Tape::new();
        assert!(matches!(
            tape.backward(Var(0), &Tensor::scalar(1.0)),
            Err(Error::BackwardBeforeForward)
        ));
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::vector(vec![1.0, 2.0])).unwrap();
        assert!(matches!(
            tape.backward(x, &Tensor::scalar(1.0)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn unbound_names_are_reported() {
        let mut tape = Tape::new();
        assert!(matches!(tape.input("nope"), Err(Error::UnboundInput(_))));
        assert!(matches!(
            tape.param(&ParamStore::new(), "w"),
            Err(Error::UnboundInput(_))
        ));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::vector(vec![1.0, 2.0])).unwrap();
        let b = tape.constant(Tensor::vector(vec![1.0, 2.0, 3.0])).unwrap();
        assert!(tape.add(a, b).is_err());
        let m = tape.constant(Tensor::matrix(2, 2, vec![1.0; 4]).unwrap()).unwrap();
        assert!(tape.matvec(m, b).is_err());
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::vector(vec![1e308])).unwrap();
        assert!(matches!(tape.scale(a, 10.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn softmax_cross_terms_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut store = ParamStore::new();
        store.insert(
            "x",
            Tensor::vector((0..4).map(|_| rng.random_range(-2.0..2.0)).collect()),
        );
        store.insert(
            "c",
            Tensor::vector((0..4).map(|_| rng.random_range(-1.0..1.0)).collect()),
        );
        let report = check_gradients(&store, GradCheckConfig::default(), |tape, p| {
            let x = tape.param(p, "x")?;
            let c = tape.param(p, "c")?;
            let s = tape.softmax(x)?;
            let sc = tape.mul(s, c)?;
            let cross = tape.dot(sc, x)?;
            let sq = tape.dot(s, s)?;
            tape.add(cross, sq)
        })
        .unwrap();
        assert!(report.max_relative_error < 1e-6, "{report:?}");
    }

    #[test]
    fn every_op_passes_gradient_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut r = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let mut store = ParamStore::new();
        store.insert("a", Tensor::matrix(3, 4, r(12)).unwrap());
        store.insert("b", Tensor::matrix(4, 2, r(8)).unwrap());
        store.insert("v", Tensor::vector(r(4)));
        store.insert("u", Tensor::vector(r(3)));
        let report = check_gradients(&store, GradCheckConfig::default(), |t, p| {
            let a = t.param(p, "a")?;
            let b = t.param(p, "b")?;
            let v = t.param(p, "v")?;
            let u = t.param(p, "u")?;
            let ab = t.matmul(a, b)?; // 3x2
            let abt = t.transpose(ab)?; // 2x3
            let av = t.matvec(a, v)?; // 3
            let sig = t.sigmoid(av)?;
            let th = t.tanh(u)?;
            let prod = t.mul(sig, th)?;
            let diff = t.sub(prod, u)?;
            let cat = t.concat(&[diff, av])?; // 6
            let head = t.slice(cat, 1, 3)?;
            let st = t.stack_rows(&[head, u])?; // 2x3
            let r1 = t.row(a, 2)?; // 4
            let rv = t.dot(r1, v)?;
            let mixed = t.matvec(abt, head)?; // 2
            let sm = t.softmax(mixed)?;
            let stt = t.transpose(st)?; // 3x2
            let pooled = t.matvec(stt, sm)?; // 3
            let s1 = t.sum(pooled)?;
            let m1 = t.mean(cat)?;
            let s2 = t.scale(m1, 0.7)?;
            let total = t.add(s1, s2)?;
            let total = t.add(total, rv)?;
            t.mul(total, total)
        })
        .unwrap();
        assert!(report.max_relative_error < 1e-6, "{report:?}");
        assert_eq!(report.entries_checked, 12 + 8 + 4 + 3);
    }

    #[test]
    fn dropout_rate_zero_and_eval_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::vector(vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(tape.dropout(x, 0.0, true, &mut rng).unwrap(), x);
        assert_eq!(tape.dropout(x, 0.3, false, &mut rng).unwrap(), x);
        assert!(tape.dropout(x, 1.0, true, &mut rng).is_err());
        assert!(tape.dropout(x, -0.1, true, &mut rng).is_err());
    }

    #[test]
    fn dropout_zeroes_expected_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut tape = Tape::new();
        let n = 100_000;
        let x = tape.constant(Tensor::full(&[n], 1.0)).unwrap();
        let y = tape.dropout(x, 0.3, true, &mut rng).unwrap();
        let vals = tape.value(y).data();
        let zeroed = vals.iter().filter(|&&v| v == 0.0).count() as f64 / n as f64;
        assert!((zeroed - 0.3).abs() < 0.01, "zeroed fraction {zeroed}");
        let kept = 1.0 / 0.7;
        assert!(vals.iter().all(|&v| v == 0.0 || (v - kept).abs() < 1e-12));
    }

    #[test]
    fn backward_is_deterministic() {
        let mut store = ParamStore::new();
        store.insert("w", Tensor::matrix(2, 3, vec![0.1, -0.2, 0.3, 0.4, 0.5, -0.6]).unwrap());
        let run = || {
            let mut t = Tape::new();
            let w = t.param(&store, "w").unwrap();
            let x = t.constant(Tensor::vector(vec![1.0, 2.0, 3.0])).unwrap();
            let y = t.matvec(w, x).unwrap();
            let s = t.softmax(y).unwrap();
            let out = t.dot(s, y).unwrap();
            t.backward(out, &Tensor::scalar(1.0)).unwrap().get("w").unwrap().clone()
        };
        assert_eq!(run().data(), run().data());
    }

    proptest::proptest! {
        #[test]
        fn softmax_rows_are_distributions(v in proptest::collection::vec(-50.0f64..50.0, 1..12)) {
            let p = softmax(&v);
            proptest::prop_assert!(p.iter().all(|&x| x >= 0.0));
            proptest::prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
