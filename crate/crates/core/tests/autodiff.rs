use convmr::autodiff::{grad_check, softmax_values, AutodiffError, Tape, Tensor, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

/// Uses every primitive once on the way to a scalar.
fn composite(tape: &mut Tape, p: &[Var]) -> Result<Var, AutodiffError> {
    let (m, x, y, filters, table, w) = (p[0], p[1], p[2], p[3], p[4], p[5]);
    let mx = tape.matmul(m, x)?;
    let a = tape.tanh(mx);
    let b = tape.sigmoid(y);
    let row = tape.embedding_lookup(table, 1)?;
    let t = tape.stack_columns(&[a, b, row])?;
    let conv = tape.conv_1x3(t, filters)?;
    let act = tape.relu(conv);
    let proj = tape.dot(w, act)?;
    let ab = tape.mul(a, b)?;
    let sm = tape.softmax(ab)?;
    let cat = tape.concat(&[sm, a])?;
    let flat = tape.reshape(cat, &[2, 8])?;
    let rows = tape.reshape(flat, &[16])?;
    let sq = tape.l2_norm_sq(rows);
    let sp = tape.softplus(proj);
    let half = tape.scale(sq, 0.5);
    let sum = tape.sum(&[sp, half])?;
    let neg = tape.scale(proj, -0.25);
    tape.add(sum, neg)
}

fn composite_params(seed: u64) -> Vec<Tensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    [&[8, 8][..], &[8], &[8], &[4, 3], &[3, 8], &[32]]
        .iter()
        .map(|s| random(s, &mut rng))
        .collect()
}

#[test]
fn composite_of_all_primitives_matches_finite_differences() {
    for seed in 0..5 {
        let params = composite_params(seed);
        let rep = grad_check(&params, 1e-5, composite).unwrap();
        assert!(rep.checked > 100);
        assert!(
            rep.max_rel_error < 1e-4,
            "seed {seed}: {}",
            rep.max_rel_error
        );
    }
}

#[test]
fn fan_out_sums_path_gradients() {
    let x = Tensor::vector(vec![0.3, -1.2, 2.0]);
    let c = Tensor::vector(vec![1.5, 0.5, -2.0]);
    let grad = |uses: &[bool; 2]| {
        let mut tape = Tape::new();
        let xv = tape.leaf(x.clone());
        let cv = tape.leaf(c.clone());
        let mut parts = Vec::new();
        if uses[0] {
            let t = tape.tanh(xv);
            parts.push(tape.dot(t, cv).unwrap());
        }
        if uses[1] {
            parts.push(tape.l2_norm_sq(xv));
        }
        let root = tape.sum(&parts).unwrap();
        tape.backward(root)
            .unwrap()
            .get(xv)
            .unwrap()
            .values()
            .to_vec()
    };
    let both = grad(&[true, true]);
    let first = grad(&[true, false]);
    let second = grad(&[false, true]);
    for i in 0..3 {
        assert!((both[i] - (first[i] + second[i])).abs() < 1e-15);
    }
}

#[test]
fn conv_yields_tau_times_k_features() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (k, tau) in [(1, 1), (5, 3), (8, 4)] {
        let mut tape = Tape::new();
        let t = tape.leaf(random(&[k, 3], &mut rng));
        let f = tape.leaf(random(&[tau, 3], &mut rng));
        let out = tape.conv_1x3(t, f).unwrap();
        assert_eq!(tape.value(out).shape(), &[tau * k]);
    }
}

#[test]
fn selector_filter_picks_first_column() {
    let t = Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    let f = Tensor::matrix(1, 3, vec![1.0, 0.0, 0.0]).unwrap();
    let mut tape = Tape::new();
    let (tv, fv) = (tape.leaf(t), tape.leaf(f));
    let out = tape.conv_1x3(tv, fv).unwrap();
    assert_eq!(tape.value(out).values(), &[1.0, 4.0]);
}

#[test]
fn primitives_are_deterministic() {
    let params = composite_params(9);
    let run = || {
        let mut tape = Tape::new();
        let leaves: Vec<Var> = params.iter().map(|p| tape.leaf(p.clone())).collect();
        let root = composite(&mut tape, &leaves).unwrap();
        let g = tape.backward(root).unwrap();
        let mut bits = vec![tape.value(root).item().to_bits()];
        for l in &leaves {
            bits.extend(g.get(*l).unwrap().values().iter().map(|v| v.to_bits()));
        }
        bits
    };
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn softmax_is_positive_and_normalized(xs in prop::collection::vec(-30.0f64..30.0, 1..12)) {
        let p = softmax_values(&xs);
        prop_assert!(p.iter().all(|&v| v > 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_survives_large_logits(xs in prop::collection::vec(-700.0f64..700.0, 1..12)) {
        let p = softmax_values(&xs);
        prop_assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_is_shift_invariant(c in -50.0f64..50.0, n in 1usize..6) {
        let p = softmax_values(&vec![c; n]);
        for v in p {
            prop_assert!((v - 1.0 / n as f64).abs() < 1e-15);
        }
    }
}
