mod common;

use imp_core::belief::propagate;
use imp_core::models::{
    decode_model, encode_model, generate_component, pod_eddy_current, pod_exponential, ComponentKind, DEFAULT_SAMPLES,
};
use proptest::prelude::*;

#[test]
fn generated_tables_are_stochastic_and_upper_triangular() {
    let owf = common::owf_models();
    let st = common::struct_models();
    for m in st.models().into_iter().chain(owf.models()) {
        let n = m.n_bins();
        for tau in 0..m.tau_max() {
            for i in 0..n {
                let row = &m.table(tau).unwrap()[i * n..(i + 1) * n];
                assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                assert!(row[..i].iter().all(|&p| p == 0.0), "tau {tau} row {i} shrinks");
            }
        }
        assert!((m.initial_probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn failure_mass_grows_under_deterioration() {
    let st = common::struct_models();
    let m = st.for_component(0);
    let mut b = m.initial_belief();
    let first = b.failure_prob();
    let mut last = first;
    for tau in 0..m.tau_max() {
        b = propagate(&b, m, tau).unwrap();
        assert!(b.failure_prob() >= last, "tau {tau}");
        last = b.failure_prob();
    }
    assert!(last > first + 0.05);
}

#[test]
fn independent_generations_agree_within_sampling_error() {
    let a = generate_component(ComponentKind::Structural, 30, DEFAULT_SAMPLES, 1).unwrap();
    let b = generate_component(ComponentKind::Structural, 30, DEFAULT_SAMPLES, 2).unwrap();
    // visits of each row, reconstructed from the marginal bin distribution of the second run
    let n = a.n_bins();
    let mut marginal = b.initial_probs().to_vec();
    let (mut checked, mut within) = (0usize, 0usize);
    for tau in 0..30 {
        let (ta, tb) = (a.table(tau).unwrap(), b.table(tau).unwrap());
        for i in 0..n {
            let visits = marginal[i] * DEFAULT_SAMPLES as f64;
            if visits < 1.0 {
                continue;
            }
            for j in i..n {
                let (pa, pb) = (ta[i * n + j], tb[i * n + j]);
                if pa == 0.0 && pb == 0.0 {
                    continue;
                }
                let p = 0.5 * (pa + pb);
                let se = (2.0 * p * (1.0 - p) / visits).sqrt();
                checked += 1;
                if (pa - pb).abs() <= 3.0 * se + 1.0 / visits {
                    within += 1;
                }
            }
        }
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in i..n {
                next[j] += marginal[i] * tb[i * n + j];
            }
        }
        marginal = next;
    }
    assert!(
        within as f64 >= 0.99 * checked as f64,
        "{within} of {checked} entries agree"
    );
}

#[test]
fn generation_does_not_depend_on_thread_count() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| generate_component(ComponentKind::WindMiddle, 5, 200_000, 3).unwrap())
    };
    assert_eq!(run(1), run(4));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pod_curves_are_monotone_and_bounded(d1 in 0.0f64..100.0, d2 in 0.0f64..100.0, chi in 0.05f64..5.0, b in 0.1f64..3.0) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        for (x, y) in [(pod_exponential(lo, 8.0), pod_exponential(hi, 8.0)), (pod_eddy_current(lo, chi, b), pod_eddy_current(hi, chi, b))] {
            prop_assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
            prop_assert!(x <= y);
        }
    }

    #[test]
    fn model_bytes_round_trip(tau in 0usize..30, flip in any::<prop::sample::Index>()) {
        let st = common::struct_models();
        let m = st.for_component(0);
        let bytes = encode_model(m).unwrap();
        let back = decode_model(&bytes).unwrap();
        prop_assert_eq!(back.table(tau).unwrap(), m.table(tau).unwrap());
        prop_assert_eq!(&back, m);
        let mut bad = bytes.clone();
        let i = flip.index(bad.len());
        bad[i] ^= 0x10;
        prop_assert!(decode_model(&bad).is_err());
    }
}
