use proptest::prelude::*;

use lttk_core::container::{decode, encode};
use lttk_core::geometry::twonn::two_nn_estimate;
use lttk_core::sampler::{acceptance_probabilities, closed_form_policy, CandidateSet};
use lttk_core::spectral::{anisotropy, effective_rank, entropy};
use lttk_core::{mean_pool_tokens, Label, LabeledSample, LatentThought, Trajectory, TrajectorySet};

fn thought(tokens: usize, dim: usize) -> impl Strategy<Value = LatentThought> {
    prop::collection::vec(-100.0f32..100.0, tokens * dim).prop_map(move |v| {
        LatentThought::new(tokens, dim, v.into_iter().map(f64::from).collect()).unwrap()
    })
}

fn label() -> impl Strategy<Value = Label> {
    prop_oneof![
        Just(Label::Correct),
        Just(Label::Incorrect),
        Just(Label::Unlabeled)
    ]
}

fn sample(tokens: usize, dim: usize) -> impl Strategy<Value = LabeledSample> {
    (
        any::<u64>(),
        any::<u32>(),
        prop::option::of(0u32..u32::MAX),
        prop::collection::vec(thought(tokens, dim), 1..5),
        label(),
    )
        .prop_map(|(p, s, a, thoughts, label)| {
            LabeledSample::new(Trajectory::new(p, s, a, thoughts).unwrap(), label)
        })
}

fn set() -> impl Strategy<Value = TrajectorySet> {
    (1usize..4, 1usize..6)
        .prop_flat_map(|(l, d)| prop::collection::vec(sample(l, d), 1..8))
        .prop_map(TrajectorySet::new)
}

proptest! {
    #[test]
    fn container_roundtrip(set in set()) {
        let bytes = encode(&set).unwrap();
        prop_assert_eq!(decode(&bytes).unwrap(), set);
    }

    #[test]
    fn truncation_never_panics(set in set(), cut in 0.0f64..1.0) {
        let bytes = encode(&set).unwrap();
        let n = (cut * bytes.len() as f64) as usize;
        prop_assert!(decode(&bytes[..n]).is_err());
    }

    #[test]
    fn pooling_is_linear(a in thought(3, 4), b in thought(3, 4), s in -5.0f64..5.0) {
        let combo: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| s * x + y).collect();
        let pooled = mean_pool_tokens(&LatentThought::new(3, 4, combo).unwrap());
        let (pa, pb) = (mean_pool_tokens(&a), mean_pool_tokens(&b));
        for k in 0..4 {
            prop_assert!((pooled[k] - (s * pa[k] + pb[k])).abs() < 1e-9);
        }
    }

    #[test]
    fn policy_is_a_distribution(rewards in prop::collection::vec(-10.0f64..10.0, 1..30), beta in 1e-4f64..10.0) {
        let set = CandidateSet::from_rewards(&rewards).unwrap();
        let p = closed_form_policy(&set, beta).unwrap().probabilities;
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|v| *v >= 0.0));
        // higher reward never gets less mass
        for i in 0..rewards.len() {
            for j in 0..rewards.len() {
                if rewards[i] > rewards[j] {
                    prop_assert!(p[i] >= p[j]);
                }
            }
        }
        let phi = acceptance_probabilities(&set, beta);
        prop_assert!(phi.iter().any(|v| *v == 1.0));
        prop_assert!(phi.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn spectral_metrics_scale_free(t in thought(4, 6), c in 0.01f64..50.0) {
        prop_assume!(t.values().iter().any(|v| *v != 0.0));
        let scaled = LatentThought::new(4, 6, t.values().iter().map(|v| v * c).collect()).unwrap();
        let k = 4.0f64;
        let e = entropy(&t, 1.0).unwrap();
        prop_assert!((e - entropy(&scaled, 1.0).unwrap()).abs() < 1e-8);
        prop_assert!((0.0..=k.ln() + 1e-12).contains(&e));
        let r = effective_rank(&t).unwrap();
        prop_assert!((r - effective_rank(&scaled).unwrap()).abs() < 1e-8);
        prop_assert!((1.0 - 1e-12..=k + 1e-9).contains(&r));
        let a = anisotropy(&t).unwrap();
        prop_assert!((a - anisotropy(&scaled).unwrap()).abs() < 1e-8);
        prop_assert!((1.0 / k - 1e-12..=1.0 + 1e-12).contains(&a));
    }

    #[test]
    fn twonn_scale_and_translation_free(
        pts in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 20..60),
        c in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let moved: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|x| c * x + shift).collect()).collect();
        match (two_nn_estimate(&pts, 0.1), two_nn_estimate(&moved, 0.1)) {
            (Ok(a), Ok(b)) => prop_assert!((a.estimate - b.estimate).abs() < 1e-6 * a.estimate.max(1.0)),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }
}
