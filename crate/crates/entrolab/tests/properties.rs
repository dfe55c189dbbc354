//! Randomized invariants: the entropy chain, the model-optimality claim, KL
//! nonnegativity, the quantizer's relative-entropy guarantee, and lossless
//! coding.

use entrolab::codec::{
    compress, decompress, encode, decode, quantize_model, CodecModel, CountTable, Mode,
};
use entrolab::entropy::{
    empirical_entropy, empirical_markov_model, entropy_profile, kl_divergence, self_information,
};
use entrolab::quantize::{quantize, reconstruct, QuantizedDistribution, QuantizerParams};
use entrolab::sequence::Sequence;
use entrolab::{Distribution, MarkovModel};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn arb_sequence(max_n: u32, max_m: usize) -> impl Strategy<Value = Sequence> {
    (2..=max_n)
        .prop_flat_map(move |n| (Just(n), prop::collection::vec(0..n, 4..=max_m)))
        .prop_map(|(n, symbols)| Sequence::new(symbols, n).unwrap())
}

fn arb_distribution(max_n: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.0f64..1.0, 2..=max_n).prop_map(|raw| {
        let bump: Vec<f64> = raw.iter().map(|x| x + 1e-6).collect();
        let sum: f64 = bump.iter().sum();
        Distribution::proper(bump.into_iter().map(|x| x / sum).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn entropy_profile_is_a_decreasing_chain(seq in arb_sequence(16, 200)) {
        let l_max = 3.min(seq.m() - 1);
        let profile = entropy_profile(&seq, l_max).unwrap();
        let cap = (seq.distinct_symbols() as f64).log2();
        prop_assert!(profile[0] <= cap + 1e-9);
        for pair in profile.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-9);
            prop_assert!(pair[1] >= -1e-12);
        }
    }

    #[test]
    fn empirical_model_attains_m_h(seq in arb_sequence(16, 300), order in 0usize..3) {
        prop_assume!(seq.m() > order);
        let model = empirical_markov_model(&seq, order).unwrap();
        let h = empirical_entropy(&seq, order).unwrap();
        let bits = self_information(&model, &seq).unwrap();
        prop_assert!((bits - h * seq.m() as f64).abs() <= 1e-6 * seq.m() as f64);
    }

    #[test]
    fn perturbed_models_never_beat_the_empirical_one(
        seq in arb_sequence(8, 200),
        noise in prop::collection::vec(0.01f64..1.0, 8),
    ) {
        let order = 1;
        prop_assume!(seq.m() > order);
        let base = empirical_markov_model(&seq, order).unwrap();
        let best = self_information(&base, &seq).unwrap();
        // Blend every conditional toward an arbitrary fixed distribution.
        let noise_sum: f64 = noise.iter().take(seq.n() as usize).sum();
        let mut conditionals = BTreeMap::new();
        for (context, dist) in base.conditionals() {
            let mixed: Vec<f64> = dist
                .probs()
                .iter()
                .enumerate()
                .map(|(i, &p)| 0.7 * p + 0.3 * noise[i % noise.len()] / noise_sum)
                .collect();
            let total: f64 = mixed.iter().sum();
            conditionals.insert(
                context.clone(),
                Distribution::proper(mixed.into_iter().map(|x| x / total).collect()).unwrap(),
            );
        }
        let rival = MarkovModel::new(order, seq.n(), base.prefix().to_vec(), conditionals);
        let rival_bits = self_information(&rival, &seq).unwrap();
        prop_assert!(rival_bits >= best - 1e-6 * seq.m() as f64);
    }

    #[test]
    fn kl_divergence_is_nonnegative(
        p in arb_distribution(12),
        q_raw in prop::collection::vec(0.01f64..1.0, 12),
    ) {
        let q_cut: Vec<f64> = q_raw[..p.len()].to_vec();
        let sum: f64 = q_cut.iter().sum();
        let q = Distribution::proper(q_cut.into_iter().map(|x| x / sum).collect()).unwrap();
        prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn quantizer_respects_its_guarantee(
        p in arb_distribution(64),
        c in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0]),
        eps in prop::sample::select(vec![0.1, 0.5, 1.0]),
    ) {
        let params = QuantizerParams::new(c, eps, p.len() as u32).unwrap();
        let check = entrolab::quantize::verify_kl_bound(&p, params).unwrap();
        prop_assert!(check.ok, "kl {} vs bound {}", check.kl, check.bound);
        let qd = quantize(&p, params).unwrap();
        prop_assert!(qd.t() as u64 <= params.max_recorded());
        let q = reconstruct(&qd).unwrap();
        let total: f64 = q.probs().iter().sum();
        prop_assert!(total <= 1.0 + 1e-9);
    }

    #[test]
    fn quantized_serialization_roundtrips(
        p in arb_distribution(64),
        eps in prop::sample::select(vec![0.2, 0.7, 1.4]),
    ) {
        let params = QuantizerParams::new(1.5, eps, p.len() as u32).unwrap();
        let qd = quantize(&p, params).unwrap();
        let parsed = QuantizedDistribution::from_bytes(&qd.to_bytes()).unwrap();
        prop_assert_eq!(parsed, qd);
    }

    #[test]
    fn sequence_serialization_roundtrips(seq in arb_sequence(300, 200)) {
        let parsed = Sequence::from_bytes(&seq.to_bytes()).unwrap();
        prop_assert_eq!(parsed, seq);
    }

    #[test]
    fn coding_is_lossless_under_both_models(seq in arb_sequence(12, 400)) {
        prop_assume!(seq.m() > 1);
        let quantized =
            CodecModel::Quantized(quantize_model(&seq, 1, 1.5, 0.5).unwrap());
        let payload = encode(&seq, &quantized).unwrap();
        let back = decode(&payload, &quantized, &seq.symbols()[..1], seq.m(), seq.n()).unwrap();
        prop_assert_eq!(&back, &seq);

        let exact = CodecModel::Exact(CountTable::build(&seq, 1).unwrap());
        let payload = encode(&seq, &exact).unwrap();
        let back = decode(&payload, &exact, &seq.symbols()[..1], seq.m(), seq.n()).unwrap();
        prop_assert_eq!(&back, &seq);
    }

    #[test]
    fn containers_roundtrip_end_to_end(
        seq in arb_sequence(10, 300),
        mode in prop::sample::select(vec![Mode::Quantized, Mode::ExactTable]),
    ) {
        prop_assume!(seq.m() > 1);
        let container = compress(&seq, 1, 1.0, 0.5, mode).unwrap();
        let reparsed =
            entrolab::codec::CompressedContainer::from_bytes(&container.to_bytes()).unwrap();
        prop_assert_eq!(decompress(&reparsed).unwrap(), seq);
    }
}
