use evoform_core::codec::{decode, encode, random_genome, BitString, CodecConfig, Genome};
use evoform_core::SearchSpace;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn bits(depth: u32) -> impl Strategy<Value = (CodecConfig, BitString)> {
    let config = CodecConfig::new(depth).unwrap();
    prop::collection::vec(any::<bool>(), config.total_bits())
        .prop_map(move |b| (config, BitString::from_bits(b)))
}

proptest! {
    #![proptest_config(ProptestConfig {
        rng_seed: RngSeed::Fixed(0xc0dec),
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn decode_encode_is_identity((config, b) in (1u32..=6).prop_flat_map(bits)) {
        let g = decode(&b, config).unwrap();
        prop_assert_eq!(encode(&g), b);
    }

    #[test]
    fn hex_round_trip((config, b) in (1u32..=6).prop_flat_map(bits)) {
        let hex = b.to_hex();
        prop_assert_eq!(hex.len(), config.hex_digits());
        prop_assert_eq!(BitString::from_hex(&hex, config.total_bits()).unwrap(), b.clone());
        let g = Genome::from_hex(&hex, config).unwrap();
        prop_assert_eq!(g.to_bits(), b);
    }

    #[test]
    fn random_genome_is_pure(seed in any::<u64>(), c in 1u8..8, v in 1u8..16) {
        let space = SearchSpace::new(
            evoform_core::ChannelMask::from_bits(c),
            evoform_core::VariableMask::from_bits(v),
        ).unwrap();
        let config = CodecConfig::default();
        let a = random_genome(config, seed, &space);
        prop_assert_eq!(a.clone(), random_genome(config, seed, &space));
        prop_assert_eq!(a.space(), space);
    }
}
