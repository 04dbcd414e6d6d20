use envmap_core::genome::{decode, Genome, Shape};
use envmap_core::rng::{stream, Stream};
use proptest::prelude::*;

#[test]
fn fuzzed_genomes_decode_to_valid_creatures() {
    let mut rng = stream(5, Stream::Bootstrap, 0, 0);
    for _ in 0..20_000 {
        let g = Genome::random(&mut rng);
        let c = decode(&g);
        c.check_invariants().unwrap();
        assert!(matches!(c.root().module.shape, Shape::Rectangle { .. }));
        assert!(c.len() <= 17);
        for (i, n) in c.nodes.iter().enumerate() {
            if n.module.shape.is_circle() {
                assert_eq!(c.children(i).count(), 0);
            }
        }
    }
}

proptest! {
    #[test]
    fn decode_depends_only_on_the_genome(bytes in proptest::array::uniform32(any::<u8>()), tail in any::<u32>()) {
        let mut hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
        hex.push_str(&format!("{tail:08x}"));
        let g: Genome = hex.parse().unwrap();
        prop_assert_eq!(decode(&g), decode(&g.clone()));
        prop_assert_eq!(g.to_hex(), hex);
    }

    #[test]
    fn mutation_preserves_length(seed in any::<u64>(), p in 0.0..1.0f64) {
        let mut rng = stream(seed, Stream::Offspring, 0, 0);
        let g = Genome::random(&mut rng);
        let m = g.mutate(&mut rng, p);
        prop_assert_eq!(m.len(), 288);
        prop_assert_eq!(m.to_hex().len(), 72);
    }
}
