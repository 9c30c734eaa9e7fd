use proptest::prelude::*;
use rapl::grammar::{check_grammar, induce};

fn sequences() -> impl Strategy<Value = (usize, Vec<u32>)> {
    (1usize..=18).prop_flat_map(|alphabet| {
        (
            Just(alphabet),
            prop::collection::vec(0..alphabet as u32, 1..=512),
        )
    })
}

/// Low-entropy inputs: long runs and repeated blocks stress rule reuse and
/// the overlapping-triple bookkeeping far more than uniform noise does.
fn repetitive() -> impl Strategy<Value = (usize, Vec<u32>)> {
    (1usize..=3, prop::collection::vec((0u32..3, 1usize..9), 1..80)).prop_map(
        |(alphabet, runs)| {
            let mut seq = Vec::new();
            for (sym, len) in runs {
                seq.extend(std::iter::repeat_n(sym % alphabet as u32, len));
            }
            (alphabet, seq)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn induced_grammars_are_valid((alphabet, seq) in sequences()) {
        let g = induce(&seq, alphabet).unwrap();
        let report = check_grammar(&g);
        prop_assert!(report.is_valid(), "{:?}\n{}", report.violations, g.dump());
        prop_assert_eq!(g.expand_start().unwrap(), seq.clone());
        prop_assert!(g.size() <= seq.len());
    }

    #[test]
    fn repetitive_grammars_are_valid((alphabet, seq) in repetitive()) {
        let g = induce(&seq, alphabet).unwrap();
        let report = check_grammar(&g);
        prop_assert!(report.is_valid(), "{:?}\n{}", report.violations, g.dump());
        prop_assert!(g.size() <= seq.len());
    }

    #[test]
    fn induce_is_a_pure_function((alphabet, seq) in sequences()) {
        prop_assert_eq!(induce(&seq, alphabet).unwrap(), induce(&seq, alphabet).unwrap());
    }
}

#[test]
fn long_periodic_input_compresses() {
    let seq: Vec<u32> = (0..100_000).map(|i| [1, 1, 2][i % 3]).collect();
    let g = induce(&seq, 3).unwrap();
    assert!(check_grammar(&g).is_valid());
    assert!(g.size() < 200, "size {}", g.size());
}
