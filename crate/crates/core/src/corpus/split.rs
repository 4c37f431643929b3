use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::{Corpus, CorpusError};
use crate::rng::named_stream;

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

/// Splits `corpus` into (train, test) with per-class proportions preserved.
///
/// Each class contributes `round(n_c * test_fraction)` samples to the test
/// side, clamped to `[1, n_c - 1]`. Selection is a seeded shuffle of the
/// class members; both halves keep the original corpus order.
pub fn stratified_split(corpus: &Corpus, test_fraction: f64, seed: u64) -> Result<(Corpus, Corpus), CorpusError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CorpusError::InvalidArgument(format!("test_fraction must lie in (0, 1), got {test_fraction}")));
    }
    let mut test_ids: HashSet<&str> = HashSet::new();
    for class in 0..2u8 {
        let mut members: Vec<&str> =
            corpus.samples.iter().filter(|s| s.label == class).map(|s| s.id.as_str()).collect();
        if members.len() < 2 {
            return Err(CorpusError::TooFewSamples { class, count: members.len() });
        }
        let n = members.len();
        let n_test = ((n as f64) * test_fraction).round().clamp(1.0, (n - 1) as f64) as usize;
        let mut rng = named_stream(seed, &format!("split/class{class}"));
        members.shuffle(&mut rng);
        test_ids.extend(members.into_iter().take(n_test));
    }
    let (test, train): (Vec<_>, Vec<_>) =
        corpus.samples.iter().cloned().partition(|s| test_ids.contains(s.id.as_str()));
    Ok((Corpus::new(format!("{}-train", corpus.name), train)?, Corpus::new(format!("{}-test", corpus.name), test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Sample;
    use proptest::prelude::*;

    fn corpus(pos: usize, neg: usize) -> Corpus {
        let samples = (0..pos + neg).map(|i| Sample::new(format!("s{i}"), "text", u8::from(i < pos))).collect();
        Corpus::new("c", samples).unwrap()
    }

    fn ids(c: &Corpus) -> Vec<String> {
        c.samples.iter().map(|s| s.id.clone()).collect()
    }

    #[test]
    fn balanced_eighty_twenty() {
        let (train, test) = stratified_split(&corpus(50, 50), 0.2, 1).unwrap();
        assert_eq!(train.len(), 80);
        assert_eq!(test.len(), 20);
        assert_eq!(test.stats().label_counts, [10, 10]);
    }

    #[test]
    fn same_seed_same_split() {
        let c = corpus(30, 70);
        let a = stratified_split(&c, 0.2, 9).unwrap();
        let b = stratified_split(&c, 0.2, 9).unwrap();
        assert_eq!(ids(&a.1), ids(&b.1));
        assert_eq!(ids(&a.0), ids(&b.0));
        let other = stratified_split(&c, 0.2, 10).unwrap();
        assert_ne!(ids(&a.1), ids(&other.1));
    }

    #[test]
    fn minority_class_proportion() {
        let (_, test) = stratified_split(&corpus(7, 93), 0.2, 3).unwrap();
        let pos = test.stats().label_counts[1];
        assert!((1..=2).contains(&pos), "positives in test: {pos}");
    }

    #[test]
    fn rejects_tiny_class_and_bad_fraction() {
        assert!(matches!(stratified_split(&corpus(1, 10), 0.2, 0), Err(CorpusError::TooFewSamples { class: 1, .. })));
        assert!(stratified_split(&corpus(5, 5), 0.0, 0).is_err());
        assert!(stratified_split(&corpus(5, 5), 1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn partition_is_exact(pos in 2usize..40, neg in 2usize..40, frac in 0.05f64..0.95, seed in any::<u64>()) {
            let c = corpus(pos, neg);
            let (train, test) = stratified_split(&c, frac, seed).unwrap();
            let mut all: Vec<String> = ids(&train).into_iter().chain(ids(&test)).collect();
            all.sort();
            let mut expected = ids(&c);
            expected.sort();
            prop_assert_eq!(all, expected);
            for (class, n) in [(1usize, pos), (0, neg)] {
                let got = test.stats().label_counts[class] as f64;
                prop_assert!((got - n as f64 * frac).abs() <= 1.0);
            }
        }
    }
}
