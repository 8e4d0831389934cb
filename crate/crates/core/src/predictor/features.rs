//! Hashed sparse features for the baseline predictor.
//!
//! Input text is lowercased and split into word n-grams and character
//! n-grams. When demographic features are enabled, leading colon-template
//! blocks (`attr: value, attr: value.`) are additionally parsed into one-hot
//! `attr=value` indicators, each crossed with the unigrams of the remaining
//! text so a linear model can express attribute-by-token interactions.
//! Every feature string is hashed with 64-bit FNV-1a into `feature_dim`
//! buckets, counted, and the vector is L2-normalized.

use std::hash::Hasher;

use fnv::{FnvHashMap, FnvHasher};

use super::PredictorConfig;

/// Sorted `(bucket, value)` pairs with unique buckets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn from_counts(counts: FnvHashMap<u32, f64>) -> Self {
        let mut entries: Vec<(u32, f64)> = counts.into_iter().filter(|(_, v)| *v != 0.0).collect();
        entries.sort_unstable_by_key(|(i, _)| *i);
        Self { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, v)| dense[i as usize] * v)
            .sum()
    }

    pub fn get(&self, index: u32) -> f64 {
        self.entries
            .binary_search_by_key(&index, |(i, _)| *i)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    fn normalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            for (_, v) in &mut self.entries {
                *v /= norm;
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Namespace {
    Word = 1,
    Char = 2,
    Demographic = 3,
    Cross = 4,
}

fn bucket(namespace: Namespace, parts: &[&str], dim: usize) -> u32 {
    let mut hasher = FnvHasher::default();
    hasher.write_u8(namespace as u8);
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            hasher.write_u8(0x1f);
        }
        hasher.write(part.as_bytes());
    }
    (hasher.finish() % dim as u64) as u32
}

fn word_tokens(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| c.is_ascii_punctuation() && c != '+' && c != '-'))
        .filter(|w| !w.is_empty())
        .collect()
}

fn is_attribute_key(key: &str) -> bool {
    let mut chars = key.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && key.len() <= 32
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

fn parse_block(block: &str) -> Option<Vec<(&str, &str)>> {
    block
        .split(", ")
        .map(|pair| {
            let (key, value) = pair.split_once(": ")?;
            let value = value.trim();
            (is_attribute_key(key) && !value.is_empty() && !value.contains(':'))
                .then_some((key, value))
        })
        .collect()
}

/// Splits leading colon-template demographic blocks off `text`.
///
/// Returns the parsed `(attribute, value)` pairs and the remaining text.
/// Parsing stops at the first segment that is not a well-formed block.
pub fn split_demographic_prefix(text: &str) -> (Vec<(&str, &str)>, &str) {
    let mut pairs = Vec::new();
    let mut rest = text.trim_start();
    while let Some(dot) = rest.find('.') {
        let Some(block) = parse_block(&rest[..dot]) else {
            break;
        };
        pairs.extend(block);
        rest = rest[dot + 1..].trim_start();
    }
    (pairs, rest)
}

pub fn featurize(input_text: &str, config: &PredictorConfig) -> SparseVector {
    let dim = config.feature_dim;
    let lower = input_text.to_lowercase();
    let mut counts: FnvHashMap<u32, f64> = FnvHashMap::default();
    let mut add = |index: u32| *counts.entry(index).or_insert(0.0) += 1.0;

    if let Some((lo, hi)) = config.word_ngrams {
        let tokens = word_tokens(&lower);
        for n in lo..=hi {
            for gram in tokens.windows(n) {
                add(bucket(Namespace::Word, gram, dim));
            }
        }
    }

    if let Some((lo, hi)) = config.char_ngrams {
        let chars: Vec<char> = lower.chars().collect();
        let mut buf = String::new();
        for n in lo..=hi {
            for gram in chars.windows(n) {
                buf.clear();
                buf.extend(gram);
                add(bucket(Namespace::Char, &[&buf], dim));
            }
        }
    }

    if config.demographic_features {
        let (pairs, rest) = split_demographic_prefix(&lower);
        if !pairs.is_empty() {
            let mut text_words = word_tokens(rest);
            text_words.sort_unstable();
            text_words.dedup();
            for &(key, value) in &pairs {
                add(bucket(Namespace::Demographic, &[key, value], dim));
                for word in &text_words {
                    add(bucket(Namespace::Cross, &[key, value, word], dim));
                }
            }
        }
    }

    let mut vector = SparseVector::from_counts(counts);
    vector.normalize();
    vector
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words_only(lo: usize, hi: usize) -> PredictorConfig {
        PredictorConfig {
            word_ngrams: Some((lo, hi)),
            char_ngrams: None,
            demographic_features: false,
            ..PredictorConfig::default()
        }
    }

    #[test]
    fn deterministic() {
        let config = PredictorConfig::default();
        let a = featurize("The annotator is a 36 years old white woman.", &config);
        let b = featurize("The annotator is a 36 years old white woman.", &config);
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn counts_then_normalizes() {
        let config = words_only(1, 1);
        let single = featurize("a", &config);
        let double = featurize("a a", &config);
        let support = |v: &SparseVector| v.entries().iter().map(|(i, _)| *i).collect::<Vec<_>>();
        assert_eq!(support(&single), support(&double));
        assert_eq!(single.len(), 1);
        // both normalize to a unit vector on one bucket
        assert_eq!(single.entries()[0].1, 1.0);
        assert_eq!(double.entries()[0].1, 1.0);

        let bigram = words_only(1, 2);
        let ab = featurize("a a b", &bigram);
        // unigrams a(2) b(1), bigrams "a a"(1) "a b"(1): norm sqrt(7)
        let a_bucket = bucket(Namespace::Word, &["a"], bigram.feature_dim);
        assert!((ab.get(a_bucket) - 2.0 / 7f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn short_text_has_no_char_grams() {
        let config = PredictorConfig {
            word_ngrams: None,
            char_ngrams: Some((3, 5)),
            demographic_features: false,
            ..PredictorConfig::default()
        };
        assert!(featurize("ab", &config).is_empty());
        // "abc" has exactly one 3-gram and nothing longer
        assert_eq!(featurize("abc", &config).len(), 1);
    }

    #[test]
    fn lowercases() {
        let config = PredictorConfig::default();
        assert_eq!(
            featurize("Hello World", &config),
            featurize("hello world", &config)
        );
    }

    #[test]
    fn parses_stacked_templates() {
        let (pairs, rest) = split_demographic_prefix(
            "age: 22, politics: liberal. gender: man. what is this: a test. yes",
        );
        assert_eq!(
            pairs,
            vec![("age", "22"), ("politics", "liberal"), ("gender", "man")]
        );
        assert_eq!(rest, "what is this: a test. yes");

        let (pairs, rest) = split_demographic_prefix("plain text. more");
        assert!(pairs.is_empty());
        assert_eq!(rest, "plain text. more");
    }

    #[test]
    fn demographic_crosses_only_with_prefix() {
        let on = PredictorConfig {
            word_ngrams: None,
            char_ngrams: None,
            demographic_features: true,
            ..PredictorConfig::default()
        };
        assert!(featurize("just some text", &on).is_empty());
        // one-hot + 2 crosses for a single pair and two distinct words
        assert_eq!(featurize("gender: man. hello hello world", &on).len(), 3);
    }
}
