//! Seeded synthetic datasets with known disagreement structure.
//!
//! - [`marker_corpus`]: disagreement is caused by a marker token in the text.
//! - [`demographic_corpus`]: disagreement appears only when a politically
//!   homogeneous pool of one leaning reads a text containing the marker, so
//!   the label depends on who annotates as well as on what is annotated.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::annotation::{AnnotationRecord, LabelSpace};
use crate::formatting::{AnnotatorProfile, Attribute, DemographicSchema};
use crate::io::{Dataset, DatasetRecord};

pub const MARKER: &str = "controversially";

#[rustfmt::skip]
const VOCABULARY: [&str; 48] = [
    "the", "movie", "policy", "city", "council", "people", "said", "should", "never", "always",
    "think", "about", "school", "family", "holiday", "dinner", "friend", "work", "money", "game",
    "team", "music", "weather", "news", "story", "post", "comment", "reply", "online", "today",
    "yesterday", "morning", "night", "really", "quite", "maybe", "new", "old", "good", "bad",
    "funny", "long", "short", "street", "park", "phone", "book", "coffee",
];

/// Five votes over three classes: unanimous, or split 2/2/1 (disagreement 0.6).
fn votes(disagree: bool) -> Vec<usize> {
    if disagree {
        vec![0, 0, 1, 1, 2]
    } else {
        vec![0; 5]
    }
}

fn sentence(rng: &mut ChaCha8Rng, marker: bool) -> String {
    let len = rng.gen_range(6..=12);
    let mut words: Vec<&str> = (0..len)
        .map(|_| *VOCABULARY.choose(rng).expect("vocabulary is non-empty"))
        .collect();
    if marker {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, MARKER);
    }
    words.join(" ")
}

pub fn label_space() -> LabelSpace {
    LabelSpace::new(["offensive", "unsure", "not offensive"]).expect("three distinct classes")
}

pub fn demographic_schema() -> DemographicSchema {
    DemographicSchema::new(vec![
        Attribute::free_form("age"),
        Attribute::enumerated("politics", ["liberal", "conservative"]),
        Attribute::enumerated("race", ["white", "black", "asian", "hispanic"]),
        Attribute::enumerated("gender", ["woman", "man"]),
    ])
    .expect("synthetic schema is valid")
}

/// `n_texts` records; texts containing [`MARKER`] (about half) carry
/// continuous disagreement 0.6, all others 0.
pub fn marker_corpus(n_texts: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n_texts)
        .map(|i| {
            let marker = rng.gen_bool(0.5);
            DatasetRecord {
                record: AnnotationRecord {
                    text_id: format!("m{i:05}"),
                    text: sentence(&mut rng, marker),
                    votes: votes(marker),
                    annotator_ids: (0..5).map(|j| format!("w{}", (i * 5 + j) % 97)).collect(),
                },
                profiles: None,
            }
        })
        .collect();
    Dataset {
        space: label_space(),
        schema: DemographicSchema::empty(),
        records,
    }
}

/// `n_texts` records annotated by five-person pools that share a political
/// leaning and differ in age, race, and gender. Three quarters of the texts
/// contain [`MARKER`]; a liberal pool splits 2/2/1 on those (disagreement
/// 0.6), every other combination is unanimous.
pub fn demographic_corpus(n_texts: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let races = ["white", "black", "asian", "hispanic"];
    let genders = ["woman", "man"];
    let records = (0..n_texts)
        .map(|i| {
            let marker = rng.gen_bool(0.75);
            let liberal = rng.gen_bool(0.5);
            let politics = if liberal { "liberal" } else { "conservative" };
            let text = sentence(&mut rng, marker);
            let annotator_ids: Vec<String> = (0..5).map(|j| format!("d{i:05}-{j}")).collect();
            let profiles = annotator_ids
                .iter()
                .map(|id| {
                    AnnotatorProfile::new(
                        id.clone(),
                        [
                            ("age", rng.gen_range(18..75).to_string()),
                            ("politics", politics.to_string()),
                            ("race", races.choose(&mut rng).unwrap().to_string()),
                            ("gender", genders.choose(&mut rng).unwrap().to_string()),
                        ],
                    )
                })
                .collect();
            DatasetRecord {
                record: AnnotationRecord {
                    text_id: format!("d{i:05}"),
                    text,
                    votes: votes(marker && liberal),
                    annotator_ids,
                },
                profiles: Some(profiles),
            }
        })
        .collect();
    Dataset {
        space: label_space(),
        schema: demographic_schema(),
        records,
    }
}
