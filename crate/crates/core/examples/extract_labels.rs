//! Agreement rates and disagreement labels for the bundled sample posts.
//!
//! cargo run --example extract_labels

use std::path::Path;

use disagreement::evaluation::dataset_stats;
use disagreement::io::{ingest, Strictness};
use disagreement::{achievable_levels, agreement_rates, disagreement_label};

fn main() -> disagreement::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/posts.jsonl");
    let dataset = ingest(&path, Strictness::Strict)?.dataset;

    let mut labels = Vec::new();
    for entry in &dataset.records {
        let profile = agreement_rates(&entry.record, &dataset.space)?;
        let label = disagreement_label(&profile);
        let rates: Vec<String> = profile.rates.iter().map(|r| r.to_string()).collect();
        println!(
            "{}  rates [{}]  majority {}  binary {}  continuous {}",
            entry.record.text_id,
            rates.join(", "),
            dataset.space.class_names()[profile.majority_index],
            label.binary,
            label.continuous
        );
        labels.push(label);
    }

    let levels = achievable_levels(3, &dataset.space);
    let stats = dataset_stats(&labels, &levels)?;
    let shown: Vec<String> = levels.iter().map(|l| l.to_string()).collect();
    println!("\nlevels with three annotators: {}", shown.join(", "));
    for (level, count) in &stats.counts {
        println!("  {level:>4}: {}", "#".repeat(*count));
    }
    println!("mean {:.4}, variance {:.4}", stats.mean, stats.variance);
    Ok(())
}
