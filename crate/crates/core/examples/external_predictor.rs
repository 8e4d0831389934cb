//! Evaluates predictions produced outside this crate. Instances are written
//! as JSON lines, an external scorer fills in `text_id,annotator_id,prediction`
//! rows, and the rows are read back as a predictor.
//!
//! cargo run --example external_predictor

use disagreement::evaluation::evaluate;
use disagreement::io::{write_instances, ExternalPredictions};
use disagreement::synthetic::{marker_corpus, MARKER};
use disagreement::*;

fn main() -> Result<()> {
    let dataset = marker_corpus(50, 8);
    let instances = dataset
        .records
        .iter()
        .map(|r| build_text_only_input(&r.record, &dataset.space))
        .collect::<Result<Vec<_>>>()?;

    let mut jsonl = Vec::new();
    write_instances(&instances, &mut jsonl)?;
    println!(
        "{} instance lines, first:\n  {}",
        instances.len(),
        String::from_utf8_lossy(&jsonl).lines().next().unwrap_or("")
    );

    // stand-in for an external model
    let mut csv = String::from("text_id,annotator_id,prediction\n");
    for inst in &instances {
        let score = if inst.input_text.contains(MARKER) {
            0.55
        } else {
            0.05
        };
        csv.push_str(&format!("{},,{score}\n", inst.text_id));
    }

    let external = ExternalPredictions::from_reader(&instances, csv.as_bytes(), Mode::Continuous)?;
    let predictions = instances
        .iter()
        .map(|i| external.predict_instance(i))
        .collect::<Result<Vec<f64>>>()?;
    let labels: Vec<DisagreementLabel> = instances.iter().map(|i| i.label).collect();
    let report = evaluate(
        &predictions,
        &labels,
        &achievable_levels(5, &dataset.space),
        Mode::Continuous,
    )?;
    print!("{}", report.to_key_value());

    let short = csv.lines().take(5).collect::<Vec<_>>().join("\n");
    match ExternalPredictions::from_reader(&instances, short.as_bytes(), Mode::Continuous) {
        Ok(_) => println!("unexpectedly accepted a partial file"),
        Err(e) => println!("partial file rejected: {e}"),
    }
    Ok(())
}
