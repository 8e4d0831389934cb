//! Pairs sampled texts with 140 artificial annotators, summarizes the spread
//! of predictions per text, and writes a scatter plot.
//!
//! cargo run --release --example simulate_annotators

use disagreement::plot::scatter_svg;
use disagreement::simulation::{
    batch_simulate, classify_source, default_grid, GridKind, SimulationTarget, SourceThresholds,
};
use disagreement::synthetic::demographic_corpus;
use disagreement::*;

fn main() -> Result<()> {
    let dataset = demographic_corpus(300, 3);
    let format = DemographicFormat::Templated;
    let mut instances = Vec::new();
    let mut corpus = Vec::new();
    for entry in &dataset.records {
        instances.extend(build_personal_inputs(
            &entry.record,
            &dataset.space,
            entry.profiles()?,
            &dataset.schema,
            format,
        )?);
        corpus.push(SimulationTarget {
            text_id: entry.record.text_id.clone(),
            text: entry.record.text.clone(),
            original: entry.record.disagreement(&dataset.space)?,
        });
    }
    let model = train(
        &instances,
        &PredictorConfig {
            seed: 3,
            ..PredictorConfig::default()
        },
    )?;

    let grid = default_grid(GridKind::GenderEthnicityAge);
    println!(
        "{} artificial annotators, first: {:?}",
        grid.len(),
        grid.profiles()[0].values
    );
    let summaries = batch_simulate(&corpus, 20, 3, &grid, &model, format)?;
    for s in &summaries {
        println!(
            "{}  original {:<4} mean {:.3}  variance {:.5}  {}",
            s.text_id,
            s.original_label.continuous.to_string(),
            s.mean,
            s.variance,
            classify_source(s, SourceThresholds::default())
        );
    }

    let path = std::env::temp_dir().join("disagreement-example-scatter.svg");
    std::fs::write(&path, scatter_svg(&summaries, "140 artificial annotators"))?;
    println!("scatter written to {}", path.display());
    Ok(())
}
