//! Turns predicted disagreement into an annotator count per text and flags
//! texts whose predictions swing with annotator demographics.
//!
//! cargo run --release --example recommend_annotators

use disagreement::applications::{
    flag_for_diverse_pool, recommend_count, AssignmentPolicy, CountBand,
};
use disagreement::simulation::{batch_simulate, default_grid, GridKind, SimulationTarget};
use disagreement::synthetic::{demographic_corpus, MARKER};
use disagreement::*;

fn main() -> Result<()> {
    let dataset = demographic_corpus(300, 5);
    let format = DemographicFormat::Templated;
    let mut instances = Vec::new();
    for entry in &dataset.records {
        instances.extend(build_personal_inputs(
            &entry.record,
            &dataset.space,
            entry.profiles()?,
            &dataset.schema,
            format,
        )?);
    }
    let model = train(
        &instances,
        &PredictorConfig {
            seed: 5,
            ..PredictorConfig::default()
        },
    )?;

    let policy = AssignmentPolicy::new(
        vec![
            CountBand {
                upper_bound: 0.1,
                annotator_count: 1,
            },
            CountBand {
                upper_bound: 0.25,
                annotator_count: 3,
            },
            CountBand {
                upper_bound: 1.0,
                annotator_count: 7,
            },
        ],
        0.005,
    )?;
    let new_texts = [
        "the weather in the park was good today".to_string(),
        format!("the new policy is {MARKER} funny"),
        format!("{MARKER} said the city council"),
    ];
    let targets: Vec<SimulationTarget> = new_texts
        .iter()
        .enumerate()
        .map(|(i, text)| SimulationTarget {
            text_id: format!("new{i}"),
            text: text.clone(),
            original: DisagreementLabel::from_continuous(Rate::new(0, 1)),
        })
        .collect();

    let grid = default_grid(GridKind::GenderEthnicity);
    let grid_with_politics =
        disagreement::simulation::SimulationGrid::from_schema(DemographicSchema::new(
            grid.schema()
                .attributes()
                .iter()
                .cloned()
                .chain([Attribute::enumerated(
                    "politics",
                    ["liberal", "conservative"],
                )])
                .collect(),
        )?)?;
    for grid in [&grid, &grid_with_politics] {
        println!("grid of {}", grid.len());
        for s in batch_simulate(&targets, targets.len(), 0, grid, &model, format)? {
            println!(
                "  {}  mean {:.3}  variance {:.4}  annotators {}  diverse pool {}",
                s.text_id,
                s.mean,
                s.variance,
                recommend_count(s.mean, &policy),
                flag_for_diverse_pool(&s, &policy)
            );
        }
    }
    Ok(())
}
