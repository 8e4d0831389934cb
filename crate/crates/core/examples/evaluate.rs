//! Held-out F1 and MSE for text-only, group, and personal inputs on a corpus
//! where disagreement depends on the annotators' politics.
//!
//! cargo run --release --example evaluate

use disagreement::evaluation::evaluate;
use disagreement::io::split;
use disagreement::synthetic::demographic_corpus;
use disagreement::*;

fn main() -> Result<()> {
    let dataset = demographic_corpus(400, 9);
    let format = DemographicFormat::Templated;
    let mut text_only = Vec::new();
    let mut group = Vec::new();
    let mut personal = Vec::new();
    for entry in &dataset.records {
        let profiles = entry.profiles()?;
        text_only.push(build_text_only_input(&entry.record, &dataset.space)?);
        group.push(build_group_input(
            &entry.record,
            &dataset.space,
            profiles,
            &dataset.schema,
            format,
        )?);
        personal.extend(build_personal_inputs(
            &entry.record,
            &dataset.space,
            profiles,
            &dataset.schema,
            format,
        )?);
    }
    let parts = split(
        dataset.records.iter().map(|r| r.record.text_id.as_str()),
        0.8,
        9,
    )?;
    let levels = achievable_levels(5, &dataset.space);

    for mode in [Mode::Continuous, Mode::Binary] {
        println!("{mode}");
        for (setup, instances) in [
            ("text-only", &text_only),
            ("group", &group),
            ("personal", &personal),
        ] {
            let (train_set, test_set) = parts.partition_instances(instances);
            let model = train(
                &train_set,
                &PredictorConfig {
                    mode,
                    seed: 9,
                    ..PredictorConfig::default()
                },
            )?;
            let predictions: Vec<f64> = test_set
                .iter()
                .map(|i| model.predict(&i.input_text))
                .collect();
            let labels: Vec<DisagreementLabel> = test_set.iter().map(|i| i.label).collect();
            let report = evaluate(&predictions, &labels, &levels, mode)?;
            println!(
                "  {setup:<10} F1 {:>6.2}  MSE {:.4}  n {}",
                report.f1 * 100.0,
                report.mse,
                report.n_instances
            );
        }
    }
    Ok(())
}
