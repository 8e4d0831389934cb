//! Trains the hashed-linear baseline on a synthetic corpus, saves it, loads
//! it back, and predicts on unseen texts.
//!
//! cargo run --release --example train_predictor

use disagreement::io::split;
use disagreement::synthetic::{marker_corpus, MARKER};
use disagreement::{build_text_only_input, train, PredictorConfig, PredictorModel};

fn main() -> disagreement::Result<()> {
    let dataset = marker_corpus(1000, 42);
    let instances = dataset
        .records
        .iter()
        .map(|r| build_text_only_input(&r.record, &dataset.space))
        .collect::<disagreement::Result<Vec<_>>>()?;
    let parts = split(instances.iter().map(|i| i.text_id.as_str()), 0.8, 42)?;
    let (train_set, _) = parts.partition_instances(&instances);

    let model = train(
        &train_set,
        &PredictorConfig {
            seed: 42,
            ..PredictorConfig::default()
        },
    )?;
    println!("initial loss {:.5}", model.initial_loss.unwrap_or(f64::NAN));
    for (epoch, loss) in model.training_log.iter().enumerate() {
        println!("epoch {:>2}  loss {loss:.6}", epoch + 1);
    }

    let path = std::env::temp_dir().join("disagreement-example-model.json");
    model.save(&path)?;
    let loaded = PredictorModel::load(&path)?;
    assert_eq!(loaded, model);

    for text in [
        format!("the council said the park {MARKER} needs work"),
        "the council said the park needs work".to_string(),
    ] {
        println!("{:.3}  {text}", loaded.predict(&text));
    }
    Ok(())
}
