//! Text-only, group, and personal model inputs in both demographic formats.
//!
//! cargo run --example format_inputs

use std::path::Path;

use disagreement::io::{ingest, Strictness};
use disagreement::{
    build_group_input, build_personal_inputs, build_text_only_input, DemographicFormat,
};

fn main() -> disagreement::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/posts.jsonl");
    let dataset = ingest(&path, Strictness::Strict)?.dataset;
    let entry = &dataset.records[0];
    let profiles = entry.profiles()?;

    let text_only = build_text_only_input(&entry.record, &dataset.space)?;
    println!("text only\n  {}\n", text_only.input_text);

    for format in [DemographicFormat::Templated, DemographicFormat::Sentence] {
        println!("{format} / personal");
        for inst in build_personal_inputs(
            &entry.record,
            &dataset.space,
            profiles,
            &dataset.schema,
            format,
        )? {
            println!(
                "  [{}] {}",
                inst.annotator_id.as_deref().unwrap_or("-"),
                inst.input_text
            );
        }
        let group = build_group_input(
            &entry.record,
            &dataset.space,
            profiles,
            &dataset.schema,
            format,
        )?;
        println!("{format} / group\n  {}\n", group.input_text);
    }
    println!(
        "label shared by every instance: {}",
        text_only.label.continuous
    );
    Ok(())
}
