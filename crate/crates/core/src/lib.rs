//! Annotation disagreement toolkit.
//!
//! - [`annotation`]: agreement rates and binary/continuous disagreement labels
//! - [`formatting`]: demographic-prefixed model inputs (group / personal)
//! - [`predictor`]: predictor contract and the hashed-linear baseline
//! - [`evaluation`]: MSE, hard F1, quantization, label distributions
//! - [`simulation`]: artificial annotator grids and per-text summaries
//! - [`applications`]: annotator-count recommendation and pool flagging
//! - [`io`]: dataset files, splits, instance files, external predictions
//! - [`synthetic`]: seeded corpora with known disagreement structure
//! - [`pipeline`]: the steps behind the `disagree` command line

pub mod annotation;
pub mod applications;
pub mod error;
pub mod evaluation;
pub mod formatting;
pub mod io;
pub mod pipeline;
pub mod plot;
pub mod predictor;
pub mod simulation;
pub mod synthetic;

pub use annotation::{
    achievable_levels, agreement_rates, disagreement_label, AgreementProfile, AnnotationRecord,
    DisagreementLabel, LabelSpace, Rate,
};
pub use error::{Error, Result};
pub use formatting::{
    build_group_input, build_personal_inputs, build_text_only_input, format_sentence,
    format_templated, AnnotatorProfile, Attribute, DemographicFormat, DemographicSchema,
    FormattedInstance, Origin,
};
pub use predictor::{train, DisagreementPredictor, Mode, PredictorConfig, PredictorModel};
