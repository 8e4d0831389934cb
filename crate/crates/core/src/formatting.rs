//! Model-ready inputs combining annotator demographics with the task text.
//!
//! Demographics render either as a colon template (`age: 22, gender: woman.`)
//! or as a sentence (`the annotator is a 36 years old white woman.`). A group
//! input stacks every annotator's rendering in vote order before the text; a
//! personal input carries a single annotator and therefore yields `N`
//! instances per record, all sharing the record's label.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationRecord, DisagreementLabel, LabelSpace};
use crate::error::{Error, Result};

/// One demographic attribute. `values: None` means free-form (e.g. age).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(default)]
    pub values: Option<Vec<String>>,
}

impl Attribute {
    pub fn free_form(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            values: None,
        }
    }

    pub fn enumerated<I, S>(name: impl Into<String>, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            name: name.into(),
            values: Some(values.into_iter().map(Into::into).collect()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct DemographicSchema {
    attributes: Vec<Attribute>,
}

impl DemographicSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let mut names = HashSet::new();
        for attr in &attributes {
            if attr.name.is_empty() {
                return Err(Error::Schema("empty attribute name".into()));
            }
            if !names.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate attribute `{}`",
                    attr.name
                )));
            }
            if let Some(values) = &attr.values {
                if values.len() < 2 {
                    return Err(Error::Schema(format!(
                        "attribute `{}` needs at least 2 allowed values",
                        attr.name
                    )));
                }
                let mut seen = HashSet::new();
                if let Some(dup) = values.iter().find(|v| !seen.insert(v.as_str())) {
                    return Err(Error::Schema(format!(
                        "attribute `{}` lists value `{dup}` twice",
                        attr.name
                    )));
                }
            }
        }
        Ok(Self { attributes })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    /// Schema without the named attribute.
    pub fn without(&self, name: &str) -> Self {
        Self {
            attributes: self
                .attributes
                .iter()
                .filter(|a| a.name != name)
                .cloned()
                .collect(),
        }
    }
}

impl<'de> Deserialize<'de> for DemographicSchema {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let attributes = Vec::<Attribute>::deserialize(deserializer)?;
        DemographicSchema::new(attributes).map_err(serde::de::Error::custom)
    }
}

/// Demographic attribute values of one annotator.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatorProfile {
    pub annotator_id: String,
    pub values: BTreeMap<String, String>,
}

impl AnnotatorProfile {
    pub fn new<I, K, V>(annotator_id: impl Into<String>, values: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Self {
            annotator_id: annotator_id.into(),
            values: values
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    pub fn get(&self, attribute: &str) -> Option<&str> {
        self.values.get(attribute).map(String::as_str)
    }

    pub fn validate(&self, schema: &DemographicSchema) -> Result<()> {
        for (key, value) in &self.values {
            let attr = schema.attribute(key).ok_or_else(|| {
                Error::Schema(format!(
                    "annotator `{}` has unknown attribute `{key}`",
                    self.annotator_id
                ))
            })?;
            if let Some(allowed) = &attr.values {
                if !allowed.iter().any(|v| v == value) {
                    return Err(Error::Schema(format!(
                        "annotator `{}` has value `{value}` not allowed for `{key}`",
                        self.annotator_id
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DemographicFormat {
    Templated,
    Sentence,
}

impl FromStr for DemographicFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "templated" => Ok(Self::Templated),
            "sentence" => Ok(Self::Sentence),
            other => Err(Error::Config(format!(
                "unknown demographic format `{other}`"
            ))),
        }
    }
}

impl fmt::Display for DemographicFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Templated => "templated",
            Self::Sentence => "sentence",
        })
    }
}

/// How an instance's input was assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "text-only")]
    TextOnly,
    #[serde(rename = "group")]
    Group,
    #[serde(rename = "personal")]
    Personal,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TextOnly => "text-only",
            Self::Group => "group",
            Self::Personal => "personal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormattedInstance {
    pub text_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator_id: Option<String>,
    pub origin: Origin,
    pub input_text: String,
    pub label: DisagreementLabel,
}

impl FormattedInstance {
    /// Key used to align external predictions with instances.
    pub fn key(&self) -> (String, String) {
        (
            self.text_id.clone(),
            self.annotator_id.clone().unwrap_or_default(),
        )
    }
}

/// `attr: value, attr: value.` in schema order; absent attributes are skipped.
pub fn format_templated(profile: &AnnotatorProfile, schema: &DemographicSchema) -> String {
    let pairs: Vec<String> = schema
        .attributes()
        .iter()
        .filter_map(|attr| {
            profile
                .get(&attr.name)
                .map(|value| format!("{}: {value}", attr.name.to_lowercase()))
        })
        .collect();
    if pairs.is_empty() {
        String::new()
    } else {
        format!("{}.", pairs.join(", "))
    }
}

const UNKNOWN_DEMOGRAPHICS: &str = "the annotator's demographics are unknown.";

fn is_age_slot(name: &str) -> bool {
    name == "age"
}

fn is_race_slot(name: &str) -> bool {
    name == "race" || name == "ethnicity"
}

fn is_gender_slot(name: &str) -> bool {
    name == "gender"
}

/// `the annotator is a {age} years old {race} {gender}.` with any attribute
/// lacking a slot appended as `, with {attribute} {value}`.
pub fn format_sentence(profile: &AnnotatorProfile, schema: &DemographicSchema) -> String {
    let mut age = None;
    let mut race = None;
    let mut gender = None;
    let mut extras = Vec::new();
    for attr in schema.attributes() {
        let Some(value) = profile.get(&attr.name) else {
            continue;
        };
        let name = attr.name.to_lowercase();
        if is_age_slot(&name) && age.is_none() {
            age = Some(value);
        } else if is_race_slot(&name) && race.is_none() {
            race = Some(value);
        } else if is_gender_slot(&name) && gender.is_none() {
            gender = Some(value);
        } else {
            extras.push(format!(", with {name} {value}"));
        }
    }
    if age.is_none() && race.is_none() && gender.is_none() && extras.is_empty() {
        return UNKNOWN_DEMOGRAPHICS.to_string();
    }

    let mut words = Vec::new();
    if let Some(age) = age {
        words.push(format!("{age} years old"));
    }
    if let Some(race) = race {
        words.push(race.to_string());
    }
    // A noun is needed to close the phrase when gender is absent.
    words.push(gender.unwrap_or("person").to_string());

    format!("the annotator is a {}{}.", words.join(" "), extras.concat())
}

pub fn format_profile(
    profile: &AnnotatorProfile,
    schema: &DemographicSchema,
    format: DemographicFormat,
) -> String {
    match format {
        DemographicFormat::Templated => format_templated(profile, schema),
        DemographicFormat::Sentence => format_sentence(profile, schema),
    }
}

fn join_with_text(prefixes: impl IntoIterator<Item = String>, text: &str) -> String {
    let mut parts: Vec<String> = prefixes.into_iter().filter(|p| !p.is_empty()).collect();
    parts.push(text.to_string());
    parts.join(" ")
}

fn check_alignment(record: &AnnotationRecord, profiles: &[AnnotatorProfile]) -> Result<()> {
    if profiles.len() != record.votes.len() {
        return Err(Error::Alignment {
            text_id: record.text_id.clone(),
            profiles: profiles.len(),
            votes: record.votes.len(),
        });
    }
    Ok(())
}

/// The record's text alone.
pub fn build_text_only_input(
    record: &AnnotationRecord,
    space: &LabelSpace,
) -> Result<FormattedInstance> {
    Ok(FormattedInstance {
        text_id: record.text_id.clone(),
        annotator_id: None,
        origin: Origin::TextOnly,
        input_text: record.text.clone(),
        label: record.disagreement(space)?,
    })
}

/// All annotators' demographics, in vote order, followed by the text.
pub fn build_group_input(
    record: &AnnotationRecord,
    space: &LabelSpace,
    profiles: &[AnnotatorProfile],
    schema: &DemographicSchema,
    format: DemographicFormat,
) -> Result<FormattedInstance> {
    check_alignment(record, profiles)?;
    let label = record.disagreement(space)?;
    Ok(FormattedInstance {
        text_id: record.text_id.clone(),
        annotator_id: None,
        origin: Origin::Group,
        input_text: join_with_text(
            profiles.iter().map(|p| format_profile(p, schema, format)),
            &record.text,
        ),
        label,
    })
}

/// One instance per annotator: that annotator's demographics then the text.
pub fn build_personal_inputs(
    record: &AnnotationRecord,
    space: &LabelSpace,
    profiles: &[AnnotatorProfile],
    schema: &DemographicSchema,
    format: DemographicFormat,
) -> Result<Vec<FormattedInstance>> {
    check_alignment(record, profiles)?;
    let label = record.disagreement(space)?;
    Ok(profiles
        .iter()
        .zip(&record.annotator_ids)
        .map(|(profile, annotator_id)| FormattedInstance {
            text_id: record.text_id.clone(),
            annotator_id: Some(annotator_id.clone()),
            origin: Origin::Personal,
            input_text: personal_input_text(profile, schema, format, &record.text),
            label,
        })
        .collect())
}

pub fn personal_input_text(
    profile: &AnnotatorProfile,
    schema: &DemographicSchema,
    format: DemographicFormat,
    text: &str,
) -> String {
    join_with_text([format_profile(profile, schema, format)], text)
}
