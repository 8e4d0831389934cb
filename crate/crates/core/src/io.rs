//! Dataset files, splits, instance files, and externally produced predictions.
//!
//! A dataset file is line-delimited JSON. The first line is a header:
//!
//! ```text
//! {"format_version":1,"class_names":["yes","maybe","no"],
//!  "schema":[{"name":"age"},{"name":"gender","values":["woman","man"]}]}
//! ```
//!
//! Every following line is one record; votes may be class names or indices
//! and `profiles`, when present, aligns with `annotators`:
//!
//! ```text
//! {"text_id":"p1","text":"...","votes":["yes","no","yes"],
//!  "annotators":["a1","a2","a3"],"profiles":[{"age":"22"},{},{"gender":"man"}]}
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationRecord, LabelSpace};
use crate::error::{Error, Result};
use crate::formatting::{AnnotatorProfile, DemographicSchema, FormattedInstance};
use crate::predictor::{DisagreementPredictor, Mode};

pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    class_names: Vec<String>,
    #[serde(default)]
    schema: DemographicSchema,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum Vote {
    Index(usize),
    Name(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    text_id: String,
    text: String,
    votes: Vec<Vote>,
    annotators: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    profiles: Option<Vec<BTreeMap<String, String>>>,
}

/// A record with the demographic profiles of its annotators, if known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRecord {
    pub record: AnnotationRecord,
    pub profiles: Option<Vec<AnnotatorProfile>>,
}

impl DatasetRecord {
    pub fn profiles(&self) -> Result<&[AnnotatorProfile]> {
        self.profiles
            .as_deref()
            .ok_or_else(|| Error::MissingDemographics {
                text_id: self.record.text_id.clone(),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub space: LabelSpace,
    pub schema: DemographicSchema,
    pub records: Vec<DatasetRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    /// Abort on the first malformed line.
    Strict,
    /// Skip malformed lines and report them.
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub dataset: Dataset,
    /// `(line number, message)` for every skipped line.
    pub skipped: Vec<(usize, String)>,
}

fn convert_record(
    line: RecordLine,
    space: &LabelSpace,
    schema: &DemographicSchema,
) -> Result<DatasetRecord> {
    let text_id = line.text_id;
    let malformed = |reason: String| Error::MalformedRecord {
        text_id: text_id.clone(),
        reason,
    };
    let votes = line
        .votes
        .iter()
        .map(|vote| match vote {
            Vote::Index(i) => Ok(*i),
            Vote::Name(name) => space
                .index_of(name)
                .ok_or_else(|| malformed(format!("unknown class name `{name}`"))),
        })
        .collect::<Result<Vec<usize>>>()?;
    let record = AnnotationRecord {
        text_id: text_id.clone(),
        text: line.text,
        votes,
        annotator_ids: line.annotators,
    };
    record.validate(space)?;

    let profiles = match line.profiles {
        None => None,
        Some(maps) => {
            if maps.len() != record.annotator_ids.len() {
                return Err(Error::Alignment {
                    text_id,
                    profiles: maps.len(),
                    votes: record.votes.len(),
                });
            }
            let profiles: Vec<AnnotatorProfile> = maps
                .into_iter()
                .zip(&record.annotator_ids)
                .map(|(values, id)| AnnotatorProfile {
                    annotator_id: id.clone(),
                    values,
                })
                .collect();
            for profile in &profiles {
                profile
                    .validate(schema)
                    .map_err(|e| malformed(e.to_string()))?;
            }
            Some(profiles)
        }
    };
    Ok(DatasetRecord { record, profiles })
}

pub fn ingest_reader<R: BufRead>(reader: R, strictness: Strictness) -> Result<Ingested> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));

    let (header_line, header) = match lines.next() {
        None => return Err(Error::EmptyDataset),
        Some((n, line)) => (n, line?),
    };
    let header: Header = serde_json::from_str(&header).map_err(|e| Error::Parse {
        line: header_line,
        message: format!("invalid header: {e}"),
    })?;
    if header.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::Parse {
            line: header_line,
            message: format!("unsupported format_version {}", header.format_version),
        });
    }
    let space = LabelSpace::new(header.class_names).map_err(|e| Error::Parse {
        line: header_line,
        message: e.to_string(),
    })?;
    let schema = header.schema;

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut seen_ids = HashSet::new();
    for (number, line) in lines {
        let line = line?;
        let parsed = serde_json::from_str::<RecordLine>(&line)
            .map_err(Error::from)
            .and_then(|raw| convert_record(raw, &space, &schema))
            .and_then(|rec| {
                if seen_ids.insert(rec.record.text_id.clone()) {
                    Ok(rec)
                } else {
                    Err(Error::MalformedRecord {
                        text_id: rec.record.text_id,
                        reason: "duplicate text_id".into(),
                    })
                }
            });
        match parsed {
            Ok(rec) => records.push(rec),
            Err(e) => match strictness {
                Strictness::Strict => {
                    return Err(Error::Parse {
                        line: number,
                        message: e.to_string(),
                    })
                }
                Strictness::Lenient => skipped.push((number, e.to_string())),
            },
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Ingested {
        dataset: Dataset {
            space,
            schema,
            records,
        },
        skipped,
    })
}

pub fn ingest(path: &Path, strictness: Strictness) -> Result<Ingested> {
    ingest_reader(BufReader::new(File::open(path)?), strictness)
}

/// Writes `dataset` in the line-delimited format; votes as class names.
pub fn write_dataset<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut out = BufWriter::new(writer);
    let header = Header {
        format_version: DATASET_FORMAT_VERSION,
        class_names: dataset.space.class_names().to_vec(),
        schema: dataset.schema.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for rec in &dataset.records {
        let line = RecordLine {
            text_id: rec.record.text_id.clone(),
            text: rec.record.text.clone(),
            votes: rec
                .record
                .votes
                .iter()
                .map(|&v| Vote::Name(dataset.space.class_names()[v].clone()))
                .collect(),
            annotators: rec.record.annotator_ids.clone(),
            profiles: rec
                .profiles
                .as_ref()
                .map(|ps| ps.iter().map(|p| p.values.clone()).collect()),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Train/test partition of text ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Seeded split over distinct text ids: every instance of a text lands on the
/// same side.
pub fn split<'a, I>(text_ids: I, ratio: f64, seed: u64) -> Result<Split>
where
    I: IntoIterator<Item = &'a str>,
{
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!(
            "split ratio {ratio} must lie in (0, 1)"
        )));
    }
    let mut ids: Vec<String> = text_ids.into_iter().map(str::to_string).collect();
    ids.sort();
    ids.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let n_train = (ratio * ids.len() as f64).round() as usize;
    let test = ids.split_off(n_train);
    let mut train = ids;
    train.sort();
    let mut test = test;
    test.sort();
    Ok(Split { train, test })
}

impl Split {
    pub fn partition<'a, T, F>(&self, items: &'a [T], text_id: F) -> (Vec<&'a T>, Vec<&'a T>)
    where
        F: Fn(&T) -> &str,
    {
        let train: HashSet<&str> = self.train.iter().map(String::as_str).collect();
        items.iter().partition(|item| train.contains(text_id(item)))
    }

    pub fn partition_instances(
        &self,
        instances: &[FormattedInstance],
    ) -> (Vec<FormattedInstance>, Vec<FormattedInstance>) {
        let (train, test) = self.partition(instances, |i| i.text_id.as_str());
        (
            train.into_iter().cloned().collect(),
            test.into_iter().cloned().collect(),
        )
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut rows: Vec<(&str, &str)> = self
            .train
            .iter()
            .map(|id| (id.as_str(), "train"))
            .chain(self.test.iter().map(|id| (id.as_str(), "test")))
            .collect();
        rows.sort();
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["text_id", "partition"])?;
        for (id, part) in rows {
            csv.write_record([id, part])?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut split = Split {
            train: Vec::new(),
            test: Vec::new(),
        };
        for (i, row) in csv::Reader::from_reader(reader).records().enumerate() {
            let row = row?;
            let line = i + 2;
            match (row.get(0), row.get(1)) {
                (Some(id), Some("train")) => split.train.push(id.to_string()),
                (Some(id), Some("test")) => split.test.push(id.to_string()),
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: "expected `text_id,train|test`".into(),
                    })
                }
            }
        }
        split.train.sort();
        split.test.sort();
        Ok(split)
    }
}

pub fn write_instances<W: Write>(instances: &[FormattedInstance], writer: W) -> Result<()> {
    let mut out = BufWriter::new(writer);
    for inst in instances {
        serde_json::to_writer(&mut out, inst)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_instances<R: BufRead>(reader: R) -> Result<Vec<FormattedInstance>> {
    let mut instances = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: FormattedInstance = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if inst.input_text.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: "empty input_text".into(),
            });
        }
        instances.push(inst);
    }
    Ok(instances)
}

pub fn read_instances_file(path: &Path) -> Result<Vec<FormattedInstance>> {
    read_instances(BufReader::new(File::open(path)?))
}

/// Predictions made elsewhere, keyed by `(text_id, annotator_id)`; the
/// annotator id is empty for text-only and group instances.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalPredictions {
    mode: Mode,
    scores: HashMap<(String, String), f64>,
}

#[derive(Debug, Deserialize)]
struct PredictionRow {
    text_id: String,
    #[serde(default)]
    annotator_id: Option<String>,
    prediction: f64,
}

impl ExternalPredictions {
    /// Reads a `text_id,annotator_id,prediction` CSV and checks it covers
    /// `instances` exactly once each, with no extra keys.
    pub fn from_reader<R: Read>(
        instances: &[FormattedInstance],
        predictions: R,
        mode: Mode,
    ) -> Result<Self> {
        let mut expected = HashSet::new();
        for inst in instances {
            if !expected.insert(inst.key()) {
                return Err(Error::Bridge(format!(
                    "duplicate instance key ({}, {})",
                    inst.text_id,
                    inst.annotator_id.as_deref().unwrap_or("")
                )));
            }
        }
        let mut scores = HashMap::new();
        for row in csv::Reader::from_reader(predictions).deserialize::<PredictionRow>() {
            let row = row?;
            let key = (row.text_id, row.annotator_id.unwrap_or_default());
            if !row.prediction.is_finite() {
                return Err(Error::Bridge(format!("non-finite prediction for {key:?}")));
            }
            if !expected.contains(&key) {
                return Err(Error::Bridge(format!("prediction for unknown key {key:?}")));
            }
            if scores
                .insert(key.clone(), row.prediction.clamp(0.0, 1.0))
                .is_some()
            {
                return Err(Error::Bridge(format!("duplicate prediction for {key:?}")));
            }
        }
        if let Some(missing) = expected.iter().find(|k| !scores.contains_key(*k)) {
            return Err(Error::Bridge(format!("no prediction for {missing:?}")));
        }
        Ok(Self { mode, scores })
    }

    pub fn load(instances_path: &Path, predictions_path: &Path, mode: Mode) -> Result<Self> {
        let instances = read_instances_file(instances_path)?;
        Self::from_reader(&instances, File::open(predictions_path)?, mode)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl DisagreementPredictor for ExternalPredictions {
    fn mode(&self) -> Mode {
        self.mode
    }

    fn predict_instance(&self, instance: &FormattedInstance) -> Result<f64> {
        self.scores.get(&instance.key()).copied().ok_or_else(|| {
            Error::Bridge(format!(
                "no prediction for ({}, {})",
                instance.text_id,
                instance.annotator_id.as_deref().unwrap_or("")
            ))
        })
    }
}

/// Writes `text_id,annotator_id,prediction` rows, the format
/// [`ExternalPredictions`] reads.
pub fn write_predictions_csv<W: Write>(
    instances: &[FormattedInstance],
    predictions: &[f64],
    writer: W,
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["text_id", "annotator_id", "prediction"])?;
    for (inst, p) in instances.iter().zip(predictions) {
        csv.write_record([
            inst.text_id.as_str(),
            inst.annotator_id.as_deref().unwrap_or(""),
            &p.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SBIC_LIKE: &str = r#"{"format_version":1,"class_names":["yes","maybe","no"],"schema":[{"name":"age"},{"name":"gender","values":["woman","man"]}]}
{"text_id":"p1","text":"first post","votes":["yes","no","yes"],"annotators":["a1","a2","a3"],"profiles":[{"age":"22","gender":"woman"},{"gender":"man"},{}]}
{"text_id":"p2","text":"second post","votes":[2,2,2],"annotators":["a1","a2","a4"]}
"#;

    #[test]
    fn parses_three_vote_records() {
        let ingested = ingest_reader(SBIC_LIKE.as_bytes(), Strictness::Strict).unwrap();
        let ds = &ingested.dataset;
        assert_eq!(ds.space.class_count(), 3);
        assert_eq!(ds.records.len(), 2);
        assert_eq!(ds.records[0].record.votes, vec![0, 2, 0]);
        assert_eq!(ds.records[0].profiles().unwrap()[1].annotator_id, "a2");
        let err = ds.records[1].profiles().unwrap_err();
        assert!(matches!(err, Error::MissingDemographics { ref text_id } if text_id == "p2"));
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(
            ingest_reader("".as_bytes(), Strictness::Strict),
            Err(Error::EmptyDataset)
        ));
        let header_only = SBIC_LIKE.lines().next().unwrap();
        assert!(matches!(
            ingest_reader(header_only.as_bytes(), Strictness::Strict),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn strict_aborts_lenient_skips() {
        let bad = format!(
            "{SBIC_LIKE}{}\n{}\n{}\n",
            r#"{"text_id":"p3","text":"x","votes":["perhaps"],"annotators":["a1"]}"#,
            r#"{"text_id":"p4","text":"x","votes":["yes","no"],"annotators":["a1"]}"#,
            r#"{"text_id":"p5","text":"x","votes":["yes"],"annotators":["a1"],"profiles":[{"gender":"robot"}]}"#,
        );
        let err = ingest_reader(bad.as_bytes(), Strictness::Strict).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        assert!(err.to_string().contains("perhaps"));

        let ok = ingest_reader(bad.as_bytes(), Strictness::Lenient).unwrap();
        assert_eq!(ok.dataset.records.len(), 2);
        let lines: Vec<usize> = ok.skipped.iter().map(|(l, _)| *l).collect();
        assert_eq!(lines, vec![4, 5, 6]);
    }

    #[test]
    fn duplicate_text_ids_rejected() {
        let dup = format!(
            "{SBIC_LIKE}{}\n",
            r#"{"text_id":"p1","text":"again","votes":["yes"],"annotators":["a9"]}"#
        );
        assert!(ingest_reader(dup.as_bytes(), Strictness::Strict).is_err());
    }

    #[test]
    fn round_trip() {
        let ds = ingest_reader(SBIC_LIKE.as_bytes(), Strictness::Strict)
            .unwrap()
            .dataset;
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        let back = ingest_reader(buf.as_slice(), Strictness::Strict)
            .unwrap()
            .dataset;
        assert_eq!(back, ds);
    }

    #[test]
    fn split_examples() {
        let ids: Vec<String> = (0..10).map(|i| format!("t{i}")).collect();
        let s = split(ids.iter().map(String::as_str), 0.8, 3).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
        assert!(s.train.iter().all(|id| !s.test.contains(id)));
        assert_eq!(s, split(ids.iter().map(String::as_str), 0.8, 3).unwrap());
        assert!(split(ids.iter().map(String::as_str), 1.0, 3).is_err());
        assert!(split(ids.iter().map(String::as_str), 0.0, 3).is_err());

        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(Split::read_csv(buf.as_slice()).unwrap(), s);
    }
}
