//! Dataset and run-file parsing, validation and serialization.
//!
//! Datasets use the challenge's attribute names and may be stored either as a
//! JSON object keyed by id or as a JSON array of items. Run files are a JSON
//! array whose first element is a header:
//!
//! ```text
//! [
//! {"task":"task1","kind":"soft","name":"ensemble"},
//! {"id":"100001","value":{"YES":0.83,"NO":0.17}}
//! ]
//! ```
//!
//! Hard runs carry a list of category names in `value`.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use indexmap::IndexMap;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::taxonomy::{Category, HardAssignment, SoftAssignment, TaskId, FEASIBILITY_TOLERANCE};

/// Slack allowed on probabilities coming from external producers.
pub const INPUT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("item {id}: field `{field}`: {reason}")]
    SchemaViolation { id: String, field: String, reason: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("item {id}: invalid probability for {category}: {reason}")]
    InvalidProbability { id: String, category: String, reason: String },
    #[error("item {id}: unknown category `{category}`")]
    UnknownCategory { id: String, category: String },
    #[error("item {id}: invalid label set: {reason}")]
    InvalidLabelSet { id: String, reason: String },
    #[error("run mixes soft and hard predictions (item {0})")]
    MixedKinds(String),
    #[error("run is for {found}, expected {expected}")]
    TaskMismatch { expected: TaskId, found: TaskId },
    #[error("invalid run header: {0}")]
    InvalidHeader(String),
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Io { .. } => "io_failure",
            IngestError::MalformedJson(_) => "malformed_json",
            IngestError::SchemaViolation { .. } => "schema_violation",
            IngestError::DuplicateId(_) => "duplicate_id",
            IngestError::InvalidProbability { .. } => "invalid_probability",
            IngestError::UnknownCategory { .. } => "unknown_category",
            IngestError::InvalidLabelSet { .. } => "invalid_label_set",
            IngestError::MixedKinds(_) => "mixed_kinds",
            IngestError::TaskMismatch { .. } => "task_mismatch",
            IngestError::InvalidHeader(_) => "invalid_header",
        }
    }

    fn schema(id: &str, field: &str, reason: impl Into<String>) -> Self {
        IngestError::SchemaViolation {
            id: id.to_string(),
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

fn read_file(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), IngestError> {
    fs::write(path, text).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_json(text: &str) -> Result<Value, IngestError> {
    serde_json::from_str(text).map_err(|e| IngestError::MalformedJson(e.to_string()))
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// One annotator's vote on a single-choice task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vote {
    Label(Category),
    /// The "-" / "--" marker: the annotator judged the tweet not sexist.
    NoneVote,
    /// The annotator gave no label.
    Unknown,
}

impl Vote {
    pub fn as_str(&self) -> &'static str {
        match self {
            Vote::Label(c) => c.as_str(),
            Vote::NoneVote => "-",
            Vote::Unknown => "UNKNOWN",
        }
    }

    fn parse(s: &str) -> Option<Vote> {
        match s {
            "-" | "--" => Some(Vote::NoneVote),
            "UNKNOWN" => Some(Vote::Unknown),
            other => Category::from_str(other).ok().map(Vote::Label),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lang {
    En,
    Es,
}

impl Lang {
    pub fn as_str(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::Es => "es",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gender {
    F,
    M,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::F => "F",
            Gender::M => "M",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgeGroup {
    From18To22,
    From23To45,
    Over46,
}

impl AgeGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            AgeGroup::From18To22 => "18-22",
            AgeGroup::From23To45 => "23-45",
            AgeGroup::Over46 => "46+",
        }
    }
}

/// Per-annotator metadata and votes. Absent for test-split items.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotations {
    pub number_annotators: u32,
    pub annotators: Vec<String>,
    pub gender_annotators: Vec<Gender>,
    pub age_annotators: Vec<AgeGroup>,
    pub labels_task1: Vec<Vote>,
    pub labels_task2: Vec<Vote>,
    pub labels_task3: Vec<Vec<Vote>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedItem {
    pub id_exist: String,
    pub lang: Lang,
    pub tweet: String,
    pub split: String,
    pub annotations: Option<Annotations>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub items: Vec<AnnotatedItem>,
    pub source_path: String,
}

impl Dataset {
    pub fn get(&self, id: &str) -> Option<&AnnotatedItem> {
        self.items.iter().find(|it| it.id_exist == id)
    }

    /// Annotator count per item id, for items that carry annotations.
    pub fn annotator_counts(&self) -> IndexMap<String, u32> {
        self.items
            .iter()
            .filter_map(|it| Some((it.id_exist.clone(), it.annotations.as_ref()?.number_annotators)))
            .collect()
    }
}

const ANNOTATION_FIELDS: [&str; 7] = [
    "number_annotators",
    "annotators",
    "gender_annotators",
    "age_annotators",
    "labels_task1",
    "labels_task2",
    "labels_task3",
];

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, IngestError> {
    let path = path.as_ref();
    let text = read_file(path)?;
    parse_dataset(&text, &path.display().to_string())
}

pub fn parse_dataset(text: &str, source_path: &str) -> Result<Dataset, IngestError> {
    let root = parse_json(text)?;
    let entries: Vec<(Option<&str>, &Value)> = match &root {
        Value::Object(map) => map.iter().map(|(k, v)| (Some(k.as_str()), v)).collect(),
        Value::Array(items) => items.iter().map(|v| (None, v)).collect(),
        _ => {
            return Err(IngestError::MalformedJson(
                "dataset must be a JSON object keyed by id or a JSON array".into(),
            ))
        }
    };
    let mut seen = std::collections::HashSet::new();
    let mut items = Vec::with_capacity(entries.len());
    for (position, (key, value)) in entries.into_iter().enumerate() {
        let label = key.map(str::to_string).unwrap_or_else(|| format!("#{position}"));
        let item = parse_item(value, &label)?;
        if let Some(k) = key {
            if k != item.id_exist {
                return Err(IngestError::schema(k, "id_EXIST", format!("does not match key `{k}`")));
            }
        }
        if !seen.insert(item.id_exist.clone()) {
            return Err(IngestError::DuplicateId(item.id_exist));
        }
        items.push(item);
    }
    Ok(Dataset {
        items,
        source_path: source_path.to_string(),
    })
}

fn get_str<'a>(obj: &'a Map<String, Value>, id: &str, field: &str) -> Result<&'a str, IngestError> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(IngestError::schema(id, field, "expected a string")),
        None => Err(IngestError::schema(id, field, "missing")),
    }
}

fn get_str_list<'a>(obj: &'a Map<String, Value>, id: &str, field: &str) -> Result<Vec<&'a str>, IngestError> {
    let Some(Value::Array(xs)) = obj.get(field) else {
        return Err(IngestError::schema(id, field, "expected an array of strings"));
    };
    xs.iter()
        .map(|x| x.as_str().ok_or_else(|| IngestError::schema(id, field, "expected an array of strings")))
        .collect()
}

fn parse_item(value: &Value, label: &str) -> Result<AnnotatedItem, IngestError> {
    let Value::Object(obj) = value else {
        return Err(IngestError::schema(label, "<item>", "expected a JSON object"));
    };
    let id = match obj.get("id_EXIST") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return Err(IngestError::schema(label, "id_EXIST", "expected a non-empty string")),
        None => return Err(IngestError::schema(label, "id_EXIST", "missing")),
    };
    let lang = match get_str(obj, &id, "lang")? {
        "en" => Lang::En,
        "es" => Lang::Es,
        other => return Err(IngestError::schema(&id, "lang", format!("`{other}` is not en or es"))),
    };
    let tweet = get_str(obj, &id, "tweet")?.to_string();
    let split = get_str(obj, &id, "split")?.to_string();

    let present = ANNOTATION_FIELDS.iter().filter(|f| obj.contains_key(**f)).count();
    let annotations = if present == 0 {
        None
    } else {
        if let Some(missing) = ANNOTATION_FIELDS.iter().find(|f| !obj.contains_key(**f)) {
            return Err(IngestError::schema(&id, missing, "missing"));
        }
        Some(parse_annotations(obj, &id)?)
    };
    Ok(AnnotatedItem {
        id_exist: id,
        lang,
        tweet,
        split,
        annotations,
    })
}

fn parse_annotations(obj: &Map<String, Value>, id: &str) -> Result<Annotations, IngestError> {
    let n = match obj.get("number_annotators").and_then(Value::as_u64) {
        Some(n) if n >= 1 && n <= u64::from(u32::MAX) => n as u32,
        _ => return Err(IngestError::schema(id, "number_annotators", "expected a positive integer")),
    };
    let expect_len = |field: &str, len: usize| -> Result<(), IngestError> {
        if len != n as usize {
            Err(IngestError::schema(
                id,
                field,
                format!("has {len} entries but number_annotators is {n}"),
            ))
        } else {
            Ok(())
        }
    };

    let annotators: Vec<String> = get_str_list(obj, id, "annotators")?
        .into_iter()
        .map(str::to_string)
        .collect();
    expect_len("annotators", annotators.len())?;

    let gender_annotators = get_str_list(obj, id, "gender_annotators")?
        .into_iter()
        .map(|g| match g {
            "F" => Ok(Gender::F),
            "M" => Ok(Gender::M),
            other => Err(IngestError::schema(id, "gender_annotators", format!("`{other}` is not F or M"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    expect_len("gender_annotators", gender_annotators.len())?;

    let age_annotators = get_str_list(obj, id, "age_annotators")?
        .into_iter()
        .map(|a| match a {
            "18-22" => Ok(AgeGroup::From18To22),
            "23-45" => Ok(AgeGroup::From23To45),
            "46+" => Ok(AgeGroup::Over46),
            other => Err(IngestError::schema(id, "age_annotators", format!("unknown age group `{other}`"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    expect_len("age_annotators", age_annotators.len())?;

    let labels_task1 = get_str_list(obj, id, "labels_task1")?
        .into_iter()
        .map(|v| match Vote::parse(v) {
            Some(vote @ Vote::Label(Category::Yes | Category::No)) => Ok(vote),
            _ => Err(IngestError::UnknownCategory {
                id: id.to_string(),
                category: v.to_string(),
            }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    expect_len("labels_task1", labels_task1.len())?;

    let labels_task2 = get_str_list(obj, id, "labels_task2")?
        .into_iter()
        .map(|v| parse_fine_vote(v, TaskId::Task2, id))
        .collect::<Result<Vec<_>, _>>()?;
    expect_len("labels_task2", labels_task2.len())?;

    let Some(Value::Array(raw3)) = obj.get("labels_task3") else {
        return Err(IngestError::schema(id, "labels_task3", "expected an array of label arrays"));
    };
    let mut labels_task3 = Vec::with_capacity(raw3.len());
    for entry in raw3 {
        let Value::Array(xs) = entry else {
            return Err(IngestError::schema(id, "labels_task3", "expected an array of label arrays"));
        };
        let mut votes = Vec::with_capacity(xs.len());
        for x in xs {
            let s = x
                .as_str()
                .ok_or_else(|| IngestError::schema(id, "labels_task3", "labels must be strings"))?;
            let vote = parse_fine_vote(s, TaskId::Task3, id)?;
            if !votes.contains(&vote) {
                votes.push(vote);
            }
        }
        if votes.is_empty() {
            return Err(IngestError::InvalidLabelSet {
                id: id.to_string(),
                reason: "empty label list in labels_task3".into(),
            });
        }
        if votes.len() > 1 && votes.iter().any(|v| !matches!(v, Vote::Label(_))) {
            return Err(IngestError::InvalidLabelSet {
                id: id.to_string(),
                reason: "\"-\" and UNKNOWN must appear alone in an annotator's labels_task3 list".into(),
            });
        }
        labels_task3.push(votes);
    }
    expect_len("labels_task3", labels_task3.len())?;

    Ok(Annotations {
        number_annotators: n,
        annotators,
        gender_annotators,
        age_annotators,
        labels_task1,
        labels_task2,
        labels_task3,
    })
}

fn parse_fine_vote(s: &str, task: TaskId, id: &str) -> Result<Vote, IngestError> {
    match Vote::parse(s) {
        Some(Vote::Label(Category::No)) | None => {}
        Some(vote @ Vote::Label(c)) if task.index_of(c).is_some() => return Ok(vote),
        Some(Vote::Label(_)) => {}
        Some(vote) => return Ok(vote),
    }
    Err(IngestError::UnknownCategory {
        id: id.to_string(),
        category: s.to_string(),
    })
}

/// Serializes a dataset as a JSON object keyed by id, pretty-printed and
/// newline-terminated.
pub fn dataset_to_string(ds: &Dataset) -> String {
    let mut root = Map::new();
    for item in &ds.items {
        let mut obj = Map::new();
        obj.insert("id_EXIST".into(), Value::from(item.id_exist.as_str()));
        obj.insert("lang".into(), Value::from(item.lang.as_str()));
        obj.insert("tweet".into(), Value::from(item.tweet.as_str()));
        if let Some(a) = &item.annotations {
            let strs = |xs: Vec<&str>| Value::Array(xs.into_iter().map(Value::from).collect());
            obj.insert("number_annotators".into(), Value::from(a.number_annotators));
            obj.insert("annotators".into(), strs(a.annotators.iter().map(String::as_str).collect()));
            obj.insert(
                "gender_annotators".into(),
                strs(a.gender_annotators.iter().map(|g| g.as_str()).collect()),
            );
            obj.insert(
                "age_annotators".into(),
                strs(a.age_annotators.iter().map(|g| g.as_str()).collect()),
            );
            obj.insert("labels_task1".into(), strs(a.labels_task1.iter().map(Vote::as_str).collect()));
            obj.insert("labels_task2".into(), strs(a.labels_task2.iter().map(Vote::as_str).collect()));
            obj.insert(
                "labels_task3".into(),
                Value::Array(
                    a.labels_task3
                        .iter()
                        .map(|vs| strs(vs.iter().map(Vote::as_str).collect()))
                        .collect(),
                ),
            );
        }
        obj.insert("split".into(), Value::from(item.split.as_str()));
        root.insert(item.id_exist.clone(), Value::Object(obj));
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(root)).expect("dataset serializes");
    text.push('\n');
    text
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), IngestError> {
    write_file(path.as_ref(), &dataset_to_string(ds))
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunKind {
    Soft,
    Hard,
}

impl RunKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RunKind::Soft => "soft",
            RunKind::Hard => "hard",
        }
    }
}

impl FromStr for RunKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "soft" => Ok(RunKind::Soft),
            "hard" => Ok(RunKind::Hard),
            other => Err(format!("unknown run kind `{other}` (expected soft or hard)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    Soft(IndexMap<String, SoftAssignment>),
    Hard(IndexMap<String, HardAssignment>),
}

/// A named set of per-item predictions for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub name: String,
    pub task: TaskId,
    pub predictions: Predictions,
}

impl Run {
    pub fn soft(name: impl Into<String>, task: TaskId, items: IndexMap<String, SoftAssignment>) -> Self {
        Run {
            name: name.into(),
            task,
            predictions: Predictions::Soft(items),
        }
    }

    pub fn hard(name: impl Into<String>, task: TaskId, items: IndexMap<String, HardAssignment>) -> Self {
        Run {
            name: name.into(),
            task,
            predictions: Predictions::Hard(items),
        }
    }

    pub fn kind(&self) -> RunKind {
        match self.predictions {
            Predictions::Soft(_) => RunKind::Soft,
            Predictions::Hard(_) => RunKind::Hard,
        }
    }

    pub fn len(&self) -> usize {
        match &self.predictions {
            Predictions::Soft(m) => m.len(),
            Predictions::Hard(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> Box<dyn Iterator<Item = &str> + '_> {
        match &self.predictions {
            Predictions::Soft(m) => Box::new(m.keys().map(String::as_str)),
            Predictions::Hard(m) => Box::new(m.keys().map(String::as_str)),
        }
    }

    pub fn as_soft(&self) -> Option<&IndexMap<String, SoftAssignment>> {
        match &self.predictions {
            Predictions::Soft(m) => Some(m),
            Predictions::Hard(_) => None,
        }
    }

    pub fn as_hard(&self) -> Option<&IndexMap<String, HardAssignment>> {
        match &self.predictions {
            Predictions::Hard(m) => Some(m),
            Predictions::Soft(_) => None,
        }
    }
}

pub fn load_run(path: impl AsRef<Path>, task: TaskId) -> Result<Run, IngestError> {
    let path = path.as_ref();
    let text = read_file(path)?;
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    parse_run(&text, task, &fallback)
}

/// Parses run-file text. `fallback_name` is used when the file has no header.
pub fn parse_run(text: &str, task: TaskId, fallback_name: &str) -> Result<Run, IngestError> {
    let root = parse_json(text)?;
    let Value::Array(elements) = root else {
        return Err(IngestError::MalformedJson("run file must be a JSON array".into()));
    };
    let mut body = elements.as_slice();
    let mut name = fallback_name.to_string();
    let mut declared_kind = None;
    if let Some(Value::Object(first)) = body.first() {
        if !first.contains_key("id") {
            let (h_task, h_kind, h_name) = parse_header(first)?;
            if h_task != task {
                return Err(IngestError::TaskMismatch {
                    expected: task,
                    found: h_task,
                });
            }
            declared_kind = Some(h_kind);
            name = h_name;
            body = &body[1..];
        }
    }

    let mut soft = IndexMap::new();
    let mut hard = IndexMap::new();
    for (position, element) in body.iter().enumerate() {
        let Value::Object(obj) = element else {
            return Err(IngestError::schema(&format!("#{position}"), "<entry>", "expected an object"));
        };
        let id = match obj.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(IngestError::schema(&format!("#{position}"), "id", "missing or not a string")),
        };
        let kind = match obj.get("value") {
            Some(Value::Object(_)) => RunKind::Soft,
            Some(Value::Array(_)) => RunKind::Hard,
            _ => return Err(IngestError::schema(&id, "value", "expected a category map or a label list")),
        };
        match declared_kind {
            None => declared_kind = Some(kind),
            Some(k) if k != kind => return Err(IngestError::MixedKinds(id)),
            Some(_) => {}
        }
        if soft.contains_key(&id) || hard.contains_key(&id) {
            return Err(IngestError::DuplicateId(id));
        }
        match &obj["value"] {
            Value::Object(map) => {
                let a = parse_soft_value(map, task, &id)?;
                soft.insert(id, a);
            }
            Value::Array(labels) => {
                let h = parse_hard_value(labels, task, &id)?;
                hard.insert(id, h);
            }
            _ => unreachable!(),
        }
    }
    let predictions = match declared_kind {
        Some(RunKind::Soft) => Predictions::Soft(soft),
        Some(RunKind::Hard) => Predictions::Hard(hard),
        None => {
            return Err(IngestError::InvalidHeader(
                "cannot infer the kind of an empty run without a header".into(),
            ))
        }
    };
    Ok(Run {
        name,
        task,
        predictions,
    })
}

fn parse_header(obj: &Map<String, Value>) -> Result<(TaskId, RunKind, String), IngestError> {
    let text = |key: &str| {
        obj.get(key)
            .and_then(Value::as_str)
            .ok_or_else(|| IngestError::InvalidHeader(format!("missing string field `{key}`")))
    };
    let task = text("task")?
        .parse::<TaskId>()
        .map_err(|e| IngestError::InvalidHeader(e.to_string()))?;
    let kind = text("kind")?.parse::<RunKind>().map_err(IngestError::InvalidHeader)?;
    let name = text("name")?.to_string();
    Ok((task, kind, name))
}

fn parse_soft_value(map: &Map<String, Value>, task: TaskId, id: &str) -> Result<SoftAssignment, IngestError> {
    let mut values = vec![0.0; task.arity()];
    for (key, v) in map {
        let index = key
            .parse::<Category>()
            .ok()
            .and_then(|c| task.index_of(c))
            .ok_or_else(|| IngestError::UnknownCategory {
                id: id.to_string(),
                category: key.clone(),
            })?;
        let p = v.as_f64().ok_or_else(|| IngestError::InvalidProbability {
            id: id.to_string(),
            category: key.clone(),
            reason: "not a number".into(),
        })?;
        if !(-INPUT_TOLERANCE..=1.0 + INPUT_TOLERANCE).contains(&p) {
            return Err(IngestError::InvalidProbability {
                id: id.to_string(),
                category: key.clone(),
                reason: format!("{p} outside [0, 1]"),
            });
        }
        values[index] = p.clamp(0.0, 1.0);
    }
    if !task.is_multilabel() {
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > INPUT_TOLERANCE {
            return Err(IngestError::InvalidProbability {
                id: id.to_string(),
                category: "*".into(),
                reason: format!("probabilities sum to {sum}, expected 1"),
            });
        }
        if (sum - 1.0).abs() > FEASIBILITY_TOLERANCE {
            values.iter_mut().for_each(|v| *v /= sum);
        }
    }
    SoftAssignment::new(task, values).map_err(|e| IngestError::InvalidProbability {
        id: id.to_string(),
        category: "*".into(),
        reason: e.to_string(),
    })
}

fn parse_hard_value(labels: &[Value], task: TaskId, id: &str) -> Result<HardAssignment, IngestError> {
    let mut cats = Vec::with_capacity(labels.len());
    for l in labels {
        let s = l.as_str().ok_or_else(|| IngestError::InvalidLabelSet {
            id: id.to_string(),
            reason: "labels must be strings".into(),
        })?;
        let c = s
            .parse::<Category>()
            .ok()
            .filter(|&c| task.index_of(c).is_some())
            .ok_or_else(|| IngestError::UnknownCategory {
                id: id.to_string(),
                category: s.to_string(),
            })?;
        if cats.contains(&c) {
            return Err(IngestError::InvalidLabelSet {
                id: id.to_string(),
                reason: format!("{c} listed twice"),
            });
        }
        cats.push(c);
    }
    HardAssignment::new(task, &cats).map_err(|e| IngestError::InvalidLabelSet {
        id: id.to_string(),
        reason: e.to_string(),
    })
}

/// Serializes a run: header line, one prediction per line, newline-terminated.
/// Probabilities are written in the shortest form that parses back to the
/// same `f64`.
pub fn run_to_string(run: &Run) -> String {
    let mut lines = Vec::with_capacity(run.len() + 1);
    let header = serde_json::json!({
        "task": run.task.as_str(),
        "kind": run.kind().as_str(),
        "name": run.name,
    });
    lines.push(header.to_string());
    match &run.predictions {
        Predictions::Soft(items) => {
            for (id, a) in items {
                let value: Map<String, Value> = a
                    .iter()
                    .map(|(c, p)| (c.as_str().to_string(), Value::from(p)))
                    .collect();
                lines.push(serde_json::json!({ "id": id, "value": value }).to_string());
            }
        }
        Predictions::Hard(items) => {
            for (id, h) in items {
                let value: Vec<&str> = h.labels().map(Category::as_str).collect();
                lines.push(serde_json::json!({ "id": id, "value": value }).to_string());
            }
        }
    }
    format!("[\n{}\n]\n", lines.join(",\n"))
}

pub fn save_run(run: &Run, path: impl AsRef<Path>) -> Result<(), IngestError> {
    write_file(path.as_ref(), &run_to_string(run))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRAIN_ITEM: &str = r#"{
      "100001": {
        "id_EXIST": "100001", "lang": "es", "tweet": "texto",
        "number_annotators": 6,
        "annotators": ["A1","A2","A3","A4","A5","A6"],
        "gender_annotators": ["F","F","F","M","M","M"],
        "age_annotators": ["18-22","23-45","46+","46+","23-45","18-22"],
        "labels_task1": ["YES","YES","NO","YES","YES","YES"],
        "labels_task2": ["DIRECT","DIRECT","-","UNKNOWN","JUDGEMENTAL","REPORTED"],
        "labels_task3": [["OBJECTIFICATION"],["OBJECTIFICATION","SEXUAL-VIOLENCE"],["-"],["UNKNOWN"],["--"],["STEREOTYPING-DOMINANCE"]],
        "split": "TRAIN_ES"
      },
      "100002": {
        "id_EXIST": "100002", "lang": "en", "tweet": "text",
        "number_annotators": 6,
        "annotators": ["A1","A2","A3","A4","A5","A6"],
        "gender_annotators": ["F","F","F","M","M","M"],
        "age_annotators": ["18-22","23-45","46+","46+","23-45","18-22"],
        "labels_task1": ["NO","NO","NO","NO","NO","NO"],
        "labels_task2": ["-","-","-","-","-","-"],
        "labels_task3": [["-"],["-"],["-"],["-"],["-"],["-"]],
        "split": "TRAIN_EN"
      }
    }"#;

    #[test]
    fn loads_training_format() {
        let ds = parse_dataset(TRAIN_ITEM, "mem").unwrap();
        assert_eq!(ds.items.len(), 2);
        let a = ds.items[0].annotations.as_ref().unwrap();
        assert_eq!(a.number_annotators, 6);
        assert_eq!(a.labels_task2[2], Vote::NoneVote);
        assert_eq!(a.labels_task3[4], vec![Vote::NoneVote]);
        assert_eq!(a.labels_task2[3], Vote::Unknown);
    }

    #[test]
    fn length_mismatch_is_schema_violation() {
        let text = TRAIN_ITEM.replacen(r#"["YES","YES","NO","YES","YES","YES"]"#, r#"["YES","YES","NO","YES","YES"]"#, 1);
        match parse_dataset(&text, "mem") {
            Err(IngestError::SchemaViolation { id, field, .. }) => {
                assert_eq!(id, "100001");
                assert_eq!(field, "labels_task1");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn test_split_loads_without_annotations() {
        let text = r#"[{"id_EXIST":"400001","lang":"en","tweet":"t","split":"TEST_EN"}]"#;
        let ds = parse_dataset(text, "mem").unwrap();
        assert!(ds.items[0].annotations.is_none());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = r#"[{"id_EXIST":"1","lang":"en","tweet":"t","split":"TEST_EN"},
                       {"id_EXIST":"1","lang":"en","tweet":"u","split":"TEST_EN"}]"#;
        assert!(matches!(parse_dataset(text, "mem"), Err(IngestError::DuplicateId(id)) if id == "1"));
    }

    #[test]
    fn dataset_serialization_reloads() {
        let ds = parse_dataset(TRAIN_ITEM, "mem").unwrap();
        let again = parse_dataset(&dataset_to_string(&ds), "mem").unwrap();
        assert_eq!(ds.items, again.items);
    }

    #[test]
    fn soft_run_loads() {
        let text = r#"[{"id":"100001","value":{"YES":0.83,"NO":0.17}}]"#;
        let run = parse_run(text, TaskId::Task1, "r").unwrap();
        assert_eq!(run.kind(), RunKind::Soft);
        assert_eq!(run.name, "r");
        assert_eq!(run.as_soft().unwrap()["100001"].get(Category::Yes), Some(0.83));
    }

    #[test]
    fn simplex_violation_rejected() {
        let text = r#"[{"id":"1","value":{"YES":0.6,"NO":0.6}}]"#;
        assert!(matches!(
            parse_run(text, TaskId::Task1, "r"),
            Err(IngestError::InvalidProbability { .. })
        ));
    }

    #[test]
    fn small_simplex_drift_is_renormalized() {
        let text = r#"[{"id":"1","value":{"YES":0.7000004,"NO":0.3}}]"#;
        let run = parse_run(text, TaskId::Task1, "r").unwrap();
        let sum: f64 = run.as_soft().unwrap()["1"].values().iter().sum();
        assert!((sum - 1.0).abs() <= FEASIBILITY_TOLERANCE);
    }

    #[test]
    fn hard_task3_run_loads() {
        let text = r#"[{"task":"task3","kind":"hard","name":"h"},
                       {"id":"1","value":["OBJECTIFICATION","SEXUAL-VIOLENCE"]}]"#;
        let run = parse_run(text, TaskId::Task3, "x").unwrap();
        assert_eq!(run.kind(), RunKind::Hard);
        assert_eq!(run.name, "h");
    }

    #[test]
    fn mixed_kinds_and_unknown_categories() {
        let mixed = r#"[{"id":"1","value":{"YES":1.0}},{"id":"2","value":["YES"]}]"#;
        assert!(matches!(parse_run(mixed, TaskId::Task1, "r"), Err(IngestError::MixedKinds(_))));
        let unknown = r#"[{"id":"1","value":{"MAYBE":1.0}}]"#;
        assert!(matches!(
            parse_run(unknown, TaskId::Task1, "r"),
            Err(IngestError::UnknownCategory { .. })
        ));
        let wrong_task = r#"[{"task":"task2","kind":"soft","name":"r"}]"#;
        assert!(matches!(
            parse_run(wrong_task, TaskId::Task1, "r"),
            Err(IngestError::TaskMismatch { .. })
        ));
    }

    #[test]
    fn run_file_is_line_oriented_and_newline_terminated() {
        let mut items = IndexMap::new();
        items.insert("b".to_string(), SoftAssignment::new(TaskId::Task1, vec![1.0 / 3.0, 2.0 / 3.0]).unwrap());
        items.insert("a".to_string(), SoftAssignment::new(TaskId::Task1, vec![1.0, 0.0]).unwrap());
        let run = Run::soft("demo", TaskId::Task1, items);
        let text = run_to_string(&run);
        assert!(text.ends_with("]\n"));
        assert_eq!(text.lines().count(), 5);
        let again = parse_run(&text, TaskId::Task1, "x").unwrap();
        assert_eq!(again, run);
        assert_eq!(again.ids().collect::<Vec<_>>(), vec!["b", "a"]);
    }
}
