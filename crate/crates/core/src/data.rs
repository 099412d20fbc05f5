//! Domain types and loaders for claims and source-document corpora.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::normalize;

/// Binary verdict space. Six-way ratings are collapsed at ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    True,
    False,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::True => f.write_str("True"),
            Label::False => f.write_str("False"),
        }
    }
}

/// Collapses a raw rating into the binary label space.
///
/// The six fact-checking ratings split as {pants-fire, false, barely-true} to
/// `False` and {half-true, mostly-true, true} to `True`. Matching ignores case
/// and treats `_` and spaces like `-`.
pub fn collapse_label(raw: &str) -> Option<Label> {
    let key: String = raw
        .trim()
        .to_lowercase()
        .chars()
        .map(|c| if c == '_' || c == ' ' { '-' } else { c })
        .collect();
    match key.as_str() {
        "pants-fire" | "pants-on-fire" | "false" | "barely-true" => Some(Label::False),
        "half-true" | "mostly-true" | "true" => Some(Label::True),
        _ => None,
    }
}

/// One row of the raw-to-binary label table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMapping {
    pub raw_label: &'static str,
    pub binary_label: Label,
}

pub const LABEL_MAPPINGS: [LabelMapping; 6] = [
    LabelMapping { raw_label: "pants-fire", binary_label: Label::False },
    LabelMapping { raw_label: "false", binary_label: Label::False },
    LabelMapping { raw_label: "barely-true", binary_label: Label::False },
    LabelMapping { raw_label: "half-true", binary_label: Label::True },
    LabelMapping { raw_label: "mostly-true", binary_label: Label::True },
    LabelMapping { raw_label: "true", binary_label: Label::True },
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    #[serde(rename = "claim")]
    pub text: String,
    pub label: Option<Label>,
    pub speaker: Option<String>,
    #[serde(rename = "domain")]
    pub domain_tag: Option<String>,
}

impl Claim {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Claim {
            id: id.into(),
            text: text.into(),
            label: None,
            speaker: None,
            domain_tag: None,
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_speaker(mut self, speaker: impl Into<String>) -> Self {
        self.speaker = Some(speaker.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Scholarly,
    News,
    Web,
    #[default]
    Unknown,
}

impl FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "scholarly" => Ok(SourceKind::Scholarly),
            "news" => Ok(SourceKind::News),
            "web" => Ok(SourceKind::Web),
            "unknown" | "" => Ok(SourceKind::Unknown),
            other => Err(format!("unknown source_kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub doc_id: String,
    pub text: String,
    #[serde(default)]
    pub source_kind: SourceKind,
    pub speaker: Option<String>,
}

/// A single segmented sentence with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentenceUnit {
    pub doc_id: String,
    pub sent_index: usize,
    pub text: String,
    pub speaker: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    #[serde(rename = "false")]
    pub false_count: usize,
    #[serde(rename = "true")]
    pub true_count: usize,
    pub unlabeled: usize,
}

impl LabelCounts {
    pub fn total(&self) -> usize {
        self.false_count + self.true_count + self.unlabeled
    }
}

pub fn label_counts(claims: &[Claim]) -> LabelCounts {
    let mut counts = LabelCounts::default();
    for claim in claims {
        match claim.label {
            Some(Label::False) => counts.false_count += 1,
            Some(Label::True) => counts.true_count += 1,
            None => counts.unlabeled += 1,
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimFormat {
    Jsonl,
    Tsv,
}

impl ClaimFormat {
    /// Guesses the format from the file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("tsv") => ClaimFormat::Tsv,
            _ => ClaimFormat::Jsonl,
        }
    }
}

impl FromStr for ClaimFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "jsonl" | "json" => Ok(ClaimFormat::Jsonl),
            "tsv" => Ok(ClaimFormat::Tsv),
            other => Err(format!("unknown claim format {other:?}")),
        }
    }
}

#[derive(Deserialize)]
struct RawClaim {
    id: String,
    claim: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    speaker: Option<String>,
    #[serde(default)]
    domain: Option<String>,
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn non_empty(value: Option<String>) -> Option<String> {
    value.filter(|s| !s.trim().is_empty())
}

/// Loads claims, collapsing raw ratings to binary labels.
pub fn load_claims(path: &Path, format: ClaimFormat) -> Result<Vec<Claim>> {
    let content = read_file(path)?;
    let raw = match format {
        ClaimFormat::Jsonl => parse_claims_jsonl(path, &content)?,
        ClaimFormat::Tsv => parse_claims_tsv(path, &content)?,
    };

    let mut seen = HashSet::new();
    let mut claims = Vec::with_capacity(raw.len());
    for (line, record) in raw {
        if normalize(&record.claim).is_empty() {
            return Err(Error::parse(path, line, "claim text is empty"));
        }
        if record.id.trim().is_empty() {
            return Err(Error::parse(path, line, "claim id is empty"));
        }
        let label = match non_empty(record.label) {
            None => None,
            Some(raw_label) => Some(collapse_label(&raw_label).ok_or_else(|| {
                Error::UnknownLabel {
                    path: path.to_path_buf(),
                    line,
                    label: raw_label.clone(),
                }
            })?),
        };
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line,
                id: record.id,
            });
        }
        claims.push(Claim {
            id: record.id,
            text: record.claim,
            label,
            speaker: non_empty(record.speaker),
            domain_tag: non_empty(record.domain),
        });
    }
    Ok(claims)
}

fn parse_claims_jsonl(path: &Path, content: &str) -> Result<Vec<(usize, RawClaim)>> {
    let mut out = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: RawClaim = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        out.push((idx + 1, record));
    }
    Ok(out)
}

const TSV_COLUMNS: [&str; 4] = ["id", "label", "claim", "speaker"];

fn parse_claims_tsv(path: &Path, content: &str) -> Result<Vec<(usize, RawClaim)>> {
    let mut lines = content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((header_idx, header)) = lines.next() else {
        return Ok(Vec::new());
    };
    let columns: Vec<String> = header.split('\t').map(|c| c.trim().to_lowercase()).collect();
    let expected_prefix = &TSV_COLUMNS[..columns.len().min(TSV_COLUMNS.len())];
    if columns.len() < 3 || columns.len() > 4 || columns.iter().map(String::as_str).ne(expected_prefix.iter().copied()) {
        return Err(Error::parse(
            path,
            header_idx + 1,
            format!("expected header columns {:?}, found {:?}", TSV_COLUMNS, columns),
        ));
    }

    let mut out = Vec::new();
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 || fields.len() > columns.len() {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("expected {} tab-separated fields, found {}", columns.len(), fields.len()),
            ));
        }
        out.push((
            idx + 1,
            RawClaim {
                id: fields[0].trim().to_string(),
                label: Some(fields[1].trim().to_string()),
                claim: fields[2].to_string(),
                speaker: fields.get(3).map(|s| s.trim().to_string()),
                domain: None,
            },
        ));
    }
    Ok(out)
}

/// Writes claims as JSONL with binary labels.
pub fn write_claims(path: &Path, claims: &[Claim]) -> Result<()> {
    write_jsonl(path, claims)
}

#[derive(Deserialize)]
struct RawDocument {
    doc_id: Option<String>,
    text: Option<String>,
    #[serde(default)]
    source_kind: Option<String>,
    #[serde(default)]
    speaker: Option<String>,
}

pub fn load_corpus(path: &Path) -> Result<Vec<SourceDocument>> {
    let content = read_file(path)?;
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocument =
            serde_json::from_str(line).map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        let doc_id = non_empty(raw.doc_id)
            .ok_or_else(|| Error::parse(path, line_no, "missing field `doc_id`"))?;
        let text = non_empty(raw.text)
            .ok_or_else(|| Error::parse(path, line_no, "missing field `text`"))?;
        let source_kind = match raw.source_kind {
            Some(kind) => kind
                .parse()
                .map_err(|e: String| Error::parse(path, line_no, e))?,
            None => SourceKind::Unknown,
        };
        if !seen.insert(doc_id.clone()) {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line: line_no,
                id: doc_id,
            });
        }
        docs.push(SourceDocument {
            doc_id,
            text,
            source_kind,
            speaker: non_empty(raw.speaker),
        });
    }
    Ok(docs)
}

pub fn write_corpus(path: &Path, docs: &[SourceDocument]) -> Result<()> {
    write_jsonl(path, docs)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).expect("in-memory serialization");
        buf.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let content = read_file(path)?;
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, line)| {
            serde_json::from_str(line).map_err(|e| Error::parse(path, idx + 1, e.to_string()))
        })
        .collect()
}

/// Abbreviations whose trailing period never ends a sentence. Compared
/// case-insensitively against the word preceding the period.
const ABBREVIATIONS: &[&str] = &[
    "dr.", "mr.", "mrs.", "ms.", "prof.", "st.", "sr.", "jr.", "u.s.", "u.k.", "e.g.", "i.e.",
    "vs.", "inc.", "ltd.", "co.", "corp.", "fig.", "no.", "gen.", "gov.", "sen.", "rep.",
    "approx.", "dept.", "univ.", "jan.", "feb.", "mar.", "apr.", "aug.", "sept.", "oct.",
    "nov.", "dec.",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | '”' | '’' | ')' | ']')
}

fn is_opening(c: char) -> bool {
    matches!(c, '"' | '\'' | '“' | '‘' | '(' | '[')
}

fn ends_with_abbreviation(before: &str) -> bool {
    let mut words = before.split_whitespace().rev();
    let Some(last) = words.next() else {
        return false;
    };
    let last = last.trim_start_matches(is_opening).to_lowercase();
    if ABBREVIATIONS.contains(&last.as_str()) {
        return true;
    }
    last == "al." && words.next().is_some_and(|w| w.eq_ignore_ascii_case("et"))
}

/// Splits a document into sentences.
///
/// A boundary is a run of `.`, `!` or `?` (plus closing quotes or brackets)
/// followed by whitespace and an uppercase letter, except after a listed
/// abbreviation.
pub fn segment_sentences(doc: &SourceDocument) -> Vec<SentenceUnit> {
    let text = doc.text.as_str();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    while i < chars.len() {
        let (_, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < chars.len() && (is_terminal(chars[j + 1].1) || is_closing(chars[j + 1].1)) {
            j += 1;
        }
        let end = chars.get(j + 1).map_or(text.len(), |&(b, _)| b);
        let mut k = j + 1;
        let mut saw_space = false;
        while k < chars.len() && chars[k].1.is_whitespace() {
            saw_space = true;
            k += 1;
        }
        while k < chars.len() && is_opening(chars[k].1) {
            k += 1;
        }
        let next_upper = k < chars.len() && chars[k].1.is_uppercase();
        let abbreviation = c == '.' && ends_with_abbreviation(&text[start..end]);
        if saw_space && next_upper && !abbreviation {
            spans.push((start, end));
            start = end;
        }
        i = j + 1;
    }
    spans.push((start, text.len()));

    spans
        .into_iter()
        .map(|(s, e)| text[s..e].trim())
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(idx, sentence)| SentenceUnit {
            doc_id: doc.doc_id.clone(),
            sent_index: idx,
            text: sentence.to_string(),
            speaker: doc.speaker.clone(),
        })
        .collect()
}

/// Segments every document in corpus order.
pub fn segment_corpus(docs: &[SourceDocument]) -> Vec<SentenceUnit> {
    docs.iter().flat_map(segment_sentences).collect()
}
