//! JSONL / CSV corpus files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, Document, Label, UNKNOWN_LANG};
use crate::error::{Error, Result};

#[derive(Deserialize)]
struct InRecord {
    id: Option<String>,
    text: Option<String>,
    lang: Option<String>,
    label: Option<String>,
    #[serde(default)]
    tokens: Vec<String>,
}

#[derive(Serialize)]
struct OutRecord<'a> {
    id: &'a str,
    text: &'a str,
    lang: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<Label>,
    tokens: &'a [String],
}

fn to_document(rec: InRecord) -> std::result::Result<Document, String> {
    let id = rec.id.ok_or("missing `id`")?;
    let text = rec.text.ok_or("missing `text`")?;
    let label = match rec.label.as_deref() {
        None | Some("") => None,
        Some(l) => Some(l.parse::<Label>()?),
    };
    Ok(Document {
        id,
        raw_text: text,
        lang: rec
            .lang
            .filter(|l| !l.is_empty())
            .unwrap_or_else(|| UNKNOWN_LANG.to_string()),
        tokens: rec.tokens,
        label,
    })
}

fn finish(path: &Path, docs: Vec<(usize, Document)>) -> Result<Corpus> {
    let lines: Vec<usize> = docs.iter().map(|(l, _)| *l).collect();
    Corpus::new(docs.into_iter().map(|(_, d)| d).collect()).map_err(|e| match e {
        Error::EmptyId => Error::MalformedRecord {
            path: path.to_path_buf(),
            line: lines.first().copied().unwrap_or(0),
            message: "empty `id`".into(),
        },
        other => other,
    })
}

/// Reads one JSON object per line. Blank lines are skipped. A `tokens`
/// array, when present, is kept, so preprocessed output can be read back.
pub fn ingest_jsonl(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let rec: InRecord = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        docs.push((line_no, to_document(rec).map_err(malformed)?));
    }
    finish(path, docs)
}

/// Alias of [`ingest_jsonl`] for files written by [`write_jsonl`].
pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Corpus> {
    ingest_jsonl(path)
}

/// Reads a CSV file with header `id,text,lang,label` (RFC 4180 quoting).
/// `lang` and `label` columns are optional; empty cells mean absent.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (id_col, text_col) = match (col("id"), col("text")) {
        (Some(i), Some(t)) => (i, t),
        _ => {
            return Err(Error::MalformedRecord {
                path: path.to_path_buf(),
                line: 1,
                message: "header must contain `id` and `text`".into(),
            })
        }
    };
    let (lang_col, label_col) = (col("lang"), col("label"));

    let mut docs = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line_no = i + 2;
        let row = row.map_err(|e| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        let get = |c: Option<usize>| c.and_then(|c| row.get(c)).map(str::to_string);
        let rec = InRecord {
            id: get(Some(id_col)),
            text: get(Some(text_col)),
            lang: get(lang_col),
            label: get(label_col),
            tokens: Vec::new(),
        };
        let doc = to_document(rec).map_err(|message| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: line_no,
            message,
        })?;
        docs.push((line_no, doc));
    }
    finish(path, docs)
}

/// Dispatches on the file extension: `.csv` is CSV, anything else JSONL.
pub fn ingest_path(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => ingest_csv(path),
        _ => ingest_jsonl(path),
    }
}

/// Writes the corpus as JSONL with a `tokens` array on every record.
pub fn write_jsonl(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for d in corpus.docs() {
        let rec = OutRecord {
            id: &d.id,
            text: &d.raw_text,
            lang: &d.lang,
            label: d.label,
            tokens: &d.tokens,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
