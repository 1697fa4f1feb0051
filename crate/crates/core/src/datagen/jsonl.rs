//! JSON Lines dataset format.
//!
//! ```text
//! {"label":[0.0,1.0],"elements":[{"modality":"image","d_s":4,"payload":{"h":8,"w":8,"pixels":[...]}},
//!                                {"modality":"text","d_s":1,"payload":[17]}]}
//! ```
//!
//! Token ids are integer arrays, image proxies `{h, w, pixels}`, categorical
//! records integer arrays with `-1` for MISSING, precomputed vectors float
//! arrays. The payload encoding is chosen by the modality's registered kind.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::types::{Element, ModalityRegistry, MultimodalSequence, Payload, PayloadKind};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    label: Vec<f64>,
    elements: Vec<ElementRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementRecord {
    modality: String,
    d_s: usize,
    payload: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRecord {
    h: usize,
    w: usize,
    pixels: Vec<f64>,
}

fn encode_payload(p: &Payload) -> Value {
    match p {
        Payload::Tokens(t) => Value::from(t.clone()),
        Payload::Grid { h, w, pixels } => serde_json::to_value(GridRecord {
            h: *h,
            w: *w,
            pixels: pixels.clone(),
        })
        .expect("grid serializes"),
        Payload::Categorical(v) => Value::from(
            v.iter()
                .map(|x| x.map_or(-1, i64::from))
                .collect::<Vec<i64>>(),
        ),
        Payload::Embedding(v) => Value::from(v.clone()),
    }
}

fn decode_payload(kind: PayloadKind, v: Value) -> std::result::Result<Payload, String> {
    let err = |e: serde_json::Error| e.to_string();
    Ok(match kind {
        PayloadKind::Tokens => Payload::Tokens(serde_json::from_value(v).map_err(err)?),
        PayloadKind::Grid => {
            let g: GridRecord = serde_json::from_value(v).map_err(err)?;
            Payload::Grid {
                h: g.h,
                w: g.w,
                pixels: g.pixels,
            }
        }
        PayloadKind::Categorical => {
            let raw: Vec<i64> = serde_json::from_value(v).map_err(err)?;
            let vals = raw
                .into_iter()
                .map(|x| match x {
                    -1 => Ok(None),
                    x if x >= 0 && x <= u32::MAX as i64 => Ok(Some(x as u32)),
                    x => Err(format!("invalid categorical value {x}")),
                })
                .collect::<std::result::Result<_, _>>()?;
            Payload::Categorical(vals)
        }
        PayloadKind::Embedding => Payload::Embedding(serde_json::from_value(v).map_err(err)?),
    })
}

/// One JSON line (no trailing newline).
pub fn to_json_line(seq: &MultimodalSequence) -> String {
    let rec = Record {
        label: seq.label.clone(),
        elements: seq
            .elements
            .iter()
            .map(|e| ElementRecord {
                modality: e.modality.clone(),
                d_s: e.d_s,
                payload: encode_payload(&e.payload),
            })
            .collect(),
    };
    serde_json::to_string(&rec).expect("record serializes")
}

/// Parses one line; the error message has no location.
pub fn from_json_line(line: &str, registry: &ModalityRegistry) -> Result<MultimodalSequence> {
    let rec: Record =
        serde_json::from_str(line).map_err(|e| Error::InvalidSequence(e.to_string()))?;
    let elements = rec
        .elements
        .into_iter()
        .map(|e| {
            let kind = registry.kind(&e.modality)?;
            let payload = decode_payload(kind, e.payload).map_err(Error::InvalidSequence)?;
            Ok(Element::new(e.modality, payload, e.d_s))
        })
        .collect::<Result<Vec<_>>>()?;
    MultimodalSequence::new(elements, rec.label)
}

pub fn write_jsonl<W: Write>(mut w: W, data: &[MultimodalSequence]) -> Result<()> {
    for s in data {
        writeln!(w, "{}", to_json_line(s))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_jsonl(path: impl AsRef<Path>, data: &[MultimodalSequence]) -> Result<()> {
    write_jsonl(BufWriter::new(File::create(path)?), data)
}

/// Loads and validates a dataset. Blank lines are skipped.
pub fn load_jsonl(
    path: impl AsRef<Path>,
    registry: &ModalityRegistry,
) -> Result<Vec<MultimodalSequence>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let seq = from_json_line(&line, registry).map_err(|e| match e {
            Error::UnknownModality(_) => e,
            other => Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: other.to_string(),
            },
        })?;
        out.push(seq);
    }
    Ok(out)
}
