//! JSON frame files and complex-number flags.
//!
//! ```json
//! {"hilbert_dim": 2,
//!  "blocks": [{"rows": 1, "matrix": [[[1.0, 0.0], [0.0, 0.0]]]}],
//!  "metadata": {"name": "e1"}}
//! ```
//!
//! Entries are `[re, im]` pairs. Unknown fields are rejected at every level.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::GFrame;
use crate::linalg::CMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub hilbert_dim: usize,
    pub blocks: Vec<BlockSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub rows: usize,
    pub matrix: Vec<Vec<Entry>>,
}

/// One `[re, im]` pair. Read through a list so a wrong length is a schema
/// error on that entry rather than a syntax error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "[f64; 2]")]
pub struct Entry(pub [f64; 2]);

impl TryFrom<Vec<f64>> for Entry {
    type Error = String;

    fn try_from(v: Vec<f64>) -> std::result::Result<Self, String> {
        match v[..] {
            [re, im] => Ok(Entry([re, im])),
            _ => Err(format!("expected an [re, im] pair, found {} numbers", v.len())),
        }
    }
}

impl From<Entry> for [f64; 2] {
    fn from(e: Entry) -> Self {
        e.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        message: message.into(),
    }
}

/// Reads the document structure without building a frame.
pub fn parse_document(text: &str) -> Result<FrameSpec> {
    let mut de = serde_json::Deserializer::from_str(text);
    let spec: FrameSpec = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => schema(field, inner.to_string()),
            _ => Error::Parse {
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            },
        }
    })?;
    de.end().map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(spec)
}

impl FrameSpec {
    pub fn to_frame(&self) -> Result<GFrame> {
        let n = self.hilbert_dim;
        if n == 0 {
            return Err(schema("hilbert_dim", "must be positive"));
        }
        if self.blocks.is_empty() {
            return Err(schema("blocks", "at least one block is required"));
        }
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (j, b) in self.blocks.iter().enumerate() {
            if b.rows == 0 {
                return Err(schema(format!("blocks[{j}].rows"), "must be positive"));
            }
            if b.matrix.len() != b.rows {
                return Err(schema(
                    format!("blocks[{j}].matrix"),
                    format!("has {} rows, declared {}", b.matrix.len(), b.rows),
                ));
            }
            for (r, row) in b.matrix.iter().enumerate() {
                if row.len() != n {
                    return Err(schema(
                        format!("blocks[{j}].matrix[{r}]"),
                        format!("has {} entries, expected hilbert_dim = {n}", row.len()),
                    ));
                }
                if let Some(c) = row.iter().position(|e| !e.0[0].is_finite() || !e.0[1].is_finite()) {
                    return Err(schema(format!("blocks[{j}].matrix[{r}][{c}]"), "not finite"));
                }
            }
            blocks.push(CMatrix::from_fn(b.rows, n, |r, c| {
                let [re, im] = b.matrix[r][c].0;
                Complex64::new(re, im)
            }));
        }
        GFrame::new(n, blocks)
    }

    pub fn from_frame(frame: &GFrame, metadata: Option<Metadata>) -> Self {
        let blocks = frame
            .blocks()
            .iter()
            .map(|b| BlockSpec {
                rows: b.nrows(),
                matrix: (0..b.nrows())
                    .map(|r| (0..b.ncols()).map(|c| Entry([b[(r, c)].re, b[(r, c)].im])).collect())
                    .collect(),
            })
            .collect();
        FrameSpec {
            hilbert_dim: frame.hilbert_dim(),
            blocks,
            metadata,
        }
    }

    pub fn name(&self) -> Option<&str> {
        self.metadata.as_ref().and_then(|m| m.name.as_deref())
    }
}

pub fn parse_spec(text: &str) -> Result<GFrame> {
    parse_document(text)?.to_frame()
}

/// Pretty JSON with shortest round-trip decimals.
pub fn serialize_spec(frame: &GFrame, metadata: Option<Metadata>) -> String {
    let mut out = serde_json::to_string_pretty(&FrameSpec::from_frame(frame, metadata))
        .expect("frame specs always serialize");
    out.push('\n');
    out
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also `i`, `-i`, exponents like `1e-3-2i`).
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let bad = || Error::InvalidParameter(format!("cannot parse complex number {text:?}"));
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(bad());
    }
    let real = |t: &str| -> Result<f64> {
        // Rust also accepts "inf"/"nan"; those are not meaningful labels.
        let v: f64 = t.parse().map_err(|_| bad())?;
        if v.is_finite() { Ok(v) } else { Err(bad()) }
    };
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(real(&s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&p| matches!(bytes[p], b'+' | b'-') && !matches!(bytes[p - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(p) => (real(&body[..p])?, &body[p..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => real(t)?,
    };
    Ok(Complex64::new(re, im))
}

/// Comma-separated list of complex numbers.
pub fn parse_complex_list(text: &str) -> Result<Vec<Complex64>> {
    text.split(',').map(parse_complex).collect()
}
