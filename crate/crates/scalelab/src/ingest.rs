//! Run-log, fit and assignment-table I/O.
//!
//! Run CSVs carry the columns
//! `run_id,arch,n_active,n_total,n_vision,tokens,vision_token_fraction,mixture,eval_set,loss,figure`
//! (UTF-8, comma-separated, `.` decimal, header required; scientific notation
//! accepted for counts). Fits are stored as versioned JSON documents carrying
//! a `schema` field; see `docs/fit.schema.json` for the published layout.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    Arch, AssignmentTable, EvalSet, FrontierLaws, LossSurfaceFit, PowerLawFit, RunRecord, RunSpec,
    SparseLossSurfaceFit, TokenCounts,
};

pub const RUN_CSV_HEADER: [&str; 11] = [
    "run_id",
    "arch",
    "n_active",
    "n_total",
    "n_vision",
    "tokens",
    "vision_token_fraction",
    "mixture",
    "eval_set",
    "loss",
    "figure",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunFormat {
    Csv,
    Json,
}

impl RunFormat {
    pub fn from_path(path: &Path) -> RunFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => RunFormat::Json,
            _ => RunFormat::Csv,
        }
    }
}

fn parse_err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

fn parse_f64(s: &str, line: usize, col: usize, field: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| parse_err(line, col, format!("bad {field} `{s}`: {e}")))
}

fn parse_opt_f64(s: &str, line: usize, col: usize, field: &str) -> Result<Option<f64>> {
    let t = s.trim();
    if t.is_empty() {
        Ok(None)
    } else {
        parse_f64(t, line, col, field).map(Some)
    }
}

/// Parses run records from CSV bytes. Rejects inputs without the full header
/// (including the `figure` provenance column) and returns `EmptyDataset` for
/// header-only files.
pub fn parse_runs_csv(input: impl Read) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, 1, e.to_string()))?
        .clone();
    let mut idx = [0usize; 11];
    for (k, name) in RUN_CSV_HEADER.iter().enumerate() {
        idx[k] = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| parse_err(1, k + 1, format!("missing required column `{name}`")))?;
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(0);
            parse_err(line, 1, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |k: usize| -> &str { rec.get(idx[k]).unwrap_or("") };
        let arch = Arch::parse(field(1)).map_err(|e| parse_err(line, idx[1] + 1, e.to_string()))?;
        let eval_set =
            EvalSet::parse(field(8)).map_err(|e| parse_err(line, idx[8] + 1, e.to_string()))?;
        let spec = RunSpec {
            run_id: field(0).to_string(),
            arch,
            n_active: parse_f64(field(2), line, idx[2] + 1, "n_active")?,
            n_total: parse_f64(field(3), line, idx[3] + 1, "n_total")?,
            n_vision: parse_opt_f64(field(4), line, idx[4] + 1, "n_vision")?,
            tokens: parse_f64(field(5), line, idx[5] + 1, "tokens")?,
            vision_token_fraction: parse_opt_f64(
                field(6),
                line,
                idx[6] + 1,
                "vision_token_fraction",
            )?,
            mixture: field(7).to_string(),
            eval_set,
            loss: parse_f64(field(9), line, idx[9] + 1, "loss")?,
            figure: {
                let f = field(10);
                if f.is_empty() {
                    None
                } else {
                    Some(f.to_string())
                }
            },
        };
        out.push(RunRecord::new(spec)?);
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}

/// Parses run records from a JSON array of run objects.
pub fn parse_runs_json(input: impl Read) -> Result<Vec<RunRecord>> {
    let specs: Vec<RunSpec> = serde_json::from_reader(input)
        .map_err(|e| parse_err(e.line(), e.column(), e.to_string()))?;
    if specs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    specs.into_iter().map(RunRecord::new).collect()
}

pub fn load_runs(path: &Path, format: RunFormat) -> Result<Vec<RunRecord>> {
    let file = BufReader::new(File::open(path)?);
    match format {
        RunFormat::Csv => parse_runs_csv(file),
        RunFormat::Json => parse_runs_json(file),
    }
}

pub fn save_runs_csv(records: &[RunRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_CSV_HEADER)
        .map_err(|e| parse_err(1, 1, e.to_string()))?;
    for r in records {
        let row = [
            r.run_id().to_string(),
            r.arch().as_str().to_string(),
            format!("{:e}", r.n_active()),
            format!("{:e}", r.n_total()),
            r.n_vision().map(|v| format!("{v:e}")).unwrap_or_default(),
            format!("{:e}", r.tokens()),
            r.vision_token_fraction()
                .map(|v| v.to_string())
                .unwrap_or_default(),
            r.mixture().to_string(),
            r.eval_set().as_str().to_string(),
            r.loss().to_string(),
            r.figure().unwrap_or("").to_string(),
        ];
        w.write_record(&row).map_err(|e| parse_err(0, 1, e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Schema identifier of the current fit-document layout.
pub const FIT_SCHEMA: &str = "scalelab/fit-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "fit", rename_all = "snake_case")]
pub enum FitKind {
    LossSurface(LossSurfaceFit),
    SparseLossSurface(SparseLossSurfaceFit),
    Frontier(FrontierLaws),
    PowerLaw(PowerLawFit),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub schema: String,
    #[serde(flatten)]
    pub kind: FitKind,
}

impl FitDocument {
    pub fn loss_surface(fit: LossSurfaceFit) -> Self {
        FitDocument {
            schema: FIT_SCHEMA.to_string(),
            kind: FitKind::LossSurface(fit),
        }
    }
    pub fn sparse(fit: SparseLossSurfaceFit) -> Self {
        FitDocument {
            schema: FIT_SCHEMA.to_string(),
            kind: FitKind::SparseLossSurface(fit),
        }
    }
    pub fn frontier(laws: FrontierLaws) -> Self {
        FitDocument {
            schema: FIT_SCHEMA.to_string(),
            kind: FitKind::Frontier(laws),
        }
    }
    pub fn power_law(law: PowerLawFit) -> Self {
        FitDocument {
            schema: FIT_SCHEMA.to_string(),
            kind: FitKind::PowerLaw(law),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.schema != FIT_SCHEMA {
            return Err(Error::SchemaMismatch {
                expected: FIT_SCHEMA.to_string(),
                found: self.schema.clone(),
            });
        }
        match &self.kind {
            FitKind::LossSurface(f) => f.validate(),
            FitKind::SparseLossSurface(f) => f.validate(),
            FitKind::Frontier(f) => f.validate(),
            FitKind::PowerLaw(f) => f.validate(),
        }
    }
}

/// Serializes a fit document. Output is deterministic (no timestamps) and
/// preserves doubles bit-exactly via shortest round-trip formatting.
pub fn write_fit(doc: &FitDocument, out: impl Write) -> Result<()> {
    let mut w = BufWriter::new(out);
    serde_json::to_writer_pretty(&mut w, doc)
        .map_err(|e| parse_err(e.line(), e.column(), e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_fit(input: impl Read) -> Result<FitDocument> {
    // Surface a schema mismatch rather than a deserialization failure when
    // only the schema string is wrong.
    let value: serde_json::Value = serde_json::from_reader(input)
        .map_err(|e| parse_err(e.line(), e.column(), e.to_string()))?;
    if let Some(s) = value.get("schema").and_then(|v| v.as_str()) {
        if s != FIT_SCHEMA {
            return Err(Error::SchemaMismatch {
                expected: FIT_SCHEMA.to_string(),
                found: s.to_string(),
            });
        }
    }
    let doc: FitDocument = serde_json::from_value(value)
        .map_err(|e| parse_err(0, 0, e.to_string()))?;
    doc.validate()?;
    Ok(doc)
}

pub fn save_fit(doc: &FitDocument, path: &Path) -> Result<()> {
    write_fit(doc, File::create(path)?)
}

pub fn load_fit(path: &Path) -> Result<FitDocument> {
    read_fit(BufReader::new(File::open(path)?))
}

/// Parses assignment CSVs with columns `layer,expert,text_tokens,image_tokens,source`.
/// Rows are grouped by source; each source must cover the full
/// (layer, expert) grid exactly once.
pub fn parse_assignments_csv(input: impl Read) -> Result<Vec<AssignmentTable>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, 1, e.to_string()))?
        .clone();
    let mut idx = [0usize; 5];
    for (k, name) in ["layer", "expert", "text_tokens", "image_tokens", "source"]
        .iter()
        .enumerate()
    {
        idx[k] = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| parse_err(1, k + 1, format!("missing required column `{name}`")))?;
    }
    use std::collections::BTreeMap;
    let mut cells: BTreeMap<String, BTreeMap<(usize, usize), TokenCounts>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            parse_err(
                e.position().map(|p| p.line() as usize).unwrap_or(0),
                1,
                e.to_string(),
            )
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let get = |k: usize| -> &str { rec.get(idx[k]).unwrap_or("") };
        let parse_usize = |k: usize, field: &str| -> Result<usize> {
            get(k)
                .parse::<usize>()
                .map_err(|e| parse_err(line, idx[k] + 1, format!("bad {field} `{}`: {e}", get(k))))
        };
        let parse_u64 = |k: usize, field: &str| -> Result<u64> {
            get(k)
                .parse::<u64>()
                .map_err(|e| parse_err(line, idx[k] + 1, format!("bad {field} `{}`: {e}", get(k))))
        };
        let layer = parse_usize(0, "layer")?;
        let expert = parse_usize(1, "expert")?;
        let counts = TokenCounts {
            text_tokens: parse_u64(2, "text_tokens")?,
            image_tokens: parse_u64(3, "image_tokens")?,
        };
        let source = get(4).to_string();
        if cells
            .entry(source.clone())
            .or_default()
            .insert((layer, expert), counts)
            .is_some()
        {
            return Err(parse_err(
                line,
                1,
                format!("duplicate cell (layer {layer}, expert {expert}) for source `{source}`"),
            ));
        }
    }
    if cells.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut tables = Vec::new();
    for (source, grid) in cells {
        let num_layers = grid.keys().map(|&(l, _)| l).max().unwrap() + 1;
        let num_experts = grid.keys().map(|&(_, e)| e).max().unwrap() + 1;
        let mut counts = Vec::with_capacity(num_layers * num_experts);
        for layer in 0..num_layers {
            for expert in 0..num_experts {
                let c = grid.get(&(layer, expert)).ok_or_else(|| {
                    Error::invariant(
                        "counts",
                        format!(
                            "source `{source}` is missing cell (layer {layer}, expert {expert})"
                        ),
                    )
                })?;
                counts.push(*c);
            }
        }
        tables.push(AssignmentTable::new(source, num_layers, num_experts, counts)?);
    }
    Ok(tables)
}

pub fn load_assignments(path: &Path) -> Result<Vec<AssignmentTable>> {
    parse_assignments_csv(BufReader::new(File::open(path)?))
}
