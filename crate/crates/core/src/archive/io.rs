//! JSON Lines persistence: one header line followed by one individual per line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Behavior, Genotype, Individual, Repertoire};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    n: usize,
    m: usize,
    l_repertoire: f64,
    behavior_bounds: Vec<(f64, f64)>,
    control_dims: Vec<usize>,
    next_id: u64,
}

#[derive(Serialize, Deserialize)]
struct Record {
    id: u64,
    genotype: Vec<f64>,
    behavior: Vec<f64>,
    control_dims: Vec<usize>,
    quality: f64,
    novelty: f64,
    compensation: Vec<f64>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

impl Repertoire {
    /// Serializes to the JSON Lines format. Output is deterministic.
    pub fn to_jsonl(&self) -> String {
        let header = Header {
            format_version: FORMAT_VERSION,
            n: self.genotype_dim,
            m: self.behavior_dim(),
            l_repertoire: self.l_repertoire,
            behavior_bounds: self.behavior_bounds.clone(),
            control_dims: self.control_dims.clone(),
            next_id: self.next_id,
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for ind in &self.individuals {
            let rec = Record {
                id: ind.id,
                genotype: ind.genotype.values().to_vec(),
                behavior: ind.behavior.values().to_vec(),
                control_dims: self.control_dims.clone(),
                quality: ind.quality,
                novelty: ind.novelty,
                compensation: ind.compensation.clone(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Parses the JSON Lines format. Either the whole repertoire is returned
    /// or an error naming the first offending line.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, htext) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let header: Header = serde_json::from_str(htext).map_err(|e| parse_err(hline, format!("header: {e}")))?;
        if header.format_version != FORMAT_VERSION {
            return Err(parse_err(
                hline,
                format!("unsupported format_version {}", header.format_version),
            ));
        }
        if header.behavior_bounds.len() != header.m {
            return Err(parse_err(hline, "behavior_bounds length differs from m"));
        }
        let mut individuals = Vec::new();
        for (ln, text) in lines {
            let rec: Record = serde_json::from_str(text).map_err(|e| parse_err(ln, e.to_string()))?;
            if rec.genotype.len() != header.n {
                return Err(parse_err(
                    ln,
                    format!("genotype length {} != n = {}", rec.genotype.len(), header.n),
                ));
            }
            if rec.behavior.len() != header.m || rec.compensation.len() != header.m {
                return Err(parse_err(ln, "behavior or compensation length differs from m"));
            }
            if rec.control_dims != header.control_dims {
                return Err(parse_err(ln, "control_dims differ from the header"));
            }
            if !rec.quality.is_finite() || !rec.novelty.is_finite() {
                return Err(parse_err(ln, "non-finite quality or novelty"));
            }
            if rec.compensation.iter().any(|v| !v.is_finite()) {
                return Err(parse_err(ln, "non-finite compensation"));
            }
            let genotype = Genotype::new(rec.genotype).map_err(|e| parse_err(ln, e.to_string()))?;
            let behavior = Behavior::new(rec.behavior).map_err(|e| parse_err(ln, e.to_string()))?;
            individuals.push(Individual {
                id: rec.id,
                genotype,
                behavior,
                quality: rec.quality,
                novelty: rec.novelty,
                compensation: rec.compensation,
            });
        }
        Repertoire::from_parts(
            header.n,
            header.behavior_bounds,
            header.control_dims,
            header.l_repertoire,
            header.next_id,
            individuals,
        )
        .map_err(|e| parse_err(hline, e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_jsonl())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_jsonl(&text)
    }
}
