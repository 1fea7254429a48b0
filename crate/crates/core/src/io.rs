//! File formats: offspring laws and weight sequences as JSON, labelled trees
//! as JSON or a compact varint frame, maps as JSONL records or edge lists,
//! continuum paths as CSV.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::bijection::PointedMap;
use crate::continuum::ContinuumPath;
use crate::error::{Error, Result};
use crate::labels::LabelledTree;
use crate::trees::PlaneTree;
use crate::weights::{
    classify, make_stable_offspring, offspring_law, CriticalityReport, OffspringLaw, PowerTail, WeightSeq,
    WeightTail, LAW_TOL,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Law description as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawFile {
    /// Finitely supported weights, keyed by `k` written as a string.
    Finite { weights: BTreeMap<String, f64> },
    /// Explicit weights followed by a rule-generated tail.
    PowerTail {
        #[serde(default)]
        weights: BTreeMap<String, f64>,
        tail: WeightTail,
    },
    /// Offspring law given directly.
    Offspring {
        pmf: Vec<f64>,
        #[serde(default)]
        tail: Option<PowerTail>,
    },
    /// Mean-one law attracted to the `alpha`-stable law.
    Stable { alpha: f64, cutoff: usize },
}

/// A law ready for sampling, with the criticality report when it came from weights.
#[derive(Clone, Debug)]
pub struct LoadedLaw {
    pub law: OffspringLaw,
    pub weights: Option<WeightSeq>,
    pub report: Option<CriticalityReport>,
}

fn parse_entries(weights: &BTreeMap<String, f64>) -> Result<Vec<(usize, f64)>> {
    weights
        .iter()
        .map(|(k, &q)| {
            k.trim().parse().map(|k| (k, q)).map_err(|_| Error::InvalidWeights(format!("bad face index {k:?}")))
        })
        .collect()
}

impl LawFile {
    pub fn weights(&self) -> Result<Option<WeightSeq>> {
        Ok(match self {
            LawFile::Finite { weights } => Some(WeightSeq::finite(parse_entries(weights)?)?),
            LawFile::PowerTail { weights, tail } => Some(WeightSeq::with_tail(parse_entries(weights)?, tail.clone())?),
            _ => None,
        })
    }

    /// Builds the offspring law, refusing weight sequences that are not critical.
    pub fn load(&self) -> Result<LoadedLaw> {
        if let Some(q) = self.weights()? {
            let report = classify(&q, 1e-10)?;
            if !report.is_critical() {
                return Err(Error::NotCritical(report.classification));
            }
            let law = offspring_law(&q, &report)?;
            return Ok(LoadedLaw { law, weights: Some(q), report: Some(report) });
        }
        let law = match self {
            LawFile::Offspring { pmf, tail: None } => OffspringLaw::from_pmf(pmf.clone())?,
            LawFile::Offspring { pmf, tail: Some(t) } => OffspringLaw::with_power_tail(pmf.clone(), t.clone())?,
            LawFile::Stable { alpha, cutoff } => make_stable_offspring(*alpha, *cutoff)?,
            _ => unreachable!(),
        };
        if (law.mean() - 1.0).abs() > LAW_TOL {
            return Err(Error::Precondition(format!("offspring mean {} != 1", law.mean())));
        }
        Ok(LoadedLaw { law, weights: None, report: None })
    }
}

pub fn read_law(reader: impl Read) -> Result<LawFile> {
    Ok(serde_json::from_reader(reader)?)
}

pub fn write_tree_json(w: impl Write, lt: &LabelledTree) -> Result<()> {
    serde_json::to_writer(w, lt)?;
    Ok(())
}

pub fn read_tree_json(r: impl Read) -> Result<LabelledTree> {
    let raw: LabelledTree = serde_json::from_reader(r)?;
    LabelledTree::new(raw.tree, raw.labels)
}

const TREE_MAGIC: &[u8; 4] = b"BPT1";

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn get_varint(bytes: &[u8], pos: &mut usize) -> Result<u64> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let b = *bytes.get(*pos).ok_or_else(|| Error::InvalidEncoding("truncated varint".into()))?;
        *pos += 1;
        v |= u64::from(b & 0x7f) << shift;
        if b < 0x80 {
            return Ok(v);
        }
    }
    Err(Error::InvalidEncoding("varint longer than 64 bits".into()))
}

fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

fn unzigzag(v: u64) -> i64 {
    (v >> 1) as i64 ^ -((v & 1) as i64)
}

/// Magic, vertex count, children counts, then zigzag label differences
/// along the lexicographic order.
pub fn encode_tree(lt: &LabelledTree) -> Vec<u8> {
    let mut out = TREE_MAGIC.to_vec();
    put_varint(&mut out, lt.tree.vertex_count() as u64);
    for &k in lt.tree.children() {
        put_varint(&mut out, k as u64);
    }
    let mut prev = 0;
    for &l in &lt.labels {
        put_varint(&mut out, zigzag(l - prev));
        prev = l;
    }
    out
}

pub fn decode_tree(bytes: &[u8]) -> Result<LabelledTree> {
    if bytes.len() < 4 || &bytes[..4] != TREE_MAGIC {
        return Err(Error::InvalidEncoding("bad tree frame header".into()));
    }
    let mut pos = 4;
    let n = get_varint(bytes, &mut pos)? as usize;
    if n > bytes.len() {
        return Err(Error::InvalidEncoding("vertex count exceeds frame size".into()));
    }
    let children = (0..n).map(|_| get_varint(bytes, &mut pos).map(|k| k as usize)).collect::<Result<Vec<_>>>()?;
    let mut labels = Vec::with_capacity(n);
    let mut prev = 0;
    for _ in 0..n {
        prev += unzigzag(get_varint(bytes, &mut pos)?);
        labels.push(prev);
    }
    if pos != bytes.len() {
        return Err(Error::InvalidEncoding("trailing bytes after tree frame".into()));
    }
    LabelledTree::new(PlaneTree::from_children(children)?, labels)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub schema: String,
    pub version: u32,
}

impl Header {
    pub fn new(schema: &str) -> Self {
        Self { schema: schema.into(), version: SCHEMA_VERSION }
    }
}

/// One sampled map with the parameters that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapRecord {
    pub seed: u64,
    pub n: usize,
    /// Size conditioning of the map: `edges`, `vertices` or `faces`.
    pub cond: String,
    pub replicate: u64,
    pub map: PointedMap,
}

pub const MAP_SCHEMA: &str = "bipmap.map";

pub fn write_jsonl_header(mut w: impl Write, schema: &str) -> Result<()> {
    serde_json::to_writer(&mut w, &Header::new(schema))?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_map_record(mut w: impl Write, rec: &MapRecord) -> Result<()> {
    serde_json::to_writer(&mut w, rec)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Reads a map JSONL file, checking its header.
pub fn read_map_records(r: impl BufRead) -> Result<Vec<MapRecord>> {
    let mut lines = r.lines();
    let header: Header = match lines.next() {
        Some(line) => serde_json::from_str(&line?)?,
        None => return Err(Error::InvalidInput("empty map file".into())),
    };
    if header.schema != MAP_SCHEMA || header.version != SCHEMA_VERSION {
        return Err(Error::InvalidInput(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// `u v` per edge, preceded by a comment line with the star and root.
pub fn write_edge_list(mut w: impl Write, map: &PointedMap) -> Result<()> {
    writeln!(w, "# vertices {} star {} root {} {}", map.vertex_count, map.star, map.origin[map.root], map.target(map.root))?;
    for e in 0..map.edge_count() {
        writeln!(w, "{} {}", map.origin[2 * e], map.origin[2 * e + 1])?;
    }
    Ok(())
}

pub fn write_path_csv(mut w: impl Write, path: &ContinuumPath) -> Result<()> {
    writeln!(w, "t,X,H,L")?;
    for i in 0..path.grid.len() {
        writeln!(w, "{},{},{},{}", path.grid[i], path.x[i], path.h[i], path.l[i])?;
    }
    Ok(())
}
