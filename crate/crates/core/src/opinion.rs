//! Per-node opinion vectors and the `node<TAB>value` vector file format.

use std::fs;
use std::io::Write;
use std::ops::Index;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("opinion of node {node} is {value}, outside [0, 1]")]
    OutOfRange { node: usize, value: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("vector file has no entries")]
    Empty,
    #[error("node {0} missing from vector file")]
    MissingNode(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Opinions in `[0, 1]`, indexed by node.
#[derive(Debug, Clone, PartialEq)]
pub struct Opinions(Vec<f64>);

impl Opinions {
    pub fn new(values: Vec<f64>) -> Result<Self, VectorError> {
        if let Some((node, &value)) =
            values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(VectorError::OutOfRange { node, value });
        }
        Ok(Self(values))
    }

    pub fn constant(n: usize, value: f64) -> Result<Self, VectorError> {
        Self::new(vec![value; n])
    }

    /// Independent uniform draws on `[0, 1)`.
    pub fn uniform(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self((0..n).map(|_| rng.random::<f64>()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Index<usize> for Opinions {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Reads `node<TAB>value` lines; every node in `0..=max id` must appear once.
pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>, VectorError> {
    parse_vector(&fs::read_to_string(path)?)
}

pub fn read_opinions(path: impl AsRef<Path>) -> Result<Opinions, VectorError> {
    Opinions::new(read_vector(path)?)
}

pub fn write_vector(values: &[f64], path: impl AsRef<Path>) -> Result<(), VectorError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{i}\t{v}")?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn parse_vector(text: &str) -> Result<Vec<f64>, VectorError> {
    let mut entries: Vec<Option<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let err = |message: String| VectorError::Parse { line: lineno, message };
        let mut fields = line.split_whitespace();
        let (Some(node), Some(value), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(err("expected `node<TAB>value`".into()));
        };
        let node: usize = node.parse().map_err(|_| err(format!("bad node id {node:?}")))?;
        let value: f64 = value.parse().map_err(|_| err(format!("bad value {value:?}")))?;
        if entries.len() <= node {
            entries.resize(node + 1, None);
        }
        if entries[node].replace(value).is_some() {
            return Err(err(format!("node {node} listed twice")));
        }
    }
    if entries.is_empty() {
        return Err(VectorError::Empty);
    }
    entries
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or(VectorError::MissingNode(i)))
        .collect()
}
