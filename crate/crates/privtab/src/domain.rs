//! Domains, datasets, and ingestion.
//!
//! A [`Domain`] is an ordered list of attribute specs. Categorical attributes
//! enumerate their labels; numeric attributes are bucketized through a list
//! of strictly increasing bin edges (half-open bins, last bin closed on the
//! right). A [`Dataset`] stores one value index per cell in a dense row-major
//! matrix; both types are immutable in normal use, mutation is reserved for
//! the synthesis engine.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quota::largest_remainder;
use crate::rng::derive_rng;

/// Attribute kind plus the data needed to encode raw values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttributeKind {
    Categorical { values: Vec<String> },
    Numeric { bin_edges: Vec<f64> },
}

/// One attribute of a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
}

impl AttributeSpec {
    pub fn categorical(name: impl Into<String>, values: Vec<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Categorical { values },
        }
    }

    pub fn numeric(name: impl Into<String>, bin_edges: Vec<f64>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Numeric { bin_edges },
        }
    }

    /// Number of encoded values: label count, or bin count (edges - 1).
    pub fn domain_size(&self) -> usize {
        match &self.kind {
            AttributeKind::Categorical { values } => values.len(),
            AttributeKind::Numeric { bin_edges } => bin_edges.len().saturating_sub(1),
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            AttributeKind::Categorical { values } => {
                if values.is_empty() {
                    return Err(Error::InvalidDomain(format!(
                        "attribute {:?}: no categorical values",
                        self.name
                    )));
                }
                let mut seen = std::collections::HashSet::new();
                for v in values {
                    if !seen.insert(v) {
                        return Err(Error::InvalidDomain(format!(
                            "attribute {:?}: duplicate label {v:?}",
                            self.name
                        )));
                    }
                }
            }
            AttributeKind::Numeric { bin_edges } => {
                if bin_edges.len() < 2 {
                    return Err(Error::InvalidDomain(format!(
                        "attribute {:?}: needs at least two bin edges",
                        self.name
                    )));
                }
                if bin_edges.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidDomain(format!(
                        "attribute {:?}: non-increasing edges",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Encode a raw cell. Labels match exactly (case-sensitive); numeric
    /// values map to bin `i` with `edges[i] <= x < edges[i+1]`, last bin
    /// closed on the right.
    pub fn encode(&self, raw: &str) -> Result<u32> {
        match &self.kind {
            AttributeKind::Categorical { values } => values
                .iter()
                .position(|v| v == raw)
                .map(|i| i as u32)
                .ok_or_else(|| Error::UnknownLabel {
                    attr: self.name.clone(),
                    label: raw.to_string(),
                }),
            AttributeKind::Numeric { .. } => {
                let x: f64 = raw.trim().parse().map_err(|_| Error::Csv(format!(
                    "attribute {:?}: cell {raw:?} is not numeric",
                    self.name
                )))?;
                self.bucketize(x)
            }
        }
    }

    /// Bin index for a numeric value.
    pub fn bucketize(&self, x: f64) -> Result<u32> {
        let AttributeKind::Numeric { bin_edges } = &self.kind else {
            return Err(Error::InvalidInput(format!(
                "attribute {:?} is not numeric",
                self.name
            )));
        };
        let last = bin_edges.len() - 1;
        if x < bin_edges[0] || x > bin_edges[last] {
            return Err(Error::OutOfRange {
                attr: self.name.clone(),
                value: x,
            });
        }
        if x == bin_edges[last] {
            return Ok((last - 1) as u32);
        }
        // partition_point: first edge strictly greater than x
        let i = bin_edges.partition_point(|e| *e <= x);
        Ok((i - 1) as u32)
    }

    /// Human-readable form of an encoded value: the label, or the bin
    /// midpoint for numeric attributes.
    pub fn decode(&self, value: u32) -> String {
        match &self.kind {
            AttributeKind::Categorical { values } => values[value as usize].clone(),
            AttributeKind::Numeric { bin_edges } => {
                let i = value as usize;
                format!("{}", (bin_edges[i] + bin_edges[i + 1]) / 2.0)
            }
        }
    }

    /// Midpoint of a numeric bin, used as the representative income value in
    /// scoring.
    pub fn bin_midpoint(&self, value: u32) -> Result<f64> {
        let AttributeKind::Numeric { bin_edges } = &self.kind else {
            return Err(Error::InvalidInput(format!(
                "attribute {:?} is not numeric",
                self.name
            )));
        };
        let i = value as usize;
        Ok((bin_edges[i] + bin_edges[i + 1]) / 2.0)
    }
}

/// Ordered attribute specs; the schema against which datasets are encoded.
/// Deserialization goes through [`load_domain`] so invariants always hold.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    attributes: Vec<AttributeSpec>,
}

impl Domain {
    pub fn new(attributes: Vec<AttributeSpec>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::InvalidDomain("no attributes".into()));
        }
        let mut names = std::collections::HashSet::new();
        for a in &attributes {
            a.validate()?;
            if !names.insert(a.name.clone()) {
                return Err(Error::InvalidDomain(format!(
                    "duplicate attribute name {:?}",
                    a.name
                )));
            }
        }
        Ok(Domain { attributes })
    }

    /// Attribute count.
    pub fn d(&self) -> usize {
        self.attributes.len()
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn attr(&self, i: usize) -> &AttributeSpec {
        &self.attributes[i]
    }

    pub fn size(&self, i: usize) -> usize {
        self.attributes[i].domain_size()
    }

    pub fn attr_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Sub-domain over the given attribute indices, in the given order.
    pub fn subset(&self, attrs: &[usize]) -> Result<Domain> {
        let specs = attrs
            .iter()
            .map(|&i| {
                self.attributes
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput(format!("attribute index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Domain::new(specs)
    }
}

/// Parse a domain spec document: `{"attrs":[...]}`.
pub fn load_domain(spec_text: &str) -> Result<Domain> {
    #[derive(Deserialize)]
    struct Doc {
        attrs: Vec<AttributeSpec>,
    }
    let doc: Doc = serde_json::from_str(spec_text)
        .map_err(|e| Error::InvalidDomain(format!("malformed document: {e}")))?;
    Domain::new(doc.attrs)
}

/// Encoded records over a domain: an n x d matrix of value indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    domain: Arc<Domain>,
    values: Vec<u32>,
    n: usize,
}

impl Dataset {
    pub fn new(domain: Arc<Domain>, values: Vec<u32>) -> Result<Self> {
        let d = domain.d();
        if d == 0 || values.len() % d != 0 {
            return Err(Error::InvalidInput(format!(
                "value matrix of length {} does not tile {} columns",
                values.len(),
                d
            )));
        }
        let n = values.len() / d;
        for (idx, &v) in values.iter().enumerate() {
            let col = idx % d;
            if (v as usize) >= domain.size(col) {
                return Err(Error::InvalidInput(format!(
                    "row {} column {} value {} exceeds domain size {}",
                    idx / d,
                    col,
                    v,
                    domain.size(col)
                )));
            }
        }
        Ok(Dataset { domain, values, n })
    }

    pub fn empty(domain: Arc<Domain>) -> Self {
        Dataset {
            domain,
            values: Vec::new(),
            n: 0,
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn domain_arc(&self) -> Arc<Domain> {
        Arc::clone(&self.domain)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.domain.d()
    }

    pub fn value(&self, row: usize, col: usize) -> u32 {
        self.values[row * self.domain.d() + col]
    }

    pub fn row(&self, row: usize) -> &[u32] {
        let d = self.domain.d();
        &self.values[row * d..(row + 1) * d]
    }

    /// Overwrite a single cell. Synthesis-engine use.
    pub fn set_value(&mut self, row: usize, col: usize, v: u32) {
        debug_assert!((v as usize) < self.domain.size(col));
        let d = self.domain.d();
        self.values[row * d + col] = v;
    }

    /// Overwrite row `dst` with a copy of row `src`.
    pub fn copy_row_within(&mut self, src: usize, dst: usize) {
        let d = self.domain.d();
        let (a, b) = (src * d, dst * d);
        for j in 0..d {
            self.values[b + j] = self.values[a + j];
        }
    }

    pub fn shuffle_rows<R: Rng>(&mut self, rng: &mut R) {
        let d = self.domain.d();
        let mut order: Vec<usize> = (0..self.n).collect();
        order.shuffle(rng);
        let mut next = Vec::with_capacity(self.values.len());
        for r in order {
            next.extend_from_slice(&self.values[r * d..(r + 1) * d]);
        }
        self.values = next;
    }

    /// Serialize to RFC-4180 CSV with a header row. Numeric attributes are
    /// written as their bin midpoints, which re-encode to the same bins.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = self
            .domain
            .attributes()
            .iter()
            .map(|a| a.name.as_str())
            .collect();
        wtr.write_record(&header)
            .map_err(|e| Error::Csv(e.to_string()))?;
        for r in 0..self.n {
            let rec: Vec<String> = (0..self.d())
                .map(|c| self.domain.attr(c).decode(self.value(r, c)))
                .collect();
            wtr.write_record(&rec).map_err(|e| Error::Csv(e.to_string()))?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Csv(e.to_string()))
    }
}

/// Parse a CSV document against a domain. The header must contain exactly
/// the domain's attribute names (any order); every cell must encode.
pub fn load_csv(text: &str, domain: &Domain) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .clone();
    for h in headers.iter() {
        if domain.attr_index(h).is_none() {
            return Err(Error::UnknownColumn(h.to_string()));
        }
    }
    // column position of each domain attribute
    let mut cols = Vec::with_capacity(domain.d());
    for a in domain.attributes() {
        let pos = headers
            .iter()
            .position(|h| h == a.name)
            .ok_or_else(|| Error::MissingColumn(a.name.clone()))?;
        cols.push(pos);
    }
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        for (j, &pos) in cols.iter().enumerate() {
            let raw = rec.get(pos).ok_or_else(|| {
                Error::Csv(format!("row {} shorter than header", values.len() / domain.d() + 1))
            })?;
            values.push(domain.attr(j).encode(raw)?);
        }
    }
    Dataset::new(Arc::new(domain.clone()), values)
}

/// Generate a dataset of `n` records, each column sampled independently.
///
/// Without `one_way`, columns are i.i.d. uniform over the attribute domain.
/// With `one_way` (one normalized distribution per attribute), each column is
/// built by largest-remainder quota so its marginal matches the distribution
/// as tightly as integer counts allow, then shuffled. Deterministic per seed.
pub fn random_dataset(
    domain: &Domain,
    n: usize,
    one_way: Option<&[Vec<f64>]>,
    seed: u64,
) -> Result<Dataset> {
    if let Some(dists) = one_way {
        if dists.len() != domain.d() {
            return Err(Error::InvalidInput(format!(
                "expected {} one-way marginals, got {}",
                domain.d(),
                dists.len()
            )));
        }
        for (j, dist) in dists.iter().enumerate() {
            if dist.len() != domain.size(j) {
                return Err(Error::InvalidInput(format!(
                    "one-way marginal {j} has {} entries, domain size is {}",
                    dist.len(),
                    domain.size(j)
                )));
            }
            let sum: f64 = dist.iter().sum();
            if dist.iter().any(|p| *p < -1e-9) || (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidInput(format!(
                    "one-way marginal {j} is not a normalized distribution (sum {sum})"
                )));
            }
        }
    }
    let d = domain.d();
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut rng = derive_rng(seed, "random_dataset", &[j]);
        let size = domain.size(j);
        let col = match one_way {
            None => (0..n)
                .map(|_| rng.random_range(0..size as u32))
                .collect::<Vec<u32>>(),
            Some(dists) => {
                let counts = largest_remainder(&dists[j], n as u64);
                let mut col = Vec::with_capacity(n);
                for (v, &c) in counts.iter().enumerate() {
                    col.extend(std::iter::repeat(v as u32).take(c as usize));
                }
                col.shuffle(&mut rng);
                col
            }
        };
        columns.push(col);
    }
    let mut values = Vec::with_capacity(n * d);
    for r in 0..n {
        for col in &columns {
            values.push(col[r]);
        }
    }
    Dataset::new(Arc::new(domain.clone()), values)
}
