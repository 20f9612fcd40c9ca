//! Marginal tables.
//!
//! A marginal is a count vector over the cell lattice of a subset of
//! attributes. Counts are stored row-major with the first schema attribute
//! slowest-varying; that layout is the single persisted order and every
//! serialization states it. Counts are `f64` even when integral: noise and
//! normalization produce reals, and negative cells are legal between noise
//! addition and the consistency step.

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, Domain};
use crate::error::{Error, Result};

/// Strictly increasing attribute indices selecting a marginal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MarginalSchema {
    attrs: Vec<usize>,
}

impl MarginalSchema {
    /// Build a schema from attribute indices. Input may be unsorted but must
    /// be non-empty and duplicate-free.
    pub fn new(attrs: impl Into<Vec<usize>>) -> Result<Self> {
        let mut attrs = attrs.into();
        attrs.sort_unstable();
        if attrs.is_empty() {
            return Err(Error::InvalidSchema("empty attribute set".into()));
        }
        if attrs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSchema("duplicate attribute index".into()));
        }
        Ok(MarginalSchema { attrs })
    }

    pub fn attrs(&self) -> &[usize] {
        &self.attrs
    }

    pub fn arity(&self) -> usize {
        self.attrs.len()
    }

    pub fn contains(&self, attr: usize) -> bool {
        self.attrs.binary_search(&attr).is_ok()
    }

    pub fn is_subset_of(&self, other: &MarginalSchema) -> bool {
        self.attrs.iter().all(|a| other.contains(*a))
    }

    pub fn intersection(&self, other: &MarginalSchema) -> Vec<usize> {
        self.attrs
            .iter()
            .copied()
            .filter(|a| other.contains(*a))
            .collect()
    }

    pub fn validate_for(&self, domain: &Domain) -> Result<()> {
        if let Some(&a) = self.attrs.iter().find(|&&a| a >= domain.d()) {
            return Err(Error::InvalidSchema(format!(
                "attribute index {a} out of range for domain of {} attributes",
                domain.d()
            )));
        }
        Ok(())
    }

    /// Display names for the schema's attributes.
    pub fn names(&self, domain: &Domain) -> Vec<String> {
        self.attrs
            .iter()
            .map(|&a| domain.attr(a).name.clone())
            .collect()
    }
}

/// Flat index of a cell, row-major with the first attribute slowest-varying.
pub fn cell_encode(sizes: &[usize], values: &[u32]) -> Result<usize> {
    if values.len() != sizes.len() {
        return Err(Error::InvalidInput(format!(
            "cell has {} coordinates, lattice has {} axes",
            values.len(),
            sizes.len()
        )));
    }
    let mut flat = 0usize;
    for (&v, &s) in values.iter().zip(sizes) {
        if v as usize >= s {
            return Err(Error::CellOutOfRange {
                index: v as usize,
                len: s,
            });
        }
        flat = flat * s + v as usize;
    }
    Ok(flat)
}

/// Inverse of [`cell_encode`].
pub fn cell_decode(sizes: &[usize], flat: usize) -> Result<Vec<u32>> {
    let len: usize = sizes.iter().product();
    if flat >= len {
        return Err(Error::CellOutOfRange { index: flat, len });
    }
    let mut values = vec![0u32; sizes.len()];
    let mut rem = flat;
    for i in (0..sizes.len()).rev() {
        values[i] = (rem % sizes[i]) as u32;
        rem /= sizes[i];
    }
    Ok(values)
}

/// Real-valued count vector over a schema's cell lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    schema: MarginalSchema,
    sizes: Vec<usize>,
    counts: Vec<f64>,
    total: f64,
    noise_std: Option<f64>,
}

impl MarginalTable {
    pub fn new(schema: MarginalSchema, sizes: Vec<usize>, counts: Vec<f64>) -> Result<Self> {
        if sizes.len() != schema.arity() {
            return Err(Error::InvalidInput(format!(
                "{} sizes for a schema of arity {}",
                sizes.len(),
                schema.arity()
            )));
        }
        let len: usize = sizes.iter().product();
        if counts.len() != len {
            return Err(Error::InvalidInput(format!(
                "count vector of length {} does not match lattice size {len}",
                counts.len()
            )));
        }
        let total = counts.iter().sum();
        Ok(MarginalTable {
            schema,
            sizes,
            counts,
            total,
            noise_std: None,
        })
    }

    pub fn zeros(schema: MarginalSchema, domain: &Domain) -> Result<Self> {
        schema.validate_for(domain)?;
        let sizes: Vec<usize> = schema.attrs().iter().map(|&a| domain.size(a)).collect();
        let len = sizes.iter().product();
        MarginalTable::new(schema, sizes, vec![0.0; len])
    }

    pub fn schema(&self) -> &MarginalSchema {
        &self.schema
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn noise_std(&self) -> Option<f64> {
        self.noise_std
    }

    pub fn set_noise_std(&mut self, std: Option<f64>) {
        self.noise_std = std;
    }

    pub fn cell(&self, values: &[u32]) -> Result<f64> {
        Ok(self.counts[cell_encode(&self.sizes, values)?])
    }

    pub(crate) fn counts_mut(&mut self) -> &mut [f64] {
        &mut self.counts
    }

    pub(crate) fn recompute_total(&mut self) {
        self.total = self.counts.iter().sum();
    }

    /// Multiply all counts so the total becomes `target`.
    pub fn scale_to_total(&self, target: f64) -> Result<MarginalTable> {
        if self.total <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "cannot rescale a table with total {}",
                self.total
            )));
        }
        let f = target / self.total;
        let mut out = self.clone();
        for c in &mut out.counts {
            *c *= f;
        }
        out.total = out.counts.iter().sum();
        out
            .noise_std
            .iter_mut()
            .for_each(|s| *s *= f);
        Ok(out)
    }

    /// Sum counts over the attributes removed by `sub`. The sub-schema must
    /// be contained in this table's schema.
    pub fn project(&self, sub: &MarginalSchema) -> Result<MarginalTable> {
        if !sub.is_subset_of(&self.schema) {
            return Err(Error::SchemaMismatch(format!(
                "{:?} is not a subset of {:?}",
                sub.attrs(),
                self.schema.attrs()
            )));
        }
        let keep: Vec<bool> = self
            .schema
            .attrs()
            .iter()
            .map(|a| sub.contains(*a))
            .collect();
        let sub_sizes: Vec<usize> = self
            .sizes
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(s, _)| *s)
            .collect();
        let sub_len: usize = sub_sizes.iter().product();
        let mut counts = vec![0.0; sub_len];
        for (flat, &c) in self.counts.iter().enumerate() {
            counts[self.group_index(flat, &keep)] += c;
        }
        let mut out = MarginalTable::new(sub.clone(), sub_sizes, counts)?;
        out.noise_std = self.noise_std;
        Ok(out)
    }

    /// Flat index in the sub-lattice selected by `keep` (one flag per schema
    /// attribute) of the cell `flat` belongs to.
    pub(crate) fn group_index(&self, flat: usize, keep: &[bool]) -> usize {
        let mut rem = flat;
        let mut group = 0usize;
        for i in 0..self.sizes.len() {
            let stride: usize = self.sizes[i + 1..].iter().product();
            let digit = rem / stride;
            rem %= stride;
            if keep[i] {
                group = group * self.sizes[i] + digit;
            }
        }
        group
    }

    /// Normalize so the counts sum to one.
    pub fn normalized(&self) -> Result<NormalizedMarginal> {
        if self.total == 0.0 {
            return Err(Error::InvalidInput(
                "cannot normalize a table with zero total".into(),
            ));
        }
        let counts: Vec<f64> = self.counts.iter().map(|c| c / self.total).collect();
        let mut table = MarginalTable::new(self.schema.clone(), self.sizes.clone(), counts)?;
        table.noise_std = self.noise_std;
        NormalizedMarginal::new(table)
    }
}

/// A marginal table whose counts sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMarginal(MarginalTable);

impl NormalizedMarginal {
    pub fn new(table: MarginalTable) -> Result<Self> {
        if (table.total() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "normalized marginal sums to {}",
                table.total()
            )));
        }
        Ok(NormalizedMarginal(table))
    }

    pub fn table(&self) -> &MarginalTable {
        &self.0
    }
}

/// Count the records of `dataset` in each cell of `schema`'s lattice.
pub fn compute_marginal(dataset: &Dataset, schema: &MarginalSchema) -> Result<MarginalTable> {
    schema.validate_for(dataset.domain())?;
    let mut table = MarginalTable::zeros(schema.clone(), dataset.domain())?;
    let sizes = table.sizes.clone();
    let attrs = schema.attrs().to_vec();
    for r in 0..dataset.n() {
        let mut flat = 0usize;
        for (i, &a) in attrs.iter().enumerate() {
            flat = flat * sizes[i] + dataset.value(r, a) as usize;
        }
        table.counts[flat] += 1.0;
    }
    table.recompute_total();
    Ok(table)
}

/// Joint table on the union schema under the independence assumption:
/// `n * (ma[i]/ma.total) * (mb[j]/mb.total)`.
pub fn independent_product(
    ma: &MarginalTable,
    mb: &MarginalTable,
    n: f64,
) -> Result<MarginalTable> {
    if !ma.schema().intersection(mb.schema()).is_empty() {
        return Err(Error::SchemaMismatch(format!(
            "schemas {:?} and {:?} overlap",
            ma.schema().attrs(),
            mb.schema().attrs()
        )));
    }
    if ma.total() <= 0.0 || mb.total() <= 0.0 {
        return Err(Error::InvalidInput(
            "independence product requires positive totals".into(),
        ));
    }
    let mut attrs: Vec<usize> = ma.schema().attrs().to_vec();
    attrs.extend_from_slice(mb.schema().attrs());
    let union = MarginalSchema::new(attrs)?;
    // per union attribute: which factor it comes from and the axis there
    let source: Vec<(bool, usize)> = union
        .attrs()
        .iter()
        .map(|a| {
            if let Some(i) = ma.schema().attrs().iter().position(|x| x == a) {
                (true, i)
            } else {
                let i = mb.schema().attrs().iter().position(|x| x == a).unwrap();
                (false, i)
            }
        })
        .collect();
    let union_sizes: Vec<usize> = source
        .iter()
        .map(|&(from_a, i)| if from_a { ma.sizes[i] } else { mb.sizes[i] })
        .collect();
    let len: usize = union_sizes.iter().product();
    let mut counts = vec![0.0; len];
    for flat in 0..len {
        let digits = cell_decode(&union_sizes, flat)?;
        let mut va = vec![0u32; ma.schema().arity()];
        let mut vb = vec![0u32; mb.schema().arity()];
        for (d, &(from_a, i)) in digits.iter().zip(&source) {
            if from_a {
                va[i] = *d;
            } else {
                vb[i] = *d;
            }
        }
        let fa = ma.cell(&va)? / ma.total();
        let fb = mb.cell(&vb)? / mb.total();
        counts[flat] = n * fa * fb;
    }
    MarginalTable::new(union, union_sizes, counts)
}

/// Sum of absolute cell differences between two tables on the same schema.
pub fn l1_distance(a: &MarginalTable, b: &MarginalTable) -> Result<f64> {
    if a.schema() != b.schema() || a.sizes != b.sizes {
        return Err(Error::SchemaMismatch(
            "L1 distance requires identical schemas".into(),
        ));
    }
    Ok(a.counts
        .iter()
        .zip(&b.counts)
        .map(|(x, y)| (x - y).abs())
        .sum())
}

/// Persisted form of a marginal: attribute names, lattice sizes, row-major
/// counts (first schema attribute slowest-varying), and the noise std.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalRecord {
    pub schema: Vec<String>,
    pub sizes: Vec<usize>,
    pub counts: Vec<f64>,
    pub noise_std: Option<f64>,
}

impl MarginalRecord {
    pub fn from_table(table: &MarginalTable, domain: &Domain) -> Self {
        MarginalRecord {
            schema: table.schema().names(domain),
            sizes: table.sizes().to_vec(),
            counts: table.counts().to_vec(),
            noise_std: table.noise_std(),
        }
    }

    pub fn into_table(&self, domain: &Domain) -> Result<MarginalTable> {
        let attrs: Vec<usize> = self
            .schema
            .iter()
            .map(|name| {
                domain
                    .attr_index(name)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown attribute {name:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let schema = MarginalSchema::new(attrs)?;
        let expected: Vec<usize> = schema.attrs().iter().map(|&a| domain.size(a)).collect();
        if expected != self.sizes {
            return Err(Error::InvalidInput(format!(
                "persisted sizes {:?} do not match domain sizes {:?}",
                self.sizes, expected
            )));
        }
        let mut table = MarginalTable::new(schema, self.sizes.clone(), self.counts.clone())?;
        table.set_noise_std(self.noise_std);
        Ok(table)
    }
}
