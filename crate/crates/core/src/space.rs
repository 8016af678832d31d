//! Presence accumulation and the research space proximity matrix.
//!
//! The chain is: fielded paper shares -> `X` (continuous presence) -> `P`
//! (binary presence above a threshold) -> `M` (field-by-field co-occurrence
//! counts over careers) -> `phi` (column-normalized conditional
//! probabilities). `phi[f][g]` estimates the probability that a scholar with
//! presence in field `g` also has presence in field `f`, so the matrix is
//! asymmetric by construction.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::FieldedPublication;
use crate::types::{AggregationLevel, FieldIndex, MapKind, YearWindow};

/// Default binarization threshold on effective paper counts.
pub const PRESENCE_THRESHOLD: f64 = 0.1;

/// Sparse entity-by-field matrix of effective paper counts over a window.
///
/// A cell accumulates the `1/(n_p * m_p)` shares of every paper the entity
/// produced in that field during the window; cells that never receive weight
/// stay structurally absent, as do entities and fields with no output.
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceMatrix {
    level: AggregationLevel,
    window: YearWindow,
    fields: FieldIndex,
    rows: BTreeMap<String, BTreeMap<usize, f64>>,
}

impl PresenceMatrix {
    /// Accumulates the shares dated inside `window`. Shares are added in
    /// input order, so identical input yields bit-identical cells. Every
    /// field id must be present in `fields`.
    pub fn build(
        pubs: &[FieldedPublication],
        window: YearWindow,
        level: AggregationLevel,
        fields: FieldIndex,
    ) -> Result<Self> {
        let mut rows: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
        for p in pubs {
            if !window.contains(p.year) {
                continue;
            }
            let f = fields.position(&p.field_id).ok_or_else(|| {
                Error::FieldIndexMismatch(format!("field `{}` not in the field index", p.field_id))
            })?;
            *rows
                .entry(p.entity_id.clone())
                .or_default()
                .entry(f)
                .or_insert(0.0) += p.weight;
        }
        Ok(PresenceMatrix {
            level,
            window,
            fields,
            rows,
        })
    }

    /// Builds directly from per-entity cell values. Intended for tests and
    /// for synthetic fixtures; cells must be strictly positive.
    pub fn from_rows(
        level: AggregationLevel,
        window: YearWindow,
        fields: FieldIndex,
        rows: BTreeMap<String, BTreeMap<usize, f64>>,
    ) -> Result<Self> {
        for (entity, row) in &rows {
            for (&f, &v) in row {
                if f >= fields.len() {
                    return Err(Error::FieldIndexMismatch(format!(
                        "cell ({entity}, {f}) outside the field index"
                    )));
                }
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "cell ({entity}, {f}) must be finite and positive, got {v}"
                    )));
                }
            }
        }
        Ok(PresenceMatrix {
            level,
            window,
            fields,
            rows,
        })
    }

    pub fn level(&self) -> AggregationLevel {
        self.level
    }

    pub fn window(&self) -> YearWindow {
        self.window
    }

    pub fn fields(&self) -> &FieldIndex {
        &self.fields
    }

    pub fn n_entities(&self) -> usize {
        self.rows.len()
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn row(&self, entity_id: &str) -> Option<&BTreeMap<usize, f64>> {
        self.rows.get(entity_id)
    }

    pub fn get(&self, entity_id: &str, field: usize) -> f64 {
        self.rows
            .get(entity_id)
            .and_then(|r| r.get(&field))
            .copied()
            .unwrap_or(0.0)
    }

    /// Total effective output of one entity over the window.
    pub fn entity_total(&self, entity_id: &str) -> f64 {
        self.rows
            .get(entity_id)
            .map(|r| r.values().sum())
            .unwrap_or(0.0)
    }

    /// Per-field totals in index order.
    pub fn field_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0f64; self.fields.len()];
        for row in self.rows.values() {
            for (&f, &v) in row {
                totals[f] += v;
            }
        }
        totals
    }

    pub fn grand_total(&self) -> f64 {
        self.rows
            .values()
            .map(|r| r.values().sum::<f64>())
            .sum()
    }
}

/// Binary presence: the fields where an entity's effective paper count
/// strictly exceeds the threshold. Entities with no field above threshold
/// are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryPresence {
    level: AggregationLevel,
    threshold: f64,
    fields: FieldIndex,
    members: BTreeMap<String, BTreeSet<usize>>,
}

impl BinaryPresence {
    pub fn level(&self) -> AggregationLevel {
        self.level
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn fields(&self) -> &FieldIndex {
        &self.fields
    }

    pub fn n_entities(&self) -> usize {
        self.members.len()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &BTreeSet<usize>)> {
        self.members.iter().map(|(e, s)| (e.as_str(), s))
    }

    pub fn is_member(&self, entity_id: &str, field: usize) -> bool {
        self.members
            .get(entity_id)
            .map(|s| s.contains(&field))
            .unwrap_or(false)
    }

    /// Members per field, in index order.
    pub fn member_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.fields.len()];
        for set in self.members.values() {
            for &f in set {
                counts[f] += 1;
            }
        }
        counts
    }
}

/// Thresholds `X` into binary presence. The comparison is strict, so a cell
/// exactly at the threshold is not a member.
pub fn discretize(x: &PresenceMatrix, threshold: f64) -> BinaryPresence {
    let members: BTreeMap<String, BTreeSet<usize>> = x
        .rows
        .iter()
        .filter_map(|(entity, row)| {
            let set: BTreeSet<usize> = row
                .iter()
                .filter(|(_, &v)| v > threshold)
                .map(|(&f, _)| f)
                .collect();
            if set.is_empty() {
                None
            } else {
                Some((entity.clone(), set))
            }
        })
        .collect();
    BinaryPresence {
        level: x.level,
        threshold,
        fields: x.fields.clone(),
        members,
    }
}

/// Symmetric field-by-field co-occurrence counts over author careers.
/// The diagonal holds each field's member count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceMatrix {
    fields: FieldIndex,
    counts: Vec<u64>,
}

impl CooccurrenceMatrix {
    pub fn fields(&self) -> &FieldIndex {
        &self.fields
    }

    pub fn n_fields(&self) -> usize {
        self.fields.len()
    }

    pub fn get(&self, f: usize, g: usize) -> u64 {
        self.counts[f * self.fields.len() + g]
    }

    /// Fraction of nonzero cells.
    pub fn density(&self) -> f64 {
        if self.counts.is_empty() {
            return 0.0;
        }
        let nonzero = self.counts.iter().filter(|&&c| c > 0).count();
        nonzero as f64 / self.counts.len() as f64
    }
}

/// Counts, for every field pair, the scholars holding membership in both.
/// Only meaningful on individual careers; any other level is an error.
pub fn cooccurrence(p: &BinaryPresence) -> Result<CooccurrenceMatrix> {
    if p.level != AggregationLevel::Author {
        return Err(Error::NotAuthorLevel(p.level));
    }
    let n = p.fields.len();
    let sets: Vec<&BTreeSet<usize>> = p.members.values().collect();
    let counts = sets
        .par_iter()
        .fold(
            || vec![0u64; n * n],
            |mut acc, set| {
                let fields: Vec<usize> = set.iter().copied().collect();
                for &f in &fields {
                    for &g in &fields {
                        acc[f * n + g] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; n * n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(CooccurrenceMatrix {
        fields: p.fields.clone(),
        counts,
    })
}

/// Asymmetric proximity matrix over a shared field index.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityMatrix {
    kind: MapKind,
    fields: FieldIndex,
    values: Vec<f64>,
}

impl ProximityMatrix {
    /// Wraps a dense row-major matrix. `values.len()` must be the square of
    /// the index size, and every entry finite and non-negative.
    pub fn from_dense(fields: FieldIndex, values: Vec<f64>, kind: MapKind) -> Result<Self> {
        if values.len() != fields.len() * fields.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} values for a {2}x{2} matrix, got {1}",
                fields.len() * fields.len(),
                values.len(),
                fields.len(),
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "proximity entries must be finite and non-negative, got {bad}"
            )));
        }
        Ok(ProximityMatrix {
            kind,
            fields,
            values,
        })
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn fields(&self) -> &FieldIndex {
        &self.fields
    }

    pub fn n_fields(&self) -> usize {
        self.fields.len()
    }

    pub fn get(&self, f: usize, g: usize) -> f64 {
        self.values[f * self.fields.len() + g]
    }

    pub fn row(&self, f: usize) -> &[f64] {
        let n = self.fields.len();
        &self.values[f * n..(f + 1) * n]
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.fields.len();
        for f in 0..n {
            for g in (f + 1)..n {
                if self.get(f, g) != self.get(g, f) {
                    return false;
                }
            }
        }
        true
    }

    /// Copy with field labels permuted uniformly at random, which destroys
    /// any alignment between matrix structure and field identity while
    /// preserving the weight distribution. Used as an evaluation null model.
    pub fn shuffled_fields(&self, seed: u64) -> ProximityMatrix {
        let n = self.fields.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut values = vec![0.0f64; n * n];
        for f in 0..n {
            for g in 0..n {
                values[perm[f] * n + perm[g]] = self.values[f * n + g];
            }
        }
        ProximityMatrix {
            kind: self.kind,
            fields: self.fields.clone(),
            values,
        }
    }

    /// Writes `field_from,field_to,phi` rows with 12 significant digits.
    /// Every diagonal cell is written even when zero, which pins the full
    /// field universe into the file; off-diagonal zeros are omitted.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let n = self.fields.len();
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["field_from", "field_to", "phi"])?;
        for f in 0..n {
            for g in 0..n {
                let v = self.get(f, g);
                if f == g || v != 0.0 {
                    wtr.write_record([self.fields.id(f), self.fields.id(g), &format_sig12(v)])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a matrix written by [`ProximityMatrix::write_csv`]. The field
    /// universe is the union of ids seen in the file.
    pub fn read_csv<R: Read>(reader: R, kind: MapKind) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let cols = locate(rdr.headers()?, &["field_from", "field_to", "phi"])?;
        let mut triples: Vec<(String, String, f64)> = Vec::new();
        for row in rdr.records() {
            let rec = row?;
            let from = cell(&rec, cols[0], "field_from")?;
            let to = cell(&rec, cols[1], "field_to")?;
            let raw = cell(&rec, cols[2], "phi")?;
            let value: f64 = raw
                .parse()
                .map_err(|_| Error::InvalidInput(format!("unparseable phi value `{raw}`")))?;
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "phi value must be finite and non-negative, got {value}"
                )));
            }
            triples.push((from, to, value));
        }
        let fields = FieldIndex::from_ids(
            triples
                .iter()
                .flat_map(|(a, b, _)| [a.clone(), b.clone()]),
        );
        let n = fields.len();
        let mut values = vec![0.0f64; n * n];
        let mut seen = vec![false; n * n];
        for (from, to, v) in triples {
            let f = fields.position(&from).expect("id from the same file");
            let g = fields.position(&to).expect("id from the same file");
            if seen[f * n + g] {
                return Err(Error::InvalidInput(format!(
                    "duplicate entry for ({from}, {to})"
                )));
            }
            seen[f * n + g] = true;
            values[f * n + g] = v;
        }
        Ok(ProximityMatrix {
            kind,
            fields,
            values,
        })
    }
}

/// Formats with 12 significant digits, enough for an f64 round trip to stay
/// within 1e-12 of the original on values in [0, 1].
pub fn format_sig12(v: f64) -> String {
    format!("{v:.11e}")
}

/// Formats with 6 significant digits.
pub fn format_sig6(v: f64) -> String {
    format!("{v:.5e}")
}

/// Normalizes co-occurrence counts column-wise: `phi[f][g] = M[f][g] / |g|`,
/// zero where field `g` has no members. `m` and `p` must come from the same
/// binarized presence; the diagonal of `m` is checked against the member
/// counts of `p` to catch mismatched inputs.
pub fn proximity(m: &CooccurrenceMatrix, p: &BinaryPresence) -> Result<ProximityMatrix> {
    if m.fields != p.fields {
        return Err(Error::FieldIndexMismatch(
            "co-occurrence and presence cover different field sets".into(),
        ));
    }
    let counts = p.member_counts();
    let n = m.fields.len();
    for (f, &count) in counts.iter().enumerate() {
        if m.get(f, f) != count {
            return Err(Error::InvalidInput(format!(
                "co-occurrence diagonal for `{}` disagrees with the membership count; \
                 inputs come from different binarizations",
                m.fields.id(f)
            )));
        }
    }
    let mut values = vec![0.0f64; n * n];
    for f in 0..n {
        for g in 0..n {
            if counts[g] > 0 {
                values[f * n + g] = m.get(f, g) as f64 / counts[g] as f64;
            }
        }
    }
    Ok(ProximityMatrix {
        kind: MapKind::ResearchSpace,
        fields: m.fields.clone(),
        values,
    })
}

/// Symmetrizes by the pairwise maximum: both directions of a pair get
/// `max(phi[f][g], phi[g][f])`. The diagonal is left as is.
pub fn symmetrize_max(phi: &ProximityMatrix) -> ProximityMatrix {
    let n = phi.fields.len();
    let mut values = phi.values.clone();
    for f in 0..n {
        for g in (f + 1)..n {
            let m = phi.get(f, g).max(phi.get(g, f));
            values[f * n + g] = m;
            values[g * n + f] = m;
        }
    }
    ProximityMatrix {
        kind: phi.kind,
        fields: phi.fields.clone(),
        values,
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExternalMapReport {
    /// Edges whose endpoints were both known.
    pub edges_loaded: usize,
    /// Edges skipped because an endpoint is not in the field index.
    pub skipped_edges: usize,
    /// The unknown ids encountered.
    pub unknown_fields: BTreeSet<String>,
}

/// Loads an external science map given as `field_i,field_j,weight` rows into
/// a symmetric matrix over an existing field index. Edges touching unknown
/// fields are skipped and reported; negative weights and repeated pairs with
/// conflicting weights are hard errors.
pub fn load_external_map<R: Read>(
    reader: R,
    fields: &FieldIndex,
) -> Result<(ProximityMatrix, ExternalMapReport)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let cols = locate(rdr.headers()?, &["field_i", "field_j", "weight"])?;
    let n = fields.len();
    let mut values = vec![0.0f64; n * n];
    let mut seen: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut report = ExternalMapReport::default();
    for row in rdr.records() {
        let rec = row?;
        let a = cell(&rec, cols[0], "field_i")?;
        let b = cell(&rec, cols[1], "field_j")?;
        let raw = cell(&rec, cols[2], "weight")?;
        let weight: f64 = raw
            .parse()
            .map_err(|_| Error::InvalidInput(format!("unparseable weight `{raw}`")))?;
        if !weight.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite weight for ({a}, {b})"
            )));
        }
        if weight < 0.0 {
            return Err(Error::InvalidInput(format!(
                "negative weight {weight} for ({a}, {b})"
            )));
        }
        let (fa, fb) = (fields.position(&a), fields.position(&b));
        let (fa, fb) = match (fa, fb) {
            (Some(fa), Some(fb)) => (fa, fb),
            _ => {
                report.skipped_edges += 1;
                if fields.position(&a).is_none() {
                    report.unknown_fields.insert(a);
                }
                if fields.position(&b).is_none() {
                    report.unknown_fields.insert(b);
                }
                continue;
            }
        };
        let key = (fa.min(fb), fa.max(fb));
        if let Some(&existing) = seen.get(&key) {
            if existing != weight {
                return Err(Error::InvalidInput(format!(
                    "edge ({a}, {b}) appears twice with weights {existing} and {weight}"
                )));
            }
            continue;
        }
        seen.insert(key, weight);
        report.edges_loaded += 1;
        values[fa * n + fb] = weight;
        values[fb * n + fa] = weight;
    }
    Ok((
        ProximityMatrix {
            kind: MapKind::External,
            fields: fields.clone(),
            values,
        },
        report,
    ))
}

fn locate(headers: &csv::StringRecord, names: &[&str]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        })
        .collect()
}

fn cell(rec: &csv::StringRecord, col: usize, name: &str) -> Result<String> {
    let v = rec
        .get(col)
        .ok_or_else(|| Error::InvalidInput(format!("row missing value for `{name}`")))?;
    if v.is_empty() {
        return Err(Error::InvalidInput(format!("empty value for `{name}`")));
    }
    Ok(v.to_string())
}
