//! Revealed comparative advantage and discrete activity states.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::space::{format_sig6, PresenceMatrix};
use crate::types::{AggregationLevel, FieldIndex, YearWindow};

/// Sparse entity-by-field matrix of revealed comparative advantage.
///
/// `rca[s][f]` compares the share of `s`'s output in field `f` with the share
/// of `f` in total output: values above 1 mean the entity is specialized in
/// the field. Cells with zero presence are structurally absent (RCA zero).
#[derive(Debug, Clone, PartialEq)]
pub struct RcaMatrix {
    level: AggregationLevel,
    window: YearWindow,
    fields: FieldIndex,
    rows: BTreeMap<String, BTreeMap<usize, f64>>,
}

impl RcaMatrix {
    /// Builds directly from per-entity cells; values must be positive and
    /// finite. Intended for tests and artifact loading.
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
                        "RCA cell ({entity}, {f}) must be finite and positive, got {v}"
                    )));
                }
            }
        }
        Ok(RcaMatrix {
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
}

/// Computes RCA from a presence matrix:
/// `(x_sf / sum_f x_sf) / (sum_s x_sf / sum_sf x_sf)`.
///
/// Scaling every presence cell by a common factor leaves the result
/// unchanged up to float rounding. An entirely empty presence matrix has no
/// meaningful normalizer and is an error.
pub fn rca(x: &PresenceMatrix) -> Result<RcaMatrix> {
    let grand = x.grand_total();
    if grand <= 0.0 {
        return Err(Error::InvalidInput(
            "presence matrix is empty; RCA is undefined".into(),
        ));
    }
    let field_totals = x.field_totals();
    let mut rows: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
    for entity in x.entities() {
        let row = x.row(entity).expect("entity listed by the matrix");
        let entity_total: f64 = row.values().sum();
        let cells: BTreeMap<usize, f64> = row
            .iter()
            .map(|(&f, &v)| {
                let value = (v / entity_total) / (field_totals[f] / grand);
                (f, value)
            })
            .collect();
        rows.insert(entity.to_string(), cells);
    }
    Ok(RcaMatrix {
        level: x.level(),
        window: x.window(),
        fields: x.fields().clone(),
        rows,
    })
}

/// The four activity bands an entity can occupy in a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActivityState {
    Inactive,
    Nascent,
    Intermediate,
    Developed,
}

impl ActivityState {
    /// Band boundaries: `[0]`, `(0, 0.5)`, `[0.5, 1)`, `[1, inf)`.
    pub fn classify(rca: f64) -> ActivityState {
        if rca >= 1.0 {
            ActivityState::Developed
        } else if rca >= 0.5 {
            ActivityState::Intermediate
        } else if rca > 0.0 {
            ActivityState::Nascent
        } else {
            ActivityState::Inactive
        }
    }

    /// Any nonzero activity counts as active.
    pub fn is_active(self) -> bool {
        self != ActivityState::Inactive
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActivityState::Inactive => "inactive",
            ActivityState::Nascent => "nascent",
            ActivityState::Intermediate => "intermediate",
            ActivityState::Developed => "developed",
        }
    }
}

impl std::fmt::Display for ActivityState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActivityState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inactive" => Ok(ActivityState::Inactive),
            "nascent" => Ok(ActivityState::Nascent),
            "intermediate" => Ok(ActivityState::Intermediate),
            "developed" => Ok(ActivityState::Developed),
            other => Err(Error::InvalidInput(format!(
                "unknown activity state `{other}`"
            ))),
        }
    }
}

/// Activity states per entity and field. Only non-inactive cells are stored;
/// an entity may be present with an empty row, meaning it is known but
/// inactive everywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateMatrix {
    level: AggregationLevel,
    window: YearWindow,
    fields: FieldIndex,
    rows: BTreeMap<String, BTreeMap<usize, ActivityState>>,
}

impl StateMatrix {
    pub fn new(
        level: AggregationLevel,
        window: YearWindow,
        fields: FieldIndex,
        rows: BTreeMap<String, BTreeMap<usize, ActivityState>>,
    ) -> Result<Self> {
        for (entity, row) in &rows {
            for (&f, &st) in row {
                if f >= fields.len() {
                    return Err(Error::FieldIndexMismatch(format!(
                        "cell ({entity}, {f}) outside the field index"
                    )));
                }
                if st == ActivityState::Inactive {
                    return Err(Error::InvalidInput(format!(
                        "cell ({entity}, {f}) stores an explicit inactive state; \
                         inactive cells must be absent"
                    )));
                }
            }
        }
        Ok(StateMatrix {
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

    pub fn contains_entity(&self, entity_id: &str) -> bool {
        self.rows.contains_key(entity_id)
    }

    /// Non-inactive cells of one entity.
    pub fn row(&self, entity_id: &str) -> Option<&BTreeMap<usize, ActivityState>> {
        self.rows.get(entity_id)
    }

    /// State of a known entity in a field; `None` for unknown entities.
    pub fn state(&self, entity_id: &str, field: usize) -> Option<ActivityState> {
        self.rows.get(entity_id).map(|row| {
            row.get(&field)
                .copied()
                .unwrap_or(ActivityState::Inactive)
        })
    }
}

/// Discretizes an RCA matrix into activity states.
pub fn classify_states(rca: &RcaMatrix) -> StateMatrix {
    let rows: BTreeMap<String, BTreeMap<usize, ActivityState>> = rca
        .rows
        .iter()
        .map(|(entity, row)| {
            let states: BTreeMap<usize, ActivityState> = row
                .iter()
                .map(|(&f, &v)| (f, ActivityState::classify(v)))
                .collect();
            (entity.clone(), states)
        })
        .collect();
    StateMatrix {
        level: rca.level,
        window: rca.window,
        fields: rca.fields.clone(),
        rows,
    }
}

/// Writes `entity_id,field_id,rca,state` rows, one per non-inactive cell,
/// sorted by entity then field position. RCA is written with 6 significant
/// digits.
pub fn write_states_csv<W: Write>(rca: &RcaMatrix, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["entity_id", "field_id", "rca", "state"])?;
    for (entity, row) in &rca.rows {
        for (&f, &v) in row {
            wtr.write_record([
                entity.as_str(),
                rca.fields.id(f),
                &format_sig6(v),
                ActivityState::classify(v).as_str(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a file written by [`write_states_csv`] back into paired RCA and
/// state matrices over the given field index. The state column is taken as
/// stored rather than re-derived, since printed RCA values are rounded.
pub fn read_states_csv<R: Read>(
    reader: R,
    fields: &FieldIndex,
    level: AggregationLevel,
    window: YearWindow,
) -> Result<(RcaMatrix, StateMatrix)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut cols = [0usize; 4];
    for (slot, name) in cols.iter_mut().zip(["entity_id", "field_id", "rca", "state"]) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let mut rca_rows: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
    let mut state_rows: BTreeMap<String, BTreeMap<usize, ActivityState>> = BTreeMap::new();
    for row in rdr.records() {
        let rec = row?;
        let get = |i: usize| -> Result<&str> {
            rec.get(cols[i])
                .ok_or_else(|| Error::InvalidInput("short row in states file".into()))
        };
        let entity = get(0)?.to_string();
        let field_id = get(1)?;
        let f = fields.position(field_id).ok_or_else(|| {
            Error::FieldIndexMismatch(format!(
                "states file references field `{field_id}` absent from the field index"
            ))
        })?;
        let value: f64 = get(2)?
            .parse()
            .map_err(|_| Error::InvalidInput(format!("unparseable rca `{}`", get(2).unwrap())))?;
        let state: ActivityState = get(3)?.parse()?;
        if state == ActivityState::Inactive {
            return Err(Error::InvalidInput(
                "states file stores an explicit inactive cell".into(),
            ));
        }
        rca_rows.entry(entity.clone()).or_default().insert(f, value);
        state_rows.entry(entity).or_default().insert(f, state);
    }
    let rca = RcaMatrix::from_rows(level, window, fields.clone(), rca_rows)?;
    let states = StateMatrix::new(level, window, fields.clone(), state_rows)?;
    Ok((rca, states))
}
