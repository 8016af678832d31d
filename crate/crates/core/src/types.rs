//! Small shared vocabulary types.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Granularity at which careers are analyzed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AggregationLevel {
    Author,
    Organization,
    Country,
}

impl AggregationLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            AggregationLevel::Author => "author",
            AggregationLevel::Organization => "organization",
            AggregationLevel::Country => "country",
        }
    }

    /// Default yearly activity floor used by the evaluation inclusion filter.
    pub fn default_inclusion_floor(self) -> f64 {
        match self {
            AggregationLevel::Author => 3.0,
            AggregationLevel::Organization | AggregationLevel::Country => 30.0,
        }
    }
}

impl fmt::Display for AggregationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AggregationLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "author" => Ok(AggregationLevel::Author),
            "organization" => Ok(AggregationLevel::Organization),
            "country" => Ok(AggregationLevel::Country),
            other => Err(Error::InvalidInput(format!(
                "unknown aggregation level `{other}` (expected author, organization, or country)"
            ))),
        }
    }
}

/// Provenance of a proximity matrix: built from career paths here, or loaded
/// from an external citation-based science map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MapKind {
    ResearchSpace,
    External,
}

impl MapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MapKind::ResearchSpace => "research-space",
            MapKind::External => "external",
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "research-space" => Ok(MapKind::ResearchSpace),
            "external" => Ok(MapKind::External),
            other => Err(Error::InvalidInput(format!(
                "unknown map kind `{other}` (expected research-space or external)"
            ))),
        }
    }
}

/// Half-open year interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct YearWindow {
    start: i32,
    end: i32,
}

impl YearWindow {
    pub fn new(start: i32, end: i32) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidInput(format!(
                "empty year window [{start}, {end})"
            )));
        }
        Ok(YearWindow { start, end })
    }

    /// Builds from an inclusive `[first, last]` pair.
    pub fn from_inclusive(first: i32, last: i32) -> Result<Self> {
        if last == i32::MAX {
            return Err(Error::InvalidInput("year out of range".into()));
        }
        Self::new(first, last + 1)
    }

    pub fn start(self) -> i32 {
        self.start
    }

    /// Exclusive upper bound.
    pub fn end(self) -> i32 {
        self.end
    }

    pub fn contains(self, year: i32) -> bool {
        self.start <= year && year < self.end
    }

    pub fn years(self) -> impl Iterator<Item = i32> {
        self.start..self.end
    }
}

impl fmt::Display for YearWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// Stable, sorted universe of field ids shared by the matrices of one run.
///
/// Positions are assigned in ascending lexicographic id order, so two indexes
/// built from the same id set are interchangeable.
#[derive(Debug, Clone)]
pub struct FieldIndex {
    ids: Vec<String>,
    pos: HashMap<String, usize>,
}

impl FieldIndex {
    pub fn from_ids<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let unique: BTreeSet<String> = ids.into_iter().map(Into::into).collect();
        let ids: Vec<String> = unique.into_iter().collect();
        let pos = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        FieldIndex { ids, pos }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Field id at `position`. Panics when out of bounds.
    pub fn id(&self, position: usize) -> &str {
        &self.ids[position]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.pos.get(id).copied()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

impl PartialEq for FieldIndex {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids
    }
}

impl Eq for FieldIndex {}
