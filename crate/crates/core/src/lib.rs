//! Builds a field-to-field research space from scholars' publication careers
//! and scores how entities (authors, organizations, countries) move through it.
//!
//! The pipeline, end to end:
//!
//! 1. [`ingest`]: parse raw publication records, drop hyper-prolific author
//!    ids, attach journal-level field labels with fractional weights, and
//!    optionally relabel authors as organizations or countries.
//! 2. [`space`]: accumulate the entity-by-field presence matrix, binarize it,
//!    count career co-occurrences, and normalize them into the
//!    conditional-probability matrix `phi` (the research space). External
//!    science maps load into the same matrix type for side-by-side use.
//! 3. [`states`]: revealed comparative advantage per entity and field over an
//!    observation window, discretized into four activity states.
//! 4. [`predict`]: relatedness density over any proximity matrix and ranked
//!    transition candidates per entity.
//! 5. [`evaluate`]: realized-transition labels, per-entity ROC/AUC, activity
//!    inclusion filtering, boxplot summaries, two-group ANOVA, and map
//!    correlation, collected into serializable reports ([`report`]).
//! 6. [`backbone`]: maximum-spanning-tree plus threshold backbone extraction
//!    with GraphML, DOT, and JSON export.
//! 7. [`synth`]: seeded block-structured corpus generator for end-to-end
//!    validation at desk scale.
//!
//! Everything is deterministic: given the same inputs, configuration, and
//! seeds, every artifact is byte-identical regardless of thread count.

pub mod backbone;
pub mod error;
pub mod evaluate;
pub mod ingest;
pub mod predict;
pub mod report;
pub mod space;
pub mod states;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use types::{AggregationLevel, FieldIndex, MapKind, YearWindow};
