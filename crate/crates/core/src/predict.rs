//! Relatedness density and ranked transition candidates.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::space::{format_sig12, ProximityMatrix};
use crate::states::{ActivityState, RcaMatrix, StateMatrix};
use crate::types::{AggregationLevel, FieldIndex, MapKind};

/// The transition families that can be predicted and evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TransitionKind {
    /// From no activity to any activity.
    InactiveToActive,
    /// From the nascent band to the developed band.
    NascentToDeveloped,
    /// From the intermediate band to the developed band.
    IntermediateToDeveloped,
}

impl TransitionKind {
    pub const ALL: [TransitionKind; 3] = [
        TransitionKind::InactiveToActive,
        TransitionKind::NascentToDeveloped,
        TransitionKind::IntermediateToDeveloped,
    ];

    /// Band an entity must occupy at the start for the field to be a
    /// candidate.
    pub fn initial_state(self) -> ActivityState {
        match self {
            TransitionKind::InactiveToActive => ActivityState::Inactive,
            TransitionKind::NascentToDeveloped => ActivityState::Nascent,
            TransitionKind::IntermediateToDeveloped => ActivityState::Intermediate,
        }
    }

    /// Whether an end-window state counts as having made the transition.
    pub fn target_reached(self, state: ActivityState) -> bool {
        match self {
            TransitionKind::InactiveToActive => state.is_active(),
            TransitionKind::NascentToDeveloped | TransitionKind::IntermediateToDeveloped => {
                state == ActivityState::Developed
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TransitionKind::InactiveToActive => "inactive_to_active",
            TransitionKind::NascentToDeveloped => "nascent_to_developed",
            TransitionKind::IntermediateToDeveloped => "intermediate_to_developed",
        }
    }
}

impl std::fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inactive_to_active" => Ok(TransitionKind::InactiveToActive),
            "nascent_to_developed" => Ok(TransitionKind::NascentToDeveloped),
            "intermediate_to_developed" => Ok(TransitionKind::IntermediateToDeveloped),
            other => Err(Error::InvalidInput(format!(
                "unknown transition `{other}` (expected inactive_to_active, \
                 nascent_to_developed, or intermediate_to_developed)"
            ))),
        }
    }
}

/// Which fields of an entity's RCA row feed the density numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UVariant {
    /// Fields with RCA >= 1.
    Developed,
    /// Fields with RCA > 0. A non-strict reading (RCA >= 0) would flag every
    /// field for every entity and make the density constant, so activity is
    /// read strictly.
    Active,
}

impl UVariant {
    pub fn flags(self, rca: f64) -> bool {
        match self {
            UVariant::Developed => rca >= 1.0,
            UVariant::Active => rca > 0.0,
        }
    }
}

/// A transition to predict together with the anchor-set rule used for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionSpec {
    pub kind: TransitionKind,
    pub u_variant: UVariant,
}

impl TransitionSpec {
    /// The standard pairing: entries into new fields are anchored on every
    /// active field, while development of an already-entered field is
    /// anchored on the developed set only.
    pub fn standard(kind: TransitionKind) -> Self {
        let u_variant = match kind {
            TransitionKind::InactiveToActive => UVariant::Active,
            TransitionKind::NascentToDeveloped | TransitionKind::IntermediateToDeveloped => {
                UVariant::Developed
            }
        };
        TransitionSpec { kind, u_variant }
    }

    pub fn initial_state(&self) -> ActivityState {
        self.kind.initial_state()
    }

    pub fn target_reached(&self, state: ActivityState) -> bool {
        self.kind.target_reached(state)
    }
}

/// Binary anchor sets per entity: the fields whose proximity pulls a
/// candidate field's density up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UMatrix {
    level: AggregationLevel,
    fields: FieldIndex,
    rows: BTreeMap<String, Vec<usize>>,
}

impl UMatrix {
    /// Rows hold ascending field positions; entities with empty anchor sets
    /// are kept so their densities are defined (and zero).
    pub fn new(
        level: AggregationLevel,
        fields: FieldIndex,
        rows: BTreeMap<String, Vec<usize>>,
    ) -> Result<Self> {
        for (entity, flagged) in &rows {
            if flagged.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidInput(format!(
                    "anchor set of `{entity}` is not strictly ascending"
                )));
            }
            if flagged.last().is_some_and(|&f| f >= fields.len()) {
                return Err(Error::FieldIndexMismatch(format!(
                    "anchor set of `{entity}` is outside the field index"
                )));
            }
        }
        Ok(UMatrix {
            level,
            fields,
            rows,
        })
    }

    pub fn level(&self) -> AggregationLevel {
        self.level
    }

    pub fn fields(&self) -> &FieldIndex {
        &self.fields
    }

    pub fn n_entities(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, entity_id: &str) -> Option<&[usize]> {
        self.rows.get(entity_id).map(Vec::as_slice)
    }

    pub fn flags(&self, entity_id: &str, field: usize) -> bool {
        self.rows
            .get(entity_id)
            .is_some_and(|r| r.binary_search(&field).is_ok())
    }
}

/// Extracts the anchor sets from an RCA matrix under the given rule.
pub fn u_matrix(rca: &RcaMatrix, spec: &TransitionSpec) -> UMatrix {
    let rows: BTreeMap<String, Vec<usize>> = rca
        .entities()
        .map(|entity| {
            let row = rca.row(entity).expect("entity listed by the matrix");
            let flagged: Vec<usize> = row
                .iter()
                .filter(|(_, &v)| spec.u_variant.flags(v))
                .map(|(&f, _)| f)
                .collect();
            (entity.to_string(), flagged)
        })
        .collect();
    UMatrix {
        level: rca.level(),
        fields: rca.fields().clone(),
        rows,
    }
}

/// Extra controls for [`density_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DensityOptions {
    /// Use `phi[g][f]` instead of `phi[f][g]`, i.e. condition in the other
    /// direction. Off by default.
    pub transpose: bool,
}

/// Dense per-entity density scores over the full field index.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityScores {
    level: AggregationLevel,
    map_kind: MapKind,
    fields: FieldIndex,
    rows: BTreeMap<String, Vec<f64>>,
}

impl DensityScores {
    /// Wraps precomputed rows; each row must span the full index. Intended
    /// for tests that inject arbitrary scores.
    pub fn new(
        level: AggregationLevel,
        map_kind: MapKind,
        fields: FieldIndex,
        rows: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self> {
        for (entity, row) in &rows {
            if row.len() != fields.len() {
                return Err(Error::FieldIndexMismatch(format!(
                    "density row of `{entity}` has {} cells, index has {}",
                    row.len(),
                    fields.len()
                )));
            }
        }
        Ok(DensityScores {
            level,
            map_kind,
            fields,
            rows,
        })
    }

    pub fn level(&self) -> AggregationLevel {
        self.level
    }

    pub fn map_kind(&self) -> MapKind {
        self.map_kind
    }

    pub fn fields(&self) -> &FieldIndex {
        &self.fields
    }

    pub fn n_entities(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, entity_id: &str) -> Option<&[f64]> {
        self.rows.get(entity_id).map(Vec::as_slice)
    }

    pub fn get(&self, entity_id: &str, field: usize) -> Option<f64> {
        self.rows.get(entity_id).map(|r| r[field])
    }
}

/// Relatedness density with the default options.
pub fn density(u: &UMatrix, phi: &ProximityMatrix) -> Result<DensityScores> {
    density_with(u, phi, DensityOptions::default())
}

/// Relatedness density: for entity `s` and field `f`,
/// `omega[s][f] = sum over anchored g of phi[f][g] / sum over all g of phi[f][g]`.
///
/// Both sums run over the entire row including the diagonal. Fields whose
/// phi row sums to zero get zero density. Scaling a phi row by a positive
/// constant cancels out, so only the row-internal profile matters.
pub fn density_with(
    u: &UMatrix,
    phi: &ProximityMatrix,
    opts: DensityOptions,
) -> Result<DensityScores> {
    if u.fields != *phi.fields() {
        return Err(Error::FieldIndexMismatch(
            "anchor sets and proximity matrix cover different field sets".into(),
        ));
    }
    let n = u.fields.len();
    let eff = |f: usize, g: usize| {
        if opts.transpose {
            phi.get(g, f)
        } else {
            phi.get(f, g)
        }
    };
    let row_sums: Vec<f64> = (0..n)
        .map(|f| (0..n).map(|g| eff(f, g)).sum())
        .collect();
    let entries: Vec<(&String, &Vec<usize>)> = u.rows.iter().collect();
    let rows: BTreeMap<String, Vec<f64>> = entries
        .par_iter()
        .map(|(entity, anchors)| {
            let omega: Vec<f64> = (0..n)
                .map(|f| {
                    if row_sums[f] > 0.0 {
                        let num: f64 = anchors.iter().map(|&g| eff(f, g)).sum();
                        num / row_sums[f]
                    } else {
                        0.0
                    }
                })
                .collect();
            ((*entity).clone(), omega)
        })
        .collect();
    Ok(DensityScores {
        level: u.level,
        map_kind: phi.kind(),
        fields: u.fields.clone(),
        rows,
    })
}

/// One scored candidate field for one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub field_id: String,
    pub omega: f64,
    /// 1-based position after sorting by descending omega.
    pub rank: u32,
    /// True when at least one other candidate of the same entity has an
    /// identical omega.
    pub tied: bool,
}

/// Ranked candidate lists per entity for one transition and one map.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPredictions {
    level: AggregationLevel,
    map_kind: MapKind,
    transition: TransitionKind,
    rows: BTreeMap<String, Vec<Prediction>>,
}

impl RankedPredictions {
    pub fn level(&self) -> AggregationLevel {
        self.level
    }

    pub fn map_kind(&self) -> MapKind {
        self.map_kind
    }

    pub fn transition(&self) -> TransitionKind {
        self.transition
    }

    pub fn n_entities(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[Prediction])> {
        self.rows.iter().map(|(e, p)| (e.as_str(), p.as_slice()))
    }

    pub fn row(&self, entity_id: &str) -> Option<&[Prediction]> {
        self.rows.get(entity_id).map(Vec::as_slice)
    }

    /// Candidates across all entities.
    pub fn n_candidates(&self) -> usize {
        self.rows.values().map(Vec::len).sum()
    }

    /// Candidates flagged as tied.
    pub fn n_tied(&self) -> usize {
        self.rows
            .values()
            .flat_map(|row| row.iter())
            .filter(|p| p.tied)
            .count()
    }
}

/// For every entity in `states`, ranks the fields sitting in the
/// transition's initial band by descending density. Equal scores are ordered
/// by ascending field position (hence ascending id) to keep output
/// deterministic, and flagged as tied. Entities absent from `omega` score
/// zero everywhere.
pub fn rank_candidates(
    omega: &DensityScores,
    states: &StateMatrix,
    spec: &TransitionSpec,
) -> Result<RankedPredictions> {
    if omega.fields != *states.fields() {
        return Err(Error::FieldIndexMismatch(
            "density scores and states cover different field sets".into(),
        ));
    }
    if omega.level != states.level() {
        return Err(Error::LevelMismatch(omega.level, states.level()));
    }
    let initial = spec.initial_state();
    let n = omega.fields.len();
    let mut rows: BTreeMap<String, Vec<Prediction>> = BTreeMap::new();
    for entity in states.entities() {
        let score_row = omega.row(entity);
        let mut candidates: Vec<(usize, f64)> = (0..n)
            .filter(|&f| states.state(entity, f) == Some(initial))
            .map(|f| (f, score_row.map(|r| r[f]).unwrap_or(0.0)))
            .collect();
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let predictions: Vec<Prediction> = candidates
            .iter()
            .enumerate()
            .map(|(i, &(f, score))| {
                let tied = (i > 0 && candidates[i - 1].1 == score)
                    || (i + 1 < candidates.len() && candidates[i + 1].1 == score);
                Prediction {
                    field_id: omega.fields.id(f).to_string(),
                    omega: score,
                    rank: (i + 1) as u32,
                    tied,
                }
            })
            .collect();
        rows.insert(entity.to_string(), predictions);
    }
    Ok(RankedPredictions {
        level: states.level(),
        map_kind: omega.map_kind,
        transition: spec.kind,
        rows,
    })
}

/// Writes `entity_id,field_id,omega,rank,map_kind,transition` rows in rank
/// order per entity, entities sorted by id. Omega carries 12 significant
/// digits. Entities whose candidate list is empty leave no rows.
pub fn write_predictions_csv<W: Write>(preds: &RankedPredictions, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "entity_id",
        "field_id",
        "omega",
        "rank",
        "map_kind",
        "transition",
    ])?;
    for (entity, row) in &preds.rows {
        for p in row {
            wtr.write_record([
                entity.as_str(),
                p.field_id.as_str(),
                &format_sig12(p.omega),
                &p.rank.to_string(),
                preds.map_kind.as_str(),
                preds.transition.as_str(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a file written by [`write_predictions_csv`]. Map kind and
/// transition must be uniform across rows; tie flags are recomputed from the
/// parsed scores. The file must not be empty of rows, since the map kind and
/// transition would be unknowable.
pub fn read_predictions_csv<R: Read>(
    reader: R,
    level: AggregationLevel,
) -> Result<RankedPredictions> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names = [
        "entity_id",
        "field_id",
        "omega",
        "rank",
        "map_kind",
        "transition",
    ];
    let mut cols = [0usize; 6];
    for (slot, name) in cols.iter_mut().zip(names) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let mut rows: BTreeMap<String, Vec<Prediction>> = BTreeMap::new();
    let mut tags: Option<(MapKind, TransitionKind)> = None;
    for row in rdr.records() {
        let rec = row?;
        let get = |i: usize| -> Result<&str> {
            rec.get(cols[i])
                .ok_or_else(|| Error::InvalidInput("short row in predictions file".into()))
        };
        let omega: f64 = get(2)?
            .parse()
            .map_err(|_| Error::InvalidInput(format!("unparseable omega `{}`", get(2).unwrap())))?;
        let rank: u32 = get(3)?
            .parse()
            .map_err(|_| Error::InvalidInput(format!("unparseable rank `{}`", get(3).unwrap())))?;
        let kind: MapKind = get(4)?.parse()?;
        let transition: TransitionKind = get(5)?.parse()?;
        match tags {
            None => tags = Some((kind, transition)),
            Some(t) if t != (kind, transition) => {
                return Err(Error::InvalidInput(
                    "predictions file mixes map kinds or transitions".into(),
                ));
            }
            Some(_) => {}
        }
        rows.entry(get(0)?.to_string()).or_default().push(Prediction {
            field_id: get(1)?.to_string(),
            omega,
            rank,
            tied: false,
        });
    }
    let (map_kind, transition) = tags.ok_or(Error::InvalidInput(
        "predictions file contains no rows".into(),
    ))?;
    for row in rows.values_mut() {
        row.sort_by_key(|p| p.rank);
        if row.iter().enumerate().any(|(i, p)| p.rank as usize != i + 1) {
            return Err(Error::InvalidInput(
                "prediction ranks are not consecutive from 1".into(),
            ));
        }
        let scores: Vec<f64> = row.iter().map(|p| p.omega).collect();
        for (i, p) in row.iter_mut().enumerate() {
            p.tied = (i > 0 && scores[i - 1] == p.omega)
                || (i + 1 < scores.len() && scores[i + 1] == p.omega);
        }
    }
    Ok(RankedPredictions {
        level,
        map_kind,
        transition,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::YearWindow;

    fn index(n: usize) -> FieldIndex {
        FieldIndex::from_ids((0..n).map(|i| format!("f{i}")))
    }

    fn window() -> YearWindow {
        YearWindow::new(2008, 2011).unwrap()
    }

    fn rca_from(rows: &[(&str, &[(usize, f64)])], n: usize) -> RcaMatrix {
        let map: BTreeMap<String, BTreeMap<usize, f64>> = rows
            .iter()
            .map(|(e, cells)| (e.to_string(), cells.iter().copied().collect()))
            .collect();
        RcaMatrix::from_rows(AggregationLevel::Author, window(), index(n), map).unwrap()
    }

    fn phi_from(values: Vec<f64>, n: usize) -> ProximityMatrix {
        ProximityMatrix::from_dense(index(n), values, MapKind::ResearchSpace).unwrap()
    }

    #[test]
    fn u_matrix_applies_the_band_rule() {
        let r = rca_from(&[("a", &[(0, 1.0), (1, 0.4), (2, 2.0)])], 4);
        let developed = u_matrix(&r, &TransitionSpec::standard(TransitionKind::NascentToDeveloped));
        assert_eq!(developed.row("a").unwrap(), &[0, 2]);
        assert!(developed.flags("a", 0));
        assert!(!developed.flags("a", 1));
        let active = u_matrix(&r, &TransitionSpec::standard(TransitionKind::InactiveToActive));
        assert_eq!(active.row("a").unwrap(), &[0, 1, 2]);
        assert!(!active.flags("a", 3));
    }

    #[test]
    fn standard_specs_pair_bands_and_anchors() {
        let ia = TransitionSpec::standard(TransitionKind::InactiveToActive);
        assert_eq!(ia.u_variant, UVariant::Active);
        assert_eq!(ia.initial_state(), ActivityState::Inactive);
        assert!(ia.target_reached(ActivityState::Nascent));
        assert!(ia.target_reached(ActivityState::Developed));
        assert!(!ia.target_reached(ActivityState::Inactive));

        let nd = TransitionSpec::standard(TransitionKind::NascentToDeveloped);
        assert_eq!(nd.u_variant, UVariant::Developed);
        assert!(!nd.target_reached(ActivityState::Intermediate));
        assert!(nd.target_reached(ActivityState::Developed));
    }

    #[test]
    fn density_matches_the_worked_example() {
        // phi row for f0 is (0, 0.6, 0.2); the anchor set holds f1 only.
        let phi = phi_from(
            vec![
                0.0, 0.6, 0.2, //
                0.6, 0.0, 0.0, //
                0.2, 0.0, 0.0,
            ],
            3,
        );
        let u = UMatrix::new(
            AggregationLevel::Author,
            index(3),
            [("a".to_string(), vec![1])].into(),
        )
        .unwrap();
        let omega = density(&u, &phi).unwrap();
        assert!((omega.get("a", 0).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn density_with_full_anchor_set_is_one() {
        let phi = phi_from(
            vec![
                1.0, 0.3, 0.0, //
                0.3, 1.0, 0.0, //
                0.0, 0.0, 0.0,
            ],
            3,
        );
        let u = UMatrix::new(
            AggregationLevel::Author,
            index(3),
            [("a".to_string(), vec![0, 1, 2])].into(),
        )
        .unwrap();
        let omega = density(&u, &phi).unwrap();
        assert_eq!(omega.get("a", 0).unwrap(), 1.0);
        assert_eq!(omega.get("a", 1).unwrap(), 1.0);
        // Row f2 sums to zero, so its density is zero even here.
        assert_eq!(omega.get("a", 2).unwrap(), 0.0);
    }

    #[test]
    fn density_of_empty_anchor_set_is_zero() {
        let phi = phi_from(vec![0.0, 0.5, 0.5, 0.0], 2);
        let u = UMatrix::new(
            AggregationLevel::Author,
            index(2),
            [("a".to_string(), vec![])].into(),
        )
        .unwrap();
        let omega = density(&u, &phi).unwrap();
        assert_eq!(omega.get("a", 0).unwrap(), 0.0);
        assert_eq!(omega.get("a", 1).unwrap(), 0.0);
    }

    #[test]
    fn density_includes_the_diagonal_in_both_sums() {
        // phi row f0 = (1.0, 0.5); anchoring f0 itself gives 1.0/1.5.
        let phi = phi_from(vec![1.0, 0.5, 0.5, 1.0], 2);
        let u = UMatrix::new(
            AggregationLevel::Author,
            index(2),
            [("a".to_string(), vec![0])].into(),
        )
        .unwrap();
        let omega = density(&u, &phi).unwrap();
        assert!((omega.get("a", 0).unwrap() - 1.0 / 1.5).abs() < 1e-15);
        assert!((omega.get("a", 1).unwrap() - 0.5 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn density_transpose_conditions_the_other_way() {
        let phi = phi_from(
            vec![
                0.0, 0.8, //
                0.2, 0.0,
            ],
            2,
        );
        let u = UMatrix::new(
            AggregationLevel::Author,
            index(2),
            [("a".to_string(), vec![1])].into(),
        )
        .unwrap();
        let normal = density_with(&u, &phi, DensityOptions { transpose: false }).unwrap();
        let flipped = density_with(&u, &phi, DensityOptions { transpose: true }).unwrap();
        assert_eq!(normal.get("a", 0).unwrap(), 1.0); // 0.8 / 0.8
        assert_eq!(flipped.get("a", 0).unwrap(), 1.0); // 0.2 / 0.2
        assert_eq!(normal.get("a", 1).unwrap(), 0.0);
        assert_eq!(flipped.get("a", 1).unwrap(), 0.0);
    }

    #[test]
    fn density_rejects_mismatched_indexes() {
        let phi = phi_from(vec![0.0], 1);
        let u = UMatrix::new(AggregationLevel::Author, index(2), BTreeMap::new()).unwrap();
        assert!(matches!(
            density(&u, &phi),
            Err(Error::FieldIndexMismatch(_))
        ));
    }

    fn states_from(rows: &[(&str, &[(usize, ActivityState)])], n: usize) -> StateMatrix {
        let map: BTreeMap<String, BTreeMap<usize, ActivityState>> = rows
            .iter()
            .map(|(e, cells)| (e.to_string(), cells.iter().copied().collect()))
            .collect();
        StateMatrix::new(AggregationLevel::Author, window(), index(n), map).unwrap()
    }

    #[test]
    fn rank_candidates_sorts_and_breaks_ties_by_field() {
        let omega = DensityScores::new(
            AggregationLevel::Author,
            MapKind::ResearchSpace,
            index(4),
            [("a".to_string(), vec![0.2, 0.9, 0.2, 0.5])].into(),
        )
        .unwrap();
        // Everything inactive: all four fields are candidates.
        let states = states_from(&[("a", &[])], 4);
        let spec = TransitionSpec::standard(TransitionKind::InactiveToActive);
        let ranked = rank_candidates(&omega, &states, &spec).unwrap();
        let row = ranked.row("a").unwrap();
        let order: Vec<&str> = row.iter().map(|p| p.field_id.as_str()).collect();
        assert_eq!(order, ["f1", "f3", "f0", "f2"]);
        assert_eq!(row[0].rank, 1);
        assert!(!row[0].tied);
        assert!(!row[1].tied);
        assert!(row[2].tied && row[3].tied);
        assert_eq!(ranked.n_tied(), 2);
    }

    #[test]
    fn rank_candidates_restricts_to_the_initial_band() {
        let omega = DensityScores::new(
            AggregationLevel::Author,
            MapKind::ResearchSpace,
            index(3),
            [("a".to_string(), vec![0.7, 0.6, 0.5])].into(),
        )
        .unwrap();
        let states = states_from(
            &[(
                "a",
                &[(0, ActivityState::Developed), (1, ActivityState::Nascent)],
            )],
            3,
        );
        let ia = rank_candidates(
            &omega,
            &states,
            &TransitionSpec::standard(TransitionKind::InactiveToActive),
        )
        .unwrap();
        let fields: Vec<&str> = ia.row("a").unwrap().iter().map(|p| p.field_id.as_str()).collect();
        assert_eq!(fields, ["f2"]);
        let nd = rank_candidates(
            &omega,
            &states,
            &TransitionSpec::standard(TransitionKind::NascentToDeveloped),
        )
        .unwrap();
        let fields: Vec<&str> = nd.row("a").unwrap().iter().map(|p| p.field_id.as_str()).collect();
        assert_eq!(fields, ["f1"]);
    }

    #[test]
    fn rank_candidates_scores_unknown_entities_zero() {
        let omega = DensityScores::new(
            AggregationLevel::Author,
            MapKind::ResearchSpace,
            index(2),
            BTreeMap::new(),
        )
        .unwrap();
        let states = states_from(&[("a", &[])], 2);
        let ranked = rank_candidates(
            &omega,
            &states,
            &TransitionSpec::standard(TransitionKind::InactiveToActive),
        )
        .unwrap();
        let row = ranked.row("a").unwrap();
        assert_eq!(row.len(), 2);
        assert!(row.iter().all(|p| p.omega == 0.0 && p.tied));
    }

    #[test]
    fn ranking_is_invariant_under_monotone_transforms() {
        let scores = vec![0.81, 0.09, 0.25, 0.49];
        let squared: Vec<f64> = scores.iter().map(|v| v * v).collect();
        let mk = |vals: Vec<f64>| {
            DensityScores::new(
                AggregationLevel::Author,
                MapKind::ResearchSpace,
                index(4),
                [("a".to_string(), vals)].into(),
            )
            .unwrap()
        };
        let states = states_from(&[("a", &[])], 4);
        let spec = TransitionSpec::standard(TransitionKind::InactiveToActive);
        let base = rank_candidates(&mk(scores), &states, &spec).unwrap();
        let transformed = rank_candidates(&mk(squared), &states, &spec).unwrap();
        let order = |r: &RankedPredictions| -> Vec<(String, u32)> {
            r.row("a")
                .unwrap()
                .iter()
                .map(|p| (p.field_id.clone(), p.rank))
                .collect()
        };
        assert_eq!(order(&base), order(&transformed));
    }

    #[test]
    fn predictions_csv_round_trips() {
        let omega = DensityScores::new(
            AggregationLevel::Author,
            MapKind::ResearchSpace,
            index(3),
            [
                ("a".to_string(), vec![0.25, 0.5, 0.25]),
                ("b".to_string(), vec![0.1, 0.2, 0.3]),
            ]
            .into(),
        )
        .unwrap();
        let states = states_from(&[("a", &[]), ("b", &[])], 3);
        let spec = TransitionSpec::standard(TransitionKind::InactiveToActive);
        let ranked = rank_candidates(&omega, &states, &spec).unwrap();
        let mut buf = Vec::new();
        write_predictions_csv(&ranked, &mut buf).unwrap();
        let again = read_predictions_csv(buf.as_slice(), AggregationLevel::Author).unwrap();
        assert_eq!(again, ranked);
    }

    #[test]
    fn predictions_csv_rejects_mixed_tags_and_empty_files() {
        let mixed = "entity_id,field_id,omega,rank,map_kind,transition\n\
                     a,f1,0.5,1,research-space,inactive_to_active\n\
                     a,f2,0.4,2,external,inactive_to_active\n";
        assert!(read_predictions_csv(mixed.as_bytes(), AggregationLevel::Author).is_err());
        let empty = "entity_id,field_id,omega,rank,map_kind,transition\n";
        assert!(read_predictions_csv(empty.as_bytes(), AggregationLevel::Author).is_err());
    }
}
