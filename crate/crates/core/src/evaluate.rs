//! Transition labels, ROC/AUC scoring, inclusion filtering, summary
//! statistics, two-group ANOVA, and map correlation.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::predict::{
    density, rank_candidates, u_matrix, RankedPredictions, TransitionKind, TransitionSpec,
};
use crate::space::{format_sig12, PresenceMatrix, ProximityMatrix};
use crate::states::{RcaMatrix, StateMatrix};
use crate::types::{AggregationLevel, FieldIndex, MapKind};

/// Realized transition outcomes: for every entity and every field in the
/// transition's initial band at the start window, whether the target band
/// was reached by the end window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionLabels {
    level: AggregationLevel,
    transition: TransitionKind,
    fields: FieldIndex,
    rows: BTreeMap<String, Vec<(usize, bool)>>,
}

impl TransitionLabels {
    pub fn level(&self) -> AggregationLevel {
        self.level
    }

    pub fn transition(&self) -> TransitionKind {
        self.transition
    }

    pub fn fields(&self) -> &FieldIndex {
        &self.fields
    }

    /// Candidate fields with outcomes, ascending by field position.
    pub fn row(&self, entity_id: &str) -> Option<&[(usize, bool)]> {
        self.rows.get(entity_id).map(Vec::as_slice)
    }

    pub fn n_entities(&self) -> usize {
        self.rows.len()
    }

    pub fn n_positive(&self) -> usize {
        self.rows
            .values()
            .flat_map(|r| r.iter())
            .filter(|(_, hit)| *hit)
            .count()
    }
}

/// Compares the two state snapshots. Entities present at the start but
/// absent at the end simply made no transition: every candidate labels
/// false. Entities appearing only at the end are ignored; there is no
/// initial band to transition from.
pub fn observe_transitions(
    t0: &StateMatrix,
    t1: &StateMatrix,
    spec: &TransitionSpec,
) -> Result<TransitionLabels> {
    if t0.level() != t1.level() {
        return Err(Error::LevelMismatch(t0.level(), t1.level()));
    }
    if t0.fields() != t1.fields() {
        return Err(Error::FieldIndexMismatch(
            "state snapshots cover different field sets".into(),
        ));
    }
    let initial = spec.initial_state();
    let n = t0.fields().len();
    let rows: BTreeMap<String, Vec<(usize, bool)>> = t0
        .entities()
        .map(|entity| {
            let labels: Vec<(usize, bool)> = (0..n)
                .filter(|&f| t0.state(entity, f) == Some(initial))
                .map(|f| {
                    let hit = t1
                        .state(entity, f)
                        .map(|st| spec.target_reached(st))
                        .unwrap_or(false);
                    (f, hit)
                })
                .collect();
            (entity.to_string(), labels)
        })
        .collect();
    Ok(TransitionLabels {
        level: t0.level(),
        transition: spec.kind,
        fields: t0.fields().clone(),
        rows,
    })
}

/// Mann-Whitney AUC with half credit for score ties.
///
/// Counts, over all (positive, negative) pairs, how often the positive
/// scores strictly higher, plus half of the exact ties, divided by the pair
/// count. `None` when either class is empty, since no ordering exists to
/// grade. Scores must be comparable, so NaN is rejected.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<Option<f64>> {
    let groups = tie_groups(scores, labels)?;
    let n1: u64 = groups.iter().map(|g| g.positives).sum();
    let n0: u64 = groups.iter().map(|g| g.negatives).sum();
    if n1 == 0 || n0 == 0 {
        return Ok(None);
    }
    let mut wins = 0u64;
    let mut ties = 0u64;
    let mut negatives_below = 0u64;
    for g in &groups {
        wins += g.positives * negatives_below;
        ties += g.positives * g.negatives;
        negatives_below += g.negatives;
    }
    Ok(Some(
        (wins as f64 + 0.5 * ties as f64) / (n1 as f64 * n0 as f64),
    ))
}

/// ROC polyline from (0,0) to (1,1), one vertex per distinct score walked in
/// descending order. Ties advance diagonally in a single step. `None` when
/// either class is empty.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Option<Vec<(f64, f64)>>> {
    let groups = tie_groups(scores, labels)?;
    let n1: u64 = groups.iter().map(|g| g.positives).sum();
    let n0: u64 = groups.iter().map(|g| g.negatives).sum();
    if n1 == 0 || n0 == 0 {
        return Ok(None);
    }
    let mut points = Vec::with_capacity(groups.len() + 1);
    points.push((0.0, 0.0));
    let mut tp = 0u64;
    let mut fp = 0u64;
    for g in groups.iter().rev() {
        tp += g.positives;
        fp += g.negatives;
        points.push((fp as f64 / n0 as f64, tp as f64 / n1 as f64));
    }
    Ok(Some(points))
}

struct TieGroup {
    positives: u64,
    negatives: u64,
}

/// Class counts per distinct score, ascending by score.
fn tie_groups(scores: &[f64], labels: &[bool]) -> Result<Vec<TieGroup>> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut groups = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let positives = order[i..=j].iter().filter(|&&k| labels[k]).count() as u64;
        groups.push(TieGroup {
            positives,
            negatives: (j - i + 1) as u64 - positives,
        });
        i = j + 1;
    }
    Ok(groups)
}

/// Entities whose total effective output reaches `b` papers per year over
/// the `delta_t`-year window, i.e. `total >= b * delta_t`. With `b = 0`
/// every entity in the presence matrix passes.
pub fn inclusion_filter(x: &PresenceMatrix, b: f64, delta_t: u32) -> BTreeSet<String> {
    let floor = b * delta_t as f64;
    x.entities()
        .filter(|e| x.entity_total(e) >= floor)
        .map(str::to_string)
        .collect()
}

/// Five-number summary plus mean, with whiskers at the 2nd and 98th
/// percentiles (linear-interpolation quantiles).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoxplotStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub w_lo: f64,
    pub w_hi: f64,
}

/// Summarizes a non-empty sample of finite values.
pub fn summarize(values: &[f64]) -> Result<BoxplotStats> {
    if values.is_empty() {
        return Err(Error::InvalidInput("nothing to summarize".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in summary".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| -> f64 {
        let h = (sorted.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(sorted.len() - 1);
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    };
    Ok(BoxplotStats {
        n: sorted.len(),
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        median: q(0.5),
        q1: q(0.25),
        q3: q(0.75),
        w_lo: q(0.02),
        w_hi: q(0.98),
    })
}

/// One-way ANOVA over two groups.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GroupComparison {
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    #[serde(rename = "F")]
    pub f_statistic: f64,
    pub p_value: f64,
}

/// One-way ANOVA with two groups: `F = MS_between / MS_within` on
/// `(1, n_a + n_b - 2)` degrees of freedom, with the p-value from the F
/// survival function. Identical groups give F = 0 and p = 1 rather than the
/// 0/0 the formula would produce. Two constant groups with different means
/// have no within-group variance to compare against and are rejected.
pub fn compare_groups(a: &[f64], b: &[f64]) -> Result<GroupComparison> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("empty group".into()));
    }
    let n_a = a.len();
    let n_b = b.len();
    let df2 = n_a + n_b - 2;
    if df2 == 0 {
        return Err(Error::InvalidInput(
            "need at least three observations overall".into(),
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite observation".into()));
    }
    let mean_a = a.iter().sum::<f64>() / n_a as f64;
    let mean_b = b.iter().sum::<f64>() / n_b as f64;
    let grand = (a.iter().sum::<f64>() + b.iter().sum::<f64>()) / (n_a + n_b) as f64;
    let ss_between =
        n_a as f64 * (mean_a - grand).powi(2) + n_b as f64 * (mean_b - grand).powi(2);
    let ss_within: f64 = a.iter().map(|v| (v - mean_a).powi(2)).sum::<f64>()
        + b.iter().map(|v| (v - mean_b).powi(2)).sum::<f64>();
    if ss_within == 0.0 {
        if ss_between == 0.0 {
            return Ok(GroupComparison {
                n_a,
                n_b,
                mean_a,
                mean_b,
                f_statistic: 0.0,
                p_value: 1.0,
            });
        }
        return Err(Error::InvalidInput(
            "zero within-group variance with unequal means; F is unbounded".into(),
        ));
    }
    let f_statistic = ss_between / (ss_within / df2 as f64);
    let dist = FisherSnedecor::new(1.0, df2 as f64)
        .map_err(|e| Error::InvalidInput(format!("F distribution: {e}")))?;
    let p_value = (1.0 - dist.cdf(f_statistic)).clamp(f64::MIN_POSITIVE, 1.0);
    Ok(GroupComparison {
        n_a,
        n_b,
        mean_a,
        mean_b,
        f_statistic,
        p_value,
    })
}

/// A field pair weighted by two different maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPair {
    pub field_i: String,
    pub field_j: String,
    pub weight_a: f64,
    pub weight_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapCorrelation {
    /// Unordered pairs where both maps have positive weight, ascending by
    /// field positions.
    pub pairs: Vec<ScatterPair>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Regresses the weights of map `b` on map `a` over the unordered field
/// pairs both maps score positively. Both matrices must be symmetric and
/// share a field index; fewer than three common pairs leave nothing to fit.
pub fn correlate_maps(a: &ProximityMatrix, b: &ProximityMatrix) -> Result<MapCorrelation> {
    if a.fields() != b.fields() {
        return Err(Error::FieldIndexMismatch(
            "maps cover different field sets".into(),
        ));
    }
    if !a.is_symmetric() || !b.is_symmetric() {
        return Err(Error::InvalidInput(
            "map correlation needs symmetrized matrices".into(),
        ));
    }
    let n = a.n_fields();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let wa = a.get(i, j);
            let wb = b.get(i, j);
            if wa > 0.0 && wb > 0.0 {
                pairs.push(ScatterPair {
                    field_i: a.fields().id(i).to_string(),
                    field_j: a.fields().id(j).to_string(),
                    weight_a: wa,
                    weight_b: wb,
                });
            }
        }
    }
    if pairs.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "only {} field pairs are weighted by both maps; need at least 3",
            pairs.len()
        )));
    }
    let m = pairs.len() as f64;
    let mean_a: f64 = pairs.iter().map(|p| p.weight_a).sum::<f64>() / m;
    let mean_b: f64 = pairs.iter().map(|p| p.weight_b).sum::<f64>() / m;
    let var_a: f64 = pairs.iter().map(|p| (p.weight_a - mean_a).powi(2)).sum();
    let (slope, intercept) = if var_a == 0.0 {
        (0.0, mean_b)
    } else {
        let cov: f64 = pairs
            .iter()
            .map(|p| (p.weight_a - mean_a) * (p.weight_b - mean_b))
            .sum();
        let slope = cov / var_a;
        (slope, mean_b - slope * mean_a)
    };
    let ss_tot: f64 = pairs.iter().map(|p| (p.weight_b - mean_b).powi(2)).sum();
    let ss_res: f64 = pairs
        .iter()
        .map(|p| (p.weight_b - (slope * p.weight_a + intercept)).powi(2))
        .sum();
    let r_squared = if var_a == 0.0 || ss_tot == 0.0 {
        0.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(MapCorrelation {
        pairs,
        slope,
        intercept,
        r_squared,
    })
}

/// Writes `field_i,field_j,weight_a,weight_b` rows.
pub fn write_scatter_csv<W: Write>(pairs: &[ScatterPair], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["field_i", "field_j", "weight_a", "weight_b"])?;
    for p in pairs {
        wtr.write_record([
            p.field_i.as_str(),
            p.field_j.as_str(),
            &format_sig12(p.weight_a),
            &format_sig12(p.weight_b),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Per-entity scoring outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityEvaluation {
    pub auc: f64,
    pub roc: Vec<(f64, f64)>,
}

/// AUC evaluation of one transition under one map.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionEvaluation {
    pub level: AggregationLevel,
    pub map_kind: MapKind,
    pub transition: TransitionKind,
    pub per_entity: BTreeMap<String, EntityEvaluation>,
    /// Included entities with candidates but only one outcome class, for
    /// which AUC is undefined.
    pub excluded_undefined: usize,
    pub summary: BoxplotStats,
}

impl TransitionEvaluation {
    pub fn aucs(&self) -> Vec<f64> {
        self.per_entity.values().map(|e| e.auc).collect()
    }
}

/// Everything the in-memory evaluation pipeline consumes.
#[derive(Debug, Clone, Copy)]
pub struct PipelineInputs<'a> {
    pub rca_t0: &'a RcaMatrix,
    pub states_t0: &'a StateMatrix,
    pub states_t1: &'a StateMatrix,
    pub phi: &'a ProximityMatrix,
    /// Presence feeding the inclusion filter, normally over the same window
    /// as `states_t0`.
    pub inclusion: &'a PresenceMatrix,
}

/// Scores one transition end to end: anchor sets and densities from the
/// start window, candidates ranked, outcomes observed against the end
/// window, and per-entity AUC over the inclusion-filtered entities.
pub fn evaluate_pipeline(
    inputs: &PipelineInputs<'_>,
    spec: &TransitionSpec,
    b: f64,
    delta_t: u32,
) -> Result<TransitionEvaluation> {
    let labels = observe_transitions(inputs.states_t0, inputs.states_t1, spec)?;
    let u = u_matrix(inputs.rca_t0, spec);
    let omega = density(&u, inputs.phi)?;
    let ranked = rank_candidates(&omega, inputs.states_t0, spec)?;
    let included = inclusion_filter(inputs.inclusion, b, delta_t);
    score_against_labels(&ranked, &labels, &included)
}

fn score_against_labels(
    ranked: &RankedPredictions,
    labels: &TransitionLabels,
    included: &BTreeSet<String>,
) -> Result<TransitionEvaluation> {
    let fields = labels.fields();
    let mut rows: BTreeMap<String, (Vec<f64>, Vec<bool>)> = BTreeMap::new();
    for (entity, preds) in ranked.rows() {
        if !included.contains(entity) || preds.is_empty() {
            continue;
        }
        let outcome: BTreeMap<usize, bool> = labels
            .row(entity)
            .map(|r| r.iter().copied().collect())
            .unwrap_or_default();
        let mut scores = Vec::with_capacity(preds.len());
        let mut labs = Vec::with_capacity(preds.len());
        for p in preds {
            let f = fields.position(&p.field_id).ok_or_else(|| {
                Error::FieldIndexMismatch(format!(
                    "prediction references field `{}` absent from the label index",
                    p.field_id
                ))
            })?;
            let hit = outcome.get(&f).copied().ok_or_else(|| {
                Error::InvalidInput(format!(
                    "no observed outcome for candidate ({entity}, {})",
                    p.field_id
                ))
            })?;
            scores.push(p.omega);
            labs.push(hit);
        }
        rows.insert(entity.to_string(), (scores, labs));
    }
    collect_evaluation(
        ranked.level(),
        ranked.map_kind(),
        ranked.transition(),
        rows,
    )
}

/// Scores serialized predictions against an end-window snapshot. Candidates
/// absent from the snapshot are treated as not transitioned. Entities without
/// prediction rows are ignored; serialized files carry no rows for them.
pub fn evaluate_predictions(
    preds: &RankedPredictions,
    states_t1: &StateMatrix,
    included: &BTreeSet<String>,
    spec: &TransitionSpec,
) -> Result<TransitionEvaluation> {
    if preds.transition() != spec.kind {
        return Err(Error::InvalidInput(format!(
            "predictions are for {}, evaluation asked for {}",
            preds.transition(),
            spec.kind
        )));
    }
    if preds.level() != states_t1.level() {
        return Err(Error::LevelMismatch(preds.level(), states_t1.level()));
    }
    let fields = states_t1.fields();
    let mut rows: BTreeMap<String, (Vec<f64>, Vec<bool>)> = BTreeMap::new();
    for (entity, row) in preds.rows() {
        if !included.contains(entity) || row.is_empty() {
            continue;
        }
        let mut scores = Vec::with_capacity(row.len());
        let mut labs = Vec::with_capacity(row.len());
        for p in row {
            let f = fields.position(&p.field_id).ok_or_else(|| {
                Error::FieldIndexMismatch(format!(
                    "prediction references field `{}` absent from the end snapshot",
                    p.field_id
                ))
            })?;
            let hit = states_t1
                .state(entity, f)
                .map(|st| spec.target_reached(st))
                .unwrap_or(false);
            scores.push(p.omega);
            labs.push(hit);
        }
        rows.insert(entity.to_string(), (scores, labs));
    }
    collect_evaluation(preds.level(), preds.map_kind(), preds.transition(), rows)
}

fn collect_evaluation(
    level: AggregationLevel,
    map_kind: MapKind,
    transition: TransitionKind,
    rows: BTreeMap<String, (Vec<f64>, Vec<bool>)>,
) -> Result<TransitionEvaluation> {
    let mut per_entity = BTreeMap::new();
    let mut excluded_undefined = 0usize;
    for (entity, (scores, labels)) in rows {
        match roc_auc(&scores, &labels)? {
            None => excluded_undefined += 1,
            Some(auc) => {
                let roc = roc_curve(&scores, &labels)?
                    .expect("curve is defined whenever the AUC is");
                per_entity.insert(entity, EntityEvaluation { auc, roc });
            }
        }
    }
    if per_entity.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    let aucs: Vec<f64> = per_entity.values().map(|e| e.auc).collect();
    let summary = summarize(&aucs)?;
    Ok(TransitionEvaluation {
        level,
        map_kind,
        transition,
        per_entity,
        excluded_undefined,
        summary,
    })
}
