//! Evaluation reports: JSON-serializable summaries, the frozen reference
//! benchmark table, and a plain-text rendering.

use serde::{Deserialize, Serialize};

use crate::evaluate::{GroupComparison, MapCorrelation, TransitionEvaluation};
use crate::types::YearWindow;

/// Where the reference AUC values come from.
pub const REFERENCE_CONTEXT: &str =
    "AUC benchmarks measured on the original full-scale corpus (319,049 author careers, 1971-2014)";

/// One row of the reference benchmark table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceBenchmark {
    pub level: &'static str,
    pub transition: &'static str,
    /// Median per-entity AUC under the career-path map.
    pub auc_research_space: f64,
    /// Significance of the gap to the external map: `***` p < 0.01,
    /// `**` p < 0.05, empty when not significant.
    pub significance: &'static str,
    /// Median per-entity AUC under the external citation-based map.
    pub auc_external: f64,
    pub n_entities: u32,
}

/// Median AUC benchmarks by aggregation level and transition.
pub const REFERENCE_BENCHMARKS: [ReferenceBenchmark; 7] = [
    ReferenceBenchmark {
        level: "author",
        transition: "inactive_to_active",
        auc_research_space: 0.896,
        significance: "***",
        auc_external: 0.803,
        n_entities: 4850,
    },
    ReferenceBenchmark {
        level: "organization",
        transition: "inactive_to_active",
        auc_research_space: 0.715,
        significance: "***",
        auc_external: 0.687,
        n_entities: 730,
    },
    ReferenceBenchmark {
        level: "organization",
        transition: "nascent_to_developed",
        auc_research_space: 0.693,
        significance: "**",
        auc_external: 0.670,
        n_entities: 730,
    },
    ReferenceBenchmark {
        level: "organization",
        transition: "intermediate_to_developed",
        auc_research_space: 0.639,
        significance: "***",
        auc_external: 0.616,
        n_entities: 730,
    },
    ReferenceBenchmark {
        level: "country",
        transition: "inactive_to_active",
        auc_research_space: 0.682,
        significance: "",
        auc_external: 0.682,
        n_entities: 77,
    },
    ReferenceBenchmark {
        level: "country",
        transition: "nascent_to_developed",
        auc_research_space: 0.639,
        significance: "",
        auc_external: 0.624,
        n_entities: 77,
    },
    ReferenceBenchmark {
        level: "country",
        transition: "intermediate_to_developed",
        auc_research_space: 0.645,
        significance: "",
        auc_external: 0.621,
        n_entities: 77,
    },
];

/// Significance stars: `***` below 0.01, `**` below 0.05, empty otherwise.
pub fn stars(p_value: f64) -> &'static str {
    if p_value < 0.01 {
        "***"
    } else if p_value < 0.05 {
        "**"
    } else {
        ""
    }
}

/// AUC distribution summary for one map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub map: String,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub w_lo: f64,
    pub w_hi: f64,
    pub excluded_undefined: usize,
}

impl MapSummary {
    pub fn from_evaluation(ev: &TransitionEvaluation) -> Self {
        MapSummary {
            map: ev.map_kind.to_string(),
            n: ev.summary.n,
            mean: ev.summary.mean,
            median: ev.summary.median,
            q1: ev.summary.q1,
            q3: ev.summary.q3,
            w_lo: ev.summary.w_lo,
            w_hi: ev.summary.w_hi,
            excluded_undefined: ev.excluded_undefined,
        }
    }
}

/// Two-group ANOVA between per-entity AUC samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    #[serde(rename = "F")]
    pub f_statistic: f64,
    pub p_value: f64,
    pub significance: String,
}

impl From<GroupComparison> for ComparisonSummary {
    fn from(c: GroupComparison) -> Self {
        ComparisonSummary {
            n_a: c.n_a,
            n_b: c.n_b,
            mean_a: c.mean_a,
            mean_b: c.mean_b,
            f_statistic: c.f_statistic,
            p_value: c.p_value,
            significance: stars(c.p_value).to_string(),
        }
    }
}

/// Summary for the shuffled-map null model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub seed: u64,
    #[serde(flatten)]
    pub summary: MapSummary,
}

/// Regression of one map's edge weights on another's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub n_pairs: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl From<&MapCorrelation> for CorrelationSummary {
    fn from(c: &MapCorrelation) -> Self {
        CorrelationSummary {
            n_pairs: c.pairs.len(),
            slope: c.slope,
            intercept: c.intercept,
            r_squared: c.r_squared,
        }
    }
}

/// Reference table plus its provenance note, embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceBlock {
    pub context: &'static str,
    pub benchmarks: &'static [ReferenceBenchmark],
}

impl Default for ReferenceBlock {
    fn default() -> Self {
        ReferenceBlock {
            context: REFERENCE_CONTEXT,
            benchmarks: &REFERENCE_BENCHMARKS,
        }
    }
}

/// Full evaluation report for one (level, transition) cell.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub level: String,
    pub transition: String,
    pub window_t0: [i32; 2],
    pub window_t1: [i32; 2],
    pub inclusion_floor: f64,
    pub research_space: MapSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external: Option<MapSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_comparison: Option<ComparisonSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map_correlation: Option<CorrelationSummary>,
    pub reference: ReferenceBlock,
}

impl EvaluationReport {
    pub fn new(
        ev: &TransitionEvaluation,
        window_t0: YearWindow,
        window_t1: YearWindow,
        inclusion_floor: f64,
    ) -> Self {
        EvaluationReport {
            level: ev.level.to_string(),
            transition: ev.transition.to_string(),
            window_t0: [window_t0.start(), window_t0.end()],
            window_t1: [window_t1.start(), window_t1.end()],
            inclusion_floor,
            research_space: MapSummary::from_evaluation(ev),
            external: None,
            comparison: None,
            baseline: None,
            baseline_comparison: None,
            map_correlation: None,
            reference: ReferenceBlock::default(),
        }
    }
}

fn fmt_p(p: f64) -> String {
    if p < 1e-4 {
        "<0.0001".to_string()
    } else {
        format!("{p:.4}")
    }
}

fn push_summary_row(out: &mut String, s: &MapSummary, extra: &str) {
    out.push_str(&format!(
        "{:<16} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>10}{}\n",
        s.map, s.n, s.mean, s.median, s.q1, s.q3, s.excluded_undefined, extra
    ));
}

fn push_comparison(out: &mut String, label: &str, c: &ComparisonSummary) {
    out.push_str(&format!(
        "{}: F(1, {}) = {:.3}, p = {}{}{}\n",
        label,
        c.n_a + c.n_b - 2,
        c.f_statistic,
        fmt_p(c.p_value),
        if c.significance.is_empty() { "" } else { " " },
        c.significance
    ));
}

/// Fixed-width text rendering of a report, ending with the reference table.
pub fn render_table(report: &EvaluationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "evaluation: {} {}\n",
        report.level, report.transition
    ));
    out.push_str(&format!(
        "windows: [{}, {}) -> [{}, {})\n",
        report.window_t0[0], report.window_t0[1], report.window_t1[0], report.window_t1[1]
    ));
    out.push_str(&format!(
        "inclusion floor: {} papers/year\n\n",
        report.inclusion_floor
    ));
    out.push_str(&format!(
        "{:<16} {:>6} {:>8} {:>8} {:>8} {:>8} {:>10}\n",
        "map", "n", "mean", "median", "q1", "q3", "undefined"
    ));
    push_summary_row(&mut out, &report.research_space, "");
    if let Some(ext) = &report.external {
        push_summary_row(&mut out, ext, "");
    }
    if let Some(base) = &report.baseline {
        push_summary_row(&mut out, &base.summary, &format!("  (seed {})", base.seed));
    }
    out.push('\n');
    if let Some(c) = &report.comparison {
        push_comparison(&mut out, "research-space vs external", c);
    }
    if let Some(c) = &report.baseline_comparison {
        push_comparison(&mut out, "research-space vs shuffled", c);
    }
    if let Some(corr) = &report.map_correlation {
        out.push_str(&format!(
            "map correlation: {} shared pairs, slope {:.4}, R^2 {:.4}\n",
            corr.n_pairs, corr.slope, corr.r_squared
        ));
    }
    out.push('\n');
    out.push_str(&format!("reference ({REFERENCE_CONTEXT}):\n"));
    out.push_str(&format!(
        "  {:<14} {:<26} {:>16} {:>10} {:>10}\n",
        "level", "transition", "research-space", "external", "entities"
    ));
    for r in report.reference.benchmarks {
        out.push_str(&format!(
            "  {:<14} {:<26} {:>16} {:>10.3} {:>10}\n",
            r.level,
            r.transition,
            format!("{:.3}{}", r.auc_research_space, r.significance),
            r.auc_external,
            r.n_entities
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::BoxplotStats;
    use crate::predict::TransitionKind;
    use crate::types::{AggregationLevel, MapKind};
    use std::collections::BTreeMap;

    #[test]
    fn reference_table_matches_published_values() {
        assert_eq!(REFERENCE_BENCHMARKS.len(), 7);
        let author = &REFERENCE_BENCHMARKS[0];
        assert_eq!(author.level, "author");
        assert_eq!(author.auc_research_space, 0.896);
        assert_eq!(author.auc_external, 0.803);
        assert_eq!(author.significance, "***");
        assert_eq!(author.n_entities, 4850);
        let org_nd = REFERENCE_BENCHMARKS
            .iter()
            .find(|r| r.level == "organization" && r.transition == "nascent_to_developed")
            .unwrap();
        assert_eq!(org_nd.auc_research_space, 0.693);
        assert_eq!(org_nd.significance, "**");
        for r in REFERENCE_BENCHMARKS.iter().filter(|r| r.level == "country") {
            assert_eq!(r.significance, "");
            assert_eq!(r.n_entities, 77);
        }
        assert!(REFERENCE_CONTEXT.contains("319,049"));
    }

    #[test]
    fn stars_boundaries() {
        assert_eq!(stars(0.009), "***");
        assert_eq!(stars(0.01), "**");
        assert_eq!(stars(0.049), "**");
        assert_eq!(stars(0.05), "");
        assert_eq!(stars(0.5), "");
    }

    fn toy_evaluation() -> TransitionEvaluation {
        TransitionEvaluation {
            level: AggregationLevel::Author,
            map_kind: MapKind::ResearchSpace,
            transition: TransitionKind::InactiveToActive,
            per_entity: BTreeMap::new(),
            excluded_undefined: 3,
            summary: BoxplotStats {
                n: 12,
                mean: 0.8125,
                median: 0.85,
                q1: 0.75,
                q3: 0.9,
                w_lo: 0.6,
                w_hi: 0.95,
            },
        }
    }

    #[test]
    fn report_serializes_with_reference_block() {
        let report = EvaluationReport::new(
            &toy_evaluation(),
            YearWindow::new(2008, 2011).unwrap(),
            YearWindow::new(2011, 2014).unwrap(),
            3.0,
        );
        let json = serde_json::to_string_pretty(&report).unwrap();
        assert!(json.contains("\"level\": \"author\""));
        assert!(json.contains("\"transition\": \"inactive_to_active\""));
        assert!(json.contains("319,049 author careers"));
        assert!(json.contains("\"auc_research_space\": 0.896"));
        // Optional sections stay out of the JSON until populated.
        assert!(!json.contains("\"external\""));
        assert!(!json.contains("\"baseline\""));
    }

    #[test]
    fn comparison_serializes_f_key() {
        let c = ComparisonSummary {
            n_a: 3,
            n_b: 3,
            mean_a: 2.0,
            mean_b: 5.0,
            f_statistic: 13.5,
            p_value: 0.0213,
            significance: "**".into(),
        };
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"F\":13.5"));
        assert!(json.contains("\"significance\":\"**\""));
    }

    #[test]
    fn render_table_lists_reference_rows() {
        let mut report = EvaluationReport::new(
            &toy_evaluation(),
            YearWindow::new(2008, 2011).unwrap(),
            YearWindow::new(2011, 2014).unwrap(),
            3.0,
        );
        report.comparison = Some(ComparisonSummary {
            n_a: 12,
            n_b: 12,
            mean_a: 0.8125,
            mean_b: 0.7,
            f_statistic: 4.2,
            p_value: 0.052,
            significance: String::new(),
        });
        let text = render_table(&report);
        assert!(text.contains("evaluation: author inactive_to_active"));
        assert!(text.contains("research-space"));
        assert!(text.contains("0.896***"));
        assert!(text.contains("319,049 author careers"));
        assert!(text.contains("F(1, 22) = 4.200"));
        assert_eq!(
            text.lines()
                .filter(|l| l.trim_start().starts_with("author")
                    || l.trim_start().starts_with("organization")
                    || l.trim_start().starts_with("country"))
                .count(),
            7
        );
    }
}
