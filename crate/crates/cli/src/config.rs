//! Declarative run configuration with flag overrides.
//!
//! Resolution order for the file itself: `--config`, then the
//! `RESPACE_CONFIG` environment variable (handled by the flag), then
//! `./respace.toml` if present, then built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use respace_core::types::{AggregationLevel, YearWindow};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub paths: Paths,
    pub windows: Windows,
    pub params: Params,
    pub synth: SynthSection,
    pub evaluate: EvaluateSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub corpus: PathBuf,
    pub journal_fields: PathBuf,
    pub field_meta: PathBuf,
    pub author_org: PathBuf,
    pub org_country: PathBuf,
    /// Citation-derived comparison map; optional.
    pub external_map: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus: "out/corpus.csv".into(),
            journal_fields: "out/journal_fields.csv".into(),
            field_meta: "out/field_meta.csv".into(),
            author_org: "out/author_org.csv".into(),
            org_country: "out/org_country.csv".into(),
            external_map: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Windows {
    /// The proximity matrix uses only years strictly before this.
    pub train_end_year: i32,
    /// Inclusive year pair for the start-state window.
    pub state_window: [i32; 2],
    /// Inclusive year pair for the outcome window.
    pub outcome_window: [i32; 2],
    /// Records outside this inclusive range are dropped at parse time.
    pub year_min: i32,
    pub year_max: i32,
}

impl Default for Windows {
    fn default() -> Self {
        Windows {
            train_end_year: 2011,
            state_window: [2008, 2010],
            outcome_window: [2011, 2013],
            year_min: 1971,
            year_max: 2014,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Effective paper count a field needs before it counts as presence.
    pub presence_threshold: f64,
    /// Backbone keeps edges strictly above this symmetrized proximity.
    pub backbone_tau: f64,
    pub level: String,
    pub transition: String,
    /// Papers per year needed for evaluation; defaults to 3 for authors and
    /// 30 for organizations and countries when unset.
    pub b: Option<f64>,
    pub delta_t: u32,
    /// Authors reaching this many papers in one year are dropped as
    /// likely name collisions.
    pub max_papers_per_year: u32,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            presence_threshold: 0.1,
            backbone_tau: 0.212,
            level: "author".into(),
            transition: "inactive_to_active".into(),
            b: None,
            delta_t: 3,
            max_papers_per_year: 50,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub seed: u64,
    pub n_scholars: usize,
    pub n_fields: usize,
    pub n_blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Inclusive year pair the training records cover.
    pub years: [i32; 2],
    pub papers_per_scholar_year: f64,
    pub transition_rate: f64,
    pub multi_field_journal_share: f64,
    /// Seed for the outcome-window extension; defaults to `seed + 1`.
    pub outcome_seed: Option<u64>,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            seed: 1,
            n_scholars: 500,
            n_fields: 20,
            n_blocks: 2,
            p_in: 0.8,
            p_out: 0.05,
            years: [2005, 2010],
            papers_per_scholar_year: 2.0,
            transition_rate: 0.9,
            multi_field_journal_share: 0.1,
            outcome_seed: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    /// When set, a shuffled-field null map is scored alongside.
    pub baseline_seed: Option<u64>,
}

impl RunConfig {
    /// Loads the explicit path when given, otherwise `./respace.toml` when
    /// present, otherwise defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<RunConfig, String> {
        let path = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => {
                let local = PathBuf::from("respace.toml");
                local.exists().then_some(local)
            }
        };
        let cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
                toml::from_str(&text)
                    .map_err(|e| format!("invalid config {}: {e}", p.display()))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        let state = self.state_window().map_err(|e| e.to_string())?;
        let outcome = self.outcome_window().map_err(|e| e.to_string())?;
        if state.end() > outcome.start() {
            return Err(format!(
                "state window [{}, {}) must end before the outcome window [{}, {}) begins",
                state.start(),
                state.end(),
                outcome.start(),
                outcome.end()
            ));
        }
        if self.windows.year_min > self.windows.year_max {
            return Err("year_min exceeds year_max".into());
        }
        if self.windows.train_end_year <= self.windows.year_min {
            return Err("train_end_year leaves no training years".into());
        }
        self.level().map_err(|e| e.to_string())?;
        self.params
            .transition
            .parse::<respace_core::predict::TransitionKind>()
            .map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn level(&self) -> respace_core::Result<AggregationLevel> {
        self.params.level.parse()
    }

    pub fn transition(&self) -> respace_core::Result<respace_core::predict::TransitionKind> {
        self.params.transition.parse()
    }

    pub fn state_window(&self) -> respace_core::Result<YearWindow> {
        YearWindow::from_inclusive(self.windows.state_window[0], self.windows.state_window[1])
    }

    pub fn outcome_window(&self) -> respace_core::Result<YearWindow> {
        YearWindow::from_inclusive(self.windows.outcome_window[0], self.windows.outcome_window[1])
    }

    pub fn train_window(&self) -> respace_core::Result<YearWindow> {
        YearWindow::new(self.windows.year_min, self.windows.train_end_year)
    }

    /// The inclusion floor, with the level-specific default.
    pub fn inclusion_floor(&self, level: AggregationLevel) -> f64 {
        self.params.b.unwrap_or_else(|| level.default_inclusion_floor())
    }

    pub fn synth_config(&self) -> respace_core::Result<respace_core::synth::SynthConfig> {
        Ok(respace_core::synth::SynthConfig {
            seed: self.synth.seed,
            n_scholars: self.synth.n_scholars,
            n_fields: self.synth.n_fields,
            n_blocks: self.synth.n_blocks,
            p_in: self.synth.p_in,
            p_out: self.synth.p_out,
            years: YearWindow::from_inclusive(self.synth.years[0], self.synth.years[1])?,
            papers_per_scholar_year: self.synth.papers_per_scholar_year,
            transition_rate: self.synth.transition_rate,
            multi_field_journal_share: self.synth.multi_field_journal_share,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_published_constants() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.params.presence_threshold, 0.1);
        assert_eq!(cfg.params.backbone_tau, 0.212);
        assert_eq!(cfg.windows.train_end_year, 2011);
        assert_eq!(cfg.params.delta_t, 3);
        assert_eq!(
            cfg.inclusion_floor(AggregationLevel::Author),
            3.0
        );
        assert_eq!(
            cfg.inclusion_floor(AggregationLevel::Organization),
            30.0
        );
        cfg.validate().unwrap();
        assert_eq!(cfg.state_window().unwrap(), YearWindow::new(2008, 2011).unwrap());
        assert_eq!(cfg.outcome_window().unwrap(), YearWindow::new(2011, 2014).unwrap());
    }

    #[test]
    fn toml_overrides_and_unknown_keys() {
        let cfg: RunConfig = toml::from_str(
            "[params]\nlevel = \"organization\"\nb = 12.5\n\n[synth]\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.params.level, "organization");
        assert_eq!(cfg.inclusion_floor(AggregationLevel::Organization), 12.5);
        assert_eq!(cfg.synth.seed, 7);
        assert!(toml::from_str::<RunConfig>("[params]\nbogus = 1\n").is_err());
    }

    #[test]
    fn overlapping_windows_are_rejected() {
        let cfg: RunConfig = toml::from_str(
            "[windows]\nstate_window = [2008, 2012]\noutcome_window = [2011, 2013]\n",
        )
        .unwrap();
        assert!(cfg.validate().is_err());
    }
}
