//! Seeded synthetic corpora with planted block structure: scholars belong
//! mostly to one block of fields, publish there over a training window, and
//! enter new fields in an outcome window with probability proportional to
//! planted proximity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;

use crate::error::{Error, Result};
use crate::ingest::{AffiliationMap, FieldClassification, FieldMeta, PublicationRecord};
use crate::types::YearWindow;

/// Generator knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_scholars: usize,
    pub n_fields: usize,
    /// Fields are split into this many contiguous blocks of near-equal size.
    pub n_blocks: usize,
    /// Probability a scholar holds a field inside their home block.
    pub p_in: f64,
    /// Probability a scholar holds a field outside their home block.
    pub p_out: f64,
    /// Training window the corpus records cover.
    pub years: YearWindow,
    /// Mean of the per-year paper count distribution.
    pub papers_per_scholar_year: f64,
    /// Probability a scholar enters one new field in the outcome window.
    pub transition_rate: f64,
    /// Share of journals mapping to two fields instead of one.
    pub multi_field_journal_share: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            n_scholars: 500,
            n_fields: 20,
            n_blocks: 2,
            p_in: 0.8,
            p_out: 0.05,
            years: YearWindow::new(2005, 2011).expect("static window"),
            papers_per_scholar_year: 2.0,
            transition_rate: 0.9,
            multi_field_journal_share: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_scholars == 0 || self.n_fields == 0 {
            return Err(Error::InvalidInput(
                "need at least one scholar and one field".into(),
            ));
        }
        if self.n_blocks == 0 || self.n_blocks > self.n_fields {
            return Err(Error::InvalidInput(format!(
                "block count must be in 1..={}, got {}",
                self.n_fields, self.n_blocks
            )));
        }
        if !(0.0..=1.0).contains(&self.p_in)
            || !(0.0..=1.0).contains(&self.p_out)
            || self.p_out >= self.p_in
        {
            return Err(Error::InvalidInput(format!(
                "membership probabilities need 0 <= p_out < p_in <= 1, got p_in={} p_out={}",
                self.p_in, self.p_out
            )));
        }
        if !(self.papers_per_scholar_year > 0.0 && self.papers_per_scholar_year.is_finite()) {
            return Err(Error::InvalidInput(
                "papers_per_scholar_year must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.transition_rate) {
            return Err(Error::InvalidInput(
                "transition_rate must be a probability".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.multi_field_journal_share) {
            return Err(Error::InvalidInput(
                "multi_field_journal_share must be a probability".into(),
            ));
        }
        Ok(())
    }
}

/// Everything one seed produces.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub records: Vec<PublicationRecord>,
    pub classification: FieldClassification,
    pub affiliations: AffiliationMap,
    /// Planted block per field id.
    pub blocks: BTreeMap<String, usize>,
    /// Planted field memberships per scholar id.
    pub scholar_fields: BTreeMap<String, BTreeSet<String>>,
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).to_string().len()
}

fn block_of(field: usize, n_fields: usize, n_blocks: usize) -> usize {
    field * n_blocks / n_fields
}

struct Naming {
    field_width: usize,
    scholar_width: usize,
}

impl Naming {
    fn new(cfg: &SynthConfig) -> Self {
        Naming {
            field_width: digits(cfg.n_fields),
            scholar_width: digits(cfg.n_scholars),
        }
    }

    fn field(&self, i: usize) -> String {
        format!("f{:0w$}", i, w = self.field_width)
    }

    fn scholar(&self, s: usize) -> String {
        format!("s{:0w$}", s, w = self.scholar_width)
    }

    fn single_journal(&self, field: usize) -> String {
        format!("jf{:0w$}", field, w = self.field_width)
    }

    fn multi_journal(&self, k: usize) -> String {
        format!("jm{:0w$}", k, w = self.field_width)
    }
}

/// Generates one corpus. All randomness comes from a ChaCha8 stream seeded
/// with `cfg.seed`, consumed in a fixed order:
///
/// 1. field memberships, scholar-major then field-ascending, one Bernoulli
///    each, plus one uniform home-block pick when a scholar drew nothing;
/// 2. papers, scholar-major then year-ascending: one Poisson count per year,
///    then per paper a uniform field pick, a uniform coauthor count in
///    `1..=10`, a journal-share coin, and a uniform journal pick when
///    several multi-field journals cover the field.
///
/// Journals are one per field plus a `multi_field_journal_share` fraction of
/// two-field journals. Affiliations go round-robin: ten scholars per
/// organization, ten organizations per country.
pub fn generate_corpus(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let names = Naming::new(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let blocks: Vec<usize> = (0..cfg.n_fields)
        .map(|f| block_of(f, cfg.n_fields, cfg.n_blocks))
        .collect();

    let mut journal_map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut meta: BTreeMap<String, FieldMeta> = BTreeMap::new();
    for (f, block) in blocks.iter().enumerate() {
        let id = names.field(f);
        journal_map.insert(names.single_journal(f), [id.clone()].into());
        meta.insert(
            id.clone(),
            FieldMeta {
                name: format!("Field {id}"),
                area_id: format!("b{block}"),
                area_name: format!("Block {block}"),
            },
        );
    }
    let n_multi = (cfg.multi_field_journal_share * cfg.n_fields as f64).round() as usize;
    let mut multi_of: HashMap<usize, Vec<String>> = HashMap::new();
    for k in 0..n_multi {
        let a = (2 * k) % cfg.n_fields;
        let b = (2 * k + 1) % cfg.n_fields;
        if a == b {
            continue;
        }
        let id = names.multi_journal(k);
        journal_map.insert(id.clone(), [names.field(a), names.field(b)].into());
        multi_of.entry(a).or_default().push(id.clone());
        multi_of.entry(b).or_default().push(id);
    }
    let classification = FieldClassification::new(journal_map, meta)?;

    let mut memberships: Vec<Vec<usize>> = Vec::with_capacity(cfg.n_scholars);
    for s in 0..cfg.n_scholars {
        let home = s % cfg.n_blocks;
        let mut held: Vec<usize> = (0..cfg.n_fields)
            .filter(|&f| {
                let p = if blocks[f] == home { cfg.p_in } else { cfg.p_out };
                rng.random::<f64>() < p
            })
            .collect();
        if held.is_empty() {
            let home_fields: Vec<usize> =
                (0..cfg.n_fields).filter(|&f| blocks[f] == home).collect();
            held.push(home_fields[rng.random_range(0..home_fields.len())]);
        }
        memberships.push(held);
    }

    let poisson = Poisson::new(cfg.papers_per_scholar_year)
        .map_err(|e| Error::InvalidInput(format!("paper count distribution: {e}")))?;
    let mut records = Vec::new();
    let mut paper_counter = 0usize;
    for (s, held) in memberships.iter().enumerate() {
        let author_id = names.scholar(s);
        for year in cfg.years.years() {
            let count = poisson.sample(&mut rng) as usize;
            for _ in 0..count {
                let field = held[rng.random_range(0..held.len())];
                let coauthor_count = rng.random_range(1..=10u32);
                let journal_id = pick_journal(&mut rng, &names, &multi_of, field, cfg);
                records.push(PublicationRecord {
                    author_id: author_id.clone(),
                    paper_id: format!("p{paper_counter:07}"),
                    year,
                    journal_id,
                    coauthor_count,
                });
                paper_counter += 1;
            }
        }
    }

    let n_orgs = cfg.n_scholars.div_ceil(10);
    let org_width = digits(n_orgs);
    let country_width = digits(n_orgs.div_ceil(10));
    let mut author_to_org = HashMap::new();
    let mut org_to_country = HashMap::new();
    for s in 0..cfg.n_scholars {
        let org = s / 10;
        author_to_org.insert(names.scholar(s), format!("o{:0w$}", org, w = org_width));
    }
    for org in 0..n_orgs {
        org_to_country.insert(
            format!("o{:0w$}", org, w = org_width),
            format!("c{:0w$}", org / 10, w = country_width),
        );
    }

    let block_map: BTreeMap<String, usize> = (0..cfg.n_fields)
        .map(|f| (names.field(f), blocks[f]))
        .collect();
    let scholar_fields: BTreeMap<String, BTreeSet<String>> = memberships
        .iter()
        .enumerate()
        .map(|(s, held)| {
            (
                names.scholar(s),
                held.iter().map(|&f| names.field(f)).collect(),
            )
        })
        .collect();

    Ok(SynthCorpus {
        records,
        classification,
        affiliations: AffiliationMap::new(author_to_org, org_to_country),
        blocks: block_map,
        scholar_fields,
    })
}

fn pick_journal<R: Rng + ?Sized>(
    rng: &mut R,
    names: &Naming,
    multi_of: &HashMap<usize, Vec<String>>,
    field: usize,
    cfg: &SynthConfig,
) -> String {
    if let Some(covering) = multi_of.get(&field) {
        if rng.random::<f64>() < cfg.multi_field_journal_share {
            let k = if covering.len() > 1 {
                rng.random_range(0..covering.len())
            } else {
                0
            };
            return covering[k].clone();
        }
    }
    names.single_journal(field)
}

/// Samples the field an entity enters next, with weights proportional to
/// planted proximity: each candidate accumulates `p_in` per held field in
/// the same block and `p_out` per held field elsewhere. `None` when no
/// candidate has positive weight.
pub fn sample_new_field<R: Rng + ?Sized>(
    rng: &mut R,
    existing: &BTreeSet<usize>,
    field_blocks: &[usize],
    p_in: f64,
    p_out: f64,
) -> Option<usize> {
    let candidates: Vec<usize> = (0..field_blocks.len())
        .filter(|f| !existing.contains(f))
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let weights: Vec<f64> = candidates
        .iter()
        .map(|&g| {
            existing
                .iter()
                .map(|&f| {
                    if field_blocks[f] == field_blocks[g] {
                        p_in
                    } else {
                        p_out
                    }
                })
                .sum()
        })
        .collect();
    let dist = WeightedIndex::new(&weights).ok()?;
    Some(candidates[dist.sample(rng)])
}

/// Extends a corpus into an outcome window. Per scholar, ascending by id:
/// continuation papers in held fields (Poisson count per year, uniform field,
/// uniform coauthor count, always the field's own journal), then one
/// transition coin; on success one new field is drawn proportional to
/// planted proximity and entered with two solo papers, one in the first and
/// one in the last outcome year. Paper ids carry a `q` prefix so they never
/// collide with training ids.
pub fn generate_outcomes(
    corpus: &SynthCorpus,
    cfg: &SynthConfig,
    outcome_years: YearWindow,
    seed: u64,
) -> Result<Vec<PublicationRecord>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poisson = Poisson::new(cfg.papers_per_scholar_year)
        .map_err(|e| Error::InvalidInput(format!("paper count distribution: {e}")))?;

    let field_ids: Vec<&String> = corpus.blocks.keys().collect();
    let field_blocks: Vec<usize> = field_ids.iter().map(|id| corpus.blocks[*id]).collect();
    let index_of: HashMap<&str, usize> = field_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut single_of: HashMap<usize, String> = HashMap::new();
    for (f, id) in field_ids.iter().enumerate() {
        single_of.insert(f, format!("jf{}", &id[1..]));
    }

    let mut records = Vec::new();
    let mut paper_counter = 0usize;
    for (scholar, held_ids) in &corpus.scholar_fields {
        let held: Vec<usize> = held_ids.iter().map(|id| index_of[id.as_str()]).collect();
        for year in outcome_years.years() {
            let count = poisson.sample(&mut rng) as usize;
            for _ in 0..count {
                let field = held[rng.random_range(0..held.len())];
                let coauthor_count = rng.random_range(1..=10u32);
                records.push(PublicationRecord {
                    author_id: scholar.clone(),
                    paper_id: format!("q{paper_counter:07}"),
                    year,
                    journal_id: single_of[&field].clone(),
                    coauthor_count,
                });
                paper_counter += 1;
            }
        }
        let transitions = rng.random::<f64>() < cfg.transition_rate;
        if transitions {
            let existing: BTreeSet<usize> = held.iter().copied().collect();
            if let Some(new_field) =
                sample_new_field(&mut rng, &existing, &field_blocks, cfg.p_in, cfg.p_out)
            {
                for year in [outcome_years.start(), outcome_years.end() - 1] {
                    records.push(PublicationRecord {
                        author_id: scholar.clone(),
                        paper_id: format!("q{paper_counter:07}"),
                        year,
                        journal_id: single_of[&new_field].clone(),
                        coauthor_count: 1,
                    });
                    paper_counter += 1;
                }
            }
        }
    }
    Ok(records)
}

/// Writes the planted block assignment as `field_id,block`.
pub fn write_blocks_csv<W: Write>(blocks: &BTreeMap<String, usize>, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["field_id", "block"])?;
    for (field, block) in blocks {
        wtr.write_record([field.as_str(), &block.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_scholars: 40,
            n_fields: 10,
            ..SynthConfig::default()
        }
    }

    fn outcome_window() -> YearWindow {
        YearWindow::new(2011, 2014).unwrap()
    }

    #[test]
    fn same_seed_reproduces_everything() {
        let cfg = small();
        let a = generate_corpus(&cfg).unwrap();
        let b = generate_corpus(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.blocks, b.blocks);
        assert_eq!(a.scholar_fields, b.scholar_fields);
        let oa = generate_outcomes(&a, &cfg, outcome_window(), 7).unwrap();
        let ob = generate_outcomes(&b, &cfg, outcome_window(), 7).unwrap();
        assert_eq!(oa, ob);
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate_corpus(&small()).unwrap();
        let b = generate_corpus(&SynthConfig {
            seed: 2,
            ..small()
        })
        .unwrap();
        assert_ne!(a.records, b.records);
    }

    #[test]
    fn p_out_zero_confines_scholars_to_their_block() {
        let cfg = SynthConfig {
            p_out: 0.0,
            ..small()
        };
        let corpus = generate_corpus(&cfg).unwrap();
        for held in corpus.scholar_fields.values() {
            let blocks: BTreeSet<usize> = held.iter().map(|f| corpus.blocks[f]).collect();
            assert_eq!(blocks.len(), 1);
        }
    }

    #[test]
    fn blocks_partition_fields_evenly() {
        let cfg = SynthConfig {
            n_fields: 5,
            n_blocks: 4,
            ..small()
        };
        let corpus = generate_corpus(&cfg).unwrap();
        let seen: BTreeSet<usize> = corpus.blocks.values().copied().collect();
        assert_eq!(seen, (0..4).collect());
    }

    #[test]
    fn record_years_stay_in_their_windows() {
        let cfg = small();
        let corpus = generate_corpus(&cfg).unwrap();
        assert!(corpus.records.iter().all(|r| cfg.years.contains(r.year)));
        assert!(!corpus.records.is_empty());
        let outcomes = generate_outcomes(&corpus, &cfg, outcome_window(), 7).unwrap();
        assert!(outcomes.iter().all(|r| outcome_window().contains(r.year)));
        assert!(outcomes.iter().all(|r| r.paper_id.starts_with('q')));
    }

    #[test]
    fn classification_covers_every_field_plus_multi_journals() {
        let cfg = SynthConfig {
            multi_field_journal_share: 0.2,
            ..small()
        };
        let corpus = generate_corpus(&cfg).unwrap();
        assert_eq!(corpus.classification.field_count(), 10);
        // Ten single-field journals plus round(0.2 * 10) two-field journals.
        assert_eq!(corpus.classification.journal_count(), 12);
        let two_field = corpus
            .classification
            .fields_of("jm0")
            .expect("multi journal exists");
        assert_eq!(two_field.len(), 2);
    }

    #[test]
    fn affiliations_are_round_robin() {
        let cfg = SynthConfig {
            n_scholars: 25,
            ..small()
        };
        let corpus = generate_corpus(&cfg).unwrap();
        assert_eq!(corpus.affiliations.org_of("s09"), Some("o0"));
        assert_eq!(corpus.affiliations.org_of("s10"), Some("o1"));
        assert_eq!(corpus.affiliations.org_of("s24"), Some("o2"));
        assert_eq!(corpus.affiliations.country_of_org("o2"), Some("c0"));
        assert_eq!(corpus.affiliations.country_of_author("s24"), Some("c0"));
    }

    fn fields_of_records(
        corpus: &SynthCorpus,
        records: &[PublicationRecord],
        scholar: &str,
    ) -> BTreeSet<String> {
        records
            .iter()
            .filter(|r| r.author_id == scholar)
            .flat_map(|r| {
                corpus
                    .classification
                    .fields_of(&r.journal_id)
                    .expect("synthetic journals are always classified")
                    .iter()
                    .cloned()
            })
            .collect()
    }

    #[test]
    fn zero_transition_rate_adds_no_new_fields() {
        let cfg = SynthConfig {
            transition_rate: 0.0,
            ..small()
        };
        let corpus = generate_corpus(&cfg).unwrap();
        let outcomes = generate_outcomes(&corpus, &cfg, outcome_window(), 7).unwrap();
        for (scholar, held) in &corpus.scholar_fields {
            let touched = fields_of_records(&corpus, &outcomes, scholar);
            assert!(touched.is_subset(held), "{scholar} gained a field");
        }
    }

    #[test]
    fn full_transition_rate_adds_exactly_one_field() {
        let cfg = SynthConfig {
            transition_rate: 1.0,
            ..small()
        };
        let corpus = generate_corpus(&cfg).unwrap();
        let outcomes = generate_outcomes(&corpus, &cfg, outcome_window(), 7).unwrap();
        for (scholar, held) in &corpus.scholar_fields {
            if held.len() == cfg.n_fields {
                continue;
            }
            let touched = fields_of_records(&corpus, &outcomes, scholar);
            let gained: Vec<&String> = touched.difference(held).collect();
            assert_eq!(gained.len(), 1, "{scholar} should enter one field");
            let entries: Vec<&PublicationRecord> = outcomes
                .iter()
                .filter(|r| {
                    r.author_id == *scholar
                        && corpus
                            .classification
                            .fields_of(&r.journal_id)
                            .unwrap()
                            .contains(gained[0])
                })
                .collect();
            assert_eq!(entries.len(), 2);
            assert!(entries.iter().all(|r| r.coauthor_count == 1));
            assert_eq!(entries[0].year, 2011);
            assert_eq!(entries[1].year, 2013);
        }
    }

    #[test]
    fn dominant_neighbor_is_the_modal_draw() {
        let field_blocks = [0, 0, 0, 1];
        let existing: BTreeSet<usize> = [0, 1].into();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut counts = [0usize; 4];
        for _ in 0..1000 {
            let f = sample_new_field(&mut rng, &existing, &field_blocks, 0.9, 0.01).unwrap();
            counts[f] += 1;
        }
        assert_eq!(counts[0] + counts[1], 0);
        assert!(counts[2] > 800, "close neighbor drawn {} times", counts[2]);
    }

    #[test]
    fn sample_new_field_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let all: BTreeSet<usize> = [0, 1].into();
        assert_eq!(sample_new_field(&mut rng, &all, &[0, 0], 0.9, 0.1), None);
        // No held fields means zero weight everywhere.
        let none = BTreeSet::new();
        assert_eq!(sample_new_field(&mut rng, &none, &[0, 0], 0.9, 0.1), None);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            SynthConfig {
                p_out: 0.8,
                p_in: 0.8,
                ..small()
            },
            SynthConfig {
                p_in: 1.2,
                ..small()
            },
            SynthConfig {
                n_blocks: 0,
                ..small()
            },
            SynthConfig {
                n_blocks: 11,
                ..small()
            },
            SynthConfig {
                papers_per_scholar_year: 0.0,
                ..small()
            },
            SynthConfig {
                transition_rate: 1.5,
                ..small()
            },
        ];
        for cfg in bad {
            assert!(generate_corpus(&cfg).is_err());
        }
    }

    #[test]
    fn blocks_csv_round_trips_by_eye() {
        let corpus = generate_corpus(&small()).unwrap();
        let mut buf = Vec::new();
        write_blocks_csv(&corpus.blocks, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("field_id,block\n"));
        assert_eq!(text.lines().count(), 11);
    }
}
