//! Corpus parsing, prolific-author filtering, field annotation, and entity
//! aggregation.
//!
//! The raw corpus is a stream of (author, paper, year, journal, coauthor
//! count) events, one row per author-paper pair. Malformed rows are skipped
//! and reported by line number; structural problems (a missing column, an
//! unreadable stream) abort the parse.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::types::AggregationLevel;

/// One author-paper event from the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicationRecord {
    pub author_id: String,
    pub paper_id: String,
    pub year: i32,
    pub journal_id: String,
    /// Total number of authors on the paper, this one included. At least 1.
    pub coauthor_count: u32,
}

/// A paper share attributed to one entity in one field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldedPublication {
    pub entity_id: String,
    pub field_id: String,
    pub year: i32,
    /// Fractional credit `1 / (coauthor_count * fields_of_journal)`.
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(CorpusFormat::Csv),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(Error::InvalidInput(format!(
                "unknown corpus format `{other}` (expected csv or jsonl)"
            ))),
        }
    }
}

/// Controls for [`parse_corpus`]. Records dated outside
/// `[year_min, year_max]` are dropped and counted, not treated as malformed.
#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    pub format: CorpusFormat,
    pub year_min: i32,
    pub year_max: i32,
}

impl ParseOptions {
    pub fn new(format: CorpusFormat) -> Self {
        ParseOptions {
            format,
            year_min: 1971,
            year_max: 2014,
        }
    }
}

/// A skipped input line and the reason it was skipped.
#[derive(Debug, Clone)]
pub struct RejectedLine {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    /// Records accepted.
    pub parsed: usize,
    /// Malformed lines, in input order.
    pub rejected: Vec<RejectedLine>,
    /// Well-formed records whose year fell outside the plausible range.
    pub out_of_range: usize,
}

impl ParseReport {
    pub fn rejected_count(&self) -> usize {
        self.rejected.len()
    }
}

const CORPUS_COLUMNS: [&str; 5] = [
    "author_id",
    "paper_id",
    "year",
    "journal_id",
    "coauthor_count",
];

/// Parses the corpus stream, skipping malformed lines.
pub fn parse_corpus<R: Read>(
    reader: R,
    opts: &ParseOptions,
) -> Result<(Vec<PublicationRecord>, ParseReport)> {
    match opts.format {
        CorpusFormat::Csv => parse_csv(reader, opts),
        CorpusFormat::Jsonl => parse_jsonl(reader, opts),
    }
}

fn parse_csv<R: Read>(
    reader: R,
    opts: &ParseOptions,
) -> Result<(Vec<PublicationRecord>, ParseReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut cols = [0usize; 5];
    for (slot, name) in cols.iter_mut().zip(CORPUS_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }

    let mut records = Vec::new();
    let mut report = ParseReport::default();
    for row in rdr.records() {
        match row {
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                report.rejected.push(RejectedLine {
                    line,
                    reason: e.to_string(),
                });
            }
            Ok(rec) => {
                let line = rec.position().map(|p| p.line()).unwrap_or(0);
                match interpret_csv_row(&rec, &cols) {
                    Ok(pr) => accept(pr, opts, &mut records, &mut report),
                    Err(reason) => report.rejected.push(RejectedLine { line, reason }),
                }
            }
        }
    }
    Ok((records, report))
}

fn interpret_csv_row(
    rec: &csv::StringRecord,
    cols: &[usize; 5],
) -> std::result::Result<PublicationRecord, String> {
    let field = |i: usize| -> std::result::Result<&str, String> {
        rec.get(cols[i])
            .ok_or_else(|| format!("missing value for `{}`", CORPUS_COLUMNS[i]))
    };
    let year: i32 = field(2)?
        .parse()
        .map_err(|_| format!("unparseable year `{}`", field(2).unwrap_or("")))?;
    let coauthor_count: u32 = field(4)?
        .parse()
        .map_err(|_| format!("unparseable coauthor_count `{}`", field(4).unwrap_or("")))?;
    validate_record(PublicationRecord {
        author_id: field(0)?.to_string(),
        paper_id: field(1)?.to_string(),
        year,
        journal_id: field(3)?.to_string(),
        coauthor_count,
    })
}

#[derive(Deserialize)]
struct JsonlRecord {
    author_id: String,
    paper_id: String,
    year: i32,
    journal_id: String,
    coauthor_count: u32,
}

fn parse_jsonl<R: Read>(
    reader: R,
    opts: &ParseOptions,
) -> Result<(Vec<PublicationRecord>, ParseReport)> {
    let mut records = Vec::new();
    let mut report = ParseReport::default();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = (i + 1) as u64;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<JsonlRecord>(&text) {
            Err(e) => report.rejected.push(RejectedLine {
                line: line_no,
                reason: e.to_string(),
            }),
            Ok(j) => {
                let candidate = PublicationRecord {
                    author_id: j.author_id,
                    paper_id: j.paper_id,
                    year: j.year,
                    journal_id: j.journal_id,
                    coauthor_count: j.coauthor_count,
                };
                match validate_record(candidate) {
                    Ok(pr) => accept(pr, opts, &mut records, &mut report),
                    Err(reason) => report.rejected.push(RejectedLine {
                        line: line_no,
                        reason,
                    }),
                }
            }
        }
    }
    Ok((records, report))
}

fn validate_record(pr: PublicationRecord) -> std::result::Result<PublicationRecord, String> {
    if pr.author_id.is_empty() {
        return Err("empty author_id".into());
    }
    if pr.paper_id.is_empty() {
        return Err("empty paper_id".into());
    }
    if pr.journal_id.is_empty() {
        return Err("empty journal_id".into());
    }
    if pr.coauthor_count == 0 {
        return Err("coauthor_count must be at least 1".into());
    }
    Ok(pr)
}

fn accept(
    pr: PublicationRecord,
    opts: &ParseOptions,
    records: &mut Vec<PublicationRecord>,
    report: &mut ParseReport,
) {
    if pr.year < opts.year_min || pr.year > opts.year_max {
        report.out_of_range += 1;
    } else {
        records.push(pr);
        report.parsed += 1;
    }
}

/// Serializes records back to the corpus CSV format.
pub fn write_corpus_csv<W: Write>(records: &[PublicationRecord], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CORPUS_COLUMNS)?;
    for r in records {
        wtr.write_record([
            r.author_id.as_str(),
            r.paper_id.as_str(),
            &r.year.to_string(),
            r.journal_id.as_str(),
            &r.coauthor_count.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProlificReport {
    pub authors_removed: usize,
    pub records_removed: usize,
}

/// Removes every record of any author who reaches `max_per_year` distinct
/// papers in at least one calendar year. Such ids are almost always name
/// collisions rather than people, so the whole career is dropped, not just
/// the offending year. Applying the filter twice changes nothing.
pub fn filter_prolific(
    records: Vec<PublicationRecord>,
    max_per_year: u32,
) -> (Vec<PublicationRecord>, ProlificReport) {
    let banned: HashSet<String> = {
        let mut papers: HashMap<&str, HashMap<i32, HashSet<&str>>> = HashMap::new();
        for r in &records {
            papers
                .entry(r.author_id.as_str())
                .or_default()
                .entry(r.year)
                .or_default()
                .insert(r.paper_id.as_str());
        }
        papers
            .into_iter()
            .filter(|(_, by_year)| by_year.values().any(|p| p.len() as u32 >= max_per_year))
            .map(|(author, _)| author.to_string())
            .collect()
    };
    let before = records.len();
    let kept: Vec<PublicationRecord> = records
        .into_iter()
        .filter(|r| !banned.contains(&r.author_id))
        .collect();
    let removed = before - kept.len();
    (
        kept,
        ProlificReport {
            authors_removed: banned.len(),
            records_removed: removed,
        },
    )
}

/// Per-field metadata from the classification table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMeta {
    pub name: String,
    pub area_id: String,
    pub area_name: String,
}

/// Journal-to-field classification plus field metadata.
///
/// Every journal maps to at least one field and every referenced field has a
/// metadata entry; both are checked at construction.
#[derive(Debug, Clone)]
pub struct FieldClassification {
    journal_to_fields: BTreeMap<String, BTreeSet<String>>,
    field_meta: BTreeMap<String, FieldMeta>,
}

impl FieldClassification {
    pub fn new(
        journal_to_fields: BTreeMap<String, BTreeSet<String>>,
        field_meta: BTreeMap<String, FieldMeta>,
    ) -> Result<Self> {
        for (journal, fields) in &journal_to_fields {
            if fields.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "journal `{journal}` maps to no fields"
                )));
            }
            for f in fields {
                if !field_meta.contains_key(f) {
                    return Err(Error::InvalidInput(format!(
                        "journal `{journal}` references field `{f}` missing from field metadata"
                    )));
                }
            }
        }
        Ok(FieldClassification {
            journal_to_fields,
            field_meta,
        })
    }

    /// Reads the two classification tables. Unlike the corpus stream these
    /// are curated inputs, so any malformed row is a hard error.
    pub fn from_csv<R1: Read, R2: Read>(journal_fields: R1, field_meta: R2) -> Result<Self> {
        let mut jf: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut rdr = csv::Reader::from_reader(journal_fields);
        let cols = locate_columns(rdr.headers()?, &["journal_id", "field_id"])?;
        for row in rdr.records() {
            let rec = row?;
            let journal = required(&rec, cols[0], "journal_id")?;
            let field = required(&rec, cols[1], "field_id")?;
            jf.entry(journal).or_default().insert(field);
        }

        let mut meta: BTreeMap<String, FieldMeta> = BTreeMap::new();
        let mut rdr = csv::Reader::from_reader(field_meta);
        let cols = locate_columns(
            rdr.headers()?,
            &["field_id", "field_name", "area_id", "area_name"],
        )?;
        for row in rdr.records() {
            let rec = row?;
            let id = required(&rec, cols[0], "field_id")?;
            meta.insert(
                id,
                FieldMeta {
                    name: required(&rec, cols[1], "field_name")?,
                    area_id: required(&rec, cols[2], "area_id")?,
                    area_name: required(&rec, cols[3], "area_name")?,
                },
            );
        }
        FieldClassification::new(jf, meta)
    }

    pub fn fields_of(&self, journal_id: &str) -> Option<&BTreeSet<String>> {
        self.journal_to_fields.get(journal_id)
    }

    pub fn field_meta(&self, field_id: &str) -> Option<&FieldMeta> {
        self.field_meta.get(field_id)
    }

    pub fn field_ids(&self) -> impl Iterator<Item = &str> {
        self.field_meta.keys().map(String::as_str)
    }

    pub fn journal_count(&self) -> usize {
        self.journal_to_fields.len()
    }

    pub fn field_count(&self) -> usize {
        self.field_meta.len()
    }

    pub fn write_journal_fields_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["journal_id", "field_id"])?;
        for (journal, fields) in &self.journal_to_fields {
            for field in fields {
                wtr.write_record([journal.as_str(), field.as_str()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_field_meta_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["field_id", "field_name", "area_id", "area_name"])?;
        for (id, meta) in &self.field_meta {
            wtr.write_record([
                id.as_str(),
                meta.name.as_str(),
                meta.area_id.as_str(),
                meta.area_name.as_str(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn locate_columns(headers: &csv::StringRecord, names: &[&str]) -> Result<Vec<usize>> {
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

fn required(rec: &csv::StringRecord, col: usize, name: &str) -> Result<String> {
    let value = rec
        .get(col)
        .ok_or_else(|| Error::InvalidInput(format!("row missing value for `{name}`")))?;
    if value.is_empty() {
        return Err(Error::InvalidInput(format!("empty value for `{name}`")));
    }
    Ok(value.to_string())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MapFieldsReport {
    /// Records whose journal has no classification entry.
    pub unmapped_records: usize,
}

/// Expands each record into per-field shares weighted `1/(n_p * m_p)`, where
/// `n_p` is the coauthor count and `m_p` the number of fields of the journal.
/// The shares of one record always sum to `1/n_p`.
pub fn map_to_fields(
    records: &[PublicationRecord],
    classification: &FieldClassification,
) -> (Vec<FieldedPublication>, MapFieldsReport) {
    let mut out = Vec::new();
    let mut report = MapFieldsReport::default();
    for r in records {
        match classification.fields_of(&r.journal_id) {
            None => report.unmapped_records += 1,
            Some(fields) => {
                let weight = 1.0 / (r.coauthor_count as f64 * fields.len() as f64);
                for field in fields {
                    out.push(FieldedPublication {
                        entity_id: r.author_id.clone(),
                        field_id: field.clone(),
                        year: r.year,
                        weight,
                    });
                }
            }
        }
    }
    (out, report)
}

/// Author-to-organization and organization-to-country lookup tables.
#[derive(Debug, Clone, Default)]
pub struct AffiliationMap {
    author_to_org: HashMap<String, String>,
    org_to_country: HashMap<String, String>,
}

impl AffiliationMap {
    pub fn new(
        author_to_org: HashMap<String, String>,
        org_to_country: HashMap<String, String>,
    ) -> Self {
        AffiliationMap {
            author_to_org,
            org_to_country,
        }
    }

    /// Reads the two affiliation tables. An id listed twice with different
    /// parents is ambiguous and rejected.
    pub fn from_csv<R1: Read, R2: Read>(author_org: R1, org_country: R2) -> Result<Self> {
        Ok(AffiliationMap {
            author_to_org: read_pair_table(author_org, "author_id", "org_id")?,
            org_to_country: read_pair_table(org_country, "org_id", "country_id")?,
        })
    }

    pub fn org_of(&self, author_id: &str) -> Option<&str> {
        self.author_to_org.get(author_id).map(String::as_str)
    }

    pub fn country_of_org(&self, org_id: &str) -> Option<&str> {
        self.org_to_country.get(org_id).map(String::as_str)
    }

    pub fn country_of_author(&self, author_id: &str) -> Option<&str> {
        self.org_of(author_id).and_then(|o| self.country_of_org(o))
    }

    pub fn write_author_org_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_pair_table(&self.author_to_org, ["author_id", "org_id"], writer)
    }

    pub fn write_org_country_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_pair_table(&self.org_to_country, ["org_id", "country_id"], writer)
    }
}

fn read_pair_table<R: Read>(reader: R, key: &str, value: &str) -> Result<HashMap<String, String>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let cols = locate_columns(rdr.headers()?, &[key, value])?;
    let mut map = HashMap::new();
    for row in rdr.records() {
        let rec = row?;
        let k = required(&rec, cols[0], key)?;
        let v = required(&rec, cols[1], value)?;
        if let Some(existing) = map.get(&k) {
            if existing != &v {
                return Err(Error::InvalidInput(format!(
                    "`{k}` maps to both `{existing}` and `{v}` in the {key} table"
                )));
            }
        }
        map.insert(k, v);
    }
    Ok(map)
}

fn write_pair_table<W: Write>(
    map: &HashMap<String, String>,
    header: [&str; 2],
    writer: W,
) -> Result<()> {
    let sorted: BTreeMap<&String, &String> = map.iter().collect();
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(header)?;
    for (k, v) in sorted {
        wtr.write_record([k.as_str(), v.as_str()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AggregateReport {
    /// Distinct authors dropped for lack of an affiliation.
    pub excluded_authors: usize,
    pub excluded_records: usize,
}

/// Relabels author shares as organization or country shares. Weights are
/// untouched; author level is the identity. Authors without the needed
/// affiliation are excluded and counted.
pub fn aggregate_entities(
    pubs: Vec<FieldedPublication>,
    affiliations: &AffiliationMap,
    level: AggregationLevel,
) -> (Vec<FieldedPublication>, AggregateReport) {
    if level == AggregationLevel::Author {
        return (pubs, AggregateReport::default());
    }
    let mut out = Vec::with_capacity(pubs.len());
    let mut excluded_authors: BTreeSet<String> = BTreeSet::new();
    let mut excluded_records = 0usize;
    for p in pubs {
        let target = match level {
            AggregationLevel::Author => unreachable!(),
            AggregationLevel::Organization => affiliations.org_of(&p.entity_id),
            AggregationLevel::Country => affiliations.country_of_author(&p.entity_id),
        };
        match target {
            Some(id) => out.push(FieldedPublication {
                entity_id: id.to_string(),
                field_id: p.field_id,
                year: p.year,
                weight: p.weight,
            }),
            None => {
                excluded_records += 1;
                excluded_authors.insert(p.entity_id);
            }
        }
    }
    (
        out,
        AggregateReport {
            excluded_authors: excluded_authors.len(),
            excluded_records,
        },
    )
}
