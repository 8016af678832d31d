//! Subcommand implementations. Each reads its declared inputs, computes
//! through the core crate, and writes artifacts atomically (temp file plus
//! rename) into the output directory.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write as _};
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde::Serialize;
use serde_json::json;

use respace_core::backbone::{build_backbone, export_graph, overlay_states, ExportFormat};
use respace_core::evaluate::{
    compare_groups, correlate_maps, evaluate_pipeline, evaluate_predictions, inclusion_filter,
    write_scatter_csv, PipelineInputs,
};
use respace_core::ingest::{
    aggregate_entities, filter_prolific, map_to_fields, parse_corpus, write_corpus_csv,
    AffiliationMap, CorpusFormat, FieldClassification, ParseOptions, ParseReport,
    ProlificReport, PublicationRecord,
};
use respace_core::predict::{
    density, rank_candidates, read_predictions_csv, u_matrix, write_predictions_csv,
    TransitionSpec,
};
use respace_core::report::{
    BaselineSummary, EvaluationReport, MapSummary,
};
use respace_core::space::{
    cooccurrence, discretize, load_external_map, proximity, symmetrize_max, PresenceMatrix,
    ProximityMatrix,
};
use respace_core::states::{rca, read_states_csv, write_states_csv};
use respace_core::synth::{generate_corpus, generate_outcomes, write_blocks_csv};
use respace_core::types::{AggregationLevel, FieldIndex, MapKind, YearWindow};

use crate::config::RunConfig;

pub enum CliError {
    /// An upstream artifact this command consumes does not exist.
    MissingArtifact(PathBuf),
    Usage(String),
    Internal(anyhow::Error),
}

impl From<respace_core::Error> for CliError {
    fn from(e: respace_core::Error) -> Self {
        CliError::Internal(e.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Internal(e)
    }
}

pub type CmdResult = Result<(), CliError>;

pub struct Ctx {
    pub cfg: RunConfig,
    pub out_dir: PathBuf,
}

fn require(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingArtifact(path.to_path_buf()))
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    require(path)?;
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Internal(anyhow!("reading {}: {e}", path.display())))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> CmdResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Internal(anyhow!("creating {}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Internal(anyhow!("temp file in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)
        .and_then(|()| tmp.flush())
        .map_err(|e| CliError::Internal(anyhow!("writing {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::Internal(anyhow!("renaming into {}: {e}", path.display())))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(anyhow!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn phi_path(ctx: &Ctx) -> PathBuf {
    ctx.out_dir.join("phi_research_space.csv")
}

fn states_path(ctx: &Ctx, level: AggregationLevel, tag: &str) -> PathBuf {
    ctx.out_dir.join(format!("states_{level}_{tag}.csv"))
}

fn predictions_path(
    ctx: &Ctx,
    level: AggregationLevel,
    transition: respace_core::predict::TransitionKind,
    map: MapKind,
) -> PathBuf {
    ctx.out_dir
        .join(format!("predictions_{level}_{transition}_{map}.csv"))
}

fn load_classification(ctx: &Ctx) -> Result<(FieldClassification, FieldIndex), CliError> {
    let classification = FieldClassification::from_csv(
        open(&ctx.cfg.paths.journal_fields)?,
        open(&ctx.cfg.paths.field_meta)?,
    )?;
    let fields = FieldIndex::from_ids(classification.field_ids());
    Ok((classification, fields))
}

fn load_affiliations(ctx: &Ctx, level: AggregationLevel) -> Result<AffiliationMap, CliError> {
    if level == AggregationLevel::Author {
        return Ok(AffiliationMap::default());
    }
    Ok(AffiliationMap::from_csv(
        open(&ctx.cfg.paths.author_org)?,
        open(&ctx.cfg.paths.org_country)?,
    )?)
}

fn load_corpus(
    ctx: &Ctx,
) -> Result<(Vec<PublicationRecord>, ParseReport, ProlificReport), CliError> {
    let path = &ctx.cfg.paths.corpus;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => CorpusFormat::Jsonl,
        _ => CorpusFormat::Csv,
    };
    let mut opts = ParseOptions::new(format);
    opts.year_min = ctx.cfg.windows.year_min;
    opts.year_max = ctx.cfg.windows.year_max;
    let (records, parse_report) = parse_corpus(open(path)?, &opts)?;
    let (records, prolific) = filter_prolific(records, ctx.cfg.params.max_papers_per_year);
    Ok((records, parse_report, prolific))
}

fn presence_over(
    records: &[PublicationRecord],
    classification: &FieldClassification,
    affiliations: &AffiliationMap,
    level: AggregationLevel,
    window: YearWindow,
    fields: &FieldIndex,
) -> Result<PresenceMatrix, CliError> {
    let (fielded, _) = map_to_fields(records, classification);
    let (fielded, _) = aggregate_entities(fielded, affiliations, level);
    Ok(PresenceMatrix::build(
        &fielded,
        window,
        level,
        fields.clone(),
    )?)
}

/// Reads the proximity artifact and pins it to the canonical field index.
fn load_phi(ctx: &Ctx, fields: &FieldIndex) -> Result<ProximityMatrix, CliError> {
    let phi = ProximityMatrix::read_csv(open(&phi_path(ctx))?, MapKind::ResearchSpace)?;
    if phi.fields() != fields {
        return Err(CliError::Internal(anyhow!(
            "{} covers different fields than the classification; rebuild it",
            phi_path(ctx).display()
        )));
    }
    Ok(phi)
}

pub fn cmd_synth(ctx: &Ctx) -> CmdResult {
    let cfg = ctx.cfg.synth_config()?;
    let corpus = generate_corpus(&cfg)?;
    let outcome_window = ctx.cfg.outcome_window()?;
    let outcome_seed = ctx.cfg.synth.outcome_seed.unwrap_or(cfg.seed + 1);
    let outcomes = generate_outcomes(&corpus, &cfg, outcome_window, outcome_seed)?;

    let mut all = corpus.records.clone();
    all.extend(outcomes.iter().cloned());
    let mut buf = Vec::new();
    write_corpus_csv(&all, &mut buf)?;
    write_atomic(&ctx.cfg.paths.corpus, &buf)?;

    let mut buf = Vec::new();
    corpus.classification.write_journal_fields_csv(&mut buf)?;
    write_atomic(&ctx.cfg.paths.journal_fields, &buf)?;
    let mut buf = Vec::new();
    corpus.classification.write_field_meta_csv(&mut buf)?;
    write_atomic(&ctx.cfg.paths.field_meta, &buf)?;

    let mut buf = Vec::new();
    corpus.affiliations.write_author_org_csv(&mut buf)?;
    write_atomic(&ctx.cfg.paths.author_org, &buf)?;
    let mut buf = Vec::new();
    corpus.affiliations.write_org_country_csv(&mut buf)?;
    write_atomic(&ctx.cfg.paths.org_country, &buf)?;

    let mut buf = Vec::new();
    write_blocks_csv(&corpus.blocks, &mut buf)?;
    write_atomic(&ctx.out_dir.join("blocks.csv"), &buf)?;

    write_json(
        &ctx.out_dir.join("synth_report.json"),
        &json!({
            "seed": cfg.seed,
            "outcome_seed": outcome_seed,
            "n_scholars": cfg.n_scholars,
            "n_fields": cfg.n_fields,
            "n_blocks": cfg.n_blocks,
            "training_records": corpus.records.len(),
            "outcome_records": outcomes.len(),
            "journals": corpus.classification.journal_count(),
        }),
    )
}

pub fn cmd_build_space(ctx: &Ctx) -> CmdResult {
    let (classification, fields) = load_classification(ctx)?;
    let (records, parse_report, prolific) = load_corpus(ctx)?;
    let window = ctx.cfg.train_window()?;
    let (fielded, map_report) = map_to_fields(&records, &classification);
    let x = PresenceMatrix::build(&fielded, window, AggregationLevel::Author, fields.clone())?;
    let presence = discretize(&x, ctx.cfg.params.presence_threshold);
    if presence.n_entities() == 0 {
        return Err(CliError::Internal(anyhow!("no scholars after filtering")));
    }
    let m = cooccurrence(&presence)?;
    let phi = proximity(&m, &presence)?;

    let mut buf = Vec::new();
    phi.write_csv(&mut buf)?;
    write_atomic(&phi_path(ctx), &buf)?;
    write_json(
        &ctx.out_dir.join("build_report.json"),
        &json!({
            "n_scholars": presence.n_entities(),
            "n_fields": fields.len(),
            "m_density": m.density(),
            "train_window": [window.start(), window.end()],
            "presence_threshold": ctx.cfg.params.presence_threshold,
            "records_parsed": parse_report.parsed,
            "records_rejected": parse_report.rejected_count(),
            "records_out_of_range": parse_report.out_of_range,
            "prolific_authors_removed": prolific.authors_removed,
            "prolific_records_removed": prolific.records_removed,
            "unmapped_records": map_report.unmapped_records,
        }),
    )
}

pub fn cmd_states(ctx: &Ctx) -> CmdResult {
    let (classification, fields) = load_classification(ctx)?;
    let level = ctx.cfg.level()?;
    let affiliations = load_affiliations(ctx, level)?;
    let (records, _, _) = load_corpus(ctx)?;

    let mut counts = Vec::new();
    for (window, tag) in [
        (ctx.cfg.state_window()?, "t0"),
        (ctx.cfg.outcome_window()?, "t1"),
    ] {
        let x = presence_over(&records, &classification, &affiliations, level, window, &fields)?;
        let r = rca(&x)?;
        let mut buf = Vec::new();
        write_states_csv(&r, &mut buf)?;
        write_atomic(&states_path(ctx, level, tag), &buf)?;
        counts.push(json!({
            "window": [window.start(), window.end()],
            "entities": x.n_entities(),
        }));
    }
    write_json(
        &ctx.out_dir.join("states_report.json"),
        &json!({
            "level": level.to_string(),
            "snapshots": counts,
        }),
    )
}

pub fn cmd_predict(ctx: &Ctx, map: MapKind) -> CmdResult {
    let external_path = match map {
        MapKind::ResearchSpace => None,
        MapKind::External => Some(ctx.cfg.paths.external_map.clone().ok_or_else(|| {
            CliError::Usage("external map requested but paths.external_map is unset".into())
        })?),
    };
    let (_, fields) = load_classification(ctx)?;
    let level = ctx.cfg.level()?;
    let spec = TransitionSpec::standard(ctx.cfg.transition()?);
    let (rca_t0, states_t0) = read_states_csv(
        open(&states_path(ctx, level, "t0"))?,
        &fields,
        level,
        ctx.cfg.state_window()?,
    )?;
    let phi = match &external_path {
        None => load_phi(ctx, &fields)?,
        Some(path) => load_external_map(open(path)?, &fields)?.0,
    };
    let u = u_matrix(&rca_t0, &spec);
    let omega = density(&u, &phi)?;
    let ranked = rank_candidates(&omega, &states_t0, &spec)?;

    let mut buf = Vec::new();
    write_predictions_csv(&ranked, &mut buf)?;
    write_atomic(&predictions_path(ctx, level, spec.kind, map), &buf)?;
    write_json(
        &ctx.out_dir.join("predict_report.json"),
        &json!({
            "level": level.to_string(),
            "transition": spec.kind.to_string(),
            "map": map.to_string(),
            "entities": ranked.n_entities(),
            "candidates": ranked.n_candidates(),
            "tied": ranked.n_tied(),
        }),
    )
}

pub fn cmd_evaluate(ctx: &Ctx, baseline_seed: Option<u64>) -> CmdResult {
    let (classification, fields) = load_classification(ctx)?;
    let level = ctx.cfg.level()?;
    let spec = TransitionSpec::standard(ctx.cfg.transition()?);
    let state_window = ctx.cfg.state_window()?;
    let outcome_window = ctx.cfg.outcome_window()?;
    let b = ctx.cfg.inclusion_floor(level);

    let (_, states_t1) = read_states_csv(
        open(&states_path(ctx, level, "t1"))?,
        &fields,
        level,
        outcome_window,
    )?;
    let affiliations = load_affiliations(ctx, level)?;
    let (records, _, _) = load_corpus(ctx)?;
    let x_t0 = presence_over(
        &records,
        &classification,
        &affiliations,
        level,
        state_window,
        &fields,
    )?;
    let included = inclusion_filter(&x_t0, b, ctx.cfg.params.delta_t);

    let rs_path = predictions_path(ctx, level, spec.kind, MapKind::ResearchSpace);
    let preds_rs = read_predictions_csv(open(&rs_path)?, level)?;
    let ev_rs = evaluate_predictions(&preds_rs, &states_t1, &included, &spec)?;
    let mut report = EvaluationReport::new(&ev_rs, state_window, outcome_window, b);

    let ext_path = predictions_path(ctx, level, spec.kind, MapKind::External);
    if ext_path.is_file() {
        let preds_ext = read_predictions_csv(open(&ext_path)?, level)?;
        let ev_ext = evaluate_predictions(&preds_ext, &states_t1, &included, &spec)?;
        report.external = Some(MapSummary::from_evaluation(&ev_ext));
        report.comparison = Some(compare_groups(&ev_rs.aucs(), &ev_ext.aucs())?.into());
    }

    if let Some(seed) = baseline_seed.or(ctx.cfg.evaluate.baseline_seed) {
        let (rca_t0, states_t0) = read_states_csv(
            open(&states_path(ctx, level, "t0"))?,
            &fields,
            level,
            state_window,
        )?;
        let shuffled = load_phi(ctx, &fields)?.shuffled_fields(seed);
        let inputs = PipelineInputs {
            rca_t0: &rca_t0,
            states_t0: &states_t0,
            states_t1: &states_t1,
            phi: &shuffled,
            inclusion: &x_t0,
        };
        let ev_null = evaluate_pipeline(&inputs, &spec, b, ctx.cfg.params.delta_t)?;
        let mut summary = MapSummary::from_evaluation(&ev_null);
        summary.map = "shuffled".into();
        report.baseline_comparison =
            Some(compare_groups(&ev_rs.aucs(), &ev_null.aucs())?.into());
        report.baseline = Some(BaselineSummary { seed, summary });
    }

    if let Some(ext_map_path) = &ctx.cfg.paths.external_map {
        if ext_map_path.is_file() && phi_path(ctx).is_file() {
            let sym = symmetrize_max(&load_phi(ctx, &fields)?);
            let (ext, _) = load_external_map(open(ext_map_path)?, &fields)?;
            let corr = correlate_maps(&sym, &ext)?;
            let mut buf = Vec::new();
            write_scatter_csv(&corr.pairs, &mut buf)?;
            write_atomic(&ctx.out_dir.join("scatter_maps.csv"), &buf)?;
            report.map_correlation = Some((&corr).into());
        }
    }

    let stem = format!("evaluation_{level}_{}", spec.kind);
    write_json(&ctx.out_dir.join(format!("{stem}.json")), &report)?;
    write_atomic(
        &ctx.out_dir.join(format!("{stem}.txt")),
        respace_core::report::render_table(&report).as_bytes(),
    )
}

pub fn cmd_export_backbone(ctx: &Ctx, entity: Option<&str>, tau: Option<f64>) -> CmdResult {
    let (classification, fields) = load_classification(ctx)?;
    let phi = load_phi(ctx, &fields)?;
    let sym = symmetrize_max(&phi);
    let (records, _, _) = load_corpus(ctx)?;
    let x = presence_over(
        &records,
        &classification,
        &AffiliationMap::default(),
        AggregationLevel::Author,
        ctx.cfg.train_window()?,
        &fields,
    )?;
    let totals = x.field_totals();
    let sizes: BTreeMap<String, f64> = (0..fields.len())
        .map(|f| (fields.id(f).to_string(), totals[f]))
        .collect();
    let tau = tau.unwrap_or(ctx.cfg.params.backbone_tau);
    let mut graph = build_backbone(&sym, tau, &sizes, Some(&classification))?;
    if let Some(entity) = entity {
        let level = ctx.cfg.level()?;
        let (_, states_t0) = read_states_csv(
            open(&states_path(ctx, level, "t0"))?,
            &fields,
            level,
            ctx.cfg.state_window()?,
        )?;
        graph = overlay_states(graph, &states_t0, entity)?;
    }
    for (format, name) in [
        (ExportFormat::Graphml, "backbone.graphml"),
        (ExportFormat::Dot, "backbone.dot"),
        (ExportFormat::Json, "backbone.json"),
    ] {
        write_atomic(
            &ctx.out_dir.join(name),
            export_graph(&graph, format).as_bytes(),
        )?;
    }
    Ok(())
}
