//! The four subcommands. Each one validates its slice of the config, computes
//! every report in memory, and only then writes files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::config::{DataConfig, RunConfig};
use super::CliError;
use crate::adversarial::{
    build_freitag_triples, build_paws_triples, evaluate_preferences, lex_metric_tables, read_freitag, read_paws,
    read_triples, write_preferences_tsv, write_triples, AdversarialTriple, NounTags, PreferenceReport,
};
use crate::data::{
    join_factors, load_embeddings, load_pair_dataset, load_score_table, parse_conllu, DependencyTree, Factor,
    PairOptions, ScoreMap, SentencePair,
};
use crate::ensemble::{evaluate_ensembles, render_ensemble_table, LabelledReports};
use crate::factors::{
    build_morph_lexicon, load_tagged_words, morph_overlap, read_factor_scores, retrofit_embeddings, score_pairs,
    tagged_words_from_trees, write_factor_scores, FactorInputs, FactorRun, ScoringOptions,
};
use crate::par::Exec;
use crate::regression::{fit_ols, render_table, FitReport, RegressionFit};

/// Files produced by a command, relative to the output directory.
#[derive(Default)]
pub struct Outputs(Vec<(PathBuf, String)>);

impl Outputs {
    fn add(&mut self, rel: impl Into<PathBuf>, body: impl Into<String>) {
        self.0.push((rel.into(), body.into()));
    }

    pub fn files(&self) -> impl Iterator<Item = (&Path, &str)> {
        self.0.iter().map(|(p, b)| (p.as_path(), b.as_str()))
    }

    pub fn write_to(&self, out: &Path) -> Result<()> {
        for (rel, body) in &self.0 {
            write_file(&out.join(rel), body)?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Metric names become file names.
fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

struct Problems(Vec<String>);

impl Problems {
    fn new() -> Self {
        Problems(Vec::new())
    }

    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    fn need_file(&mut self, key: &str, path: &Path) {
        if !path.is_file() {
            self.push(format!("{key}: input file not found: {}", path.display()));
        }
    }

    fn need_opt(&mut self, key: &str, path: &Option<PathBuf>) {
        if let Some(p) = path {
            self.need_file(key, p);
        }
    }

    fn finish(self) -> Result<(), CliError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(self.0.join("\n")))
        }
    }
}

// ---------------------------------------------------------------------------
// factors

/// Validated factor-stage inputs.
struct FactorPlan<'a> {
    data: &'a DataConfig,
    active: Vec<Factor>,
}

fn plan_factors(cfg: &RunConfig) -> Result<FactorPlan<'_>, CliError> {
    let mut p = Problems::new();
    let Some(data) = &cfg.data else {
        return Err(CliError::Validation("missing [data] section".into()));
    };
    let active = cfg.active_factors().map_err(CliError::Validation)?;
    p.need_file("data.pairs", &data.pairs);
    for (key, path) in [
        ("data.parses_x", &data.parses_x),
        ("data.parses_y", &data.parses_y),
        ("data.embeddings", &data.embeddings),
        ("data.tagged_words_x", &data.tagged_words_x),
        ("data.tagged_words_y", &data.tagged_words_y),
    ] {
        p.need_opt(key, path);
    }
    if active.contains(&Factor::Syn) && (data.parses_x.is_none() || data.parses_y.is_none()) {
        p.push("SYN is active but data.parses_x / data.parses_y are not both set");
    }
    if active.contains(&Factor::Mor) {
        if data.embeddings.is_none() {
            p.push("MOR is active but data.embeddings is not set");
        }
        if data.tagged_words_x.is_none() && data.parses_x.is_none() {
            p.push("MOR is active but neither data.tagged_words_x nor data.parses_x is set");
        }
        if data.tagged_words_y.is_none() && data.parses_y.is_none() {
            p.push("MOR is active but neither data.tagged_words_y nor data.parses_y is set");
        }
    }
    let f = &cfg.factors;
    if !(0.0..=1.0).contains(&f.morph_overlap_threshold) {
        p.push(format!("factors.morph_overlap_threshold must lie in [0, 1], got {}", f.morph_overlap_threshold));
    }
    if f.lexicon_pair_cap == 0 {
        p.push("factors.lexicon_pair_cap must be positive");
    }
    p.finish()?;
    Ok(FactorPlan { data, active })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FactorsSummary {
    pub pairs: usize,
    pub requested: Vec<Factor>,
    pub active: Vec<Factor>,
    pub deactivated: BTreeMap<Factor, String>,
    pub casefold: bool,
    pub morph_overlap: Option<f64>,
    pub lexicon_pairs: Option<usize>,
    pub embedding_duplicates: Option<usize>,
    pub scored: BTreeMap<Factor, usize>,
    pub failures: BTreeMap<Factor, Vec<Failure>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    pub error: String,
}

fn load_pairs(data: &DataConfig) -> Result<Vec<SentencePair>> {
    let opts = PairOptions { lang_x: data.lang_x.clone(), lang_y: data.lang_y.clone() };
    Ok(load_pair_dataset(&data.pairs, &opts)?)
}

fn load_trees(path: &Option<PathBuf>) -> Result<Option<Vec<DependencyTree>>> {
    path.as_ref().map(parse_conllu).transpose().map_err(Into::into)
}

fn tagged_side(
    file: &Option<PathBuf>,
    trees: &Option<Vec<DependencyTree>>,
    casefold: bool,
) -> Result<Vec<(String, String)>> {
    let words = match (file, trees) {
        (Some(f), _) => load_tagged_words(f)?,
        (None, Some(t)) => tagged_words_from_trees(t),
        (None, None) => Vec::new(),
    };
    Ok(if casefold { words.into_iter().map(|(w, f)| (w.to_lowercase(), f)).collect() } else { words })
}

/// Scores every active factor. Shared by the `factors` command and fixture tooling.
pub fn compute_factors(cfg: &RunConfig, exec: Exec) -> Result<(FactorRun, FactorsSummary), CliError> {
    let plan = plan_factors(cfg)?;
    let data = plan.data;
    let pairs = load_pairs(data).map_err(CliError::Runtime)?;
    let runtime = |e: anyhow::Error| CliError::Runtime(e);
    let trees_x = load_trees(&data.parses_x).map_err(runtime)?;
    let trees_y = load_trees(&data.parses_y).map_err(runtime)?;

    let mut active: BTreeSet<Factor> = plan.active.iter().copied().collect();
    let mut summary = FactorsSummary {
        pairs: pairs.len(),
        requested: plan.active.clone(),
        active: Vec::new(),
        deactivated: BTreeMap::new(),
        casefold: cfg.casefold,
        morph_overlap: None,
        lexicon_pairs: None,
        embedding_duplicates: None,
        scored: BTreeMap::new(),
        failures: BTreeMap::new(),
    };

    let mut embeddings = None;
    if active.contains(&Factor::Mor) {
        let tx = tagged_side(&data.tagged_words_x, &trees_x, cfg.casefold).map_err(runtime)?;
        let ty = tagged_side(&data.tagged_words_y, &trees_y, cfg.casefold).map_err(runtime)?;
        let mut keep = true;
        if data.lang_x != data.lang_y {
            let overlap = morph_overlap(&tx, &ty);
            summary.morph_overlap = Some(overlap);
            if overlap < cfg.factors.morph_overlap_threshold {
                let reason = format!(
                    "morphological overlap between {} and {} is {:.4}, below the threshold {}",
                    data.lang_x, data.lang_y, overlap, cfg.factors.morph_overlap_threshold
                );
                warn!("MOR deactivated: {reason}");
                summary.deactivated.insert(Factor::Mor, reason);
                active.remove(&Factor::Mor);
                keep = false;
            }
        }
        if keep {
            let path = data.embeddings.as_ref().expect("validated");
            let base = load_embeddings(path).map_err(|e| runtime(e.into()))?;
            summary.embedding_duplicates = Some(base.duplicates_skipped());
            if base.duplicates_skipped() > 0 {
                warn!("{}: {} duplicate words skipped", path.display(), base.duplicates_skipped());
            }
            let base = if cfg.casefold { base.casefolded() } else { base };
            let mut tagged = tx;
            tagged.extend(ty);
            let lexicon = build_morph_lexicon(&tagged, cfg.factors.lexicon_pair_cap, cfg.seed).restrict_to(&base);
            info!("morphological lexicon: {} word pairs", lexicon.len());
            summary.lexicon_pairs = Some(lexicon.len());
            embeddings = Some(retrofit_embeddings(&base, &lexicon, cfg.factors.retrofit_iterations));
        }
    }

    let inputs = FactorInputs {
        pairs: &pairs,
        trees_x: trees_x.as_deref(),
        trees_y: trees_y.as_deref(),
        embeddings: embeddings.as_ref(),
    };
    let opts = ScoringOptions { active: active.clone(), lex: cfg.factors.lex_options(), casefold: cfg.casefold };
    let run = score_pairs(&inputs, &opts, exec).map_err(|e| runtime(e.into()))?;
    summary.active = active.into_iter().collect();
    for (f, values) in &run.scores {
        summary.scored.insert(*f, values.len());
    }
    for (f, fails) in &run.failures {
        warn!("{f}: {} pairs could not be scored", fails.len());
        summary
            .failures
            .insert(*f, fails.iter().map(|(id, error)| Failure { id: id.clone(), error: error.clone() }).collect());
    }
    Ok((run, summary))
}

pub fn factors(cfg: &RunConfig, exec: Exec) -> Result<Outputs, CliError> {
    let (run, summary) = compute_factors(cfg, exec)?;
    let mut out = Outputs::default();
    for (f, values) in &run.scores {
        out.add(format!("factors/{f}.tsv"), write_factor_scores(*f, values));
    }
    out.add("factors.json", to_json(&summary).map_err(CliError::Runtime)?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// regress

#[derive(Debug, Serialize)]
struct RegressReport {
    normalized: bool,
    factors: Vec<Factor>,
    fits: Vec<FitReport>,
    clb_fits: Vec<FitReport>,
}

fn factor_summary_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("factors.json")
}

/// Fits every configured metric. Returns the plain fits and, for metrics with
/// parallel scores, the CLB-augmented fits.
pub fn compute_fits(cfg: &RunConfig) -> Result<(Vec<RegressionFit>, Vec<RegressionFit>), CliError> {
    let mut p = Problems::new();
    let Some(reg) = &cfg.regress else {
        return Err(CliError::Validation("missing [regress] section".into()));
    };
    let Some(data) = &cfg.data else {
        return Err(CliError::Validation("missing [data] section".into()));
    };
    p.need_file("data.pairs", &data.pairs);
    if reg.metrics.is_empty() {
        p.push("regress.metrics is empty");
    }
    for (name, m) in &reg.metrics {
        p.need_file(&format!("regress.metrics.{name}.scores"), &m.scores);
        p.need_opt(&format!("regress.metrics.{name}.parallel"), &m.parallel);
    }
    let summary_path = factor_summary_path(cfg);
    if !summary_path.is_file() {
        p.push(format!("factor scores not found at {}; run `factors` first", summary_path.display()));
    }
    p.finish()?;

    let load = || -> Result<(Vec<SentencePair>, BTreeMap<Factor, ScoreMap>)> {
        let text = std::fs::read_to_string(&summary_path).with_context(|| summary_path.display().to_string())?;
        let summary: FactorsSummary =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", summary_path.display()))?;
        let mut maps = BTreeMap::new();
        for f in &summary.active {
            let path = cfg.out.join(format!("factors/{f}.tsv"));
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let (_, values) = read_factor_scores(&text, &path)?;
            maps.insert(*f, values.into_iter().collect::<ScoreMap>());
        }
        Ok((load_pairs(data)?, maps))
    };
    let (pairs, maps) = load().map_err(CliError::Runtime)?;

    let fit = |maps: &BTreeMap<Factor, ScoreMap>, name: &str, path: &Path| -> Result<RegressionFit> {
        let target = load_score_table(path, name)?;
        let mut table = join_factors(&pairs, maps, &target).with_context(|| format!("joining factors with {name}"))?;
        if !table.dropped.is_empty() {
            warn!("{name}: {} rows dropped for missing factor values", table.dropped.len());
        }
        if reg.normalize {
            table = table.normalized().with_context(|| format!("normalizing {name}"))?;
        }
        fit_ols(&table).with_context(|| format!("fitting {name}"))
    };

    let mut fits = Vec::new();
    let mut clb_fits = Vec::new();
    for (name, m) in &reg.metrics {
        fits.push(fit(&maps, name, &m.scores).map_err(CliError::Runtime)?);
        if let Some(parallel) = &m.parallel {
            let clb = load_score_table(parallel, name).map_err(|e| CliError::Runtime(e.into()))?;
            let mut with_clb = maps.clone();
            with_clb.insert(Factor::Clb, clb.to_map());
            clb_fits.push(fit(&with_clb, name, &m.scores).map_err(CliError::Runtime)?);
        }
    }
    Ok((fits, clb_fits))
}

pub fn regress(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let (fits, clb_fits) = compute_fits(cfg)?;
    let reg = cfg.regress.as_ref().expect("validated");
    let mut out = Outputs::default();
    let runtime = |e: crate::Error| CliError::Runtime(e.into());
    out.add("regress.tsv", render_table(&fits).map_err(runtime)?);
    if !clb_fits.is_empty() {
        out.add("regress_clb.tsv", render_table(&clb_fits).map_err(runtime)?);
    }
    let report = RegressReport {
        normalized: reg.normalize,
        factors: fits.first().map(RegressionFit::factors).unwrap_or_default(),
        fits: fits.iter().map(RegressionFit::report).collect(),
        clb_fits: clb_fits.iter().map(RegressionFit::report).collect(),
    };
    out.add("regress.json", to_json(&report).map_err(CliError::Runtime)?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// adversarial

#[derive(Debug, Serialize)]
struct AdversarialReport {
    source: &'static str,
    triples: usize,
    skipped: Vec<String>,
    unchanged: Vec<String>,
    reports: Vec<PreferenceReport>,
}

pub fn adversarial(cfg: &RunConfig, exec: Exec) -> Result<Outputs, CliError> {
    let mut p = Problems::new();
    let Some(adv) = &cfg.adversarial else {
        return Err(CliError::Validation("missing [adversarial] section".into()));
    };
    let sources: Vec<(&'static str, &PathBuf)> =
        [("triples", &adv.triples), ("freitag", &adv.freitag), ("paws", &adv.paws)]
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
            .collect();
    if sources.len() != 1 {
        p.push("exactly one of adversarial.triples, adversarial.freitag, adversarial.paws must be set");
    }
    for (k, path) in &sources {
        p.need_file(&format!("adversarial.{k}"), path);
    }
    for (name, m) in &adv.metrics {
        p.need_file(&format!("adversarial.metrics.{name}.ab"), &m.ab);
        p.need_file(&format!("adversarial.metrics.{name}.ac"), &m.ac);
    }
    if !adv.builtin_lex && adv.metrics.is_empty() {
        p.push("adversarial: no metrics to evaluate (builtin_lex = false and no adversarial.metrics)");
    }
    if adv.paws_top_k == 0 {
        p.push("adversarial.paws_top_k must be positive");
    }
    p.finish()?;
    let (source, path) = sources[0];

    let mut out = Outputs::default();
    let build = || -> Result<(Vec<AdversarialTriple>, Vec<String>, Vec<String>)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(match source {
            "triples" => (read_triples(&text, path)?, vec![], vec![]),
            "freitag" => {
                let anchors = read_freitag(&text, path)?;
                let b = build_freitag_triples(&anchors, cfg.seed, &NounTags(adv.noun_tags.clone()), exec)?;
                (b.triples, b.skipped, b.unchanged)
            }
            _ => {
                let anchors = read_paws(&text, path)?;
                let b = build_paws_triples(&anchors, adv.paws_top_k, exec)?;
                (b.triples, b.skipped, b.unchanged)
            }
        })
    };
    let (triples, skipped, unchanged) = build().map_err(CliError::Runtime)?;
    if source != "triples" {
        out.add("adversarial/triples.tsv", write_triples(&triples));
    }

    let evaluate = || -> Result<Vec<PreferenceReport>> {
        let mut reports = Vec::new();
        if adv.builtin_lex {
            let (ab, ac) = lex_metric_tables(&triples);
            reports.push(evaluate_preferences(&triples, &ab, &ac)?);
        }
        for (name, m) in &adv.metrics {
            let ab = load_score_table(&m.ab, name)?;
            let ac = load_score_table(&m.ac, name)?;
            reports.push(evaluate_preferences(&triples, &ab, &ac).with_context(|| format!("metric {name}"))?);
        }
        Ok(reports)
    };
    let reports = evaluate().map_err(CliError::Runtime)?;

    let mut summary = String::from("metric\tn\tB_preferred\tC_preferred\tties\tmean_gap\n");
    for r in &reports {
        let _ = writeln!(
            summary,
            "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.6}",
            r.metric, r.n, r.b_preferred, r.c_preferred, r.ties, r.mean_gap
        );
        out.add(format!("adversarial/{}.tsv", file_stem(&r.metric)), write_preferences_tsv(r));
    }
    out.add("adversarial/summary.tsv", summary);
    let report = AdversarialReport { source, triples: triples.len(), skipped, unchanged, reports };
    out.add("adversarial/preferences.json", to_json(&report).map_err(CliError::Runtime)?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// ensemble

#[derive(Debug, Serialize)]
struct EnsembleOutput {
    normalize_first: bool,
    datasets: Vec<LabelledReports>,
}

pub fn ensemble(cfg: &RunConfig, exec: Exec) -> Result<Outputs, CliError> {
    let mut p = Problems::new();
    let Some(ens) = &cfg.ensemble else {
        return Err(CliError::Validation("missing [ensemble] section".into()));
    };
    if ens.datasets.is_empty() {
        p.push("ensemble.datasets is empty");
    }
    if ens.combos.is_empty() {
        p.push("ensemble.combos is empty");
    }
    let mut labels = BTreeSet::new();
    for d in &ens.datasets {
        if !labels.insert(d.label.as_str()) {
            p.push(format!("duplicate ensemble dataset label `{}`", d.label));
        }
        p.need_file(&format!("ensemble.datasets.{}.human", d.label), &d.human);
        for (name, path) in &d.members {
            p.need_file(&format!("ensemble.datasets.{}.members.{name}", d.label), path);
        }
        for combo in &ens.combos {
            for m in combo {
                if !d.members.contains_key(m) {
                    p.push(format!("combo [{}]: unknown member `{m}` in dataset `{}`", combo.join(", "), d.label));
                }
            }
        }
    }
    for combo in &ens.combos {
        if combo.len() < 2 {
            p.push(format!("combo [{}] needs at least two members", combo.join(", ")));
        }
    }
    p.finish()?;

    let run = || -> Result<Vec<LabelledReports>> {
        let mut sets = Vec::new();
        for d in &ens.datasets {
            let human = load_score_table(&d.human, "human")?;
            let members =
                d.members.iter().map(|(name, path)| load_score_table(path, name)).collect::<crate::Result<Vec<_>>>()?;
            let reports = evaluate_ensembles(&members, &human, &ens.combos, ens.normalize_first, exec)
                .with_context(|| format!("dataset {}", d.label))?;
            sets.push(LabelledReports { label: d.label.clone(), reports });
        }
        Ok(sets)
    };
    let sets = run().map_err(CliError::Runtime)?;
    let mut out = Outputs::default();
    out.add("ensemble.tsv", render_ensemble_table(&sets));
    let report = EnsembleOutput { normalize_first: ens.normalize_first, datasets: sets };
    out.add("ensemble.json", to_json(&report).map_err(CliError::Runtime)?);
    Ok(out)
}
