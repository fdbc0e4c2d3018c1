//! Declarative run configuration (TOML). Relative paths resolve against the
//! config file's directory.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::Deserialize;

use crate::adversarial::{NounTags, DEFAULT_PAWS_TOP_K};
use crate::data::Factor;
use crate::factors::{LexDirection, LexOptions, DEFAULT_PAIR_CAP, DEFAULT_RETROFIT_ITERATIONS};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Lowercase tokens and vocabulary before LEX and MOR lookups.
    #[serde(default = "yes")]
    pub casefold: bool,
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub factors: FactorsConfig,
    pub regress: Option<RegressConfig>,
    pub adversarial: Option<AdversarialConfig>,
    pub ensemble: Option<EnsembleConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub pairs: PathBuf,
    #[serde(default = "en")]
    pub lang_x: String,
    #[serde(default = "en")]
    pub lang_y: String,
    pub parses_x: Option<PathBuf>,
    pub parses_y: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// `word<TAB>FEATS` files; when absent the parses' FEATS column is used.
    pub tagged_words_x: Option<PathBuf>,
    pub tagged_words_y: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorsConfig {
    #[serde(default = "default_active")]
    pub active: Vec<String>,
    #[serde(default)]
    pub lex_direction: LexDirection,
    #[serde(default)]
    pub brevity_penalty: bool,
    #[serde(default = "default_iterations")]
    pub retrofit_iterations: usize,
    #[serde(default = "default_cap")]
    pub lexicon_pair_cap: usize,
    /// MOR is switched off for cross-lingual data when fewer than this
    /// fraction of word pairs share a feature bundle.
    #[serde(default = "default_threshold")]
    pub morph_overlap_threshold: f64,
}

impl Default for FactorsConfig {
    fn default() -> Self {
        FactorsConfig {
            active: default_active(),
            lex_direction: LexDirection::default(),
            brevity_penalty: false,
            retrofit_iterations: default_iterations(),
            lexicon_pair_cap: default_cap(),
            morph_overlap_threshold: default_threshold(),
        }
    }
}

impl FactorsConfig {
    pub fn lex_options(&self) -> LexOptions {
        LexOptions { direction: self.lex_direction, brevity_penalty: self.brevity_penalty }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressConfig {
    pub metrics: IndexMap<String, MetricInput>,
    #[serde(default = "yes")]
    pub normalize: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricInput {
    pub scores: PathBuf,
    /// The same metric's scores on (source, translation) pairs; enables the CLB fit.
    pub parallel: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarialConfig {
    pub triples: Option<PathBuf>,
    pub freitag: Option<PathBuf>,
    pub paws: Option<PathBuf>,
    #[serde(default = "default_top_k")]
    pub paws_top_k: usize,
    #[serde(default = "default_noun_tags")]
    pub noun_tags: Vec<String>,
    /// Also evaluate the lexical-overlap score itself as a metric.
    #[serde(default = "yes")]
    pub builtin_lex: bool,
    #[serde(default)]
    pub metrics: IndexMap<String, PreferenceInput>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreferenceInput {
    pub ab: PathBuf,
    pub ac: PathBuf,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "yes")]
    pub normalize_first: bool,
    pub combos: Vec<Vec<String>>,
    pub datasets: Vec<EnsembleDataset>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleDataset {
    pub label: String,
    pub human: PathBuf,
    pub members: IndexMap<String, PathBuf>,
}

fn yes() -> bool {
    true
}
fn en() -> String {
    "en".into()
}
fn default_out() -> PathBuf {
    "out".into()
}
fn default_active() -> Vec<String> {
    ["SEM", "SYN", "LEX", "MOR"].map(String::from).to_vec()
}
fn default_iterations() -> usize {
    DEFAULT_RETROFIT_ITERATIONS
}
fn default_cap() -> usize {
    DEFAULT_PAIR_CAP
}
fn default_threshold() -> f64 {
    0.05
}
fn default_top_k() -> usize {
    DEFAULT_PAWS_TOP_K
}
fn default_noun_tags() -> Vec<String> {
    NounTags::default().0
}

impl RunConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, String> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.resolve(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let fix_opt = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix(&mut self.out);
        if let Some(d) = &mut self.data {
            fix(&mut d.pairs);
            fix_opt(&mut d.parses_x);
            fix_opt(&mut d.parses_y);
            fix_opt(&mut d.embeddings);
            fix_opt(&mut d.tagged_words_x);
            fix_opt(&mut d.tagged_words_y);
        }
        if let Some(r) = &mut self.regress {
            for m in r.metrics.values_mut() {
                fix(&mut m.scores);
                fix_opt(&mut m.parallel);
            }
        }
        if let Some(a) = &mut self.adversarial {
            fix_opt(&mut a.triples);
            fix_opt(&mut a.freitag);
            fix_opt(&mut a.paws);
            for m in a.metrics.values_mut() {
                fix(&mut m.ab);
                fix(&mut m.ac);
            }
        }
        if let Some(e) = &mut self.ensemble {
            for d in &mut e.datasets {
                fix(&mut d.human);
                for p in d.members.values_mut() {
                    fix(p);
                }
            }
        }
    }

    /// Parsed `factors.active`, in canonical order.
    pub fn active_factors(&self) -> Result<Vec<Factor>, String> {
        let mut out = Vec::new();
        for name in &self.factors.active {
            let f: Factor = name.parse().map_err(|e: crate::Error| e.to_string())?;
            if f == Factor::Clb {
                return Err("CLB is not a pair factor; configure `regress.metrics.<name>.parallel` instead".into());
            }
            if !out.contains(&f) {
                out.push(f);
            }
        }
        if out.is_empty() {
            return Err("factors.active is empty".into());
        }
        out.sort();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_resolution() {
        let cfg = RunConfig::from_toml("[data]\npairs = \"p.tsv\"\n", Path::new("/base")).unwrap();
        assert_eq!(cfg.data.unwrap().pairs, PathBuf::from("/base/p.tsv"));
        assert_eq!(cfg.out, PathBuf::from("/base/out"));
        assert!(cfg.casefold);
        assert_eq!(cfg.factors.retrofit_iterations, 10);
        assert_eq!(cfg.factors.lexicon_pair_cap, 100_000);
    }

    #[test]
    fn rejects_unknown_keys_and_clb() {
        assert!(RunConfig::from_toml("sed = 1\n", Path::new(".")).is_err());
        let cfg = RunConfig::from_toml("[factors]\nactive = [\"LEX\", \"CLB\"]\n", Path::new(".")).unwrap();
        assert!(cfg.active_factors().is_err());
        let cfg = RunConfig::from_toml("[factors]\nactive = [\"lex\", \"SEM\"]\n", Path::new(".")).unwrap();
        assert_eq!(cfg.active_factors().unwrap(), vec![Factor::Sem, Factor::Lex]);
    }
}
