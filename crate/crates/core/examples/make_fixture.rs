//! Regenerates the demo corpus under `fixtures/demo`.
//!
//! ```text
//! cargo run --example make_fixture [-- <dir>]
//! ```
//!
//! The corpus is a toy English grammar: every sentence is one clause
//! `DET (ADJ) NOUN VERB DET (ADJ) NOUN (PREP DET NOUN) (ADV)` with a fixed
//! dependency analysis. Hypotheses are degraded copies of references, and the
//! degradation level drives the human score. Metric scores are then planted as
//! known linear combinations of the computed factor scores, so regression
//! output can be checked against the generator's own coefficients.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use lingfactors::cli::{compute_factors, compute_fits, run_command, CliError, Command, RunConfig};
use lingfactors::data::{DependencyTree, Factor};
use lingfactors::par::Exec;
use lingfactors::regression::{table_row, z_normalize};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const SEED: u64 = 7;
const N_PAIRS: usize = 300;
const N_ANCHORS: usize = 40;
const N_ENSEMBLE: usize = 200;
const DIM: usize = 16;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Class {
    Det,
    Adj,
    NounSing,
    NounPlur,
    VerbPast,
    VerbPres,
    Prep,
    Adv,
}

struct Entry {
    form: &'static str,
    lemma: &'static str,
    class: Class,
    /// Used for paraphrased adversarial anchors.
    synonym: Option<&'static str>,
}

const fn e(form: &'static str, lemma: &'static str, class: Class, synonym: Option<&'static str>) -> Entry {
    Entry { form, lemma, class, synonym }
}

use Class::*;

const LEXICON: &[Entry] = &[
    e("the", "the", Det, None),
    e("a", "a", Det, None),
    e("this", "this", Det, None),
    e("every", "every", Det, None),
    e("old", "old", Adj, Some("ancient")),
    e("small", "small", Adj, Some("little")),
    e("green", "green", Adj, Some("verdant")),
    e("quiet", "quiet", Adj, Some("silent")),
    e("bright", "bright", Adj, Some("shiny")),
    e("cold", "cold", Adj, Some("chilly")),
    e("heavy", "heavy", Adj, Some("weighty")),
    e("narrow", "narrow", Adj, Some("slim")),
    e("cat", "cat", NounSing, Some("kitty")),
    e("dog", "dog", NounSing, Some("hound")),
    e("house", "house", NounSing, Some("home")),
    e("river", "river", NounSing, Some("stream")),
    e("teacher", "teacher", NounSing, Some("tutor")),
    e("garden", "garden", NounSing, Some("yard")),
    e("city", "city", NounSing, Some("town")),
    e("letter", "letter", NounSing, Some("note")),
    e("window", "window", NounSing, Some("pane")),
    e("child", "child", NounSing, Some("kid")),
    e("cats", "cat", NounPlur, Some("kitties")),
    e("dogs", "dog", NounPlur, Some("hounds")),
    e("houses", "house", NounPlur, Some("homes")),
    e("rivers", "river", NounPlur, Some("streams")),
    e("teachers", "teacher", NounPlur, Some("tutors")),
    e("gardens", "garden", NounPlur, Some("yards")),
    e("cities", "city", NounPlur, Some("towns")),
    e("letters", "letter", NounPlur, Some("notes")),
    e("windows", "window", NounPlur, Some("panes")),
    e("children", "child", NounPlur, Some("kids")),
    e("saw", "see", VerbPast, Some("noticed")),
    e("found", "find", VerbPast, Some("discovered")),
    e("built", "build", VerbPast, Some("constructed")),
    e("opened", "open", VerbPast, Some("unlocked")),
    e("wrote", "write", VerbPast, Some("composed")),
    e("painted", "paint", VerbPast, Some("decorated")),
    e("crossed", "cross", VerbPast, Some("traversed")),
    e("visited", "visit", VerbPast, Some("toured")),
    e("sees", "see", VerbPres, Some("notices")),
    e("finds", "find", VerbPres, Some("discovers")),
    e("builds", "build", VerbPres, Some("constructs")),
    e("opens", "open", VerbPres, Some("unlocks")),
    e("writes", "write", VerbPres, Some("composes")),
    e("paints", "paint", VerbPres, Some("decorates")),
    e("crosses", "cross", VerbPres, Some("traverses")),
    e("visits", "visit", VerbPres, Some("tours")),
    e("near", "near", Prep, None),
    e("behind", "behind", Prep, None),
    e("across", "across", Prep, None),
    e("slowly", "slowly", Adv, None),
    e("quickly", "quickly", Adv, None),
    e("yesterday", "yesterday", Adv, None),
    e("often", "often", Adv, None),
];

impl Class {
    fn upos(self) -> &'static str {
        match self {
            Det => "DET",
            Adj => "ADJ",
            NounSing | NounPlur => "NOUN",
            VerbPast | VerbPres => "VERB",
            Prep => "ADP",
            Adv => "ADV",
        }
    }

    fn xpos(self) -> &'static str {
        match self {
            Det => "DT",
            Adj => "JJ",
            NounSing => "NN",
            NounPlur => "NNS",
            VerbPast => "VBD",
            VerbPres => "VBZ",
            Prep => "IN",
            Adv => "RB",
        }
    }

    fn feats(self) -> &'static str {
        match self {
            Det => "PronType=Art",
            Adj => "Degree=Pos",
            NounSing => "Number=Sing",
            NounPlur => "Number=Plur",
            VerbPast => "Mood=Ind|Tense=Past|VerbForm=Fin",
            VerbPres => "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin",
            Prep | Adv => "_",
        }
    }
}

fn entry(form: &str) -> &'static Entry {
    LEXICON.iter().find(|e| e.form == form).unwrap_or_else(|| panic!("unknown form {form}"))
}

fn pick(class: Class, rng: &mut ChaCha8Rng) -> &'static str {
    let forms: Vec<&'static str> = LEXICON.iter().filter(|e| e.class == class).map(|e| e.form).collect();
    forms.choose(rng).expect("non-empty class")
}

fn noun_class(rng: &mut ChaCha8Rng) -> Class {
    if rng.random_bool(0.6) {
        NounSing
    } else {
        NounPlur
    }
}

#[derive(Clone, Debug)]
struct NounPhrase {
    det: &'static str,
    adj: Option<&'static str>,
    noun: &'static str,
}

#[derive(Clone, Debug)]
struct Clause {
    subj: NounPhrase,
    verb: &'static str,
    obj: NounPhrase,
    pp: Option<(&'static str, NounPhrase)>,
    adv: Option<&'static str>,
    adv_first: bool,
}

fn noun_phrase(rng: &mut ChaCha8Rng) -> NounPhrase {
    NounPhrase {
        det: pick(Det, rng),
        adj: rng.random_bool(0.5).then(|| pick(Adj, rng)),
        noun: pick(noun_class(rng), rng),
    }
}

fn clause(rng: &mut ChaCha8Rng) -> Clause {
    let subj = noun_phrase(rng);
    let mut obj = noun_phrase(rng);
    while entry(obj.noun).lemma == entry(subj.noun).lemma {
        obj.noun = pick(noun_class(rng), rng);
    }
    Clause {
        subj,
        verb: pick(if rng.random_bool(0.5) { VerbPast } else { VerbPres }, rng),
        obj,
        pp: rng.random_bool(0.4).then(|| (pick(Prep, rng), noun_phrase(rng))),
        adv: rng.random_bool(0.4).then(|| pick(Adv, rng)),
        adv_first: rng.random_bool(0.3),
    }
}

/// A hypothesis: each slot is replaced with probability `q`, optional parts
/// toggle with smaller probabilities.
fn degrade(c: &Clause, q: f64, rng: &mut ChaCha8Rng) -> Clause {
    let np = |p: &NounPhrase, rng: &mut ChaCha8Rng| -> NounPhrase {
        let mut p = p.clone();
        if rng.random_bool(q) {
            p.det = pick(Det, rng);
        }
        if rng.random_bool(q / 2.0) {
            p.adj = if p.adj.is_some() { None } else { Some(pick(Adj, rng)) };
        } else if p.adj.is_some() && rng.random_bool(q) {
            p.adj = Some(pick(Adj, rng));
        }
        if rng.random_bool(q) {
            p.noun = pick(entry(p.noun).class, rng);
        }
        p
    };
    let subj = np(&c.subj, rng);
    let obj = np(&c.obj, rng);
    let verb = if rng.random_bool(q) { pick(entry(c.verb).class, rng) } else { c.verb };
    let pp = if rng.random_bool(q / 3.0) {
        match &c.pp {
            Some(_) => None,
            None => Some((pick(Prep, rng), noun_phrase(rng))),
        }
    } else {
        c.pp.as_ref().map(|(prep, p)| (*prep, np(p, rng)))
    };
    let adv = if rng.random_bool(q / 3.0) {
        if c.adv.is_some() {
            None
        } else {
            Some(pick(Adv, rng))
        }
    } else {
        c.adv
    };
    Clause { subj, verb, obj, pp, adv, adv_first: c.adv_first ^ rng.random_bool(q / 4.0) }
}

fn paraphrase(c: &Clause, rng: &mut ChaCha8Rng) -> Clause {
    loop {
        let mut changed = false;
        let mut swap = |w: &'static str, rng: &mut ChaCha8Rng| -> &'static str {
            match entry(w).synonym {
                Some(s) if rng.random_bool(0.6) => {
                    changed = true;
                    s
                }
                _ => w,
            }
        };
        let mut np = |p: &NounPhrase, rng: &mut ChaCha8Rng| NounPhrase {
            det: p.det,
            adj: p.adj.map(|a| swap(a, rng)),
            noun: swap(p.noun, rng),
        };
        let out = Clause {
            subj: np(&c.subj, rng),
            verb: swap_verb(c.verb, rng),
            obj: np(&c.obj, rng),
            pp: c.pp.as_ref().map(|(prep, p)| (*prep, np(p, rng))),
            adv: c.adv,
            adv_first: c.adv_first,
        };
        let same = out.subj.noun == c.subj.noun && out.obj.noun == c.obj.noun && out.verb == c.verb;
        if changed || !same {
            return out;
        }
    }
}

fn swap_verb(v: &'static str, rng: &mut ChaCha8Rng) -> &'static str {
    match entry(v).synonym {
        Some(s) if rng.random_bool(0.6) => s,
        _ => v,
    }
}

/// Tokens with POS/feature columns and 1-based heads (0 = root).
struct Sentence {
    forms: Vec<String>,
    xpos: Vec<&'static str>,
    upos: Vec<&'static str>,
    feats: Vec<&'static str>,
    heads: Vec<usize>,
    deprels: Vec<&'static str>,
}

impl Sentence {
    fn tokens(&self) -> String {
        self.forms.join(" ")
    }

    fn tree(&self) -> DependencyTree {
        let parents = self.heads.iter().map(|&h| h.checked_sub(1)).collect();
        DependencyTree::from_parents(parents).expect("generated trees are valid")
    }
}

/// Class lookup that also covers synonym forms, which live outside `LEXICON`.
fn class_of(form: &str) -> Class {
    if let Some(e) = LEXICON.iter().find(|e| e.form == form) {
        return e.class;
    }
    LEXICON.iter().find(|e| e.synonym == Some(form)).map(|e| e.class).unwrap_or_else(|| panic!("unknown form {form}"))
}

fn linearize(c: &Clause, capitalize: bool) -> Sentence {
    let mut s = Sentence { forms: vec![], xpos: vec![], upos: vec![], feats: vec![], heads: vec![], deprels: vec![] };
    let push = |s: &mut Sentence, form: &'static str, rel: &'static str| -> usize {
        let class = class_of(form);
        s.forms.push(form.to_string());
        s.xpos.push(class.xpos());
        s.upos.push(class.upos());
        s.feats.push(class.feats());
        s.heads.push(0);
        s.deprels.push(rel);
        s.forms.len()
    };
    let np = |s: &mut Sentence, p: &NounPhrase, rel: &'static str| {
        let d = push(s, p.det, "det");
        let a = p.adj.map(|a| push(s, a, "amod"));
        let n = push(s, p.noun, rel);
        s.heads[d - 1] = n;
        if let Some(a) = a {
            s.heads[a - 1] = n;
        }
        n
    };
    let adv_first = c.adv.filter(|_| c.adv_first).map(|a| push(&mut s, a, "advmod"));
    let subj = np(&mut s, &c.subj, "nsubj");
    let verb = push(&mut s, c.verb, "root");
    let obj = np(&mut s, &c.obj, "obj");
    let pp = c.pp.as_ref().map(|(prep, p)| {
        let pr = push(&mut s, prep, "case");
        let n = np(&mut s, p, "obl");
        s.heads[pr - 1] = n;
        (*prep, n)
    });
    let adv_last = c.adv.filter(|_| !c.adv_first).map(|a| push(&mut s, a, "advmod"));
    s.heads[subj - 1] = verb;
    s.heads[obj - 1] = verb;
    if let Some((prep, n)) = pp {
        // "near" modifies the object noun, the other prepositions the verb.
        if prep == "near" {
            s.heads[n - 1] = obj;
            s.deprels[n - 1] = "nmod";
        } else {
            s.heads[n - 1] = verb;
        }
    }
    for a in adv_first.into_iter().chain(adv_last) {
        s.heads[a - 1] = verb;
    }
    if capitalize {
        let first = &mut s.forms[0];
        *first = first[..1].to_uppercase() + &first[1..];
    }
    s
}

fn write_conllu(sentences: &[(String, &Sentence)]) -> String {
    let mut out = String::new();
    for (id, s) in sentences {
        let _ = writeln!(out, "# sent_id = {id}");
        let _ = writeln!(out, "# text = {}", s.tokens());
        for i in 0..s.forms.len() {
            let lemma = LEXICON
                .iter()
                .find(|e| e.form == s.forms[i].to_lowercase())
                .map_or(s.forms[i].to_lowercase(), |e| e.lemma.to_string());
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t_\t_",
                i + 1,
                s.forms[i],
                lemma,
                s.upos[i],
                s.xpos[i],
                s.feats[i],
                s.heads[i],
                s.deprels[i]
            );
        }
        out.push('\n');
    }
    out
}

/// Lemma vectors plus a shared offset per inflection, so inflected forms of
/// one lemma are close and forms sharing a feature bundle move together.
fn embeddings(rng: &mut ChaCha8Rng) -> String {
    let normal = Normal::new(0.0, 1.0).expect("valid");
    let mut lemma_vecs: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut class_vecs: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let draw =
        |rng: &mut ChaCha8Rng, scale: f64| -> Vec<f64> { (0..DIM).map(|_| scale * normal.sample(rng)).collect() };
    let mut words: Vec<(String, &'static str, Class)> = Vec::new();
    for e in LEXICON {
        words.push((e.form.to_string(), e.lemma, e.class));
        if let Some(s) = e.synonym {
            words.push((s.to_string(), e.lemma, e.class));
        }
    }
    let mut out = format!("{} {DIM}\n", words.len());
    for (form, lemma, class) in &words {
        let l = lemma_vecs.entry(lemma).or_insert_with(|| draw(rng, 1.0)).clone();
        let c = class_vecs.entry(class.xpos()).or_insert_with(|| draw(rng, 0.4)).clone();
        let noise = draw(rng, 0.15);
        out.push_str(form);
        for k in 0..DIM {
            let _ = write!(out, " {:.5}", l[k] + c[k] + noise[k]);
        }
        out.push('\n');
    }
    out
}

fn score_file(rows: &[(String, f64)]) -> String {
    let mut out = String::from("id\tscore\n");
    for (id, v) in rows {
        let _ = writeln!(out, "{id}\t{v:.6}");
    }
    out
}

fn write(dir: &Path, rel: &str, body: &str) -> Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
}

const CONFIG: &str = r#"# Demo run over the synthetic corpus produced by `cargo run --example make_fixture`.
seed = 7
out = "out"

[data]
pairs = "pairs.tsv"
parses_x = "x.conllu"
parses_y = "y.conllu"
embeddings = "embeddings.vec"

[factors]
active = ["SEM", "SYN", "LEX", "MOR"]

[regress]
normalize = true

[regress.metrics.BERTScore]
scores = "metrics/BERTScore.tsv"

[regress.metrics.XMoverScore]
scores = "metrics/XMoverScore.tsv"
parallel = "metrics/XMoverScore_parallel.tsv"

[regress.metrics.NoiseMetric]
scores = "metrics/NoiseMetric.tsv"

[adversarial]
freitag = "adversarial/freitag.tsv"

[adversarial.metrics.Oracle]
ab = "adversarial/oracle_ab.tsv"
ac = "adversarial/oracle_ac.tsv"

[ensemble]
normalize_first = true
combos = [
    ["BERTScore", "mSBERT"],
    ["BERTScore", "BERTScore"],
    ["BERTScore", "LaBSE"],
    ["BERTScore", "mSBERT", "LaBSE"],
]

[[ensemble.datasets]]
label = "de-en"
human = "ensemble/de-en/human.tsv"
members = { BERTScore = "ensemble/de-en/BERTScore.tsv", mSBERT = "ensemble/de-en/mSBERT.tsv", LaBSE = "ensemble/de-en/LaBSE.tsv" }

[[ensemble.datasets]]
label = "zh-en"
human = "ensemble/zh-en/human.tsv"
members = { BERTScore = "ensemble/zh-en/BERTScore.tsv", mSBERT = "ensemble/zh-en/mSBERT.tsv", LaBSE = "ensemble/zh-en/LaBSE.tsv" }
"#;

const PAWS_CONFIG: &str = r#"# PAWS-mode adversarial run over the same corpus.
seed = 7
out = "out_paws"

[adversarial]
paws = "adversarial/paws.tsv"
paws_top_k = 25
"#;

fn main() -> Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo"));
    let rng = |stream: u64| ChaCha8Rng::seed_from_u64(SEED ^ (stream << 32));
    let normal = Normal::new(0.0, 1.0).expect("valid");

    // Pairs and parses.
    let mut r = rng(1);
    let mut pairs = String::from("id\tx\ty\tsem\n");
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..N_PAIRS {
        let id = format!("p{:04}", i + 1);
        let c = clause(&mut r);
        let q: f64 = r.random_range(0.0..0.85);
        let h = degrade(&c, q, &mut r);
        let x = linearize(&c, true);
        let y = linearize(&h, true);
        let sem = (100.0 * (1.0 - q) + 8.0 * normal.sample(&mut r)).clamp(0.0, 100.0);
        let _ = writeln!(pairs, "{id}\t{}\t{}\t{sem:.2}", x.tokens(), y.tokens());
        debug_assert_eq!(x.tree().len(), x.forms.len());
        xs.push((id.clone(), x));
        ys.push((id, y));
    }
    write(&dir, "pairs.tsv", &pairs)?;
    write(&dir, "x.conllu", &write_conllu(&xs.iter().map(|(i, s)| (i.clone(), s)).collect::<Vec<_>>()))?;
    write(&dir, "y.conllu", &write_conllu(&ys.iter().map(|(i, s)| (i.clone(), s)).collect::<Vec<_>>()))?;
    write(&dir, "embeddings.vec", &embeddings(&mut rng(2)))?;
    write(&dir, "demo.toml", CONFIG)?;
    write(&dir, "paws.toml", PAWS_CONFIG)?;

    // Factor scores through the same code path as the CLI.
    let cfg_path = dir.join("demo.toml");
    let cfg = RunConfig::load(&cfg_path).map_err(anyhow::Error::msg)?;
    let (run, _) = compute_factors(&cfg, Exec::Sequential).map_err(|e| anyhow::anyhow!("{e}"))?;
    let ids: Vec<String> = run.scores[&Factor::Sem].keys().cloned().collect();
    ensure!(run.failures.is_empty(), "fixture pairs must all score: {:?}", run.failures);
    let z = |f: Factor| z_normalize(&run.scores[&f].values().copied().collect::<Vec<_>>());
    let (zsem, zsyn, zlex) = (z(Factor::Sem)?, z(Factor::Syn)?, z(Factor::Lex)?);

    let mut r = rng(3);
    let mut bert = Vec::new();
    let mut xmover = Vec::new();
    let mut parallel = Vec::new();
    let mut noise = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let v = 0.5 * zlex[i] + 0.3 * zsem[i] + 0.3 * normal.sample(&mut r);
        bert.push((id.clone(), 0.9 + 0.03 * v));
        let clb = normal.sample(&mut r);
        parallel.push((id.clone(), 0.5 + 0.1 * clb));
        let v = 0.3 * zlex[i] + 0.2 * zsem[i] + 0.1 * zsyn[i] + 0.4 * clb + 0.3 * normal.sample(&mut r);
        xmover.push((id.clone(), 0.6 + 0.05 * v));
        noise.push((id.clone(), normal.sample(&mut r)));
    }
    write(&dir, "metrics/BERTScore.tsv", &score_file(&bert))?;
    write(&dir, "metrics/XMoverScore.tsv", &score_file(&xmover))?;
    write(&dir, "metrics/XMoverScore_parallel.tsv", &score_file(&parallel))?;
    write(&dir, "metrics/NoiseMetric.tsv", &score_file(&noise))?;

    // Adversarial anchors: B paraphrases A with synonyms, C is left to the pipeline.
    let mut r = rng(4);
    let mut freitag = String::from("id\tA\tB\tA_pos\n");
    let mut paws = String::from("id\tA\tcandidate\tlabel\n");
    let mut oracle_ab = Vec::new();
    let mut oracle_ac = Vec::new();
    for i in 0..N_ANCHORS {
        let id = format!("adv{:03}", i + 1);
        let c = clause(&mut r);
        let a = linearize(&c, false);
        let b = linearize(&paraphrase(&c, &mut r), false);
        let _ = writeln!(freitag, "{id}\t{}\t{}\t{}", a.tokens(), b.tokens(), a.xpos.join(" "));
        oracle_ab.push((id.clone(), 1.0));
        oracle_ac.push((id.clone(), 0.0));

        let mut swapped = c.clone();
        std::mem::swap(&mut swapped.subj.noun, &mut swapped.obj.noun);
        let _ = writeln!(paws, "{id}\t{}\t{}\t1", a.tokens(), b.tokens());
        let _ = writeln!(paws, "{id}\t{}\t{}\t0", a.tokens(), linearize(&swapped, false).tokens());
    }
    write(&dir, "adversarial/freitag.tsv", &freitag)?;
    write(&dir, "adversarial/paws.tsv", &paws)?;
    write(&dir, "adversarial/oracle_ab.tsv", &score_file(&oracle_ab))?;
    write(&dir, "adversarial/oracle_ac.tsv", &score_file(&oracle_ac))?;

    // Ensemble members each carry one independent half of the human signal.
    for (label, stream) in [("de-en", 5), ("zh-en", 6)] {
        let mut r = rng(stream);
        let mut cols: BTreeMap<&str, Vec<(String, f64)>> = BTreeMap::new();
        for i in 0..N_ENSEMBLE {
            let id = format!("{label}-{:04}", i + 1);
            let f1 = normal.sample(&mut r);
            let f2 = normal.sample(&mut r);
            let mut push = |k: &'static str, v: f64| cols.entry(k).or_default().push((id.clone(), v));
            push("human", 50.0 + 10.0 * (f1 + f2 + 0.2 * normal.sample(&mut r)));
            push("BERTScore", 0.88 + 0.02 * (f1 + 0.3 * normal.sample(&mut r)));
            push("mSBERT", 0.7 + 0.1 * (f2 + 0.3 * normal.sample(&mut r)));
            push("LaBSE", 0.8 + 0.05 * (0.7 * f1 + 0.7 * f2 + normal.sample(&mut r)));
        }
        for (name, rows) in &cols {
            write(&dir, &format!("ensemble/{label}/{name}.tsv"), &score_file(rows))?;
        }
    }

    // The fixture is only useful if the planted structure survives the pipeline.
    let mut check = cfg.clone();
    check.out = std::env::temp_dir().join(format!("lingfactors-fixture-{}", std::process::id()));
    run_command(&check, Command::Factors, Exec::Sequential)
        .and_then(|o| o.write_to(&check.out).map_err(CliError::Runtime))
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let fits = compute_fits(&check).map_err(|e| anyhow::anyhow!("{e}"));
    std::fs::remove_dir_all(&check.out).ok();
    let (fits, _) = fits?;
    for fit in &fits {
        println!("{}", table_row(fit));
    }
    let bert = &fits[0];
    ensure!(bert.coefficients[&Factor::Lex].value > bert.coefficients[&Factor::Sem].value && bert.r_squared > 0.8);
    ensure!(fits[2].coefficients.values().all(|c| c.p_value >= 0.05), "noise metric has a significant factor");
    println!("wrote fixture to {}", dir.display());
    Ok(())
}
