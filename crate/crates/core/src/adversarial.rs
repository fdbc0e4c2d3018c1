//! Adversarial (A, B, C) triples: B paraphrases A with little lexical
//! overlap, C overlaps heavily without being a paraphrase. A robust metric
//! scores (A, B) above (A, C).

use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{content_lines, ScoreTable};
use crate::error::{Error, Result};
use crate::factors::lex_score;
use crate::par::{stable_hash, Exec};

/// Scores closer than this count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-9;

const MAX_RESAMPLES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarialTriple {
    pub id: String,
    pub a_tokens: Vec<String>,
    pub b_tokens: Vec<String>,
    pub c_tokens: Vec<String>,
    /// Clipped unigram precision of B against A.
    pub lex_ab: f64,
    /// Clipped unigram precision of C against A.
    pub lex_ac: f64,
}

impl AdversarialTriple {
    pub fn new(id: impl Into<String>, a: Vec<String>, b: Vec<String>, c: Vec<String>) -> Result<Self> {
        let id = id.into();
        if a.is_empty() || b.is_empty() || c.is_empty() {
            return Err(Error::Invalid(format!("triple `{id}` has an empty sentence")));
        }
        let lex_ab = lex_score(&b, &a)?;
        let lex_ac = lex_score(&c, &a)?;
        Ok(AdversarialTriple { id, a_tokens: a, b_tokens: b, c_tokens: c, lex_ab, lex_ac })
    }
}

/// POS tags that mark nouns. A pattern ending in `*` matches by prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NounTags(pub Vec<String>);

impl Default for NounTags {
    fn default() -> Self {
        NounTags(vec!["NN*".into(), "NOUN".into(), "PROPN".into()])
    }
}

impl NounTags {
    pub fn is_noun(&self, tag: &str) -> bool {
        self.0.iter().any(|p| match p.strip_suffix('*') {
            Some(prefix) => tag.starts_with(prefix),
            None => tag == p,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Permuted {
    pub tokens: Vec<String>,
    /// Every draw left the sentence unchanged and the last one was kept.
    pub unchanged: bool,
}

/// Shuffles the noun tokens among the noun positions; everything else stays put.
/// Draws that reproduce the input are redrawn up to ten times.
pub fn permute_nouns(tokens: &[String], tags: &[String], seed: u64, nouns: &NounTags) -> Result<Permuted> {
    if tokens.len() != tags.len() {
        return Err(Error::LengthMismatch { left: tokens.len(), right: tags.len() });
    }
    let slots: Vec<usize> = tags.iter().enumerate().filter(|(_, t)| nouns.is_noun(t)).map(|(i, _)| i).collect();
    if slots.len() < 2 {
        return Ok(Permuted { tokens: tokens.to_vec(), unchanged: false });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = tokens.to_vec();
    for _ in 0..=MAX_RESAMPLES {
        let mut picked: Vec<&String> = slots.iter().map(|&i| &tokens[i]).collect();
        picked.shuffle(&mut rng);
        for (&slot, w) in slots.iter().zip(picked) {
            out[slot] = w.clone();
        }
        if out != tokens {
            return Ok(Permuted { tokens: out, unchanged: false });
        }
    }
    Ok(Permuted { tokens: out, unchanged: true })
}

/// A source sentence, its human paraphrase, and POS tags for the source.
#[derive(Clone, Debug, PartialEq)]
pub struct FreitagAnchor {
    pub id: String,
    pub a_tokens: Vec<String>,
    pub b_tokens: Vec<String>,
    pub a_tags: Vec<String>,
}

/// A sentence with labeled candidates (`true` = paraphrase).
#[derive(Clone, Debug, PartialEq)]
pub struct PawsAnchor {
    pub id: String,
    pub a_tokens: Vec<String>,
    pub candidates: Vec<(Vec<String>, bool)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TripleBuild {
    pub triples: Vec<AdversarialTriple>,
    /// Anchors without a usable paraphrase or non-paraphrase.
    pub skipped: Vec<String>,
    /// Anchors whose noun permutation could not change the sentence.
    pub unchanged: Vec<String>,
}

pub const DEFAULT_PAWS_TOP_K: usize = 100;

/// C is A with its nouns permuted; per-anchor seed is `seed ^ hash(id)`.
pub fn build_freitag_triples(
    anchors: &[FreitagAnchor],
    seed: u64,
    nouns: &NounTags,
    exec: Exec,
) -> Result<TripleBuild> {
    let built: Vec<Result<(AdversarialTriple, bool)>> = exec.map(anchors, |a| {
        let p =
            permute_nouns(&a.a_tokens, &a.a_tags, seed ^ stable_hash(&a.id), nouns).map_err(|e| e.for_pair(&a.id))?;
        let t = AdversarialTriple::new(a.id.clone(), a.a_tokens.clone(), a.b_tokens.clone(), p.tokens)?;
        Ok((t, p.unchanged))
    });
    let mut out = TripleBuild::default();
    for r in built {
        let (t, unchanged) = r?;
        if unchanged {
            out.unchanged.push(t.id.clone());
        }
        out.triples.push(t);
    }
    Ok(out)
}

/// B is the paraphrase with the least overlap with A, C the non-paraphrase
/// with the most. Keeps the `top_k` triples with the smallest `lex_ab`.
pub fn build_paws_triples(anchors: &[PawsAnchor], top_k: usize, exec: Exec) -> Result<TripleBuild> {
    let built: Vec<Result<Option<AdversarialTriple>>> = exec.map(anchors, |a| {
        let mut best_b: Option<(&Vec<String>, f64)> = None;
        let mut best_c: Option<(&Vec<String>, f64)> = None;
        for (toks, para) in &a.candidates {
            let l = lex_score(toks, &a.a_tokens).map_err(|e| e.for_pair(&a.id))?;
            if *para {
                if best_b.is_none_or(|(_, b)| l < b) {
                    best_b = Some((toks, l));
                }
            } else if best_c.is_none_or(|(_, c)| l > c) {
                best_c = Some((toks, l));
            }
        }
        match (best_b, best_c) {
            (Some((b, _)), Some((c, _))) => {
                AdversarialTriple::new(a.id.clone(), a.a_tokens.clone(), b.clone(), c.clone()).map(Some)
            }
            _ => Ok(None),
        }
    });
    let mut out = TripleBuild::default();
    for (a, r) in anchors.iter().zip(built) {
        match r? {
            Some(t) => out.triples.push(t),
            None => out.skipped.push(a.id.clone()),
        }
    }
    out.triples.sort_by(|x, y| x.lex_ab.total_cmp(&y.lex_ab));
    out.triples.truncate(top_k);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriplePreference {
    pub id: String,
    pub ab: f64,
    pub ac: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreferenceReport {
    pub metric: String,
    pub n: usize,
    pub b_preferred: f64,
    pub c_preferred: f64,
    pub ties: f64,
    /// Mean of `m(A,B) - m(A,C)`.
    pub mean_gap: f64,
    pub triples: Vec<TriplePreference>,
}

pub fn evaluate_preferences(
    triples: &[AdversarialTriple],
    ab: &ScoreTable,
    ac: &ScoreTable,
) -> Result<PreferenceReport> {
    if triples.is_empty() {
        return Err(Error::Invalid("no triples to evaluate".into()));
    }
    let mut rows = Vec::with_capacity(triples.len());
    let (mut b, mut c, mut tie, mut gap) = (0usize, 0usize, 0usize, 0.0);
    for t in triples {
        let sab = ab.require(&t.id)?;
        let sac = ac.require(&t.id)?;
        let d = sab - sac;
        if d.abs() <= TIE_TOLERANCE {
            tie += 1;
        } else if d > 0.0 {
            b += 1;
        } else {
            c += 1;
        }
        gap += d;
        rows.push(TriplePreference { id: t.id.clone(), ab: sab, ac: sac });
    }
    let n = triples.len() as f64;
    let metric = if ab.metric == ac.metric { ab.metric.clone() } else { format!("{}|{}", ab.metric, ac.metric) };
    Ok(PreferenceReport {
        metric,
        n: triples.len(),
        b_preferred: b as f64 / n,
        c_preferred: c as f64 / n,
        ties: tie as f64 / n,
        mean_gap: gap / n,
        triples: rows,
    })
}

/// Scores every triple with `lex_score` itself: (m(A,B), m(A,C)) tables.
pub fn lex_metric_tables(triples: &[AdversarialTriple]) -> (ScoreTable, ScoreTable) {
    let mut ab = ScoreTable::new("LEX");
    let mut ac = ScoreTable::new("LEX");
    for t in triples {
        ab.scores.insert(t.id.clone(), t.lex_ab);
        ac.scores.insert(t.id.clone(), t.lex_ac);
    }
    (ab, ac)
}

pub fn write_triples(triples: &[AdversarialTriple]) -> String {
    let mut out = String::from("id\tA\tB\tC\tlex_ab\tlex_ac\n");
    for t in triples {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            t.id,
            t.a_tokens.join(" "),
            t.b_tokens.join(" "),
            t.c_tokens.join(" "),
            t.lex_ab,
            t.lex_ac
        );
    }
    out
}

fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

/// Reads a triple file; overlap columns, when present, are recomputed and
/// must agree with the stored tokens.
pub fn read_triples(text: &str, path: &Path) -> Result<Vec<AdversarialTriple>> {
    let mut out = Vec::new();
    for (idx, (ln, line)) in content_lines(text).enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        if idx == 0 && f[0] == "id" {
            continue;
        }
        if f.len() < 4 {
            return Err(Error::parse(path, ln, "expected `id<TAB>A<TAB>B<TAB>C[<TAB>lex_ab<TAB>lex_ac]`"));
        }
        let t = AdversarialTriple::new(f[0], tokens(f[1]), tokens(f[2]), tokens(f[3]))
            .map_err(|e| Error::parse(path, ln, e.to_string()))?;
        for (col, stored) in [(4, t.lex_ab), (5, t.lex_ac)] {
            if let Some(v) = f.get(col) {
                let v: f64 = v.parse().map_err(|_| Error::parse(path, ln, format!("bad overlap `{v}`")))?;
                if (v - stored).abs() > 1e-9 {
                    return Err(Error::parse(
                        path,
                        ln,
                        format!("stored overlap {v} disagrees with recomputed {stored}"),
                    ));
                }
            }
        }
        out.push(t);
    }
    Ok(out)
}

/// Reads `id<TAB>A<TAB>B<TAB>A_pos` where `A_pos` holds one tag per token of A.
pub fn read_freitag(text: &str, path: &Path) -> Result<Vec<FreitagAnchor>> {
    let mut out = Vec::new();
    for (idx, (ln, line)) in content_lines(text).enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        if idx == 0 && f[0] == "id" {
            continue;
        }
        if f.len() != 4 {
            return Err(Error::parse(path, ln, "expected `id<TAB>A<TAB>B<TAB>A_pos`"));
        }
        let a = FreitagAnchor { id: f[0].into(), a_tokens: tokens(f[1]), b_tokens: tokens(f[2]), a_tags: tokens(f[3]) };
        if a.a_tokens.len() != a.a_tags.len() {
            return Err(Error::parse(path, ln, format!("{} tokens but {} tags", a.a_tokens.len(), a.a_tags.len())));
        }
        if a.a_tokens.is_empty() || a.b_tokens.is_empty() {
            return Err(Error::parse(path, ln, "empty sentence"));
        }
        out.push(a);
    }
    Ok(out)
}

/// Reads `id<TAB>A<TAB>candidate<TAB>label` rows (label 1 = paraphrase),
/// grouped by id in first-seen order.
pub fn read_paws(text: &str, path: &Path) -> Result<Vec<PawsAnchor>> {
    let mut groups: IndexMap<String, PawsAnchor> = IndexMap::new();
    for (idx, (ln, line)) in content_lines(text).enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        if idx == 0 && f[0] == "id" {
            continue;
        }
        if f.len() != 4 {
            return Err(Error::parse(path, ln, "expected `id<TAB>A<TAB>candidate<TAB>label`"));
        }
        let label = match f[3].trim() {
            "1" => true,
            "0" => false,
            other => return Err(Error::parse(path, ln, format!("label must be 0 or 1, got `{other}`"))),
        };
        let a = tokens(f[1]);
        let cand = tokens(f[2]);
        if a.is_empty() || cand.is_empty() {
            return Err(Error::parse(path, ln, "empty sentence"));
        }
        let g = groups.entry(f[0].to_string()).or_insert_with(|| PawsAnchor {
            id: f[0].into(),
            a_tokens: a.clone(),
            candidates: Vec::new(),
        });
        if g.a_tokens != a {
            return Err(Error::parse(path, ln, format!("anchor text differs from earlier rows for `{}`", f[0])));
        }
        g.candidates.push((cand, label));
    }
    Ok(groups.into_values().collect())
}

pub fn write_preferences_tsv(report: &PreferenceReport) -> String {
    let mut out = String::from("id\tm_ab\tm_ac\n");
    for t in &report.triples {
        let _ = writeln!(out, "{}\t{}\t{}", t.id, t.ab, t.ac);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokens(s)
    }

    #[test]
    fn man_bites_dog() {
        let t = toks("man bites dog");
        let tags = toks("NN VBZ NN");
        let p = permute_nouns(&t, &tags, 3, &NounTags::default()).unwrap();
        assert_eq!(p.tokens, toks("dog bites man"));
        assert!(!p.unchanged);
    }

    #[test]
    fn single_noun_unchanged_and_deterministic() {
        let t = toks("the dog barks loudly");
        let tags = toks("DT NN VBZ RB");
        assert_eq!(permute_nouns(&t, &tags, 1, &NounTags::default()).unwrap().tokens, t);
        let t = toks("the dog saw a cat near the house");
        let tags = toks("DT NN VBD DT NN IN DT NN");
        let a = permute_nouns(&t, &tags, 42, &NounTags::default()).unwrap();
        let b = permute_nouns(&t, &tags, 42, &NounTags::default()).unwrap();
        assert_eq!(a, b);
        for (i, tag) in tags.iter().enumerate() {
            if !tag.starts_with("NN") {
                assert_eq!(a.tokens[i], t[i]);
            }
        }
        assert!(permute_nouns(&t, &tags[..3], 1, &NounTags::default()).is_err());
    }

    #[test]
    fn identical_nouns_flagged() {
        let t = toks("dog chases dog");
        let tags = toks("NOUN VERB NOUN");
        let p = permute_nouns(&t, &tags, 9, &NounTags::default()).unwrap();
        assert!(p.unchanged);
        assert_eq!(p.tokens, t);
    }

    #[test]
    fn paws_forced_choice_and_skips() {
        let anchors = vec![
            PawsAnchor {
                id: "p1".into(),
                a_tokens: toks("Later in 2014 , Dassault Systèmes was bought by Quintiq."),
                candidates: vec![
                    (toks("Dassault Systèmes was bought in 2014 by Quintiq."), true),
                    (toks("In 2014 , Quintiq was bought by Dassault Systèmes."), false),
                ],
            },
            PawsAnchor { id: "p2".into(), a_tokens: toks("a b"), candidates: vec![(toks("a b"), true)] },
        ];
        let b = build_paws_triples(&anchors, DEFAULT_PAWS_TOP_K, Exec::Sequential).unwrap();
        assert_eq!(b.triples.len(), 1);
        assert_eq!(b.skipped, ["p2"]);
        assert_eq!(b.triples[0].b_tokens, anchors[0].candidates[0].0);
        assert_eq!(b.triples[0].c_tokens, anchors[0].candidates[1].0);
    }

    #[test]
    fn paws_selects_extremes_and_sorts() {
        let anchors: Vec<PawsAnchor> = (0..5)
            .map(|i| PawsAnchor {
                id: format!("a{i}"),
                a_tokens: toks("w1 w2 w3 w4 w5"),
                candidates: vec![
                    (
                        toks(&format!("{} x y z q", "w1 w2 w3 w4 w5".split(' ').take(i).collect::<Vec<_>>().join(" "))),
                        true,
                    ),
                    (toks("w1 w2 w3 w4 w5"), true),
                    (toks("w1 w2 x"), false),
                    (toks("w5 w4 w3 w2 w1"), false),
                ],
            })
            .collect();
        let b = build_paws_triples(&anchors, 3, Exec::Parallel).unwrap();
        assert_eq!(b.triples.len(), 3);
        assert!(b.triples.windows(2).all(|w| w[0].lex_ab <= w[1].lex_ab));
        assert!(b.triples.iter().all(|t| t.lex_ac == 1.0));
        assert_eq!(b.triples[0].id, "a0");
    }

    #[test]
    fn preference_fractions() {
        let triples = vec![
            AdversarialTriple::new("1", toks("a b"), toks("c"), toks("b a")).unwrap(),
            AdversarialTriple::new("2", toks("a b"), toks("c"), toks("b a")).unwrap(),
        ];
        let ab = ScoreTable::from_pairs("m", [("1", 0.9), ("2", 0.5)]).unwrap();
        let ac = ScoreTable::from_pairs("m", [("1", 0.1), ("2", 0.5)]).unwrap();
        let r = evaluate_preferences(&triples, &ab, &ac).unwrap();
        assert_eq!((r.b_preferred, r.c_preferred, r.ties), (0.5, 0.0, 0.5));
        assert!((r.mean_gap - 0.4).abs() < 1e-15);

        let (lab, lac) = lex_metric_tables(&triples);
        let r = evaluate_preferences(&triples, &lab, &lac).unwrap();
        assert_eq!(r.c_preferred, 1.0);

        let missing = ScoreTable::from_pairs("m", [("1", 0.9)]).unwrap();
        assert!(matches!(evaluate_preferences(&triples, &missing, &ac), Err(Error::MissingId { .. })));
    }

    #[test]
    fn triple_file_round_trip() {
        let t = vec![AdversarialTriple::new(
            "x",
            toks("Kovacic did a quick give-and-go at midfield."),
            toks("Kovacic managed a quick one-two in midfield."),
            toks("Kovacic did a quick midfield. at give-and-go"),
        )
        .unwrap()];
        let back = read_triples(&write_triples(&t), Path::new("t.tsv")).unwrap();
        assert_eq!(back, t);
        let tampered = write_triples(&t).replace("\t1\n", "\t0.5\n");
        assert!(read_triples(&tampered, Path::new("t.tsv")).is_err());
    }

    #[test]
    fn reads_raw_inputs() {
        let f =
            read_freitag("id\tA\tB\tA_pos\n1\tman bites dog\ta canine is bitten\tNN VBZ NN\n", Path::new("f")).unwrap();
        assert_eq!(f[0].a_tags.len(), 3);
        assert!(read_freitag("1\tman bites dog\tx\tNN VBZ\n", Path::new("f")).is_err());
        let p = read_paws("a\tx y\tx z\t1\na\tx y\ty x\t0\nb\tq\tq\t1\n", Path::new("p")).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].candidates.len(), 2);
    }
}
