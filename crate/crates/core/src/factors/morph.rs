//! MOR: morphological lexicons, retrofitting, and sentence-vector cosine.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use indexmap::IndexMap;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{DependencyTree, EmbeddingTable};
use crate::error::{Error, Result};
use crate::par::stable_hash;

/// Sorts `Key=Value` features and joins them with `|`. Empty bundles and
/// `_` yield `None`.
pub fn canonical_feats(raw: &str) -> Option<String> {
    let mut feats: Vec<&str> = raw.split('|').map(str::trim).filter(|f| !f.is_empty() && *f != "_").collect();
    if feats.is_empty() {
        return None;
    }
    feats.sort_unstable();
    feats.dedup();
    Some(feats.join("|"))
}

/// Reads `word<TAB>FEATS` lines.
pub fn load_tagged_words(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (w, f) = line.split_once('\t').ok_or_else(|| Error::parse(path, i + 1, "expected `word<TAB>FEATS`"))?;
        out.push((w.to_string(), f.to_string()));
    }
    Ok(out)
}

/// (FORM, FEATS) for every token carrying features.
pub fn tagged_words_from_trees(trees: &[DependencyTree]) -> Vec<(String, String)> {
    trees
        .iter()
        .flat_map(|t| t.forms().iter().zip(t.feats()).filter_map(|(w, f)| f.as_ref().map(|f| (w.clone(), f.clone()))))
        .collect()
}

/// Unordered word pairs that share a morphological feature bundle. Each pair
/// is stored once as `(smaller, larger)` with the first bundle that produced it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MorphLexicon {
    pairs: IndexMap<(String, String), String>,
}

impl MorphLexicon {
    pub fn insert(&mut self, a: &str, b: &str, bundle: &str) -> bool {
        if a == b {
            return false;
        }
        let key = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        if self.pairs.contains_key(&key) {
            return false;
        }
        self.pairs.insert(key, bundle.to_string());
        true
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        let key = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        self.pairs.contains_key(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.pairs.iter().map(|((a, b), t)| (a.as_str(), b.as_str(), t.as_str()))
    }

    /// Keeps only pairs whose words both have vectors.
    pub fn restrict_to(&self, table: &EmbeddingTable) -> MorphLexicon {
        MorphLexicon {
            pairs: self
                .pairs
                .iter()
                .filter(|((a, b), _)| table.index_of(a).is_some() && table.index_of(b).is_some())
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

pub const DEFAULT_PAIR_CAP: usize = 100_000;

/// Groups words by canonical bundle and pairs every two words in a group.
/// Groups producing more than `cap` pairs are subsampled without replacement,
/// seeded per bundle so the result does not depend on input order.
pub fn build_morph_lexicon<W, F>(tagged: &[(W, F)], cap: usize, seed: u64) -> MorphLexicon
where
    W: AsRef<str>,
    F: AsRef<str>,
{
    let mut groups: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for (w, f) in tagged {
        if let Some(bundle) = canonical_feats(f.as_ref()) {
            groups.entry(bundle).or_default().insert(w.as_ref());
        }
    }
    let mut lex = MorphLexicon::default();
    for (bundle, words) in &groups {
        let words: Vec<&str> = words.iter().copied().collect();
        let k = words.len();
        let total = k * k.saturating_sub(1) / 2;
        if total <= cap {
            for i in 0..k {
                for j in i + 1..k {
                    lex.insert(words[i], words[j], bundle);
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stable_hash(bundle));
            let mut picks = index::sample(&mut rng, total, cap).into_vec();
            picks.sort_unstable();
            for p in picks {
                let (i, j) = unrank_pair(p, k);
                lex.insert(words[i], words[j], bundle);
            }
        }
    }
    lex
}

/// Maps a rank in the lexicographic list of `(i, j)`, `i < j < k`, to the pair.
fn unrank_pair(mut r: usize, k: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = k - 1 - i;
        if r < row {
            return (i, i + 1 + r);
        }
        r -= row;
        i += 1;
    }
}

/// Fraction of cross-lingual word pairs `(wx, wy)` that share at least one
/// feature bundle.
pub fn morph_overlap<W: AsRef<str>, F: AsRef<str>>(x: &[(W, F)], y: &[(W, F)]) -> f64 {
    fn bundles<W: AsRef<str>, F: AsRef<str>>(t: &[(W, F)]) -> BTreeMap<String, BTreeSet<String>> {
        let mut m: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (w, f) in t {
            let e = m.entry(w.as_ref().to_string()).or_default();
            if let Some(b) = canonical_feats(f.as_ref()) {
                e.insert(b);
            }
        }
        m
    }
    let bx = bundles(x);
    let by = bundles(y);
    if bx.is_empty() || by.is_empty() {
        return 0.0;
    }
    let mut y_by_bundle: HashMap<&str, Vec<usize>> = HashMap::new();
    for (j, bs) in by.values().enumerate() {
        for b in bs {
            y_by_bundle.entry(b.as_str()).or_default().push(j);
        }
    }
    let mut stamp = vec![usize::MAX; by.len()];
    let mut shared = 0usize;
    for (i, bs) in bx.values().enumerate() {
        for b in bs {
            for &j in y_by_bundle.get(b.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
                if stamp[j] != i {
                    stamp[j] = i;
                    shared += 1;
                }
            }
        }
    }
    shared as f64 / (bx.len() * by.len()) as f64
}

/// Iterative retrofitting of word vectors to a lexicon graph.
///
/// Minimizes `Σ_i [α‖q_i − q̂_i‖² + Σ_{j∈N(i)} β_ij‖q_i − q_j‖²]` with
/// `α = 1` and `β_ij = 1/deg(i)` by exact block-coordinate descent: each
/// sweep visits words in table order and sets
/// `q_i = (α q̂_i + Σ_j w_ij q_j) / (α + Σ_j w_ij)` where `w_ij = β_ij + β_ji`
/// (an edge enters the objective from both endpoints). Each update is the
/// minimizer over `q_i`, so the objective never increases.
pub struct Retrofitter {
    base: EmbeddingTable,
    current: EmbeddingTable,
    /// (neighbour, w_ij) per word
    neighbours: Vec<Vec<(usize, f64)>>,
}

impl Retrofitter {
    pub fn new(base: &EmbeddingTable, lexicon: &MorphLexicon) -> Self {
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); base.len()];
        for (a, b, _) in lexicon.iter() {
            if let (Some(i), Some(j)) = (base.index_of(a), base.index_of(b)) {
                if i != j {
                    adj[i].insert(j);
                    adj[j].insert(i);
                }
            }
        }
        let deg: Vec<f64> = adj.iter().map(|s| s.len() as f64).collect();
        let neighbours = adj
            .iter()
            .enumerate()
            .map(|(i, s)| s.iter().map(|&j| (j, 1.0 / deg[i] + 1.0 / deg[j])).collect())
            .collect();
        Retrofitter { base: base.clone(), current: base.clone(), neighbours }
    }

    pub fn step(&mut self) {
        let dim = self.base.dim();
        let mut acc = vec![0.0; dim];
        for i in 0..self.neighbours.len() {
            let nb = &self.neighbours[i];
            if nb.is_empty() {
                continue;
            }
            acc.copy_from_slice(self.base.row(i));
            let mut denom = 1.0;
            for &(j, w) in nb {
                for (a, q) in acc.iter_mut().zip(self.current.row(j)) {
                    *a += w * q;
                }
                denom += w;
            }
            for (q, a) in self.current.row_mut(i).iter_mut().zip(&acc) {
                *q = a / denom;
            }
        }
    }

    pub fn objective(&self) -> f64 {
        let mut total = 0.0;
        for (i, nb) in self.neighbours.iter().enumerate() {
            let qi = self.current.row(i);
            total += sq_dist(qi, self.base.row(i));
            if nb.is_empty() {
                continue;
            }
            let beta = 1.0 / nb.len() as f64;
            for &(j, _) in nb {
                total += beta * sq_dist(qi, self.current.row(j));
            }
        }
        total
    }

    pub fn current(&self) -> &EmbeddingTable {
        &self.current
    }

    pub fn into_table(self) -> EmbeddingTable {
        self.current
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub const DEFAULT_RETROFIT_ITERATIONS: usize = 10;

pub fn retrofit_embeddings(base: &EmbeddingTable, lexicon: &MorphLexicon, iterations: usize) -> EmbeddingTable {
    let mut r = Retrofitter::new(base, lexicon);
    for _ in 0..iterations {
        r.step();
    }
    r.into_table()
}

fn sentence_mean<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable, side: &'static str) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; table.dim()];
    let mut n = 0usize;
    for t in tokens {
        if let Some(v) = table.get(t.as_ref()) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::AllOutOfVocabulary { side });
    }
    for s in &mut sum {
        *s /= n as f64;
    }
    Ok(sum)
}

/// Cosine between the mean in-vocabulary vectors of the two sentences.
/// Out-of-vocabulary tokens are skipped.
pub fn mor_score<S: AsRef<str>>(x: &[S], y: &[S], table: &EmbeddingTable) -> Result<f64> {
    let u = sentence_mean(x, table, "x")?;
    let v = sentence_mean(y, table, "y")?;
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 {
        return Err(Error::ZeroNorm { side: "x" });
    }
    if nv == 0.0 {
        return Err(Error::ZeroNorm { side: "y" });
    }
    let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(rows: &[(&str, &[f64])]) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(rows[0].1.len());
        for (w, v) in rows {
            t.insert(w, v).unwrap();
        }
        t
    }

    #[test]
    fn canonical_bundles() {
        assert_eq!(canonical_feats("VerbForm=Part|Tense=Past").as_deref(), Some("Tense=Past|VerbForm=Part"));
        assert_eq!(canonical_feats("_"), None);
        assert_eq!(canonical_feats(""), None);
    }

    #[test]
    fn lexicon_examples() {
        let lex = build_morph_lexicon(
            &[("reached", "Tense=Past|VerbForm=Part"), ("combined", "VerbForm=Part|Tense=Past")],
            DEFAULT_PAIR_CAP,
            0,
        );
        assert_eq!(lex.len(), 1);
        assert!(lex.contains("reached", "combined"));
        assert_eq!(lex.iter().next().unwrap().2, "Tense=Past|VerbForm=Part");

        let lone = build_morph_lexicon(&[("stay", "VerbForm=Inf"), ("dogs", "Number=Plur")], DEFAULT_PAIR_CAP, 0);
        assert!(lone.is_empty());

        let three = build_morph_lexicon(&[("a", "X=1"), ("b", "X=1"), ("c", "X=1"), ("a", "X=1")], DEFAULT_PAIR_CAP, 0);
        assert_eq!(three.len(), 3);
    }

    #[test]
    fn pairs_dedup_across_bundles() {
        let lex = build_morph_lexicon(&[("a", "X=1"), ("b", "X=1"), ("a", "Y=1"), ("b", "Y=1")], DEFAULT_PAIR_CAP, 0);
        assert_eq!(lex.len(), 1);
    }

    #[test]
    fn capped_sampling_is_seeded() {
        let words: Vec<(String, String)> = (0..50).map(|i| (format!("w{i}"), "X=1".to_string())).collect();
        let a = build_morph_lexicon(&words, 100, 7);
        let b = build_morph_lexicon(&words, 100, 7);
        let c = build_morph_lexicon(&words, 100, 8);
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn unrank_enumerates_all_pairs() {
        let k = 6;
        let got: Vec<_> = (0..k * (k - 1) / 2).map(|r| unrank_pair(r, k)).collect();
        let want: Vec<_> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn overlap_fraction() {
        let x = [("reached", "Tense=Past|VerbForm=Part"), ("stay", "VerbForm=Inf")];
        let y = [("sein", "VerbForm=Inf"), ("Hund", "Case=Nom")];
        assert_eq!(morph_overlap(&x, &y), 0.25);
    }

    #[test]
    fn empty_lexicon_is_identity() {
        let base = table(&[("a", &[1.0, 2.0]), ("b", &[3.0, -1.0])]);
        assert_eq!(retrofit_embeddings(&base, &MorphLexicon::default(), 10), base);
    }

    #[test]
    fn unlinked_words_unchanged() {
        let base = table(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0]), ("c", &[5.0, 5.0])]);
        let mut lex = MorphLexicon::default();
        lex.insert("a", "b", "X=1");
        let out = retrofit_embeddings(&base, &lex, 10);
        assert_eq!(out.get("c"), base.get("c"));
        assert_ne!(out.get("a"), base.get("a"));
    }

    #[test]
    fn mor_examples() {
        let t = table(&[("a", &[1.0, 0.0]), ("b", &[1.0, 2.0]), ("c", &[0.0, 1.0]), ("d", &[2.0, 1.0])]);
        assert!((mor_score(&["a", "b"], &["a", "b"], &t).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(mor_score(&["a"], &["c"], &t).unwrap(), 0.0);
        // "zz" is skipped; both means are (1, 1)
        assert!((mor_score(&["b", "a", "zz"], &["c", "d"], &t).unwrap() - 1.0).abs() < 1e-15);
        // (1, 0) against (1, 1): 1/√2
        let v = mor_score(&["a", "a"], &["c", "d"], &t).unwrap();
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(matches!(mor_score(&["zz"], &["a"], &t), Err(Error::AllOutOfVocabulary { side: "x" })));
        let z = table(&[("o", &[0.0, 0.0])]);
        assert!(matches!(mor_score(&["o"], &["o"], &z), Err(Error::ZeroNorm { .. })));
    }

    proptest! {
        #[test]
        fn mor_symmetric_and_order_free(
            xs in prop::collection::vec(0usize..6, 1..8),
            ys in prop::collection::vec(0usize..6, 1..8),
        ) {
            let words = ["a", "b", "c", "d", "e", "f"];
            let mut t = EmbeddingTable::new(3);
            for (i, w) in words.iter().enumerate() {
                let f = i as f64;
                t.insert(w, &[1.0 + f, (f * 1.7).sin(), -f * 0.3]).unwrap();
            }
            let x: Vec<&str> = xs.iter().map(|&i| words[i]).collect();
            let y: Vec<&str> = ys.iter().map(|&i| words[i]).collect();
            let mut xr = x.clone();
            xr.reverse();
            let a = mor_score(&x, &y, &t).unwrap();
            prop_assert!((a - mor_score(&y, &x, &t).unwrap()).abs() < 1e-12);
            prop_assert!((a - mor_score(&xr, &y, &t).unwrap()).abs() < 1e-12);
        }
    }
}
