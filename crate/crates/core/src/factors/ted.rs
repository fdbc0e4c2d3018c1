//! Ordered tree edit distance (Zhang & Shasha) over unlabeled trees.
//!
//! Insertions and deletions cost 1; relabeling is free, so only shape
//! matters. Deleting a node splices its children into its parent's child
//! list; inserting is the inverse.

use crate::data::DependencyTree;

/// Postorder view of a tree: leftmost-leaf descendants and keyroots,
/// both in postorder numbering.
struct Postorder {
    lml: Vec<usize>,
    keyroots: Vec<usize>,
}

impl Postorder {
    fn new(t: &DependencyTree) -> Self {
        let order = t.postorder();
        let n = order.len();
        let mut rank = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            rank[v] = i;
        }
        let mut lml = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            lml[i] = match t.children(v).first() {
                Some(&c) => lml[rank[c]],
                None => i,
            };
        }
        // A keyroot is the highest node sharing its leftmost leaf.
        let mut highest = vec![usize::MAX; n];
        for i in 0..n {
            highest[lml[i]] = i;
        }
        let mut keyroots: Vec<usize> = highest.into_iter().filter(|&k| k != usize::MAX).collect();
        keyroots.sort_unstable();
        Postorder { lml, keyroots }
    }
}

pub fn tree_edit_distance(a: &DependencyTree, b: &DependencyTree) -> usize {
    let pa = Postorder::new(a);
    let pb = Postorder::new(b);
    let (n, m) = (a.len(), b.len());
    let mut td = vec![0usize; n * m];
    let mut fd = vec![0usize; (n + 1) * (m + 1)];
    let w = m + 1;

    for &i in &pa.keyroots {
        for &j in &pb.keyroots {
            let (li, lj) = (pa.lml[i], pb.lml[j]);
            let rows = i - li + 2;
            let cols = j - lj + 2;
            fd[0] = 0;
            for di in 1..rows {
                fd[di * w] = fd[(di - 1) * w] + 1;
            }
            for dj in 1..cols {
                fd[dj] = fd[dj - 1] + 1;
            }
            for di in 1..rows {
                let x = li + di - 1;
                for dj in 1..cols {
                    let y = lj + dj - 1;
                    let del = fd[(di - 1) * w + dj] + 1;
                    let ins = fd[di * w + dj - 1] + 1;
                    let v = if pa.lml[x] == li && pb.lml[y] == lj {
                        let v = del.min(ins).min(fd[(di - 1) * w + dj - 1]);
                        td[x * m + y] = v;
                        v
                    } else {
                        let p = pa.lml[x] - li;
                        let q = pb.lml[y] - lj;
                        del.min(ins).min(fd[p * w + q] + td[x * m + y])
                    };
                    fd[di * w + dj] = v;
                }
            }
        }
    }
    td[(n - 1) * m + (m - 1)]
}

/// `1 - TED / (|a| + |b|)`, in `[0, 1]`.
pub fn syn_score(a: &DependencyTree, b: &DependencyTree) -> f64 {
    let ted = tree_edit_distance(a, b) as f64;
    1.0 - ted / (a.len() + b.len()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(s: &str) -> DependencyTree {
        DependencyTree::from_brackets(s).unwrap()
    }

    #[test]
    fn small_cases() {
        assert_eq!(tree_edit_distance(&t("()"), &t("()")), 0);
        assert_eq!(tree_edit_distance(&t("()"), &t("(()())")), 2);
        assert_eq!(tree_edit_distance(&t("(())"), &t("(()())")), 1);
        // chain vs star of the same size
        assert_eq!(tree_edit_distance(&t("((()))"), &t("(()())")), 2);
        assert_eq!(syn_score(&t("(()())"), &t("(()())")), 1.0);
    }

    #[test]
    fn ordering_matters() {
        assert_eq!(tree_edit_distance(&t("((())())"), &t("(()(()))")), 2);
    }

    fn arb_tree(max: usize) -> impl Strategy<Value = DependencyTree> {
        prop::collection::vec(any::<prop::sample::Index>(), 0..max).prop_map(|picks| {
            // node i+1 attaches to an earlier node: always a valid tree
            let mut parents = vec![None];
            for (i, p) in picks.iter().enumerate() {
                parents.push(Some(p.index(i + 1)));
            }
            DependencyTree::from_parents(parents).unwrap()
        })
    }

    proptest! {
        #[test]
        fn metric_properties(a in arb_tree(12), b in arb_tree(12), c in arb_tree(12)) {
            let ab = tree_edit_distance(&a, &b);
            prop_assert_eq!(ab, tree_edit_distance(&b, &a));
            prop_assert_eq!(tree_edit_distance(&a, &a), 0);
            prop_assert!(ab <= tree_edit_distance(&a, &c) + tree_edit_distance(&c, &b));
            prop_assert_eq!(ab == 0, a.to_brackets() == b.to_brackets());
            prop_assert!(ab >= a.len().abs_diff(b.len()));
            let s = syn_score(&a, &b);
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
