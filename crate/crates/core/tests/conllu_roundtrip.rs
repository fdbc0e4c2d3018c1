use std::path::Path;

use lingfactors::data::{read_conllu, write_conllu, DependencyTree};
use proptest::prelude::*;

/// Random rooted trees over shuffled token positions, so heads point both
/// left and right.
fn arb_tree() -> impl Strategy<Value = DependencyTree> {
    (1usize..12)
        .prop_flat_map(|n| {
            let attach = (0..n).map(|i| 0..i.max(1)).collect::<Vec<_>>();
            (
                Just(n),
                attach,
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
                proptest::collection::vec("[a-z]{1,6}", n),
            )
        })
        .prop_map(|(n, attach, order, forms)| {
            // order[k] is the position of the k-th inserted node; node k attaches to an earlier node.
            let mut parents = vec![None; n];
            for k in 1..n {
                parents[order[k]] = Some(order[attach[k]]);
            }
            let feats = (0..n)
                .map(|i| (i % 2 == 0).then(|| format!("Number={}", if i % 4 == 0 { "Sing" } else { "Plur" })))
                .collect();
            DependencyTree::with_tokens(parents, forms, feats).expect("valid by construction")
        })
}

proptest! {
    #[test]
    fn written_trees_read_back_unchanged(trees in proptest::collection::vec(arb_tree(), 0..6)) {
        let trees: Vec<DependencyTree> =
            trees.into_iter().enumerate().map(|(i, t)| t.with_sent_id(Some(format!("s{i}")))).collect();
        let text = write_conllu(&trees);
        let back = read_conllu(&text, Path::new("gen.conllu")).unwrap();
        prop_assert_eq!(&back, &trees);
        for t in &back {
            prop_assert_eq!(t.postorder().len(), t.len());
            prop_assert!(t.parent(t.root()).is_none());
            let non_roots = (0..t.len()).filter(|&v| t.parent(v).is_some()).count();
            prop_assert_eq!(non_roots, t.len() - 1);
        }
    }
}

#[test]
fn multiword_ranges_and_empty_nodes_are_skipped() {
    let text = "1-2\tdu\t_\t_\t_\t_\t_\t_\t_\t_\n\
                1\tde\t_\tADP\t_\t_\t3\tcase\t_\t_\n\
                2\tle\t_\tDET\t_\t_\t3\tdet\t_\t_\n\
                3\tchat\t_\tNOUN\t_\tNumber=Sing\t0\troot\t_\t_\n\
                3.1\tvu\t_\tVERB\t_\t_\t_\t_\t3:dep\t_\n\n";
    let trees = read_conllu(text, Path::new("mw.conllu")).unwrap();
    assert_eq!(trees[0].forms(), ["de", "le", "chat"]);
    assert_eq!(trees[0].to_brackets(), "(()())");
}

#[test]
fn bad_heads_name_the_sentence() {
    let ok = "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n\n";
    let bad = "1\ta\t_\t_\t_\t_\t5\tdep\t_\t_\n2\tb\t_\t_\t_\t_\t0\troot\t_\t_\n\n";
    let err = read_conllu(&format!("{ok}{bad}"), Path::new("h.conllu")).unwrap_err().to_string();
    assert!(err.contains("sentence 2"), "{err}");
    let cycle = "1\ta\t_\t_\t_\t_\t2\tdep\t_\t_\n2\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n\n";
    assert!(read_conllu(cycle, Path::new("c.conllu")).is_err());
}
