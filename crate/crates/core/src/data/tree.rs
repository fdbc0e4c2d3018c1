use crate::error::{Error, Result};

/// Ordered rooted tree over the tokens of one sentence.
///
/// Node `i` is token `i` (0-based). Children are kept in surface order.
/// Labels and word forms ride along but are never consulted by the
/// structural comparisons.
#[derive(Clone, Debug, PartialEq)]
pub struct DependencyTree {
    parents: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
    forms: Vec<String>,
    feats: Vec<Option<String>>,
    sent_id: Option<String>,
}

impl DependencyTree {
    /// Builds a tree from 0-based parent indices; `None` marks the root.
    pub fn from_parents(parents: Vec<Option<usize>>) -> Result<Self> {
        let n = parents.len();
        let forms = vec!["_".to_string(); n];
        Self::with_tokens(parents, forms, vec![None; n])
    }

    pub fn with_tokens(parents: Vec<Option<usize>>, forms: Vec<String>, feats: Vec<Option<String>>) -> Result<Self> {
        let n = parents.len();
        if n == 0 {
            return Err(Error::InvalidTree("tree has no nodes".into()));
        }
        if forms.len() != n || feats.len() != n {
            return Err(Error::InvalidTree(format!(
                "{} nodes but {} forms and {} feature bundles",
                n,
                forms.len(),
                feats.len()
            )));
        }
        let mut root = None;
        let mut children = vec![Vec::new(); n];
        for (i, p) in parents.iter().enumerate() {
            match *p {
                None => {
                    if let Some(r) = root {
                        return Err(Error::InvalidTree(format!("multiple roots: tokens {} and {}", r + 1, i + 1)));
                    }
                    root = Some(i);
                }
                Some(p) if p >= n => {
                    return Err(Error::InvalidTree(format!(
                        "token {} has head {} but the sentence has {} tokens",
                        i + 1,
                        p + 1,
                        n
                    )))
                }
                Some(p) if p == i => return Err(Error::InvalidTree(format!("token {} is its own head", i + 1))),
                Some(p) => children[p].push(i),
            }
        }
        let root = root.ok_or_else(|| Error::InvalidTree("no root (every token has a head)".into()))?;

        // With exactly one root, the structure is a tree iff every node is reachable from it.
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        let mut reached = 0;
        while let Some(v) = stack.pop() {
            seen[v] = true;
            reached += 1;
            stack.extend(children[v].iter().copied());
        }
        if reached != n {
            let first = seen.iter().position(|s| !s).unwrap_or(0);
            return Err(Error::InvalidTree(format!("cycle through token {}", first + 1)));
        }
        Ok(DependencyTree { parents, children, root, forms, feats, sent_id: None })
    }

    /// Parses a bracket string such as `(()(())(()))`: each `()` is a node,
    /// nested pairs are its children. Nodes are numbered in preorder.
    pub fn from_brackets(s: &str) -> Result<Self> {
        let mut parents = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        let mut closed_root = false;
        for c in s.chars().filter(|c| !c.is_whitespace()) {
            match c {
                '(' => {
                    if closed_root {
                        return Err(Error::InvalidTree(format!("`{s}` is a forest")));
                    }
                    parents.push(stack.last().copied());
                    stack.push(parents.len() - 1);
                }
                ')' => {
                    stack.pop().ok_or_else(|| Error::InvalidTree(format!("unbalanced `{s}`")))?;
                    closed_root = stack.is_empty();
                }
                _ => return Err(Error::InvalidTree(format!("unexpected `{c}` in `{s}`"))),
            }
        }
        if !stack.is_empty() {
            return Err(Error::InvalidTree(format!("unbalanced `{s}`")));
        }
        Self::from_parents(parents)
    }

    pub fn to_brackets(&self) -> String {
        fn go(t: &DependencyTree, v: usize, out: &mut String) {
            out.push('(');
            for &c in &t.children[v] {
                go(t, c, out);
            }
            out.push(')');
        }
        let mut s = String::with_capacity(2 * self.len());
        go(self, self.root, &mut s);
        s
    }

    pub fn with_sent_id(mut self, id: Option<String>) -> Self {
        self.sent_id = id;
        self
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parents[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn forms(&self) -> &[String] {
        &self.forms
    }

    pub fn feats(&self) -> &[Option<String>] {
        &self.feats
    }

    pub fn sent_id(&self) -> Option<&str> {
        self.sent_id.as_deref()
    }

    /// Nodes in left-to-right postorder.
    pub fn postorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![(self.root, 0usize)];
        while let Some(top) = stack.last_mut() {
            let (v, next) = *top;
            if next < self.children[v].len() {
                top.1 += 1;
                stack.push((self.children[v][next], 0));
            } else {
                out.push(v);
                stack.pop();
            }
        }
        out
    }
}
