//! Labelled trees on `{1..n}`, Prüfer codes, uniform sampling, free-tree
//! enumeration and the tree dynamic programs (independence polynomial,
//! matching number, minimum maximal independent set).

use std::collections::VecDeque;
use std::fmt;
use std::ops::{AddAssign, Mul};
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::seq::CountSequence;

/// Largest `n` accepted by [`enumerate_free_trees`].
pub const MAX_ENUMERATION_N: usize = 26;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("a tree needs at least one vertex")]
    NoVertices,
    #[error("expected {expected} edges, got {got}")]
    EdgeCount { expected: usize, got: usize },
    #[error("vertex {vertex} outside 1..={n}")]
    VertexOutOfRange { vertex: u32, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),
    #[error("edges do not form a connected graph")]
    Disconnected,
    #[error("Prüfer codes need n >= 2, got {0}")]
    CodeTooShort(usize),
    #[error("vertex set is not independent: {0} and {1} are adjacent")]
    NotIndependent(u32, u32),
    #[error("free-tree enumeration supports 1 <= n <= {MAX_ENUMERATION_N}, got {0}")]
    EnumerationRange(usize),
    #[error("malformed tree text: {0}")]
    Parse(String),
}

/// A labelled tree on vertex set `{1..n}`. Edges are stored normalized
/// (`u < v`) and sorted, so equality is equality of labelled trees.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tree {
    n: usize,
    edges: Vec<(u32, u32)>,
}

impl Tree {
    pub fn new(n: usize, edges: Vec<(u32, u32)>) -> Result<Tree, TreeError> {
        if n == 0 {
            return Err(TreeError::NoVertices);
        }
        if edges.len() != n - 1 {
            return Err(TreeError::EdgeCount { expected: n - 1, got: edges.len() });
        }
        let mut norm = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            for w in [u, v] {
                if w == 0 || w as usize > n {
                    return Err(TreeError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(TreeError::SelfLoop(u));
            }
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        let tree = Tree { n, edges: norm };
        // n-1 edges plus connectivity rules out cycles
        let (order, _) = tree.bfs_from(0);
        if order.len() != n {
            return Err(TreeError::Disconnected);
        }
        Ok(tree)
    }

    pub fn single_vertex() -> Tree {
        Tree { n: 1, edges: vec![] }
    }

    /// The path `1 - 2 - ... - n`.
    pub fn path(n: usize) -> Tree {
        Tree::new(n, (1..n as u32).map(|i| (i, i + 1)).collect()).expect("path is a tree")
    }

    /// The star with center `1`.
    pub fn star(n: usize) -> Tree {
        Tree::new(n, (2..=n as u32).map(|i| (1, i)).collect()).expect("star is a tree")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// 0-based adjacency lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u as usize - 1].push(v as usize - 1);
            adj[v as usize - 1].push(u as usize - 1);
        }
        adj
    }

    /// BFS order and parent array (0-based, root's parent is `usize::MAX`).
    fn bfs_from(&self, root: usize) -> (Vec<usize>, Vec<usize>) {
        let adj = self.adjacency();
        let mut parent = vec![usize::MAX; self.n];
        let mut seen = vec![false; self.n];
        let mut order = Vec::with_capacity(self.n);
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        (order, parent)
    }

    /// Text form: `n` on the first line, then one `u v` line per edge.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for (u, v) in &self.edges {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tree(n={}, {:?})", self.n, self.edges)
    }
}

impl FromStr for Tree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Tree, TreeError> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| TreeError::Parse("missing vertex count".into()))?
            .parse()
            .map_err(|e| TreeError::Parse(format!("vertex count: {e}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace().map(u32::from_str);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
                _ => return Err(TreeError::Parse(format!("bad edge line {line:?}"))),
            }
        }
        Tree::new(n, edges)
    }
}

/// A Prüfer code: `n - 2` symbols over `{1..n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PruferCode {
    n: usize,
    symbols: Vec<u32>,
}

impl PruferCode {
    pub fn new(n: usize, symbols: Vec<u32>) -> Result<PruferCode, TreeError> {
        if n < 2 {
            return Err(TreeError::CodeTooShort(n));
        }
        if symbols.len() != n - 2 {
            return Err(TreeError::EdgeCount { expected: n - 2, got: symbols.len() });
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s == 0 || s as usize > n) {
            return Err(TreeError::VertexOutOfRange { vertex: bad, n });
        }
        Ok(PruferCode { n, symbols })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }
}

impl FromStr for PruferCode {
    type Err = TreeError;

    /// Whitespace-separated symbols; `n` is the symbol count plus two.
    fn from_str(s: &str) -> Result<PruferCode, TreeError> {
        let symbols = s
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|e| TreeError::Parse(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        PruferCode::new(symbols.len() + 2, symbols)
    }
}

pub fn prufer_decode(code: &PruferCode) -> Tree {
    let n = code.n;
    let mut degree = vec![1usize; n];
    for &s in &code.symbols {
        degree[s as usize - 1] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut ptr = degree.iter().position(|&d| d == 1).expect("a leaf exists");
    let mut leaf = ptr;
    for &s in &code.symbols {
        let v = s as usize - 1;
        edges.push((leaf as u32 + 1, s));
        degree[leaf] = 0;
        degree[v] -= 1;
        if degree[v] == 1 && v < ptr {
            leaf = v;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push((leaf as u32 + 1, n as u32));
    Tree::new(n, edges).expect("Prüfer decoding yields a tree")
}

pub fn prufer_encode(tree: &Tree) -> Result<PruferCode, TreeError> {
    let n = tree.n;
    if n < 2 {
        return Err(TreeError::CodeTooShort(n));
    }
    let (_, parent) = tree.bfs_from(n - 1);
    let mut degree: Vec<usize> = tree.adjacency().iter().map(Vec::len).collect();
    let mut symbols = Vec::with_capacity(n - 2);
    let mut ptr = degree.iter().position(|&d| d == 1).expect("a leaf exists");
    let mut leaf = ptr;
    for _ in 0..n - 2 {
        let next = parent[leaf];
        symbols.push(next as u32 + 1);
        degree[leaf] = 0;
        degree[next] -= 1;
        if degree[next] == 1 && next < ptr {
            leaf = next;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    Ok(PruferCode { n, symbols })
}

/// Uniform labelled tree on `{1..n}` from uniform Prüfer symbols.
pub fn random_tree_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Tree {
    match n {
        0 | 1 => Tree::single_vertex(),
        _ => {
            let symbols = (0..n - 2).map(|_| rng.random_range(1..=n as u32)).collect();
            prufer_decode(&PruferCode { n, symbols })
        }
    }
}

/// Deterministic uniform labelled tree for a given seed.
pub fn random_tree(n: usize, seed: u64) -> Tree {
    random_tree_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// The `index`-th tree of the run seeded by `master`: each index gets its
/// own ChaCha stream, so the result does not depend on evaluation order.
pub fn random_tree_indexed(n: usize, master: u64, index: u64) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    random_tree_with(n, &mut rng)
}

// ---------------------------------------------------------------------------
// Free trees via canonical level sequences (Wright, Richmond, Odlyzko and
// McKay), with the Beyer-Hedetniemi successor for rooted trees.

/// Successor of a rooted level sequence, modifying positions `p..`.
fn next_rooted_tree(pred: &[u32], p: Option<usize>) -> Option<Vec<u32>> {
    let p = match p {
        Some(p) => p,
        None => {
            let mut p = pred.len() - 1;
            while pred[p] == 1 {
                p -= 1;
            }
            p
        }
    };
    if p == 0 {
        return None;
    }
    let mut q = p - 1;
    while pred[q] != pred[p] - 1 {
        q -= 1;
    }
    let mut result = pred.to_vec();
    for i in p..result.len() {
        result[i] = result[i - p + q];
    }
    Some(result)
}

/// Splits off the leftmost subtree of the root: returns its levels (shifted
/// up by one) and the remaining sequence.
fn split_tree(layout: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let m = layout.iter().enumerate().filter(|(_, &l)| l == 1).map(|(i, _)| i).nth(1).unwrap_or(layout.len());
    let left = layout[1..m].iter().map(|l| l - 1).collect();
    let mut rest = Vec::with_capacity(layout.len() - m + 1);
    rest.push(0);
    rest.extend_from_slice(&layout[m..]);
    (left, rest)
}

/// Returns the candidate if it is a canonical free tree, else jumps to the
/// next one.
fn next_free_tree(candidate: Vec<u32>) -> Option<Vec<u32>> {
    let (left, rest) = split_tree(&candidate);
    let left_height = left.iter().copied().max().unwrap_or(0);
    let rest_height = rest.iter().copied().max().unwrap_or(0);
    let mut valid = rest_height >= left_height;
    if valid && rest_height == left_height && (left.len() > rest.len() || (left.len() == rest.len() && left > rest)) {
        valid = false;
    }
    if valid {
        return Some(candidate);
    }
    let p = left.len();
    let mut next = next_rooted_tree(&candidate, Some(p))?;
    if candidate[p] > 2 {
        let (new_left, _) = split_tree(&next);
        let h = new_left.iter().copied().max().unwrap_or(0) as usize;
        let len = next.len();
        for (i, slot) in next[len - (h + 1)..].iter_mut().enumerate() {
            *slot = i as u32 + 1;
        }
    }
    Some(next)
}

/// Builds a tree from a level sequence: vertex `i + 1` hangs off the most
/// recent vertex one level up.
pub fn tree_from_levels(levels: &[u32]) -> Tree {
    let n = levels.len();
    let mut stack: Vec<usize> = Vec::with_capacity(n);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for (i, &l) in levels.iter().enumerate() {
        stack.truncate(l as usize);
        if let Some(&parent) = stack.last() {
            edges.push((parent as u32 + 1, i as u32 + 1));
        }
        stack.push(i);
    }
    Tree::new(n, edges).expect("level sequence describes a tree")
}

/// Stream of one representative per isomorphism class of `n`-vertex trees.
pub struct FreeTrees {
    n: usize,
    layout: Option<Vec<u32>>,
    emitted_trivial: bool,
}

impl FreeTrees {
    /// The level sequence of the next tree, without building the edge list.
    pub fn next_levels(&mut self) -> Option<Vec<u32>> {
        if self.n == 1 {
            if self.emitted_trivial {
                return None;
            }
            self.emitted_trivial = true;
            return Some(vec![0]);
        }
        let layout = self.layout.take()?;
        let tree = next_free_tree(layout)?;
        self.layout = next_rooted_tree(&tree, None);
        Some(tree)
    }
}

impl Iterator for FreeTrees {
    type Item = Tree;

    fn next(&mut self) -> Option<Tree> {
        self.next_levels().map(|l| tree_from_levels(&l))
    }
}

pub fn enumerate_free_trees(n: usize) -> Result<FreeTrees, TreeError> {
    if n == 0 || n > MAX_ENUMERATION_N {
        return Err(TreeError::EnumerationRange(n));
    }
    // start from the path rooted at its center
    let layout = if n >= 2 {
        let mut l: Vec<u32> = (0..=(n / 2) as u32).collect();
        l.extend(1..n.div_ceil(2) as u32);
        Some(l)
    } else {
        None
    };
    Ok(FreeTrees { n, layout, emitted_trivial: false })
}

// ---------------------------------------------------------------------------
// Dynamic programs.

fn poly_mul<T>(a: &[T], b: &[T]) -> Vec<T>
where
    T: Clone + Zero + for<'a> AddAssign<&'a T>,
    for<'a> &'a T: Mul<&'a T, Output = T>,
{
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += &(x * y);
        }
    }
    out
}

fn poly_add<T>(a: &[T], b: &[T]) -> Vec<T>
where
    T: Clone + Zero + for<'a> AddAssign<&'a T>,
{
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut out = long.to_vec();
    for (o, s) in out.iter_mut().zip(short) {
        *o += s;
    }
    out
}

/// Rooted two-state DP: for each vertex, the independence polynomials of its
/// subtree with the vertex included and excluded.
fn independence_poly<T>(tree: &Tree) -> Vec<T>
where
    T: Clone + Zero + One + for<'a> AddAssign<&'a T>,
    for<'a> &'a T: Mul<&'a T, Output = T>,
{
    let (order, parent) = tree.bfs_from(0);
    let n = tree.n;
    let mut inc: Vec<Vec<T>> = vec![vec![T::zero(), T::one()]; n];
    let mut exc: Vec<Vec<T>> = vec![vec![T::one()]; n];
    for &v in order.iter().rev() {
        let p = parent[v];
        if p == usize::MAX {
            continue;
        }
        let child_in = std::mem::take(&mut inc[v]);
        let child_out = std::mem::take(&mut exc[v]);
        let either = poly_add(&child_in, &child_out);
        inc[p] = poly_mul(&inc[p], &child_out);
        exc[p] = poly_mul(&exc[p], &either);
    }
    let root = order[0];
    let mut total = poly_add(&inc[root], &exc[root]);
    while total.len() > 1 && total.last().is_some_and(Zero::is_zero) {
        total.pop();
    }
    total
}

/// Counts of independent sets of each size, trailing zeros trimmed.
pub fn independence_sequence(tree: &Tree) -> CountSequence {
    // every count is at most 2^(n-1) + 1
    let terms = if tree.n <= 60 {
        independence_poly::<u64>(tree).into_iter().map(BigUint::from).collect()
    } else {
        independence_poly::<BigUint>(tree)
    };
    CountSequence::new(terms).expect("nonempty")
}

/// Same as [`independence_sequence`] but with machine words; `None` when the
/// tree is too large for `u64` counts.
pub fn independence_sequence_u64(tree: &Tree) -> Option<Vec<u64>> {
    (tree.n <= 60).then(|| independence_poly::<u64>(tree))
}

/// Maximum matching size, by greedily matching leaves to their parents.
pub fn matching_number(tree: &Tree) -> usize {
    let (order, parent) = tree.bfs_from(0);
    let mut matched = vec![false; tree.n];
    let mut mu = 0;
    for &v in order.iter().rev() {
        let p = parent[v];
        if p != usize::MAX && !matched[v] && !matched[p] {
            matched[v] = true;
            matched[p] = true;
            mu += 1;
        }
    }
    mu
}

/// Minimum size of a maximal (by inclusion) independent set, i.e. the
/// independent domination number.
pub fn min_maximal_independent_set(tree: &Tree) -> usize {
    const INF: usize = usize::MAX / 4;
    let (order, parent) = tree.bfs_from(0);
    let adj = tree.adjacency();
    // in_set: v chosen; dominated: v out, some child chosen;
    // open: v out, no child chosen (a parent must cover v)
    let mut in_set = vec![0usize; tree.n];
    let mut dominated = vec![0usize; tree.n];
    let mut open = vec![0usize; tree.n];
    for &v in order.iter().rev() {
        let children = adj[v].iter().filter(|&&w| w != parent[v]);
        let mut a = 1usize;
        let mut b_base = 0usize;
        let mut b_extra = INF;
        let mut u = 0usize;
        for &c in children {
            a = a.saturating_add(dominated[c].min(open[c]));
            let best = in_set[c].min(dominated[c]);
            b_base = b_base.saturating_add(best);
            b_extra = b_extra.min(in_set[c].saturating_sub(best));
            u = u.saturating_add(dominated[c]);
        }
        in_set[v] = a.min(INF);
        dominated[v] = b_base.saturating_add(b_extra).min(INF);
        open[v] = u.min(INF);
    }
    let root = order[0];
    in_set[root].min(dominated[root])
}

/// Structural summary of a tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub iseq: CountSequence,
    pub alpha: usize,
    pub mu: usize,
    pub min_maximal_is: usize,
}

pub fn tree_stats(tree: &Tree) -> TreeStats {
    let iseq = independence_sequence(tree);
    let alpha = iseq.degree();
    TreeStats { iseq, alpha, mu: matching_number(tree), min_maximal_is: min_maximal_independent_set(tree) }
}

/// Number of vertices neither in `set` nor adjacent to it.
pub fn count_extensions(tree: &Tree, set: &[u32]) -> Result<usize, TreeError> {
    let n = tree.n;
    let mut member = vec![false; n];
    for &v in set {
        if v == 0 || v as usize > n {
            return Err(TreeError::VertexOutOfRange { vertex: v, n });
        }
        member[v as usize - 1] = true;
    }
    let mut blocked = member.clone();
    for &(u, v) in &tree.edges {
        let (a, b) = (u as usize - 1, v as usize - 1);
        if member[a] && member[b] {
            return Err(TreeError::NotIndependent(u, v));
        }
        if member[a] {
            blocked[b] = true;
        }
        if member[b] {
            blocked[a] = true;
        }
    }
    Ok(blocked.iter().filter(|&&x| !x).count())
}
