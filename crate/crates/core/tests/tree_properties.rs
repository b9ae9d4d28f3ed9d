use std::collections::{BTreeMap, HashSet};

use proptest::prelude::*;
use treeseq_core::seq::binomial;
use treeseq_core::tree::*;
use treeseq_core::CountSequence;

fn adjacency_masks(t: &Tree) -> Vec<u32> {
    let mut nbr = vec![0u32; t.n()];
    for &(u, v) in t.edges() {
        nbr[u as usize - 1] |= 1 << (v - 1);
        nbr[v as usize - 1] |= 1 << (u - 1);
    }
    nbr
}

fn is_independent(nbr: &[u32], set: u32) -> bool {
    (0..nbr.len()).all(|v| set & (1 << v) == 0 || nbr[v] & set == 0)
}

/// Subset enumeration: independence sequence and the smallest maximal
/// independent set.
fn brute_force(t: &Tree) -> (CountSequence, usize) {
    let n = t.n();
    let nbr = adjacency_masks(t);
    let full = (1u32 << n) - 1;
    let mut counts = vec![0u64; n + 1];
    let mut min_maximal = usize::MAX;
    for set in 0..=full {
        if !is_independent(&nbr, set) {
            continue;
        }
        counts[set.count_ones() as usize] += 1;
        let closed = (0..n).filter(|&v| set & (1 << v) != 0).fold(set, |acc, v| acc | nbr[v]);
        if closed == full {
            min_maximal = min_maximal.min(set.count_ones() as usize);
        }
    }
    while counts.len() > 1 && counts[counts.len() - 1] == 0 {
        counts.pop();
    }
    (CountSequence::from_u64s(&counts).unwrap(), min_maximal)
}

/// AHU canonical string of the tree rooted at its center(s).
fn canonical(t: &Tree) -> String {
    let n = t.n();
    let adj = t.adjacency();
    if n <= 2 {
        return format!("n{n}");
    }
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut layer: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut left = n;
    while left > 2 {
        left -= layer.len();
        let mut next = Vec::new();
        for &v in &layer {
            for &w in &adj[v] {
                degree[w] -= 1;
                if degree[w] == 1 {
                    next.push(w);
                }
            }
        }
        layer = next;
    }
    fn encode(adj: &[Vec<usize>], v: usize, parent: usize) -> String {
        let mut kids: Vec<String> = adj[v].iter().filter(|&&w| w != parent).map(|&w| encode(adj, w, v)).collect();
        kids.sort();
        format!("({})", kids.concat())
    }
    layer.iter().map(|&c| encode(&adj, c, usize::MAX)).min().unwrap()
}

fn for_each_free_tree(n: usize, mut f: impl FnMut(Tree)) {
    let mut it = enumerate_free_trees(n).unwrap();
    while let Some(lv) = it.next_levels() {
        f(tree_from_levels(&lv));
    }
}

#[test]
fn free_trees_match_labelled_dedup() {
    for n in 2..=8usize {
        let mut classes = HashSet::new();
        let total = (n as u64).pow(n as u32 - 2);
        for code in 0..total {
            let mut c = code;
            let symbols: Vec<u32> = (0..n - 2)
                .map(|_| {
                    let s = (c % n as u64) as u32 + 1;
                    c /= n as u64;
                    s
                })
                .collect();
            classes.insert(canonical(&prufer_decode(&PruferCode::new(n, symbols).unwrap())));
        }
        let mut enumerated = HashSet::new();
        for_each_free_tree(n, |t| {
            assert!(enumerated.insert(canonical(&t)), "duplicate class at n={n}");
        });
        assert_eq!(enumerated, classes, "n={n}");
    }
    let counts = [(7, 11), (10, 106), (14, 3159), (16, 19320)];
    for (n, expected) in counts {
        let mut seen = HashSet::new();
        for_each_free_tree(n, |t| {
            assert!(seen.insert(canonical(&t)));
        });
        assert_eq!(seen.len(), expected, "n={n}");
    }
}

#[test]
fn dp_matches_subsets_on_all_small_trees() {
    for n in 1..=12 {
        for_each_free_tree(n, |t| {
            let (seq, min_maximal) = brute_force(&t);
            let stats = tree_stats(&t);
            assert_eq!(stats.iseq, seq, "{}", t.to_text());
            assert_eq!(stats.min_maximal_is, min_maximal, "{}", t.to_text());
            assert_eq!(stats.alpha + stats.mu, n);
            assert_eq!(independence_sequence_u64(&t).map(|v| CountSequence::from_u64s(&v).unwrap()), Some(seq));
        });
    }
}

#[test]
fn min_maximal_matches_subsets_at_14() {
    for seed in 0..300 {
        let t = random_tree(13 + (seed % 2) as usize, seed);
        let (seq, min_maximal) = brute_force(&t);
        let stats = tree_stats(&t);
        assert_eq!(stats.iseq, seq);
        assert_eq!(stats.min_maximal_is, min_maximal);
    }
}

#[test]
fn counting_edges_identity_via_extensions() {
    for seed in 0..200 {
        let n = 1 + (seed % 12) as usize;
        let t = random_tree(n, seed);
        let nbr = adjacency_masks(&t);
        let s = independence_sequence(&t);
        let mut sums = vec![0usize; n + 2];
        for set in 0u32..1 << n {
            if is_independent(&nbr, set) {
                let members: Vec<u32> = (0..n as u32).filter(|&v| set & (1 << v) != 0).map(|v| v + 1).collect();
                sums[members.len()] += count_extensions(&t, &members).unwrap();
            }
        }
        for (j, &sum) in sums.iter().enumerate().take(n + 1) {
            let next = s.terms().get(j + 1).cloned().unwrap_or_default();
            assert_eq!(num_bigint::BigUint::from(sum), next * (j + 1), "seed {seed} j {j}");
        }
    }
}

#[test]
fn wingard_bound_on_random_trees() {
    for seed in 0..200 {
        let n = 2 + (seed % 60) as usize;
        let s = independence_sequence(&random_tree(n, seed));
        for k in 0..=n {
            let term = s.terms().get(k).cloned().unwrap_or_default();
            assert!(term >= binomial((n + 1 - k) as u64, k as u64));
        }
    }
}

#[test]
fn sampler_is_uniform_on_four_vertices() {
    // 16 labelled trees on 4 vertices, each should appear with probability 1/16
    let draws = 32_000u64;
    let mut freq: BTreeMap<Vec<(u32, u32)>, u64> = BTreeMap::new();
    for i in 0..draws {
        let t = random_tree_indexed(4, 99, i);
        let mut e: Vec<(u32, u32)> = t.edges().iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        e.sort();
        *freq.entry(e).or_default() += 1;
    }
    assert_eq!(freq.len(), 16);
    let expected = draws as f64 / 16.0;
    let chi2: f64 = freq.values().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    // 99.9% quantile of chi-square with 15 degrees of freedom
    assert!(chi2 < 37.7, "chi2 = {chi2}");
}

#[test]
fn indexed_sampling_is_order_free() {
    let forward: Vec<Tree> = (0..20).map(|i| random_tree_indexed(50, 5, i)).collect();
    let backward: Vec<Tree> = (0..20).rev().map(|i| random_tree_indexed(50, 5, i)).collect();
    assert!(forward.iter().eq(backward.iter().rev()));
    assert_ne!(forward[0], forward[1]);
}

/// Three branches hung from a root, with 4, 3 and 3 pendant paths of
/// length two. Found by the exhaustive search at 24 vertices.
#[test]
fn olc_fails_on_a_24_vertex_tree() {
    let edges = [
        (1, 2),
        (1, 11),
        (1, 18),
        (2, 3),
        (2, 5),
        (2, 7),
        (2, 9),
        (3, 4),
        (5, 6),
        (7, 8),
        (9, 10),
        (11, 12),
        (11, 14),
        (11, 16),
        (12, 13),
        (14, 15),
        (16, 17),
        (18, 19),
        (18, 21),
        (18, 23),
        (19, 20),
        (21, 22),
        (23, 24),
    ];
    let t = Tree::new(24, edges.to_vec()).unwrap();
    let s = independence_sequence(&t);
    let expected = [1, 24, 253, 1553, 6193, 16912, 32389, 43650, 40711, 25144, 9348, 1653, 42, 1];
    assert_eq!(s, CountSequence::from_u64s(&expected).unwrap());
    assert_eq!(brute_force(&t).0, s);
    assert!(treeseq_core::seq::is_log_concave(&s) && treeseq_core::seq::is_unimodal(&s));
    assert_eq!(treeseq_core::seq::ordered_log_concave_violation(&s), Some(12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn prufer_code_roundtrip(n in 2usize..500, seed in any::<u64>()) {
        let t = random_tree(n, seed);
        let code = prufer_encode(&t).unwrap();
        prop_assert_eq!(code.symbols().len(), n - 2);
        let back = prufer_decode(&code);
        prop_assert_eq!(prufer_encode(&back).unwrap(), code);
        let mut a: Vec<(u32, u32)> = t.edges().iter().map(|&(x, y)| (x.min(y), x.max(y))).collect();
        let mut b: Vec<(u32, u32)> = back.edges().iter().map(|&(x, y)| (x.min(y), x.max(y))).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn decode_then_encode(symbols in prop::collection::vec(1u32..=40, 0..38)) {
        let n = symbols.len() + 2;
        let symbols: Vec<u32> = symbols.into_iter().map(|s| (s - 1) % n as u32 + 1).collect();
        let code = PruferCode::new(n, symbols).unwrap();
        prop_assert_eq!(prufer_encode(&prufer_decode(&code)).unwrap(), code);
    }

    #[test]
    fn text_roundtrip(n in 1usize..60, seed in any::<u64>()) {
        let t = random_tree(n, seed);
        prop_assert_eq!(t.to_text().parse::<Tree>().unwrap(), t);
    }
}
