use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use treeseq_core::asymptotics::sup_ratio;
use treeseq_core::certifier::{check_cell, check_p, kernel, DyadicInterval, Kernel, DEFAULT_MARGIN};
use treeseq_core::counts::{e_nkt, f_nkt_stirling};
use treeseq_core::seq::is_ordered_log_concave;
use treeseq_core::tree::{enumerate_free_trees, independence_sequence, random_tree, tree_from_levels};
use treeseq_core::{Enclosure, GridCell, Regime};

fn trees(c: &mut Criterion) {
    let mut g = c.benchmark_group("tree");
    for n in [100, 1000] {
        let t = random_tree(n, 7);
        g.bench_with_input(BenchmarkId::new("independence_sequence", n), &t, |b, t| {
            b.iter(|| independence_sequence(black_box(t)))
        });
    }
    g.bench_function("enumerate_olc_n14", |b| {
        b.iter(|| {
            let mut it = enumerate_free_trees(14).unwrap();
            let mut ok = 0usize;
            while let Some(lv) = it.next_levels() {
                ok += is_ordered_log_concave(&independence_sequence(&tree_from_levels(&lv))) as usize;
            }
            ok
        })
    });
    g.finish();
}

fn counts(c: &mut Criterion) {
    let mut g = c.benchmark_group("counts");
    g.bench_function("e_nkt_25_8_6", |b| b.iter(|| e_nkt(black_box(25), 8, 6)));
    g.bench_function("f_nkt_stirling_25_8_6", |b| b.iter(|| f_nkt_stirling(black_box(25), 8, 6)));
    g.finish();
}

fn certifier(c: &mut Criterion) {
    let mut g = c.benchmark_group("certifier");
    let cell = GridCell::new(Regime::Head, 1000, 250, 120).unwrap();
    g.bench_function("cell_head_1000", |b| b.iter(|| check_cell(black_box(&cell), DEFAULT_MARGIN)));
    g.bench_function("row_head_1000_250", |b| {
        b.iter(|| check_p(Regime::Head, 1000, black_box(250), DEFAULT_MARGIN, false))
    });
    let x = Enclosure::point(0.37);
    g.bench_function("exp_f64", |b| b.iter(|| kernel::exp(black_box(&x))));
    for bits in [128u32, 256] {
        let y = DyadicInterval::from_f64(bits, 0.37);
        g.bench_with_input(BenchmarkId::new("exp_dyadic", bits), &y, |b, y| b.iter(|| kernel::exp(black_box(y))));
    }
    g.finish();
}

fn asymptotics(c: &mut Criterion) {
    c.bench_function("sup_ratio_head_0.28", |b| b.iter(|| sup_ratio(Regime::Head, black_box(0.28))));
}

criterion_group!(benches, trees, counts, certifier, asymptotics);
criterion_main!(benches);
