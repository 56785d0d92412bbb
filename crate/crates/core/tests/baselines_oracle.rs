mod common;

use common::{bitmask_minimizers, exact_keep, random_similarity, rng, subset_objective};
use filterprune::baselines::{cs_prune, gm_scores, l1_scores};
use filterprune::centrality::{prune_order, rank_filters};
use filterprune::oracle::{choose, optimal_subset, retained_similarity, DEFAULT_LIMIT};
use filterprune::similarity::SimilarityMatrix;
use filterprune::FilterSet;
use rand::Rng;

fn random_filters(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> FilterSet {
    let data = (0..n * 9).map(|_| r.gen_range(-1.0..1.0)).collect();
    FilterSet::new(n, 3, 3, 1, data).unwrap()
}

#[test]
fn l1_order_invariant_under_common_scale() {
    let mut r = rng(1);
    for _ in 0..50 {
        let fs = random_filters(&mut r, 10);
        let mut scaled = fs.clone();
        let c = r.gen_range(0.1..20.0);
        (0..10).for_each(|i| scaled.scale_filter(i, c));
        assert_eq!(
            prune_order(&l1_scores(&fs).scores),
            prune_order(&l1_scores(&scaled).scores)
        );
    }
}

#[test]
fn gm_farthest_filter_outlasts_nearest() {
    let mut r = rng(2);
    for _ in 0..50 {
        let fs = random_filters(&mut r, 8);
        let scores = gm_scores(&fs).unwrap();
        let far = (0..8).min_by(|&a, &b| scores.scores[a].total_cmp(&scores.scores[b])).unwrap();
        let near = (0..8).max_by(|&a, &b| scores.scores[a].total_cmp(&scores.scores[b])).unwrap();
        for p in [0.125, 0.25, 0.5, 0.75, 0.875] {
            let sel = rank_filters(&scores, p).unwrap();
            assert!(!(sel.prune.contains(&far) && !sel.prune.contains(&near)));
        }
    }
}

#[test]
fn cs_budget_exact() {
    let mut r = rng(3);
    for n in 1..=40 {
        let w = SimilarityMatrix::from_dense(n, &random_similarity(&mut r, n));
        let norms: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..5.0)).collect();
        for (num, den) in [(0, 4), (1, 4), (1, 3), (2, 4), (3, 4), (4, 4)] {
            let out = cs_prune(&w, &norms, num as f64 / den as f64).unwrap();
            assert_eq!(out.selection.keep.len(), exact_keep(n, num, den));
            assert_eq!(out.trace.len(), out.selection.prune.len());
        }
    }
}

#[test]
fn oracle_agrees_with_bitmask_enumeration() {
    let mut r = rng(4);
    for trial in 0..100 {
        let n = 2 + trial % 9;
        let dense = random_similarity(&mut r, n);
        let w = SimilarityMatrix::from_dense(n, &dense);
        for (num, den) in [(1, 4), (2, 4), (3, 4)] {
            let p = num as f64 / den as f64;
            let k = exact_keep(n, num, den);
            let got = optimal_subset(&w, p, DEFAULT_LIMIT).unwrap();
            let (best, ties) = bitmask_minimizers(&dense, n, k, 1e-12);
            assert_eq!(got.keep, ties[0], "n={n} p={p}");
            assert!((got.objective - best).abs() <= 1e-12);
            assert!((got.objective - subset_objective(&dense, n, &got.keep)).abs() <= 1e-12);
            assert_eq!(got.subsets_examined, choose(n, k));
        }
    }
}

#[test]
fn oracle_never_worse_than_heuristics() {
    let mut r = rng(5);
    for _ in 0..50 {
        let n = 10;
        let w = SimilarityMatrix::from_dense(n, &random_similarity(&mut r, n));
        let best = optimal_subset(&w, 0.5, DEFAULT_LIMIT).unwrap();
        let wdc = rank_filters(&filterprune::centrality::wdc_scores(&w), 0.5).unwrap();
        assert!(best.objective <= retained_similarity(&w, &wdc.keep) + 1e-12);
    }
}

#[test]
fn oracle_limit_twenty_runs() {
    let mut r = rng(6);
    let w = SimilarityMatrix::from_dense(20, &random_similarity(&mut r, 20));
    let got = optimal_subset(&w, 0.5, DEFAULT_LIMIT).unwrap();
    assert_eq!(got.subsets_examined, 184_756);
    assert_eq!(got.keep.len(), 10);
}
