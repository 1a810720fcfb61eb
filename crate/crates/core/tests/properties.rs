use std::collections::HashSet;

use gnb::features::{sample_iid_features, synthesize_parametric, GaussianSpec, SynthParams};
use gnb::graph::{bfs, giant_component, is_connected, watts_strogatz};
use gnb::io::{load_dataset, save_dataset};
use gnb::nn::{
    forward, normalize_adjacency, GcnConfig, MlpConfig, ModelConfig, ModelKind, Tensor2,
};
use gnb::split::{link_split, SplitRatios};
use gnb::sweep::{feature_grid, sample_configs, SearchSpace};
use gnb::train::{roc_auc, MetricSummary};
use gnb::{slice_features, FeatureMatrix, Graph, GraphDataset, Provenance, WsParams};
use proptest::prelude::*;

fn ws_params() -> impl Strategy<Value = WsParams> {
    (3usize..60, 1usize..4, 0.0f64..=1.0, any::<u64>()).prop_filter_map(
        "lattice must fit",
        |(n, half_k, beta, seed)| {
            let k = 2 * half_k;
            (k < n).then_some(WsParams { n, k, beta, seed })
        },
    )
}

fn edge_list() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1usize..14).prop_flat_map(|n| {
        let pairs = proptest::collection::vec((0..n, 0..n), 0..40);
        (Just(n), pairs)
    })
}

fn simple_graph((n, pairs): (usize, Vec<(usize, usize)>)) -> Graph {
    let mut set = HashSet::new();
    for (a, b) in pairs {
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    }
    let edges: Vec<_> = set.into_iter().collect();
    Graph::from_edges(n, &edges).unwrap()
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn ws_output_is_simple_with_nk_over_2_edges(p in ws_params()) {
        let g = watts_strogatz(p).unwrap();
        prop_assert_eq!(g.num_edges(), p.n * p.k / 2);
        let mut seen = HashSet::new();
        for &(u, v) in g.edges() {
            prop_assert!(u < v && v < p.n);
            prop_assert!(seen.insert((u, v)));
        }
        let degree_sum: usize = (0..p.n).map(|u| g.degree(u)).sum();
        prop_assert_eq!(degree_sum, 2 * g.num_edges());
    }

    #[test]
    fn ws_same_seed_same_graph(p in ws_params()) {
        prop_assert_eq!(watts_strogatz(p).unwrap(), watts_strogatz(p).unwrap());
    }

    #[test]
    fn bfs_tree_is_consistent(input in edge_list(), root_pick in any::<prop::sample::Index>()) {
        let g = simple_graph(input);
        let root = root_pick.index(g.num_nodes());
        let t = bfs(&g, root).unwrap();
        prop_assert_eq!(t.dist[root], Some(0));
        for v in 0..g.num_nodes() {
            match (t.dist[v], t.parent[v]) {
                (Some(0), None) => prop_assert_eq!(v, root),
                (Some(d), Some(p)) => {
                    prop_assert!(g.has_edge(p, v));
                    prop_assert_eq!(t.dist[p], Some(d - 1));
                    let smallest = g.neighbors(v).iter().copied()
                        .filter(|&u| t.dist[u] == Some(d - 1)).min();
                    prop_assert_eq!(Some(p), smallest);
                }
                (None, None) => {}
                other => prop_assert!(false, "inconsistent node {}: {:?}", v, other),
            }
        }
        for level in &t.levels {
            prop_assert!(level.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn giant_component_is_connected_and_largest(input in edge_list()) {
        let g = simple_graph(input);
        let (gc, map) = giant_component(&g).unwrap();
        prop_assert!(is_connected(&gc));
        prop_assert_eq!(map.iter().filter(|m| m.is_some()).count(), gc.num_nodes());
        for root in 0..g.num_nodes() {
            prop_assert!(bfs(&g, root).unwrap().reachable() <= gc.num_nodes());
        }
    }

    #[test]
    fn zero_gamma_unit_nu_equals_iid(input in edge_list(), seed in any::<u64>(), dim in 1usize..6) {
        let g = simple_graph(input);
        let (g, _) = giant_component(&g).unwrap();
        let dist = GaussianSpec::new(dim).unwrap();
        let p = SynthParams { dist, root: 0, gamma: 0.0, nu: 1.0, seed };
        let para = synthesize_parametric(&g, &p).unwrap();
        let iid = sample_iid_features(g.num_nodes(), dist, seed).unwrap();
        prop_assert_eq!(para, iid);
    }

    #[test]
    fn roc_auc_bounds_and_symmetry(
        scores in proptest::collection::vec(-5i32..5, 2..60),
        flips in proptest::collection::vec(any::<bool>(), 60),
    ) {
        let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
        let labels: Vec<bool> = flips[..scores.len()].to_vec();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let auc = roc_auc(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&auc));
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((roc_auc(&neg, &labels).unwrap() - (1.0 - auc)).abs() < 1e-12);
    }

    #[test]
    fn summary_is_order_invariant(mut values in proptest::collection::vec(-1e3f64..1e3, 1..20)) {
        let a = MetricSummary::from_values(values.clone()).unwrap();
        values.reverse();
        let b = MetricSummary::from_values(values).unwrap();
        prop_assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        prop_assert_eq!(a.std.to_bits(), b.std.to_bits());
        prop_assert!(a.std >= 0.0);
    }

    #[test]
    fn sweep_sampling_is_deterministic(seed in any::<u64>(), budget in 1usize..30) {
        let space = SearchSpace::default();
        prop_assert_eq!(sample_configs(&space, budget, seed), sample_configs(&space, budget, seed));
    }

    #[test]
    fn feature_grid_is_increment_multiples_plus_cols(cols in 1usize..3000, inc in 1usize..500) {
        prop_assume!(inc <= cols);
        let grid = feature_grid(cols, inc).unwrap();
        prop_assert_eq!(*grid.last().unwrap(), cols);
        prop_assert!(grid.windows(2).all(|w| w[0] < w[1]));
        for (i, &x) in grid[..grid.len() - 1].iter().enumerate() {
            prop_assert_eq!(x, (i + 1) * inc);
        }
        prop_assert_eq!(grid.len(), cols.div_ceil(inc));
    }
}

fn small_dataset(seed: u64, n: usize, d: usize, labelled: bool) -> GraphDataset {
    let g = watts_strogatz(WsParams { n, k: 4, beta: 0.3, seed }).unwrap();
    let f = sample_iid_features(n, GaussianSpec::new(d).unwrap(), seed).unwrap();
    let f = gnb::io::quantize_f32(f);
    let labels = labelled.then(|| (0..n).map(|i| i % 3).collect());
    GraphDataset::new("prop", g, f, labels, Provenance::default()).unwrap()
}

proptest! {
    #![proptest_config(config(20))]

    #[test]
    fn save_load_round_trip_is_bit_exact(seed in any::<u64>(), n in 6usize..40, d in 1usize..8, labelled in any::<bool>()) {
        let ds = small_dataset(seed, n, d, labelled);
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        prop_assert_eq!(&back.graph, &ds.graph);
        prop_assert_eq!(&back.labels, &ds.labels);
        let same = back.features.data().iter().zip(ds.features.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
    }

    #[test]
    fn link_split_partitions_edges(seed in any::<u64>(), n in 30usize..80) {
        let ds = small_dataset(seed, n, 2, false);
        let s = link_split(&ds, SplitRatios::default(), seed).unwrap();
        let mut all: Vec<_> = s.train_pos.iter().chain(&s.val_pos).chain(&s.test_pos).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all.as_slice(), ds.graph.edges());
        for &(u, v) in s.val_neg.iter().chain(&s.test_neg) {
            prop_assert!(u != v && !ds.graph.has_edge(u, v));
        }
        let val: HashSet<_> = s.val_neg.iter().collect();
        prop_assert!(s.test_neg.iter().all(|p| !val.contains(p)));
        prop_assert_eq!(s.message_graph.num_edges(), s.train_pos.len());
        prop_assert_eq!(s.val_neg.len(), s.val_pos.len());
        prop_assert_eq!(s.test_neg.len(), s.test_pos.len());
    }

    #[test]
    fn slices_nest(seed in any::<u64>(), a in 1usize..8, b in 1usize..8) {
        prop_assume!(a < b);
        let ds = small_dataset(seed, 10, 8, false);
        let wide = slice_features(&ds, b).unwrap();
        let narrow = slice_features(&ds, a).unwrap();
        prop_assert_eq!(&slice_features(&wide, a).unwrap().features, &narrow.features);
    }

    #[test]
    fn gcn_is_permutation_equivariant(seed in any::<u64>(), perm_seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let ds = small_dataset(seed, 12, 3, false);
        let mut perm: Vec<usize> = (0..12).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
        let pg = ds.graph.permuted(&perm).unwrap();
        let mut px = FeatureMatrix::zeros(12, 3);
        for (i, &p) in perm.iter().enumerate() {
            px.row_mut(p).copy_from_slice(ds.features.row(i));
        }
        let cfg = ModelConfig::Gcn(GcnConfig { in_dim: 3, hidden_dim: 5, out_dim: 2, num_layers: 2, dropout: 0.0, self_loops: true, bias: true });
        let params = cfg.init_params(seed).unwrap();
        let t = |f: &FeatureMatrix| Tensor2::from_vec(12, 3, f.data().to_vec()).unwrap();
        let out = forward(&cfg, &params, Some(&normalize_adjacency(&ds.graph, true)), &t(&ds.features), None).unwrap();
        let pout = forward(&cfg, &params, Some(&normalize_adjacency(&pg, true)), &t(&px), None).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            for c in 0..2 {
                prop_assert!((out.get(i, c) - pout.get(p, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gcn_on_empty_graph_equals_mlp(seed in any::<u64>(), layers in 1usize..4) {
        let g = Graph::from_edges(7, &[]).unwrap();
        let x = sample_iid_features(7, GaussianSpec::new(4).unwrap(), seed).unwrap();
        let x = Tensor2::from_vec(7, 4, x.data().to_vec()).unwrap();
        let gcn = ModelConfig::Gcn(GcnConfig { in_dim: 4, hidden_dim: 6, out_dim: 3, num_layers: layers, dropout: 0.0, self_loops: true, bias: true });
        let mlp = ModelConfig::Mlp(MlpConfig { in_dim: 4, hidden_dims: vec![6; layers - 1], out_dim: 3, dropout: 0.0, activation: Default::default(), weight_init: Default::default(), bias: true });
        prop_assert_eq!(gcn.kind(), ModelKind::Gcn);
        let params = gcn.init_params(seed).unwrap();
        let a = forward(&gcn, &params, Some(&normalize_adjacency(&g, true)), &x, None).unwrap();
        let b = forward(&mlp, &params, None, &x, None).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-12);
    }
}
