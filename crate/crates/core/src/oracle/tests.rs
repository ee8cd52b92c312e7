use super::fixtures::{self, L1, L2, L3, X1, X2, X3};
use super::random::{hypothesis_touching, random_graph, random_update, GraphShape};
use super::*;
use crate::belief::SuffixPolicy;
use crate::factorgraph::LinearFactor;
use crate::ordering::{ClassCount, Tactic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn set(xs: &[usize]) -> BTreeSet<usize> {
    xs.iter().copied().collect()
}

fn chain(n: u32) -> FactorGraph {
    let mut g = FactorGraph::new();
    let vars: Vec<_> = (0..n).map(|i| VariableId::new(i, 1)).collect();
    for &v in &vars {
        g.add_variable(v, None).unwrap();
    }
    g.add_factor(LinearFactor::unary(vars[0], vec![1.0], vec![0.0]).unwrap()).unwrap();
    for w in vars.windows(2) {
        g.add_factor(LinearFactor::new(w.to_vec(), vec![vec![-1.0], vec![1.0]], vec![0.0]).unwrap())
            .unwrap();
    }
    g
}

#[test]
fn chain_eliminates_without_fill() {
    let g = chain(5);
    let order = StateOrder::new(g.variables().to_vec()).unwrap();
    let fp = symbolic_eliminate(&g, &order).unwrap();
    for (i, d) in fp.deps.iter().enumerate() {
        let expected = if i + 1 < 5 { set(&[i + 1]) } else { set(&[]) };
        assert_eq!(*d, expected);
    }
}

#[test]
fn fixture_bayes_net_under_alternative_order() {
    let (g, _) = fixtures::base();
    let order = StateOrder::new(vec![X1, L2, X2, L1, X3, L3]).unwrap();
    let fp = symbolic_eliminate(&g, &order).unwrap();
    // positions: x1 l2 x2 l1 x3 l3
    let expected = vec![
        set(&[1, 2, 3]),
        set(&[2, 3, 4]),
        set(&[3, 4]),
        set(&[4]),
        set(&[5]),
        set(&[]),
    ];
    assert_eq!(fp.deps, expected);
}

#[test]
fn hub_first_star_fills_all_leaf_pairs() {
    let leaves = 5;
    let mut g = FactorGraph::new();
    let hub = VariableId::new(0, 1);
    g.add_variable(hub, None).unwrap();
    g.add_factor(LinearFactor::unary(hub, vec![1.0], vec![0.0]).unwrap()).unwrap();
    for i in 1..=leaves {
        let v = VariableId::new(i, 1);
        g.add_variable(v, None).unwrap();
        g.add_factor(LinearFactor::new(vec![hub, v], vec![vec![1.0], vec![1.0]], vec![0.0]).unwrap())
            .unwrap();
    }
    let order = StateOrder::new(g.variables().to_vec()).unwrap();
    let fp = symbolic_eliminate(&g, &order).unwrap();
    let pattern = PatternGraph::from_factors(order.variables(), g.factors()).unwrap();
    let l = leaves as usize;
    assert_eq!(fp.fill_in(&pattern), l * (l - 1) / 2);
}

#[test]
fn dense_reference_of_identity_system() {
    let mut g = FactorGraph::new();
    let v = VariableId::new(0, 3);
    g.add_variable(v, None).unwrap();
    g.add_factor(
        LinearFactor::unary(v, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0])
            .unwrap(),
    )
    .unwrap();
    let order = StateOrder::new(vec![v]).unwrap();
    let dr = dense_reference(&g, &order).unwrap();
    assert_eq!(dr.r, DMatrix::identity(3, 3));
    assert_eq!(dr.delta, vec![1.0, 2.0, 3.0]);
    assert_eq!(dr.log_abs_det, 0.0);
}

#[test]
fn dense_reference_agrees_with_sparse_core() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, GraphShape::default());
        let order = StateOrder::new(g.variables().to_vec()).unwrap();
        let b = SqrtBelief::build(&g, order.clone()).unwrap();
        let dr = dense_reference(&g, &order).unwrap();
        let sparse = to_dmatrix(&b.r().sign_normalized());
        assert!((sparse - &dr.r).amax() < 1e-9);
        assert!((b.log_abs_det().unwrap() - dr.log_abs_det).abs() < 1e-10);

        let mut perm: Vec<usize> = (0..order.len()).collect();
        perm.reverse();
        let reversed = dense_reference(&g, &order.permuted(&perm)).unwrap();
        assert!((reversed.log_abs_det - dr.log_abs_det).abs() < 1e-10);
    }
}

#[test]
fn single_hypothesis_is_solved_by_pivot_one() {
    let (g, order) = fixtures::base();
    let b = SqrtBelief::build(&g, order.clone()).unwrap();
    let hyps = [fixtures::right()];
    let (best, _) = brute_force_total_affected(&order, &hyps);
    assert_eq!(best, 2);
    let p1 = Tactic::pivot(ClassCount::Count(1)).compute_order(&b, &hyps).unwrap().unwrap();
    assert_eq!(total_affected(&p1, &hyps), best);
}

#[test]
fn pivot_max_is_optimal_on_fixture() {
    let (g, order) = fixtures::base();
    let b = SqrtBelief::build(&g, order.clone()).unwrap();
    let hyps = [fixtures::right(), fixtures::left()];
    let (best, _) = brute_force_total_affected(&order, &hyps);
    let pm = Tactic::pivot(ClassCount::Max).compute_order(&b, &hyps).unwrap().unwrap();
    assert_eq!(best, 5);
    assert_eq!(total_affected(&pm, &hyps), best);
    assert_eq!(total_affected(&order, &hyps), 7);
}

#[test]
fn adversarial_instance_reports_a_gap() {
    // One variable shared by many single-variable hypotheses, while a pair of
    // variables is shared by a few hypotheses each. Level sorting can put a
    // frequently involved singleton after variables that always come in pairs.
    let mut g = FactorGraph::new();
    let vars: Vec<_> = (0..5).map(|i| VariableId::new(i, 1)).collect();
    for &v in &vars {
        g.add_variable(v, None).unwrap();
        g.add_factor(LinearFactor::unary(v, vec![1.0], vec![0.0]).unwrap()).unwrap();
    }
    let order = StateOrder::new(vars.clone()).unwrap();
    let b = SqrtBelief::build(&g, order.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut hyps = Vec::new();
    for _ in 0..3 {
        hyps.push(hypothesis_touching(&mut rng, &g, &[vars[0], vars[1]]));
    }
    for _ in 0..2 {
        hyps.push(hypothesis_touching(&mut rng, &g, &[vars[2]]));
    }
    let (best, _) = brute_force_total_affected(&order, &hyps);
    let pm = Tactic::pivot(ClassCount::Max).compute_order(&b, &hyps).unwrap().unwrap();
    let got = total_affected(&pm, &hyps);
    assert!(got >= best);
    assert!(got <= total_affected(&order, &hyps));
    // levels: v0=v1=3, v2=2 → PIVOT_max puts v2 before the pair: 3·2 + 2·3 = 12,
    // while [v0 v1] before v2 costs 3·3 + 2·1 = 11
    assert_eq!((best, got), (11, 12));
}

#[test]
fn incremental_elimination_reuses_the_prefix() {
    for seed in 0..40 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let g = random_graph(&mut rng, GraphShape::default());
        let order = StateOrder::new(g.variables().to_vec()).unwrap();
        let before = symbolic_eliminate(&g, &order).unwrap();
        let (n_new, n_links) = (rng.random_range(1..3), rng.random_range(0..3));
        let u = random_update(&mut rng, &g, n_new, n_links, 2);
        let b = SqrtBelief::build(&g, order.clone()).unwrap();
        let (after, report) = b.incremental_update(&u, SuffixPolicy::Keep).unwrap();
        let j = after.order().var_at_scalar(report.j_scalar.min(after.scalar_dim() - 1));
        let full = symbolic_eliminate(after.graph(), after.order()).unwrap();
        let inc = symbolic_eliminate_incremental(&before, after.graph(), after.order(), j).unwrap();
        assert_eq!(inc, full, "seed {seed}");
        assert_eq!(block_pattern(&after), full, "seed {seed}");
    }
}

#[test]
fn reverse_order_has_gap_against_brute_force_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let shape = GraphShape {
            n_vars: 6,
            max_dim: 1,
            extra_factors: 3,
            max_arity: 2,
        };
        let g = random_graph(&mut rng, shape);
        let order = StateOrder::new(g.variables().to_vec()).unwrap();
        let hyps = super::random::random_hypotheses(&mut rng, &g, 3, 3);
        let (best, arg) = brute_force_total_affected(&order, &hyps);
        assert_eq!(total_affected(&arg, &hyps), best);
        assert!(best <= total_affected(&order, &hyps));
    }
}

#[test]
fn fixture_variables_are_all_distinct() {
    let (g, _) = fixtures::base();
    assert_eq!(g.variables(), &[X1, L1, X2, L2, X3, L3]);
}
