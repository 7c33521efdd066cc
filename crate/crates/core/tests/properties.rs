use std::collections::{BTreeSet, HashMap};
use std::f64::consts::{PI, TAU};

use periomega::interval::{forced_periods, lap_entropy, shark_compare, SharkovskiiOrder};
use periomega::maps::{iterate, Jacobian};
use periomega::recurrence::{recurrent_boxes, TransitionGraph};
use periomega::{MapSystem, PhaseMap, Point};
use petgraph::graph::DiGraph;
use proptest::prelude::*;

fn central_difference(map: &MapSystem, x: Point) -> Vec<Vec<f64>> {
    let dom = map.domain();
    let dim = x.dim();
    (0..dim)
        .map(|j| {
            let h = 1e-6 * x[j].abs().max(1.0);
            let plus = map.eval(x.with(j, x[j] + h)).unwrap();
            let minus = map.eval(x.with(j, x[j] - h)).unwrap();
            let d = dom.diff(plus, minus);
            (0..dim).map(|i| d[i] / (2.0 * h)).collect()
        })
        .collect()
}

fn jacobian_error(map: &MapSystem, x: Point) -> f64 {
    let j: Jacobian = map.jacobian(x);
    let fd = central_difference(map, x);
    let dim = x.dim();
    let mut err: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for i in 0..dim {
        for k in 0..dim {
            err = err.max((j.entry(i, k) - fd[k][i]).abs());
            scale = scale.max(j.entry(i, k).abs());
        }
    }
    err / scale
}

/// Sharkovskii order written out as an explicit list up to `cap`.
fn sharkovskii_sequence(cap: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut pow = 1;
    while pow <= cap {
        out.extend((3..=cap / pow).filter(|m| m % 2 == 1).map(|m| m * pow));
        pow *= 2;
    }
    let mut powers: Vec<u64> = (0..).map(|k| 1u64 << k).take_while(|&p| p <= cap).collect();
    powers.reverse();
    out.extend(powers);
    out
}

fn arb_graph() -> impl Strategy<Value = (usize, Vec<Vec<u32>>)> {
    (1usize..40).prop_flat_map(|n| {
        let succ = proptest::collection::vec(0..n as u32, 0..4);
        (Just(n), proptest::collection::vec(succ, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn quadratic_jacobian_matches_differences(a in -0.25f64..2.0, t in 0.0f64..1.0) {
        let map = MapSystem::quadratic(a).unwrap();
        let d = map.domain().axes[0];
        let x = Point::one(d.lower + t * d.length());
        prop_assert!(jacobian_error(&map, x) < 1e-6);
    }

    #[test]
    fn logistic_jacobian_matches_differences(lambda in 0.5f64..4.0, x in 0.0f64..1.0) {
        let map = MapSystem::logistic(lambda).unwrap();
        prop_assert!(jacobian_error(&map, Point::one(x)) < 1e-6);
    }

    #[test]
    fn henon_jacobian_matches_differences(a in 0.0f64..1.4, b in 0.01f64..0.5, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let map = MapSystem::henon(a, b).unwrap();
        prop_assert!(jacobian_error(&map, Point::two(x, y)) < 1e-6);
    }

    #[test]
    fn sphere_jacobian_matches_differences(lambda in 0.0f64..6.0, theta in 0.0f64..TAU, phi in 0.01f64..3.13) {
        let map = MapSystem::sphere(lambda).unwrap();
        prop_assert!(jacobian_error(&map, Point::two(theta, phi)) < 1e-6);
    }

    #[test]
    fn sphere_map_commutes_with_rotation(lambda in 0.0f64..6.0, alpha in 0.0f64..TAU, theta in 0.0f64..TAU, phi in 0.0f64..PI) {
        let map = MapSystem::sphere(lambda).unwrap();
        let dom = map.domain();
        let rotate = |p: Point| dom.normalize(p.with(0, p[0] + alpha));
        let x = Point::two(theta, phi);
        let lhs = map.eval(rotate(x)).unwrap();
        let rhs = rotate(map.eval(x).unwrap());
        prop_assert!(dom.diff(lhs, rhs).max_abs() < 1e-12);
    }

    #[test]
    fn henon_inverse_undoes_the_map(a in 0.0f64..1.4, b in 0.05f64..1.0, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let map = MapSystem::henon(a, b).unwrap();
        let p = Point::two(x, y);
        let back = map.inverse(map.eval(p).unwrap()).unwrap();
        prop_assert!((back - p).max_abs() < 1e-10);
        let fwd = map.eval(map.inverse(p).unwrap()).unwrap();
        prop_assert!((fwd - p).max_abs() < 1e-10);
    }

    #[test]
    fn iterates_compose(a in 0.0f64..2.0, t in 0.0f64..1.0, m in 0usize..12, n in 0usize..12) {
        let map = MapSystem::quadratic(a).unwrap();
        let d = map.domain().axes[0];
        let x = Point::one(d.lower + t * d.length());
        let joint = iterate(&map, x, m + n).unwrap();
        let split = iterate(&map, iterate(&map, x, m).unwrap(), n).unwrap();
        prop_assert_eq!(joint.coords(), split.coords());
    }

    #[test]
    fn henon_iterates_compose(x in -1.0f64..1.0, y in -1.0f64..1.0, m in 0usize..8, n in 0usize..8) {
        let map = MapSystem::henon(0.5, 0.05).unwrap();
        let p = Point::two(x, y);
        let joint = iterate(&map, p, m + n).unwrap();
        let split = iterate(&map, iterate(&map, p, m).unwrap(), n).unwrap();
        prop_assert_eq!(joint.coords(), split.coords());
    }

    #[test]
    fn sharkovskii_is_a_total_order(m in 1u64..=1000, n in 1u64..=1000, k in 1u64..=1000) {
        let mn = shark_compare(m, n).unwrap();
        let nm = shark_compare(n, m).unwrap();
        prop_assert_eq!(mn == SharkovskiiOrder::Equals, m == n);
        let flipped = match nm {
            SharkovskiiOrder::Precedes => SharkovskiiOrder::Succeeds,
            SharkovskiiOrder::Succeeds => SharkovskiiOrder::Precedes,
            SharkovskiiOrder::Equals => SharkovskiiOrder::Equals,
        };
        prop_assert_eq!(mn, flipped);
        if mn == SharkovskiiOrder::Precedes && shark_compare(n, k).unwrap() == SharkovskiiOrder::Precedes {
            prop_assert_eq!(shark_compare(m, k).unwrap(), SharkovskiiOrder::Precedes);
        }
    }

    #[test]
    fn sharkovskii_matches_explicit_sequence(m in 1u64..=1000, n in 1u64..=1000) {
        let seq = sharkovskii_sequence(1000);
        let pos: HashMap<u64, usize> = seq.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let expected = match pos[&m].cmp(&pos[&n]) {
            std::cmp::Ordering::Less => SharkovskiiOrder::Precedes,
            std::cmp::Ordering::Equal => SharkovskiiOrder::Equals,
            std::cmp::Ordering::Greater => SharkovskiiOrder::Succeeds,
        };
        prop_assert_eq!(shark_compare(m, n).unwrap(), expected);
    }

    #[test]
    fn forced_periods_are_down_closed(n in 1u64..=200, extra in 0u64..200) {
        let cap = n + extra;
        let forced = forced_periods(n, cap).unwrap();
        prop_assert!(forced.contains(&n));
        for &m in &forced {
            let below: BTreeSet<u64> = forced_periods(m, cap).unwrap();
            prop_assert!(below.is_subset(&forced));
        }
    }

    #[test]
    fn recurrence_is_transpose_invariant((n, adj) in arb_graph()) {
        let g = TransitionGraph::from_adjacency("random".into(), 1, n, adj);
        prop_assert_eq!(recurrent_boxes(&g), recurrent_boxes(&g.transpose()));
    }

    #[test]
    fn components_agree_with_petgraph((n, adj) in arb_graph()) {
        let g = TransitionGraph::from_adjacency("random".into(), 1, n, adj);
        let mut oracle = DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..g.node_count()).map(|_| oracle.add_node(())).collect();
        for (u, v) in g.edges() {
            oracle.add_edge(nodes[u as usize], nodes[v as usize], ());
        }
        let mut expected: Vec<Vec<usize>> = petgraph::algo::tarjan_scc(&oracle)
            .into_iter()
            .map(|c| { let mut c: Vec<usize> = c.into_iter().map(|x| x.index()).collect(); c.sort(); c })
            .collect();
        expected.sort();
        let (comp, count) = g.components();
        let mut ours: Vec<Vec<usize>> = vec![Vec::new(); count];
        for (v, &c) in comp.iter().enumerate() {
            ours[c as usize].push(v);
        }
        ours.sort();
        prop_assert_eq!(ours, expected);
    }
}

#[test]
fn lap_entropy_grows_with_the_parameter() {
    let h: Vec<f64> = [1.0, 1.5, 2.0]
        .iter()
        .map(|&a| lap_entropy(&MapSystem::quadratic(a).unwrap(), 30, 20).unwrap().entropy)
        .collect();
    assert!(h[0] <= h[1] + 0.02 && h[1] <= h[2] + 0.02, "{h:?}");
}
