//! Cross-module property tests. Brute-force oracles here are written
//! directly against the definitions (profile enumeration, permutation
//! search) and stay independent of the code paths they check.

use std::collections::BTreeSet;

use proptest::prelude::*;

use efhouse::compact::{
    alloc_satisfying_envy_matrix, compact_ef_prob, envy_matrix_of, matrix_ef_prob,
    max_prob_ef_compact, CompactSolveResult, EnvyMatrix, DEFAULT_MATRIX_CAP,
};
use efhouse::deciders::{
    brute_force_certainly_ef, brute_force_possibly_ef, decide_certainly_ef, decide_possibly_ef,
    DEFAULT_SEARCH_CAP,
};
use efhouse::efprob::ef_prob;
use efhouse::instance::{
    default_house_names, validate_instance, Allocation, CompactPrefs, Instance, Prefs,
    RawInstance, RawPrefs,
};
use efhouse::order::{extension_count, linear_extensions, WeakOrder, DEFAULT_EXTENSION_CAP};
use efhouse::solvers::{
    best_alloc_for_subset, brute_force_max_prob_ef, solve_max_prob_ef_enumerate, top_choice_prob,
    DEFAULT_ENUMERATION_CAP,
};
use efhouse::Prob;
use itertools::Itertools;

// --------------------------------------------------------------------------
// Strategies
// --------------------------------------------------------------------------

fn arb_order(m: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..m).collect::<Vec<usize>>()).prop_shuffle()
}

fn arb_weights(k: usize) -> impl Strategy<Value = Vec<Prob>> {
    proptest::collection::vec(1..=6u64, k).prop_map(|parts| {
        let total: u64 = parts.iter().sum();
        parts.into_iter().map(|p| Prob::new(p, total)).collect()
    })
}

fn arb_lottery(n: usize, m: usize) -> impl Strategy<Value = Instance> {
    proptest::collection::vec(
        (1..=3usize).prop_flat_map(move |k| {
            (
                arb_weights(k),
                proptest::collection::vec(arb_order(m), k),
            )
        }),
        n,
    )
    .prop_map(move |agents| {
        let prefs = agents
            .into_iter()
            .map(|(ws, os)| ws.into_iter().zip(os).collect())
            .collect();
        validate_instance(RawInstance {
            num_agents: n,
            num_houses: m,
            house_names: default_house_names(m),
            prefs: RawPrefs::Lottery(prefs),
        })
        .expect("strategy output is valid")
    })
}

fn arb_weak_order(m: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    (
        arb_order(m),
        proptest::collection::vec(1..=3usize, m),
    )
        .prop_map(|(shuffled, cuts)| {
            let mut classes = Vec::new();
            let mut rest = shuffled.as_slice();
            let mut i = 0;
            while !rest.is_empty() {
                let take = cuts[i].min(rest.len());
                classes.push(rest[..take].to_vec());
                rest = &rest[take..];
                i += 1;
            }
            classes
        })
}

fn arb_compact(n: usize, m: usize) -> impl Strategy<Value = Instance> {
    proptest::collection::vec(arb_weak_order(m), n).prop_map(move |agents| {
        validate_instance(RawInstance {
            num_agents: n,
            num_houses: m,
            house_names: default_house_names(m),
            prefs: RawPrefs::Compact(agents),
        })
        .expect("strategy output is valid")
    })
}

fn arb_joint(n: usize, m: usize) -> impl Strategy<Value = Instance> {
    (1..=3usize)
        .prop_flat_map(move |k| {
            (
                arb_weights(k),
                proptest::collection::vec(proptest::collection::vec(arb_order(m), n), k),
            )
        })
        .prop_map(move |(ws, profiles)| {
            validate_instance(RawInstance {
                num_agents: n,
                num_houses: m,
                house_names: default_house_names(m),
                prefs: RawPrefs::Joint(ws.into_iter().zip(profiles).collect()),
            })
            .expect("strategy output is valid")
        })
}

fn arb_pairwise(n: usize, m: usize) -> impl Strategy<Value = Instance> {
    proptest::collection::vec(
        proptest::collection::vec(0..=4u64, m * (m.saturating_sub(1)) / 2),
        n,
    )
    .prop_map(move |agent_entries| {
        let agents = agent_entries
            .into_iter()
            .map(|entries| {
                let mut matrix = vec![vec![Prob::zero(); m]; m];
                let mut it = entries.into_iter();
                for a in 0..m {
                    for b in a + 1..m {
                        let p = Prob::new(it.next().unwrap(), 4);
                        matrix[b][a] = p.one_minus().unwrap();
                        matrix[a][b] = p;
                    }
                }
                matrix
            })
            .collect();
        validate_instance(RawInstance {
            num_agents: n,
            num_houses: m,
            house_names: default_house_names(m),
            prefs: RawPrefs::Pairwise(agents),
        })
        .expect("strategy output is valid")
    })
}

fn small_dims() -> impl Strategy<Value = (usize, usize)> {
    (1..=3usize).prop_flat_map(|n| (Just(n), n..=4usize))
}

fn arb_instance_any() -> impl Strategy<Value = Instance> {
    small_dims().prop_flat_map(|(n, m)| {
        prop_oneof![
            arb_lottery(n, m),
            arb_compact(n, m),
            arb_joint(n, m),
            arb_pairwise(n, m),
        ]
    })
}

fn all_allocations(n: usize, m: usize) -> Vec<Allocation> {
    (0..m)
        .permutations(n)
        .map(|p| Allocation::new(p, m).unwrap())
        .collect()
}

// --------------------------------------------------------------------------
// Definition-level oracles
// --------------------------------------------------------------------------

/// EF for one strict profile, straight from the definition.
fn ef_under_profile(positions: &[Vec<usize>], w: &Allocation) -> bool {
    let n = w.num_agents();
    (0..n).all(|i| {
        let own = positions[i][w.house(i)];
        (0..n).all(|j| j == i || own < positions[i][w.house(j)])
    })
}

/// Lottery oracle: enumerate every combination of support orders.
fn oracle_lottery_ef(inst: &Instance, w: &Allocation) -> Prob {
    let prefs = match inst.prefs() {
        Prefs::Lottery(p) => p,
        _ => unreachable!(),
    };
    let n = inst.num_agents();
    let supports: Vec<usize> = prefs.agents.iter().map(|s| s.len()).collect();
    let mut total = Prob::zero();
    let mut choice = vec![0usize; n];
    loop {
        let mut weight = Prob::one();
        let positions: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let (wgt, order) = &prefs.agents[i][choice[i]];
                weight *= wgt;
                (0..inst.num_houses()).map(|h| order.position(h)).collect()
            })
            .collect();
        if ef_under_profile(&positions, w) {
            total += &weight;
        }
        // odometer
        let mut k = 0;
        loop {
            if k == n {
                return total;
            }
            choice[k] += 1;
            if choice[k] < supports[k] {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Compact oracle: enumerate every combination of linear extensions.
fn oracle_compact_ef(inst: &Instance, w: &Allocation) -> Prob {
    let prefs = match inst.prefs() {
        Prefs::Compact(p) => p,
        _ => unreachable!(),
    };
    let n = inst.num_agents();
    let m = inst.num_houses();
    let extensions: Vec<Vec<Vec<usize>>> = prefs
        .agents
        .iter()
        .map(|wo| {
            linear_extensions(wo, DEFAULT_EXTENSION_CAP)
                .unwrap()
                .into_iter()
                .map(|o| (0..m).map(|h| o.position(h)).collect())
                .collect()
        })
        .collect();
    let total_count: u64 = extensions.iter().map(|e| e.len() as u64).product();
    let mut ef_count = 0u64;
    let mut choice = vec![0usize; n];
    loop {
        let positions: Vec<Vec<usize>> = (0..n)
            .map(|i| extensions[i][choice[i]].clone())
            .collect();
        if ef_under_profile(&positions, w) {
            ef_count += 1;
        }
        let mut k = 0;
        loop {
            if k == n {
                return Prob::from_big(ef_count.into(), total_count.into()).unwrap();
            }
            choice[k] += 1;
            if choice[k] < extensions[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Relabels agents: agent `i` of the new instance is agent `perm[i]` of the
/// old one.
fn permute_agents(inst: &Instance, perm: &[usize]) -> Instance {
    let raw = inst.to_raw();
    let prefs = match raw.prefs {
        RawPrefs::Lottery(agents) => {
            RawPrefs::Lottery(perm.iter().map(|&i| agents[i].clone()).collect())
        }
        RawPrefs::Compact(agents) => {
            RawPrefs::Compact(perm.iter().map(|&i| agents[i].clone()).collect())
        }
        RawPrefs::Joint(profiles) => RawPrefs::Joint(
            profiles
                .into_iter()
                .map(|(w, p)| (w, perm.iter().map(|&i| p[i].clone()).collect()))
                .collect(),
        ),
        RawPrefs::Pairwise(agents) => {
            RawPrefs::Pairwise(perm.iter().map(|&i| agents[i].clone()).collect())
        }
    };
    validate_instance(RawInstance { prefs, ..raw }).unwrap()
}

// --------------------------------------------------------------------------
// Properties
// --------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prob_product_is_exact((a, b, c, d) in (0..50u64, 1..50u64, 0..50u64, 1..50u64)) {
        let x = Prob::new(a, b);
        let y = Prob::new(c, d);
        let brute = Prob::from_big((a * c).into(), (b * d).into()).unwrap();
        prop_assert_eq!(x * y, brute);
    }

    #[test]
    fn extension_count_matches_enumeration(classes in arb_weak_order(4)) {
        let w = WeakOrder::new(classes).unwrap();
        let exts = linear_extensions(&w, DEFAULT_EXTENSION_CAP).unwrap();
        prop_assert_eq!(
            extension_count(&w),
            num_bigint::BigUint::from(exts.len() as u64)
        );
        let distinct: BTreeSet<Vec<usize>> =
            exts.iter().map(|o| o.ranking().to_vec()).collect();
        prop_assert_eq!(distinct.len(), exts.len());
    }

    #[test]
    fn validation_idempotent(inst in arb_instance_any()) {
        let again = validate_instance(inst.to_raw()).unwrap();
        prop_assert_eq!(inst, again);
    }

    #[test]
    fn ef_prob_is_a_probability(inst in arb_instance_any()) {
        for w in all_allocations(inst.num_agents(), inst.num_houses()) {
            let p = ef_prob(&inst, &w).unwrap();
            prop_assert!(p.is_probability());
        }
    }

    #[test]
    fn lottery_matches_profile_enumeration(inst in small_dims().prop_flat_map(|(n, m)| arb_lottery(n, m))) {
        for w in all_allocations(inst.num_agents(), inst.num_houses()) {
            prop_assert_eq!(ef_prob(&inst, &w).unwrap(), oracle_lottery_ef(&inst, &w));
        }
    }

    #[test]
    fn compact_matches_extension_enumeration(inst in small_dims().prop_flat_map(|(n, m)| arb_compact(n, m))) {
        for w in all_allocations(inst.num_agents(), inst.num_houses()) {
            prop_assert_eq!(ef_prob(&inst, &w).unwrap(), oracle_compact_ef(&inst, &w));
        }
    }

    #[test]
    fn relabeling_equivariance(inst in arb_instance_any(), seed in 0..1000u64) {
        let n = inst.num_agents();
        let mut perm: Vec<usize> = (0..n).collect();
        // cheap deterministic shuffle
        for i in (1..n).rev() {
            let j = (seed as usize).wrapping_mul(31).wrapping_add(i * 17) % (i + 1);
            perm.swap(i, j);
        }
        let permuted = permute_agents(&inst, &perm);
        for w in all_allocations(n, inst.num_houses()) {
            let moved: Vec<usize> = perm.iter().map(|&i| w.house(i)).collect();
            let w2 = Allocation::new(moved, inst.num_houses()).unwrap();
            prop_assert_eq!(ef_prob(&inst, &w).unwrap(), ef_prob(&permuted, &w2).unwrap());
        }
    }

    #[test]
    fn joint_profile_upgrade_never_decreases(
        inst in small_dims().prop_flat_map(|(n, m)| arb_joint(n, m)),
        idx in 0..3usize,
    ) {
        let n = inst.num_agents();
        let m = inst.num_houses();
        let w = Allocation::new((0..n).collect(), m).unwrap();
        let before = ef_prob(&inst, &w).unwrap();
        // replace one profile with a profile under which w is EF
        let mut raw = inst.to_raw();
        if let RawPrefs::Joint(profiles) = &mut raw.prefs {
            let idx = idx % profiles.len();
            let ef_profile: Vec<Vec<usize>> = (0..n)
                .map(|i| {
                    let mut order = vec![w.house(i)];
                    order.extend((0..m).filter(|&h| h != w.house(i)));
                    order
                })
                .collect();
            profiles[idx].1 = ef_profile;
        }
        let upgraded = validate_instance(raw).unwrap();
        let after = ef_prob(&upgraded, &w).unwrap();
        prop_assert!(after >= before);
    }

    #[test]
    fn enumerate_equals_brute_force(inst in small_dims().prop_flat_map(|(n, m)| prop_oneof![
        arb_lottery(n, m),
        arb_compact(n, m),
        arb_pairwise(n, m),
    ])) {
        let a = solve_max_prob_ef_enumerate(&inst, DEFAULT_ENUMERATION_CAP, 1).unwrap();
        let b = brute_force_max_prob_ef(&inst, DEFAULT_ENUMERATION_CAP).unwrap();
        prop_assert_eq!(&a.prob, &b.prob);
        // identical tie-breaks make the full results equal
        prop_assert_eq!(a, b);
    }

    #[test]
    fn subset_result_consistent_with_ef_prob(inst in small_dims().prop_flat_map(|(n, m)| prop_oneof![
        arb_lottery(n, m),
        arb_compact(n, m),
        arb_pairwise(n, m),
    ])) {
        let n = inst.num_agents();
        let m = inst.num_houses();
        let best = solve_max_prob_ef_enumerate(&inst, DEFAULT_ENUMERATION_CAP, 1).unwrap();
        for subset in (0..m).combinations(n) {
            if let Some(r) = best_alloc_for_subset(&inst, &subset).unwrap() {
                // cross-module consistency and enumeration monotonicity
                prop_assert_eq!(&r.prob, &ef_prob(&inst, &r.allocation).unwrap());
                prop_assert!(best.prob >= r.prob);
                // the product formula agrees with the per-edge weights
                let mut product = Prob::one();
                for (i, &h) in r.allocation.as_slice().iter().enumerate() {
                    product *= &top_choice_prob(&inst, i, h, &subset).unwrap();
                }
                prop_assert_eq!(&r.prob, &product);
            }
        }
    }

    #[test]
    fn envy_matrix_roundtrip_and_bounds(inst in small_dims().prop_flat_map(|(n, m)| arb_compact(n, m))) {
        let prefs = inst.compact_prefs().unwrap();
        let n = inst.num_agents();
        for w in all_allocations(n, inst.num_houses()) {
            let p = ef_prob(&inst, &w).unwrap();
            match envy_matrix_of(prefs, &w) {
                Some(a) => {
                    prop_assert_eq!(&p, &matrix_ef_prob(&a));
                    prop_assert_eq!(&p, &compact_ef_prob(prefs, &w));
                }
                None => prop_assert!(p.is_zero()),
            }
        }
    }

    #[test]
    fn matrix_satisfaction_sound_and_complete(
        inst in (1..=3usize).prop_flat_map(|n| (Just(n), n..=4usize))
            .prop_flat_map(|(n, m)| arb_compact(n, m)),
        ones in proptest::collection::vec(proptest::bool::ANY, 9),
    ) {
        let prefs = inst.compact_prefs().unwrap();
        let n = inst.num_agents();
        let mut cells = vec![vec![false; n]; n];
        let mut k = 0;
        for i in 0..n {
            for j in 0..n {
                cells[i][j] = i == j || ones[k % ones.len()];
                k += 1;
            }
        }
        let a = EnvyMatrix::new(cells);
        let satisfies = |w: &Allocation| -> bool {
            (0..n).all(|i| {
                (0..n).all(|j| {
                    let oi = prefs.agents[i].rank(w.house(i));
                    let oj = prefs.agents[i].rank(w.house(j));
                    if a.get(i, j) { oi <= oj } else { oi < oj }
                })
            })
        };
        match alloc_satisfying_envy_matrix(prefs, &a) {
            Some(w) => {
                prop_assert!(satisfies(&w));
                let b = envy_matrix_of(prefs, &w).unwrap();
                prop_assert!(b.dominated_by(&a));
            }
            None => {
                for w in all_allocations(n, inst.num_houses()) {
                    prop_assert!(!satisfies(&w), "missed allocation {:?}", w);
                }
            }
        }
    }

    #[test]
    fn compact_epsilon_monotonicity(inst in (1..=3usize).prop_flat_map(|n| (Just(n), n..=4usize))
        .prop_flat_map(|(n, m)| arb_compact(n, m))) {
        let prefs = inst.compact_prefs().unwrap();
        let ladder = [Prob::one(), Prob::new(1, 2), Prob::new(1, 4), Prob::new(1, 8)];
        let mut seen: Option<Prob> = None;
        for eps in &ladder {
            match max_prob_ef_compact(prefs, eps, DEFAULT_MATRIX_CAP).unwrap() {
                CompactSolveResult::Optimal { prob, .. } => {
                    prop_assert!(prob >= *eps);
                    if let Some(prev) = &seen {
                        prop_assert_eq!(prev, &prob);
                    }
                    seen = Some(prob);
                }
                CompactSolveResult::CertificateBelowEpsilon => {
                    prop_assert!(seen.is_none(), "optimal at a larger epsilon but certificate at a smaller one");
                }
            }
        }
    }

    #[test]
    fn deciders_agree_with_enumeration(inst in arb_instance_any()) {
        let pos = decide_possibly_ef(&inst, DEFAULT_SEARCH_CAP).unwrap();
        let cert = decide_certainly_ef(&inst, DEFAULT_SEARCH_CAP).unwrap();
        let bpos = brute_force_possibly_ef(&inst, DEFAULT_SEARCH_CAP).unwrap();
        let bcert = brute_force_certainly_ef(&inst, DEFAULT_SEARCH_CAP).unwrap();
        prop_assert_eq!(pos.answer, bpos.is_some());
        prop_assert_eq!(cert.answer, bcert.is_some());
        if cert.answer {
            prop_assert!(pos.answer);
        }
    }

    #[test]
    fn serialization_roundtrip(inst in arb_instance_any()) {
        let text = efhouse::io::serialize_instance(&inst);
        let back = efhouse::io::parse_instance(&text).unwrap();
        prop_assert_eq!(inst, back);
    }
}

/// Compact prefs where every class is a singleton behave exactly like the
/// strict deterministic problem.
#[test]
fn strict_compact_matches_deterministic_reasoning() {
    let prefs = CompactPrefs {
        agents: vec![
            WeakOrder::new(vec![vec![0], vec![1], vec![2]]).unwrap(),
            WeakOrder::new(vec![vec![1], vec![0], vec![2]]).unwrap(),
        ],
    };
    let w = alloc_satisfying_envy_matrix(&prefs, &EnvyMatrix::identity(2)).unwrap();
    assert_eq!(w.as_slice(), &[0, 1]);
}
