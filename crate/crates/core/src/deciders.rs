//! Top-level decision procedures: does any allocation have positive
//! EF-probability (possibly EF), or EF-probability one (certainly EF)?
//!
//! Polynomial algorithms exist for the compact model (both questions) and
//! for the joint model (possibly EF, by checking each support profile). The
//! remaining cases are decided by pruned exhaustive search, capped by the
//! number of explored search nodes. [`brute_force_possibly_ef`] and
//! [`brute_force_certainly_ef`] are plain enumeration checkers used as
//! independent oracles.

use num_bigint::BigUint;
use thiserror::Error;

use crate::compact::{
    alloc_satisfying_envy_matrix, exists_certainly_ef_compact, exists_possibly_ef_compact,
    EnvyMatrix,
};
use crate::efprob::ef_prob;
use crate::instance::{Allocation, CompactPrefs, Instance, Prefs};
use crate::order::WeakOrder;

/// Default bound on explored search nodes for the exhaustive deciders.
pub const DEFAULT_SEARCH_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecideError {
    #[error("exhaustive search exceeded the cap of {cap} explored nodes")]
    SearchCapExceeded { cap: u64 },
    #[error("exhaustive enumeration of {needed} allocations exceeds the cap of {cap}")]
    EnumerationCapExceeded { needed: BigUint, cap: u64 },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Method {
    Polynomial,
    Exhaustive,
}

/// Decision with an optional witness allocation and the method that produced
/// it. A yes answer always carries a witness re-verified through the
/// EF-probability computation.
#[derive(Clone, PartialEq, Debug)]
pub struct Decision {
    pub answer: bool,
    pub witness: Option<Allocation>,
    pub method: Method,
}

impl Decision {
    fn no(method: Method) -> Self {
        Decision {
            answer: false,
            witness: None,
            method,
        }
    }

    fn yes(witness: Allocation, method: Method) -> Self {
        Decision {
            answer: true,
            witness: Some(witness),
            method,
        }
    }
}

fn verify_witness(inst: &Instance, d: &Decision, certain: bool) {
    if let Some(w) = &d.witness {
        let p = ef_prob(inst, w).expect("witness fits the instance");
        if certain {
            assert!(p.is_one(), "certainly-EF witness has probability {p}");
        } else {
            assert!(!p.is_zero(), "possibly-EF witness has probability {p}");
        }
    }
}

/// Generic depth-first search over injective allocations where validity of a
/// partial assignment decomposes into pairwise checks
/// `rel[i][w(i)][w(j)] && rel[j][w(j)][w(i)]`.
fn pairwise_dfs(
    rel: &[Vec<Vec<bool>>],
    n: usize,
    m: usize,
    cap: u64,
) -> Result<Option<Vec<usize>>, DecideError> {
    fn go(
        rel: &[Vec<Vec<bool>>],
        assigned: &mut Vec<usize>,
        used: &mut [bool],
        n: usize,
        m: usize,
        nodes: &mut u64,
        cap: u64,
    ) -> Result<bool, DecideError> {
        let k = assigned.len();
        if k == n {
            return Ok(true);
        }
        for h in 0..m {
            if used[h] {
                continue;
            }
            *nodes += 1;
            if *nodes > cap {
                return Err(DecideError::SearchCapExceeded { cap });
            }
            let ok = assigned
                .iter()
                .enumerate()
                .all(|(i, &hi)| rel[i][hi][h] && rel[k][h][hi]);
            if ok {
                assigned.push(h);
                used[h] = true;
                if go(rel, assigned, used, n, m, nodes, cap)? {
                    return Ok(true);
                }
                assigned.pop();
                used[h] = false;
            }
        }
        Ok(false)
    }
    let mut assigned = Vec::with_capacity(n);
    let mut used = vec![false; m];
    let mut nodes = 0u64;
    if go(rel, &mut assigned, &mut used, n, m, &mut nodes, cap)? {
        Ok(Some(assigned))
    } else {
        Ok(None)
    }
}

/// Per agent, `certain[a][b]`: the agent prefers `a` to `b` with certainty.
fn certainly_prefers(inst: &Instance) -> Vec<Vec<Vec<bool>>> {
    let n = inst.num_agents();
    let m = inst.num_houses();
    match inst.prefs() {
        Prefs::Lottery(prefs) => (0..n)
            .map(|i| {
                let mut rel = vec![vec![true; m]; m];
                for (a, row) in rel.iter_mut().enumerate() {
                    for (b, cell) in row.iter_mut().enumerate() {
                        *cell = a != b
                            && prefs.agents[i].iter().all(|(_, o)| o.prefers(a, b));
                    }
                }
                rel
            })
            .collect(),
        Prefs::Joint(prefs) => (0..n)
            .map(|i| {
                let mut rel = vec![vec![true; m]; m];
                for (a, row) in rel.iter_mut().enumerate() {
                    for (b, cell) in row.iter_mut().enumerate() {
                        *cell = a != b
                            && prefs.profiles.iter().all(|(_, p)| p[i].prefers(a, b));
                    }
                }
                rel
            })
            .collect(),
        Prefs::Pairwise(prefs) => (0..n)
            .map(|i| {
                let mut rel = vec![vec![false; m]; m];
                for (a, row) in rel.iter_mut().enumerate() {
                    for (b, cell) in row.iter_mut().enumerate() {
                        *cell = a != b && prefs.agents[i][a][b].is_one();
                    }
                }
                rel
            })
            .collect(),
        Prefs::Compact(prefs) => (0..n)
            .map(|i| {
                let mut rel = vec![vec![false; m]; m];
                for (a, row) in rel.iter_mut().enumerate() {
                    for (b, cell) in row.iter_mut().enumerate() {
                        *cell = prefs.agents[i].strictly_prefers(a, b);
                    }
                }
                rel
            })
            .collect(),
    }
}

/// Lottery-model possibly-EF search. Each assigned agent keeps the set of
/// support orders in which its own house still beats every house allocated
/// so far; the allocation is possibly EF iff all sets stay nonempty.
fn lottery_possibly_dfs(
    inst: &Instance,
    cap: u64,
) -> Result<Option<Vec<usize>>, DecideError> {
    let prefs = match inst.prefs() {
        Prefs::Lottery(p) => p,
        _ => unreachable!("lottery search on non-lottery instance"),
    };
    let n = inst.num_agents();
    let m = inst.num_houses();

    struct State<'a> {
        prefs: &'a crate::instance::LotteryPrefs,
        assigned: Vec<usize>,
        used: Vec<bool>,
        alive: Vec<Vec<usize>>,
        nodes: u64,
        cap: u64,
    }

    fn go(s: &mut State<'_>, n: usize, m: usize) -> Result<bool, DecideError> {
        let k = s.assigned.len();
        if k == n {
            return Ok(true);
        }
        for h in 0..m {
            if s.used[h] {
                continue;
            }
            s.nodes += 1;
            if s.nodes > s.cap {
                return Err(DecideError::SearchCapExceeded { cap: s.cap });
            }
            // filter the alive orders of earlier agents against h, and build
            // agent k's alive set against the houses assigned so far
            let mut new_alive: Vec<Vec<usize>> = Vec::with_capacity(k + 1);
            let mut feasible = true;
            for i in 0..k {
                let own = s.assigned[i];
                let filtered: Vec<usize> = s.alive[i]
                    .iter()
                    .copied()
                    .filter(|&r| {
                        let order = &s.prefs.agents[i][r].1;
                        order.prefers(own, h)
                    })
                    .collect();
                if filtered.is_empty() {
                    feasible = false;
                    break;
                }
                new_alive.push(filtered);
            }
            if feasible {
                let own_alive: Vec<usize> = (0..s.prefs.agents[k].len())
                    .filter(|&r| {
                        let order = &s.prefs.agents[k][r].1;
                        s.assigned.iter().all(|&hi| order.prefers(h, hi))
                    })
                    .collect();
                if !own_alive.is_empty() {
                    new_alive.push(own_alive);
                    let saved = std::mem::replace(&mut s.alive, new_alive);
                    s.assigned.push(h);
                    s.used[h] = true;
                    if go(s, n, m)? {
                        return Ok(true);
                    }
                    s.assigned.pop();
                    s.used[h] = false;
                    s.alive = saved;
                }
            }
        }
        Ok(false)
    }

    let mut state = State {
        prefs,
        assigned: Vec::with_capacity(n),
        used: vec![false; m],
        alive: Vec::new(),
        nodes: 0,
        cap,
    };
    if go(&mut state, n, m)? {
        Ok(Some(state.assigned))
    } else {
        Ok(None)
    }
}

/// Possibly-EF existence for strict orders, used per joint-model profile:
/// the matrix-satisfaction algorithm with the all-ones matrix degenerates to
/// the strict-preference EF-existence procedure.
fn strict_profile_possibly(orders: &[crate::order::LinearOrder]) -> Option<Allocation> {
    let prefs = CompactPrefs {
        agents: orders.iter().map(WeakOrder::from_linear).collect(),
    };
    alloc_satisfying_envy_matrix(&prefs, &EnvyMatrix::all_ones(orders.len()))
}

/// Does some allocation have EF-probability greater than zero?
pub fn decide_possibly_ef(inst: &Instance, cap: u64) -> Result<Decision, DecideError> {
    let m = inst.num_houses();
    let decision = match inst.prefs() {
        Prefs::Compact(prefs) => match exists_possibly_ef_compact(prefs) {
            Some(w) => Decision::yes(w, Method::Polynomial),
            None => Decision::no(Method::Polynomial),
        },
        Prefs::Joint(prefs) => {
            let hit = prefs
                .profiles
                .iter()
                .find_map(|(_, profile)| strict_profile_possibly(profile));
            match hit {
                Some(w) => Decision::yes(w, Method::Polynomial),
                None => Decision::no(Method::Polynomial),
            }
        }
        Prefs::Lottery(_) => match lottery_possibly_dfs(inst, cap)? {
            Some(v) => Decision::yes(
                Allocation::new(v, m).expect("search yields injective allocations"),
                Method::Exhaustive,
            ),
            None => Decision::no(Method::Exhaustive),
        },
        Prefs::Pairwise(prefs) => {
            let n = inst.num_agents();
            let rel: Vec<Vec<Vec<bool>>> = (0..n)
                .map(|i| {
                    let mut r = vec![vec![false; m]; m];
                    for (a, row) in r.iter_mut().enumerate() {
                        for (b, cell) in row.iter_mut().enumerate() {
                            *cell = a != b && !prefs.agents[i][a][b].is_zero();
                        }
                    }
                    r
                })
                .collect();
            match pairwise_dfs(&rel, n, m, cap)? {
                Some(v) => Decision::yes(
                    Allocation::new(v, m).expect("search yields injective allocations"),
                    Method::Exhaustive,
                ),
                None => Decision::no(Method::Exhaustive),
            }
        }
    };
    verify_witness(inst, &decision, false);
    Ok(decision)
}

/// Does some allocation have EF-probability exactly one?
pub fn decide_certainly_ef(inst: &Instance, cap: u64) -> Result<Decision, DecideError> {
    let decision = match inst.prefs() {
        Prefs::Compact(prefs) => match exists_certainly_ef_compact(prefs) {
            Some(w) => Decision::yes(w, Method::Polynomial),
            None => Decision::no(Method::Polynomial),
        },
        _ => {
            let rel = certainly_prefers(inst);
            match pairwise_dfs(&rel, inst.num_agents(), inst.num_houses(), cap)? {
                Some(v) => Decision::yes(
                    Allocation::new(v, inst.num_houses())
                        .expect("search yields injective allocations"),
                    Method::Exhaustive,
                ),
                None => Decision::no(Method::Exhaustive),
            }
        }
    };
    verify_witness(inst, &decision, true);
    Ok(decision)
}

fn falling_factorial(m: usize, n: usize) -> BigUint {
    let mut r = BigUint::from(1u32);
    for k in 0..n {
        r *= BigUint::from(m - k);
    }
    r
}

fn enumerate_allocations<F: FnMut(&Allocation) -> bool>(
    inst: &Instance,
    cap: u64,
    mut accept: F,
) -> Result<Option<Allocation>, DecideError> {
    use itertools::Itertools;
    let n = inst.num_agents();
    let m = inst.num_houses();
    let needed = falling_factorial(m, n);
    if needed > BigUint::from(cap) {
        return Err(DecideError::EnumerationCapExceeded { needed, cap });
    }
    for perm in (0..m).permutations(n) {
        let w = Allocation::new(perm, m).expect("permutation is injective");
        if accept(&w) {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// Plain enumeration oracle: first allocation (in lexicographic order) with
/// positive EF-probability.
pub fn brute_force_possibly_ef(
    inst: &Instance,
    cap: u64,
) -> Result<Option<Allocation>, DecideError> {
    enumerate_allocations(inst, cap, |w| {
        !ef_prob(inst, w).expect("allocation fits instance").is_zero()
    })
}

/// Plain enumeration oracle: first allocation with EF-probability one.
pub fn brute_force_certainly_ef(
    inst: &Instance,
    cap: u64,
) -> Result<Option<Allocation>, DecideError> {
    enumerate_allocations(inst, cap, |w| {
        ef_prob(inst, w).expect("allocation fits instance").is_one()
    })
}
