//! Allocation solvers maximizing the probability of envy-freeness.
//!
//! For an independent model, once the set of allocated houses is fixed the
//! problem reduces to a maximum-product perfect matching between agents and
//! that set, with edge weights equal to top-choice probabilities. The
//! enumeration solver tries every n-subset of houses; the brute-force solver
//! evaluates every injective allocation directly and works for all models,
//! serving as the independent oracle for the other route.

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;
use thiserror::Error;

use crate::efprob::ef_prob;
use crate::instance::{Allocation, Instance, Prefs};
use crate::matching::{max_product_perfect_matching, WeightedBipartite};
use crate::prob::Prob;

/// Default bound on the number of subsets / allocations enumerated.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("the joint model is not independent; this solver requires an independent model")]
    NotIndependentModel,
    #[error("enumeration of {needed} candidates exceeds the cap of {cap}")]
    EnumerationCapExceeded { needed: BigUint, cap: u64 },
}

/// Best allocation found for one subset of houses (or over all subsets).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SubsetResult {
    /// The allocated houses, sorted ascending.
    pub subset: Vec<usize>,
    pub allocation: Allocation,
    pub prob: Prob,
    /// Set when no allocation with positive EF-probability exists anywhere;
    /// the carried subset/allocation are then the lexicographic defaults.
    pub zero_probability: bool,
}

fn binomial(m: usize, n: usize) -> BigUint {
    if n > m {
        return BigUint::from(0u32);
    }
    let mut r = BigUint::one();
    for k in 0..n.min(m - n) {
        r = r * BigUint::from(m - k) / BigUint::from(k + 1);
    }
    r
}

fn falling_factorial(m: usize, n: usize) -> BigUint {
    let mut r = BigUint::one();
    for k in 0..n {
        r *= BigUint::from(m - k);
    }
    r
}

/// Probability that `house` is agent `agent`'s most preferred house among
/// `subset`. Requires an independent model and `house` in `subset`.
pub fn top_choice_prob(
    inst: &Instance,
    agent: usize,
    house: usize,
    subset: &[usize],
) -> Result<Prob, SolveError> {
    debug_assert!(subset.contains(&house));
    match inst.prefs() {
        Prefs::Joint(_) => Err(SolveError::NotIndependentModel),
        Prefs::Lottery(prefs) => {
            let mut mask = vec![false; inst.num_houses()];
            for &h in subset {
                mask[h] = true;
            }
            let mut p = Prob::zero();
            for (weight, order) in &prefs.agents[agent] {
                if order.top_among(&mask) == Some(house) {
                    p += weight;
                }
            }
            Ok(p)
        }
        Prefs::Compact(prefs) => {
            let order = &prefs.agents[agent];
            let own = order.rank(house);
            let best = subset.iter().map(|&h| order.rank(h)).min().unwrap();
            if best < own {
                Ok(Prob::zero())
            } else {
                let tied = subset.iter().filter(|&&h| order.rank(h) == own).count();
                Ok(Prob::new(1, tied as u64))
            }
        }
        Prefs::Pairwise(prefs) => {
            let matrix = &prefs.agents[agent];
            let mut p = Prob::one();
            for &h in subset {
                if h != house {
                    p *= &matrix[house][h];
                }
            }
            Ok(p)
        }
    }
}

/// Best allocation of exactly the houses in `subset` (sorted, `|subset| = n`),
/// or `None` if no allocation of this subset has positive EF-probability.
pub fn best_alloc_for_subset(
    inst: &Instance,
    subset: &[usize],
) -> Result<Option<SubsetResult>, SolveError> {
    debug_assert_eq!(subset.len(), inst.num_agents());
    debug_assert!(subset.windows(2).all(|w| w[0] < w[1]));
    let n = inst.num_agents();
    if !inst.is_independent() {
        return Err(SolveError::NotIndependentModel);
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for (jj, &h) in subset.iter().enumerate() {
            let p = top_choice_prob(inst, i, h, subset)?;
            if !p.is_zero() {
                edges.push((i, jj, p));
            }
        }
    }
    let graph =
        WeightedBipartite::new(n, n, edges).expect("edge construction stays within bounds");
    Ok(max_product_perfect_matching(&graph).map(|(matching, prob)| {
        let assigned: Vec<usize> = matching.into_iter().map(|jj| subset[jj]).collect();
        let allocation =
            Allocation::new(assigned, inst.num_houses()).expect("matching is injective");
        SubsetResult {
            subset: subset.to_vec(),
            allocation,
            prob,
            zero_probability: false,
        }
    }))
}

/// Merge rule for results from different subsets: higher probability wins;
/// on ties, the lexicographically smaller subset.
fn better(a: &SubsetResult, b: &SubsetResult) -> bool {
    a.prob > b.prob || (a.prob == b.prob && a.subset < b.subset)
}

fn merge(a: Option<SubsetResult>, b: Option<SubsetResult>) -> Option<SubsetResult> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if better(&x, &y) { x } else { y }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// All-zero fallback: the lexicographically smallest subset with its
/// lexicographic allocation, flagged.
fn zero_result(inst: &Instance) -> SubsetResult {
    let n = inst.num_agents();
    let subset: Vec<usize> = (0..n).collect();
    SubsetResult {
        allocation: Allocation::new(subset.clone(), inst.num_houses())
            .expect("identity allocation is injective"),
        subset,
        prob: Prob::zero(),
        zero_probability: true,
    }
}

/// Maximum-probability envy-free allocation by enumerating every n-subset of
/// houses and solving the restricted matching problem on each.
///
/// `threads > 1` shards the subsets across a thread pool; the merge is a pure
/// max-fold, so the result is identical to the single-threaded run.
pub fn solve_max_prob_ef_enumerate(
    inst: &Instance,
    cap: u64,
    threads: usize,
) -> Result<SubsetResult, SolveError> {
    if !inst.is_independent() {
        return Err(SolveError::NotIndependentModel);
    }
    let n = inst.num_agents();
    let m = inst.num_houses();
    let needed = binomial(m, n);
    if needed > BigUint::from(cap) {
        return Err(SolveError::EnumerationCapExceeded { needed, cap });
    }
    if n == 0 {
        // the empty allocation is envy-free with certainty
        return Ok(SubsetResult {
            subset: Vec::new(),
            allocation: Allocation::new(Vec::new(), m).expect("empty allocation"),
            prob: Prob::one(),
            zero_probability: false,
        });
    }

    // Shard by the smallest element of the subset; each block is independent.
    let block = |first: usize| -> Result<Option<SubsetResult>, SolveError> {
        let mut best: Option<SubsetResult> = None;
        for rest in (first + 1..m).combinations(n - 1) {
            let mut subset = Vec::with_capacity(n);
            subset.push(first);
            subset.extend(rest);
            best = merge(best, best_alloc_for_subset(inst, &subset)?);
        }
        Ok(best)
    };

    let firsts: Vec<usize> = (0..=m - n).collect();
    let best = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool construction");
        pool.install(|| {
            firsts
                .par_iter()
                .map(|&first| block(first))
                .try_reduce(|| None, |a, b| Ok(merge(a, b)))
        })?
    } else {
        let mut best = None;
        for first in firsts {
            best = merge(best, block(first)?);
        }
        best
    };

    Ok(best.unwrap_or_else(|| zero_result(inst)))
}

/// Exhaustive oracle over every injective allocation; works for all models
/// including joint. Same tie-break as the enumeration solver.
pub fn brute_force_max_prob_ef(inst: &Instance, cap: u64) -> Result<SubsetResult, SolveError> {
    let n = inst.num_agents();
    let m = inst.num_houses();
    let needed = falling_factorial(m, n);
    if needed > BigUint::from(cap) {
        return Err(SolveError::EnumerationCapExceeded { needed, cap });
    }
    let mut best: Option<SubsetResult> = None;
    for subset in (0..m).combinations(n) {
        for perm in subset.iter().copied().permutations(n) {
            let allocation =
                Allocation::new(perm, inst.num_houses()).expect("permutation is injective");
            let prob = ef_prob(inst, &allocation).expect("allocation built for this instance");
            let candidate = SubsetResult {
                subset: subset.clone(),
                allocation,
                prob,
                zero_probability: false,
            };
            let take = match &best {
                None => true,
                Some(cur) => {
                    candidate.prob > cur.prob
                        || (candidate.prob == cur.prob
                            && (candidate.subset < cur.subset
                                || (candidate.subset == cur.subset
                                    && candidate.allocation < cur.allocation)))
                }
            };
            if take {
                best = Some(candidate);
            }
        }
    }
    let mut best = best.unwrap_or_else(|| zero_result(inst));
    if best.prob.is_zero() {
        best = zero_result(inst);
    }
    Ok(best)
}
