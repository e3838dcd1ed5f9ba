//! Solvers specific to the compact indifference model.
//!
//! The key object is the envy matrix of a weak-order envy-free allocation:
//! `a[i][j]` is 1 when agent `i` is indifferent between its own house and
//! agent `j`'s, and 0 when it strictly prefers its own. The EF-probability
//! of such an allocation is the product over agents of one over the matrix
//! row sum, so an allocation with EF-probability at least epsilon has at most
//! `floor(1/epsilon)` ones off the diagonal. Enumerating those sparse
//! matrices and solving the matrix-satisfaction problem for each yields
//! either the exact optimum or a certificate that every allocation has
//! EF-probability below epsilon.

use itertools::Itertools;
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::instance::{Allocation, CompactPrefs};
use crate::matching::{max_cardinality_matching, MatchOutcome, UnweightedBipartite};
use crate::prob::Prob;

/// Default bound on the number of envy matrices enumerated.
pub const DEFAULT_MATRIX_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompactError {
    #[error("enumerating {needed} envy matrices exceeds the cap of {cap}")]
    MatrixEnumerationCapExceeded { needed: BigUint, cap: u64 },
    #[error("epsilon must satisfy 0 < epsilon <= 1, got {0}")]
    InvalidEpsilon(Prob),
}

/// An n-by-n binary matrix with an all-ones diagonal.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EnvyMatrix {
    a: Vec<Vec<bool>>,
}

impl EnvyMatrix {
    pub fn new(a: Vec<Vec<bool>>) -> Self {
        let n = a.len();
        assert!(a.iter().all(|row| row.len() == n), "matrix must be square");
        assert!((0..n).all(|i| a[i][i]), "diagonal entries must be 1");
        EnvyMatrix { a }
    }

    pub fn identity(n: usize) -> Self {
        EnvyMatrix {
            a: (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect(),
        }
    }

    pub fn all_ones(n: usize) -> Self {
        EnvyMatrix {
            a: vec![vec![true; n]; n],
        }
    }

    pub fn size(&self) -> usize {
        self.a.len()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.a[i][j]
    }

    pub fn row_sum(&self, i: usize) -> usize {
        self.a[i].iter().filter(|&&b| b).count()
    }

    pub fn off_diagonal_ones(&self) -> usize {
        let n = self.size();
        (0..n)
            .map(|i| (0..n).filter(|&j| j != i && self.a[i][j]).count())
            .sum()
    }

    /// Entrywise `self <= other`.
    pub fn dominated_by(&self, other: &EnvyMatrix) -> bool {
        let n = self.size();
        (0..n).all(|i| (0..n).all(|j| !self.a[i][j] || other.a[i][j]))
    }
}

/// Envy matrix of `w`, or `None` when `w` is not weak-order envy-free
/// (some agent strictly prefers another agent's house to its own).
pub fn envy_matrix_of(prefs: &CompactPrefs, w: &Allocation) -> Option<EnvyMatrix> {
    let n = prefs.num_agents();
    let mut a = vec![vec![false; n]; n];
    for i in 0..n {
        let order = &prefs.agents[i];
        let own = order.rank(w.house(i));
        for j in 0..n {
            let other = order.rank(w.house(j));
            if other < own {
                return None;
            }
            a[i][j] = other == own;
        }
    }
    Some(EnvyMatrix::new(a))
}

/// EF-probability encoded by an envy matrix: the product of the reciprocals
/// of the row sums.
pub fn matrix_ef_prob(a: &EnvyMatrix) -> Prob {
    let mut p = Prob::one();
    for i in 0..a.size() {
        p *= &Prob::new(1, a.row_sum(i) as u64);
    }
    p
}

/// EF-probability of an allocation under compact preferences, computed via
/// its envy matrix.
pub fn compact_ef_prob(prefs: &CompactPrefs, w: &Allocation) -> Prob {
    envy_matrix_of(prefs, w).map_or_else(Prob::zero, |a| matrix_ef_prob(&a))
}

/// Finds an allocation `w` with `w(i)` weakly preferred to `w(j)` wherever
/// `a[i][j] = 1` and strictly preferred wherever `a[i][j] = 0`, or `None`
/// when no such allocation exists.
///
/// Houses are deleted in rounds: each round matches agents to their most
/// preferred live houses (excluding a house for agent `i` when some agent `j`
/// with `a[j][i] = 0` also top-prefers it); on failure, every live house
/// top-preferred by some agent of a minimal Hall violator is deleted.
pub fn alloc_satisfying_envy_matrix(prefs: &CompactPrefs, a: &EnvyMatrix) -> Option<Allocation> {
    let n = prefs.num_agents();
    let m = prefs.num_houses();
    assert_eq!(a.size(), n, "matrix size must equal the agent count");
    if n == 0 {
        return Some(Allocation::new(Vec::new(), m).unwrap());
    }
    let mut live = vec![true; m];
    let mut live_count = m;

    loop {
        if live_count < n {
            return None;
        }
        // most preferred live houses per agent
        let top: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let order = &prefs.agents[i];
                let best = (0..m)
                    .filter(|&h| live[h])
                    .map(|h| order.rank(h))
                    .min()
                    .expect("live set is nonempty");
                (0..m)
                    .filter(|&h| live[h] && order.rank(h) == best)
                    .collect()
            })
            .collect();
        let mut top_owners = vec![Vec::new(); m];
        for (i, houses) in top.iter().enumerate() {
            for &h in houses {
                top_owners[h].push(i);
            }
        }

        let live_list: Vec<usize> = (0..m).filter(|&h| live[h]).collect();
        let right_of: Vec<usize> = {
            let mut map = vec![usize::MAX; m];
            for (idx, &h) in live_list.iter().enumerate() {
                map[h] = idx;
            }
            map
        };
        let mut edges = Vec::new();
        for i in 0..n {
            for &h in &top[i] {
                let blocked = top_owners[h].iter().any(|&j| j != i && !a.get(j, i));
                if !blocked {
                    edges.push((i, right_of[h]));
                }
            }
        }
        let graph = UnweightedBipartite::new(n, live_list.len(), edges)
            .expect("edges stay within bounds");
        match max_cardinality_matching(&graph) {
            MatchOutcome::Matching(matched) => {
                let assigned: Vec<usize> = matched.into_iter().map(|jj| live_list[jj]).collect();
                return Some(Allocation::new(assigned, m).expect("matching is injective"));
            }
            MatchOutcome::HallViolator(z) => {
                for &i in &z {
                    for &h in &top[i] {
                        if live[h] {
                            live[h] = false;
                            live_count -= 1;
                        }
                    }
                }
            }
        }
    }
}

/// Result of the additive-approximation solver.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CompactSolveResult {
    /// The exact optimum; `prob >= epsilon` always holds.
    Optimal { allocation: Allocation, prob: Prob },
    /// Certifies that every allocation has EF-probability below epsilon.
    CertificateBelowEpsilon,
}

fn floor_reciprocal(epsilon: &Prob) -> BigUint {
    // floor(1/eps) = floor(den/num) for eps = num/den
    epsilon
        .denom()
        .div_floor(epsilon.numer())
        .to_biguint()
        .expect("epsilon is positive")
}

/// Either computes the exact maximum EF-probability allocation (when the
/// optimum is at least `epsilon`) or certifies that every allocation has
/// EF-probability below `epsilon`.
pub fn max_prob_ef_compact(
    prefs: &CompactPrefs,
    epsilon: &Prob,
    cap: u64,
) -> Result<CompactSolveResult, CompactError> {
    if epsilon.is_zero() || !epsilon.is_probability() {
        return Err(CompactError::InvalidEpsilon(epsilon.clone()));
    }
    let n = prefs.num_agents();
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let budget = floor_reciprocal(epsilon);
    let max_ones = budget.to_usize().unwrap_or(usize::MAX).min(cells.len());

    let mut needed = BigUint::zero();
    for t in 0..=max_ones {
        needed += binomial_big(cells.len(), t);
    }
    if needed > BigUint::from(cap) {
        return Err(CompactError::MatrixEnumerationCapExceeded { needed, cap });
    }

    let mut best: Option<(Prob, Allocation)> = None;
    for t in 0..=max_ones {
        for combo in cells.iter().copied().combinations(t) {
            let mut matrix = EnvyMatrix::identity(n);
            for (i, j) in combo {
                matrix.a[i][j] = true;
            }
            if matrix_ef_prob(&matrix) < *epsilon {
                continue;
            }
            if let Some(w) = alloc_satisfying_envy_matrix(prefs, &matrix) {
                let prob = compact_ef_prob(prefs, &w);
                let take = match &best {
                    None => true,
                    Some((bp, bw)) => prob > *bp || (prob == *bp && w < *bw),
                };
                if take {
                    best = Some((prob, w));
                }
            }
        }
    }
    Ok(match best {
        Some((prob, allocation)) => CompactSolveResult::Optimal { allocation, prob },
        None => CompactSolveResult::CertificateBelowEpsilon,
    })
}

fn binomial_big(m: usize, n: usize) -> BigUint {
    if n > m {
        return BigUint::zero();
    }
    let mut r = BigUint::one();
    for k in 0..n.min(m - n) {
        r = r * BigUint::from(m - k) / BigUint::from(k + 1);
    }
    r
}

/// A certainly envy-free allocation, or `None`. Only the identity envy
/// matrix encodes probability one, so this is a single matrix-satisfaction
/// call.
pub fn exists_certainly_ef_compact(prefs: &CompactPrefs) -> Option<Allocation> {
    alloc_satisfying_envy_matrix(prefs, &EnvyMatrix::identity(prefs.num_agents()))
}

/// A possibly envy-free allocation, or `None`. Any weak-order envy-free
/// allocation has positive EF-probability, so the all-ones matrix suffices.
pub fn exists_possibly_ef_compact(prefs: &CompactPrefs) -> Option<Allocation> {
    alloc_satisfying_envy_matrix(prefs, &EnvyMatrix::all_ones(prefs.num_agents()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::WeakOrder;

    fn prefs(classes: Vec<Vec<Vec<usize>>>) -> CompactPrefs {
        CompactPrefs {
            agents: classes
                .into_iter()
                .map(|c| WeakOrder::new(c).unwrap())
                .collect(),
        }
    }

    fn alloc(v: &[usize], m: usize) -> Allocation {
        Allocation::new(v.to_vec(), m).unwrap()
    }

    #[test]
    fn strict_ef_allocation_has_identity_matrix() {
        let p = prefs(vec![
            vec![vec![0], vec![1]],
            vec![vec![1], vec![0]],
        ]);
        let a = envy_matrix_of(&p, &alloc(&[0, 1], 2)).unwrap();
        assert_eq!(a, EnvyMatrix::identity(2));
        assert_eq!(matrix_ef_prob(&a), Prob::one());
    }

    #[test]
    fn total_indifference_gives_all_ones() {
        let p = prefs(vec![vec![vec![0, 1, 2]]; 3]);
        let a = envy_matrix_of(&p, &alloc(&[0, 1, 2], 3)).unwrap();
        assert_eq!(a, EnvyMatrix::all_ones(3));
        assert_eq!(matrix_ef_prob(&a), Prob::new(1, 27));
    }

    #[test]
    fn mixed_matrix_entries() {
        // agent 0: a ~ b; agent 1: b > a; w = (a, b)
        let p = prefs(vec![vec![vec![0, 1]], vec![vec![1], vec![0]]]);
        let a = envy_matrix_of(&p, &alloc(&[0, 1], 2)).unwrap();
        assert!(a.get(0, 0) && a.get(0, 1) && !a.get(1, 0) && a.get(1, 1));
        assert_eq!(matrix_ef_prob(&a), Prob::new(1, 2));
    }

    #[test]
    fn strict_envy_yields_no_matrix() {
        let p = prefs(vec![
            vec![vec![0], vec![1]],
            vec![vec![0], vec![1]],
        ]);
        assert_eq!(envy_matrix_of(&p, &alloc(&[0, 1], 2)), None);
    }

    #[test]
    fn distinct_tops_satisfy_identity_matrix() {
        let p = prefs(vec![
            vec![vec![0], vec![1]],
            vec![vec![1], vec![0]],
        ]);
        let w = alloc_satisfying_envy_matrix(&p, &EnvyMatrix::identity(2)).unwrap();
        assert_eq!(w.as_slice(), &[0, 1]);
    }

    #[test]
    fn identical_strict_orders_have_no_solution() {
        // both agents h1 > h2 > h3; deletion removes h1 then h2, then fails
        let p = prefs(vec![
            vec![vec![0], vec![1], vec![2]],
            vec![vec![0], vec![1], vec![2]],
        ]);
        assert_eq!(
            alloc_satisfying_envy_matrix(&p, &EnvyMatrix::identity(2)),
            None
        );
        assert_eq!(
            alloc_satisfying_envy_matrix(&p, &EnvyMatrix::all_ones(2)),
            None
        );
    }

    #[test]
    fn zero_entry_blocks_shared_top() {
        // agent 0: h1 > h2; agent 1: h1 ~ h2; a = [[1,0],[1,1]]
        let p = prefs(vec![vec![vec![0], vec![1]], vec![vec![0, 1]]]);
        let mut a = EnvyMatrix::identity(2);
        a.a[1][0] = true; // row 1 tolerates agent 0; a[0][1] stays 0
        let w = alloc_satisfying_envy_matrix(&p, &a).unwrap();
        assert_eq!(w.as_slice(), &[0, 1]);
    }

    #[test]
    fn returned_allocation_dominates_its_matrix() {
        let p = prefs(vec![
            vec![vec![0, 1], vec![2]],
            vec![vec![1, 2], vec![0]],
        ]);
        let a = EnvyMatrix::all_ones(2);
        let w = alloc_satisfying_envy_matrix(&p, &a).unwrap();
        let b = envy_matrix_of(&p, &w).unwrap();
        assert!(b.dominated_by(&a));
        assert_eq!(compact_ef_prob(&p, &w), matrix_ef_prob(&b));
    }

    #[test]
    fn epsilon_one_on_solvable_strict_instance() {
        let p = prefs(vec![
            vec![vec![0], vec![1]],
            vec![vec![1], vec![0]],
        ]);
        match max_prob_ef_compact(&p, &Prob::one(), DEFAULT_MATRIX_CAP).unwrap() {
            CompactSolveResult::Optimal { prob, .. } => assert_eq!(prob, Prob::one()),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn certificate_for_fully_indifferent_instance() {
        // OPT = (1/3)^3 = 1/27 < 1/10
        let p = prefs(vec![vec![vec![0, 1, 2]]; 3]);
        assert_eq!(
            max_prob_ef_compact(&p, &Prob::new(1, 10), DEFAULT_MATRIX_CAP).unwrap(),
            CompactSolveResult::CertificateBelowEpsilon
        );
        // with a permissive epsilon the exact optimum comes back
        match max_prob_ef_compact(&p, &Prob::new(1, 27), DEFAULT_MATRIX_CAP).unwrap() {
            CompactSolveResult::Optimal { prob, .. } => assert_eq!(prob, Prob::new(1, 27)),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn invalid_epsilon_rejected() {
        let p = prefs(vec![vec![vec![0]]]);
        assert!(matches!(
            max_prob_ef_compact(&p, &Prob::zero(), DEFAULT_MATRIX_CAP),
            Err(CompactError::InvalidEpsilon(_))
        ));
        assert!(matches!(
            max_prob_ef_compact(&p, &Prob::new(3, 2), DEFAULT_MATRIX_CAP),
            Err(CompactError::InvalidEpsilon(_))
        ));
    }

    #[test]
    fn matrix_cap_enforced() {
        let p = prefs(vec![vec![vec![0, 1, 2, 3, 4]]; 5]);
        assert!(matches!(
            max_prob_ef_compact(&p, &Prob::new(1, 100), 10),
            Err(CompactError::MatrixEnumerationCapExceeded { .. })
        ));
    }

    #[test]
    fn certainly_and_possibly_wrappers() {
        let solvable = prefs(vec![
            vec![vec![0], vec![1]],
            vec![vec![1], vec![0]],
        ]);
        assert!(exists_certainly_ef_compact(&solvable).is_some());
        assert!(exists_possibly_ef_compact(&solvable).is_some());

        // a shared single top house with m = n leaves nothing to allocate
        // once the contested house is deleted
        let clash = prefs(vec![
            vec![vec![0], vec![1]],
            vec![vec![0], vec![1]],
        ]);
        assert!(exists_certainly_ef_compact(&clash).is_none());

        // with a spare house and divergent tails, deleting the contested
        // top leaves distinct tops
        let spare = prefs(vec![
            vec![vec![0], vec![1], vec![2]],
            vec![vec![0], vec![2], vec![1]],
        ]);
        let w = exists_certainly_ef_compact(&spare).unwrap();
        assert_eq!(w.as_slice(), &[1, 2]);

        let indifferent = prefs(vec![vec![vec![0, 1, 2]]; 3]);
        assert!(exists_certainly_ef_compact(&indifferent).is_none());
        let w = exists_possibly_ef_compact(&indifferent).unwrap();
        assert_eq!(compact_ef_prob(&indifferent, &w), Prob::new(1, 27));
    }
}
