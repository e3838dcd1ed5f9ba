//! Bipartite matching with exact arithmetic.
//!
//! [`max_product_perfect_matching`] finds a left-perfect matching maximizing
//! the product of its strictly positive rational edge weights. Instead of
//! summing logarithms (which are irrational), the Hungarian algorithm is run
//! directly in the ordered multiplicative group of positive rationals:
//! weights multiply, dual potentials divide, and every comparison is exact.
//! A secondary integer component encodes the lexicographic tie-break, so the
//! optimum returned is unique: among all matchings of maximum product it is
//! the lexicographically smallest by (left index, right index).

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::prob::Prob;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchingError {
    #[error("vertex index out of range")]
    IndexOutOfRange,
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge weights must be strictly positive")]
    NonPositiveWeight,
    #[error("right side must be at least as large as the left side")]
    InvalidDimensions,
    #[error("graph has a left-saturating matching, no Hall violator exists")]
    NoViolator,
}

/// A weighted bipartite graph; absent pairs are forbidden, present weights
/// are strictly positive.
#[derive(Clone, Debug)]
pub struct WeightedBipartite {
    left: usize,
    right: usize,
    weights: Vec<Vec<Option<Prob>>>,
}

impl WeightedBipartite {
    pub fn new(
        left_size: usize,
        right_size: usize,
        edges: Vec<(usize, usize, Prob)>,
    ) -> Result<Self, MatchingError> {
        if right_size < left_size {
            return Err(MatchingError::InvalidDimensions);
        }
        let mut weights = vec![vec![None; right_size]; left_size];
        for (i, j, w) in edges {
            if i >= left_size || j >= right_size {
                return Err(MatchingError::IndexOutOfRange);
            }
            if w.is_zero() {
                return Err(MatchingError::NonPositiveWeight);
            }
            if weights[i][j].is_some() {
                return Err(MatchingError::DuplicateEdge(i, j));
            }
            weights[i][j] = Some(w);
        }
        Ok(WeightedBipartite {
            left: left_size,
            right: right_size,
            weights,
        })
    }

    pub fn left_size(&self) -> usize {
        self.left
    }

    pub fn right_size(&self) -> usize {
        self.right
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<&Prob> {
        self.weights[i][j].as_ref()
    }
}

/// An unweighted bipartite graph given by adjacency lists.
#[derive(Clone, Debug)]
pub struct UnweightedBipartite {
    left: usize,
    right: usize,
    adj: Vec<Vec<usize>>,
}

impl UnweightedBipartite {
    pub fn new(
        left_size: usize,
        right_size: usize,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self, MatchingError> {
        let mut adj = vec![Vec::new(); left_size];
        for (i, j) in edges {
            if i >= left_size || j >= right_size {
                return Err(MatchingError::IndexOutOfRange);
            }
            adj[i].push(j);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(UnweightedBipartite {
            left: left_size,
            right: right_size,
            adj,
        })
    }

    pub fn left_size(&self) -> usize {
        self.left
    }

    pub fn right_size(&self) -> usize {
        self.right
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }
}

/// Result of a saturation attempt: either a left-saturating matching or a
/// minimal Hall violator certifying that none exists.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum MatchOutcome {
    /// `matching[i]` is the right vertex matched to left vertex `i`.
    Matching(Vec<usize>),
    /// A set `Z` of left vertices with `|Z| > |N(Z)|` whose proper subsets
    /// all satisfy Hall's condition.
    HallViolator(BTreeSet<usize>),
}

/// Kuhn's augmenting-path maximum matching; deterministic given the
/// adjacency order.
fn kuhn(adj: &[Vec<usize>], right: usize) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let n = adj.len();
    let mut match_l = vec![None; n];
    let mut match_r = vec![None; right];
    fn augment(
        i: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        match_l: &mut [Option<usize>],
        match_r: &mut [Option<usize>],
    ) -> bool {
        // take the first free neighbor before displacing anyone
        for &j in &adj[i] {
            if !seen[j] && match_r[j].is_none() {
                seen[j] = true;
                match_l[i] = Some(j);
                match_r[j] = Some(i);
                return true;
            }
        }
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                let i2 = match_r[j].expect("free vertices were handled above");
                if augment(i2, adj, seen, match_l, match_r) {
                    match_l[i] = Some(j);
                    match_r[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    for i in 0..n {
        let mut seen = vec![false; right];
        augment(i, adj, &mut seen, &mut match_l, &mut match_r);
    }
    (match_l, match_r)
}

/// Left vertices reachable from `start` by alternating paths
/// (unmatched edge right-ward, matched edge left-ward) under a maximum
/// matching. This set is a minimal Hall violator.
fn alternating_reachable(
    adj: &[Vec<usize>],
    match_r: &[Option<usize>],
    start: usize,
) -> BTreeSet<usize> {
    let mut in_z = BTreeSet::new();
    in_z.insert(start);
    let mut seen_r = vec![false; match_r.len()];
    let mut queue = vec![start];
    while let Some(i) = queue.pop() {
        for &j in &adj[i] {
            if !seen_r[j] {
                seen_r[j] = true;
                // the matching is maximum, so every reachable right vertex is matched
                let i2 = match_r[j].expect("augmenting path under a maximum matching");
                if in_z.insert(i2) {
                    queue.push(i2);
                }
            }
        }
    }
    in_z
}

/// Returns a left-saturating matching if one exists, otherwise a minimal
/// Hall violator (from the smallest-index unmatched left vertex).
pub fn max_cardinality_matching(g: &UnweightedBipartite) -> MatchOutcome {
    let (match_l, match_r) = kuhn(&g.adj, g.right);
    match match_l.iter().position(|x| x.is_none()) {
        None => MatchOutcome::Matching(match_l.into_iter().map(|x| x.unwrap()).collect()),
        Some(unmatched) => {
            MatchOutcome::HallViolator(alternating_reachable(&g.adj, &match_r, unmatched))
        }
    }
}

/// Minimal Hall violator of a graph with no left-saturating matching.
pub fn minimal_hall_violator(g: &UnweightedBipartite) -> Result<BTreeSet<usize>, MatchingError> {
    match max_cardinality_matching(g) {
        MatchOutcome::Matching(_) => Err(MatchingError::NoViolator),
        MatchOutcome::HallViolator(z) => Ok(z),
    }
}

/// Element of the ordered abelian group used for matching weights: a positive
/// rational combined multiplicatively, and an integer tie component combined
/// additively, compared lexicographically.
#[derive(Clone, PartialEq, Eq, Debug)]
struct GroupWeight {
    factor: BigRational,
    tie: BigInt,
}

impl GroupWeight {
    fn identity() -> Self {
        GroupWeight {
            factor: BigRational::one(),
            tie: BigInt::zero(),
        }
    }

    fn is_identity(&self) -> bool {
        self.factor.is_one() && self.tie.is_zero()
    }

    fn combine(&self, other: &Self) -> Self {
        GroupWeight {
            factor: &self.factor * &other.factor,
            tie: &self.tie + &other.tie,
        }
    }

    fn divide(&self, other: &Self) -> Self {
        GroupWeight {
            factor: &self.factor / &other.factor,
            tie: &self.tie - &other.tie,
        }
    }
}

impl PartialOrd for GroupWeight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupWeight {
    fn cmp(&self, other: &Self) -> Ordering {
        self.factor
            .cmp(&other.factor)
            .then_with(|| self.tie.cmp(&other.tie))
    }
}

/// Hungarian algorithm for maximum group-weight left-perfect matching on a
/// (possibly incomplete) bipartite graph. Requires that a left-perfect
/// matching exists among the present edges.
fn hungarian_max(weights: &[Vec<Option<GroupWeight>>], right: usize) -> Vec<usize> {
    let n = weights.len();
    let mut u: Vec<GroupWeight> = weights
        .iter()
        .map(|row| {
            row.iter()
                .flatten()
                .max()
                .expect("every left vertex has an edge")
                .clone()
        })
        .collect();
    let mut v: Vec<GroupWeight> = vec![GroupWeight::identity(); right];
    let mut match_l: Vec<Option<usize>> = vec![None; n];
    let mut match_r: Vec<Option<usize>> = vec![None; right];

    for root in 0..n {
        // slack[j] = min over i in the tree of u[i]*v[j]/w[i][j], with the
        // arg-min left vertex; None when no tree vertex has an edge to j.
        let mut slack: Vec<Option<(GroupWeight, usize)>> = vec![None; right];
        for (j, s) in slack.iter_mut().enumerate() {
            if let Some(w) = &weights[root][j] {
                *s = Some((u[root].combine(&v[j]).divide(w), root));
            }
        }
        let mut in_s = vec![false; n];
        in_s[root] = true;
        let mut in_t = vec![false; right];
        let mut parent = vec![usize::MAX; right];

        loop {
            let mut best: Option<(usize, GroupWeight)> = None;
            for (j, s) in slack.iter().enumerate() {
                if in_t[j] {
                    continue;
                }
                if let Some((val, _)) = s {
                    if best.as_ref().map_or(true, |(_, bv)| val < bv) {
                        best = Some((j, val.clone()));
                    }
                }
            }
            let (jstar, delta) =
                best.expect("no perfect matching despite a successful feasibility check");
            if !delta.is_identity() {
                for i in 0..n {
                    if in_s[i] {
                        u[i] = u[i].divide(&delta);
                    }
                }
                for j in 0..right {
                    if in_t[j] {
                        v[j] = v[j].combine(&delta);
                    } else if let Some((val, _)) = &mut slack[j] {
                        *val = val.divide(&delta);
                    }
                }
            }
            in_t[jstar] = true;
            parent[jstar] = slack[jstar].as_ref().unwrap().1;
            match match_r[jstar] {
                None => {
                    // augment along the alternating tree back to the root
                    let mut j = jstar;
                    loop {
                        let i = parent[j];
                        let prev = match_l[i];
                        match_l[i] = Some(j);
                        match_r[j] = Some(i);
                        match prev {
                            Some(pj) => j = pj,
                            None => break,
                        }
                    }
                    break;
                }
                Some(i2) => {
                    in_s[i2] = true;
                    for j in 0..right {
                        if in_t[j] {
                            continue;
                        }
                        if let Some(w) = &weights[i2][j] {
                            let cand = u[i2].combine(&v[j]).divide(w);
                            let better = match &slack[j] {
                                None => true,
                                Some((cur, _)) => cand < *cur,
                            };
                            if better {
                                slack[j] = Some((cand, i2));
                            }
                        }
                    }
                }
            }
        }
    }

    match_l.into_iter().map(|x| x.unwrap()).collect()
}

/// Maximum-product left-perfect matching.
///
/// Returns the matching (as `left index -> right index`) together with the
/// exact product of its edge weights, or `None` when no left-perfect matching
/// exists among the positive edges. Among product-optimal matchings the
/// lexicographically smallest by (left index, right index) is returned.
pub fn max_product_perfect_matching(g: &WeightedBipartite) -> Option<(Vec<usize>, Prob)> {
    let n = g.left;
    if n == 0 {
        return Some((Vec::new(), Prob::one()));
    }
    let adj: Vec<Vec<usize>> = g
        .weights
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter_map(|(j, w)| w.as_ref().map(|_| j))
                .collect()
        })
        .collect();
    let (match_l, _) = kuhn(&adj, g.right);
    if match_l.iter().any(|x| x.is_none()) {
        return None;
    }

    // Tie component: matching (r_0, ..., r_{n-1}) contributes
    // -sum_i B^(n-1-i) * r_i with B > right_size, so maximizing the tie sum
    // minimizes the right-index sequence lexicographically.
    let base = BigInt::from(g.right + 1);
    let mut scale = vec![BigInt::one(); n];
    for i in (0..n.saturating_sub(1)).rev() {
        scale[i] = &scale[i + 1] * &base;
    }
    let weights: Vec<Vec<Option<GroupWeight>>> = g
        .weights
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, w)| {
                    w.as_ref().map(|p| GroupWeight {
                        factor: p.as_ratio().clone(),
                        tie: -(&scale[i] * BigInt::from(j)),
                    })
                })
                .collect()
        })
        .collect();

    let matching = hungarian_max(&weights, g.right);
    let mut product = Prob::one();
    for (i, &j) in matching.iter().enumerate() {
        product *= g.weights[i][j].as_ref().unwrap();
    }
    Some((matching, product))
}
