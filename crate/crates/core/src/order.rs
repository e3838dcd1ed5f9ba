//! Preference orders: strict linear orders and weak orders with ties.

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

/// Default bound on the number of linear extensions [`linear_extensions`]
/// will enumerate.
pub const DEFAULT_EXTENSION_CAP: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderError {
    #[error("ranking is not a permutation of the house indices")]
    NotAPermutation,
    #[error("tie classes do not partition the house indices")]
    NotAPartition,
    #[error("{count} linear extensions exceed the cap of {cap}")]
    CapExceeded { count: BigUint, cap: u64 },
}

/// A strict total order over houses `0..m`; position 0 is the most preferred.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct LinearOrder {
    ranking: Vec<usize>,
    position: Vec<usize>,
}

impl LinearOrder {
    pub fn new(ranking: Vec<usize>) -> Result<Self, OrderError> {
        let m = ranking.len();
        let mut position = vec![usize::MAX; m];
        for (pos, &h) in ranking.iter().enumerate() {
            if h >= m || position[h] != usize::MAX {
                return Err(OrderError::NotAPermutation);
            }
            position[h] = pos;
        }
        Ok(LinearOrder { ranking, position })
    }

    pub fn num_houses(&self) -> usize {
        self.ranking.len()
    }

    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    pub fn position(&self, house: usize) -> usize {
        self.position[house]
    }

    /// True when `a` is strictly preferred to `b`.
    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.position[a] < self.position[b]
    }

    /// The best-ranked house among those marked in `mask`, or `None` if no
    /// marked house exists.
    pub fn top_among(&self, mask: &[bool]) -> Option<usize> {
        self.ranking.iter().copied().find(|&h| mask[h])
    }
}

/// A weak order over houses `0..m`: an ordered sequence of nonempty disjoint
/// tie classes whose union is all houses; earlier classes are strictly
/// preferred to later ones.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct WeakOrder {
    classes: Vec<Vec<usize>>,
    rank: Vec<usize>,
}

impl WeakOrder {
    /// Builds a weak order; classes are canonicalized to ascending house
    /// indices internally.
    pub fn new(classes: Vec<Vec<usize>>) -> Result<Self, OrderError> {
        let m: usize = classes.iter().map(|c| c.len()).sum();
        let mut rank = vec![usize::MAX; m];
        let mut canonical = Vec::with_capacity(classes.len());
        for (r, class) in classes.into_iter().enumerate() {
            if class.is_empty() {
                return Err(OrderError::NotAPartition);
            }
            let mut class = class;
            class.sort_unstable();
            for &h in &class {
                if h >= m || rank[h] != usize::MAX {
                    return Err(OrderError::NotAPartition);
                }
                rank[h] = r;
            }
            canonical.push(class);
        }
        Ok(WeakOrder {
            classes: canonical,
            rank,
        })
    }

    pub fn from_linear(order: &LinearOrder) -> Self {
        WeakOrder::new(order.ranking().iter().map(|&h| vec![h]).collect())
            .expect("a linear order is a valid weak order")
    }

    pub fn num_houses(&self) -> usize {
        self.rank.len()
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    /// Index of the tie class containing `house` (0 = best).
    pub fn rank(&self, house: usize) -> usize {
        self.rank[house]
    }

    pub fn strictly_prefers(&self, a: usize, b: usize) -> bool {
        self.rank[a] < self.rank[b]
    }

    pub fn indifferent(&self, a: usize, b: usize) -> bool {
        self.rank[a] == self.rank[b]
    }

    pub fn is_strict(&self) -> bool {
        self.classes.iter().all(|c| c.len() == 1)
    }
}

/// Number of linear extensions of `w`: the product of the factorials of the
/// tie class sizes.
pub fn extension_count(w: &WeakOrder) -> BigUint {
    let mut count = BigUint::one();
    for class in w.classes() {
        for k in 2..=class.len() {
            count *= BigUint::from(k);
        }
    }
    count
}

/// Enumerates every linear extension of `w`, i.e. every strict order obtained
/// by permuting the houses inside each tie class.
pub fn linear_extensions(w: &WeakOrder, cap: u64) -> Result<Vec<LinearOrder>, OrderError> {
    let count = extension_count(w);
    if count > BigUint::from(cap) {
        return Err(OrderError::CapExceeded { count, cap });
    }
    let per_class: Vec<Vec<Vec<usize>>> = w
        .classes()
        .iter()
        .map(|class| {
            class
                .iter()
                .copied()
                .permutations(class.len())
                .collect::<Vec<_>>()
        })
        .collect();
    let mut out = Vec::new();
    for combo in per_class.into_iter().multi_cartesian_product() {
        let ranking: Vec<usize> = combo.into_iter().flatten().collect();
        out.push(LinearOrder::new(ranking).expect("extension is a permutation"));
    }
    Ok(out)
}
