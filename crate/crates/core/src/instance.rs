//! Problem instances: agents, houses and a preference structure under one of
//! the four uncertainty models, plus allocations.
//!
//! An [`Instance`] can only be obtained through [`validate_instance`], which
//! checks every model invariant and canonicalizes the representation (orders
//! sorted, duplicate lottery orders and joint profiles merged by summing
//! their weights).

use std::fmt;

use thiserror::Error;

use crate::order::{LinearOrder, WeakOrder};
use crate::prob::Prob;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValidateError {
    #[error("not a probability distribution: {0}")]
    NonProbability(String),
    #[error("invalid preference order: {0}")]
    NotAPermutation(String),
    #[error("inconsistent pairwise probabilities: {0}")]
    PairwiseInconsistent(String),
    #[error("{houses} houses for {agents} agents; at least as many houses as agents are required")]
    TooFewHouses { agents: usize, houses: usize },
    #[error("empty preference support: {0}")]
    EmptySupport(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AllocationError {
    #[error("house index {house} out of range for {houses} houses")]
    HouseOutOfRange { house: usize, houses: usize },
    #[error("house {house} assigned to more than one agent")]
    DuplicateHouse { house: usize },
}

/// Which uncertainty model an instance uses.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum ModelKind {
    Lottery,
    Compact,
    Joint,
    Pairwise,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lottery => "lottery",
            ModelKind::Compact => "compact",
            ModelKind::Joint => "joint",
            ModelKind::Pairwise => "pairwise",
        }
    }

    /// The joint model is the only one whose agents are not independent.
    pub fn is_independent(self) -> bool {
        !matches!(self, ModelKind::Joint)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-agent distributions over strict orders; agents draw independently.
#[derive(Clone, PartialEq, Debug)]
pub struct LotteryPrefs {
    /// `agents[i]` is agent `i`'s support: distinct orders with positive
    /// weights summing to one, sorted by ranking.
    pub agents: Vec<Vec<(Prob, LinearOrder)>>,
}

/// One weak order per agent; every linear extension is equally likely, and
/// agents break ties independently.
#[derive(Clone, PartialEq, Debug)]
pub struct CompactPrefs {
    pub agents: Vec<WeakOrder>,
}

impl CompactPrefs {
    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_houses(&self) -> usize {
        self.agents.first().map_or(0, |w| w.num_houses())
    }
}

/// A single distribution over whole strict preference profiles.
#[derive(Clone, PartialEq, Debug)]
pub struct JointPrefs {
    /// Distinct profiles with positive weights summing to one; each profile
    /// holds one order per agent.
    pub profiles: Vec<(Prob, Vec<LinearOrder>)>,
}

/// Independent pairwise comparison probabilities per agent.
#[derive(Clone, PartialEq, Debug)]
pub struct PairwisePrefs {
    /// `agents[i][a][b]` is the probability that agent `i` prefers house `a`
    /// to house `b`; complementary entries sum to one, the diagonal is unused
    /// and normalized to zero.
    pub agents: Vec<Vec<Vec<Prob>>>,
}

#[derive(Clone, PartialEq, Debug)]
pub enum Prefs {
    Lottery(LotteryPrefs),
    Compact(CompactPrefs),
    Joint(JointPrefs),
    Pairwise(PairwisePrefs),
}

/// A validated house allocation instance. Immutable after construction.
#[derive(Clone, PartialEq, Debug)]
pub struct Instance {
    num_agents: usize,
    num_houses: usize,
    house_names: Vec<String>,
    prefs: Prefs,
}

impl Instance {
    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_houses(&self) -> usize {
        self.num_houses
    }

    pub fn house_names(&self) -> &[String] {
        &self.house_names
    }

    pub fn house_name(&self, h: usize) -> &str {
        &self.house_names[h]
    }

    pub fn prefs(&self) -> &Prefs {
        &self.prefs
    }

    pub fn model(&self) -> ModelKind {
        match self.prefs {
            Prefs::Lottery(_) => ModelKind::Lottery,
            Prefs::Compact(_) => ModelKind::Compact,
            Prefs::Joint(_) => ModelKind::Joint,
            Prefs::Pairwise(_) => ModelKind::Pairwise,
        }
    }

    pub fn is_independent(&self) -> bool {
        self.model().is_independent()
    }

    pub fn compact_prefs(&self) -> Option<&CompactPrefs> {
        match &self.prefs {
            Prefs::Compact(p) => Some(p),
            _ => None,
        }
    }

    /// Turns the instance back into raw form; validating the result yields an
    /// equal instance.
    pub fn to_raw(&self) -> RawInstance {
        let prefs = match &self.prefs {
            Prefs::Lottery(p) => RawPrefs::Lottery(
                p.agents
                    .iter()
                    .map(|sup| {
                        sup.iter()
                            .map(|(w, o)| (w.clone(), o.ranking().to_vec()))
                            .collect()
                    })
                    .collect(),
            ),
            Prefs::Compact(p) => RawPrefs::Compact(
                p.agents
                    .iter()
                    .map(|w| w.classes().to_vec())
                    .collect(),
            ),
            Prefs::Joint(p) => RawPrefs::Joint(
                p.profiles
                    .iter()
                    .map(|(w, profile)| {
                        (
                            w.clone(),
                            profile.iter().map(|o| o.ranking().to_vec()).collect(),
                        )
                    })
                    .collect(),
            ),
            Prefs::Pairwise(p) => RawPrefs::Pairwise(p.agents.clone()),
        };
        RawInstance {
            num_agents: self.num_agents,
            num_houses: self.num_houses,
            house_names: self.house_names.clone(),
            prefs,
        }
    }
}

/// Unvalidated instance data, indexed by dense house indices.
#[derive(Clone, PartialEq, Debug)]
pub struct RawInstance {
    pub num_agents: usize,
    pub num_houses: usize,
    pub house_names: Vec<String>,
    pub prefs: RawPrefs,
}

#[derive(Clone, PartialEq, Debug)]
pub enum RawPrefs {
    Lottery(Vec<Vec<(Prob, Vec<usize>)>>),
    Compact(Vec<Vec<Vec<usize>>>),
    Joint(Vec<(Prob, Vec<Vec<usize>>)>),
    Pairwise(Vec<Vec<Vec<Prob>>>),
}

pub fn default_house_names(m: usize) -> Vec<String> {
    (0..m).map(|h| format!("h{h}")).collect()
}

fn check_weight(w: &Prob, what: &str) -> Result<(), ValidateError> {
    if w.is_zero() || !w.is_probability() {
        return Err(ValidateError::NonProbability(format!(
            "{what} has weight {w}, which is outside (0, 1]"
        )));
    }
    Ok(())
}

fn check_weight_sum(sum: &Prob, what: &str) -> Result<(), ValidateError> {
    if !sum.is_one() {
        return Err(ValidateError::NonProbability(format!(
            "{what} weights sum to {sum}, expected exactly 1"
        )));
    }
    Ok(())
}

fn build_order(ranking: Vec<usize>, m: usize, what: &str) -> Result<LinearOrder, ValidateError> {
    if ranking.len() != m {
        return Err(ValidateError::NotAPermutation(format!(
            "{what} ranks {} houses, expected {m}",
            ranking.len()
        )));
    }
    LinearOrder::new(ranking)
        .map_err(|_| ValidateError::NotAPermutation(format!("{what} is not a permutation")))
}

/// Validates raw instance data and canonicalizes it into an [`Instance`].
pub fn validate_instance(raw: RawInstance) -> Result<Instance, ValidateError> {
    let n = raw.num_agents;
    let m = raw.num_houses;
    if m < n {
        return Err(ValidateError::TooFewHouses {
            agents: n,
            houses: m,
        });
    }
    if raw.house_names.len() != m {
        return Err(ValidateError::NotAPermutation(format!(
            "{} house names for {m} houses",
            raw.house_names.len()
        )));
    }
    {
        let mut names = raw.house_names.clone();
        names.sort();
        names.dedup();
        if names.len() != m {
            return Err(ValidateError::NotAPermutation(
                "duplicate house names".to_string(),
            ));
        }
    }

    let prefs = match raw.prefs {
        RawPrefs::Lottery(agents) => {
            if agents.len() != n {
                return Err(ValidateError::EmptySupport(format!(
                    "{} lottery supports for {n} agents",
                    agents.len()
                )));
            }
            let mut out = Vec::with_capacity(n);
            for (i, support) in agents.into_iter().enumerate() {
                if support.is_empty() {
                    return Err(ValidateError::EmptySupport(format!(
                        "agent {i} has no support orders"
                    )));
                }
                let mut entries = Vec::with_capacity(support.len());
                for (w, ranking) in support {
                    check_weight(&w, &format!("agent {i} order"))?;
                    entries.push((w, build_order(ranking, m, &format!("agent {i} order"))?));
                }
                entries.sort_by(|a, b| a.1.cmp(&b.1));
                let mut merged: Vec<(Prob, LinearOrder)> = Vec::with_capacity(entries.len());
                for (w, o) in entries {
                    match merged.last_mut() {
                        Some((mw, mo)) if *mo == o => *mw += &w,
                        _ => merged.push((w, o)),
                    }
                }
                let sum: Prob = merged.iter().map(|(w, _)| w.clone()).sum();
                check_weight_sum(&sum, &format!("agent {i}"))?;
                out.push(merged);
            }
            Prefs::Lottery(LotteryPrefs { agents: out })
        }
        RawPrefs::Compact(agents) => {
            if agents.len() != n {
                return Err(ValidateError::EmptySupport(format!(
                    "{} weak orders for {n} agents",
                    agents.len()
                )));
            }
            let mut out = Vec::with_capacity(n);
            for (i, classes) in agents.into_iter().enumerate() {
                let total: usize = classes.iter().map(|c| c.len()).sum();
                if total != m {
                    return Err(ValidateError::NotAPermutation(format!(
                        "agent {i} weak order covers {total} houses, expected {m}"
                    )));
                }
                let w = WeakOrder::new(classes).map_err(|_| {
                    ValidateError::NotAPermutation(format!(
                        "agent {i} weak order does not partition the houses"
                    ))
                })?;
                out.push(w);
            }
            Prefs::Compact(CompactPrefs { agents: out })
        }
        RawPrefs::Joint(profiles) => {
            if profiles.is_empty() {
                return Err(ValidateError::EmptySupport(
                    "joint distribution has no profiles".to_string(),
                ));
            }
            let mut entries = Vec::with_capacity(profiles.len());
            for (idx, (w, profile)) in profiles.into_iter().enumerate() {
                check_weight(&w, &format!("profile {idx}"))?;
                if profile.len() != n {
                    return Err(ValidateError::NotAPermutation(format!(
                        "profile {idx} has {} orders for {n} agents",
                        profile.len()
                    )));
                }
                let mut orders = Vec::with_capacity(n);
                for (i, ranking) in profile.into_iter().enumerate() {
                    orders.push(build_order(
                        ranking,
                        m,
                        &format!("profile {idx} agent {i}"),
                    )?);
                }
                entries.push((w, orders));
            }
            entries.sort_by(|a, b| a.1.cmp(&b.1));
            let mut merged: Vec<(Prob, Vec<LinearOrder>)> = Vec::with_capacity(entries.len());
            for (w, p) in entries {
                match merged.last_mut() {
                    Some((mw, mp)) if *mp == p => *mw += &w,
                    _ => merged.push((w, p)),
                }
            }
            let sum: Prob = merged.iter().map(|(w, _)| w.clone()).sum();
            check_weight_sum(&sum, "joint profile")?;
            Prefs::Joint(JointPrefs { profiles: merged })
        }
        RawPrefs::Pairwise(agents) => {
            if agents.len() != n {
                return Err(ValidateError::EmptySupport(format!(
                    "{} pairwise matrices for {n} agents",
                    agents.len()
                )));
            }
            let mut out = Vec::with_capacity(n);
            for (i, mut matrix) in agents.into_iter().enumerate() {
                if matrix.len() != m || matrix.iter().any(|row| row.len() != m) {
                    return Err(ValidateError::PairwiseInconsistent(format!(
                        "agent {i} matrix is not {m}x{m}"
                    )));
                }
                for a in 0..m {
                    matrix[a][a] = Prob::zero();
                    for b in 0..m {
                        if a == b {
                            continue;
                        }
                        let p = &matrix[a][b];
                        if !p.is_probability() {
                            return Err(ValidateError::NonProbability(format!(
                                "agent {i} p[{a}][{b}] = {p} is outside [0, 1]"
                            )));
                        }
                        if a < b {
                            let total = matrix[a][b].clone() + &matrix[b][a];
                            if !total.is_one() {
                                return Err(ValidateError::PairwiseInconsistent(format!(
                                    "agent {i}: p[{a}][{b}] + p[{b}][{a}] = {total}, expected 1"
                                )));
                            }
                        }
                    }
                }
                out.push(matrix);
            }
            Prefs::Pairwise(PairwisePrefs { agents: out })
        }
    };

    Ok(Instance {
        num_agents: n,
        num_houses: m,
        house_names: raw.house_names,
        prefs,
    })
}

/// An injective assignment of one house to each agent.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Allocation {
    assigned: Vec<usize>,
}

impl Allocation {
    pub fn new(assigned: Vec<usize>, num_houses: usize) -> Result<Self, AllocationError> {
        let mut used = vec![false; num_houses];
        for &h in &assigned {
            if h >= num_houses {
                return Err(AllocationError::HouseOutOfRange {
                    house: h,
                    houses: num_houses,
                });
            }
            if used[h] {
                return Err(AllocationError::DuplicateHouse { house: h });
            }
            used[h] = true;
        }
        Ok(Allocation { assigned })
    }

    pub fn num_agents(&self) -> usize {
        self.assigned.len()
    }

    /// House assigned to agent `i`.
    pub fn house(&self, i: usize) -> usize {
        self.assigned[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.assigned
    }

    /// Boolean mask over `0..num_houses` marking allocated houses.
    pub fn used_houses(&self, num_houses: usize) -> Vec<bool> {
        let mut used = vec![false; num_houses];
        for &h in &self.assigned {
            used[h] = true;
        }
        used
    }

    /// Sorted list of the allocated houses.
    pub fn used_sorted(&self) -> Vec<usize> {
        let mut v = self.assigned.clone();
        v.sort_unstable();
        v
    }
}
