//! Exact envy-freeness probability of a fixed allocation.
//!
//! For the independent models the probability factors into per-agent
//! non-envy probabilities `q_i`; for the joint model it is the total weight
//! of the profiles under which the allocation is envy-free. Houses that are
//! not allocated never create envy.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::instance::{Allocation, Instance, Prefs};
use crate::order::LinearOrder;
use crate::prob::Prob;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EfProbError {
    #[error("allocation covers {got} agents / houses up to {max_house}, instance has {want} agents and {houses} houses")]
    ModelMismatch {
        got: usize,
        want: usize,
        max_house: usize,
        houses: usize,
    },
}

/// Per-agent breakdown of an EF-probability computation.
#[derive(Clone, PartialEq, Debug)]
pub struct AgentEnvyReport {
    /// Marginal probability that each agent is non-envious. For the
    /// independent models the overall probability is the product of these;
    /// for the joint model it generally is not.
    pub q: Vec<Prob>,
    /// Compact model only: for each agent `i`, the set of agents `j` whose
    /// house is tied with agent `i`'s own (always contains `i` itself when no
    /// strict envy exists).
    pub tie_sets: Option<Vec<BTreeSet<usize>>>,
    /// Exact probability that the allocation is envy-free.
    pub overall: Prob,
}

fn check(inst: &Instance, w: &Allocation) -> Result<(), EfProbError> {
    let max_house = w.as_slice().iter().copied().max().unwrap_or(0);
    if w.num_agents() != inst.num_agents() || max_house >= inst.num_houses() {
        return Err(EfProbError::ModelMismatch {
            got: w.num_agents(),
            want: inst.num_agents(),
            max_house,
            houses: inst.num_houses(),
        });
    }
    Ok(())
}

/// True when agent `i` holding `w.house(i)` is non-envious under the strict
/// order `o`, i.e. its own house beats every other allocated house.
fn non_envious_in_order(o: &LinearOrder, own: usize, used: &[bool]) -> bool {
    o.top_among(used) == Some(own)
}

/// Exact probability that `w` is envy-free under the instance's model.
pub fn ef_prob(inst: &Instance, w: &Allocation) -> Result<Prob, EfProbError> {
    ef_prob_report(inst, w).map(|r| r.overall)
}

/// Like [`ef_prob`] but also reports per-agent marginals.
pub fn ef_prob_report(inst: &Instance, w: &Allocation) -> Result<AgentEnvyReport, EfProbError> {
    check(inst, w)?;
    let n = inst.num_agents();
    let used = w.used_houses(inst.num_houses());
    match inst.prefs() {
        Prefs::Lottery(prefs) => {
            let mut q = Vec::with_capacity(n);
            for i in 0..n {
                let mut qi = Prob::zero();
                for (weight, order) in &prefs.agents[i] {
                    if non_envious_in_order(order, w.house(i), &used) {
                        qi += weight;
                    }
                }
                q.push(qi);
            }
            let overall = q.iter().fold(Prob::one(), |acc, qi| acc * qi);
            Ok(AgentEnvyReport {
                q,
                tie_sets: None,
                overall,
            })
        }
        Prefs::Compact(prefs) => {
            let mut q = Vec::with_capacity(n);
            let mut tie_sets = Vec::with_capacity(n);
            let mut overall = Prob::one();
            for i in 0..n {
                let order = &prefs.agents[i];
                let own_rank = order.rank(w.house(i));
                let strict_envy = (0..n).any(|j| order.rank(w.house(j)) < own_rank);
                let ties: BTreeSet<usize> = (0..n)
                    .filter(|&j| order.rank(w.house(j)) == own_rank)
                    .collect();
                if strict_envy {
                    q.push(Prob::zero());
                    overall = Prob::zero();
                } else {
                    let qi = Prob::new(1, ties.len() as u64);
                    overall *= &qi;
                    q.push(qi);
                }
                tie_sets.push(ties);
            }
            Ok(AgentEnvyReport {
                q,
                tie_sets: Some(tie_sets),
                overall,
            })
        }
        Prefs::Joint(prefs) => {
            let mut q = vec![Prob::zero(); n];
            let mut overall = Prob::zero();
            for (weight, profile) in &prefs.profiles {
                let mut all_ef = true;
                for i in 0..n {
                    if non_envious_in_order(&profile[i], w.house(i), &used) {
                        q[i] += weight;
                    } else {
                        all_ef = false;
                    }
                }
                if all_ef {
                    overall += weight;
                }
            }
            Ok(AgentEnvyReport {
                q,
                tie_sets: None,
                overall,
            })
        }
        Prefs::Pairwise(prefs) => {
            let mut q = Vec::with_capacity(n);
            for i in 0..n {
                let matrix = &prefs.agents[i];
                let own = w.house(i);
                let mut qi = Prob::one();
                for j in 0..n {
                    if j != i {
                        qi *= &matrix[own][w.house(j)];
                    }
                }
                q.push(qi);
            }
            let overall = q.iter().fold(Prob::one(), |acc, qi| acc * qi);
            Ok(AgentEnvyReport {
                q,
                tie_sets: None,
                overall,
            })
        }
    }
}

/// True iff `w` is envy-free with nonzero probability.
pub fn is_possibly_ef(inst: &Instance, w: &Allocation) -> Result<bool, EfProbError> {
    ef_prob(inst, w).map(|p| !p.is_zero())
}

/// True iff `w` is envy-free with probability one.
pub fn is_certainly_ef(inst: &Instance, w: &Allocation) -> Result<bool, EfProbError> {
    ef_prob(inst, w).map(|p| p.is_one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{default_house_names, validate_instance, RawInstance, RawPrefs};

    fn alloc(v: &[usize], m: usize) -> Allocation {
        Allocation::new(v.to_vec(), m).unwrap()
    }

    fn compact(n: usize, m: usize, classes: Vec<Vec<Vec<usize>>>) -> Instance {
        validate_instance(RawInstance {
            num_agents: n,
            num_houses: m,
            house_names: default_house_names(m),
            prefs: RawPrefs::Compact(classes),
        })
        .unwrap()
    }

    fn lottery(n: usize, m: usize, sup: Vec<Vec<(Prob, Vec<usize>)>>) -> Instance {
        validate_instance(RawInstance {
            num_agents: n,
            num_houses: m,
            house_names: default_house_names(m),
            prefs: RawPrefs::Lottery(sup),
        })
        .unwrap()
    }

    /// The single-penalty scenario: houses t=0, f=1, e1=2, e2=3, e3=4, e4=5.
    /// Owner holds f, the two penalty agents hold e1 and e2.
    fn single_penalty_instance() -> Instance {
        compact(
            3,
            6,
            vec![
                vec![vec![0, 1], vec![2], vec![3], vec![4], vec![5]],
                vec![vec![2, 3], vec![1], vec![4], vec![0], vec![5]],
                vec![vec![2, 3], vec![1], vec![5], vec![0], vec![4]],
            ],
        )
    }

    #[test]
    fn compact_penalty_gadget_quarter() {
        let inst = single_penalty_instance();
        let w = alloc(&[1, 2, 3], 6);
        let report = ef_prob_report(&inst, &w).unwrap();
        assert_eq!(report.overall, Prob::new(1, 4));
        assert_eq!(report.q, vec![Prob::one(), Prob::new(1, 2), Prob::new(1, 2)]);
        let ties = report.tie_sets.unwrap();
        assert_eq!(ties[0], BTreeSet::from([0]));
        assert_eq!(ties[1], BTreeSet::from([1, 2]));
        assert!(is_possibly_ef(&inst, &w).unwrap());
        assert!(!is_certainly_ef(&inst, &w).unwrap());
    }

    #[test]
    fn deterministic_strict_ef_allocation_is_one() {
        // strict preferences, each agent tops a different house
        let inst = compact(
            2,
            2,
            vec![vec![vec![0], vec![1]], vec![vec![1], vec![0]]],
        );
        let w = alloc(&[0, 1], 2);
        assert_eq!(ef_prob(&inst, &w).unwrap(), Prob::one());
        assert!(is_certainly_ef(&inst, &w).unwrap());
    }

    #[test]
    fn compact_strict_envy_is_zero() {
        // both agents prefer house 0 strictly; the agent holding 1 envies
        let inst = compact(
            2,
            2,
            vec![vec![vec![0], vec![1]], vec![vec![0], vec![1]]],
        );
        let w = alloc(&[0, 1], 2);
        assert_eq!(ef_prob(&inst, &w).unwrap(), Prob::zero());
        assert!(!is_possibly_ef(&inst, &w).unwrap());
    }

    #[test]
    fn compact_tie_among_allocated_not_certain() {
        let inst = compact(2, 2, vec![vec![vec![0, 1]], vec![vec![1], vec![0]]]);
        let w = alloc(&[0, 1], 2);
        assert!(!is_certainly_ef(&inst, &w).unwrap());
        assert_eq!(ef_prob(&inst, &w).unwrap(), Prob::new(1, 2));
    }

    #[test]
    fn lottery_uniform_pair_is_quarter() {
        // both agents uniform over {a>b, b>a}; w = (a, b)
        let sup = vec![
            vec![
                (Prob::new(1, 2), vec![0, 1]),
                (Prob::new(1, 2), vec![1, 0]),
            ];
            2
        ];
        let inst = lottery(2, 2, sup);
        let w = alloc(&[0, 1], 2);
        let report = ef_prob_report(&inst, &w).unwrap();
        assert_eq!(report.q, vec![Prob::new(1, 2), Prob::new(1, 2)]);
        assert_eq!(report.overall, Prob::new(1, 4));
        assert!(is_possibly_ef(&inst, &w).unwrap());
    }

    #[test]
    fn lottery_certain_when_topped_everywhere() {
        let sup = vec![
            vec![
                (Prob::new(1, 2), vec![0, 1, 2]),
                (Prob::new(1, 2), vec![0, 2, 1]),
            ],
            vec![(Prob::one(), vec![1, 0, 2])],
        ];
        let inst = lottery(2, 3, sup);
        let w = alloc(&[0, 1], 3);
        assert!(is_certainly_ef(&inst, &w).unwrap());
    }

    #[test]
    fn pairwise_half_half_is_quarter() {
        let mut matrix = vec![vec![Prob::zero(); 2]; 2];
        matrix[0][1] = Prob::new(1, 2);
        matrix[1][0] = Prob::new(1, 2);
        let inst = validate_instance(RawInstance {
            num_agents: 2,
            num_houses: 2,
            house_names: default_house_names(2),
            prefs: RawPrefs::Pairwise(vec![matrix.clone(), matrix]),
        })
        .unwrap();
        let w = alloc(&[0, 1], 2);
        assert_eq!(ef_prob(&inst, &w).unwrap(), Prob::new(1, 4));
    }

    #[test]
    fn joint_half_weight_profiles() {
        // two profiles, each weight 1/2; EF under exactly one
        let raw = RawInstance {
            num_agents: 2,
            num_houses: 2,
            house_names: default_house_names(2),
            prefs: RawPrefs::Joint(vec![
                (Prob::new(1, 2), vec![vec![0, 1], vec![1, 0]]),
                (Prob::new(1, 2), vec![vec![1, 0], vec![1, 0]]),
            ]),
        };
        let inst = validate_instance(raw).unwrap();
        let w = alloc(&[0, 1], 2);
        assert_eq!(ef_prob(&inst, &w).unwrap(), Prob::new(1, 2));
    }

    #[test]
    fn allocation_length_mismatch() {
        let inst = compact(2, 3, vec![vec![vec![0], vec![1], vec![2]]; 2]);
        let w = alloc(&[0], 3);
        assert!(matches!(
            ef_prob(&inst, &w),
            Err(EfProbError::ModelMismatch { .. })
        ));
    }

    #[test]
    fn unallocated_houses_are_ignored() {
        // agent 0 loves house 2, but nobody holds it
        let inst = compact(
            2,
            3,
            vec![
                vec![vec![2], vec![0], vec![1]],
                vec![vec![1], vec![0], vec![2]],
            ],
        );
        let w = alloc(&[0, 1], 3);
        assert_eq!(ef_prob(&inst, &w).unwrap(), Prob::one());
    }
}
