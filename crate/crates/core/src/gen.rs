//! Instance generators: seeded random instances per model, and reduction
//! constructions that turn classic hard problems (restricted exact cover,
//! independent set) or other-model instances into house allocation
//! instances, used to build validation corpora.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{
    default_house_names, validate_instance, Allocation, Instance, Prefs, RawInstance, RawPrefs,
};
use crate::prob::Prob;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

fn bad(msg: impl Into<String>) -> GenError {
    GenError::InvalidParams(msg.into())
}

/// A simple undirected graph on vertices `0..num_vertices`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Graph {
    pub num_vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(num_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self, GenError> {
        let mut seen = BTreeSet::new();
        let mut canonical = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= num_vertices || v >= num_vertices {
                return Err(bad(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(bad(format!("self-loop at vertex {u}")));
            }
            let e = (u.min(v), u.max(v));
            if seen.insert(e) {
                canonical.push(e);
            }
        }
        Ok(Graph {
            num_vertices,
            edges: canonical,
        })
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let e = (u.min(v), u.max(v));
        self.edges.contains(&e)
    }
}

/// Model-specific parameters for the random instance generator.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RandomModel {
    /// Uniform weights over `support` distinct random strict orders per agent.
    Lottery { support: usize },
    /// Random weak orders with tie classes of size at most `max_class`.
    Compact { max_class: usize },
    /// Uniform weights over `support` distinct random strict profiles.
    Joint { support: usize },
    /// Pairwise probabilities drawn from {0, 1/4, 1/2, 3/4, 1}.
    Pairwise,
}

fn factorial_capped(m: usize, cap: u64) -> u64 {
    let mut f = 1u64;
    for k in 2..=m as u64 {
        f = f.saturating_mul(k);
        if f >= cap {
            return cap;
        }
    }
    f
}

fn random_order(m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut r: Vec<usize> = (0..m).collect();
    r.shuffle(rng);
    r
}

/// Deterministic seeded random instance.
pub fn random_instance(
    model: &RandomModel,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<Instance, GenError> {
    if m < n {
        return Err(bad(format!("{m} houses for {n} agents")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prefs = match model {
        RandomModel::Lottery { support } => {
            let k = *support;
            if k == 0 {
                return Err(bad("lottery support must be positive"));
            }
            if k as u64 > factorial_capped(m, u64::MAX) {
                return Err(bad(format!("support {k} exceeds the {m}! distinct orders")));
            }
            let mut agents = Vec::with_capacity(n);
            for _ in 0..n {
                let mut orders = BTreeSet::new();
                while orders.len() < k {
                    orders.insert(random_order(m, &mut rng));
                }
                agents.push(
                    orders
                        .into_iter()
                        .map(|o| (Prob::new(1, k as u64), o))
                        .collect(),
                );
            }
            RawPrefs::Lottery(agents)
        }
        RandomModel::Compact { max_class } => {
            if *max_class == 0 {
                return Err(bad("max_class must be positive"));
            }
            let mut agents = Vec::with_capacity(n);
            for _ in 0..n {
                let shuffled = random_order(m, &mut rng);
                let mut classes = Vec::new();
                let mut rest = shuffled.as_slice();
                while !rest.is_empty() {
                    let take = rng.gen_range(1..=(*max_class).min(rest.len()));
                    classes.push(rest[..take].to_vec());
                    rest = &rest[take..];
                }
                agents.push(classes);
            }
            RawPrefs::Compact(agents)
        }
        RandomModel::Joint { support } => {
            let k = *support;
            if k == 0 {
                return Err(bad("joint support must be positive"));
            }
            let per_agent = factorial_capped(m, u64::MAX);
            let total = per_agent.saturating_pow(n.min(32) as u32);
            if n > 0 && k as u64 > total {
                return Err(bad(format!("support {k} exceeds the distinct profiles")));
            }
            let mut profiles = BTreeSet::new();
            while profiles.len() < k {
                let p: Vec<Vec<usize>> = (0..n).map(|_| random_order(m, &mut rng)).collect();
                profiles.insert(p);
            }
            RawPrefs::Joint(
                profiles
                    .into_iter()
                    .map(|p| (Prob::new(1, k as u64), p))
                    .collect(),
            )
        }
        RandomModel::Pairwise => {
            let grid = [
                Prob::zero(),
                Prob::new(1, 4),
                Prob::new(1, 2),
                Prob::new(3, 4),
                Prob::one(),
            ];
            let mut agents = Vec::with_capacity(n);
            for _ in 0..n {
                let mut matrix = vec![vec![Prob::zero(); m]; m];
                for a in 0..m {
                    for b in a + 1..m {
                        let p = grid[rng.gen_range(0..grid.len())].clone();
                        matrix[b][a] = p.one_minus().expect("grid values lie in [0, 1]");
                        matrix[a][b] = p;
                    }
                }
                agents.push(matrix);
            }
            RawPrefs::Pairwise(agents)
        }
    };
    let raw = RawInstance {
        num_agents: n,
        num_houses: m,
        house_names: default_house_names(m),
        prefs,
    };
    Ok(validate_instance(raw).expect("generated instance must validate"))
}

// ---------------------------------------------------------------------------
// Compact instances from partial preference lists.
// ---------------------------------------------------------------------------

/// A compact-model instance fragment: freshly named houses plus agents whose
/// preferences are given as partial tie-class lists over house names.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CompactFragment {
    pub new_houses: Vec<String>,
    /// Each agent: a label and its partial tie classes (best first).
    pub agents: Vec<(String, Vec<Vec<String>>)>,
}

/// Single penalty gadget around a target house: two agents and four fresh
/// houses. When the target is allocated the two agents must take the tied
/// pair `e1, e2`, multiplying the EF-probability by 1/4; when it is not,
/// they take `e3, e4` and are envy-free with certainty.
pub fn single_penalty_gadget(target_house: &str, tag: &str) -> CompactFragment {
    let e = |k: usize| format!("{tag}.e{k}");
    CompactFragment {
        new_houses: (1..=4).map(e).collect(),
        agents: vec![
            (
                format!("{tag}.a1"),
                vec![
                    vec![e(1), e(2)],
                    vec![target_house.to_string()],
                    vec![e(3)],
                ],
            ),
            (
                format!("{tag}.a2"),
                vec![
                    vec![e(1), e(2)],
                    vec![target_house.to_string()],
                    vec![e(4)],
                ],
            ),
        ],
    }
}

/// Double penalty gadget around two houses: four agents and eight fresh
/// houses. If either target is allocated, the agents must take the tied
/// quadruple `e1..e4`, multiplying the EF-probability by 1/256; otherwise
/// they take `e5..e8` and are envy-free with certainty.
pub fn double_penalty_gadget(h1: &str, h2: &str, tag: &str) -> CompactFragment {
    assert_ne!(h1, h2, "double penalty gadget needs two distinct houses");
    let e = |k: usize| format!("{tag}.e{k}");
    let top = || vec![e(1), e(2), e(3), e(4)];
    let agent = |idx: usize, target: &str| {
        (
            format!("{tag}.a{idx}"),
            vec![top(), vec![target.to_string()], vec![e(4 + idx)]],
        )
    };
    CompactFragment {
        new_houses: (1..=8).map(e).collect(),
        agents: vec![
            agent(1, h1),
            agent(2, h1),
            agent(3, h2),
            agent(4, h2),
        ],
    }
}

/// Builds a compact instance from agents with partial preference lists.
///
/// Two guard houses `g1, g2` (indices 0 and 1) and two guard agents (the
/// last two agent indices) are always present: the guards top `g1, g2` in
/// opposite orders, and every other agent's partial list is completed with
/// `g1`, then `g2`, then all unmentioned houses in ascending index order.
/// In any possibly-EF allocation the guards hold `g1` and `g2`, so no agent
/// can receive a house below its partial list.
pub struct CompactBuilder {
    houses: Vec<String>,
    index: HashMap<String, usize>,
    agents: Vec<(String, Vec<Vec<String>>)>,
}

impl CompactBuilder {
    pub fn new() -> Self {
        let mut b = CompactBuilder {
            houses: Vec::new(),
            index: HashMap::new(),
            agents: Vec::new(),
        };
        b.house("g1");
        b.house("g2");
        b
    }

    /// Registers (or looks up) a house by name, returning its index.
    pub fn house(&mut self, name: &str) -> usize {
        if let Some(&h) = self.index.get(name) {
            return h;
        }
        let h = self.houses.len();
        self.houses.push(name.to_string());
        self.index.insert(name.to_string(), h);
        h
    }

    /// Adds an agent with a partial tie-class list; returns its index.
    pub fn add_agent(&mut self, label: &str, classes: Vec<Vec<String>>) -> usize {
        for class in &classes {
            for name in class {
                self.house(name);
            }
        }
        self.agents.push((label.to_string(), classes));
        self.agents.len() - 1
    }

    /// Adds every agent of a fragment, registering its fresh houses; returns
    /// the agent indices and the fragment's house indices in order.
    pub fn apply(&mut self, frag: &CompactFragment) -> (Vec<usize>, Vec<usize>) {
        let houses = frag.new_houses.iter().map(|h| self.house(h)).collect();
        let agents = frag
            .agents
            .iter()
            .map(|(label, classes)| self.add_agent(label, classes.clone()))
            .collect();
        (agents, houses)
    }

    pub fn num_user_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_houses(&self) -> usize {
        self.houses.len()
    }

    /// Index the guard agents will have in the finished instance.
    pub fn guard_agents(&self) -> (usize, usize) {
        (self.agents.len(), self.agents.len() + 1)
    }

    pub fn finish(self) -> Instance {
        let m = self.houses.len();
        let mut classes_per_agent = Vec::with_capacity(self.agents.len() + 2);
        for (label, partial) in &self.agents {
            let mut mentioned = vec![false; m];
            let mut classes: Vec<Vec<usize>> = Vec::new();
            for class in partial {
                let ids: Vec<usize> = class
                    .iter()
                    .map(|name| {
                        *self
                            .index
                            .get(name)
                            .unwrap_or_else(|| panic!("agent {label}: unknown house {name}"))
                    })
                    .collect();
                for &h in &ids {
                    assert!(
                        !mentioned[h] && h >= 2,
                        "agent {label}: house listed twice or guard house in partial list"
                    );
                    mentioned[h] = true;
                }
                classes.push(ids);
            }
            classes.push(vec![0]);
            classes.push(vec![1]);
            for h in 2..m {
                if !mentioned[h] {
                    classes.push(vec![h]);
                }
            }
            classes_per_agent.push(classes);
        }
        // guard agents: g1 > g2 > rest, and g2 > g1 > rest
        let rest: Vec<Vec<usize>> = (2..m).map(|h| vec![h]).collect();
        let mut guard1 = vec![vec![0], vec![1]];
        guard1.extend(rest.clone());
        let mut guard2 = vec![vec![1], vec![0]];
        guard2.extend(rest);
        classes_per_agent.push(guard1);
        classes_per_agent.push(guard2);

        let raw = RawInstance {
            num_agents: classes_per_agent.len(),
            num_houses: m,
            house_names: self.houses,
            prefs: RawPrefs::Compact(classes_per_agent),
        };
        validate_instance(raw).expect("builder output must validate")
    }
}

impl Default for CompactBuilder {
    fn default() -> Self {
        Self::new()
    }
}

// ---------------------------------------------------------------------------
// Restricted 3-exact-cover -> lottery (certainly-EF hardness construction).
// ---------------------------------------------------------------------------

/// A restricted 3-exact-cover input: a ground set of `3m` elements and a
/// family of 3-element subsets in which every element appears exactly three
/// times (hence the family has exactly `3m` members).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct R3xcInput {
    pub ground_size: usize,
    pub subsets: Vec<[usize; 3]>,
}

impl R3xcInput {
    pub fn new(ground_size: usize, subsets: Vec<[usize; 3]>) -> Result<Self, GenError> {
        if ground_size == 0 || ground_size % 3 != 0 {
            return Err(bad("ground size must be a positive multiple of 3"));
        }
        let mut counts = vec![0usize; ground_size];
        let mut canonical = Vec::with_capacity(subsets.len());
        for mut s in subsets {
            s.sort_unstable();
            if s[0] == s[1] || s[1] == s[2] {
                return Err(bad(format!("subset {s:?} has repeated elements")));
            }
            for &u in &s {
                if u >= ground_size {
                    return Err(bad(format!("element {u} out of range")));
                }
                counts[u] += 1;
            }
            canonical.push(s);
        }
        if counts.iter().any(|&c| c != 3) {
            return Err(bad("every element must appear in exactly three subsets"));
        }
        Ok(R3xcInput {
            ground_size,
            subsets: canonical,
        })
    }

    /// True when some `ground_size / 3` subsets exactly cover the ground set.
    /// Exponential; intended for tiny validation inputs.
    pub fn has_exact_cover(&self) -> bool {
        fn go(input: &R3xcInput, covered: &mut [bool], from: usize, left: usize) -> bool {
            if left == 0 {
                return covered.iter().all(|&c| c);
            }
            for idx in from..input.subsets.len() {
                let s = input.subsets[idx];
                if s.iter().all(|&u| !covered[u]) {
                    for &u in &s {
                        covered[u] = true;
                    }
                    if go(input, covered, idx + 1, left - 1) {
                        return true;
                    }
                    for &u in &s {
                        covered[u] = false;
                    }
                }
            }
            false
        }
        let mut covered = vec![false; self.ground_size];
        go(self, &mut covered, 0, self.ground_size / 3)
    }
}

/// Lottery instance encoding a restricted 3-exact-cover input: one agent per
/// element, three houses per subset, and six equiprobable preference lists
/// per agent. A certainly-EF allocation exists iff the input has an exact
/// cover.
pub fn r3xc_reduction(input: &R3xcInput) -> Result<Instance, GenError> {
    let num_elements = input.ground_size;
    let num_subsets = input.subsets.len();
    let m = 3 * num_subsets;
    let house = |subset: usize, slot: usize| 3 * subset + slot;

    // the three subsets containing each element, in ascending index order
    let mut containing = vec![Vec::new(); num_elements];
    for (idx, s) in input.subsets.iter().enumerate() {
        for &u in s {
            containing[u].push(idx);
        }
    }

    let mut agents = Vec::with_capacity(num_elements);
    for elem in 0..num_elements {
        let own = &containing[elem];
        // per containing subset: this element's slot, then the other two
        // slots ascending
        let blocks: Vec<[usize; 3]> = own
            .iter()
            .map(|&subset| {
                let slot = input.subsets[subset]
                    .iter()
                    .position(|&u| u == elem)
                    .expect("element is in its containing subset");
                let others: Vec<usize> = (0..3).filter(|&k| k != slot).collect();
                [
                    house(subset, slot),
                    house(subset, others[0]),
                    house(subset, others[1]),
                ]
            })
            .collect();
        let own_houses: BTreeSet<usize> = blocks.iter().flatten().copied().collect();
        let tail: Vec<usize> = (0..m).filter(|h| !own_houses.contains(h)).collect();

        let mut lists = Vec::with_capacity(6);
        for d in 0..3 {
            for swap in [false, true] {
                let mut ranking = Vec::with_capacity(m);
                let b = blocks[d];
                if swap {
                    ranking.extend([b[0], b[2], b[1]]);
                } else {
                    ranking.extend([b[0], b[1], b[2]]);
                }
                for (e, b) in blocks.iter().enumerate() {
                    if e != d {
                        ranking.extend(*b);
                    }
                }
                ranking.extend(&tail);
                lists.push((Prob::new(1, 6), ranking));
            }
        }
        agents.push(lists);
    }

    let house_names = (0..num_subsets)
        .flat_map(|j| (1..=3).map(move |k| format!("h{j}_{k}")))
        .collect();
    let raw = RawInstance {
        num_agents: num_elements,
        num_houses: m,
        house_names,
        prefs: RawPrefs::Lottery(agents),
    };
    validate_instance(raw).map_err(|e| bad(format!("reduction output invalid: {e}")))
}

// ---------------------------------------------------------------------------
// Independent set -> compact (inapproximability construction, desk scale).
// ---------------------------------------------------------------------------

/// Penalty multiplicity and the polynomial-bound parameters it is derived
/// from in the full-strength construction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GadgetConfig {
    pub alpha: usize,
    pub a: u64,
    pub r: u64,
}

impl GadgetConfig {
    /// Desk-scale configuration with an explicit penalty multiplicity.
    pub fn with_alpha(alpha: usize) -> Self {
        GadgetConfig { alpha, a: 1, r: 1 }
    }

    /// The multiplicity `49 a r^2 |V| |E|` that defeats every
    /// `a (n + m)^r`-factor approximation.
    pub fn full_strength_alpha(&self, num_vertices: usize, num_edges: usize) -> BigUint {
        BigUint::from(49u32)
            * BigUint::from(self.a)
            * BigUint::from(self.r)
            * BigUint::from(self.r)
            * BigUint::from(num_vertices)
            * BigUint::from(num_edges)
    }
}

/// Which pair of vertex houses a double penalty gadget watches.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PairKind {
    TrueTrue,
    TrueFalse,
    FalseTrue,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SingleGadgetLayout {
    pub vertex: usize,
    /// The gadget's two agents.
    pub agents: [usize; 2],
    /// Houses e1..e4.
    pub houses: [usize; 4],
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DoubleGadgetLayout {
    pub edge: (usize, usize),
    pub kind: PairKind,
    /// The gadget's four agents.
    pub agents: [usize; 4],
    /// Houses e1..e8.
    pub houses: [usize; 8],
}

/// Where everything ended up in an independent-set reduction instance.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IsLayout {
    pub guard_agents: (usize, usize),
    pub guard_houses: (usize, usize),
    pub vertex_agents: Vec<usize>,
    pub true_house: Vec<usize>,
    pub false_house: Vec<usize>,
    pub singles: Vec<SingleGadgetLayout>,
    pub doubles: Vec<DoubleGadgetLayout>,
    num_houses: usize,
}

impl IsLayout {
    /// The allocation induced by a chosen vertex set, with gadget-internal
    /// houses allocated to maximize envy-freeness: chosen vertices take
    /// their true house, others their false house; penalized gadgets fall
    /// back to their tied top houses.
    pub fn allocation_for_choice(&self, chosen: &[bool]) -> Allocation {
        let n = self.vertex_agents.len()
            + 2 * self.singles.len()
            + 4 * self.doubles.len()
            + 2;
        let mut assigned = vec![usize::MAX; n];
        for (v, &agent) in self.vertex_agents.iter().enumerate() {
            assigned[agent] = if chosen[v] {
                self.true_house[v]
            } else {
                self.false_house[v]
            };
        }
        for g in &self.singles {
            let penalized = !chosen[g.vertex]; // false house allocated
            let picks = if penalized { [0, 1] } else { [2, 3] };
            for (slot, &agent) in g.agents.iter().enumerate() {
                assigned[agent] = g.houses[picks[slot]];
            }
        }
        for g in &self.doubles {
            let (u, v) = g.edge;
            let penalized = match g.kind {
                PairKind::TrueTrue => chosen[u] || chosen[v],
                PairKind::TrueFalse => chosen[u] || !chosen[v],
                PairKind::FalseTrue => !chosen[u] || chosen[v],
            };
            let picks = if penalized {
                [0, 1, 2, 3]
            } else {
                [4, 5, 6, 7]
            };
            for (slot, &agent) in g.agents.iter().enumerate() {
                assigned[agent] = g.houses[picks[slot]];
            }
        }
        assigned[self.guard_agents.0] = self.guard_houses.0;
        assigned[self.guard_agents.1] = self.guard_houses.1;
        Allocation::new(assigned, self.num_houses).expect("layout allocation is injective")
    }
}

/// Compact instance encoding an independent-set input: per vertex a
/// true/false house pair and an indifferent owner agent, `alpha` single
/// penalty gadgets per vertex (penalizing the false house) and `|V| * alpha`
/// double penalty gadgets per edge for each of the pairs (t,t), (t,f), (f,t).
///
/// The target `k` does not influence the construction; it is validated and
/// kept for interface fidelity with the source problem.
pub fn is_compact_reduction(
    graph: &Graph,
    k: usize,
    cfg: &GadgetConfig,
) -> Result<(Instance, IsLayout), GenError> {
    if graph.num_vertices == 0 {
        return Err(bad("graph must have at least one vertex"));
    }
    if k > graph.num_vertices {
        return Err(bad(format!(
            "target {k} exceeds the {} vertices",
            graph.num_vertices
        )));
    }
    if cfg.alpha == 0 {
        return Err(bad("alpha must be positive"));
    }
    let nv = graph.num_vertices;
    let alpha = cfg.alpha;

    let mut builder = CompactBuilder::new();
    let mut true_house = Vec::with_capacity(nv);
    let mut false_house = Vec::with_capacity(nv);
    for v in 0..nv {
        true_house.push(builder.house(&format!("t{v}")));
        false_house.push(builder.house(&format!("f{v}")));
    }
    let vertex_agents: Vec<usize> = (0..nv)
        .map(|v| {
            builder.add_agent(
                &format!("a{v}"),
                vec![vec![format!("t{v}"), format!("f{v}")]],
            )
        })
        .collect();

    let mut singles = Vec::new();
    for v in 0..nv {
        for c in 0..alpha {
            let frag = single_penalty_gadget(&format!("f{v}"), &format!("s{v}.{c}"));
            let (agents, houses) = builder.apply(&frag);
            singles.push(SingleGadgetLayout {
                vertex: v,
                agents: [agents[0], agents[1]],
                houses: [houses[0], houses[1], houses[2], houses[3]],
            });
        }
    }

    let mut doubles = Vec::new();
    for (ei, &(u, v)) in graph.edges.iter().enumerate() {
        let pairs = [
            (PairKind::TrueTrue, format!("t{u}"), format!("t{v}")),
            (PairKind::TrueFalse, format!("t{u}"), format!("f{v}")),
            (PairKind::FalseTrue, format!("f{u}"), format!("t{v}")),
        ];
        for (kind, h1, h2) in pairs {
            for c in 0..nv * alpha {
                let tag = format!("d{ei}.{kind:?}.{c}");
                let frag = double_penalty_gadget(&h1, &h2, &tag);
                let (agents, houses) = builder.apply(&frag);
                doubles.push(DoubleGadgetLayout {
                    edge: (u, v),
                    kind,
                    agents: [agents[0], agents[1], agents[2], agents[3]],
                    houses: [
                        houses[0], houses[1], houses[2], houses[3], houses[4], houses[5],
                        houses[6], houses[7],
                    ],
                });
            }
        }
    }

    let guard_agents = builder.guard_agents();
    let num_houses = builder.num_houses();
    let layout = IsLayout {
        guard_agents,
        guard_houses: (0, 1),
        vertex_agents,
        true_house,
        false_house,
        singles,
        doubles,
        num_houses,
    };
    Ok((builder.finish(), layout))
}

// ---------------------------------------------------------------------------
// Model-to-model reductions.
// ---------------------------------------------------------------------------

/// Joint instance with six equiprobable profiles, the t-th taking each
/// agent's t-th support order (agents with fewer than six orders are padded
/// by repeating their first). Preserves certainly-EF existence; when no
/// certainly-EF allocation exists, no allocation has EF-probability above
/// 5/6.
pub fn lottery_to_joint(inst: &Instance) -> Result<Instance, GenError> {
    let prefs = match inst.prefs() {
        Prefs::Lottery(p) => p,
        other => {
            return Err(bad(format!(
                "expected a lottery instance, got {}",
                match other {
                    Prefs::Compact(_) => "compact",
                    Prefs::Joint(_) => "joint",
                    Prefs::Pairwise(_) => "pairwise",
                    Prefs::Lottery(_) => unreachable!(),
                }
            )))
        }
    };
    for (i, support) in prefs.agents.iter().enumerate() {
        if support.len() > 6 {
            return Err(bad(format!(
                "agent {i} has {} support orders, at most 6 allowed",
                support.len()
            )));
        }
    }
    let padded: Vec<Vec<&[usize]>> = prefs
        .agents
        .iter()
        .map(|support| {
            let mut orders: Vec<&[usize]> =
                support.iter().map(|(_, o)| o.ranking()).collect();
            while orders.len() < 6 {
                orders.push(support[0].1.ranking());
            }
            orders
        })
        .collect();
    let profiles: Vec<(Prob, Vec<Vec<usize>>)> = (0..6)
        .map(|t| {
            (
                Prob::new(1, 6),
                padded.iter().map(|orders| orders[t].to_vec()).collect(),
            )
        })
        .collect();
    let raw = RawInstance {
        num_agents: inst.num_agents(),
        num_houses: inst.num_houses(),
        house_names: inst.house_names().to_vec(),
        prefs: RawPrefs::Joint(profiles),
    };
    Ok(validate_instance(raw).expect("reduction output must validate"))
}

/// Pairwise instance with p(h over h') = 1, 0 or 1/2 according to whether
/// `h` beats `h'` in every, no, or some support order of the agent.
/// Preserves certainly-EF existence.
pub fn lottery_to_pairwise(inst: &Instance) -> Result<Instance, GenError> {
    let prefs = match inst.prefs() {
        Prefs::Lottery(p) => p,
        _ => return Err(bad("expected a lottery instance")),
    };
    let m = inst.num_houses();
    let agents = prefs
        .agents
        .iter()
        .map(|support| {
            let mut matrix = vec![vec![Prob::zero(); m]; m];
            for a in 0..m {
                for b in a + 1..m {
                    let before = support.iter().filter(|(_, o)| o.prefers(a, b)).count();
                    let p = if before == support.len() {
                        Prob::one()
                    } else if before == 0 {
                        Prob::zero()
                    } else {
                        Prob::new(1, 2)
                    };
                    matrix[b][a] = p.one_minus().expect("p lies in [0, 1]");
                    matrix[a][b] = p;
                }
            }
            matrix
        })
        .collect();
    let raw = RawInstance {
        num_agents: inst.num_agents(),
        num_houses: inst.num_houses(),
        house_names: inst.house_names().to_vec(),
        prefs: RawPrefs::Pairwise(agents),
    };
    Ok(validate_instance(raw).expect("reduction output must validate"))
}

/// Pairwise instance with identical preferences encoding an independent-set
/// input: one house per vertex, `k` agents, p(h_i over h_j) = 1 on edges
/// (i < j) and 1/2 otherwise. Possibly-EF iff the graph has an independent
/// set of size `k`.
pub fn is_pairwise_reduction(graph: &Graph, k: usize) -> Result<Instance, GenError> {
    if k == 0 || k > graph.num_vertices {
        return Err(bad(format!(
            "target {k} must lie in 1..={}",
            graph.num_vertices
        )));
    }
    let m = graph.num_vertices;
    let mut matrix = vec![vec![Prob::zero(); m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let p = if graph.has_edge(i, j) {
                Prob::one()
            } else {
                Prob::new(1, 2)
            };
            matrix[j][i] = p.one_minus().expect("p lies in [0, 1]");
            matrix[i][j] = p;
        }
    }
    let raw = RawInstance {
        num_agents: k,
        num_houses: m,
        house_names: default_house_names(m),
        prefs: RawPrefs::Pairwise(vec![matrix; k]),
    };
    Ok(validate_instance(raw).expect("reduction output must validate"))
}

/// A tiny restricted 3-exact-cover instance with no exact cover: six
/// elements and the six cyclic triples {i, i+1, i+3} (mod 6), which are
/// pairwise intersecting, so no two of them can partition the ground set.
pub fn r3xc_no_instance() -> R3xcInput {
    let subsets = (0..6)
        .map(|i| [i, (i + 1) % 6, (i + 3) % 6])
        .collect();
    R3xcInput::new(6, subsets).expect("cyclic family is a valid input")
}

/// The smallest yes-instance: three elements, three copies of the whole
/// ground set; any single subset is a cover.
pub fn r3xc_toy_yes_instance() -> R3xcInput {
    R3xcInput::new(3, vec![[0, 1, 2]; 3]).expect("toy family is a valid input")
}
