//! JSON serialization for instances and allocations.
//!
//! Instance files hold `model`, `agents`, `houses` (name array) and a
//! model-specific `prefs` block:
//! - lottery: per agent, an array of `{ "weight": "num/den", "order": [names] }`
//! - compact: per agent, an array of tie classes (name arrays), best first
//! - joint: an array of `{ "weight": ..., "order": [[names] per agent] }`
//! - pairwise: per agent, an object mapping `"a>b"` to a weight; the
//!   complementary entry is implied and may be omitted
//!
//! Weights are exact rational strings (`"1/2"`), integers, or decimal
//! strings (`"0.5"`), converted without any floating-point step. Allocation
//! files map agent indices to house names. Serialized probabilities are
//! always `numerator/denominator` strings.

use std::collections::HashMap;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::instance::{
    validate_instance, Allocation, Instance, Prefs, RawInstance, RawPrefs, ValidateError,
};
use crate::prob::Prob;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IoError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Validate(#[from] ValidateError),
}

fn parse_err(msg: impl Into<String>) -> IoError {
    IoError::Parse(msg.into())
}

fn as_object<'v>(v: &'v Value, what: &str) -> Result<&'v Map<String, Value>, IoError> {
    v.as_object()
        .ok_or_else(|| parse_err(format!("{what} must be an object")))
}

fn as_array<'v>(v: &'v Value, what: &str) -> Result<&'v Vec<Value>, IoError> {
    v.as_array()
        .ok_or_else(|| parse_err(format!("{what} must be an array")))
}

fn as_str<'v>(v: &'v Value, what: &str) -> Result<&'v str, IoError> {
    v.as_str()
        .ok_or_else(|| parse_err(format!("{what} must be a string")))
}

fn parse_weight(v: &Value, what: &str) -> Result<Prob, IoError> {
    match v {
        Value::String(s) => s
            .parse::<Prob>()
            .map_err(|e| parse_err(format!("{what}: {e}"))),
        Value::Number(n) => {
            let i = n
                .as_u64()
                .ok_or_else(|| parse_err(format!("{what} must be an exact rational; write fractional weights as strings like \"1/2\"")))?;
            Ok(Prob::from_int(i))
        }
        _ => Err(parse_err(format!("{what} must be a rational string"))),
    }
}

struct HouseTable {
    index: HashMap<String, usize>,
}

impl HouseTable {
    fn new(names: &[String]) -> Result<Self, IoError> {
        let mut index = HashMap::new();
        for (h, name) in names.iter().enumerate() {
            if index.insert(name.clone(), h).is_some() {
                return Err(parse_err(format!("duplicate house name `{name}`")));
            }
        }
        Ok(HouseTable { index })
    }

    fn get(&self, name: &str, what: &str) -> Result<usize, IoError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| parse_err(format!("{what}: unknown house `{name}`")))
    }
}

fn parse_order(v: &Value, table: &HouseTable, what: &str) -> Result<Vec<usize>, IoError> {
    as_array(v, what)?
        .iter()
        .map(|name| table.get(as_str(name, what)?, what))
        .collect()
}

/// Parses and validates an instance file.
pub fn parse_instance(text: &str) -> Result<Instance, IoError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| parse_err(format!("invalid JSON: {e}")))?;
    let root = as_object(&root, "instance")?;
    let model = as_str(
        root.get("model")
            .ok_or_else(|| parse_err("missing `model`"))?,
        "model",
    )?;
    let n = root
        .get("agents")
        .and_then(Value::as_u64)
        .ok_or_else(|| parse_err("missing or invalid `agents`"))? as usize;
    let houses = as_array(
        root.get("houses")
            .ok_or_else(|| parse_err("missing `houses`"))?,
        "houses",
    )?;
    let house_names: Vec<String> = houses
        .iter()
        .map(|v| as_str(v, "house name").map(str::to_string))
        .collect::<Result<_, _>>()?;
    let m = house_names.len();
    let table = HouseTable::new(&house_names)?;
    let prefs_value = root
        .get("prefs")
        .ok_or_else(|| parse_err("missing `prefs`"))?;

    let prefs = match model {
        "lottery" => {
            let agents = as_array(prefs_value, "prefs")?;
            let mut out = Vec::with_capacity(agents.len());
            for (i, agent) in agents.iter().enumerate() {
                let entries = as_array(agent, &format!("agent {i} prefs"))?;
                let mut support = Vec::with_capacity(entries.len());
                for entry in entries {
                    let obj = as_object(entry, &format!("agent {i} entry"))?;
                    let w = parse_weight(
                        obj.get("weight")
                            .ok_or_else(|| parse_err(format!("agent {i}: missing weight")))?,
                        &format!("agent {i} weight"),
                    )?;
                    let order = parse_order(
                        obj.get("order")
                            .ok_or_else(|| parse_err(format!("agent {i}: missing order")))?,
                        &table,
                        &format!("agent {i} order"),
                    )?;
                    support.push((w, order));
                }
                out.push(support);
            }
            RawPrefs::Lottery(out)
        }
        "compact" => {
            let agents = as_array(prefs_value, "prefs")?;
            let mut out = Vec::with_capacity(agents.len());
            for (i, agent) in agents.iter().enumerate() {
                let classes = as_array(agent, &format!("agent {i} prefs"))?;
                let mut parsed = Vec::with_capacity(classes.len());
                for class in classes {
                    parsed.push(
                        as_array(class, &format!("agent {i} tie class"))?
                            .iter()
                            .map(|name| {
                                table.get(
                                    as_str(name, &format!("agent {i} tie class"))?,
                                    &format!("agent {i} tie class"),
                                )
                            })
                            .collect::<Result<Vec<_>, _>>()?,
                    );
                }
                out.push(parsed);
            }
            RawPrefs::Compact(out)
        }
        "joint" => {
            let entries = as_array(prefs_value, "prefs")?;
            let mut out = Vec::with_capacity(entries.len());
            for (idx, entry) in entries.iter().enumerate() {
                let obj = as_object(entry, &format!("profile {idx}"))?;
                let w = parse_weight(
                    obj.get("weight")
                        .ok_or_else(|| parse_err(format!("profile {idx}: missing weight")))?,
                    &format!("profile {idx} weight"),
                )?;
                let orders = as_array(
                    obj.get("order")
                        .ok_or_else(|| parse_err(format!("profile {idx}: missing order")))?,
                    &format!("profile {idx} order"),
                )?;
                let profile = orders
                    .iter()
                    .enumerate()
                    .map(|(i, o)| parse_order(o, &table, &format!("profile {idx} agent {i}")))
                    .collect::<Result<Vec<_>, _>>()?;
                out.push((w, profile));
            }
            RawPrefs::Joint(out)
        }
        "pairwise" => {
            let agents = as_array(prefs_value, "prefs")?;
            let mut out = Vec::with_capacity(agents.len());
            for (i, agent) in agents.iter().enumerate() {
                let obj = as_object(agent, &format!("agent {i} prefs"))?;
                let mut matrix: Vec<Vec<Option<Prob>>> = vec![vec![None; m]; m];
                for (key, weight) in obj {
                    let (a_name, b_name) = key.split_once('>').ok_or_else(|| {
                        parse_err(format!("agent {i}: key `{key}` is not of the form a>b"))
                    })?;
                    let a = table.get(a_name, &format!("agent {i} pair"))?;
                    let b = table.get(b_name, &format!("agent {i} pair"))?;
                    if a == b {
                        return Err(parse_err(format!(
                            "agent {i}: pair `{key}` compares a house with itself"
                        )));
                    }
                    let p = parse_weight(weight, &format!("agent {i} pair {key}"))?;
                    if let Some(existing) = &matrix[a][b] {
                        if *existing != p {
                            return Err(IoError::Validate(ValidateError::PairwiseInconsistent(
                                format!("agent {i}: conflicting entries for pair {key}"),
                            )));
                        }
                    }
                    let complement = p.one_minus().ok_or_else(|| {
                        IoError::Validate(ValidateError::NonProbability(format!(
                            "agent {i}: p[{key}] = {p} is outside [0, 1]"
                        )))
                    })?;
                    if matrix[b][a].is_none() {
                        matrix[b][a] = Some(complement);
                    }
                    matrix[a][b] = Some(p);
                }
                let mut dense = vec![vec![Prob::zero(); m]; m];
                for a in 0..m {
                    for b in 0..m {
                        if a == b {
                            continue;
                        }
                        dense[a][b] = matrix[a][b].clone().ok_or_else(|| {
                            parse_err(format!(
                                "agent {i}: missing pairwise entry for houses {a} and {b}"
                            ))
                        })?;
                    }
                }
                out.push(dense);
            }
            RawPrefs::Pairwise(out)
        }
        other => return Err(parse_err(format!("unknown model `{other}`"))),
    };

    let raw = RawInstance {
        num_agents: n,
        num_houses: m,
        house_names,
        prefs,
    };
    Ok(validate_instance(raw)?)
}

/// Serializes an instance to pretty JSON; deterministic for equal instances.
pub fn serialize_instance(inst: &Instance) -> String {
    let names = inst.house_names();
    let prefs = match inst.prefs() {
        Prefs::Lottery(p) => Value::Array(
            p.agents
                .iter()
                .map(|support| {
                    Value::Array(
                        support
                            .iter()
                            .map(|(w, o)| {
                                json!({
                                    "weight": w.to_string(),
                                    "order": o.ranking().iter().map(|&h| names[h].clone()).collect::<Vec<_>>(),
                                })
                            })
                            .collect(),
                    )
                })
                .collect(),
        ),
        Prefs::Compact(p) => Value::Array(
            p.agents
                .iter()
                .map(|w| {
                    Value::Array(
                        w.classes()
                            .iter()
                            .map(|class| {
                                Value::Array(
                                    class.iter().map(|&h| Value::String(names[h].clone())).collect(),
                                )
                            })
                            .collect(),
                    )
                })
                .collect(),
        ),
        Prefs::Joint(p) => Value::Array(
            p.profiles
                .iter()
                .map(|(w, profile)| {
                    json!({
                        "weight": w.to_string(),
                        "order": profile
                            .iter()
                            .map(|o| o.ranking().iter().map(|&h| names[h].clone()).collect::<Vec<_>>())
                            .collect::<Vec<_>>(),
                    })
                })
                .collect(),
        ),
        Prefs::Pairwise(p) => Value::Array(
            p.agents
                .iter()
                .map(|matrix| {
                    let mut obj = Map::new();
                    for a in 0..inst.num_houses() {
                        for b in a + 1..inst.num_houses() {
                            obj.insert(
                                format!("{}>{}", names[a], names[b]),
                                Value::String(matrix[a][b].to_string()),
                            );
                        }
                    }
                    Value::Object(obj)
                })
                .collect(),
        ),
    };
    let doc = json!({
        "model": inst.model().as_str(),
        "agents": inst.num_agents(),
        "houses": names,
        "prefs": prefs,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("instance serializes");
    text.push('\n');
    text
}

/// Parses an allocation file (`{"0": "houseName", ...}`) against an instance.
pub fn parse_allocation(text: &str, inst: &Instance) -> Result<Allocation, IoError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| parse_err(format!("invalid JSON: {e}")))?;
    let obj = as_object(&root, "allocation")?;
    let n = inst.num_agents();
    let table = HouseTable::new(inst.house_names())?;
    let mut assigned = vec![usize::MAX; n];
    for (key, value) in obj {
        let agent: usize = key
            .parse()
            .map_err(|_| parse_err(format!("agent key `{key}` is not an index")))?;
        if agent >= n {
            return Err(parse_err(format!(
                "agent index {agent} out of range for {n} agents"
            )));
        }
        if assigned[agent] != usize::MAX {
            return Err(parse_err(format!("agent {agent} assigned twice")));
        }
        assigned[agent] = table.get(as_str(value, "house name")?, "allocation")?;
    }
    if let Some(missing) = assigned.iter().position(|&h| h == usize::MAX) {
        return Err(parse_err(format!("agent {missing} has no house")));
    }
    Allocation::new(assigned, inst.num_houses())
        .map_err(|e| parse_err(format!("invalid allocation: {e}")))
}

pub fn serialize_allocation(w: &Allocation, inst: &Instance) -> String {
    let mut obj = Map::new();
    for (agent, &h) in w.as_slice().iter().enumerate() {
        obj.insert(
            agent.to_string(),
            Value::String(inst.house_name(h).to_string()),
        );
    }
    let mut text =
        serde_json::to_string_pretty(&Value::Object(obj)).expect("allocation serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_instance, RandomModel};

    #[test]
    fn round_trip_all_models() {
        for (seed, model) in [
            (1, RandomModel::Lottery { support: 3 }),
            (2, RandomModel::Compact { max_class: 2 }),
            (3, RandomModel::Joint { support: 2 }),
            (4, RandomModel::Pairwise),
        ] {
            let inst = random_instance(&model, 3, 4, seed).unwrap();
            let text = serialize_instance(&inst);
            let back = parse_instance(&text).unwrap();
            assert_eq!(inst, back, "round trip failed for {model:?}");
        }
    }

    #[test]
    fn parse_decimal_weights() {
        let text = r#"{
            "model": "lottery",
            "agents": 1,
            "houses": ["a", "b"],
            "prefs": [[
                {"weight": "0.5", "order": ["a", "b"]},
                {"weight": "1/2", "order": ["b", "a"]}
            ]]
        }"#;
        let inst = parse_instance(text).unwrap();
        match inst.prefs() {
            Prefs::Lottery(p) => assert_eq!(p.agents[0][0].0, Prob::new(1, 2)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn pairwise_complement_implied() {
        let text = r#"{
            "model": "pairwise",
            "agents": 1,
            "houses": ["a", "b"],
            "prefs": [{"a>b": "1/4"}]
        }"#;
        let inst = parse_instance(text).unwrap();
        match inst.prefs() {
            Prefs::Pairwise(p) => {
                assert_eq!(p.agents[0][0][1], Prob::new(1, 4));
                assert_eq!(p.agents[0][1][0], Prob::new(3, 4));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn pairwise_conflicting_entries_rejected() {
        let text = r#"{
            "model": "pairwise",
            "agents": 1,
            "houses": ["a", "b"],
            "prefs": [{"a>b": "1/4", "b>a": "1/2"}]
        }"#;
        assert!(matches!(
            parse_instance(text),
            Err(IoError::Validate(ValidateError::PairwiseInconsistent(_)))
        ));
    }

    #[test]
    fn parse_errors_are_reported() {
        assert!(matches!(parse_instance("not json"), Err(IoError::Parse(_))));
        assert!(matches!(
            parse_instance(r#"{"model": "weird", "agents": 1, "houses": ["a"], "prefs": []}"#),
            Err(IoError::Parse(_))
        ));
        // validation error surfaces as Validate
        let text = r#"{
            "model": "lottery",
            "agents": 2,
            "houses": ["a"],
            "prefs": [[{"weight": "1", "order": ["a"]}], [{"weight": "1", "order": ["a"]}]]
        }"#;
        assert!(matches!(
            parse_instance(text),
            Err(IoError::Validate(ValidateError::TooFewHouses { .. }))
        ));
    }

    #[test]
    fn allocation_round_trip() {
        let inst = random_instance(&RandomModel::Pairwise, 2, 3, 9).unwrap();
        let w = Allocation::new(vec![2, 0], 3).unwrap();
        let text = serialize_allocation(&w, &inst);
        let back = parse_allocation(&text, &inst).unwrap();
        assert_eq!(w, back);
        assert!(parse_allocation(r#"{"0": "h0"}"#, &inst).is_err());
        assert!(parse_allocation(r#"{"0": "h0", "1": "h0"}"#, &inst).is_err());
    }
}
