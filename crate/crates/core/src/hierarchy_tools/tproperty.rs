use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::ValueFunction;
use crate::owen::PartitionHierarchy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TViolation {
    pub child: usize,
    pub parent: usize,
    pub child_level: usize,
    pub child_score: f64,
    pub parent_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TPropertyReport {
    #[serde(with = "real")]
    pub tau: f64,
    pub pairs_checked: usize,
    pub violations: Vec<TViolation>,
    pub pass: bool,
}

/// Score of every node: the game on the coalition of its members.
pub fn node_scores<V: ValueFunction<f64> + ?Sized>(h: &PartitionHierarchy, vf: &V) -> Vec<f64> {
    (0..h.nodes().len())
        .into_par_iter()
        .map(|id| vf.evaluate(&h.mask_of(id)))
        .collect()
}

/// Checks that no segment scoring at least `tau` sits inside one scoring below it.
///
/// Every child/parent pair is tested except those whose parent is the root: the root
/// is the whole input rather than a segment.
pub fn check_t_property<V: ValueFunction<f64> + ?Sized>(
    h: &PartitionHierarchy,
    vf: &V,
    tau: f64,
) -> Result<TPropertyReport> {
    if vf.n_features() != h.n_features() {
        return Err(Error::invalid(format!(
            "game has {} features, hierarchy has {}",
            vf.n_features(),
            h.n_features()
        )));
    }
    if tau.is_nan() {
        return Err(Error::invalid("tau must not be NaN"));
    }
    let scores = node_scores(h, vf);
    let mut pairs_checked = 0;
    let mut violations = Vec::new();
    for (id, node) in h.nodes().iter().enumerate() {
        let Some(parent) = node.parent.filter(|&p| p != h.root()) else {
            continue;
        };
        pairs_checked += 1;
        if scores[id] >= tau && scores[parent] < tau {
            violations.push(TViolation {
                child: id,
                parent,
                child_level: node.level,
                child_score: scores[id],
                parent_score: scores[parent],
            });
        }
    }
    Ok(TPropertyReport {
        tau,
        pairs_checked,
        pass: violations.is_empty(),
        violations,
    })
}

/// One report per class, each class with its own game and threshold.
pub fn check_t_property_multi<V: ValueFunction<f64>>(
    h: &PartitionHierarchy,
    classes: &[(V, f64)],
) -> Result<Vec<TPropertyReport>> {
    classes.iter().map(|(vf, tau)| check_t_property(h, vf, *tau)).collect()
}

/// JSON has no infinities; encode them as strings.
mod real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(de::Error::custom(format!("not a real: {other}"))),
            },
        }
    }
}
