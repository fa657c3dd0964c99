//! Grouping users and resources.
//!
//! Objects are first partitioned by their set of active (non-Null)
//! attributes. Each partition is then refined: every member's mean weighted
//! Jaccard similarity to the rest of its group is computed, and the members
//! whose mean falls below the threshold move together into a new group. Both
//! halves are refined again until no split applies.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{ClusterError, ConfigError};
use crate::model::{AttrValue, Class, Object, ObjectModel};

/// Similarity used when either side of an attribute is Missing.
pub const MISSING_SIMILARITY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusteringConfig {
    /// Per-attribute weights. Attributes not listed weigh 1.0.
    pub weights: BTreeMap<String, f64>,
    /// Similarity threshold in `[0, 1]`.
    pub st: f64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            weights: BTreeMap::new(),
            st: 0.25,
        }
    }
}

impl ClusteringConfig {
    pub fn with_threshold(st: f64) -> Self {
        Self {
            st,
            ..Self::default()
        }
    }

    pub fn weight(&self, attr: &str) -> f64 {
        self.weights.get(attr).copied().unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.st) {
            return Err(ConfigError::Threshold(self.st));
        }
        for (attr, &w) in &self.weights {
            if !w.is_finite() || w < 0.0 {
                return Err(ConfigError::Weight {
                    attr: attr.clone(),
                    weight: w,
                });
            }
        }
        Ok(())
    }
}

/// Attributes whose value is not Null. Missing cells count as active.
pub fn active_attributes(o: &Object) -> BTreeSet<String> {
    o.attrs
        .iter()
        .filter(|(_, v)| !v.is_null())
        .map(|(k, _)| k.clone())
        .collect()
}

/// Jaccard similarity of one attribute, atomic values lifted to singletons.
pub fn attr_jaccard(a: &Object, b: &Object, attr: &str) -> Result<f64, ClusterError> {
    let (va, vb) = (a.get(attr), b.get(attr));
    for (o, v) in [(a, va), (b, vb)] {
        if v.is_null() {
            return Err(ClusterError::InactiveAttribute {
                object: o.id.clone(),
                attr: attr.to_string(),
            });
        }
    }
    if va.is_missing() || vb.is_missing() {
        return Ok(MISSING_SIMILARITY);
    }
    Ok(match (va, vb) {
        (AttrValue::Atomic(x), AttrValue::Atomic(y)) => {
            if x == y {
                1.0
            } else {
                0.0
            }
        }
        _ => {
            let (sa, sb) = (
                va.as_value_set().unwrap_or_default(),
                vb.as_value_set().unwrap_or_default(),
            );
            let union = sa.union(&sb).count();
            if union == 0 {
                1.0
            } else {
                sa.intersection(&sb).count() as f64 / union as f64
            }
        }
    })
}

/// Weighted mean of [`attr_jaccard`] over `sig`.
pub fn object_similarity(
    a: &Object,
    b: &Object,
    sig: &BTreeSet<String>,
    cfg: &ClusteringConfig,
) -> Result<f64, ClusterError> {
    let mut num = 0.0;
    let mut den = 0.0;
    for attr in sig {
        let w = cfg.weight(attr);
        if w == 0.0 {
            continue;
        }
        num += w * attr_jaccard(a, b, attr)?;
        den += w;
    }
    if den <= 0.0 {
        return Err(ConfigError::ZeroWeight(sig.iter().cloned().collect()).into());
    }
    Ok((num / den).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub id: usize,
    pub class: Class,
    pub signature: BTreeSet<String>,
    pub members: Vec<String>,
}

impl Group {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// One group per distinct active-attribute set, in order of first appearance.
/// Ids are positional and get reassigned by [`cluster`].
pub fn partition_by_signature(objects: &[Object]) -> Vec<Group> {
    let mut groups: Vec<Group> = Vec::new();
    let mut by_sig: BTreeMap<BTreeSet<String>, usize> = BTreeMap::new();
    for o in objects {
        let sig = active_attributes(o);
        let pos = *by_sig.entry(sig.clone()).or_insert_with(|| {
            groups.push(Group {
                id: groups.len(),
                class: o.class,
                signature: sig,
                members: Vec::new(),
            });
            groups.len() - 1
        });
        groups[pos].members.push(o.id.clone());
    }
    groups
}

/// Mean similarity of each member to the other members; 1.0 for a singleton.
pub fn member_mean_similarities(
    members: &[&Object],
    sig: &BTreeSet<String>,
    cfg: &ClusteringConfig,
) -> Result<Vec<f64>, ClusterError> {
    let n = members.len();
    if n <= 1 {
        return Ok(vec![1.0; n]);
    }
    let mut sums = vec![0.0; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s = object_similarity(members[i], members[j], sig, cfg)?;
            sums[i] += s;
            sums[j] += s;
        }
    }
    Ok(sums.into_iter().map(|s| s / (n - 1) as f64).collect())
}

/// Spread of the member means of a group: how tightly it holds together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

pub fn group_stats(
    g: &Group,
    om: &ObjectModel,
    cfg: &ClusteringConfig,
) -> Result<GroupStats, ClusterError> {
    let members: Vec<&Object> = g
        .members
        .iter()
        .map(|id| {
            om.get(id)
                .ok_or_else(|| ClusterError::UnknownObject(id.clone()))
        })
        .collect::<Result<_, _>>()?;
    let means = member_mean_similarities(&members, &g.signature, cfg)?;
    if means.is_empty() {
        return Ok(GroupStats {
            min: 1.0,
            mean: 1.0,
            max: 1.0,
        });
    }
    let min = means.iter().copied().fold(f64::INFINITY, f64::min);
    let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(GroupStats {
        min,
        mean: means.iter().sum::<f64>() / means.len() as f64,
        max,
    })
}

fn refine_members<'a>(
    members: Vec<&'a Object>,
    sig: &BTreeSet<String>,
    cfg: &ClusteringConfig,
    out: &mut Vec<Vec<&'a Object>>,
) -> Result<(), ClusterError> {
    if members.len() <= 1 || sig.is_empty() {
        out.push(members);
        return Ok(());
    }
    let means = member_mean_similarities(&members, sig, cfg)?;
    let (low, high): (Vec<_>, Vec<_>) = members.iter().zip(&means).partition(|(_, &m)| m < cfg.st);
    // a pass that would move nobody or everybody is not a split
    if low.is_empty() || high.is_empty() {
        out.push(members);
        return Ok(());
    }
    refine_members(high.into_iter().map(|(o, _)| *o).collect(), sig, cfg, out)?;
    refine_members(low.into_iter().map(|(o, _)| *o).collect(), sig, cfg, out)
}

/// Splits `g` until every resulting group is stable under the threshold.
/// The first returned group keeps the members that never fell below it.
pub fn refine_group(
    g: &Group,
    om: &ObjectModel,
    cfg: &ClusteringConfig,
) -> Result<Vec<Group>, ClusterError> {
    let members: Vec<&Object> = g
        .members
        .iter()
        .map(|id| {
            om.get(id)
                .ok_or_else(|| ClusterError::UnknownObject(id.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut parts = Vec::new();
    refine_members(members, &g.signature, cfg, &mut parts)?;
    Ok(parts
        .into_iter()
        .map(|objs| Group {
            id: g.id,
            class: g.class,
            signature: g.signature.clone(),
            members: objs.into_iter().map(|o| o.id.clone()).collect(),
        })
        .collect())
}

/// Refined groups of users and resources with an object → group index.
/// User groups are numbered first, then resource groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub user_groups: Vec<Group>,
    pub resource_groups: Vec<Group>,
    pub index: BTreeMap<String, usize>,
}

impl Clustering {
    pub fn group_of(&self, object_id: &str) -> Option<&Group> {
        self.index.get(object_id).and_then(|&gid| self.group(gid))
    }

    pub fn group(&self, gid: usize) -> Option<&Group> {
        let nu = self.user_groups.len();
        if gid < nu {
            self.user_groups.get(gid)
        } else {
            self.resource_groups.get(gid - nu)
        }
    }

    pub fn groups(&self) -> impl Iterator<Item = &Group> {
        self.user_groups.iter().chain(&self.resource_groups)
    }
}

pub fn cluster(om: &ObjectModel, cfg: &ClusteringConfig) -> Result<Clustering, ClusterError> {
    cfg.validate()?;
    let mut next_id = 0;
    let mut index = BTreeMap::new();
    let mut side = |class: Class| -> Result<Vec<Group>, ClusterError> {
        let mut out = Vec::new();
        for g in partition_by_signature(om.objects(class)) {
            for mut part in refine_group(&g, om, cfg)? {
                part.id = next_id;
                next_id += 1;
                for m in &part.members {
                    index.insert(m.clone(), part.id);
                }
                out.push(part);
            }
        }
        Ok(out)
    };
    let user_groups = side(Class::User)?;
    let resource_groups = side(Class::Resource)?;
    Ok(Clustering {
        user_groups,
        resource_groups,
        index,
    })
}
