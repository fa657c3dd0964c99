//! Candidate extraction from ranked features, confidence gating and the
//! per-cell driver.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cluster::{Clustering, Group};
use crate::error::{ConfigError, LearnError};
use crate::features::{rank_with, Design, Feature, LearningData, RankedFeatures};
use crate::model::{AttrKind, AttrValue, Class, Object, ObjectModel};
use crate::policy::{ConsOp, Entitlement};
use crate::regression::LeastSquares;

/// Rank gates `⟨numHigh, numMed⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PredictionConfig {
    pub num_high: usize,
    pub num_med: usize,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        Self {
            num_high: 3,
            num_med: 5,
        }
    }
}

impl PredictionConfig {
    pub fn new(num_high: usize, num_med: usize) -> Result<Self, ConfigError> {
        let cfg = Self { num_high, num_med };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_high == 0 || self.num_high > self.num_med {
            return Err(ConfigError::Ntcf(self.num_high, self.num_med));
        }
        Ok(())
    }

    /// Confidence for a 1-based rank, `None` past the Medium gate.
    pub fn confidence_at(&self, rank: usize) -> Option<Confidence> {
        if rank <= self.num_high {
            Some(Confidence::High)
        } else if rank <= self.num_med {
            Some(Confidence::Medium)
        } else {
            None
        }
    }
}

/// Ordered NEI < Medium < High.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Confidence {
    #[serde(rename = "NEI")]
    Nei,
    Medium,
    High,
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Confidence::Nei => "NEI",
            Confidence::Medium => "Medium",
            Confidence::High => "High",
        })
    }
}

/// A (user group, resource group, action) triple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupTriple {
    pub user_group: usize,
    pub resource_group: usize,
    pub action: String,
}

/// One feature's contribution to a prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Support {
    pub triple: GroupTriple,
    pub feature: String,
    pub rank: usize,
    pub confidence: Confidence,
    pub values: BTreeSet<String>,
}

/// Candidate values read off one triple's ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub values: BTreeSet<String>,
    pub confidence: Confidence,
    pub rank: usize,
    pub feature: Feature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Prediction {
    pub object: String,
    pub attr: String,
    pub kind: AttrKind,
    pub values: BTreeSet<String>,
    pub confidence: Confidence,
    pub provenance: Vec<Support>,
}

impl Prediction {
    pub fn nei(object: &str, attr: &str, kind: AttrKind) -> Self {
        Prediction {
            object: object.to_string(),
            attr: attr.to_string(),
            kind,
            values: BTreeSet::new(),
            confidence: Confidence::Nei,
            provenance: Vec::new(),
        }
    }

    pub fn is_nei(&self) -> bool {
        self.confidence == Confidence::Nei
    }

    /// The predicted cell value, `None` for NEI.
    pub fn value(&self) -> Option<AttrValue> {
        if self.is_nei() {
            return None;
        }
        Some(match self.kind {
            AttrKind::Single => AttrValue::atomic(self.values.iter().next()?.clone()),
            AttrKind::Multi => AttrValue::Set(self.values.clone()),
        })
    }
}

fn group_of<'a>(clustering: &'a Clustering, id: &str) -> Option<&'a Group> {
    clustering.group_of(id)
}

/// Triples of the entitlements that involve `o`, on whichever side `o` is.
pub fn relevant_group_triples(
    o: &Object,
    e0: &BTreeSet<Entitlement>,
    clustering: &Clustering,
) -> BTreeSet<GroupTriple> {
    e0.iter()
        .filter(|e| match o.class {
            Class::User => e.user == o.id,
            Class::Resource => e.resource == o.id,
        })
        .filter_map(|e| {
            Some(GroupTriple {
                user_group: group_of(clustering, &e.user)?.id,
                resource_group: group_of(clustering, &e.resource)?.id,
                action: e.action.clone(),
            })
        })
        .collect()
}

fn intersect_all(sets: impl IntoIterator<Item = BTreeSet<String>>) -> BTreeSet<String> {
    let mut it = sets.into_iter();
    let Some(first) = it.next() else {
        return BTreeSet::new();
    };
    it.fold(first, |acc, s| acc.intersection(&s).cloned().collect())
}

fn value_set(v: &AttrValue) -> Option<BTreeSet<String>> {
    match v {
        AttrValue::Atomic(a) => Some([a.clone()].into()),
        AttrValue::Set(s) => Some(s.clone()),
        AttrValue::Null | AttrValue::Missing => None,
    }
}

/// Values of `attr_m` on `subject` that feature `f` supports.
///
/// A condition on the subject's side supplies its constant. A constraint reads
/// the other attribute over the counterparts the subject is entitled with for
/// `action` inside `counterpart`; Missing and Null counterpart cells are
/// skipped. When the constraint only bounds the value (an element of every
/// counterpart set, a superset of every counterpart set) the tightest set the
/// bound pins down is returned, or nothing if it pins down nothing.
///
/// Panics if `f` does not mention `attr_m` on the subject's side.
pub fn predict_from_feature(
    f: &Feature,
    subject: &Object,
    attr_m: &str,
    counterpart: &Group,
    action: &str,
    e0: &BTreeSet<Entitlement>,
    om: &ObjectModel,
) -> BTreeSet<String> {
    assert!(
        f.mentions(subject.class, attr_m),
        "feature {f} does not read {attr_m} on the subject"
    );
    let mut probe = Entitlement::new("", "", action);
    let granting: Vec<&Object> = counterpart
        .members
        .iter()
        .filter(|id| {
            match subject.class {
                Class::User => {
                    probe.user.clone_from(&subject.id);
                    probe.resource.clone_from(id);
                }
                Class::Resource => {
                    probe.user.clone_from(id);
                    probe.resource.clone_from(&subject.id);
                }
            }
            e0.contains(&probe)
        })
        .filter_map(|id| om.get(id))
        .collect();
    let cons = match f {
        // the learned rows only describe complete counterparts; an entitlement
        // granted solely by tainted ones says nothing about the condition
        Feature::UserCond(c) | Feature::ResCond(c) => {
            if granting.iter().all(|o| o.has_missing()) {
                return BTreeSet::new();
            }
            return c.values().into_iter().map(String::from).collect();
        }
        Feature::Constr(c) => c,
    };
    let other_attr = match subject.class {
        Class::User => cons.attr_r.as_str(),
        Class::Resource => cons.attr_u.as_str(),
    };
    let seen: Vec<BTreeSet<String>> = granting
        .iter()
        .filter_map(|o| value_set(o.get(other_attr)))
        .collect();
    if seen.is_empty() {
        return BTreeSet::new();
    }
    match (subject.class, cons.op) {
        // u.a = r.b, u.a ∈ r.B, r.b = u.a, r.B ∋ u.a's mirror: every counterpart constrains the value
        (Class::User, ConsOp::Equal | ConsOp::In)
        | (Class::Resource, ConsOp::Equal | ConsOp::Contains) => intersect_all(seen),
        // the subject's set must hold every counterpart value
        (Class::User, ConsOp::Contains | ConsOp::Supseteq) | (Class::Resource, ConsOp::In) => {
            seen.into_iter().flatten().collect()
        }
        // r.B ⊆ every u.A only bounds the set from above
        (Class::Resource, ConsOp::Supseteq) => BTreeSet::new(),
    }
}

/// Scans ranks `1..=num_med` of one triple and extracts candidates from the
/// evidence-bearing features that mention `attr_m`.
#[allow(clippy::too_many_arguments)]
pub fn predict_missing_values(
    ranked: &RankedFeatures,
    subject: &Object,
    attr_m: &str,
    kind: AttrKind,
    counterpart: &Group,
    action: &str,
    e0: &BTreeSet<Entitlement>,
    om: &ObjectModel,
    cfg: &PredictionConfig,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    for entry in ranked.entries.iter().take_while(|e| e.rank <= cfg.num_med) {
        let rank = entry.rank;
        if !entry.evidence || !entry.feature.mentions(subject.class, attr_m) {
            continue;
        }
        let values =
            predict_from_feature(&entry.feature, subject, attr_m, counterpart, action, e0, om);
        if values.is_empty() || (kind == AttrKind::Single && values.len() > 1) {
            continue;
        }
        let confidence = cfg
            .confidence_at(rank)
            .expect("rank within the Medium gate");
        out.push(Candidate {
            values,
            confidence,
            rank,
            feature: entry.feature.clone(),
        });
    }
    out
}

/// Merges candidates from every triple into one prediction. Each value keeps
/// its highest confidence. A single-valued attribute gets the value with the
/// highest confidence, then best rank, then smallest value; a multi-valued
/// attribute gets every value, at the highest confidence among them.
pub fn combine_predictions(
    object: &str,
    attr: &str,
    kind: AttrKind,
    preds: &[(GroupTriple, Candidate)],
) -> Prediction {
    if preds.is_empty() {
        return Prediction::nei(object, attr, kind);
    }
    // value -> (confidence, best rank)
    let mut best: BTreeMap<&str, (Confidence, usize)> = BTreeMap::new();
    for (_, c) in preds {
        for v in &c.values {
            let e = best.entry(v.as_str()).or_insert((c.confidence, c.rank));
            if (c.confidence, std::cmp::Reverse(c.rank)) > (e.0, std::cmp::Reverse(e.1)) {
                *e = (c.confidence, c.rank);
            }
        }
    }
    let (values, confidence): (BTreeSet<String>, Confidence) = match kind {
        AttrKind::Single => {
            let (v, (conf, _)) = best
                .iter()
                .max_by(|(va, (ca, ra)), (vb, (cb, rb))| {
                    ca.cmp(cb).then(rb.cmp(ra)).then(vb.cmp(va))
                })
                .expect("non-empty");
            ([v.to_string()].into(), *conf)
        }
        AttrKind::Multi => {
            let conf = best.values().map(|(c, _)| *c).max().expect("non-empty");
            (best.keys().map(|v| v.to_string()).collect(), conf)
        }
    };
    let provenance = preds
        .iter()
        .filter(|(_, c)| c.values.iter().any(|v| values.contains(v)))
        .map(|(t, c)| Support {
            triple: t.clone(),
            feature: c.feature.to_string(),
            rank: c.rank,
            confidence: c.confidence,
            values: c.values.clone(),
        })
        .collect();
    Prediction {
        object: object.to_string(),
        attr: attr.to_string(),
        kind,
        values,
        confidence,
        provenance,
    }
}

/// Shared learning state for one object model: designs per group pair and
/// rankings per triple, built on first use.
type SharedDesign = Arc<(Design, LeastSquares)>;

pub struct Predictor<'a> {
    om: &'a ObjectModel,
    e0: &'a BTreeSet<Entitlement>,
    clustering: &'a Clustering,
    cfg: PredictionConfig,
    designs: HashMap<(usize, usize), Option<SharedDesign>>,
    rankings: HashMap<GroupTriple, Option<Arc<RankedFeatures>>>,
}

impl<'a> Predictor<'a> {
    pub fn new(
        om: &'a ObjectModel,
        e0: &'a BTreeSet<Entitlement>,
        clustering: &'a Clustering,
        cfg: PredictionConfig,
    ) -> Self {
        Self {
            om,
            e0,
            clustering,
            cfg,
            designs: HashMap::new(),
            rankings: HashMap::new(),
        }
    }

    fn design(&mut self, gu: usize, gr: usize) -> Option<SharedDesign> {
        let (om, clustering) = (self.om, self.clustering);
        self.designs
            .entry((gu, gr))
            .or_insert_with(|| {
                let d = Design::build(clustering.group(gu)?, clustering.group(gr)?, om).ok()?;
                if d.rows.is_empty() {
                    return None;
                }
                let ls = LeastSquares::new(d.features.len(), &d.rows);
                Some(Arc::new((d, ls)))
            })
            .clone()
    }

    /// Ranked features of a triple; `None` when it has no complete rows.
    pub fn ranking(&mut self, t: &GroupTriple) -> Option<Arc<RankedFeatures>> {
        if let Some(r) = self.rankings.get(t) {
            return r.clone();
        }
        let r = self.design(t.user_group, t.resource_group).and_then(|dl| {
            let (d, ls) = &*dl;
            let ld = LearningData::from_design(d, &t.action, self.e0);
            match rank_with(ls, &ld) {
                Ok(r) => Some(Arc::new(r)),
                Err(LearnError::InsufficientData) | Err(LearnError::Policy(_)) => None,
            }
        });
        self.rankings.insert(t.clone(), r.clone());
        r
    }

    /// Prediction for one Missing cell of a user or a resource.
    pub fn predict_cell(&mut self, subject: &Object, attr_m: &str) -> Prediction {
        let kind = self
            .om
            .schema()
            .kind(subject.class, attr_m)
            .unwrap_or(AttrKind::Single);
        let mut preds = Vec::new();
        for t in relevant_group_triples(subject, self.e0, self.clustering) {
            let Some(ranked) = self.ranking(&t) else {
                continue;
            };
            let counterpart_id = match subject.class {
                Class::User => t.resource_group,
                Class::Resource => t.user_group,
            };
            let Some(counterpart) = self.clustering.group(counterpart_id) else {
                continue;
            };
            for c in predict_missing_values(
                &ranked,
                subject,
                attr_m,
                kind,
                counterpart,
                &t.action,
                self.e0,
                self.om,
                &self.cfg,
            ) {
                preds.push((t.clone(), c));
            }
        }
        combine_predictions(&subject.id, attr_m, kind, &preds)
    }
}

pub fn predict_missing_user_attr(
    u: &Object,
    attr_m: &str,
    e0: &BTreeSet<Entitlement>,
    om: &ObjectModel,
    clustering: &Clustering,
    cfg: &PredictionConfig,
) -> Prediction {
    Predictor::new(om, e0, clustering, *cfg).predict_cell(u, attr_m)
}

pub fn predict_missing_resource_attr(
    r: &Object,
    attr_m: &str,
    e0: &BTreeSet<Entitlement>,
    om: &ObjectModel,
    clustering: &Clustering,
    cfg: &PredictionConfig,
) -> Prediction {
    Predictor::new(om, e0, clustering, *cfg).predict_cell(r, attr_m)
}

/// One prediction per Missing cell, ordered by object id then attribute.
pub fn predict_all(
    om: &ObjectModel,
    e0: &BTreeSet<Entitlement>,
    clustering: &Clustering,
    cfg: &PredictionConfig,
) -> Vec<Prediction> {
    let mut cells: Vec<(&Object, &str)> = om
        .users()
        .iter()
        .chain(om.resources())
        .flat_map(|o| o.missing_attrs().map(move |a| (o, a)))
        .collect();
    cells.sort_by(|a, b| (a.0.id.as_str(), a.1).cmp(&(b.0.id.as_str(), b.1)));
    let mut p = Predictor::new(om, e0, clustering, *cfg);
    cells
        .into_iter()
        .map(|(o, a)| p.predict_cell(o, a))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{cluster, ClusteringConfig};
    use crate::features::RankedEntry;
    use crate::fixtures::{university_fragment, university_fragment_entitlements};
    use crate::policy::{AtomicCondition, AtomicConstraint};

    fn fragment_predictions(e0: &BTreeSet<Entitlement>) -> Vec<Prediction> {
        let p = university_fragment();
        let c = cluster(&p.model, &ClusteringConfig::default()).unwrap();
        predict_all(&p.model, e0, &c, &PredictionConfig::default())
    }

    #[test]
    fn fragment_cells() {
        let preds = fragment_predictions(&university_fragment_entitlements());
        assert_eq!(preds.len(), 2);
        let taught = preds.iter().find(|p| p.attr == "coursesTaught").unwrap();
        assert_eq!(taught.values, ["cs101".to_string()].into());
        assert_eq!(taught.confidence, Confidence::High);
        let dept = preds.iter().find(|p| p.attr == "department").unwrap();
        assert!(dept.is_nei(), "{dept:?}");
        assert!(dept.values.is_empty());
    }

    #[test]
    fn fragment_triples() {
        let p = university_fragment();
        let c = cluster(&p.model, &ClusteringConfig::default()).unwrap();
        let e0 = university_fragment_entitlements();
        let t = relevant_group_triples(p.model.get("csFac1").unwrap(), &e0, &c);
        assert_eq!(t.len(), 1);
        let t = t.into_iter().next().unwrap();
        assert_eq!(c.group(t.user_group).unwrap().members.len(), 4);
        assert_eq!(c.group(t.resource_group).unwrap().members.len(), 5);
        assert!(relevant_group_triples(p.model.get("csStu1").unwrap(), &e0, &c).is_empty());
    }

    #[test]
    fn user_without_entitlements_is_nei() {
        let preds = fragment_predictions(&BTreeSet::new());
        assert!(preds.iter().all(Prediction::is_nei));
    }

    #[test]
    fn constraint_gathers_every_entitled_counterpart() {
        let p = university_fragment();
        let c = cluster(&p.model, &ClusteringConfig::default()).unwrap();
        let mut e0 = university_fragment_entitlements();
        e0.insert(Entitlement::new("csFac1", "cs601gb", "modify"));
        let f = Feature::Constr(AtomicConstraint::new(
            "coursesTaught",
            ConsOp::Contains,
            "course",
        ));
        let u1 = p.model.get("csFac1").unwrap();
        let gr = c.group_of("cs101gb").unwrap();
        let got = predict_from_feature(&f, u1, "coursesTaught", gr, "modify", &e0, &p.model);
        assert_eq!(got, ["cs101".to_string(), "cs601".to_string()].into());
        let pos = Feature::UserCond(AtomicCondition::in_set("position", ["faculty"]));
        let got = predict_from_feature(&pos, u1, "position", gr, "modify", &e0, &p.model);
        assert_eq!(got, ["faculty".to_string()].into());
    }

    #[test]
    fn condition_needs_a_complete_granting_counterpart() {
        let mut p = university_fragment();
        p.model
            .set_value("cs101gb", "type", AttrValue::Missing)
            .unwrap();
        p.model
            .set_value("cs601gb", "type", AttrValue::Missing)
            .unwrap();
        let c = cluster(&p.model, &ClusteringConfig::default()).unwrap();
        let e0 = university_fragment_entitlements();
        let gu = c.group_of("csFac2").unwrap();
        let f = Feature::ResCond(AtomicCondition::in_set("type", ["gradebook"]));
        // cs101gb is only granted to csFac1, whose own cells are Missing
        let only_tainted = p.model.get("cs101gb").unwrap();
        assert!(
            predict_from_feature(&f, only_tainted, "type", gu, "modify", &e0, &p.model).is_empty()
        );
        let complete = p.model.get("cs601gb").unwrap();
        let got = predict_from_feature(&f, complete, "type", gu, "modify", &e0, &p.model);
        assert_eq!(got, ["gradebook".to_string()].into());
    }

    #[test]
    fn combine_keeps_max_confidence() {
        let t = |a: &str| GroupTriple {
            user_group: 0,
            resource_group: 1,
            action: a.into(),
        };
        let f = Feature::UserCond(AtomicCondition::in_set("x", ["v1"]));
        let cand = |conf, rank| Candidate {
            values: ["v1".to_string()].into(),
            confidence: conf,
            rank,
            feature: f.clone(),
        };
        let preds = vec![
            (t("a"), cand(Confidence::Medium, 4)),
            (t("b"), cand(Confidence::High, 2)),
        ];
        let p = combine_predictions("o", "x", AttrKind::Single, &preds);
        assert_eq!(p.confidence, Confidence::High);
        assert_eq!(p.values, ["v1".to_string()].into());
        assert_eq!(p.provenance.len(), 2);
        assert!(combine_predictions("o", "x", AttrKind::Multi, &[]).is_nei());
    }

    #[test]
    fn single_gate_of_one() {
        let f = Feature::UserCond(AtomicCondition::in_set("position", ["faculty"]));
        let ranked = RankedFeatures {
            entries: vec![RankedEntry {
                feature: f,
                rank: 1,
                coefficient: 0.5,
                invariant: true,
                evidence: true,
            }],
            intercept: 0.0,
            rows: 1,
            positives: 1,
        };
        let p = university_fragment();
        let c = cluster(&p.model, &ClusteringConfig::default()).unwrap();
        let u1 = p.model.get("csFac1").unwrap();
        let cfg = PredictionConfig::new(1, 1).unwrap();
        let got = predict_missing_values(
            &ranked,
            u1,
            "position",
            AttrKind::Single,
            c.group_of("cs101gb").unwrap(),
            "modify",
            &university_fragment_entitlements(),
            &p.model,
            &cfg,
        );
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].confidence, Confidence::High);
    }

    #[test]
    fn gate_validation() {
        assert!(PredictionConfig::new(0, 5).is_err());
        assert!(PredictionConfig::new(4, 3).is_err());
        assert_eq!(
            PredictionConfig::default(),
            PredictionConfig::new(3, 5).unwrap()
        );
    }
}
