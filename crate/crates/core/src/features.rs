//! Features for one (user group, resource group, action) triple, the learning
//! rows built from the entitlement set, and the ranking by fitted coefficient.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::cluster::Group;
use crate::error::LearnError;
use crate::model::{AttrValue, Class, Object, ObjectModel};
use crate::policy::{
    eval_atomic_condition, eval_atomic_constraint, AtomicCondition, AtomicConstraint, ConsOp,
    Entitlement,
};
use crate::regression::LeastSquares;

/// Coefficients closer than this are ranked as ties. The ridge term alone
/// moves coefficients by about `RIDGE / eigenvalue`, far below this.
pub const RANK_QUANTUM: f64 = 1e-6;

/// Below this a coefficient is treated as carrying no positive signal.
pub const POSITIVE_COEF: f64 = 1e-6;

/// An atomic condition on the user or the resource, or an atomic constraint.
/// The derived order is the canonical one: user conditions, resource
/// conditions, constraints, each lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    UserCond(AtomicCondition),
    ResCond(AtomicCondition),
    Constr(AtomicConstraint),
}

impl Feature {
    /// Whether the feature reads `attr` of an object of class `class`.
    pub fn mentions(&self, class: Class, attr: &str) -> bool {
        match (self, class) {
            (Feature::UserCond(c), Class::User) | (Feature::ResCond(c), Class::Resource) => {
                c.attr == attr
            }
            (Feature::Constr(c), Class::User) => c.attr_u == attr,
            (Feature::Constr(c), Class::Resource) => c.attr_r == attr,
            _ => false,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Feature::UserCond(_) => "userCondition",
            Feature::ResCond(_) => "resourceCondition",
            Feature::Constr(_) => "constraint",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::UserCond(c) => write!(f, "user {c}"),
            Feature::ResCond(c) => write!(f, "resource {c}"),
            Feature::Constr(c) => write!(f, "{c}"),
        }
    }
}

fn members<'a>(g: &'a Group, om: &'a ObjectModel) -> impl Iterator<Item = &'a Object> + 'a {
    g.members.iter().filter_map(move |id| om.get(id))
}

fn same_signature(o: &Object, sig: &BTreeSet<String>) -> bool {
    o.attrs
        .iter()
        .filter(|(_, v)| !v.is_null())
        .map(|(k, _)| k)
        .eq(sig.iter())
}

/// Attributes of the signature that carry at least one known value in the group.
fn observed_attrs<'a>(g: &'a Group, om: &'a ObjectModel) -> Vec<&'a str> {
    g.signature
        .iter()
        .filter(|a| members(g, om).any(|o| !o.get(a).is_missing() && !o.get(a).is_null()))
        .map(String::as_str)
        .collect()
}

fn condition_features(g: &Group, om: &ObjectModel) -> BTreeSet<AtomicCondition> {
    let mut out = BTreeSet::new();
    for attr in observed_attrs(g, om) {
        for o in members(g, om) {
            match o.get(attr) {
                AttrValue::Atomic(v) => {
                    out.insert(AtomicCondition::in_set(attr, [v.as_str()]));
                }
                AttrValue::Set(vs) => {
                    out.extend(
                        vs.iter()
                            .map(|v| AtomicCondition::contains(attr, v.as_str())),
                    );
                }
                AttrValue::Null | AttrValue::Missing => {}
            }
        }
    }
    out
}

/// Canonical feature list for a user group and a resource group.
pub fn enumerate_features(gu: &Group, gr: &Group, om: &ObjectModel) -> Vec<Feature> {
    let schema = om.schema();
    let mut out: Vec<Feature> = condition_features(gu, om)
        .into_iter()
        .map(Feature::UserCond)
        .collect();
    out.extend(condition_features(gr, om).into_iter().map(Feature::ResCond));
    let mut cons = BTreeSet::new();
    for au in observed_attrs(gu, om) {
        for ar in observed_attrs(gr, om) {
            if let (Some(ku), Some(kr)) = (
                schema.kind(Class::User, au),
                schema.kind(Class::Resource, ar),
            ) {
                cons.insert(AtomicConstraint::new(au, ConsOp::for_kinds(ku, kr), ar));
            }
        }
    }
    out.extend(cons.into_iter().map(Feature::Constr));
    out
}

/// Feature rows for all complete (user, resource) pairs of two groups.
/// Rows store the indices of the features that hold; labels are per action.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub features: Vec<Feature>,
    /// whether each condition holds on every object with the group's active
    /// attributes whose value is known, tainted ones included; always true
    /// for constraints
    pub consistent: Vec<bool>,
    pub rows: Vec<Vec<u32>>,
    /// (user id, resource id) of each row
    pub pairs: Vec<(String, String)>,
}

impl Design {
    pub fn build(gu: &Group, gr: &Group, om: &ObjectModel) -> Result<Self, LearnError> {
        let schema = om.schema();
        let features = enumerate_features(gu, gr, om);
        let consistent = features
            .iter()
            .map(|f| {
                let (g, c) = match f {
                    Feature::UserCond(c) => (gu, c),
                    Feature::ResCond(c) => (gr, c),
                    Feature::Constr(_) => return Ok(true),
                };
                // every object sharing the group's active attributes, not just the
                // refined group: refinement can isolate a few lookalikes
                let partition = om
                    .objects(g.class)
                    .iter()
                    .filter(|o| same_signature(o, &g.signature));
                for o in partition.filter(|o| !o.get(&c.attr).is_missing()) {
                    if eval_atomic_condition(schema, o, c)? != crate::policy::Tri::True {
                        return Ok(false);
                    }
                }
                Ok(true)
            })
            .collect::<Result<Vec<bool>, LearnError>>()?;
        let users: Vec<&Object> = members(gu, om).filter(|o| !o.has_missing()).collect();
        let resources: Vec<&Object> = members(gr, om).filter(|o| !o.has_missing()).collect();

        let definite =
            |t: crate::policy::Tri| t.definite().expect("complete objects evaluate definitely");
        let cond_bits = |o: &Object, side: Class| -> Result<Vec<u32>, LearnError> {
            let mut bits = Vec::new();
            for (j, f) in features.iter().enumerate() {
                let c = match (f, side) {
                    (Feature::UserCond(c), Class::User)
                    | (Feature::ResCond(c), Class::Resource) => c,
                    _ => continue,
                };
                if definite(eval_atomic_condition(schema, o, c)?) {
                    bits.push(j as u32);
                }
            }
            Ok(bits)
        };
        let user_bits = users
            .iter()
            .map(|u| cond_bits(u, Class::User))
            .collect::<Result<Vec<_>, _>>()?;
        let res_bits = resources
            .iter()
            .map(|r| cond_bits(r, Class::Resource))
            .collect::<Result<Vec<_>, _>>()?;
        let constraints: Vec<(u32, &AtomicConstraint)> = features
            .iter()
            .enumerate()
            .filter_map(|(j, f)| match f {
                Feature::Constr(c) => Some((j as u32, c)),
                _ => None,
            })
            .collect();

        let mut rows = Vec::with_capacity(users.len() * resources.len());
        let mut pairs = Vec::with_capacity(users.len() * resources.len());
        for (u, ub) in users.iter().zip(&user_bits) {
            for (r, rb) in resources.iter().zip(&res_bits) {
                let mut bits = Vec::with_capacity(ub.len() + rb.len() + 4);
                bits.extend_from_slice(ub);
                bits.extend_from_slice(rb);
                for &(j, c) in &constraints {
                    if definite(eval_atomic_constraint(schema, u, r, c)?) {
                        bits.push(j);
                    }
                }
                rows.push(bits);
                pairs.push((u.id.clone(), r.id.clone()));
            }
        }
        Ok(Design {
            features,
            consistent,
            rows,
            pairs,
        })
    }

    pub fn labels(&self, action: &str, e0: &BTreeSet<Entitlement>) -> Vec<bool> {
        let mut probe = Entitlement::new("", "", action);
        self.pairs
            .iter()
            .map(|(u, r)| {
                probe.user.clone_from(u);
                probe.resource.clone_from(r);
                e0.contains(&probe)
            })
            .collect()
    }
}

/// Labelled learning rows for one (user group, resource group, action) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningData {
    pub features: Vec<Feature>,
    pub consistent: Vec<bool>,
    pub rows: Vec<Vec<u32>>,
    pub labels: Vec<bool>,
    pub pairs: Vec<(String, String)>,
}

impl LearningData {
    pub fn from_design(design: &Design, action: &str, e0: &BTreeSet<Entitlement>) -> Self {
        LearningData {
            features: design.features.clone(),
            consistent: design.consistent.clone(),
            rows: design.rows.clone(),
            labels: design.labels(action, e0),
            pairs: design.pairs.clone(),
        }
    }

    /// Dense 0/1 view of row `i`.
    pub fn dense_row(&self, i: usize) -> Vec<u8> {
        let mut v = vec![0; self.features.len()];
        for &j in &self.rows[i] {
            v[j as usize] = 1;
        }
        v
    }
}

pub fn build_learning_data(
    gu: &Group,
    gr: &Group,
    action: &str,
    e0: &BTreeSet<Entitlement>,
    om: &ObjectModel,
) -> Result<LearningData, LearnError> {
    let design = Design::build(gu, gr, om)?;
    if design.rows.is_empty() {
        return Err(LearnError::InsufficientData);
    }
    Ok(LearningData::from_design(&design, action, e0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub feature: Feature,
    /// 1-based; features whose columns are identical on the learning rows
    /// share a rank, since no fit can order them
    pub rank: usize,
    pub coefficient: f64,
    /// holds on every learning row
    pub invariant: bool,
    /// holds on every positive row, has at least two witnesses on each side it
    /// reads, and is either positively weighted or invariant (an invariant
    /// condition must also agree with every known value in its group)
    pub evidence: bool,
}

/// Features sorted by coefficient, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedFeatures {
    pub entries: Vec<RankedEntry>,
    pub intercept: f64,
    pub rows: usize,
    pub positives: usize,
}

fn quantize(c: f64) -> i64 {
    (c / RANK_QUANTUM).round() as i64
}

/// Fits the rows and ranks the features. Ties (within [`RANK_QUANTUM`]) put
/// invariant features first, then follow the canonical feature order, with
/// identical columns kept together under one rank.
pub fn learn_important_features(ld: &LearningData) -> Result<RankedFeatures, LearnError> {
    let ls = LeastSquares::new(ld.features.len(), &ld.rows);
    rank_with(&ls, ld)
}

/// As [`learn_important_features`], reusing a factorization of `ld.rows`.
pub fn rank_with(ls: &LeastSquares, ld: &LearningData) -> Result<RankedFeatures, LearnError> {
    let n = ld.rows.len();
    if n == 0 {
        return Err(LearnError::InsufficientData);
    }
    let y: Vec<f64> = ld
        .labels
        .iter()
        .map(|&l| if l { 1.0 } else { 0.0 })
        .collect();
    let fit = ls.solve(&y);
    let p = ld.features.len();

    let mut on_rows = vec![0usize; p];
    let mut on_pos = vec![0usize; p];
    let mut user_wit: Vec<HashSet<&str>> = vec![HashSet::new(); p];
    let mut res_wit: Vec<HashSet<&str>> = vec![HashSet::new(); p];
    // first feature with the same column, for shared ranks
    let mut columns: Vec<Vec<u32>> = vec![Vec::new(); p];
    for (i, row) in ld.rows.iter().enumerate() {
        for &j in row {
            columns[j as usize].push(i as u32);
        }
    }
    let mut first_with: HashMap<&[u32], usize> = HashMap::new();
    let leader: Vec<usize> = (0..p)
        .map(|j| *first_with.entry(columns[j].as_slice()).or_insert(j))
        .collect();
    let positives = ld.labels.iter().filter(|&&l| l).count();
    for (i, row) in ld.rows.iter().enumerate() {
        for &j in row {
            let j = j as usize;
            on_rows[j] += 1;
            if ld.labels[i] {
                on_pos[j] += 1;
                let (u, r) = &ld.pairs[i];
                if user_wit[j].len() < 2 {
                    user_wit[j].insert(u);
                }
                if res_wit[j].len() < 2 {
                    res_wit[j].insert(r);
                }
            }
        }
    }

    let mut entries: Vec<(usize, RankedEntry)> = ld
        .features
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let invariant = on_rows[j] == n;
            let witnessed = match f {
                Feature::UserCond(_) => user_wit[j].len() >= 2,
                Feature::ResCond(_) => res_wit[j].len() >= 2,
                Feature::Constr(_) => user_wit[j].len() >= 2 && res_wit[j].len() >= 2,
            };
            let coefficient = fit.coefficients[j];
            let evidence = positives > 0
                && on_pos[j] == positives
                && witnessed
                && (coefficient > POSITIVE_COEF || (invariant && ld.consistent[j]));
            (
                j,
                RankedEntry {
                    feature: f.clone(),
                    rank: 0,
                    coefficient,
                    invariant,
                    evidence,
                },
            )
        })
        .collect();
    entries.sort_by(|(ja, a), (jb, b)| {
        quantize(b.coefficient)
            .cmp(&quantize(a.coefficient))
            .then(b.invariant.cmp(&a.invariant))
            .then(leader[*ja].cmp(&leader[*jb]))
            .then(ja.cmp(jb))
    });
    let mut rank = 0;
    for k in 0..entries.len() {
        if k == 0 || leader[entries[k].0] != leader[entries[k - 1].0] {
            rank += 1;
        }
        entries[k].1.rank = rank;
    }
    Ok(RankedFeatures {
        entries: entries.into_iter().map(|(_, e)| e).collect(),
        intercept: fit.intercept,
        rows: n,
        positives,
    })
}
