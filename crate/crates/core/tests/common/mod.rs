//! Strategies, independent oracles and seeded property checks shared by the
//! `properties`, `oracles` and `acceptance` targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use abac_infer::cluster::{
    cluster, object_similarity, partition_by_signature, ClusteringConfig, Group,
};
use abac_infer::eval::{eligible_cells, removal_count, remove_attributes, restore};
use abac_infer::features::{Feature, RankedEntry, RankedFeatures};
use abac_infer::model::ID_ATTR;
use abac_infer::policy::{rule_meaning, ConsOp};
use abac_infer::predict::{predict_missing_values, Confidence, PredictionConfig};
use abac_infer::regression::{fit_least_squares, normal_equation_residual};
use abac_infer::{
    AtomicCondition, AtomicConstraint, AttrKind, AttrSchema, AttrValue, Class, Entitlement, Object,
    ObjectModel, Rule, Schema,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestError, TestRng, TestRunner};

/// Seeds the acceptance run repeats every property suite under.
pub const GLOBAL_SEEDS: [u64; 3] = [0x5eed_0001, 0x5eed_0002, 0x5eed_0003];

pub fn runner(cases: u32, seed: u64) -> TestRunner {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &bytes))
}

pub type Outcome = Result<(), String>;

/// A named check with its case count.
pub type Suite = (&'static str, u32, fn(u32, u64) -> Outcome);

fn outcome<T: std::fmt::Debug>(r: Result<(), TestError<T>>) -> Outcome {
    r.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// random object models

const VALUES: [&str; 4] = ["v0", "v1", "v2", "v3"];

/// Users: id, a (single), b (multi), c (single). Resources: id, x (single), y (multi).
pub fn toy_schema() -> Schema {
    use AttrKind::{Multi, Single};
    use Class::{Resource, User};
    Schema::new(vec![
        AttrSchema::new("id", Single, User),
        AttrSchema::new("a", Single, User),
        AttrSchema::new("b", Multi, User),
        AttrSchema::new("c", Single, User),
        AttrSchema::new("id", Single, Resource),
        AttrSchema::new("x", Single, Resource),
        AttrSchema::new("y", Multi, Resource),
    ])
    .unwrap()
}

fn value_pool() -> impl Strategy<Value = String> {
    prop::sample::select(VALUES.to_vec()).prop_map(String::from)
}

/// A cell of the given kind; `missing` allows Missing cells.
pub fn cell(kind: AttrKind, missing: bool) -> BoxedStrategy<AttrValue> {
    let data = match kind {
        AttrKind::Single => value_pool().prop_map(AttrValue::Atomic).boxed(),
        AttrKind::Multi => prop::collection::btree_set(value_pool(), 0..=3)
            .prop_map(AttrValue::Set)
            .boxed(),
    };
    if missing {
        prop_oneof![2 => Just(AttrValue::Null), 1 => Just(AttrValue::Missing), 6 => data].boxed()
    } else {
        prop_oneof![1 => Just(AttrValue::Null), 4 => data].boxed()
    }
}

fn build_object(id: String, class: Class, cells: Vec<(&'static str, AttrValue)>) -> Object {
    let mut o = Object::new(id.clone(), class).with(ID_ATTR, AttrValue::atomic(id));
    for (a, v) in cells {
        o = o.with(a, v);
    }
    o
}

/// A non-Null cell; Missing allowed.
pub fn active_cell(kind: AttrKind) -> BoxedStrategy<AttrValue> {
    let data = match kind {
        AttrKind::Single => value_pool().prop_map(AttrValue::Atomic).boxed(),
        AttrKind::Multi => prop::collection::btree_set(value_pool(), 0..=3)
            .prop_map(AttrValue::Set)
            .boxed(),
    };
    prop_oneof![1 => Just(AttrValue::Missing), 4 => data].boxed()
}

/// Two users active on every user attribute.
pub fn active_pair() -> impl Strategy<Value = (Object, Object)> {
    let user = || {
        (
            active_cell(AttrKind::Single),
            active_cell(AttrKind::Multi),
            active_cell(AttrKind::Single),
        )
    };
    (user(), user()).prop_map(|((a1, b1, c1), (a2, b2, c2))| {
        (
            build_object(
                "u0".into(),
                Class::User,
                vec![("a", a1), ("b", b1), ("c", c1)],
            ),
            build_object(
                "u1".into(),
                Class::User,
                vec![("a", a2), ("b", b2), ("c", c2)],
            ),
        )
    })
}

/// Random models over [`toy_schema`] with the given object counts.
pub fn toy_model(
    users: std::ops::RangeInclusive<usize>,
    resources: std::ops::RangeInclusive<usize>,
    missing: bool,
) -> impl Strategy<Value = ObjectModel> {
    let user = (
        cell(AttrKind::Single, missing),
        cell(AttrKind::Multi, missing),
        cell(AttrKind::Single, missing),
    );
    let resource = (
        cell(AttrKind::Single, missing),
        cell(AttrKind::Multi, missing),
    );
    (
        prop::collection::vec(user, users),
        prop::collection::vec(resource, resources),
    )
        .prop_map(|(us, rs)| {
            let users = us
                .into_iter()
                .enumerate()
                .map(|(i, (a, b, c))| {
                    build_object(
                        format!("u{i}"),
                        Class::User,
                        vec![("a", a), ("b", b), ("c", c)],
                    )
                })
                .collect();
            let resources = rs
                .into_iter()
                .enumerate()
                .map(|(i, (x, y))| {
                    build_object(format!("r{i}"), Class::Resource, vec![("x", x), ("y", y)])
                })
                .collect();
            ObjectModel::new(toy_schema(), users, resources).unwrap()
        })
}

fn user_condition() -> impl Strategy<Value = AtomicCondition> {
    prop_oneof![
        prop::collection::btree_set(value_pool(), 1..=2)
            .prop_map(|s| AtomicCondition::in_set("a", s)),
        prop::collection::btree_set(value_pool(), 1..=2)
            .prop_map(|s| AtomicCondition::in_set("c", s)),
        value_pool().prop_map(|v| AtomicCondition::contains("b", v)),
    ]
}

fn resource_condition() -> impl Strategy<Value = AtomicCondition> {
    prop_oneof![
        prop::collection::btree_set(value_pool(), 1..=2)
            .prop_map(|s| AtomicCondition::in_set("x", s)),
        value_pool().prop_map(|v| AtomicCondition::contains("y", v)),
    ]
}

fn constraint() -> impl Strategy<Value = AtomicConstraint> {
    prop::sample::select(vec![
        ("a", ConsOp::Equal, "x"),
        ("c", ConsOp::Equal, "x"),
        ("a", ConsOp::In, "y"),
        ("b", ConsOp::Contains, "x"),
        ("b", ConsOp::Supseteq, "y"),
        ("id", ConsOp::Equal, "x"),
    ])
    .prop_map(|(u, op, r)| AtomicConstraint::new(u, op, r))
}

pub fn toy_rule() -> impl Strategy<Value = Rule> {
    (
        prop::collection::btree_set(user_condition(), 0..=2),
        prop::collection::btree_set(resource_condition(), 0..=2),
        prop::collection::btree_set(constraint(), 0..=2),
        prop::collection::btree_set(
            prop::sample::select(vec!["read", "write"]).prop_map(String::from),
            1..=2,
        ),
    )
        .prop_map(|(uc, rc, c, actions)| Rule {
            user_condition: uc,
            resource_condition: rc,
            constraint: c,
            actions,
        })
}

// ---------------------------------------------------------------------------
// oracle: rule meaning by direct enumeration

#[derive(Clone, Copy, PartialEq, Debug)]
enum T3 {
    T,
    F,
    U,
}

fn and3(a: T3, b: T3) -> T3 {
    match (a, b) {
        (T3::F, _) | (_, T3::F) => T3::F,
        (T3::U, _) | (_, T3::U) => T3::U,
        _ => T3::T,
    }
}

fn values_of(v: &AttrValue) -> Option<BTreeSet<String>> {
    match v {
        AttrValue::Atomic(s) => Some([s.clone()].into()),
        AttrValue::Set(s) => Some(s.clone()),
        _ => None,
    }
}

fn oracle_condition(o: &Object, c: &AtomicCondition) -> T3 {
    let v = o.attrs.get(&c.attr).cloned().unwrap_or(AttrValue::Null);
    match v {
        AttrValue::Missing => T3::U,
        AttrValue::Null => T3::F,
        held => {
            let held = values_of(&held).unwrap();
            let consts: BTreeSet<String> = c.values().into_iter().map(String::from).collect();
            // single: the value is one of the constants; multi: the constant is held
            let ok = match c.op {
                abac_infer::policy::CondOp::In => held.len() == 1 && held.is_subset(&consts),
                abac_infer::policy::CondOp::Contains => consts.is_subset(&held),
            };
            if ok {
                T3::T
            } else {
                T3::F
            }
        }
    }
}

fn oracle_constraint(u: &Object, r: &Object, c: &AtomicConstraint) -> T3 {
    let uv = u.attrs.get(&c.attr_u).cloned().unwrap_or(AttrValue::Null);
    let rv = r.attrs.get(&c.attr_r).cloned().unwrap_or(AttrValue::Null);
    if matches!(uv, AttrValue::Null) || matches!(rv, AttrValue::Null) {
        return T3::F;
    }
    if matches!(uv, AttrValue::Missing) || matches!(rv, AttrValue::Missing) {
        return T3::U;
    }
    let (a, b) = (values_of(&uv).unwrap(), values_of(&rv).unwrap());
    let ok = match c.op {
        ConsOp::Equal => a == b,
        ConsOp::In => a.is_subset(&b),
        ConsOp::Contains => b.is_subset(&a),
        ConsOp::Supseteq => b.is_subset(&a),
    };
    if ok {
        T3::T
    } else {
        T3::F
    }
}

/// Every (user, resource, action) whose rule evaluation is definitely true.
pub fn brute_force_meaning(rule: &Rule, om: &ObjectModel) -> BTreeSet<Entitlement> {
    let mut out = BTreeSet::new();
    for u in om.users() {
        for r in om.resources() {
            let mut t = T3::T;
            for c in &rule.user_condition {
                t = and3(t, oracle_condition(u, c));
            }
            for c in &rule.resource_condition {
                t = and3(t, oracle_condition(r, c));
            }
            for c in &rule.constraint {
                t = and3(t, oracle_constraint(u, r, c));
            }
            if t == T3::T {
                for a in &rule.actions {
                    out.insert(Entitlement::new(&u.id, &r.id, a));
                }
            }
        }
    }
    out
}

/// Rule meaning against the oracle on `cases` random models with at most 8 objects.
pub fn check_rule_meaning(cases: u32, seed: u64) -> Outcome {
    let strategy = (toy_model(0..=4, 0..=4, true), toy_rule());
    outcome(runner(cases, seed).run(&strategy, |(om, rule)| {
        let got = rule_meaning(&rule, &om).unwrap().entitlements;
        prop_assert_eq!(got, brute_force_meaning(&rule, &om));
        Ok(())
    }))
}

// ---------------------------------------------------------------------------
// oracle: least squares through an SVD pseudo-inverse of the centered design

#[derive(Clone)]
pub struct LsInstance {
    pub features: usize,
    pub rows: Vec<Vec<u32>>,
    pub labels: Vec<f64>,
}

impl std::fmt::Debug for LsInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "p={} rows={:?} y={:?}",
            self.features, self.rows, self.labels
        )
    }
}

pub fn ls_instance(max_features: usize, max_rows: usize) -> impl Strategy<Value = LsInstance> {
    (1..=max_features, 1..=max_rows).prop_flat_map(|(p, n)| {
        let row = prop::collection::vec(any::<bool>(), p);
        (
            prop::collection::vec(row, n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(bits, ys)| LsInstance {
                features: p,
                rows: bits
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|(_, &b)| b)
                            .map(|(j, _)| j as u32)
                            .collect()
                    })
                    .collect(),
                labels: ys.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect(),
            })
    })
}

/// Minimum-norm coefficients with a free intercept: `pinv(Xc) (y - ȳ)`.
pub fn pinv_oracle(inst: &LsInstance) -> (f64, Vec<f64>) {
    let n = inst.rows.len();
    let p = inst.features;
    let mut x = DMatrix::<f64>::zeros(n, p);
    for (i, row) in inst.rows.iter().enumerate() {
        for &j in row {
            x[(i, j as usize)] = 1.0;
        }
    }
    let means: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
    let y_mean = inst.labels.iter().sum::<f64>() / n as f64;
    let mut xc = x.clone();
    for j in 0..p {
        for i in 0..n {
            xc[(i, j)] -= means[j];
        }
    }
    let yc = DMatrix::from_iterator(n, 1, inst.labels.iter().map(|y| y - y_mean));
    let beta = if p == 0 {
        DMatrix::zeros(0, 1)
    } else {
        xc.pseudo_inverse(1e-9).unwrap() * yc
    };
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&means)
            .map(|(b, m)| b * m)
            .sum::<f64>();
    (intercept, coefficients)
}

/// Largest coefficient (or intercept) difference between the fit and the oracle.
pub fn ls_error(inst: &LsInstance) -> f64 {
    let fit = fit_least_squares(inst.features, &inst.rows, &inst.labels);
    let (b0, beta) = pinv_oracle(inst);
    fit.coefficients
        .iter()
        .zip(&beta)
        .map(|(a, b)| (a - b).abs())
        .fold((fit.intercept - b0).abs(), f64::max)
}

pub fn check_least_squares_oracle(cases: u32, seed: u64) -> Outcome {
    outcome(runner(cases, seed).run(&ls_instance(4, 12), |inst| {
        let err = ls_error(&inst);
        prop_assert!(err <= 1e-6, "max coefficient error {err:e}");
        Ok(())
    }))
}

// ---------------------------------------------------------------------------
// properties

fn weights_for(sig: &BTreeSet<String>) -> impl Strategy<Value = BTreeMap<String, f64>> {
    let attrs: Vec<String> = sig.iter().cloned().collect();
    prop::collection::vec(0.1f64..5.0, attrs.len())
        .prop_map(move |ws| attrs.iter().cloned().zip(ws).collect())
}

/// Bounds, symmetry, self-similarity of complete objects and invariance to scaling every weight.
pub fn check_similarity(cases: u32, seed: u64) -> Outcome {
    let pair = (active_pair(), 0.01f64..100.0).prop_flat_map(|(objs, k)| {
        let sig: BTreeSet<String> = ["id", "a", "b", "c"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        (Just(objs), Just(k), weights_for(&sig), Just(sig))
    });
    outcome(runner(cases, seed).run(&pair, |((a, b), k, weights, sig)| {
        let (a, b) = (&a, &b);
        let cfg = ClusteringConfig {
            weights: weights.clone(),
            st: 0.25,
        };
        let scaled = ClusteringConfig {
            weights: weights.iter().map(|(n, w)| (n.clone(), w * k)).collect(),
            st: 0.25,
        };
        let s_ab = object_similarity(a, b, &sig, &cfg).unwrap();
        let s_ba = object_similarity(b, a, &sig, &cfg).unwrap();
        prop_assert!(
            (0.0..=1.0).contains(&s_ab),
            "similarity {s_ab} out of range"
        );
        prop_assert_eq!(s_ab, s_ba);
        let s_scaled = object_similarity(a, b, &sig, &scaled).unwrap();
        prop_assert!(
            (s_ab - s_scaled).abs() <= 1e-12,
            "{s_ab} vs {s_scaled} under weight scale {k}"
        );
        if !a.has_missing() {
            prop_assert!((object_similarity(a, a, &sig, &cfg).unwrap() - 1.0).abs() <= 1e-12);
        }
        Ok(())
    }))
}

fn partition_key(groups: &[&Group]) -> BTreeSet<BTreeSet<String>> {
    groups
        .iter()
        .map(|g| g.members.iter().cloned().collect())
        .collect()
}

/// Clustering returns a partition of each side into same-signature groups,
/// and with ST = 0 it is exactly the signature partition.
pub fn check_clustering(cases: u32, seed: u64) -> Outcome {
    let strategy = (toy_model(0..=8, 0..=8, true), 0.0f64..=1.0);
    outcome(runner(cases, seed).run(&strategy, |(om, st)| {
        let c = cluster(&om, &ClusteringConfig::with_threshold(st)).unwrap();
        for class in [Class::User, Class::Resource] {
            let groups: Vec<&Group> = c.groups().filter(|g| g.class == class).collect();
            let mut seen = BTreeSet::new();
            for g in &groups {
                prop_assert!(!g.members.is_empty());
                for m in &g.members {
                    prop_assert!(seen.insert(m.clone()), "{m} in two groups");
                    prop_assert_eq!(c.group_of(m).map(|x| x.id), Some(g.id));
                    let o = om.get(m).unwrap();
                    let sig: BTreeSet<String> = o
                        .attrs
                        .iter()
                        .filter(|(_, v)| !v.is_null())
                        .map(|(k, _)| k.clone())
                        .collect();
                    prop_assert_eq!(&sig, &g.signature);
                }
            }
            let all: BTreeSet<String> = om.objects(class).iter().map(|o| o.id.clone()).collect();
            prop_assert_eq!(seen, all);
        }
        let flat = cluster(&om, &ClusteringConfig::with_threshold(0.0)).unwrap();
        let sig_groups: Vec<Group> = partition_by_signature(om.users())
            .into_iter()
            .chain(partition_by_signature(om.resources()))
            .collect();
        let flat_groups: Vec<&Group> = flat.groups().collect();
        prop_assert_eq!(
            partition_key(&flat_groups),
            partition_key(&sig_groups.iter().collect::<Vec<_>>())
        );
        Ok(())
    }))
}

#[derive(Debug, Clone)]
pub struct GateCase {
    /// (value, evidence) per list position
    pub entries: Vec<(String, bool)>,
    /// shared ranks are allowed: position i gets rank `ranks[i]`
    pub ranks: Vec<usize>,
    pub small: PredictionConfig,
    pub large: PredictionConfig,
}

fn gate_case() -> impl Strategy<Value = GateCase> {
    (1usize..10).prop_flat_map(|n| {
        (
            prop::collection::vec((value_pool(), any::<bool>()), n),
            prop::collection::vec(any::<bool>(), n),
            (1usize..6, 0usize..4, 0usize..4, 0usize..4),
        )
            .prop_map(|(entries, bumps, (h, m, dh, dm))| {
                // ranks start at 1 and grow by 0 or 1 per position
                let mut ranks = Vec::with_capacity(entries.len());
                let mut r = 1;
                for (i, bump) in bumps.iter().enumerate() {
                    if i > 0 && *bump {
                        r += 1;
                    }
                    ranks.push(r);
                }
                let small = PredictionConfig {
                    num_high: h,
                    num_med: h + m,
                };
                let large = PredictionConfig {
                    num_high: h + dh,
                    num_med: (h + dh).max(h + m + dm),
                };
                GateCase {
                    entries,
                    ranks,
                    small,
                    large,
                }
            })
    })
}

fn gate_world() -> (ObjectModel, BTreeSet<Entitlement>, Group) {
    let u = Object::new("u0", Class::User)
        .with("id", AttrValue::atomic("u0"))
        .with("a", AttrValue::Missing);
    let r = Object::new("r0", Class::Resource)
        .with("id", AttrValue::atomic("r0"))
        .with("x", AttrValue::atomic("v0"));
    let om = ObjectModel::new(toy_schema(), vec![u], vec![r]).unwrap();
    let e0: BTreeSet<Entitlement> = [Entitlement::new("u0", "r0", "read")].into();
    let g = Group {
        id: 1,
        class: Class::Resource,
        signature: ["id", "x"].iter().map(|s| s.to_string()).collect(),
        members: vec!["r0".into()],
    };
    (om, e0, g)
}

fn gated(
    case: &GateCase,
    cfg: &PredictionConfig,
    om: &ObjectModel,
    e0: &BTreeSet<Entitlement>,
    g: &Group,
) -> BTreeMap<String, Confidence> {
    let ranked = RankedFeatures {
        entries: case
            .entries
            .iter()
            .zip(&case.ranks)
            .map(|((v, ev), &rank)| RankedEntry {
                feature: Feature::UserCond(AtomicCondition::in_set("a", [v.as_str()])),
                rank,
                coefficient: 1.0 / rank as f64,
                invariant: false,
                evidence: *ev,
            })
            .collect(),
        intercept: 0.0,
        rows: 1,
        positives: 1,
    };
    let subject = om.get("u0").unwrap();
    let mut best: BTreeMap<String, Confidence> = BTreeMap::new();
    for c in predict_missing_values(
        &ranked,
        subject,
        "a",
        AttrKind::Single,
        g,
        "read",
        e0,
        om,
        cfg,
    ) {
        for v in c.values {
            let e = best.entry(v).or_insert(c.confidence);
            *e = (*e).max(c.confidence);
        }
    }
    best
}

/// Widening either NTCF gate never drops a candidate or lowers its confidence.
pub fn check_ntcf_monotone(cases: u32, seed: u64) -> Outcome {
    let (om, e0, g) = gate_world();
    outcome(runner(cases, seed).run(&gate_case(), |case| {
        let small = gated(&case, &case.small, &om, &e0, &g);
        let large = gated(&case, &case.large, &om, &e0, &g);
        for (v, c) in &small {
            let l = large.get(v).copied();
            prop_assert!(
                l.is_some_and(|l| l >= *c),
                "{v}: {c:?} under {:?} but {l:?} under {:?}",
                case.small,
                case.large
            );
        }
        for (rank, (_, ev)) in case.ranks.iter().zip(&case.entries) {
            let (a, b) = (
                case.small.confidence_at(*rank),
                case.large.confidence_at(*rank),
            );
            prop_assert!(b >= a, "rank {rank} evidence {ev}: {a:?} then {b:?}");
        }
        Ok(())
    }))
}

/// Removing then restoring gives back the model; removed cells were known, non-id and counted exactly.
pub fn check_removal_round_trip(cases: u32, seed: u64) -> Outcome {
    let strategy = (toy_model(0..=6, 0..=6, false), 0.01f64..0.99, any::<u64>());
    outcome(runner(cases, seed).run(&strategy, |(om, pct, s)| {
        let eligible = eligible_cells(&om).len();
        let (damaged, plan) = remove_attributes(&om, pct, s).unwrap();
        prop_assert_eq!(plan.removed.len(), removal_count(pct, eligible));
        prop_assert_eq!(damaged.missing_cell_count(), plan.removed.len());
        let mut cells = BTreeSet::new();
        for c in &plan.removed {
            prop_assert!(c.attr != ID_ATTR);
            prop_assert!(!c.original.is_null() && !c.original.is_missing());
            prop_assert_eq!(om.get(&c.object).unwrap().get(&c.attr), &c.original);
            prop_assert!(cells.insert((c.object.clone(), c.attr.clone())));
        }
        prop_assert_eq!(restore(&damaged, &plan), om.clone());
        let (again, _) = remove_attributes(&om, pct, s).unwrap();
        prop_assert_eq!(again, damaged);
        Ok(())
    }))
}

/// The damped normal equations hold at the returned fit.
pub fn check_ls_residual(cases: u32, seed: u64) -> Outcome {
    outcome(runner(cases, seed).run(&ls_instance(8, 30), |inst| {
        let fit = fit_least_squares(inst.features, &inst.rows, &inst.labels);
        let res = normal_equation_residual(inst.features, &inst.rows, &inst.labels, &fit);
        prop_assert!(res <= 1e-6, "residual {res:e}");
        Ok(())
    }))
}

/// A column that is the same on every row gets coefficient exactly zero.
pub fn check_ls_constant_column(cases: u32, seed: u64) -> Outcome {
    let strategy = (ls_instance(5, 20), any::<bool>());
    outcome(runner(cases, seed).run(&strategy, |(mut inst, on)| {
        let k = inst.features as u32;
        inst.features += 1;
        if on {
            for r in &mut inst.rows {
                r.push(k);
            }
        }
        let fit = fit_least_squares(inst.features, &inst.rows, &inst.labels);
        prop_assert_eq!(fit.coefficients[k as usize], 0.0);
        Ok(())
    }))
}

/// Shuffling rows leaves the fit unchanged; shuffling columns permutes it.
pub fn check_ls_permutation(cases: u32, seed: u64) -> Outcome {
    let strategy = ls_instance(6, 20).prop_flat_map(|inst| {
        let n = inst.rows.len();
        let p = inst.features;
        (
            Just(inst),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            Just((0..p).collect::<Vec<_>>()).prop_shuffle(),
        )
    });
    outcome(
        runner(cases, seed).run(&strategy, |(inst, row_perm, col_perm)| {
            let base = fit_least_squares(inst.features, &inst.rows, &inst.labels);
            let rows: Vec<Vec<u32>> = row_perm.iter().map(|&i| inst.rows[i].clone()).collect();
            let labels: Vec<f64> = row_perm.iter().map(|&i| inst.labels[i]).collect();
            let shuffled = fit_least_squares(inst.features, &rows, &labels);
            for (a, b) in base.coefficients.iter().zip(&shuffled.coefficients) {
                prop_assert!((a - b).abs() <= 1e-9, "row shuffle: {a} vs {b}");
            }
            // column j moves to position col_perm[j]
            let rows: Vec<Vec<u32>> = inst
                .rows
                .iter()
                .map(|r| r.iter().map(|&j| col_perm[j as usize] as u32).collect())
                .collect();
            let moved = fit_least_squares(inst.features, &rows, &inst.labels);
            for (j, &to) in col_perm.iter().enumerate() {
                let (a, b) = (base.coefficients[j], moved.coefficients[to]);
                prop_assert!((a - b).abs() <= 1e-9, "column shuffle: {a} vs {b}");
            }
            Ok(())
        }),
    )
}

/// Every property suite with its case count, as run by the acceptance target.
pub fn property_suites() -> Vec<Suite> {
    vec![
        (
            "similarity bounds, symmetry, weight scaling",
            1000,
            check_similarity,
        ),
        (
            "clustering partition and termination",
            500,
            check_clustering,
        ),
        ("NTCF gate monotonicity", 200, check_ntcf_monotone),
        ("removal round trip", 200, check_removal_round_trip),
        ("least-squares residual", 200, check_ls_residual),
        (
            "least-squares constant column",
            200,
            check_ls_constant_column,
        ),
        (
            "least-squares permutation invariance",
            200,
            check_ls_permutation,
        ),
    ]
}

// ---------------------------------------------------------------------------
// hand-computed values on the university fragment

fn expect(label: &str, got: f64, want: f64) -> Outcome {
    if (got - want).abs() <= 1e-12 {
        Ok(())
    } else {
        Err(format!("{label}: got {got}, expected {want}"))
    }
}

/// Eligible cells counted by hand: 6 users and 7 resources, 3 known non-id cells each.
pub fn check_eligible_hand_count() -> Outcome {
    use abac_infer::fixtures::{university_fragment, university_fragment_complete};
    let full = eligible_cells(&university_fragment_complete().model).len();
    let partial = eligible_cells(&university_fragment().model).len();
    if (full, partial) == (39, 37) {
        Ok(())
    } else {
        Err(format!("eligible cells {full}/{partial}, expected 39/37"))
    }
}

/// Weighted Jaccard between faculty members, worked out by hand.
pub fn check_similarity_hand_values() -> Outcome {
    use abac_infer::cluster::attr_jaccard;
    use abac_infer::fixtures::{university_fragment, university_fragment_complete};
    let full = university_fragment_complete().model;
    let partial = university_fragment().model;
    let sig: BTreeSet<String> = ["id", "position", "department", "coursesTaught"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let flat = ClusteringConfig::default();
    let sim = |om: &ObjectModel, a: &str, b: &str, cfg: &ClusteringConfig| {
        object_similarity(om.get(a).unwrap(), om.get(b).unwrap(), &sig, cfg).unwrap()
    };
    // id 0, position 1, department 1, coursesTaught 0
    expect("csFac1~csFac2", sim(&full, "csFac1", "csFac2", &flat), 0.5)?;
    // id 0, position 1, department 0, coursesTaught 0
    expect("csFac2~eeFac1", sim(&full, "csFac2", "eeFac1", &flat), 0.25)?;
    // two Missing cells score 0.5 each: (0 + 1 + 0.5 + 0.5) / 4
    expect(
        "csFac1?~csFac2",
        sim(&partial, "csFac1", "csFac2", &flat),
        0.5,
    )?;
    // (0 + 1 + 0.5 + 0.5) / 4 against the other department as well
    expect(
        "csFac1?~eeFac1",
        sim(&partial, "csFac1", "eeFac1", &flat),
        0.5,
    )?;
    // position weighted 3: 3 / (1 + 3 + 1 + 1)
    let heavy = ClusteringConfig {
        weights: [("position".to_string(), 3.0)].into(),
        st: 0.25,
    };
    expect(
        "weighted csFac2~eeFac1",
        sim(&full, "csFac2", "eeFac1", &heavy),
        0.5,
    )?;
    let a = Object::new("p", Class::User).with("b", AttrValue::set(["v0", "v1"]));
    let b = Object::new("q", Class::User).with("b", AttrValue::set(["v1", "v2"]));
    expect(
        "{v0,v1}~{v1,v2}",
        attr_jaccard(&a, &b, "b").unwrap(),
        1.0 / 3.0,
    )?;
    let e = Object::new("e", Class::User).with("b", AttrValue::set(Vec::<String>::new()));
    expect("{}~{}", attr_jaccard(&e, &e, "b").unwrap(), 1.0)
}

/// Every oracle comparison with its case count, as run by the acceptance target.
pub fn oracle_suites() -> Vec<Suite> {
    vec![
        ("rule meaning against enumeration", 50, check_rule_meaning),
        (
            "least squares against pseudo-inverse",
            100,
            check_least_squares_oracle,
        ),
    ]
}
