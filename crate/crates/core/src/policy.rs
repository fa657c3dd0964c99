//! Policy language: atomic conditions and constraints, rules, entitlements,
//! and their three-valued evaluation against an object model.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::PolicyError;
use crate::model::{AttrKind, AttrValue, Class, Object, ObjectModel, Schema};

/// Three-valued truth. `Unknown` only arises from Missing cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tri {
    True,
    False,
    Unknown,
}

impl Tri {
    /// Kleene conjunction: False dominates Unknown.
    pub fn and(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::False, _) | (_, Tri::False) => Tri::False,
            (Tri::Unknown, _) | (_, Tri::Unknown) => Tri::Unknown,
            _ => Tri::True,
        }
    }

    pub fn from_bool(b: bool) -> Tri {
        if b {
            Tri::True
        } else {
            Tri::False
        }
    }

    /// The definite boolean, or `None` for Unknown.
    pub fn definite(self) -> Option<bool> {
        match self {
            Tri::True => Some(true),
            Tri::False => Some(false),
            Tri::Unknown => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CondOp {
    In,
    Contains,
}

impl CondOp {
    pub fn name(self) -> &'static str {
        match self {
            CondOp::In => "in",
            CondOp::Contains => "contains",
        }
    }
}

/// Constant side of an atomic condition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CondValue {
    Atomic(String),
    Set(BTreeSet<String>),
}

/// `⟨attr, op, val⟩` over a single object.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomicCondition {
    pub attr: String,
    pub op: CondOp,
    pub val: CondValue,
}

impl AtomicCondition {
    pub fn in_set<I, S>(attr: impl Into<String>, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            attr: attr.into(),
            op: CondOp::In,
            val: CondValue::Set(values.into_iter().map(Into::into).collect()),
        }
    }

    pub fn contains(attr: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            attr: attr.into(),
            op: CondOp::Contains,
            val: CondValue::Atomic(value.into()),
        }
    }

    /// Constant values carried by the condition.
    pub fn values(&self) -> Vec<&str> {
        match &self.val {
            CondValue::Atomic(v) => vec![v.as_str()],
            CondValue::Set(s) => s.iter().map(String::as_str).collect(),
        }
    }

    pub fn type_check(&self, schema: &Schema, class: Class) -> Result<(), PolicyError> {
        let kind = schema
            .kind(class, &self.attr)
            .ok_or_else(|| PolicyError::UnknownAttribute {
                class,
                attr: self.attr.clone(),
            })?;
        match (self.op, kind, &self.val) {
            (CondOp::In, AttrKind::Single, CondValue::Set(_)) => Ok(()),
            (CondOp::Contains, AttrKind::Multi, CondValue::Atomic(v)) if !v.is_empty() => Ok(()),
            (CondOp::Contains, AttrKind::Multi, CondValue::Atomic(_)) => {
                Err(PolicyError::BadConstant {
                    attr: self.attr.clone(),
                    reason: "empty atomic value",
                })
            }
            (CondOp::In, AttrKind::Single, CondValue::Atomic(_)) => Err(PolicyError::BadConstant {
                attr: self.attr.clone(),
                reason: "`in` needs a set",
            }),
            (CondOp::Contains, AttrKind::Multi, CondValue::Set(_)) => {
                Err(PolicyError::BadConstant {
                    attr: self.attr.clone(),
                    reason: "`contains` needs an atomic value",
                })
            }
            (op, kind, _) => Err(PolicyError::OperatorKind {
                op: op.name(),
                class,
                attr: self.attr.clone(),
                kind,
            }),
        }
    }
}

impl fmt::Display for AtomicCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.val {
            CondValue::Atomic(v) => write!(f, "{} ∋ {}", self.attr, v),
            CondValue::Set(s) => {
                let vals: Vec<&str> = s.iter().map(String::as_str).collect();
                write!(f, "{} ∈ {{{}}}", self.attr, vals.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConsOp {
    Equal,
    In,
    Contains,
    Supseteq,
}

impl ConsOp {
    pub const ALL: [ConsOp; 4] = [
        ConsOp::Equal,
        ConsOp::In,
        ConsOp::Contains,
        ConsOp::Supseteq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConsOp::Equal => "equal",
            ConsOp::In => "in",
            ConsOp::Contains => "contains",
            ConsOp::Supseteq => "supseteq",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ConsOp::Equal => "=",
            ConsOp::In => "∈",
            ConsOp::Contains => "∋",
            ConsOp::Supseteq => "⊇",
        }
    }

    /// The (user kind, resource kind) pair this operator relates.
    pub fn kinds(self) -> (AttrKind, AttrKind) {
        match self {
            ConsOp::Equal => (AttrKind::Single, AttrKind::Single),
            ConsOp::In => (AttrKind::Single, AttrKind::Multi),
            ConsOp::Contains => (AttrKind::Multi, AttrKind::Single),
            ConsOp::Supseteq => (AttrKind::Multi, AttrKind::Multi),
        }
    }

    pub fn for_kinds(user: AttrKind, resource: AttrKind) -> ConsOp {
        match (user, resource) {
            (AttrKind::Single, AttrKind::Single) => ConsOp::Equal,
            (AttrKind::Single, AttrKind::Multi) => ConsOp::In,
            (AttrKind::Multi, AttrKind::Single) => ConsOp::Contains,
            (AttrKind::Multi, AttrKind::Multi) => ConsOp::Supseteq,
        }
    }
}

/// `⟨attr_u, op, attr_r⟩` relating a user attribute to a resource attribute.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomicConstraint {
    pub attr_u: String,
    pub op: ConsOp,
    pub attr_r: String,
}

impl AtomicConstraint {
    pub fn new(attr_u: impl Into<String>, op: ConsOp, attr_r: impl Into<String>) -> Self {
        Self {
            attr_u: attr_u.into(),
            op,
            attr_r: attr_r.into(),
        }
    }

    pub fn type_check(&self, schema: &Schema) -> Result<(), PolicyError> {
        let user = schema.kind(Class::User, &self.attr_u).ok_or_else(|| {
            PolicyError::UnknownAttribute {
                class: Class::User,
                attr: self.attr_u.clone(),
            }
        })?;
        let resource = schema.kind(Class::Resource, &self.attr_r).ok_or_else(|| {
            PolicyError::UnknownAttribute {
                class: Class::Resource,
                attr: self.attr_r.clone(),
            }
        })?;
        if self.op.kinds() != (user, resource) {
            return Err(PolicyError::ConstraintKind {
                attr_u: self.attr_u.clone(),
                op: self.op.name(),
                attr_r: self.attr_r.clone(),
                user,
                resource,
            });
        }
        Ok(())
    }
}

impl fmt::Display for AtomicConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.attr_u, self.op.symbol(), self.attr_r)
    }
}

/// `⟨uc, rc, c, A⟩`. Every set is read as a conjunction.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Rule {
    pub user_condition: BTreeSet<AtomicCondition>,
    pub resource_condition: BTreeSet<AtomicCondition>,
    pub constraint: BTreeSet<AtomicConstraint>,
    pub actions: BTreeSet<String>,
}

impl Rule {
    pub fn type_check(
        &self,
        schema: &Schema,
        actions: &BTreeSet<String>,
    ) -> Result<(), PolicyError> {
        for c in &self.user_condition {
            c.type_check(schema, Class::User)?;
        }
        for c in &self.resource_condition {
            c.type_check(schema, Class::Resource)?;
        }
        for c in &self.constraint {
            c.type_check(schema)?;
        }
        if let Some(a) = self.actions.iter().find(|a| !actions.contains(*a)) {
            return Err(PolicyError::UnknownAction(a.clone()));
        }
        Ok(())
    }
}

/// A granted `⟨user, resource, action⟩` triple. Orders by (user, resource, action).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Entitlement {
    pub user: String,
    pub resource: String,
    pub action: String,
}

impl Entitlement {
    pub fn new(
        user: impl Into<String>,
        resource: impl Into<String>,
        action: impl Into<String>,
    ) -> Self {
        Self {
            user: user.into(),
            resource: resource.into(),
            action: action.into(),
        }
    }
}

/// A complete ABAC policy: object model, action set and rules.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub model: ObjectModel,
    pub actions: BTreeSet<String>,
    pub rules: Vec<Rule>,
}

impl Policy {
    pub fn new(
        model: ObjectModel,
        actions: BTreeSet<String>,
        rules: Vec<Rule>,
    ) -> Result<Self, PolicyError> {
        for r in &rules {
            r.type_check(model.schema(), &actions)?;
        }
        Ok(Self {
            model,
            actions,
            rules,
        })
    }

    pub fn meaning(&self) -> Result<BTreeSet<Entitlement>, PolicyError> {
        policy_meaning(&self.rules, &self.model)
    }
}

/// Does `o` satisfy `⟨attr, op, val⟩`?
pub fn eval_atomic_condition(
    schema: &Schema,
    o: &Object,
    c: &AtomicCondition,
) -> Result<Tri, PolicyError> {
    c.type_check(schema, o.class)?;
    Ok(match (o.get(&c.attr), &c.val) {
        (AttrValue::Missing, _) => Tri::Unknown,
        (AttrValue::Null, _) => Tri::False,
        (AttrValue::Atomic(v), CondValue::Set(allowed)) => Tri::from_bool(allowed.contains(v)),
        (AttrValue::Set(held), CondValue::Atomic(v)) => Tri::from_bool(held.contains(v)),
        // type_check rules out the remaining shapes for a validated object
        _ => unreachable!("value shape checked against schema"),
    })
}

/// Three-valued conjunction over a condition set; the empty set is True.
pub fn eval_condition<'a, I>(schema: &Schema, o: &Object, cond: I) -> Result<Tri, PolicyError>
where
    I: IntoIterator<Item = &'a AtomicCondition>,
{
    let mut acc = Tri::True;
    for c in cond {
        acc = acc.and(eval_atomic_condition(schema, o, c)?);
    }
    Ok(acc)
}

pub fn eval_atomic_constraint(
    schema: &Schema,
    u: &Object,
    r: &Object,
    c: &AtomicConstraint,
) -> Result<Tri, PolicyError> {
    c.type_check(schema)?;
    let (uv, rv) = (u.get(&c.attr_u), r.get(&c.attr_r));
    if uv.is_null() || rv.is_null() {
        return Ok(Tri::False);
    }
    if uv.is_missing() || rv.is_missing() {
        return Ok(Tri::Unknown);
    }
    Ok(Tri::from_bool(match (c.op, uv, rv) {
        (ConsOp::Equal, AttrValue::Atomic(a), AttrValue::Atomic(b)) => a == b,
        (ConsOp::In, AttrValue::Atomic(a), AttrValue::Set(b)) => b.contains(a),
        (ConsOp::Contains, AttrValue::Set(a), AttrValue::Atomic(b)) => a.contains(b),
        (ConsOp::Supseteq, AttrValue::Set(a), AttrValue::Set(b)) => a.is_superset(b),
        _ => unreachable!("value shape checked against schema"),
    }))
}

pub fn eval_constraint<'a, I>(
    schema: &Schema,
    u: &Object,
    r: &Object,
    cons: I,
) -> Result<Tri, PolicyError>
where
    I: IntoIterator<Item = &'a AtomicConstraint>,
{
    let mut acc = Tri::True;
    for c in cons {
        acc = acc.and(eval_atomic_constraint(schema, u, r, c)?);
    }
    Ok(acc)
}

/// Entitlements granted by one rule, plus how many triples evaluated Unknown.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleMeaning {
    pub entitlements: BTreeSet<Entitlement>,
    pub unknown: usize,
}

pub fn rule_meaning(rule: &Rule, om: &ObjectModel) -> Result<RuleMeaning, PolicyError> {
    let schema = om.schema();
    let mut out = RuleMeaning::default();
    if rule.actions.is_empty() {
        return Ok(out);
    }
    let resource_ok = om
        .resources()
        .iter()
        .map(|r| eval_condition(schema, r, &rule.resource_condition))
        .collect::<Result<Vec<_>, _>>()?;
    for u in om.users() {
        let uc = eval_condition(schema, u, &rule.user_condition)?;
        if uc == Tri::False {
            continue;
        }
        for (r, rc) in om.resources().iter().zip(&resource_ok) {
            let t = uc.and(*rc);
            if t == Tri::False {
                continue;
            }
            match t.and(eval_constraint(schema, u, r, &rule.constraint)?) {
                Tri::True => {
                    for a in &rule.actions {
                        out.entitlements.insert(Entitlement::new(&u.id, &r.id, a));
                    }
                }
                Tri::Unknown => out.unknown += rule.actions.len(),
                Tri::False => {}
            }
        }
    }
    Ok(out)
}

/// Union of rule meanings, deduplicated and sorted.
pub fn policy_meaning(
    rules: &[Rule],
    om: &ObjectModel,
) -> Result<BTreeSet<Entitlement>, PolicyError> {
    let mut all = BTreeSet::new();
    for rule in rules {
        all.extend(rule_meaning(rule, om)?.entitlements);
    }
    Ok(all)
}

/// Checks that every entitlement references a user and a resource of `om`.
pub fn check_entitlements<'a, I>(om: &ObjectModel, e0: I) -> Result<(), PolicyError>
where
    I: IntoIterator<Item = &'a Entitlement>,
{
    for e in e0 {
        match om.get(&e.user) {
            Some(o) if o.class == Class::User => {}
            _ => {
                return Err(PolicyError::UnknownEntity {
                    class: Class::User,
                    id: e.user.clone(),
                })
            }
        }
        match om.get(&e.resource) {
            Some(o) if o.class == Class::Resource => {}
            _ => {
                return Err(PolicyError::UnknownEntity {
                    class: Class::Resource,
                    id: e.resource.clone(),
                })
            }
        }
    }
    Ok(())
}
