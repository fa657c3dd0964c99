//! Policy JSON documents and entitlement CSV files.
//!
//! Cells are encoded as: JSON string (atomic), array of strings (set),
//! `null` (not applicable) and `{"missing": true}` (unknown). Atoms are
//! three-element arrays, e.g. `["coursesTaught", "contains", "course"]`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::FormatError;
use crate::model::{AttrKind, AttrSchema, AttrValue, Class, Object, ObjectModel, Schema};
use crate::policy::{
    check_entitlements, AtomicCondition, AtomicConstraint, CondOp, CondValue, ConsOp, Entitlement,
    Policy, Rule,
};

impl Serialize for AttrValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            AttrValue::Atomic(v) => s.serialize_str(v),
            AttrValue::Set(vs) => s.collect_seq(vs),
            AttrValue::Null => s.serialize_unit(),
            AttrValue::Missing => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("missing", &true)?;
                m.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for AttrValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::Null => Ok(AttrValue::Null),
            Value::String(v) => Ok(AttrValue::Atomic(v)),
            Value::Array(items) => items
                .into_iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s),
                    other => Err(de::Error::custom(format!(
                        "set elements must be strings, got {other}"
                    ))),
                })
                .collect::<Result<BTreeSet<_>, _>>()
                .map(AttrValue::Set),
            Value::Object(m) if m.len() == 1 && m.get("missing") == Some(&Value::Bool(true)) => {
                Ok(AttrValue::Missing)
            }
            other => Err(de::Error::custom(format!(
                "expected string, array, null or {{\"missing\": true}}, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum KindJson {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum ClassJson {
    User,
    Resource,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaJson {
    name: String,
    kind: KindJson,
    #[serde(rename = "appliesTo")]
    applies_to: ClassJson,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectJson {
    id: String,
    attrs: BTreeMap<String, AttrValue>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleJson {
    #[serde(default)]
    uc: Vec<(String, String, Value)>,
    #[serde(default)]
    rc: Vec<(String, String, Value)>,
    #[serde(default)]
    c: Vec<(String, String, String)>,
    actions: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyJson {
    schema: Vec<SchemaJson>,
    users: Vec<ObjectJson>,
    resources: Vec<ObjectJson>,
    #[serde(default)]
    actions: Vec<String>,
    #[serde(default)]
    rules: Vec<RuleJson>,
}

fn invalid(what: &'static str, message: impl Into<String>) -> FormatError {
    FormatError::Invalid {
        what,
        message: message.into(),
    }
}

fn condition_from_json(
    (attr, op, val): (String, String, Value),
) -> Result<AtomicCondition, FormatError> {
    let op = match op.as_str() {
        "in" => CondOp::In,
        "contains" => CondOp::Contains,
        other => {
            return Err(invalid(
                "condition",
                format!("unknown operator `{other}` on `{attr}`"),
            ))
        }
    };
    let val = match val {
        Value::String(s) => CondValue::Atomic(s),
        Value::Array(items) => CondValue::Set(
            items
                .into_iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s),
                    other => Err(invalid(
                        "condition",
                        format!("non-string constant {other} on `{attr}`"),
                    )),
                })
                .collect::<Result<_, _>>()?,
        ),
        other => {
            return Err(invalid(
                "condition",
                format!("constant {other} on `{attr}` is not a string or set"),
            ))
        }
    };
    Ok(AtomicCondition { attr, op, val })
}

fn condition_to_json(c: &AtomicCondition) -> (String, String, Value) {
    let val = match &c.val {
        CondValue::Atomic(v) => Value::String(v.clone()),
        CondValue::Set(s) => Value::Array(s.iter().cloned().map(Value::String).collect()),
    };
    (c.attr.clone(), c.op.name().to_string(), val)
}

fn constraint_from_json(
    (attr_u, op, attr_r): (String, String, String),
) -> Result<AtomicConstraint, FormatError> {
    let op = ConsOp::ALL
        .into_iter()
        .find(|o| o.name() == op)
        .ok_or_else(|| invalid("constraint", format!("unknown operator `{op}`")))?;
    Ok(AtomicConstraint { attr_u, op, attr_r })
}

fn objects_from_json(class: Class, list: Vec<ObjectJson>) -> Vec<Object> {
    list.into_iter()
        .map(|o| Object {
            id: o.id,
            class,
            attrs: o.attrs,
        })
        .collect()
}

fn objects_to_json(list: &[Object]) -> Vec<ObjectJson> {
    list.iter()
        .map(|o| ObjectJson {
            id: o.id.clone(),
            attrs: o.attrs.clone(),
        })
        .collect()
}

fn schema_from_json(list: Vec<SchemaJson>) -> Result<Schema, FormatError> {
    let attrs = list
        .into_iter()
        .map(|s| {
            let kind = match s.kind {
                KindJson::Single => AttrKind::Single,
                KindJson::Multi => AttrKind::Multi,
            };
            let class = match s.applies_to {
                ClassJson::User => Class::User,
                ClassJson::Resource => Class::Resource,
            };
            AttrSchema::new(s.name, kind, class)
        })
        .collect();
    Ok(Schema::new(attrs)?)
}

fn schema_to_json(schema: &Schema) -> Vec<SchemaJson> {
    schema
        .attrs()
        .iter()
        .map(|a| SchemaJson {
            name: a.name.clone(),
            kind: match a.kind {
                AttrKind::Single => KindJson::Single,
                AttrKind::Multi => KindJson::Multi,
            },
            applies_to: match a.applies_to {
                Class::User => ClassJson::User,
                Class::Resource => ClassJson::Resource,
            },
        })
        .collect()
}

/// Parses and validates a policy document.
pub fn policy_from_str(text: &str) -> Result<Policy, FormatError> {
    let doc: PolicyJson = serde_json::from_str(text)?;
    let schema = schema_from_json(doc.schema)?;
    let model = ObjectModel::new(
        schema,
        objects_from_json(Class::User, doc.users),
        objects_from_json(Class::Resource, doc.resources),
    )?;
    let actions: BTreeSet<String> = doc.actions.into_iter().collect();
    let rules = doc
        .rules
        .into_iter()
        .map(|r| {
            Ok(Rule {
                user_condition: r
                    .uc
                    .into_iter()
                    .map(condition_from_json)
                    .collect::<Result<_, FormatError>>()?,
                resource_condition: r.rc.into_iter().map(condition_from_json).collect::<Result<
                    _,
                    FormatError,
                >>(
                )?,
                constraint: r
                    .c
                    .into_iter()
                    .map(constraint_from_json)
                    .collect::<Result<_, FormatError>>()?,
                actions: r.actions.into_iter().collect(),
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    Ok(Policy::new(model, actions, rules)?)
}

pub fn read_policy<R: Read>(mut reader: R) -> Result<Policy, FormatError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    policy_from_str(&text)
}

/// Pretty-printed JSON with a trailing newline. Field order is fixed, so the
/// output is byte-stable for a given policy.
pub fn policy_to_string(p: &Policy) -> String {
    let doc = PolicyJson {
        schema: schema_to_json(p.model.schema()),
        users: objects_to_json(p.model.users()),
        resources: objects_to_json(p.model.resources()),
        actions: p.actions.iter().cloned().collect(),
        rules: p
            .rules
            .iter()
            .map(|r| RuleJson {
                uc: r.user_condition.iter().map(condition_to_json).collect(),
                rc: r.resource_condition.iter().map(condition_to_json).collect(),
                c: r.constraint
                    .iter()
                    .map(|c| (c.attr_u.clone(), c.op.name().to_string(), c.attr_r.clone()))
                    .collect(),
                actions: r.actions.iter().cloned().collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("policy serializes");
    s.push('\n');
    s
}

pub fn write_policy<W: Write>(mut w: W, p: &Policy) -> Result<(), FormatError> {
    w.write_all(policy_to_string(p).as_bytes())?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct EntitlementRow {
    user: String,
    resource: String,
    action: String,
}

/// Reads a `user,resource,action` CSV. Duplicate rows collapse.
pub fn read_entitlements<R: Read>(reader: R) -> Result<BTreeSet<Entitlement>, FormatError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["user", "resource", "action"] {
        return Err(FormatError::Csv {
            line: Some(1),
            message: format!(
                "expected header `user,resource,action`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out = BTreeSet::new();
    for row in rdr.deserialize() {
        let row: EntitlementRow = row?;
        out.insert(Entitlement::new(row.user, row.resource, row.action));
    }
    Ok(out)
}

pub fn read_entitlements_checked<R: Read>(
    reader: R,
    om: &ObjectModel,
) -> Result<BTreeSet<Entitlement>, FormatError> {
    let e0 = read_entitlements(reader)?;
    check_entitlements(om, &e0)?;
    Ok(e0)
}

pub fn write_entitlements<'a, W, I>(w: W, e0: I) -> Result<(), FormatError>
where
    W: Write,
    I: IntoIterator<Item = &'a Entitlement>,
{
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["user", "resource", "action"])?;
    for e in e0 {
        wtr.write_record([&e.user, &e.resource, &e.action])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn entitlements_to_string<'a, I>(e0: I) -> String
where
    I: IntoIterator<Item = &'a Entitlement>,
{
    let mut buf = Vec::new();
    write_entitlements(&mut buf, e0).expect("in-memory write");
    String::from_utf8(buf).expect("csv is utf-8")
}
