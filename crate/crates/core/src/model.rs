//! Object model: attribute values, schema, users and resources.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Name of the identity attribute. It is structural: never removed, never imputed.
pub const ID_ATTR: &str = "id";

/// A single cell of the object model.
///
/// `Null` means the attribute does not apply to the object (definite
/// information). `Missing` means the attribute applies but its value is
/// unknown. The two never compare equal to each other or to data values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttrValue {
    Atomic(String),
    Set(BTreeSet<String>),
    Null,
    Missing,
}

impl AttrValue {
    pub fn atomic(v: impl Into<String>) -> Self {
        AttrValue::Atomic(v.into())
    }

    pub fn set<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        AttrValue::Set(values.into_iter().map(Into::into).collect())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, AttrValue::Null)
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, AttrValue::Missing)
    }

    /// Value set with atomic values lifted to singletons. `None` for Null/Missing.
    pub fn as_value_set(&self) -> Option<BTreeSet<&str>> {
        match self {
            AttrValue::Atomic(v) => Some(std::iter::once(v.as_str()).collect()),
            AttrValue::Set(s) => Some(s.iter().map(String::as_str).collect()),
            AttrValue::Null | AttrValue::Missing => None,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Atomic(v) => write!(f, "{v}"),
            AttrValue::Set(s) => {
                write!(f, "{{")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
            AttrValue::Null => write!(f, "NULL"),
            AttrValue::Missing => write!(f, "?"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Single,
    Multi,
}

/// Whether an attribute (or object) belongs to the user or resource side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    User,
    Resource,
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Class::User => f.write_str("user"),
            Class::Resource => f.write_str("resource"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrSchema {
    pub name: String,
    pub kind: AttrKind,
    pub applies_to: Class,
}

impl AttrSchema {
    pub fn new(name: impl Into<String>, kind: AttrKind, applies_to: Class) -> Self {
        Self {
            name: name.into(),
            kind,
            applies_to,
        }
    }
}

/// Declared attributes, split by class. Names are unique within a class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    attrs: Vec<AttrSchema>,
    user: BTreeMap<String, AttrKind>,
    resource: BTreeMap<String, AttrKind>,
}

impl Schema {
    pub fn new(attrs: Vec<AttrSchema>) -> Result<Self, ModelError> {
        let mut user = BTreeMap::new();
        let mut resource = BTreeMap::new();
        for a in &attrs {
            let table = match a.applies_to {
                Class::User => &mut user,
                Class::Resource => &mut resource,
            };
            if table.insert(a.name.clone(), a.kind).is_some() {
                return Err(ModelError::DuplicateAttribute {
                    class: a.applies_to,
                    attr: a.name.clone(),
                });
            }
        }
        Ok(Self {
            attrs,
            user,
            resource,
        })
    }

    pub fn attrs(&self) -> &[AttrSchema] {
        &self.attrs
    }

    pub fn kind(&self, class: Class, attr: &str) -> Option<AttrKind> {
        self.table(class).get(attr).copied()
    }

    /// Attribute names of one class, sorted.
    pub fn names(&self, class: Class) -> impl Iterator<Item = (&str, AttrKind)> {
        self.table(class).iter().map(|(n, k)| (n.as_str(), *k))
    }

    fn table(&self, class: Class) -> &BTreeMap<String, AttrKind> {
        match class {
            Class::User => &self.user,
            Class::Resource => &self.resource,
        }
    }
}

/// A user or resource: an id plus one value per schema attribute of its class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Object {
    pub id: String,
    pub class: Class,
    pub attrs: BTreeMap<String, AttrValue>,
}

impl Object {
    pub fn new(id: impl Into<String>, class: Class) -> Self {
        Self {
            id: id.into(),
            class,
            attrs: BTreeMap::new(),
        }
    }

    pub fn with(mut self, attr: impl Into<String>, value: AttrValue) -> Self {
        self.attrs.insert(attr.into(), value);
        self
    }

    /// The stored value, treating an absent entry as Null.
    pub fn get(&self, attr: &str) -> &AttrValue {
        self.attrs.get(attr).unwrap_or(&AttrValue::Null)
    }

    pub fn has_missing(&self) -> bool {
        self.attrs.values().any(AttrValue::is_missing)
    }

    pub fn missing_attrs(&self) -> impl Iterator<Item = &str> {
        self.attrs
            .iter()
            .filter(|(_, v)| v.is_missing())
            .map(|(k, _)| k.as_str())
    }
}

/// Users and resources together with the schema they conform to.
#[derive(Debug, Clone)]
pub struct ObjectModel {
    schema: Schema,
    users: Vec<Object>,
    resources: Vec<Object>,
    index: HashMap<String, (Class, usize)>,
}

impl PartialEq for ObjectModel {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.users == other.users
            && self.resources == other.resources
    }
}

impl ObjectModel {
    /// Builds a validated model. Absent attribute entries are filled with Null.
    pub fn new(
        schema: Schema,
        users: Vec<Object>,
        resources: Vec<Object>,
    ) -> Result<Self, ModelError> {
        let mut index = HashMap::new();
        let mut users = users;
        let mut resources = resources;
        for (class, objects) in [(Class::User, &mut users), (Class::Resource, &mut resources)] {
            for (pos, o) in objects.iter_mut().enumerate() {
                if o.class != class {
                    return Err(ModelError::WrongClass {
                        id: o.id.clone(),
                        expected: class,
                    });
                }
                if index.insert(o.id.clone(), (class, pos)).is_some() {
                    return Err(ModelError::DuplicateObject(o.id.clone()));
                }
                for name in o.attrs.keys() {
                    if schema.kind(class, name).is_none() {
                        return Err(ModelError::UnknownAttribute {
                            object: o.id.clone(),
                            attr: name.clone(),
                        });
                    }
                }
                for (name, kind) in schema.names(class) {
                    let value = o.attrs.entry(name.to_string()).or_insert(AttrValue::Null);
                    check_value(&o.id, name, kind, value)?;
                }
            }
        }
        Ok(Self {
            schema,
            users,
            resources,
            index,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn users(&self) -> &[Object] {
        &self.users
    }

    pub fn resources(&self) -> &[Object] {
        &self.resources
    }

    pub fn objects(&self, class: Class) -> &[Object] {
        match class {
            Class::User => &self.users,
            Class::Resource => &self.resources,
        }
    }

    pub fn get(&self, id: &str) -> Option<&Object> {
        self.index
            .get(id)
            .map(|&(class, pos)| &self.objects(class)[pos])
    }

    pub fn len(&self) -> usize {
        self.users.len() + self.resources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of non-Null cells, counting every attribute including `id`.
    pub fn active_cell_count(&self) -> usize {
        self.users
            .iter()
            .chain(&self.resources)
            .map(|o| o.attrs.values().filter(|v| !v.is_null()).count())
            .sum()
    }

    pub fn missing_cell_count(&self) -> usize {
        self.users
            .iter()
            .chain(&self.resources)
            .map(|o| o.attrs.values().filter(|v| v.is_missing()).count())
            .sum()
    }

    /// Replaces one cell, keeping the kind invariants.
    pub fn set_value(
        &mut self,
        id: &str,
        attr: &str,
        value: AttrValue,
    ) -> Result<AttrValue, ModelError> {
        let &(class, pos) = self
            .index
            .get(id)
            .ok_or_else(|| ModelError::UnknownObject(id.to_string()))?;
        let kind = self
            .schema
            .kind(class, attr)
            .ok_or_else(|| ModelError::UnknownAttribute {
                object: id.to_string(),
                attr: attr.to_string(),
            })?;
        check_value(id, attr, kind, &value)?;
        let obj = match class {
            Class::User => &mut self.users[pos],
            Class::Resource => &mut self.resources[pos],
        };
        Ok(obj
            .attrs
            .insert(attr.to_string(), value)
            .unwrap_or(AttrValue::Null))
    }
}

fn check_value(
    object: &str,
    attr: &str,
    kind: AttrKind,
    value: &AttrValue,
) -> Result<(), ModelError> {
    match (kind, value) {
        (AttrKind::Single, AttrValue::Atomic(v)) if v.is_empty() => Err(ModelError::EmptyAtomic {
            object: object.to_string(),
            attr: attr.to_string(),
        }),
        (AttrKind::Single, AttrValue::Set(_)) | (AttrKind::Multi, AttrValue::Atomic(_)) => {
            Err(ModelError::KindMismatch {
                object: object.to_string(),
                attr: attr.to_string(),
                kind,
            })
        }
        _ => Ok(()),
    }
}
