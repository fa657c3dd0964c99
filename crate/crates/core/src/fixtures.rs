//! The small university policy used throughout the docs, examples and tests:
//! four faculty, two students, five gradebooks, two transcripts and the rule
//! "an instructor may modify the gradebook of a course they teach".

use std::collections::BTreeSet;

use crate::model::{AttrKind, AttrSchema, AttrValue, Class, Object, ObjectModel, Schema};
use crate::policy::{AtomicCondition, AtomicConstraint, ConsOp, Entitlement, Policy, Rule};

pub fn university_schema() -> Schema {
    use AttrKind::*;
    use Class::*;
    Schema::new(vec![
        AttrSchema::new("id", Single, User),
        AttrSchema::new("position", Single, User),
        AttrSchema::new("department", Single, User),
        AttrSchema::new("coursesTaught", Multi, User),
        AttrSchema::new("coursesTaken", Multi, User),
        AttrSchema::new("id", Single, Resource),
        AttrSchema::new("department", Single, Resource),
        AttrSchema::new("course", Single, Resource),
        AttrSchema::new("student", Single, Resource),
        AttrSchema::new("type", Single, Resource),
    ])
    .expect("static schema")
}

fn faculty(id: &str, dept: &str, courses: &[&str]) -> Object {
    Object::new(id, Class::User)
        .with("id", AttrValue::atomic(id))
        .with("position", AttrValue::atomic("faculty"))
        .with("department", AttrValue::atomic(dept))
        .with("coursesTaught", AttrValue::set(courses.iter().copied()))
}

fn student(id: &str, dept: &str, courses: &[&str]) -> Object {
    Object::new(id, Class::User)
        .with("id", AttrValue::atomic(id))
        .with("position", AttrValue::atomic("student"))
        .with("department", AttrValue::atomic(dept))
        .with("coursesTaken", AttrValue::set(courses.iter().copied()))
}

fn gradebook(dept: &str, course: &str) -> Object {
    let id = format!("{course}gb");
    Object::new(id.clone(), Class::Resource)
        .with("id", AttrValue::atomic(id))
        .with("department", AttrValue::atomic(dept))
        .with("course", AttrValue::atomic(course))
        .with("type", AttrValue::atomic("gradebook"))
}

fn transcript(dept: &str, student: &str) -> Object {
    let id = format!("{student}trans");
    Object::new(id.clone(), Class::Resource)
        .with("id", AttrValue::atomic(id))
        .with("department", AttrValue::atomic(dept))
        .with("student", AttrValue::atomic(student))
        .with("type", AttrValue::atomic("transcript"))
}

/// The gradebook rule: `⟨position ∈ {faculty}, type ∈ {gradebook}, coursesTaught ∋ course, {modify}⟩`.
pub fn gradebook_rule() -> Rule {
    Rule {
        user_condition: [AtomicCondition::in_set("position", ["faculty"])].into(),
        resource_condition: [AtomicCondition::in_set("type", ["gradebook"])].into(),
        constraint: [AtomicConstraint::new(
            "coursesTaught",
            ConsOp::Contains,
            "course",
        )]
        .into(),
        actions: ["modify".to_string()].into(),
    }
}

/// The complete policy: csFac1 is in `cs` and teaches `cs101`.
pub fn university_fragment_complete() -> Policy {
    let users = vec![
        faculty("csFac1", "cs", &["cs101"]),
        faculty("csFac2", "cs", &["cs601"]),
        faculty("eeFac1", "ee", &["ee101"]),
        faculty("eeFac2", "ee", &["ee601"]),
        student("csStu1", "cs", &["cs101"]),
        student("eeStu1", "ee", &["ee602"]),
    ];
    let resources = vec![
        gradebook("cs", "cs101"),
        gradebook("cs", "cs601"),
        gradebook("ee", "ee101"),
        gradebook("ee", "ee601"),
        gradebook("ee", "ee602"),
        transcript("cs", "csStu1"),
        transcript("ee", "eeStu1"),
    ];
    let model = ObjectModel::new(university_schema(), users, resources).expect("static model");
    let actions: BTreeSet<String> = ["modify".to_string()].into();
    Policy::new(model, actions, vec![gradebook_rule()]).expect("static policy")
}

/// The same policy with csFac1's `department` and `coursesTaught` Missing.
pub fn university_fragment() -> Policy {
    let mut p = university_fragment_complete();
    p.model
        .set_value("csFac1", "department", AttrValue::Missing)
        .expect("declared");
    p.model
        .set_value("csFac1", "coursesTaught", AttrValue::Missing)
        .expect("declared");
    p
}

/// The four entitlements granted by the gradebook rule on the complete model.
pub fn university_fragment_entitlements() -> BTreeSet<Entitlement> {
    [
        ("csFac1", "cs101gb"),
        ("csFac2", "cs601gb"),
        ("eeFac1", "ee101gb"),
        ("eeFac2", "ee601gb"),
    ]
    .into_iter()
    .map(|(u, r)| Entitlement::new(u, r, "modify"))
    .collect()
}
