//! Synthetic complete policies: a university (departments with faculty,
//! chairs, students, TAs and registrar staff) and a project-management
//! organisation (departments running projects with leaders, employees,
//! contractors, auditors and planners).
//!
//! Each role has its own active-attribute set, so clustering recovers the
//! roles. Besides the attributes the rules read, every object carries one
//! descriptive attribute that is fixed per role (`affiliation`, `staffing`,
//! `system`, `currency`). Output is a pure function of the [`GenSpec`].

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::model::{AttrKind, AttrSchema, AttrValue, Class, Object, ObjectModel, Schema, ID_ATTR};
use crate::policy::{AtomicCondition, AtomicConstraint, ConsOp, Entitlement, Policy, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Template {
    University,
    #[serde(rename = "projmgmt")]
    ProjMgmt,
}

impl Template {
    pub fn name(self) -> &'static str {
        match self {
            Template::University => "university",
            Template::ProjMgmt => "projmgmt",
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Template {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "university" | "uni" => Ok(Template::University),
            "projmgmt" | "project" | "pm" => Ok(Template::ProjMgmt),
            other => Err(ConfigError::Other(format!(
                "unknown template `{other}` (university, projmgmt)"
            ))),
        }
    }
}

/// Head counts per department for the university template. `registrars` is
/// the size of the one registrar office.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct UniversityMix {
    pub faculty: usize,
    pub chairs: usize,
    pub students: usize,
    pub tas: usize,
    pub registrars: usize,
    pub schedules: usize,
    /// most courses a faculty member teaches (at least one)
    pub max_taught: usize,
    /// most courses a student takes (at least one)
    pub max_taken: usize,
}

impl Default for UniversityMix {
    fn default() -> Self {
        Self {
            faculty: 10,
            chairs: 4,
            students: 45,
            tas: 10,
            registrars: 4,
            schedules: 4,
            max_taught: 2,
            max_taken: 3,
        }
    }
}

impl UniversityMix {
    /// Faculty and students only, one course each: after clustering this
    /// gives one faculty group, one student group, one gradebook group and
    /// one transcript group.
    pub fn small() -> Self {
        Self {
            faculty: 2,
            chairs: 0,
            students: 2,
            tas: 0,
            registrars: 0,
            schedules: 0,
            max_taught: 1,
            max_taken: 1,
        }
    }
}

/// Head counts for the project-management template. `projects`, `auditors`
/// and `planners` are per department; the rest are per project.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ProjectMix {
    pub projects: usize,
    pub leaders: usize,
    pub employees: usize,
    pub contractors: usize,
    pub tasks: usize,
    pub budgets: usize,
    pub schedules: usize,
    pub auditors: usize,
    pub planners: usize,
}

impl Default for ProjectMix {
    fn default() -> Self {
        Self {
            projects: 4,
            leaders: 2,
            employees: 14,
            contractors: 5,
            tasks: 14,
            budgets: 2,
            schedules: 2,
            auditors: 5,
            planners: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenSpec {
    pub template: Template,
    /// number of departments
    pub scale: usize,
    pub seed: u64,
    #[serde(default)]
    pub university: UniversityMix,
    #[serde(default)]
    pub projects: ProjectMix,
}

impl GenSpec {
    pub fn new(template: Template, scale: usize, seed: u64) -> Self {
        Self {
            template,
            scale,
            seed,
            university: UniversityMix::default(),
            projects: ProjectMix::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.scale == 0 {
            return Err(ConfigError::Other("scale must be at least 1".into()));
        }
        let u = &self.university;
        if u.max_taught == 0 || u.max_taken == 0 {
            return Err(ConfigError::Other(
                "course counts per person must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// `university-2` style label.
    pub fn dataset_name(&self) -> String {
        format!("{}-{}", self.template, self.scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedPolicy {
    pub policy: Policy,
    pub entitlements: BTreeSet<Entitlement>,
    pub objects: usize,
    /// non-Null cells, ids excluded
    pub attrs: usize,
}

pub fn generate(spec: &GenSpec) -> Result<GeneratedPolicy, ConfigError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let policy = match spec.template {
        Template::University => university(spec.scale, &spec.university, &mut rng),
        Template::ProjMgmt => projmgmt(spec.scale, &spec.projects, &mut rng),
    };
    let entitlements = policy.meaning().expect("generated rules type-check");
    let objects = policy.model.len();
    let attrs = policy
        .model
        .users()
        .iter()
        .chain(policy.model.resources())
        .flat_map(|o| o.attrs.iter())
        .filter(|(a, v)| a.as_str() != ID_ATTR && !v.is_null())
        .count();
    Ok(GeneratedPolicy {
        policy,
        entitlements,
        objects,
        attrs,
    })
}

const DEPARTMENTS: [&str; 12] = [
    "cs", "ee", "me", "ce", "bio", "chem", "math", "phys", "econ", "hist", "ling", "art",
];

fn department_name(i: usize) -> String {
    let base = DEPARTMENTS[i % DEPARTMENTS.len()];
    if i < DEPARTMENTS.len() {
        base.to_string()
    } else {
        format!("{base}{}", i / DEPARTMENTS.len() + 1)
    }
}

fn s(attr: &str, kind: AttrKind, class: Class) -> AttrSchema {
    AttrSchema::new(attr, kind, class)
}

fn cond(attr: &str, v: &str) -> AtomicCondition {
    AtomicCondition::in_set(attr, [v])
}

fn rule(
    uc: &[AtomicCondition],
    rc: &[AtomicCondition],
    c: &[AtomicConstraint],
    actions: &[&str],
) -> Rule {
    Rule {
        user_condition: uc.iter().cloned().collect(),
        resource_condition: rc.iter().cloned().collect(),
        constraint: c.iter().cloned().collect(),
        actions: actions.iter().map(|a| a.to_string()).collect(),
    }
}

fn cons(u: &str, op: ConsOp, r: &str) -> AtomicConstraint {
    AtomicConstraint::new(u, op, r)
}

fn atom(v: &str) -> AttrValue {
    AttrValue::atomic(v)
}

fn pick<'a, R: Rng>(rng: &mut R, pool: &'a [String], max: usize) -> Vec<&'a String> {
    let k = rng.gen_range(1..=max.min(pool.len()).max(1));
    pool.choose_multiple(rng, k.min(pool.len())).collect()
}

pub fn university_schema() -> Schema {
    use AttrKind::{Multi, Single};
    use Class::{Resource, User};
    Schema::new(vec![
        s("id", Single, User),
        s("position", Single, User),
        s("department", Single, User),
        s("coursesTaught", Multi, User),
        s("coursesTaken", Multi, User),
        s("coursesTA", Multi, User),
        s("chairOf", Single, User),
        s("affiliation", Single, User),
        s("id", Single, Resource),
        s("type", Single, Resource),
        s("department", Single, Resource),
        s("course", Single, Resource),
        s("student", Single, Resource),
        s("system", Single, Resource),
    ])
    .expect("static schema")
}

pub fn university_rules() -> Vec<Rule> {
    use ConsOp::{Contains, Equal};
    let faculty = cond("position", "faculty");
    let student = cond("position", "student");
    let gradebook = cond("type", "gradebook");
    let transcript = cond("type", "transcript");
    let schedule = cond("type", "schedule");
    vec![
        rule(
            std::slice::from_ref(&faculty),
            std::slice::from_ref(&gradebook),
            &[cons("coursesTaught", Contains, "course")],
            &["readScore", "addScore"],
        ),
        rule(
            &[],
            std::slice::from_ref(&gradebook),
            &[cons("coursesTA", Contains, "course")],
            &["readScore", "addScore"],
        ),
        rule(
            std::slice::from_ref(&student),
            std::slice::from_ref(&gradebook),
            &[cons("coursesTaken", Contains, "course")],
            &["readMyScores"],
        ),
        rule(
            std::slice::from_ref(&student),
            std::slice::from_ref(&transcript),
            &[cons("id", Equal, "student")],
            &["read"],
        ),
        rule(
            &[],
            std::slice::from_ref(&transcript),
            &[cons("chairOf", Equal, "department")],
            &["read"],
        ),
        rule(
            &[],
            &[gradebook],
            &[cons("chairOf", Equal, "department")],
            &["readScore"],
        ),
        rule(
            &[cond("position", "staff"), cond("department", "registrar")],
            &[transcript],
            &[],
            &["read", "write"],
        ),
        rule(
            &[faculty],
            std::slice::from_ref(&schedule),
            &[cons("department", Equal, "department")],
            &["read"],
        ),
        rule(
            &[student],
            std::slice::from_ref(&schedule),
            &[cons("department", Equal, "department")],
            &["read"],
        ),
        rule(
            &[],
            &[schedule],
            &[cons("chairOf", Equal, "department")],
            &["write"],
        ),
    ]
}

fn university(scale: usize, mix: &UniversityMix, rng: &mut ChaCha8Rng) -> Policy {
    let mut users = Vec::new();
    let mut resources = Vec::new();
    for d in 0..scale {
        let dept = department_name(d);
        // course numbers are distinct within a department
        let teachers = mix.faculty + mix.chairs;
        let loads: Vec<usize> = (0..teachers)
            .map(|_| rng.gen_range(1..=mix.max_taught))
            .collect();
        let n_courses: usize = loads.iter().sum();
        let mut numbers: Vec<u32> = (100..700).collect();
        numbers.shuffle(rng);
        let mut courses: Vec<String> = numbers[..n_courses]
            .iter()
            .map(|n| format!("{dept}{n}"))
            .collect();
        courses.sort();
        let mut order = courses.clone();
        order.shuffle(rng);
        let mut next = order.into_iter();

        for (i, &load) in loads.iter().enumerate() {
            let taught: Vec<String> = next.by_ref().take(load).collect();
            let (id, chair) = if i < mix.faculty {
                (format!("{dept}Fac{}", i + 1), false)
            } else {
                (format!("{dept}Chair{}", i - mix.faculty + 1), true)
            };
            let mut o = Object::new(id, Class::User)
                .with("position", atom("faculty"))
                .with("affiliation", atom("employee"))
                .with("department", atom(&dept))
                .with("coursesTaught", AttrValue::set(taught));
            if chair {
                o = o.with("chairOf", atom(&dept));
            }
            users.push(o);
        }
        for i in 0..mix.students + mix.tas {
            let taken: Vec<&String> = pick(rng, &courses, mix.max_taken);
            let is_ta = i >= mix.students;
            let id = if is_ta {
                format!("{dept}TA{}", i - mix.students + 1)
            } else {
                format!("{dept}Stu{}", i + 1)
            };
            let mut o = Object::new(&id, Class::User)
                .with("position", atom("student"))
                .with("affiliation", atom("student"))
                .with("department", atom(&dept))
                .with(
                    "coursesTaken",
                    AttrValue::set(taken.iter().map(|c| c.as_str())),
                );
            if is_ta {
                let free: Vec<&String> = courses.iter().filter(|c| !taken.contains(c)).collect();
                let assists = free.choose(rng).copied().unwrap_or(&courses[0]);
                o = o.with("coursesTA", AttrValue::set([assists.as_str()]));
            }
            users.push(o);
            resources.push(
                Object::new(format!("{id}trans"), Class::Resource)
                    .with("type", atom("transcript"))
                    .with("system", atom("records"))
                    .with("department", atom(&dept))
                    .with("student", atom(&id)),
            );
        }
        for c in &courses {
            resources.push(
                Object::new(format!("{c}gb"), Class::Resource)
                    .with("type", atom("gradebook"))
                    .with("system", atom("lms"))
                    .with("department", atom(&dept))
                    .with("course", atom(c)),
            );
        }
        for i in 0..mix.schedules {
            resources.push(
                Object::new(format!("{dept}Sched{}", i + 1), Class::Resource)
                    .with("type", atom("schedule"))
                    .with("system", atom("records"))
                    .with("department", atom(&dept)),
            );
        }
    }
    // one registrar office serves every department
    for i in 0..mix.registrars {
        users.push(
            Object::new(format!("reg{}", i + 1), Class::User)
                .with("position", atom("staff"))
                .with("affiliation", atom("employee"))
                .with("department", atom("registrar")),
        );
    }
    finish(university_schema(), users, resources, university_rules())
}

pub fn projmgmt_schema() -> Schema {
    use AttrKind::{Multi, Single};
    use Class::{Resource, User};
    Schema::new(vec![
        s("id", Single, User),
        s("role", Single, User),
        s("department", Single, User),
        s("projectsLed", Multi, User),
        s("projects", Multi, User),
        s("contracts", Multi, User),
        s("staffing", Single, User),
        s("id", Single, Resource),
        s("type", Single, Resource),
        s("project", Single, Resource),
        s("department", Single, Resource),
        s("system", Single, Resource),
        s("currency", Single, Resource),
    ])
    .expect("static schema")
}

pub fn projmgmt_rules() -> Vec<Rule> {
    use ConsOp::{Contains, Equal};
    let task = cond("type", "task");
    vec![
        rule(
            &[cond("role", "leader")],
            &[],
            &[cons("projectsLed", Contains, "project")],
            &["read", "write"],
        ),
        rule(
            &[cond("role", "employee")],
            std::slice::from_ref(&task),
            &[cons("projects", Contains, "project")],
            &["read", "update"],
        ),
        rule(
            &[cond("role", "contractor")],
            &[task],
            &[cons("contracts", Contains, "project")],
            &["update"],
        ),
        rule(
            &[cond("role", "auditor")],
            &[cond("type", "budget")],
            &[cons("department", Equal, "department")],
            &["audit"],
        ),
        rule(
            &[cond("role", "planner")],
            &[cond("type", "schedule")],
            &[cons("department", Equal, "department")],
            &["read", "write"],
        ),
    ]
}

fn projmgmt(scale: usize, mix: &ProjectMix, rng: &mut ChaCha8Rng) -> Policy {
    let mut users = Vec::new();
    let mut resources = Vec::new();
    for d in 0..scale {
        let dept = department_name(d);
        let projects: Vec<String> = (1..=mix.projects)
            .map(|p| format!("{dept}Proj{p}"))
            .collect();
        for (pi, p) in projects.iter().enumerate() {
            for i in 0..mix.leaders {
                users.push(
                    Object::new(format!("{p}Lead{}", i + 1), Class::User)
                        .with("role", atom("leader"))
                        .with("staffing", atom("internal"))
                        .with("projectsLed", AttrValue::set([p.as_str()])),
                );
            }
            for i in 0..mix.employees {
                // most employees work on one project, some also on a second
                let mut on: BTreeSet<&str> = [p.as_str()].into();
                if projects.len() > 1 && rng.gen_bool(0.3) {
                    let other = loop {
                        let q = rng.gen_range(0..projects.len());
                        if q != pi {
                            break q;
                        }
                    };
                    on.insert(&projects[other]);
                }
                users.push(
                    Object::new(format!("{p}Emp{}", i + 1), Class::User)
                        .with("role", atom("employee"))
                        .with("staffing", atom("internal"))
                        .with("projects", AttrValue::set(on)),
                );
            }
            for i in 0..mix.contractors {
                users.push(
                    Object::new(format!("{p}Con{}", i + 1), Class::User)
                        .with("role", atom("contractor"))
                        .with("staffing", atom("external"))
                        .with("contracts", AttrValue::set([p.as_str()])),
                );
            }
            for i in 0..mix.budgets {
                resources.push(
                    Object::new(format!("{p}Budget{}", i + 1), Class::Resource)
                        .with("type", atom("budget"))
                        .with("project", atom(p))
                        .with("department", atom(&dept))
                        .with("system", atom("ledger"))
                        .with("currency", atom("usd")),
                );
            }
            for i in 0..mix.schedules {
                resources.push(
                    Object::new(format!("{p}Schedule{}", i + 1), Class::Resource)
                        .with("type", atom("schedule"))
                        .with("project", atom(p))
                        .with("department", atom(&dept))
                        .with("system", atom("planner")),
                );
            }
            for t in 0..mix.tasks {
                resources.push(
                    Object::new(format!("{p}Task{}", t + 1), Class::Resource)
                        .with("type", atom("task"))
                        .with("system", atom("tracker"))
                        .with("project", atom(p)),
                );
            }
        }
        for (role, n) in [("auditor", mix.auditors), ("planner", mix.planners)] {
            for i in 0..n {
                users.push(
                    Object::new(format!("{dept}{}{}", capitalize(role), i + 1), Class::User)
                        .with("role", atom(role))
                        .with("staffing", atom("internal"))
                        .with("department", atom(&dept)),
                );
            }
        }
    }
    finish(projmgmt_schema(), users, resources, projmgmt_rules())
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn with_id(o: Object) -> Object {
    let id = o.id.clone();
    o.with(ID_ATTR, AttrValue::atomic(id))
}

fn finish(schema: Schema, users: Vec<Object>, resources: Vec<Object>, rules: Vec<Rule>) -> Policy {
    let users = users.into_iter().map(with_id).collect();
    let resources = resources.into_iter().map(with_id).collect();
    let model = ObjectModel::new(schema, users, resources).expect("generated model is well formed");
    let actions: BTreeSet<String> = rules
        .iter()
        .flat_map(|r| r.actions.iter().cloned())
        .collect();
    // drop rules that grant nothing at this size (e.g. no chairs configured)
    let live: Vec<Rule> = rules
        .into_iter()
        .filter(|r| {
            crate::policy::rule_meaning(r, &model)
                .map(|m| !m.entitlements.is_empty())
                .unwrap_or(false)
        })
        .collect();
    let used: HashSet<&String> = live.iter().flat_map(|r| r.actions.iter()).collect();
    let actions = actions.into_iter().filter(|a| used.contains(a)).collect();
    Policy::new(model, actions, live).expect("generated rules type-check")
}
