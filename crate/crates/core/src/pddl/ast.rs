use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::sexpr::{self, unexpected, SExpr};
use super::PddlError;

pub const OBJECT_TYPE: &str = "object";

const ACCEPTED_REQUIREMENTS: [&str; 2] = [":strips", ":typing"];

/// A ground atom such as `(at c20)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(
        predicate: impl Into<String>,
        args: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Atom {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

/// Argument of a lifted literal: a schema parameter or a domain constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Param(usize),
    Const(String),
}

/// A lifted literal `(pred t1 .. tn)` inside an action schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub parameters: Vec<TypedName>,
    pub precondition: Vec<Literal>,
    pub add: Vec<Literal>,
    pub del: Vec<Literal>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainAst {
    pub name: String,
    pub requirements: BTreeSet<String>,
    /// child type -> parent type; every chain ends at `object`.
    pub types: BTreeMap<String, String>,
    pub constants: Vec<TypedName>,
    pub predicates: BTreeMap<String, Vec<TypedName>>,
    pub actions: Vec<ActionSchema>,
}

impl DomainAst {
    /// True when `ty` equals `ancestor` or inherits from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        if ancestor == OBJECT_TYPE {
            return true;
        }
        let mut cur = ty;
        // bounded walk in case of a malformed cyclic hierarchy
        for _ in 0..=self.types.len() {
            if cur == ancestor {
                return true;
            }
            match self.types.get(cur) {
                Some(parent) => cur = parent,
                None => return false,
            }
        }
        false
    }

    fn knows_type(&self, ty: &str) -> bool {
        ty == OBJECT_TYPE || self.types.contains_key(ty)
    }

    fn constant_type(&self, name: &str) -> Option<&str> {
        self.constants
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.ty.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemAst {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init: BTreeSet<Atom>,
}

impl ProblemAst {
    /// Objects of the problem followed by the domain constants.
    pub fn all_objects<'a>(&'a self, domain: &'a DomainAst) -> impl Iterator<Item = &'a TypedName> {
        self.objects.iter().chain(domain.constants.iter())
    }
}

fn parse_typed_list(items: &[SExpr], variables: bool) -> Result<Vec<TypedName>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let word = items[i].expect_atom("a name")?;
        if word == "-" {
            let ty_expr = items
                .get(i + 1)
                .ok_or_else(|| unexpected(&items[i], "a type after `-`"))?;
            if ty_expr.head() == Some("either") {
                return Err(PddlError::UnsupportedRequirement("either-types".into()));
            }
            let ty = ty_expr.expect_atom("a type name")?;
            if pending.is_empty() {
                return Err(unexpected(&items[i], "a name before `-`"));
            }
            out.extend(pending.drain(..).map(|name| TypedName {
                name,
                ty: ty.to_string(),
            }));
            i += 2;
            continue;
        }
        if variables && !word.starts_with('?') {
            return Err(unexpected(&items[i], "a `?variable`"));
        }
        pending.push(word.to_string());
        i += 1;
    }
    out.extend(pending.into_iter().map(|name| TypedName {
        name,
        ty: OBJECT_TYPE.to_string(),
    }));
    Ok(out)
}

fn expect_define<'a>(expr: &'a SExpr, kind: &str) -> Result<(&'a [SExpr], String), PddlError> {
    let items = expr.expect_list("`(define ...)`")?;
    match items.first() {
        Some(SExpr::Atom(w, _)) if w == "define" => {}
        Some(other) => return Err(unexpected(other, "`define`")),
        None => return Err(unexpected(expr, "`define`")),
    }
    let header = items
        .get(1)
        .ok_or_else(|| unexpected(expr, &format!("`({kind} <name>)`")))?;
    let h = header.expect_list(&format!("`({kind} <name>)`"))?;
    if h.len() != 2 || h[0].as_atom() != Some(kind) {
        return Err(unexpected(header, &format!("`({kind} <name>)`")));
    }
    let name = h[1].expect_atom("a name")?.to_string();
    Ok((&items[2..], name))
}

fn check_requirements(items: &[SExpr]) -> Result<BTreeSet<String>, PddlError> {
    let mut reqs = BTreeSet::new();
    for r in items {
        let tag = r.expect_atom("a requirement tag")?;
        if !ACCEPTED_REQUIREMENTS.contains(&tag) {
            return Err(PddlError::UnsupportedRequirement(tag.to_string()));
        }
        reqs.insert(tag.to_string());
    }
    Ok(reqs)
}

/// Parses a STRIPS domain. Rejects anything beyond `:strips` and `:typing`.
pub fn parse_domain(text: &str) -> Result<DomainAst, PddlError> {
    let root = sexpr::parse_one(text)?;
    let (sections, name) = expect_define(&root, "domain")?;

    let mut domain = DomainAst {
        name,
        requirements: BTreeSet::new(),
        types: BTreeMap::new(),
        constants: Vec::new(),
        predicates: BTreeMap::new(),
        actions: Vec::new(),
    };
    let mut schema_exprs = Vec::new();

    for section in sections {
        let items = section.expect_list("a domain section")?;
        let key = section
            .head()
            .ok_or_else(|| unexpected(section, "a section keyword"))?;
        match key {
            ":requirements" => domain.requirements = check_requirements(&items[1..])?,
            ":types" => {
                for t in parse_typed_list(&items[1..], false)? {
                    if t.name != OBJECT_TYPE {
                        domain.types.insert(t.name, t.ty);
                    }
                }
            }
            ":constants" => domain.constants = parse_typed_list(&items[1..], false)?,
            ":predicates" => {
                for p in &items[1..] {
                    let pl = p.expect_list("a predicate declaration")?;
                    let pname = pl
                        .first()
                        .ok_or_else(|| unexpected(p, "a predicate name"))?
                        .expect_atom("a predicate name")?;
                    let params = parse_typed_list(&pl[1..], true)?;
                    domain.predicates.insert(pname.to_string(), params);
                }
            }
            ":action" => schema_exprs.push(section),
            ":functions" => {
                return Err(PddlError::UnsupportedRequirement(":numeric-fluents".into()))
            }
            ":derived" => {
                return Err(PddlError::UnsupportedRequirement(
                    ":derived-predicates".into(),
                ))
            }
            ":durative-action" => {
                return Err(PddlError::UnsupportedRequirement(
                    ":durative-actions".into(),
                ))
            }
            _ => return Err(unexpected(&items[0], "a domain section keyword")),
        }
    }

    // Type parents must be known, either declared or the implicit root.
    let parents: Vec<String> = domain.types.values().cloned().collect();
    for parent in parents {
        if !domain.knows_type(&parent) {
            return Err(PddlError::UnknownObjectType(parent));
        }
    }
    for c in &domain.constants {
        if !domain.knows_type(&c.ty) {
            return Err(PddlError::UnknownObjectType(c.ty.clone()));
        }
    }
    for params in domain.predicates.values() {
        for p in params {
            if !domain.knows_type(&p.ty) {
                return Err(PddlError::UnknownObjectType(p.ty.clone()));
            }
        }
    }

    for expr in schema_exprs {
        let schema = parse_action(expr, &domain)?;
        domain.actions.push(schema);
    }
    Ok(domain)
}

fn parse_action(expr: &SExpr, domain: &DomainAst) -> Result<ActionSchema, PddlError> {
    let items = expr.as_list().unwrap_or_default();
    let name = items
        .get(1)
        .ok_or_else(|| unexpected(expr, "an action name"))?
        .expect_atom("an action name")?
        .to_string();

    let mut schema = ActionSchema {
        name,
        parameters: Vec::new(),
        precondition: Vec::new(),
        add: Vec::new(),
        del: Vec::new(),
    };
    let mut pre_expr = None;
    let mut eff_expr = None;
    let mut i = 2;
    while i < items.len() {
        let key = items[i].expect_atom("`:parameters`, `:precondition` or `:effect`")?;
        let value = items
            .get(i + 1)
            .ok_or_else(|| unexpected(&items[i], "a value after the keyword"))?;
        match key {
            ":parameters" => {
                schema.parameters = parse_typed_list(value.expect_list("a parameter list")?, true)?;
                for p in &schema.parameters {
                    if !domain.knows_type(&p.ty) {
                        return Err(PddlError::UnknownObjectType(p.ty.clone()));
                    }
                }
            }
            ":precondition" => pre_expr = Some(value),
            ":effect" => eff_expr = Some(value),
            _ => {
                return Err(unexpected(
                    &items[i],
                    "`:parameters`, `:precondition` or `:effect`",
                ))
            }
        }
        i += 2;
    }

    if let Some(pre) = pre_expr {
        for lit in conjuncts(pre)? {
            match lit.head() {
                Some("not") => {
                    return Err(PddlError::UnsupportedRequirement(
                        ":negative-preconditions".into(),
                    ))
                }
                Some("=") => return Err(PddlError::UnsupportedRequirement(":equality".into())),
                Some("or") | Some("imply") => {
                    return Err(PddlError::UnsupportedRequirement(
                        ":disjunctive-preconditions".into(),
                    ))
                }
                Some("forall") | Some("exists") => {
                    return Err(PddlError::UnsupportedRequirement(
                        ":quantified-preconditions".into(),
                    ))
                }
                _ => {}
            }
            schema
                .precondition
                .push(parse_literal(lit, &schema, domain)?);
        }
    }
    if let Some(eff) = eff_expr {
        for lit in conjuncts(eff)? {
            match lit.head() {
                Some("not") => {
                    let inner = lit.as_list().unwrap_or_default();
                    if inner.len() != 2 {
                        return Err(unexpected(lit, "`(not <atom>)`"));
                    }
                    schema.del.push(parse_literal(&inner[1], &schema, domain)?);
                }
                Some("when") | Some("forall") => {
                    return Err(PddlError::UnsupportedRequirement(
                        ":conditional-effects".into(),
                    ))
                }
                Some("increase") | Some("decrease") | Some("assign") => {
                    return Err(PddlError::UnsupportedRequirement(":action-costs".into()))
                }
                _ => schema.add.push(parse_literal(lit, &schema, domain)?),
            }
        }
    }
    Ok(schema)
}

/// Flattens `(and a b ...)`, a single literal, or `()` into a list of conjuncts.
fn conjuncts(expr: &SExpr) -> Result<Vec<&SExpr>, PddlError> {
    let items = expr.expect_list("a literal or `(and ...)`")?;
    if items.is_empty() {
        return Ok(Vec::new());
    }
    if expr.head() == Some("and") {
        let mut out = Vec::new();
        for e in &items[1..] {
            out.extend(conjuncts(e)?);
        }
        Ok(out)
    } else {
        Ok(vec![expr])
    }
}

fn parse_literal(
    expr: &SExpr,
    schema: &ActionSchema,
    domain: &DomainAst,
) -> Result<Literal, PddlError> {
    let items = expr.expect_list("a literal")?;
    let pred = items
        .first()
        .ok_or_else(|| unexpected(expr, "a predicate name"))?
        .expect_atom("a predicate name")?;
    let decl = domain
        .predicates
        .get(pred)
        .ok_or_else(|| PddlError::UnknownPredicate(pred.to_string()))?;
    if decl.len() != items.len() - 1 {
        return Err(PddlError::ArityMismatch {
            predicate: pred.to_string(),
            expected: decl.len(),
            found: items.len() - 1,
        });
    }
    let mut args = Vec::with_capacity(decl.len());
    for a in &items[1..] {
        let word = a.expect_atom("a parameter or constant")?;
        if word.starts_with('?') {
            let idx = schema
                .parameters
                .iter()
                .position(|p| p.name == word)
                .ok_or_else(|| PddlError::UndeclaredParameter {
                    action: schema.name.clone(),
                    param: word.to_string(),
                })?;
            args.push(Term::Param(idx));
        } else if domain.constant_type(word).is_some() {
            args.push(Term::Const(word.to_string()));
        } else {
            return Err(unexpected(a, "a declared parameter or domain constant"));
        }
    }
    Ok(Literal {
        predicate: pred.to_string(),
        args,
    })
}

/// Parses the objects and initial state of a problem. A `(:goal ...)`
/// section is accepted and ignored; goals come from the goal file.
pub fn parse_problem(text: &str, domain: &DomainAst) -> Result<ProblemAst, PddlError> {
    let root = sexpr::parse_one(text)?;
    let (sections, name) = expect_define(&root, "problem")?;
    let mut problem = ProblemAst {
        name,
        domain_name: String::new(),
        objects: Vec::new(),
        init: BTreeSet::new(),
    };
    let mut init_exprs: &[SExpr] = &[];

    for section in sections {
        let items = section.expect_list("a problem section")?;
        let key = section
            .head()
            .ok_or_else(|| unexpected(section, "a section keyword"))?;
        match key {
            ":domain" => {
                let d = items
                    .get(1)
                    .ok_or_else(|| unexpected(section, "a domain name"))?;
                problem.domain_name = d.expect_atom("a domain name")?.to_string();
            }
            ":requirements" => {
                check_requirements(&items[1..])?;
            }
            ":objects" => problem.objects = parse_typed_list(&items[1..], false)?,
            ":init" => init_exprs = &items[1..],
            ":goal" | ":metric" => {}
            _ => return Err(unexpected(&items[0], "a problem section keyword")),
        }
    }

    if problem.domain_name != domain.name {
        return Err(PddlError::DomainMismatch {
            expected: domain.name.clone(),
            found: problem.domain_name.clone(),
        });
    }
    for o in &problem.objects {
        if !domain.knows_type(&o.ty) {
            return Err(PddlError::UnknownObjectType(o.ty.clone()));
        }
    }
    for expr in init_exprs {
        if expr.head() == Some("=") {
            return Err(PddlError::UnsupportedRequirement(":numeric-fluents".into()));
        }
        let atom = parse_ground_atom(expr)?;
        check_atom(&atom, domain, &problem)?;
        problem.init.insert(atom);
    }
    Ok(problem)
}

pub(crate) fn parse_ground_atom(expr: &SExpr) -> Result<Atom, PddlError> {
    let items = expr.expect_list("a ground atom")?;
    let mut words = Vec::with_capacity(items.len());
    for i in items {
        words.push(i.expect_atom("a name")?.to_string());
    }
    if words.is_empty() {
        return Err(unexpected(expr, "a predicate name"));
    }
    let pred = words.remove(0);
    Ok(Atom {
        predicate: pred,
        args: words,
    })
}

/// Checks that a ground atom names a declared predicate with well-typed objects.
pub(crate) fn check_atom(
    atom: &Atom,
    domain: &DomainAst,
    problem: &ProblemAst,
) -> Result<(), PddlError> {
    let ill = |reason: String| PddlError::IllTypedAtom {
        atom: atom.to_string(),
        reason,
    };
    let decl = domain
        .predicates
        .get(&atom.predicate)
        .ok_or_else(|| ill(format!("unknown predicate `{}`", atom.predicate)))?;
    if decl.len() != atom.args.len() {
        return Err(ill(format!(
            "expected {} argument(s), got {}",
            decl.len(),
            atom.args.len()
        )));
    }
    for (arg, param) in atom.args.iter().zip(decl) {
        let obj = problem
            .all_objects(domain)
            .find(|o| &o.name == arg)
            .ok_or_else(|| ill(format!("unknown object `{arg}`")))?;
        if !domain.is_subtype(&obj.ty, &param.ty) {
            return Err(ill(format!(
                "`{arg}` has type `{}`, expected `{}`",
                obj.ty, param.ty
            )));
        }
    }
    Ok(())
}
