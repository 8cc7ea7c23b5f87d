//! Rule schemas, calculus configuration, and backward rule-instance
//! enumeration.
//!
//! The builtin logical rules are hard-coded (their stoup handling and ω-set
//! flow are intricate and fixed); analytic structural rules are loaded from
//! JSON schema files and validated against the linear-conclusion and
//! strong-subformula conditions. Enumeration produces, for a conclusion
//! hypersequent `h`, every instance of the configured refined invertible
//! calculus with conclusion `h`:
//!
//! * contraction mode: absorption allows each principal component to be a
//!   per-formula expansion (up to `fm−1` extra copies) of a component of
//!   `h`; every premise is `h | C | active` where `C` lists the expanded
//!   principal copies;
//! * weakening mode: the ω-calculus — logical rules come in finite and
//!   ω-set variants, structural rules in their ω-form, and EC-absorption is
//!   realized by letting one component of `h` be matched by up to `acn+1`
//!   schema principal components; every premise is `h | active`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyperseq::{ControlFunction, Hypersequent, OmegaSequent};
use crate::syntax::{Formula, SubformulaTable};

/// Search mode: which refined calculus is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// FL_ec-style: contraction absorbed into rule instances.
    Contraction,
    /// FL_ew-style: weakening rule present, ω-machinery available.
    Weakening,
}

/// Schema validation failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("linear conclusion violated: {0}")]
    LinearConclusionViolation(String),
    #[error("strong subformula property violated: {0}")]
    StrongSubformulaViolation(String),
    #[error("malformed schema: {0}")]
    MalformedSchema(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
}

/// Enumeration failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalculusError {
    #[error("formula index {0} unknown to the subformula table")]
    UnknownFormula(usize),
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),
}

/// One conclusion component of a structural schema: `Y, X_1..X_α ⇒ Π`
/// (`succ` true) or `Z_1..Z_β ⇒` (`succ` false).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaComp {
    pub id: String,
    pub y: Option<String>,
    pub xs: Vec<String>,
    pub succ: bool,
}

impl SchemaComp {
    /// All multiset-variables of the component.
    pub fn vars(&self) -> Vec<&String> {
        self.y.iter().chain(self.xs.iter()).collect()
    }
}

/// One premise: active component `Y_i, Γ⃗ ⇒ Π_i` when tied to conclusion
/// component `for_comp`, or `Δ⃗ ⇒` when untied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaPrem {
    pub for_comp: Option<String>,
    pub context: Vec<String>,
}

/// A validated analytic structural rule schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSchema {
    pub name: String,
    pub comps: Vec<SchemaComp>,
    pub prems: Vec<SchemaPrem>,
    /// Premises repeat the conclusion (set by `invertible_form`).
    pub invertible: bool,
    /// ω-version: conclusion components carry ω-sets and each premise's
    /// active component receives the union of the ω-sets of the listed
    /// principal components (set by `omega_form`).
    pub omega: bool,
    /// For the ω-form: per premise, the conclusion-component ids whose
    /// ω-sets flow into the active component (the set `C_{i,k}`).
    pub premise_omega_sources: Option<Vec<Vec<String>>>,
}

impl RuleSchema {
    /// fm contribution: max element count over principal antecedents.
    pub fn fm(&self) -> u32 {
        self.comps
            .iter()
            .map(|c| c.vars().len() as u32)
            .max()
            .unwrap_or(0)
    }

    /// acn contribution: conclusion component count plus the hypersequent
    /// variable.
    pub fn acn(&self) -> u32 {
        1 + self.comps.len() as u32
    }
}

/// Raw JSON shape of a schema file.
#[derive(Debug, Deserialize)]
struct RawSchema {
    name: String,
    conclusion: Vec<RawComp>,
    premises: Vec<RawPrem>,
}

#[derive(Debug, Deserialize)]
struct RawComp {
    id: String,
    #[serde(rename = "Y")]
    y: Option<String>,
    #[serde(rename = "X", default)]
    xs: Vec<String>,
    stoup: String,
}

#[derive(Debug, Deserialize)]
struct RawPrem {
    #[serde(rename = "for")]
    for_comp: Option<String>,
    #[serde(default)]
    context: Vec<String>,
}

/// Parses and validates a structural-schema description. On failure returns
/// every violated condition.
pub fn validate_schema(raw_json: &str) -> Result<RuleSchema, Vec<SchemaError>> {
    let raw: RawSchema = serde_json::from_str(raw_json)
        .map_err(|e| vec![SchemaError::MalformedSchema(e.to_string())])?;
    let mut errors = Vec::new();
    let mut comps = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for c in &raw.conclusion {
        if !seen_ids.insert(c.id.clone()) {
            errors.push(SchemaError::MalformedSchema(format!(
                "duplicate conclusion component id {:?}",
                c.id
            )));
        }
        let succ = match c.stoup.as_str() {
            "succ" => true,
            "empty" => false,
            other => {
                errors.push(SchemaError::MalformedSchema(format!(
                    "component {:?}: stoup must be \"succ\" or \"empty\", got {:?}",
                    c.id, other
                )));
                false
            }
        };
        comps.push(SchemaComp {
            id: c.id.clone(),
            y: c.y.clone(),
            xs: c.xs.clone(),
            succ,
        });
    }
    // Linear conclusion: every multiset-variable occurs exactly once.
    let mut var_counts: BTreeMap<&String, usize> = BTreeMap::new();
    for c in &comps {
        for v in c.vars() {
            *var_counts.entry(v).or_default() += 1;
        }
    }
    for (v, n) in &var_counts {
        if *n > 1 {
            errors.push(SchemaError::LinearConclusionViolation(format!(
                "variable {v:?} occurs {n} times in the conclusion"
            )));
        }
    }
    let mut prems = Vec::new();
    for (k, p) in raw.premises.iter().enumerate() {
        if let Some(id) = &p.for_comp {
            if !comps.iter().any(|c| &c.id == id) {
                errors.push(SchemaError::MalformedSchema(format!(
                    "premise {k} references unknown component {id:?}"
                )));
            }
        }
        // Strong subformula property: premise variables occur in the
        // conclusion.
        for v in &p.context {
            if !var_counts.contains_key(v) {
                errors.push(SchemaError::StrongSubformulaViolation(format!(
                    "premise {k} mentions variable {v:?} absent from the conclusion"
                )));
            }
        }
        prems.push(SchemaPrem {
            for_comp: p.for_comp.clone(),
            context: p.context.clone(),
        });
    }
    if errors.is_empty() {
        Ok(RuleSchema {
            name: raw.name,
            comps,
            prems,
            invertible: false,
            omega: false,
            premise_omega_sources: None,
        })
    } else {
        Err(errors)
    }
}

/// fm/acn maxima over exactly the given schemas (no builtins). `None` for an
/// empty set, where the maxima are undefined.
pub fn compute_fm_acn(schemas: &[RuleSchema]) -> Option<(u32, u32)> {
    if schemas.is_empty() {
        return None;
    }
    let fm = schemas.iter().map(|s| s.fm()).max().unwrap();
    let acn = schemas.iter().map(|s| s.acn()).max().unwrap();
    Some((fm, acn))
}

/// fm of the builtin Fig-style logical rules: the implication-left
/// conclusion antecedent `Γ2, Γ1, A→B, Γ3` has four elements.
pub const BUILTIN_FM: u32 = 4;
/// acn of the builtin rules: hypersequent variable plus one component.
pub const BUILTIN_ACN: u32 = 2;

/// Marks a schema as invertible: every premise repeats the conclusion.
pub fn invertible_form(r: &RuleSchema) -> Result<RuleSchema, SchemaError> {
    if r.comps.is_empty() {
        return Err(SchemaError::NotApplicable(
            "axiomatic schemas have no invertible form".to_string(),
        ));
    }
    let mut out = r.clone();
    out.invertible = true;
    Ok(out)
}

/// Computes the ω-version of a structural schema: each premise's active
/// component receives the union of the ω-sets of the principal components
/// sharing a multiset-variable with it (the set `C_{i,k}` / `C_l`).
pub fn omega_form(r: &RuleSchema) -> RuleSchema {
    let mut out = r.clone();
    let mut sources = Vec::new();
    for p in &r.prems {
        let mut prem_vars: BTreeSet<&String> = p.context.iter().collect();
        if let Some(id) = &p.for_comp {
            if let Some(c) = r.comps.iter().find(|c| &c.id == id) {
                prem_vars.extend(c.y.iter());
            }
        }
        let ids: Vec<String> = r
            .comps
            .iter()
            .filter(|c| c.vars().iter().any(|v| prem_vars.contains(v)))
            .map(|c| c.id.clone())
            .collect();
        sources.push(ids);
    }
    out.omega = true;
    out.premise_omega_sources = Some(sources);
    out
}

/// The full calculus in force: mode, structural schemas, and the fm/acn
/// maxima over builtins plus schemas.
#[derive(Debug, Clone)]
pub struct CalculusConfig {
    pub mode: Mode,
    pub schemas: Vec<RuleSchema>,
    pub fm: u32,
    pub acn: u32,
}

impl CalculusConfig {
    pub fn new(mode: Mode, schemas: Vec<RuleSchema>) -> CalculusConfig {
        let (sfm, sacn) = compute_fm_acn(&schemas).unwrap_or((0, 0));
        let schemas = schemas
            .into_iter()
            .map(|s| {
                let s = invertible_form(&s).expect("structural schemas are not axiomatic");
                match mode {
                    Mode::Weakening => omega_form(&s),
                    Mode::Contraction => s,
                }
            })
            .collect();
        CalculusConfig {
            mode,
            schemas,
            fm: BUILTIN_FM.max(sfm),
            acn: BUILTIN_ACN.max(sacn),
        }
    }

    pub fn control(&self) -> ControlFunction {
        ControlFunction {
            fm: self.fm,
            acn: self.acn,
        }
    }
}

/// Binding of one principal component of an instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrincipalBinding {
    /// Schema component id; `"main"` for builtin logical rules.
    pub schema_comp: String,
    /// The conclusion component matched.
    pub target: OmegaSequent,
    /// The base-instance principal: in contraction mode a per-formula
    /// expansion of `target` (the absorption certificate), else `target`.
    pub base: OmegaSequent,
    /// Principal formula index for builtin logical rules.
    pub formula: Option<usize>,
    /// Whether the principal formula is read from the ω-set.
    pub via_omega: bool,
    /// Multiset-variable bindings (vectors over the table).
    pub vars: BTreeMap<String, Vec<u32>>,
}

/// One premise of an instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Premise {
    pub hyper: Hypersequent,
    pub active: OmegaSequent,
    /// Index into the schema's premise list (or the builtin's fixed order).
    pub schema_premise: usize,
    /// Multiset-variables whose bindings flow into the active component.
    pub context_vars: Vec<String>,
}

/// A concrete rule instance of the refined invertible calculus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RuleInstance {
    pub rule: String,
    pub conclusion: Hypersequent,
    pub principals: Vec<PrincipalBinding>,
    pub premises: Vec<Premise>,
}

/// All splits of `x` into `n` vectors summing to `x`, in lexicographic
/// order of the flattened parts.
fn vector_splits(x: &[u32], n: usize) -> Vec<Vec<Vec<u32>>> {
    fn compositions(v: u32, n: usize) -> Vec<Vec<u32>> {
        if n == 1 {
            return vec![vec![v]];
        }
        let mut out = Vec::new();
        for first in 0..=v {
            for rest in compositions(v - first, n - 1) {
                let mut c = vec![first];
                c.extend(rest);
                out.push(c);
            }
        }
        out
    }
    let mut acc: Vec<Vec<Vec<u32>>> = vec![vec![vec![]; n]];
    for &v in x {
        let per_coord = compositions(v, n);
        let mut next = Vec::with_capacity(acc.len() * per_coord.len());
        for partial in &acc {
            for comp in &per_coord {
                let mut parts = partial.clone();
                for (slot, &amount) in parts.iter_mut().zip(comp) {
                    slot.push(amount);
                }
                next.push(parts);
            }
        }
        acc = next;
    }
    acc
}

/// Two-way splits of `x` (left part, right part).
fn two_splits(x: &[u32]) -> Vec<(Vec<u32>, Vec<u32>)> {
    vector_splits(x, 2)
        .into_iter()
        .map(|mut p| {
            let r = p.pop().unwrap();
            let l = p.pop().unwrap();
            (l, r)
        })
        .collect()
}

fn unit(d: usize, i: usize) -> Vec<u32> {
    let mut v = vec![0u32; d];
    v[i - 1] = 1;
    v
}

/// Whether a single component matches an initial-hypersequent principal in
/// the given mode.
pub fn component_axiomatic(mode: Mode, tbl: &SubformulaTable, c: &OmegaSequent) -> bool {
    let zero = c.x.iter().all(|&v| v == 0);
    match mode {
        Mode::Contraction => {
            if !c.omega.is_empty() {
                return false;
            }
            axiom_shape(tbl, c, zero)
        }
        Mode::Weakening => {
            // ω-variants: any ω-set; additionally the principal may live in
            // the ω-set with an otherwise empty antecedent.
            if axiom_shape(tbl, c, zero) {
                return true;
            }
            if zero {
                if c.b != 0 {
                    if let Formula::Atom(_) = tbl.formula(c.b) {
                        if c.omega.contains(&c.b) {
                            return true;
                        }
                    }
                }
                if c.b == 0 {
                    if let Some(i0) = tbl.index_of(&Formula::Const0) {
                        if c.omega.contains(&i0) {
                            return true;
                        }
                    }
                }
            }
            false
        }
    }
}

/// The three Fig-style initial shapes on the finite part: `p ⇒ p` (exact
/// atom), `0 ⇒`, `⇒ 1`.
fn axiom_shape(tbl: &SubformulaTable, c: &OmegaSequent, zero: bool) -> bool {
    if c.b != 0 {
        match tbl.formula(c.b) {
            Formula::Atom(_) => return c.x == unit(c.d(), c.b),
            Formula::Const1 => return zero,
            _ => return false,
        }
    }
    if let Some(i0) = tbl.index_of(&Formula::Const0) {
        return c.x == unit(c.d(), i0);
    }
    false
}

/// Whether some component of `h` is an initial-hypersequent match.
pub fn is_axiomatic(cfg: &CalculusConfig, tbl: &SubformulaTable, h: &Hypersequent) -> bool {
    h.components()
        .iter()
        .any(|c| component_axiomatic(cfg.mode, tbl, c))
}

/// Enumerates every rule instance of the configured refined invertible
/// calculus whose conclusion is `h`, deduplicated by
/// (schema, premise multiset, conclusion) and in canonical order.
pub fn enumerate_instances(
    cfg: &CalculusConfig,
    h: &Hypersequent,
    tbl: &SubformulaTable,
) -> Result<Vec<RuleInstance>, CalculusError> {
    for c in h.components() {
        if c.d() != tbl.d() {
            return Err(CalculusError::UnknownFormula(c.d()));
        }
    }
    if cfg.mode == Mode::Contraction && !h.is_omega_free() {
        return Err(CalculusError::ModeMismatch(
            "contraction mode requires ω-free hypersequents".to_string(),
        ));
    }
    let mut out: BTreeSet<RuleInstance> = BTreeSet::new();
    match cfg.mode {
        Mode::Contraction => {
            let distinct = distinct_components(h);
            for t in &distinct {
                for base in expansions(t, cfg.fm) {
                    for inst in logical_instances(tbl, &base, false, None) {
                        out.insert(finish_contraction(h, t, &base, inst));
                    }
                }
            }
            for schema in &cfg.schemas {
                structural_contraction(cfg, h, schema, &distinct, &mut out);
            }
        }
        Mode::Weakening => {
            for t in distinct_components(h) {
                // Weakening rule (w): drop one antecedent occurrence.
                for i in 1..=t.d() {
                    if t.x[i - 1] > 0 {
                        let mut active = t.clone();
                        active.x[i - 1] -= 1;
                        out.insert(simple_w_instance(h, &t, active, i));
                    }
                }
                // Finite-multiplicity logical variants.
                for inst in logical_instances(tbl, &t, true, None) {
                    out.insert(finish_weakening(h, &t, inst));
                }
                // ω-variants: principal formula read from the ω-set.
                for &i in t.omega.clone().iter() {
                    for inst in logical_instances(tbl, &t, true, Some(i)) {
                        out.insert(finish_weakening(h, &t, inst));
                    }
                }
            }
            for schema in &cfg.schemas {
                structural_weakening(cfg, h, schema, &mut out);
            }
        }
    }
    Ok(out.into_iter().collect())
}

fn distinct_components(h: &Hypersequent) -> Vec<OmegaSequent> {
    let mut v: Vec<OmegaSequent> = h.components().to_vec();
    v.dedup();
    v
}

/// Per-formula expansions of `t`: each present formula may gain up to
/// `fm−1` extra copies (absent formulas stay absent).
fn expansions(t: &OmegaSequent, fm: u32) -> Vec<OmegaSequent> {
    let mut acc = vec![t.clone()];
    for i in 0..t.d() {
        if t.x[i] == 0 {
            continue;
        }
        let mut next = Vec::new();
        for cur in &acc {
            for extra in 0..fm {
                let mut e = cur.clone();
                e.x[i] = t.x[i] + extra;
                next.push(e);
            }
        }
        acc = next;
    }
    acc
}

/// A partially built logical instance: principal binding plus the premise
/// actives (before the surrounding hypersequent is attached).
struct PartialLogical {
    rule: &'static str,
    binding: PrincipalBinding,
    actives: Vec<(OmegaSequent, Vec<String>)>,
}

/// All builtin logical-rule applications with principal component `c`.
/// `omega_aware` enables ω-respecting formula addition and ω-kept premises;
/// `via_omega = Some(i)` reads the principal formula `φ_i` from the ω-set.
fn logical_instances(
    tbl: &SubformulaTable,
    c: &OmegaSequent,
    omega_aware: bool,
    via_omega: Option<usize>,
) -> Vec<PartialLogical> {
    let mut out = Vec::new();
    let d = c.d();
    let idx = |f: &Formula| tbl.index_of(f).expect("subformula closure");
    let add = |s: &OmegaSequent, i: usize| -> OmegaSequent {
        if omega_aware {
            s.add_formula(i).expect("index in range")
        } else {
            let mut t = s.clone();
            t.x[i - 1] += 1;
            t
        }
    };
    // Antecedent principals.
    let ant_indices: Vec<usize> = match via_omega {
        Some(i) => vec![i],
        None => (1..=d).filter(|&i| c.x[i - 1] > 0).collect(),
    };
    for i in ant_indices {
        // Remainder after removing one principal occurrence (for ω-variants
        // the principal stays in the ω-set and nothing is removed).
        let rem = {
            let mut r = c.clone();
            if via_omega.is_none() {
                r.x[i - 1] -= 1;
            }
            r
        };
        let gvars = |g: &OmegaSequent| {
            let mut m = BTreeMap::new();
            m.insert("G".to_string(), g.x.clone());
            m
        };
        let binding = |rule_vars: BTreeMap<String, Vec<u32>>| PrincipalBinding {
            schema_comp: "main".to_string(),
            target: c.clone(),
            base: c.clone(),
            formula: Some(i),
            via_omega: via_omega.is_some(),
            vars: rule_vars,
        };
        match tbl.formula(i).clone() {
            Formula::Const1 => {
                out.push(PartialLogical {
                    rule: "one_l",
                    binding: binding(gvars(&rem)),
                    actives: vec![(rem.clone(), vec!["G".to_string()])],
                });
            }
            Formula::Fus(a, b) => {
                let active = add(&add(&rem, idx(&a)), idx(&b));
                out.push(PartialLogical {
                    rule: "fus_l",
                    binding: binding(gvars(&rem)),
                    actives: vec![(active, vec!["G".to_string()])],
                });
            }
            Formula::And(a, b) => {
                for (rule, sub) in [("and_l1", &a), ("and_l2", &b)] {
                    out.push(PartialLogical {
                        rule,
                        binding: binding(gvars(&rem)),
                        actives: vec![(add(&rem, idx(sub)), vec!["G".to_string()])],
                    });
                }
            }
            Formula::Or(a, b) => {
                out.push(PartialLogical {
                    rule: "or_l",
                    binding: binding(gvars(&rem)),
                    actives: vec![
                        (add(&rem, idx(&a)), vec!["G".to_string()]),
                        (add(&rem, idx(&b)), vec!["G".to_string()]),
                    ],
                });
            }
            Formula::Imp(a, b) => {
                for (g, dvec) in two_splits(&rem.x) {
                    let left = OmegaSequent {
                        b: idx(&a),
                        omega: rem.omega.clone(),
                        x: g.clone(),
                    };
                    let right_base = OmegaSequent {
                        b: c.b,
                        omega: rem.omega.clone(),
                        x: dvec.clone(),
                    };
                    let right = add(&right_base, idx(&b));
                    let mut vars = BTreeMap::new();
                    vars.insert("G".to_string(), g);
                    vars.insert("D".to_string(), dvec);
                    out.push(PartialLogical {
                        rule: "imp_l",
                        binding: binding(vars),
                        actives: vec![
                            (left, vec!["G".to_string()]),
                            (right, vec!["D".to_string()]),
                        ],
                    });
                }
            }
            Formula::Atom(_) | Formula::Const0 => {}
        }
    }
    // Succedent principals.
    if c.b != 0 && via_omega.is_none() {
        let binding = |rule_vars: BTreeMap<String, Vec<u32>>| PrincipalBinding {
            schema_comp: "main".to_string(),
            target: c.clone(),
            base: c.clone(),
            formula: Some(c.b),
            via_omega: false,
            vars: rule_vars,
        };
        let gonly = {
            let mut m = BTreeMap::new();
            m.insert("G".to_string(), c.x.clone());
            m
        };
        let with_stoup = |x: Vec<u32>, b: usize| OmegaSequent {
            b,
            omega: c.omega.clone(),
            x,
        };
        match tbl.formula(c.b).clone() {
            Formula::Const0 => {
                out.push(PartialLogical {
                    rule: "zero_r",
                    binding: binding(gonly),
                    actives: vec![(with_stoup(c.x.clone(), 0), vec!["G".to_string()])],
                });
            }
            Formula::Imp(a, b) => {
                let active = add(&with_stoup(c.x.clone(), idx(&b)), idx(&a));
                out.push(PartialLogical {
                    rule: "imp_r",
                    binding: binding(gonly),
                    actives: vec![(active, vec!["G".to_string()])],
                });
            }
            Formula::And(a, b) => {
                out.push(PartialLogical {
                    rule: "and_r",
                    binding: binding(gonly),
                    actives: vec![
                        (with_stoup(c.x.clone(), idx(&a)), vec!["G".to_string()]),
                        (with_stoup(c.x.clone(), idx(&b)), vec!["G".to_string()]),
                    ],
                });
            }
            Formula::Or(a, b) => {
                for (rule, sub) in [("or_r1", &a), ("or_r2", &b)] {
                    out.push(PartialLogical {
                        rule,
                        binding: binding(gonly.clone()),
                        actives: vec![(with_stoup(c.x.clone(), idx(sub)), vec!["G".to_string()])],
                    });
                }
            }
            Formula::Fus(a, b) => {
                for (g, dvec) in two_splits(&c.x) {
                    let mut vars = BTreeMap::new();
                    vars.insert("G".to_string(), g.clone());
                    vars.insert("D".to_string(), dvec.clone());
                    out.push(PartialLogical {
                        rule: "fus_r",
                        binding: binding(vars),
                        actives: vec![
                            (with_stoup(g, idx(&a)), vec!["G".to_string()]),
                            (with_stoup(dvec, idx(&b)), vec!["D".to_string()]),
                        ],
                    });
                }
            }
            Formula::Atom(_) | Formula::Const1 => {}
        }
    }
    out
}

/// Assembles a contraction-mode instance: premises are `h | base | active`.
fn finish_contraction(
    h: &Hypersequent,
    target: &OmegaSequent,
    base: &OmegaSequent,
    mut partial: PartialLogical,
) -> RuleInstance {
    partial.binding.target = target.clone();
    partial.binding.base = base.clone();
    let premises = partial
        .actives
        .into_iter()
        .enumerate()
        .map(|(k, (active, context_vars))| Premise {
            hyper: h.extend_with(&[base.clone(), active.clone()]),
            active,
            schema_premise: k,
            context_vars,
        })
        .collect();
    RuleInstance {
        rule: partial.rule.to_string(),
        conclusion: h.clone(),
        principals: vec![partial.binding],
        premises,
    }
}

/// Assembles a weakening-mode logical instance: premises are `h | active`.
fn finish_weakening(h: &Hypersequent, target: &OmegaSequent, partial: PartialLogical) -> RuleInstance {
    let mut binding = partial.binding;
    binding.target = target.clone();
    binding.base = target.clone();
    let premises = partial
        .actives
        .into_iter()
        .enumerate()
        .map(|(k, (active, context_vars))| Premise {
            hyper: h.extend_with(&[active.clone()]),
            active,
            schema_premise: k,
            context_vars,
        })
        .collect();
    RuleInstance {
        rule: partial.rule.to_string(),
        conclusion: h.clone(),
        principals: vec![binding],
        premises,
    }
}

/// A weakening-rule (w) instance dropping one occurrence of `φ_i`.
fn simple_w_instance(
    h: &Hypersequent,
    target: &OmegaSequent,
    active: OmegaSequent,
    i: usize,
) -> RuleInstance {
    let mut vars = BTreeMap::new();
    vars.insert("G".to_string(), active.x.clone());
    RuleInstance {
        rule: "w".to_string(),
        conclusion: h.clone(),
        principals: vec![PrincipalBinding {
            schema_comp: "main".to_string(),
            target: target.clone(),
            base: target.clone(),
            formula: Some(i),
            via_omega: false,
            vars,
        }],
        premises: vec![Premise {
            hyper: h.extend_with(&[active.clone()]),
            active,
            schema_premise: 0,
            context_vars: vec!["G".to_string()],
        }],
    }
}

/// Structural-schema instances in contraction mode: choose a target
/// component and per-formula expansion for every schema component, split
/// the expanded antecedents among the schema variables, and read the
/// premises off the bindings. Premises are `h | C | active` where `C` is
/// the multiset of expanded principal copies.
fn structural_contraction(
    cfg: &CalculusConfig,
    h: &Hypersequent,
    schema: &RuleSchema,
    distinct: &[OmegaSequent],
    out: &mut BTreeSet<RuleInstance>,
) {
    let n = schema.comps.len();
    if n == 0 {
        return;
    }
    // Ordered choice of targets (components of h, possibly repeating).
    let mut target_tuples: Vec<Vec<&OmegaSequent>> = vec![vec![]];
    for _ in 0..n {
        target_tuples = target_tuples
            .into_iter()
            .flat_map(|t| {
                distinct.iter().map(move |c| {
                    let mut t2 = t.clone();
                    t2.push(c);
                    t2
                })
            })
            .collect();
    }
    for targets in target_tuples {
        // Stoup compatibility per component.
        if schema
            .comps
            .iter()
            .zip(&targets)
            .any(|(c, t)| !c.succ && t.b != 0)
        {
            continue;
        }
        // Per-component expansions and variable splits.
        let mut partials: Vec<(Vec<PrincipalBinding>, BTreeMap<String, Vec<u32>>)> =
            vec![(Vec::new(), BTreeMap::new())];
        for (comp, t) in schema.comps.iter().zip(&targets) {
            let vars = comp.vars();
            let mut next = Vec::new();
            for base in expansions(t, cfg.fm) {
                let splits = if vars.is_empty() {
                    if base.x.iter().any(|&v| v > 0) {
                        continue;
                    }
                    vec![vec![]]
                } else {
                    vector_splits(&base.x, vars.len())
                };
                for split in splits {
                    for (bindings, env) in &partials {
                        let mut bindings = bindings.clone();
                        let mut env = env.clone();
                        let mut local = BTreeMap::new();
                        for (v, part) in vars.iter().zip(&split) {
                            env.insert((*v).clone(), part.clone());
                            local.insert((*v).clone(), part.clone());
                        }
                        bindings.push(PrincipalBinding {
                            schema_comp: comp.id.clone(),
                            target: (*t).clone(),
                            base: base.clone(),
                            formula: None,
                            via_omega: false,
                            vars: local,
                        });
                        next.push((bindings, env));
                    }
                }
            }
            partials = next;
        }
        for (bindings, env) in partials {
            let bases: Vec<OmegaSequent> = bindings.iter().map(|b| b.base.clone()).collect();
            let mut premises = Vec::new();
            let mut ok = true;
            for (k, p) in schema.prems.iter().enumerate() {
                let active = match structural_active(schema, p, &bindings, &env, h) {
                    Some(a) => a,
                    None => {
                        ok = false;
                        break;
                    }
                };
                let mut hyper_extra = bases.clone();
                hyper_extra.push(active.clone());
                premises.push(Premise {
                    hyper: h.extend_with(&hyper_extra),
                    active,
                    schema_premise: k,
                    context_vars: p.context.clone(),
                });
            }
            if ok {
                out.insert(RuleInstance {
                    rule: schema.name.clone(),
                    conclusion: h.clone(),
                    principals: bindings,
                    premises,
                });
            }
        }
    }
}

/// Structural-schema instances in weakening mode: targets are components of
/// `h` (each reusable up to `acn+1` times — EC-absorption); actives follow
/// the ω-form with `add_formula` semantics.
fn structural_weakening(
    cfg: &CalculusConfig,
    h: &Hypersequent,
    schema: &RuleSchema,
    out: &mut BTreeSet<RuleInstance>,
) {
    let n = schema.comps.len();
    if n == 0 {
        return;
    }
    let distinct = distinct_components(h);
    let cap = (cfg.acn + 1) as usize;
    let mut target_tuples: Vec<Vec<&OmegaSequent>> = vec![vec![]];
    for _ in 0..n {
        target_tuples = target_tuples
            .into_iter()
            .flat_map(|t| {
                distinct.iter().filter_map(move |c| {
                    let uses = t.iter().filter(|x| **x == c).count();
                    if uses >= cap {
                        return None;
                    }
                    let mut t2 = t.clone();
                    t2.push(c);
                    Some(t2)
                })
            })
            .collect();
    }
    for targets in target_tuples {
        if schema
            .comps
            .iter()
            .zip(&targets)
            .any(|(c, t)| !c.succ && t.b != 0)
        {
            continue;
        }
        let mut partials: Vec<(Vec<PrincipalBinding>, BTreeMap<String, Vec<u32>>)> =
            vec![(Vec::new(), BTreeMap::new())];
        for (comp, t) in schema.comps.iter().zip(&targets) {
            let vars = comp.vars();
            let splits = if vars.is_empty() {
                if t.x.iter().any(|&v| v > 0) {
                    partials.clear();
                    break;
                }
                vec![vec![]]
            } else {
                vector_splits(&t.x, vars.len())
            };
            let mut next = Vec::new();
            for split in splits {
                for (bindings, env) in &partials {
                    let mut bindings = bindings.clone();
                    let mut env = env.clone();
                    let mut local = BTreeMap::new();
                    for (v, part) in vars.iter().zip(&split) {
                        env.insert((*v).clone(), part.clone());
                        local.insert((*v).clone(), part.clone());
                    }
                    bindings.push(PrincipalBinding {
                        schema_comp: comp.id.clone(),
                        target: (*t).clone(),
                        base: (*t).clone(),
                        formula: None,
                        via_omega: false,
                        vars: local,
                    });
                    next.push((bindings, env));
                }
            }
            partials = next;
        }
        for (bindings, env) in partials {
            let mut premises = Vec::new();
            let mut ok = true;
            for (k, p) in schema.prems.iter().enumerate() {
                let sources = schema
                    .premise_omega_sources
                    .as_ref()
                    .map(|s| s[k].as_slice())
                    .unwrap_or(&[]);
                let omega: BTreeSet<usize> = bindings
                    .iter()
                    .filter(|b| sources.contains(&b.schema_comp))
                    .flat_map(|b| b.target.omega.iter().copied())
                    .collect();
                let active = match structural_active_omega(schema, p, &bindings, &env, omega) {
                    Some(a) => a,
                    None => {
                        ok = false;
                        break;
                    }
                };
                premises.push(Premise {
                    hyper: h.extend_with(&[active.clone()]),
                    active,
                    schema_premise: k,
                    context_vars: p.context.clone(),
                });
            }
            if ok {
                out.insert(RuleInstance {
                    rule: schema.name.clone(),
                    conclusion: h.clone(),
                    principals: bindings,
                    premises,
                });
            }
        }
    }
}

/// The active component of a structural premise (ω-free semantics).
fn structural_active(
    schema: &RuleSchema,
    p: &SchemaPrem,
    bindings: &[PrincipalBinding],
    env: &BTreeMap<String, Vec<u32>>,
    h: &Hypersequent,
) -> Option<OmegaSequent> {
    let d = h.components().first().map(|c| c.d()).unwrap_or(0);
    let mut x = vec![0u32; d];
    let mut stoup = 0usize;
    if let Some(id) = &p.for_comp {
        let comp = schema.comps.iter().find(|c| &c.id == id)?;
        let binding = bindings.iter().find(|b| {
            b.schema_comp == *id
                && comp
                    .y
                    .as_ref()
                    .map(|y| b.vars.contains_key(y))
                    .unwrap_or(true)
        })?;
        stoup = binding.target.b;
        if let Some(y) = &comp.y {
            for (i, v) in binding.vars.get(y)?.iter().enumerate() {
                x[i] += v;
            }
        }
    }
    for var in &p.context {
        for (i, v) in env.get(var)?.iter().enumerate() {
            x[i] += v;
        }
    }
    Some(OmegaSequent::plain(x, stoup))
}

/// The active component of an ω-form structural premise: starts from the
/// computed union ω-set and adds the variable bindings via `add_formula`.
fn structural_active_omega(
    schema: &RuleSchema,
    p: &SchemaPrem,
    bindings: &[PrincipalBinding],
    env: &BTreeMap<String, Vec<u32>>,
    omega: BTreeSet<usize>,
) -> Option<OmegaSequent> {
    let d = env
        .values()
        .next()
        .map(|v| v.len())
        .or_else(|| bindings.first().map(|b| b.target.d()))?;
    let mut stoup = 0usize;
    let mut acc = OmegaSequent {
        b: 0,
        omega,
        x: vec![0u32; d],
    };
    if let Some(id) = &p.for_comp {
        let comp = schema.comps.iter().find(|c| &c.id == id)?;
        let binding = bindings.iter().find(|b| b.schema_comp == *id)?;
        stoup = binding.target.b;
        if let Some(y) = &comp.y {
            acc = acc.add_vector(binding.vars.get(y)?);
        }
    }
    for var in &p.context {
        acc = acc.add_vector(env.get(var)?);
    }
    acc.b = stoup;
    Some(acc)
}
