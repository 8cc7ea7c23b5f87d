//! Proof objects, the independent checker, and soundness reconstruction.
//!
//! Proofs are trees of rule applications with recorded variable bindings.
//! The checker re-derives every node from its bindings with its own
//! substitution logic (it never calls the enumerator) and accepts a proof
//! iff every leaf is axiomatic and every internal node is a valid instance.
//!
//! Reconstruction turns an ω-eager proof into an ω-free checkable proof:
//! stage one assigns multiplicities K to ω-sets leaf-to-root (ω-introduction
//! nodes become *pseudo-ω* instances), stage two eliminates pseudo-ω
//! instances by unrolling the recorded derivation segment K1 times, threading
//! the excess through the shared multiset-variables of the dependency chain.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{CalculusConfig, Mode, PrincipalBinding, RuleSchema};
use crate::hyperseq::{Hypersequent, OmegaSequent};
use crate::syntax::{Formula, SubformulaTable};

/// A rule application: name plus the principal bindings needed to re-derive
/// the premises.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleApp {
    pub rule: String,
    pub principals: Vec<PrincipalBinding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProofStep {
    Axiom,
    Rule(RuleApp),
}

/// Reconstruction metadata carried on a node (prover-w origin).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub new_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_ancestor: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub routing_var: Option<String>,
    /// ω-partner component value when this node's conclusion arose from an
    /// ω-refinement.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partner: Option<OmegaSequent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<BTreeSet<usize>>,
    /// The pre-component: the active component before refinement.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pre: Option<OmegaSequent>,
}

/// A proof tree node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofTree {
    pub conclusion: Hypersequent,
    pub step: ProofStep,
    pub children: Vec<ProofTree>,
    pub meta: Option<NodeMeta>,
}

/// A check failure, pinpointing the first failing node by child path.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("check failed at node {path:?}: {message}")]
pub struct CheckFailure {
    pub path: Vec<usize>,
    pub message: String,
}

/// Reconstruction failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconstructionError {
    #[error("missing metadata: {0}")]
    MissingMetadata(String),
    #[error("refinement condition violated: {0}")]
    RefinementConditionViolated(String),
    #[error("segment reconstruction failed: {0}")]
    SegmentReconstructionFailed(String),
}

// ---------------------------------------------------------------------------
// Checker-local rule semantics
// ---------------------------------------------------------------------------

fn vec_sum(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn unit(d: usize, i: usize) -> Vec<u32> {
    let mut v = vec![0u32; d];
    v[i - 1] = 1;
    v
}

/// Checker-local axiom matching (independent of the enumerator).
pub fn axiomatic_component(mode: Mode, tbl: &SubformulaTable, c: &OmegaSequent) -> bool {
    let d = c.d();
    let zero = c.x.iter().all(|&v| v == 0);
    if mode == Mode::Contraction && !c.omega.is_empty() {
        return false;
    }
    if c.b != 0 {
        match tbl.formula(c.b) {
            Formula::Atom(_) => {
                if c.x == unit(d, c.b) {
                    return true;
                }
                mode == Mode::Weakening && zero && c.omega.contains(&c.b)
            }
            Formula::Const1 => zero,
            _ => false,
        }
    } else {
        match tbl.index_of(&Formula::Const0) {
            Some(i0) => {
                if c.x == unit(d, i0) {
                    return true;
                }
                mode == Mode::Weakening && zero && c.omega.contains(&i0)
            }
            None => false,
        }
    }
}

/// Recomputes the active components of a rule application from its
/// bindings, verifying that the bindings decompose each base principal
/// exactly. This is the checker's own substitution logic, shared with the
/// stage-two replay.
pub fn rule_actives(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    rule: &str,
    principals: &[PrincipalBinding],
) -> Result<Vec<OmegaSequent>, String> {
    if rule == "ew" {
        return Ok(Vec::new());
    }
    if let Some(schema) = cfg.schemas.iter().find(|s| s.name == rule) {
        return structural_actives(schema, principals);
    }
    let [b] = principals else {
        return Err(format!("builtin rule {rule} needs exactly one principal"));
    };
    builtin_actives(tbl, rule, b)
}

fn builtin_actives(
    tbl: &SubformulaTable,
    rule: &str,
    b: &PrincipalBinding,
) -> Result<Vec<OmegaSequent>, String> {
    let base = &b.base;
    let d = base.d();
    let f = b
        .formula
        .ok_or_else(|| format!("rule {rule}: missing principal formula"))?;
    if f == 0 || f > d {
        return Err(format!("rule {rule}: principal formula index out of range"));
    }
    let var = |name: &str| -> Result<&Vec<u32>, String> {
        b.vars
            .get(name)
            .ok_or_else(|| format!("rule {rule}: missing variable {name}"))
    };
    let idx = |fml: &Formula| -> Result<usize, String> {
        tbl.index_of(fml)
            .ok_or_else(|| format!("rule {rule}: formula outside the table"))
    };
    let with = |x: Vec<u32>, stoup: usize| OmegaSequent {
        b: stoup,
        omega: base.omega.clone(),
        x,
    };
    let ant_rule = matches!(rule, "w" | "one_l" | "fus_l" | "and_l1" | "and_l2" | "or_l" | "imp_l");
    // The antecedent remainder after removing the principal occurrence.
    let rem = if ant_rule {
        if b.via_omega {
            if !base.omega.contains(&f) {
                return Err(format!("rule {rule}: ω-principal not in the ω-set"));
            }
            base.x.clone()
        } else {
            if base.x[f - 1] == 0 {
                return Err(format!("rule {rule}: principal formula absent"));
            }
            let mut r = base.x.clone();
            r[f - 1] -= 1;
            r
        }
    } else {
        if b.via_omega {
            return Err(format!("rule {rule}: succedent rules have no ω-variant"));
        }
        if base.b != f {
            return Err(format!("rule {rule}: principal formula is not the stoup"));
        }
        base.x.clone()
    };
    let fml = tbl.formula(f).clone();
    match rule {
        "w" => {
            if b.via_omega {
                return Err("rule w has no ω-variant".to_string());
            }
            if var("G")? != &rem {
                return Err("rule w: G must be the antecedent minus the weakened formula".to_string());
            }
            Ok(vec![with(rem, base.b)])
        }
        "one_l" => {
            if fml != Formula::Const1 {
                return Err("rule one_l: principal must be 1".to_string());
            }
            if var("G")? != &rem {
                return Err("rule one_l: G mismatch".to_string());
            }
            Ok(vec![with(rem, base.b)])
        }
        "fus_l" => {
            let Formula::Fus(l, r) = fml else {
                return Err("rule fus_l: principal must be a fusion".to_string());
            };
            if var("G")? != &rem {
                return Err("rule fus_l: G mismatch".to_string());
            }
            let a = with(rem, base.b)
                .add_formula(idx(&l)?)
                .map_err(|e| e.to_string())?
                .add_formula(idx(&r)?)
                .map_err(|e| e.to_string())?;
            Ok(vec![a])
        }
        "and_l1" | "and_l2" => {
            let Formula::And(l, r) = fml else {
                return Err("rule and_l: principal must be a conjunction".to_string());
            };
            if var("G")? != &rem {
                return Err("rule and_l: G mismatch".to_string());
            }
            let sub = if rule == "and_l1" { l } else { r };
            let a = with(rem, base.b)
                .add_formula(idx(&sub)?)
                .map_err(|e| e.to_string())?;
            Ok(vec![a])
        }
        "or_l" => {
            let Formula::Or(l, r) = fml else {
                return Err("rule or_l: principal must be a disjunction".to_string());
            };
            if var("G")? != &rem {
                return Err("rule or_l: G mismatch".to_string());
            }
            let a1 = with(rem.clone(), base.b)
                .add_formula(idx(&l)?)
                .map_err(|e| e.to_string())?;
            let a2 = with(rem, base.b)
                .add_formula(idx(&r)?)
                .map_err(|e| e.to_string())?;
            Ok(vec![a1, a2])
        }
        "imp_l" => {
            let Formula::Imp(l, r) = fml else {
                return Err("rule imp_l: principal must be an implication".to_string());
            };
            let g = var("G")?.clone();
            let dv = var("D")?.clone();
            if vec_sum(&g, &dv) != rem {
                return Err("rule imp_l: G + D must be the antecedent remainder".to_string());
            }
            let a1 = with(g, idx(&l)?);
            let a2 = with(dv, base.b)
                .add_formula(idx(&r)?)
                .map_err(|e| e.to_string())?;
            Ok(vec![a1, a2])
        }
        "imp_r" => {
            let Formula::Imp(l, r) = fml else {
                return Err("rule imp_r: principal must be an implication".to_string());
            };
            if var("G")? != &base.x {
                return Err("rule imp_r: G mismatch".to_string());
            }
            let a = with(base.x.clone(), idx(&r)?)
                .add_formula(idx(&l)?)
                .map_err(|e| e.to_string())?;
            Ok(vec![a])
        }
        "and_r" => {
            let Formula::And(l, r) = fml else {
                return Err("rule and_r: principal must be a conjunction".to_string());
            };
            if var("G")? != &base.x {
                return Err("rule and_r: G mismatch".to_string());
            }
            Ok(vec![
                with(base.x.clone(), idx(&l)?),
                with(base.x.clone(), idx(&r)?),
            ])
        }
        "or_r1" | "or_r2" => {
            let Formula::Or(l, r) = fml else {
                return Err("rule or_r: principal must be a disjunction".to_string());
            };
            if var("G")? != &base.x {
                return Err("rule or_r: G mismatch".to_string());
            }
            let sub = if rule == "or_r1" { l } else { r };
            Ok(vec![with(base.x.clone(), idx(&sub)?)])
        }
        "fus_r" => {
            let Formula::Fus(l, r) = fml else {
                return Err("rule fus_r: principal must be a fusion".to_string());
            };
            let g = var("G")?.clone();
            let dv = var("D")?.clone();
            if vec_sum(&g, &dv) != base.x {
                return Err("rule fus_r: G + D must split the antecedent".to_string());
            }
            Ok(vec![with(g, idx(&l)?), with(dv, idx(&r)?)])
        }
        "zero_r" => {
            if fml != Formula::Const0 {
                return Err("rule zero_r: principal must be 0".to_string());
            }
            if var("G")? != &base.x {
                return Err("rule zero_r: G mismatch".to_string());
            }
            Ok(vec![with(base.x.clone(), 0)])
        }
        other => Err(format!("unknown rule {other}")),
    }
}

fn structural_actives(
    schema: &RuleSchema,
    principals: &[PrincipalBinding],
) -> Result<Vec<OmegaSequent>, String> {
    if principals.len() != schema.comps.len() {
        return Err(format!(
            "rule {}: expected {} principal bindings, got {}",
            schema.name,
            schema.comps.len(),
            principals.len()
        ));
    }
    let d = principals
        .first()
        .map(|p| p.target.d())
        .ok_or("schema with no components")?;
    let mut env: BTreeMap<&String, &Vec<u32>> = BTreeMap::new();
    for (comp, b) in schema.comps.iter().zip(principals) {
        if b.schema_comp != comp.id {
            return Err(format!(
                "rule {}: principal bindings out of schema order",
                schema.name
            ));
        }
        if !comp.succ && b.target.b != 0 {
            return Err(format!(
                "rule {}: component {} requires an empty stoup",
                schema.name, comp.id
            ));
        }
        let vars: Vec<&String> = comp.vars().into_iter().collect();
        let mut sum = vec![0u32; d];
        for v in &vars {
            let binding = b
                .vars
                .get(*v)
                .ok_or_else(|| format!("rule {}: missing variable {v}", schema.name))?;
            sum = vec_sum(&sum, binding);
            env.insert(v, binding);
        }
        if sum != b.base.x {
            return Err(format!(
                "rule {}: variable bindings do not decompose component {}",
                schema.name, comp.id
            ));
        }
    }
    let mut actives = Vec::new();
    for (k, p) in schema.prems.iter().enumerate() {
        let sources: &[String] = schema
            .premise_omega_sources
            .as_ref()
            .map(|s| s[k].as_slice())
            .unwrap_or(&[]);
        let omega: BTreeSet<usize> = schema
            .comps
            .iter()
            .zip(principals)
            .filter(|(c, _)| sources.contains(&c.id))
            .flat_map(|(_, b)| b.target.omega.iter().copied())
            .collect();
        let mut acc = OmegaSequent {
            b: 0,
            omega,
            x: vec![0u32; d],
        };
        if let Some(id) = &p.for_comp {
            let pos = schema
                .comps
                .iter()
                .position(|c| &c.id == id)
                .ok_or_else(|| format!("rule {}: unknown premise component", schema.name))?;
            acc.b = principals[pos].target.b;
            if let Some(y) = &schema.comps[pos].y {
                acc = acc.add_vector(principals[pos].vars.get(y).unwrap());
            }
        }
        for v in &p.context {
            let binding = env
                .get(v)
                .ok_or_else(|| format!("rule {}: premise variable {v} unbound", schema.name))?;
            acc = acc.add_vector(binding);
        }
        actives.push(acc);
    }
    Ok(actives)
}

/// The expected premise hypersequents of a rule application, per the mode's
/// invertible shape.
pub fn rule_premises(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    conclusion: &Hypersequent,
    app: &RuleApp,
) -> Result<Vec<Hypersequent>, String> {
    // Principal targets must occur in the conclusion (with multiplicity,
    // except for weakening-mode EC-absorption reuse which is capped).
    let mut counts: BTreeMap<&OmegaSequent, usize> = BTreeMap::new();
    for b in &app.principals {
        if !conclusion.contains(&b.target) {
            return Err(format!(
                "rule {}: principal target not in the conclusion",
                app.rule
            ));
        }
        *counts.entry(&b.target).or_default() += 1;
    }
    match cfg.mode {
        Mode::Weakening => {
            // EC-absorption: each conclusion component may be matched by at
            // most acn+1 schema principals.
            for (t, n) in &counts {
                let avail = conclusion.components().iter().filter(|c| c == t).count();
                let cap = avail * (cfg.acn as usize + 1);
                if *n > cap {
                    return Err(format!(
                        "rule {}: component reused {} times, EC-absorption cap is {}",
                        app.rule, n, cap
                    ));
                }
            }
            if app.principals.iter().any(|b| b.base != b.target) {
                return Err(format!(
                    "rule {}: weakening mode forbids principal expansion",
                    app.rule
                ));
            }
        }
        Mode::Contraction => {
            for b in &app.principals {
                if !b.target.is_omega_free() || !b.base.is_omega_free() {
                    return Err(format!(
                        "rule {}: contraction mode requires ω-free components",
                        app.rule
                    ));
                }
                // Absorption caps: each present formula may gain at most
                // fm−1 copies; absent formulas stay absent.
                for i in 0..b.target.d() {
                    let t = b.target.x[i];
                    let e = b.base.x[i];
                    if t == 0 && e != 0 {
                        return Err(format!(
                            "rule {}: expansion introduces an absent formula",
                            app.rule
                        ));
                    }
                    if e < t || e > t + (cfg.fm - 1) {
                        return Err(format!(
                            "rule {}: expansion outside the fm−1 absorption cap",
                            app.rule
                        ));
                    }
                }
            }
        }
    }
    if app.rule == "ew" {
        // External weakening: the premise drops the principal component.
        let [b] = app.principals.as_slice() else {
            return Err("rule ew: exactly one principal required".to_string());
        };
        let mut cs: Vec<OmegaSequent> = conclusion.components().to_vec();
        let pos = cs
            .iter()
            .position(|c| c == &b.target)
            .ok_or("rule ew: principal not in conclusion")?;
        cs.remove(pos);
        return Ok(vec![Hypersequent::new(cs)]);
    }
    let actives = rule_actives(cfg, tbl, &app.rule, &app.principals)?;
    if actives.is_empty() {
        return Err(format!("rule {}: no premises", app.rule));
    }
    let premises = actives
        .into_iter()
        .map(|a| match cfg.mode {
            Mode::Weakening => conclusion.extend_with(&[a]),
            Mode::Contraction => {
                let mut extra: Vec<OmegaSequent> =
                    app.principals.iter().map(|b| b.base.clone()).collect();
                extra.push(a);
                conclusion.extend_with(&extra)
            }
        })
        .collect();
    Ok(premises)
}

/// Independent proof verification: every leaf axiomatic, every internal
/// node a valid instance reproduced from its recorded bindings.
pub fn check_proof(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    proof: &ProofTree,
) -> Result<(), CheckFailure> {
    let mut path = Vec::new();
    check_node(cfg, tbl, proof, &mut path)
}

fn check_node(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    node: &ProofTree,
    path: &mut Vec<usize>,
) -> Result<(), CheckFailure> {
    let fail = |message: String, path: &[usize]| CheckFailure {
        path: path.to_vec(),
        message,
    };
    match &node.step {
        ProofStep::Axiom => {
            if !node.children.is_empty() {
                return Err(fail("axiom node with children".to_string(), path));
            }
            if !node
                .conclusion
                .components()
                .iter()
                .any(|c| axiomatic_component(cfg.mode, tbl, c))
            {
                return Err(fail("leaf is not axiomatic".to_string(), path));
            }
            Ok(())
        }
        ProofStep::Rule(app) => {
            let premises = rule_premises(cfg, tbl, &node.conclusion, app)
                .map_err(|m| fail(m, path))?;
            if premises.len() != node.children.len() {
                return Err(fail(
                    format!(
                        "rule {}: {} premises expected, {} children present",
                        app.rule,
                        premises.len(),
                        node.children.len()
                    ),
                    path,
                ));
            }
            for (k, (premise, child)) in premises.iter().zip(&node.children).enumerate() {
                if child.conclusion != *premise {
                    // An ω-refinement may replace the active component.
                    let justified = match child.meta.as_ref() {
                        Some(NodeMeta {
                            partner: Some(partner),
                            pre: Some(pre),
                            ..
                        }) => {
                            let expected_active =
                                premise_active(premise, &node.conclusion, cfg, app);
                            match (
                                expected_active,
                                crate::hyperseq::omega_fn(partner, pre),
                            ) {
                                (Some(active), Ok(refined)) => {
                                    active == *pre
                                        && child.conclusion
                                            == node.conclusion.extend_with(&[refined])
                                }
                                _ => false,
                            }
                        }
                        _ => false,
                    };
                    if !justified {
                        return Err(fail(
                            format!("rule {}: premise {} mismatch", app.rule, k),
                            path,
                        ));
                    }
                }
                path.push(k);
                check_node(cfg, tbl, child, path)?;
                path.pop();
            }
            Ok(())
        }
    }
}

/// Recovers the active component of a premise (premise minus conclusion and
/// principal copies). Used to validate refined premises.
fn premise_active(
    premise: &Hypersequent,
    conclusion: &Hypersequent,
    cfg: &CalculusConfig,
    app: &RuleApp,
) -> Option<OmegaSequent> {
    let mut remaining: Vec<OmegaSequent> = premise.components().to_vec();
    let mut remove = |s: &OmegaSequent| -> bool {
        if let Some(pos) = remaining.iter().position(|c| c == s) {
            remaining.remove(pos);
            true
        } else {
            false
        }
    };
    for c in conclusion.components() {
        if !remove(c) {
            return None;
        }
    }
    if cfg.mode == Mode::Contraction {
        for b in &app.principals {
            if !remove(&b.base) {
                return None;
            }
        }
    }
    if remaining.len() == 1 {
        remaining.pop()
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Proof documents (JSON)
// ---------------------------------------------------------------------------

/// Self-contained calculus description embedded in proof files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalculusHeader {
    pub mode: String,
    pub fm: u32,
    pub acn: u32,
    pub table: Vec<String>,
    pub schemas: Vec<RuleSchema>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProofDocument {
    pub calculus: CalculusHeader,
    pub root: ProofNodeJson,
}

/// Serialized node shape with deterministic field order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProofNodeJson {
    pub conclusion: String,
    pub rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bindings: Option<BindingsJson>,
    pub children: Vec<ProofNodeJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<NodeMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BindingsJson {
    pub principals: Vec<PrincipalBinding>,
}

/// Renders a proof as a self-contained JSON document.
pub fn write_proof_json(cfg: &CalculusConfig, tbl: &SubformulaTable, proof: &ProofTree) -> String {
    let doc = ProofDocument {
        calculus: CalculusHeader {
            mode: match cfg.mode {
                Mode::Contraction => "c".to_string(),
                Mode::Weakening => "w".to_string(),
            },
            fm: cfg.fm,
            acn: cfg.acn,
            table: tbl.entries().iter().map(|f| f.to_string()).collect(),
            schemas: cfg.schemas.clone(),
        },
        root: node_to_json(tbl, proof),
    };
    serde_json::to_string_pretty(&doc).expect("proof serialization")
}

fn node_to_json(tbl: &SubformulaTable, node: &ProofTree) -> ProofNodeJson {
    let (rule, bindings) = match &node.step {
        ProofStep::Axiom => ("axiom".to_string(), None),
        ProofStep::Rule(app) => (
            app.rule.clone(),
            Some(BindingsJson {
                principals: app.principals.clone(),
            }),
        ),
    };
    ProofNodeJson {
        conclusion: node.conclusion.display(tbl),
        rule,
        bindings,
        children: node.children.iter().map(|c| node_to_json(tbl, c)).collect(),
        meta: node.meta.clone(),
    }
}

/// Parses a proof document back into a checkable proof.
pub fn read_proof_json(
    text: &str,
) -> Result<(CalculusConfig, SubformulaTable, ProofTree), String> {
    let doc: ProofDocument = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let mode = match doc.calculus.mode.as_str() {
        "c" => Mode::Contraction,
        "w" => Mode::Weakening,
        other => return Err(format!("unknown mode {other:?}")),
    };
    let mut entries = Vec::new();
    for t in &doc.calculus.table {
        entries.push(crate::syntax::parse(t).map_err(|e| e.to_string())?);
    }
    let tbl = SubformulaTable::for_all(&entries);
    if tbl.d() != entries.len() {
        return Err("proof table is not subformula-closed or has duplicates".to_string());
    }
    for (i, f) in entries.iter().enumerate() {
        if tbl.index_of(f) != Some(i + 1) {
            return Err("proof table order is not the canonical postorder".to_string());
        }
    }
    let cfg = CalculusConfig {
        mode,
        schemas: doc.calculus.schemas.clone(),
        fm: doc.calculus.fm,
        acn: doc.calculus.acn,
    };
    let root = node_from_json(&tbl, &doc.root)?;
    Ok((cfg, tbl, root))
}

fn node_from_json(tbl: &SubformulaTable, node: &ProofNodeJson) -> Result<ProofTree, String> {
    let comps = crate::hyperseq::parse_hypersequent(&node.conclusion)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|rc| {
            for f in rc.formulas() {
                if tbl.index_of(f).is_none() {
                    return Err(format!("formula {f} outside the proof table"));
                }
            }
            Ok(rc.resolve(tbl))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let step = if node.rule == "axiom" {
        ProofStep::Axiom
    } else {
        ProofStep::Rule(RuleApp {
            rule: node.rule.clone(),
            principals: node
                .bindings
                .as_ref()
                .map(|b| b.principals.clone())
                .unwrap_or_default(),
        })
    };
    Ok(ProofTree {
        conclusion: Hypersequent::new(comps),
        step,
        children: node
            .children
            .iter()
            .map(|c| node_from_json(tbl, c))
            .collect::<Result<Vec<_>, _>>()?,
        meta: node.meta.clone(),
    })
}

/// Stage-two iteration arithmetic: antecedent vectors
/// `x_0 = x`, `x_{i+1} = x + (i+1)(y−x)` for `i+1 ≤ k1`, returned as the
/// `k1+1` vectors `x_0..x_{k1}` (exact when the routing variable occurs once
/// in the productive premise context).
pub fn iteration_vectors(x: &[u32], y: &[u32], k1: u32) -> Vec<Vec<u32>> {
    let delta: Vec<u32> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    (0..=k1)
        .map(|i| {
            x.iter()
                .zip(&delta)
                .map(|(a, d)| a + i * d)
                .collect::<Vec<u32>>()
        })
        .collect()
}

mod reconstruct;
pub use reconstruct::{
    nesting, stage_one, stage_two, stage_two_traced, AnnKind, AnnotatedNode, AnnotatedProofTree,
    LiftedApp, LiftedPremiseInfo, PseudoMeta, PseudoPremise,
};
