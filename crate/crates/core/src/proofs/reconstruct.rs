//! Two-stage reconstruction of ω-eager proofs into ω-free checkable proofs.
//!
//! Stage one assigns to every node a multiplicity `K` and materializes every
//! ω-set at that multiplicity, leaf-to-root: axiomatic leaves get `K = 1`
//! and a weakening chain down to an exact initial sequent; regular rule
//! nodes get `K0 = fm·maxK + 1` with their instances lifted to finite
//! bindings (the ω-mass distributed over the multiset-variables); rule nodes
//! whose group carries an ω-refinement become *pseudo-ω* nodes retaining the
//! original instance. Mismatched multiplicities between a premise label and
//! a child conclusion are closed by invertible weakening/external-weakening
//! bridges.
//!
//! Stage two eliminates pseudo-ω nodes, lowermost first: the derivation
//! segment from the ω-partner's creation up to the pseudo-ω instance is
//! replayed `K1` times (`K1` = the productive premise's K), the growing
//! excess threaded through the principal bindings via the recorded routing
//! variables; side premises reuse clones of their original subtrees behind
//! bridges. The per-branch pseudo-ω counts form a multiset that strictly
//! decreases, so the loop terminates.

use std::collections::BTreeMap;

use crate::calculus::{CalculusConfig, PrincipalBinding, RuleInstance};
use crate::hyperseq::{Hypersequent, OmegaSequent};
use crate::prover_w::{EagerKind, EagerNode, Refinement};
use crate::syntax::{Formula, SubformulaTable};

use super::{
    axiomatic_component, rule_actives, ProofStep, ProofTree, ReconstructionError, RuleApp,
};

/// A K-annotated, ω-free intermediate proof. Components carry indices (the
/// search-tree component indices plus fresh bridge indices); the indices are
/// bookkeeping only and are dropped on conversion to a [`ProofTree`].
#[derive(Debug, Clone)]
pub struct AnnotatedProofTree {
    pub root: AnnotatedNode,
}

#[derive(Debug, Clone)]
pub struct AnnotatedNode {
    /// Indexed ω-free components of the conclusion.
    pub comps: Vec<(usize, OmegaSequent)>,
    /// The multiplicity assigned to this node's ω-sets.
    pub k: u32,
    pub kind: AnnKind,
    pub children: Vec<AnnotatedNode>,
}

#[derive(Debug, Clone)]
pub enum AnnKind {
    Axiom,
    Rule(LiftedApp),
    /// Invertible weakening: adds a copy of component `comp` with one
    /// occurrence of `formula` removed, indexed `new_comp`.
    Wk {
        comp: usize,
        formula: usize,
        new_comp: usize,
    },
    /// External weakening (read upward: the premise drops `comp`).
    Ew { comp: usize },
    /// A pseudo-ω instance: the original ω-level instance, kept for stage
    /// two.
    PseudoOmega(PseudoMeta),
}

/// A finite (lifted) rule application with the per-premise search metadata.
#[derive(Debug, Clone)]
pub struct LiftedApp {
    pub app: RuleApp,
    pub premises: Vec<LiftedPremiseInfo>,
    /// Component index of each principal, aligned with `app.principals`.
    pub principal_indices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LiftedPremiseInfo {
    pub new_index: usize,
    pub key_ancestor: usize,
    pub routing_var: Option<String>,
}

#[derive(Debug, Clone)]
pub struct PseudoMeta {
    /// The original ω-level instance (its targets are ω-free at a lowermost
    /// pseudo-ω node, which is the only place stage two reads it).
    pub instance: RuleInstance,
    pub principal_indices: Vec<usize>,
    pub premises: Vec<PseudoPremise>,
}

#[derive(Debug, Clone)]
pub struct PseudoPremise {
    pub new_index: usize,
    pub key_ancestor: usize,
    pub routing_var: Option<String>,
    pub refinement: Option<Refinement>,
    /// The K assigned to the premise's subtree.
    pub k: u32,
}

// ---------------------------------------------------------------------------
// Stage one
// ---------------------------------------------------------------------------

/// Stage one: K-annotation and ω-materialization of an ω-eager proof.
pub fn stage_one(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    eager: &EagerNode,
) -> Result<AnnotatedProofTree, ReconstructionError> {
    let mut fresh = max_rin_index(eager) + 1;
    let root = annotate(cfg, tbl, eager, &mut fresh)?;
    Ok(AnnotatedProofTree { root })
}

fn max_rin_index(node: &EagerNode) -> usize {
    let mut m = node.rin.max_index();
    if let EagerKind::Rule { children, .. } = &node.kind {
        for c in children {
            m = m.max(max_rin_index(&c.node));
        }
    }
    m
}

fn assigned(node: &EagerNode, k: u32) -> Vec<(usize, OmegaSequent)> {
    node.rin
        .components
        .iter()
        .map(|c| (c.index, c.seq.assign_k(k)))
        .collect()
}

fn annotate(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    node: &EagerNode,
    fresh: &mut usize,
) -> Result<AnnotatedNode, ReconstructionError> {
    match &node.kind {
        EagerKind::Axiom => annotate_axiom(cfg, tbl, node, fresh),
        EagerKind::Rule { instance, children } => {
            let anns: Vec<AnnotatedNode> = children
                .iter()
                .map(|c| annotate(cfg, tbl, &c.node, fresh))
                .collect::<Result<_, _>>()?;
            let maxk = anns.iter().map(|a| a.k).max().unwrap_or(1);
            let pseudo = children.iter().any(|c| c.refinement.is_some());
            if pseudo {
                annotate_pseudo(node, instance, children, anns, maxk, fresh)
            } else {
                annotate_regular(cfg, tbl, node, instance, children, anns, maxk, fresh)
            }
        }
    }
}

/// The exact initial sequent matched by an ω-axiomatic component.
fn finite_axiom_target(
    tbl: &SubformulaTable,
    c: &OmegaSequent,
) -> Result<OmegaSequent, ReconstructionError> {
    let d = c.d();
    let unit = |i: usize| {
        let mut v = vec![0u32; d];
        v[i - 1] = 1;
        v
    };
    if c.b != 0 {
        match tbl.formula(c.b) {
            Formula::Atom(_) => Ok(OmegaSequent::plain(unit(c.b), c.b)),
            Formula::Const1 => Ok(OmegaSequent::plain(vec![0u32; d], c.b)),
            _ => Err(ReconstructionError::MissingMetadata(
                "axiomatic component with a non-initial stoup".to_string(),
            )),
        }
    } else {
        let i0 = tbl.index_of(&Formula::Const0).ok_or_else(|| {
            ReconstructionError::MissingMetadata("0 outside the subformula table".to_string())
        })?;
        Ok(OmegaSequent::plain(unit(i0), 0))
    }
}

fn annotate_axiom(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    node: &EagerNode,
    fresh: &mut usize,
) -> Result<AnnotatedNode, ReconstructionError> {
    let ax = node
        .rin
        .components
        .iter()
        .find(|c| axiomatic_component(cfg.mode, tbl, &c.seq))
        .ok_or_else(|| {
            ReconstructionError::MissingMetadata("axiom leaf without an initial component".to_string())
        })?;
    let comps = assigned(node, 1);
    let target = finite_axiom_target(tbl, &ax.seq)?;
    let v = ax.seq.assign_k(1);
    if v == target {
        return Ok(AnnotatedNode {
            comps,
            k: 1,
            kind: AnnKind::Axiom,
            children: Vec::new(),
        });
    }
    // Weaken a copy of the ω-materialized component down to the exact
    // initial sequent; the surplus components are harmless at an axiom.
    let mut states = vec![comps];
    let mut steps: Vec<(usize, usize, usize)> = Vec::new(); // (comp, formula, new)
    let mut cur_idx = ax.index;
    let mut cur = v;
    while cur != target {
        let i = (0..cur.d())
            .find(|&i| cur.x[i] > target.x[i])
            .ok_or_else(|| {
                ReconstructionError::MissingMetadata(
                    "ω-axiomatic component below its initial sequent".to_string(),
                )
            })?;
        let mut next = cur.clone();
        next.x[i] -= 1;
        let new_idx = *fresh;
        *fresh += 1;
        let mut state = states.last().unwrap().clone();
        state.push((new_idx, next.clone()));
        steps.push((cur_idx, i + 1, new_idx));
        states.push(state);
        cur_idx = new_idx;
        cur = next;
    }
    let mut top = AnnotatedNode {
        comps: states.pop().unwrap(),
        k: 1,
        kind: AnnKind::Axiom,
        children: Vec::new(),
    };
    for ((comp, formula, new_comp), state) in steps.into_iter().zip(states).rev() {
        top = AnnotatedNode {
            comps: state,
            k: 1,
            kind: AnnKind::Wk {
                comp,
                formula,
                new_comp,
            },
            children: vec![top],
        };
    }
    Ok(top)
}

#[allow(clippy::too_many_arguments)]
fn annotate_regular(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    node: &EagerNode,
    instance: &RuleInstance,
    children: &[crate::prover_w::EagerChild],
    anns: Vec<AnnotatedNode>,
    maxk: u32,
    fresh: &mut usize,
) -> Result<AnnotatedNode, ReconstructionError> {
    // K-inflation is needed only when ω-mass must be distributed over a
    // principal's multiset-variables; ω-free principals lift verbatim.
    let k0 = if instance.principals.iter().any(|pb| !pb.target.omega.is_empty()) {
        cfg.fm * maxk + 1
    } else {
        maxk
    };
    let comps = assigned(node, k0);
    let lifted: Vec<PrincipalBinding> = instance
        .principals
        .iter()
        .map(|pb| lift_binding(cfg, &instance.rule, pb, k0, maxk))
        .collect::<Result<_, _>>()?;
    let principal_indices = principal_indices(node, instance)?;
    let actives = rule_actives(cfg, tbl, &instance.rule, &lifted)
        .map_err(ReconstructionError::SegmentReconstructionFailed)?;
    if actives.len() != children.len() {
        return Err(ReconstructionError::MissingMetadata(
            "premise/child count mismatch".to_string(),
        ));
    }
    let mut infos = Vec::new();
    let mut kids = Vec::new();
    for ((c, ann), active) in children.iter().zip(anns).zip(&actives) {
        if !active.is_omega_free() {
            return Err(ReconstructionError::SegmentReconstructionFailed(
                "lifted active component is not ω-free".to_string(),
            ));
        }
        let mut label = comps.clone();
        label.push((c.new_index, active.clone()));
        kids.push(bridge(label, ann, fresh)?);
        infos.push(LiftedPremiseInfo {
            new_index: c.new_index,
            key_ancestor: c.key_ancestor,
            routing_var: c.routing_var.clone(),
        });
    }
    Ok(AnnotatedNode {
        comps,
        k: k0,
        kind: AnnKind::Rule(LiftedApp {
            app: RuleApp {
                rule: instance.rule.clone(),
                principals: lifted,
            },
            premises: infos,
            principal_indices,
        }),
        children: kids,
    })
}

fn annotate_pseudo(
    node: &EagerNode,
    instance: &RuleInstance,
    children: &[crate::prover_w::EagerChild],
    anns: Vec<AnnotatedNode>,
    maxk: u32,
    fresh: &mut usize,
) -> Result<AnnotatedNode, ReconstructionError> {
    let k0 = maxk;
    let comps = assigned(node, k0);
    let principal_indices = principal_indices(node, instance)?;
    let mut premises = Vec::new();
    let mut kids = Vec::new();
    for (c, ann) in children.iter().zip(anns) {
        let value = c
            .node
            .rin
            .get(c.new_index)
            .ok_or_else(|| {
                ReconstructionError::MissingMetadata("child lacks its new component".to_string())
            })?
            .seq
            .clone();
        let kc = ann.k;
        let mut label = comps.clone();
        label.push((c.new_index, value.assign_k(kc)));
        kids.push(bridge(label, ann, fresh)?);
        premises.push(PseudoPremise {
            new_index: c.new_index,
            key_ancestor: c.key_ancestor,
            routing_var: c.routing_var.clone(),
            refinement: c.refinement.clone(),
            k: kc,
        });
    }
    Ok(AnnotatedNode {
        comps,
        k: k0,
        kind: AnnKind::PseudoOmega(PseudoMeta {
            instance: instance.clone(),
            principal_indices,
            premises,
        }),
        children: kids,
    })
}

fn principal_indices(
    node: &EagerNode,
    instance: &RuleInstance,
) -> Result<Vec<usize>, ReconstructionError> {
    instance
        .principals
        .iter()
        .map(|pb| {
            node.rin
                .components
                .iter()
                .find(|c| c.seq == pb.target)
                .map(|c| c.index)
                .ok_or_else(|| {
                    ReconstructionError::MissingMetadata(
                        "principal target not indexed in the search state".to_string(),
                    )
                })
        })
        .collect()
}

/// Lifts a (possibly ω-variant) binding to a finite one at multiplicity
/// `k0`: targets are K-assigned, ω-mass is distributed over the binding's
/// multiset-variables so that every premise-feeding variable carries at
/// least `maxk` on every ω-coordinate.
fn lift_binding(
    cfg: &CalculusConfig,
    rule: &str,
    pb: &PrincipalBinding,
    k0: u32,
    maxk: u32,
) -> Result<PrincipalBinding, ReconstructionError> {
    let target = pb.target.assign_k(k0);
    let mut out = pb.clone();
    let omega = pb.target.omega.clone();
    out.target = target.clone();
    out.base = target.clone();
    out.via_omega = false;
    if omega.is_empty() {
        return Ok(out);
    }
    let structural = cfg.schemas.iter().any(|s| s.name == rule);
    let ant_rule = matches!(
        rule,
        "w" | "one_l" | "fus_l" | "and_l1" | "and_l2" | "or_l" | "imp_l"
    );
    // Remainder to distribute: the K-assigned antecedent, minus the
    // principal occurrence consumed by finite antecedent rules.
    let mut rem = target.x.clone();
    if !structural && ant_rule {
        let f = pb.formula.ok_or_else(|| {
            ReconstructionError::MissingMetadata("builtin binding without a formula".to_string())
        })?;
        if rem[f - 1] == 0 {
            return Err(ReconstructionError::SegmentReconstructionFailed(
                "lifted principal occurrence unavailable".to_string(),
            ));
        }
        rem[f - 1] -= 1;
    }
    let var_names: Vec<String> = out.vars.keys().cloned().collect();
    if var_names.is_empty() {
        return Err(ReconstructionError::SegmentReconstructionFailed(
            "ω-carrying principal without multiset-variables".to_string(),
        ));
    }
    for &c in &omega {
        let a = rem[c - 1];
        let n = var_names.len() as u32;
        if a < n * maxk {
            return Err(ReconstructionError::SegmentReconstructionFailed(
                "insufficient ω-mass for variable distribution".to_string(),
            ));
        }
        for (j, v) in var_names.iter().enumerate() {
            let share = if j == 0 { a - (n - 1) * maxk } else { maxk };
            out.vars.get_mut(v).unwrap()[c - 1] = share;
        }
    }
    // Non-ω coordinates keep their recorded splits; for single-variable
    // builtins the recorded split is the full remainder already.
    if !structural && var_names.len() == 1 {
        let sole = out.vars.get_mut(&var_names[0]).unwrap();
        *sole = if ant_rule { rem } else { target.x.clone() };
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Bridges
// ---------------------------------------------------------------------------

/// Connects a premise label `p` to a child whose conclusion is dominated by
/// it: weakening chains reduce dominating components to the child's values
/// and external weakenings drop the surplus.
fn bridge(
    p: Vec<(usize, OmegaSequent)>,
    child: AnnotatedNode,
    fresh: &mut usize,
) -> Result<AnnotatedNode, ReconstructionError> {
    let mut pv: Vec<OmegaSequent> = p.iter().map(|(_, s)| s.clone()).collect();
    let mut rv: Vec<OmegaSequent> = child.comps.iter().map(|(_, s)| s.clone()).collect();
    pv.sort();
    rv.sort();
    if pv == rv {
        return Ok(child);
    }
    let err = |m: &str| ReconstructionError::SegmentReconstructionFailed(m.to_string());
    // Match each child component to a distinct dominating label component:
    // exact matches first, then (largest child first) the least dominating
    // remainder.
    let mut used = vec![false; p.len()];
    let mut pairs: Vec<(usize, OmegaSequent)> = Vec::new(); // (pos in p, child value)
    let mut leftovers: Vec<(usize, OmegaSequent)> = child.comps.clone();
    leftovers.retain(|(_, r)| {
        if let Some(pos) = p
            .iter()
            .enumerate()
            .position(|(i, (_, s))| !used[i] && s == r)
        {
            used[pos] = true;
            false
        } else {
            true
        }
    });
    leftovers.sort_by(|a, b| b.1.cmp(&a.1));
    for (_, r) in &leftovers {
        if !r.is_omega_free() {
            return Err(err("bridge over an ω-carrying component"));
        }
        let mut best: Option<usize> = None;
        for (i, (_, s)) in p.iter().enumerate() {
            if used[i]
                || s.b != r.b
                || !s.is_omega_free()
                || !r.x.iter().zip(&s.x).all(|(a, b)| a <= b)
            {
                continue;
            }
            if best.map(|j| s < &p[j].1).unwrap_or(true) {
                best = Some(i);
            }
        }
        let i = best.ok_or_else(|| err("no dominating component for a premise gap"))?;
        used[i] = true;
        pairs.push((i, r.clone()));
    }
    // Simulate: weakening chains for strict pairs, then surplus deletions.
    let mut state = p.clone();
    let mut states = vec![state.clone()];
    enum Step {
        Wk(usize, usize, usize),
        Ew(usize),
    }
    let mut steps = Vec::new();
    let mut delete: Vec<usize> = p
        .iter()
        .enumerate()
        .filter(|(i, _)| !used[*i])
        .map(|(_, (idx, _))| *idx)
        .collect();
    for (i, r) in &pairs {
        let (orig_idx, orig_val) = &p[*i];
        delete.push(*orig_idx);
        let mut cur_idx = *orig_idx;
        let mut cur = orig_val.clone();
        while cur != *r {
            let coord = (0..cur.d())
                .find(|&c| cur.x[c] > r.x[c])
                .ok_or_else(|| err("weakening chain stuck"))?;
            let mut next = cur.clone();
            next.x[coord] -= 1;
            let new_idx = *fresh;
            *fresh += 1;
            steps.push(Step::Wk(cur_idx, coord + 1, new_idx));
            state.push((new_idx, next.clone()));
            states.push(state.clone());
            if next != *r {
                delete.push(new_idx);
            }
            cur_idx = new_idx;
            cur = next;
        }
    }
    for idx in delete {
        steps.push(Step::Ew(idx));
        let pos = state
            .iter()
            .position(|(i, _)| *i == idx)
            .ok_or_else(|| err("deleted component missing"))?;
        state.remove(pos);
        states.push(state.clone());
    }
    let mut fv: Vec<OmegaSequent> = state.iter().map(|(_, s)| s.clone()).collect();
    fv.sort();
    if fv != rv {
        return Err(err("bridge does not reach the child conclusion"));
    }
    states.pop();
    let mut top = child;
    for (step, st) in steps.into_iter().zip(states).rev() {
        let k = top.k;
        top = AnnotatedNode {
            comps: st,
            k,
            kind: match step {
                Step::Wk(comp, formula, new_comp) => AnnKind::Wk {
                    comp,
                    formula,
                    new_comp,
                },
                Step::Ew(comp) => AnnKind::Ew { comp },
            },
            children: vec![top],
        };
    }
    Ok(top)
}

// ---------------------------------------------------------------------------
// Stage two
// ---------------------------------------------------------------------------

/// The nesting measure: the multiset (sorted descending) of per-branch
/// pseudo-ω counts. Strictly decreases in the multiset order across
/// eliminations.
pub fn nesting(ann: &AnnotatedProofTree) -> Vec<u32> {
    fn walk(node: &AnnotatedNode, depth_count: u32, out: &mut Vec<u32>) {
        let here = depth_count + matches!(node.kind, AnnKind::PseudoOmega(_)) as u32;
        if node.children.is_empty() {
            out.push(here);
        } else {
            for c in &node.children {
                walk(c, here, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(&ann.root, 0, &mut out);
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

/// Stage two: eliminates every pseudo-ω instance and converts the result to
/// a checkable ω-free proof.
pub fn stage_two(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    ann: &AnnotatedProofTree,
) -> Result<ProofTree, ReconstructionError> {
    stage_two_traced(cfg, tbl, ann).map(|(p, _)| p)
}

/// As [`stage_two`], additionally returning the nesting measure after each
/// elimination round (the last entry is all-zero on success).
pub fn stage_two_traced(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    ann: &AnnotatedProofTree,
) -> Result<(ProofTree, Vec<Vec<u32>>), ReconstructionError> {
    let mut root = ann.root.clone();
    let mut rounds = 0u32;
    let mut trace = Vec::new();
    while let Some(path) = find_pseudo_path(&root) {
        rounds += 1;
        if rounds > 10_000 {
            return Err(ReconstructionError::SegmentReconstructionFailed(
                "elimination did not terminate within 10000 rounds".to_string(),
            ));
        }
        root = eliminate(cfg, tbl, &root, &path)?;
        trace.push(nesting(&AnnotatedProofTree { root: root.clone() }));
    }
    Ok((to_proof_tree(&root)?, trace))
}

fn find_pseudo_path(node: &AnnotatedNode) -> Option<Vec<usize>> {
    if matches!(node.kind, AnnKind::PseudoOmega(_)) {
        return Some(Vec::new());
    }
    for (i, c) in node.children.iter().enumerate() {
        if let Some(mut p) = find_pseudo_path(c) {
            p.insert(0, i);
            return Some(p);
        }
    }
    None
}

fn max_ann_index(node: &AnnotatedNode) -> usize {
    let mut m = node.comps.iter().map(|(i, _)| *i).max().unwrap_or(0);
    for c in &node.children {
        m = m.max(max_ann_index(c));
    }
    m
}

fn replace_subtree(
    node: &AnnotatedNode,
    path: &[usize],
    replacement: AnnotatedNode,
) -> AnnotatedNode {
    match path.first() {
        None => replacement,
        Some(&i) => {
            let mut out = node.clone();
            out.children[i] = replace_subtree(&node.children[i], &path[1..], replacement);
            out
        }
    }
}

struct Elim<'a> {
    cfg: &'a CalculusConfig,
    tbl: &'a SubformulaTable,
    pseudo: &'a AnnotatedNode,
    meta: &'a PseudoMeta,
    j_prod: usize,
    p_idx: usize,
    k1: u32,
    fresh: usize,
}

fn eliminate(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    root: &AnnotatedNode,
    path: &[usize],
) -> Result<AnnotatedNode, ReconstructionError> {
    let err = |m: &str| ReconstructionError::SegmentReconstructionFailed(m.to_string());
    let mut nodes: Vec<&AnnotatedNode> = vec![root];
    for &i in path {
        nodes.push(&nodes.last().unwrap().children[i]);
    }
    let pseudo = *nodes.last().unwrap();
    let AnnKind::PseudoOmega(meta) = &pseudo.kind else {
        return Err(err("path does not end at a pseudo-ω node"));
    };
    let prod: Vec<usize> = meta
        .premises
        .iter()
        .enumerate()
        .filter(|(_, p)| p.refinement.is_some())
        .map(|(j, _)| j)
        .collect();
    let [j_prod] = prod.as_slice() else {
        return Err(err("multiple productive premises in one pseudo-ω group"));
    };
    let j_prod = *j_prod;
    let r = meta.premises[j_prod].refinement.as_ref().unwrap();
    if !r.pre.is_omega_free() || !r.partner_value.is_omega_free() {
        return Err(ReconstructionError::RefinementConditionViolated(
            "lowermost pseudo-ω with ω-carrying partner or pre-component".to_string(),
        ));
    }
    if pseudo.comps.iter().any(|(_, s)| !s.is_omega_free()) {
        return Err(ReconstructionError::RefinementConditionViolated(
            "pseudo-ω conclusion is not ω-free".to_string(),
        ));
    }
    let p_idx = r.partner;
    match pseudo.comps.iter().find(|(i, _)| *i == p_idx) {
        Some((_, v)) if *v == r.partner_value => {}
        _ => {
            return Err(ReconstructionError::RefinementConditionViolated(
                "partner value drifted from the recorded component".to_string(),
            ))
        }
    }
    // Components persist upward in weakening mode (every premise contains
    // the conclusion), so the instance can be unrolled locally: all
    // principal values are present in the pseudo-ω node's own conclusion.
    let k1 = meta.premises[j_prod].k.max(1);
    let mut elim = Elim {
        cfg,
        tbl,
        pseudo,
        meta,
        j_prod,
        p_idx,
        k1,
        fresh: max_ann_index(root) + 1,
    };
    let s0 = pseudo.comps.clone();
    let cur = r.partner_value.clone();
    let replacement = elim.unroll(1, s0, cur)?;
    Ok(replace_subtree(root, path, replacement))
}

impl Elim<'_> {
    fn next_fresh(&mut self) -> usize {
        let f = self.fresh;
        self.fresh += 1;
        f
    }

    /// The multiset-variables feeding premise `j`'s active component under a
    /// structural schema (empty for builtins, which have one principal).
    fn feeding_vars(&self, rule: &str, j: usize) -> std::collections::BTreeSet<String> {
        let Some(schema) = self.cfg.schemas.iter().find(|s| s.name == rule) else {
            return Default::default();
        };
        let p = &schema.prems[j];
        let mut out: std::collections::BTreeSet<String> = p.context.iter().cloned().collect();
        if let Some(id) = &p.for_comp {
            if let Some(c) = schema.comps.iter().find(|c| &c.id == id) {
                out.extend(c.y.iter().cloned());
            }
        }
        out
    }

    /// Re-derives the pseudo-ω instance's principal bindings with the pumped
    /// component at its current value `cur`. Exactly one pumped principal
    /// threads its excess over the recorded target into a variable feeding
    /// the productive premise's active (preferring the recorded routing
    /// variable), so the growth accumulates across iterations; every other
    /// pumped principal absorbs its excess in a variable outside `feeding`
    /// when one exists, so that shared principal targets (EC-absorption) do
    /// not double the excess into the productive premise and blow up the
    /// unrolling.
    fn rebind(
        &self,
        cur: &OmegaSequent,
        feeding: &std::collections::BTreeSet<String>,
    ) -> Result<Vec<PrincipalBinding>, ReconstructionError> {
        let err = |m: &str| ReconstructionError::SegmentReconstructionFailed(m.to_string());
        let prod = &self.meta.premises[self.j_prod];
        let path_routing = prod.routing_var.as_ref();
        let mut routed = false;
        let mut out_bindings = Vec::with_capacity(self.meta.instance.principals.len());
        for (pb, &idx) in self
            .meta
            .instance
            .principals
            .iter()
            .zip(&self.meta.principal_indices)
        {
            if idx != self.p_idx {
                // Non-pumped principals keep their recorded values, which
                // are present verbatim in the pseudo-ω conclusion.
                out_bindings.push(pb.clone());
                continue;
            }
            if cur.b != pb.target.b || !cur.is_omega_free() || !pb.target.is_omega_free() {
                return Err(err("pumped principal is not a finite enlargement"));
            }
            let delta: Vec<u32> = cur
                .x
                .iter()
                .zip(&pb.target.x)
                .map(|(a, b)| a.checked_sub(*b))
                .collect::<Option<_>>()
                .ok_or_else(|| err("pumped principal shrank below its recording"))?;
            let mut out = pb.clone();
            out.target = cur.clone();
            out.base = cur.clone();
            if delta.iter().any(|&v| v > 0) {
                let var = if !routed {
                    routed = true;
                    match path_routing {
                        Some(v) if out.vars.contains_key(v) => v.clone(),
                        _ => out
                            .vars
                            .keys()
                            .find(|v| feeding.contains(*v))
                            .or_else(|| out.vars.keys().next())
                            .cloned()
                            .ok_or_else(|| err("excess on a variable-free principal"))?,
                    }
                } else {
                    out.vars
                        .keys()
                        .find(|v| !feeding.contains(*v))
                        .or_else(|| out.vars.keys().next())
                        .cloned()
                        .ok_or_else(|| err("excess on a variable-free principal"))?
                };
                let slot = out.vars.get_mut(&var).unwrap();
                for (a, d) in slot.iter_mut().zip(&delta) {
                    *a += d;
                }
            }
            out_bindings.push(out);
        }
        Ok(out_bindings)
    }

    /// Applies the pseudo-ω instance at iteration `i` with the pumped
    /// component at value `cur`: below K1 the productive premise continues
    /// the unrolling with the grown value; at K1 it is bridged onto a clone
    /// of the original productive subtree.
    fn unroll(
        &mut self,
        i: u32,
        s: Vec<(usize, OmegaSequent)>,
        cur: OmegaSequent,
    ) -> Result<AnnotatedNode, ReconstructionError> {
        let err = |m: &str| ReconstructionError::SegmentReconstructionFailed(m.to_string());
        let meta = self.meta;
        let feeding = self.feeding_vars(&meta.instance.rule, self.j_prod);
        let bindings = self.rebind(&cur, &feeding)?;
        let actives = rule_actives(self.cfg, self.tbl, &meta.instance.rule, &bindings)
            .map_err(ReconstructionError::SegmentReconstructionFailed)?;
        if actives.len() != self.pseudo.children.len() {
            return Err(err("pseudo-ω premise count drifted"));
        }
        let mut kids = Vec::with_capacity(actives.len());
        for (j, active) in actives.iter().enumerate() {
            if !active.is_omega_free() {
                return Err(err("replayed active component is not ω-free"));
            }
            if j == self.j_prod {
                if i < self.k1 {
                    let f = self.next_fresh();
                    let mut s2 = s.clone();
                    s2.push((f, active.clone()));
                    kids.push(self.unroll(i + 1, s2, active.clone())?);
                } else {
                    // Final iteration: the accumulated value must dominate
                    // the refined component at multiplicity K1, so a bridge
                    // reaches the original productive subtree.
                    let refined = meta.premises[self.j_prod]
                        .refinement
                        .as_ref()
                        .unwrap();
                    let target = crate::hyperseq::omega_fn(&refined.partner_value, &refined.pre)
                        .map_err(|e| err(&e.to_string()))?
                        .assign_k(self.k1);
                    if active.b != target.b
                        || !target.x.iter().zip(&active.x).all(|(a, b)| a <= b)
                    {
                        return Err(ReconstructionError::RefinementConditionViolated(
                            "unrolled value does not dominate the refined component".to_string(),
                        ));
                    }
                    let f = self.next_fresh();
                    let mut label = s.clone();
                    label.push((f, active.clone()));
                    let mut fresh = self.fresh;
                    let top = bridge(label, self.pseudo.children[j].clone(), &mut fresh)?;
                    self.fresh = fresh;
                    kids.push(top);
                }
            } else {
                let f = self.next_fresh();
                let mut label = s.clone();
                label.push((f, active.clone()));
                let mut fresh = self.fresh;
                let side = bridge(label, self.pseudo.children[j].clone(), &mut fresh)?;
                self.fresh = fresh;
                kids.push(side);
            }
        }
        Ok(AnnotatedNode {
            comps: s,
            k: self.pseudo.k,
            kind: AnnKind::Rule(LiftedApp {
                app: RuleApp {
                    rule: meta.instance.rule.clone(),
                    principals: bindings,
                },
                premises: meta
                    .premises
                    .iter()
                    .map(|p| LiftedPremiseInfo {
                        new_index: p.new_index,
                        key_ancestor: p.key_ancestor,
                        routing_var: p.routing_var.clone(),
                    })
                    .collect(),
                principal_indices: meta.principal_indices.clone(),
            }),
            children: kids,
        })
    }
}

// ---------------------------------------------------------------------------
// Conversion
// ---------------------------------------------------------------------------

/// Converts a pseudo-ω-free annotated tree to a checkable proof.
pub(super) fn to_proof_tree(node: &AnnotatedNode) -> Result<ProofTree, ReconstructionError> {
    let err = |m: &str| ReconstructionError::SegmentReconstructionFailed(m.to_string());
    let conclusion = Hypersequent::new(node.comps.iter().map(|(_, s)| s.clone()).collect());
    let value = |idx: usize| -> Result<OmegaSequent, ReconstructionError> {
        node.comps
            .iter()
            .find(|(i, _)| *i == idx)
            .map(|(_, s)| s.clone())
            .ok_or_else(|| err("dangling component reference"))
    };
    let step = match &node.kind {
        AnnKind::Axiom => ProofStep::Axiom,
        AnnKind::Rule(l) => ProofStep::Rule(l.app.clone()),
        AnnKind::Wk { comp, formula, .. } => {
            let target = value(*comp)?;
            if target.x[*formula - 1] == 0 {
                return Err(err("weakening of an absent formula"));
            }
            let mut g = target.x.clone();
            g[*formula - 1] -= 1;
            let mut vars = BTreeMap::new();
            vars.insert("G".to_string(), g);
            ProofStep::Rule(RuleApp {
                rule: "w".to_string(),
                principals: vec![PrincipalBinding {
                    schema_comp: "main".to_string(),
                    target: target.clone(),
                    base: target,
                    formula: Some(*formula),
                    via_omega: false,
                    vars,
                }],
            })
        }
        AnnKind::Ew { comp } => {
            let target = value(*comp)?;
            ProofStep::Rule(RuleApp {
                rule: "ew".to_string(),
                principals: vec![PrincipalBinding {
                    schema_comp: "main".to_string(),
                    target: target.clone(),
                    base: target,
                    formula: None,
                    via_omega: false,
                    vars: BTreeMap::new(),
                }],
            })
        }
        AnnKind::PseudoOmega(_) => {
            return Err(err("pseudo-ω node survives in a finished proof"))
        }
    };
    Ok(ProofTree {
        conclusion,
        step,
        children: node
            .children
            .iter()
            .map(to_proof_tree)
            .collect::<Result<_, _>>()?,
        meta: None,
    })
}
