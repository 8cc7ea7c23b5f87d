//! Weakening-mode decision procedure `Wkn`: ω-accelerated proof search.
//!
//! Search states are legal RIN hypersequents: indexed ω-hypersequents with a
//! dependency relation whose closure is a rooted tree. When a rule instance
//! creates a new active component, the edge to its *key ancestor* (the
//! latest principal sharing a schema multiset-variable) is added; if some
//! rel-ancestor is strictly below the new component (`≺`), the component is
//! replaced by its ω-refinement — the Karp–Miller-style acceleration that
//! promotes strictly grown coordinates into the ω-set.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{
    enumerate_instances, is_axiomatic, CalculusConfig, CalculusError, Mode, RuleInstance,
};
use crate::hyperseq::{
    omega_fn, omega_kappa, strictly_below, Hypersequent, IndexedComponent, OmegaSequent,
    RinHypersequent,
};
use crate::proofs::{NodeMeta, ProofStep, ProofTree, RuleApp};
use crate::prover_c::{Budget, ResourceBudgetExceeded};
use crate::syntax::SubformulaTable;

#[derive(Debug, Error)]
pub enum ProverWError {
    #[error(transparent)]
    Budget(#[from] ResourceBudgetExceeded),
    #[error("redundant input: {0}")]
    RedundantInput(String),
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
}

/// Record of one ω-refinement: the partner, the promoted coordinate set κ,
/// and the pre-component (the active component before refinement).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refinement {
    pub partner: usize,
    pub partner_value: OmegaSequent,
    pub kappa: BTreeSet<usize>,
    pub pre: OmegaSequent,
}

/// One premise-child of a group: the fresh component index, its key
/// ancestor, the routing variable of the (key ancestor, active) edge, and
/// the refinement record when the premise is productive.
#[derive(Debug, Clone)]
pub struct ChildW {
    pub node: SearchNodeW,
    pub new_index: usize,
    pub key_ancestor: usize,
    pub routing_var: Option<String>,
    pub refinement: Option<Refinement>,
}

#[derive(Debug, Clone)]
pub struct GroupW {
    pub instance: RuleInstance,
    pub children: Vec<ChildW>,
}

#[derive(Debug, Clone)]
pub struct SearchNodeW {
    pub rin: RinHypersequent,
    pub axiomatic: bool,
    pub groups: Vec<GroupW>,
}

#[derive(Debug, Clone)]
pub struct SearchTreeW {
    pub root: SearchNodeW,
    pub nodes: u64,
    pub warnings: Vec<String>,
}

/// The instantiation context of one rule instance against a RIN state.
pub struct InstantiationContext<'a> {
    pub rule: &'a RuleInstance,
    pub rin: &'a RinHypersequent,
}

/// The key ancestor of premise `premise_idx`: the principal indexed
/// component of largest index among those whose schema component shares a
/// multiset-variable with the premise's active schema component. Returns
/// `(index, routing variable, fallback_used)`; the routing variable is the
/// lexicographically least shared variable.
pub fn key_ancestor(
    cfg: &CalculusConfig,
    ctx: &InstantiationContext<'_>,
    premise_idx: usize,
) -> (usize, Option<String>, bool) {
    let premise = &ctx.rule.premises[premise_idx];
    // The premise's variables: its context list plus the Y-variable of the
    // conclusion component it is tied to (builtin rules record G/D, which
    // are already principal variables).
    let mut prem_vars: BTreeSet<&str> = premise.context_vars.iter().map(|s| s.as_str()).collect();
    if let Some(schema) = cfg.schemas.iter().find(|s| s.name == ctx.rule.rule) {
        if let Some(p) = schema.prems.get(premise.schema_premise) {
            if let Some(id) = &p.for_comp {
                if let Some(comp) = schema.comps.iter().find(|c| &c.id == id) {
                    if let Some(y) = &comp.y {
                        prem_vars.insert(y.as_str());
                    }
                }
            }
        }
    }
    let index_of = |seq: &OmegaSequent| -> Option<usize> {
        ctx.rin
            .components
            .iter()
            .find(|c| &c.seq == seq)
            .map(|c| c.index)
    };
    let mut best: Option<(usize, String)> = None;
    for b in &ctx.rule.principals {
        let shared: Vec<&String> = b.vars.keys().filter(|v| prem_vars.contains(v.as_str())).collect();
        if shared.is_empty() {
            continue;
        }
        if let Some(idx) = index_of(&b.target) {
            let var = shared.iter().min().unwrap().to_string();
            if best.as_ref().map(|(i, _)| idx > *i).unwrap_or(true) {
                best = Some((idx, var));
            }
        }
    }
    if let Some((idx, var)) = best {
        return (idx, Some(var), false);
    }
    // Fallback: no principal shares a variable (not expected for
    // Def-2.2-shaped rules) — largest-index principal.
    let idx = ctx
        .rule
        .principals
        .iter()
        .filter_map(|b| index_of(&b.target))
        .max()
        .unwrap_or(0);
    (idx, None, true)
}

/// The ω-partner of a candidate component attached under `key`: the
/// largest-index rel-ancestor strictly below it, if any.
pub fn omega_partner<'a>(
    rin: &'a RinHypersequent,
    key: usize,
    candidate: &OmegaSequent,
) -> Option<&'a IndexedComponent> {
    // Ancestors in decreasing index order: key first, then its rel-chain.
    let mut chain = vec![key];
    chain.extend(rin.ancestors(key));
    for idx in chain {
        if let Some(c) = rin.get(idx) {
            if strictly_below(&c.seq, candidate) {
                return Some(c);
            }
        }
    }
    None
}

/// One expansion step: computes the admitted groups for a RIN state,
/// applying pre-refinement redundancy, key-ancestor edges, ω-refinement,
/// and post-refinement redundancy. Returns the child RIN states alongside
/// their metadata (nodes not yet expanded).
pub fn expand_leaf(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    rin: &RinHypersequent,
    warnings: &mut Vec<String>,
) -> Result<Vec<(RuleInstance, Vec<(RinHypersequent, usize, usize, Option<String>, Option<Refinement>)>)>, CalculusError>
{
    let support = rin.support();
    let mut out = Vec::new();
    'inst: for instance in enumerate_instances(cfg, &support, tbl)? {
        // (a) pre-refinement redundancy: skip the instance if any active
        // component already occurs.
        if instance.premises.iter().any(|p| support.contains(&p.active)) {
            continue;
        }
        let m = rin.max_index() + 1;
        let ctx = InstantiationContext {
            rule: &instance,
            rin,
        };
        let mut children = Vec::with_capacity(instance.premises.len());
        for (k, premise) in instance.premises.iter().enumerate() {
            let (key, routing, fallback) = key_ancestor(cfg, &ctx, k);
            if fallback {
                warnings.push(format!(
                    "key-ancestor fallback used for rule {} premise {}",
                    instance.rule, k
                ));
            }
            // (c) ω-refinement against the rel-chain through the key edge.
            let (seq, refinement) = match omega_partner(rin, key, &premise.active) {
                Some(partner) => {
                    let refined = omega_fn(&partner.seq, &premise.active)
                        .expect("partner is strictly below the active component");
                    let rec = Refinement {
                        partner: partner.index,
                        partner_value: partner.seq.clone(),
                        kappa: omega_kappa(&partner.seq, &premise.active),
                        pre: premise.active.clone(),
                    };
                    (refined, Some(rec))
                }
                None => (premise.active.clone(), None),
            };
            let mut components = rin.components.clone();
            components.push(IndexedComponent {
                index: m,
                seq: seq.clone(),
            });
            let mut rel = rin.rel.clone();
            rel.insert(m, key);
            let child = RinHypersequent { components, rel };
            // (d) post-refinement redundancy: a redundant child support
            // discards the whole group.
            if !child.support().is_irredundant() {
                continue 'inst;
            }
            children.push((child, m, key, routing, refinement));
        }
        out.push((instance, children));
    }
    Ok(out)
}

struct Ctx<'a> {
    cfg: &'a CalculusConfig,
    tbl: &'a SubformulaTable,
    budget: Budget,
    nodes: AtomicU64,
    start: Instant,
    warnings: Mutex<Vec<String>>,
}

impl Ctx<'_> {
    fn tick(&self) -> Result<(), ResourceBudgetExceeded> {
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        let elapsed = self.start.elapsed().as_millis() as u64;
        if n > self.budget.max_nodes || elapsed > self.budget.max_millis {
            Err(ResourceBudgetExceeded {
                nodes: n,
                elapsed_ms: elapsed,
            })
        } else {
            Ok(())
        }
    }
}

/// Builds the full ω-proof-search tree from a legal RIN root.
pub fn build_t_omega(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    root: &RinHypersequent,
    budget: Budget,
) -> Result<SearchTreeW, ProverWError> {
    if cfg.mode != Mode::Weakening {
        return Err(ProverWError::BadInput(
            "build_t_omega requires weakening mode".to_string(),
        ));
    }
    if !root.support().is_irredundant() {
        return Err(ProverWError::RedundantInput(
            "root support has a repeated component".to_string(),
        ));
    }
    check_disjoint(&root.support())?;
    let ctx = Ctx {
        cfg,
        tbl,
        budget,
        nodes: AtomicU64::new(0),
        start: Instant::now(),
        warnings: Mutex::new(Vec::new()),
    };
    let node = expand(&ctx, root.clone())?;
    let mut warnings = ctx.warnings.into_inner().unwrap();
    warnings.sort();
    warnings.dedup();
    Ok(SearchTreeW {
        root: node,
        nodes: ctx.nodes.load(Ordering::Relaxed),
        warnings,
    })
}

fn expand(ctx: &Ctx<'_>, rin: RinHypersequent) -> Result<SearchNodeW, ProverWError> {
    ctx.tick()?;
    let support = rin.support();
    if is_axiomatic(ctx.cfg, ctx.tbl, &support) {
        return Ok(SearchNodeW {
            rin,
            axiomatic: true,
            groups: Vec::new(),
        });
    }
    let mut local_warnings = Vec::new();
    let specs = expand_leaf(ctx.cfg, ctx.tbl, &rin, &mut local_warnings)?;
    if !local_warnings.is_empty() {
        ctx.warnings.lock().unwrap().extend(local_warnings);
    }
    let groups = specs
        .into_par_iter()
        .map(|(instance, kids)| {
            let children = kids
                .into_iter()
                .map(|(child_rin, new_index, key, routing, refinement)| {
                    Ok(ChildW {
                        node: expand(ctx, child_rin)?,
                        new_index,
                        key_ancestor: key,
                        routing_var: routing,
                        refinement,
                    })
                })
                .collect::<Result<Vec<_>, ProverWError>>()?;
            Ok(GroupW { instance, children })
        })
        .collect::<Result<Vec<_>, ProverWError>>()?;
    Ok(SearchNodeW {
        rin,
        axiomatic: false,
        groups,
    })
}

/// An ω-eager proof: a subtree of the search tree whose every leaf is
/// axiomatic, retaining the metadata reconstruction needs.
#[derive(Debug, Clone)]
pub struct EagerNode {
    pub rin: RinHypersequent,
    pub kind: EagerKind,
}

#[derive(Debug, Clone)]
pub enum EagerKind {
    Axiom,
    Rule {
        instance: RuleInstance,
        children: Vec<EagerChild>,
    },
}

#[derive(Debug, Clone)]
pub struct EagerChild {
    pub node: EagerNode,
    pub new_index: usize,
    pub key_ancestor: usize,
    pub routing_var: Option<String>,
    pub refinement: Option<Refinement>,
}

/// AND-OR evaluation of the completed tree; on success extracts a
/// minimal-depth ω-eager proof.
pub fn find_omega_eager_proof(tree: &SearchTreeW) -> Option<EagerNode> {
    eval_node(&tree.root).map(|(_, p)| p)
}

fn eval_node(node: &SearchNodeW) -> Option<(u64, EagerNode)> {
    if node.axiomatic {
        return Some((
            0,
            EagerNode {
                rin: node.rin.clone(),
                kind: EagerKind::Axiom,
            },
        ));
    }
    let mut best: Option<(u64, EagerNode)> = None;
    for g in &node.groups {
        let mut kids = Vec::with_capacity(g.children.len());
        let mut depth = 0u64;
        let mut ok = true;
        for c in &g.children {
            match eval_node(&c.node) {
                Some((d, sub)) => {
                    depth = depth.max(d + 1);
                    kids.push(EagerChild {
                        node: sub,
                        new_index: c.new_index,
                        key_ancestor: c.key_ancestor,
                        routing_var: c.routing_var.clone(),
                        refinement: c.refinement.clone(),
                    });
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        if best.as_ref().map(|(d, _)| depth < *d).unwrap_or(true) {
            best = Some((
                depth,
                EagerNode {
                    rin: node.rin.clone(),
                    kind: EagerKind::Rule {
                        instance: g.instance.clone(),
                        children: kids,
                    },
                },
            ));
        }
    }
    best
}

fn check_disjoint(h: &Hypersequent) -> Result<(), ProverWError> {
    if h.components().iter().all(|c| c.is_disjoint()) {
        Ok(())
    } else {
        Err(ProverWError::BadInput(
            "an input component carries a positive multiplicity on an ω-formula".to_string(),
        ))
    }
}

/// Depth-first variant of the ω-search: explores `T_ω` lazily and stops at
/// the first ω-eager proof, so the full tree is never materialized. A `None`
/// result is still exhaustive (the whole tree was traversed). Groups whose
/// premises are all immediately axiomatic are tried first; ties keep the
/// canonical instance order, so the result is deterministic.
pub fn wkn_first(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    h0: &Hypersequent,
    budget: Budget,
) -> Result<(Option<EagerNode>, u64), ProverWError> {
    if cfg.mode != Mode::Weakening {
        return Err(ProverWError::BadInput(
            "wkn requires weakening mode".to_string(),
        ));
    }
    if !h0.is_irredundant() {
        return Err(ProverWError::RedundantInput(
            "goal hypersequent has a repeated component; EC-contract it first".to_string(),
        ));
    }
    check_disjoint(h0)?;
    let ctx = Ctx {
        cfg,
        tbl,
        budget,
        nodes: AtomicU64::new(0),
        start: Instant::now(),
        warnings: Mutex::new(Vec::new()),
    };
    let root = RinHypersequent::root(h0);
    // Iterative deepening: keeps the found proof depth-minimal (shallow
    // proofs avoid unnecessary ω-refinements) and remains exhaustive — when
    // a round finishes without hitting its depth cutoff the whole tree was
    // traversed.
    let mut limit = 0u64;
    loop {
        let mut cut = false;
        if let Some(p) = first_rec(&ctx, root.clone(), limit, &mut cut)? {
            return Ok((Some(p), ctx.nodes.load(Ordering::Relaxed)));
        }
        if !cut {
            return Ok((None, ctx.nodes.load(Ordering::Relaxed)));
        }
        limit += 1;
    }
}

fn first_rec(
    ctx: &Ctx<'_>,
    rin: RinHypersequent,
    limit: u64,
    cut: &mut bool,
) -> Result<Option<EagerNode>, ProverWError> {
    ctx.tick()?;
    let support = rin.support();
    if is_axiomatic(ctx.cfg, ctx.tbl, &support) {
        return Ok(Some(EagerNode {
            rin,
            kind: EagerKind::Axiom,
        }));
    }
    if limit == 0 {
        *cut = true;
        return Ok(None);
    }
    let mut local_warnings = Vec::new();
    let mut specs = expand_leaf(ctx.cfg, ctx.tbl, &rin, &mut local_warnings)?;
    if !local_warnings.is_empty() {
        ctx.warnings.lock().unwrap().extend(local_warnings);
    }
    specs.sort_by_key(|(_, kids)| {
        !kids
            .iter()
            .all(|(child, ..)| is_axiomatic(ctx.cfg, ctx.tbl, &child.support()))
    });
    'group: for (instance, kids) in specs {
        let mut children = Vec::with_capacity(kids.len());
        for (child_rin, new_index, key, routing, refinement) in kids {
            match first_rec(ctx, child_rin, limit - 1, cut)? {
                Some(node) => children.push(EagerChild {
                    node,
                    new_index,
                    key_ancestor: key,
                    routing_var: routing,
                    refinement,
                }),
                None => continue 'group,
            }
        }
        return Ok(Some(EagerNode {
            rin,
            kind: EagerKind::Rule { instance, children },
        }));
    }
    Ok(None)
}

/// The outcome of a `wkn` run.
pub struct WknOutcome {
    pub provable: bool,
    pub eager: Option<EagerNode>,
    pub tree: SearchTreeW,
}

/// The ω-proof-search algorithm: canonical ℓRIN root over `h0`, full
/// `T_ω`, then search for an ω-eager proof.
pub fn wkn(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    h0: &Hypersequent,
    budget: Budget,
) -> Result<WknOutcome, ProverWError> {
    if !h0.is_irredundant() {
        return Err(ProverWError::RedundantInput(
            "goal hypersequent has a repeated component; EC-contract it first".to_string(),
        ));
    }
    let root = RinHypersequent::root(h0);
    let tree = build_t_omega(cfg, tbl, &root, budget)?;
    let eager = find_omega_eager_proof(&tree);
    Ok(WknOutcome {
        provable: eager.is_some(),
        eager,
        tree,
    })
}

/// All refinement records in a completed tree (trace/diagnostics).
pub fn collect_refinements(node: &SearchNodeW, out: &mut Vec<Refinement>) {
    for g in &node.groups {
        for c in &g.children {
            if let Some(r) = &c.refinement {
                out.push(r.clone());
            }
            collect_refinements(&c.node, out);
        }
    }
}

/// Converts an ω-eager proof to the serializable proof-tree form, placing
/// each child's reconstruction metadata on the child node.
pub fn eager_to_proof_tree(node: &EagerNode) -> ProofTree {
    let conclusion = node.rin.support();
    match &node.kind {
        EagerKind::Axiom => ProofTree {
            conclusion,
            step: ProofStep::Axiom,
            children: Vec::new(),
            meta: None,
        },
        EagerKind::Rule { instance, children } => ProofTree {
            conclusion,
            step: ProofStep::Rule(RuleApp {
                rule: instance.rule.clone(),
                principals: instance.principals.clone(),
            }),
            children: children
                .iter()
                .map(|c| {
                    let mut t = eager_to_proof_tree(&c.node);
                    t.meta = Some(NodeMeta {
                        new_index: Some(c.new_index),
                        key_ancestor: Some(c.key_ancestor),
                        routing_var: c.routing_var.clone(),
                        partner: c.refinement.as_ref().map(|r| r.partner_value.clone()),
                        kappa: c.refinement.as_ref().map(|r| r.kappa.clone()),
                        pre: c.refinement.as_ref().map(|r| r.pre.clone()),
                    });
                    t
                })
                .collect(),
            meta: None,
        },
    }
}
