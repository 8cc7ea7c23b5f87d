//! Contraction-mode decision procedure: f-minimal backward proof search.
//!
//! The search tree adds a rule instance at a leaf only when every premise's
//! active component extends the branch history *badly* — no earlier history
//! element is `≤_S`-below it. Branch histories are controlled bad sequences
//! over the sequent wqo, so the limit tree is finite and the procedure is a
//! decision procedure for `HFL_ec(R)`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::calculus::{enumerate_instances, is_axiomatic, CalculusConfig, CalculusError, Mode, RuleInstance};
use crate::hyperseq::{is_bad_extension, leq_s, Hypersequent, OmegaSequent};
use crate::proofs::{ProofStep, ProofTree, RuleApp};
use crate::syntax::SubformulaTable;

/// Node/time caps for a search run.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub max_nodes: u64,
    pub max_millis: u64,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget {
            max_nodes: 2_000_000,
            max_millis: 120_000,
        }
    }
}

/// A configured cap was hit; the search result is unknown, not "unprovable".
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("resource budget exceeded after {nodes} nodes ({elapsed_ms} ms)")]
pub struct ResourceBudgetExceeded {
    pub nodes: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Error)]
pub enum ProverCError {
    #[error(transparent)]
    Budget(#[from] ResourceBudgetExceeded),
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
}

/// A node of the f-minimal proof-search tree.
#[derive(Debug, Clone)]
pub struct SearchNodeC {
    pub hyperseq: Hypersequent,
    /// Linearisation of the root followed by the actives along the branch.
    pub history: Vec<OmegaSequent>,
    pub axiomatic: bool,
    pub groups: Vec<GroupC>,
}

/// One admitted rule instance with the subtrees of its premises.
#[derive(Debug, Clone)]
pub struct GroupC {
    pub instance: RuleInstance,
    pub children: Vec<SearchNodeC>,
}

/// The completed tree with its node count.
#[derive(Debug, Clone)]
pub struct SearchTreeC {
    pub root: SearchNodeC,
    pub nodes: u64,
}

struct Ctx<'a> {
    cfg: &'a CalculusConfig,
    tbl: &'a SubformulaTable,
    budget: Budget,
    nodes: AtomicU64,
    start: Instant,
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

/// Validates a contraction-mode goal: ω-free and with a bad canonical
/// linearisation (single-sequent goals are trivially fine).
fn check_input(cfg: &CalculusConfig, h0: &Hypersequent) -> Result<(), ProverCError> {
    if cfg.mode != Mode::Contraction {
        return Err(ProverCError::BadInput(
            "build_tree_c requires contraction mode".to_string(),
        ));
    }
    if !h0.is_omega_free() {
        return Err(ProverCError::BadInput(
            "contraction-mode goals must be ω-free".to_string(),
        ));
    }
    let cs = h0.components();
    for i in 0..cs.len() {
        for j in i + 1..cs.len() {
            if leq_s(&cs[i], &cs[j]) {
                return Err(ProverCError::BadInput(format!(
                    "canonical linearisation is not bad: component {} is ≤ component {}",
                    i, j
                )));
            }
        }
    }
    Ok(())
}

/// Builds the full f-minimal proof-search tree for the goal hypersequent.
pub fn build_tree_c(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    h0: &Hypersequent,
    budget: Budget,
) -> Result<SearchTreeC, ProverCError> {
    check_input(cfg, h0)?;
    let ctx = Ctx {
        cfg,
        tbl,
        budget,
        nodes: AtomicU64::new(0),
        start: Instant::now(),
    };
    let history: Vec<OmegaSequent> = h0.components().to_vec();
    let root = expand(&ctx, h0.clone(), history)?;
    Ok(SearchTreeC {
        root,
        nodes: ctx.nodes.load(Ordering::Relaxed),
    })
}

fn expand(
    ctx: &Ctx<'_>,
    h: Hypersequent,
    history: Vec<OmegaSequent>,
) -> Result<SearchNodeC, ProverCError> {
    ctx.tick()?;
    if is_axiomatic(ctx.cfg, ctx.tbl, &h) {
        return Ok(SearchNodeC {
            hyperseq: h,
            history,
            axiomatic: true,
            groups: Vec::new(),
        });
    }
    let mut groups = Vec::new();
    for instance in enumerate_instances(ctx.cfg, &h, ctx.tbl)? {
        // All-or-nothing: the instance is admitted only if every premise's
        // active component keeps the branch history bad.
        if !instance
            .premises
            .iter()
            .all(|p| is_bad_extension(&history, &p.active, leq_s))
        {
            continue;
        }
        // Distinct branches may be expanded in parallel; the stored tree is
        // the same regardless of scheduling.
        let children = instance
            .premises
            .par_iter()
            .map(|p| {
                let mut hist = history.clone();
                hist.push(p.active.clone());
                expand(ctx, p.hyper.clone(), hist)
            })
            .collect::<Result<Vec<_>, _>>()?;
        groups.push(GroupC { instance, children });
    }
    Ok(SearchNodeC {
        hyperseq: h,
        history,
        axiomatic: false,
        groups,
    })
}

/// AND-OR evaluation: a node is provable iff it is axiomatic or some group
/// has all children provable. On success extracts a minimal-depth proof.
pub fn evaluate(tree: &SearchTreeC) -> (bool, Option<ProofTree>) {
    match eval_node(&tree.root) {
        Some((_, p)) => (true, Some(p)),
        None => (false, None),
    }
}

fn eval_node(node: &SearchNodeC) -> Option<(u64, ProofTree)> {
    if node.axiomatic {
        return Some((
            0,
            ProofTree {
                conclusion: node.hyperseq.clone(),
                step: ProofStep::Axiom,
                children: Vec::new(),
                meta: None,
            },
        ));
    }
    let mut best: Option<(u64, ProofTree)> = None;
    for g in &node.groups {
        let mut kids = Vec::with_capacity(g.children.len());
        let mut depth = 0u64;
        let mut ok = true;
        for c in &g.children {
            match eval_node(c) {
                Some((d, p)) => {
                    depth = depth.max(d + 1);
                    kids.push(p);
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
        let candidate = (
            depth,
            ProofTree {
                conclusion: node.hyperseq.clone(),
                step: ProofStep::Rule(RuleApp {
                    rule: g.instance.rule.clone(),
                    principals: g.instance.principals.clone(),
                }),
                children: kids,
                meta: None,
            },
        );
        // Minimal depth wins; ties broken by canonical group order.
        if best.as_ref().map(|(d, _)| candidate.0 < *d).unwrap_or(true) {
            best = Some(candidate);
        }
    }
    best
}

/// Fast mode: stops at the first proof found (canonical order). A `None`
/// result is still exhaustive. Also returns the node count.
///
/// Three budget slices. First a short f-minimal iterative-deepening probe,
/// which settles the common easy cases (both verdicts) in milliseconds.
/// Second, bounded-mass saturation of the backward-reachable sequent graph,
/// which finds proofs far too deep for the tree-shaped search and yields
/// sound exhaustive negatives whenever the backward graph is finite within
/// the mass cap. Third, the full f-minimal search with the remaining budget,
/// whose history pruning guarantees a finite tree.
pub fn prove_first(
    cfg: &CalculusConfig,
    tbl: &SubformulaTable,
    h0: &Hypersequent,
    budget: Budget,
) -> Result<(Option<ProofTree>, u64), ProverCError> {
    check_input(cfg, h0)?;
    let ctx = Ctx {
        cfg,
        tbl,
        budget,
        nodes: AtomicU64::new(0),
        start: Instant::now(),
    };
    let history: Vec<OmegaSequent> = h0.components().to_vec();
    let probe = SliceCtx::new(budget.max_nodes / 50, budget.max_millis / 50);
    if let Some(verdict) = prove_fminimal(&ctx, h0, &history, probe)? {
        return Ok((verdict, ctx.nodes.load(Ordering::Relaxed)));
    }
    let saturate = SliceCtx::new(budget.max_nodes / 2, budget.max_millis / 2);
    if let Some(verdict) = prove_saturate(&ctx, h0, saturate)? {
        return Ok((verdict, ctx.nodes.load(Ordering::Relaxed)));
    }
    let rest = SliceCtx::new(u64::MAX, u64::MAX);
    match prove_fminimal(&ctx, h0, &history, rest)? {
        Some(verdict) => Ok((verdict, ctx.nodes.load(Ordering::Relaxed))),
        // Unreachable: the last slice is uncapped, so only the global budget
        // can stop it, and that surfaces as an error.
        None => Err(ResourceBudgetExceeded {
            nodes: ctx.nodes.load(Ordering::Relaxed),
            elapsed_ms: ctx.start.elapsed().as_millis() as u64,
        }
        .into()),
    }
}

/// Per-slice node/time caps, counted separately from the global budget.
struct SliceCtx {
    cap: u64,
    cap_ms: u64,
    spent: u64,
    aborted: bool,
}

impl SliceCtx {
    fn new(cap: u64, cap_ms: u64) -> SliceCtx {
        SliceCtx {
            cap,
            cap_ms,
            spent: 0,
            aborted: false,
        }
    }

    /// True (and latched) once the slice's own caps are exceeded.
    fn overdrawn(&mut self, ctx: &Ctx<'_>) -> bool {
        self.spent += 1;
        if self.spent > self.cap || ctx.start.elapsed().as_millis() as u64 > self.cap_ms {
            self.aborted = true;
        }
        self.aborted
    }
}

/// The f-minimal fast path under a budget slice. `Some(verdict)` is final;
/// `None` means the slice ran out undecided.
fn prove_fminimal(
    ctx: &Ctx<'_>,
    h0: &Hypersequent,
    history: &[OmegaSequent],
    mut slice: SliceCtx,
) -> Result<Option<Option<ProofTree>>, ProverCError> {
    let mut cache: HashMap<Hypersequent, ProofTree> = HashMap::new();
    // Iterative deepening: depth-first search down unguided branches can
    // follow extremely long bad sequences, while proofs tend to be shallow.
    // If a round completes without hitting its depth cutoff, the search was
    // exhaustive and the goal is unprovable.
    let mut limit = 0u64;
    loop {
        let mut cut = false;
        if let Some(p) = prove_first_rec(
            ctx,
            &mut slice,
            h0.clone(),
            history,
            limit,
            &mut cut,
            &mut cache,
        )? {
            return Ok(Some(Some(p)));
        }
        if slice.aborted {
            return Ok(None);
        }
        if !cut {
            return Ok(Some(None));
        }
        limit += 1;
    }
}

/// Bounded-mass saturation at the component level. The cumulative rules
/// carry every conclusion component into each premise, so hypersequent
/// states never repeat and the search DAG cannot be saturated directly.
/// Without interaction schemas, though, every builtin rule has a single
/// principal component and the disjunction property holds: a hypersequent
/// is provable iff one of its components is provable on its own. Component
/// provability is the least fixpoint of "axiomatic, or some instance of the
/// singleton hypersequent all of whose premises contain a provable
/// component", computed here over the mass-capped component space. Any
/// proof that stays within the cap is found, and when nothing was
/// cap-pruned the fixpoint is a sound exhaustive negative. The cap grows
/// until the slice runs out. `Some(verdict)` is final; `None` means the
/// slice ran out undecided (or the config has schemas, where the
/// disjunction property fails and this phase does not apply).
fn prove_saturate(
    ctx: &Ctx<'_>,
    h0: &Hypersequent,
    mut slice: SliceCtx,
) -> Result<Option<Option<ProofTree>>, ProverCError> {
    if !ctx.cfg.schemas.is_empty() {
        return Ok(None);
    }
    let base = h0
        .components()
        .iter()
        .map(|c| c.x.iter().sum::<u32>())
        .max()
        .unwrap_or(0);
    let mut cap = base + 2;
    loop {
        let out = saturate_once(ctx, h0, cap, &mut slice)?;
        match out {
            SatOutcome::Decided(verdict) => return Ok(Some(verdict)),
            SatOutcome::Undecided => {
                if slice.aborted {
                    return Ok(None);
                }
                cap += 2;
            }
        }
    }
}

enum SatOutcome {
    Decided(Option<ProofTree>),
    /// The goal is unproven at this cap but some component was cap-pruned
    /// (or the slice ran out), so unprovability cannot be concluded.
    Undecided,
}

/// One instance of a singleton hypersequent, with each premise reduced to
/// its distinct component state ids (an OR of ways to discharge it).
struct SatInst {
    rule: String,
    principals: Vec<crate::calculus::PrincipalBinding>,
    choice_sets: Vec<Vec<usize>>,
}

fn saturate_once(
    ctx: &Ctx<'_>,
    h0: &Hypersequent,
    cap: u32,
    slice: &mut SliceCtx,
) -> Result<SatOutcome, ProverCError> {
    let mut states: Vec<OmegaSequent> = Vec::new();
    let mut index: HashMap<OmegaSequent, usize> = HashMap::new();
    let intern = |s: &OmegaSequent,
                      states: &mut Vec<OmegaSequent>,
                      index: &mut HashMap<OmegaSequent, usize>| {
        *index.entry(s.clone()).or_insert_with(|| {
            states.push(s.clone());
            states.len() - 1
        })
    };
    let mut roots = Vec::new();
    for c in h0.components() {
        roots.push(intern(c, &mut states, &mut index));
    }
    let mut axiom: Vec<bool> = Vec::new();
    let mut insts: Vec<Vec<SatInst>> = Vec::new();
    let mut pruned = false;
    // Backward exploration of the component space (breadth-first, canonical
    // instance order).
    let mut next = 0usize;
    while next < states.len() {
        let s = states[next].clone();
        next += 1;
        ctx.tick()?;
        if slice.overdrawn(ctx) {
            return Ok(SatOutcome::Undecided);
        }
        let single = Hypersequent::new(vec![s.clone()]);
        if is_axiomatic(ctx.cfg, ctx.tbl, &single) {
            axiom.push(true);
            insts.push(Vec::new());
            continue;
        }
        axiom.push(false);
        let mut out = Vec::new();
        for instance in enumerate_instances(ctx.cfg, &single, ctx.tbl)? {
            slice.spent += 1;
            let mut choice_sets = Vec::with_capacity(instance.premises.len());
            let mut usable = true;
            for p in &instance.premises {
                let mut choices = Vec::new();
                for c in p.hyper.components() {
                    if c.x.iter().sum::<u32>() > cap {
                        pruned = true;
                        continue;
                    }
                    let id = intern(c, &mut states, &mut index);
                    if !choices.contains(&id) {
                        choices.push(id);
                    }
                }
                if choices.is_empty() {
                    usable = false;
                    break;
                }
                choice_sets.push(choices);
            }
            if usable {
                out.push(SatInst {
                    rule: instance.rule,
                    principals: instance.principals,
                    choice_sets,
                });
            }
        }
        insts.push(out);
    }
    // Forward chaining to the least fixpoint. The recorded proving instance
    // picks, per premise, the first already-proven choice, so timestamps
    // strictly decrease along the witness and extraction terminates.
    let n = states.len();
    let mut proven: Vec<bool> = axiom.clone();
    let mut edge: Vec<Option<(usize, Vec<usize>)>> = vec![None; n];
    loop {
        ctx.tick()?;
        let mut changed = false;
        for i in 0..n {
            if proven[i] {
                continue;
            }
            let hit = insts[i].iter().enumerate().find_map(|(k, inst)| {
                inst.choice_sets
                    .iter()
                    .map(|cs| cs.iter().copied().find(|&j| proven[j]))
                    .collect::<Option<Vec<usize>>>()
                    .map(|picks| (k, picks))
            });
            if let Some(hit) = hit {
                proven[i] = true;
                edge[i] = Some(hit);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if let Some(&root) = roots.iter().find(|&&r| proven[r]) {
        let proof = extract_sat(ctx, h0.clone(), root, &states, &insts, &edge)?;
        return Ok(SatOutcome::Decided(Some(proof)));
    }
    if pruned {
        Ok(SatOutcome::Undecided)
    } else {
        Ok(SatOutcome::Decided(None))
    }
}

/// Replays the component-level witness on the actual (cumulative)
/// hypersequent: at each step the instance matching the witness's rule and
/// principals is applied, and each premise recurses on its chosen
/// component. Choices were proven strictly earlier in the fixpoint, so the
/// recursion is well-founded.
fn extract_sat(
    ctx: &Ctx<'_>,
    h: Hypersequent,
    state: usize,
    states: &[OmegaSequent],
    insts: &[Vec<SatInst>],
    edge: &[Option<(usize, Vec<usize>)>],
) -> Result<ProofTree, ProverCError> {
    ctx.tick()?;
    if is_axiomatic(ctx.cfg, ctx.tbl, &h) {
        return Ok(ProofTree {
            conclusion: h,
            step: ProofStep::Axiom,
            children: Vec::new(),
            meta: None,
        });
    }
    let (k, picks) = edge[state]
        .as_ref()
        .expect("proven non-axiomatic state has a proving instance");
    let w = &insts[state][*k];
    let instance = enumerate_instances(ctx.cfg, &h, ctx.tbl)?
        .into_iter()
        .find(|i| i.rule == w.rule && i.principals == w.principals)
        .expect("witness instance re-applies on the cumulative hypersequent");
    debug_assert_eq!(instance.premises.len(), picks.len());
    let mut children = Vec::with_capacity(picks.len());
    for (p, &pick) in instance.premises.iter().zip(picks) {
        debug_assert!(p.hyper.components().contains(&states[pick]));
        children.push(extract_sat(ctx, p.hyper.clone(), pick, states, insts, edge)?);
    }
    Ok(ProofTree {
        conclusion: h,
        step: ProofStep::Rule(RuleApp {
            rule: instance.rule.clone(),
            principals: instance.principals.clone(),
        }),
        children,
        meta: None,
    })
}

fn prove_first_rec(
    ctx: &Ctx<'_>,
    slice: &mut SliceCtx,
    h: Hypersequent,
    history: &[OmegaSequent],
    limit: u64,
    cut: &mut bool,
    cache: &mut HashMap<Hypersequent, ProofTree>,
) -> Result<Option<ProofTree>, ProverCError> {
    ctx.tick()?;
    if slice.overdrawn(ctx) {
        *cut = true;
        return Ok(None);
    }
    if let Some(p) = cache.get(&h) {
        return Ok(Some(p.clone()));
    }
    if is_axiomatic(ctx.cfg, ctx.tbl, &h) {
        let p = ProofTree {
            conclusion: h.clone(),
            step: ProofStep::Axiom,
            children: Vec::new(),
            meta: None,
        };
        cache.insert(h, p.clone());
        return Ok(Some(p));
    }
    if limit == 0 {
        *cut = true;
        return Ok(None);
    }
    let mut instances = enumerate_instances(ctx.cfg, &h, ctx.tbl)?;
    instances.retain(|instance| {
        instance
            .premises
            .iter()
            .all(|p| is_bad_extension(history, &p.active, leq_s))
    });
    // Heuristic order for the first-proof search only: groups whose premises
    // are all immediately axiomatic first, then smaller premises; ties keep
    // the canonical order, so the found proof is deterministic.
    instances.sort_by_cached_key(|instance| {
        let all_ax = instance
            .premises
            .iter()
            .all(|p| is_axiomatic(ctx.cfg, ctx.tbl, &p.hyper));
        let norm: u64 = instance.premises.iter().map(|p| p.active.norm() as u64).sum();
        (!all_ax, norm)
    });
    'inst: for instance in instances {
        let mut kids = Vec::with_capacity(instance.premises.len());
        for p in &instance.premises {
            let mut hist = history.to_vec();
            hist.push(p.active.clone());
            match prove_first_rec(ctx, slice, p.hyper.clone(), &hist, limit - 1, cut, cache)? {
                Some(sub) => kids.push(sub),
                None => continue 'inst,
            }
        }
        let proof = ProofTree {
            conclusion: h.clone(),
            step: ProofStep::Rule(RuleApp {
                rule: instance.rule.clone(),
                principals: instance.principals.clone(),
            }),
            children: kids,
            meta: None,
        };
        cache.insert(h, proof.clone());
        return Ok(Some(proof));
    }
    Ok(None)
}
