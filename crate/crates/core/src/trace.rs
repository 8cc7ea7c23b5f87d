//! Search-tree trace exports (JSON and Graphviz DOT).
//!
//! Traces are diagnostic renderings of the full proof-search trees,
//! including the per-instance groups, and for the ω-search the indexed
//! components, dependency edges, and refinement records. Output is
//! byte-deterministic for a given tree.

use std::fmt::Write as _;

use serde::Serialize;

use crate::prover_c::{SearchNodeC, SearchTreeC};
use crate::prover_w::{SearchNodeW, SearchTreeW};
use crate::syntax::SubformulaTable;

#[derive(Serialize)]
struct TraceC {
    nodes: u64,
    root: NodeC,
}

#[derive(Serialize)]
struct NodeC {
    hypersequent: String,
    axiomatic: bool,
    groups: Vec<GroupCJson>,
}

#[derive(Serialize)]
struct GroupCJson {
    rule: String,
    children: Vec<NodeC>,
}

fn node_c(tbl: &SubformulaTable, n: &SearchNodeC) -> NodeC {
    NodeC {
        hypersequent: n.hyperseq.display(tbl),
        axiomatic: n.axiomatic,
        groups: n
            .groups
            .iter()
            .map(|g| GroupCJson {
                rule: g.instance.rule.clone(),
                children: g.children.iter().map(|c| node_c(tbl, c)).collect(),
            })
            .collect(),
    }
}

/// JSON trace of a contraction-mode search tree.
pub fn tree_c_json(tbl: &SubformulaTable, tree: &SearchTreeC) -> String {
    serde_json::to_string_pretty(&TraceC {
        nodes: tree.nodes,
        root: node_c(tbl, &tree.root),
    })
    .expect("trace serialization")
}

#[derive(Serialize)]
struct TraceW {
    nodes: u64,
    warnings: Vec<String>,
    root: NodeW,
}

#[derive(Serialize)]
struct NodeW {
    components: Vec<ComponentW>,
    axiomatic: bool,
    groups: Vec<GroupWJson>,
}

#[derive(Serialize)]
struct ComponentW {
    index: usize,
    sequent: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    parent: Option<usize>,
}

#[derive(Serialize)]
struct GroupWJson {
    rule: String,
    children: Vec<ChildWJson>,
}

#[derive(Serialize)]
struct ChildWJson {
    new_index: usize,
    key_ancestor: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    routing_var: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    refinement: Option<RefinementJson>,
    node: NodeW,
}

#[derive(Serialize)]
struct RefinementJson {
    partner: usize,
    partner_value: String,
    kappa: Vec<String>,
    pre: String,
}

fn node_w(tbl: &SubformulaTable, n: &SearchNodeW) -> NodeW {
    NodeW {
        components: n
            .rin
            .components
            .iter()
            .map(|c| ComponentW {
                index: c.index,
                sequent: c.seq.display(tbl),
                parent: n.rin.rel.get(&c.index).copied(),
            })
            .collect(),
        axiomatic: n.axiomatic,
        groups: n
            .groups
            .iter()
            .map(|g| GroupWJson {
                rule: g.instance.rule.clone(),
                children: g
                    .children
                    .iter()
                    .map(|c| ChildWJson {
                        new_index: c.new_index,
                        key_ancestor: c.key_ancestor,
                        routing_var: c.routing_var.clone(),
                        refinement: c.refinement.as_ref().map(|r| RefinementJson {
                            partner: r.partner,
                            partner_value: r.partner_value.display(tbl),
                            kappa: r
                                .kappa
                                .iter()
                                .map(|&i| tbl.formula(i).to_string())
                                .collect(),
                            pre: r.pre.display(tbl),
                        }),
                        node: node_w(tbl, &c.node),
                    })
                    .collect(),
            })
            .collect(),
    }
}

/// JSON trace of an ω-search tree.
pub fn tree_w_json(tbl: &SubformulaTable, tree: &SearchTreeW) -> String {
    serde_json::to_string_pretty(&TraceW {
        nodes: tree.nodes,
        warnings: tree.warnings.clone(),
        root: node_w(tbl, &tree.root),
    })
    .expect("trace serialization")
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT rendering of a contraction-mode search tree.
pub fn tree_c_dot(tbl: &SubformulaTable, tree: &SearchTreeC) -> String {
    let mut out = String::from("digraph search {\n  node [shape=box];\n");
    let mut id = 0usize;
    fn walk(
        tbl: &SubformulaTable,
        n: &SearchNodeC,
        id: &mut usize,
        out: &mut String,
    ) -> usize {
        let me = *id;
        *id += 1;
        let shape = if n.axiomatic { ", style=bold" } else { "" };
        let _ = writeln!(
            out,
            "  n{me} [label=\"{}\"{shape}];",
            dot_escape(&n.hyperseq.display(tbl))
        );
        for g in &n.groups {
            for c in &g.children {
                let kid = walk(tbl, c, id, out);
                let _ = writeln!(
                    out,
                    "  n{me} -> n{kid} [label=\"{}\"];",
                    dot_escape(&g.instance.rule)
                );
            }
        }
        me
    }
    walk(tbl, &tree.root, &mut id, &mut out);
    out.push_str("}\n");
    out
}

/// DOT rendering of an ω-search tree; refining edges are marked with the
/// promoted coordinate set κ.
pub fn tree_w_dot(tbl: &SubformulaTable, tree: &SearchTreeW) -> String {
    let mut out = String::from("digraph search {\n  node [shape=box];\n");
    let mut id = 0usize;
    fn walk(
        tbl: &SubformulaTable,
        n: &SearchNodeW,
        id: &mut usize,
        out: &mut String,
    ) -> usize {
        let me = *id;
        *id += 1;
        let label: Vec<String> = n
            .rin
            .components
            .iter()
            .map(|c| match n.rin.rel.get(&c.index) {
                Some(p) => format!("[{}<-{}] {}", c.index, p, c.seq.display(tbl)),
                None => format!("[{}] {}", c.index, c.seq.display(tbl)),
            })
            .collect();
        let shape = if n.axiomatic { ", style=bold" } else { "" };
        let _ = writeln!(
            out,
            "  n{me} [label=\"{}\"{shape}];",
            dot_escape(&label.join("\\n"))
        );
        for g in &n.groups {
            for c in &g.children {
                let kid = walk(tbl, &c.node, id, out);
                let mut elabel = g.instance.rule.clone();
                if let Some(r) = &c.refinement {
                    let kappa: Vec<String> =
                        r.kappa.iter().map(|&i| tbl.formula(i).to_string()).collect();
                    let _ = write!(elabel, " ω κ={{{}}}", kappa.join(","));
                }
                let _ = writeln!(out, "  n{me} -> n{kid} [label=\"{}\"];", dot_escape(&elabel));
            }
        }
        me
    }
    walk(tbl, &tree.root, &mut id, &mut out);
    out.push_str("}\n");
    out
}
