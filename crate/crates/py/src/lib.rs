//! Python bindings for the hyperprove proof-search engine.
//!
//! The module exposes the main operations at the text/JSON level: formula
//! parsing and canonical printing, subformula tables, schema validation,
//! proving (both modes, with optional reconstruction), proof checking, and
//! the ω-function.

use std::collections::BTreeSet;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hyperprove::calculus::{validate_schema, CalculusConfig, Mode, RuleSchema};
use hyperprove::hyperseq::{self, Hypersequent, OmegaSequent};
use hyperprove::proofs::{
    check_proof as check_proof_rs, read_proof_json, stage_one, stage_two, write_proof_json,
};
use hyperprove::prover_c::{prove_first, Budget};
use hyperprove::prover_w::{eager_to_proof_tree, wkn_first};
use hyperprove::syntax::{parse as parse_rs, Formula, SubformulaTable};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Parses a formula and returns its canonical rendering.
#[pyfunction]
fn parse_formula(text: &str) -> PyResult<String> {
    Ok(parse_rs(text).map_err(value_err)?.to_string())
}

/// The subformula table of a formula: the canonical enumeration φ1..φd.
#[pyfunction]
fn subformula_table(text: &str) -> PyResult<Vec<String>> {
    let f = parse_rs(text).map_err(value_err)?;
    Ok(SubformulaTable::new(&f)
        .entries()
        .iter()
        .map(|g| g.to_string())
        .collect())
}

/// Validates a structural-rule schema (JSON text); returns (name, fm, acn).
#[pyfunction]
fn schema_info(json: &str) -> PyResult<(String, u32, u32)> {
    let s = validate_schema(json)
        .map_err(|errs| value_err(errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")))?;
    let fm = s.fm();
    let acn = s.acn();
    Ok((s.name, fm, acn))
}

fn build_goal(text: &str) -> PyResult<(SubformulaTable, Hypersequent)> {
    let comps = if text.contains("=>") || text.contains('|') || text.contains('{') {
        hyperseq::parse_hypersequent(text).map_err(value_err)?
    } else {
        vec![hyperseq::RawComponent {
            omega: Vec::new(),
            antecedent: Vec::new(),
            stoup: Some(parse_rs(text).map_err(value_err)?),
        }]
    };
    let formulas: Vec<Formula> = comps.iter().flat_map(|c| c.formulas().cloned()).collect();
    let tbl = SubformulaTable::for_all(&formulas);
    let seqs: Vec<OmegaSequent> = comps.iter().map(|c| c.resolve(&tbl)).collect();
    Ok((tbl, Hypersequent::new(seqs)))
}

fn build_config(mode: &str, rules: Vec<String>) -> PyResult<CalculusConfig> {
    let mode = match mode {
        "c" => Mode::Contraction,
        "w" => Mode::Weakening,
        other => return Err(value_err(format!("unknown mode {other:?}"))),
    };
    let schemas: Vec<RuleSchema> = rules
        .iter()
        .map(|r| {
            validate_schema(r).map_err(|errs| {
                value_err(errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))
            })
        })
        .collect::<PyResult<_>>()?;
    Ok(CalculusConfig::new(mode, schemas))
}

/// Decides provability of a formula or hypersequent.
///
/// Returns a dict with keys `provable`, `nodes`, and (when a proof exists)
/// `proof` (self-contained proof JSON, reconstructed to ω-free form when
/// `reconstruct=True` in mode "w").
#[pyfunction]
#[pyo3(signature = (goal, mode="c", rules=Vec::new(), reconstruct=false, max_nodes=2_000_000, max_seconds=120))]
fn prove<'py>(
    py: Python<'py>,
    goal: &str,
    mode: &str,
    rules: Vec<String>,
    reconstruct: bool,
    max_nodes: u64,
    max_seconds: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = build_config(mode, rules)?;
    let (tbl, h0) = build_goal(goal)?;
    let budget = Budget {
        max_nodes,
        max_millis: max_seconds.saturating_mul(1000),
    };
    let out = PyDict::new(py);
    match cfg.mode {
        Mode::Contraction => {
            if reconstruct {
                return Err(value_err("reconstruct requires mode \"w\""));
            }
            let (proof, nodes) = prove_first(&cfg, &tbl, &h0, budget).map_err(value_err)?;
            out.set_item("provable", proof.is_some())?;
            out.set_item("nodes", nodes)?;
            if let Some(p) = proof {
                out.set_item("proof", write_proof_json(&cfg, &tbl, &p))?;
            }
        }
        Mode::Weakening => {
            let (eager, nodes) = wkn_first(&cfg, &tbl, &h0, budget).map_err(value_err)?;
            out.set_item("provable", eager.is_some())?;
            out.set_item("nodes", nodes)?;
            if let Some(eager) = &eager {
                let p = if reconstruct {
                    let ann = stage_one(&cfg, &tbl, eager).map_err(value_err)?;
                    let p = stage_two(&cfg, &tbl, &ann).map_err(value_err)?;
                    check_proof_rs(&cfg, &tbl, &p).map_err(value_err)?;
                    p
                } else {
                    eager_to_proof_tree(eager)
                };
                out.set_item("proof", write_proof_json(&cfg, &tbl, &p))?;
            }
        }
    }
    Ok(out)
}

/// Verifies a self-contained proof JSON document; returns None on success
/// and raises ValueError with a diagnostic otherwise.
#[pyfunction]
fn check_proof(proof_json: &str) -> PyResult<String> {
    let (cfg, tbl, proof) = read_proof_json(proof_json).map_err(value_err)?;
    check_proof_rs(&cfg, &tbl, &proof).map_err(value_err)?;
    Ok(proof.conclusion.display(&tbl))
}

/// The ω-function on explicit ω-sequents given as (stoup, ω-set, vector)
/// triples over a common table dimension; indices are 1-based.
#[pyfunction]
fn omega_fn(
    s: (usize, Vec<usize>, Vec<u32>),
    t: (usize, Vec<usize>, Vec<u32>),
) -> PyResult<(usize, Vec<usize>, Vec<u32>)> {
    let mk = |(b, omega, x): (usize, Vec<usize>, Vec<u32>)| OmegaSequent {
        b,
        omega: omega.into_iter().collect::<BTreeSet<usize>>(),
        x,
    };
    let r = hyperseq::omega_fn(&mk(s), &mk(t)).map_err(value_err)?;
    Ok((r.b, r.omega.into_iter().collect(), r.x))
}

#[pymodule]
fn hyperprove_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(parse_formula, m)?)?;
    m.add_function(wrap_pyfunction!(subformula_table, m)?)?;
    m.add_function(wrap_pyfunction!(schema_info, m)?)?;
    m.add_function(wrap_pyfunction!(prove, m)?)?;
    m.add_function(wrap_pyfunction!(check_proof, m)?)?;
    m.add_function(wrap_pyfunction!(omega_fn, m)?)?;
    Ok(())
}
