//! Sequents, ω-sequents, hypersequents, norms, orders, and the ω-function.
//!
//! Every sequent past the parser is represented as an [`OmegaSequent`]; plain
//! sequents are the ω-free case `Ω = ∅`. The antecedent is a multiplicity
//! vector over the ambient subformula table and the stoup is an index in
//! `0..=d` (`0` = empty stoup). The ω-set `Ω` collects the indices of
//! formulas treated as having unbounded antecedent multiplicity; it is kept
//! disjoint from the support of the vector.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{parse, Formula, SubformulaTable, SyntaxError};

/// Index out of the table range `1..=d`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("index {index} out of range 1..={d}")]
pub struct IndexOutOfRange {
    pub index: usize,
    pub d: usize,
}

/// A precondition of an operation does not hold.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("precondition violated: {0}")]
pub struct PreconditionViolated(pub String);

/// An ω-sequent `(Ω; x) ⇒ b`.
///
/// The derived `Ord` is the canonical order used for multiset
/// canonicalization: lexicographic on `(b, Ω, x)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OmegaSequent {
    /// Stoup: `0` for empty, else the succedent formula's table index.
    pub b: usize,
    /// ω-set: indices with unbounded antecedent multiplicity.
    pub omega: BTreeSet<usize>,
    /// Antecedent multiplicities, length `d`.
    pub x: Vec<u32>,
}

impl OmegaSequent {
    /// An ω-free sequent with antecedent `x` and stoup `b`.
    pub fn plain(x: Vec<u32>, b: usize) -> OmegaSequent {
        OmegaSequent {
            b,
            omega: BTreeSet::new(),
            x,
        }
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    pub fn is_omega_free(&self) -> bool {
        self.omega.is_empty()
    }

    /// Disjointness invariant: `Ω ∩ supp(x) = ∅`.
    pub fn is_disjoint(&self) -> bool {
        self.omega.iter().all(|&i| self.x[i - 1] == 0)
    }

    /// Max antecedent multiplicity (the ω-set is ignored).
    pub fn norm(&self) -> u32 {
        self.x.iter().copied().max().unwrap_or(0)
    }

    /// Adds one occurrence of formula `a` to the antecedent; a no-op when
    /// `a` is already an ω-formula.
    pub fn add_formula(&self, a: usize) -> Result<OmegaSequent, IndexOutOfRange> {
        if a == 0 || a > self.d() {
            return Err(IndexOutOfRange {
                index: a,
                d: self.d(),
            });
        }
        let mut out = self.clone();
        if !out.omega.contains(&a) {
            out.x[a - 1] += 1;
        }
        Ok(out)
    }

    /// Adds a whole multiset of formulas (pointwise `add_formula`).
    pub fn add_vector(&self, v: &[u32]) -> OmegaSequent {
        let mut out = self.clone();
        for (i, &n) in v.iter().enumerate() {
            if n > 0 && !out.omega.contains(&(i + 1)) {
                out.x[i] += n;
            }
        }
        out
    }

    /// `(∅; x[Ω↦k]) ⇒ b`: materializes every ω-formula at multiplicity `k`.
    pub fn assign_k(&self, k: u32) -> OmegaSequent {
        let mut x = self.x.clone();
        for &i in &self.omega {
            x[i - 1] = k;
        }
        OmegaSequent::plain(x, self.b)
    }

    /// Renders as `{f1,f2}; A,B => C` (ω-set braces omitted when empty).
    pub fn display(&self, tbl: &SubformulaTable) -> String {
        let mut s = String::new();
        if !self.omega.is_empty() {
            s.push('{');
            for (k, &i) in self.omega.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{}", tbl.formula(i));
            }
            s.push_str("}; ");
        }
        let mut first = true;
        for (i, &n) in self.x.iter().enumerate() {
            for _ in 0..n {
                if !first {
                    s.push_str(", ");
                }
                let _ = write!(s, "{}", tbl.formula(i + 1));
                first = false;
            }
        }
        if first {
            s.push_str("=>");
        } else {
            s.push_str(" =>");
        }
        if self.b != 0 {
            let _ = write!(s, " {}", tbl.formula(self.b));
        }
        s
    }
}

/// `x[κ↦k]`: sets the coordinates in `κ` to `k`.
pub fn set_coords(x: &[u32], kappa: &BTreeSet<usize>, k: u32) -> Vec<u32> {
    let mut out = x.to_vec();
    for &i in kappa {
        out[i - 1] = k;
    }
    out
}

/// `≤_S`: same stoup and componentwise antecedent order (ω-free sequents).
pub fn leq_s(s: &OmegaSequent, t: &OmegaSequent) -> bool {
    s.b == t.b && s.x.iter().zip(&t.x).all(|(a, b)| a <= b)
}

/// The strict order `≺` with ω-dominance: `Ω_s ⊆ Ω_t`, equal stoups, and on
/// coordinates outside `Ω_t` the antecedent of `s` is ≤ that of `t` with
/// strict inequality somewhere (ω-coordinates of `t` dominate every finite
/// value).
pub fn strictly_below(s: &OmegaSequent, t: &OmegaSequent) -> bool {
    if s.b != t.b || !s.omega.is_subset(&t.omega) {
        return false;
    }
    let mut strict = false;
    for i in 1..=s.d() {
        if t.omega.contains(&i) {
            // t has ω here: dominates any finite multiplicity of s. If s
            // also has ω here the coordinate is equal-infinite; since
            // Ω_s ⊆ Ω_t, growth in the ω-set alone never counts as strict.
            continue;
        }
        // i outside Ω_t, hence (disjointness, Ω_s ⊆ Ω_t) outside Ω_s too.
        if s.x[i - 1] > t.x[i - 1] {
            return false;
        }
        if s.x[i - 1] < t.x[i - 1] {
            strict = true;
        }
    }
    strict
}

/// `⪯_{W(ω,d)}`: equal ω-sets, equal stoups, componentwise antecedents
/// (component indices are ignored by the order).
pub fn leq_womega(s: &OmegaSequent, t: &OmegaSequent) -> bool {
    s.omega == t.omega && s.b == t.b && s.x.iter().zip(&t.x).all(|(a, b)| a <= b)
}

/// The ω-function: promotes the strictly grown coordinates of `t` over `s`
/// into the ω-set. Requires `strictly_below(s, t)`.
pub fn omega_fn(s: &OmegaSequent, t: &OmegaSequent) -> Result<OmegaSequent, PreconditionViolated> {
    if !strictly_below(s, t) {
        return Err(PreconditionViolated(
            "omega_fn requires strictly_below(s, t)".to_string(),
        ));
    }
    let kappa: BTreeSet<usize> = (1..=t.d())
        .filter(|i| !t.omega.contains(i) && s.x[i - 1] < t.x[i - 1])
        .collect();
    let mut omega = t.omega.clone();
    omega.extend(kappa.iter().copied());
    Ok(OmegaSequent {
        b: t.b,
        omega,
        x: set_coords(&t.x, &kappa, 0),
    })
}

/// The grown coordinate set `κ` of a refinement (as used by `omega_fn`).
pub fn omega_kappa(s: &OmegaSequent, t: &OmegaSequent) -> BTreeSet<usize> {
    (1..=t.d())
        .filter(|i| !t.omega.contains(i) && s.x[i - 1] < t.x[i - 1])
        .collect()
}

/// Whether `t` is an ω-extension of `s`: equal stoups, `Ω_s ⊆ Ω_t`, and the
/// antecedent of `t` is that of `s` with the new ω-coordinates zeroed.
pub fn is_omega_extension(s: &OmegaSequent, t: &OmegaSequent) -> bool {
    if s.b != t.b || !s.omega.is_subset(&t.omega) {
        return false;
    }
    let fresh: BTreeSet<usize> = t.omega.difference(&s.omega).copied().collect();
    t.x == set_coords(&s.x, &fresh, 0)
}

/// A hypersequent: a multiset of ω-sequents, kept in canonical sorted order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Hypersequent {
    components: Vec<OmegaSequent>,
}

impl Hypersequent {
    pub fn new(mut components: Vec<OmegaSequent>) -> Hypersequent {
        components.sort();
        Hypersequent { components }
    }

    pub fn components(&self) -> &[OmegaSequent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Multiset union with further components.
    pub fn extend_with(&self, extra: &[OmegaSequent]) -> Hypersequent {
        let mut cs = self.components.clone();
        cs.extend(extra.iter().cloned());
        Hypersequent::new(cs)
    }

    /// No repeated component.
    pub fn is_irredundant(&self) -> bool {
        self.components.windows(2).all(|w| w[0] != w[1])
    }

    pub fn contains(&self, s: &OmegaSequent) -> bool {
        self.components.binary_search(s).is_ok()
    }

    /// Max component norm; `0` for the empty hypersequent.
    pub fn norm(&self) -> u32 {
        self.components.iter().map(|c| c.norm()).max().unwrap_or(0)
    }

    pub fn is_omega_free(&self) -> bool {
        self.components.iter().all(|c| c.is_omega_free())
    }

    /// `h[K]`: K-assignment of every component.
    pub fn assign_k(&self, k: u32) -> Hypersequent {
        Hypersequent::new(self.components.iter().map(|c| c.assign_k(k)).collect())
    }

    pub fn display(&self, tbl: &SubformulaTable) -> String {
        self.components
            .iter()
            .map(|c| c.display(tbl))
            .collect::<Vec<_>>()
            .join(" | ")
    }
}

/// Whether appending `new` keeps a history bad: no earlier element is below
/// it under the chosen order.
pub fn is_bad_extension(
    history: &[OmegaSequent],
    new: &OmegaSequent,
    order: fn(&OmegaSequent, &OmegaSequent) -> bool,
) -> bool {
    history.iter().all(|old| !order(old, new))
}

/// An indexed component of a RIN hypersequent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedComponent {
    pub index: usize,
    pub seq: OmegaSequent,
}

/// An indexed ω-hypersequent with a dependency relation whose
/// reflexive-transitive closure is a rooted tree (minimal indices attach to
/// a virtual root). `rel` maps each non-root index to its unique parent;
/// edges go from smaller to strictly larger index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RinHypersequent {
    /// Components in increasing index order; indices are unique.
    pub components: Vec<IndexedComponent>,
    /// `rel[child] = parent` with `parent < child`.
    pub rel: std::collections::BTreeMap<usize, usize>,
}

impl RinHypersequent {
    /// Canonical root: components indexed `0..n` in canonical order, empty
    /// relation.
    pub fn root(h: &Hypersequent) -> RinHypersequent {
        RinHypersequent {
            components: h
                .components()
                .iter()
                .enumerate()
                .map(|(i, c)| IndexedComponent {
                    index: i,
                    seq: c.clone(),
                })
                .collect(),
            rel: std::collections::BTreeMap::new(),
        }
    }

    /// The support: the plain multiset of component sequents.
    pub fn support(&self) -> Hypersequent {
        Hypersequent::new(self.components.iter().map(|c| c.seq.clone()).collect())
    }

    pub fn max_index(&self) -> usize {
        self.components.iter().map(|c| c.index).max().unwrap_or(0)
    }

    pub fn get(&self, index: usize) -> Option<&IndexedComponent> {
        self.components.iter().find(|c| c.index == index)
    }

    /// Ancestors of `index` under `rel*`, nearest first (excluding `index`).
    pub fn ancestors(&self, index: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = index;
        while let Some(&p) = self.rel.get(&cur) {
            out.push(p);
            cur = p;
        }
        out
    }

    /// The rel-path from the virtual root to `index`, inclusive.
    pub fn path_to(&self, index: usize) -> Vec<usize> {
        let mut p = self.ancestors(index);
        p.reverse();
        p.push(index);
        p
    }

    /// Checks the rooted-tree shape: every rel edge goes from a present
    /// smaller index to a present strictly larger index, and every non-root
    /// component has at most one parent (guaranteed by the map shape).
    pub fn is_tree(&self) -> bool {
        self.rel.iter().all(|(&child, &parent)| {
            parent < child && self.get(child).is_some() && self.get(parent).is_some()
        })
    }
}

/// The control function `f(x) = fm²·acn²·x + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlFunction {
    pub fm: u32,
    pub acn: u32,
}

impl ControlFunction {
    pub fn apply(&self, x: u32) -> u32 {
        self.fm * self.fm * self.acn * self.acn * x + 1
    }
}

/// One component of hypersequent concrete syntax, still at the formula level
/// (used before the subformula table exists).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawComponent {
    pub omega: Vec<Formula>,
    pub antecedent: Vec<Formula>,
    pub stoup: Option<Formula>,
}

impl RawComponent {
    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.omega
            .iter()
            .chain(self.antecedent.iter())
            .chain(self.stoup.iter())
    }

    /// Resolves against a table covering all mentioned formulas.
    pub fn resolve(&self, tbl: &SubformulaTable) -> OmegaSequent {
        let mut x = vec![0u32; tbl.d()];
        for f in &self.antecedent {
            x[tbl.index_of(f).expect("table covers component") - 1] += 1;
        }
        let omega: BTreeSet<usize> = self
            .omega
            .iter()
            .map(|f| tbl.index_of(f).expect("table covers component"))
            .collect();
        let b = self
            .stoup
            .as_ref()
            .map(|f| tbl.index_of(f).expect("table covers component"))
            .unwrap_or(0);
        OmegaSequent { b, omega, x }
    }
}

/// Parses hypersequent concrete syntax: components joined by `|`, each
/// either a bare formula `φ` (read as the sequent `⇒ φ`) or
/// `[{f1,f2};] A, B => C` with optional ω-set braces and optional succedent.
pub fn parse_hypersequent(text: &str) -> Result<Vec<RawComponent>, SyntaxError> {
    let mut out = Vec::new();
    let mut offset = 0usize;
    for part in text.split('|') {
        let comp = parse_component(part, offset)?;
        out.push(comp);
        offset += part.len() + 1;
    }
    Ok(out)
}

fn parse_component(part: &str, offset: usize) -> Result<RawComponent, SyntaxError> {
    let at = |pos: usize, message: &str| SyntaxError {
        position: offset + pos,
        message: message.to_string(),
    };
    let mut rest = part;
    let mut omega = Vec::new();
    let trimmed_start = part.len() - part.trim_start().len();
    if rest.trim_start().starts_with('{') {
        let open = rest.find('{').unwrap();
        let close = rest
            .find('}')
            .ok_or_else(|| at(trimmed_start, "unterminated ω-set brace"))?;
        let inner = &rest[open + 1..close];
        for f in inner.split(',') {
            if f.trim().is_empty() {
                continue;
            }
            omega.push(parse(f).map_err(|e| at(open + 1 + e.position, &e.message))?);
        }
        let after = &rest[close + 1..];
        let semi = after
            .find(';')
            .ok_or_else(|| at(close + 1, "expected ';' after ω-set"))?;
        rest = &after[semi + 1..];
    }
    if let Some(arrow) = rest.find("=>") {
        let (ant_text, succ_text) = (&rest[..arrow], &rest[arrow + 2..]);
        let mut antecedent = Vec::new();
        if !ant_text.trim().is_empty() {
            for f in ant_text.split(',') {
                antecedent.push(parse(f).map_err(|e| at(e.position, &e.message))?);
            }
        }
        let stoup = if succ_text.trim().is_empty() {
            None
        } else {
            Some(parse(succ_text).map_err(|e| at(arrow + 2 + e.position, &e.message))?)
        };
        Ok(RawComponent {
            omega,
            antecedent,
            stoup,
        })
    } else {
        // A bare formula is the goal sequent ⇒ φ.
        let stoup = parse(rest).map_err(|e| at(e.position, &e.message))?;
        Ok(RawComponent {
            omega,
            antecedent: Vec::new(),
            stoup: Some(stoup),
        })
    }
}
