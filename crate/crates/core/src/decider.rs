//! The decision procedure: a positive sweep over near-unanimity arities
//! interleaved with the negative certificate searches.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::certificates::chain::{search_chain, ChainSearch};
use crate::certificates::pool::{DerivationPool, PoolCaps, PoolEntry};
use crate::certificates::{
    chain_certificate, chain_links, equation_certificate, verify_certificate, witness_certificate,
    Certificate,
};
use crate::error::{Error, Result};
use crate::essential::is_essential;
use crate::formula::{Atom, PPFormula};
use crate::indicator::census;
use crate::nuf::{nuf_exists_with, verify_nuf, NufOutcome, NufTable};
use crate::relation::{const_relation, tuple_space, Relation, Structure, MAX_TUPLES};
use crate::solver::Budget;

/// `(k·q)^(2^{2k²}+2)`, kept symbolic since it is astronomically large for
/// every `k > 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bound {
    pub base: usize,
    pub exponent: BigUint,
}

/// Exact values are produced only below this many bits.
const MAX_EXACT_BITS: f64 = (1u64 << 26) as f64;

impl Bound {
    pub fn log2(&self) -> f64 {
        self.exponent.to_f64().unwrap_or(f64::INFINITY) * (self.base as f64).log2()
    }

    /// The exact integer, when it has at most 2^26 bits.
    pub fn value(&self) -> Option<BigUint> {
        if self.log2() > MAX_EXACT_BITS {
            return None;
        }
        let e = self.exponent.to_u32()?;
        Some(BigUint::from(self.base).pow(e))
    }

    pub fn report(&self) -> BoundReport {
        BoundReport {
            base: self.base,
            exponent: self.exponent.to_string(),
            log2: self.log2(),
            value: self.value().filter(|_| self.log2() <= 4096.0).map(|v| v.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub base: usize,
    pub exponent: String,
    pub log2: f64,
    /// Decimal digits, only for values of at most 4096 bits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

/// The arity at which checking for a near-unanimity polymorphism decides
/// the question for every structure over `E_k` of maximum arity `q`.
pub fn bound(k: usize, q: usize) -> Result<Bound> {
    if k < 2 || q < 1 {
        return Err(Error::InvalidArgument(format!("bound needs k ≥ 2 and q ≥ 1, got k={k}, q={q}")));
    }
    let exponent = (BigUint::from(1u8) << (2 * k * k)) + 2u8;
    Ok(Bound { base: k * q, exponent })
}

/// `G` with every singleton unary `{a}` appended under the name `const:a`,
/// unless `G` already holds an equal relation.
pub fn augment_sr(g: &Structure) -> Structure {
    let mut out = g.clone();
    for a in 0..g.k() {
        let single = const_relation(g.k(), a).expect("a < k");
        if !g.relations().iter().any(|r| r.relation == single) {
            out.add_builtin(format!("const:{a}"), single).expect("builtin names are unused");
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    /// Node limit for each solver call and each negative step.
    pub nodes: u64,
    /// Checked between steps; `None` for no limit.
    pub wall_clock: Option<Duration>,
    pub pool: PoolCapsConfig,
    pub max_arity: usize,
    pub max_chain_len: usize,
    /// Census arities used by the crosscheck.
    pub census_window: usize,
    pub threads: usize,
}

/// Serializable mirror of [`PoolCaps`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolCapsConfig {
    pub max_atoms: usize,
    pub max_vars: usize,
    pub max_arity: usize,
}

impl From<PoolCapsConfig> for PoolCaps {
    fn from(c: PoolCapsConfig) -> PoolCaps {
        PoolCaps { max_atoms: c.max_atoms, max_vars: c.max_vars, max_arity: c.max_arity }
    }
}

impl Budgets {
    pub fn for_domain(k: usize) -> Self {
        let caps = PoolCaps::default();
        Budgets {
            nodes: 10_000_000,
            wall_clock: None,
            pool: PoolCapsConfig { max_atoms: caps.max_atoms, max_vars: caps.max_vars, max_arity: caps.max_arity },
            max_arity: match k {
                2 => 6,
                3 => 4,
                _ => 3,
            },
            max_chain_len: 64,
            census_window: if k == 2 { 4 } else { 2 },
            threads: 1,
        }
    }

    /// Every limit set to zero: nothing is searched.
    pub fn none(k: usize) -> Self {
        Budgets {
            nodes: 0,
            max_arity: 2,
            max_chain_len: 0,
            ..Self::for_domain(k)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    Yes { arity: usize, table: NufTable },
    No { certificate: Certificate },
    Unknown {
        bound: BoundReport,
        nodes_used: u64,
        max_arity_tried: usize,
        census_window: usize,
        pool_level: usize,
        chain_len_searched: usize,
        note: String,
    },
}

impl Verdict {
    pub fn is_decided(&self) -> bool {
        !matches!(self, Verdict::Unknown { .. })
    }
}

/// Same relations, duplicates by value removed, ordered by value, so the
/// search does not depend on how `G` was written down.
fn normalize(g: &Structure) -> Structure {
    let mut rels: Vec<_> = g.relations().to_vec();
    rels.sort_by(|a, b| a.relation.cmp(&b.relation).then_with(|| a.name.cmp(&b.name)));
    rels.dedup_by(|b, a| a.relation == b.relation);
    let mut out = Structure::new(g.k()).expect("k already validated");
    for r in rels {
        out.add_builtin(r.name, r.relation).expect("names are distinct");
    }
    out
}

/// `ρ_0(y) = ∃x̄ ρ(y,y,x̄)` as a formula, from a formula for `ρ`.
fn loop_domain_formula(f: &PPFormula) -> PPFormula {
    let mut bound = f.bound.clone();
    bound.extend(f.free[1..].iter().cloned());
    let mut atoms = f.atoms.clone();
    atoms.push(Atom::new("=", [f.free[0].clone(), f.free[1].clone()]));
    PPFormula { free: vec![f.free[0].clone()], bound, atoms }
}

fn full_domain_formula() -> PPFormula {
    PPFormula::new(["x"], Vec::<String>::new(), vec![Atom::new("=", ["x", "x"])])
}

/// Negative side as a resumable sequence of steps.
struct NegativeSearch {
    pool: DerivationPool,
    g_aug: Structure,
    tested: usize,
    /// Pool level the chain search last ran on.
    chain_level: usize,
    chain_len: usize,
}

enum Step {
    Found(Certificate),
    Progress,
    Done,
}

impl NegativeSearch {
    fn new(g: &Structure, caps: PoolCaps) -> Self {
        let g_aug = augment_sr(g);
        NegativeSearch {
            pool: DerivationPool::new(&g_aug, caps),
            g_aug,
            tested: 0,
            chain_level: 0,
            chain_len: 0,
        }
    }

    fn domains(&self, entry: &PoolEntry) -> Vec<(PPFormula, Relation)> {
        let mut out: Vec<(PPFormula, Relation)> = Vec::new();
        let mut push = |f: PPFormula, r: Relation| {
            if !r.is_empty() && !out.iter().any(|(_, s)| *s == r) {
                out.push((f, r));
            }
        };
        push(full_domain_formula(), Relation::full(self.g_aug.k(), 1).expect("k valid"));
        let f0 = loop_domain_formula(&entry.formula);
        if let Ok(r0) = crate::formula::eval_pp(&f0, &self.g_aug) {
            push(f0, r0);
        }
        for u in self.pool.of_arity(1) {
            push(u.formula.clone(), u.relation.clone());
        }
        out
    }

    /// Tests pool entries added since the last call.
    fn test_new_entries(&mut self, budget: &Budget) -> Option<Certificate> {
        while self.tested < self.pool.entries().len() {
            let entry = self.pool.entries()[self.tested].clone();
            self.tested += 1;
            if entry.relation.arity() < 2 {
                continue;
            }
            if !budget.tick() {
                self.tested -= 1;
                return None;
            }
            if let Some(cert) = equation_certificate(&entry.formula, &entry.relation) {
                return Some(cert);
            }
            for (df, d) in self.domains(&entry) {
                if let Some(cert) = witness_certificate(&entry.formula, &entry.relation, &df, &d) {
                    return Some(cert);
                }
            }
        }
        None
    }

    /// One unit of work: pending entry tests, else a chain search over the
    /// newest complete pool level, else one more pool level.
    fn step(&mut self, budget: &Budget, max_chain_len: usize) -> Step {
        if let Some(cert) = self.test_new_entries(budget) {
            return Step::Found(cert);
        }
        if budget.exhausted() {
            return Step::Progress;
        }
        let level = self.pool.level();
        if self.chain_level < level {
            let (binaries, ternaries) = chain_links(&self.pool);
            match search_chain(&binaries, &ternaries, self.g_aug.k(), max_chain_len, budget) {
                ChainSearch::Found(chain, tuple) => {
                    self.chain_level = level;
                    self.chain_len = max_chain_len;
                    if let Some(cert) = chain_certificate(&chain, &tuple) {
                        return Step::Found(cert);
                    }
                }
                ChainSearch::NotFound => {
                    self.chain_level = level;
                    self.chain_len = max_chain_len;
                }
                // a larger pool gets its own attempt; the last level is retried
                ChainSearch::Unknown if !self.pool.is_complete() => self.chain_level = level,
                ChainSearch::Unknown => {}
            }
            return Step::Progress;
        }
        if !self.pool.is_complete() {
            self.pool.grow(budget);
            return match self.test_new_entries(budget) {
                Some(cert) => Step::Found(cert),
                None => Step::Progress,
            };
        }
        Step::Done
    }
}

/// Runs the positive and negative searches round-robin, one budget slice
/// each, until either produces a verified answer or both run dry.
pub fn decide(g: &Structure, b: &Budgets) -> Result<Verdict> {
    let start = Instant::now();
    let norm = normalize(g);
    let k = g.k();
    let mut nodes_used = 0u64;
    let mut max_arity_tried = 0;
    let mut next_arity = 3;
    let mut negative = NegativeSearch::new(&norm, b.pool.into());
    let mut negative_done = b.nodes == 0;
    let mut stalls = 0;
    let out_of_time = || b.wall_clock.is_some_and(|limit| start.elapsed() >= limit);

    loop {
        let positive_left = next_arity <= b.max_arity
            && b.nodes > 0
            && tuple_space(k, next_arity, MAX_TUPLES).is_ok();
        if (!positive_left && negative_done) || out_of_time() {
            break;
        }
        if positive_left {
            let budget = Budget::new(b.nodes);
            let outcome = nuf_exists_with(&norm, next_arity, &budget, b.threads)?;
            nodes_used += budget.used();
            max_arity_tried = next_arity;
            next_arity += 1;
            if let NufOutcome::Found(table) = outcome {
                if !verify_nuf(&table, g)? {
                    return Err(Error::Hypothesis("search produced a table that fails verification".into()));
                }
                return Ok(Verdict::Yes { arity: table.n, table });
            }
        }
        if !negative_done && !out_of_time() {
            let budget = Budget::new(b.nodes);
            let step = negative.step(&budget, b.max_chain_len);
            nodes_used += budget.used();
            match step {
                Step::Found(cert) => {
                    if !verify_certificate(g, &cert) {
                        return Err(Error::Hypothesis(format!(
                            "search produced a {} certificate that fails verification",
                            cert.variant_name()
                        )));
                    }
                    return Ok(Verdict::No { certificate: cert });
                }
                Step::Done => negative_done = true,
                Step::Progress => {
                    // a slice that cannot finish one unit of work never will
                    if budget.exhausted() && !positive_left {
                        stalls += 1;
                        if stalls > 2 {
                            negative_done = true;
                        }
                    }
                }
            }
        }
    }
    let bound = bound(k, g.max_arity().max(1))?;
    Ok(Verdict::Unknown {
        note: format!(
            "no verdict within budget; a search at arity 2^{:.1} would decide in principle",
            bound.log2().log2()
        ),
        bound: bound.report(),
        nodes_used,
        max_arity_tried,
        census_window: b.census_window,
        pool_level: negative.pool.level(),
        chain_len_searched: negative.chain_len,
    })
}

/// The negative side alone, run until it finds a certificate or has nothing
/// left to try. Each step gets a fresh slice of `b.nodes`.
pub fn search_certificate(g: &Structure, b: &Budgets) -> Option<Certificate> {
    let mut negative = NegativeSearch::new(&normalize(g), b.pool.into());
    let mut stalls = 0;
    loop {
        let budget = Budget::new(b.nodes);
        match negative.step(&budget, b.max_chain_len) {
            Step::Found(cert) => return Some(cert),
            Step::Done => return None,
            Step::Progress if budget.exhausted() => {
                stalls += 1;
                if stalls > 2 {
                    return None;
                }
            }
            Step::Progress => {}
        }
    }
}

/// The literal procedure: one search at the bound arity. Refused unless
/// `acknowledged`; even then it only runs when the table fits in memory,
/// which no nontrivial input allows.
pub fn decide_exhaustive(g: &Structure, budget: &Budget, acknowledged: bool) -> Result<Verdict> {
    if !acknowledged {
        return Err(Error::InvalidArgument(
            "the exhaustive procedure needs an explicit acknowledgment".into(),
        ));
    }
    let b = bound(g.k(), g.max_arity().max(1))?;
    let n = b
        .value()
        .and_then(|v| v.to_usize())
        .filter(|&n| tuple_space(g.k(), n, MAX_TUPLES).is_ok())
        .ok_or(Error::TooLarge { k: g.k(), arity: usize::MAX, cap: MAX_TUPLES })?;
    match nuf_exists_with(g, n, budget, 1)? {
        NufOutcome::Found(table) => Ok(Verdict::Yes { arity: n, table }),
        other => Err(Error::InvalidArgument(format!("search at the bound arity ended with {other:?}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crosscheck {
    /// `(m, number of m-ary members, number of them essential)`.
    pub census: Vec<(usize, usize, usize)>,
    pub census_partial: bool,
    /// `(n, "found" | "none" | "unknown")`.
    pub nuf: Vec<(usize, String)>,
    pub violations: Vec<String>,
}

impl Crosscheck {
    pub fn consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compares near-unanimity arities with essential arities inside the given
/// windows: an `n+1`-ary near-unanimity polymorphism exists exactly when
/// every essential member of `[G]` has arity at most `n`.
pub fn arity_crosscheck(g: &Structure, n_window: usize, m_window: usize, budget: &Budget) -> Result<Crosscheck> {
    let mut report = Crosscheck { census: Vec::new(), census_partial: false, nuf: Vec::new(), violations: Vec::new() };
    let mut essential_arities = Vec::new();
    for m in 1..=m_window {
        let c = census(g, m, budget)?;
        report.census_partial |= c.partial;
        let ess = c.relations.iter().filter(|r| is_essential(r)).count();
        if ess > 0 {
            essential_arities.push(m);
        }
        report.census.push((m, c.relations.len(), ess));
    }
    let max_essential = essential_arities.iter().copied().max();
    let mut first_found = None;
    for n in 3..=n_window {
        let outcome = nuf_exists_with(g, n, budget, 1)?;
        let label = match &outcome {
            NufOutcome::Found(f) => {
                if !verify_nuf(f, g)? {
                    report.violations.push(format!("table of arity {n} fails verification"));
                }
                first_found.get_or_insert(n);
                "found"
            }
            NufOutcome::NotExists => {
                if let Some(f) = first_found {
                    report.violations.push(format!("arity {f} has a polymorphism but arity {n} has none"));
                }
                "none"
            }
            NufOutcome::Unknown => "unknown",
        };
        report.nuf.push((n, label.to_string()));
        if let (NufOutcome::Found(_), Some(e)) = (&outcome, max_essential) {
            if e > n - 1 {
                report.violations.push(format!(
                    "polymorphism of arity {n} exists but [G] has an essential member of arity {e}"
                ));
            }
        }
    }
    Ok(report)
}
