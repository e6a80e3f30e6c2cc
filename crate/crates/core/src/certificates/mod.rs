//! Negative certificates. Each variant shows that `[G ∪ SR_k]` contains
//! essential relations of unbounded arity, which rules out every
//! near-unanimity polymorphism. Every relation a certificate relies on is
//! given by an explicit pp-formula, so checking one needs nothing but
//! formula evaluation and the combinatorial conditions below.

pub mod chain;
pub mod equation;
pub mod pool;
pub mod witness;

use serde::{Deserialize, Serialize};

use crate::decider::augment_sr;
use crate::essential::EssentialTuple;
use crate::formula::{eval_pp, PPFormula};
use crate::relation::{for_each_tuple, Elem, Relation, Structure};
use crate::solver::Budget;

use chain::{chain_states, pumps_stay_essential, Chain, ChainLink, ChainSearch, ChainState};
use equation::{left_side, loop_domain, right_side, EquationCheck};
use pool::{DerivationPool, PoolCaps};
use witness::{cycle_witness, loops_somewhere, reach_sequence, sequence_witness};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum Certificate {
    /// `formula` defines `ρ'`; both sides of the main equation differ at
    /// `witness`, the lexicographically smallest such tail.
    EquationFailure { formula: PPFormula, witness: Vec<Elem> },
    /// `formula` defines `ρ`, `domain_formula` the unary `C`. `alpha` is the
    /// smallest tail admitting a cycle and `cycle` the canonical one.
    CycleWitness {
        formula: PPFormula,
        domain: Vec<Elem>,
        domain_formula: PPFormula,
        alpha: Vec<Elem>,
        cycle: Vec<Elem>,
    },
    /// As above, with a reachability sequence from `start` that never
    /// settles. `alpha` and `start` are the smallest that work.
    SequenceWitness {
        formula: PPFormula,
        domain: Vec<Elem>,
        domain_formula: PPFormula,
        alpha: Vec<Elem>,
        start: Elem,
        preperiod: usize,
        period: usize,
    },
    /// An essential chain whose states first repeat at positions `p < q`.
    ChainPump {
        formula: PPFormula,
        links: Vec<ChainLink>,
        tuple: EssentialTuple,
        p: usize,
        q: usize,
    },
    /// An essential chain longer than `2^{2k²} + 2`.
    LongEssentialChain {
        formula: PPFormula,
        links: Vec<ChainLink>,
        tuple: EssentialTuple,
    },
}

impl Certificate {
    pub fn formula(&self) -> &PPFormula {
        match self {
            Certificate::EquationFailure { formula, .. }
            | Certificate::CycleWitness { formula, .. }
            | Certificate::SequenceWitness { formula, .. }
            | Certificate::ChainPump { formula, .. }
            | Certificate::LongEssentialChain { formula, .. } => formula,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Certificate::EquationFailure { .. } => "EquationFailure",
            Certificate::CycleWitness { .. } => "CycleWitness",
            Certificate::SequenceWitness { .. } => "SequenceWitness",
            Certificate::ChainPump { .. } => "ChainPump",
            Certificate::LongEssentialChain { .. } => "LongEssentialChain",
        }
    }
}

/// Chains longer than this are essential only in co-clones with infinitely
/// many essential relations. `None` when the value does not fit a `usize`.
pub fn long_chain_threshold(k: usize) -> Option<usize> {
    let exp = 2 * k * k;
    1usize.checked_shl(exp as u32).filter(|_| exp < usize::BITS as usize).map(|v| v + 2)
}

/// Equation failure for `rho`, which `formula` defines.
pub fn equation_certificate(formula: &PPFormula, rho: &Relation) -> Option<Certificate> {
    match equation::equation_holds(rho).ok()? {
        EquationCheck::Holds => None,
        EquationCheck::Fails(witness) => Some(Certificate::EquationFailure {
            formula: formula.clone(),
            witness,
        }),
    }
}

fn members(unary: &Relation) -> Vec<Elem> {
    unary.tuples().map(|t| t[0]).collect()
}

/// Smallest tail with a cycle or a non-settling sequence over `domain`.
pub fn witness_certificate(
    formula: &PPFormula,
    rho: &Relation,
    domain_formula: &PPFormula,
    domain: &Relation,
) -> Option<Certificate> {
    if rho.arity() < 2 || domain.arity() != 1 || domain.is_empty() {
        return None;
    }
    let c = members(domain);
    if !loops_somewhere(rho, &c) {
        return None;
    }
    let mut found = None;
    for_each_tuple(rho.k(), rho.arity() - 2, |_, alpha| {
        if found.is_some() {
            return;
        }
        if let Ok(Some(cycle)) = cycle_witness(rho, &c, alpha) {
            found = Some(Certificate::CycleWitness {
                formula: formula.clone(),
                domain: c.clone(),
                domain_formula: domain_formula.clone(),
                alpha: alpha.to_vec(),
                cycle,
            });
            return;
        }
        for &start in &c {
            if let Ok(Some(ev)) = sequence_witness(rho, &c, start, alpha) {
                found = Some(Certificate::SequenceWitness {
                    formula: formula.clone(),
                    domain: c.clone(),
                    domain_formula: domain_formula.clone(),
                    alpha: alpha.to_vec(),
                    start,
                    preperiod: ev.preperiod,
                    period: ev.period,
                });
                return;
            }
        }
    });
    found
}

/// First `(p, q)` with equal states, ordered by `q`.
fn first_repeat(states: &[ChainState]) -> Option<(usize, usize)> {
    for (j, sq) in states.iter().enumerate() {
        if let Some(sp) = states[..j].iter().find(|sp| sp.d == sq.d && sp.f == sq.f) {
            return Some((sp.m, sq.m));
        }
    }
    None
}

/// Turns an essential chain into a certificate: pumping at the first
/// repeated state, or length alone when the chain is long enough.
pub fn chain_certificate(chain: &Chain, tuple: &EssentialTuple) -> Option<Certificate> {
    let states = chain_states(chain, tuple).ok()?;
    if let Some((p, q)) = first_repeat(&states) {
        if pumps_stay_essential(chain, tuple, p, q) {
            return Some(Certificate::ChainPump {
                formula: chain.formula(),
                links: chain.links.clone(),
                tuple: tuple.clone(),
                p,
                q,
            });
        }
    }
    if long_chain_threshold(chain.k()).is_some_and(|t| chain.len() > t) {
        return Some(Certificate::LongEssentialChain {
            formula: chain.formula(),
            links: chain.links.clone(),
            tuple: tuple.clone(),
        });
    }
    None
}

/// Binary and ternary pool entries as candidate chain links.
pub fn chain_links(pool: &DerivationPool) -> (Vec<ChainLink>, Vec<ChainLink>) {
    let link = |e: &pool::PoolEntry| ChainLink { formula: e.formula.clone(), relation: e.relation.clone() };
    (pool.of_arity(2).map(link).collect(), pool.of_arity(3).map(link).collect())
}

/// Searches chains of length `3..=max_len` over links pp-derived from
/// `G ∪ SR_k` with the default pool caps.
pub fn find_essential_chain(g: &Structure, max_len: usize, budget: &Budget) -> ChainSearch {
    find_essential_chain_with(g, max_len, PoolCaps::default(), budget)
}

pub fn find_essential_chain_with(g: &Structure, max_len: usize, caps: PoolCaps, budget: &Budget) -> ChainSearch {
    let mut pool = DerivationPool::new(&augment_sr(g), caps);
    while !pool.is_complete() {
        if !pool.grow(budget) {
            return ChainSearch::Unknown;
        }
    }
    let (binaries, ternaries) = chain_links(&pool);
    chain::search_chain(&binaries, &ternaries, g.k(), max_len, budget)
}

/// Re-derives every condition of `cert` over `g`. Malformed input of any
/// kind yields `false`.
pub fn verify_certificate(g: &Structure, cert: &Certificate) -> bool {
    match cert {
        Certificate::EquationFailure { formula, witness } => verify_equation(g, formula, witness),
        Certificate::CycleWitness { formula, domain, domain_formula, alpha, cycle } => {
            let Some((rho, c)) = witness_inputs(g, formula, domain, domain_formula, alpha) else {
                return false;
            };
            let earlier_tails_fail = tails_before(rho.k(), alpha)
                .iter()
                .all(|a| matches!(cycle_witness(&rho, &c, a), Ok(None)));
            earlier_tails_fail && valid_cycle(&rho, &c, alpha, cycle)
        }
        Certificate::SequenceWitness { formula, domain, domain_formula, alpha, start, preperiod, period } => {
            let Some((rho, c)) = witness_inputs(g, formula, domain, domain_formula, alpha) else {
                return false;
            };
            if !c.contains(start) || !loops_somewhere(&rho, &c) {
                return false;
            }
            let settles = |a: &[Elem], s: Elem| matches!(sequence_witness(&rho, &c, s, a), Ok(None));
            let earlier_tails_fail = tails_before(rho.k(), alpha)
                .iter()
                .all(|a| c.iter().all(|&s| settles(a, s)));
            let earlier_starts_fail = c.iter().filter(|&&s| s < *start).all(|&s| settles(alpha, s));
            // the period is read off the sequence directly, not via the generator
            let seq = reach_sequence(&rho, &c, *start, alpha);
            let last = *seq.last().unwrap();
            let pre = seq.iter().position(|&s| s == last).unwrap();
            let per = seq.len() - 1 - pre;
            earlier_tails_fail && earlier_starts_fail && per > 1 && pre == *preperiod && per == *period
        }
        Certificate::ChainPump { formula, links, tuple, p, q } => {
            let Some(chain) = verify_chain(g, formula, links, tuple) else {
                return false;
            };
            let Ok(states) = chain_states(&chain, tuple) else {
                return false;
            };
            first_repeat(&states) == Some((*p, *q)) && pumps_stay_essential(&chain, tuple, *p, *q)
        }
        Certificate::LongEssentialChain { formula, links, tuple } => {
            let Some(chain) = verify_chain(g, formula, links, tuple) else {
                return false;
            };
            long_chain_threshold(chain.k()).is_some_and(|t| chain.len() > t)
        }
    }
}

fn verify_equation(g: &Structure, formula: &PPFormula, witness: &[Elem]) -> bool {
    let Ok(rho) = eval_pp(formula, g) else { return false };
    if rho.arity() < 2 || witness.len() != rho.arity() - 2 || witness.iter().any(|&v| v as usize >= rho.k()) {
        return false;
    }
    let Ok(c) = loop_domain(&rho) else { return false };
    let differs = |x: &[Elem]| left_side(&rho, x) != right_side(&rho, c, x);
    differs(witness) && tails_before(rho.k(), witness).iter().all(|x| !differs(x))
}

/// Tails of the same length lexicographically below `alpha`.
fn tails_before(k: usize, alpha: &[Elem]) -> Vec<Vec<Elem>> {
    let mut out = Vec::new();
    let mut done = false;
    for_each_tuple(k, alpha.len(), |_, t| {
        if t == alpha {
            done = true;
        }
        if !done {
            out.push(t.to_vec());
        }
    });
    out
}

fn witness_inputs(
    g: &Structure,
    formula: &PPFormula,
    domain: &[Elem],
    domain_formula: &PPFormula,
    alpha: &[Elem],
) -> Option<(Relation, Vec<Elem>)> {
    let rho = eval_pp(formula, g).ok()?;
    let unary = eval_pp(domain_formula, g).ok()?;
    if unary.arity() != 1 || members(&unary) != domain || domain.is_empty() {
        return None;
    }
    if rho.arity() != alpha.len() + 2 || alpha.iter().any(|&v| v as usize >= rho.k()) {
        return None;
    }
    Some((rho, domain.to_vec()))
}

fn valid_cycle(rho: &Relation, c: &[Elem], alpha: &[Elem], cycle: &[Elem]) -> bool {
    if cycle.len() < 3 || cycle.first() != cycle.last() || !cycle.iter().all(|v| c.contains(v)) {
        return false;
    }
    let edge = |d: Elem, e: Elem| {
        let mut t = vec![d, e];
        t.extend_from_slice(alpha);
        rho.contains(&t)
    };
    let closed = cycle.windows(2).all(|w| edge(w[0], w[1]));
    let no_loops = c.iter().all(|&d| !edge(d, d));
    closed && no_loops && loops_somewhere(rho, c) && cycle_witness(rho, c, alpha).ok().flatten().as_deref() == Some(cycle)
}

fn verify_chain(
    g: &Structure,
    formula: &PPFormula,
    links: &[ChainLink],
    tuple: &EssentialTuple,
) -> Option<Chain> {
    for link in links {
        if eval_pp(&link.formula, g).ok()? != link.relation {
            return None;
        }
    }
    let chain = Chain::new(links.to_vec()).ok()?;
    if chain.k() != g.k() || tuple.arity() != chain.len() || *formula != chain.formula() {
        return None;
    }
    if tuple.a.iter().chain(&tuple.b).any(|&v| v as usize >= chain.k()) || !chain.certifies(tuple) {
        return None;
    }
    Some(chain)
}
