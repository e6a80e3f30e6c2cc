//! Chain formulas
//! `ρ_1(x_1,y_1) ∧ ρ_2(y_1,x_2,y_2) ∧ … ∧ ρ_n(y_{n-1},x_n)` with every `y`
//! quantified, their reachability states, and pumping.
//!
//! Positions are 1-based throughout this module, matching the chain shape.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::essential::EssentialTuple;
use crate::formula::{Atom, PPFormula};
use crate::relation::{tuple_space, Elem, Relation, MAX_TUPLES};
use crate::solver::Budget;

/// Subset of `E_k` as a bit mask.
type Set = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainLink {
    pub formula: PPFormula,
    pub relation: Relation,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chain {
    pub links: Vec<ChainLink>,
}

/// Reachability relations `D_m` and `F_m` at one chain position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainState {
    pub m: usize,
    pub d: Relation,
    pub f: Relation,
}

/// Successor sets: `first[x]` holds the `y_1` allowed by `x_1 = x`,
/// `middle[i][y * k + x]` the next `y` from `y` under `x`, and `last[x]` the
/// accepting `y_{n-1}` for `x_n = x`.
#[derive(Clone, Debug)]
struct Tables {
    k: usize,
    first: Vec<Set>,
    middle: Vec<Vec<Set>>,
    last: Vec<Set>,
}

fn image(k: usize, succ: &[Set], from: Set, x: Elem) -> Set {
    let mut out = 0;
    let mut rest = from;
    while rest != 0 {
        let y = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        out |= succ[y * k + x as usize];
    }
    out
}

fn binary_rows(rel: &Relation, swap: bool) -> Vec<Set> {
    let k = rel.k();
    let mut rows = vec![0; k];
    for t in rel.tuples() {
        let (x, y) = if swap { (t[1], t[0]) } else { (t[0], t[1]) };
        rows[x as usize] |= 1 << y;
    }
    rows
}

fn ternary_table(rel: &Relation) -> Vec<Set> {
    let k = rel.k();
    let mut succ = vec![0; k * k];
    for t in rel.tuples() {
        succ[t[0] as usize * k + t[1] as usize] |= 1 << t[2];
    }
    succ
}

impl Chain {
    pub fn new(links: Vec<ChainLink>) -> Result<Self> {
        let chain = Chain { links };
        chain.check_shape()?;
        Ok(chain)
    }

    /// Binary first and last links, ternary middles, common `k`, `n ≥ 2`,
    /// formula arities matching their relations.
    pub fn check_shape(&self) -> Result<()> {
        let n = self.links.len();
        if n < 2 {
            return Err(Error::MalformedFormula(format!("chain of length {n} needs at least 2 links")));
        }
        let k = self.links[0].relation.k();
        for (i, link) in self.links.iter().enumerate() {
            let want = if i == 0 || i == n - 1 { 2 } else { 3 };
            if link.relation.arity() != want || link.formula.arity() != want {
                return Err(Error::MalformedFormula(format!(
                    "link {} must have arity {want}",
                    i + 1
                )));
            }
            if link.relation.k() != k {
                return Err(Error::ShapeMismatch("chain links disagree on k".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn k(&self) -> usize {
        self.links[0].relation.k()
    }

    fn tables(&self) -> Tables {
        let n = self.links.len();
        Tables {
            k: self.k(),
            first: binary_rows(&self.links[0].relation, false),
            middle: self.links[1..n - 1].iter().map(|l| ternary_table(&l.relation)).collect(),
            last: binary_rows(&self.links[n - 1].relation, true),
        }
    }

    /// Value of the chain predicate at `x`.
    pub fn holds(&self, x: &[Elem]) -> bool {
        self.tables().holds(x)
    }

    /// The chain predicate as an explicit relation (small `n` only).
    pub fn evaluate(&self) -> Result<Relation> {
        let tables = self.tables();
        tuple_space(self.k(), self.len(), MAX_TUPLES)?;
        Relation::from_fn(self.k(), self.len(), |x| tables.holds(x))
    }

    /// Checks an essential tuple against the chain predicate without
    /// materializing it.
    pub fn certifies(&self, t: &EssentialTuple) -> bool {
        let tables = self.tables();
        t.certifies_with(self.k(), self.len(), |x| tables.holds(x))
    }

    /// The chain written as one pp-formula: free `x1..xn`, bound `y1..y(n-1)`
    /// plus each link's own bound variables, prefixed by the link position.
    pub fn formula(&self) -> PPFormula {
        let n = self.links.len();
        let x = |i: usize| format!("x{i}");
        let y = |i: usize| format!("y{i}");
        let mut free = Vec::with_capacity(n);
        let mut bound: Vec<String> = (1..n).map(y).collect();
        let mut atoms = Vec::new();
        for (idx, link) in self.links.iter().enumerate() {
            let i = idx + 1;
            free.push(x(i));
            let outer: Vec<String> = if i == 1 {
                vec![x(1), y(1)]
            } else if i == n {
                vec![y(n - 1), x(n)]
            } else {
                vec![y(i - 1), x(i), y(i)]
            };
            let rename: HashMap<&str, String> = link
                .formula
                .free
                .iter()
                .map(String::as_str)
                .zip(outer)
                .chain(link.formula.bound.iter().map(|b| (b.as_str(), format!("l{i}_{b}"))))
                .collect();
            bound.extend(link.formula.bound.iter().map(|b| format!("l{i}_{b}")));
            for atom in &link.formula.atoms {
                atoms.push(Atom {
                    rel: atom.rel.clone(),
                    args: atom.args.iter().map(|a| rename[a.as_str()].clone()).collect(),
                });
            }
        }
        PPFormula { free, bound, atoms }
    }
}

impl Tables {
    fn holds(&self, x: &[Elem]) -> bool {
        let n = x.len();
        let mut z = self.first[x[0] as usize];
        for (i, succ) in self.middle.iter().enumerate() {
            z = image(self.k, succ, z, x[i + 1]);
        }
        z & self.last[x[n - 1] as usize] != 0
    }
}

/// `D_m`, `F_m` for `m = 2..=n-1`, by composing the middle links left to
/// right. `D_m` holds `(d_1, d_m)` joined through links `2..m` with the
/// `a`-values; `F_m` the same with exactly one of them repaired.
pub fn chain_states(chain: &Chain, t: &EssentialTuple) -> Result<Vec<ChainState>> {
    chain.check_shape()?;
    if !chain.certifies(t) {
        return Err(Error::Hypothesis("tuple is not essential for the chain predicate".into()));
    }
    let tables = chain.tables();
    let k = tables.k;
    let mut out = Vec::new();
    let mut d: Vec<Set> = (0..k).map(|v| 1 << v).collect();
    let mut f: Vec<Set> = vec![0; k];
    for (idx, succ) in tables.middle.iter().enumerate() {
        let m = idx + 2;
        let (a, b) = (t.a[m - 1], t.b[m - 1]);
        let next_f: Vec<Set> = (0..k)
            .map(|r| image(k, succ, f[r], a) | image(k, succ, d[r], b))
            .collect();
        d = (0..k).map(|r| image(k, succ, d[r], a)).collect();
        f = next_f;
        out.push(ChainState {
            m,
            d: rows_to_relation(k, &d)?,
            f: rows_to_relation(k, &f)?,
        });
    }
    Ok(out)
}

fn rows_to_relation(k: usize, rows: &[Set]) -> Result<Relation> {
    Relation::from_fn(k, 2, |t| rows[t[0] as usize] >> t[1] & 1 == 1)
}

fn check_positions(n: usize, p: usize, q: usize) -> Result<()> {
    if !(1 < p && p < q && q < n) {
        return Err(Error::InvalidArgument(format!(
            "pump positions need 1 < p < q < n, got p={p}, q={q}, n={n}"
        )));
    }
    Ok(())
}

/// States at `p` and `q` agree.
pub fn states_match(states: &[ChainState], p: usize, q: usize) -> bool {
    let get = |m: usize| states.iter().find(|s| s.m == m);
    match (get(p), get(q)) {
        (Some(sp), Some(sq)) => sp.d == sq.d && sp.f == sq.f,
        _ => false,
    }
}

/// Repeats links `p+1..=q` so that they occur `times + 1` times, extending
/// the essential tuple the same way.
pub fn pump_chain(
    chain: &Chain,
    t: &EssentialTuple,
    p: usize,
    q: usize,
    times: usize,
) -> Result<(Chain, EssentialTuple)> {
    let n = chain.len();
    check_positions(n, p, q)?;
    let states = chain_states(chain, t)?;
    if !states_match(&states, p, q) {
        return Err(Error::Hypothesis(format!("chain states differ at positions {p} and {q}")));
    }
    let order: Vec<usize> = (0..p)
        .chain((0..=times).flat_map(|_| p..q))
        .chain(q..n)
        .collect();
    let links = order.iter().map(|&i| chain.links[i].clone()).collect();
    let tuple = EssentialTuple {
        a: order.iter().map(|&i| t.a[i]).collect(),
        b: order.iter().map(|&i| t.b[i]).collect(),
    };
    Ok((Chain { links }, tuple))
}

/// Iterates `step` from `start` and returns every value of the orbit.
fn orbit(start: Set, mut step: impl FnMut(Set) -> Set) -> Vec<Set> {
    let mut seen = vec![start];
    loop {
        let next = step(*seen.last().unwrap());
        if seen.contains(&next) {
            return seen;
        }
        seen.push(next);
    }
}

/// Decides whether every pumped chain (`times = 0, 1, 2, …`) keeps the
/// extended tuple essential. Reach sets along the repeated segment are
/// eventually periodic, so finitely many orbit values settle all counts.
pub fn pumps_stay_essential(chain: &Chain, t: &EssentialTuple, p: usize, q: usize) -> bool {
    let n = chain.len();
    if check_positions(n, p, q).is_err() || chain.check_shape().is_err() || !chain.certifies(t) {
        return false;
    }
    let tables = chain.tables();
    let k = tables.k;
    // middle link at 1-based position i has table middle[i - 2]
    let mid = |i: usize| &tables.middle[i - 2];
    let seg = |from: Set, repair: Option<usize>| -> Set {
        let mut z = from;
        for i in p + 1..=q {
            let x = if repair == Some(i) { t.b[i - 1] } else { t.a[i - 1] };
            z = image(k, mid(i), z, x);
        }
        z
    };
    // backward through the segment: states from which some path lands in `to`
    let seg_back = |to: Set| -> Set {
        (0..k)
            .filter(|&y| seg(1 << y, None) & to != 0)
            .fold(0, |acc, y| acc | 1 << y)
    };
    let prefix = |repair: Option<usize>| -> Set {
        let x = |i: usize| if repair == Some(i) { t.b[i - 1] } else { t.a[i - 1] };
        let mut z = tables.first[x(1) as usize];
        for i in 2..=p {
            z = image(k, mid(i), z, x(i));
        }
        z
    };
    // set of y_q from which the suffix accepts
    let suffix = |repair: Option<usize>| -> Set {
        let x = |i: usize| if repair == Some(i) { t.b[i - 1] } else { t.a[i - 1] };
        (0..k)
            .filter(|&y| {
                let mut z: Set = 1 << y;
                for i in q + 1..n {
                    z = image(k, mid(i), z, x(i));
                }
                z & tables.last[x(n) as usize] != 0
            })
            .fold(0, |acc, y| acc | 1 << y)
    };

    let x0 = prefix(None);
    let b0 = suffix(None);
    // forward orbit X_j = seg^j(X_0) and backward orbit B_r
    let forward = orbit(x0, |z| seg(z, None));
    let backward = orbit(b0, seg_back);
    let forward_tail: Vec<Set> = orbit(seg(x0, None), |z| seg(z, None));

    // the extended a-tuple is rejected: X_j ∩ B = ∅ for j ≥ 1
    if forward_tail.iter().any(|&z| z & b0 != 0) {
        return false;
    }
    // prefix repairs survive every number of segment copies
    for i in 1..=p {
        let xr = prefix(Some(i));
        if orbit(seg(xr, None), |z| seg(z, None)).iter().any(|&z| z & b0 == 0) {
            return false;
        }
    }
    // suffix repairs
    for i in q + 1..=n {
        let br = suffix(Some(i));
        if forward_tail.iter().any(|&z| z & br == 0) {
            return false;
        }
    }
    // repairs inside any copy of the segment
    for i in p + 1..=q {
        for &xc in &forward {
            let repaired = seg(xc, Some(i));
            if backward.iter().any(|&br| repaired & br == 0) {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChainSearch {
    Found(Chain, EssentialTuple),
    NotFound,
    Unknown,
}

/// Search state after a prefix of links: the reach set `z` with all
/// `a`-values, and the minimal reach sets with one coordinate repaired.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Frontier {
    z: Set,
    repaired: Vec<Set>,
}

fn minimal_sets(mut sets: Vec<Set>) -> Vec<Set> {
    sets.sort_unstable_by_key(|s| (s.count_ones(), *s));
    sets.dedup();
    let mut out: Vec<Set> = Vec::new();
    for s in sets {
        if !out.iter().any(|&m| m & s == m) {
            out.push(s);
        }
    }
    out.sort_unstable();
    out
}

#[derive(Clone, Copy, Debug)]
struct Step {
    link: usize,
    a: Elem,
    b: Elem,
}

/// Searches for the longest chain of length `3..=max_len` over the given
/// candidate links whose predicate has an essential tuple. Prefixes are
/// merged when they reach the same [`Frontier`], which bounds every layer by
/// the number of such states.
pub fn search_chain(
    binaries: &[ChainLink],
    ternaries: &[ChainLink],
    k: usize,
    max_len: usize,
    budget: &Budget,
) -> ChainSearch {
    if max_len < 3 {
        return ChainSearch::NotFound;
    }
    let firsts: Vec<Vec<Set>> = binaries.iter().map(|l| binary_rows(&l.relation, false)).collect();
    let lasts: Vec<Vec<Set>> = binaries.iter().map(|l| binary_rows(&l.relation, true)).collect();
    let mids: Vec<Vec<Set>> = ternaries.iter().map(|l| ternary_table(&l.relation)).collect();

    // layers[d]: frontier after d+1 links -> (parent frontier, step)
    let mut layers: Vec<BTreeMap<Frontier, (Option<Frontier>, Step)>> = Vec::new();
    let mut first_layer = BTreeMap::new();
    for (li, rows) in firsts.iter().enumerate() {
        for a in 0..k {
            for b in (0..k).filter(|&b| b != a) {
                if !budget.tick() {
                    return ChainSearch::Unknown;
                }
                let state = Frontier {
                    z: rows[a],
                    repaired: vec![rows[b]],
                };
                if rows[b] == 0 {
                    continue;
                }
                first_layer
                    .entry(state)
                    .or_insert((None, Step { link: li, a: a as Elem, b: b as Elem }));
            }
        }
    }
    layers.push(first_layer);

    let mut best: Option<(usize, Frontier, Step)> = None;
    let mut out_of_budget = false;
    'grow: for depth in 1..max_len {
        // depth = number of links placed so far
        let layer = &layers[depth - 1];
        if depth + 1 >= 3 {
            'terminal: for state in layer.keys() {
                for (li, rows) in lasts.iter().enumerate() {
                    for a in 0..k {
                        if !budget.tick() {
                            out_of_budget = true;
                            break 'grow;
                        }
                        if state.z & rows[a] != 0 {
                            continue;
                        }
                        if state.repaired.iter().any(|&r| r & rows[a] == 0) {
                            continue;
                        }
                        if let Some(b) = (0..k).find(|&b| b != a && state.z & rows[b] != 0) {
                            best = Some((depth + 1, state.clone(), Step { link: li, a: a as Elem, b: b as Elem }));
                            break 'terminal;
                        }
                    }
                }
            }
        }
        if depth + 1 >= max_len {
            break;
        }
        let mut next = BTreeMap::new();
        for state in layer.keys() {
            for (li, succ) in mids.iter().enumerate() {
                for a in 0..k {
                    let z = image(k, succ, state.z, a as Elem);
                    for b in (0..k).filter(|&b| b != a) {
                        if !budget.tick() {
                            out_of_budget = true;
                            break 'grow;
                        }
                        let fresh = image(k, succ, state.z, b as Elem);
                        if fresh == 0 {
                            continue;
                        }
                        let mut sets: Vec<Set> = state
                            .repaired
                            .iter()
                            .map(|&r| image(k, succ, r, a as Elem))
                            .collect();
                        if sets.contains(&0) {
                            break;
                        }
                        sets.push(fresh);
                        let child = Frontier { z, repaired: minimal_sets(sets) };
                        next.entry(child).or_insert((
                            Some(state.clone()),
                            Step { link: li, a: a as Elem, b: b as Elem },
                        ));
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        layers.push(next);
    }

    let Some((len, state, last)) = best else {
        return if out_of_budget { ChainSearch::Unknown } else { ChainSearch::NotFound };
    };
    // walk the parents back to the first link
    let mut steps = vec![last];
    let mut cursor = Some(state);
    let mut depth = len - 1;
    while let Some(s) = cursor {
        let (parent, step) = layers[depth - 1][&s].clone();
        steps.push(step);
        cursor = parent;
        depth -= 1;
    }
    steps.reverse();
    let links: Vec<ChainLink> = steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i == 0 || i == len - 1 {
                binaries[s.link].clone()
            } else {
                ternaries[s.link].clone()
            }
        })
        .collect();
    let tuple = EssentialTuple {
        a: steps.iter().map(|s| s.a).collect(),
        b: steps.iter().map(|s| s.b).collect(),
    };
    let chain = Chain { links };
    debug_assert!(chain.certifies(&tuple));
    ChainSearch::Found(chain, tuple)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::essential::find_essential_tuple;
    use crate::formula::eval_pp;
    use crate::relation::{eq_relation, for_each_tuple, Structure};

    pub(crate) fn xor3() -> Relation {
        Relation::from_fn(2, 3, |t| (t[0] ^ t[1] ^ t[2]) == 0).unwrap()
    }

    pub(crate) fn parity_structure() -> Structure {
        Structure::with_relations(2, [("xor", xor3())]).unwrap()
    }

    fn link(formula: PPFormula, g: &Structure) -> ChainLink {
        let relation = eval_pp(&formula, g).unwrap();
        ChainLink { formula, relation }
    }

    /// `y_1 = x_1`, `y_i = y_{i-1} ⊕ x_i`, `y_{n-1} ⊕ x_n = 1`: odd parity.
    pub(crate) fn parity_chain(n: usize) -> Chain {
        let g = parity_structure();
        let mut links = vec![link(PPFormula::single("=", 2), &g)];
        for _ in 2..n {
            links.push(link(PPFormula::single("xor", 3), &g));
        }
        links.push(link(
            PPFormula::new(
                ["y", "x"],
                ["c"],
                vec![Atom::new("xor", ["y", "x", "c"]), Atom::new("const:1", ["c"])],
            ),
            &g,
        ));
        Chain::new(links).unwrap()
    }

    fn zeros(n: usize) -> EssentialTuple {
        EssentialTuple { a: vec![0; n], b: vec![1; n] }
    }

    fn odd(n: usize) -> Relation {
        Relation::from_fn(2, n, |t| t.iter().fold(0, |a, &b| a ^ b) == 1).unwrap()
    }

    #[test]
    fn parity_chain_evaluates_to_odd_parity() {
        for n in 2..=6 {
            let c = parity_chain(n);
            assert_eq!(c.evaluate().unwrap(), odd(n));
            assert!(c.certifies(&zeros(n)));
            let assembled = eval_pp(&c.formula(), &parity_structure()).unwrap();
            assert_eq!(assembled, odd(n));
        }
    }

    #[test]
    fn parity_states() {
        let c = parity_chain(5);
        let states = chain_states(&c, &zeros(5)).unwrap();
        assert_eq!(states.iter().map(|s| s.m).collect::<Vec<_>>(), vec![2, 3, 4]);
        let diag = eq_relation(2).unwrap();
        let flip = Relation::from_tuples(2, 2, [[0, 1], [1, 0]]).unwrap();
        for s in &states {
            assert_eq!(s.d, diag);
            assert_eq!(s.f, flip);
        }
        assert!(chain_states(&c, &EssentialTuple { a: vec![1, 0, 0, 0, 0], b: vec![0; 5] }).is_err());
    }

    #[test]
    fn degenerate_states() {
        let g = Structure::with_relations(
            2,
            [
                ("full2", Relation::full(2, 2).unwrap()),
                ("full3", Relation::full(2, 3).unwrap()),
                ("none3", Relation::empty(2, 3).unwrap()),
            ],
        )
        .unwrap();
        let full = Chain::new(vec![
            link(PPFormula::single("full2", 2), &g),
            link(PPFormula::single("full3", 3), &g),
            link(PPFormula::single("full3", 3), &g),
            link(PPFormula::single("full2", 2), &g),
        ])
        .unwrap();
        // a full chain has no essential tuple, so states are computed directly
        let tables = full.tables();
        assert!(tables.holds(&[0, 1, 0, 1]));
        assert!(full.evaluate().unwrap().is_full());
        let dead = Chain::new(vec![
            link(PPFormula::single("full2", 2), &g),
            link(PPFormula::single("none3", 3), &g),
            link(PPFormula::single("full2", 2), &g),
        ])
        .unwrap();
        assert!(dead.evaluate().unwrap().is_empty());
    }

    /// D_m/F_m straight from the definition, enumerating all assignments.
    fn brute_states(c: &Chain, t: &EssentialTuple) -> Vec<(Relation, Relation)> {
        let k = c.k();
        let n = c.len();
        let sigma = |m: usize, d1: Elem, xs: &[Elem], dm: Elem| -> bool {
            // y_1 = d1, y_m = dm, inner y_2..y_{m-1} enumerated
            let inner = m - 2;
            let mut found = false;
            for_each_tuple(k, inner, |_, ys| {
                let mut y = vec![d1];
                y.extend_from_slice(ys);
                y.push(dm);
                let ok = (2..=m).all(|i| c.links[i - 1].relation.contains(&[y[i - 2], xs[i - 2], y[i - 1]]));
                found |= ok;
            });
            found
        };
        (2..n)
            .map(|m| {
                let d = Relation::from_fn(k, 2, |p| sigma(m, p[0], &t.a[1..m], p[1])).unwrap();
                let f = Relation::from_fn(k, 2, |p| {
                    (2..=m).any(|i| {
                        let mut xs = t.a[1..m].to_vec();
                        xs[i - 2] = t.b[i - 1];
                        sigma(m, p[0], &xs, p[1])
                    })
                })
                .unwrap();
                (d, f)
            })
            .collect()
    }

    #[test]
    fn states_agree_with_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        for _ in 0..30000 {
            let n = rng.gen_range(3..=5);
            let mut links = Vec::new();
            for i in 0..n {
                let arity = if i == 0 || i == n - 1 { 2 } else { 3 };
                let mask: u32 = rng.gen();
                let rel = Relation::from_fn(2, arity, |t| {
                    mask >> t.iter().fold(0, |a, &b| a * 2 + b as usize) & 1 == 1
                })
                .unwrap();
                links.push(ChainLink { formula: PPFormula::single("r", arity), relation: rel });
            }
            let c = Chain::new(links).unwrap();
            let Some(t) = find_essential_tuple(&c.evaluate().unwrap()) else { continue };
            let states = chain_states(&c, &t).unwrap();
            let brute = brute_states(&c, &t);
            assert_eq!(states.len(), brute.len());
            for (s, (d, f)) in states.iter().zip(brute) {
                assert_eq!(s.d, d);
                assert_eq!(s.f, f);
            }
            checked += 1;
        }
        assert!(checked > 100, "only {checked} essential random chains");
    }

    #[test]
    fn pumping_parity() {
        let c = parity_chain(4);
        let t = zeros(4);
        let (same, st) = pump_chain(&c, &t, 2, 3, 0).unwrap();
        assert_eq!(same, c);
        assert_eq!(st, t);
        for times in 1..=16 {
            let (longer, lt) = pump_chain(&c, &t, 2, 3, times).unwrap();
            assert_eq!(longer.len(), 4 + times);
            assert!(longer.certifies(&lt));
            if longer.len() <= 12 {
                let rel = longer.evaluate().unwrap();
                assert_eq!(rel, odd(4 + times));
                assert!(find_essential_tuple(&rel).is_some());
            }
        }
        assert!(pumps_stay_essential(&c, &t, 2, 3));
        assert!(pump_chain(&c, &t, 1, 3, 1).is_err());
        assert!(pump_chain(&c, &t, 2, 4, 1).is_err());
    }

    #[test]
    fn pump_check_matches_explicit_pumps() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut positive = 0;
        let mut negative = 0;
        for _ in 0..4000 {
            let n = rng.gen_range(4..=5);
            let mut links = Vec::new();
            for i in 0..n {
                let arity = if i == 0 || i == n - 1 { 2 } else { 3 };
                let mask: u32 = rng.gen();
                let rel = Relation::from_fn(2, arity, |t| {
                    mask >> t.iter().fold(0, |a, &b| a * 2 + b as usize) & 1 == 1
                })
                .unwrap();
                links.push(ChainLink { formula: PPFormula::single("r", arity), relation: rel });
            }
            let c = Chain::new(links).unwrap();
            let Some(t) = find_essential_tuple(&c.evaluate().unwrap()) else { continue };
            for p in 2..n - 1 {
                for q in p + 1..n {
                    let claim = pumps_stay_essential(&c, &t, p, q);
                    // explicit pumping ignoring the state precondition
                    let order = |times: usize| -> Vec<usize> {
                        (0..p).chain((0..=times).flat_map(|_| p..q)).chain(q..n).collect()
                    };
                    let explicit = (0..12).all(|times| {
                        let o = order(times);
                        let pc = Chain { links: o.iter().map(|&i| c.links[i].clone()).collect() };
                        let pt = EssentialTuple {
                            a: o.iter().map(|&i| t.a[i]).collect(),
                            b: o.iter().map(|&i| t.b[i]).collect(),
                        };
                        pc.certifies(&pt)
                    });
                    assert_eq!(claim, explicit, "p={p} q={q}");
                    if claim { positive += 1 } else { negative += 1 }
                }
            }
        }
        assert!(positive > 10 && negative > 10, "{positive} / {negative}");
    }

    #[test]
    fn search_finds_parity_chain() {
        let g = parity_structure();
        let eq = link(PPFormula::single("=", 2), &g);
        let last = parity_chain(3).links[2].clone();
        let mid = link(PPFormula::single("xor", 3), &g);
        match search_chain(&[eq.clone(), last.clone()], &[mid.clone()], 2, 4, &Budget::unlimited()) {
            ChainSearch::Found(c, t) => {
                assert_eq!(c.len(), 4);
                assert!(c.certifies(&t));
            }
            other => panic!("expected a chain, got {other:?}"),
        }
        assert_eq!(
            search_chain(&[eq.clone(), last.clone()], &[mid.clone()], 2, 4, &Budget::new(0)),
            ChainSearch::Unknown
        );
        let le = Relation::from_tuples(2, 2, [[0, 0], [0, 1], [1, 1]]).unwrap();
        let le_link = ChainLink { formula: PPFormula::single("le", 2), relation: le };
        assert_eq!(
            search_chain(&[le_link], &[], 2, 8, &Budget::unlimited()),
            ChainSearch::NotFound
        );
    }
}
