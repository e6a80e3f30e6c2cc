//! Small relations pp-derived from a structure: projections of conjunctions
//! of a few atoms, grown one atom per level and deduplicated by value.

use std::collections::{HashMap, HashSet};

use crate::formula::{Atom, PPFormula};
use crate::relation::{Elem, Relation, Structure};
use crate::solver::Budget;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoolCaps {
    pub max_atoms: usize,
    pub max_vars: usize,
    pub max_arity: usize,
}

impl Default for PoolCaps {
    fn default() -> Self {
        PoolCaps {
            max_atoms: 4,
            max_vars: 6,
            max_arity: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolEntry {
    pub formula: PPFormula,
    pub relation: Relation,
}

/// A conjunction over variables `v0..v(vars-1)`, introduced in order.
#[derive(Clone, Debug)]
struct Conjunction {
    atoms: Vec<(usize, Vec<usize>)>,
    vars: usize,
    relation: Relation,
}

#[derive(Clone, Debug)]
pub struct DerivationPool {
    k: usize,
    caps: PoolCaps,
    base: Vec<(String, Relation)>,
    level: usize,
    frontier: Vec<Conjunction>,
    next_frontier: Vec<Conjunction>,
    /// Resume point: conjunction, base atom, argument pattern.
    cursor: (usize, usize, usize),
    seen: HashSet<(usize, Relation)>,
    entries: Vec<PoolEntry>,
    index: HashMap<Relation, usize>,
}

fn var(i: usize) -> String {
    format!("v{i}")
}

/// Argument lists over `vars` existing variables where fresh variables are
/// numbered in order of first use.
fn argument_patterns(arity: usize, vars: usize, max_vars: usize) -> Vec<Vec<usize>> {
    fn go(arity: usize, next: usize, max_vars: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == arity {
            out.push(cur.clone());
            return;
        }
        for v in 0..=next.min(max_vars - 1) {
            if v == next && next >= max_vars {
                break;
            }
            cur.push(v);
            go(arity, if v == next { next + 1 } else { next }, max_vars, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if vars <= max_vars {
        go(arity, vars, max_vars, &mut Vec::new(), &mut out);
    }
    out
}

/// Ordered lists of distinct variables of length `1..=max_len`.
fn selections(vars: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    let mut all = Vec::new();
    for _ in 0..max_len.min(vars) {
        let mut grown = Vec::new();
        for s in &out {
            for v in 0..vars {
                if !s.contains(&v) {
                    let mut t = s.clone();
                    t.push(v);
                    grown.push(t);
                }
            }
        }
        all.extend(grown.iter().cloned());
        out = grown;
    }
    all
}

impl DerivationPool {
    /// Pool over every positive-arity relation of `g` plus equality.
    pub fn new(g: &Structure, caps: PoolCaps) -> Self {
        let mut base: Vec<(String, Relation)> = g
            .relations()
            .iter()
            .filter(|r| r.relation.arity() > 0)
            .map(|r| (r.name.clone(), r.relation.clone()))
            .collect();
        base.push(("=".into(), crate::relation::eq_relation(g.k()).expect("k already validated")));
        let empty = Conjunction {
            atoms: Vec::new(),
            vars: 0,
            relation: Relation::constant(g.k(), true).expect("k already validated"),
        };
        DerivationPool {
            k: g.k(),
            caps,
            base,
            level: 0,
            frontier: vec![empty],
            next_frontier: Vec::new(),
            cursor: (0, 0, 0),
            seen: HashSet::new(),
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn of_arity(&self, arity: usize) -> impl Iterator<Item = &PoolEntry> + '_ {
        self.entries.iter().filter(move |e| e.relation.arity() == arity)
    }

    /// Number of atoms in the largest conjunctions fully explored.
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn is_complete(&self) -> bool {
        self.level >= self.caps.max_atoms
    }

    /// Grows the pool by one atom per conjunction. Returns false when the
    /// budget ran out first; a later call resumes where this one stopped.
    pub fn grow(&mut self, budget: &Budget) -> bool {
        if self.is_complete() {
            return true;
        }
        while self.cursor.0 < self.frontier.len() {
            let conj = self.frontier[self.cursor.0].clone();
            while self.cursor.1 < self.base.len() {
                let bi = self.cursor.1;
                let patterns = argument_patterns(self.base[bi].1.arity(), conj.vars, self.caps.max_vars);
                while self.cursor.2 < patterns.len() {
                    if !budget.tick() {
                        return false;
                    }
                    let args = patterns[self.cursor.2].clone();
                    self.cursor.2 += 1;
                    if let Some(next) = self.extend(&conj, bi, args) {
                        self.record(&next, budget);
                        self.next_frontier.push(next);
                    }
                }
                self.cursor = (self.cursor.0, bi + 1, 0);
            }
            self.cursor = (self.cursor.0 + 1, 0, 0);
        }
        self.frontier = std::mem::take(&mut self.next_frontier);
        self.cursor = (0, 0, 0);
        self.level += 1;
        true
    }

    fn extend(&mut self, conj: &Conjunction, bi: usize, args: Vec<usize>) -> Option<Conjunction> {
        let vars = args.iter().map(|&a| a + 1).max().unwrap_or(0).max(conj.vars);
        let rel = &self.base[bi].1;
        let mut scratch = Vec::with_capacity(args.len());
        let relation = Relation::from_fn(self.k, vars, |t| {
            if !conj.relation.contains(&t[..conj.vars]) {
                return false;
            }
            scratch.clear();
            scratch.extend(args.iter().map(|&a| t[a]));
            rel.contains(&scratch)
        })
        .ok()?;
        if vars == conj.vars && relation == conj.relation {
            return None;
        }
        if !self.seen.insert((vars, relation.clone())) {
            return None;
        }
        let mut atoms = conj.atoms.clone();
        atoms.push((bi, args));
        Some(Conjunction { atoms, vars, relation })
    }

    fn record(&mut self, conj: &Conjunction, budget: &Budget) {
        let sels = selections(conj.vars, self.caps.max_arity);
        // charged but never cut short, so a conjunction is recorded whole
        budget.charge(sels.len() as u64);
        for sel in sels {
            let mut projected = Relation::empty(self.k, sel.len()).expect("arity within cap");
            let mut point: Vec<Elem> = vec![0; sel.len()];
            for t in conj.relation.tuples() {
                for (i, &v) in sel.iter().enumerate() {
                    point[i] = t[v];
                }
                projected.insert(&point);
            }
            if self.index.contains_key(&projected) {
                continue;
            }
            let formula = PPFormula {
                free: sel.iter().map(|&v| var(v)).collect(),
                bound: (0..conj.vars).filter(|v| !sel.contains(v)).map(var).collect(),
                atoms: conj
                    .atoms
                    .iter()
                    .map(|(bi, args)| Atom {
                        rel: self.base[*bi].0.clone(),
                        args: args.iter().map(|&a| var(a)).collect(),
                    })
                    .collect(),
            };
            self.index.insert(projected.clone(), self.entries.len());
            self.entries.push(PoolEntry { formula, relation: projected });
        }
    }
}
