//! A small finite-domain solver over table constraints: backtracking search
//! with generalized arc consistency, used by the polymorphism searches.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use crate::relation::{Elem, Relation};

/// Bit mask of candidate values; `k ≤ 16` so `u32` is plenty.
pub type Domain = u32;

pub fn full_domain(k: usize) -> Domain {
    (1u32 << k) - 1
}

/// Node budget shared by every search that draws from it.
#[derive(Debug)]
pub struct Budget {
    limit: u64,
    used: AtomicU64,
    cancelled: AtomicBool,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget {
            limit,
            used: AtomicU64::new(0),
            cancelled: AtomicBool::new(false),
        }
    }

    pub fn unlimited() -> Self {
        Self::new(u64::MAX)
    }

    /// Consumes one node; false once the budget is spent or cancelled.
    #[inline]
    pub fn tick(&self) -> bool {
        self.charge(1)
    }

    pub fn charge(&self, nodes: u64) -> bool {
        if self.cancelled.load(Ordering::Relaxed) {
            return false;
        }
        let before = self.used.fetch_add(nodes, Ordering::Relaxed);
        before.saturating_add(nodes) <= self.limit
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed).min(self.limit)
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn exhausted(&self) -> bool {
        self.cancelled.load(Ordering::Relaxed) || self.used.load(Ordering::Relaxed) > self.limit
    }

    pub fn cancel(&self) {
        self.cancelled.store(true, Ordering::Relaxed);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Sat(Vec<Elem>),
    Unsat,
    Exhausted,
}

#[derive(Clone, Debug)]
struct Table {
    arity: usize,
    tuples: Vec<Elem>,
}

#[derive(Clone, Debug)]
struct Constraint {
    table: usize,
    vars: Vec<usize>,
    /// position pairs (i, j), i < j, that name the same variable
    repeats: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Default)]
pub struct Csp {
    k: usize,
    domains: Vec<Domain>,
    tables: Vec<Table>,
    constraints: Vec<Constraint>,
    watches: Vec<Vec<usize>>,
}

impl Csp {
    pub fn new(k: usize) -> Self {
        Csp {
            k,
            ..Default::default()
        }
    }

    pub fn add_var(&mut self, domain: Domain) -> usize {
        self.domains.push(domain);
        self.watches.push(Vec::new());
        self.domains.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn add_table(&mut self, relation: &Relation) -> usize {
        debug_assert_eq!(relation.k(), self.k, "table over a different domain");
        let mut tuples = Vec::with_capacity(relation.count() * relation.arity());
        for t in relation.tuples() {
            tuples.extend_from_slice(&t);
        }
        self.tables.push(Table {
            arity: relation.arity(),
            tuples,
        });
        self.tables.len() - 1
    }

    pub fn add_constraint(&mut self, table: usize, vars: Vec<usize>) {
        assert_eq!(self.tables[table].arity, vars.len());
        let mut repeats = Vec::new();
        for i in 0..vars.len() {
            for j in i + 1..vars.len() {
                if vars[i] == vars[j] {
                    repeats.push((i, j));
                }
            }
        }
        let id = self.constraints.len();
        let mut seen = Vec::new();
        for &v in &vars {
            if !seen.contains(&v) {
                seen.push(v);
                self.watches[v].push(id);
            }
        }
        self.constraints.push(Constraint {
            table,
            vars,
            repeats,
        });
    }

    /// Number of constraints mentioning `var`.
    pub fn degree(&self, var: usize) -> usize {
        self.watches[var].len()
    }

    /// Finds one solution, searching from `initial` (or the declared domains).
    pub fn solve(&self, initial: Option<&[Domain]>, budget: &Budget) -> Outcome {
        let mut state = State {
            csp: self,
            domains: initial.unwrap_or(&self.domains).to_vec(),
            trail: Vec::new(),
            queue: VecDeque::new(),
            queued: vec![false; self.constraints.len()],
            supports: Vec::new(),
        };
        if state.domains.iter().any(|&d| d == 0) {
            return Outcome::Unsat;
        }
        for c in 0..self.constraints.len() {
            state.enqueue(c);
        }
        if !state.propagate() {
            return Outcome::Unsat;
        }

        struct Frame {
            var: usize,
            remaining: Domain,
            mark: usize,
        }
        let mut frames: Vec<Frame> = Vec::new();
        loop {
            match state.pick_var() {
                None => {
                    let values = state
                        .domains
                        .iter()
                        .map(|d| d.trailing_zeros() as Elem)
                        .collect();
                    return Outcome::Sat(values);
                }
                Some(var) => frames.push(Frame {
                    var,
                    remaining: state.domains[var],
                    mark: state.trail.len(),
                }),
            }
            loop {
                let Some(frame) = frames.last_mut() else {
                    return Outcome::Unsat;
                };
                if frame.remaining == 0 {
                    frames.pop();
                    continue;
                }
                let value = frame.remaining.trailing_zeros();
                frame.remaining &= frame.remaining - 1;
                let (var, mark) = (frame.var, frame.mark);
                state.undo_to(mark);
                if !budget.tick() {
                    return Outcome::Exhausted;
                }
                state.set(var, 1 << value);
                for &c in &self.watches[var] {
                    state.enqueue(c);
                }
                if state.propagate() {
                    break;
                }
            }
        }
    }
}

struct State<'a> {
    csp: &'a Csp,
    domains: Vec<Domain>,
    trail: Vec<(usize, Domain)>,
    queue: VecDeque<usize>,
    queued: Vec<bool>,
    supports: Vec<Domain>,
}

impl State<'_> {
    fn set(&mut self, var: usize, dom: Domain) {
        self.trail.push((var, self.domains[var]));
        self.domains[var] = dom;
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (var, dom) = self.trail.pop().unwrap();
            self.domains[var] = dom;
        }
    }

    fn enqueue(&mut self, c: usize) {
        if !self.queued[c] {
            self.queued[c] = true;
            self.queue.push_back(c);
        }
    }

    fn clear_queue(&mut self) {
        while let Some(c) = self.queue.pop_front() {
            self.queued[c] = false;
        }
    }

    fn propagate(&mut self) -> bool {
        while let Some(c) = self.queue.pop_front() {
            self.queued[c] = false;
            if !self.revise(c) {
                self.clear_queue();
                return false;
            }
        }
        true
    }

    /// GAC revision of one table constraint.
    fn revise(&mut self, c: usize) -> bool {
        let csp = self.csp;
        let cons = &csp.constraints[c];
        let table = &csp.tables[cons.table];
        let arity = table.arity;
        self.supports.clear();
        self.supports.resize(arity, 0);
        'tuples: for t in table.tuples.chunks_exact(arity) {
            for (p, &v) in cons.vars.iter().enumerate() {
                if self.domains[v] >> t[p] & 1 == 0 {
                    continue 'tuples;
                }
            }
            for &(i, j) in &cons.repeats {
                if t[i] != t[j] {
                    continue 'tuples;
                }
            }
            for (p, &value) in t.iter().enumerate() {
                self.supports[p] |= 1 << value;
            }
        }
        for p in 0..arity {
            let var = cons.vars[p];
            let narrowed = self.domains[var] & self.supports[p];
            if narrowed == 0 {
                return false;
            }
            if narrowed != self.domains[var] {
                self.set(var, narrowed);
                for &other in &csp.watches[var] {
                    if other != c {
                        self.enqueue(other);
                    }
                }
            }
        }
        true
    }

    /// Smallest domain first, ties broken by larger degree, then lower index.
    fn pick_var(&self) -> Option<usize> {
        let mut best: Option<(u32, std::cmp::Reverse<usize>, usize)> = None;
        for (var, &dom) in self.domains.iter().enumerate() {
            let size = dom.count_ones();
            if size <= 1 {
                continue;
            }
            let key = (size, std::cmp::Reverse(self.csp.watches[var].len()), var);
            if best.map_or(true, |b| key < b) {
                best = Some(key);
            }
        }
        best.map(|(_, _, var)| var)
    }
}
