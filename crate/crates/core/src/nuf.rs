//! Near-unanimity polymorphisms of a fixed arity: verification of claimed
//! tables and a complete search for one.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{for_each_tuple, tuple_space, Elem, Relation, Structure, MAX_TUPLES};
use crate::solver::{full_domain, Budget, Csp, Domain, Outcome};

/// A total function `E_k^n → E_k`, stored in canonical tuple-index order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NufTable {
    pub k: usize,
    pub n: usize,
    pub table: Vec<Elem>,
}

/// The value forced on `x` by the near-unanimity identities, if any: `b`
/// when all but at most one coordinate equal `b`.
pub fn forced_value(x: &[Elem]) -> Option<Elem> {
    let n = x.len();
    if n < 3 {
        return None;
    }
    // with n ≥ 3, the majority value is among the first three entries
    let b = if x[0] == x[1] || x[0] == x[2] { x[0] } else { x[1] };
    let deviants = x.iter().filter(|&&v| v != b).count();
    (deviants <= 1).then_some(b)
}

impl NufTable {
    pub fn apply(&self, x: &[Elem]) -> Elem {
        let idx = x.iter().fold(0usize, |acc, &v| acc * self.k + v as usize);
        self.table[idx]
    }

    /// Shape is consistent and every near-unanimity identity holds.
    pub fn satisfies_identities(&self) -> bool {
        if self.n < 3 || self.k < 2 {
            return false;
        }
        let Ok(size) = tuple_space(self.k, self.n, MAX_TUPLES) else {
            return false;
        };
        if self.table.len() != size || self.table.iter().any(|&v| v as usize >= self.k) {
            return false;
        }
        let mut ok = true;
        for_each_tuple(self.k, self.n, |idx, x| {
            if let Some(b) = forced_value(x) {
                ok &= self.table[idx] == b;
            }
        });
        ok
    }

    /// Tabulates `f` over `E_k^n`.
    pub fn from_fn(k: usize, n: usize, mut f: impl FnMut(&[Elem]) -> Elem) -> Result<Self> {
        let size = tuple_space(k, n, MAX_TUPLES)?;
        let mut table = vec![0; size];
        for_each_tuple(k, n, |idx, x| table[idx] = f(x));
        Ok(NufTable { k, n, table })
    }
}

/// Every `n`-tuple of `ρ`-tuples is mapped coordinatewise into `ρ`.
pub fn preserves(f: &NufTable, rho: &Relation) -> Result<bool> {
    if f.k != rho.k() {
        return Err(Error::ShapeMismatch(format!(
            "function has k={} but relation has k={}",
            f.k,
            rho.k()
        )));
    }
    let m = rho.arity();
    if m == 0 || rho.is_full() {
        return Ok(true);
    }
    let tuples: Vec<Vec<Elem>> = rho.tuples().collect();
    if tuples.is_empty() {
        return Ok(true);
    }
    let mut pick = vec![0usize; f.n];
    let mut arg = vec![0 as Elem; f.n];
    let mut image = vec![0 as Elem; m];
    loop {
        for i in 0..m {
            for (c, &p) in pick.iter().enumerate() {
                arg[c] = tuples[p][i];
            }
            image[i] = f.apply(&arg);
        }
        if !rho.contains(&image) {
            return Ok(false);
        }
        let mut c = 0;
        loop {
            if c == f.n {
                return Ok(true);
            }
            pick[c] += 1;
            if pick[c] < tuples.len() {
                break;
            }
            pick[c] = 0;
            c += 1;
        }
    }
}

pub fn verify_nuf(f: &NufTable, g: &Structure) -> Result<bool> {
    if f.k != g.k() {
        return Err(Error::ShapeMismatch(format!(
            "function has k={} but structure has k={}",
            f.k,
            g.k()
        )));
    }
    if !f.satisfies_identities() {
        return Ok(false);
    }
    for r in g.relations() {
        if !preserves(f, &r.relation)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NufOutcome {
    Found(NufTable),
    NotExists,
    Unknown,
}

enum TableCsp {
    Built(Csp),
    /// a constraint on pinned entries only already fails
    Refuted,
    OutOfBudget,
}

/// Builds the table CSP: one variable per argument tuple, near-unanimous
/// tuples pinned to their forced value, one constraint per `n`-tuple of
/// `ρ`-tuples.
fn build_table_csp(g: &Structure, n: usize, budget: &Budget) -> Result<TableCsp> {
    let k = g.k();
    tuple_space(k, n, MAX_TUPLES)?;
    let mut csp = Csp::new(k);
    let mut pinned: Vec<Option<Elem>> = Vec::new();
    for_each_tuple(k, n, |_, x| {
        let fv = forced_value(x);
        pinned.push(fv);
        csp.add_var(fv.map_or(full_domain(k), |b| 1 << b));
    });
    for r in g.relations() {
        let rho = &r.relation;
        let m = rho.arity();
        if m == 0 || rho.is_full() || rho.is_empty() {
            continue;
        }
        let table = csp.add_table(rho);
        let tuples: Vec<Vec<Elem>> = rho.tuples().collect();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut pick = vec![0usize; n];
        let mut vars = vec![0usize; m];
        let mut image = vec![0 as Elem; m];
        'matrices: loop {
            if !budget.tick() {
                return Ok(TableCsp::OutOfBudget);
            }
            let mut all_pinned = true;
            for i in 0..m {
                let idx = pick.iter().fold(0usize, |acc, &p| acc * k + tuples[p][i] as usize);
                vars[i] = idx;
                match pinned[idx] {
                    Some(b) => image[i] = b,
                    None => all_pinned = false,
                }
            }
            if all_pinned {
                if !rho.contains(&image) {
                    return Ok(TableCsp::Refuted);
                }
            } else if seen.insert(vars.clone()) {
                csp.add_constraint(table, vars.clone());
            }
            let mut c = 0;
            loop {
                if c == n {
                    break 'matrices;
                }
                pick[c] += 1;
                if pick[c] < tuples.len() {
                    break;
                }
                pick[c] = 0;
                c += 1;
            }
        }
    }
    Ok(TableCsp::Built(csp))
}

/// Complete search for an `n`-ary near-unanimity polymorphism of `G` on a
/// single worker.
pub fn nuf_exists(g: &Structure, n: usize, budget: &Budget) -> Result<NufOutcome> {
    nuf_exists_with(g, n, budget, 1)
}

/// As [`nuf_exists`], splitting the first branching variable across up to
/// `threads` workers. The verdict does not depend on `threads`.
pub fn nuf_exists_with(g: &Structure, n: usize, budget: &Budget, threads: usize) -> Result<NufOutcome> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("near-unanimity arity must be at least 3, got {n}")));
    }
    let k = g.k();
    let csp = match build_table_csp(g, n, budget)? {
        TableCsp::Refuted => return Ok(NufOutcome::NotExists),
        TableCsp::OutOfBudget => return Ok(NufOutcome::Unknown),
        TableCsp::Built(csp) => csp,
    };
    let outcome = if threads <= 1 {
        csp.solve(None, budget)
    } else {
        solve_split(&csp, budget, threads)
    };
    Ok(match outcome {
        Outcome::Sat(values) => {
            let f = NufTable { k, n, table: values };
            debug_assert!(verify_nuf(&f, g).unwrap_or(false));
            NufOutcome::Found(f)
        }
        Outcome::Unsat => NufOutcome::NotExists,
        Outcome::Exhausted => NufOutcome::Unknown,
    })
}

fn solve_split(csp: &Csp, budget: &Budget, threads: usize) -> Outcome {
    let domains = csp.domains();
    let Some(var) = (0..csp.num_vars())
        .filter(|&v| domains[v].count_ones() > 1)
        .max_by_key(|&v| (csp.degree(v), std::cmp::Reverse(v)))
    else {
        return csp.solve(None, budget);
    };
    let values: Vec<Domain> = (0..32)
        .filter(|b| domains[var] >> b & 1 == 1)
        .map(|b| 1 << b)
        .collect();
    let local = Budget::new(budget.limit().saturating_sub(budget.used()));
    let chunk = values.len().div_ceil(threads.max(1));
    let results: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = values
            .chunks(chunk)
            .map(|part| {
                let local = &local;
                s.spawn(move || {
                    let mut result = Outcome::Unsat;
                    for &value in part {
                        let mut start = domains.to_vec();
                        start[var] = value;
                        match csp.solve(Some(&start), local) {
                            Outcome::Sat(v) => {
                                local.cancel();
                                return Outcome::Sat(v);
                            }
                            Outcome::Exhausted => result = Outcome::Exhausted,
                            Outcome::Unsat => {}
                        }
                    }
                    result
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("search worker panicked")).collect()
    });
    budget.charge(local.used());
    if let Some(sat) = results.iter().find(|o| matches!(o, Outcome::Sat(_))) {
        return sat.clone();
    }
    if results.iter().any(|o| *o == Outcome::Exhausted) {
        Outcome::Exhausted
    } else {
        Outcome::Unsat
    }
}
