//! Co-clone membership through the indicator construction: the smallest
//! relation pp-definable from `G` that contains a given set of tuples is the
//! set of images of those tuples under the polymorphisms of `G`.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::relation::{tuple_space, Elem, Relation, Structure};
use crate::solver::{full_domain, Budget, Csp, Outcome};

/// Default cap on the number of indicator variables (distinct `t`-tuples).
pub const MAX_INDICATOR_VARS: usize = 1 << 20;

/// Default cap on `k^m` for [`census`].
pub const CENSUS_CAP: usize = 16;

/// `t` columns of common height `h`. Row `i` is the `t`-tuple of the `i`-th
/// entries of the columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndicatorInstance {
    k: usize,
    height: usize,
    columns: Vec<Vec<Elem>>,
}

impl IndicatorInstance {
    pub fn new(k: usize, height: usize, columns: Vec<Vec<Elem>>) -> Result<Self> {
        for col in &columns {
            if col.len() != height {
                return Err(Error::ShapeMismatch(format!(
                    "column of height {} among columns of height {height}",
                    col.len()
                )));
            }
            if let Some(&v) = col.iter().find(|&&v| v as usize >= k) {
                return Err(Error::ElementOutOfRange { value: v as usize, k });
            }
        }
        Ok(IndicatorInstance { k, height, columns })
    }

    /// Columns are the tuples of `sigma`.
    pub fn from_relation(sigma: &Relation) -> Self {
        IndicatorInstance {
            k: sigma.k(),
            height: sigma.arity(),
            columns: sigma.tuples().collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn columns(&self) -> &[Vec<Elem>] {
        &self.columns
    }

    pub fn rows(&self) -> Vec<Vec<Elem>> {
        (0..self.height)
            .map(|i| self.columns.iter().map(|c| c[i]).collect())
            .collect()
    }
}

/// The indicator CSP: one variable per `t`-tuple `u` standing for `f(u)`, one
/// constraint per matrix whose columns lie in some `ρ ∈ G`.
struct Indicator {
    k: usize,
    t: usize,
    csp: Csp,
    var_of: HashMap<Vec<Elem>, usize>,
    points: Vec<Vec<Elem>>,
    /// (table id, arity, tuples) per relation of positive arity
    relations: Vec<(usize, usize, Vec<Vec<Elem>>)>,
    max_vars: usize,
}

impl Indicator {
    fn new(g: &Structure, t: usize, max_vars: usize) -> Self {
        let mut csp = Csp::new(g.k());
        let relations = g
            .relations()
            .iter()
            .filter(|r| r.relation.arity() > 0)
            .map(|r| {
                let table = csp.add_table(&r.relation);
                (table, r.relation.arity(), r.relation.tuples().collect())
            })
            .collect();
        Indicator {
            k: g.k(),
            t,
            csp,
            var_of: HashMap::new(),
            points: Vec::new(),
            relations,
            max_vars,
        }
    }

    fn var(&mut self, point: &[Elem]) -> Option<usize> {
        if let Some(&v) = self.var_of.get(point) {
            return Some(v);
        }
        if self.points.len() >= self.max_vars {
            return None;
        }
        let v = self.csp.add_var(full_domain(self.k));
        self.var_of.insert(point.to_vec(), v);
        self.points.push(point.to_vec());
        Some(v)
    }

    /// Generates every constraint touching the component of `roots`. A
    /// matrix is emitted once, from its earliest processed row variable.
    fn build(&mut self, roots: &[Vec<Elem>], budget: &Budget) -> Option<Vec<usize>> {
        let relations = std::mem::take(&mut self.relations);
        let out = self.build_with(&relations, roots, budget);
        self.relations = relations;
        out
    }

    fn build_with(
        &mut self,
        relations: &[(usize, usize, Vec<Vec<Elem>>)],
        roots: &[Vec<Elem>],
        budget: &Budget,
    ) -> Option<Vec<usize>> {
        let mut root_vars = Vec::with_capacity(roots.len());
        for r in roots {
            root_vars.push(self.var(r)?);
        }
        let mut current = 0;
        let mut rows: Vec<Vec<Elem>> = Vec::new();
        while current < self.points.len() {
            let u = self.points[current].clone();
            for &(table, m, ref tuples) in relations {
                for j in 0..m {
                    let candidates: Vec<Vec<usize>> = (0..self.t)
                        .map(|c| {
                            (0..tuples.len())
                                .filter(|&b| tuples[b][j] == u[c])
                                .collect()
                        })
                        .collect();
                    if candidates.iter().any(|c| c.is_empty()) {
                        continue;
                    }
                    let mut pick = vec![0usize; self.t];
                    'matrices: loop {
                        if !budget.tick() {
                            return None;
                        }
                        rows.clear();
                        for i in 0..m {
                            rows.push((0..self.t).map(|c| tuples[candidates[c][pick[c]]][i]).collect());
                        }
                        let mut emit = true;
                        for (i, row) in rows.iter().enumerate() {
                            if i < j && *row == u {
                                emit = false;
                                break;
                            }
                            if let Some(&v) = self.var_of.get(row) {
                                if v < current {
                                    emit = false;
                                    break;
                                }
                            }
                        }
                        if emit {
                            let mut vars = Vec::with_capacity(m);
                            for row in &rows {
                                let v = self.var(row)?;
                                vars.push(v);
                            }
                            self.csp.add_constraint(table, vars);
                        }
                        // odometer over the column choices
                        let mut c = 0;
                        loop {
                            if c == self.t {
                                break 'matrices;
                            }
                            pick[c] += 1;
                            if pick[c] < candidates[c].len() {
                                break;
                            }
                            pick[c] = 0;
                            c += 1;
                        }
                    }
                }
            }
            current += 1;
        }
        Some(root_vars)
    }
}

/// `ρ_{M,G}`: the images `(f(r_1), …, f(r_h))` over all `t`-ary polymorphisms
/// `f` of `G`. `None` when the budget or the variable cap runs out.
pub fn rho_mg(g: &Structure, m: &IndicatorInstance, budget: &Budget) -> Result<Option<Relation>> {
    rho_mg_capped(g, m, budget, MAX_INDICATOR_VARS)
}

pub fn rho_mg_capped(
    g: &Structure,
    m: &IndicatorInstance,
    budget: &Budget,
    max_vars: usize,
) -> Result<Option<Relation>> {
    if g.k() != m.k() {
        return Err(Error::ShapeMismatch(format!(
            "structure has k={} but columns have k={}",
            g.k(),
            m.k()
        )));
    }
    let k = g.k();
    let h = m.height();
    tuple_space(k, h, crate::relation::MAX_TUPLES)?;
    let mut out = Relation::empty(k, h)?;
    if m.columns().is_empty() {
        return Ok(Some(out));
    }
    for col in m.columns() {
        out.insert(col);
    }
    if h == 0 {
        return Ok(Some(out));
    }
    let rows = m.rows();
    let mut ind = Indicator::new(g, m.columns().len(), max_vars);
    let Some(row_vars) = ind.build(&rows, budget) else {
        return Ok(None);
    };
    let base = ind.csp.domains().to_vec();
    'candidates: for idx in 0..out.size() {
        if out.contains_index(idx) {
            continue;
        }
        let y = out.tuple_at(idx);
        let mut domains = base.clone();
        for (i, &v) in row_vars.iter().enumerate() {
            let bit = 1u32 << y[i];
            if domains[v] & bit == 0 {
                continue 'candidates;
            }
            domains[v] = bit;
        }
        match ind.csp.solve(Some(&domains), budget) {
            Outcome::Sat(_) => out.insert_index(idx),
            Outcome::Unsat => {}
            Outcome::Exhausted => return Ok(None),
        }
    }
    Ok(Some(out))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    Yes,
    /// A tuple of the closure that `σ` lacks.
    No(Vec<Elem>),
    Unknown,
}

/// Decides `σ ∈ [G]` by comparing `σ` with the closure of its own tuples.
pub fn in_coclone(sigma: &Relation, g: &Structure, budget: &Budget) -> Result<Membership> {
    if sigma.k() != g.k() {
        return Err(Error::ShapeMismatch(format!(
            "relation has k={} but structure has k={}",
            sigma.k(),
            g.k()
        )));
    }
    if sigma.arity() == 0 || sigma.is_empty() {
        return Ok(Membership::Yes);
    }
    match rho_mg(g, &IndicatorInstance::from_relation(sigma), budget)? {
        None => Ok(Membership::Unknown),
        Some(closure) => Ok(match closure.indices().find(|&i| !sigma.contains_index(i)) {
            None => Membership::Yes,
            Some(i) => Membership::No(closure.tuple_at(i)),
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Census {
    /// Members of `[G]` of the requested arity, sorted.
    pub relations: Vec<Relation>,
    /// Set when the budget ran out before the enumeration finished.
    pub partial: bool,
}

/// All `m`-ary members of `[G]`, found by growing closed sets one generator
/// at a time from the empty relation.
pub fn census(g: &Structure, m: usize, budget: &Budget) -> Result<Census> {
    census_capped(g, m, budget, CENSUS_CAP)
}

pub fn census_capped(g: &Structure, m: usize, budget: &Budget, cap: usize) -> Result<Census> {
    let k = g.k();
    let size = tuple_space(k, m, cap)?;
    let empty = Relation::empty(k, m)?;
    let mut generators: HashMap<Relation, Vec<Vec<Elem>>> = HashMap::new();
    generators.insert(empty.clone(), Vec::new());
    let mut queue = VecDeque::from([empty]);
    let mut tried: HashSet<Vec<usize>> = HashSet::new();
    let mut partial = false;
    'outer: while let Some(closed) = queue.pop_front() {
        let gens = generators[&closed].clone();
        for idx in 0..size {
            if closed.contains_index(idx) {
                continue;
            }
            let mut cols = gens.clone();
            cols.push(closed.tuple_at(idx));
            let mut key: Vec<usize> = cols.iter().map(|c| closed.index_of(c)).collect();
            key.sort_unstable();
            if !tried.insert(key) {
                continue;
            }
            let inst = IndicatorInstance::new(k, m, cols.clone())?;
            match rho_mg(g, &inst, budget)? {
                None => {
                    partial = true;
                    break 'outer;
                }
                Some(next) => {
                    if !generators.contains_key(&next) {
                        generators.insert(next.clone(), cols);
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    let mut relations: Vec<Relation> = generators.into_keys().collect();
    relations.sort();
    Ok(Census { relations, partial })
}
