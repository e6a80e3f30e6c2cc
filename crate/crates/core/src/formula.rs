//! Primitive-positive formulas: existentially quantified conjunctions of atoms.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{eq_relation, Elem, Relation, Structure, MAX_TUPLES};
use crate::relation::{const_relation, tuple_space};

/// One conjunct `rel(args..)`. `rel` is a structure member or a builtin:
/// `"="`, `"false"` (0-ary) or `"const:a"`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub rel: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new<S: Into<String>>(rel: impl Into<String>, args: impl IntoIterator<Item = S>) -> Self {
        Atom {
            rel: rel.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PPFormula {
    pub free: Vec<String>,
    #[serde(default)]
    pub bound: Vec<String>,
    pub atoms: Vec<Atom>,
}

/// Resolves an atom name against `structure` and the builtins.
pub fn resolve_relation(structure: &Structure, name: &str) -> Result<Relation> {
    let k = structure.k();
    match name {
        "=" => eq_relation(k),
        "false" => Relation::constant(k, false),
        _ => {
            if let Some(value) = name.strip_prefix("const:") {
                let a: usize = value
                    .parse()
                    .map_err(|_| Error::UnknownRelation(name.to_string()))?;
                return const_relation(k, a);
            }
            structure
                .get(name)
                .cloned()
                .ok_or_else(|| Error::UnknownRelation(name.to_string()))
        }
    }
}

impl PPFormula {
    pub fn new<S: Into<String>, B: Into<String>>(
        free: impl IntoIterator<Item = S>,
        bound: impl IntoIterator<Item = B>,
        atoms: Vec<Atom>,
    ) -> Self {
        PPFormula {
            free: free.into_iter().map(Into::into).collect(),
            bound: bound.into_iter().map(Into::into).collect(),
            atoms,
        }
    }

    /// The formula `rel(x0, .., x_{n-1})` with all variables free.
    pub fn single(rel: impl Into<String>, arity: usize) -> Self {
        let vars: Vec<String> = (0..arity).map(|i| format!("x{i}")).collect();
        PPFormula::new(vars.clone(), Vec::<String>::new(), vec![Atom::new(rel, vars)])
    }

    pub fn arity(&self) -> usize {
        self.free.len()
    }

    /// Structural well-formedness, independent of any structure.
    pub fn check_variables(&self) -> Result<HashMap<&str, usize>> {
        let mut index = HashMap::new();
        for (i, name) in self.free.iter().chain(&self.bound).enumerate() {
            if index.insert(name.as_str(), i).is_some() {
                return Err(Error::MalformedFormula(format!(
                    "variable `{name}` declared twice"
                )));
            }
        }
        for atom in &self.atoms {
            for arg in &atom.args {
                if !index.contains_key(arg.as_str()) {
                    return Err(Error::MalformedFormula(format!(
                        "variable `{arg}` in atom `{}` is neither free nor bound",
                        atom.rel
                    )));
                }
            }
        }
        Ok(index)
    }

    /// Renames every variable through `rename`.
    pub fn rename_vars(&self, mut rename: impl FnMut(&str) -> String) -> PPFormula {
        PPFormula {
            free: self.free.iter().map(|v| rename(v)).collect(),
            bound: self.bound.iter().map(|v| rename(v)).collect(),
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    rel: a.rel.clone(),
                    args: a.args.iter().map(|v| rename(v)).collect(),
                })
                .collect(),
        }
    }
}

struct CompiledAtom {
    relation: Relation,
    vars: Vec<usize>,
}

/// Evaluates `φ` over `G`: the relation of free-variable tuples admitting a
/// satisfying assignment of the bound variables.
pub fn eval_pp(formula: &PPFormula, structure: &Structure) -> Result<Relation> {
    let index = formula.check_variables()?;
    let k = structure.k();
    let n_free = formula.free.len();
    let n_vars = n_free + formula.bound.len();
    tuple_space(k, n_free, MAX_TUPLES)?;

    let mut atoms = Vec::with_capacity(formula.atoms.len());
    for atom in &formula.atoms {
        let relation = resolve_relation(structure, &atom.rel)?;
        if relation.arity() != atom.args.len() {
            return Err(Error::MalformedFormula(format!(
                "atom `{}` has {} arguments but the relation has arity {}",
                atom.rel,
                atom.args.len(),
                relation.arity()
            )));
        }
        let vars = atom.args.iter().map(|a| index[a.as_str()]).collect();
        atoms.push(CompiledAtom { relation, vars });
    }

    let mut out = Relation::empty(k, n_free)?;
    // 0-ary atoms are decided up front
    if atoms
        .iter()
        .any(|a| a.vars.is_empty() && !a.relation.contains(&[]))
    {
        return Ok(out);
    }
    // checks[v]: atoms whose last variable (in assignment order) is v
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); n_vars];
    for (i, a) in atoms.iter().enumerate() {
        if let Some(&last) = a.vars.iter().max() {
            checks[last].push(i);
        }
    }
    let mut search = Search {
        k,
        n_free,
        atoms: &atoms,
        checks: &checks,
        values: vec![0; n_vars],
        scratch: Vec::new(),
    };
    search.run(0, &mut out);
    Ok(out)
}

struct Search<'a> {
    k: usize,
    n_free: usize,
    atoms: &'a [CompiledAtom],
    checks: &'a [Vec<usize>],
    values: Vec<Elem>,
    scratch: Vec<Elem>,
}

impl Search<'_> {
    fn consistent(&mut self, var: usize) -> bool {
        for &ai in &self.checks[var] {
            let atom = &self.atoms[ai];
            self.scratch.clear();
            self.scratch.extend(atom.vars.iter().map(|&v| self.values[v]));
            if !atom.relation.contains(&self.scratch) {
                return false;
            }
        }
        true
    }

    /// Returns true if a full assignment was reached below `level` (only
    /// meaningful once all free variables are fixed).
    fn run(&mut self, level: usize, out: &mut Relation) -> bool {
        if level == self.values.len() {
            let idx = self.values[..self.n_free]
                .iter()
                .fold(0usize, |acc, &a| acc * self.k + a as usize);
            out.insert_index(idx);
            return true;
        }
        for a in 0..self.k {
            self.values[level] = a as Elem;
            if !self.consistent(level) {
                continue;
            }
            if self.run(level + 1, out) && level >= self.n_free {
                return true;
            }
        }
        false
    }
}
