//! Finite relations over `E_k = {0, .., k-1}` stored as bit vectors.
//!
//! A tuple `(a_1, .., a_n)` lives at index `a_1 * k^(n-1) + .. + a_n`, i.e. the
//! first coordinate is the most significant digit. That ordering is part of the
//! on-disk format: canonical JSON lists tuples in increasing index order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A domain element.
pub type Elem = u8;

/// Largest supported domain size.
pub const MAX_K: usize = 16;

/// Largest number of tuples (`k^arity`) a single relation may span.
pub const MAX_TUPLES: usize = 1 << 24;

/// Number of tuples in `E_k^arity`, or an error if it exceeds `cap`.
pub fn tuple_space(k: usize, arity: usize, cap: usize) -> Result<usize> {
    let mut size: usize = 1;
    for _ in 0..arity {
        size = size
            .checked_mul(k)
            .filter(|&s| s <= cap)
            .ok_or(Error::TooLarge { k, arity, cap })?;
    }
    Ok(size)
}

fn check_k(k: usize) -> Result<()> {
    if (2..=MAX_K).contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidDomain(k))
    }
}

/// Calls `f(index, tuple)` for every tuple of `E_k^arity` in index order.
pub fn for_each_tuple(k: usize, arity: usize, mut f: impl FnMut(usize, &[Elem])) {
    let mut tuple = vec![0 as Elem; arity];
    let mut index = 0;
    loop {
        f(index, &tuple);
        index += 1;
        let mut pos = arity;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if (tuple[pos] as usize) + 1 < k {
                tuple[pos] += 1;
                break;
            }
            tuple[pos] = 0;
        }
    }
}

/// Advances `tuple` to its successor in index order; returns false after the last one.
pub fn next_tuple(k: usize, tuple: &mut [Elem]) -> bool {
    for pos in (0..tuple.len()).rev() {
        if (tuple[pos] as usize) + 1 < k {
            tuple[pos] += 1;
            return true;
        }
        tuple[pos] = 0;
    }
    false
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RelationFile", into = "RelationFile")]
pub struct Relation {
    k: usize,
    arity: usize,
    bits: Vec<u64>,
}

impl Relation {
    pub fn empty(k: usize, arity: usize) -> Result<Self> {
        check_k(k)?;
        let size = tuple_space(k, arity, MAX_TUPLES)?;
        Ok(Relation {
            k,
            arity,
            bits: vec![0; size.div_ceil(64)],
        })
    }

    pub fn full(k: usize, arity: usize) -> Result<Self> {
        let mut rel = Self::empty(k, arity)?;
        for idx in 0..rel.size() {
            rel.insert_index(idx);
        }
        Ok(rel)
    }

    /// The 0-ary relation `true` or `false`.
    pub fn constant(k: usize, value: bool) -> Result<Self> {
        if value {
            Self::full(k, 0)
        } else {
            Self::empty(k, 0)
        }
    }

    /// Builds a relation from tuples of elements; duplicates are ignored.
    pub fn from_tuples<I, T>(k: usize, arity: usize, tuples: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[Elem]>,
    {
        let mut rel = Self::empty(k, arity)?;
        for tuple in tuples {
            let tuple = tuple.as_ref();
            rel.check_tuple(tuple)?;
            let idx = rel.index_of(tuple);
            rel.insert_index(idx);
        }
        Ok(rel)
    }

    /// Builds a relation from the characteristic function `pred`.
    pub fn from_fn(k: usize, arity: usize, mut pred: impl FnMut(&[Elem]) -> bool) -> Result<Self> {
        let mut rel = Self::empty(k, arity)?;
        for_each_tuple(k, arity, |idx, t| {
            if pred(t) {
                rel.insert_index(idx);
            }
        });
        Ok(rel)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// `k^arity`, the length of the bit vector.
    pub fn size(&self) -> usize {
        self.k.pow(self.arity as u32)
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    fn check_tuple(&self, tuple: &[Elem]) -> Result<()> {
        if tuple.len() != self.arity {
            return Err(Error::WrongTupleLength {
                expected: self.arity,
                found: tuple.len(),
            });
        }
        if let Some(&v) = tuple.iter().find(|&&v| v as usize >= self.k) {
            return Err(Error::ElementOutOfRange {
                value: v as usize,
                k: self.k,
            });
        }
        Ok(())
    }

    pub fn index_of(&self, tuple: &[Elem]) -> usize {
        tuple
            .iter()
            .fold(0usize, |acc, &a| acc * self.k + a as usize)
    }

    pub fn tuple_at(&self, mut index: usize) -> Vec<Elem> {
        let mut tuple = vec![0; self.arity];
        for slot in tuple.iter_mut().rev() {
            *slot = (index % self.k) as Elem;
            index /= self.k;
        }
        tuple
    }

    #[inline]
    pub fn contains_index(&self, index: usize) -> bool {
        self.bits[index >> 6] >> (index & 63) & 1 == 1
    }

    /// Membership test. Panics if the tuple has the wrong length.
    #[inline]
    pub fn contains(&self, tuple: &[Elem]) -> bool {
        debug_assert_eq!(tuple.len(), self.arity);
        self.contains_index(self.index_of(tuple))
    }

    /// Membership test that rejects malformed tuples instead of panicking.
    pub fn try_contains(&self, tuple: &[Elem]) -> Result<bool> {
        self.check_tuple(tuple)?;
        Ok(self.contains(tuple))
    }

    #[inline]
    pub fn insert_index(&mut self, index: usize) {
        self.bits[index >> 6] |= 1 << (index & 63);
    }

    #[inline]
    pub fn remove_index(&mut self, index: usize) {
        self.bits[index >> 6] &= !(1 << (index & 63));
    }

    pub fn insert(&mut self, tuple: &[Elem]) {
        let idx = self.index_of(tuple);
        self.insert_index(idx);
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.size()
    }

    /// Indices of member tuples, ascending.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let bit = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + bit)
            })
        })
    }

    /// Member tuples in canonical (index) order.
    pub fn tuples(&self) -> impl Iterator<Item = Vec<Elem>> + '_ {
        self.indices().map(|idx| self.tuple_at(idx))
    }

    fn same_shape(&self, other: &Relation) -> Result<()> {
        if self.k != other.k || self.arity != other.arity {
            return Err(Error::ShapeMismatch(format!(
                "(k={}, arity={}) vs (k={}, arity={})",
                self.k, self.arity, other.k, other.arity
            )));
        }
        Ok(())
    }

    /// Tuple-set inclusion `self ⊆ other`.
    pub fn leq(&self, other: &Relation) -> Result<bool> {
        self.same_shape(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .all(|(a, b)| a & !b == 0))
    }

    pub fn intersect(&self, other: &Relation) -> Result<Relation> {
        self.same_shape(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect();
        Ok(Relation { bits, ..self.clone() })
    }

    pub fn union(&self, other: &Relation) -> Result<Relation> {
        self.same_shape(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect();
        Ok(Relation { bits, ..self.clone() })
    }

    /// `∃x_i ρ`, dropping coordinate `i` (0-based).
    pub fn project_exists(&self, i: usize) -> Result<Relation> {
        if i >= self.arity {
            return Err(Error::CoordinateOutOfRange {
                index: i,
                arity: self.arity,
            });
        }
        let mut out = Relation::empty(self.k, self.arity - 1)?;
        let k = self.k;
        // index = high * k^(n-i) + a_i * k^(n-i-1) + low
        let low_size = k.pow((self.arity - i - 1) as u32);
        for idx in self.indices() {
            let low = idx % low_size;
            let high = idx / (low_size * k);
            out.insert_index(high * low_size + low);
        }
        Ok(out)
    }

    /// Keeps only the listed coordinates, in the given order, quantifying the rest.
    pub fn project_onto(&self, coords: &[usize]) -> Result<Relation> {
        let mut seen = vec![false; self.arity];
        for &c in coords {
            if c >= self.arity {
                return Err(Error::CoordinateOutOfRange {
                    index: c,
                    arity: self.arity,
                });
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidMap(format!("coordinate {c} listed twice")));
            }
        }
        let mut out = Relation::empty(self.k, coords.len())?;
        let mut image = vec![0; coords.len()];
        for t in self.tuples() {
            for (slot, &c) in image.iter_mut().zip(coords) {
                *slot = t[c];
            }
            out.insert(&image);
        }
        Ok(out)
    }

    /// Variable identification: `σ(x_0..x_{m-1}) = ρ(x_{map[0]}, .., x_{map[n-1]})`.
    ///
    /// `map` must hit every target in `0..m` where `m = max(map) + 1`.
    /// Permutations are the bijective case.
    pub fn identify(&self, map: &[usize]) -> Result<Relation> {
        if map.len() != self.arity {
            return Err(Error::InvalidMap(format!(
                "map has {} entries for arity {}",
                map.len(),
                self.arity
            )));
        }
        let m = map.iter().map(|&t| t + 1).max().unwrap_or(0);
        let mut hit = vec![false; m];
        for &t in map {
            hit[t] = true;
        }
        if let Some(gap) = hit.iter().position(|&h| !h) {
            return Err(Error::InvalidMap(format!("target index {gap} is never used")));
        }
        let mut source = vec![0 as Elem; self.arity];
        Relation::from_fn(self.k, m, |t| {
            for (slot, &target) in source.iter_mut().zip(map) {
                *slot = t[target];
            }
            self.contains(&source)
        })
    }

    /// Reorders coordinates: result coordinate `j` is source coordinate `order[j]`.
    pub fn permute(&self, order: &[usize]) -> Result<Relation> {
        let mut map = vec![usize::MAX; self.arity];
        if order.len() != self.arity {
            return Err(Error::InvalidMap("permutation length mismatch".into()));
        }
        for (j, &src) in order.iter().enumerate() {
            if src >= self.arity || map[src] != usize::MAX {
                return Err(Error::InvalidMap(format!("{order:?} is not a permutation")));
            }
            map[src] = j;
        }
        self.identify(&map)
    }
}

/// `make_relation` with range checking on raw integers (as read from JSON).
pub fn make_relation(k: usize, arity: usize, tuples: &[Vec<usize>]) -> Result<Relation> {
    let mut rel = Relation::empty(k, arity)?;
    let mut buf = Vec::with_capacity(arity);
    for tuple in tuples {
        if tuple.len() != arity {
            return Err(Error::WrongTupleLength {
                expected: arity,
                found: tuple.len(),
            });
        }
        buf.clear();
        for &v in tuple {
            if v >= k {
                return Err(Error::ElementOutOfRange { value: v, k });
            }
            buf.push(v as Elem);
        }
        rel.insert(&buf);
    }
    Ok(rel)
}

/// The equality relation `σ_k^=`.
pub fn eq_relation(k: usize) -> Result<Relation> {
    Relation::from_fn(k, 2, |t| t[0] == t[1])
}

/// The singleton unary relation `{a}`.
pub fn const_relation(k: usize, a: usize) -> Result<Relation> {
    check_k(k)?;
    if a >= k {
        return Err(Error::ElementOutOfRange { value: a, k });
    }
    Relation::from_tuples(k, 1, [[a as Elem]])
}

/// The unary relation `x ∈ C`.
pub fn subset_relation(k: usize, set: &[usize]) -> Result<Relation> {
    check_k(k)?;
    let tuples: Vec<Vec<usize>> = set.iter().map(|&a| vec![a]).collect();
    make_relation(k, 1, &tuples)
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Relation(k={}, arity={}, {{", self.k, self.arity)?;
        for (i, t) in self.tuples().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "(")?;
            for (j, a) in t.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        write!(f, "}})")
    }
}

/// Standalone relation file: `{"k": .., "arity": .., "tuples": [[..], ..]}`.
#[derive(Serialize, Deserialize)]
struct RelationFile {
    k: usize,
    arity: usize,
    tuples: Vec<Vec<usize>>,
}

impl TryFrom<RelationFile> for Relation {
    type Error = Error;

    fn try_from(file: RelationFile) -> Result<Relation> {
        make_relation(file.k, file.arity, &file.tuples)
    }
}

impl From<Relation> for RelationFile {
    fn from(rel: Relation) -> RelationFile {
        RelationFile {
            k: rel.k,
            arity: rel.arity,
            tuples: rel
                .tuples()
                .map(|t| t.into_iter().map(usize::from).collect())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedRelation {
    pub name: String,
    pub relation: Relation,
}

/// A finite set of named relations over a common domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StructureFile", into = "StructureFile")]
pub struct Structure {
    k: usize,
    relations: Vec<NamedRelation>,
}

/// Builtin atom names usable in formulas; never valid as user relation names.
pub fn is_reserved_name(name: &str) -> bool {
    name.is_empty() || name == "=" || name == "false" || name.starts_with("const:")
}

impl Structure {
    pub fn new(k: usize) -> Result<Self> {
        check_k(k)?;
        Ok(Structure {
            k,
            relations: Vec::new(),
        })
    }

    pub fn with_relations<S: Into<String>>(
        k: usize,
        relations: impl IntoIterator<Item = (S, Relation)>,
    ) -> Result<Self> {
        let mut s = Self::new(k)?;
        for (name, rel) in relations {
            s.add(name, rel)?;
        }
        Ok(s)
    }

    pub fn add(&mut self, name: impl Into<String>, relation: Relation) -> Result<()> {
        let name = name.into();
        if is_reserved_name(&name) {
            return Err(Error::ReservedName(name));
        }
        self.push_checked(name, relation)
    }

    /// Adds a relation under a builtin name (used when augmenting with `SR_k`).
    pub(crate) fn add_builtin(&mut self, name: String, relation: Relation) -> Result<()> {
        self.push_checked(name, relation)
    }

    fn push_checked(&mut self, name: String, relation: Relation) -> Result<()> {
        if relation.k() != self.k {
            return Err(Error::ShapeMismatch(format!(
                "relation `{name}` has k={} but the structure has k={}",
                relation.k(),
                self.k
            )));
        }
        if self.get(&name).is_some() {
            return Err(Error::DuplicateName(name));
        }
        self.relations.push(NamedRelation { name, relation });
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn relations(&self) -> &[NamedRelation] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Relation> {
        self.relations
            .iter()
            .find(|r| r.name == name)
            .map(|r| &r.relation)
    }

    /// `ar(G)`: the largest member arity, 0 for the empty structure.
    pub fn max_arity(&self) -> usize {
        self.relations
            .iter()
            .map(|r| r.relation.arity())
            .max()
            .unwrap_or(0)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("structure serialization is infallible")
    }
}

#[derive(Serialize, Deserialize)]
struct StructureFile {
    k: usize,
    relations: Vec<StructureEntry>,
}

#[derive(Serialize, Deserialize)]
struct StructureEntry {
    name: String,
    arity: usize,
    tuples: Vec<Vec<usize>>,
}

impl TryFrom<StructureFile> for Structure {
    type Error = Error;

    fn try_from(file: StructureFile) -> Result<Structure> {
        let mut s = Structure::new(file.k)?;
        for entry in file.relations {
            let rel = make_relation(file.k, entry.arity, &entry.tuples)?;
            s.add(entry.name, rel)?;
        }
        Ok(s)
    }
}

impl From<Structure> for StructureFile {
    fn from(s: Structure) -> StructureFile {
        StructureFile {
            k: s.k,
            relations: s
                .relations
                .into_iter()
                .map(|r| {
                    let file = RelationFile::from(r.relation);
                    StructureEntry {
                        name: r.name,
                        arity: file.arity,
                        tuples: file.tuples,
                    }
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leq2() -> Relation {
        Relation::from_tuples(2, 2, [[0, 0], [0, 1], [1, 1]]).unwrap()
    }

    fn xor3() -> Relation {
        Relation::from_tuples(2, 3, [[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]]).unwrap()
    }

    #[test]
    fn make_relation_examples() {
        let le = make_relation(2, 2, &[vec![0, 0], vec![0, 1], vec![1, 1], vec![0, 1]]).unwrap();
        assert_eq!(le, leq2());
        assert_eq!(le.count(), 3);

        let f = make_relation(2, 0, &[]).unwrap();
        assert_eq!(f.size(), 1);
        assert!(f.is_empty());
        assert!(Relation::constant(2, true).unwrap().contains(&[]));

        let x = make_relation(2, 3, &[vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]])
            .unwrap();
        assert_eq!(x, xor3());
    }

    #[test]
    fn make_relation_errors() {
        assert!(matches!(
            make_relation(2, 2, &[vec![0, 2]]),
            Err(Error::ElementOutOfRange { value: 2, k: 2 })
        ));
        assert!(matches!(
            make_relation(2, 2, &[vec![0]]),
            Err(Error::WrongTupleLength { .. })
        ));
        assert!(matches!(Relation::empty(2, 25), Err(Error::TooLarge { .. })));
        assert!(Relation::empty(2, 24).is_ok());
        assert!(matches!(Relation::empty(1, 2), Err(Error::InvalidDomain(1))));
    }

    #[test]
    fn index_is_big_endian() {
        let r = Relation::empty(3, 3).unwrap();
        assert_eq!(r.index_of(&[1, 0, 2]), 9 + 2);
        assert_eq!(r.tuple_at(11), vec![1, 0, 2]);
    }

    #[test]
    fn builtin_relations() {
        let eq2 = eq_relation(2).unwrap();
        assert_eq!(eq2.tuples().collect::<Vec<_>>(), vec![vec![0, 0], vec![1, 1]]);
        assert_eq!(eq2.count(), 2);
        let eq3 = eq_relation(3).unwrap();
        assert_eq!(
            eq3.tuples().collect::<Vec<_>>(),
            vec![vec![0, 0], vec![1, 1], vec![2, 2]]
        );

        assert_eq!(const_relation(2, 1).unwrap().tuples().collect::<Vec<_>>(), vec![vec![1]]);
        assert_eq!(const_relation(3, 0).unwrap().tuples().collect::<Vec<_>>(), vec![vec![0]]);
        assert!(const_relation(2, 2).is_err());

        assert!(subset_relation(2, &[0, 1]).unwrap().is_full());
        assert_eq!(subset_relation(3, &[1]).unwrap().tuples().collect::<Vec<_>>(), vec![vec![1]]);
        assert!(subset_relation(2, &[]).unwrap().is_empty());
        assert!(subset_relation(2, &[3]).is_err());
    }

    #[test]
    fn projection_examples() {
        assert!(leq2().project_exists(0).unwrap().is_full());
        let p = xor3().project_exists(1).unwrap();
        assert_eq!(p.arity(), 2);
        assert!(p.is_full());
        let single = Relation::from_tuples(2, 2, [[0, 1]]).unwrap();
        assert_eq!(
            single.project_exists(0).unwrap(),
            Relation::from_tuples(2, 1, [[1]]).unwrap()
        );
        assert!(matches!(
            leq2().project_exists(2),
            Err(Error::CoordinateOutOfRange { .. })
        ));
    }

    #[test]
    fn identify_examples() {
        let s = xor3().identify(&[0, 0, 1]).unwrap();
        assert_eq!(s, Relation::from_tuples(2, 2, [[0, 0], [1, 0]]).unwrap());

        let geq = leq2().identify(&[1, 0]).unwrap();
        assert_eq!(geq, Relation::from_tuples(2, 2, [[0, 0], [1, 0], [1, 1]]).unwrap());

        assert_eq!(xor3().identify(&[0, 1, 2]).unwrap(), xor3());
        assert!(matches!(xor3().identify(&[0, 2, 2]), Err(Error::InvalidMap(_))));
    }

    #[test]
    fn leq_examples() {
        let full = Relation::full(2, 2).unwrap();
        assert!(leq2().leq(&full).unwrap());
        assert!(!full.leq(&leq2()).unwrap());
        assert!(leq2().leq(&leq2()).unwrap());
        assert!(leq2().leq(&xor3()).is_err());
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..n {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn bijective_identify_is_invertible_exhaustively() {
        for arity in 0..=3usize {
            let size = 1usize << arity;
            for mask in 0..(1u64 << size) {
                let rel = Relation::from_fn(2, arity, |t| {
                    let idx = t.iter().fold(0, |a, &b| a * 2 + b as usize);
                    mask >> idx & 1 == 1
                })
                .unwrap();
                for map in permutations(arity) {
                    let mut inverse = vec![0; arity];
                    for (i, &t) in map.iter().enumerate() {
                        inverse[t] = i;
                    }
                    let there = rel.identify(&map).unwrap();
                    assert_eq!(there.identify(&inverse).unwrap(), rel);
                }
            }
        }
    }

    #[test]
    fn structure_json_round_trip_and_validation() {
        let text = r#"{"k": 2, "relations": [{"name": "le", "arity": 2, "tuples": [[1,1],[0,0],[0,1],[0,0]]}]}"#;
        let s = Structure::from_json(text).unwrap();
        assert_eq!(s.get("le"), Some(&leq2()));
        assert_eq!(s.max_arity(), 2);
        let back = Structure::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        let canon: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(canon["relations"][0]["tuples"], serde_json::json!([[0, 0], [0, 1], [1, 1]]));

        let dup = r#"{"k": 2, "relations": [{"name": "a", "arity": 1, "tuples": []}, {"name": "a", "arity": 1, "tuples": []}]}"#;
        assert!(Structure::from_json(dup).is_err());
        let reserved = r#"{"k": 2, "relations": [{"name": "=", "arity": 1, "tuples": []}]}"#;
        assert!(Structure::from_json(reserved).is_err());
        let bad = r#"{"k": 2, "relations": [{"name": "a", "arity": 1, "tuples": [[2]]}]}"#;
        assert!(Structure::from_json(bad).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn relation_strategy() -> impl Strategy<Value = Relation> {
            (2usize..=3, 0usize..=3).prop_flat_map(|(k, arity)| {
                let size = k.pow(arity as u32);
                proptest::collection::vec(any::<bool>(), size).prop_map(move |mask| {
                    Relation::from_fn(k, arity, |t| {
                        let idx = t.iter().fold(0, |a, &b| a * k + b as usize);
                        mask[idx]
                    })
                    .unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn json_round_trip(rel in relation_strategy()) {
                let text = serde_json::to_string(&rel).unwrap();
                let back: Relation = serde_json::from_str(&text).unwrap();
                prop_assert_eq!(back, rel);
            }

            #[test]
            fn projection_is_monotone(a in relation_strategy(), b_mask in any::<u64>()) {
                prop_assume!(a.arity() >= 1);
                // b = a ∪ (some extra tuples)
                let mut b = a.clone();
                for idx in 0..b.size() {
                    if b_mask >> (idx % 64) & 1 == 1 {
                        b.insert_index(idx);
                    }
                }
                for i in 0..a.arity() {
                    let pa = a.project_exists(i).unwrap();
                    let pb = b.project_exists(i).unwrap();
                    prop_assert!(pa.leq(&pb).unwrap());
                }
            }
        }
    }
}
