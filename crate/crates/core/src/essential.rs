//! Essential relations: those not expressible as a conjunction of relations of
//! smaller arity on distinct variables.
//!
//! A relation `ρ` of arity `n ≥ 1` is essential iff it differs from `ρ̃`, the
//! conjunction of its `n` one-coordinate projections, iff it has an essential
//! tuple: a non-member that becomes a member after changing any single
//! coordinate to a suitable repair value. Arity-0 relations count as essential.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{Elem, Relation};

/// Witness of essentiality: `ρ(a) = 0` and `ρ(a[i := b_i]) = 1` for every `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EssentialTuple {
    pub a: Vec<Elem>,
    pub b: Vec<Elem>,
}

impl EssentialTuple {
    pub fn arity(&self) -> usize {
        self.a.len()
    }

    /// Checks the defining conditions against `relation`.
    pub fn certifies(&self, relation: &Relation) -> bool {
        self.certifies_with(relation.k(), relation.arity(), |t| relation.contains(t))
    }

    /// Same check against an arbitrary membership oracle.
    pub fn certifies_with(
        &self,
        k: usize,
        arity: usize,
        mut member: impl FnMut(&[Elem]) -> bool,
    ) -> bool {
        if arity == 0 || self.a.len() != arity || self.b.len() != arity {
            return false;
        }
        if self.a.iter().chain(&self.b).any(|&v| v as usize >= k) {
            return false;
        }
        if member(&self.a) {
            return false;
        }
        let mut probe = self.a.clone();
        for i in 0..arity {
            probe[i] = self.b[i];
            let ok = member(&probe);
            probe[i] = self.a[i];
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Relation of arity `n` holding `x` iff `x` without coordinate `i` lies in `sigma`.
fn cylinder(sigma: &Relation, i: usize, n: usize) -> Result<Relation> {
    let k = sigma.k();
    let mut out = Relation::empty(k, n)?;
    let low_size = k.pow((n - i - 1) as u32);
    for idx in sigma.indices() {
        let low = idx % low_size;
        let high = idx / low_size;
        for a in 0..k {
            out.insert_index((high * k + a) * low_size + low);
        }
    }
    Ok(out)
}

/// `ρ̃`: the conjunction of the one-coordinate projections of `ρ`.
pub fn tilde(rel: &Relation) -> Result<Relation> {
    let n = rel.arity();
    if n == 0 {
        return Err(Error::InvalidArgument("ρ̃ is undefined for arity 0".into()));
    }
    let mut out = Relation::full(rel.k(), n)?;
    for i in 0..n {
        let sigma = rel.project_exists(i)?;
        out = out.intersect(&cylinder(&sigma, i, n)?)?;
    }
    Ok(out)
}

pub fn is_essential(rel: &Relation) -> bool {
    if rel.arity() == 0 {
        return true;
    }
    tilde(rel).map(|t| &t != rel).unwrap_or(false)
}

/// Lexicographically smallest essential tuple (and smallest repairs), if any.
pub fn find_essential_tuple(rel: &Relation) -> Option<EssentialTuple> {
    let n = rel.arity();
    if n == 0 {
        return None;
    }
    let k = rel.k();
    let weights: Vec<usize> = (0..n).map(|i| k.pow((n - 1 - i) as u32)).collect();
    'candidates: for idx in 0..rel.size() {
        if rel.contains_index(idx) {
            continue;
        }
        let a = rel.tuple_at(idx);
        let mut b = Vec::with_capacity(n);
        for i in 0..n {
            let base = idx - a[i] as usize * weights[i];
            match (0..k).find(|&v| rel.contains_index(base + v * weights[i])) {
                Some(v) => b.push(v as Elem),
                None => continue 'candidates,
            }
        }
        return Some(EssentialTuple { a, b });
    }
    None
}

/// One conjunct of a decomposition: `relation` applied to `coords` (0-based,
/// strictly increasing, in the original relation's coordinates).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Part {
    pub coords: Vec<usize>,
    pub relation: Relation,
}

/// `ρ` as a conjunction of essential relations on distinct variables. The
/// empty part list denotes the full relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub k: usize,
    pub arity: usize,
    pub parts: Vec<Part>,
}

impl Decomposition {
    /// Re-evaluates the conjunction of the parts.
    pub fn conjunction(&self) -> Result<Relation> {
        let mut scratch = Vec::new();
        Relation::from_fn(self.k, self.arity, |t| {
            self.parts.iter().all(|p| {
                scratch.clear();
                scratch.extend(p.coords.iter().map(|&c| t[c]));
                p.relation.contains(&scratch)
            })
        })
    }
}

impl Serialize for Decomposition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.parts.serialize(serializer)
    }
}

/// Splits `ρ` into essential parts by recursing through its projections.
pub fn decompose(rel: &Relation) -> Decomposition {
    let mut memo = HashMap::new();
    Decomposition {
        k: rel.k(),
        arity: rel.arity(),
        parts: decompose_rec(rel, &mut memo),
    }
}

fn decompose_rec(rel: &Relation, memo: &mut HashMap<Relation, Vec<Part>>) -> Vec<Part> {
    if let Some(parts) = memo.get(rel) {
        return parts.clone();
    }
    let n = rel.arity();
    let parts = if rel.is_full() {
        Vec::new()
    } else if is_essential(rel) {
        vec![Part {
            coords: (0..n).collect(),
            relation: rel.clone(),
        }]
    } else {
        let mut parts = Vec::new();
        for i in 0..n {
            let sigma = rel.project_exists(i).expect("coordinate in range");
            for part in decompose_rec(&sigma, memo) {
                let coords = part
                    .coords
                    .iter()
                    .map(|&c| if c >= i { c + 1 } else { c })
                    .collect();
                parts.push(Part {
                    coords,
                    relation: part.relation,
                });
            }
        }
        parts.sort();
        parts.dedup();
        parts
    };
    memo.insert(rel.clone(), parts.clone());
    parts
}

/// Result of [`essential_from_blocks`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockExtraction {
    /// Essential relation obtained by existentially quantifying the dropped coordinates.
    pub relation: Relation,
    /// Original coordinates that survive, in order.
    pub kept: Vec<usize>,
    /// Remaining length of each block.
    pub block_lengths: Vec<usize>,
}

/// Extracts an essential relation of arity at least `blocks.len()` from a
/// relation with a blockwise essential tuple.
///
/// The coordinates of `rel` are split into consecutive blocks of the given
/// lengths. Requires `rel(α_1..α_n) = 0` and `rel(α_1..β_j..α_n) = 1` for each
/// `j`. While the current relation is inessential, the smallest coordinate `i`
/// with `σ_i(γ without i) = 0` is quantified away.
pub fn essential_from_blocks(
    rel: &Relation,
    blocks: &[usize],
    alpha: &[Vec<Elem>],
    beta: &[Vec<Elem>],
) -> Result<BlockExtraction> {
    if alpha.len() != blocks.len() || beta.len() != blocks.len() {
        return Err(Error::Hypothesis("one α and one β per block required".into()));
    }
    if blocks.iter().sum::<usize>() != rel.arity() {
        return Err(Error::Hypothesis(format!(
            "block lengths {blocks:?} do not cover arity {}",
            rel.arity()
        )));
    }
    for (j, &len) in blocks.iter().enumerate() {
        if len == 0 || alpha[j].len() != len || beta[j].len() != len {
            return Err(Error::Hypothesis(format!("block {j} is empty or mis-sized")));
        }
    }
    let mut owner: Vec<usize> = Vec::with_capacity(rel.arity());
    for (j, &len) in blocks.iter().enumerate() {
        owner.extend(std::iter::repeat(j).take(len));
    }
    let mut gamma: Vec<Elem> = alpha.concat();
    let mut repairs: Vec<Vec<Elem>> = (0..blocks.len())
        .map(|j| {
            let mut t = Vec::with_capacity(gamma.len());
            for (jj, a) in alpha.iter().enumerate() {
                t.extend_from_slice(if jj == j { &beta[j] } else { a });
            }
            t
        })
        .collect();
    if gamma.iter().any(|&v| v as usize >= rel.k()) || repairs.iter().flatten().any(|&v| v as usize >= rel.k()) {
        return Err(Error::Hypothesis("tuple entry out of range".into()));
    }
    if rel.contains(&gamma) {
        return Err(Error::Hypothesis("ρ(α_1..α_n) must be 0".into()));
    }
    if let Some(j) = repairs.iter().position(|t| !rel.contains(t)) {
        return Err(Error::Hypothesis(format!("repair of block {j} is not in ρ")));
    }

    let mut current = rel.clone();
    let mut kept: Vec<usize> = (0..rel.arity()).collect();
    while !is_essential(&current) {
        let mut chosen = None;
        for i in 0..current.arity() {
            let sigma = current.project_exists(i)?;
            let mut reduced = gamma.clone();
            reduced.remove(i);
            if !sigma.contains(&reduced) {
                chosen = Some((i, sigma));
                break;
            }
        }
        // current = current~ and current(γ) = 0, so some projection rejects γ
        let (i, sigma) = chosen.expect("inessential relation with a zero at γ");
        debug_assert!(
            owner.iter().filter(|&&o| o == owner[i]).count() > 1,
            "singleton blocks are never dropped"
        );
        gamma.remove(i);
        for t in &mut repairs {
            t.remove(i);
        }
        owner.remove(i);
        kept.remove(i);
        current = sigma;
    }
    let block_lengths = (0..blocks.len())
        .map(|j| owner.iter().filter(|&&o| o == j).count())
        .collect();
    Ok(BlockExtraction {
        relation: current,
        kept,
        block_lengths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::for_each_tuple;

    fn xor3() -> Relation {
        Relation::from_fn(2, 3, |t| (t[0] ^ t[1] ^ t[2]) == 0).unwrap()
    }

    fn leq2() -> Relation {
        Relation::from_tuples(2, 2, [[0, 0], [0, 1], [1, 1]]).unwrap()
    }

    fn chain3() -> Relation {
        Relation::from_fn(2, 3, |t| t[0] <= t[1] && t[1] <= t[2]).unwrap()
    }

    #[test]
    fn tilde_examples() {
        assert!(tilde(&xor3()).unwrap().is_full());
        assert!(tilde(&leq2()).unwrap().is_full());
        let full = Relation::full(2, 2).unwrap();
        assert_eq!(tilde(&full).unwrap(), full);
        assert!(tilde(&Relation::constant(2, true).unwrap()).is_err());
    }

    #[test]
    fn essentiality_examples() {
        assert!(is_essential(&xor3()));
        assert!(!is_essential(&chain3()));
        assert!(is_essential(&leq2()));
        assert!(is_essential(&Relation::constant(2, false).unwrap()));
        assert!(!is_essential(&Relation::empty(2, 2).unwrap()));
    }

    #[test]
    fn essential_tuple_examples() {
        let t = find_essential_tuple(&xor3()).unwrap();
        assert_eq!(t, EssentialTuple { a: vec![0, 0, 1], b: vec![1, 1, 0] });
        assert!(t.certifies(&xor3()));
        assert_eq!(find_essential_tuple(&Relation::full(2, 2).unwrap()), None);
        assert_eq!(
            find_essential_tuple(&leq2()),
            Some(EssentialTuple { a: vec![1, 0], b: vec![0, 1] })
        );
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&chain3());
        let mut got: Vec<(Vec<usize>, Relation)> =
            d.parts.iter().map(|p| (p.coords.clone(), p.relation.clone())).collect();
        got.sort();
        assert_eq!(
            got,
            vec![
                (vec![0, 1], leq2()),
                (vec![0, 2], leq2()),
                (vec![1, 2], leq2()),
            ]
        );
        assert_eq!(d.conjunction().unwrap(), chain3());

        let d = decompose(&xor3());
        assert_eq!(d.parts, vec![Part { coords: vec![0, 1, 2], relation: xor3() }]);

        let d = decompose(&Relation::full(2, 2).unwrap());
        assert!(d.parts.is_empty());
        assert!(d.conjunction().unwrap().is_full());

        let d = decompose(&Relation::empty(2, 3).unwrap());
        assert_eq!(d.parts.len(), 1);
        assert_eq!(d.parts[0].relation, Relation::constant(2, false).unwrap());
        assert!(d.conjunction().unwrap().is_empty());
    }

    #[test]
    fn decomposition_json_shape() {
        let v = serde_json::to_value(decompose(&leq2())).unwrap();
        assert_eq!(
            v,
            serde_json::json!([{"coords": [0, 1], "relation": {"k": 2, "arity": 2, "tuples": [[0,0],[0,1],[1,1]]}}])
        );
    }

    #[test]
    fn blocks_strip_dummy_coordinates() {
        let rho = Relation::from_fn(2, 5, |t| (t[0] ^ t[1] ^ t[2]) == 0).unwrap();
        let out = essential_from_blocks(
            &rho,
            &[1, 1, 3],
            &[vec![1], vec![0], vec![0, 0, 0]],
            &[vec![0], vec![1], vec![1, 0, 0]],
        )
        .unwrap();
        assert_eq!(out.relation, xor3());
        assert_eq!(out.kept, vec![0, 1, 2]);
        assert_eq!(out.block_lengths, vec![1, 1, 1]);
    }

    #[test]
    fn blocks_on_essential_relation_return_it() {
        let xor4 = Relation::from_fn(2, 4, |t| (t[0] ^ t[1] ^ t[2] ^ t[3]) == 0).unwrap();
        let out = essential_from_blocks(
            &xor4,
            &[2, 2],
            &[vec![0, 0], vec![0, 1]],
            &[vec![0, 1], vec![0, 0]],
        )
        .unwrap();
        assert_eq!(out.relation, xor4);
        assert_eq!(out.kept, vec![0, 1, 2, 3]);

        let out = essential_from_blocks(&xor3(), &[1, 1, 1], &[vec![0], vec![0], vec![1]], &[vec![1], vec![1], vec![0]])
            .unwrap();
        assert_eq!(out.relation, xor3());
    }

    #[test]
    fn blocks_reject_bad_hypotheses() {
        let xor4 = Relation::from_fn(2, 4, |t| (t[0] ^ t[1] ^ t[2] ^ t[3]) == 0).unwrap();
        // α is in the relation
        assert!(matches!(
            essential_from_blocks(&xor4, &[2, 2], &[vec![0, 0], vec![0, 0]], &[vec![0, 1], vec![0, 1]]),
            Err(Error::Hypothesis(_))
        ));
        // repair of block 0 fails
        assert!(matches!(
            essential_from_blocks(&xor4, &[2, 2], &[vec![0, 0], vec![0, 1]], &[vec![1, 1], vec![0, 0]]),
            Err(Error::Hypothesis(_))
        ));
        assert!(essential_from_blocks(&xor4, &[3, 2], &[vec![0, 0, 0], vec![0, 1]], &[vec![0, 0, 1], vec![0, 0]]).is_err());
    }

    #[test]
    fn blocks_output_is_essential_on_random_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        for _ in 0..4000 {
            let arity = rng.gen_range(2..=5);
            let mask: u32 = rng.gen();
            let rho = Relation::from_fn(2, arity, |t| {
                let idx = t.iter().fold(0, |a, &b| a * 2 + b as usize);
                mask >> idx & 1 == 1
            })
            .unwrap();
            // random composition of arity into blocks
            let mut blocks = Vec::new();
            let mut left = arity;
            while left > 0 {
                let len = rng.gen_range(1..=left);
                blocks.push(len);
                left -= len;
            }
            let alpha: Vec<Vec<Elem>> = blocks.iter().map(|&l| (0..l).map(|_| rng.gen_range(0..2)).collect()).collect();
            let beta: Vec<Vec<Elem>> = blocks.iter().map(|&l| (0..l).map(|_| rng.gen_range(0..2)).collect()).collect();
            if let Ok(out) = essential_from_blocks(&rho, &blocks, &alpha, &beta) {
                assert!(is_essential(&out.relation));
                assert!(out.relation.arity() >= blocks.len());
                assert_eq!(rho.project_onto(&out.kept).unwrap(), out.relation);
                checked += 1;
            }
        }
        assert!(checked > 50, "too few valid random instances ({checked})");
    }

    #[test]
    fn tilde_dominates_relation_exhaustively() {
        for arity in 1..=3usize {
            for mask in 0..(1u32 << (1 << arity)) {
                let rho = Relation::from_fn(2, arity, |t| {
                    let idx = t.iter().fold(0, |a, &b| a * 2 + b as usize);
                    mask >> idx & 1 == 1
                })
                .unwrap();
                assert!(rho.leq(&tilde(&rho).unwrap()).unwrap());
            }
        }
        let mut n = 0;
        for_each_tuple(2, 2, |_, _| n += 1);
        assert_eq!(n, 4);
    }
}
