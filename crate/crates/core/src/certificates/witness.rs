//! Witnesses over a pp-definable domain `C ⊆ E_k` and a fixed tail `α`: a
//! reachability sequence that never settles, or a directed cycle without
//! loops. Both force infinitely many essential relations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{for_each_tuple, Elem, Relation};

/// Eventual behaviour of `D_0 = {a}`, `D_{i+1} = {e ∈ C | ∃d ∈ D_i: ρ(d e α)}`:
/// `D_{preperiod + period} = D_preperiod` with both minimal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceEvidence {
    pub preperiod: usize,
    pub period: usize,
}

fn check_shape(rho: &Relation, c: &[Elem], alpha: &[Elem]) -> Result<()> {
    if rho.arity() != alpha.len() + 2 {
        return Err(Error::InvalidArgument(format!(
            "relation of arity {} needs a tail of length {}, got {}",
            rho.arity(),
            rho.arity().saturating_sub(2),
            alpha.len()
        )));
    }
    let k = rho.k();
    if let Some(&v) = c.iter().chain(alpha).find(|&&v| v as usize >= k) {
        return Err(Error::ElementOutOfRange { value: v as usize, k });
    }
    Ok(())
}

fn edge(rho: &Relation, d: Elem, e: Elem, alpha: &[Elem]) -> bool {
    let mut t = Vec::with_capacity(alpha.len() + 2);
    t.extend([d, e]);
    t.extend_from_slice(alpha);
    rho.contains(&t)
}

/// `∀d ∈ C ∃β ρ(d d β) = 1`.
pub fn loops_somewhere(rho: &Relation, c: &[Elem]) -> bool {
    let n = rho.arity().saturating_sub(2);
    c.iter().all(|&d| {
        let mut found = false;
        for_each_tuple(rho.k(), n, |_, beta| found |= edge(rho, d, d, beta));
        found
    })
}

/// `∀d ∈ C ρ(d d α) = 0`.
pub fn no_loop_at(rho: &Relation, c: &[Elem], alpha: &[Elem]) -> bool {
    c.iter().all(|&d| !edge(rho, d, d, alpha))
}

fn mask(c: &[Elem]) -> u32 {
    c.iter().fold(0, |m, &v| m | 1 << v)
}

/// The reachability sequence from `a`, up to its first repetition.
pub fn reach_sequence(rho: &Relation, c: &[Elem], a: Elem, alpha: &[Elem]) -> Vec<u32> {
    let within = mask(c);
    let mut seq = vec![1u32 << a];
    loop {
        let cur = *seq.last().unwrap();
        let mut next = 0;
        for d in (0..rho.k()).filter(|&d| cur >> d & 1 == 1) {
            for e in (0..rho.k()).filter(|&e| within >> e & 1 == 1) {
                if edge(rho, d as Elem, e as Elem, alpha) {
                    next |= 1 << e;
                }
            }
        }
        if seq.contains(&next) {
            seq.push(next);
            return seq;
        }
        seq.push(next);
    }
}

/// Returns the evidence iff the reachability sequence from `a` is eventually
/// periodic with period greater than one.
pub fn sequence_witness(
    rho: &Relation,
    c: &[Elem],
    a: Elem,
    alpha: &[Elem],
) -> Result<Option<SequenceEvidence>> {
    check_shape(rho, c, alpha)?;
    if !c.contains(&a) {
        return Err(Error::Hypothesis(format!("start {a} is not in C")));
    }
    if !loops_somewhere(rho, c) {
        return Err(Error::Hypothesis("some d ∈ C has no β with ρ(d d β) = 1".into()));
    }
    let seq = reach_sequence(rho, c, a, alpha);
    let last = *seq.last().unwrap();
    let preperiod = seq.iter().position(|&s| s == last).unwrap();
    let period = seq.len() - 1 - preperiod;
    Ok((period > 1).then_some(SequenceEvidence { preperiod, period }))
}

/// The canonical directed cycle `a_0 → … → a_m = a_0` in `e(d, e) = ρ(d e α)`
/// on `C`: shortest length first, then lexicographically smallest with the
/// cycle starting at its least vertex. Requires that no `d ∈ C` has a loop
/// under `α` and every `d ∈ C` has a loop under some tail.
pub fn cycle_witness(rho: &Relation, c: &[Elem], alpha: &[Elem]) -> Result<Option<Vec<Elem>>> {
    check_shape(rho, c, alpha)?;
    if !no_loop_at(rho, c, alpha) || !loops_somewhere(rho, c) {
        return Ok(None);
    }
    let mut vertices: Vec<Elem> = c.to_vec();
    vertices.sort_unstable();
    vertices.dedup();
    let k = rho.k();
    // dist[v]: shortest path length from v back to s through vertices above s
    let back_distances = |s: Elem| -> Vec<Option<usize>> {
        let mut dist = vec![None; k];
        dist[s as usize] = Some(0);
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(w) = queue.pop_front() {
            let dw = dist[w as usize].unwrap();
            for &v in vertices.iter().filter(|&&v| v > s) {
                if dist[v as usize].is_none() && edge(rho, v, w, alpha) {
                    dist[v as usize] = Some(dw + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    };
    let mut best: Option<(usize, Elem, Vec<Option<usize>>)> = None;
    for &s in &vertices {
        let dist = back_distances(s);
        let len = vertices
            .iter()
            .filter(|&&v| v > s && edge(rho, s, v, alpha))
            .filter_map(|&v| dist[v as usize])
            .min()
            .map(|d| d + 1);
        if let Some(len) = len {
            if best.as_ref().map_or(true, |b| len < b.0) {
                best = Some((len, s, dist));
            }
        }
    }
    let Some((len, s, dist)) = best else { return Ok(None) };
    let mut cycle = vec![s];
    let mut cur = s;
    for step in 1..len {
        let want = len - step;
        cur = *vertices
            .iter()
            .find(|&&v| v > s && dist[v as usize] == Some(want) && edge(rho, cur, v, alpha))
            .expect("distance table admits a continuation");
        cycle.push(cur);
    }
    cycle.push(s);
    Ok(Some(cycle))
}
