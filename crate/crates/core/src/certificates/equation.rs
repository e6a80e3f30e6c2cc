//! The main equation: for `ρ` of arity `n + 2` whose co-clone has finitely
//! many essential relations,
//! `∃y ρ(y,y,x̄) = ∃y_0…y_k ⋀_{i<k} ρ(y_i,y_{i+1},x̄) ∧ ⋀_i ρ_0(y_i)`
//! with `ρ_0(y) = ∃x̄ ρ(y,y,x̄)`.

use crate::error::{Error, Result};
use crate::relation::{for_each_tuple, Elem, Relation};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EquationCheck {
    Holds,
    /// Lexicographically smallest `x̄` where the two sides differ.
    Fails(Vec<Elem>),
}

/// `ρ_0` as a bit mask over `E_k`.
pub fn loop_domain(rho: &Relation) -> Result<u32> {
    check_arity(rho)?;
    let k = rho.k();
    let n = rho.arity() - 2;
    let mut c = 0u32;
    let mut t = vec![0 as Elem; n + 2];
    for y in 0..k {
        t[0] = y as Elem;
        t[1] = y as Elem;
        for_each_tuple(k, n, |_, x| {
            t[2..].copy_from_slice(x);
            if rho.contains(&t) {
                c |= 1 << y;
            }
        });
    }
    Ok(c)
}

fn check_arity(rho: &Relation) -> Result<()> {
    if rho.arity() < 2 {
        return Err(Error::InvalidArgument(format!(
            "the main equation needs arity at least 2, got {}",
            rho.arity()
        )));
    }
    Ok(())
}

/// `∃y ρ(y,y,x̄)`.
pub fn left_side(rho: &Relation, x: &[Elem]) -> bool {
    let mut t = Vec::with_capacity(x.len() + 2);
    (0..rho.k()).any(|y| {
        t.clear();
        t.extend([y as Elem, y as Elem]);
        t.extend_from_slice(x);
        rho.contains(&t)
    })
}

/// Right-hand side at `x̄`: a walk of `k` steps inside `ρ_0`.
pub fn right_side(rho: &Relation, c: u32, x: &[Elem]) -> bool {
    let k = rho.k();
    let mut t = vec![0 as Elem; x.len() + 2];
    t[2..].copy_from_slice(x);
    let mut reach = c;
    for _ in 0..k {
        let mut next = 0u32;
        for d in (0..k).filter(|&d| reach >> d & 1 == 1) {
            t[0] = d as Elem;
            for e in (0..k).filter(|&e| c >> e & 1 == 1) {
                t[1] = e as Elem;
                if rho.contains(&t) {
                    next |= 1 << e;
                }
            }
        }
        reach = next;
        if reach == 0 {
            return false;
        }
    }
    true
}

pub fn equation_holds(rho: &Relation) -> Result<EquationCheck> {
    let c = loop_domain(rho)?;
    let n = rho.arity() - 2;
    let mut witness = None;
    for_each_tuple(rho.k(), n, |_, x| {
        if witness.is_none() && left_side(rho, x) != right_side(rho, c, x) {
            witness = Some(x.to_vec());
        }
    });
    Ok(match witness {
        Some(x) => EquationCheck::Fails(x),
        None => EquationCheck::Holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_parity_fails_at_zero() {
        let odd = Relation::from_fn(2, 3, |t| (t[0] ^ t[1] ^ t[2]) == 1).unwrap();
        assert_eq!(equation_holds(&odd).unwrap(), EquationCheck::Fails(vec![0]));
        assert!(!left_side(&odd, &[0]));
        assert!(right_side(&odd, loop_domain(&odd).unwrap(), &[0]));
    }

    #[test]
    fn even_parity_fails_at_one() {
        let xor = Relation::from_fn(2, 3, |t| (t[0] ^ t[1] ^ t[2]) == 0).unwrap();
        assert_eq!(equation_holds(&xor).unwrap(), EquationCheck::Fails(vec![1]));
    }

    #[test]
    fn holding_cases() {
        let le = Relation::from_tuples(2, 2, [[0, 0], [0, 1], [1, 1]]).unwrap();
        assert_eq!(equation_holds(&le).unwrap(), EquationCheck::Holds);
        assert_eq!(equation_holds(&Relation::full(2, 3).unwrap()).unwrap(), EquationCheck::Holds);
        assert_eq!(equation_holds(&Relation::empty(3, 3).unwrap()).unwrap(), EquationCheck::Holds);
        assert!(equation_holds(&Relation::full(2, 1).unwrap()).is_err());
    }

    #[test]
    fn sides_agree_with_enumeration() {
        // direct enumeration of y_0..y_k over E_2
        for mask in 0u32..256 {
            let rho = Relation::from_fn(2, 3, |t| mask >> (t[0] * 4 + t[1] * 2 + t[2]) & 1 == 1).unwrap();
            let c = loop_domain(&rho).unwrap();
            for x in 0..2u8 {
                let mut rhs = false;
                for_each_tuple(2, 3, |_, ys| {
                    let inside = ys.iter().all(|&y| c >> y & 1 == 1);
                    let steps = ys.windows(2).all(|w| rho.contains(&[w[0], w[1], x]));
                    rhs |= inside && steps;
                });
                assert_eq!(right_side(&rho, c, &[x]), rhs, "mask {mask} x {x}");
                assert!(!left_side(&rho, &[x]) || rhs);
            }
        }
    }
}
