//! Exact satisfiability of a formula by Gaussian elimination over GF(p).
//!
//! `d = 2` uses packed bit rows; other primes use dense rows of residues.

use serde::{Deserialize, Serialize};

use crate::arith::{inv_mod, is_prime, mul_mod, sub_mod};
use crate::error::{Error, Result};
use crate::model::{Assignment, Formula};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatVerdict {
    pub satisfiable: bool,
    /// Assigns every variable; free variables of the system are set to 0.
    pub witness: Option<Assignment>,
}

pub fn gaussian_solve(f: &Formula) -> Result<SatVerdict> {
    let d = f.d();
    if !is_prime(d) {
        return Err(Error::UnsupportedDomain { d });
    }
    let n = f.num_vars();
    let values = if d == 2 { solve_gf2(f, n) } else { solve_gfp(f, n, d) };
    Ok(match values {
        None => SatVerdict { satisfiable: false, witness: None },
        Some(values) => {
            let mut a = Assignment::new(n);
            for (v, x) in values.into_iter().enumerate() {
                a.assign(v, x).expect("fresh assignment");
            }
            SatVerdict { satisfiable: true, witness: Some(a) }
        }
    })
}

fn solve_gf2(f: &Formula, n: usize) -> Option<Vec<u32>> {
    let words = n / 64 + 1;
    // bit n holds the right-hand side
    let mut rows: Vec<Vec<u64>> = f
        .alive_clauses()
        .map(|(_, c)| {
            let mut row = vec![0u64; words];
            for t in c.terms() {
                row[t.var as usize / 64] ^= 1 << (t.var % 64);
            }
            if c.rhs() == 1 {
                row[n / 64] ^= 1 << (n % 64);
            }
            row
        })
        .collect();

    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..n {
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][w] & bit != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let (head, tail) = rows.split_at_mut(rank + 1);
        let (above, pivot) = head.split_at_mut(rank);
        let pivot = &pivot[0];
        for row in above.iter_mut().chain(tail.iter_mut()) {
            if row[w] & bit != 0 {
                // columns before `w` of the pivot row are zero
                for (x, y) in row[w..].iter_mut().zip(&pivot[w..]) {
                    *x ^= y;
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    let rhs_bit = |row: &[u64]| (row[n / 64] >> (n % 64)) & 1;
    if rows[rank..].iter().any(|r| rhs_bit(r) == 1) {
        return None;
    }
    let mut x = vec![0u32; n];
    for (r, &col) in pivots.iter().enumerate() {
        x[col] = rhs_bit(&rows[r]) as u32;
    }
    Some(x)
}

fn solve_gfp(f: &Formula, n: usize, p: u32) -> Option<Vec<u32>> {
    let mut rows: Vec<Vec<u32>> = f
        .alive_clauses()
        .map(|(_, c)| {
            let mut row = vec![0u32; n + 1];
            for t in c.terms() {
                row[t.var as usize] = t.coef;
            }
            row[n] = c.rhs();
            row
        })
        .collect();

    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..n {
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = inv_mod(rows[rank][col], p).expect("nonzero element of a prime field");
        for x in rows[rank][col..].iter_mut() {
            *x = mul_mod(*x, inv, p);
        }
        let (head, tail) = rows.split_at_mut(rank + 1);
        let (above, pivot) = head.split_at_mut(rank);
        let pivot = &pivot[0];
        for row in above.iter_mut().chain(tail.iter_mut()) {
            let factor = row[col];
            if factor != 0 {
                for (x, &y) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *x = sub_mod(*x, mul_mod(factor, y, p), p);
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    if rows[rank..].iter().any(|r| r[n] != 0) {
        return None;
    }
    let mut x = vec![0u32; n];
    for (r, &col) in pivots.iter().enumerate() {
        x[col] = rows[r][n];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_solution, generate_random_formula};

    #[test]
    fn small_satisfiable_system() {
        let mut f = Formula::new(2, 3, 2).unwrap();
        f.push_clause(&[(0, 1), (1, 1)], 1).unwrap();
        f.push_clause(&[(1, 1), (2, 1)], 0).unwrap();
        let v = gaussian_solve(&f).unwrap();
        assert!(v.satisfiable);
        assert!(check_solution(&f, v.witness.as_ref().unwrap()).unwrap());
    }

    #[test]
    fn inconsistent_units() {
        let mut f = Formula::new(2, 1, 1).unwrap();
        f.push_clause(&[(0, 1)], 0).unwrap();
        f.push_clause(&[(0, 1)], 1).unwrap();
        let v = gaussian_solve(&f).unwrap();
        assert!(!v.satisfiable);
        assert!(v.witness.is_none());
    }

    #[test]
    fn contradiction_marker_is_unsat() {
        let mut f = Formula::new(3, 2, 2).unwrap();
        f.push_clause(&[], 2).unwrap();
        assert!(!gaussian_solve(&f).unwrap().satisfiable);
    }

    #[test]
    fn composite_domain_is_rejected() {
        let f = Formula::new(4, 3, 2).unwrap();
        assert!(matches!(gaussian_solve(&f), Err(Error::UnsupportedDomain { d: 4 })));
    }

    #[test]
    fn witnesses_check_for_several_primes() {
        for (d, seed) in [(2, 1), (3, 2), (5, 3), (7, 4)] {
            for s in 0..20 {
                let f = generate_random_formula(120, 3, 0.6, d, seed * 100 + s).unwrap();
                let v = gaussian_solve(&f).unwrap();
                if let Some(w) = &v.witness {
                    assert!(check_solution(&f, w).unwrap());
                }
            }
        }
    }

    #[test]
    fn dense_random_instances_are_unsat() {
        // alpha = 1.2 is well above the 3-XORSAT satisfiability threshold
        let unsat = (0..100)
            .filter(|&s| !gaussian_solve(&generate_random_formula(200, 3, 1.2, 2, s).unwrap()).unwrap().satisfiable)
            .count();
        assert!(unsat >= 95, "only {unsat}/100 unsatisfiable");
    }

    #[test]
    fn more_rows_than_columns_with_consistent_rhs() {
        // x0 + x1 = 1, x1 + x2 = 1, x0 + x2 = 0 (sum of the first two)
        let mut f = Formula::new(2, 3, 2).unwrap();
        f.push_clause(&[(0, 1), (1, 1)], 1).unwrap();
        f.push_clause(&[(1, 1), (2, 1)], 1).unwrap();
        f.push_clause(&[(0, 1), (2, 1)], 0).unwrap();
        let v = gaussian_solve(&f).unwrap();
        assert!(v.satisfiable);
        assert!(check_solution(&f, v.witness.as_ref().unwrap()).unwrap());
    }
}
