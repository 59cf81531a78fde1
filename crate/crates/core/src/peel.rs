//! Leaf removal: repeatedly delete a clause that contains a variable with a
//! single occurrence, until no such variable is left. What remains is the
//! 2-core of the formula's hypergraph.
//!
//! The pivot is drawn uniformly among the single-occurrence variables at
//! every step. Peeled clauses are kept on a stack so a core solution can be
//! extended back to the whole formula.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_solution, Assignment, ClauseId, Formula, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeelStep {
    pub clause: ClauseId,
    pub pivot: VarId,
}

#[derive(Clone, Debug)]
pub struct CoreReport {
    /// Alive core clauses per length, index = length.
    pub core_clauses_by_len: Vec<usize>,
    /// Variables with at least one occurrence in the core (each has >= 2).
    pub core_vars: usize,
    pub peel_order: Vec<PeelStep>,
    pub empty: bool,
    /// Fraction of variables fixed by the core: core variables plus pivots
    /// whose peeled clause only involves fixed variables.
    pub backbone_fraction: f64,
    /// `core_vars / N`
    pub core_fraction: f64,
    /// The residual formula; clause ids match the input formula.
    pub core: Formula,
}

/// `{empty, core_vars, core_clauses_by_len, backbone_fraction}`
#[derive(Serialize)]
struct CoreSummary<'a> {
    empty: bool,
    core_vars: usize,
    core_clauses_by_len: &'a [usize],
    backbone_fraction: f64,
}

impl CoreReport {
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::to_value(CoreSummary {
            empty: self.empty,
            core_vars: self.core_vars,
            core_clauses_by_len: &self.core_clauses_by_len,
            backbone_fraction: self.backbone_fraction,
        })
        .expect("plain struct serializes")
    }

    pub fn core_clauses(&self) -> usize {
        self.core_clauses_by_len.iter().sum()
    }
}

pub fn leaf_remove(f: &Formula, seed: u64) -> Result<CoreReport> {
    if !f.clauses_of_len(1).is_empty() {
        return Err(Error::Precondition("leaf removal needs a formula without unit clauses".into()));
    }
    let n = f.num_vars();
    let mut core = f.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // uniform sampling with O(1) removal over the current leaves
    let mut leaves: Vec<u32> = Vec::new();
    let mut leaf_pos = vec![u32::MAX; n];
    let mark = |leaves: &mut Vec<u32>, leaf_pos: &mut [u32], v: usize| {
        if leaf_pos[v] == u32::MAX {
            leaf_pos[v] = leaves.len() as u32;
            leaves.push(v as u32);
        }
    };
    let unmark = |leaves: &mut Vec<u32>, leaf_pos: &mut [u32], v: usize| {
        let p = leaf_pos[v];
        if p != u32::MAX {
            leaves.swap_remove(p as usize);
            if (p as usize) < leaves.len() {
                leaf_pos[leaves[p as usize] as usize] = p;
            }
            leaf_pos[v] = u32::MAX;
        }
    };
    for v in 0..n {
        if core.degree(v) == 1 {
            mark(&mut leaves, &mut leaf_pos, v);
        }
    }

    let mut peel_order = Vec::new();
    while !leaves.is_empty() {
        let pivot = leaves[rng.gen_range(0..leaves.len())] as usize;
        let clause = core.occurrences(pivot)[0].0 as usize;
        let vars: Vec<usize> = core.clause(clause).terms().iter().map(|t| t.var as usize).collect();
        core.remove_clause(clause);
        for v in vars {
            match core.degree(v) {
                1 => mark(&mut leaves, &mut leaf_pos, v),
                _ => unmark(&mut leaves, &mut leaf_pos, v),
            }
        }
        peel_order.push(PeelStep { clause, pivot });
    }

    let core_clauses_by_len = core.clause_counts().as_slice().to_vec();
    let core_vars = (0..n).filter(|&v| core.degree(v) > 0).count();

    let mut fixed: Vec<bool> = (0..n).map(|v| core.degree(v) > 0).collect();
    for step in peel_order.iter().rev() {
        let all_fixed = f
            .clause(step.clause)
            .terms()
            .iter()
            .all(|t| t.var as usize == step.pivot || fixed[t.var as usize]);
        if all_fixed {
            fixed[step.pivot] = true;
        }
    }
    let backbone = fixed.iter().filter(|&&x| x).count();

    Ok(CoreReport {
        empty: core.num_alive() == 0,
        core_clauses_by_len,
        core_vars,
        peel_order,
        backbone_fraction: backbone as f64 / n as f64,
        core_fraction: core_vars as f64 / n as f64,
        core,
    })
}

/// Extends a solution of the core to the whole formula by replaying the
/// peel order backwards and solving each peeled clause for its pivot.
/// Variables left unconstrained get uniform values drawn from `seed`.
pub fn reconstruct_solution(core_witness: &Assignment, report: &CoreReport, f: &Formula, seed: u64) -> Result<Assignment> {
    let n = f.num_vars();
    let d = f.d();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Assignment::new(n);
    for v in (0..n).filter(|&v| report.core.degree(v) > 0) {
        let x = core_witness.get(v).ok_or(Error::IncompleteAssignment { var: v })?;
        a.assign(v, x)?;
    }
    for (id, c) in report.core.alive_clauses() {
        if !check_solution_clause(c, &a, d) {
            return Err(Error::InvalidWitness { clause: id });
        }
    }
    for step in report.peel_order.iter().rev() {
        let clause = f.clause(step.clause);
        let mut pivot_pos = None;
        for (i, t) in clause.terms().iter().enumerate() {
            let v = t.var as usize;
            if v == step.pivot {
                pivot_pos = Some(i);
            } else if !a.is_assigned(v) {
                a.assign(v, rng.gen_range(0..d))?;
            }
        }
        let pos = pivot_pos.expect("pivot belongs to its peeled clause");
        let x = clause.solve_for(pos, &a, d).map_err(|var| Error::IncompleteAssignment { var })?;
        a.assign(step.pivot, x)?;
    }
    for v in 0..n {
        if !a.is_assigned(v) {
            a.assign(v, rng.gen_range(0..d))?;
        }
    }
    debug_assert!(check_solution(f, &a).unwrap_or(false));
    Ok(a)
}

fn check_solution_clause(c: &crate::model::Clause, a: &Assignment, d: u32) -> bool {
    let mut acc = 0u64;
    for t in c.terms() {
        match a.get(t.var as usize) {
            Some(x) => acc = (acc + t.coef as u64 * x as u64) % d as u64,
            None => return false,
        }
    }
    acc == c.rhs() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::gaussian_solve;
    use crate::model::generate_random_formula;

    #[test]
    fn single_clause_peels_in_one_step() {
        let mut f = Formula::new(2, 3, 3).unwrap();
        f.push_clause(&[(0, 1), (1, 1), (2, 1)], 1).unwrap();
        let r = leaf_remove(&f, 0).unwrap();
        assert!(r.empty);
        assert_eq!(r.peel_order.len(), 1);
        assert_eq!(r.core_vars, 0);
        assert_eq!(r.backbone_fraction, 0.0);
    }

    #[test]
    fn unit_clauses_are_rejected() {
        let mut f = Formula::new(2, 3, 3).unwrap();
        f.push_clause(&[(0, 1)], 1).unwrap();
        assert!(matches!(leaf_remove(&f, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn two_copies_of_a_clause_form_a_core() {
        let mut f = Formula::new(2, 4, 2).unwrap();
        f.push_clause(&[(0, 1), (1, 1)], 0).unwrap();
        f.push_clause(&[(0, 1), (1, 1)], 1).unwrap();
        f.push_clause(&[(1, 1), (2, 1)], 1).unwrap();
        let r = leaf_remove(&f, 0).unwrap();
        assert!(!r.empty);
        // x1 now has three occurrences; the third clause peels through x2
        assert_eq!(r.peel_order, vec![PeelStep { clause: 2, pivot: 2 }]);
        assert_eq!(r.core_vars, 2);
        assert_eq!(r.core_clauses_by_len[2], 2);
        // x2 is fixed by x1, which is fixed by the core
        assert_eq!(r.backbone_fraction, 0.75);
    }

    #[test]
    fn core_variables_have_two_occurrences() {
        let f = generate_random_formula(3000, 3, 0.9, 2, 3).unwrap();
        let r = leaf_remove(&f, 1).unwrap();
        assert!(!r.empty);
        for v in 0..3000 {
            let deg = r.core.degree(v);
            assert!(deg == 0 || deg >= 2);
        }
        assert_eq!(r.peel_order.len() + r.core_clauses(), f.num_alive());
    }

    #[test]
    fn tree_formula_reconstructs() {
        let f = generate_random_formula(2000, 3, 0.5, 5, 10).unwrap();
        let r = leaf_remove(&f, 4).unwrap();
        assert!(r.empty);
        let a = reconstruct_solution(&Assignment::new(2000), &r, &f, 9).unwrap();
        assert!(check_solution(&f, &a).unwrap());
    }

    #[test]
    fn core_solution_reconstructs() {
        let f = generate_random_formula(1500, 3, 0.85, 2, 21).unwrap();
        let r = leaf_remove(&f, 2).unwrap();
        assert!(!r.empty);
        let v = gaussian_solve(&r.core).unwrap();
        assert!(v.satisfiable);
        let a = reconstruct_solution(v.witness.as_ref().unwrap(), &r, &f, 0).unwrap();
        assert!(check_solution(&f, &a).unwrap());
    }

    #[test]
    fn tampered_witness_is_rejected() {
        let f = generate_random_formula(1500, 3, 0.85, 2, 21).unwrap();
        let r = leaf_remove(&f, 2).unwrap();
        let mut values: Vec<u32> = gaussian_solve(&r.core)
            .unwrap()
            .witness
            .unwrap()
            .values()
            .iter()
            .map(|x| x.unwrap())
            .collect();
        let (victim, _) = r.core.alive_clauses().next().unwrap();
        let var = r.core.clause(victim).terms()[0].var as usize;
        values[var] ^= 1;
        let mut bad = Assignment::new(1500);
        for (v, x) in values.into_iter().enumerate() {
            bad.assign(v, x).unwrap();
        }
        assert!(matches!(reconstruct_solution(&bad, &r, &f, 0), Err(Error::InvalidWitness { .. })));
    }

    #[test]
    fn summary_has_expected_keys() {
        let f = generate_random_formula(100, 3, 0.5, 2, 0).unwrap();
        let j = leaf_remove(&f, 0).unwrap().summary_json();
        let keys: Vec<&String> = j.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 4);
        for key in ["empty", "core_vars", "core_clauses_by_len", "backbone_fraction"] {
            assert!(j.get(key).is_some(), "{key}");
        }
    }
}
