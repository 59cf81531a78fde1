//! Random (k,d)-UE-CSP instances.
//!
//! A clause is a linear equation `sum_i a_i x_i = b (mod d)` over distinct
//! variables with every coefficient a unit of Z_d, so fixing all but one
//! variable of a clause forces the last one. For `d = 2` this is exactly a
//! XOR constraint.
//!
//! [`Formula`] keeps an occurrence index, per-length clause buckets and the
//! degree profile of unassigned variables up to date under assignment and
//! clause removal, each in O(degree) time.

use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{add_mod, inv_mod, is_unit, mul_mod, sub_mod, units};
use crate::error::{Error, Result};

pub type VarId = usize;
pub type ClauseId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub var: u32,
    pub coef: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    terms: Vec<Term>,
    rhs: u32,
    alive: bool,
}

impl Clause {
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn rhs(&self) -> u32 {
        self.rhs
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// An alive clause of length zero with nonzero right-hand side: `0 = b`.
    pub fn is_contradiction(&self) -> bool {
        self.alive && self.terms.is_empty() && self.rhs != 0
    }

    /// Value of `sum a_i x_i` under `a`, or the first unassigned variable.
    fn evaluate(&self, a: &Assignment, d: u32) -> std::result::Result<u32, VarId> {
        let mut acc = 0;
        for t in &self.terms {
            let x = a.get(t.var as usize).ok_or(t.var as usize)?;
            acc = add_mod(acc, mul_mod(t.coef, x, d), d);
        }
        Ok(acc)
    }

    /// Value of the variable at `pos` that satisfies the clause given the others.
    pub(crate) fn solve_for(&self, pos: usize, a: &Assignment, d: u32) -> std::result::Result<u32, VarId> {
        let mut rest = 0;
        for (i, t) in self.terms.iter().enumerate() {
            if i == pos {
                continue;
            }
            let x = a.get(t.var as usize).ok_or(t.var as usize)?;
            rest = add_mod(rest, mul_mod(t.coef, x, d), d);
        }
        let inv = inv_mod(self.terms[pos].coef, d).expect("clause coefficients are units");
        Ok(mul_mod(inv, sub_mod(self.rhs, rest, d), d))
    }
}

/// Partial map from variables to values in `0..d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    values: Vec<Option<u32>>,
}

impl Assignment {
    pub fn new(num_vars: usize) -> Self {
        Self { values: vec![None; num_vars] }
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, var: VarId) -> Option<u32> {
        self.values.get(var).copied().flatten()
    }

    pub fn is_assigned(&self, var: VarId) -> bool {
        self.get(var).is_some()
    }

    pub fn assign(&mut self, var: VarId, value: u32) -> Result<()> {
        match self.values.get_mut(var) {
            None => Err(Error::InvalidParameter(format!("variable {var} out of range"))),
            Some(Some(_)) => Err(Error::Reassigned { var }),
            Some(slot) => {
                *slot = Some(value);
                Ok(())
            }
        }
    }

    pub fn num_assigned(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn values(&self) -> &[Option<u32>] {
        &self.values
    }
}

/// Clause counts `C_j` for `j = 0..=k`. Index 0 holds contradiction markers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseCounts {
    counts: Vec<usize>,
    num_vars: usize,
}

impl ClauseCounts {
    pub fn new(counts: Vec<usize>, num_vars: usize) -> Self {
        Self { counts, num_vars }
    }

    pub fn k(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn count(&self, j: usize) -> usize {
        self.counts.get(j).copied().unwrap_or(0)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.counts
    }

    /// `M`, the number of alive clauses.
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `c_j = C_j / N`.
    pub fn density(&self, j: usize) -> f64 {
        self.count(j) as f64 / self.num_vars as f64
    }

    pub fn alpha(&self) -> f64 {
        self.total() as f64 / self.num_vars as f64
    }

    /// `sum_{j >= 2} c_j`.
    pub fn gamma(&self) -> f64 {
        self.counts.iter().skip(2).sum::<usize>() as f64 / self.num_vars as f64
    }

    /// `sum_j j C_j`, the total number of occurrences.
    pub fn occurrences(&self) -> usize {
        self.counts.iter().enumerate().map(|(j, c)| j * c).sum()
    }
}

/// Counts `N_l` of unassigned variables with exactly `l` occurrences.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeProfile {
    counts: Vec<usize>,
    num_vars: usize,
}

impl DegreeProfile {
    pub fn count(&self, l: usize) -> usize {
        self.counts.get(l).copied().unwrap_or(0)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.counts
    }

    pub fn density(&self, l: usize) -> f64 {
        self.count(l) as f64 / self.num_vars as f64
    }

    /// Number of variables covered by the profile.
    pub fn num_unassigned(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn occurrences(&self) -> usize {
        self.counts.iter().enumerate().map(|(l, c)| l * c).sum()
    }

    /// Mean degree over the variables covered by the profile.
    pub fn mean(&self) -> f64 {
        let n = self.num_unassigned();
        if n == 0 {
            0.0
        } else {
            self.occurrences() as f64 / n as f64
        }
    }
}

/// What a single assignment did to the formula.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReductionReport {
    pub new_units: Vec<ClauseId>,
    pub satisfied: Vec<ClauseId>,
    pub contradiction: Option<ClauseId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    d: u32,
    k: usize,
    clauses: Vec<Clause>,
    // (clause, position of the variable's term in that clause), alive clauses only
    occ: Vec<Vec<(u32, u32)>>,
    assigned: Vec<bool>,
    buckets: Vec<Vec<u32>>,
    bucket_pos: Vec<u32>,
    degree_counts: Vec<usize>,
    num_unassigned: usize,
}

impl Formula {
    /// Empty formula over `num_vars` variables with clauses of length at most `k`.
    pub fn new(d: u32, num_vars: usize, k: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("domain size d = {d} must be >= 2")));
        }
        Ok(Self {
            d,
            k,
            clauses: Vec::new(),
            occ: vec![Vec::new(); num_vars],
            assigned: vec![false; num_vars],
            buckets: vec![Vec::new(); k + 1],
            bucket_pos: Vec::new(),
            degree_counts: vec![num_vars],
            num_unassigned: num_vars,
        })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_vars(&self) -> usize {
        self.assigned.len()
    }

    pub fn num_unassigned(&self) -> usize {
        self.num_unassigned
    }

    pub fn is_assigned(&self, var: VarId) -> bool {
        self.assigned[var]
    }

    pub fn clause(&self, id: ClauseId) -> &Clause {
        &self.clauses[id]
    }

    /// All clauses ever added, alive or not; ids are indices.
    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn alive_clauses(&self) -> impl Iterator<Item = (ClauseId, &Clause)> {
        self.clauses.iter().enumerate().filter(|(_, c)| c.alive)
    }

    pub fn num_alive(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    /// Ids of alive clauses of length `j`, in no particular order.
    pub fn clauses_of_len(&self, j: usize) -> &[u32] {
        self.buckets.get(j).map_or(&[], Vec::as_slice)
    }

    /// Occurrences of `var` in alive clauses, as `(clause, position)` pairs.
    pub fn occurrences(&self, var: VarId) -> &[(u32, u32)] {
        &self.occ[var]
    }

    pub fn degree(&self, var: VarId) -> usize {
        self.occ[var].len()
    }

    pub fn clause_counts(&self) -> ClauseCounts {
        ClauseCounts::new(self.buckets.iter().map(Vec::len).collect(), self.num_vars())
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        let mut counts = self.degree_counts.clone();
        while counts.len() > 1 && counts.last() == Some(&0) {
            counts.pop();
        }
        DegreeProfile { counts, num_vars: self.num_vars() }
    }

    pub fn has_contradiction(&self) -> bool {
        !self.buckets[0].is_empty()
    }

    /// Appends a clause `sum coef * x_var = rhs (mod d)`.
    pub fn push_clause(&mut self, terms: &[(VarId, u32)], rhs: u32) -> Result<ClauseId> {
        let n = self.num_vars();
        if terms.len() > self.k {
            return Err(Error::InvalidParameter(format!(
                "clause of length {} exceeds arity {}",
                terms.len(),
                self.k
            )));
        }
        if rhs >= self.d {
            return Err(Error::InvalidParameter(format!("rhs {rhs} not in Z_{}", self.d)));
        }
        for (i, &(v, a)) in terms.iter().enumerate() {
            if v >= n {
                return Err(Error::InvalidParameter(format!("variable {v} out of range 0..{n}")));
            }
            if self.assigned[v] {
                return Err(Error::InvalidParameter(format!("variable {v} is already assigned")));
            }
            if !is_unit(a, self.d) {
                return Err(Error::InvalidParameter(format!("coefficient {a} is not a unit mod {}", self.d)));
            }
            if terms[..i].iter().any(|&(u, _)| u == v) {
                return Err(Error::InvalidParameter(format!("variable {v} repeated in clause")));
            }
        }
        let id = self.clauses.len();
        let alive = !(terms.is_empty() && rhs == 0);
        self.clauses.push(Clause {
            terms: terms.iter().map(|&(v, a)| Term { var: v as u32, coef: a }).collect(),
            rhs,
            alive,
        });
        self.bucket_pos.push(0);
        if alive {
            for (p, &(v, _)) in terms.iter().enumerate() {
                let deg = self.occ[v].len();
                self.occ[v].push((id as u32, p as u32));
                self.move_degree(deg, deg + 1);
            }
            self.bucket_insert(id, terms.len());
        }
        Ok(id)
    }

    /// Fixes `var = value` and folds it into every alive clause containing it.
    ///
    /// Clauses reaching `0 = 0` are removed as satisfied; a clause reaching
    /// `0 = b` with `b != 0` stays alive as a contradiction marker.
    pub fn assign(&mut self, var: VarId, value: u32) -> Result<ReductionReport> {
        if var >= self.num_vars() {
            return Err(Error::InvalidParameter(format!("variable {var} out of range")));
        }
        if self.assigned[var] {
            return Err(Error::Reassigned { var });
        }
        if value >= self.d {
            return Err(Error::InvalidParameter(format!("value {value} not in Z_{}", self.d)));
        }
        let d = self.d;
        self.assigned[var] = true;
        let occ = std::mem::take(&mut self.occ[var]);
        self.degree_counts[occ.len()] -= 1;
        self.num_unassigned -= 1;

        let mut report = ReductionReport::default();
        for (c, p) in occ {
            let (c, p) = (c as usize, p as usize);
            let old_len = self.clauses[c].terms.len();
            let clause = &mut self.clauses[c];
            let term = clause.terms.swap_remove(p);
            debug_assert_eq!(term.var as usize, var);
            clause.rhs = sub_mod(clause.rhs, mul_mod(term.coef, value, d), d);
            if p < clause.terms.len() {
                let moved = clause.terms[p].var as usize;
                let entry = self.occ[moved]
                    .iter_mut()
                    .find(|e| e.0 as usize == c)
                    .expect("occurrence index out of sync");
                entry.1 = p as u32;
            }
            self.bucket_remove(c, old_len);
            let clause = &mut self.clauses[c];
            match clause.terms.len() {
                0 if clause.rhs == 0 => {
                    clause.alive = false;
                    report.satisfied.push(c);
                }
                0 => {
                    self.bucket_insert(c, 0);
                    report.contradiction.get_or_insert(c);
                }
                len => {
                    self.bucket_insert(c, len);
                    if len == 1 {
                        report.new_units.push(c);
                    }
                }
            }
        }
        Ok(report)
    }

    /// Deletes an alive clause without assigning anything.
    pub fn remove_clause(&mut self, id: ClauseId) {
        let clause = &self.clauses[id];
        if !clause.alive {
            return;
        }
        let len = clause.terms.len();
        for i in 0..len {
            let v = self.clauses[id].terms[i].var as usize;
            let deg = self.occ[v].len();
            let at = self.occ[v]
                .iter()
                .position(|e| e.0 as usize == id)
                .expect("occurrence index out of sync");
            self.occ[v].swap_remove(at);
            self.move_degree(deg, deg - 1);
        }
        self.bucket_remove(id, len);
        self.clauses[id].alive = false;
    }

    fn move_degree(&mut self, from: usize, to: usize) {
        self.degree_counts[from] -= 1;
        if self.degree_counts.len() <= to {
            self.degree_counts.resize(to + 1, 0);
        }
        self.degree_counts[to] += 1;
    }

    fn bucket_insert(&mut self, id: ClauseId, len: usize) {
        self.bucket_pos[id] = self.buckets[len].len() as u32;
        self.buckets[len].push(id as u32);
    }

    fn bucket_remove(&mut self, id: ClauseId, len: usize) {
        let pos = self.bucket_pos[id] as usize;
        let bucket = &mut self.buckets[len];
        debug_assert_eq!(bucket[pos] as usize, id);
        bucket.swap_remove(pos);
        if pos < bucket.len() {
            let moved = bucket[pos] as usize;
            self.bucket_pos[moved] = pos as u32;
        }
    }

    /// Text serialization: a header `d N M k`, then one alive clause per line
    /// as `j var:coef ... var:coef rhs`.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {} {}", self.d, self.num_vars(), self.num_alive(), self.k)?;
        for (_, c) in self.alive_clauses() {
            write!(w, "{}", c.terms.len())?;
            for t in &c.terms {
                write!(w, " {}:{}", t.var, t.coef)?;
            }
            writeln!(w, " {}", c.rhs)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parses the text format. Blank lines and lines starting with `#` are skipped.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty() && !s.trim_start().starts_with('#')));

        let (hline, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "missing header".into() })?;
        let header = header?;
        let fields = parse_numbers(&header, hline, 4)?;
        let (d, n, m, k) = (fields[0] as u32, fields[1] as usize, fields[2] as usize, fields[3] as usize);
        let mut f = Formula::new(d, n, k).map_err(|e| Error::Parse { line: hline, msg: e.to_string() })?;

        for (line_no, line) in lines {
            let line = line?;
            let bad = |msg: String| Error::Parse { line: line_no, msg };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let j: usize = toks[0].parse().map_err(|_| bad(format!("bad length {:?}", toks[0])))?;
            if toks.len() != j + 2 {
                return Err(bad(format!("expected {} fields, found {}", j + 2, toks.len())));
            }
            let mut terms = Vec::with_capacity(j);
            for tok in &toks[1..=j] {
                let (v, a) = tok.split_once(':').ok_or_else(|| bad(format!("bad term {tok:?}")))?;
                let v: usize = v.parse().map_err(|_| bad(format!("bad variable {v:?}")))?;
                let a: u32 = a.parse().map_err(|_| bad(format!("bad coefficient {a:?}")))?;
                terms.push((v, a));
            }
            let rhs: u32 = toks[j + 1].parse().map_err(|_| bad(format!("bad rhs {:?}", toks[j + 1])))?;
            f.push_clause(&terms, rhs).map_err(|e| bad(e.to_string()))?;
        }
        if f.clauses.len() != m {
            return Err(Error::Parse { line: hline, msg: format!("header announces {m} clauses, found {}", f.clauses.len()) });
        }
        Ok(f)
    }

    pub fn from_text(s: &str) -> Result<Self> {
        Self::read_text(s.as_bytes())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn parse_numbers(line: &str, line_no: usize, expected: usize) -> Result<Vec<u64>> {
    let nums: std::result::Result<Vec<u64>, _> = line.split_whitespace().map(str::parse).collect();
    match nums {
        Ok(v) if v.len() == expected => Ok(v),
        _ => Err(Error::Parse { line: line_no, msg: format!("expected {expected} integers in {line:?}") }),
    }
}

/// Draws a random formula with `round(alpha * n)` clauses of `k` distinct
/// variables, coefficients uniform over the units of Z_d and a uniform rhs.
pub fn generate_random_formula(n: usize, k: usize, alpha: f64, d: u32, seed: u64) -> Result<Formula> {
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= N, got k = {k}, N = {n}")));
    }
    if d < 2 {
        return Err(Error::InvalidParameter(format!("domain size d = {d} must be >= 2")));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be finite and >= 0")));
    }
    let m = (alpha * n as f64).round() as usize;
    let coefs = units(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = Formula::new(d, n, k)?;
    let mut terms = Vec::with_capacity(k);
    for _ in 0..m {
        terms.clear();
        for v in sample(&mut rng, n, k) {
            terms.push((v, coefs[rng.gen_range(0..coefs.len())]));
        }
        let rhs = rng.gen_range(0..d);
        f.push_clause(&terms, rhs)?;
    }
    Ok(f)
}

/// True iff every alive clause holds under `a`.
pub fn check_solution(f: &Formula, a: &Assignment) -> Result<bool> {
    let mut ok = true;
    for (_, c) in f.alive_clauses() {
        match c.evaluate(a, f.d) {
            Ok(v) => ok &= v == c.rhs,
            Err(var) => return Err(Error::IncompleteAssignment { var }),
        }
    }
    Ok(ok)
}

/// Free-function form of [`Formula::assign`].
pub fn reduce_by_assignment(f: &mut Formula, var: VarId, value: u32) -> Result<ReductionReport> {
    f.assign(var, value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn handshake(f: &Formula) {
        assert_eq!(f.degree_profile().occurrences(), f.clause_counts().occurrences());
        assert_eq!(f.degree_profile().num_unassigned(), f.num_unassigned());
        assert_eq!(f.clause_counts().total(), f.alive_clauses().count());
        for v in 0..f.num_vars() {
            for &(c, p) in f.occurrences(v) {
                assert_eq!(f.clause(c as usize).terms()[p as usize].var as usize, v);
            }
        }
    }

    #[test]
    fn generate_has_requested_shape() {
        let f = generate_random_formula(1000, 3, 0.5, 2, 1).unwrap();
        assert_eq!(f.num_alive(), 500);
        for (_, c) in f.alive_clauses() {
            assert_eq!(c.len(), 3);
            let mut v: Vec<u32> = c.terms().iter().map(|t| t.var).collect();
            v.sort_unstable();
            v.dedup();
            assert_eq!(v.len(), 3);
            assert!(c.terms().iter().all(|t| t.coef == 1));
        }
        handshake(&f);
    }

    #[test]
    fn zero_ratio_gives_empty_formula() {
        let f = generate_random_formula(10, 3, 0.0, 2, 0).unwrap();
        assert_eq!(f.num_alive(), 0);
        assert!(check_solution(&f, &Assignment::new(10)).unwrap());
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(generate_random_formula(2, 3, 0.5, 2, 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(generate_random_formula(10, 3, 0.5, 1, 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(generate_random_formula(10, 3, -1.0, 2, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = generate_random_formula(500, 4, 0.7, 5, 42).unwrap();
        let b = generate_random_formula(500, 4, 0.7, 5, 42).unwrap();
        let c = generate_random_formula(500, 4, 0.7, 5, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn check_small_examples() {
        let mut f = Formula::new(2, 2, 2).unwrap();
        f.push_clause(&[(0, 1), (1, 1)], 1).unwrap();
        let mut a = Assignment::new(2);
        a.assign(0, 0).unwrap();
        a.assign(1, 1).unwrap();
        assert!(check_solution(&f, &a).unwrap());
        let mut a = Assignment::new(2);
        a.assign(0, 1).unwrap();
        a.assign(1, 1).unwrap();
        assert!(!check_solution(&f, &a).unwrap());

        let mut g = Formula::new(5, 2, 2).unwrap();
        g.push_clause(&[(0, 2), (1, 1)], 3).unwrap();
        let mut a = Assignment::new(2);
        a.assign(0, 1).unwrap();
        a.assign(1, 1).unwrap();
        assert!(check_solution(&g, &a).unwrap());
    }

    #[test]
    fn incomplete_assignment_is_an_error() {
        let mut f = Formula::new(2, 2, 2).unwrap();
        f.push_clause(&[(0, 1), (1, 1)], 1).unwrap();
        let mut a = Assignment::new(2);
        a.assign(0, 0).unwrap();
        assert!(matches!(check_solution(&f, &a), Err(Error::IncompleteAssignment { var: 1 })));
    }

    #[test]
    fn reassignment_is_rejected() {
        let mut a = Assignment::new(3);
        a.assign(1, 0).unwrap();
        assert!(matches!(a.assign(1, 1), Err(Error::Reassigned { var: 1 })));
    }

    #[test]
    fn reduction_creates_unit() {
        let mut f = Formula::new(2, 2, 2).unwrap();
        let c = f.push_clause(&[(0, 1), (1, 1)], 1).unwrap();
        let r = f.assign(0, 0).unwrap();
        assert_eq!(r.new_units, vec![c]);
        assert_eq!(f.clause(c).terms(), &[Term { var: 1, coef: 1 }]);
        assert_eq!(f.clause(c).rhs(), 1);
        assert_eq!(f.clause_counts().count(1), 1);
        handshake(&f);
    }

    #[test]
    fn reduction_flags_contradiction() {
        let mut f = Formula::new(2, 2, 2).unwrap();
        f.push_clause(&[(0, 1), (1, 1)], 0).unwrap();
        let bad = f.push_clause(&[(0, 1), (1, 1)], 1).unwrap();
        let r = f.assign(0, 0).unwrap();
        assert_eq!(r.new_units.len(), 2);
        assert!(r.contradiction.is_none());
        let r = f.assign(1, 0).unwrap();
        assert_eq!(r.contradiction, Some(bad));
        assert_eq!(r.satisfied.len(), 1);
        assert!(f.clause(bad).is_contradiction());
        assert!(f.has_contradiction());
        assert_eq!(f.clause_counts().total(), 1);
        handshake(&f);
    }

    #[test]
    fn reduction_mod_five() {
        // 2x + 3y = 4 (mod 5), y = 3  =>  2x = 4 - 9 = 0
        let mut f = Formula::new(5, 2, 2).unwrap();
        let c = f.push_clause(&[(0, 2), (1, 3)], 4).unwrap();
        let r = f.assign(1, 3).unwrap();
        assert_eq!(r.new_units, vec![c]);
        assert_eq!(f.clause(c).terms(), &[Term { var: 0, coef: 2 }]);
        assert_eq!(f.clause(c).rhs(), 0);
        let mut a = Assignment::new(2);
        a.assign(1, 3).unwrap();
        assert_eq!(f.clause(c).solve_for(0, &a, 5), Ok(0));
    }

    #[test]
    fn push_rejects_non_units_and_repeats() {
        let mut f = Formula::new(4, 3, 3).unwrap();
        assert!(f.push_clause(&[(0, 2), (1, 1)], 0).is_err());
        assert!(f.push_clause(&[(0, 1), (0, 3)], 0).is_err());
        assert!(f.push_clause(&[(0, 1), (5, 3)], 0).is_err());
        assert!(f.push_clause(&[(0, 1), (1, 3)], 4).is_err());
        assert!(f.push_clause(&[(0, 1), (1, 3)], 2).is_ok());
    }

    #[test]
    fn remove_clause_updates_indices() {
        let mut f = generate_random_formula(50, 3, 1.0, 3, 9).unwrap();
        for id in (0..50).step_by(3) {
            f.remove_clause(id);
            handshake(&f);
        }
        assert_eq!(f.num_alive(), 50 - 17);
    }

    #[test]
    fn text_round_trip() {
        let f = generate_random_formula(200, 3, 0.9, 7, 3).unwrap();
        let s = f.to_text();
        assert!(s.starts_with("7 200 180 3\n"));
        let g = Formula::from_text(&format!("# comment\n{s}")).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Formula::from_text("2 3 1 2\n2 0:1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = Formula::from_text("2 3 2 2\n2 0:1 1:1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn xor_clauses_for_d2() {
        let f = generate_random_formula(300, 5, 1.0, 2, 11).unwrap();
        for (_, c) in f.alive_clauses() {
            assert!(c.terms().iter().all(|t| t.coef == 1));
            assert!(c.rhs() < 2);
        }
    }
}
