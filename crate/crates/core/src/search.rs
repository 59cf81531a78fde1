//! Linear-time search: unit propagation plus a Poissonian selection rule.
//!
//! Every step assigns exactly one variable. A unit clause, when present, is
//! always served first and its variable takes the forced value. Otherwise the
//! policy gives weights `p_j` over clause lengths; with probability `p_j` a
//! clause of length `j` is drawn uniformly, then one of its variables, then a
//! uniform value. The residual weight `1 - sum p_j` picks a uniformly random
//! unassigned variable. The run halts at the first `0 = b` clause
//! (contradiction) or when no alive clause is left, in which case the still
//! free variables get uniform values.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::model::{check_solution, generate_random_formula, Assignment, ClauseCounts, Formula, VarId};

/// A user rule mapping `(C_1, ..., C_k)` to weights `(p_1, ..., p_k)`.
pub type SelectionRule = Arc<dyn Fn(&[usize]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum HeuristicPolicy {
    /// Unit Clause: free picks only, outside unit propagation.
    Uc,
    /// Generalized Unit Clause: always pick from the shortest clauses.
    Guc,
    Custom(SelectionRule),
}

impl fmt::Debug for HeuristicPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl HeuristicPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            HeuristicPolicy::Uc => "uc",
            HeuristicPolicy::Guc => "guc",
            HeuristicPolicy::Custom(_) => "custom",
        }
    }

    /// Selection weights indexed by clause length (`weights[0]` is unused).
    ///
    /// `counts[j]` is `C_j` for `j = 0..=k`. Unit clauses take absolute
    /// priority and lengths with no clauses get zero weight.
    pub fn selection_weights(&self, counts: &[usize]) -> Result<Vec<f64>> {
        let k = counts.len() - 1;
        let mut w = vec![0.0; k + 1];
        if counts.get(1).copied().unwrap_or(0) > 0 {
            w[1] = 1.0;
            return Ok(w);
        }
        match self {
            HeuristicPolicy::Uc => {}
            HeuristicPolicy::Guc => {
                if let Some(j) = (2..=k).find(|&j| counts[j] > 0) {
                    w[j] = 1.0;
                }
            }
            HeuristicPolicy::Custom(rule) => {
                let p = rule(&counts[1..]);
                if p.len() != k {
                    return Err(Error::InvalidParameter(format!(
                        "custom rule returned {} weights for k = {k}",
                        p.len()
                    )));
                }
                for j in 1..=k {
                    let pj = p[j - 1];
                    if !(pj >= 0.0) {
                        return Err(Error::InvalidParameter(format!("weight p_{j} = {pj} is negative")));
                    }
                    if counts[j] > 0 {
                        w[j] = pj;
                    }
                }
                let total: f64 = w.iter().sum();
                if total > 1.0 + 1e-12 {
                    return Err(Error::InvalidParameter(format!("weights sum to {total} > 1")));
                }
            }
        }
        Ok(w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PickSource {
    /// Forced by a unit clause.
    Unit,
    /// Drawn from a clause of the given length.
    Clause(usize),
    /// Uniform among unassigned variables.
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub var: VarId,
    pub value: u32,
    pub source: PickSource,
    /// `C_1` just before the step.
    pub units_before: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchResult {
    Satisfied(Assignment),
    Contradiction { step: usize },
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub result: SearchResult,
    pub steps: usize,
    pub final_counts: ClauseCounts,
    pub seed: u64,
}

impl SearchOutcome {
    pub fn is_satisfied(&self) -> bool {
        matches!(self.result, SearchResult::Satisfied(_))
    }

    /// `{result, steps, seed}`
    pub fn summary_json(&self) -> serde_json::Value {
        let result = match self.result {
            SearchResult::Satisfied(_) => "satisfied",
            SearchResult::Contradiction { .. } => "contradiction",
        };
        serde_json::json!({ "result": result, "steps": self.steps, "seed": self.seed })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    /// `c_j` for `j = 1..=k` (index 0 holds `j = 1`).
    pub densities: Vec<f64>,
    pub ctilde_2: f64,
}

impl TraceSample {
    pub fn c(&self, j: usize) -> f64 {
        self.densities[j - 1]
    }

    /// `c_j / (1 - t)`
    pub fn reduced(&self, j: usize) -> f64 {
        self.c(j) / (1.0 - self.t)
    }
}

/// Empirical `rho_j = <p_j - p_{j+1}>` over one window of steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoWindow {
    pub t_start: f64,
    pub t_end: f64,
    /// Index `j - 1` holds `rho_j`, `j = 1..=k`.
    pub rho: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub stride: usize,
    pub samples: Vec<TraceSample>,
    pub rho_windows: Vec<RhoWindow>,
}

impl SearchTrace {
    /// CSV with header `t,c_1,...,c_k,ctilde_2`.
    pub fn write_csv<W: Write>(&self, mut w: W, k: usize) -> std::io::Result<()> {
        let cols: Vec<String> = (1..=k).map(|j| format!("c_{j}")).collect();
        writeln!(w, "t,{},ctilde_2", cols.join(","))?;
        for s in &self.samples {
            let vals: Vec<String> = s.densities.iter().map(|c| c.to_string()).collect();
            writeln!(w, "{},{},{}", s.t, vals.join(","), s.ctilde_2)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Running,
    Satisfied,
    Contradiction(usize),
}

/// Step-by-step search state over an owned copy of the formula.
pub struct Searcher {
    original: Formula,
    formula: Formula,
    assignment: Assignment,
    free: Vec<u32>,
    free_pos: Vec<u32>,
    policy: HeuristicPolicy,
    rng: ChaCha8Rng,
    seed: u64,
    steps: usize,
    status: Status,
}

impl Searcher {
    pub fn new(f: &Formula, policy: HeuristicPolicy, seed: u64) -> Result<Self> {
        let n = f.num_vars();
        if f.num_unassigned() != n {
            return Err(Error::Precondition("search needs a formula with no assigned variables".into()));
        }
        let mut s = Self {
            original: f.clone(),
            formula: f.clone(),
            assignment: Assignment::new(n),
            free: (0..n as u32).collect(),
            free_pos: (0..n as u32).collect(),
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            steps: 0,
            status: Status::Running,
        };
        s.update_status();
        Ok(s)
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Fraction of assigned variables `T / N`.
    pub fn time(&self) -> f64 {
        self.steps as f64 / self.formula.num_vars() as f64
    }

    pub fn is_running(&self) -> bool {
        self.status == Status::Running
    }

    /// Performs one assignment, or returns `None` once the run has halted.
    pub fn step(&mut self) -> Result<Option<StepRecord>> {
        if self.status != Status::Running {
            return Ok(None);
        }
        let counts = self.formula.clause_counts();
        let counts = counts.as_slice();
        let units_before = counts[1];
        let weights = self.policy.selection_weights(counts)?;

        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        let mut chosen = None;
        for (j, &w) in weights.iter().enumerate().skip(1) {
            acc += w;
            if w > 0.0 && u < acc {
                chosen = Some(j);
                break;
            }
        }

        let d = self.formula.d();
        let (var, value, source) = match chosen {
            Some(j) => {
                let bucket = self.formula.clauses_of_len(j);
                let cid = bucket[self.rng.gen_range(0..bucket.len())] as usize;
                let clause = self.formula.clause(cid);
                if j == 1 {
                    let var = clause.terms()[0].var as usize;
                    let value = clause.solve_for(0, &self.assignment, d).expect("unit clause has no other variable");
                    (var, value, PickSource::Unit)
                } else {
                    let var = clause.terms()[self.rng.gen_range(0..j)].var as usize;
                    (var, self.rng.gen_range(0..d), PickSource::Clause(j))
                }
            }
            None => {
                let var = self.free[self.rng.gen_range(0..self.free.len())] as usize;
                (var, self.rng.gen_range(0..d), PickSource::Free)
            }
        };
        self.set(var, value)?;
        self.steps += 1;
        self.update_status();
        Ok(Some(StepRecord { var, value, source, units_before }))
    }

    /// Steps until `T / N >= t` or the run halts.
    pub fn run_until(&mut self, t: f64) -> Result<()> {
        while self.is_running() && self.time() < t {
            self.step()?;
        }
        Ok(())
    }

    fn set(&mut self, var: VarId, value: u32) -> Result<()> {
        self.formula.assign(var, value)?;
        self.assignment.assign(var, value)?;
        let pos = self.free_pos[var] as usize;
        self.free.swap_remove(pos);
        if pos < self.free.len() {
            let moved = self.free[pos] as usize;
            self.free_pos[moved] = pos as u32;
        }
        Ok(())
    }

    fn update_status(&mut self) {
        if self.formula.has_contradiction() {
            self.status = Status::Contradiction(self.steps);
        } else if self.formula.num_alive() == 0 {
            let d = self.formula.d();
            while let Some(&v) = self.free.last() {
                let value = self.rng.gen_range(0..d);
                self.set(v as usize, value).expect("free variable is unassigned");
            }
            self.status = Status::Satisfied;
        }
    }

    pub fn into_outcome(self) -> SearchOutcome {
        let result = match self.status {
            Status::Satisfied => {
                debug_assert!(check_solution(&self.original, &self.assignment).unwrap_or(false));
                SearchResult::Satisfied(self.assignment)
            }
            Status::Contradiction(step) => SearchResult::Contradiction { step },
            Status::Running => panic!("search outcome requested while still running"),
        };
        SearchOutcome { result, steps: self.steps, final_counts: self.formula.clause_counts(), seed: self.seed }
    }
}

fn sample(s: &Searcher) -> TraceSample {
    let counts = s.formula.clause_counts();
    let t = s.time();
    let densities: Vec<f64> = (1..=s.formula.k()).map(|j| counts.density(j)).collect();
    let c2 = densities.get(1).copied().unwrap_or(0.0);
    let ctilde_2 = if t < 1.0 { c2 / (1.0 - t) } else { 0.0 };
    TraceSample { t, densities, ctilde_2 }
}

/// Runs one search. `trace_stride = 0` disables the density trace.
pub fn run_search(
    f: &Formula,
    policy: HeuristicPolicy,
    seed: u64,
    trace_stride: usize,
) -> Result<(SearchOutcome, SearchTrace)> {
    let mut s = Searcher::new(f, policy, seed)?;
    let n = f.num_vars();
    let k = f.k();
    let mut trace = SearchTrace { stride: trace_stride, ..Default::default() };
    if trace_stride > 0 {
        trace.samples.push(sample(&s));
    }
    let window = ((n as f64).sqrt().ceil() as usize).max(1);
    let mut picks = vec![0usize; k + 2];
    let mut window_start = 0;

    while let Some(rec) = s.step()? {
        match rec.source {
            PickSource::Unit => picks[1] += 1,
            PickSource::Clause(j) => picks[j] += 1,
            PickSource::Free => {}
        }
        if trace_stride > 0 {
            if s.steps % trace_stride == 0 || !s.is_running() {
                trace.samples.push(sample(&s));
            }
            if s.steps - window_start == window {
                let rho = (1..=k).map(|j| (picks[j] as f64 - picks[j + 1] as f64) / window as f64).collect();
                trace.rho_windows.push(RhoWindow {
                    t_start: window_start as f64 / n as f64,
                    t_end: s.time(),
                    rho,
                });
                picks.iter_mut().for_each(|p| *p = 0);
                window_start = s.steps;
            }
        }
    }
    Ok((s.into_outcome(), trace))
}

/// Parameters of the random ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub d: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub successes: usize,
    pub runs: usize,
}

/// SplitMix64 of `(master, index)`; run `i` of a batch always gets the same seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fraction of runs (fresh instance, fresh search randomness) that end satisfied.
///
/// Run `i` draws its instance from `derive_seed(master, 2i)` and its search
/// from `derive_seed(master, 2i + 1)`, so two policies evaluated with the same
/// master seed see the same instances.
pub fn estimate_success_probability(
    params: &EnsembleSpec,
    policy: &HeuristicPolicy,
    runs: usize,
    master_seed: u64,
) -> Result<SuccessEstimate> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be >= 1".into()));
    }
    let successes = (0..runs as u64)
        .into_par_iter()
        .map(|i| -> Result<usize> {
            let f = generate_random_formula(params.n, params.k, params.alpha, params.d, derive_seed(master_seed, 2 * i))?;
            let (out, _) = run_search(&f, policy.clone(), derive_seed(master_seed, 2 * i + 1), 0)?;
            Ok(out.is_satisfied() as usize)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let p_hat = successes as f64 / runs as f64;
    Ok(SuccessEstimate { p_hat, stderr: (p_hat * (1.0 - p_hat) / runs as f64).sqrt(), successes, runs })
}

/// Wilson score interval for `successes / runs` at normal quantile `z`.
pub fn wilson_interval(successes: usize, runs: usize, z: f64) -> (f64, f64) {
    let n = runs as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Fitted Poisson mean.
    pub mean: f64,
    pub num_vars: usize,
    /// `(first degree, last degree or None for the open tail, observed, expected)`
    pub bins: Vec<(usize, Option<usize>, usize, f64)>,
}

/// Chi-square test of the unassigned-variable degree profile against a
/// Poisson law with the same mean. Bins are merged until each expects >= 5.
pub fn poissonianity_test(f: &Formula) -> Result<ChiSquareReport> {
    let profile = f.degree_profile();
    let n = profile.num_unassigned();
    if n < 100 {
        return Err(Error::InsufficientData(format!("{n} unassigned variables, need at least 100")));
    }
    let lambda = profile.mean();
    let nf = n as f64;

    // expected counts per degree until the tail mass is negligible
    let mut pmf = Vec::new();
    let mut p = (-lambda).exp();
    let mut cum = 0.0;
    let mut l = 0usize;
    while l < profile.as_slice().len() || nf * (1.0 - cum) >= 5.0 {
        pmf.push(p);
        cum += p;
        l += 1;
        p *= lambda / l as f64;
    }

    let mut bins = Vec::new();
    let (mut start, mut obs, mut exp) = (0usize, 0usize, 0.0);
    let mut tail_exp = nf;
    for (l, &q) in pmf.iter().enumerate() {
        obs += profile.count(l);
        exp += nf * q;
        tail_exp -= nf * q;
        let tail_obs: usize = profile.as_slice().iter().skip(l + 1).sum();
        if exp >= 5.0 && tail_exp >= 5.0 {
            bins.push((start, Some(l), obs, exp));
            start = l + 1;
            obs = 0;
            exp = 0.0;
        } else if tail_exp < 5.0 {
            bins.push((start, None, obs + tail_obs, exp + tail_exp.max(0.0)));
            break;
        }
    }
    if bins.len() < 3 {
        return Err(Error::InsufficientData(format!("only {} bins with expected count >= 5", bins.len())));
    }
    let statistic: f64 = bins.iter().map(|&(_, _, o, e)| (o as f64 - e).powi(2) / e).sum();
    let dof = bins.len() - 2;
    let chi = ChiSquared::new(dof as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    let p_value = 1.0 - chi.cdf(statistic);
    Ok(ChiSquareReport { statistic, dof, p_value, mean: lambda, num_vars: n, bins })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_formula() -> Formula {
        let mut f = Formula::new(2, 1, 1).unwrap();
        f.push_clause(&[(0, 1)], 1).unwrap();
        f
    }

    #[test]
    fn single_unit_clause_is_served_first() {
        for policy in [HeuristicPolicy::Uc, HeuristicPolicy::Guc] {
            let f = unit_formula();
            let mut s = Searcher::new(&f, policy, 3).unwrap();
            let rec = s.step().unwrap().unwrap();
            assert_eq!((rec.var, rec.value, rec.source), (0, 1, PickSource::Unit));
            let out = s.into_outcome();
            assert_eq!(out.steps, 1);
            match out.result {
                SearchResult::Satisfied(a) => assert_eq!(a.get(0), Some(1)),
                r => panic!("unexpected {r:?}"),
            }
        }
    }

    #[test]
    fn empty_formula_is_satisfied_without_steps() {
        let f = generate_random_formula(10, 3, 0.0, 3, 0).unwrap();
        let (out, _) = run_search(&f, HeuristicPolicy::Uc, 0, 1).unwrap();
        assert!(out.is_satisfied());
        assert_eq!(out.steps, 0);
        if let SearchResult::Satisfied(a) = out.result {
            assert_eq!(a.num_assigned(), 10);
        }
    }

    #[test]
    fn incompatible_units_contradict() {
        let mut f = Formula::new(2, 1, 1).unwrap();
        f.push_clause(&[(0, 1)], 0).unwrap();
        f.push_clause(&[(0, 1)], 1).unwrap();
        let (out, _) = run_search(&f, HeuristicPolicy::Guc, 0, 0).unwrap();
        assert_eq!(out.result, SearchResult::Contradiction { step: 1 });
    }

    #[test]
    fn assigned_formula_is_rejected() {
        let mut f = generate_random_formula(10, 3, 0.5, 2, 0).unwrap();
        f.assign(0, 1).unwrap();
        assert!(matches!(Searcher::new(&f, HeuristicPolicy::Uc, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn weights_respect_policy_invariants() {
        let counts = [0, 2, 0, 5];
        assert_eq!(HeuristicPolicy::Guc.selection_weights(&counts).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
        let counts = [0, 0, 0, 5];
        assert_eq!(HeuristicPolicy::Guc.selection_weights(&counts).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(HeuristicPolicy::Uc.selection_weights(&counts).unwrap(), vec![0.0; 4]);
        let custom = HeuristicPolicy::Custom(Arc::new(|_c: &[usize]| vec![0.0, 0.3, 0.4]));
        assert_eq!(custom.selection_weights(&counts).unwrap(), vec![0.0, 0.0, 0.0, 0.4]);
        let greedy = HeuristicPolicy::Custom(Arc::new(|_c: &[usize]| vec![0.0, 0.8, 0.8]));
        assert!(greedy.selection_weights(&[0, 0, 1, 1]).is_err());
    }

    #[test]
    fn step_log_invariants() {
        let f = generate_random_formula(2000, 3, 0.7, 3, 5).unwrap();
        for policy in [HeuristicPolicy::Uc, HeuristicPolicy::Guc] {
            let mut s = Searcher::new(&f, policy.clone(), 8).unwrap();
            while let Some(rec) = s.step().unwrap() {
                if rec.units_before > 0 {
                    assert_eq!(rec.source, PickSource::Unit);
                }
                if matches!(policy, HeuristicPolicy::Uc) {
                    assert!(matches!(rec.source, PickSource::Unit | PickSource::Free));
                }
                if s.is_running() {
                    assert_eq!(s.steps() + s.formula().num_unassigned(), 2000);
                    assert!(!s.formula().has_contradiction());
                }
                let fm = s.formula();
                assert_eq!(fm.degree_profile().occurrences(), fm.clause_counts().occurrences());
            }
            let out = s.into_outcome();
            if let SearchResult::Satisfied(a) = &out.result {
                assert!(check_solution(&f, a).unwrap());
            }
        }
    }

    #[test]
    fn trace_is_increasing_and_nonnegative() {
        let f = generate_random_formula(5000, 3, 0.5, 2, 1).unwrap();
        let (_, trace) = run_search(&f, HeuristicPolicy::Uc, 2, 50).unwrap();
        assert!(trace.samples.windows(2).all(|w| w[0].t < w[1].t));
        assert!(trace.samples.iter().all(|s| s.densities.iter().all(|&c| c >= 0.0)));
        assert!(!trace.rho_windows.is_empty());
        let mut csv = Vec::new();
        trace.write_csv(&mut csv, 3).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("t,c_1,c_2,c_3,ctilde_2\n"));
    }

    #[test]
    fn zero_ratio_always_succeeds() {
        let spec = EnsembleSpec { n: 100, k: 3, alpha: 0.0, d: 2 };
        let est = estimate_success_probability(&spec, &HeuristicPolicy::Guc, 10, 1).unwrap();
        assert_eq!(est.p_hat, 1.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!((lo - 0.2189).abs() < 1e-3 && (hi - 0.3958).abs() < 1e-3);
    }

    #[test]
    fn poissonianity_needs_enough_variables() {
        let f = generate_random_formula(50, 3, 0.8, 2, 0).unwrap();
        assert!(matches!(poissonianity_test(&f), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn bins_cover_every_variable() {
        let f = generate_random_formula(20_000, 3, 0.8, 2, 4).unwrap();
        let r = poissonianity_test(&f).unwrap();
        assert_eq!(r.bins.iter().map(|b| b.2).sum::<usize>(), 20_000);
        let e: f64 = r.bins.iter().map(|b| b.3).sum();
        assert!((e - 20_000.0).abs() < 1e-6);
        assert!(r.bins.iter().all(|b| b.3 >= 5.0));
        assert!((r.mean - 2.4).abs() < 1e-12);
    }
}
