//! Large-N analytics: the clause generating function and its potential, the
//! leaf-removal flow, and the density ODEs followed by search heuristics
//!
//!   dc_j/dt = [(j+1) c_{j+1} - j c_j] / (1-t) - rho_j
//!
//! where `rho_j` is the rate at which the heuristic itself picks variables
//! out of length-`j` clauses. Unit clauses are resolved instantly and feed
//! `rho_1 = 2 c_2 / (1-t)`.

use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

/// `G(b) = sum_j c_j b^j` over clause lengths `j >= 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratingFunction {
    coeffs: Vec<f64>,
    terms: Vec<(usize, f64)>,
}

impl GeneratingFunction {
    /// `coeffs[j] = c_j`. Entries 0 and 1 must be zero.
    pub fn new(coeffs: &[f64]) -> Result<Self> {
        for (j, &c) in coeffs.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidParameter(format!("c_{j} = {c} is not a nonnegative density")));
            }
            if j < 2 && c != 0.0 {
                return Err(Error::InvalidParameter(format!("c_{j} must be zero")));
            }
        }
        let mut coeffs = coeffs.to_vec();
        if coeffs.len() < 3 {
            coeffs.resize(3, 0.0);
        }
        let terms = coeffs.iter().enumerate().filter(|(_, &c)| c > 0.0).map(|(j, &c)| (j, c)).collect();
        Ok(Self { coeffs, terms })
    }

    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        let k = pairs.iter().map(|p| p.0).max().unwrap_or(2);
        let mut coeffs = vec![0.0; k + 1];
        for &(j, c) in pairs {
            coeffs[j] += c;
        }
        Self::new(&coeffs)
    }

    /// Every clause of length `k`: `c_k = alpha`.
    pub fn pure(k: usize, alpha: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("k = {k} must be at least 2")));
        }
        Self::from_pairs(&[(k, alpha)])
    }

    /// Largest clause length with a slot (not necessarily nonzero).
    pub fn k(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficient(&self, j: usize) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self, b: f64) -> f64 {
        self.derivative(b, 0)
    }

    pub fn d1(&self, b: f64) -> f64 {
        self.derivative(b, 1)
    }

    pub fn d2(&self, b: f64) -> f64 {
        self.derivative(b, 2)
    }

    pub fn d3(&self, b: f64) -> f64 {
        self.derivative(b, 3)
    }

    /// `G'(1)`, the mean number of clauses per variable.
    pub fn lambda0(&self) -> f64 {
        self.d1(1.0)
    }

    /// `G(1)`, the total clause density.
    pub fn total(&self) -> f64 {
        self.value(1.0)
    }

    fn derivative(&self, b: f64, r: usize) -> f64 {
        let falling = |j: usize| (0..r).map(|i| (j - i) as f64).product::<f64>();
        if self.terms.len() * 16 < self.coeffs.len() {
            self.terms
                .iter()
                .filter(|&&(j, _)| j >= r)
                .map(|&(j, c)| c * falling(j) * b.powi((j - r) as i32))
                .sum()
        } else {
            let mut acc = 0.0;
            for j in (r..self.coeffs.len()).rev() {
                acc = acc * b + self.coeffs[j] * falling(j);
            }
            acc
        }
    }
}

/// `V(b) = -G(b) + b + (1-b) ln(1-b)` and its first three derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Potential {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

pub fn potential(g: &GeneratingFunction, b: f64) -> Result<Potential> {
    if !(0.0..1.0).contains(&b) {
        return Err(Error::Domain(format!("potential needs 0 <= b < 1, got {b}")));
    }
    let l = (-b).ln_1p();
    let omb = 1.0 - b;
    Ok(Potential {
        v: -g.value(b) + b + omb * l,
        d1: -g.d1(b) - l,
        d2: -g.d2(b) + 1.0 / omb,
        d3: -g.d3(b) + 1.0 / (omb * omb),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowSample {
    pub tau: f64,
    pub b: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// Density of single-occurrence variables.
    pub n1: f64,
}

/// Leaf removal in the large-N limit, parametrized by `b` running from 1
/// down to the largest root of `1 - b = exp(-G'(b))` (or 0).
#[derive(Clone, Debug)]
pub struct LeafRemovalFlow {
    pub samples: Vec<FlowSample>,
    pub b_stop: f64,
}

impl LeafRemovalFlow {
    pub fn empty_core(&self) -> bool {
        self.b_stop == 0.0
    }
}

pub fn leaf_removal_flow(g: &GeneratingFunction, steps: usize) -> LeafRemovalFlow {
    let b_stop = crate::phase::stationary_points(g).last().copied().unwrap_or(0.0);
    let steps = steps.max(1);
    let gamma0 = g.total();
    let samples = (0..=steps)
        .map(|i| {
            let b = if i == steps { b_stop } else { 1.0 - (1.0 - b_stop) * i as f64 / steps as f64 };
            let lambda = g.d1(b);
            let gamma = g.value(b);
            FlowSample { tau: gamma0 - gamma, b, lambda, gamma, n1: lambda * (b - 1.0 + (-lambda).exp()) }
        })
        .collect();
    LeafRemovalFlow { samples, b_stop }
}

/// Clause densities indexed by length, `c[0..=k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityVector {
    pub c: Vec<f64>,
}

impl DensityVector {
    pub fn k(&self) -> usize {
        self.c.len() - 1
    }

    pub fn get(&self, j: usize) -> f64 {
        self.c.get(j).copied().unwrap_or(0.0)
    }
}

/// Closed form under UC: `c_j = alpha C(k,j) (1-t)^j t^(k-j)` for `j >= 2`.
pub fn uc_trajectory(k: usize, alpha: f64, t: f64) -> Result<DensityVector> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k = {k} must be at least 2")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, 1]")));
    }
    let mut c = vec![0.0; k + 1];
    for (j, cj) in c.iter_mut().enumerate().skip(2) {
        *cj = if t == 0.0 {
            if j == k {
                alpha
            } else {
                0.0
            }
        } else if t == 1.0 {
            0.0
        } else {
            let ln = ln_binomial(k as u64, j as u64) + j as f64 * (-t).ln_1p() + (k - j) as f64 * t.ln();
            alpha * ln.exp()
        };
    }
    Ok(DensityVector { c })
}

/// `rho(t, c)` with `c[0..=k]`; returns `rho_j` for `j = 0..=k`. Entries 0
/// and 1 are ignored: unit propagation always contributes `2 c_2/(1-t)`.
pub type RhoRule = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum MeanFieldPolicy {
    Uc,
    Guc,
    Custom { name: String, rho: RhoRule },
}

impl MeanFieldPolicy {
    pub fn name(&self) -> &str {
        match self {
            MeanFieldPolicy::Uc => "uc",
            MeanFieldPolicy::Guc => "guc",
            MeanFieldPolicy::Custom { name, .. } => name,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "uc" => Ok(MeanFieldPolicy::Uc),
            "guc" => Ok(MeanFieldPolicy::Guc),
            other => Err(Error::InvalidParameter(format!("unknown policy '{other}' (expected uc or guc)"))),
        }
    }

    fn is_guc(&self) -> bool {
        matches!(self, MeanFieldPolicy::Guc)
    }
}

impl std::fmt::Debug for MeanFieldPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    /// Run until `t = 1 - eps`, through the contradiction line if needed
    /// (GUC always stops there).
    Time(f64),
    /// Stop when `c_2/(1-t)` reaches 1/2 or when all clauses are gone.
    Contradiction,
    /// Stop when every `c_j < eps`.
    Exhausted(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Contradiction,
    Exhausted,
    TimeLimit,
}

#[derive(Clone, Copy, Debug)]
pub struct IntegrationOptions {
    pub dt: f64,
    pub stop: StopRule,
    /// Keep every n-th step as a `TrajectoryState`; 0 keeps only the
    /// first and last states and the event states.
    pub record_every: usize,
    pub dt_floor: f64,
    pub negative_tolerance: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self { dt: 1e-5, stop: StopRule::Contradiction, record_every: 100, dt_floor: 1e-10, negative_tolerance: 1e-10 }
    }
}

/// Integration never goes past this time unless asked to by `StopRule::Time`.
const T_CAP: f64 = 1.0 - 1e-6;
const CLAMP: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryState {
    pub t: f64,
    /// `c[0..=k]`
    pub c: Vec<f64>,
    /// GUC: current epoch. Other policies: shortest length with `c_j > 0`
    /// (0 when there is none).
    pub jstar: usize,
    /// `rho[0..=k]`, with `rho[1] = 2 c_2/(1-t)`.
    pub rho: Vec<f64>,
}

impl TrajectoryState {
    pub fn k(&self) -> usize {
        self.c.len() - 1
    }

    /// `c_j / (1-t)`
    pub fn reduced(&self, j: usize) -> f64 {
        self.c.get(j).copied().unwrap_or(0.0) / (1.0 - self.t)
    }

    pub fn gamma(&self) -> f64 {
        self.c.iter().sum()
    }

    /// Clauses eliminated per unit time, `sum_j rho_j`.
    pub fn gamma_dot(&self) -> f64 {
        self.rho.iter().sum()
    }

    /// `F(b) = sum_j rho_j b^j`
    pub fn f(&self, b: f64) -> f64 {
        self.rho.iter().enumerate().skip(1).filter(|(_, &r)| r != 0.0).map(|(j, r)| r * b.powi(j as i32)).sum()
    }

    pub fn f_prime(&self, b: f64) -> f64 {
        self.rho
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &r)| r != 0.0)
            .map(|(j, r)| j as f64 * r * b.powi(j as i32 - 1))
            .sum()
    }

    pub fn evolved(&self) -> Result<GeneratingFunction> {
        evolved_generating_function(self)
    }
}

/// The reduced instance on the `(1-t) N` free variables: `c~_j = c_j/(1-t)`.
pub fn evolved_generating_function(state: &TrajectoryState) -> Result<GeneratingFunction> {
    if !(state.t < 1.0) {
        return Err(Error::Domain(format!("no free variables left at t = {}", state.t)));
    }
    let omt = 1.0 - state.t;
    let mut coeffs: Vec<f64> = state.c.iter().map(|c| c / omt).collect();
    coeffs[0] = 0.0;
    if coeffs.len() > 1 {
        coeffs[1] = 0.0;
    }
    GeneratingFunction::new(&coeffs)
}

/// Times `t*(j)` at which the GUC epoch drops from `j` to `j - 1`, in the
/// order they happen. When the epoch never moves back up (see
/// `Trajectory::epoch_rises`) each `j` appears once and `t*` decreases in `j`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TStarSchedule {
    pub entries: Vec<(usize, f64)>,
}

impl TStarSchedule {
    pub fn get(&self, j: usize) -> Option<f64> {
        self.entries.iter().rev().find(|e| e.0 == j).map(|e| e.1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut s = String::new();
        if let Some(c) = comment {
            let _ = writeln!(s, "# {c}");
        }
        s.push_str("j,t_star\n");
        for (j, t) in &self.entries {
            let _ = writeln!(s, "{j},{t}");
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub k: usize,
    pub alpha: f64,
    pub policy: String,
    pub states: Vec<TrajectoryState>,
    pub tstar: TStarSchedule,
    pub end: EndReason,
    pub t_end: f64,
    /// First time `c_2/(1-t)` reached 1/2.
    pub t_q: Option<f64>,
    pub max_ctilde2: f64,
    pub t_at_max: f64,
    /// `c_3/(1-t)` at `t_at_max`.
    pub ctilde3_at_max: f64,
    /// Set when the GUC rate out of the shortest clauses went negative and
    /// was clamped to zero.
    pub rho_clamped: bool,
    /// Times the GUC epoch moved back up because the shortest clauses ran
    /// out. Zero near the algorithmic threshold.
    pub epoch_rises: usize,
    pub dt_final: f64,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryState {
        self.states.last().expect("a trajectory has at least one state")
    }

    pub fn write_csv<W: Write>(&self, mut w: W, comment: Option<&str>) -> std::io::Result<()> {
        if let Some(c) = comment {
            writeln!(w, "# {c}")?;
        }
        let cols: Vec<String> = (2..=self.k).map(|j| format!("c_{j}")).collect();
        writeln!(w, "t,{},jstar,gamma_dot", cols.join(","))?;
        for s in &self.states {
            let cs: Vec<String> = s.c[2..].iter().map(|x| x.to_string()).collect();
            writeln!(w, "{},{},{},{}", s.t, cs.join(","), s.jstar, s.gamma_dot())?;
        }
        Ok(())
    }
}

/// Explicit Euler integrator for the density ODEs, stepped one step at a
/// time. Cloning it snapshots the whole state.
#[derive(Clone)]
pub struct Integrator {
    k: usize,
    alpha: f64,
    policy: MeanFieldPolicy,
    opts: IntegrationOptions,
    dt: f64,
    t: f64,
    /// `c[0..=k+1]`; the last slot stays zero.
    c: Vec<f64>,
    jstar: usize,
    jhi: usize,
    tstar: Vec<(usize, f64)>,
    t_q: Option<f64>,
    max_ct2: f64,
    t_at_max: f64,
    ct3_at_max: f64,
    rho_clamped: bool,
    rises: usize,
    stalled: usize,
    steps: usize,
    end: Option<EndReason>,
    rho: Vec<f64>,
    dc: Vec<f64>,
}

enum Event {
    Drop,
    Contradiction,
    Empty,
}

impl Integrator {
    pub fn new(k: usize, alpha: f64, policy: MeanFieldPolicy, opts: IntegrationOptions) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("k = {k} must be at least 2")));
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must be nonnegative")));
        }
        if !(opts.dt > 0.0) || !(opts.dt_floor > 0.0) {
            return Err(Error::InvalidParameter("dt and its floor must be positive".into()));
        }
        let mut c = vec![0.0; k + 2];
        c[k] = alpha;
        let mut it = Self {
            k,
            alpha,
            jstar: if policy.is_guc() { k } else { 2 },
            policy,
            opts,
            dt: opts.dt,
            t: 0.0,
            c,
            jhi: k,
            tstar: Vec::new(),
            t_q: None,
            max_ct2: 0.0,
            t_at_max: 0.0,
            ct3_at_max: 0.0,
            rho_clamped: false,
            rises: 0,
            stalled: 0,
            steps: 0,
            end: None,
            rho: vec![0.0; k + 1],
            dc: vec![0.0; k + 2],
        };
        it.ct3_at_max = it.c[3];
        it.drop_epochs();
        it.settle_epoch();
        if it.c[2] >= 0.5 {
            it.t_q = Some(0.0);
            if it.stops_at_contradiction() {
                it.end = Some(EndReason::Contradiction);
            }
        }
        if it.is_exhausted() {
            it.end = Some(EndReason::Exhausted);
        }
        Ok(it)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn densities(&self) -> &[f64] {
        &self.c[..=self.k]
    }

    pub fn jstar(&self) -> usize {
        self.jstar
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn ended(&self) -> Option<EndReason> {
        self.end
    }

    pub fn t_q(&self) -> Option<f64> {
        self.t_q
    }

    pub fn tstar(&self) -> &[(usize, f64)] {
        &self.tstar
    }

    pub fn max_ctilde2(&self) -> (f64, f64, f64) {
        (self.max_ct2, self.t_at_max, self.ct3_at_max)
    }

    pub fn state(&self) -> TrajectoryState {
        let mut rho = vec![0.0; self.k + 1];
        let mut scratch = false;
        self.fill_rho(&mut rho, &mut scratch);
        let jstar = if self.policy.is_guc() {
            self.jstar
        } else {
            (2..=self.k).find(|&j| self.c[j] > 0.0).unwrap_or(0)
        };
        TrajectoryState { t: self.t, c: self.c[..=self.k].to_vec(), jstar, rho }
    }

    /// `dc_j/dt` at the current state, `j = 0..=k`.
    pub fn derivative(&self) -> Vec<f64> {
        let mut rho = vec![0.0; self.k + 1];
        let mut clamped = false;
        self.fill_rho(&mut rho, &mut clamped);
        let omt = 1.0 - self.t;
        let mut dc = vec![0.0; self.k + 1];
        for j in self.lower()..=self.jhi {
            dc[j] = ((j + 1) as f64 * self.c[j + 1] - j as f64 * self.c[j]) / omt - rho[j];
        }
        dc
    }

    fn stops_at_contradiction(&self) -> bool {
        self.policy.is_guc() || !matches!(self.opts.stop, StopRule::Time(_))
    }

    fn lower(&self) -> usize {
        if self.policy.is_guc() {
            self.jstar
        } else {
            2
        }
    }

    fn t_limit(&self) -> f64 {
        match self.opts.stop {
            StopRule::Time(eps) => 1.0 - eps,
            _ => T_CAP,
        }
    }

    fn is_exhausted(&self) -> bool {
        let lo = self.lower();
        match self.opts.stop {
            StopRule::Exhausted(eps) => self.c[lo..=self.jhi].iter().all(|&x| x < eps),
            StopRule::Contradiction => self.c[lo..=self.jhi].iter().all(|&x| x == 0.0),
            StopRule::Time(_) => false,
        }
    }

    fn drop_epochs(&mut self) {
        if !self.policy.is_guc() {
            return;
        }
        while self.jstar > 2 {
            let j = self.jstar;
            let theta = 1.0 / (j * (j - 1)) as f64;
            if self.c[j] / (1.0 - self.t) >= theta {
                self.tstar.push((j, self.t));
                self.jstar -= 1;
            } else {
                break;
            }
        }
    }

    /// GUC with no clauses of the current shortest length and a net outflow
    /// picks from longer clauses: the epoch moves up to the next nonempty
    /// length.
    fn settle_epoch(&mut self) {
        if !self.policy.is_guc() {
            return;
        }
        loop {
            let j = self.jstar;
            if self.c[j] > 0.0 || j >= self.k {
                return;
            }
            // right after a drop inflow and outflow balance exactly
            let inflow = (j + 1) as f64 * self.c[j + 1] / (1.0 - self.t);
            if inflow >= (1.0 - 1e-9) / j as f64 {
                return;
            }
            match (j + 1..=self.jhi).find(|&i| self.c[i] > 0.0) {
                Some(next) => {
                    self.jstar = next;
                    self.rises += 1;
                }
                None => return,
            }
        }
    }

    fn fill_rho(&self, rho: &mut [f64], clamped: &mut bool) {
        rho.iter_mut().for_each(|r| *r = 0.0);
        let omt = 1.0 - self.t;
        match &self.policy {
            MeanFieldPolicy::Uc => {}
            MeanFieldPolicy::Guc => {
                let j = self.jstar;
                if j >= 2 {
                    let ct = self.c[j] / omt;
                    let r = 1.0 / j as f64 - (j - 1) as f64 * ct;
                    if r < 0.0 {
                        *clamped = true;
                    }
                    rho[j] = r.max(0.0);
                    if j > 2 {
                        rho[j - 1] = j as f64 * ct;
                    }
                }
            }
            MeanFieldPolicy::Custom { rho: rule, .. } => {
                let r = rule(self.t, &self.c[..=self.k]);
                for (j, x) in r.into_iter().enumerate().take(self.k + 1).skip(2) {
                    rho[j] = x;
                }
            }
        }
        rho[1] += 2.0 * self.c[2] / omt;
    }

    /// One Euler step (possibly shortened by an event or the stop time).
    /// Returns `false` once integration has ended.
    pub fn step(&mut self) -> Result<bool> {
        self.step_capped(f64::INFINITY)?;
        Ok(self.end.is_none())
    }

    /// Integrates up to `t_target` (or the end of the trajectory).
    pub fn advance_to(&mut self, t_target: f64) -> Result<()> {
        while self.end.is_none() && self.t < t_target {
            self.step_capped(t_target - self.t)?;
        }
        Ok(())
    }

    fn step_capped(&mut self, cap: f64) -> Result<()> {
        let t0 = self.t;
        while self.end.is_none() {
            if self.try_step(cap)? {
                break;
            }
        }
        if self.t == t0 && self.end.is_none() {
            self.stalled += 1;
            if self.stalled > 1000 {
                return Err(Error::Numerical(format!("integration stalled at t = {} (epoch {})", self.t, self.jstar)));
            }
        } else {
            self.stalled = 0;
        }
        Ok(())
    }

    fn try_step(&mut self, cap: f64) -> Result<bool> {
        let lo = self.lower();
        let omt = 1.0 - self.t;
        let mut rho = std::mem::take(&mut self.rho);
        let mut dc = std::mem::take(&mut self.dc);
        let mut clamped = false;
        self.fill_rho(&mut rho, &mut clamped);
        if let MeanFieldPolicy::Custom { .. } = self.policy {
            if let Some(j) = (2..=self.k).find(|&j| rho[j] < 0.0) {
                self.rho = rho;
                self.dc = dc;
                return Err(Error::InvalidParameter(format!("custom policy gave rho_{j} < 0 at t = {}", self.t)));
            }
        }
        self.rho_clamped |= clamped;
        for j in lo..=self.jhi {
            dc[j] = ((j + 1) as f64 * self.c[j + 1] - j as f64 * self.c[j]) / omt - rho[j];
        }

        let mut s = self.dt.min(cap).min(self.t_limit() - self.t);
        let mut event = None;
        // both event conditions are linear in s within an Euler step
        if self.policy.is_guc() && self.jstar > 2 {
            let j = self.jstar;
            let theta = 1.0 / (j * (j - 1)) as f64;
            let g0 = self.c[j] - theta * omt;
            let slope = dc[j] + theta;
            if g0 + s * slope >= 0.0 && slope > 0.0 {
                s = (-g0 / slope).max(0.0);
                event = Some(Event::Drop);
            }
        }
        if self.t_q.is_none() && lo == 2 {
            let g0 = self.c[2] - 0.5 * omt;
            let slope = dc[2] + 0.5;
            if g0 + s * slope >= 0.0 && slope > 0.0 {
                let sq = (-g0 / slope).max(0.0);
                if sq <= s {
                    s = sq;
                    event = Some(Event::Contradiction);
                }
            }
        }

        if self.policy.is_guc() && self.c[lo] + s * dc[lo] < 0.0 {
            if self.c[lo] == 0.0 {
                // nothing left anywhere: the heuristic only assigns free variables
                dc[lo] = 0.0;
            } else {
                // the shortest clauses run out; stop exactly there
                let s0 = self.c[lo] / -dc[lo];
                if s0 <= s {
                    s = s0;
                    event = Some(Event::Empty);
                }
            }
        }

        let mut worst: Option<(usize, f64)> = None;
        for j in lo..=self.jhi {
            let x = self.c[j] + s * dc[j];
            if x < -self.opts.negative_tolerance && worst.is_none_or(|w| x < w.1) {
                worst = Some((j, x));
            }
        }
        if let Some((_, value)) = worst {
            self.rho = rho;
            self.dc = dc;
            if self.dt * 0.5 < self.opts.dt_floor {
                return Err(Error::StepSize { t: self.t, value, floor: self.opts.dt_floor });
            }
            self.dt *= 0.5;
            return Ok(false);
        }
        for j in lo..=self.jhi {
            let x = self.c[j] + s * dc[j];
            self.c[j] = if x < CLAMP { 0.0 } else { x };
        }
        if let Some(Event::Empty) = event {
            self.c[lo] = 0.0;
        }
        self.t += s;
        self.steps += 1;
        self.rho = rho;
        self.dc = dc;

        match event {
            Some(Event::Drop) => {
                self.tstar.push((self.jstar, self.t));
                self.jstar -= 1;
                self.drop_epochs();
            }
            Some(Event::Contradiction) => {
                self.t_q = Some(self.t);
                if self.stops_at_contradiction() {
                    self.end = Some(EndReason::Contradiction);
                }
            }
            Some(Event::Empty) | None => {}
        }
        self.settle_epoch();
        let lo = self.lower();
        while self.jhi > lo && self.c[self.jhi] == 0.0 {
            self.jhi -= 1;
        }
        let omt = 1.0 - self.t;
        let ct2 = self.c[2] / omt;
        if ct2 > self.max_ct2 {
            self.max_ct2 = ct2;
            self.t_at_max = self.t;
            self.ct3_at_max = self.c.get(3).copied().unwrap_or(0.0) / omt;
        }
        if self.end.is_none() {
            if self.t >= self.t_limit() {
                self.end = Some(EndReason::TimeLimit);
            } else if self.is_exhausted() {
                self.end = Some(EndReason::Exhausted);
            }
        }
        Ok(true)
    }

    /// Runs to the end, recording states per `record_every`.
    pub fn run(self) -> Result<Trajectory> {
        self.run_observed(|_| {})
    }

    pub fn run_observed<F: FnMut(&Integrator)>(mut self, mut observe: F) -> Result<Trajectory> {
        let every = self.opts.record_every;
        let mut states = vec![self.state()];
        observe(&self);
        while self.end.is_none() {
            let drops = self.tstar.len();
            self.step()?;
            observe(&self);
            let event = self.tstar.len() != drops || self.end.is_some();
            if event || (every > 0 && self.steps % every == 0) {
                states.push(self.state());
            }
        }
        if states.last().map(|s| s.t) != Some(self.t) {
            states.push(self.state());
        }
        Ok(Trajectory {
            k: self.k,
            alpha: self.alpha,
            policy: self.policy.name().to_string(),
            states,
            tstar: TStarSchedule { entries: self.tstar },
            end: self.end.expect("loop ends only when integration ends"),
            t_end: self.t,
            t_q: self.t_q,
            max_ctilde2: self.max_ct2,
            t_at_max: self.t_at_max,
            ctilde3_at_max: self.ct3_at_max,
            rho_clamped: self.rho_clamped,
            epoch_rises: self.rises,
            dt_final: self.dt,
        })
    }
}

pub fn integrate_trajectory(k: usize, alpha: f64, policy: &MeanFieldPolicy, opts: &IntegrationOptions) -> Result<Trajectory> {
    Integrator::new(k, alpha, policy.clone(), *opts)?.run()
}

pub fn integrate_observed<F: FnMut(&Integrator)>(
    k: usize,
    alpha: f64,
    policy: &MeanFieldPolicy,
    opts: &IntegrationOptions,
    observe: F,
) -> Result<Trajectory> {
    Integrator::new(k, alpha, policy.clone(), *opts)?.run_observed(observe)
}
