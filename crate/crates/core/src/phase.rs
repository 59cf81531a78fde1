//! Phase structure of the potential `V(b)` and the dynamic phase diagram of
//! search trajectories.
//!
//! Roots of `V'(b) = 0` are searched in `u = -ln(1-b)`, where the
//! stationarity condition reads `u = G'(1 - e^-u)`. This keeps roots with
//! `1 - b` far below machine epsilon (large `k`) resolvable.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::meanfield::{
    potential, EndReason, GeneratingFunction, IntegrationOptions, Integrator, MeanFieldPolicy, StopRule, TrajectoryState,
};
use crate::roots::{bisect, bisect_predicate, golden_min};

fn b_of_u(u: f64) -> f64 {
    -(-u).exp_m1()
}

fn stationarity(g: &GeneratingFunction, u: f64) -> f64 {
    u - g.d1(b_of_u(u))
}

fn u_grid(lambda0: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=60).map(|i| 1e-10 * 1e6f64.powf(i as f64 / 60.0)).collect();
    grid.extend((1..10_000).map(|i| -(-(i as f64) * 1e-4).ln_1p()));
    let top = lambda0 + 1.0;
    let steps = (top / 1e-3).ceil() as usize;
    grid.extend((1..=steps).map(|i| i as f64 * 1e-3));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn stationary_roots_u(g: &GeneratingFunction) -> Vec<f64> {
    let grid = u_grid(g.lambda0());
    let s = |u: f64| stationarity(g, u);
    let vals: Vec<f64> = grid.iter().map(|&u| s(u)).collect();
    let tol = |u: f64| 1e-15 * u.max(1e-300) + 1e-300;
    let refine = |a: f64, b: f64| bisect(s, a, b, tol(a), 400);
    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        if vals[i] == 0.0 {
            roots.push(grid[i]);
        } else if vals[i] * vals[i + 1] < 0.0 {
            roots.extend(refine(grid[i], grid[i + 1]));
        }
    }
    // a pair of nearby roots can hide between two grid points
    for i in 1..grid.len() - 1 {
        let (a, m, b) = (vals[i - 1], vals[i], vals[i + 1]);
        let dip = m > 0.0 && m <= a && m <= b;
        let bump = m < 0.0 && m >= a && m >= b;
        if !(dip || bump) {
            continue;
        }
        let sign = if dip { 1.0 } else { -1.0 };
        let (ue, se) = golden_min(|u| sign * s(u), grid[i - 1], grid[i + 1], tol(grid[i]) * 1e3);
        if se <= 0.0 {
            roots.extend(refine(grid[i - 1], ue));
            roots.extend(refine(ue, grid[i + 1]));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1e-300));
    roots
}

/// Roots `b > 0` of `V'(b) = 0`, increasing.
pub fn stationary_points(g: &GeneratingFunction) -> Vec<f64> {
    stationary_roots_u(g).into_iter().map(b_of_u).collect()
}

/// `V` at `b = 1 - e^-u`, with a series near the origin where the closed
/// form cancels catastrophically.
fn v_at_u(g: &GeneratingFunction, u: f64) -> f64 {
    let b = b_of_u(u);
    if b < 0.05 {
        // b + (1-b) ln(1-b) = sum_{j>=2} b^j / (j(j-1))
        let mut acc = 0.0;
        let mut p = b;
        for j in 2..=60usize {
            p *= b;
            acc += (1.0 / (j * (j - 1)) as f64 - g.coefficient(j)) * p;
        }
        let tail: f64 = (61..=g.k()).map(|j| g.coefficient(j) * b.powi(j as i32)).sum();
        acc - tail
    } else if b < 1.0 {
        potential(g, b).expect("b < 1").v
    } else {
        b - g.value(b) - u * (-u).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLabel {
    Unclustered,
    ClusteredSat,
    Unsat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseReport {
    pub label: PhaseLabel,
    /// Largest stationary point of `V` (the clustering order parameter).
    pub b_d: Option<f64>,
    /// The same point when it is a proper local minimum of `V`.
    pub b_s: Option<f64>,
    /// Next stationary point below `b_d`: the barrier between the origin
    /// and the secondary minimum.
    pub b_barrier: Option<f64>,
    pub v_at_min: Option<f64>,
}

pub fn classify(g: &GeneratingFunction) -> PhaseReport {
    let roots = stationary_roots_u(g);
    let Some(&u) = roots.last() else {
        return PhaseReport { label: PhaseLabel::Unclustered, b_d: None, b_s: None, b_barrier: None, v_at_min: None };
    };
    let b = b_of_u(u);
    let v = v_at_u(g, u);
    // V'' > 0 in u-space: s'(u) > 0
    let h = 1e-7 * u.max(1e-6);
    let is_min = stationarity(g, u + h) > stationarity(g, (u - h).max(0.0));
    PhaseReport {
        label: if v >= 0.0 { PhaseLabel::ClusteredSat } else { PhaseLabel::Unsat },
        b_d: Some(b),
        b_s: is_min.then_some(b),
        b_barrier: roots.len().checked_sub(2).map(|i| b_of_u(roots[i])),
        v_at_min: Some(v),
    }
}

const ALPHA_TOL: f64 = 1e-10;

/// Smallest `alpha` for which pure `k` clauses make `V` develop a secondary
/// stationary point.
pub fn clustering_threshold_pure(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k = {k} must be at least 2")));
    }
    let clustered = |a: f64| classify(&GeneratingFunction::pure(k, a).unwrap()).label != PhaseLabel::Unclustered;
    let (_, hi, _) = bisect_predicate(clustered, 0.0, 1.0, ALPHA_TOL, 200);
    Ok(hi)
}

/// Smallest `alpha` for which the secondary minimum of `V` drops below 0.
pub fn sat_threshold_pure(k: usize) -> Result<f64> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!("k = {k} must be at least 3")));
    }
    let lo = clustering_threshold_pure(k)?;
    let unsat = |a: f64| classify(&GeneratingFunction::pure(k, a).unwrap()).label == PhaseLabel::Unsat;
    if !unsat(1.0) {
        return Ok(1.0);
    }
    let (_, hi, _) = bisect_predicate(unsat, lo, 1.0, ALPHA_TOL, 200);
    Ok(hi)
}

#[derive(Clone, Debug)]
pub struct SectionSpec {
    pub k: usize,
    /// Densities held fixed, `(j, c_j)`.
    pub fixed: Vec<(usize, f64)>,
    pub sweep: usize,
    pub sweep_values: Vec<f64>,
    /// Coordinate solved for on each surface, searched in `[0, solve_max]`.
    pub solve: usize,
    pub solve_max: f64,
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SectionPoint {
    pub sweep_value: f64,
    pub c_crit_d: Option<f64>,
    pub c_crit_s: Option<f64>,
    pub c_crit_q: Option<f64>,
    /// Largest stationary point just past the clustering surface.
    pub b_d: Option<f64>,
}

fn coordinate_boundary<P: Fn(f64) -> bool>(pred: P, max: f64, tol: f64) -> Option<f64> {
    if pred(0.0) {
        return Some(0.0);
    }
    if !pred(max) {
        return None;
    }
    let (_, hi, _) = bisect_predicate(pred, 0.0, max, tol, 400);
    Some(hi)
}

pub fn surface_section(spec: &SectionSpec) -> Result<Vec<SectionPoint>> {
    let k = spec.k;
    let in_range = |j: usize| (2..=k).contains(&j);
    if !in_range(spec.sweep) || !in_range(spec.solve) || spec.sweep == spec.solve {
        return Err(Error::InvalidParameter("sweep and solve must be distinct lengths in 2..=k".into()));
    }
    for &(j, c) in &spec.fixed {
        if !in_range(j) || !(0.0..=1.0).contains(&c) {
            return Err(Error::InvalidParameter(format!("fixed density c_{j} = {c} out of range")));
        }
    }
    let points = spec
        .sweep_values
        .par_iter()
        .map(|&sv| {
            let gf = |x: f64| {
                let mut c = vec![0.0; k + 1];
                for &(j, v) in &spec.fixed {
                    c[j] = v;
                }
                c[spec.sweep] = sv;
                c[spec.solve] = x;
                GeneratingFunction::new(&c)
            };
            let label = |x: f64| gf(x).map(|g| classify(&g).label).unwrap_or(PhaseLabel::Unsat);
            let c_d = coordinate_boundary(|x| label(x) != PhaseLabel::Unclustered, spec.solve_max, spec.tol);
            let c_s = coordinate_boundary(|x| label(x) == PhaseLabel::Unsat, spec.solve_max, spec.tol);
            let c_q = coordinate_boundary(
                |x| gf(x).map(|g| 2.0 * g.coefficient(2) >= 1.0).unwrap_or(true),
                spec.solve_max,
                spec.tol,
            );
            let b_d = c_d.and_then(|x| gf(x).ok()).and_then(|g| classify(&g).b_d);
            SectionPoint { sweep_value: sv, c_crit_d: c_d, c_crit_s: c_s, c_crit_q: c_q, b_d }
        })
        .collect();
    Ok(points)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn section_csv(points: &[SectionPoint], comment: Option<&str>) -> String {
    let mut s = String::new();
    if let Some(c) = comment {
        let _ = writeln!(s, "# {c}");
    }
    s.push_str("sweep_value,c_crit_d,c_crit_s\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", p.sweep_value, opt(p.c_crit_d), opt(p.c_crit_s));
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionOrder {
    First,
    Second,
}

/// One crossing of the clustering or sat surface by a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineCrossing {
    pub t: f64,
    pub b: f64,
    pub order: TransitionOrder,
    /// `1 - F'(b)` on the clustering line, `b - F(b)` on the sat line.
    pub numerator: f64,
    /// `d/d alpha` of `G'(b)` (clustering) or `G(b)` (sat) at fixed `t`.
    pub denominator: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionPoint {
    pub alpha: f64,
    pub d: Option<LineCrossing>,
    pub s: Option<LineCrossing>,
    pub t_q: Option<f64>,
    /// `1 + 2 dc_2/dt` at `t_q`.
    pub q_numerator: Option<f64>,
    /// `2 d c_2 / d alpha` at `t_q`.
    pub q_denominator: Option<f64>,
    /// Probes at which the label fell back below the highest label seen.
    pub label_regressions: usize,
    pub end: EndReason,
}

#[derive(Clone, Copy, Debug)]
pub struct CrossingOptions {
    pub integration: IntegrationOptions,
    /// Spacing in `t` of the classification probes.
    pub probe_dt: f64,
    pub t_tol: f64,
    /// Step for the finite-difference `alpha` derivatives; 0 disables them.
    pub dalpha: f64,
    /// Jump in `b` above which a crossing counts as first order.
    pub jump: f64,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        Self {
            integration: IntegrationOptions { stop: StopRule::Contradiction, record_every: 0, ..Default::default() },
            probe_dt: 1e-3,
            t_tol: 1e-7,
            dalpha: 1e-4,
            jump: 1e-3,
        }
    }
}

fn label_of(state: &TrajectoryState) -> Result<PhaseReport> {
    Ok(classify(&state.evolved()?))
}

/// Bisects in `t` for the first time `hit` holds, re-integrating from
/// `snapshot` (where it does not hold) up to `t_hi` (where it does).
fn locate<P: Fn(&PhaseReport) -> bool>(mut snapshot: Integrator, mut t_hi: f64, tol: f64, hit: P) -> Result<Integrator> {
    let mut hi_state: Option<Integrator> = None;
    while t_hi - snapshot.t() > tol {
        let mid = 0.5 * (snapshot.t() + t_hi);
        let mut probe = snapshot.clone();
        probe.advance_to(mid)?;
        if hit(&label_of(&probe.state())?) {
            t_hi = probe.t();
            hi_state = Some(probe);
        } else {
            if probe.t() <= snapshot.t() {
                break;
            }
            snapshot = probe;
        }
    }
    match hi_state {
        Some(s) => Ok(s),
        None => {
            let mut s = snapshot;
            s.advance_to(t_hi)?;
            Ok(s)
        }
    }
}

fn unnormalized(state: &TrajectoryState) -> GeneratingFunction {
    let mut c = state.c.clone();
    c[0] = 0.0;
    c[1] = 0.0;
    GeneratingFunction::new(&c).expect("densities are nonnegative")
}

fn alpha_derivative<F: Fn(&TrajectoryState) -> f64>(
    k: usize,
    alpha: f64,
    policy: &MeanFieldPolicy,
    opts: &CrossingOptions,
    t: f64,
    quantity: F,
) -> Result<Option<f64>> {
    if opts.dalpha <= 0.0 {
        return Ok(None);
    }
    let at = |a: f64| -> Result<Option<f64>> {
        let mut it = Integrator::new(k, a, policy.clone(), IntegrationOptions { stop: StopRule::Time(1e-6), ..opts.integration })?;
        it.advance_to(t)?;
        Ok(((it.t() - t).abs() < 1e-12).then(|| quantity(&it.state())))
    };
    let lo = (alpha - opts.dalpha).max(0.0);
    let hi = alpha + opts.dalpha;
    Ok(match (at(lo)?, at(hi)?) {
        (Some(a), Some(b)) => Some((b - a) / (hi - lo)),
        _ => None,
    })
}

/// First crossing times of the clustering, sat and contradiction surfaces
/// along one trajectory.
pub fn crossing_times(k: usize, alpha: f64, policy: &MeanFieldPolicy, opts: &CrossingOptions) -> Result<TransitionPoint> {
    let iopts = IntegrationOptions { stop: StopRule::Contradiction, record_every: 0, ..opts.integration };
    let mut it = Integrator::new(k, alpha, policy.clone(), iopts)?;
    let mut prev = it.clone();
    let mut prev_label = label_of(&it.state())?;
    let mut best = prev_label.label;
    let mut regressions = 0;
    let mut d_state = (prev_label.label != PhaseLabel::Unclustered).then(|| it.clone());
    let mut s_state = (prev_label.label == PhaseLabel::Unsat).then(|| it.clone());

    while it.ended().is_none() {
        let target = it.t() + opts.probe_dt;
        it.advance_to(target)?;
        if it.t() >= 1.0 {
            break;
        }
        let report = label_of(&it.state())?;
        if d_state.is_none() && report.label != PhaseLabel::Unclustered {
            d_state = Some(locate(prev.clone(), it.t(), opts.t_tol, |r| r.label != PhaseLabel::Unclustered)?);
        }
        if s_state.is_none() && report.label == PhaseLabel::Unsat {
            s_state = Some(locate(prev.clone(), it.t(), opts.t_tol, |r| r.label == PhaseLabel::Unsat)?);
        }
        if report.label < best {
            regressions += 1;
        }
        best = best.max(report.label);
        prev = it.clone();
        prev_label = report;
    }
    let _ = prev_label;

    let crossing = |snap: &Integrator, sat_line: bool| -> Result<LineCrossing> {
        let state = snap.state();
        let report = label_of(&state)?;
        let b = report.b_d.unwrap_or(0.0);
        let t = state.t;
        let (numerator, denominator) = if sat_line {
            (b - state.f(b), alpha_derivative(k, alpha, policy, opts, t, |s| unnormalized(s).value(b))?)
        } else {
            (1.0 - state.f_prime(b), alpha_derivative(k, alpha, policy, opts, t, |s| unnormalized(s).d1(b))?)
        };
        let order = if b > opts.jump { TransitionOrder::First } else { TransitionOrder::Second };
        Ok(LineCrossing { t, b, order, numerator, denominator })
    };
    let d = d_state.as_ref().map(|s| crossing(s, false)).transpose()?;
    let s = s_state.as_ref().map(|s| crossing(s, true)).transpose()?;

    let t_q = it.t_q();
    let (q_numerator, q_denominator) = match t_q {
        Some(tq) if it.ended() == Some(EndReason::Contradiction) => {
            let dc = it.derivative();
            (Some(1.0 + 2.0 * dc[2]), alpha_derivative(k, alpha, policy, opts, tq, |s| 2.0 * s.c[2])?)
        }
        _ => (None, None),
    };
    Ok(TransitionPoint {
        alpha,
        d,
        s,
        t_q,
        q_numerator,
        q_denominator,
        label_regressions: regressions,
        end: it.ended().unwrap_or(EndReason::TimeLimit),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TransitionLines {
    pub k: usize,
    pub policy: String,
    pub points: Vec<TransitionPoint>,
    pub critical: Option<CriticalPoint>,
}

impl TransitionLines {
    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut s = String::new();
        if let Some(c) = comment {
            let _ = writeln!(s, "# {c}");
        }
        s.push_str("alpha,t_d,t_s,t_q\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{},{},{}", p.alpha, opt(p.d.map(|x| x.t)), opt(p.s.map(|x| x.t)), opt(p.t_q));
        }
        s
    }
}

/// Crossing times over a grid of `alpha`, evaluated in parallel; rows keep
/// the order of `alphas`. With `with_critical` the critical point is
/// located as well.
pub fn transition_lines(
    k: usize,
    alphas: &[f64],
    policy: &MeanFieldPolicy,
    opts: &CrossingOptions,
    with_critical: bool,
) -> Result<TransitionLines> {
    let points = alphas.par_iter().map(|&a| crossing_times(k, a, policy, opts)).collect::<Result<Vec<_>>>()?;
    let critical = if with_critical {
        Some(critical_point(k, policy, &CriticalOptions { integration: opts.integration, ..Default::default() })?)
    } else {
        None
    };
    Ok(TransitionLines { k, policy: policy.name().to_string(), points, critical })
}

#[derive(Clone, Copy, Debug)]
pub struct CriticalOptions {
    pub integration: IntegrationOptions,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub alpha_tol: f64,
    pub max_iter: usize,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        Self {
            integration: IntegrationOptions { record_every: 0, ..Default::default() },
            alpha_lo: 0.0,
            alpha_hi: 1.0,
            alpha_tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub t_a: f64,
    pub alpha_a: f64,
    /// `|max_t c_2/(1-t) - 1/2|` on the successful side of the bracket.
    pub residual_c2: f64,
    /// `|c_3/(1-t) - 1/6|` at the time of that maximum.
    pub residual_c3: f64,
    pub iterations: usize,
}

impl CriticalPoint {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "t_a": self.t_a,
            "alpha_a": self.alpha_a,
            "residual_c2": self.residual_c2,
            "residual_c3": self.residual_c3,
        })
    }
}

/// Does the trajectory at `alpha` avoid the contradiction surface? Returns
/// the trajectory summary `(max c~2, t at max, c~3 there)` as well.
fn succeeds(k: usize, alpha: f64, policy: &MeanFieldPolicy, opts: &IntegrationOptions) -> Result<(bool, (f64, f64, f64))> {
    let iopts = IntegrationOptions { stop: StopRule::Contradiction, record_every: 0, ..*opts };
    let mut it = Integrator::new(k, alpha, policy.clone(), iopts)?;
    while it.step()? {}
    let peak = it.max_ctilde2();
    Ok((it.t_q().is_none() && peak.0 < 0.5, peak))
}

/// The largest `alpha` whose trajectory stays clear of `c_2/(1-t) = 1/2`.
pub fn critical_point(k: usize, policy: &MeanFieldPolicy, opts: &CriticalOptions) -> Result<CriticalPoint> {
    let (ok_lo, _) = succeeds(k, opts.alpha_lo, policy, &opts.integration)?;
    let (ok_hi, _) = succeeds(k, opts.alpha_hi, policy, &opts.integration)?;
    if !ok_lo || ok_hi {
        return Err(Error::Numerical(format!(
            "alpha bracket [{}, {}] does not straddle the algorithmic threshold",
            opts.alpha_lo, opts.alpha_hi
        )));
    }
    let (mut lo, mut hi) = (opts.alpha_lo, opts.alpha_hi);
    let mut iterations = 0;
    while hi - lo > opts.alpha_tol {
        if iterations == opts.max_iter {
            return Err(Error::Numerical(format!("bisection did not converge in {} steps", opts.max_iter)));
        }
        let mid = 0.5 * (lo + hi);
        if succeeds(k, mid, policy, &opts.integration)?.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let (_, (peak, t_a, ct3)) = succeeds(k, lo, policy, &opts.integration)?;
    Ok(CriticalPoint {
        t_a,
        alpha_a: 0.5 * (lo + hi),
        residual_c2: (peak - 0.5).abs(),
        residual_c3: (ct3 - 1.0 / 6.0).abs(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Pure k: eliminating alpha between V' = 0 and V'' = 0 leaves
    /// b/(1-b) + (k-1) ln(1-b) = 0 for the double root.
    fn oracle_alpha_d(k: usize) -> f64 {
        let h = |b: f64| b / (1.0 - b) + (k - 1) as f64 * (-b).ln_1p();
        // h < 0 just above 0 and h -> +inf as b -> 1
        let b = bisect(h, 1e-9, 1.0 - 1e-15, 1e-16, 500).unwrap();
        -(-b).ln_1p() / (k as f64 * b.powi(k as i32 - 1))
    }

    #[test]
    fn classify_pure_three() {
        let at = |a| classify(&GeneratingFunction::pure(3, a).unwrap()).label;
        assert_eq!(at(0.5), PhaseLabel::Unclustered);
        assert_eq!(at(0.85), PhaseLabel::ClusteredSat);
        assert_eq!(at(0.95), PhaseLabel::Unsat);
    }

    #[test]
    fn thresholds_for_three() {
        let ad = clustering_threshold_pure(3).unwrap();
        let as_ = sat_threshold_pure(3).unwrap();
        assert!((ad - 0.818).abs() < 1e-3, "{ad}");
        assert!((as_ - 0.918).abs() < 1e-3, "{as_}");
        assert!(ad < as_);
        assert!((ad - oracle_alpha_d(3)).abs() < 1e-8);
    }

    #[test]
    fn clustering_threshold_matches_elimination_oracle() {
        for k in [4, 5, 8, 16, 64, 256, 1024] {
            let ad = clustering_threshold_pure(k).unwrap();
            let oracle = oracle_alpha_d(k);
            assert!((ad - oracle).abs() < 1e-8 * oracle.max(1.0) + 1e-9, "k={k}: {ad} vs {oracle}");
        }
    }

    #[test]
    fn clustering_threshold_approaches_log_k_over_k_slowly() {
        let ratio = |k: usize| clustering_threshold_pure(k).unwrap() * k as f64 / (k as f64).ln();
        let r: Vec<f64> = [16, 64, 256, 1024, 4096].iter().map(|&k| ratio(k)).collect();
        for w in r.windows(2) {
            assert!(w[0] > w[1] && w[1] > 1.0, "{r:?}");
        }
    }

    #[test]
    fn k_two_clusters_at_one_half() {
        let ad = clustering_threshold_pure(2).unwrap();
        assert!((ad - 0.5).abs() < 1e-8, "{ad}");
        assert!(sat_threshold_pure(2).is_err());
    }

    #[test]
    fn sat_threshold_increases_toward_one() {
        let s3 = sat_threshold_pure(3).unwrap();
        let s4 = sat_threshold_pure(4).unwrap();
        let s64 = sat_threshold_pure(64).unwrap();
        assert!(s3 < s4 && s4 <= s64 && s64 <= 1.0, "{s3} {s4} {s64}");
        assert!(s64 > 0.918);
    }

    #[test]
    fn largest_root_moves_down_with_alpha() {
        let mut prev = f64::INFINITY;
        for i in 0..30 {
            let a = 1.2 - i as f64 * 0.012;
            if let Some(b) = classify(&GeneratingFunction::pure(3, a).unwrap()).b_d {
                assert!(b <= prev + 1e-12);
                prev = b;
            }
        }
    }

    #[test]
    fn sections_pass_through_the_critical_point() {
        let spec = SectionSpec {
            k: 3,
            fixed: vec![],
            sweep: 2,
            sweep_values: vec![0.0, 0.25, 0.4999999],
            solve: 3,
            solve_max: 1.0,
            tol: 1e-10,
        };
        let pts = surface_section(&spec).unwrap();
        // c_2 = 0 is the pure case
        assert!((pts[0].c_crit_d.unwrap() - oracle_alpha_d(3)).abs() < 1e-8);
        assert!((pts[0].c_crit_s.unwrap() - sat_threshold_pure(3).unwrap()).abs() < 1e-8);
        assert!((pts[2].c_crit_d.unwrap() - 1.0 / 6.0).abs() < 1e-3);
        for p in &pts {
            assert!(p.c_crit_d.unwrap() <= p.c_crit_s.unwrap());
        }
        let q = surface_section(&SectionSpec { sweep: 3, sweep_values: vec![0.0, 0.1], solve: 2, ..spec }).unwrap();
        for p in q {
            assert!((p.c_crit_q.unwrap() - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_section_of_four_is_the_three_diagram() {
        let values = vec![0.0, 0.1, 0.2, 0.3, 0.4];
        let three =
            SectionSpec { k: 3, fixed: vec![], sweep: 2, sweep_values: values.clone(), solve: 3, solve_max: 1.0, tol: 1e-10 };
        let four = SectionSpec { k: 4, fixed: vec![(4, 0.0)], ..three.clone() };
        let a = surface_section(&three).unwrap();
        let b = surface_section(&four).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.c_crit_d, y.c_crit_d);
            assert_eq!(x.c_crit_s, y.c_crit_s);
        }
        assert!(section_csv(&a, None).starts_with("sweep_value,c_crit_d,c_crit_s\n"));
    }

    #[test]
    fn second_order_scaling_near_critical_surface() {
        // expansion of V' to third order: b_d = 9 eps / 2, 1/2 - c_2 = 27 eps^2 / 8
        let eps = [1e-4, 1e-3, 1e-2];
        let spec = SectionSpec {
            k: 3,
            fixed: vec![],
            sweep: 3,
            sweep_values: eps.iter().map(|e| 1.0 / 6.0 + e).collect(),
            solve: 2,
            solve_max: 0.5,
            tol: 1e-16,
        };
        let pts = surface_section(&spec).unwrap();
        for (p, e) in pts.iter().zip(eps) {
            let gap = 0.5 - p.c_crit_d.unwrap();
            let b = p.b_d.unwrap();
            assert!((b / (4.5 * e) - 1.0).abs() < 0.1 + 5.0 * e, "eps={e} b={b}");
            assert!((gap / (3.375 * e * e) - 1.0).abs() < 0.1 + 10.0 * e, "eps={e} gap={gap}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn label_agrees_with_potential_on_roots(c2 in 0.0f64..0.5, c3 in 0.0f64..1.2, c4 in 0.0f64..0.5) {
            let g = GeneratingFunction::from_pairs(&[(2, c2), (3, c3), (4, c4)]).unwrap();
            let r = classify(&g);
            for b in stationary_points(&g) {
                if b < 1.0 - 1e-9 {
                    let p = potential(&g, b).unwrap();
                    prop_assert!(p.d1.abs() < 1e-9, "V'({b}) = {}", p.d1);
                }
            }
            match r.label {
                PhaseLabel::Unclustered => prop_assert!(r.b_d.is_none()),
                PhaseLabel::ClusteredSat => prop_assert!(r.v_at_min.unwrap() >= 0.0),
                PhaseLabel::Unsat => prop_assert!(r.v_at_min.unwrap() < 0.0),
            }
        }

        #[test]
        fn more_clauses_never_unclusters(c3 in 0.0f64..1.0, extra in 0.0f64..0.3) {
            let a = classify(&GeneratingFunction::pure(3, c3).unwrap()).label;
            let b = classify(&GeneratingFunction::pure(3, c3 + extra).unwrap()).label;
            prop_assert!(b >= a);
        }
    }
}
