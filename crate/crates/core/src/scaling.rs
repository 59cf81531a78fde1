//! Large-k behaviour of GUC: the algorithmic threshold `k alpha_a - log k`,
//! the epoch schedule `t*(j)`, and the collapse
//!
//!   k [t*(j) - t*(j+1)] - 1  ~  k^-nu f(j/k),   f(x) ~ x^-mu for small x.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::meanfield::{integrate_trajectory, IntegrationOptions, Integrator, MeanFieldPolicy, StopRule, TStarSchedule};
use crate::phase::{critical_point, CriticalOptions};
use crate::roots::golden_min;

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRecord {
    pub k: usize,
    pub alpha_a: f64,
    pub k_alpha_minus_logk: f64,
    pub t_a: f64,
    pub residual_c2: f64,
    pub residual_c3: f64,
    #[serde(skip)]
    pub schedule: TStarSchedule,
    pub epoch_rises: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepFailure {
    pub k: usize,
    pub error: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ScalingSweep {
    pub records: Vec<ScalingRecord>,
    pub failures: Vec<SweepFailure>,
}

impl ScalingSweep {
    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut s = String::new();
        if let Some(c) = comment {
            let _ = writeln!(s, "# {c}");
        }
        s.push_str("k,alpha_a,k_alpha_minus_logk\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{},{}", r.k, r.alpha_a, r.k_alpha_minus_logk);
        }
        s
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub integration: IntegrationOptions,
    /// Bisection tolerance on `k alpha`.
    pub k_alpha_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { integration: IntegrationOptions { record_every: 0, ..Default::default() }, k_alpha_tol: 1e-6 }
    }
}

fn sweep_one(k: usize, opts: &SweepOptions) -> Result<ScalingRecord> {
    let kf = k as f64;
    let lnk = kf.ln();
    let policy = MeanFieldPolicy::Guc;
    let base = CriticalOptions {
        integration: opts.integration,
        alpha_lo: lnk / kf,
        alpha_hi: ((lnk + 4.0) / kf).min(1.0),
        alpha_tol: opts.k_alpha_tol / kf,
        max_iter: 200,
    };
    let cp = critical_point(k, &policy, &base).or_else(|_| {
        let wide = CriticalOptions { alpha_lo: 0.5 * lnk / kf, alpha_hi: ((lnk + 10.0) / kf).min(1.0), ..base };
        critical_point(k, &policy, &wide)
    })?;
    let at = cp.alpha_a - base.alpha_tol;
    let iopts = IntegrationOptions { stop: StopRule::Contradiction, record_every: 0, ..opts.integration };
    let tr = integrate_trajectory(k, at, &policy, &iopts)?;
    Ok(ScalingRecord {
        k,
        alpha_a: cp.alpha_a,
        k_alpha_minus_logk: kf * cp.alpha_a - lnk,
        t_a: cp.t_a,
        residual_c2: cp.residual_c2,
        residual_c3: cp.residual_c3,
        schedule: tr.tstar,
        epoch_rises: tr.epoch_rises,
    })
}

/// GUC algorithmic threshold and epoch schedule for each `k`, in parallel.
/// A failing `k` is reported and the others continue.
pub fn guc_threshold_sweep(ks: &[usize], opts: &SweepOptions) -> Result<ScalingSweep> {
    if let Some(&k) = ks.iter().find(|&&k| k < 8) {
        return Err(Error::InvalidParameter(format!("sweep needs k >= 8, got {k}")));
    }
    let results: Vec<(usize, Result<ScalingRecord>)> = ks.par_iter().map(|&k| (k, sweep_one(k, opts))).collect();
    let mut sweep = ScalingSweep::default();
    for (k, r) in results {
        match r {
            Ok(rec) => sweep.records.push(rec),
            Err(e) => sweep.failures.push(SweepFailure { k, error: e.to_string() }),
        }
    }
    Ok(sweep)
}

/// `(j, t*(j) - t*(j+1))` for every `j < k` with both times known,
/// increasing in `j`.
pub fn epoch_lengths(schedule: &TStarSchedule, k: usize) -> Vec<(usize, f64)> {
    (2..k).filter_map(|j| Some((j, schedule.get(j)? - schedule.get(j + 1)?))).collect()
}

/// Largest `|k (t*(j) - t*(j+1)) - 1|` over the middle 80% of the epochs.
pub fn epoch_uniformity_check(schedule: &TStarSchedule, k: usize) -> Result<f64> {
    let lengths = epoch_lengths(schedule, k);
    if lengths.len() < 10 {
        return Err(Error::InsufficientData(format!("{} epochs, need at least 10", lengths.len())));
    }
    let (jmin, jmax) = (lengths[0].0 as f64, lengths[lengths.len() - 1].0 as f64);
    let margin = 0.1 * (jmax - jmin);
    Ok(lengths
        .iter()
        .filter(|(j, _)| (*j as f64) >= jmin + margin && (*j as f64) <= jmax - margin)
        .map(|(_, d)| (k as f64 * d - 1.0).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CollapsePoint {
    pub k: usize,
    pub x: f64,
    pub scaled: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CollapseFit {
    pub nu: f64,
    pub mu: f64,
    /// Mean of `k alpha_a - log k`.
    pub c: f64,
    /// Dispersion without rescaling over dispersion at the fitted `nu`.
    pub dispersion_ratio: f64,
    pub dispersion: f64,
    pub points: Vec<CollapsePoint>,
}

impl CollapseFit {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "nu": self.nu, "mu": self.mu, "c": self.c, "dispersion_ratio": self.dispersion_ratio })
    }

    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut s = String::new();
        if let Some(c) = comment {
            let _ = writeln!(s, "# {c}");
        }
        s.push_str("k,x,scaled_value\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{},{}", p.k, p.x, p.scaled);
        }
        s
    }
}

struct Curve {
    k: usize,
    /// `(x, j, k dt - 1)`, increasing in `x`
    pts: Vec<(f64, usize, f64)>,
}

impl Curve {
    fn at(&self, x: f64) -> Option<f64> {
        let i = self.pts.partition_point(|p| p.0 < x);
        if i == 0 || i == self.pts.len() {
            return (i < self.pts.len() && self.pts[i].0 == x).then(|| self.pts[i].2);
        }
        let (x0, _, y0) = self.pts[i - 1];
        let (x1, _, y1) = self.pts[i];
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

/// Spread across `k` of the rescaled deviations, relative to their size.
fn dispersion(curves: &[Curve], grid: &[f64], nu: f64) -> f64 {
    let (mut var, mut norm) = (0.0, 0.0);
    for &x in grid {
        let ys: Vec<f64> = curves.iter().filter_map(|c| c.at(x).map(|y| y * (c.k as f64).powf(nu))).collect();
        if ys.len() < 2 {
            continue;
        }
        let n = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / n;
        var += ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        norm += mean * mean;
    }
    var / norm
}

/// Least-squares slope of `y` against `x`.
fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn collapse_fit(records: &[ScalingRecord]) -> Result<CollapseFit> {
    let mut ks: Vec<usize> = records.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    if ks.len() < 4 || ks[ks.len() - 1] < 4 * ks[0] {
        return Err(Error::InsufficientData(format!(
            "collapse needs at least 4 values of k spanning a factor 4, got {ks:?}"
        )));
    }
    let curves: Vec<Curve> = records
        .iter()
        .map(|r| {
            let kf = r.k as f64;
            let pts = epoch_lengths(&r.schedule, r.k).into_iter().map(|(j, d)| (j as f64 / kf, j, kf * d - 1.0)).collect();
            Curve { k: r.k, pts }
        })
        .collect();

    let x_lo = (5.0 / ks[0] as f64).max(0.02);
    let x_hi = 0.5;
    let grid: Vec<f64> = (0..24).map(|i| x_lo * (x_hi / x_lo).powf(i as f64 / 23.0)).collect();
    let d0 = dispersion(&curves, &grid, 0.0);
    if !d0.is_finite() {
        return Err(Error::FitFailure("deviations vanish; nothing to collapse".into()));
    }
    let coarse = (0..=100).map(|i| i as f64 / 100.0).min_by(|a, b| {
        dispersion(&curves, &grid, *a).total_cmp(&dispersion(&curves, &grid, *b))
    });
    let coarse = coarse.expect("nonempty scan");
    let (nu, d_nu) =
        golden_min(|nu| dispersion(&curves, &grid, nu), (coarse - 0.01).max(0.0), (coarse + 0.01).min(1.0), 1e-6);
    if !(d_nu < d0) {
        return Err(Error::FitFailure(format!("no exponent in [0, 1] improves the dispersion {d0}")));
    }

    let small: Vec<(f64, f64)> = curves
        .iter()
        .flat_map(|c| {
            let scale = (c.k as f64).powf(nu);
            c.pts
                .iter()
                .filter(|&&(x, j, y)| j >= 4 && (0.01..=0.1).contains(&x) && y > 0.0)
                .map(move |&(x, _, y)| (x.ln(), (y * scale).ln()))
        })
        .collect();
    if small.len() < 3 {
        return Err(Error::FitFailure("too few positive points with x in [0.01, 0.1]".into()));
    }
    let mu = -slope(&small);
    let c = records.iter().map(|r| r.k_alpha_minus_logk).sum::<f64>() / records.len() as f64;

    let points = curves
        .iter()
        .flat_map(|cv| {
            let scale = (cv.k as f64).powf(nu);
            cv.pts.iter().map(move |&(x, _, y)| CollapsePoint { k: cv.k, x, scaled: y * scale })
        })
        .collect();
    Ok(CollapseFit { nu, mu, c, dispersion_ratio: d0 / d_nu, dispersion: d_nu, points })
}

/// `|sum_j c_j(t) - alpha + (1/k) sum_{j = j*(t)}^{k} 1/j|` at `samples`
/// evenly spaced times of a GUC trajectory, as `(t, residual)`.
pub fn harmonic_residuals(k: usize, alpha: f64, samples: usize, opts: &IntegrationOptions) -> Result<Vec<(f64, f64)>> {
    let iopts = IntegrationOptions { stop: StopRule::Contradiction, record_every: 0, ..*opts };
    let t_end = integrate_trajectory(k, alpha, &MeanFieldPolicy::Guc, &iopts)?.t_end;
    let mut it = Integrator::new(k, alpha, MeanFieldPolicy::Guc, iopts)?;
    let mut out = Vec::with_capacity(samples);
    for i in 1..=samples {
        it.advance_to(t_end * i as f64 / (samples + 1) as f64)?;
        let s = it.state();
        let harmonic: f64 = (s.jstar..=k).map(|j| 1.0 / j as f64).sum();
        out.push((s.t, (s.gamma() - alpha + harmonic / k as f64).abs()));
    }
    Ok(out)
}
