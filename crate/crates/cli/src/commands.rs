use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use uecsp::meanfield::{
    potential, IntegrationOptions, Integrator, MeanFieldPolicy, StopRule,
};
use uecsp::phase::{
    clustering_threshold_pure, critical_point, crossing_times, sat_threshold_pure, section_csv, surface_section,
    transition_lines, CriticalOptions, CrossingOptions, SectionSpec,
};
use uecsp::scaling::{collapse_fit, epoch_lengths, guc_threshold_sweep, SweepOptions};
use uecsp::search::{estimate_success_probability, EnsembleSpec, HeuristicPolicy};
use uecsp::{gaussian_solve, generate_random_formula, leaf_remove, Formula};

use crate::{
    GenerateArgs, LeafremoveArgs, NumericArgs, PhaseArgs, ScalingArgs, SearchArgs, SolveArgs, ThresholdsArgs,
    TrajectoryArgs,
};

/// Inclusive `lo:hi:step` grid.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("range '{s}' is not of the form lo:hi:step");
    }
    let num = |p: &str| p.trim().parse::<f64>().with_context(|| format!("bad number '{p}' in range '{s}'"));
    let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        bail!("range '{s}' needs finite lo <= hi and step > 0");
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        bail!("range '{s}' has too many points");
    }
    // Rounded so that 0.7 + 0.1 prints as 0.8.
    Ok((0..=n).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).collect())
}

/// `cJ` -> `J`
fn parse_coord(s: &str) -> Result<usize> {
    s.trim()
        .strip_prefix('c')
        .and_then(|j| j.parse().ok())
        .with_context(|| format!("expected a density name like c3, got '{s}'"))
}

/// `c4=0,c5=0.1` -> `[(4, 0.0), (5, 0.1)]`
pub fn parse_section(s: &str) -> Result<Vec<(usize, f64)>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (name, val) = p.split_once('=').with_context(|| format!("expected cJ=value, got '{p}'"))?;
            let v: f64 = val.trim().parse().with_context(|| format!("bad value in '{p}'"))?;
            if !(v >= 0.0 && v.is_finite()) {
                bail!("density in '{p}' must be finite and nonnegative");
            }
            Ok((parse_coord(name)?, v))
        })
        .collect()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        bail!("alpha = {alpha} must be finite and nonnegative");
    }
    Ok(())
}

fn check_k(k: usize, min: usize) -> Result<()> {
    if k < min {
        bail!("k = {k} must be >= {min}");
    }
    Ok(())
}

fn check_numeric(n: &NumericArgs) -> Result<()> {
    if !(n.dt > 0.0 && n.dt < 0.1) {
        bail!("dt = {} must lie in (0, 0.1)", n.dt);
    }
    if !(n.tol > 0.0 && n.tol < 1e-2) {
        bail!("tol = {} must lie in (0, 0.01)", n.tol);
    }
    Ok(())
}

fn integration(dt: f64) -> IntegrationOptions {
    IntegrationOptions { dt, record_every: 0, ..Default::default() }
}

fn heuristic(name: &str) -> Result<HeuristicPolicy> {
    match name.to_ascii_lowercase().as_str() {
        "uc" => Ok(HeuristicPolicy::Uc),
        "guc" => Ok(HeuristicPolicy::Guc),
        other => bail!("unknown policy '{other}' (expected uc or guc)"),
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    let mut w = sink(out)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn emit_json(out: Option<&Path>, v: &Value) -> Result<()> {
    emit(out, &format!("{}\n", serde_json::to_string_pretty(v)?))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
    Ok(p)
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| format!(" --out {}", p.display())).unwrap_or_default()
}

pub fn generate(a: &GenerateArgs) -> Result<bool> {
    let i = &a.instance;
    check_k(i.k, 1)?;
    check_alpha(i.alpha)?;
    let inv = format!("uecsp generate --k {} --d {} --n {} --alpha {} --seed {}", i.k, i.d, i.n, i.alpha, i.seed);
    let f = generate_random_formula(i.n, i.k, i.alpha, i.d, i.seed)?;
    let mut w = sink(a.out.as_deref())?;
    writeln!(w, "# {inv}")?;
    f.write_text(&mut w)?;
    w.flush()?;
    Ok(true)
}

fn read_formula(p: &Path) -> Result<Formula> {
    let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
    Ok(Formula::read_text(BufReader::new(file)).with_context(|| format!("parsing {}", p.display()))?)
}

pub fn solve(a: &SolveArgs) -> Result<bool> {
    let inv = format!(
        "uecsp solve {}{}{}",
        a.input.display(),
        if a.witness { " --witness" } else { "" },
        opt_path(&a.out)
    );
    let f = read_formula(&a.input)?;
    let v = gaussian_solve(&f)?;
    let mut out = json!({
        "invocation": inv,
        "satisfiable": v.satisfiable,
        "d": f.d(),
        "num_vars": f.num_vars(),
        "num_clauses": f.num_alive(),
    });
    if a.witness {
        out["witness"] = match &v.witness {
            Some(w) => json!(w.values().iter().map(|x| x.unwrap_or(0)).collect::<Vec<_>>()),
            None => Value::Null,
        };
    }
    emit_json(a.out.as_deref(), &out)?;
    Ok(true)
}

pub fn search(a: &SearchArgs) -> Result<bool> {
    check_k(a.k, 1)?;
    let alphas = match (&a.alpha_range, a.alpha) {
        (Some(r), _) => parse_range(r)?,
        (None, Some(x)) => vec![x],
        (None, None) => bail!("one of --alpha or --alpha-range is required"),
    };
    for &x in &alphas {
        check_alpha(x)?;
    }
    if a.seeds == 0 {
        bail!("--seeds must be >= 1");
    }
    let policy = heuristic(&a.policy)?;
    let json_out = match a.format.as_str() {
        "csv" => false,
        "json" => true,
        other => bail!("unknown format '{other}' (expected csv or json)"),
    };
    let range = match &a.alpha_range {
        Some(r) => format!("--alpha-range {r}"),
        None => format!("--alpha {}", alphas[0]),
    };
    let inv = format!(
        "uecsp search --k {} --d {} --n {} {range} --policy {} --seeds {} --seed {} --format {}{}",
        a.k,
        a.d,
        a.n,
        policy.name(),
        a.seeds,
        a.seed,
        a.format,
        opt_path(&a.out)
    );
    // Sequential over alpha; each estimate is parallel over its runs, and
    // every alpha reuses the same master seed so curves are paired.
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let spec = EnsembleSpec { n: a.n, k: a.k, alpha, d: a.d };
        rows.push((alpha, estimate_success_probability(&spec, &policy, a.seeds, a.seed)?));
    }
    if json_out {
        let rows: Vec<Value> = rows
            .iter()
            .map(|(alpha, e)| json!({"alpha": alpha, "p_hat": e.p_hat, "stderr": e.stderr, "successes": e.successes, "runs": e.runs}))
            .collect();
        emit_json(a.out.as_deref(), &json!({"invocation": inv, "rows": rows}))?;
    } else {
        let mut s = format!("# {inv}\nalpha,p_hat,stderr\n");
        for (alpha, e) in &rows {
            s.push_str(&format!("{alpha},{},{}\n", e.p_hat, e.stderr));
        }
        emit(a.out.as_deref(), &s)?;
    }
    Ok(true)
}

pub fn leafremove(a: &LeafremoveArgs) -> Result<bool> {
    let (f, inv) = match &a.input {
        Some(p) => (read_formula(p)?, format!("uecsp leafremove --input {} --seed {}", p.display(), a.seed)),
        None => {
            check_k(a.k, 1)?;
            check_alpha(a.alpha)?;
            let inv = format!(
                "uecsp leafremove --k {} --d {} --n {} --alpha {} --seed {}",
                a.k, a.d, a.n, a.alpha, a.seed
            );
            (generate_random_formula(a.n, a.k, a.alpha, a.d, a.seed)?, inv)
        }
    };
    let inv = inv + &opt_path(&a.out);
    let report = leaf_remove(&f, a.seed)?;
    let mut v = report.summary_json();
    v["invocation"] = json!(inv);
    v["num_vars"] = json!(f.num_vars());
    v["core_fraction"] = json!(report.core_fraction);
    v["core_clauses"] = json!(report.core_clauses());
    emit_json(a.out.as_deref(), &v)?;
    Ok(true)
}

/// Times at which the potential is tabulated: a coarse grid plus the
/// crossing times themselves.
fn snapshot_times(t_end: f64, marks: &[Option<f64>]) -> Vec<f64> {
    let mut ts: Vec<f64> = (0..).map(|i| i as f64 * 0.05).take_while(|&t| t < t_end).collect();
    ts.extend(marks.iter().flatten().copied().filter(|&t| t <= t_end));
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    ts
}

pub fn trajectory(a: &TrajectoryArgs) -> Result<bool> {
    check_k(a.k, 2)?;
    check_alpha(a.alpha)?;
    check_numeric(&a.numeric)?;
    let policy = MeanFieldPolicy::from_name(&a.policy)?;
    let inv = format!(
        "uecsp trajectory --k {} --alpha {} --policy {} --dt {} --tol {} --record-every {}{}",
        a.k,
        a.alpha,
        policy.name(),
        a.numeric.dt,
        a.numeric.tol,
        a.record_every,
        a.out_dir.as_ref().map(|p| format!(" --out-dir {}", p.display())).unwrap_or_default()
    );
    let iopts = IntegrationOptions { dt: a.numeric.dt, stop: StopRule::Contradiction, record_every: a.record_every, ..Default::default() };
    let copts = CrossingOptions { integration: IntegrationOptions { record_every: 0, ..iopts }, ..Default::default() };
    let cross = crossing_times(a.k, a.alpha, &policy, &copts)?;

    let it = Integrator::new(a.k, a.alpha, policy.clone(), iopts)?;
    let mut snap = it.clone();
    let traj = it.run()?;

    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, Some(&inv))?;
        write_file(dir, "trajectory.csv", &String::from_utf8(buf)?)?;
        write_file(dir, "tstar.csv", &traj.tstar.to_csv(Some(&inv)))?;

        let marks = [cross.d.map(|x| x.t), cross.s.map(|x| x.t), cross.t_q];
        let mut s = format!("# {inv}\nt,b,V\n");
        for t in snapshot_times(traj.t_end, &marks) {
            snap.advance_to(t)?;
            let st = snap.state();
            let g = st.evolved()?;
            for i in 0..200 {
                let b = i as f64 * 0.005;
                s.push_str(&format!("{},{b},{}\n", st.t, potential(&g, b)?.v));
            }
        }
        write_file(dir, "potential.csv", &s)?;
    }

    let out = json!({
        "invocation": inv,
        "k": a.k,
        "alpha": a.alpha,
        "policy": policy.name(),
        "t_d": cross.d.map(|x| x.t),
        "t_s": cross.s.map(|x| x.t),
        "t_q": cross.t_q,
        "order_d": cross.d.map(|x| x.order),
        "order_s": cross.s.map(|x| x.order),
        "b_d": cross.d.map(|x| x.b),
        "b_s": cross.s.map(|x| x.b),
        "end": traj.end,
        "t_end": traj.t_end,
        "epoch_rises": traj.epoch_rises,
    });
    emit_json(None, &out)?;
    Ok(true)
}

pub fn phase(a: &PhaseArgs) -> Result<bool> {
    check_k(a.k, 2)?;
    check_numeric(&a.numeric)?;
    let out_flag = opt_path(&a.out);
    if a.lines {
        let policy = MeanFieldPolicy::from_name(&a.policy)?;
        let range = a.range.clone().unwrap_or_else(|| "0.6:1:0.01".into());
        let alphas = parse_range(&range)?;
        for &x in &alphas {
            check_alpha(x)?;
        }
        let inv = format!(
            "uecsp phase --lines --k {} --policy {} --range {range} --dt {} --tol {}{out_flag}",
            a.k,
            policy.name(),
            a.numeric.dt,
            a.numeric.tol
        );
        let copts = CrossingOptions { integration: integration(a.numeric.dt), ..Default::default() };
        let lines = transition_lines(a.k, &alphas, &policy, &copts, false)?;
        let mut s = lines.to_csv(Some(&inv));
        let crit = critical_point(
            a.k,
            &policy,
            &CriticalOptions { integration: integration(a.numeric.dt), alpha_tol: a.numeric.tol, ..Default::default() },
        )?;
        s.push_str(&format!("# critical t_a={} alpha_a={}\n", crit.t_a, crit.alpha_a));
        emit(a.out.as_deref(), &s)?;
        return Ok(true);
    }

    let section = a.section.as_deref().unwrap_or("");
    let fixed = parse_section(section)?;
    let sweep = parse_coord(&a.sweep)?;
    let solve = parse_coord(&a.solve)?;
    for &j in fixed.iter().map(|(j, _)| j).chain([&sweep, &solve]) {
        if j < 2 || j > a.k {
            bail!("density c{j} is outside c2..c{}", a.k);
        }
    }
    if sweep == solve || fixed.iter().any(|&(j, _)| j == sweep || j == solve) {
        bail!("the fixed, swept and solved densities must be distinct");
    }
    let range = a.range.clone().unwrap_or_else(|| "0:0.5:0.01".into());
    let sweep_values = parse_range(&range)?;
    let inv = format!(
        "uecsp phase --k {} --section {section} --sweep c{sweep} --solve c{solve} --range {range} --tol {}{out_flag}",
        a.k, a.numeric.tol
    );
    let spec = SectionSpec { k: a.k, fixed, sweep, sweep_values, solve, solve_max: 2.0, tol: a.numeric.tol };
    let points = surface_section(&spec)?;
    emit(a.out.as_deref(), &section_csv(&points, Some(&inv)))?;
    Ok(true)
}

pub fn thresholds(a: &ThresholdsArgs) -> Result<bool> {
    check_k(a.k, 2)?;
    check_numeric(&a.numeric)?;
    let inv = format!("uecsp thresholds --k {} --dt {} --tol {}{}", a.k, a.numeric.dt, a.numeric.tol, opt_path(&a.out));
    let alpha_d = clustering_threshold_pure(a.k)?;
    let alpha_s = if a.k >= 3 { Some(sat_threshold_pure(a.k)?) } else { None };
    let copts = CriticalOptions { integration: integration(a.numeric.dt), alpha_tol: a.numeric.tol, ..Default::default() };
    let (uc, guc) = rayon::join(
        || critical_point(a.k, &MeanFieldPolicy::Uc, &copts),
        || critical_point(a.k, &MeanFieldPolicy::Guc, &copts),
    );
    let (uc, guc) = (uc?, guc?);
    let out = json!({
        "invocation": inv,
        "k": a.k,
        "alpha_d": alpha_d,
        "alpha_s": alpha_s,
        "alpha_a_uc": uc.alpha_a,
        "alpha_a_guc": guc.alpha_a,
        "uc": uc.to_json(),
        "guc": guc.to_json(),
    });
    emit_json(a.out.as_deref(), &out)?;
    Ok(true)
}

pub fn scaling(a: &ScalingArgs) -> Result<bool> {
    if a.kmax > 4096 && !a.large {
        bail!("kmax = {} above 4096 needs --large", a.kmax);
    }
    let kmin = a.kmin.unwrap_or((a.kmax / 8).clamp(8, 256));
    if !kmin.is_power_of_two() || !a.kmax.is_power_of_two() || kmin < 8 || kmin > a.kmax {
        bail!("kmin = {kmin} and kmax = {} must be powers of two with 8 <= kmin <= kmax", a.kmax);
    }
    if !(a.dt > 0.0 && a.dt < 0.1) || !(a.tol > 0.0 && a.tol < 1e-2) {
        bail!("dt and tol must be positive and small");
    }
    let inv = format!(
        "uecsp scaling --kmin {kmin} --kmax {} --dt {} --tol {}{}{}",
        a.kmax,
        a.dt,
        a.tol,
        if a.large { " --large" } else { "" },
        a.out_dir.as_ref().map(|p| format!(" --out-dir {}", p.display())).unwrap_or_default()
    );
    let ks: Vec<usize> = std::iter::successors(Some(kmin), |&k| Some(k * 2)).take_while(|&k| k <= a.kmax).collect();
    let opts = SweepOptions { integration: integration(a.dt), k_alpha_tol: a.tol };
    let sweep = guc_threshold_sweep(&ks, &opts)?;
    for f in &sweep.failures {
        eprintln!("k = {}: {}", f.k, f.error);
    }
    let fit = collapse_fit(&sweep.records);

    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_file(dir, "sweep.csv", &sweep.to_csv(Some(&inv)))?;
        let mut epochs = format!("# {inv}\nk,j,t_star,length\n");
        for r in &sweep.records {
            for (j, len) in epoch_lengths(&r.schedule, r.k) {
                epochs.push_str(&format!("{},{j},{},{len}\n", r.k, r.schedule.get(j).unwrap_or(f64::NAN)));
            }
        }
        write_file(dir, "epochs.csv", &epochs)?;
        if let Ok(fit) = &fit {
            write_file(dir, "collapse.csv", &fit.to_csv(Some(&inv)))?;
        }
    }

    let (fit_json, fit_ok) = match &fit {
        Ok(f) => (f.to_json(), true),
        Err(e) => {
            eprintln!("collapse fit: {e}");
            (json!({"error": e.to_string()}), false)
        }
    };
    let out = json!({
        "invocation": inv,
        "fit": fit_json,
        "records": sweep.records,
        "failures": sweep.failures,
    });
    emit_json(None, &out)?;
    Ok(fit_ok && sweep.failures.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_is_inclusive() {
        let r = parse_range("0.5:0.9:0.05").unwrap();
        assert_eq!(r.len(), 9);
        assert_eq!(r[0], 0.5);
        assert_eq!(*r.last().unwrap(), 0.9);
        assert_eq!(parse_range("1:1:0.1").unwrap(), vec![1.0]);
        assert!(parse_range("1:0:0.1").is_err());
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
    }

    #[test]
    fn section_parsing() {
        assert_eq!(parse_section("c4=0").unwrap(), vec![(4, 0.0)]);
        assert_eq!(parse_section("c4=0.1, c5=0").unwrap(), vec![(4, 0.1), (5, 0.0)]);
        assert!(parse_section("c4").is_err());
        assert!(parse_section("x4=1").is_err());
        assert!(parse_section("c4=-1").is_err());
    }
}
