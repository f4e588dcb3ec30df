//! Self-check suites and the hire-share regression.

use std::path::PathBuf;

use rand::Rng;
use twostage_core::analytic::{
    evaluate, expected_hire_quality, female_share_hires, ConstraintMode, HireCutoff, PipelineParams,
};
use twostage_core::estimate::{ols_fit, share_design_row, OlsFit, SHARE_REGRESSION_COLUMNS};
use twostage_core::numkern::{bvn_cdf, bvn_pdf, bvn_tail, Corr, Threshold};
use twostage_core::sim::{run_benchmark, stream_rng, BenchmarkSpec, Policy, PolicyKind};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::figures::grid;
use crate::output::{num, write_table, OutDir, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_string(), passed, detail }
}

fn th(x: f64) -> Threshold {
    Threshold::new(x).expect("finite threshold")
}

fn rho(x: f64) -> Corr {
    Corr::new(x).expect("valid correlation")
}

fn numerics() -> Vec<Check> {
    let mut worst: f64 = 0.0;
    for i in -9..=9 {
        let r = i as f64 / 10.0;
        let exact = 0.25 + r.asin() / (2.0 * std::f64::consts::PI);
        worst = worst.max((bvn_cdf(th(0.0), th(0.0), rho(r)) - exact).abs());
    }
    let arcsine = check("numkern.arcsine_identity", worst <= 1e-10, format!("max error {worst:.2e}"));

    let pts = [-1.5, -0.5, 0.0, 0.7, 1.8];
    let rhos = [-0.8, -0.3, 0.0, 0.4, 0.85];
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut exact_dual = true;
    for &a in &pts {
        for &b in &pts {
            for &r in &rhos {
                let fd = (bvn_cdf(th(a), th(b), rho(r + h)) - bvn_cdf(th(a), th(b), rho(r - h))) / (2.0 * h);
                worst = worst.max((fd - bvn_pdf(a, b, rho(r)).unwrap_or(f64::NAN)).abs());
                exact_dual &= bvn_tail(th(a), th(b), rho(r)) == bvn_cdf(th(-a), th(-b), rho(r));
            }
        }
    }
    vec![
        arcsine,
        check("numkern.plackett_identity", worst <= 1e-6, format!("max error {worst:.2e}")),
        check("numkern.tail_duality", exact_dual, "tail(a, b) == cdf(-a, -b) bit for bit".into()),
    ]
}

fn strictly_decreasing(v: &[f64]) -> Option<usize> {
    v.windows(2).position(|w| !(w[1] < w[0]))
}

fn series(points: &[f64], f: impl Fn(f64) -> twostage_core::Result<f64>) -> Result<Vec<f64>, String> {
    points.iter().map(|&x| f(x).map_err(|e| format!("at {x}: {e}"))).collect()
}

fn monotone_check(name: &str, points: &[f64], f: impl Fn(f64) -> twostage_core::Result<f64>) -> Check {
    match series(points, f) {
        Err(e) => check(name, false, e),
        Ok(v) => match strictly_decreasing(&v) {
            None => check(name, true, format!("{} points, {} -> {}", v.len(), num(v[0]), num(v[v.len() - 1]))),
            Some(i) => check(name, false, format!("not decreasing between {} and {}", points[i], points[i + 1])),
        },
    }
}

fn monotonicity() -> Vec<Check> {
    let base = PipelineParams { p_a: 0.3, ..PipelineParams::default() };
    let thetas = grid(0.0, 0.95, 0.05).expect("static grid");
    let mut out = vec![monotone_check("alignment.p_h_decreasing_in_theta", &thetas, |theta| {
        Ok(female_share_hires(&PipelineParams { theta, ..base }, ConstraintMode::EqualSelection)?.p_h)
    })];
    let at_zero = female_share_hires(&PipelineParams { theta: 0.0, ..base }, ConstraintMode::EqualSelection)
        .map(|r| r.p_h)
        .unwrap_or(f64::NAN);
    out.push(check(
        "alignment.p_h_at_zero_is_half",
        (at_zero - 0.5).abs() <= 1e-9,
        format!("p_h(0) = {}", num(at_zero)),
    ));

    let deltas = grid(-0.2, 0.2, 0.02).expect("static grid");
    for mode in [ConstraintMode::None, ConstraintMode::EqualSelection] {
        out.push(monotone_check(&format!("alignment_gap.p_h_decreasing_in_delta.{}", mode.name()), &deltas, |delta| {
            Ok(female_share_hires(&PipelineParams { theta: 0.4, delta, ..base }, mode)?.p_h)
        }));
    }

    for (ts, th) in [(0.3, 0.5), (0.5, 0.5), (0.5, 0.7)] {
        let upper = f64::min(ts / th, 0.95);
        let pts: Vec<f64> = thetas.iter().copied().filter(|&t| t <= upper + 1e-12).collect();
        out.push(monotone_check(&format!("quality.decreasing_in_theta.{ts}_{th}"), &pts, |theta| {
            expected_hire_quality(&PipelineParams { theta, theta_s: ts, theta_h: th, ..base }, ConstraintMode::None)
        }));
    }
    out
}

fn mc_agreement(reps: usize, seed: u64) -> Vec<Check> {
    let points = [(0.3, 0.4, 0.5, 0.3), (0.6, 0.5, 0.6, 0.25)];
    let (n, k, m) = (2000, 300, 60);
    let mut out = Vec::new();
    for (i, &(theta, ts, th, pa)) in points.iter().enumerate() {
        let params = PipelineParams {
            theta,
            theta_s: ts,
            theta_h: th,
            p_a: pa,
            shortlist_rate: k as f64 / n as f64,
            finalist_rate: m as f64 / k as f64,
            ..PipelineParams::default()
        };
        let spec = BenchmarkSpec {
            cells: vec![(ts, th)],
            params,
            p_a: pa,
            n,
            k,
            m,
            policies: vec![Policy::new(PolicyKind::NoConstraint), Policy::new(PolicyKind::EqualSelection)],
            replications: reps,
            seed: seed.wrapping_add(i as u64),
            resamples: 100,
            ..BenchmarkSpec::default()
        };
        let name = format!("sim.mc_analytic_agreement.point{i}");
        let bench = match run_benchmark(&spec) {
            Ok(b) if !b.reports.is_empty() => b,
            Ok(b) => {
                out.push(check(&name, false, format!("skipped: {:?}", b.skipped)));
                continue;
            }
            Err(e) => {
                out.push(check(&name, false, e.to_string()));
                continue;
            }
        };
        let mut worst: f64 = 0.0;
        let mut detail = String::new();
        for (pi, mode) in [ConstraintMode::None, ConstraintMode::EqualSelection].into_iter().enumerate() {
            let r = &bench.reports[0].policies[pi];
            match evaluate(&params, mode, HireCutoff::MatchHireCount) {
                Ok(a) => {
                    let z_p = (r.p_h.mean - a.shares.p_h) / r.p_h.se;
                    let z_q = (r.quality.mean - a.quality) / r.quality.se;
                    worst = worst.max(z_p.abs()).max(z_q.abs());
                }
                Err(e) => {
                    worst = f64::INFINITY;
                    detail = e.to_string();
                }
            }
        }
        if detail.is_empty() {
            detail = format!("max |z| = {worst:.2} over p_h and E[Q_h], both modes");
        }
        out.push(check(&name, worst <= 3.0, detail));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub mode: ConstraintMode,
    pub fit: OlsFit,
    pub jobs: usize,
}

/// Random jobs, closed-form p_h under both modes, and the quadratic fit.
pub fn share_regression(jobs: usize, seed: u64) -> CliResult<Vec<RegressionResult>> {
    let draws: Vec<PipelineParams> = (0..jobs)
        .map(|j| {
            let mut rng = stream_rng(seed, (1 << 62) | j as u64);
            let theta = rng.gen_range(0.05..0.85);
            let lo = (-0.2f64).max(theta - 0.95);
            let hi = 0.2f64.min(theta);
            PipelineParams {
                theta,
                delta: rng.gen_range(lo..hi),
                p_a: rng.gen_range(0.1..0.45),
                shortlist_rate: rng.gen_range(0.1..0.2),
                finalist_rate: 0.2,
                ..PipelineParams::default()
            }
        })
        .collect();
    let mut out = Vec::new();
    for mode in [ConstraintMode::None, ConstraintMode::EqualSelection] {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for p in &draws {
            if let Ok(r) = female_share_hires(p, mode) {
                x.push(share_design_row(p.p_a, p.theta, p.delta));
                y.push(r.p_h);
            }
        }
        let fit = ols_fit(&x, &y)?;
        out.push(RegressionResult { mode, fit, jobs: y.len() });
    }
    Ok(out)
}

fn regression_checks(results: &[RegressionResult]) -> Vec<Check> {
    let idx = |name: &str| SHARE_REGRESSION_COLUMNS.iter().position(|c| *c == name).expect("known column");
    let mut out = Vec::new();
    for r in results {
        let mut sign = |term: &str| {
            let j = idx(term);
            let (b, t) = (r.fit.coefficients[j], r.fit.t_stat(j));
            out.push(check(
                &format!("regression.{}.{term}_negative", r.mode.name()),
                b < 0.0 && t.abs() > 2.0,
                format!("estimate {b:.4}, t = {t:.2}, jobs = {}", r.jobs),
            ));
        };
        if r.mode == ConstraintMode::EqualSelection {
            sign("theta");
        }
        sign("delta");
    }
    out
}

pub struct VerifyOutcome {
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

pub fn run(cfg: &Config, seed: u64, out: &OutDir) -> CliResult<VerifyOutcome> {
    let jobs: usize = cfg.get("jobs", 300)?;
    let reps: usize = cfg.get("mc_replications", 400)?;
    let resolved = cfg.finish("verify", seed)?;
    if jobs < 200 {
        return Err(CliError::Usage(format!("verify needs at least 200 regression jobs, got {jobs}")));
    }
    if reps < 2 {
        return Err(CliError::Usage("mc_replications must be at least 2".into()));
    }

    let mut checks = numerics();
    checks.extend(monotonicity());
    checks.extend(mc_agreement(reps, seed));
    let regression = share_regression(jobs, seed)?;
    checks.extend(regression_checks(&regression));

    let mut table = Table::new("verify-checks", &["check", "status", "detail"]);
    for c in &checks {
        table.push(vec![c.name.clone(), if c.passed { "pass" } else { "fail" }.into(), c.detail.clone()]);
    }
    let mut reg =
        Table::new("share-regression", &["mode", "term", "estimate", "std_error", "t_stat", "r_squared", "jobs"]);
    for r in &regression {
        for (j, term) in SHARE_REGRESSION_COLUMNS.iter().enumerate() {
            reg.push(vec![
                r.mode.name().to_string(),
                term.to_string(),
                num(r.fit.coefficients[j]),
                num(r.fit.std_errors[j]),
                num(r.fit.t_stat(j)),
                num(r.fit.r_squared),
                r.jobs.to_string(),
            ]);
        }
    }
    let files =
        vec![write_table(out, "verify_checks", &table, &resolved)?, write_table(out, "regression", &reg, &resolved)?];
    Ok(VerifyOutcome { checks, files })
}
