//! Agent-based benchmark over a (θS, θH) grid.

use std::path::PathBuf;

use twostage_core::analytic::PipelineParams;
use twostage_core::sim::{run_benchmark, Benchmark, BenchmarkSpec, Policy, PolicyKind, QualityModel};

use crate::config::Config;
use crate::error::{input, usage, CliResult};
use crate::output::{num, write_table, OutDir, Table};

pub fn spec_from_config(cfg: &Config, seed: u64) -> CliResult<BenchmarkSpec> {
    let theta_s_values = cfg.list_f64("theta_s_values", &[0.1, 0.5])?;
    let theta_h_values = cfg.list_f64("theta_h_values", &[0.1, 0.5])?;
    let cells = theta_s_values.iter().flat_map(|&s| theta_h_values.iter().map(move |&h| (s, h))).collect();

    let tolerance = cfg.f64("tolerance", 0.02)?;
    let multiplier = cfg.f64("candidate_pool_multiplier", 2.0)?;
    let names = cfg.list_str("policies", &["all"])?;
    let kinds: Vec<PolicyKind> = if names.len() == 1 && names[0] == "all" {
        PolicyKind::ALL.to_vec()
    } else {
        names
            .iter()
            .map(|n| PolicyKind::parse(n).ok_or_else(|| usage(format!("unknown policy `{n}`"))))
            .collect::<CliResult<_>>()?
    };
    let policies =
        kinds.into_iter().map(|kind| Policy { kind, tolerance, candidate_pool_multiplier: multiplier }).collect();

    let quality = match cfg.choice("quality", &["sample_exact", "sampled"])?.as_str() {
        "sampled" => QualityModel::Sampled,
        _ => QualityModel::SampleExact,
    };
    let spec = BenchmarkSpec {
        cells,
        params: PipelineParams {
            theta: cfg.f64("theta", 0.434)?,
            delta: cfg.f64("delta", 0.0)?,
            alpha: cfg.f64("alpha", 0.0)?,
            ..PipelineParams::default()
        },
        p_a: cfg.f64("p_a", 0.3)?,
        n: cfg.get("n", 500)?,
        k: cfg.get("k", 40)?,
        m: cfg.get("m", 4)?,
        policies,
        replications: cfg.get("replications", 500)?,
        seed,
        label_corr: cfg.f64("label_corr", 0.8)?,
        quality,
        resamples: cfg.get("resamples", 1000)?,
        level: cfg.f64("level", 0.95)?,
    };
    Ok(spec)
}

pub fn tables(spec: &BenchmarkSpec, bench: &Benchmark) -> (Table, Table, Table) {
    let mut rows = Table::new(
        "benchmark",
        &[
            "theta_s",
            "theta_h",
            "policy",
            "p_s",
            "p_h",
            "p_h_lo",
            "p_h_hi",
            "p_h_se",
            "eq_h",
            "eq_h_lo",
            "eq_h_hi",
            "eq_h_se",
            "constraint_met",
            "replications",
            "seed",
        ],
    );
    for r in &bench.reports {
        for p in &r.policies {
            rows.push(vec![
                num(r.theta_s),
                num(r.theta_h),
                p.policy.kind.name().to_string(),
                num(p.p_s.mean),
                num(p.p_h.mean),
                num(p.p_h.lo),
                num(p.p_h.hi),
                num(p.p_h.se),
                num(p.quality.mean),
                num(p.quality.lo),
                num(p.quality.hi),
                num(p.quality.se),
                p.constraint_met.to_string(),
                p.replications.to_string(),
                r.seed.to_string(),
            ]);
        }
    }

    // shares averaged over the cells that produced the policy
    let mut summary = Table::new("benchmark-summary", &["policy", "applicants", "screened", "hired", "cells"]);
    for policy in &spec.policies {
        let hits: Vec<_> =
            bench.reports.iter().filter_map(|r| r.policies.iter().find(|p| p.policy.kind == policy.kind)).collect();
        if hits.is_empty() {
            continue;
        }
        let mean = |f: &dyn Fn(&twostage_core::sim::PolicyReport) -> f64| {
            hits.iter().map(|p| f(p)).sum::<f64>() / hits.len() as f64
        };
        summary.push(vec![
            policy.kind.name().to_string(),
            num(spec.p_a),
            num(mean(&|p| p.p_s.mean)),
            num(mean(&|p| p.p_h.mean)),
            hits.len().to_string(),
        ]);
    }

    let mut skipped = Table::new("benchmark-skipped", &["theta_s", "theta_h", "reason"]);
    for s in &bench.skipped {
        skipped.push(vec![num(s.theta_s), num(s.theta_h), s.reason.clone()]);
    }
    (rows, summary, skipped)
}

pub fn run(cfg: &Config, seed: u64, out: &OutDir) -> CliResult<(Vec<PathBuf>, Table)> {
    let spec = spec_from_config(cfg, seed)?;
    let resolved = cfg.finish("simulate", seed)?;
    let bench = run_benchmark(&spec).map_err(|e| usage(format!("benchmark settings: {e}")))?;
    let (rows, summary, skipped) = tables(&spec, &bench);
    let written = vec![
        write_table(out, "benchmark", &rows, &resolved)?,
        write_table(out, "benchmark_summary", &summary, &resolved)?,
        write_table(out, "benchmark_skipped", &skipped, &resolved)?,
    ];
    if bench.reports.is_empty() {
        return Err(input(format!(
            "every grid cell was skipped: {}",
            bench.skipped.iter().map(|s| s.reason.as_str()).collect::<Vec<_>>().join("; ")
        )));
    }
    Ok((written, summary))
}
