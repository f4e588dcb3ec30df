//! Applicant-score input, per-job estimation and the counterfactual table.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use twostage_core::analytic::{
    counterfactual_job, weighted_shares, ConstraintMode, CounterfactualOptions, DeltaSource, JobEstimate,
};
use twostage_core::estimate::{
    aggregate_estimates, estimate_jobs, Aggregate, CorrelationMethod, EstimateOptions, ScoredApplicant,
};
use twostage_core::{Error, Gender};

use crate::config::Config;
use crate::error::{input, usage, CliResult};
use crate::output::{check_version, num, opt_num, write_table, OutDir, Table};

const REQUIRED: [&str; 6] = ["job_id", "applicant_id", "gender", "p_screen", "p_hire", "shortlisted"];
const OPTIONAL: [&str; 1] = ["finalist"];

fn parse_flag(s: &str) -> Option<bool> {
    match s {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

/// Parses the applicant-score CSV. Errors carry the 1-based line number.
pub fn parse_applicants(text: &str) -> CliResult<Vec<ScoredApplicant>> {
    if text.trim().is_empty() {
        return Err(input("line 1: input is empty"));
    }
    check_version(text)?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header_line = text.lines().position(|l| !l.trim_start().starts_with('#')).map_or(1, |i| i + 1);
    let headers = rdr.headers().map_err(|e| input(format!("line {header_line}: cannot read header: {e}")))?.clone();
    let mut col = std::collections::HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        if !REQUIRED.contains(&h) && !OPTIONAL.contains(&h) {
            return Err(input(format!("line {header_line}: unknown column `{h}`")));
        }
        if col.insert(h.to_string(), i).is_some() {
            return Err(input(format!("line {header_line}: duplicate column `{h}`")));
        }
    }
    if let Some(missing) = REQUIRED.iter().find(|c| !col.contains_key(**c)) {
        return Err(input(format!("line {header_line}: missing column `{missing}`")));
    }

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            input(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |name: &str| col.get(name).and_then(|&i| rec.get(i)).unwrap_or("");
        let bad = |name: &str, why: &str| input(format!("line {line}, column `{name}`: {why} (got `{}`)", field(name)));
        let prob = |name: &str| -> CliResult<f64> {
            let v: f64 = field(name).parse().map_err(|_| bad(name, "not a number"))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(name, "probability outside [0, 1]"));
            }
            Ok(v)
        };
        let job_id = field("job_id").to_string();
        let applicant_id = field("applicant_id").to_string();
        if job_id.is_empty() {
            return Err(bad("job_id", "empty job id"));
        }
        if applicant_id.is_empty() {
            return Err(bad("applicant_id", "empty applicant id"));
        }
        let gender = Gender::parse(field("gender")).ok_or_else(|| bad("gender", "expected m or f"))?;
        let p_screen = prob("p_screen")?;
        let p_hire = if field("p_hire").is_empty() { None } else { Some(prob("p_hire")?) };
        let shortlisted = parse_flag(field("shortlisted")).ok_or_else(|| bad("shortlisted", "expected 0 or 1"))?;
        let finalist = match field("finalist") {
            "" => None,
            s => Some(parse_flag(s).ok_or_else(|| bad("finalist", "expected 0, 1 or empty"))?),
        };
        let a =
            ScoredApplicant { applicant_id, job_id, gender, p_screen, p_hire, screened: true, shortlisted, finalist };
        a.validate().map_err(|e| input(format!("line {line}: {e}")))?;
        if !seen.insert((a.job_id.clone(), a.applicant_id.clone())) {
            return Err(input(format!("line {line}: duplicate applicant `{}` in job `{}`", a.applicant_id, a.job_id)));
        }
        out.push(a);
    }
    if out.is_empty() {
        return Err(input(format!("line {header_line}: header present but no applicant rows")));
    }
    Ok(out)
}

pub struct EstimateRun {
    pub estimates: Vec<JobEstimate>,
    pub skipped: Vec<(String, String)>,
    pub aggregate: Aggregate,
}

pub fn options_from_config(cfg: &Config) -> CliResult<EstimateOptions> {
    let method = match cfg.choice("method", &["spearman", "pearson_gaussian"])?.as_str() {
        "spearman" => CorrelationMethod::Spearman,
        _ => CorrelationMethod::PearsonGaussian,
    };
    let ipw: String = cfg.get("ipw_floor", "none".to_string())?;
    let ipw_floor = match ipw.as_str() {
        "none" => None,
        s => Some(s.parse::<f64>().map_err(|_| usage(format!("ipw_floor must be `none` or a number, got `{s}`")))?),
    };
    Ok(EstimateOptions {
        min_group: cfg.get("min_group", 10)?,
        min_applicants: cfg.get("min_applicants", 10)?,
        method,
        ipw_floor,
    })
}

pub fn estimate_all(records: &[ScoredApplicant], opts: &EstimateOptions) -> CliResult<EstimateRun> {
    let mut estimates = Vec::new();
    let mut skipped = Vec::new();
    for (job, res) in estimate_jobs(records, opts) {
        match res {
            Ok(e) => estimates.push(e),
            Err(Error::Skipped(reason)) => skipped.push((job, reason)),
            Err(e @ Error::Domain(_)) => return Err(usage(format!("estimation settings: {e}"))),
            Err(e) => skipped.push((job, e.to_string())),
        }
    }
    let aggregate = aggregate_estimates(&estimates)
        .map_err(|_| input(format!("no job could be estimated ({} skipped)", skipped.len())))?;
    Ok(EstimateRun { estimates, skipped, aggregate })
}

struct CfSettings {
    opts: CounterfactualOptions,
    max_p_a: f64,
}

fn cf_settings(cfg: &Config) -> CliResult<CfSettings> {
    let delta = match cfg.choice("cf_delta", &["estimated", "zero"])?.as_str() {
        "estimated" => DeltaSource::Estimated,
        _ => DeltaSource::Zero,
    };
    Ok(CfSettings {
        opts: CounterfactualOptions {
            delta,
            default_finalist_rate: cfg.f64("cf_finalist_rate", 0.2)?,
            theta_s: cfg.f64("cf_theta_s", 0.5)?,
            theta_h: cfg.f64("cf_theta_h", 0.5)?,
        },
        max_p_a: cfg.f64("cf_max_p_a", 0.5)?,
    })
}

fn counterfactual_tables(run: &EstimateRun, cf: &CfSettings) -> CliResult<(Table, Table, Table)> {
    let mut rows = Table::new("counterfactual", &["job_id", "mode", "p_a", "p_s", "p_h", "n_applicants"]);
    let mut summary = Table::new("counterfactual-summary", &["mode", "applicants", "screened", "hired", "jobs"]);
    let mut skipped = Table::new("counterfactual-skipped", &["job_id", "mode", "reason"]);
    for mode in [ConstraintMode::None, ConstraintMode::EqualSelection] {
        let mut kept = Vec::new();
        for est in run.estimates.iter().filter(|e| e.p_a < cf.max_p_a) {
            match counterfactual_job(est, mode, &cf.opts) {
                Ok(r) => {
                    rows.push(vec![
                        est.job_id.clone(),
                        mode.name().to_string(),
                        num(r.p_a),
                        num(r.p_s),
                        num(r.p_h),
                        est.n_applicants.to_string(),
                    ]);
                    kept.push((est.n_applicants, r));
                }
                Err(e) => skipped.push(vec![est.job_id.clone(), mode.name().to_string(), e.to_string()]),
            }
        }
        if let Ok(avg) = weighted_shares(&kept) {
            summary.push(vec![
                mode.name().to_string(),
                num(avg.p_a),
                num(avg.p_s),
                num(avg.p_h),
                kept.len().to_string(),
            ]);
        }
    }
    Ok((rows, summary, skipped))
}

pub fn run(
    path: &Path,
    cfg: &Config,
    seed: u64,
    out: &OutDir,
    counterfactual: bool,
) -> CliResult<(Vec<PathBuf>, Aggregate)> {
    let opts = options_from_config(cfg)?;
    let cf = cf_settings(cfg)?;
    let resolved = cfg.finish("estimate", seed)?;
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    let records = parse_applicants(&text)?;
    let run = estimate_all(&records, &opts)?;

    let mut jobs = Table::new(
        "job-estimates",
        &["job_id", "theta_hat", "delta_hat", "p_a", "n_applicants", "shortlist_size", "finalist_size"],
    );
    for e in &run.estimates {
        jobs.push(vec![
            e.job_id.clone(),
            num(e.theta_hat),
            opt_num(e.delta_hat),
            num(e.p_a),
            e.n_applicants.to_string(),
            e.shortlist_size.to_string(),
            e.finalist_size.map(|v| v.to_string()).unwrap_or_default(),
        ]);
    }
    let mut agg = Table::new("aggregate", &["theta_bar", "delta_bar", "jobs", "applicants"]);
    agg.push(vec![
        num(run.aggregate.theta_bar),
        opt_num(run.aggregate.delta_bar),
        run.aggregate.jobs.to_string(),
        run.aggregate.applicants.to_string(),
    ]);
    let mut skipped = Table::new("skipped-jobs", &["job_id", "reason"]);
    for (job, reason) in &run.skipped {
        skipped.push(vec![job.clone(), reason.clone()]);
    }

    let mut written = vec![
        write_table(out, "job_estimates", &jobs, &resolved)?,
        write_table(out, "aggregate", &agg, &resolved)?,
        write_table(out, "skipped_jobs", &skipped, &resolved)?,
    ];
    if counterfactual {
        let (rows, summary, cf_skipped) = counterfactual_tables(&run, &cf)?;
        written.push(write_table(out, "counterfactual", &rows, &resolved)?);
        written.push(write_table(out, "counterfactual_summary", &summary, &resolved)?);
        written.push(write_table(out, "counterfactual_skipped", &cf_skipped, &resolved)?);
    }
    Ok((written, run.aggregate))
}
