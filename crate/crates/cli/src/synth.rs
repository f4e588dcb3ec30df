//! Synthetic applicant-score files with known (θ, δ).
//!
//! θ and δ are on the Spearman scale that the estimator reports. Latent
//! screen/hire scores are bivariate normal with Pearson correlation
//! 2·sin(π·θ_g/6), which has Spearman correlation θ_g; men use θ and women
//! θ − δ. Predicted probabilities are Φ of the latent scores.

use std::cmp::Ordering;
use std::path::PathBuf;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use twostage_core::numkern::norm_cdf;
use twostage_core::sim::stream_rng;
use twostage_core::Gender;

use crate::config::Config;
use crate::error::{usage, CliResult};
use crate::output::{num, write_table, OutDir, Table};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub jobs: usize,
    pub n_per_job: usize,
    pub theta: f64,
    pub delta: f64,
    pub p_a_min: f64,
    pub p_a_max: f64,
    pub shortlist_rate: f64,
    pub finalist_rate: f64,
    /// Leave p_hire empty for applicants who were not shortlisted.
    pub p_hire_shortlisted_only: bool,
    pub seed: u64,
}

/// Pearson correlation of a bivariate normal with the given Spearman correlation.
pub fn pearson_for_spearman(rho_s: f64) -> f64 {
    2.0 * (std::f64::consts::PI * rho_s / 6.0).sin()
}

pub fn spec_from_config(cfg: &Config, seed: u64) -> CliResult<SynthSpec> {
    let spec = SynthSpec {
        jobs: cfg.get("jobs", 20)?,
        n_per_job: cfg.get("n_per_job", 1000)?,
        theta: cfg.f64("theta", 0.434)?,
        delta: cfg.f64("delta", -0.007)?,
        p_a_min: cfg.f64("p_a_min", 0.3)?,
        p_a_max: cfg.f64("p_a_max", 0.3)?,
        shortlist_rate: cfg.f64("shortlist_rate", 0.15)?,
        finalist_rate: cfg.f64("finalist_rate", 0.2)?,
        p_hire_shortlisted_only: cfg.choice("p_hire_coverage", &["all", "shortlisted"])? == "shortlisted",
        seed,
    };
    if spec.jobs == 0 || spec.n_per_job < 2 {
        return Err(usage("synth needs at least one job of at least 2 applicants"));
    }
    for (name, v) in [("theta", spec.theta), ("theta - delta", spec.theta - spec.delta)] {
        if !(-1.0..=1.0).contains(&v) {
            return Err(usage(format!("{name} = {v} is not a correlation")));
        }
    }
    if !(0.0 <= spec.p_a_min && spec.p_a_min <= spec.p_a_max && spec.p_a_max <= 1.0) {
        return Err(usage("need 0 <= p_a_min <= p_a_max <= 1"));
    }
    for (name, v) in [("shortlist_rate", spec.shortlist_rate), ("finalist_rate", spec.finalist_rate)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(usage(format!("{name} = {v} outside (0, 1]")));
        }
    }
    Ok(spec)
}

struct Row {
    gender: Gender,
    p_screen: f64,
    p_hire: f64,
    shortlisted: bool,
    finalist: bool,
}

fn top(rows: &[Row], idx: &mut [usize], key: fn(&Row) -> f64) {
    idx.sort_by(|&a, &b| key(&rows[b]).partial_cmp(&key(&rows[a])).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
}

fn gen_job(spec: &SynthSpec, job: usize) -> Vec<Row> {
    let mut rng = stream_rng(spec.seed, job as u64);
    let p_a = if spec.p_a_max > spec.p_a_min { rng.gen_range(spec.p_a_min..spec.p_a_max) } else { spec.p_a_min };
    let rho_m = pearson_for_spearman(spec.theta);
    let rho_f = pearson_for_spearman(spec.theta - spec.delta);
    let mut rows: Vec<Row> = (0..spec.n_per_job)
        .map(|_| {
            let gender = if rng.gen_bool(p_a) { Gender::Female } else { Gender::Male };
            let rho = if gender == Gender::Female { rho_f } else { rho_m };
            let zs: f64 = rng.sample(StandardNormal);
            let e: f64 = rng.sample(StandardNormal);
            let zh = rho * zs + (1.0 - rho * rho).sqrt() * e;
            Row { gender, p_screen: norm_cdf(zs), p_hire: norm_cdf(zh), shortlisted: false, finalist: false }
        })
        .collect();
    let k = ((spec.shortlist_rate * spec.n_per_job as f64).round() as usize).clamp(1, spec.n_per_job);
    let mut idx: Vec<usize> = (0..rows.len()).collect();
    top(&rows, &mut idx, |r| r.p_screen);
    let mut short: Vec<usize> = idx[..k].to_vec();
    for &i in &short {
        rows[i].shortlisted = true;
    }
    let f = ((spec.finalist_rate * k as f64).round() as usize).clamp(1, k);
    top(&rows, &mut short, |r| r.p_hire);
    for &i in &short[..f] {
        rows[i].finalist = true;
    }
    rows
}

pub fn applicant_table(spec: &SynthSpec) -> Table {
    let jobs: Vec<Vec<Row>> = (0..spec.jobs).into_par_iter().map(|j| gen_job(spec, j)).collect();
    let mut t = Table::new(
        "applicants",
        &["job_id", "applicant_id", "gender", "p_screen", "p_hire", "shortlisted", "finalist"],
    );
    for (j, rows) in jobs.iter().enumerate() {
        for (i, r) in rows.iter().enumerate() {
            let p_hire = if spec.p_hire_shortlisted_only && !r.shortlisted { String::new() } else { num(r.p_hire) };
            t.push(vec![
                format!("job{j:04}"),
                format!("a{i}"),
                r.gender.code().to_string(),
                num(r.p_screen),
                p_hire,
                (r.shortlisted as u8).to_string(),
                (r.finalist as u8).to_string(),
            ]);
        }
    }
    t
}

pub fn run(cfg: &Config, seed: u64, out: &OutDir) -> CliResult<Vec<PathBuf>> {
    let spec = spec_from_config(cfg, seed)?;
    let resolved = cfg.finish("synth", seed)?;
    Ok(vec![write_table(out, "applicants", &applicant_table(&spec), &resolved)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_pearson_map() {
        assert_eq!(pearson_for_spearman(0.0), 0.0);
        assert!((pearson_for_spearman(1.0) - 1.0).abs() < 1e-15);
        // inverse of (6/π)·asin(ρ/2)
        let r = 0.5;
        let s = 6.0 / std::f64::consts::PI * (r / 2.0f64).asin();
        assert!((pearson_for_spearman(s) - r).abs() < 1e-15);
    }

    #[test]
    fn stage_counts() {
        let cfg = Config::parse("jobs = 2\nn_per_job = 200").unwrap();
        let spec = spec_from_config(&cfg, 1).unwrap();
        let t = applicant_table(&spec);
        assert_eq!(t.rows.len(), 400);
        let short = t.rows.iter().filter(|r| r[0] == "job0000" && r[5] == "1").count();
        let fin = t.rows.iter().filter(|r| r[0] == "job0000" && r[6] == "1").count();
        assert_eq!((short, fin), (30, 6));
        assert_eq!(applicant_table(&spec), t);
    }
}
