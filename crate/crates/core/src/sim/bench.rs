use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::PipelineParams;
use crate::error::{domain, Gender, Result};
use crate::sim::policy::{hire, shortlist, Policy, PolicyKind};
use crate::sim::pool::{gen_true_quality, sample_pool, Applicant, PoolSpec};

/// Substream for replication `rep` of grid cell `cell`. Bootstrap streams set
/// the top bit so they never collide with pool streams.
pub fn replication_stream(cell: usize, rep: usize) -> u64 {
    ((cell as u64) << 32) | rep as u64
}

fn bootstrap_stream(cell: usize, policy: usize, metric: usize) -> u64 {
    (1 << 63) | ((cell as u64) << 24) | ((policy as u64) << 8) | metric as u64
}

/// Seeded generator positioned on one substream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Percentile bootstrap interval for the mean, widened if needed so that it
/// contains the sample mean.
pub fn bootstrap_ci_with(samples: &[f64], level: f64, resamples: usize, rng: &mut impl Rng) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(domain(format!("bootstrap needs at least 2 samples, got {}", samples.len())));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(domain(format!("confidence level {level} outside (0, 1)")));
    }
    if resamples < 2 {
        return Err(domain(format!("need at least 2 resamples, got {resamples}")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(domain("bootstrap samples must be finite"));
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if samples.iter().all(|&v| v == samples[0]) {
        return Ok((samples[0], samples[0]));
    }
    let mut means: Vec<f64> =
        (0..resamples).map(|_| (0..n).map(|_| samples[rng.gen_range(0..n)]).sum::<f64>() / n as f64).collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let pick = |q: f64| {
        let pos = q * (resamples - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos.fract());
        let j = (i + 1).min(resamples - 1);
        means[i] + frac * (means[j] - means[i])
    };
    Ok((pick(tail).min(mean), pick(1.0 - tail).max(mean)))
}

pub fn bootstrap_ci(samples: &[f64], level: f64, resamples: usize, seed: u64) -> Result<(f64, f64)> {
    bootstrap_ci_with(samples, level, resamples, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// How the true quality of simulated applicants is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QualityModel {
    /// Drawn jointly with the scores from the trivariate normal.
    #[default]
    Sampled,
    /// Rebuilt per pool and gender with sample-exact correlations to the scores.
    SampleExact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    /// (θS, θH) grid cells.
    pub cells: Vec<(f64, f64)>,
    /// θ, δ and mean shifts shared by every cell; θS and θH come from the cell.
    pub params: PipelineParams,
    pub p_a: f64,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub policies: Vec<Policy>,
    pub replications: usize,
    pub seed: u64,
    pub label_corr: f64,
    pub quality: QualityModel,
    pub resamples: usize,
    pub level: f64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            cells: vec![(0.5, 0.5)],
            params: PipelineParams::default(),
            p_a: 0.3,
            n: 500,
            k: 40,
            m: 4,
            policies: PolicyKind::ALL.into_iter().map(Policy::new).collect(),
            replications: 500,
            seed: 0,
            label_corr: 0.8,
            quality: QualityModel::Sampled,
            resamples: 1000,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub mean: f64,
    /// Standard error of the mean across replications.
    pub se: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyReport {
    pub policy: Policy,
    pub p_s: Interval,
    pub p_h: Interval,
    pub quality: Interval,
    /// Replications whose shortlist met the policy's constraint.
    pub constraint_met: usize,
    /// Replications that produced a result.
    pub replications: usize,
    /// First failure message, when some replications failed.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub theta_s: f64,
    pub theta_h: f64,
    pub seed: u64,
    pub policies: Vec<PolicyReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedCell {
    pub theta_s: f64,
    pub theta_h: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Benchmark {
    pub reports: Vec<BenchmarkReport>,
    pub skipped: Vec<SkippedCell>,
}

#[derive(Debug, Clone, Copy)]
struct Draw {
    p_s: f64,
    p_h: f64,
    quality: f64,
    met: bool,
}

fn female_share(pool: &[Applicant], idx: &[usize]) -> f64 {
    idx.iter().filter(|&&i| pool[i].gender == Gender::Female).count() as f64 / idx.len() as f64
}

fn rebuild_quality(pool: &mut [Applicant], params: &PipelineParams, rng: &mut impl Rng) -> Result<()> {
    for g in [Gender::Male, Gender::Female] {
        let idx: Vec<usize> = (0..pool.len()).filter(|&i| pool[i].gender == g).collect();
        if idx.len() < 4 {
            continue;
        }
        let model = params.group(g);
        let qs: Vec<f64> = idx.iter().map(|&i| pool[i].q_s).collect();
        let qh: Vec<f64> = idx.iter().map(|&i| pool[i].q_h).collect();
        let q = gen_true_quality(&qs, &qh, model.theta_s, model.theta_h, rng)?;
        for (&i, v) in idx.iter().zip(q) {
            pool[i].q = model.mean_q + v;
        }
    }
    Ok(())
}

fn replicate(
    spec: &BenchmarkSpec,
    pool_spec: &PoolSpec,
    cell: usize,
    rep: usize,
) -> Result<Vec<std::result::Result<Draw, String>>> {
    let mut rng = stream_rng(spec.seed, replication_stream(cell, rep));
    let mut pool = sample_pool(pool_spec, &mut rng)?;
    if spec.quality == QualityModel::SampleExact {
        rebuild_quality(&mut pool, &pool_spec.params, &mut rng)?;
    }
    Ok(spec
        .policies
        .iter()
        .map(|policy| {
            let s = shortlist(&pool, spec.k, policy).map_err(|e| e.to_string())?;
            let hired = hire(&pool, &s.members, spec.m).map_err(|e| e.to_string())?;
            Ok(Draw {
                p_s: female_share(&pool, &s.members),
                p_h: female_share(&pool, &hired),
                quality: hired.iter().map(|&i| pool[i].q).sum::<f64>() / hired.len() as f64,
                met: s.constraint_met,
            })
        })
        .collect())
}

fn summarize(values: &[f64], spec: &BenchmarkSpec, stream: u64) -> Result<Interval> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let (lo, hi) = bootstrap_ci_with(values, spec.level, spec.resamples, &mut stream_rng(spec.seed, stream))?;
    Ok(Interval { mean, se: (var / n).sqrt(), lo, hi })
}

fn validate(spec: &BenchmarkSpec) -> Result<()> {
    if spec.replications < 2 {
        return Err(domain(format!("need at least 2 replications, got {}", spec.replications)));
    }
    if spec.cells.is_empty() || spec.policies.is_empty() {
        return Err(domain("benchmark needs at least one cell and one policy"));
    }
    if spec.k == 0 || spec.k > spec.n {
        return Err(domain(format!("shortlist size {} outside 1..={}", spec.k, spec.n)));
    }
    if spec.m == 0 {
        return Err(domain("hire count must be at least 1"));
    }
    if spec.cells.len() >= 1 << 24 || spec.replications >= 1 << 32 {
        return Err(domain("grid or replication count too large for the stream layout"));
    }
    for p in &spec.policies {
        p.validate()?;
    }
    Ok(())
}

/// Runs every (cell, policy) pair over fresh pools. Each replication draws
/// from its own substream, so results do not depend on thread scheduling.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<Benchmark> {
    validate(spec)?;
    let mut out = Benchmark::default();
    for (cell, &(theta_s, theta_h)) in spec.cells.iter().enumerate() {
        let pool_spec = PoolSpec {
            n: spec.n,
            p_a: spec.p_a,
            params: PipelineParams { theta_s, theta_h, ..spec.params },
            label_corr: spec.label_corr,
            label_rate: spec.k as f64 / spec.n as f64,
            seed: spec.seed,
        };
        if let Err(e) = pool_spec.validate() {
            out.skipped.push(SkippedCell { theta_s, theta_h, reason: e.to_string() });
            continue;
        }
        let draws: Vec<Vec<std::result::Result<Draw, String>>> = (0..spec.replications)
            .into_par_iter()
            .map(|rep| replicate(spec, &pool_spec, cell, rep))
            .collect::<Result<_>>()?;

        let mut policies = Vec::with_capacity(spec.policies.len());
        for (pi, policy) in spec.policies.iter().enumerate() {
            let ok: Vec<Draw> = draws.iter().filter_map(|d| d[pi].as_ref().ok().copied()).collect();
            let failure = draws.iter().find_map(|d| d[pi].as_ref().err().cloned());
            if ok.len() < 2 {
                out.skipped.push(SkippedCell {
                    theta_s,
                    theta_h,
                    reason: format!("{}: {}", policy.kind, failure.unwrap_or_else(|| "too few replications".into())),
                });
                continue;
            }
            let col = |f: fn(&Draw) -> f64| ok.iter().map(f).collect::<Vec<f64>>();
            policies.push(PolicyReport {
                policy: *policy,
                p_s: summarize(&col(|d| d.p_s), spec, bootstrap_stream(cell, pi, 0))?,
                p_h: summarize(&col(|d| d.p_h), spec, bootstrap_stream(cell, pi, 1))?,
                quality: summarize(&col(|d| d.quality), spec, bootstrap_stream(cell, pi, 2))?,
                constraint_met: ok.iter().filter(|d| d.met).count(),
                replications: ok.len(),
                failure,
            });
        }
        if !policies.is_empty() {
            out.reports.push(BenchmarkReport { theta_s, theta_h, seed: spec.seed, policies });
        }
    }
    Ok(out)
}
