//! Parameter estimation from scored applicants: rank/copula transforms,
//! per-job (θ̂, δ̂), applicant-weighted aggregation, inverse propensity
//! weights, the hire-share OLS and a Gaussian-copula KS statistic.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::analytic::JobEstimate;
use crate::error::{domain, Error, Gender, Result};
use crate::numkern::{bvn_cdf_raw, norm_quantile};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredApplicant {
    pub applicant_id: String,
    pub job_id: String,
    pub gender: Gender,
    pub p_screen: f64,
    /// Absent when the hiring model never scored the applicant.
    pub p_hire: Option<f64>,
    pub screened: bool,
    pub shortlisted: bool,
    pub finalist: Option<bool>,
}

impl ScoredApplicant {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(domain(format!("{name} = {p} outside [0, 1] for applicant {}", self.applicant_id)))
            }
        };
        prob("p_screen", self.p_screen)?;
        if let Some(p) = self.p_hire {
            prob("p_hire", p)?;
        }
        if self.shortlisted && self.p_hire.is_none() {
            return Err(domain(format!("shortlisted applicant {} has no p_hire", self.applicant_id)));
        }
        Ok(())
    }
}

/// Average ranks (1-based), ties share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// Empirical-CDF quantile of each value within its vector, rank/(n+1).
pub fn quantile_transform(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(domain("quantile transform of an empty vector"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(domain("quantile transform input contains NaN"));
    }
    let scale = 1.0 / (values.len() as f64 + 1.0);
    Ok(average_ranks(values).into_iter().map(|r| r * scale).collect())
}

/// Maps quantiles in (0, 1) to standard normal scores.
pub fn gaussian_scores(quantiles: &[f64]) -> Result<Vec<f64>> {
    quantiles.iter().map(|&u| norm_quantile(u)).collect()
}

fn weighted_pearson(x: &[f64], y: &[f64], w: Option<&[f64]>) -> Result<f64> {
    let n = x.len();
    let weight = |i: usize| w.map_or(1.0, |w| w[i]);
    let total: f64 = (0..n).map(weight).sum();
    let mx = (0..n).map(|i| weight(i) * x[i]).sum::<f64>() / total;
    let my = (0..n).map(|i| weight(i) * y[i]).sum::<f64>() / total;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        let wi = weight(i);
        sxy += wi * dx * dy;
        sxx += wi * dx * dx;
        syy += wi * dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(domain("zero variance in correlation input"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    weighted_pearson(x, y, None)
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(domain(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(domain(format!("need at least 3 pairs, got {}", x.len())));
    }
    Ok(())
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    weighted_pearson(&average_ranks(x), &average_ranks(y), None)
}

/// Spearman correlation with observation weights applied to the rank
/// correlation (ranks themselves are unweighted).
pub fn weighted_spearman(x: &[f64], y: &[f64], w: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    if w.len() != x.len() || w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(domain("weights must be finite, nonnegative and match the data length"));
    }
    weighted_pearson(&average_ranks(x), &average_ranks(y), Some(w))
}

/// 1 / max(p, floor) per unit.
pub fn ipw_weights(p_screen: &[f64], floor: f64) -> Result<Vec<f64>> {
    if !(floor > 0.0 && floor <= 0.5) {
        return Err(domain(format!("IPW floor {floor} outside (0, 0.5]")));
    }
    p_screen
        .iter()
        .map(|&p| {
            if (0.0..=1.0).contains(&p) {
                Ok(1.0 / p.max(floor))
            } else {
                Err(domain(format!("propensity {p} outside [0, 1]")))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationMethod {
    /// Spearman correlation of the quantile scores.
    #[default]
    Spearman,
    /// Pearson correlation of the Gaussian (copula) scores.
    PearsonGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    /// Minimum applicants per gender before δ̂ is reported.
    pub min_group: usize,
    /// Minimum applicants with both scores before θ̂ is reported.
    pub min_applicants: usize,
    pub method: CorrelationMethod,
    /// Weight the correlation by inverse screening propensity with this floor.
    pub ipw_floor: Option<f64>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions { min_group: 10, min_applicants: 10, method: CorrelationMethod::Spearman, ipw_floor: None }
    }
}

fn correlation(qs: &[f64], qh: &[f64], w: Option<&[f64]>, method: CorrelationMethod) -> Result<f64> {
    match method {
        CorrelationMethod::Spearman => match w {
            Some(w) => weighted_spearman(qs, qh, w),
            None => spearman(qs, qh),
        },
        CorrelationMethod::PearsonGaussian => {
            check_pair(qs, qh)?;
            let zs = gaussian_scores(qs)?;
            let zh = gaussian_scores(qh)?;
            weighted_pearson(&zs, &zh, w)
        }
    }
}

/// θ̂ and δ̂ for one job's applicants.
pub fn estimate_job(records: &[ScoredApplicant], opts: &EstimateOptions) -> Result<JobEstimate> {
    let job_id = records.first().map(|r| r.job_id.clone()).unwrap_or_default();
    if let Some(r) = records.iter().find(|r| r.job_id != job_id) {
        return Err(domain(format!("mixed job ids {job_id} and {}", r.job_id)));
    }
    for r in records {
        r.validate()?;
    }
    let scored: Vec<&ScoredApplicant> = records.iter().filter(|r| r.p_hire.is_some()).collect();
    if scored.len() < opts.min_applicants.max(3) {
        return Err(Error::Skipped(format!(
            "job {job_id}: {} applicants with both scores, need {}",
            scored.len(),
            opts.min_applicants.max(3)
        )));
    }
    let ps: Vec<f64> = scored.iter().map(|r| r.p_screen).collect();
    let ph: Vec<f64> = scored.iter().map(|r| r.p_hire.unwrap_or_default()).collect();
    let qs = quantile_transform(&ps)?;
    let qh = quantile_transform(&ph)?;
    let weights = opts.ipw_floor.map(|floor| ipw_weights(&ps, floor)).transpose()?;

    let theta_hat = correlation(&qs, &qh, weights.as_deref(), opts.method)
        .map_err(|e| Error::Skipped(format!("job {job_id}: {e}")))?;

    let group_theta = |g: Gender| -> Option<f64> {
        let idx: Vec<usize> = (0..scored.len()).filter(|&i| scored[i].gender == g).collect();
        if idx.len() < opts.min_group.max(3) {
            return None;
        }
        let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let w = weights.as_ref().map(|w| pick(w));
        correlation(&pick(&qs), &pick(&qh), w.as_deref(), opts.method).ok()
    };
    let delta_hat = match (group_theta(Gender::Male), group_theta(Gender::Female)) {
        (Some(m), Some(f)) => Some(m - f),
        _ => None,
    };

    let n = records.len();
    let women = records.iter().filter(|r| r.gender == Gender::Female).count();
    let finalist_size = if records.iter().all(|r| r.finalist.is_some()) {
        Some(records.iter().filter(|r| r.finalist == Some(true)).count())
    } else {
        None
    };
    Ok(JobEstimate {
        job_id,
        theta_hat,
        delta_hat,
        p_a: women as f64 / n as f64,
        n_applicants: n,
        shortlist_size: records.iter().filter(|r| r.shortlisted).count(),
        finalist_size,
    })
}

/// Groups applicants by job id (sorted) and estimates each job. Jobs that
/// cannot be estimated come back as `Err(Skipped)` in their slot.
pub fn estimate_jobs(records: &[ScoredApplicant], opts: &EstimateOptions) -> Vec<(String, Result<JobEstimate>)> {
    let mut by_job: BTreeMap<&str, Vec<ScoredApplicant>> = BTreeMap::new();
    for r in records {
        by_job.entry(r.job_id.as_str()).or_default().push(r.clone());
    }
    use rayon::prelude::*;
    let jobs: Vec<(&str, Vec<ScoredApplicant>)> = by_job.into_iter().collect();
    jobs.into_par_iter().map(|(id, recs)| (id.to_string(), estimate_job(&recs, opts))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub theta_bar: f64,
    /// Weighted over jobs that report δ̂.
    pub delta_bar: Option<f64>,
    pub jobs: usize,
    pub applicants: usize,
}

/// Applicant-weighted means of θ̂ and δ̂.
pub fn aggregate_estimates(estimates: &[JobEstimate]) -> Result<Aggregate> {
    if estimates.is_empty() {
        return Err(domain("no job estimates to aggregate"));
    }
    let wsum = |it: &mut dyn Iterator<Item = (usize, f64)>| {
        let (mut num, mut den) = (0.0, 0.0);
        for (n, v) in it {
            num += n as f64 * v;
            den += n as f64;
        }
        (den > 0.0).then(|| num / den)
    };
    let theta_bar = wsum(&mut estimates.iter().map(|e| (e.n_applicants, e.theta_hat)))
        .ok_or_else(|| domain("job estimates carry no applicants"))?;
    let delta_bar = wsum(&mut estimates.iter().filter_map(|e| e.delta_hat.map(|d| (e.n_applicants, d))));
    Ok(Aggregate {
        theta_bar,
        delta_bar,
        jobs: estimates.len(),
        applicants: estimates.iter().map(|e| e.n_applicants).sum(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

impl OlsFit {
    pub fn t_stat(&self, j: usize) -> f64 {
        self.coefficients[j] / self.std_errors[j]
    }
}

/// Relative pivot size below which the scaled normal matrix counts as singular.
const RANK_TOL: f64 = 1e-10;

/// Least squares via the normal equations.
///
/// Columns are scaled to unit norm before a Cholesky factorization of X'X;
/// a pivot below `RANK_TOL` (relative to 1) is reported as collinearity.
pub fn ols_fit(design: &[Vec<f64>], response: &[f64]) -> Result<OlsFit> {
    let n = design.len();
    if n == 0 || n != response.len() {
        return Err(domain(format!("design has {n} rows, response has {}", response.len())));
    }
    let p = design[0].len();
    if p == 0 || design.iter().any(|r| r.len() != p) {
        return Err(domain("design rows must share a nonzero column count"));
    }
    if n < p {
        return Err(domain(format!("{n} rows cannot identify {p} coefficients")));
    }
    if design.iter().flatten().chain(response).any(|v| !v.is_finite()) {
        return Err(domain("non-finite value in regression data"));
    }

    let norms: Vec<f64> = (0..p).map(|j| design.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt()).collect();
    if let Some(j) = norms.iter().position(|&v| v == 0.0) {
        return Err(Error::Collinear(format!("column {j} is identically zero")));
    }
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &y) in design.iter().zip(response) {
        for a in 0..p {
            let xa = row[a] / norms[a];
            xty[a] += xa * y;
            for b in 0..=a {
                xtx[a][b] += xa * row[b] / norms[b];
            }
        }
    }
    // Cholesky, lower triangle
    let mut l = vec![vec![0.0; p]; p];
    for j in 0..p {
        let d = xtx[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if d <= RANK_TOL {
            return Err(Error::Collinear(format!(
                "column {j} is (nearly) a linear combination of earlier columns (pivot {d:.3e})"
            )));
        }
        l[j][j] = d.sqrt();
        for i in j + 1..p {
            let s = xtx[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = s / l[j][j];
        }
    }
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let mut z = vec![0.0; p];
        for i in 0..p {
            z[i] = (rhs[i] - (0..i).map(|k| l[i][k] * z[k]).sum::<f64>()) / l[i][i];
        }
        let mut x = vec![0.0; p];
        for i in (0..p).rev() {
            x[i] = (z[i] - (i + 1..p).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
        }
        x
    };
    let scaled = solve(&xty);
    let coefficients: Vec<f64> = scaled.iter().zip(&norms).map(|(b, s)| b / s).collect();

    let residuals: Vec<f64> = design
        .iter()
        .zip(response)
        .map(|(r, &y)| y - r.iter().zip(&coefficients).map(|(x, b)| x * b).sum::<f64>())
        .collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let mean_y = response.iter().sum::<f64>() / n as f64;
    let tss: f64 = response.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    let sigma2 = if n > p { rss / (n - p) as f64 } else { f64::NAN };
    let std_errors = (0..p)
        .map(|j| {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            let col = solve(&e);
            (sigma2 * col[j]).sqrt() / norms[j]
        })
        .collect();

    Ok(OlsFit { coefficients, std_errors, r_squared, residuals })
}

/// Hire-share regression design row: intercept, p_a, θ, θ², δ, δ².
pub fn share_design_row(p_a: f64, theta: f64, delta: f64) -> Vec<f64> {
    vec![1.0, p_a, theta, theta * theta, delta, delta * delta]
}

pub const SHARE_REGRESSION_COLUMNS: [&str; 6] = ["intercept", "p_a", "theta", "theta_sq", "delta", "delta_sq"];

struct Fenwick(Vec<u32>);

impl Fenwick {
    fn add(&mut self, mut i: usize) {
        i += 1;
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }
    fn prefix(&self, mut i: usize) -> u32 {
        // count of inserted positions ≤ i
        i += 1;
        let mut s = 0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Kolmogorov–Smirnov distance between the empirical copula of (u, v) and a
/// Gaussian copula with correlation `theta_hat`, evaluated at the sample
/// points and scaled by sqrt(n).
pub fn ks_gaussian_copula(u: &[f64], v: &[f64], theta_hat: f64) -> Result<f64> {
    let n = u.len();
    if n != v.len() {
        return Err(domain(format!("length mismatch: {} vs {}", n, v.len())));
    }
    if n < 10 {
        return Err(domain(format!("KS statistic needs at least 10 pairs, got {n}")));
    }
    if !(-1.0..=1.0).contains(&theta_hat) {
        return Err(domain(format!("copula correlation {theta_hat} outside [-1, 1]")));
    }
    if u.iter().chain(v).any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(domain("copula inputs must lie in (0, 1)"));
    }

    // rank v once so the Fenwick tree is indexed by v order
    let mut v_sorted: Vec<f64> = v.to_vec();
    v_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let v_pos = |x: f64| v_sorted.partition_point(|&y| y <= x) - 1;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| u[a].partial_cmp(&u[b]).unwrap_or(Ordering::Equal));

    let mut tree = Fenwick(vec![0; n + 1]);
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && u[order[j]] == u[order[i]] {
            tree.add(v_pos(v[order[j]]));
            j += 1;
        }
        for &k in &order[i..j] {
            let emp = tree.prefix(v_pos(v[k])) as f64 / n as f64;
            let model = bvn_cdf_raw(norm_quantile(u[k])?, norm_quantile(v[k])?, theta_hat);
            worst = worst.max((emp - model).abs());
        }
        i = j;
    }
    Ok(worst * (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_examples() {
        assert_eq!(quantile_transform(&[0.1, 0.5, 0.9]).unwrap(), vec![0.25, 0.5, 0.75]);
        assert_eq!(quantile_transform(&[0.3; 5]).unwrap(), vec![0.5; 5]);
        assert!(quantile_transform(&[]).is_err());
    }

    #[test]
    fn gaussian_score_examples() {
        assert_eq!(gaussian_scores(&[0.5]).unwrap(), vec![0.0]);
        let z = gaussian_scores(&[0.25, 0.75]).unwrap();
        assert!((z[0] + 0.674_49).abs() < 1e-5 && (z[1] - 0.674_49).abs() < 1e-5);
        let u = [0.1, 0.33, 0.72];
        let a = gaussian_scores(&u).unwrap();
        let b = gaussian_scores(&u.map(|x| 1.0 - x)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x + y).abs() < 1e-12);
        }
        assert!(gaussian_scores(&[0.0]).is_err());
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let up: Vec<f64> = x.iter().map(|v: &f64| v.exp()).collect();
        let down: Vec<f64> = x.iter().map(|v| -v * v * v).collect();
        assert!((spearman(&x, &up).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &down).unwrap() + 1.0).abs() < 1e-15);
        assert!(spearman(&x, &up[..4]).is_err());
        assert!(spearman(&x, &[1.0; 5]).is_err());
        assert!(spearman(&x[..2], &up[..2]).is_err());
    }

    #[test]
    fn ipw_examples() {
        assert_eq!(ipw_weights(&[1.0], 0.01).unwrap(), vec![1.0]);
        assert_eq!(ipw_weights(&[0.0], 0.01).unwrap(), vec![100.0]);
        assert!(ipw_weights(&[1.2], 0.01).is_err());
        assert!(ipw_weights(&[0.5], 0.0).is_err());
        assert!(ipw_weights(&[0.5], 0.6).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let job = |id: &str, n: usize, t: f64, d: Option<f64>| JobEstimate {
            job_id: id.into(),
            theta_hat: t,
            delta_hat: d,
            p_a: 0.3,
            n_applicants: n,
            shortlist_size: 1,
            finalist_size: None,
        };
        let one = aggregate_estimates(&[job("a", 7, 0.3, Some(0.1))]).unwrap();
        assert_eq!((one.theta_bar, one.delta_bar), (0.3, Some(0.1)));
        let two = aggregate_estimates(&[job("a", 5, 0.2, None), job("b", 5, 0.6, Some(-0.1))]).unwrap();
        assert!((two.theta_bar - 0.4).abs() < 1e-15);
        assert_eq!(two.delta_bar, Some(-0.1));
        let w = aggregate_estimates(&[job("a", 1, 0.2, None), job("b", 3, 0.6, None)]).unwrap();
        assert!((w.theta_bar - 0.5).abs() < 1e-15);
        assert_eq!(w.delta_bar, None);
        assert!(aggregate_estimates(&[]).is_err());
    }

    #[test]
    fn ols_exact_and_collinear() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, i as f64, (i * i) as f64 / 10.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 3.0 - 0.5 * r[1] + 2.0 * r[2]).collect();
        let fit = ols_fit(&rows, &y).unwrap();
        for (b, t) in fit.coefficients.iter().zip([3.0, -0.5, 2.0]) {
            assert!((b - t).abs() < 1e-9);
        }
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let dup: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0], r[1], r[1]]).collect();
        assert!(matches!(ols_fit(&dup, &y), Err(Error::Collinear(_))));
        assert!(ols_fit(&rows[..2], &y[..2]).is_err());
    }

    #[test]
    fn job_estimate_single_gender() {
        let recs: Vec<ScoredApplicant> = (0..30)
            .map(|i| ScoredApplicant {
                applicant_id: i.to_string(),
                job_id: "j1".into(),
                gender: Gender::Male,
                p_screen: (i as f64 + 0.5) / 30.0,
                p_hire: Some(((i * 7) % 30) as f64 / 30.0),
                screened: true,
                shortlisted: i >= 25,
                finalist: None,
            })
            .collect();
        let e = estimate_job(&recs, &EstimateOptions::default()).unwrap();
        assert!(e.delta_hat.is_none());
        assert!(e.theta_hat.is_finite());
        assert_eq!(e.p_a, 0.0);
        assert_eq!(e.shortlist_size, 5);
        assert!(matches!(estimate_job(&recs[..5], &EstimateOptions::default()), Err(Error::Skipped(_))));
    }

    #[test]
    fn ks_needs_ten_points() {
        let u = [0.1, 0.2, 0.3];
        assert!(ks_gaussian_copula(&u, &u, 0.5).is_err());
    }
}
