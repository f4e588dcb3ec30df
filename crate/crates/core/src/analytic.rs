//! Closed-form model of the screen-then-hire pipeline.
//!
//! Scores (Q, Q^S, Q^H) are trivariate normal per group. Men are standard
//! with correlations (θS, θH, θ). Women are shifted by (α, α+βS, α+βH) in mean
//! and by (δS, δH, δ) in correlation. The screen passes Q^S above a cutoff
//! (gender-specific under equal selection) and the manager hires Q^H above a
//! single cutoff τH.

use crate::error::{domain, Error, Gender, Result};
use crate::numkern::{bvn_tail_raw, check_psd, corr3_det, norm_quantile, norm_sf, truncated_mean_raw, Z_LIMIT};

/// How the screening stage is constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintMode {
    None,
    EqualSelection,
}

impl ConstraintMode {
    pub fn name(self) -> &'static str {
        match self {
            ConstraintMode::None => "none",
            ConstraintMode::EqualSelection => "equal_selection",
        }
    }
}

/// How the manager's cutoff τH is fixed when the screen is constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HireCutoff {
    /// τH is solved once from the unconstrained pipeline's hire mass and held
    /// there, so a constraint only moves the screen.
    #[default]
    HeldAtUnconstrained,
    /// τH is re-solved per mode so the hire mass is always
    /// shortlist_rate × finalist_rate (a fixed number of hires).
    MatchHireCount,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    pub theta: f64,
    pub theta_s: f64,
    pub theta_h: f64,
    pub delta: f64,
    pub delta_s: f64,
    pub delta_h: f64,
    pub alpha: f64,
    pub beta_s: f64,
    pub beta_h: f64,
    pub p_a: f64,
    pub shortlist_rate: f64,
    pub finalist_rate: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            theta: 0.4,
            theta_s: 0.5,
            theta_h: 0.5,
            delta: 0.0,
            delta_s: 0.0,
            delta_h: 0.0,
            alpha: 0.0,
            beta_s: 0.0,
            beta_h: 0.0,
            p_a: 0.3,
            shortlist_rate: 0.15,
            finalist_rate: 0.2,
        }
    }
}

/// Means and correlations of one group's (Q, Q^S, Q^H).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupModel {
    pub mean_q: f64,
    pub mean_s: f64,
    pub mean_h: f64,
    pub theta: f64,
    pub theta_s: f64,
    pub theta_h: f64,
}

impl GroupModel {
    pub fn correlation_matrix(&self) -> [[f64; 3]; 3] {
        [[1.0, self.theta_s, self.theta_h], [self.theta_s, 1.0, self.theta], [self.theta_h, self.theta, 1.0]]
    }

    /// P(Q^S > tau_s, Q^H > tau_h) for this group.
    fn hire_prob(&self, tau_s: f64, tau_h: f64) -> f64 {
        bvn_tail_raw(tau_s - self.mean_s, tau_h - self.mean_h, self.theta)
    }

    fn pass_prob(&self, tau_s: f64) -> f64 {
        norm_sf(tau_s - self.mean_s)
    }
}

impl PipelineParams {
    pub fn group(&self, g: Gender) -> GroupModel {
        match g {
            Gender::Male => GroupModel {
                mean_q: 0.0,
                mean_s: 0.0,
                mean_h: 0.0,
                theta: self.theta,
                theta_s: self.theta_s,
                theta_h: self.theta_h,
            },
            Gender::Female => GroupModel {
                mean_q: self.alpha,
                mean_s: self.alpha + self.beta_s,
                mean_h: self.alpha + self.beta_h,
                theta: self.theta - self.delta,
                theta_s: self.theta_s - self.delta_s,
                theta_h: self.theta_h - self.delta_h,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.theta,
            self.theta_s,
            self.theta_h,
            self.delta,
            self.delta_s,
            self.delta_h,
            self.alpha,
            self.beta_s,
            self.beta_h,
            self.p_a,
            self.shortlist_rate,
            self.finalist_rate,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(domain("pipeline parameters must be finite"));
        }
        if !(self.p_a > 0.0 && self.p_a < 1.0) {
            return Err(domain(format!("p_a = {} outside (0, 1)", self.p_a)));
        }
        if !(self.shortlist_rate > 0.0 && self.shortlist_rate < 1.0) {
            return Err(domain(format!("shortlist_rate = {} outside (0, 1)", self.shortlist_rate)));
        }
        if !(self.finalist_rate > 0.0 && self.finalist_rate <= 1.0) {
            return Err(domain(format!("finalist_rate = {} outside (0, 1]", self.finalist_rate)));
        }
        for (name, v) in [("theta", self.theta), ("theta_s", self.theta_s), ("theta_h", self.theta_h)] {
            if !(0.0..1.0).contains(&v) {
                return Err(domain(format!("{name} = {v} outside [0, 1)")));
            }
        }
        for g in [Gender::Male, Gender::Female] {
            let m = self.group(g);
            if m.theta.abs() >= 1.0 {
                return Err(domain(format!("{g} screen/hire correlation {} must lie in (-1, 1)", m.theta)));
            }
            check_psd(m.theta_s, m.theta_h, m.theta).map_err(|e| Error::NotPsd(format!("{g} group: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShareReport {
    pub p_a: f64,
    pub p_s: f64,
    pub p_h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub tau_s_m: f64,
    pub tau_s_f: f64,
    pub tau_h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOutcome {
    pub shares: ShareReport,
    pub thresholds: Thresholds,
    pub quality: f64,
    pub quality_m: f64,
    pub quality_f: f64,
    /// Hires per applicant.
    pub hire_mass: f64,
}

/// Bracket width at which bisection stops. Mass functions have slope at most
/// φ(0) < 0.4 per unit z, so the probability error is far below 1e-12.
const BISECT_WIDTH: f64 = 1e-13;

/// Root of a nonincreasing function on [-Z_LIMIT, Z_LIMIT] by bisection.
/// Returns the bracket end when the root lies outside the bracket.
fn bisect_decreasing(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (-Z_LIMIT, Z_LIMIT);
    if f(lo) <= 0.0 {
        return lo;
    }
    if f(hi) >= 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v == 0.0 || hi - lo < BISECT_WIDTH {
            return mid;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Per-gender screening cutoffs (standard-normal scores) that let each gender
/// fill exactly half of the shortlist.
pub fn equal_selection_thresholds(p_a: f64, shortlist_rate: f64) -> Result<(f64, f64)> {
    if !(p_a > 0.0 && p_a < 1.0) {
        return Err(domain(format!("p_a = {p_a} outside (0, 1)")));
    }
    if !(shortlist_rate > 0.0 && shortlist_rate < 1.0) {
        return Err(domain(format!("shortlist_rate = {shortlist_rate} outside (0, 1)")));
    }
    let need_f = shortlist_rate / (2.0 * p_a);
    let need_m = shortlist_rate / (2.0 * (1.0 - p_a));
    for (group, required) in [(Gender::Female, need_f), (Gender::Male, need_m)] {
        if required > 1.0 {
            return Err(Error::Infeasible { group, required });
        }
    }
    let cut = |pass: f64| -> Result<f64> {
        if pass >= 1.0 {
            Ok(-Z_LIMIT)
        } else {
            norm_quantile(1.0 - pass)
        }
    };
    Ok((cut(need_m)?, cut(need_f)?))
}

/// Hire probability for one group: joint exceedance of its screening and
/// hiring cutoffs after removing the group's mean shifts.
pub fn group_hire_prob(tau_s: f64, tau_h: f64, theta_g: f64, shift_s: f64, shift_h: f64) -> Result<f64> {
    if theta_g.is_nan() || theta_g.abs() >= 1.0 {
        return Err(domain(format!("group correlation {theta_g} must lie in (-1, 1)")));
    }
    if [tau_s, tau_h, shift_s, shift_h].iter().any(|v| v.is_nan()) {
        return Err(domain("NaN threshold or shift"));
    }
    Ok(bvn_tail_raw(tau_s - shift_s, tau_h - shift_h, theta_g))
}

fn screening_cutoffs(params: &PipelineParams, mode: ConstraintMode) -> Result<(f64, f64)> {
    let m = params.group(Gender::Male);
    let f = params.group(Gender::Female);
    match mode {
        ConstraintMode::None => {
            let tau = bisect_decreasing(|t| {
                params.p_a * f.pass_prob(t) + (1.0 - params.p_a) * m.pass_prob(t) - params.shortlist_rate
            });
            Ok((tau, tau))
        }
        ConstraintMode::EqualSelection => {
            let (tau_m, tau_f) = equal_selection_thresholds(params.p_a, params.shortlist_rate)?;
            // standardized cutoffs are relative to each group's own mean
            Ok((tau_m + m.mean_s, tau_f + f.mean_s))
        }
    }
}

fn hire_cutoff(params: &PipelineParams, tau_s_m: f64, tau_s_f: f64) -> f64 {
    let m = params.group(Gender::Male);
    let f = params.group(Gender::Female);
    let target = params.shortlist_rate * params.finalist_rate;
    bisect_decreasing(|h| params.p_a * f.hire_prob(tau_s_f, h) + (1.0 - params.p_a) * m.hire_prob(tau_s_m, h) - target)
}

pub fn thresholds(params: &PipelineParams, mode: ConstraintMode, cutoff: HireCutoff) -> Result<Thresholds> {
    params.validate()?;
    let (tau_s_m, tau_s_f) = screening_cutoffs(params, mode)?;
    let tau_h = match (cutoff, mode) {
        (HireCutoff::HeldAtUnconstrained, ConstraintMode::EqualSelection) => {
            let (u_m, u_f) = screening_cutoffs(params, ConstraintMode::None)?;
            hire_cutoff(params, u_m, u_f)
        }
        _ => hire_cutoff(params, tau_s_m, tau_s_f),
    };
    Ok(Thresholds { tau_s_m, tau_s_f, tau_h })
}

// Identical group rates give back p_a bit for bit.
fn share(pa: f64, rate_f: f64, rate_m: f64) -> f64 {
    if rate_f == rate_m {
        pa
    } else {
        pa * rate_f / (pa * rate_f + (1.0 - pa) * rate_m)
    }
}

/// Full closed-form evaluation of one pipeline configuration.
pub fn evaluate(params: &PipelineParams, mode: ConstraintMode, cutoff: HireCutoff) -> Result<PipelineOutcome> {
    let thr = thresholds(params, mode, cutoff)?;
    let m = params.group(Gender::Male);
    let f = params.group(Gender::Female);
    let pa = params.p_a;

    let p_s = match mode {
        ConstraintMode::EqualSelection => 0.5,
        ConstraintMode::None => share(pa, f.pass_prob(thr.tau_s_f), m.pass_prob(thr.tau_s_m)),
    };

    let rate_f = group_hire_prob(thr.tau_s_f, thr.tau_h, f.theta, f.mean_s, f.mean_h)?;
    let rate_m = group_hire_prob(thr.tau_s_m, thr.tau_h, m.theta, m.mean_s, m.mean_h)?;
    let hire_mass = pa * rate_f + (1.0 - pa) * rate_m;
    if hire_mass <= 0.0 {
        return Err(Error::Degenerate("no applicant mass is hired".into()));
    }
    let p_h = share(pa, rate_f, rate_m);

    let group_quality = |g: &GroupModel, tau_s: f64| -> Result<f64> {
        Ok(g.mean_q + truncated_mean_raw(g.theta_s, g.theta_h, g.theta, tau_s - g.mean_s, thr.tau_h - g.mean_h)?)
    };
    let quality_f = group_quality(&f, thr.tau_s_f)?;
    let quality_m = group_quality(&m, thr.tau_s_m)?;

    Ok(PipelineOutcome {
        shares: ShareReport { p_a: pa, p_s, p_h },
        thresholds: thr,
        quality: p_h * quality_f + (1.0 - p_h) * quality_m,
        quality_m,
        quality_f,
        hire_mass,
    })
}

/// Female shares among applicants, shortlist and hires.
pub fn female_share_hires(params: &PipelineParams, mode: ConstraintMode) -> Result<ShareReport> {
    Ok(evaluate(params, mode, HireCutoff::default())?.shares)
}

/// Expected true quality of hires, averaged over genders by hire share.
pub fn expected_hire_quality(params: &PipelineParams, mode: ConstraintMode) -> Result<f64> {
    Ok(evaluate(params, mode, HireCutoff::default())?.quality)
}

const TWO_PI_E: f64 = 2.0 * std::f64::consts::PI * std::f64::consts::E;

/// H(Q | Q^S, Q^H) in nats for the standardized trivariate normal.
pub fn conditional_entropy(theta: f64, theta_s: f64, theta_h: f64) -> Result<f64> {
    if theta.is_nan() || theta.abs() >= 1.0 {
        return Err(domain(format!("theta = {theta} must lie in (-1, 1)")));
    }
    check_psd(theta_s, theta_h, theta)?;
    let det = corr3_det(theta_s, theta_h, theta);
    if det <= 0.0 {
        return Err(Error::Degenerate(format!(
            "scores determine quality exactly (det = {det:.3e}); entropy is -infinity"
        )));
    }
    Ok(0.5 * (TWO_PI_E * det / ((1.0 - theta) * (1.0 + theta))).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Screening accuracy θS that keeps H(Q | Q^S, Q^H) at `h0` for a given θ.
pub fn equal_info_theta_s(theta: f64, theta_h: f64, h0: f64, branch: Branch) -> Result<f64> {
    if theta.is_nan() || theta.abs() >= 1.0 || theta_h.is_nan() || theta_h.abs() >= 1.0 {
        return Err(domain("theta and theta_h must lie in (-1, 1)"));
    }
    if !h0.is_finite() {
        return Err(domain(format!("entropy level must be finite, got {h0}")));
    }
    let one_m_t2 = (1.0 - theta) * (1.0 + theta);
    let disc = (1.0 - theta_h * theta_h) * one_m_t2 - one_m_t2 * (2.0 * h0).exp() / TWO_PI_E;
    if disc < -1e-12 {
        return Err(Error::NoSolution(format!("no theta_s reaches H = {h0} at theta = {theta}, theta_h = {theta_h}")));
    }
    let root = disc.max(0.0).sqrt();
    let ts = theta * theta_h
        + match branch {
            Branch::Plus => root,
            Branch::Minus => -root,
        };
    if !(0.0..1.0).contains(&ts) {
        return Err(Error::Range(format!("theta_s = {ts} outside [0, 1)")));
    }
    Ok(ts)
}

/// θ at which the plus branch of the equal-information curve peaks.
pub fn equal_info_peak(theta_h: f64, h0: f64) -> Result<f64> {
    let c = (1.0 - theta_h * theta_h) - (2.0 * h0).exp() / TWO_PI_E;
    if c < 0.0 {
        return Err(Error::NoSolution(format!("H = {h0} is unreachable at theta_h = {theta_h}")));
    }
    Ok(theta_h / (theta_h * theta_h + c).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub theta: f64,
    pub theta_s: Option<f64>,
    pub quality: Option<f64>,
    pub note: Option<String>,
}

/// E[Q_h] along equal-information (θ, θS) pairs. Grid points without a valid
/// θS carry the reason in `note`.
pub fn equal_info_quality_curve(
    theta_h: f64,
    h0: f64,
    theta_grid: &[f64],
    branch: Branch,
    params: &PipelineParams,
    mode: ConstraintMode,
) -> Vec<CurvePoint> {
    theta_grid
        .iter()
        .map(|&theta| {
            let eval = || -> Result<(f64, f64)> {
                let ts = equal_info_theta_s(theta, theta_h, h0, branch)?;
                let p = PipelineParams { theta, theta_s: ts, theta_h, ..*params };
                Ok((ts, expected_hire_quality(&p, mode)?))
            };
            match eval() {
                Ok((ts, q)) => CurvePoint { theta, theta_s: Some(ts), quality: Some(q), note: None },
                Err(e) => CurvePoint { theta, theta_s: None, quality: None, note: Some(e.to_string()) },
            }
        })
        .collect()
}

/// Estimated parameters and observed stage sizes for one job posting.
#[derive(Debug, Clone, PartialEq)]
pub struct JobEstimate {
    pub job_id: String,
    pub theta_hat: f64,
    pub delta_hat: Option<f64>,
    pub p_a: f64,
    pub n_applicants: usize,
    pub shortlist_size: usize,
    pub finalist_size: Option<usize>,
}

/// Where the counterfactual takes δ from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaSource {
    #[default]
    Estimated,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterfactualOptions {
    pub delta: DeltaSource,
    /// Used when the job has no observed finalist count.
    pub default_finalist_rate: f64,
    /// Quality correlations only enter through the PSD check for shares.
    pub theta_s: f64,
    pub theta_h: f64,
}

impl Default for CounterfactualOptions {
    fn default() -> Self {
        CounterfactualOptions { delta: DeltaSource::Estimated, default_finalist_rate: 0.2, theta_s: 0.5, theta_h: 0.5 }
    }
}

/// Plugs one job's estimates into the closed-form model. Stage sizes become
/// rates; the job is skipped (with a reason) when they are degenerate.
pub fn counterfactual_job(
    estimate: &JobEstimate,
    mode: ConstraintMode,
    opts: &CounterfactualOptions,
) -> Result<ShareReport> {
    let skip = |why: String| Err(Error::Skipped(format!("job {}: {why}", estimate.job_id)));
    if estimate.n_applicants == 0 || estimate.shortlist_size == 0 {
        return skip("empty shortlist".into());
    }
    if estimate.shortlist_size >= estimate.n_applicants {
        return skip("every applicant was shortlisted".into());
    }
    let shortlist_rate = estimate.shortlist_size as f64 / estimate.n_applicants as f64;
    let finalist_rate = match estimate.finalist_size {
        Some(0) => return skip("no finalists".into()),
        Some(k) => (k as f64 / estimate.shortlist_size as f64).min(1.0),
        None => opts.default_finalist_rate,
    };
    if !(0.0..1.0).contains(&estimate.theta_hat) {
        return skip(format!("theta_hat = {} outside the model range [0, 1)", estimate.theta_hat));
    }
    let delta = match opts.delta {
        DeltaSource::Estimated => estimate.delta_hat.unwrap_or(0.0),
        DeltaSource::Zero => 0.0,
    };
    let params = PipelineParams {
        theta: estimate.theta_hat,
        theta_s: opts.theta_s,
        theta_h: opts.theta_h,
        delta,
        p_a: estimate.p_a,
        shortlist_rate,
        finalist_rate,
        ..PipelineParams::default()
    };
    if let Err(e) = params.validate() {
        return skip(e.to_string());
    }
    match female_share_hires(&params, mode) {
        Ok(r) => Ok(r),
        Err(e @ Error::Infeasible { .. }) => skip(e.to_string()),
        Err(e) => Err(e),
    }
}

/// Applicant-weighted mean of share reports.
pub fn weighted_shares(rows: &[(usize, ShareReport)]) -> Result<ShareReport> {
    let total: f64 = rows.iter().map(|(n, _)| *n as f64).sum();
    if rows.is_empty() || total <= 0.0 {
        return Err(domain("no weighted rows to aggregate"));
    }
    let avg = |f: fn(&ShareReport) -> f64| rows.iter().map(|(n, r)| *n as f64 * f(r)).sum::<f64>() / total;
    Ok(ShareReport { p_a: avg(|r| r.p_a), p_s: avg(|r| r.p_s), p_h: avg(|r| r.p_h) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkern::{norm_pdf, norm_sf};

    fn base(theta: f64) -> PipelineParams {
        PipelineParams { theta, ..PipelineParams::default() }
    }

    #[test]
    fn equal_selection_threshold_examples() {
        let (m, f) = equal_selection_thresholds(0.5, 0.2).unwrap();
        let q = norm_quantile(0.8).unwrap();
        assert!((m - q).abs() < 1e-15 && (f - q).abs() < 1e-15);

        let (m, f) = equal_selection_thresholds(0.3, 0.2).unwrap();
        assert!((f - norm_quantile(2.0 / 3.0).unwrap()).abs() < 1e-14);
        assert!((m - norm_quantile(6.0 / 7.0).unwrap()).abs() < 1e-14);
        assert!((f - 0.430_727).abs() < 1e-5 && (m - 1.067_570).abs() < 1e-5);
        assert!(f < m);

        match equal_selection_thresholds(0.05, 0.2) {
            Err(Error::Infeasible { group, required }) => {
                assert_eq!(group, Gender::Female);
                assert!((required - 2.0).abs() < 1e-12);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn group_hire_prob_cases() {
        assert!((group_hire_prob(0.0, 0.0, 0.0, 0.0, 0.0).unwrap() - 0.25).abs() < 1e-15);
        let base = group_hire_prob(0.43, 1.0, 0.4, 0.0, 0.0).unwrap();
        let lower = group_hire_prob(0.43, 1.0, 0.4 - 0.1, 0.0, 0.0).unwrap();
        assert!(lower < base);
        assert!(group_hire_prob(0.0, 0.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn unconstrained_identical_groups_keep_pool_share() {
        for theta in [0.0, 0.3, 0.7, 0.95] {
            let r = female_share_hires(&base(theta), ConstraintMode::None).unwrap();
            assert!((r.p_h - 0.3).abs() < 1e-9, "theta {theta}: {r:?}");
            assert!((r.p_s - 0.3).abs() < 1e-9);
        }
    }

    #[test]
    fn equal_selection_independent_scores_balance_hires() {
        let r = female_share_hires(&base(0.0), ConstraintMode::EqualSelection).unwrap();
        assert!((r.p_h - 0.5).abs() < 1e-9);
        assert_eq!(r.p_s, 0.5);
    }

    #[test]
    fn equal_selection_fades_as_theta_approaches_one() {
        let r = female_share_hires(&base(0.9999), ConstraintMode::EqualSelection).unwrap();
        assert!((r.p_h - 0.3).abs() < 0.01, "{r:?}");
    }

    #[test]
    fn hire_mass_matches_target() {
        let p = base(0.434);
        for mode in [ConstraintMode::None, ConstraintMode::EqualSelection] {
            let out = evaluate(&p, mode, HireCutoff::MatchHireCount).unwrap();
            assert!((out.hire_mass - 0.15 * 0.2).abs() < 1e-11);
        }
        let held = evaluate(&p, ConstraintMode::EqualSelection, HireCutoff::HeldAtUnconstrained).unwrap();
        let none = evaluate(&p, ConstraintMode::None, HireCutoff::HeldAtUnconstrained).unwrap();
        assert_eq!(held.thresholds.tau_h, none.thresholds.tau_h);
    }

    #[test]
    fn quality_theta_zero_closed_form() {
        let p = PipelineParams { theta: 0.0, theta_s: 0.6, theta_h: 0.45, ..PipelineParams::default() };
        let out = evaluate(&p, ConstraintMode::EqualSelection, HireCutoff::default()).unwrap();
        let mills = |x: f64| norm_pdf(x) / norm_sf(x);
        let t = out.thresholds;
        let f = 0.45 * mills(t.tau_h) + 0.6 * mills(t.tau_s_f);
        let m = 0.45 * mills(t.tau_h) + 0.6 * mills(t.tau_s_m);
        assert!((out.quality_f - f).abs() < 1e-10);
        assert!((out.quality_m - m).abs() < 1e-10);
    }

    #[test]
    fn quality_decreasing_in_theta() {
        let mut prev = f64::INFINITY;
        for i in 0..10 {
            let q = expected_hire_quality(&base(0.1 * i as f64), ConstraintMode::EqualSelection).unwrap();
            assert!(q < prev);
            prev = q;
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(PipelineParams { p_a: 0.0, ..base(0.2) }.validate().is_err());
        assert!(PipelineParams { theta: 1.0, ..base(0.2) }.validate().is_err());
        assert!(PipelineParams { finalist_rate: 1.5, ..base(0.2) }.validate().is_err());
        assert!(PipelineParams { theta_s: 0.99, theta_h: 0.99, theta: 0.0, ..base(0.0) }.validate().is_err());
        // female matrix is the one that breaks
        let p = PipelineParams { theta: 0.5, delta: -0.6, ..base(0.0) };
        assert!(p.validate().is_err());
    }

    #[test]
    fn entropy_cases() {
        let h = conditional_entropy(0.0, 0.0, 0.0).unwrap();
        assert!((h - 0.5 * TWO_PI_E.ln()).abs() < 1e-15);
        assert!((h - 1.418_938_533_204_672_7).abs() < 1e-12);
        // Q fully explained: θS² + θH² = 1 at θ = 0
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(conditional_entropy(0.0, s, s).is_err());
    }

    #[test]
    fn equal_info_tangency_and_round_trip() {
        // at this entropy level Q^S adds nothing beyond Q^H and both roots coincide
        let th = 0.5;
        let h0 = 0.5 * (TWO_PI_E * (1.0 - th * th)).ln();
        for theta in [0.0, 0.3, 0.7] {
            let p = equal_info_theta_s(theta, th, h0, Branch::Plus).unwrap();
            let m = equal_info_theta_s(theta, th, h0, Branch::Minus).unwrap();
            assert!((p - theta * th).abs() < 1e-7 && (m - theta * th).abs() < 1e-7);
        }

        let h0 = conditional_entropy(0.3, 0.55, 0.5).unwrap();
        let ts = equal_info_theta_s(0.3, 0.5, h0, Branch::Plus).unwrap();
        assert!((ts - 0.55).abs() < 1e-9);

        assert!(matches!(equal_info_theta_s(0.3, 0.5, 5.0, Branch::Plus), Err(Error::NoSolution(_))));
    }

    #[test]
    fn equal_info_curve_rises_then_falls() {
        let peak = equal_info_peak(0.5, 0.5).unwrap();
        let at = |t: f64| equal_info_theta_s(t, 0.5, 0.5, Branch::Plus).unwrap();
        assert!(at(0.0) < at(peak) && at(0.95) < at(peak));
        assert!(at(peak) > at(peak - 1e-3) && at(peak) > at(peak + 1e-3));
    }

    #[test]
    fn curve_marks_missing_points() {
        let pts = equal_info_quality_curve(0.5, 5.0, &[0.1, 0.2], Branch::Plus, &base(0.0), ConstraintMode::None);
        assert!(pts.iter().all(|p| p.theta_s.is_none() && p.note.is_some()));
    }

    #[test]
    fn counterfactual_rows() {
        let est = JobEstimate {
            job_id: "j".into(),
            theta_hat: 0.434,
            delta_hat: Some(-0.007),
            p_a: 0.31,
            n_applicants: 1000,
            shortlist_size: 150,
            finalist_size: Some(30),
        };
        let opts = CounterfactualOptions::default();
        let none = counterfactual_job(&est, ConstraintMode::None, &opts).unwrap();
        assert!((none.p_s - 0.31).abs() < 1e-9);
        let eq = counterfactual_job(&est, ConstraintMode::EqualSelection, &opts).unwrap();
        assert_eq!(eq.p_s, 0.5);
        assert!(eq.p_h > 0.31 && eq.p_h < 0.5);

        let zero = CounterfactualOptions { delta: DeltaSource::Zero, ..opts };
        let none = counterfactual_job(&est, ConstraintMode::None, &zero).unwrap();
        assert!((none.p_h - 0.31).abs() < 1e-9);

        let empty = JobEstimate { shortlist_size: 0, ..est.clone() };
        assert!(matches!(counterfactual_job(&empty, ConstraintMode::None, &opts), Err(Error::Skipped(_))));
        let tiny = JobEstimate { p_a: 0.02, ..est };
        assert!(matches!(counterfactual_job(&tiny, ConstraintMode::EqualSelection, &opts), Err(Error::Skipped(_))));
    }

    #[test]
    fn weighted_share_average() {
        let a = ShareReport { p_a: 0.2, p_s: 0.2, p_h: 0.2 };
        let b = ShareReport { p_a: 0.6, p_s: 0.6, p_h: 0.6 };
        let r = weighted_shares(&[(1, a), (3, b)]).unwrap();
        assert!((r.p_a - 0.5).abs() < 1e-15);
        assert!(weighted_shares(&[]).is_err());
    }
}
