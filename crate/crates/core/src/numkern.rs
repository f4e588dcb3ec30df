//! Scalar and bivariate Gaussian kernels, and the truncated-moment formulas
//! built on them.
//!
//! Every routine here is pure. The typed entry points take [`Corr`] and
//! [`Threshold`] so range checks happen once, at construction; the `*_raw`
//! helpers are the crate-internal f64 versions used in hot loops.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use crate::error::{domain, Error, Result};

/// 1/sqrt(2π)
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Integration cut-off for the one-dimensional reduction of the bivariate CDF.
/// The standard normal mass beyond ±8.5 is below 1e-16.
pub const TAIL_CUTOFF: f64 = 8.5;

/// Stand-in for ±∞ in z-units where a finite number is required
/// (root-finding brackets). Φ(-Z_LIMIT) underflows to zero.
pub const Z_LIMIT: f64 = 38.0;

/// Allowed excursion outside [0, 1] before clamping a quadrature result.
const PROB_SLACK: f64 = 1e-13;

/// Correlation coefficient in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Corr(f64);

impl Corr {
    pub fn new(value: f64) -> Result<Corr> {
        if value.is_nan() || !(-1.0..=1.0).contains(&value) {
            return Err(domain(format!("correlation {value} outside [-1, 1]")));
        }
        Ok(Corr(value))
    }

    pub const ZERO: Corr = Corr(0.0);

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// sqrt(1 - ρ²)
    #[inline]
    pub fn complement(self) -> f64 {
        ((1.0 - self.0) * (1.0 + self.0)).max(0.0).sqrt()
    }

    pub fn is_degenerate(self) -> bool {
        self.0.abs() == 1.0
    }
}

/// Finite score cutoff in standard-normal z-units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(value: f64) -> Result<Threshold> {
        if !value.is_finite() {
            return Err(domain(format!("threshold must be finite, got {value}")));
        }
        Ok(Threshold(value))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// A threshold that may sit at either infinity. Only the limit-aware
/// operations accept it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    NegInf,
    At(Threshold),
    PosInf,
}

impl Bound {
    fn as_f64(self) -> f64 {
        match self {
            Bound::NegInf => f64::NEG_INFINITY,
            Bound::At(t) => t.value(),
            Bound::PosInf => f64::INFINITY,
        }
    }
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail 1 - Φ(x), accurate for large positive x.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

pub fn norm_kernel(x: f64) -> (f64, f64) {
    (norm_pdf(x), norm_cdf(x))
}

/// Inverse of the standard normal CDF.
///
/// Wichura's AS241 rational approximation followed by one Halley step.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("normal quantile requires p in (0, 1), got {p}")));
    }
    let x = as241(p);
    // Halley refinement against the erfc-based CDF; work in whichever tail
    // keeps the residual well-conditioned.
    let e = if p < 0.5 { norm_cdf(x) - p } else { (1.0 - p) - norm_sf(x) };
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    if !u.is_finite() {
        return Ok(x);
    }
    Ok(x - u / (1.0 + 0.5 * x * u))
}

#[allow(clippy::excessive_precision)]
fn as241(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2.509_080_928_730_122_672_7e3 * r + 3.343_057_558_358_812_810_5e4) * r
            + 6.726_577_092_700_870_085_3e4)
            * r
            + 4.592_195_393_154_987_145_7e4)
            * r
            + 1.373_169_376_550_946_112_5e4)
            * r
            + 1.971_590_950_306_551_442_7e3)
            * r
            + 1.331_416_678_917_843_774_5e2)
            * r
            + 3.387_132_872_796_366_608_0;
        let den = ((((((5.226_495_278_852_854_561_0e3 * r + 2.872_908_573_572_194_267_4e4) * r
            + 3.930_789_580_009_271_061_0e4)
            * r
            + 2.121_379_430_158_659_586_7e4)
            * r
            + 5.394_196_021_424_751_107_7e3)
            * r
            + 6.871_870_074_920_579_083_0e2)
            * r
            + 4.231_333_070_160_091_125_2e1)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414_076_4e-4 * r + 2.272_384_498_926_918_458_33e-2) * r
            + 2.417_807_251_774_506_117_7e-1)
            * r
            + 1.270_458_252_452_368_382_58)
            * r
            + 3.647_848_324_763_204_605_04)
            * r
            + 5.769_497_221_460_691_405_5)
            * r
            + 4.630_337_846_156_545_295_9)
            * r
            + 1.423_437_110_749_683_577_34;
        let den = ((((((1.050_750_071_644_416_843_24e-9 * r + 5.475_938_084_995_344_946e-4) * r
            + 1.519_866_656_361_645_719_66e-2)
            * r
            + 1.481_039_764_274_800_745_9e-1)
            * r
            + 6.897_673_349_851_000_045_5e-1)
            * r
            + 1.676_384_830_183_803_849_4)
            * r
            + 2.053_191_626_637_758_821_87)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_132_65e-7 * r + 2.711_555_568_743_487_578_15e-5) * r
            + 1.242_660_947_388_078_438_6e-3)
            * r
            + 2.653_218_952_657_612_309_3e-2)
            * r
            + 2.965_605_718_285_048_912_3e-1)
            * r
            + 1.784_826_539_917_291_335_8)
            * r
            + 5.463_784_911_164_114_369_9)
            * r
            + 6.657_904_643_501_103_777_2;
        let den = ((((((2.044_263_103_389_939_785_64e-15 * r + 1.421_511_758_316_445_888_7e-7) * r
            + 1.846_318_317_510_054_681_8e-5)
            * r
            + 7.868_691_311_456_132_591e-4)
            * r
            + 1.487_536_129_085_061_485_25e-2)
            * r
            + 1.369_298_809_227_358_053_1e-1)
            * r
            + 5.998_322_065_558_879_376_9e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const GL_ORDER: usize = 20;

fn gauss_legendre() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    })
}

fn gl_panel(lo: f64, hi: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre();
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * f(mid + half * x)).sum::<f64>() * half
}

fn clamp_prob(p: f64) -> f64 {
    debug_assert!(
        (-PROB_SLACK..=1.0 + PROB_SLACK).contains(&p),
        "probability {p} escaped [0, 1] by more than the quadrature slack"
    );
    p.clamp(0.0, 1.0)
}

/// P(X ≤ a, Y ≤ b) for a standard bivariate normal with correlation `rho`.
/// Accepts infinite limits.
pub(crate) fn bvn_cdf_raw(a: f64, b: f64, rho: f64) -> f64 {
    debug_assert!(!a.is_nan() && !b.is_nan() && (-1.0..=1.0).contains(&rho));
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        return 0.0;
    }
    if a == f64::INFINITY {
        return norm_cdf(b);
    }
    if b == f64::INFINITY {
        return norm_cdf(a);
    }
    if rho == 1.0 {
        return norm_cdf(a.min(b));
    }
    if rho == -1.0 {
        return (norm_cdf(a) - norm_sf(b)).max(0.0);
    }
    if rho == 0.0 {
        return norm_cdf(a) * norm_cdf(b);
    }
    // Integrate over the coordinate with the smaller upper limit.
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let lo = -TAIL_CUTOFF;
    let hi = a.min(TAIL_CUTOFF);
    if hi <= lo {
        return 0.0;
    }
    let s = ((1.0 - rho) * (1.0 + rho)).sqrt();
    let integrand = |x: f64| norm_pdf(x) * norm_cdf((b - rho * x) / s);

    // The conditional CDF switches from 0 to 1 around x* = b/ρ over a width of
    // about s/|ρ|; resolve that zone with panels no wider than the width.
    let width = s / rho.abs();
    let centre = b / rho;
    let zone = 16.0 * width;
    let mut cuts = vec![lo, hi];
    for k in [0.0, 1.0, 2.0, 4.0, 8.0, 16.0] {
        for sign in [-1.0, 1.0] {
            let c = centre + sign * k * width;
            if c > lo && c < hi {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite cut points"));
    cuts.dedup();

    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let (seg_lo, seg_hi) = (pair[0], pair[1]);
        let mid = 0.5 * (seg_lo + seg_hi);
        let max_len = if (mid - centre).abs() <= zone { width.min(0.5) } else { 0.5 };
        let pieces = ((seg_hi - seg_lo) / max_len).ceil().max(1.0) as usize;
        let step = (seg_hi - seg_lo) / pieces as f64;
        for i in 0..pieces {
            let p_lo = seg_lo + i as f64 * step;
            let p_hi = if i + 1 == pieces { seg_hi } else { p_lo + step };
            total += gl_panel(p_lo, p_hi, &integrand);
        }
    }
    clamp_prob(total)
}

/// P(X > a, Y > b).
#[inline]
pub(crate) fn bvn_tail_raw(a: f64, b: f64, rho: f64) -> f64 {
    bvn_cdf_raw(-a, -b, rho)
}

pub(crate) fn bvn_pdf_raw(x: f64, y: f64, rho: f64) -> f64 {
    let one_m = (1.0 - rho) * (1.0 + rho);
    let q = (x * x - 2.0 * rho * x * y + y * y) / (2.0 * one_m);
    (-q).exp() / (2.0 * PI * one_m.sqrt())
}

/// Standard bivariate normal density. Undefined on the degenerate boundary.
pub fn bvn_pdf(x: f64, y: f64, rho: Corr) -> Result<f64> {
    if rho.is_degenerate() {
        return Err(domain("bivariate density is singular at |rho| = 1"));
    }
    if x.is_nan() || y.is_nan() {
        return Err(domain("NaN argument to bivariate density"));
    }
    Ok(bvn_pdf_raw(x, y, rho.value()))
}

/// Standard bivariate normal CDF Φ₂(a, b; ρ).
pub fn bvn_cdf(a: Threshold, b: Threshold, rho: Corr) -> f64 {
    bvn_cdf_raw(a.value(), b.value(), rho.value())
}

/// Limit-aware Φ₂ accepting ±∞ bounds.
pub fn bvn_cdf_bounded(a: Bound, b: Bound, rho: Corr) -> f64 {
    bvn_cdf_raw(a.as_f64(), b.as_f64(), rho.value())
}

/// Joint exceedance P(X > a, Y > b) = Φ₂(-a, -b; ρ). With (a, b) = (τS, τH)
/// and ρ = θ this is the hire probability.
pub fn bvn_tail(a: Threshold, b: Threshold, rho: Corr) -> f64 {
    bvn_tail_raw(a.value(), b.value(), rho.value())
}

/// P(Y > tau | X = x) for a standard bivariate normal with correlation `rho`.
pub fn cond_exceed(tau: Threshold, x: f64, rho: Corr) -> Result<f64> {
    if rho.is_degenerate() {
        return Err(domain("conditional distribution is degenerate at |rho| = 1"));
    }
    if !x.is_finite() {
        return Err(domain(format!("conditioning value must be finite, got {x}")));
    }
    Ok(norm_sf((tau.value() - rho.value() * x) / rho.complement()))
}

/// Determinant of the unit-diagonal correlation matrix of (Q, Q^S, Q^H).
pub fn corr3_det(theta_s: f64, theta_h: f64, theta: f64) -> f64 {
    1.0 - theta_s * theta_s - theta_h * theta_h - theta * theta + 2.0 * theta_s * theta_h * theta
}

/// Determinant tolerance for treating a correlation matrix as PSD.
const PSD_EPS: f64 = 1e-12;

/// Checks that the (Q, Q^S, Q^H) correlation matrix is positive semi-definite.
pub fn check_psd(theta_s: f64, theta_h: f64, theta: f64) -> Result<()> {
    for (name, v) in [("theta_s", theta_s), ("theta_h", theta_h), ("theta", theta)] {
        if v.is_nan() || v.abs() > 1.0 {
            return Err(Error::NotPsd(format!("{name} = {v} is not a correlation")));
        }
    }
    let det = corr3_det(theta_s, theta_h, theta);
    if det < -PSD_EPS {
        return Err(Error::NotPsd(format!(
            "det = {det:.3e} for (theta_s, theta_h, theta) = ({theta_s}, {theta_h}, {theta})"
        )));
    }
    Ok(())
}

/// E[Q | Q^S = τS, Q^H = τH], the linear "corner" expectation.
pub fn corner_mean_q(theta_s: Corr, theta_h: Corr, theta: Corr, tau_s: Threshold, tau_h: Threshold) -> Result<f64> {
    if theta.is_degenerate() {
        return Err(Error::Degenerate("corner expectation requires |theta| < 1".into()));
    }
    Ok(corner_raw(theta_s.value(), theta_h.value(), theta.value(), tau_s.value(), tau_h.value()))
}

fn corner_raw(ts: f64, th: f64, t: f64, tau_s: f64, tau_h: f64) -> f64 {
    ((ts * tau_s + th * tau_h) - t * (ts * tau_h + th * tau_s)) / ((1.0 - t) * (1.0 + t))
}

/// Tallis: E[Q | Q^S > τS, Q^H > τH] for standardized (Q, Q^S, Q^H).
pub(crate) fn truncated_mean_raw(ts: f64, th: f64, t: f64, tau_s: f64, tau_h: f64) -> Result<f64> {
    check_psd(ts, th, t)?;
    if t.abs() >= 1.0 {
        return Err(Error::Degenerate("truncated mean requires |theta| < 1".into()));
    }
    let denom = bvn_tail_raw(tau_s, tau_h, t);
    if denom <= 0.0 {
        return Err(Error::Degenerate(format!("selection region (tau_s = {tau_s}, tau_h = {tau_h}) has zero mass")));
    }
    let s = ((1.0 - t) * (1.0 + t)).sqrt();
    let num = th * norm_pdf(tau_h) * norm_sf((tau_s - t * tau_h) / s)
        + ts * norm_pdf(tau_s) * norm_sf((tau_h - t * tau_s) / s);
    Ok(num / denom)
}

/// Expected true quality of candidates that clear both cutoffs.
pub fn truncated_mean_q(theta_s: Corr, theta_h: Corr, theta: Corr, tau_s: Threshold, tau_h: Threshold) -> Result<f64> {
    truncated_mean_raw(theta_s.value(), theta_h.value(), theta.value(), tau_s.value(), tau_h.value())
}

/// ∂E[Q | Q^S > τS, Q^H > τH] / ∂θ in closed form:
/// φ₂(τS, τH; θ) / Φ̄₂(τS, τH; θ) × (corner expectation − region expectation).
pub fn de_dtheta(theta_s: Corr, theta_h: Corr, theta: Corr, tau_s: Threshold, tau_h: Threshold) -> Result<f64> {
    let (ts, th, t) = (theta_s.value(), theta_h.value(), theta.value());
    let (a, b) = (tau_s.value(), tau_h.value());
    let region = truncated_mean_raw(ts, th, t, a, b)?;
    let corner = corner_raw(ts, th, t, a, b);
    Ok(bvn_pdf_raw(a, b, t) / bvn_tail_raw(a, b, t) * (corner - region))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn th(x: f64) -> Threshold {
        Threshold::new(x).unwrap()
    }
    fn rho(x: f64) -> Corr {
        Corr::new(x).unwrap()
    }

    #[test]
    fn constructors_reject_bad_values() {
        assert!(Corr::new(f64::NAN).is_err());
        assert!(Corr::new(1.0000001).is_err());
        assert!(Corr::new(-1.0).is_ok());
        assert!(Threshold::new(f64::INFINITY).is_err());
        assert!(Threshold::new(f64::NAN).is_err());
    }

    #[test]
    fn normal_basics() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert_eq!(norm_quantile(0.5).unwrap(), 0.0);
        assert!(norm_quantile(0.0).is_err());
        assert!(norm_quantile(1.0).is_err());
        assert!(norm_quantile(f64::NAN).is_err());
        let (pdf, cdf) = norm_kernel(1.0);
        assert!((pdf - 0.241_970_724_519_143_37).abs() < 1e-15);
        assert!((cdf - 0.841_344_746_068_542_9).abs() < 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let mut p = 1e-10;
        while p < 1.0 - 1e-10 {
            let x = norm_quantile(p).unwrap();
            let back = if p < 0.5 { norm_cdf(x) } else { 1.0 - norm_sf(x) };
            assert!((back - p).abs() <= 1e-12, "p = {p}: {back}");
            p = if p < 0.01 { p * 3.7 } else { p + 0.0137 };
        }
        let p = 1.0 - 1e-10;
        let x = norm_quantile(p).unwrap();
        assert!((norm_sf(x) / (1.0 - p) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bivariate_small_cases() {
        assert!((bvn_cdf(th(0.0), th(0.0), rho(0.0)) - 0.25).abs() < 1e-15);
        assert!((bvn_cdf(th(0.0), th(0.0), rho(0.5)) - 1.0 / 3.0).abs() < 1e-12);
        assert!((bvn_cdf(th(0.7), th(10.0), rho(0.3)) - norm_cdf(0.7)).abs() < 1e-10);
        assert!((bvn_tail(th(0.0), th(0.0), rho(0.0)) - 0.25).abs() < 1e-15);
        for tau in [-1.0, 0.3, 2.0] {
            for r in [-0.6, 0.2, 0.9] {
                let v = bvn_tail(th(tau), th(-50.0), rho(r));
                assert!((v - norm_sf(tau)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_correlations() {
        assert!((bvn_cdf(th(0.3), th(-0.2), rho(1.0)) - norm_cdf(-0.2)).abs() < 1e-15);
        assert!((bvn_cdf(th(0.3), th(-0.2), rho(-1.0)) - (norm_cdf(0.3) + norm_cdf(-0.2) - 1.0)).abs() < 1e-15);
        assert_eq!(bvn_cdf(th(-0.5), th(-0.5), rho(-1.0)), 0.0);
        // continuity into the boundary
        let near = bvn_cdf(th(0.3), th(-0.2), rho(0.999_999));
        assert!((near - norm_cdf(-0.2)).abs() < 1e-3);
    }

    #[test]
    fn bounded_limits() {
        let r = rho(0.4);
        assert_eq!(bvn_cdf_bounded(Bound::NegInf, Bound::At(th(1.0)), r), 0.0);
        assert!((bvn_cdf_bounded(Bound::PosInf, Bound::At(th(1.0)), r) - norm_cdf(1.0)).abs() < 1e-15);
        assert_eq!(bvn_cdf_bounded(Bound::PosInf, Bound::PosInf, r), 1.0);
    }

    #[test]
    fn cond_exceed_cases() {
        for x in [-2.0, 0.0, 1.7] {
            let v = cond_exceed(th(0.8), x, Corr::ZERO).unwrap();
            assert!((v - norm_sf(0.8)).abs() < 1e-15);
        }
        assert!((cond_exceed(th(0.0), 0.0, rho(0.5)).unwrap() - 0.5).abs() < 1e-15);
        assert!(cond_exceed(th(0.0), 0.0, rho(1.0)).is_err());
        // strictly increasing in x for positive correlation
        let mut prev = 0.0;
        for i in 0..40 {
            let x = -4.0 + 0.2 * i as f64;
            let v = cond_exceed(th(1.0), x, rho(0.6)).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn tallis_closed_forms() {
        let v = truncated_mean_q(rho(0.5), rho(0.5), rho(0.0), th(0.0), th(0.0)).unwrap();
        assert!((v - (2.0 / PI).sqrt()).abs() < 1e-12);
        for t in [0.0, 0.3, 0.8] {
            let v = truncated_mean_q(rho(0.0), rho(0.0), rho(t), th(0.4), th(-1.2)).unwrap();
            assert_eq!(v, 0.0);
        }
        // θ = 0 reduces to a sum of inverse Mills ratios
        let (ts, thh, a, b) = (0.6, 0.35, 0.43, 1.07);
        let v = truncated_mean_q(rho(ts), rho(thh), rho(0.0), th(a), th(b)).unwrap();
        let mills = |x: f64| norm_pdf(x) / norm_sf(x);
        assert!((v - (ts * mills(a) + thh * mills(b))).abs() < 1e-10);
    }

    #[test]
    fn tallis_errors() {
        assert!(matches!(truncated_mean_q(rho(0.99), rho(0.99), rho(0.0), th(0.0), th(0.0)), Err(Error::NotPsd(_))));
        assert!(matches!(
            truncated_mean_q(rho(0.3), rho(0.3), rho(0.2), th(40.0), th(40.0)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn derivative_zero_thresholds_uses_corner_zero() {
        let (ts, thh, t) = (rho(0.4), rho(0.6), rho(0.3));
        let e = truncated_mean_q(ts, thh, t, th(0.0), th(0.0)).unwrap();
        let d = de_dtheta(ts, thh, t, th(0.0), th(0.0)).unwrap();
        let expect = -bvn_pdf_raw(0.0, 0.0, 0.3) / bvn_tail_raw(0.0, 0.0, 0.3) * e;
        assert!((d - expect).abs() < 1e-14);
        assert_eq!(corner_mean_q(ts, thh, t, th(0.0), th(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn psd_check() {
        assert!(check_psd(0.5, 0.5, 0.4).is_ok());
        assert!(check_psd(0.99, 0.99, 0.0).is_err());
        assert!(check_psd(0.5, 1.2, 0.0).is_err());
    }
}
