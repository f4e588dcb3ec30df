use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::analytic::{GroupModel, PipelineParams};
use crate::error::{domain, Error, Gender, Result};
use crate::numkern::{check_psd, norm_quantile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolSpec {
    pub n: usize,
    pub p_a: f64,
    /// Correlation structure and female mean shifts. Its `p_a` and rates are
    /// not used for sampling.
    pub params: PipelineParams,
    /// Correlation between the latent label score and q^S, in [0, 1).
    pub label_corr: f64,
    /// Share of applicants carrying a positive historical label.
    pub label_rate: f64,
    pub seed: u64,
}

impl Default for PoolSpec {
    fn default() -> Self {
        PoolSpec { n: 500, p_a: 0.3, params: PipelineParams::default(), label_corr: 0.8, label_rate: 0.08, seed: 0 }
    }
}

impl PoolSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(domain(format!("pool size {} below 2", self.n)));
        }
        if !(0.0..=1.0).contains(&self.p_a) {
            return Err(domain(format!("p_a = {} outside [0, 1]", self.p_a)));
        }
        if !(0.0..1.0).contains(&self.label_corr) {
            return Err(domain(format!("label_corr = {} outside [0, 1)", self.label_corr)));
        }
        if !(self.label_rate > 0.0 && self.label_rate < 1.0) {
            return Err(domain(format!("label_rate = {} outside (0, 1)", self.label_rate)));
        }
        for g in [Gender::Male, Gender::Female] {
            let m = self.params.group(g);
            check_psd(m.theta_s, m.theta_h, m.theta).map_err(|e| Error::NotPsd(format!("{g} group: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Applicant {
    pub gender: Gender,
    pub q: f64,
    pub q_s: f64,
    pub q_h: f64,
    /// Historical screener label used by the parity policies.
    pub label: bool,
}

/// Symmetric square root V·sqrt(Λ)·Vᵀ of a PSD correlation matrix. Tiny
/// negative eigenvalues from rounding are clamped to zero.
pub fn symmetric_sqrt(m: [[f64; 3]; 3]) -> Matrix3<f64> {
    let mat = Matrix3::from_fn(|i, j| m[i][j]);
    let eig = SymmetricEigen::new(mat);
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    eig.eigenvectors * Matrix3::from_diagonal(&root) * eig.eigenvectors.transpose()
}

struct GroupSampler {
    mean: Vector3<f64>,
    root: Matrix3<f64>,
}

impl GroupSampler {
    fn new(g: &GroupModel) -> Self {
        GroupSampler { mean: Vector3::new(g.mean_q, g.mean_s, g.mean_h), root: symmetric_sqrt(g.correlation_matrix()) }
    }

    fn draw(&self, rng: &mut impl Rng) -> Vector3<f64> {
        let z = Vector3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        self.mean + self.root * z
    }
}

/// Draws a pool from `rng`. Used directly by the benchmark with per-replication
/// substreams; `gen_pool` seeds from the spec.
pub fn sample_pool(spec: &PoolSpec, rng: &mut impl Rng) -> Result<Vec<Applicant>> {
    spec.validate()?;
    let male = GroupSampler::new(&spec.params.group(Gender::Male));
    let female = GroupSampler::new(&spec.params.group(Gender::Female));
    let cut = norm_quantile(1.0 - spec.label_rate)?;
    let mix = (1.0 - spec.label_corr * spec.label_corr).sqrt();
    Ok((0..spec.n)
        .map(|_| {
            let gender = if rng.gen_bool(spec.p_a) { Gender::Female } else { Gender::Male };
            let v = match gender {
                Gender::Male => male.draw(rng),
                Gender::Female => female.draw(rng),
            };
            let noise: f64 = rng.sample(StandardNormal);
            Applicant { gender, q: v[0], q_s: v[1], q_h: v[2], label: spec.label_corr * v[1] + mix * noise > cut }
        })
        .collect())
}

pub fn gen_pool(spec: &PoolSpec) -> Result<Vec<Applicant>> {
    sample_pool(spec, &mut ChaCha8Rng::seed_from_u64(spec.seed))
}

fn standardize(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if !(sd > 0.0) {
        return Err(domain("score vector has zero variance"));
    }
    Ok(x.iter().map(|v| (v - mean) / sd).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// True quality with sample-exact correlations to the observed scores.
///
/// A Gaussian draw is orthogonalized against the constant, qS and qH, then
/// combined as q = a·zS + b·zH + c·e with zS, zH the standardized scores.
/// The result has mean 0, population variance 1 and the requested sample
/// correlations up to rounding.
pub fn gen_true_quality(q_s: &[f64], q_h: &[f64], theta_s: f64, theta_h: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if q_s.len() != q_h.len() {
        return Err(domain(format!("length mismatch: {} vs {}", q_s.len(), q_h.len())));
    }
    if q_s.len() < 3 {
        return Err(domain(format!("need at least 3 scores, got {}", q_s.len())));
    }
    let n = q_s.len() as f64;
    let zs = standardize(q_s)?;
    let zh = standardize(q_h)?;
    let r = dot(&zs, &zh) / n;
    if r.abs() >= 1.0 - 1e-12 {
        return Err(Error::Degenerate(format!("screening and hiring scores are collinear (r = {r})")));
    }
    check_psd(theta_s, theta_h, r).map_err(|e| Error::NotPsd(format!("target against sample scores: {e}")))?;

    let a = (theta_s - r * theta_h) / (1.0 - r * r);
    let b = (theta_h - r * theta_s) / (1.0 - r * r);
    let c2 = 1.0 - (a * theta_s + b * theta_h);

    // zS and an orthonormalized zH span the score plane; centering handles the constant
    let zh_perp: Vec<f64> = zh.iter().zip(&zs).map(|(h, s)| h - r * s).collect();
    let perp_norm = dot(&zh_perp, &zh_perp);
    let mut e: Vec<f64> = (0..q_s.len()).map(|_| rng.sample(StandardNormal)).collect();
    for _ in 0..2 {
        let mean = e.iter().sum::<f64>() / n;
        e.iter_mut().for_each(|v| *v -= mean);
        let ps = dot(&e, &zs) / n;
        let ph = dot(&e, &zh_perp) / perp_norm;
        for i in 0..e.len() {
            e[i] -= ps * zs[i] + ph * zh_perp[i];
        }
    }
    let c = if c2 <= 1e-14 {
        0.0
    } else {
        let e_sd = (dot(&e, &e) / n).sqrt();
        if !(e_sd > 1e-12) {
            return Err(Error::Degenerate("no residual direction left to carry independent quality".into()));
        }
        e.iter_mut().for_each(|v| *v /= e_sd);
        c2.sqrt()
    };
    Ok((0..q_s.len()).map(|i| a * zs[i] + b * zh[i] + c * e[i]).collect())
}
