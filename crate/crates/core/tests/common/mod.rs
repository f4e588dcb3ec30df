#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Lower Cholesky factor of a 3×3 correlation matrix.
pub fn chol3(r: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][i] = (r[i][i] - s).max(0.0).sqrt();
            } else {
                l[i][j] = if l[j][j] > 0.0 { (r[i][j] - s) / l[j][j] } else { 0.0 };
            }
        }
    }
    l
}

/// (Q, Q^S, Q^H) sampler with correlations (θS, θH, θ) and the given means.
pub struct Trivariate {
    l: [[f64; 3]; 3],
    mean: [f64; 3],
}

impl Trivariate {
    pub fn new(theta_s: f64, theta_h: f64, theta: f64, mean: [f64; 3]) -> Trivariate {
        let r = [[1.0, theta_s, theta_h], [theta_s, 1.0, theta], [theta_h, theta, 1.0]];
        Trivariate { l: chol3(r), mean }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> [f64; 3] {
        let z: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let mut x = self.mean;
        for i in 0..3 {
            for j in 0..=i {
                x[i] += self.l[i][j] * z[j];
            }
        }
        x
    }
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Φ by composite Simpson on φ; independent of the library's erfc path.
pub fn phi_simpson(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - phi_simpson(-x);
    }
    let n = 2000;
    let h = x / n as f64;
    let mut s = std_normal_pdf(0.0) + std_normal_pdf(x);
    for i in 1..n {
        s += std_normal_pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 + s * h / 3.0
}

/// Φ₂(a, b; ρ) = ∫_{-∞}^{a} φ(x) Φ((b − ρx)/√(1 − ρ²)) dx by Simpson.
pub fn bvn_cdf_quadrature(a: f64, b: f64, rho: f64) -> f64 {
    let lo = -9.0f64;
    if a <= lo {
        return 0.0;
    }
    let c = (1.0 - rho * rho).sqrt();
    let f = |x: f64| std_normal_pdf(x) * libm::erfc(-((b - rho * x) / c) / std::f64::consts::SQRT_2) / 2.0;
    let n = 4000;
    let h = (a - lo) / n as f64;
    let mut s = f(lo) + f(a);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}
