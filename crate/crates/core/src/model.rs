//! The G⁰ law for intensity data: Z = X·Y with reciprocal-gamma backscatter
//! X and gamma speckle Y.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::special::ln_gamma_unchecked;

/// Parameters of G⁰(α, γ, L).
///
/// `alpha` is the roughness (< 0; near zero means extremely heterogeneous),
/// `gamma` the scale (> 0, intensity units) and `looks` the number of looks
/// (≥ 1, not necessarily an integer).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G0Params {
    alpha: f64,
    gamma: f64,
    looks: f64,
}

impl G0Params {
    pub fn new(alpha: f64, gamma: f64, looks: f64) -> Result<Self> {
        if !(alpha < 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be negative and finite, got {alpha}")));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("gamma must be positive and finite, got {gamma}")));
        }
        if !(looks >= 1.0) || !looks.is_finite() {
            return Err(Error::Domain(format!("looks must be >= 1, got {looks}")));
        }
        Ok(Self { alpha, gamma, looks })
    }

    /// Parameters from roughness and mean, γ = −μ(1 + α).
    pub fn from_mean(alpha: f64, mu: f64, looks: f64) -> Result<Self> {
        Self::new(alpha, gamma_from_mean(alpha, mu)?, looks)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn looks(&self) -> f64 {
        self.looks
    }

    /// Same law rescaled: if Z ~ G⁰(α, γ, L) then cZ ~ G⁰(α, cγ, L).
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.alpha, self.gamma * c, self.looks)
    }

    /// Logarithm of the normalizing constant L^L Γ(L−α) / (γ^α Γ(−α) Γ(L)).
    pub fn log_norm(&self) -> f64 {
        let (a, g, l) = (self.alpha, self.gamma, self.looks);
        l * l.ln() + ln_gamma_unchecked(l - a) - a * g.ln() - ln_gamma_unchecked(-a) - ln_gamma_unchecked(l)
    }

    /// A log-density evaluator with the normalizing constant cached.
    pub fn density(&self) -> G0Density {
        G0Density {
            log_norm: self.log_norm(),
            alpha: self.alpha,
            gamma: self.gamma,
            looks: self.looks,
        }
    }

    /// The mean μ = −γ/(1+α), or +∞ when α ≥ −1.
    pub fn mean(&self) -> f64 {
        mu_from_params(self)
    }
}

/// Log-density of one G⁰ law, ready for repeated evaluation.
#[derive(Debug, Clone, Copy)]
pub struct G0Density {
    log_norm: f64,
    alpha: f64,
    gamma: f64,
    looks: f64,
}

impl G0Density {
    /// log f(z); −∞ for z ≤ 0.
    #[inline]
    pub fn ln_pdf(&self, z: f64) -> f64 {
        if !(z > 0.0) {
            return f64::NEG_INFINITY;
        }
        self.log_norm + (self.looks - 1.0) * z.ln() + (self.alpha - self.looks) * (self.gamma + self.looks * z).ln()
    }
}

/// log f_Z(z; α, γ, L).
pub fn g0_log_pdf(z: f64, p: &G0Params) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("density support is z > 0, got {z}")));
    }
    Ok(p.density().ln_pdf(z))
}

/// E[Z^r] = (γ/L)^r Γ(−α−r)/Γ(−α) · Γ(L+r)/Γ(L) when α < −r, +∞ otherwise.
pub fn g0_moment(r: f64, p: &G0Params) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("moment order must be positive, got {r}")));
    }
    let (a, g, l) = (p.alpha, p.gamma, p.looks);
    if !(-r > a) {
        return Ok(f64::INFINITY);
    }
    let log_m = r * (g / l).ln() + ln_gamma_unchecked(-a - r) - ln_gamma_unchecked(-a) + ln_gamma_unchecked(l + r)
        - ln_gamma_unchecked(l);
    Ok(log_m.exp())
}

/// The mean μ = −γ/(1+α); +∞ when α ≥ −1. Independent of L.
pub fn mu_from_params(p: &G0Params) -> f64 {
    if p.alpha < -1.0 {
        -p.gamma / (1.0 + p.alpha)
    } else {
        f64::INFINITY
    }
}

/// The scale γ = −μ(1+α) giving mean μ at roughness α.
pub fn gamma_from_mean(alpha: f64, mu: f64) -> Result<f64> {
    if !(alpha < -1.0) {
        return Err(Error::Domain(format!("the mean exists only for alpha < -1, got {alpha}")));
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Domain(format!("mean must be positive, got {mu}")));
    }
    Ok(-mu * (1.0 + alpha))
}

/// Intensity observations sharing a known number of looks.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    looks: f64,
}

impl Sample {
    /// Validates positivity and finiteness of every observation.
    pub fn new(values: Vec<f64>, looks: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("sample is empty".into()));
        }
        if !(looks >= 1.0) || !looks.is_finite() {
            return Err(Error::Domain(format!("looks must be >= 1, got {looks}")));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("observation {i} is not a positive finite value: {v}")));
        }
        Ok(Self { values, looks })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn looks(&self) -> f64 {
        self.looks
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn median(&self) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    /// Every observation multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * c).collect(), self.looks)
    }
}

/// Draws `n` G⁰ variates from `rng` as Y / W with W ~ Γ(−α, rate γ) and
/// Y ~ Γ(L, rate L); 1/W is the reciprocal-gamma backscatter.
pub fn draw_g0<R: Rng + ?Sized>(p: &G0Params, n: usize, rng: &mut R) -> Vec<f64> {
    // Shape and scale are validated by G0Params, so construction cannot fail.
    let backscatter_inv = Gamma::new(-p.alpha, 1.0 / p.gamma).expect("valid gamma law");
    let speckle = Gamma::new(p.looks, 1.0 / p.looks).expect("valid gamma law");
    (0..n)
        .map(|_| {
            let w: f64 = backscatter_inv.sample(rng);
            let y: f64 = speckle.sample(rng);
            let z = y / w;
            if z > 0.0 && z.is_finite() {
                z
            } else {
                // Underflow of y or overflow of 1/w: clamp into the representable range.
                z.clamp(f64::MIN_POSITIVE, f64::MAX)
            }
        })
        .collect()
}

/// A reproducible G⁰ sample of size `n` driven by a ChaCha8 stream keyed on `seed`.
pub fn sample_g0(p: &G0Params, n: usize, seed: u64) -> Result<Sample> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Sample::new(draw_g0(p, n, &mut rng), p.looks)
}
