//! Euclidean Bayesian flow for residue centroids.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Terminal noise scale squared, `σ1² = 1/ρ1` with `ρ1 = 1/0.03`.
pub const DEFAULT_SIGMA1_SQ: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub mu: Vec3,
    pub rho: f64,
}

impl GaussianParams {
    /// Zero-mean, unit-precision prior.
    pub fn prior() -> Self {
        GaussianParams {
            mu: Vec3::zeros(),
            rho: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosScheduler {
    sigma1: f64,
    n: usize,
}

impl PosScheduler {
    pub fn new(sigma1: f64, n: usize) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma1 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma1 must lie in (0, 1), got {sigma1}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("position schedule needs n >= 1".into()));
        }
        Ok(PosScheduler { sigma1, n })
    }

    pub fn with_default_sigma(n: usize) -> Result<Self> {
        PosScheduler::new(DEFAULT_SIGMA1_SQ.sqrt(), n)
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `γ(t) = 1 − σ1^{2t}`.
    pub fn gamma(&self, t: f64) -> f64 {
        1.0 - self.sigma1.powf(2.0 * t)
    }

    /// `αᵢ = σ1^{−2i/n}(1 − σ1^{2/n})`.
    pub fn alpha_at(&self, i: usize) -> f64 {
        assert!((1..=self.n).contains(&i), "step {i} outside 1..={}", self.n);
        let n = self.n as f64;
        self.sigma1.powf(-2.0 * i as f64 / n) * (1.0 - self.sigma1.powf(2.0 / n))
    }

    /// `μ ~ N(γ(t)·x, γ(t)(1 − γ(t))·I)`; precision `1/(1 − γ(t))`.
    pub fn flow_sample<R: Rng + ?Sized>(&self, x_true: &Vec3, t: f64, rng: &mut R) -> GaussianParams {
        let g = self.gamma(t);
        let sd = (g * (1.0 - g)).max(0.0).sqrt();
        let noise = Vec3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        GaussianParams {
            mu: x_true * g + noise * sd,
            rho: 1.0 / (1.0 - g),
        }
    }
}

/// `(n/2)·α·‖x − x̂‖²`.
pub fn pos_loss(x_true: &Vec3, x_hat: &Vec3, alpha_pos: f64, n: usize) -> f64 {
    0.5 * n as f64 * alpha_pos * (x_true - x_hat).norm_squared()
}

/// Centering and scaling applied to coordinates before they enter the flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub center: Vec3,
    pub scale: f64,
}

impl Normalizer {
    pub const DEFAULT_SCALE: f64 = 10.0;

    pub fn new(center: Vec3, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coordinate scale must be positive, got {scale}"
            )));
        }
        Ok(Normalizer { center, scale })
    }

    /// Centers on the mean of `points`; identity centering when empty.
    pub fn centered_on(points: &[Vec3], scale: f64) -> Result<Self> {
        let center = if points.is_empty() {
            Vec3::zeros()
        } else {
            points.iter().sum::<Vec3>() / points.len() as f64
        };
        Normalizer::new(center, scale)
    }

    pub fn forward(&self, x: &Vec3) -> Vec3 {
        (x - self.center) / self.scale
    }

    pub fn inverse(&self, x: &Vec3) -> Vec3 {
        x * self.scale + self.center
    }
}
