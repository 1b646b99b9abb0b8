//! Gaussian-mixture Bayesian flow for periodic torsion angles.
//!
//! The input distribution over one angle is a K-component Gaussian mixture.
//! A Gaussian observation keeps the mixture form: every component absorbs the
//! observation with its own precision-weighted mean, and the weights are
//! reweighted by each component's marginal likelihood of the observation.
//!
//! [`GmmParams::posterior_update`] is the exact update on the real line.
//! How a periodic observation is placed on the line before that update is
//! chosen by [`ObservationWrap`].

use std::f64::consts::{E, PI, TAU};
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{canonical_angle, wrapped_distance};

/// Default precision of the rotamer prior components.
pub const DEFAULT_RHO0: f64 = 0.01;
/// Default terminal precision of the angle schedule.
pub const DEFAULT_RHO1: f64 = 5.0;

const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmComponent {
    pub mu: f64,
    pub rho: f64,
    pub pi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GmmComponent>", into = "Vec<GmmComponent>")]
pub struct GmmParams {
    components: Vec<GmmComponent>,
}

impl TryFrom<Vec<GmmComponent>> for GmmParams {
    type Error = Error;

    fn try_from(v: Vec<GmmComponent>) -> Result<Self> {
        GmmParams::new(v)
    }
}

impl From<GmmParams> for Vec<GmmComponent> {
    fn from(g: GmmParams) -> Self {
        g.components
    }
}

fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((x - mean).powi(2) / var + (TAU * var).ln())
}

impl GmmParams {
    pub fn new(components: Vec<GmmComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("mixture needs at least one component".into()));
        }
        for c in &components {
            if !(c.rho > 0.0 && c.rho.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "component precision {} must be positive",
                    c.rho
                )));
            }
            if !c.mu.is_finite() {
                return Err(Error::InvalidParameter("component mean must be finite".into()));
            }
            if !(c.pi >= 0.0 && c.pi.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "component weight {} must be non-negative",
                    c.pi
                )));
            }
        }
        let total: f64 = components.iter().map(|c| c.pi).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParameter(format!("weights sum to {total}, expected 1")));
        }
        Ok(GmmParams { components })
    }

    /// Three staggered rotamer states at π/3, π and 5π/3 with equal weights.
    pub fn rotamer_prior(rho0: f64) -> Result<Self> {
        GmmParams::staggered_prior(3, rho0)
    }

    /// `k` equally weighted components at `(2j + 1)π/k`, `j = 0..k`.
    pub fn staggered_prior(k: usize, rho0: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("mixture needs at least one component".into()));
        }
        let w = 1.0 / k as f64;
        GmmParams::new(
            (0..k)
                .map(|j| GmmComponent {
                    mu: (2 * j + 1) as f64 * PI / k as f64,
                    rho: rho0,
                    pi: w,
                })
                .collect(),
        )
    }

    pub fn components(&self) -> &[GmmComponent] {
        &self.components
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.pi * log_normal_pdf(x, c.mu, 1.0 / c.rho).exp())
            .sum()
    }

    /// Weighted means `πᵏμᵏ`, one per component.
    pub fn weighted_means(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.pi * c.mu).collect()
    }

    /// Mixture mean `Σ πᵏμᵏ`.
    pub fn mean(&self) -> f64 {
        self.weighted_means().iter().sum()
    }

    /// Index of the heaviest component (first on ties).
    pub fn dominant(&self) -> usize {
        let mut best = 0;
        for (i, c) in self.components.iter().enumerate() {
            if c.pi > self.components[best].pi {
                best = i;
            }
        }
        best
    }

    /// Index of the component whose mean is circularly closest to `angle`.
    pub fn nearest_component(&self, angle: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.components.iter().enumerate() {
            let d = wrapped_distance(c.mu, angle);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Conjugate update with observation `y ~ N(χ, 1/alpha)`.
    pub fn posterior_update(&self, y: f64, alpha: f64) -> Result<GmmParams> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "observation precision {alpha} must be positive"
            )));
        }
        let log_w: Vec<f64> = self
            .components
            .iter()
            .map(|c| {
                let var = 1.0 / alpha + 1.0 / c.rho;
                if c.pi > 0.0 {
                    c.pi.ln() + log_normal_pdf(y, c.mu, var)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let unnorm: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = unnorm.iter().sum();
        let components = self
            .components
            .iter()
            .zip(&unnorm)
            .map(|(c, w)| {
                let rho = c.rho + alpha;
                GmmComponent {
                    mu: (c.rho * c.mu + alpha * y) / rho,
                    rho,
                    pi: w / total,
                }
            })
            .collect();
        Ok(GmmParams { components })
    }
}

/// Precision schedule whose entropy bound falls linearly in time:
/// `ρ_t = ρ0^{1−t}·ρ1^t`, `β(t) = ρ_t − ρ0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleScheduler {
    rho0: f64,
    rho1: f64,
    n: usize,
}

impl AngleScheduler {
    pub fn new(rho0: f64, rho1: f64, n: usize) -> Result<Self> {
        if !(rho0 > 0.0 && rho0 < rho1 && rho1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "angle schedule needs 0 < rho0 < rho1, got ({rho0}, {rho1})"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("angle schedule needs n >= 1".into()));
        }
        Ok(AngleScheduler { rho0, rho1, n })
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho_at(&self, t: f64) -> f64 {
        self.rho0.powf(1.0 - t) * self.rho1.powf(t)
    }

    pub fn beta(&self, t: f64) -> f64 {
        self.rho_at(t) - self.rho0
    }

    /// Per-step observation precision `αᵢ = β(tᵢ) − β(tᵢ₋₁)`, closed form.
    pub fn alpha_at(&self, i: usize) -> f64 {
        assert!((1..=self.n).contains(&i), "step {i} outside 1..={}", self.n);
        let f = i as f64 / self.n as f64;
        self.rho0.powf(1.0 - f) * self.rho1.powf(f) * (1.0 - (self.rho0 / self.rho1).powf(1.0 / self.n as f64))
    }
}

/// Draw a component mean from its flow distribution
/// `N((βχ + μ0ρ0)/ρ, β/ρ²)`, `ρ = ρ0 + β`.
pub fn flow_mean_sample<R: Rng + ?Sized>(chi: f64, mu0: f64, rho0: f64, beta: f64, rng: &mut R) -> f64 {
    let rho = rho0 + beta;
    let mean = (beta * chi + mu0 * rho0) / rho;
    if beta <= 0.0 {
        return mean;
    }
    let sd = beta.sqrt() / rho;
    Normal::new(mean, sd).expect("finite flow parameters").sample(rng)
}

/// How sender observations are placed on the real line before an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationWrap {
    /// Use the Gaussian draw as is.
    Raw,
    /// Map the draw into `[0, 2π)`. Means stay in `[0, 2π]` as convex
    /// combinations, but diffuse early draws pull every mean toward π.
    #[default]
    Canonical,
    /// Each component sees the image of the draw nearest its own mean and
    /// the updated means are mapped back into `[0, 2π)`. Seam-free, but
    /// draws wider than a half turn carry almost no information.
    Nearest,
}

/// Draw `y ~ N(chi, 1/alpha)` on the real line.
pub fn sender_sample<R: Rng + ?Sized>(chi: f64, alpha: f64, rng: &mut R) -> f64 {
    Normal::new(chi, 1.0 / alpha.sqrt())
        .expect("positive precision")
        .sample(rng)
}

/// Signed difference `a − b` reduced to `[−π, π)`.
fn signed_offset(a: f64, b: f64) -> f64 {
    (a - b + PI).rem_euclid(TAU) - PI
}

impl GmmParams {
    /// Bayesian update with a raw sender draw `y`, placed according to `wrap`.
    pub fn observe(&self, y: f64, alpha: f64, wrap: ObservationWrap) -> Result<GmmParams> {
        match wrap {
            ObservationWrap::Raw => self.posterior_update(y, alpha),
            ObservationWrap::Canonical => self.posterior_update(canonical_angle(y), alpha),
            ObservationWrap::Nearest => self.nearest_image_update(y, alpha),
        }
    }

    fn nearest_image_update(&self, y: f64, alpha: f64) -> Result<GmmParams> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "observation precision {alpha} must be positive"
            )));
        }
        let offsets: Vec<f64> = self.components.iter().map(|c| signed_offset(y, c.mu)).collect();
        let log_w: Vec<f64> = self
            .components
            .iter()
            .zip(&offsets)
            .map(|(c, d)| {
                if c.pi > 0.0 {
                    c.pi.ln() + log_normal_pdf(*d, 0.0, 1.0 / alpha + 1.0 / c.rho)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let unnorm: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = unnorm.iter().sum();
        let components = self
            .components
            .iter()
            .zip(offsets.iter().zip(&unnorm))
            .map(|(c, (d, w))| {
                let rho = c.rho + alpha;
                GmmComponent {
                    mu: canonical_angle(c.mu + alpha * d / rho),
                    rho,
                    pi: w / total,
                }
            })
            .collect();
        Ok(GmmParams { components })
    }
}

/// Simulated Bayesian flow: states after each of the `n` updates.
pub fn simulate_flow<R: Rng + ?Sized>(
    chi: f64,
    g0: &GmmParams,
    s: &AngleScheduler,
    wrap: ObservationWrap,
    rng: &mut R,
) -> Vec<GmmParams> {
    simulate_flow_steps(chi, g0, s, s.n(), wrap, rng)
}

/// Like [`simulate_flow`] but stops after `steps` updates.
pub fn simulate_flow_steps<R: Rng + ?Sized>(
    chi: f64,
    g0: &GmmParams,
    s: &AngleScheduler,
    steps: usize,
    wrap: ObservationWrap,
    rng: &mut R,
) -> Vec<GmmParams> {
    let mut out = Vec::with_capacity(steps);
    let mut g = g0.clone();
    for i in 1..=steps.min(s.n()) {
        let alpha = s.alpha_at(i);
        let y = sender_sample(chi, alpha, rng);
        g = g.observe(y, alpha, wrap).expect("schedule precisions are positive");
        out.push(g.clone());
    }
    out
}

/// Entropy upper bound `Σ πᵏ(−log πᵏ + ½ log(2πe/ρ))` for a mixture whose
/// components share one precision.
pub fn entropy_upper_bound(g: &GmmParams) -> Result<f64> {
    let rho = g.components[0].rho;
    if g.components.iter().any(|c| (c.rho - rho).abs() > 1e-12 * rho) {
        return Err(Error::HeterogeneousPrecision);
    }
    let gaussian = 0.5 * (2.0 * PI * E / rho).ln();
    Ok(g.components
        .iter()
        .filter(|c| c.pi > 0.0)
        .map(|c| c.pi * (-c.pi.ln() + gaussian))
        .sum())
}

/// Largest deviation of `H_u(tᵢ) = (K/2)·log(2πe/ρ_{tᵢ})` from the straight
/// line through its endpoints, over all schedule steps.
pub fn check_linear_entropy_schedule(s: &AngleScheduler, k: usize) -> f64 {
    let h = |rho: f64| 0.5 * k as f64 * (2.0 * PI * E / rho).ln();
    let h0 = h(s.rho0);
    let h1 = h(s.rho1);
    let mut rho = s.rho0;
    let mut worst = 0.0f64;
    for i in 1..=s.n {
        // accumulate the per-step precisions rather than using ρ_t directly
        rho += s.alpha_at(i);
        let t = i as f64 / s.n as f64;
        let line = h0 + t * (h1 - h0);
        worst = worst.max((h(rho) - line).abs());
    }
    worst
}

/// Residual convention for the angle loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleResidual {
    #[default]
    Raw,
    Wrapped,
}

/// `(n/2)·α·(χ − χ̂)²`.
pub fn angle_loss(chi_true: f64, chi_hat: f64, alpha: f64, n: usize, residual: AngleResidual) -> f64 {
    let d = match residual {
        AngleResidual::Raw => chi_true - chi_hat,
        AngleResidual::Wrapped => wrapped_distance(chi_true, chi_hat),
    };
    0.5 * n as f64 * alpha * d * d
}

/// Writes `step,component,mu,rho,pi` rows; step 0 is the prior.
pub fn write_trajectory_csv<W: Write>(w: W, prior: &GmmParams, steps: &[GmmParams]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["step", "component", "mu", "rho", "pi"])?;
    for (step, g) in std::iter::once(prior).chain(steps).enumerate() {
        for (k, c) in g.components().iter().enumerate() {
            wtr.write_record([
                step.to_string(),
                k.to_string(),
                c.mu.to_string(),
                c.rho.to_string(),
                c.pi.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}
