//! Isotropic Matrix Fisher distribution on SO(3) and the orientation flow.
//!
//! The density of `M(mode·λ)` is proportional to `exp(λ·tr(modeᵀR))`.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{exp_so3, quaternion_to_rotation, uniform_quaternion, AxisAngleVector, Rotation, Vec3};

/// Concentrations up to this value use exact rejection sampling.
pub const REJECTION_MAX_LAMBDA: f64 = 26.0;
/// Candidates drawn per rejection round.
pub const REJECTION_BATCH: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoMatrixFisher {
    mode: Rotation,
    lambda: f64,
}

impl IsoMatrixFisher {
    pub fn new(mode: Rotation, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "concentration must be finite and non-negative, got {lambda}"
            )));
        }
        Ok(IsoMatrixFisher { mode, lambda })
    }

    pub fn mode(&self) -> &Rotation {
        &self.mode
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn log_unnormalized_density(&self, r: &Rotation) -> f64 {
        self.lambda * (self.mode.transpose() * *r).trace()
    }

    /// Hybrid sampler: exact rejection from the uniform distribution for
    /// `λ ≤ 26`, tangent-space Gaussian with `σ = 1/√(2λ)` above.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Rotation> {
        let centered = if self.lambda <= REJECTION_MAX_LAMBDA {
            sample_rejection(self.lambda, n, rng)
        } else {
            sample_tangent_gaussian(self.lambda, n, rng)
        };
        centered.into_iter().map(|q| self.mode * q).collect()
    }
}

/// Exact samples of `M(λI)` by rejection from Haar measure, accepting with
/// probability `exp(λ·tr R) / exp(3λ)`.
pub fn sample_rejection<R: Rng + ?Sized>(lambda: f64, n: usize, rng: &mut R) -> Vec<Rotation> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        for _ in 0..REJECTION_BATCH {
            let q = uniform_quaternion(rng);
            // tr R = 4w² − 1
            let log_accept = lambda * (4.0 * q[0] * q[0] - 4.0);
            let u: f64 = rng.random();
            if u.ln() < log_accept {
                out.push(quaternion_to_rotation(q));
            }
        }
    }
    out.truncate(n);
    out
}

/// Approximate samples of `M(λI)`: `exp(ω)` with `ω ~ N(0, I/(2λ))`.
pub fn sample_tangent_gaussian<R: Rng + ?Sized>(lambda: f64, n: usize, rng: &mut R) -> Vec<Rotation> {
    let sigma = 1.0 / (2.0 * lambda).sqrt();
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    (0..n)
        .map(|_| {
            let w = Vec3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng));
            exp_so3(&AxisAngleVector(w))
        })
        .collect()
}

/// Closed approximation of the first-moment coefficient, `E[Q] = a(λ)·I`.
pub fn a_lambda(lambda: f64) -> f64 {
    1.0 - 1.0 / (2.0 * lambda + 1.0)
}

/// First-moment coefficient by quadrature over the rotation angle.
///
/// Under `M(λI)` the angle has density `∝ (1 − cos θ)·exp(2λ(cos θ − 1))` on
/// `[0, π]` and `tr Q = 1 + 2 cos θ`.
pub fn a_lambda_quadrature(lambda: f64) -> f64 {
    let n = 40_000; // even, composite Simpson
    let h = std::f64::consts::PI / n as f64;
    let (mut z, mut m) = (0.0, 0.0);
    for i in 0..=n {
        let t = i as f64 * h;
        let c = t.cos();
        let w = (1.0 - c) * (2.0 * lambda * (c - 1.0)).exp();
        let coef = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        z += coef * w;
        m += coef * w * (1.0 + 2.0 * c);
    }
    if z == 0.0 {
        return 1.0;
    }
    m / z / 3.0
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        McEstimate {
            mean,
            std_err: (var / n).sqrt(),
            samples: values.len(),
        }
    }
}

const MC_CHUNK: usize = 8192;

/// `(1/3)·tr(E[Q])` estimated from `n` draws of the hybrid sampler.
///
/// Work is split into fixed chunks, each seeded from `(seed, chunk)`, so the
/// estimate does not depend on the number of worker threads.
pub fn a_lambda_mc(lambda: f64, n: usize, seed: u64) -> McEstimate {
    let mf =
        IsoMatrixFisher::new(Rotation::identity(), lambda).expect("a_lambda_mc requires a non-negative concentration");
    let chunks = n.div_ceil(MC_CHUNK);
    let values: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = MC_CHUNK.min(n - c * MC_CHUNK);
            mf.sample(len, &mut rng).into_iter().map(|r| r.trace() / 3.0)
        })
        .collect();
    McEstimate::from_values(&values)
}

/// Closed-form `KL(M(r1·λ) ‖ M(r2·λ)) = λ·a(λ)·(3 − tr(r1ᵀr2))` using the
/// approximate `a(λ)`.
pub fn kl_isotropic(lambda: f64, r1: &Rotation, r2: &Rotation) -> f64 {
    kl_isotropic_with_moment(lambda, a_lambda(lambda), r1, r2)
}

/// Same closed form with a caller-supplied first-moment coefficient.
pub fn kl_isotropic_with_moment(lambda: f64, a: f64, r1: &Rotation, r2: &Rotation) -> f64 {
    // 3 − tr(R1ᵀR2) = ½‖R1 − R2‖²_F for rotations; exact zero when equal
    let gap = 0.5 * (r1.matrix() - r2.matrix()).norm_squared();
    lambda * a * gap
}

/// Natural parameter of a general Matrix Fisher distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixFisherParam(pub Matrix3<f64>);

impl MatrixFisherParam {
    pub fn zeros() -> Self {
        MatrixFisherParam(Matrix3::zeros())
    }

    /// `tr(θᵀO)`.
    pub fn log_unnormalized_density(&self, o: &Rotation) -> f64 {
        (self.0.transpose() * o.matrix()).trace()
    }

    /// Posterior parameter after observing `y` with concentration `λ`:
    /// `θ_b = θ_a + λ·y`.
    pub fn conjugate_update(&self, y: &Rotation, lambda: f64) -> Self {
        MatrixFisherParam(self.0 + y.matrix() * lambda)
    }
}

pub fn conjugate_update(prior: &MatrixFisherParam, y: &Rotation, lambda: f64) -> MatrixFisherParam {
    prior.conjugate_update(y, lambda)
}

/// Orientation concentration schedule `λ(t) = scale·(e^{rate·t} − 1)/(e^{rate} − 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSchedule {
    pub scale: f64,
    pub rate: f64,
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        LambdaSchedule { scale: 10.0, rate: 2.0 }
    }
}

impl LambdaSchedule {
    pub fn new(scale: f64, rate: f64) -> Result<Self> {
        if !(scale > 0.0 && rate > 0.0 && scale.is_finite() && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda schedule needs positive scale and rate, got ({scale}, {rate})"
            )));
        }
        Ok(LambdaSchedule { scale, rate })
    }

    pub fn at(&self, t: f64) -> f64 {
        if t >= 1.0 {
            return self.scale;
        }
        self.scale * (self.rate * t).exp_m1() / self.rate.exp_m1()
    }

    /// Draw `T ~ M(o_true·λ(t)²)`.
    pub fn flow_sample<R: Rng + ?Sized>(&self, o_true: &Rotation, t: f64, rng: &mut R) -> Rotation {
        let l = self.at(t);
        IsoMatrixFisher::new(*o_true, l * l)
            .expect("schedule yields non-negative concentration")
            .sample(1, rng)[0]
    }
}

/// `λ(t)` under the default schedule.
pub fn lambda_schedule(t: f64) -> f64 {
    LambdaSchedule::default().at(t)
}

/// Orientation flow draw under the default schedule.
pub fn flow_sample<R: Rng + ?Sized>(o_true: &Rotation, t: f64, rng: &mut R) -> Rotation {
    LambdaSchedule::default().flow_sample(o_true, t, rng)
}

/// Discrete-time orientation loss `n·λ·a(λ)·(3 − tr(ÔᵀO))`.
pub fn rotation_loss(o_hat: &Rotation, o_true: &Rotation, lambda: f64, n: usize) -> f64 {
    n as f64 * kl_isotropic(lambda, o_hat, o_true)
}
