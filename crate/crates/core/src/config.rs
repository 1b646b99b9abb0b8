//! Hyperparameters as a flat TOML table. Every key is optional; missing keys
//! take the defaults below and unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::categorical_flow::TypeScheduler;
use crate::denoiser::KnnWeights;
use crate::error::{Error, Result};
use crate::gaussian_flow::{Normalizer, PosScheduler, DEFAULT_SIGMA1_SQ};
use crate::gmm_flow::{AngleResidual, AngleScheduler, ObservationWrap, DEFAULT_RHO0, DEFAULT_RHO1};
use crate::matrix_fisher::LambdaSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Discretization used by the training loss.
    pub n_train: usize,
    /// Discretization used by sampling.
    pub n_sample: usize,
    pub rho0: f64,
    pub rho1: f64,
    pub sigma1_sq: f64,
    pub beta1: f64,
    pub lambda_scale: f64,
    pub lambda_rate: f64,
    pub w_pos: f64,
    pub w_ori: f64,
    pub w_type: f64,
    pub w_ang: f64,
    pub seed: u64,
    /// Sender draws averaged by the type loss.
    pub type_loss_draws: usize,
    pub angle_wrap: ObservationWrap,
    pub angle_residual: AngleResidual,
    /// Å per normalized coordinate unit.
    pub coord_scale: f64,
    pub knn_pos: f64,
    pub knn_rot: f64,
    pub knn_ang: f64,
    pub knn_type: f64,
    /// Noise scale of the noisy oracle.
    pub noise_eps: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            n_train: 1000,
            n_sample: 100,
            rho0: DEFAULT_RHO0,
            rho1: DEFAULT_RHO1,
            sigma1_sq: DEFAULT_SIGMA1_SQ,
            beta1: TypeScheduler::DEFAULT_BETA1,
            lambda_scale: 10.0,
            lambda_rate: 2.0,
            w_pos: 1.0,
            w_ori: 0.1,
            w_type: 1.0,
            w_ang: 1.0,
            seed: 0,
            type_loss_draws: 8,
            angle_wrap: ObservationWrap::Canonical,
            angle_residual: AngleResidual::Raw,
            coord_scale: Normalizer::DEFAULT_SCALE,
            knn_pos: 1.0,
            knn_rot: 1.0,
            knn_ang: 1.0,
            knn_type: 1.0,
            noise_eps: 0.05,
        }
    }
}

/// Weights of the four loss terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub pos: f64,
    pub ori: f64,
    pub ty: f64,
    pub ang: f64,
}

impl LossWeights {
    pub fn new(pos: f64, ori: f64, ty: f64, ang: f64) -> Result<Self> {
        if [pos, ori, ty, ang].iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Config(format!(
                "loss weights must be non-negative, got ({pos}, {ori}, {ty}, {ang})"
            )));
        }
        Ok(LossWeights { pos, ori, ty, ang })
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            pos: 1.0,
            ori: 0.1,
            ty: 1.0,
            ang: 1.0,
        }
    }
}

fn cfg_err(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::Config(m),
        other => other,
    }
}

impl EngineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: EngineConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// Checks every derived scheduler for both discretizations.
    pub fn validate(&self) -> Result<()> {
        for n in [self.n_train, self.n_sample] {
            self.angle_scheduler(n)?;
            self.pos_scheduler(n)?;
            self.type_scheduler(n)?;
        }
        self.lambda_schedule()?;
        self.loss_weights()?;
        if self.type_loss_draws == 0 {
            return Err(Error::Config("type_loss_draws must be at least 1".into()));
        }
        Normalizer::new(Default::default(), self.coord_scale).map_err(cfg_err)?;
        let knn = [self.knn_pos, self.knn_rot, self.knn_ang, self.knn_type, self.noise_eps];
        if knn.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Config(
                "nearest-neighbour weights and noise_eps must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn angle_scheduler(&self, n: usize) -> Result<AngleScheduler> {
        AngleScheduler::new(self.rho0, self.rho1, n).map_err(cfg_err)
    }

    pub fn pos_scheduler(&self, n: usize) -> Result<PosScheduler> {
        if !(self.sigma1_sq > 0.0) {
            return Err(Error::Config(format!(
                "sigma1_sq must be positive, got {}",
                self.sigma1_sq
            )));
        }
        PosScheduler::new(self.sigma1_sq.sqrt(), n).map_err(cfg_err)
    }

    pub fn type_scheduler(&self, n: usize) -> Result<TypeScheduler> {
        TypeScheduler::new(self.beta1, n).map_err(cfg_err)
    }

    pub fn lambda_schedule(&self) -> Result<LambdaSchedule> {
        LambdaSchedule::new(self.lambda_scale, self.lambda_rate).map_err(cfg_err)
    }

    pub fn loss_weights(&self) -> Result<LossWeights> {
        LossWeights::new(self.w_pos, self.w_ori, self.w_type, self.w_ang)
    }

    pub fn knn_weights(&self) -> KnnWeights {
        KnnWeights {
            pos: self.knn_pos,
            rot: self.knn_rot,
            ang: self.knn_ang,
            ty: self.knn_type,
        }
    }
}
