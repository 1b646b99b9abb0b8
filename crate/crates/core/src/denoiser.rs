//! Predictor interface and reference predictors.
//!
//! The engine only sees [`Denoiser::predict`]. Positions exchanged with a
//! predictor are in normalized flow coordinates (see
//! [`crate::gaussian_flow::Normalizer`]).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::categorical_flow::{SimplexParams, NUM_TYPES};
use crate::error::{Error, Result};
use crate::gaussian_flow::{GaussianParams, Normalizer};
use crate::geometry::{canonical_angle, exp_so3, wrapped_distance, AxisAngleVector, Rotation, Vec3};
use crate::gmm_flow::GmmParams;
use crate::ingest::{ResidueFrame, ANGLE_SLOTS};

/// Input-distribution parameters of one residue.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueState {
    pub pos: GaussianParams,
    pub t_rot: Rotation,
    pub types: SimplexParams,
    /// One mixture per angle slot (ψ, χ1..χ4).
    pub angles: Vec<GmmParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub residues: Vec<ResidueState>,
    pub t: f64,
}

impl FlowState {
    /// Checks the structural invariants every state must satisfy.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.t) {
            return Err(Error::InvalidParameter(format!("state time {} outside [0, 1]", self.t)));
        }
        for (i, r) in self.residues.iter().enumerate() {
            if r.angles.len() != ANGLE_SLOTS {
                return Err(Error::InvalidParameter(format!(
                    "residue {i}: {} angle slots",
                    r.angles.len()
                )));
            }
            if !(r.pos.rho > 0.0) || r.pos.mu.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "residue {i}: invalid position parameters"
                )));
            }
            if !r.t_rot.is_valid(1e-9) {
                return Err(Error::InvalidParameter(format!("residue {i}: invalid rotation")));
            }
            SimplexParams::new(r.types.probs().to_vec())?;
            for g in &r.angles {
                GmmParams::new(g.components().to_vec())?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResiduePrediction {
    pub x_hat: Vec3,
    pub o_hat: Rotation,
    pub c_hat: SimplexParams,
    pub chi_hat: [Option<f64>; ANGLE_SLOTS],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeptidePrediction {
    pub residues: Vec<ResiduePrediction>,
}

impl PeptidePrediction {
    /// Ground truth in flow coordinates: normalized positions, one-hot types.
    pub fn from_frames(frames: &[ResidueFrame], nz: &Normalizer) -> Result<Self> {
        let residues = frames
            .iter()
            .map(|f| {
                Ok(ResiduePrediction {
                    x_hat: nz.forward(&f.x),
                    o_hat: f.o,
                    c_hat: SimplexParams::one_hot(f.c, NUM_TYPES)?,
                    chi_hat: f.chi,
                })
            })
            .collect::<Result<_>>()?;
        Ok(PeptidePrediction { residues })
    }

    /// Back to frames in Å. Types are read out by argmax; chain ids and
    /// residue numbers come from `template` when given, else chain "A"
    /// numbered from 1.
    pub fn to_frames(&self, nz: &Normalizer, template: Option<&[ResidueFrame]>) -> Vec<ResidueFrame> {
        self.residues
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let (chain, resnum) = match template.and_then(|t| t.get(i)) {
                    Some(f) => (f.chain.clone(), f.resnum),
                    None => ("A".to_string(), i as i32 + 1),
                };
                ResidueFrame {
                    x: nz.inverse(&r.x_hat),
                    o: r.o_hat,
                    chi: r.chi_hat.map(|a| a.map(canonical_angle)),
                    c: r.c_hat.argmax(),
                    chain,
                    resnum,
                }
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

/// Conditioning information (the binding pocket).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Context {
    pub frames: Vec<ResidueFrame>,
}

impl Context {
    pub fn none() -> Self {
        Context::default()
    }
}

/// A predictor of clean data from the current input parameters. Must be a
/// pure function of its arguments and safe to call from several threads.
pub trait Denoiser: Sync {
    fn predict(&self, state: &FlowState, ctx: &Context, t: f64) -> Result<PeptidePrediction>;
}

fn check_len(state: &FlowState, prediction: usize) -> Result<()> {
    if state.residues.len() != prediction {
        return Err(Error::ResidueCountMismatch {
            state: state.residues.len(),
            prediction,
        });
    }
    Ok(())
}

/// Always returns the fixed target.
#[derive(Debug, Clone)]
pub struct OracleDenoiser {
    target: PeptidePrediction,
}

impl OracleDenoiser {
    pub fn new(target: PeptidePrediction) -> Self {
        OracleDenoiser { target }
    }

    pub fn target(&self) -> &PeptidePrediction {
        &self.target
    }
}

impl Denoiser for OracleDenoiser {
    fn predict(&self, state: &FlowState, _ctx: &Context, _t: f64) -> Result<PeptidePrediction> {
        check_len(state, self.target.len())?;
        Ok(self.target.clone())
    }
}

/// The target with fresh noise on every call: isotropic Gaussian on
/// positions and angles, a tangent-space Gaussian on rotations, each with
/// standard deviation `eps`. Types are passed through unchanged. The noise
/// stream is derived from `(seed, t)` so repeated calls agree.
#[derive(Debug, Clone)]
pub struct NoisyOracle {
    target: PeptidePrediction,
    eps: f64,
    seed: u64,
}

impl NoisyOracle {
    pub fn new(target: PeptidePrediction, eps: f64, seed: u64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise scale must be non-negative, got {eps}"
            )));
        }
        Ok(NoisyOracle { target, eps, seed })
    }
}

impl Denoiser for NoisyOracle {
    fn predict(&self, state: &FlowState, _ctx: &Context, t: f64) -> Result<PeptidePrediction> {
        check_len(state, self.target.len())?;
        if self.eps == 0.0 {
            return Ok(self.target.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t.to_bits());
        let normal3 = |rng: &mut ChaCha8Rng| {
            Vec3::new(
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            )
        };
        let residues = self
            .target
            .residues
            .iter()
            .map(|r| {
                let x_hat = r.x_hat + normal3(&mut rng) * self.eps;
                let o_hat = r.o_hat * exp_so3(&AxisAngleVector(normal3(&mut rng) * self.eps));
                let chi_hat = r.chi_hat.map(|a| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    a.map(|v| canonical_angle(v + self.eps * z))
                });
                ResiduePrediction {
                    x_hat,
                    o_hat,
                    c_hat: r.c_hat.clone(),
                    chi_hat,
                }
            })
            .collect();
        Ok(PeptidePrediction { residues })
    }
}

/// Per-term weights of the nearest-neighbour distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnWeights {
    pub pos: f64,
    pub rot: f64,
    pub ang: f64,
    pub ty: f64,
}

impl Default for KnnWeights {
    fn default() -> Self {
        KnnWeights {
            pos: 1.0,
            rot: 1.0,
            ang: 1.0,
            ty: 1.0,
        }
    }
}

/// Returns the stored peptide closest to the current state.
///
/// The distance sums over residues:
/// `w_pos·|μ − x| + w_rot·geodesic(T, o) + w_ang·Σ_slots wrapped(Σπμ, χ) + w_ty·TV(θ, c)`,
/// where angle slots absent from the stored peptide are skipped. Items whose
/// length differs from the state are never returned. Ties go to the earlier
/// item.
#[derive(Debug, Clone)]
pub struct NearestNeighborDenoiser {
    items: Vec<PeptidePrediction>,
    weights: KnnWeights,
}

impl NearestNeighborDenoiser {
    pub fn fit(items: Vec<PeptidePrediction>, weights: KnnWeights) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Empty("nearest-neighbour dataset"));
        }
        Ok(NearestNeighborDenoiser { items, weights })
    }

    pub fn items(&self) -> &[PeptidePrediction] {
        &self.items
    }

    pub fn distance(&self, state: &FlowState, item: &PeptidePrediction) -> f64 {
        let w = &self.weights;
        state
            .residues
            .iter()
            .zip(&item.residues)
            .map(|(s, d)| {
                let ang: f64 = s
                    .angles
                    .iter()
                    .zip(&d.chi_hat)
                    .filter_map(|(g, chi)| chi.map(|c| wrapped_distance(g.mean(), c)))
                    .sum();
                w.pos * (s.pos.mu - d.x_hat).norm()
                    + w.rot * s.t_rot.geodesic(&d.o_hat)
                    + w.ang * ang
                    + w.ty * s.types.total_variation(&d.c_hat)
            })
            .sum()
    }
}

impl Denoiser for NearestNeighborDenoiser {
    fn predict(&self, state: &FlowState, _ctx: &Context, _t: f64) -> Result<PeptidePrediction> {
        let mut best: Option<(f64, &PeptidePrediction)> = None;
        for item in self.items.iter().filter(|it| it.len() == state.residues.len()) {
            let d = self.distance(state, item);
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, item));
            }
        }
        match best {
            Some((_, item)) => Ok(item.clone()),
            None => Err(Error::ResidueCountMismatch {
                state: state.residues.len(),
                prediction: self.items[0].len(),
            }),
        }
    }
}
