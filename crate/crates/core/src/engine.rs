//! Joint discrete-time loss and the sampling loop.
//!
//! Time conventions: step `i` runs from `t_{i−1} = (i−1)/n` to `t_i = i/n`.
//! The loss draws the flow state at `t_{i−1}` and scores the prediction with
//! the step-`i` accuracies; sampling calls the predictor at `t_{i−1}` and
//! moves the state to `t_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::categorical_flow::{flow_sample_probs, type_loss, SimplexParams, NUM_TYPES};
use crate::config::EngineConfig;
use crate::denoiser::{Context, Denoiser, FlowState, PeptidePrediction, ResidueState};
use crate::error::{Error, Result};
use crate::gaussian_flow::{pos_loss, GaussianParams};
use crate::geometry::sample_uniform_so3;
use crate::gmm_flow::{angle_loss, sender_sample, simulate_flow_steps, GmmParams};
use crate::ingest::ANGLE_SLOTS;
use crate::matrix_fisher::rotation_loss;

/// Per-modality loss terms (unweighted) and the weighted total, summed over
/// residues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// The sampled step `i` in `1..=n`.
    pub step: usize,
    pub pos: f64,
    pub ori: f64,
    pub ty: f64,
    pub ang: f64,
    pub total: f64,
}

fn check_count(state: usize, prediction: &PeptidePrediction) -> Result<()> {
    if prediction.len() != state {
        return Err(Error::ResidueCountMismatch {
            state,
            prediction: prediction.len(),
        });
    }
    Ok(())
}

fn rotamer_prior(cfg: &EngineConfig) -> Result<GmmParams> {
    GmmParams::rotamer_prior(cfg.rho0)
}

/// Flow state at `t_{i−1}` for a clean target, drawn from each modality's
/// flow distribution. Angle mixtures have no closed-form flow, so they are
/// simulated for `i − 1` sender updates. Absent angle slots keep the prior.
pub fn flow_state_for_step<R: Rng + ?Sized>(
    target: &PeptidePrediction,
    i: usize,
    cfg: &EngineConfig,
    rng: &mut R,
) -> Result<FlowState> {
    let n = cfg.n_train;
    if !(1..=n).contains(&i) {
        return Err(Error::InvalidParameter(format!("step {i} outside 1..={n}")));
    }
    let t = (i - 1) as f64 / n as f64;
    let pos_s = cfg.pos_scheduler(n)?;
    let lam = cfg.lambda_schedule()?;
    let type_s = cfg.type_scheduler(n)?;
    let ang_s = cfg.angle_scheduler(n)?;
    let prior = rotamer_prior(cfg)?;
    let residues = target
        .residues
        .iter()
        .map(|r| {
            let angles = r
                .chi_hat
                .iter()
                .map(|chi| match chi {
                    Some(c) => simulate_flow_steps(*c, &prior, &ang_s, i - 1, cfg.angle_wrap, rng)
                        .pop()
                        .unwrap_or_else(|| prior.clone()),
                    None => prior.clone(),
                })
                .collect();
            ResidueState {
                pos: pos_s.flow_sample(&r.x_hat, t, rng),
                t_rot: lam.flow_sample(&r.o_hat, t, rng),
                types: flow_sample_probs(&r.c_hat, type_s.beta(t), rng),
                angles,
            }
        })
        .collect();
    Ok(FlowState { residues, t })
}

/// Loss for a uniformly drawn step `i ~ U{1..n}`.
pub fn discrete_time_loss<R: Rng + ?Sized>(
    target: &PeptidePrediction,
    ctx: &Context,
    predictor: &dyn Denoiser,
    cfg: &EngineConfig,
    rng: &mut R,
) -> Result<LossBreakdown> {
    let i = rng.random_range(1..=cfg.n_train);
    discrete_time_loss_at(target, ctx, predictor, cfg, i, rng)
}

/// Loss at a fixed step `i`. The target's types are read by argmax; angle
/// slots absent from the target contribute nothing, and a prediction that
/// omits a slot the target has is an error.
pub fn discrete_time_loss_at<R: Rng + ?Sized>(
    target: &PeptidePrediction,
    ctx: &Context,
    predictor: &dyn Denoiser,
    cfg: &EngineConfig,
    i: usize,
    rng: &mut R,
) -> Result<LossBreakdown> {
    let n = cfg.n_train;
    let weights = cfg.loss_weights()?;
    let state = flow_state_for_step(target, i, cfg, rng)?;
    let pred = predictor.predict(&state, ctx, state.t)?;
    check_count(target.len(), &pred)?;

    let alpha_pos = cfg.pos_scheduler(n)?.alpha_at(i);
    let lambda_i = cfg.lambda_schedule()?.at(i as f64 / n as f64);
    let alpha_type = cfg.type_scheduler(n)?.alpha_at(i);
    let alpha_ang = cfg.angle_scheduler(n)?.alpha_at(i);

    let (mut pos, mut ori, mut ty, mut ang) = (0.0, 0.0, 0.0, 0.0);
    for (k, (truth, p)) in target.residues.iter().zip(&pred.residues).enumerate() {
        pos += pos_loss(&truth.x_hat, &p.x_hat, alpha_pos, n);
        ori += rotation_loss(&p.o_hat, &truth.o_hat, lambda_i, n);
        ty += type_loss(truth.c_hat.argmax(), &p.c_hat, alpha_type, n, cfg.type_loss_draws, rng)?;
        for slot in 0..ANGLE_SLOTS {
            if let Some(chi) = truth.chi_hat[slot] {
                let chi_hat = p.chi_hat[slot].ok_or_else(|| {
                    Error::InvalidParameter(format!("prediction for residue {k} lacks angle slot {slot}"))
                })?;
                ang += angle_loss(chi, chi_hat, alpha_ang, n, cfg.angle_residual);
            }
        }
    }
    Ok(LossBreakdown {
        step: i,
        pos,
        ori,
        ty,
        ang,
        total: weights.pos * pos + weights.ori * ori + weights.ty * ty + weights.ang * ang,
    })
}

/// Generated peptide (in flow coordinates) and every state `θ_0..θ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutput {
    pub prediction: PeptidePrediction,
    pub trajectory: Vec<FlowState>,
}

/// Prior state: zero-mean unit-precision positions, uniform orientations,
/// uniform types and the rotamer mixture on every angle slot.
pub fn prior_state<R: Rng + ?Sized>(n_res: usize, cfg: &EngineConfig, rng: &mut R) -> Result<FlowState> {
    let prior = rotamer_prior(cfg)?;
    let residues = (0..n_res)
        .map(|_| ResidueState {
            pos: GaussianParams::prior(),
            t_rot: sample_uniform_so3(rng),
            types: SimplexParams::uniform(NUM_TYPES),
            angles: vec![prior.clone(); ANGLE_SLOTS],
        })
        .collect();
    Ok(FlowState { residues, t: 0.0 })
}

/// Generates one peptide of `n_res` residues in `cfg.n_sample` steps.
///
/// Angle mixtures take a conjugate update with `y ~ N(χ̂, 1/αᵢ)`; slots the
/// predictor leaves empty are not updated. Positions, orientations and types
/// are redrawn from their flow distributions at `tᵢ` around the prediction.
/// The result is one more predictor call on the final state.
pub fn sample<R: Rng + ?Sized>(
    ctx: &Context,
    n_res: usize,
    predictor: &dyn Denoiser,
    cfg: &EngineConfig,
    rng: &mut R,
) -> Result<SampleOutput> {
    if n_res == 0 {
        return Err(Error::InvalidParameter("residue count must be at least 1".into()));
    }
    let n = cfg.n_sample;
    let pos_s = cfg.pos_scheduler(n)?;
    let lam = cfg.lambda_schedule()?;
    let type_s = cfg.type_scheduler(n)?;
    let ang_s = cfg.angle_scheduler(n)?;

    let mut state = prior_state(n_res, cfg, rng)?;
    let mut trajectory = Vec::with_capacity(n + 1);
    trajectory.push(state.clone());
    for i in 1..=n {
        let t_prev = (i - 1) as f64 / n as f64;
        let t = i as f64 / n as f64;
        let pred = predictor.predict(&state, ctx, t_prev)?;
        check_count(n_res, &pred)?;
        let alpha = ang_s.alpha_at(i);
        let residues = state
            .residues
            .iter()
            .zip(&pred.residues)
            .map(|(s, p)| {
                let angles = s
                    .angles
                    .iter()
                    .zip(&p.chi_hat)
                    .map(|(g, chi)| match chi {
                        Some(c) => g.observe(sender_sample(*c, alpha, rng), alpha, cfg.angle_wrap),
                        None => Ok(g.clone()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ResidueState {
                    pos: pos_s.flow_sample(&p.x_hat, t, rng),
                    t_rot: lam.flow_sample(&p.o_hat, t, rng),
                    types: flow_sample_probs(&p.c_hat, type_s.beta(t), rng),
                    angles,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        state = FlowState { residues, t };
        trajectory.push(state.clone());
    }
    let prediction = predictor.predict(&state, ctx, 1.0)?;
    check_count(n_res, &prediction)?;
    Ok(SampleOutput { prediction, trajectory })
}

/// Independent chains in parallel. Chain `k` uses a ChaCha8 stream `k`
/// under `seed`, so results do not depend on the thread count.
pub fn sample_many(
    ctx: &Context,
    n_res: usize,
    predictor: &dyn Denoiser,
    cfg: &EngineConfig,
    seed: u64,
    chains: usize,
) -> Result<Vec<SampleOutput>> {
    (0..chains)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            sample(ctx, n_res, predictor, cfg, &mut rng)
        })
        .collect()
}

/// Loss evaluations over `trials` independent draws, in parallel.
pub fn loss_trials(
    target: &PeptidePrediction,
    ctx: &Context,
    predictor: &dyn Denoiser,
    cfg: &EngineConfig,
    seed: u64,
    trials: usize,
) -> Result<Vec<LossBreakdown>> {
    (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            discrete_time_loss(target, ctx, predictor, cfg, &mut rng)
        })
        .collect()
}
