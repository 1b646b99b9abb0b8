use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bfnflow::config::EngineConfig;
use bfnflow::denoiser::{Context, Denoiser, NearestNeighborDenoiser, NoisyOracle, OracleDenoiser, PeptidePrediction};
use bfnflow::engine::{loss_trials, sample_many, LossBreakdown};
use bfnflow::gaussian_flow::Normalizer;
use bfnflow::geometry::{kabsch_rmsd, rmsd, sample_uniform_so3, Vec3};
use bfnflow::gmm_flow::{simulate_flow, write_trajectory_csv, AngleScheduler, GmmParams, ObservationWrap};
use bfnflow::ingest::{
    build_frames, dataset_from_json, dataset_to_json, frames_from_json, frames_to_json, parse_pdb, ResidueFrame,
    SLOT_NAMES,
};
use bfnflow::matrix_fisher::{a_lambda, a_lambda_mc, a_lambda_quadrature, McEstimate};
use bfnflow::metrics::{
    aar, correct_fraction_micro_macro, hamming_diversity, write_metric_csv, AngleReport, MetricRow,
    CORRECT_THRESHOLD_DEG,
};
use bfnflow::trajectory::{write_angle_summary_csv, write_rotation_summary_csv, write_trajectory_jsonl};

use crate::{Common, DenoiserKind, SampleArgs, WrapArg};

pub struct Env {
    pub cfg: EngineConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Env {
    pub fn new(common: Common) -> Result<Self> {
        let cfg = match &common.config {
            Some(p) => EngineConfig::load(p).with_context(|| format!("config {}", p.display()))?,
            None => EngineConfig::default(),
        };
        Ok(Env {
            seed: common.seed.unwrap_or(cfg.seed),
            cfg,
            out: common.out,
        })
    }

    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(create(p)?)),
            None => Box::new(std::io::stdout().lock()),
        })
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn create(p: &Path) -> Result<File> {
    File::create(p).with_context(|| format!("cannot create {}", p.display()))
}

fn read(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))
}

fn load_frames(p: &Path) -> Result<Vec<ResidueFrame>> {
    frames_from_json(&read(p)?).with_context(|| format!("frames {}", p.display()))
}

fn load_dataset(p: &Path) -> Result<Vec<Vec<ResidueFrame>>> {
    dataset_from_json(&read(p)?).with_context(|| format!("dataset {}", p.display()))
}

fn wrap_of(w: WrapArg) -> ObservationWrap {
    match w {
        WrapArg::Raw => ObservationWrap::Raw,
        WrapArg::Canonical => ObservationWrap::Canonical,
        WrapArg::Nearest => ObservationWrap::Nearest,
    }
}

pub fn flow_sim_angles(
    env: &Env,
    chi_deg: f64,
    k: usize,
    rho0: Option<f64>,
    rho1: Option<f64>,
    steps: Option<usize>,
    wrap: Option<WrapArg>,
) -> Result<()> {
    let rho0 = rho0.unwrap_or(env.cfg.rho0);
    let s = AngleScheduler::new(rho0, rho1.unwrap_or(env.cfg.rho1), steps.unwrap_or(env.cfg.n_sample))?;
    let prior = GmmParams::staggered_prior(k, rho0)?;
    let wrap = wrap.map(wrap_of).unwrap_or(env.cfg.angle_wrap);
    let traj = simulate_flow(chi_deg.to_radians(), &prior, &s, wrap, &mut env.rng());
    write_trajectory_csv(env.writer()?, &prior, &traj)?;
    Ok(())
}

pub fn flow_sim_rot(env: &Env, steps: Option<usize>, samples: usize) -> Result<()> {
    let n = steps.unwrap_or(env.cfg.n_sample);
    if n == 0 {
        bail!("steps must be at least 1");
    }
    let lam = env.cfg.lambda_schedule()?;
    let mut rng = env.rng();
    let target = sample_uniform_so3(&mut rng);
    let mut wtr = csv::Writer::from_writer(env.writer()?);
    wtr.write_record(["step", "t", "lambda", "sample", "geodesic"])?;
    for step in 0..=n {
        let t = step as f64 / n as f64;
        for j in 0..samples {
            let r = lam.flow_sample(&target, t, &mut rng);
            wtr.write_record([
                step.to_string(),
                t.to_string(),
                lam.at(t).to_string(),
                j.to_string(),
                r.geodesic(&target).to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Context and the coordinate normalizer centred on it (origin without one).
fn context_of(spec: &str, cfg: &EngineConfig) -> Result<(Context, Normalizer)> {
    let frames = if spec == "none" {
        Vec::new()
    } else {
        load_frames(Path::new(spec))?
    };
    let centers: Vec<Vec3> = frames.iter().map(|f| f.x).collect();
    let nz = Normalizer::centered_on(&centers, cfg.coord_scale)?;
    Ok((Context { frames }, nz))
}

fn build_denoiser(
    kind: DenoiserKind,
    target: Option<&PeptidePrediction>,
    dataset: Option<&Path>,
    nz: &Normalizer,
    env: &Env,
) -> Result<Box<dyn Denoiser>> {
    Ok(match kind {
        DenoiserKind::Oracle | DenoiserKind::Noisy => {
            let Some(t) = target else {
                bail!("--target is required for the {kind:?} predictor")
            };
            if kind == DenoiserKind::Oracle {
                Box::new(OracleDenoiser::new(t.clone()))
            } else {
                Box::new(NoisyOracle::new(t.clone(), env.cfg.noise_eps, env.seed)?)
            }
        }
        DenoiserKind::Knn => {
            let Some(p) = dataset else {
                bail!("--dataset is required for the knn predictor")
            };
            let items = load_dataset(p)?
                .iter()
                .map(|pep| PeptidePrediction::from_frames(pep, nz))
                .collect::<bfnflow::Result<Vec<_>>>()?;
            Box::new(NearestNeighborDenoiser::fit(items, env.cfg.knn_weights())?)
        }
    })
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn sample(env: &Env, args: &SampleArgs) -> Result<()> {
    let mut cfg = env.cfg;
    if let Some(s) = args.steps {
        cfg.n_sample = s;
    }
    cfg.validate()?;
    let (ctx, nz) = context_of(&args.context, &cfg)?;
    let target_frames = args.target.as_deref().map(load_frames).transpose()?;
    let target = target_frames
        .as_deref()
        .map(|f| PeptidePrediction::from_frames(f, &nz))
        .transpose()?;
    let n_res = match (args.len, &target) {
        (Some(n), _) => n,
        (None, Some(t)) => t.len(),
        (None, None) => bail!("--len is required without --target"),
    };
    if args.samples == 0 {
        bail!("--samples must be at least 1");
    }
    let predictor = build_denoiser(args.denoiser, target.as_ref(), args.dataset.as_deref(), &nz, env)?;
    let outputs = sample_many(&ctx, n_res, predictor.as_ref(), &cfg, env.seed, args.samples)?;

    let peptides: Vec<Vec<ResidueFrame>> = outputs
        .iter()
        .map(|o| o.prediction.to_frames(&nz, target_frames.as_deref()))
        .collect();
    let mut w = env.writer()?;
    if peptides.len() == 1 {
        w.write_all(frames_to_json(&peptides[0]).as_bytes())?;
    } else {
        w.write_all(dataset_to_json(&peptides).as_bytes())?;
    }
    w.write_all(b"\n")?;
    w.flush()?;

    let traj_path = match (&args.trajectory, &env.out) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(out)) => Some(with_suffix(out, ".traj.jsonl")),
        (None, None) => None,
    };
    if let Some(base) = traj_path {
        for (k, o) in outputs.iter().enumerate() {
            let path = if outputs.len() == 1 {
                base.clone()
            } else {
                with_suffix(&base, &format!(".{k}"))
            };
            write_trajectory_jsonl(BufWriter::new(create(&path)?), &o.trajectory)?;
            write_angle_summary_csv(
                BufWriter::new(create(&with_suffix(&path, ".angles.csv"))?),
                &o.trajectory,
            )?;
            write_rotation_summary_csv(
                BufWriter::new(create(&with_suffix(&path, ".rot.csv"))?),
                &o.trajectory,
                target.as_ref(),
            )?;
        }
    }
    Ok(())
}

type Term = fn(&LossBreakdown) -> f64;

pub fn loss_eval(env: &Env, target: &Path, kind: DenoiserKind, dataset: Option<&Path>, trials: usize) -> Result<()> {
    if trials == 0 {
        bail!("--trials must be at least 1");
    }
    let nz = Normalizer::new(Vec3::zeros(), env.cfg.coord_scale)?;
    let tgt = PeptidePrediction::from_frames(&load_frames(target)?, &nz)?;
    let predictor = build_denoiser(kind, Some(&tgt), dataset, &nz, env)?;
    let rows = loss_trials(&tgt, &Context::none(), predictor.as_ref(), &env.cfg, env.seed, trials)?;
    let mut wtr = csv::Writer::from_writer(env.writer()?);
    wtr.write_record(["term", "trials", "mean", "std_err", "min", "max"])?;
    let terms: [(&str, Term); 5] = [
        ("pos", |l| l.pos),
        ("ori", |l| l.ori),
        ("type", |l| l.ty),
        ("ang", |l| l.ang),
        ("total", |l| l.total),
    ];
    for (name, get) in terms {
        let v: Vec<f64> = rows.iter().map(get).collect();
        let est = McEstimate::from_values(&v);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        wtr.write_record([
            name.to_string(),
            trials.to_string(),
            est.mean.to_string(),
            est.std_err.to_string(),
            min.to_string(),
            max.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn ingest(env: &Env, pdb: &Path, chain: Option<&str>) -> Result<()> {
    let parsed = parse_pdb(&read(pdb)?);
    let atoms: Vec<_> = parsed
        .atoms
        .into_iter()
        .filter(|a| chain.is_none_or(|c| a.chain == c))
        .collect();
    let built = build_frames(&atoms);
    if built.frames.is_empty() {
        bail!("no residue frames in {}", pdb.display());
    }
    let mut w = env.writer()?;
    w.write_all(frames_to_json(&built.frames).as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn metric(id: &str, name: &str, slot: &str, value: f64) -> MetricRow {
    MetricRow {
        id: id.to_string(),
        metric: name.to_string(),
        slot: slot.to_string(),
        value,
    }
}

pub fn eval(env: &Env, preds: &[PathBuf], truth: &Path) -> Result<()> {
    let truth_frames = load_frames(truth)?;
    let true_seq: Vec<usize> = truth_frames.iter().map(|f| f.c).collect();
    let true_x: Vec<Vec3> = truth_frames.iter().map(|f| f.x).collect();
    let mut rows = Vec::new();
    let mut seqs = Vec::new();
    let mut groups = Vec::new();
    for (k, p) in preds.iter().enumerate() {
        let id = format!("pred{k}");
        let frames = load_frames(p)?;
        if frames.len() != truth_frames.len() {
            bail!(
                "{}: {} residues, truth has {}",
                p.display(),
                frames.len(),
                truth_frames.len()
            );
        }
        let (mut all_p, mut all_t) = (Vec::new(), Vec::new());
        for (slot, name) in SLOT_NAMES.iter().enumerate() {
            let (pv, tv): (Vec<f64>, Vec<f64>) = frames
                .iter()
                .zip(&truth_frames)
                .filter_map(|(a, b)| Some((a.chi[slot]?, b.chi[slot]?)))
                .unzip();
            if pv.is_empty() {
                continue;
            }
            let r = AngleReport::compute(name, &pv, &tv)?;
            rows.push(metric(&id, "mae_deg", name, r.mae_deg));
            rows.push(metric(&id, "correct_fraction", name, r.correct_fraction));
            all_p.extend(pv);
            all_t.extend(tv);
        }
        groups.push((all_p, all_t));
        let seq: Vec<usize> = frames.iter().map(|f| f.c).collect();
        rows.push(metric(&id, "aar", "", aar(&seq, &true_seq)?));
        let xs: Vec<Vec3> = frames.iter().map(|f| f.x).collect();
        rows.push(metric(&id, "rmsd", "", rmsd(&xs, &true_x)?));
        if xs.len() >= 3 {
            rows.push(metric(&id, "kabsch_rmsd", "", kabsch_rmsd(&true_x, &xs)?));
        }
        seqs.push(seq);
    }
    if groups.iter().any(|(p, _)| !p.is_empty()) {
        let (micro, macro_) = correct_fraction_micro_macro(&groups, CORRECT_THRESHOLD_DEG)?;
        rows.push(metric("all", "correct_fraction_micro", "", micro));
        rows.push(metric("all", "correct_fraction_macro", "", macro_));
    }
    if seqs.len() >= 2 {
        rows.push(metric("all", "hamming_diversity", "", hamming_diversity(&seqs)?));
    }
    write_metric_csv(env.writer()?, &rows)?;
    Ok(())
}

pub fn mf_check(env: &Env, grid: &[f64], samples: usize) -> Result<()> {
    if samples < 2 {
        bail!("--samples must be at least 2");
    }
    let mut wtr = csv::Writer::from_writer(env.writer()?);
    wtr.write_record([
        "lambda",
        "samples",
        "mc_mean",
        "mc_std_err",
        "approx",
        "quadrature",
        "approx_minus_mc",
    ])?;
    for &lambda in grid {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            bail!("lambda must be non-negative, got {lambda}");
        }
        let mc = a_lambda_mc(lambda, samples, env.seed);
        let approx = a_lambda(lambda);
        wtr.write_record([
            lambda.to_string(),
            samples.to_string(),
            mc.mean.to_string(),
            mc.std_err.to_string(),
            approx.to_string(),
            a_lambda_quadrature(lambda).to_string(),
            (approx - mc.mean).to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
