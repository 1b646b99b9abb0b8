//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails. Runs without the libtest harness so the lines always show.

use std::f64::consts::{PI, TAU};
use std::ffi::OsString;
use std::path::Path;

use clap::Parser;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bfnflow::categorical_flow::{flow_sample_type, three_letter, type_loss, SimplexParams, NUM_TYPES};
use bfnflow::config::EngineConfig;
use bfnflow::denoiser::{Context, OracleDenoiser, PeptidePrediction, ResiduePrediction};
use bfnflow::engine::sample;
use bfnflow::geometry::{proj_so3, sample_uniform_so3, wrapped_distance, Rotation, Vec3};
use bfnflow::gmm_flow::{
    check_linear_entropy_schedule, simulate_flow, AngleScheduler, GmmComponent, GmmParams, ObservationWrap,
};
use bfnflow::ingest::{build_frames, chi_atoms, frames_to_json, idealized_atoms, ResidueFrame, ANGLE_SLOTS};
use bfnflow::matrix_fisher::{
    a_lambda, a_lambda_mc, kl_isotropic_with_moment, sample_rejection, sample_tangent_gaussian,
};
use bfnflow::metrics::{correct_fraction, wrapped_mae, CORRECT_THRESHOLD_DEG};
use bfnflow_cli::{run, Cli};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var)
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (TAU * var).sqrt()
}

// ---- 1 -------------------------------------------------------------------

fn random_mixture(r: &mut ChaCha8Rng) -> GmmParams {
    let k = r.random_range(1..=3);
    let raw: Vec<f64> = (0..k).map(|_| r.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    GmmParams::new(
        raw.iter()
            .map(|w| GmmComponent {
                mu: r.random_range(0.0..TAU),
                rho: r.random_range(0.05..5.0),
                pi: w / total,
            })
            .collect(),
    )
    .unwrap()
}

fn mixture_pdf(comps: &[GmmComponent], x: f64) -> f64 {
    comps.iter().map(|c| c.pi * normal_pdf(x, c.mu, 1.0 / c.rho)).sum()
}

fn gmm_conjugacy() -> Outcome {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let prior = random_mixture(&mut r);
        let alpha = r.random_range(0.01..10.0);
        let y = r.random_range(-1.0..TAU + 1.0);
        let post = prior.posterior_update(y, alpha).unwrap();

        // Bayes by brute force on a grid wide enough for the widest component
        let (lo, hi) = (-50.0, 56.0);
        let m = 200_000;
        let h = (hi - lo) / m as f64;
        let xs: Vec<f64> = (0..=m).map(|j| lo + j as f64 * h).collect();
        let un: Vec<f64> = xs
            .iter()
            .map(|&x| mixture_pdf(prior.components(), x) * normal_pdf(y, x, 1.0 / alpha))
            .collect();
        let z = h * (un.iter().sum::<f64>() - 0.5 * (un[0] + un[m]));
        for (x, u) in xs.iter().zip(&un).step_by(20) {
            worst = worst.max((u / z - mixture_pdf(post.components(), *x)).abs());
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max |closed form - quadrature| = {worst:.2e} (tol 1e-6)"),
    )
}

// ---- 2 -------------------------------------------------------------------

fn flow_equivalence() -> Outcome {
    let s = AngleScheduler::new(0.01, 5.0, 100).unwrap();
    let prior = GmmParams::rotamer_prior(0.01).unwrap();
    let chi = 1.0;
    let runs = 10_000;
    let mut finals: Vec<Vec<f64>> = vec![Vec::with_capacity(runs); prior.k()];
    for k in 0..runs {
        let mut r = rng(2);
        r.set_stream(k as u64);
        let traj = simulate_flow(chi, &prior, &s, ObservationWrap::Raw, &mut r);
        for (j, c) in traj.last().unwrap().components().iter().enumerate() {
            finals[j].push(c.mu);
        }
    }
    let beta = s.beta(1.0);
    let rho = 0.01 + beta;
    let mut pass = true;
    let mut parts = Vec::new();
    for (j, c) in prior.components().iter().enumerate() {
        let want_m = (beta * chi + c.mu * 0.01) / rho;
        let want_v = beta / (rho * rho);
        let (m, v) = mean_var(&finals[j]);
        let se_m = (want_v / runs as f64).sqrt();
        let se_v = want_v * (2.0 / (runs as f64 - 1.0)).sqrt();
        let zm = (m - want_m) / se_m;
        let zv = (v - want_v) / se_v;
        pass &= zm.abs() <= 3.0 && zv.abs() <= 3.0;
        parts.push(format!("k{j}: z_mean={zm:+.2} z_var={zv:+.2}"));
    }
    outcome(pass, format!("{} (tol |z| <= 3)", parts.join(", ")))
}

// ---- 3 -------------------------------------------------------------------

fn scheduler_telescoping() -> Outcome {
    let mut r = rng(3);
    let (mut sum_err, mut lin_err, mut lin_lib) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let rho0 = r.random_range(0.001..1.0);
        let rho1 = rho0 * r.random_range(1.5..1000.0);
        let n = r.random_range(1..=1000);
        let s = AngleScheduler::new(rho0, rho1, n).unwrap();
        let alphas: Vec<f64> = (1..=n).map(|i| s.alpha_at(i)).collect();
        sum_err = sum_err.max((alphas.iter().sum::<f64>() - (rho1 - rho0)).abs());

        // upper entropy bound of a 3-component mixture with shared precision
        let h = |rho: f64| 1.5 * (TAU * std::f64::consts::E / rho).ln();
        let mut acc = rho0;
        for (i, a) in alphas.iter().enumerate() {
            acc += a;
            let t = (i + 1) as f64 / n as f64;
            let line = (1.0 - t) * h(rho0) + t * h(rho1);
            lin_err = lin_err.max((h(acc) - line).abs());
        }
        lin_lib = lin_lib.max(check_linear_entropy_schedule(&s, 3));
    }
    outcome(
        sum_err <= 1e-10 && lin_err < 1e-9 && lin_lib < 1e-9,
        format!("sum error {sum_err:.1e} (tol 1e-10), entropy line deviation {lin_err:.1e} / library {lin_lib:.1e} (tol 1e-9)"),
    )
}

// ---- 4 -------------------------------------------------------------------

fn rotation_angle(r: &Rotation) -> f64 {
    r.geodesic(&Rotation::identity())
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn matrix_fisher_sampler() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for lambda in [1.0, 5.0, 10.0, 26.0, 50.0] {
        let mc = a_lambda_mc(lambda, 100_000, 4);
        let gap = a_lambda(lambda) - mc.mean;
        pass &= gap.abs() <= 0.01;
        parts.push(format!("λ={lambda}: Δ={gap:+.4}"));
    }
    let n = 100_000;
    let exact: Vec<f64> = sample_rejection(26.0, n, &mut rng(40))
        .iter()
        .map(rotation_angle)
        .collect();
    let approx: Vec<f64> = sample_tangent_gaussian(26.0, n, &mut rng(41))
        .iter()
        .map(rotation_angle)
        .collect();
    let ks = ks_statistic(exact, approx);
    pass &= ks < 0.02;
    outcome(
        pass,
        format!(
            "approx - MC of a(λ): {} (tol 0.01); seam KS at λ=26 = {ks:.4} (tol 0.02)",
            parts.join(", ")
        ),
    )
}

// ---- 5 -------------------------------------------------------------------

/// First-moment coefficient by Simpson quadrature over the rotation angle,
/// whose density under `M(λI)` is ∝ (1 − cos θ)·exp(2λ(cos θ − 1)).
fn a_exact(lambda: f64) -> f64 {
    let m = 20_000;
    let h = PI / m as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..=m {
        let th = j as f64 * h;
        let w = if j == 0 || j == m {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let d = (1.0 - th.cos()) * (2.0 * lambda * (th.cos() - 1.0)).exp();
        num += w * d * (1.0 + 2.0 * th.cos()) / 3.0;
        den += w * d;
    }
    num / den
}

fn kl_closed_form() -> Outcome {
    let mut r = rng(5);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let lambda = r.random_range(0.5..50.0);
        let r1 = sample_uniform_so3(&mut r);
        // relative rotation with a moderate angle, so the KL is not tiny
        let delta = sample_uniform_so3(&mut r);
        let r2 = r1 * delta;
        let draws = sample_rejection(lambda, 20_000, &mut r);
        // log p1(R) − log p2(R) = λ·tr((r1 − r2)ᵀR); the normalizers cancel
        let diff = (r1.matrix() - r2.matrix()).transpose();
        let vals: Vec<f64> = draws
            .iter()
            .map(|q| lambda * (diff * (r1 * *q).matrix()).trace())
            .collect();
        let (m, v) = mean_var(&vals);
        let se = (v / vals.len() as f64).sqrt();
        let closed = kl_isotropic_with_moment(lambda, a_exact(lambda), &r1, &r2);
        worst = worst.max((closed - m).abs() / se);
    }
    outcome(worst <= 3.0, format!("worst |closed - MC| / σ_MC = {worst:.2} (tol 3)"))
}

// ---- 6 -------------------------------------------------------------------

fn so3_projection() -> Outcome {
    let mut r = rng(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let rot = sample_uniform_so3(&mut r);
        let k = r.random_range(0.01..100.0);
        let p = proj_so3(&(rot.matrix() * k)).unwrap();
        worst = worst.max((p.matrix() - rot.matrix()).norm());
    }
    let (mut bad, mut negative) = (0, 0);
    for _ in 0..1000 {
        let m = Matrix3::from_fn(|_, _| r.random_range(-1.0..1.0));
        if m.determinant() < 0.0 {
            negative += 1;
        }
        let p = proj_so3(&m).unwrap();
        let err = (p.matrix().transpose() * p.matrix() - Matrix3::identity()).norm();
        if err > 1e-9 || (p.matrix().determinant() - 1.0).abs() > 1e-9 {
            bad += 1;
        }
    }
    outcome(
        worst <= 1e-9 && bad == 0,
        format!(
            "max ‖proj(kR) − R‖ = {worst:.1e} (tol 1e-9); improper outputs {bad}/1000 ({negative} inputs with det < 0)"
        ),
    )
}

// ---- 7 and 8 ---------------------------------------------------------------

fn random_target(r: &mut ChaCha8Rng, len: usize) -> PeptidePrediction {
    PeptidePrediction {
        residues: (0..len)
            .map(|_| {
                let c = r.random_range(1..=NUM_TYPES);
                let mut chi_hat = [None; ANGLE_SLOTS];
                chi_hat[0] = Some(r.random_range(0.0..TAU));
                for slot in chi_hat
                    .iter_mut()
                    .skip(1)
                    .take(chi_atoms(three_letter(c).unwrap()).len())
                {
                    *slot = Some(r.random_range(0.0..TAU));
                }
                ResiduePrediction {
                    x_hat: Vec3::new(
                        r.random_range(-1.0..1.0),
                        r.random_range(-1.0..1.0),
                        r.random_range(-1.0..1.0),
                    ),
                    o_hat: sample_uniform_so3(r),
                    c_hat: SimplexParams::one_hot(c, NUM_TYPES).unwrap(),
                    chi_hat,
                }
            })
            .collect(),
    }
}

fn oracle_generation() -> Outcome {
    let cfg = EngineConfig::default();
    let mut r = rng(7);
    let (mut pos, mut rot, mut ang, mut type_miss) = (0.0f64, 0.0f64, 0.0f64, 0);
    let (mut s_pos, mut s_rot, mut s_type_miss) = (0.0f64, 0.0f64, 0);
    for k in 0..20 {
        let target = random_target(&mut r, 8);
        let mut chain = rng(700);
        chain.set_stream(k);
        let out = sample(
            &Context::none(),
            8,
            &OracleDenoiser::new(target.clone()),
            &cfg,
            &mut chain,
        )
        .unwrap();
        let last = out.trajectory.last().unwrap();
        for ((p, t), s) in out.prediction.residues.iter().zip(&target.residues).zip(&last.residues) {
            pos = pos.max((p.x_hat - t.x_hat).norm());
            rot = rot.max(p.o_hat.geodesic(&t.o_hat));
            for (a, b) in p.chi_hat.iter().zip(&t.chi_hat) {
                match (a, b) {
                    (Some(a), Some(b)) => ang = ang.max(wrapped_distance(*a, *b).to_degrees()),
                    (None, None) => {}
                    _ => ang = f64::INFINITY,
                }
            }
            type_miss += usize::from(p.c_hat.argmax() != t.c_hat.argmax());
            s_pos = s_pos.max((s.pos.mu - t.x_hat).norm());
            s_rot = s_rot.max(s.t_rot.geodesic(&t.o_hat));
            s_type_miss += usize::from(s.types.argmax() != t.c_hat.argmax());
        }
    }
    let pass = pos < 0.05 && rot < 0.05 && ang < 2.0 && type_miss == 0;
    outcome(
        pass,
        format!(
            "generated: pos {pos:.1e}, rot {rot:.1e} rad, angle {ang:.1e}°, type misses {type_miss}/160; \
             final state: pos {s_pos:.3}, rot {s_rot:.3} rad, type misses {s_type_miss}/160"
        ),
    )
}

fn multimodality() -> Outcome {
    let cfg = EngineConfig::default();
    let targets = [PI / 3.0, PI, 5.0 * PI / 3.0];
    let (mut hits, mut total, mut out_of_range, mut state_hits) = (0, 0, 0, 0);
    for (ti, &chi) in targets.iter().enumerate() {
        for k in 0..100u64 {
            let target = PeptidePrediction {
                residues: vec![ResiduePrediction {
                    x_hat: Vec3::zeros(),
                    o_hat: Rotation::identity(),
                    c_hat: SimplexParams::one_hot(1, NUM_TYPES).unwrap(),
                    chi_hat: [Some(chi), None, None, None, None],
                }],
            };
            let mut r = rng(800 + ti as u64);
            r.set_stream(k);
            let out = sample(&Context::none(), 1, &OracleDenoiser::new(target), &cfg, &mut r).unwrap();
            total += 1;
            let got = out.prediction.residues[0].chi_hat[0].unwrap();
            let prior = GmmParams::rotamer_prior(cfg.rho0).unwrap();
            let right_mode = prior.nearest_component(got) == prior.nearest_component(chi);
            if right_mode && wrapped_distance(got, chi).to_degrees() < 5.0 {
                hits += 1;
            }
            for s in &out.trajectory {
                for c in s.residues[0].angles[0].components() {
                    if !(0.0..=TAU).contains(&c.mu) {
                        out_of_range += 1;
                    }
                }
            }
            let g = &out.trajectory.last().unwrap().residues[0].angles[0];
            let dom = g.components()[g.dominant()].mu;
            if wrapped_distance(dom, chi).to_degrees() < 5.0 {
                state_hits += 1;
            }
        }
    }
    let frac = hits as f64 / total as f64;
    outcome(
        frac >= 0.95 && out_of_range == 0,
        format!(
            "correct mode within 5°: {hits}/{total} (need 95%); means outside [0, 2π]: {out_of_range}; \
             dominant final-state component within 5°: {state_hits}/{total}"
        ),
    )
}

// ---- 9 -------------------------------------------------------------------

fn categorical_flow() -> Outcome {
    let mut r = rng(9);
    let draws = 100_000;
    let mut hit = 0;
    for _ in 0..draws {
        let c = r.random_range(1..=NUM_TYPES);
        if flow_sample_type(c, 50.0, NUM_TYPES, &mut r).unwrap().argmax() == c {
            hit += 1;
        }
    }
    let freq = hit as f64 / draws as f64;
    let losses: Vec<f64> = (0..2000)
        .map(|_| {
            let c = r.random_range(1..=NUM_TYPES);
            let perfect = SimplexParams::one_hot(c, NUM_TYPES).unwrap();
            type_loss(c, &perfect, r.random_range(0.001..1.0), 100, 1, &mut r).unwrap()
        })
        .collect();
    let (m, v) = mean_var(&losses);
    let se = (v / losses.len() as f64).sqrt();
    outcome(
        freq > 0.999 && m.abs() <= 3.0 * se,
        format!("argmax recovery at β=50: {freq:.5} (need > 0.999); perfect-predictor loss mean {m:.2e} ± {se:.1e}"),
    )
}

// ---- 10 ------------------------------------------------------------------

fn random_frames(r: &mut ChaCha8Rng, n: usize) -> Vec<ResidueFrame> {
    (0..n)
        .map(|i| {
            let c = r.random_range(1..=NUM_TYPES);
            let mut chi = [None; ANGLE_SLOTS];
            chi[0] = Some(r.random_range(0.0..TAU));
            for slot in chi.iter_mut().skip(1).take(chi_atoms(three_letter(c).unwrap()).len()) {
                *slot = Some(r.random_range(0.0..TAU));
            }
            ResidueFrame {
                // far apart so no C(i)–N(i+1) bond is inferred
                x: Vec3::new(20.0 * i as f64, r.random_range(-5.0..5.0), r.random_range(-5.0..5.0)),
                o: sample_uniform_so3(r),
                chi,
                c,
                chain: "A".into(),
                resnum: i as i32 + 1,
            }
        })
        .collect()
}

fn frame_errors(a: &[ResidueFrame], b: &[ResidueFrame]) -> (f64, f64, f64) {
    let (mut dx, mut dox, mut dchi) = (0.0f64, 0.0f64, 0.0f64);
    for (f, g) in a.iter().zip(b) {
        dx = dx.max((f.x - g.x).norm());
        dox = dox.max((f.o.matrix() - g.o.matrix()).norm());
        for (p, q) in f.chi.iter().zip(&g.chi) {
            match (p, q) {
                (Some(p), Some(q)) => dchi = dchi.max(wrapped_distance(*p, *q)),
                (None, None) => {}
                _ => dchi = f64::INFINITY,
            }
        }
    }
    (dx, dox, dchi)
}

fn ingestion_round_trip() -> Outcome {
    let mut r = rng(10);
    let frames = random_frames(&mut r, 200);
    let atoms = idealized_atoms(&frames).unwrap();
    let back = build_frames(&atoms).frames;
    let (dx, dox, dchi) = if back.len() == frames.len() {
        frame_errors(&frames, &back)
    } else {
        (f64::INFINITY, f64::INFINITY, f64::INFINITY)
    };
    let exact_x = frames.iter().zip(&back).all(|(f, g)| f.x == g.x);

    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let rot = sample_uniform_so3(&mut r);
        let shift = Vector3::new(
            r.random_range(-50.0..50.0),
            r.random_range(-50.0..50.0),
            r.random_range(-50.0..50.0),
        );
        let moved: Vec<_> = atoms
            .iter()
            .take(60)
            .cloned()
            .map(|mut a| {
                a.pos = rot.apply(&a.pos) + shift;
                a
            })
            .collect();
        let base = build_frames(&atoms[..60]).frames;
        let expect: Vec<ResidueFrame> = base
            .iter()
            .map(|f| ResidueFrame {
                x: rot.apply(&f.x) + shift,
                o: rot * f.o,
                ..f.clone()
            })
            .collect();
        let got = build_frames(&moved).frames;
        let e = if got.len() == expect.len() {
            frame_errors(&expect, &got)
        } else {
            (f64::INFINITY, f64::INFINITY, f64::INFINITY)
        };
        worst = (worst.0.max(e.0), worst.1.max(e.1), worst.2.max(e.2));
    }
    let pass = exact_x && dox <= 1e-12 && dchi <= 1e-6 && worst.0 <= 1e-9 && worst.1 <= 1e-9 && worst.2 <= 1e-9;
    outcome(
        pass,
        format!(
            "round trip: x exact = {exact_x} ({dx:.1e}), o {dox:.1e} (tol 1e-12), χ {dchi:.1e} rad (tol 1e-6); \
             rigid motions: x {:.1e}, o {:.1e}, χ {:.1e} (tol 1e-9)",
            worst.0, worst.1, worst.2
        ),
    )
}

// ---- 11 ------------------------------------------------------------------

fn metrics() -> Outcome {
    let mae = wrapped_mae(&[350f64.to_radians()], &[10f64.to_radians()]).unwrap();
    let inside = correct_fraction(&[0.0], &[19.9f64.to_radians()], CORRECT_THRESHOLD_DEG).unwrap();
    let outside = correct_fraction(&[0.0], &[20.1f64.to_radians()], CORRECT_THRESHOLD_DEG).unwrap();
    let pass = (mae - 20.0).abs() <= 1e-9 && CORRECT_THRESHOLD_DEG == 20.0 && inside == 1.0 && outside == 0.0;
    outcome(
        pass,
        format!("wrapped_mae(350°, 10°) = {mae}°; threshold {CORRECT_THRESHOLD_DEG}° (19.9° counted {inside}, 20.1° counted {outside})"),
    )
}

// ---- 12 ------------------------------------------------------------------

fn run_sample(dir: &Path, target: &Path) -> Result<(), String> {
    let out = dir.join("out.json");
    let args = [
        "bfnflow",
        "sample",
        "--seed",
        "42",
        "--denoiser",
        "noisy",
        "--samples",
        "2",
        "--steps",
        "50",
    ]
    .map(OsString::from)
    .into_iter()
    .chain(["--target".into(), target.into(), "--out".into(), out.into()]);
    let cli = Cli::try_parse_from(args).map_err(|e| e.to_string())?;
    run(cli).map_err(|e| format!("{e:#}"))
}

fn reproducibility() -> Outcome {
    let work = tempfile::tempdir().unwrap();
    let target = work.path().join("target.json");
    std::fs::write(&target, frames_to_json(&random_frames(&mut rng(12), 6))).unwrap();
    let runs = ["a", "b"].map(|d| work.path().join(d));
    for d in &runs {
        std::fs::create_dir(d).unwrap();
        if let Err(e) = run_sample(d, &target) {
            return outcome(false, e);
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(&runs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut differ = Vec::new();
    for n in &names {
        let a = std::fs::read(runs[0].join(n)).unwrap();
        let b = std::fs::read(runs[1].join(n)).ok();
        if b.as_deref() != Some(&a[..]) {
            differ.push(n.to_string_lossy().into_owned());
        }
    }
    let traj = names
        .iter()
        .filter(|n| n.to_string_lossy().contains(".traj.jsonl"))
        .count();
    outcome(
        differ.is_empty() && traj > 0,
        format!(
            "{} files compared ({traj} trajectory dumps), differing: {differ:?}",
            names.len()
        ),
    )
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 12] = [
        ("mixture conjugacy vs grid Bayes", gmm_conjugacy),
        ("simulated flow vs closed-form flow", flow_equivalence),
        ("scheduler telescoping and entropy line", scheduler_telescoping),
        ("Matrix Fisher first moment and sampler seam", matrix_fisher_sampler),
        ("Matrix Fisher KL closed form", kl_closed_form),
        ("SO(3) projection", so3_projection),
        ("oracle generation", oracle_generation),
        ("multimodality preservation", multimodality),
        ("categorical flow", categorical_flow),
        ("ingestion round trip", ingestion_round_trip),
        ("metrics", metrics),
        ("end-to-end reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {}: {} [{:.1}s] {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
