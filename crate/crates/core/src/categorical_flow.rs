//! Discrete Bayesian flow over residue types.
//!
//! Class indices are 1-based (`1..=K`) at the API boundary to match the
//! residue-type convention of the frame files.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Number of canonical amino acids.
pub const NUM_TYPES: usize = 20;

/// Class order: `(1-letter, 3-letter)`, index `i` is class `i + 1`.
pub const AMINO_ACIDS: [(char, &str); NUM_TYPES] = [
    ('A', "ALA"),
    ('R', "ARG"),
    ('N', "ASN"),
    ('D', "ASP"),
    ('C', "CYS"),
    ('Q', "GLN"),
    ('E', "GLU"),
    ('G', "GLY"),
    ('H', "HIS"),
    ('I', "ILE"),
    ('L', "LEU"),
    ('K', "LYS"),
    ('M', "MET"),
    ('F', "PHE"),
    ('P', "PRO"),
    ('S', "SER"),
    ('T', "THR"),
    ('W', "TRP"),
    ('Y', "TYR"),
    ('V', "VAL"),
];

pub fn class_from_three_letter(code: &str) -> Option<usize> {
    AMINO_ACIDS.iter().position(|(_, t)| *t == code).map(|i| i + 1)
}

pub fn class_from_one_letter(code: char) -> Option<usize> {
    let up = code.to_ascii_uppercase();
    AMINO_ACIDS.iter().position(|(o, _)| *o == up).map(|i| i + 1)
}

pub fn three_letter(class: usize) -> Option<&'static str> {
    AMINO_ACIDS.get(class.checked_sub(1)?).map(|(_, t)| *t)
}

pub fn one_letter(class: usize) -> Option<char> {
    AMINO_ACIDS.get(class.checked_sub(1)?).map(|(o, _)| *o)
}

/// A probability vector over `K` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexParams(Vec<f64>);

impl SimplexParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidParameter("simplex needs at least one class".into()));
        }
        if theta.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidParameter(
                "simplex entries must be finite and non-negative".into(),
            ));
        }
        let total: f64 = theta.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("simplex sums to {total}")));
        }
        Ok(SimplexParams(theta))
    }

    pub fn uniform(k: usize) -> Self {
        SimplexParams(vec![1.0 / k as f64; k])
    }

    /// One-hot at the 1-based `class`.
    pub fn one_hot(class: usize, k: usize) -> Result<Self> {
        check_class(class, k)?;
        let mut v = vec![0.0; k];
        v[class - 1] = 1.0;
        Ok(SimplexParams(v))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    /// 1-based index of the largest entry (first on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.0.iter().enumerate() {
            if *p > self.0[best] {
                best = i;
            }
        }
        best + 1
    }

    pub fn total_variation(&self, other: &SimplexParams) -> f64 {
        0.5 * self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    fn softmax(y: &[f64]) -> Self {
        let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = y.iter().map(|v| (v - max).exp()).collect();
        let z: f64 = e.iter().sum();
        SimplexParams(e.into_iter().map(|v| v / z).collect())
    }
}

fn check_class(class: usize, k: usize) -> Result<()> {
    if class == 0 || class > k {
        return Err(Error::InvalidParameter(format!("class {class} outside 1..={k}")));
    }
    Ok(())
}

/// `y ~ N(α(K·p − 1), αK·I)`; `p` is a one-hot or a predicted distribution.
pub fn sender_sample_probs<R: Rng + ?Sized>(p: &SimplexParams, alpha: f64, rng: &mut R) -> Vec<f64> {
    let k = p.k() as f64;
    let sd = (alpha * k).sqrt();
    p.probs()
        .iter()
        .map(|pi| {
            let z: f64 = rng.sample(StandardNormal);
            alpha * (k * pi - 1.0) + sd * z
        })
        .collect()
}

pub fn sender_sample_type<R: Rng + ?Sized>(class: usize, alpha: f64, k: usize, rng: &mut R) -> Result<Vec<f64>> {
    Ok(sender_sample_probs(&SimplexParams::one_hot(class, k)?, alpha, rng))
}

/// `θ = softmax(y)`, `y ~ N(β(K·p − 1), βK·I)`.
pub fn flow_sample_probs<R: Rng + ?Sized>(p: &SimplexParams, beta: f64, rng: &mut R) -> SimplexParams {
    SimplexParams::softmax(&sender_sample_probs(p, beta, rng))
}

pub fn flow_sample_type<R: Rng + ?Sized>(class: usize, beta: f64, k: usize, rng: &mut R) -> Result<SimplexParams> {
    Ok(flow_sample_probs(&SimplexParams::one_hot(class, k)?, beta, rng))
}

fn log_sum_exp(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log-ratio `ln p_S(y) − ln p_R(y)` for one sender draw `y`.
pub fn type_log_ratio(class: usize, probs_hat: &SimplexParams, alpha: f64, y: &[f64]) -> f64 {
    let k = probs_hat.k() as f64;
    let var = alpha * k;
    // ln N(y | α(K e_j − 1), αK I) up to a shared constant
    let log_n = |j: usize| -> f64 {
        -y.iter()
            .enumerate()
            .map(|(d, yd)| {
                let m = alpha * (if d == j { k } else { 0.0 } - 1.0);
                (yd - m).powi(2)
            })
            .sum::<f64>()
            / (2.0 * var)
    };
    let sender = log_n(class - 1);
    let receiver = log_sum_exp(
        probs_hat
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(j, p)| p.ln() + log_n(j)),
    );
    sender - receiver
}

/// Monte Carlo estimate of `n·KL(p_S ‖ p_R)` averaged over `m` sender draws.
pub fn type_loss<R: Rng + ?Sized>(
    class: usize,
    probs_hat: &SimplexParams,
    alpha: f64,
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<f64> {
    check_class(class, probs_hat.k())?;
    if !(alpha > 0.0) || m == 0 {
        return Err(Error::InvalidParameter("type loss needs alpha > 0 and m >= 1".into()));
    }
    let onehot = SimplexParams::one_hot(class, probs_hat.k())?;
    let total: f64 = (0..m)
        .map(|_| {
            let y = sender_sample_probs(&onehot, alpha, rng);
            type_log_ratio(class, probs_hat, alpha, &y)
        })
        .sum();
    Ok(n as f64 * total / m as f64)
}

/// Quadratic accuracy schedule `β(t) = β1·t²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeScheduler {
    beta1: f64,
    n: usize,
}

impl TypeScheduler {
    pub const DEFAULT_BETA1: f64 = 1.2;

    pub fn new(beta1: f64, n: usize) -> Result<Self> {
        if !(beta1 > 0.0 && beta1.is_finite()) || n == 0 {
            return Err(Error::InvalidParameter(format!(
                "type schedule needs beta1 > 0 and n >= 1, got ({beta1}, {n})"
            )));
        }
        Ok(TypeScheduler { beta1, n })
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self, t: f64) -> f64 {
        self.beta1 * t * t
    }

    pub fn alpha_at(&self, i: usize) -> f64 {
        assert!((1..=self.n).contains(&i), "step {i} outside 1..={}", self.n);
        let n = self.n as f64;
        self.beta(i as f64 / n) - self.beta((i - 1) as f64 / n)
    }
}

pub fn beta_type_at(s: &TypeScheduler, t: f64) -> f64 {
    s.beta(t)
}
