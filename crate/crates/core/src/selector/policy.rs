//! The select/skip policy: a two-way softmax over the state
//! `[z_t ⊕ mean of selected z]`.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::Adam;
use crate::selector::features::{PairEncoding, F};

pub const STATE_DIM: usize = 2 * F;
/// Flat parameter layout: `W_s` row 0, `W_s` row 1, then `b_s`.
pub const N_PARAMS: usize = 2 * STATE_DIM + 2;

const FORMAT: &str = "paraselect-policy";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionState {
    #[serde(with = "state_serde")]
    pub s: [f64; STATE_DIM],
    pub selected_count: usize,
}

mod state_serde {
    use super::STATE_DIM;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: &[f64; STATE_DIM], ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_seq(s.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<[f64; STATE_DIM], D::Error> {
        let v = Vec::<f64>::deserialize(de)?;
        v.try_into()
            .map_err(|v: Vec<f64>| serde::de::Error::invalid_length(v.len(), &"a full state vector"))
    }
}

/// Running mean of the encodings selected so far.
#[derive(Debug, Clone, Default)]
pub struct StateBuilder {
    sum: [f64; F],
    count: usize,
}

impl StateBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self, z: &PairEncoding) -> SelectionState {
        let mut s = [0.0; STATE_DIM];
        s[..F].copy_from_slice(&z.z);
        if self.count > 0 {
            let n = self.count as f64;
            for (dst, &v) in s[F..].iter_mut().zip(&self.sum) {
                *dst = v / n;
            }
        }
        SelectionState {
            s,
            selected_count: self.count,
        }
    }

    pub fn push_selected(&mut self, z: &PairEncoding) {
        for (acc, &v) in self.sum.iter_mut().zip(&z.z) {
            *acc += v;
        }
        self.count += 1;
    }

    pub fn selected_count(&self) -> usize {
        self.count
    }
}

/// Update rule applied by [`PolicyParams::ascend`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyOptimizer {
    /// `θ ← θ + α·g`.
    #[default]
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// `W_s`, 2 × STATE_DIM row-major.
    pub w: Vec<f64>,
    pub b: [f64; 2],
    pub optimizer: PolicyOptimizer,
    /// Fixed affine input map `ŝ = (s − shift) / scale`, identity by
    /// default; the logits are `W_s·ŝ + b_s`.
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    pub adam: Adam,
    pub baseline: f64,
    pub baseline_decay: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self::new()
    }
}

impl PolicyParams {
    /// Zero weights: both actions equally likely in every state.
    pub fn new() -> Self {
        Self {
            w: vec![0.0; 2 * STATE_DIM],
            b: [0.0; 2],
            optimizer: PolicyOptimizer::default(),
            shift: vec![0.0; STATE_DIM],
            scale: vec![1.0; STATE_DIM],
            adam: Adam::new(N_PARAMS),
            baseline: 0.0,
            baseline_decay: 0.9,
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.w.clone();
        v.extend_from_slice(&self.b);
        v
    }

    pub fn set_flat(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != N_PARAMS {
            return Err(Error::LengthMismatch {
                left: theta.len(),
                right: N_PARAMS,
            });
        }
        self.w.copy_from_slice(&theta[..2 * STATE_DIM]);
        self.b = [theta[2 * STATE_DIM], theta[2 * STATE_DIM + 1]];
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.b).all(|v| v.is_finite()) && self.baseline.is_finite()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.w[k * STATE_DIM..(k + 1) * STATE_DIM]
    }

    /// Standardizes both state blocks with the per-feature mean and
    /// standard deviation of `encodings`; constant features are only
    /// centred.
    pub fn fit_input(&mut self, encodings: &[PairEncoding]) {
        if encodings.is_empty() {
            return;
        }
        let n = encodings.len() as f64;
        for k in 0..F {
            let mean = encodings.iter().map(|z| z.z[k]).sum::<f64>() / n;
            let var = encodings.iter().map(|z| (z.z[k] - mean).powi(2)).sum::<f64>() / n;
            let sd = if var > 1e-12 { var.sqrt() } else { 1.0 };
            for block in [0, F] {
                self.shift[block + k] = mean;
                self.scale[block + k] = sd;
            }
        }
    }

    /// The policy input `ŝ` for a state. The mean block stays zero while
    /// nothing is selected.
    pub fn input(&self, state: &SelectionState) -> [f64; STATE_DIM] {
        std::array::from_fn(|i| {
            if i >= F && state.selected_count == 0 {
                0.0
            } else {
                (state.s[i] - self.shift[i]) / self.scale[i]
            }
        })
    }

    pub fn logits(&self, state: &SelectionState) -> [f64; 2] {
        let x = self.input(state);
        std::array::from_fn(|k| self.row(k).iter().zip(&x).map(|(w, s)| w * s).sum::<f64>() + self.b[k])
    }

    pub fn select_prob(&self, state: &SelectionState) -> [f64; 2] {
        softmax2(self.logits(state))
    }

    pub fn log_prob(&self, state: &SelectionState, action: u8) -> f64 {
        let l = self.logits(state);
        let m = l[0].max(l[1]);
        let lse = m + ((l[0] - m).exp() + (l[1] - m).exp()).ln();
        l[usize::from(action)] - lse
    }

    /// Adds `scale · ∇θ log π(action | state)` into `grad` (flat layout).
    pub fn accumulate_grad_log_prob(&self, state: &SelectionState, action: u8, scale: f64, grad: &mut [f64]) {
        let p = self.select_prob(state);
        let x = self.input(state);
        for k in 0..2 {
            let coeff = scale * (f64::from(u8::from(usize::from(action) == k)) - p[k]);
            if coeff == 0.0 {
                continue;
            }
            let row = &mut grad[k * STATE_DIM..(k + 1) * STATE_DIM];
            for (g, s) in row.iter_mut().zip(&x) {
                *g += coeff * s;
            }
            grad[2 * STATE_DIM + k] += coeff;
        }
    }

    pub fn grad_log_prob(&self, state: &SelectionState, action: u8) -> Vec<f64> {
        let mut g = vec![0.0; N_PARAMS];
        self.accumulate_grad_log_prob(state, action, 1.0, &mut g);
        g
    }

    /// One ascent step along `grad`. An all-zero gradient leaves the
    /// parameters and the optimizer state untouched.
    pub fn ascend(&mut self, grad: &[f64], lr: f64) -> Result<bool> {
        if grad.len() != N_PARAMS {
            return Err(Error::LengthMismatch {
                left: grad.len(),
                right: N_PARAMS,
            });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("policy gradient".into()));
        }
        if grad.iter().all(|&g| g == 0.0) {
            return Ok(false);
        }
        let mut theta = self.flat();
        let mut adam = self.adam.clone();
        match self.optimizer {
            PolicyOptimizer::Sgd => theta.iter_mut().zip(grad).for_each(|(t, g)| *t += lr * g),
            PolicyOptimizer::Adam => {
                let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
                adam.step(&mut theta, &neg, lr);
            }
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("policy parameters after update".into()));
        }
        self.set_flat(&theta)?;
        self.adam = adam;
        Ok(true)
    }

    pub fn update_baseline(&mut self, reward: f64) {
        self.baseline = self.baseline_decay * self.baseline + (1.0 - self.baseline_decay) * reward;
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let doc = serde_json::json!({ "format": FORMAT, "version": VERSION, "policy": self });
        fs::write(path, serde_json::to_string_pretty(&doc)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut doc: serde_json::Value = serde_json::from_str(&text)?;
        if doc["format"] != FORMAT || doc["version"] != VERSION {
            return Err(Error::Checkpoint(format!("{}: not a version {VERSION} policy file", path.display())));
        }
        let policy: PolicyParams = serde_json::from_value(doc["policy"].take())?;
        if policy.w.len() != 2 * STATE_DIM
            || policy.shift.len() != STATE_DIM
            || policy.scale.len() != STATE_DIM
            || policy.adam.m.len() != N_PARAMS
            || policy.adam.v.len() != N_PARAMS
        {
            return Err(Error::Shape(format!("{}: policy tensors have the wrong size", path.display())));
        }
        Ok(policy)
    }
}

fn softmax2(l: [f64; 2]) -> [f64; 2] {
    let m = l[0].max(l[1]);
    let e = [(l[0] - m).exp(), (l[1] - m).exp()];
    let z = e[0] + e[1];
    [e[0] / z, e[1] / z]
}

/// `v = softmax(W_s·s + b_s)`; `v[1]` is the select probability.
pub fn select_prob(policy: &PolicyParams, state: &SelectionState) -> [f64; 2] {
    policy.select_prob(state)
}

/// Bernoulli draw with success probability `v[1]`.
pub fn sample_action<R: Rng + ?Sized>(v: [f64; 2], rng: &mut R) -> u8 {
    u8::from(rng.gen::<f64>() < v[1])
}

/// Argmax; an exact tie selects.
pub fn greedy_action(v: [f64; 2]) -> u8 {
    u8::from(v[1] >= v[0])
}
