//! Forward pass, exact backward pass and greedy decoding of the
//! attention encoder-decoder.

use crate::corpus::{BOS, EOS, PAD};
use crate::error::{Error, Result};
use crate::generator::params::{views_mut, Cell, CellMut, Dims, GeneratorParams};

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Softmax in place; returns the log normalizer.
pub(crate) fn softmax_in_place(logits: &mut [f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in logits.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in logits.iter_mut() {
        *x /= sum;
    }
    max + sum.ln()
}

#[derive(Debug, Clone)]
pub(crate) struct CellStep {
    input: Vec<f64>,
    u: Vec<f64>,
    c: Vec<f64>,
    h_prev: Vec<f64>,
    h: Vec<f64>,
}

fn cell_forward(w: &Cell<'_>, x: &[f64], h_prev: &[f64]) -> CellStep {
    let hidden = h_prev.len();
    let cols = x.len() + hidden;
    let mut input = Vec::with_capacity(cols);
    input.extend_from_slice(x);
    input.extend_from_slice(h_prev);
    let mut u = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    let mut h = vec![0.0; hidden];
    for r in 0..hidden {
        u[r] = sigmoid(w.bu[r] + dot(&w.wu[r * cols..(r + 1) * cols], &input));
        c[r] = (w.bc[r] + dot(&w.wc[r * cols..(r + 1) * cols], &input)).tanh();
        h[r] = h_prev[r] + u[r] * (c[r] - h_prev[r]);
    }
    CellStep {
        input,
        u,
        c,
        h_prev: h_prev.to_vec(),
        h,
    }
}

/// Accumulates weight gradients; returns `(d input, d h_prev)`.
fn cell_backward(w: &Cell<'_>, g: &mut CellMut<'_>, step: &CellStep, dh: &[f64], embed: usize) -> (Vec<f64>, Vec<f64>) {
    let hidden = dh.len();
    let cols = step.input.len();
    let mut d_input = vec![0.0; cols];
    let mut dh_prev = vec![0.0; hidden];
    for r in 0..hidden {
        let (u, c, hp) = (step.u[r], step.c[r], step.h_prev[r]);
        dh_prev[r] += dh[r] * (1.0 - u);
        let dpu = dh[r] * (c - hp) * u * (1.0 - u);
        let dpc = dh[r] * u * (1.0 - c * c);
        let row = r * cols..(r + 1) * cols;
        axpy(&mut g.wu[row.clone()], dpu, &step.input);
        axpy(&mut g.wc[row.clone()], dpc, &step.input);
        g.bu[r] += dpu;
        g.bc[r] += dpc;
        axpy(&mut d_input, dpu, &w.wu[row.clone()]);
        axpy(&mut d_input, dpc, &w.wc[row]);
    }
    let dx = d_input[..embed].to_vec();
    for (a, b) in dh_prev.iter_mut().zip(&d_input[embed..]) {
        *a += b;
    }
    (dx, dh_prev)
}

/// Activations retained by [`forward_nll`] for [`backward`].
#[derive(Debug, Clone)]
pub struct Cache {
    dims: Dims,
    src: Vec<u32>,
    dec_inputs: Vec<u32>,
    targets: Vec<u32>,
    enc: Vec<CellStep>,
    dec: Vec<CellStep>,
    alphas: Vec<Vec<f64>>,
    outs: Vec<Vec<f64>>,
    probs: Vec<Vec<f64>>,
}

impl Cache {
    pub fn n_tokens(&self) -> usize {
        self.targets.len()
    }

    /// Output distribution at each teacher-forced step.
    pub fn step_distributions(&self) -> &[Vec<f64>] {
        &self.probs
    }
}

fn check_ids(dims: &Dims, ids: &[u32], what: &'static str) -> Result<()> {
    if ids.is_empty() {
        return Err(Error::Empty(what));
    }
    if let Some(bad) = ids.iter().find(|&&i| i as usize >= dims.vocab) {
        return Err(Error::InvalidArgument(format!(
            "token id {bad} outside vocabulary of {}",
            dims.vocab
        )));
    }
    Ok(())
}

fn encode(params: &GeneratorParams, src: &[u32]) -> Vec<CellStep> {
    let Dims { embed, hidden, .. } = params.dims;
    let w = params.views();
    let mut h = vec![0.0; hidden];
    let mut steps = Vec::with_capacity(src.len());
    for &tok in src {
        let x = &w.embed[tok as usize * embed..(tok as usize + 1) * embed];
        let step = cell_forward(&w.enc, x, &h);
        h.clone_from(&step.h);
        steps.push(step);
    }
    steps
}

/// Attention context and output distribution for decoder state `d`.
fn emit(params: &GeneratorParams, enc: &[CellStep], d: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let Dims { vocab, hidden, .. } = params.dims;
    let w = params.views();
    let mut alpha: Vec<f64> = enc.iter().map(|e| dot(d, &e.h)).collect();
    softmax_in_place(&mut alpha);
    let mut out = Vec::with_capacity(2 * hidden);
    out.extend_from_slice(d);
    out.resize(2 * hidden, 0.0);
    for (a, e) in alpha.iter().zip(enc) {
        axpy(&mut out[hidden..], *a, &e.h);
    }
    let mut logits: Vec<f64> = (0..vocab)
        .map(|v| w.out_b[v] + dot(&w.out_w[v * 2 * hidden..(v + 1) * 2 * hidden], &out))
        .collect();
    softmax_in_place(&mut logits);
    (alpha, out, logits)
}

/// Teacher-forced negative log-likelihood of `reference` followed by EOS.
pub fn forward_nll(params: &GeneratorParams, src: &[u32], reference: &[u32]) -> Result<(f64, Cache)> {
    check_ids(&params.dims, src, "source sequence")?;
    check_ids(&params.dims, reference, "reference sequence")?;
    let embed = params.dims.embed;
    let w = params.views();
    let enc = encode(params, src);

    let mut dec_inputs = Vec::with_capacity(reference.len() + 1);
    dec_inputs.push(BOS);
    dec_inputs.extend_from_slice(reference);
    let mut targets = reference.to_vec();
    targets.push(EOS);

    let mut h = enc.last().expect("non-empty source").h.clone();
    let mut cache = Cache {
        dims: params.dims,
        src: src.to_vec(),
        dec_inputs,
        targets,
        enc,
        dec: Vec::new(),
        alphas: Vec::new(),
        outs: Vec::new(),
        probs: Vec::new(),
    };
    let mut nll = 0.0;
    for t in 0..cache.targets.len() {
        let tok = cache.dec_inputs[t] as usize;
        let step = cell_forward(&w.dec, &w.embed[tok * embed..(tok + 1) * embed], &h);
        h.clone_from(&step.h);
        let (alpha, out, probs) = emit(params, &cache.enc, &step.h);
        nll -= probs[cache.targets[t] as usize].ln();
        cache.dec.push(step);
        cache.alphas.push(alpha);
        cache.outs.push(out);
        cache.probs.push(probs);
    }
    Ok((nll, cache))
}

/// Adds `scale * d nll / d params` into `grad`, a buffer laid out like `params`.
pub fn backward_into(params: &GeneratorParams, cache: &Cache, scale: f64, grad: &mut [f64]) -> Result<()> {
    if cache.dims != params.dims || grad.len() != params.data.len() {
        return Err(Error::Shape("cache or gradient buffer does not match parameters".into()));
    }
    let Dims { vocab, embed, hidden } = params.dims;
    let w = params.views();
    let mut g = views_mut(&params.dims, grad);
    let width = 2 * hidden;

    let mut d_enc = vec![vec![0.0; hidden]; cache.enc.len()];
    let mut dh_next = vec![0.0; hidden];
    let mut dlogits = vec![0.0; vocab];
    for t in (0..cache.targets.len()).rev() {
        let probs = &cache.probs[t];
        let out = &cache.outs[t];
        for (dl, p) in dlogits.iter_mut().zip(probs) {
            *dl = scale * p;
        }
        dlogits[cache.targets[t] as usize] -= scale;

        let mut d_out = vec![0.0; width];
        for (v, &dl) in dlogits.iter().enumerate() {
            let row = v * width..(v + 1) * width;
            axpy(&mut g.out_w[row.clone()], dl, out);
            g.out_b[v] += dl;
            axpy(&mut d_out, dl, &w.out_w[row]);
        }
        let (d_dec, d_ctx) = d_out.split_at(hidden);
        let mut dd = dh_next.clone();
        for (a, b) in dd.iter_mut().zip(d_dec) {
            *a += b;
        }

        let alpha = &cache.alphas[t];
        let d_state = &cache.dec[t].h;
        let d_alpha: Vec<f64> = cache.enc.iter().map(|e| dot(&e.h, d_ctx)).collect();
        let mean = dot(alpha, &d_alpha);
        for (j, e) in cache.enc.iter().enumerate() {
            axpy(&mut d_enc[j], alpha[j], d_ctx);
            let ds = alpha[j] * (d_alpha[j] - mean);
            axpy(&mut dd, ds, &e.h);
            axpy(&mut d_enc[j], ds, d_state);
        }

        let (dx, dh_prev) = cell_backward(&w.dec, &mut g.dec, &cache.dec[t], &dd, embed);
        let tok = cache.dec_inputs[t] as usize;
        axpy(&mut g.embed[tok * embed..(tok + 1) * embed], 1.0, &dx);
        dh_next = dh_prev;
    }

    // The decoder starts from the last encoder state.
    let last = cache.enc.len() - 1;
    for (a, b) in d_enc[last].iter_mut().zip(&dh_next) {
        *a += b;
    }
    let mut dh = vec![0.0; hidden];
    for j in (0..cache.enc.len()).rev() {
        for (a, b) in dh.iter_mut().zip(&d_enc[j]) {
            *a += b;
        }
        let (dx, dh_prev) = cell_backward(&w.enc, &mut g.enc, &cache.enc[j], &dh, embed);
        let tok = cache.src[j] as usize;
        axpy(&mut g.embed[tok * embed..(tok + 1) * embed], 1.0, &dx);
        dh = dh_prev;
    }
    Ok(())
}

/// Gradients of the teacher-forced NLL, one flat buffer laid out like the parameters.
pub fn backward(params: &GeneratorParams, cache: &Cache) -> Result<GeneratorParams> {
    let mut grad = GeneratorParams::zeros(params.dims);
    backward_into(params, cache, 1.0, &mut grad.data)?;
    Ok(grad)
}

/// Greedy decoding from BOS until EOS or `max_len` tokens. BOS and PAD are
/// never emitted.
pub fn greedy_decode(params: &GeneratorParams, src: &[u32], max_len: usize) -> Result<Vec<u32>> {
    check_ids(&params.dims, src, "source sequence")?;
    let embed = params.dims.embed;
    let w = params.views();
    let enc = encode(params, src);
    let mut h = enc.last().expect("non-empty source").h.clone();
    let mut prev = BOS;
    let mut out = Vec::new();
    while out.len() < max_len {
        let tok = prev as usize;
        let step = cell_forward(&w.dec, &w.embed[tok * embed..(tok + 1) * embed], &h);
        h = step.h;
        let (_, _, probs) = emit(params, &enc, &h);
        let next = probs
            .iter()
            .enumerate()
            .filter(|(i, _)| *i as u32 != BOS && *i as u32 != PAD)
            .fold((EOS as usize, f64::NEG_INFINITY), |best, (i, &p)| {
                if p > best.1 {
                    (i, p)
                } else {
                    best
                }
            })
            .0 as u32;
        if next == EOS {
            break;
        }
        out.push(next);
        prev = next;
    }
    Ok(out)
}
