use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Model sizes: vocabulary, embedding width and hidden width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
}

impl Dims {
    pub fn new(vocab: usize, embed: usize, hidden: usize) -> Self {
        Self {
            vocab,
            embed,
            hidden,
        }
    }

    /// Tensor names and shapes in storage order.
    pub fn tensors(&self) -> Vec<(&'static str, Vec<usize>)> {
        let Dims {
            vocab: v,
            embed: e,
            hidden: h,
        } = *self;
        vec![
            ("embed", vec![v, e]),
            ("enc_wu", vec![h, e + h]),
            ("enc_bu", vec![h]),
            ("enc_wc", vec![h, e + h]),
            ("enc_bc", vec![h]),
            ("dec_wu", vec![h, e + h]),
            ("dec_bu", vec![h]),
            ("dec_wc", vec![h, e + h]),
            ("dec_bc", vec![h]),
            ("out_w", vec![v, 2 * h]),
            ("out_b", vec![v]),
        ]
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|(_, s)| s.iter().product::<usize>()).sum()
    }

    /// `(offset, len)` of a named tensor.
    pub fn range(&self, name: &str) -> Option<(usize, usize)> {
        let mut off = 0;
        for (n, shape) in self.tensors() {
            let len: usize = shape.iter().product();
            if n == name {
                return Some((off, len));
            }
            off += len;
        }
        None
    }
}

/// Weights of one gated-update cell: `u = sigmoid(Wu [x; h] + bu)`,
/// `c = tanh(Wc [x; h] + bc)`, `h' = h + u (c - h)`.
pub(crate) struct Cell<'a> {
    pub wu: &'a [f64],
    pub bu: &'a [f64],
    pub wc: &'a [f64],
    pub bc: &'a [f64],
}

pub(crate) struct CellMut<'a> {
    pub wu: &'a mut [f64],
    pub bu: &'a mut [f64],
    pub wc: &'a mut [f64],
    pub bc: &'a mut [f64],
}

pub(crate) struct Views<'a> {
    pub embed: &'a [f64],
    pub enc: Cell<'a>,
    pub dec: Cell<'a>,
    pub out_w: &'a [f64],
    pub out_b: &'a [f64],
}

pub(crate) struct ViewsMut<'a> {
    pub embed: &'a mut [f64],
    pub enc: CellMut<'a>,
    pub dec: CellMut<'a>,
    pub out_w: &'a mut [f64],
    pub out_b: &'a mut [f64],
}

/// All generator weights in one flat buffer, laid out as [`Dims::tensors`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub dims: Dims,
    pub data: Vec<f64>,
}

impl GeneratorParams {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.n_params()],
        }
    }

    /// Weights uniform in `[-0.1, 0.1]`, biases zero.
    pub fn init(dims: Dims, seed: u64) -> Self {
        let mut p = Self::zeros(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (name, _) in dims.tensors() {
            if name.contains("_b") {
                continue;
            }
            for x in p.tensor_mut(name) {
                *x = rng.gen_range(-0.1..0.1);
            }
        }
        p
    }

    pub fn tensor(&self, name: &str) -> &[f64] {
        let (off, len) = self.dims.range(name).expect("known tensor");
        &self.data[off..off + len]
    }

    pub fn tensor_mut(&mut self, name: &str) -> &mut [f64] {
        let (off, len) = self.dims.range(name).expect("known tensor");
        &mut self.data[off..off + len]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub(crate) fn views(&self) -> Views<'_> {
        views(&self.dims, &self.data)
    }
}

pub(crate) fn views<'a>(dims: &Dims, data: &'a [f64]) -> Views<'a> {
    let lens: Vec<usize> = dims.tensors().iter().map(|(_, s)| s.iter().product()).collect();
    let mut rest = data;
    let mut next = |i: usize| {
        let (head, tail) = rest.split_at(lens[i]);
        rest = tail;
        head
    };
    Views {
        embed: next(0),
        enc: Cell {
            wu: next(1),
            bu: next(2),
            wc: next(3),
            bc: next(4),
        },
        dec: Cell {
            wu: next(5),
            bu: next(6),
            wc: next(7),
            bc: next(8),
        },
        out_w: next(9),
        out_b: next(10),
    }
}

pub(crate) fn views_mut<'a>(dims: &Dims, data: &'a mut [f64]) -> ViewsMut<'a> {
    let lens: Vec<usize> = dims.tensors().iter().map(|(_, s)| s.iter().product()).collect();
    let mut rest = data;
    let mut next = |i: usize| {
        let (head, tail) = std::mem::take(&mut rest).split_at_mut(lens[i]);
        rest = tail;
        head
    };
    ViewsMut {
        embed: next(0),
        enc: CellMut {
            wu: next(1),
            bu: next(2),
            wc: next(3),
            bc: next(4),
        },
        dec: CellMut {
            wu: next(5),
            bu: next(6),
            wc: next(7),
            bc: next(8),
        },
        out_w: next(9),
        out_b: next(10),
    }
}
