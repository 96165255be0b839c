use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Matrix;

pub const DEFAULT_HIDDEN: usize = 100;

/// Which readout produces the estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReadoutMode {
    /// One estimate per node from its own final state.
    Local,
    /// One estimate per graph from the mean-pooled final states.
    Global,
}

impl fmt::Display for ReadoutMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReadoutMode::Local => "local",
            ReadoutMode::Global => "global",
        })
    }
}

impl FromStr for ReadoutMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(ReadoutMode::Local),
            "global" => Ok(ReadoutMode::Global),
            other => Err(format!("unknown readout mode {other:?} (expected local or global)")),
        }
    }
}

/// GRU weights. `w_*` act on the incoming message, `u_*` on the state.
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams {
    pub w_z: Matrix,
    pub w_r: Matrix,
    pub w_c: Matrix,
    pub u_z: Matrix,
    pub u_r: Matrix,
    pub u_c: Matrix,
    pub b_z: Vec<f64>,
    pub b_r: Vec<f64>,
    pub b_c: Vec<f64>,
}

/// Single-hidden-layer readout `w2 · relu(h W1 + b1) + b2`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Every learnable weight of the network. Weights are shared across message
/// rounds. Matrices multiply row vectors from the right.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub hidden: usize,
    pub w_msg: Matrix,
    pub gru: GruParams,
    pub local: ReadoutParams,
    pub global: ReadoutParams,
}

/// Gradients share the parameter layout.
pub type Gradients = ModelParams;

/// Named, shaped view of one parameter tensor. An empty shape is a scalar.
pub struct TensorRef<'a> {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

pub struct TensorMut<'a> {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub data: &'a mut [f64],
}

impl ReadoutParams {
    fn zeros(h: usize) -> Self {
        Self {
            w1: Matrix::zeros(h, h),
            b1: vec![0.0; h],
            w2: vec![0.0; h],
            b2: 0.0,
        }
    }
}

impl ModelParams {
    pub fn zeros(hidden: usize) -> Self {
        let m = || Matrix::zeros(hidden, hidden);
        let v = || vec![0.0; hidden];
        Self {
            hidden,
            w_msg: m(),
            gru: GruParams {
                w_z: m(),
                w_r: m(),
                w_c: m(),
                u_z: m(),
                u_r: m(),
                u_c: m(),
                b_z: v(),
                b_r: v(),
                b_c: v(),
            },
            local: ReadoutParams::zeros(hidden),
            global: ReadoutParams::zeros(hidden),
        }
    }

    pub fn readout(&self, mode: ReadoutMode) -> &ReadoutParams {
        match mode {
            ReadoutMode::Local => &self.local,
            ReadoutMode::Global => &self.global,
        }
    }

    pub fn readout_mut(&mut self, mode: ReadoutMode) -> &mut ReadoutParams {
        match mode {
            ReadoutMode::Local => &mut self.local,
            ReadoutMode::Global => &mut self.global,
        }
    }

    /// Tensors in canonical order (the checkpoint order).
    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        fn mat<'a>(name: &'static str, m: &'a Matrix) -> TensorRef<'a> {
            TensorRef {
                name,
                shape: vec![m.rows(), m.cols()],
                data: m.as_slice(),
            }
        }
        fn vec<'a>(name: &'static str, v: &'a [f64]) -> TensorRef<'a> {
            TensorRef {
                name,
                shape: vec![v.len()],
                data: v,
            }
        }
        vec![
            mat("W_msg", &self.w_msg),
            mat("gru.W_z", &self.gru.w_z),
            mat("gru.W_r", &self.gru.w_r),
            mat("gru.W_c", &self.gru.w_c),
            mat("gru.U_z", &self.gru.u_z),
            mat("gru.U_r", &self.gru.u_r),
            mat("gru.U_c", &self.gru.u_c),
            vec("gru.b_z", &self.gru.b_z),
            vec("gru.b_r", &self.gru.b_r),
            vec("gru.b_c", &self.gru.b_c),
            mat("local.W1", &self.local.w1),
            vec("local.b1", &self.local.b1),
            vec("local.w2", &self.local.w2),
            TensorRef {
                name: "local.b2",
                shape: vec![],
                data: std::slice::from_ref(&self.local.b2),
            },
            mat("global.W1", &self.global.w1),
            vec("global.b1", &self.global.b1),
            vec("global.w2", &self.global.w2),
            TensorRef {
                name: "global.b2",
                shape: vec![],
                data: std::slice::from_ref(&self.global.b2),
            },
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        fn mat<'a>(name: &'static str, m: &'a mut Matrix) -> TensorMut<'a> {
            TensorMut {
                name,
                shape: vec![m.rows(), m.cols()],
                data: m.as_mut_slice(),
            }
        }
        fn vec<'a>(name: &'static str, v: &'a mut [f64]) -> TensorMut<'a> {
            TensorMut {
                name,
                shape: vec![v.len()],
                data: v,
            }
        }
        let gru = &mut self.gru;
        let local = &mut self.local;
        let global = &mut self.global;
        vec![
            mat("W_msg", &mut self.w_msg),
            mat("gru.W_z", &mut gru.w_z),
            mat("gru.W_r", &mut gru.w_r),
            mat("gru.W_c", &mut gru.w_c),
            mat("gru.U_z", &mut gru.u_z),
            mat("gru.U_r", &mut gru.u_r),
            mat("gru.U_c", &mut gru.u_c),
            vec("gru.b_z", &mut gru.b_z),
            vec("gru.b_r", &mut gru.b_r),
            vec("gru.b_c", &mut gru.b_c),
            mat("local.W1", &mut local.w1),
            vec("local.b1", &mut local.b1),
            vec("local.w2", &mut local.w2),
            TensorMut {
                name: "local.b2",
                shape: vec![],
                data: std::slice::from_mut(&mut local.b2),
            },
            mat("global.W1", &mut global.w1),
            vec("global.b1", &mut global.b1),
            vec("global.w2", &mut global.w2),
            TensorMut {
                name: "global.b2",
                shape: vec![],
                data: std::slice::from_mut(&mut global.b2),
            },
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    /// All parameters flattened in canonical order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.data.iter().copied()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|x| x.is_finite()))
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        self.hidden == other.hidden
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, scale: f64, other: &ModelParams) {
        assert!(self.same_shape(other), "parameter shape mismatch");
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.data.iter_mut().zip(src.data) {
                *d += scale * s;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.data.iter_mut().for_each(|x| *x *= s);
        }
    }

    /// Mutable access to the `index`-th scalar of the flattened layout.
    pub fn flat_mut(&mut self, mut index: usize) -> &mut f64 {
        for t in self.tensors_mut() {
            if index < t.data.len() {
                return &mut t.data[index];
            }
            index -= t.data.len();
        }
        panic!("parameter index out of range");
    }

    pub fn flat_get(&self, mut index: usize) -> f64 {
        for t in self.tensors() {
            if index < t.data.len() {
                return t.data[index];
            }
            index -= t.data.len();
        }
        panic!("parameter index out of range");
    }
}

/// Glorot-uniform matrices, zero biases; deterministic per seed.
pub fn init_params(hidden: usize, seed: u64) -> ModelParams {
    assert!(hidden >= 1, "hidden size must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ModelParams::zeros(hidden);
    for t in p.tensors_mut() {
        let (fan_in, fan_out) = match (t.name, t.shape.as_slice()) {
            (_, [rows, cols]) => (*rows, *cols),
            (name, [len]) if name.ends_with("w2") => (*len, 1),
            _ => continue,
        };
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for x in t.data.iter_mut() {
            *x = rng.gen_range(-bound..=bound);
        }
    }
    p
}
