use crate::graph::Graph;
use crate::linalg::{axpy, dot, relu, sigmoid, vecmat_acc, Matrix};

use super::params::{GruParams, ModelParams, ReadoutMode, ReadoutParams};

/// Output of a forward pass.
#[derive(Clone, Debug, PartialEq)]
pub enum Estimates {
    /// One estimate per node, indexed by node id.
    Local(Vec<f64>),
    Global(f64),
}

impl Estimates {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            Estimates::Local(v) => v,
            Estimates::Global(x) => std::slice::from_ref(x),
        }
    }

    pub fn mode(&self) -> ReadoutMode {
        match self {
            Estimates::Local(_) => ReadoutMode::Local,
            Estimates::Global(_) => ReadoutMode::Global,
        }
    }
}

/// Activations of one message round.
#[derive(Clone, Debug)]
pub struct StepCache {
    pub messages: Matrix,
    pub update_gate: Matrix,
    pub reset_gate: Matrix,
    pub candidate: Matrix,
}

#[derive(Clone, Debug)]
pub enum ReadoutCache {
    /// Hidden-layer pre-activations, one row per node.
    Local { pre: Matrix },
    Global { pooled: Vec<f64>, pre: Vec<f64> },
}

/// Everything the backward pass needs. `states[t]` is the node-state matrix
/// after `t` rounds; `steps[t]` holds round `t + 1`.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub node_count: usize,
    pub states: Vec<Matrix>,
    pub steps: Vec<StepCache>,
    pub readout: ReadoutCache,
}

impl ForwardCache {
    pub fn rounds(&self) -> usize {
        self.steps.len()
    }

    pub fn mode(&self) -> ReadoutMode {
        match self.readout {
            ReadoutCache::Local { .. } => ReadoutMode::Local,
            ReadoutCache::Global { .. } => ReadoutMode::Global,
        }
    }

    pub fn final_states(&self) -> &Matrix {
        self.states.last().expect("cache holds the initial state")
    }
}

/// Every node starts at the first standard basis vector.
pub fn initial_state(n: usize, hidden: usize) -> Matrix {
    let mut h = Matrix::zeros(n, hidden);
    for v in 0..n {
        h[(v, 0)] = 1.0;
    }
    h
}

/// Payload node `w` sends to each neighbour: `h_w · W_msg`.
pub fn outgoing_message(params: &ModelParams, state: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; params.hidden];
    vecmat_acc(state, &params.w_msg, &mut out);
    out
}

/// Sums payloads in the given order, starting from the zero vector.
pub fn aggregate<'a>(hidden: usize, payloads: impl IntoIterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut m = vec![0.0; hidden];
    for p in payloads {
        axpy(1.0, p, &mut m);
    }
    m
}

/// Row `v` is the sum over neighbours `w` (ascending) of `h_w · W_msg`.
pub fn message_step(params: &ModelParams, g: &Graph, states: &Matrix) -> Matrix {
    let n = g.node_count();
    let h = params.hidden;
    let payloads: Vec<Vec<f64>> = (0..n).map(|w| outgoing_message(params, states.row(w))).collect();
    let mut messages = Matrix::zeros(n, h);
    for v in 0..n {
        let m = aggregate(h, g.neighbors(v).iter().map(|&w| payloads[w].as_slice()));
        messages.row_mut(v).copy_from_slice(&m);
    }
    messages
}

/// Gate activations of one GRU cell evaluation.
#[derive(Clone, Debug, Default)]
pub struct GruGates {
    pub update: Vec<f64>,
    pub reset: Vec<f64>,
    pub candidate: Vec<f64>,
}

/// One GRU cell: returns the new state and the gate activations.
///
/// ```text
/// z  = σ(m W_z + h U_z + b_z)
/// r  = σ(m W_r + h U_r + b_r)
/// c  = tanh(m W_c + (r ⊙ h) U_c + b_c)
/// h' = (1 - z) ⊙ h + z ⊙ c
/// ```
pub fn gru_cell(gru: &GruParams, state: &[f64], message: &[f64]) -> (Vec<f64>, GruGates) {
    let mut z = gru.b_z.clone();
    vecmat_acc(message, &gru.w_z, &mut z);
    vecmat_acc(state, &gru.u_z, &mut z);
    z.iter_mut().for_each(|x| *x = sigmoid(*x));

    let mut r = gru.b_r.clone();
    vecmat_acc(message, &gru.w_r, &mut r);
    vecmat_acc(state, &gru.u_r, &mut r);
    r.iter_mut().for_each(|x| *x = sigmoid(*x));

    let reset_state: Vec<f64> = r.iter().zip(state).map(|(a, b)| a * b).collect();
    let mut c = gru.b_c.clone();
    vecmat_acc(message, &gru.w_c, &mut c);
    vecmat_acc(&reset_state, &gru.u_c, &mut c);
    c.iter_mut().for_each(|x| *x = x.tanh());

    let next = state
        .iter()
        .zip(&z)
        .zip(&c)
        .map(|((h, z), c)| (1.0 - z) * h + z * c)
        .collect();
    (
        next,
        GruGates {
            update: z,
            reset: r,
            candidate: c,
        },
    )
}

pub fn gru_update(params: &ModelParams, states: &Matrix, messages: &Matrix) -> Matrix {
    gru_update_cached(params, states, messages).0
}

fn gru_update_cached(params: &ModelParams, states: &Matrix, messages: &Matrix) -> (Matrix, StepCache) {
    let (n, h) = states.shape();
    let mut next = Matrix::zeros(n, h);
    let mut update_gate = Matrix::zeros(n, h);
    let mut reset_gate = Matrix::zeros(n, h);
    let mut candidate = Matrix::zeros(n, h);
    for v in 0..n {
        let (row, gates) = gru_cell(&params.gru, states.row(v), messages.row(v));
        next.row_mut(v).copy_from_slice(&row);
        update_gate.row_mut(v).copy_from_slice(&gates.update);
        reset_gate.row_mut(v).copy_from_slice(&gates.reset);
        candidate.row_mut(v).copy_from_slice(&gates.candidate);
    }
    (
        next,
        StepCache {
            messages: messages.clone(),
            update_gate,
            reset_gate,
            candidate,
        },
    )
}

/// `(output, hidden pre-activation)` of a single-hidden-layer readout.
pub(crate) fn readout_with_pre(r: &ReadoutParams, input: &[f64]) -> (f64, Vec<f64>) {
    let mut pre = r.b1.clone();
    vecmat_acc(input, &r.w1, &mut pre);
    let hidden: Vec<f64> = pre.iter().map(|&a| relu(a)).collect();
    (dot(&r.w2, &hidden) + r.b2, pre)
}

pub fn readout_local(params: &ModelParams, state: &[f64]) -> f64 {
    readout_with_pre(&params.local, state).0
}

/// Mean over rows, summed in ascending row order.
pub fn mean_pool(states: &Matrix) -> Vec<f64> {
    let (n, h) = states.shape();
    let mut pooled = vec![0.0; h];
    for v in 0..n {
        axpy(1.0, states.row(v), &mut pooled);
    }
    let inv = 1.0 / n as f64;
    pooled.iter_mut().for_each(|x| *x *= inv);
    pooled
}

pub fn readout_global(params: &ModelParams, states: &Matrix) -> f64 {
    readout_with_pre(&params.global, &mean_pool(states)).0
}

/// Runs `rounds` message/update rounds from the initial state, then the
/// readout selected by `mode`.
pub fn forward(params: &ModelParams, g: &Graph, rounds: usize, mode: ReadoutMode) -> (Estimates, ForwardCache) {
    assert!(rounds >= 1, "at least one message round is required");
    let n = g.node_count();
    let mut states = Vec::with_capacity(rounds + 1);
    let mut steps = Vec::with_capacity(rounds);
    states.push(initial_state(n, params.hidden));
    for _ in 0..rounds {
        let current = states.last().expect("non-empty");
        let messages = message_step(params, g, current);
        let (next, step) = gru_update_cached(params, current, &messages);
        states.push(next);
        steps.push(step);
    }
    let last = states.last().expect("non-empty");
    let (estimates, readout) = match mode {
        ReadoutMode::Local => {
            let mut pre = Matrix::zeros(n, params.hidden);
            let mut out = Vec::with_capacity(n);
            for v in 0..n {
                let (y, a) = readout_with_pre(&params.local, last.row(v));
                pre.row_mut(v).copy_from_slice(&a);
                out.push(y);
            }
            (Estimates::Local(out), ReadoutCache::Local { pre })
        }
        ReadoutMode::Global => {
            let pooled = mean_pool(last);
            let (y, pre) = readout_with_pre(&params.global, &pooled);
            (Estimates::Global(y), ReadoutCache::Global { pooled, pre })
        }
    };
    (
        estimates,
        ForwardCache {
            node_count: n,
            states,
            steps,
            readout,
        },
    )
}

/// Forward pass without keeping the cache.
pub fn predict(params: &ModelParams, g: &Graph, rounds: usize, mode: ReadoutMode) -> Estimates {
    forward(params, g, rounds, mode).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::init_params;

    #[test]
    fn initial_state_is_first_basis_vector() {
        let h = initial_state(2, 3);
        assert_eq!(h, Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]));
    }

    #[test]
    fn message_step_with_identity_transform() {
        let mut p = ModelParams::zeros(3);
        p.w_msg = Matrix::identity(3);
        let g = Graph::path(3).unwrap();
        let states = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![0.5, 0.5, 0.5], vec![-1.0, 4.0, 0.0]]);
        let m = message_step(&p, &g, &states);
        assert_eq!(m.row(1), &[0.0, 6.0, 3.0]);
        assert_eq!(m.row(0), states.row(1));

        let equal = Matrix::from_rows(&vec![vec![0.25, -1.0, 2.0]; 3]);
        let m = message_step(&p, &g, &equal);
        for v in 0..3 {
            let deg = g.degree(v) as f64;
            assert_eq!(m.row(v), &[0.25 * deg, -deg, 2.0 * deg]);
        }
    }

    #[test]
    fn empty_neighbourhood_gives_zero_message() {
        let p = init_params(4, 0);
        let g = Graph::new(3, [(0, 1)]).unwrap();
        let m = message_step(&p, &g, &initial_state(3, 4));
        assert!(m.row(2).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gru_gate_limits() {
        let mut p = init_params(4, 3);
        let states = Matrix::from_rows(&[vec![0.3, -0.2, 0.9, 0.1], vec![1.0, 0.0, 0.0, -0.5]]);
        let msgs = Matrix::from_rows(&[vec![1.0, 2.0, -1.0, 0.5], vec![0.0, 0.1, 0.2, 0.3]]);

        p.gru.b_z = vec![-50.0; 4];
        let closed = gru_update(&p, &states, &msgs);
        for (a, b) in closed.as_slice().iter().zip(states.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }

        p.gru.b_z = vec![50.0; 4];
        let (_, cache) = gru_update_cached(&p, &states, &msgs);
        let open = gru_update(&p, &states, &msgs);
        for (a, c) in open.as_slice().iter().zip(cache.candidate.as_slice()) {
            assert!((a - c).abs() < 1e-9);
        }

        let zero = ModelParams::zeros(4);
        let out = gru_update(&zero, &Matrix::zeros(2, 4), &Matrix::zeros(2, 4));
        assert!(out.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn readout_examples() {
        let mut p = ModelParams::zeros(3);
        p.local.b2 = 0.7;
        assert_eq!(readout_local(&p, &[1.0, 2.0, 3.0]), 0.7);

        let mut p = init_params(3, 9);
        p.local.b2 = -0.4;
        assert_eq!(readout_local(&p, &[0.0, 0.0, 0.0]), -0.4);

        // every hidden pre-activation negative
        p.local.b1 = vec![-100.0; 3];
        assert_eq!(readout_local(&p, &[0.1, 0.2, 0.3]), -0.4);
    }

    #[test]
    fn global_readout_examples() {
        let p = init_params(4, 2);
        let h = Matrix::from_rows(&[vec![0.1, 0.2, 0.3, 0.4], vec![1.0, -1.0, 0.5, 0.0], vec![0.0, 0.0, 2.0, 1.0]]);
        let permuted = Matrix::from_rows(&[h.row(2).to_vec(), h.row(0).to_vec(), h.row(1).to_vec()]);
        assert!((readout_global(&p, &h) - readout_global(&p, &permuted)).abs() <= 1e-12);

        let single = Matrix::from_rows(&[vec![0.1, 0.2, 0.3, 0.4]]);
        assert_eq!(readout_global(&p, &single), readout_with_pre(&p.global, single.row(0)).0);

        let same = Matrix::from_rows(&vec![vec![0.5, 0.25, -0.125, 2.0]; 4]);
        assert_eq!(readout_global(&p, &same), readout_with_pre(&p.global, same.row(0)).0);
    }

    #[test]
    fn forward_on_vertex_transitive_graph_is_uniform() {
        let p = init_params(8, 4);
        let (est, cache) = forward(&p, &Graph::cycle(5).unwrap(), 3, ReadoutMode::Local);
        let v = est.as_slice();
        assert_eq!(v.len(), 5);
        assert!(v.iter().all(|x| (x - v[0]).abs() <= 1e-9));
        assert_eq!(cache.rounds(), 3);
        assert_eq!(cache.states.len(), 4);
    }

    #[test]
    fn depth_changes_output() {
        let p = init_params(8, 4);
        let g = Graph::path(6).unwrap();
        let one = predict(&p, &g, 1, ReadoutMode::Global);
        let two = predict(&p, &g, 2, ReadoutMode::Global);
        assert_ne!(one, two);
    }
}
