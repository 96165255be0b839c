use crate::graph::Graph;
use crate::linalg::{axpy, Matrix};

use super::forward::{Estimates, ForwardCache, ReadoutCache};
use super::params::{Gradients, ModelParams, ReadoutMode, ReadoutParams};
use super::ModelError;

/// Squared-error training loss of one graph: `(1/2n) Σ_v (ŷ_v - λ₂)²` locally,
/// `½ (ŷ - λ₂)²` globally.
pub fn squared_loss(estimates: &Estimates, target: f64) -> f64 {
    let e = estimates.as_slice();
    e.iter().map(|y| (y - target).powi(2)).sum::<f64>() / (2.0 * e.len() as f64)
}

/// Exact gradient of [`squared_loss`] with respect to every parameter.
pub fn backward(
    params: &ModelParams,
    g: &Graph,
    cache: &ForwardCache,
    target: f64,
    mode: ReadoutMode,
) -> Result<(f64, Gradients), ModelError> {
    let mut grads = ModelParams::zeros(params.hidden);
    let loss = backward_accumulate(params, g, cache, target, mode, 1.0, &mut grads)?;
    Ok((loss, grads))
}

/// Adds `scale ×` the loss gradient into `grads` and returns the loss.
pub fn backward_accumulate(
    params: &ModelParams,
    g: &Graph,
    cache: &ForwardCache,
    target: f64,
    mode: ReadoutMode,
    scale: f64,
    grads: &mut Gradients,
) -> Result<f64, ModelError> {
    let n = g.node_count();
    let h = params.hidden;
    if cache.node_count != n {
        return Err(ModelError::CacheMismatch(format!(
            "cache has {} nodes, graph has {n}",
            cache.node_count
        )));
    }
    if cache.mode() != mode {
        return Err(ModelError::CacheMismatch(format!(
            "cache was produced in {} mode, backward requested {mode}",
            cache.mode()
        )));
    }
    if !grads.same_shape(params) || cache.final_states().cols() != h {
        return Err(ModelError::CacheMismatch("hidden size differs".into()));
    }

    // Readout: seeds d(loss)/d(final states).
    let last = cache.final_states();
    let mut d_state = Matrix::zeros(n, h);
    let loss = match &cache.readout {
        ReadoutCache::Local { pre } => {
            let mut loss = 0.0;
            for v in 0..n {
                let y = readout_output(&params.local, pre.row(v));
                let resid = y - target;
                loss += resid * resid;
                let dy = scale * resid / n as f64;
                readout_backward(
                    &params.local,
                    &mut grads.local,
                    last.row(v),
                    pre.row(v),
                    dy,
                    d_state.row_mut(v),
                );
            }
            loss / (2.0 * n as f64)
        }
        ReadoutCache::Global { pooled, pre } => {
            let y = readout_output(&params.global, pre);
            let resid = y - target;
            let mut d_pooled = vec![0.0; h];
            readout_backward(&params.global, &mut grads.global, pooled, pre, scale * resid, &mut d_pooled);
            let inv = 1.0 / n as f64;
            for v in 0..n {
                axpy(inv, &d_pooled, d_state.row_mut(v));
            }
            0.5 * resid * resid
        }
    };

    let gru = &params.gru;
    let wz_t = gru.w_z.transpose();
    let wr_t = gru.w_r.transpose();
    let wc_t = gru.w_c.transpose();
    let uz_t = gru.u_z.transpose();
    let ur_t = gru.u_r.transpose();
    let uc_t = gru.u_c.transpose();
    let wm_t = params.w_msg.transpose();

    let mut d_update = Matrix::zeros(n, h);
    let mut d_reset = Matrix::zeros(n, h);
    let mut d_cand = Matrix::zeros(n, h);
    let mut reset_state = Matrix::zeros(n, h);

    for t in (0..cache.rounds()).rev() {
        let prev = &cache.states[t];
        let step = &cache.steps[t];
        let mut d_prev = Matrix::zeros(n, h);
        let mut d_msg = Matrix::zeros(n, h);

        for v in 0..n {
            let dh = d_state.row(v);
            let hp = prev.row(v);
            let z = step.update_gate.row(v);
            let r = step.reset_gate.row(v);
            let c = step.candidate.row(v);
            let dp = d_prev.row_mut(v);
            let daz = d_update.row_mut(v);
            for k in 0..h {
                dp[k] = dh[k] * (1.0 - z[k]);
                daz[k] = dh[k] * (c[k] - hp[k]) * z[k] * (1.0 - z[k]);
            }
            let dac = d_cand.row_mut(v);
            for k in 0..h {
                dac[k] = dh[k] * z[k] * (1.0 - c[k] * c[k]);
            }
            let rh = reset_state.row_mut(v);
            for k in 0..h {
                rh[k] = r[k] * hp[k];
            }
        }

        // candidate: c = tanh(m W_c + (r ⊙ h) U_c + b_c)
        step.messages.t_matmul_acc(&d_cand, &mut grads.gru.w_c);
        reset_state.t_matmul_acc(&d_cand, &mut grads.gru.u_c);
        column_sum_acc(&d_cand, &mut grads.gru.b_c);
        let d_reset_state = d_cand.matmul(&uc_t);
        for v in 0..n {
            let hp = prev.row(v);
            let r = step.reset_gate.row(v);
            let drs = d_reset_state.row(v);
            let dar = d_reset.row_mut(v);
            for k in 0..h {
                dar[k] = drs[k] * hp[k] * r[k] * (1.0 - r[k]);
            }
            let dp = d_prev.row_mut(v);
            for k in 0..h {
                dp[k] += drs[k] * r[k];
            }
        }
        add_matmul(&d_cand, &wc_t, &mut d_msg);

        // reset gate
        step.messages.t_matmul_acc(&d_reset, &mut grads.gru.w_r);
        prev.t_matmul_acc(&d_reset, &mut grads.gru.u_r);
        column_sum_acc(&d_reset, &mut grads.gru.b_r);
        add_matmul(&d_reset, &wr_t, &mut d_msg);
        add_matmul(&d_reset, &ur_t, &mut d_prev);

        // update gate
        step.messages.t_matmul_acc(&d_update, &mut grads.gru.w_z);
        prev.t_matmul_acc(&d_update, &mut grads.gru.u_z);
        column_sum_acc(&d_update, &mut grads.gru.b_z);
        add_matmul(&d_update, &wz_t, &mut d_msg);
        add_matmul(&d_update, &uz_t, &mut d_prev);

        // messages: m_v = Σ_{w ∈ N(v)} h_w W_msg, so d(payload_w) = Σ_{v ∈ N(w)} d m_v
        let mut d_payload = Matrix::zeros(n, h);
        for w in 0..n {
            for &v in g.neighbors(w) {
                let (src, dst) = (d_msg.row(v), d_payload.row_mut(w));
                axpy(1.0, src, dst);
            }
        }
        prev.t_matmul_acc(&d_payload, &mut grads.w_msg);
        add_matmul(&d_payload, &wm_t, &mut d_prev);

        d_state = d_prev;
    }

    Ok(loss)
}

fn readout_output(r: &ReadoutParams, pre: &[f64]) -> f64 {
    pre.iter().zip(&r.w2).map(|(&a, w)| if a > 0.0 { a * w } else { 0.0 }).sum::<f64>() + r.b2
}

/// Backpropagates `dy` through `w2 · relu(x W1 + b1) + b2`; adds the input
/// gradient into `d_input`.
fn readout_backward(
    r: &ReadoutParams,
    gr: &mut ReadoutParams,
    input: &[f64],
    pre: &[f64],
    dy: f64,
    d_input: &mut [f64],
) {
    gr.b2 += dy;
    let h = pre.len();
    let mut d_pre = vec![0.0; h];
    for k in 0..h {
        if pre[k] > 0.0 {
            gr.w2[k] += dy * pre[k];
            d_pre[k] = dy * r.w2[k];
        }
    }
    for (k, &d) in d_pre.iter().enumerate() {
        gr.b1[k] += d;
    }
    for (i, &x) in input.iter().enumerate() {
        if x != 0.0 {
            axpy(x, &d_pre, gr.w1.row_mut(i));
        }
    }
    // d_input = W1 · d_pre
    for (i, di) in d_input.iter_mut().enumerate() {
        *di += r.w1.row(i).iter().zip(&d_pre).map(|(w, d)| w * d).sum::<f64>();
    }
}

fn column_sum_acc(m: &Matrix, acc: &mut [f64]) {
    for v in 0..m.rows() {
        axpy(1.0, m.row(v), acc);
    }
}

/// `acc += a · b`
fn add_matmul(a: &Matrix, b: &Matrix, acc: &mut Matrix) {
    let prod = a.matmul(b);
    axpy(1.0, prod.as_slice(), acc.as_mut_slice());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::forward::forward;
    use crate::model::params::init_params;

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let p = init_params(6, 5);
        let g = Graph::cycle(5).unwrap();
        for mode in [ReadoutMode::Local, ReadoutMode::Global] {
            let (est, cache) = forward(&p, &g, 2, mode);
            // vertex-transitive: all local estimates equal, so one target fits all
            let target = est.as_slice()[0];
            let (loss, grads) = backward(&p, &g, &cache, target, mode).unwrap();
            assert!(loss.abs() <= 1e-24);
            assert!(grads.to_flat().iter().all(|x| x.abs() <= 1e-12));
        }
    }

    #[test]
    fn local_output_bias_gradient_is_mean_residual() {
        let p = init_params(6, 8);
        let g = Graph::path(5).unwrap();
        let (est, cache) = forward(&p, &g, 3, ReadoutMode::Local);
        let target = 0.8;
        let (loss, grads) = backward(&p, &g, &cache, target, ReadoutMode::Local).unwrap();
        let e = est.as_slice();
        let expected = e.iter().map(|y| y - target).sum::<f64>() / e.len() as f64;
        assert!((grads.local.b2 - expected).abs() <= 1e-14);
        assert!((loss - squared_loss(&est, target)).abs() <= 1e-15);
        // the unused readout receives nothing
        assert!(grads.global.w1.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mismatched_cache_is_rejected() {
        let p = init_params(4, 1);
        let (_, cache) = forward(&p, &Graph::path(4).unwrap(), 2, ReadoutMode::Local);
        let other = Graph::path(5).unwrap();
        assert!(matches!(
            backward(&p, &other, &cache, 1.0, ReadoutMode::Local),
            Err(ModelError::CacheMismatch(_))
        ));
        assert!(matches!(
            backward(&p, &Graph::path(4).unwrap(), &cache, 1.0, ReadoutMode::Global),
            Err(ModelError::CacheMismatch(_))
        ));
    }
}
