//! Forward pass with a recorded tape, and the matching reverse pass.
//!
//! Pipeline per trajectory: token-mean pooling → input projection →
//! sinusoidal step encoding → pre-norm encoder blocks (multi-head
//! self-attention, ReLU feed-forward, both residual) → mean over steps →
//! two-layer ReLU head → logit.

use super::mat::{dot, Mat};
use super::model::{EncoderBlock, LayerNorm, Linear, ModelConfig, Parameters, RewardModel};

const NORM_EPS: f64 = 1e-5;

/// Probability clamp used by both the output and the loss.
pub const PROB_CLAMP: f64 = 1e-12;

pub fn sinusoidal_encoding(steps: usize, dim: usize) -> Mat {
    let mut pe = Mat::zeros(steps, dim);
    for t in 0..steps {
        let row = pe.row_mut(t);
        for i in (0..dim).step_by(2) {
            let angle = t as f64 / 10_000f64.powf(i as f64 / dim as f64);
            row[i] = angle.sin();
            if i + 1 < dim {
                row[i + 1] = angle.cos();
            }
        }
    }
    pe
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

struct NormTape {
    normalized: Mat,
    inv_std: Vec<f64>,
}

fn layer_norm(x: &Mat, ln: &LayerNorm) -> (Mat, NormTape) {
    let mut out = Mat::zeros(x.rows, x.cols);
    let mut normalized = Mat::zeros(x.rows, x.cols);
    let mut inv_std = Vec::with_capacity(x.rows);
    let n = x.cols as f64;
    for i in 0..x.rows {
        let row = x.row(i);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let r = 1.0 / (var + NORM_EPS).sqrt();
        inv_std.push(r);
        let xh = normalized.row_mut(i);
        for (k, v) in row.iter().enumerate() {
            xh[k] = (v - mean) * r;
        }
        let o = out.row_mut(i);
        for k in 0..x.cols {
            o[k] = ln.gain[k] * xh[k] + ln.bias[k];
        }
    }
    (
        out,
        NormTape {
            normalized,
            inv_std,
        },
    )
}

fn layer_norm_backward(dy: &Mat, tape: &NormTape, ln: &LayerNorm, grad: &mut LayerNorm) -> Mat {
    let n = dy.cols as f64;
    let mut dx = Mat::zeros(dy.rows, dy.cols);
    for i in 0..dy.rows {
        let dyr = dy.row(i);
        let xh = tape.normalized.row(i);
        let mut dxh = vec![0.0; dy.cols];
        for k in 0..dy.cols {
            grad.gain[k] += dyr[k] * xh[k];
            grad.bias[k] += dyr[k];
            dxh[k] = dyr[k] * ln.gain[k];
        }
        let mean_d = dxh.iter().sum::<f64>() / n;
        let mean_dx = dot(&dxh, xh) / n;
        let r = tape.inv_std[i];
        let out = dx.row_mut(i);
        for k in 0..dy.cols {
            out[k] = r * (dxh[k] - mean_d - xh[k] * mean_dx);
        }
    }
    dx
}

/// `dY` through `Y = X W + b`; accumulates into `grad`, returns `dX`.
fn linear_backward(x: &Mat, dy: &Mat, layer: &Linear, grad: &mut Linear) -> Mat {
    x.matmul_tn_into(dy, &mut grad.weight);
    dy.col_sums_into(&mut grad.bias);
    dy.matmul_nt(&layer.weight)
}

fn relu(x: &Mat) -> Mat {
    Mat {
        data: x.data.iter().map(|v| v.max(0.0)).collect(),
        ..x.clone()
    }
}

fn relu_backward(pre: &Mat, dy: &mut Mat) {
    dy.data.iter_mut().zip(&pre.data).for_each(|(d, p)| {
        if *p <= 0.0 {
            *d = 0.0;
        }
    });
}

fn softmax_rows(s: &mut Mat) {
    for i in 0..s.rows {
        let row = s.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
}

struct BlockTape {
    input: Mat,
    norm1: NormTape,
    n1: Mat,
    q: Mat,
    k: Mat,
    v: Mat,
    probs: Vec<Mat>,
    heads_out: Mat,
    norm2: NormTape,
    n2: Mat,
    ff_pre: Mat,
    ff_act: Mat,
}

pub(crate) struct Tape {
    pooled_steps: Mat,
    blocks: Vec<BlockTape>,
    steps: usize,
    seq_mean: Vec<f64>,
    head_pre: Vec<f64>,
    head_act: Vec<f64>,
    pub logit: f64,
}

fn block_forward(x: Mat, block: &EncoderBlock, cfg: &ModelConfig) -> (Mat, BlockTape) {
    let (n1, norm1) = layer_norm(&x, &block.norm1);
    let q = block.query.forward(&n1);
    let k = block.key.forward(&n1);
    let v = block.value.forward(&n1);
    let dh = cfg.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    let mut heads_out = Mat::zeros(x.rows, cfg.model_dim);
    let mut probs = Vec::with_capacity(cfg.heads);
    for h in 0..cfg.heads {
        let (qh, kh, vh) = (
            q.col_block(h * dh, dh),
            k.col_block(h * dh, dh),
            v.col_block(h * dh, dh),
        );
        let mut s = qh.matmul_nt(&kh);
        s.data.iter_mut().for_each(|v| *v *= scale);
        softmax_rows(&mut s);
        heads_out.set_col_block(h * dh, &s.matmul(&vh));
        probs.push(s);
    }
    let mut x2 = block.output.forward(&heads_out);
    x2.add_assign(&x);

    let (n2, norm2) = layer_norm(&x2, &block.norm2);
    let ff_pre = block.ff1.forward(&n2);
    let ff_act = relu(&ff_pre);
    let mut out = block.ff2.forward(&ff_act);
    out.add_assign(&x2);

    let tape = BlockTape {
        input: x,
        norm1,
        n1,
        q,
        k,
        v,
        probs,
        heads_out,
        norm2,
        n2,
        ff_pre,
        ff_act,
    };
    (out, tape)
}

fn block_backward(
    d_out: Mat,
    tape: &BlockTape,
    block: &EncoderBlock,
    grad: &mut EncoderBlock,
    cfg: &ModelConfig,
) -> Mat {
    // out = x2 + ff2(relu(ff1(norm2(x2))))
    let mut d_act = linear_backward(&tape.ff_act, &d_out, &block.ff2, &mut grad.ff2);
    relu_backward(&tape.ff_pre, &mut d_act);
    let dn2 = linear_backward(&tape.n2, &d_act, &block.ff1, &mut grad.ff1);
    let mut dx2 = layer_norm_backward(&dn2, &tape.norm2, &block.norm2, &mut grad.norm2);
    dx2.add_assign(&d_out);

    // x2 = x + output(attention(norm1(x)))
    let d_heads = linear_backward(&tape.heads_out, &dx2, &block.output, &mut grad.output);
    let dh = cfg.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    let rows = tape.input.rows;
    let mut dq = Mat::zeros(rows, cfg.model_dim);
    let mut dk = Mat::zeros(rows, cfg.model_dim);
    let mut dv = Mat::zeros(rows, cfg.model_dim);
    for (h, a) in tape.probs.iter().enumerate() {
        let d_o = d_heads.col_block(h * dh, dh);
        let qh = tape.q.col_block(h * dh, dh);
        let kh = tape.k.col_block(h * dh, dh);
        let vh = tape.v.col_block(h * dh, dh);
        let da = d_o.matmul_nt(&vh);
        dv.set_col_block(h * dh, &a.matmul_tn(&d_o));
        let mut ds = Mat::zeros(rows, rows);
        for i in 0..rows {
            let (ar, dar) = (a.row(i), da.row(i));
            let inner = dot(ar, dar);
            for (j, o) in ds.row_mut(i).iter_mut().enumerate() {
                *o = ar[j] * (dar[j] - inner) * scale;
            }
        }
        dq.set_col_block(h * dh, &ds.matmul(&kh));
        dk.set_col_block(h * dh, &ds.matmul_tn(&qh));
    }
    let mut dn1 = linear_backward(&tape.n1, &dq, &block.query, &mut grad.query);
    dn1.add_assign(&linear_backward(&tape.n1, &dk, &block.key, &mut grad.key));
    dn1.add_assign(&linear_backward(
        &tape.n1,
        &dv,
        &block.value,
        &mut grad.value,
    ));
    let mut dx = layer_norm_backward(&dn1, &tape.norm1, &block.norm1, &mut grad.norm1);
    dx.add_assign(&dx2);
    dx
}

/// Forward pass on already pooled step vectors (`T × d`).
pub(crate) fn forward_tape(model: &RewardModel, pooled_steps: Mat) -> Tape {
    let cfg = &model.config;
    let p = &model.params;
    let steps = pooled_steps.rows;
    let mut x = p.input.forward(&pooled_steps);
    if cfg.positional_encoding {
        x.add_assign(&sinusoidal_encoding(steps, cfg.model_dim));
    }
    let mut blocks = Vec::with_capacity(p.blocks.len());
    for block in &p.blocks {
        let (next, tape) = block_forward(x, block, cfg);
        blocks.push(tape);
        x = next;
    }
    let seq_mean = x.mean_rows();
    let head_pre: Vec<f64> = (0..cfg.head_hidden)
        .map(|j| {
            p.head1.bias[j]
                + seq_mean
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s * p.head1.weight.data[i * cfg.head_hidden + j])
                    .sum::<f64>()
        })
        .collect();
    let head_act: Vec<f64> = head_pre.iter().map(|v| v.max(0.0)).collect();
    let logit = p.head2.bias[0] + dot(&head_act, &p.head2.weight.data);
    Tape {
        pooled_steps,
        blocks,
        steps,
        seq_mean,
        head_pre,
        head_act,
        logit,
    }
}

/// Reverse pass from `d loss / d logit`, accumulating into `grad`.
pub(crate) fn backward(model: &RewardModel, tape: &Tape, d_logit: f64, grad: &mut Parameters) {
    let cfg = &model.config;
    let p = &model.params;
    let hh = cfg.head_hidden;

    grad.head2.bias[0] += d_logit;
    let mut d_pre = vec![0.0; hh];
    for j in 0..hh {
        grad.head2.weight.data[j] += tape.head_act[j] * d_logit;
        if tape.head_pre[j] > 0.0 {
            d_pre[j] = p.head2.weight.data[j] * d_logit;
        }
    }
    let mut d_mean = vec![0.0; cfg.model_dim];
    for (i, s) in tape.seq_mean.iter().enumerate() {
        let w = &p.head1.weight.data[i * hh..(i + 1) * hh];
        let gw = &mut grad.head1.weight.data[i * hh..(i + 1) * hh];
        for j in 0..hh {
            gw[j] += s * d_pre[j];
        }
        d_mean[i] = dot(w, &d_pre);
    }
    grad.head1
        .bias
        .iter_mut()
        .zip(&d_pre)
        .for_each(|(g, d)| *g += d);

    let mut dx = Mat::zeros(tape.steps, cfg.model_dim);
    let inv = 1.0 / tape.steps as f64;
    for t in 0..tape.steps {
        dx.row_mut(t)
            .iter_mut()
            .zip(&d_mean)
            .for_each(|(o, d)| *o = d * inv);
    }
    for ((block, bt), g) in p
        .blocks
        .iter()
        .zip(&tape.blocks)
        .zip(grad.blocks.iter_mut())
        .rev()
    {
        dx = block_backward(dx, bt, block, g, cfg);
    }
    // positional encoding is constant
    linear_backward(&tape.pooled_steps, &dx, &p.input, &mut grad.input);
}
