//! Batched kernels. Activations are row-major with the batch on the leading
//! axis; convolution feature maps are `[batch][channel][row][col]`.

pub(crate) const BN_EPS: f64 = 1e-5;

/// `c = a * b + beta * c` with `c` row-major `m x n`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(c.len() >= m * n);
    if k > 0 {
        assert!(a.len() > (m - 1) * rsa + (k - 1) * csa);
        assert!(b.len() > (k - 1) * rsb + (n - 1) * csb);
    }
    // SAFETY: the asserts above bound every index touched by the kernel.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub(crate) struct ConvDims {
    pub batch: usize,
    pub cin: usize,
    pub cout: usize,
    pub h: usize,
    pub w: usize,
}

impl ConvDims {
    fn k(&self) -> usize {
        self.cin * 9
    }
    fn hw(&self) -> usize {
        self.h * self.w
    }
    fn ncol(&self) -> usize {
        self.batch * self.hw()
    }
}

/// Returns the output and the unfolded patches `[cin*9][batch*h*w]`.
pub(crate) fn conv_forward(
    d: &ConvDims,
    x: &[f64],
    weight: &[f64],
    bias: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let (k, hw, ncol) = (d.k(), d.hw(), d.ncol());
    let mut cols = vec![0.0; k * ncol];
    for bi in 0..d.batch {
        for c in 0..d.cin {
            let plane = &x[(bi * d.cin + c) * hw..(bi * d.cin + c + 1) * hw];
            for ky in 0..3 {
                for kx in 0..3 {
                    let row = (c * 9 + ky * 3 + kx) * ncol + bi * hw;
                    for y in 0..d.h {
                        let sy = y + ky;
                        if sy < 1 || sy > d.h {
                            continue;
                        }
                        let src = (sy - 1) * d.w;
                        let dst = row + y * d.w;
                        for xx in 0..d.w {
                            let sx = xx + kx;
                            if sx >= 1 && sx <= d.w {
                                cols[dst + xx] = plane[src + sx - 1];
                            }
                        }
                    }
                }
            }
        }
    }
    let mut tmp = vec![0.0; d.cout * ncol];
    gemm(d.cout, k, ncol, weight, (k, 1), &cols, (ncol, 1), 0.0, &mut tmp);
    let mut out = vec![0.0; d.batch * d.cout * hw];
    for bi in 0..d.batch {
        for o in 0..d.cout {
            let src = &tmp[o * ncol + bi * hw..o * ncol + (bi + 1) * hw];
            let dst = &mut out[(bi * d.cout + o) * hw..(bi * d.cout + o + 1) * hw];
            for (y, s) in dst.iter_mut().zip(src) {
                *y = s + bias[o];
            }
        }
    }
    (out, cols)
}

/// Accumulates weight and bias gradients and returns the input gradient.
pub(crate) fn conv_backward(
    d: &ConvDims,
    cols: &[f64],
    weight: &[f64],
    dout: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
) -> Vec<f64> {
    let (k, hw, ncol) = (d.k(), d.hw(), d.ncol());
    let mut dtmp = vec![0.0; d.cout * ncol];
    for bi in 0..d.batch {
        for o in 0..d.cout {
            let src = &dout[(bi * d.cout + o) * hw..(bi * d.cout + o + 1) * hw];
            dtmp[o * ncol + bi * hw..o * ncol + (bi + 1) * hw].copy_from_slice(src);
            dbias[o] += src.iter().sum::<f64>();
        }
    }
    gemm(d.cout, ncol, k, &dtmp, (ncol, 1), cols, (1, ncol), 1.0, dweight);
    let mut dcols = vec![0.0; k * ncol];
    gemm(k, d.cout, ncol, weight, (1, k), &dtmp, (ncol, 1), 0.0, &mut dcols);
    let mut dx = vec![0.0; d.batch * d.cin * hw];
    for bi in 0..d.batch {
        for c in 0..d.cin {
            let plane = &mut dx[(bi * d.cin + c) * hw..(bi * d.cin + c + 1) * hw];
            for ky in 0..3 {
                for kx in 0..3 {
                    let row = (c * 9 + ky * 3 + kx) * ncol + bi * hw;
                    for y in 0..d.h {
                        let sy = y + ky;
                        if sy < 1 || sy > d.h {
                            continue;
                        }
                        let dst = (sy - 1) * d.w;
                        let src = row + y * d.w;
                        for xx in 0..d.w {
                            let sx = xx + kx;
                            if sx >= 1 && sx <= d.w {
                                plane[dst + sx - 1] += dcols[src + xx];
                            }
                        }
                    }
                }
            }
        }
    }
    dx
}

/// `y = x W^T + b` with `W` stored `[fout][fin]`.
pub(crate) fn dense_forward(
    batch: usize,
    fin: usize,
    fout: usize,
    x: &[f64],
    weight: &[f64],
    bias: &[f64],
) -> Vec<f64> {
    let mut y = vec![0.0; batch * fout];
    for row in y.chunks_mut(fout) {
        row.copy_from_slice(bias);
    }
    gemm(batch, fin, fout, x, (fin, 1), weight, (1, fin), 1.0, &mut y);
    y
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn dense_backward(
    batch: usize,
    fin: usize,
    fout: usize,
    x: &[f64],
    weight: &[f64],
    dy: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
) -> Vec<f64> {
    gemm(fout, batch, fin, dy, (1, fout), x, (fin, 1), 1.0, dweight);
    for row in dy.chunks(fout) {
        for (g, d) in dbias.iter_mut().zip(row) {
            *g += d;
        }
    }
    let mut dx = vec![0.0; batch * fin];
    gemm(batch, fout, fin, dy, (fout, 1), weight, (fin, 1), 0.0, &mut dx);
    dx
}

pub(crate) struct BnBatch {
    pub xhat: Vec<f64>,
    pub inv_std: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Per-channel normalisation with batch statistics. Each item is laid out
/// `[channels][spatial]`.
pub(crate) fn bn_forward_train(
    batch: usize,
    channels: usize,
    spatial: usize,
    x: &[f64],
    gamma: &[f64],
    beta: &[f64],
) -> (Vec<f64>, BnBatch) {
    let m = (batch * spatial) as f64;
    let mut mean = vec![0.0; channels];
    let mut var = vec![0.0; channels];
    for bi in 0..batch {
        for c in 0..channels {
            let s = (bi * channels + c) * spatial;
            mean[c] += x[s..s + spatial].iter().sum::<f64>();
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    for bi in 0..batch {
        for c in 0..channels {
            let s = (bi * channels + c) * spatial;
            var[c] += x[s..s + spatial]
                .iter()
                .map(|v| (v - mean[c]).powi(2))
                .sum::<f64>();
        }
    }
    var.iter_mut().for_each(|v| *v /= m);
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let mut xhat = vec![0.0; x.len()];
    let mut y = vec![0.0; x.len()];
    for bi in 0..batch {
        for c in 0..channels {
            let s = (bi * channels + c) * spatial;
            for i in s..s + spatial {
                xhat[i] = (x[i] - mean[c]) * inv_std[c];
                y[i] = gamma[c] * xhat[i] + beta[c];
            }
        }
    }
    (
        y,
        BnBatch {
            xhat,
            inv_std,
            mean,
            var,
        },
    )
}

/// Normalisation with running statistics. Returns the output, the per-channel
/// scale `gamma / std` and the normalised input.
#[allow(clippy::too_many_arguments)]
pub(crate) fn bn_forward_eval(
    batch: usize,
    channels: usize,
    spatial: usize,
    x: &[f64],
    gamma: &[f64],
    beta: &[f64],
    mean: &[f64],
    var: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let scale: Vec<f64> = (0..channels)
        .map(|c| gamma[c] / (var[c] + BN_EPS).sqrt())
        .collect();
    let mut y = vec![0.0; x.len()];
    let mut xhat = vec![0.0; x.len()];
    for bi in 0..batch {
        for c in 0..channels {
            let inv = 1.0 / (var[c] + BN_EPS).sqrt();
            let s = (bi * channels + c) * spatial;
            for i in s..s + spatial {
                xhat[i] = (x[i] - mean[c]) * inv;
                y[i] = (x[i] - mean[c]) * scale[c] + beta[c];
            }
        }
    }
    (y, scale, xhat)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn bn_backward_train(
    batch: usize,
    channels: usize,
    spatial: usize,
    cache: &BnBatch,
    gamma: &[f64],
    dy: &[f64],
    dgamma: &mut [f64],
    dbeta: &mut [f64],
) -> Vec<f64> {
    let m = (batch * spatial) as f64;
    let mut sum_dy = vec![0.0; channels];
    let mut sum_dy_xhat = vec![0.0; channels];
    for bi in 0..batch {
        for c in 0..channels {
            let s = (bi * channels + c) * spatial;
            for i in s..s + spatial {
                sum_dy[c] += dy[i];
                sum_dy_xhat[c] += dy[i] * cache.xhat[i];
            }
        }
    }
    let mut dx = vec![0.0; dy.len()];
    for bi in 0..batch {
        for c in 0..channels {
            let k = gamma[c] * cache.inv_std[c] / m;
            let s = (bi * channels + c) * spatial;
            for i in s..s + spatial {
                dx[i] = k * (m * dy[i] - sum_dy[c] - cache.xhat[i] * sum_dy_xhat[c]);
            }
        }
    }
    for c in 0..channels {
        dgamma[c] += sum_dy_xhat[c];
        dbeta[c] += sum_dy[c];
    }
    dx
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn bn_backward_eval(
    batch: usize,
    channels: usize,
    spatial: usize,
    xhat: &[f64],
    scale: &[f64],
    dy: &[f64],
    dgamma: &mut [f64],
    dbeta: &mut [f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; dy.len()];
    for bi in 0..batch {
        for c in 0..channels {
            let s = (bi * channels + c) * spatial;
            for i in s..s + spatial {
                dx[i] = dy[i] * scale[c];
                dgamma[c] += dy[i] * xhat[i];
                dbeta[c] += dy[i];
            }
        }
    }
    dx
}

/// 2x2 stride-2 max pooling; returns the output and the flat source index of
/// each maximum (first in scan order on ties).
pub(crate) fn maxpool_forward(
    batch: usize,
    channels: usize,
    h: usize,
    w: usize,
    x: &[f64],
) -> (Vec<f64>, Vec<usize>) {
    let (oh, ow) = (h / 2, w / 2);
    let n = batch * channels * oh * ow;
    let mut out = vec![0.0; n];
    let mut arg = vec![0usize; n];
    for plane in 0..batch * channels {
        let base = plane * h * w;
        for y in 0..oh {
            for xx in 0..ow {
                let mut best = base + 2 * y * w + 2 * xx;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = base + (2 * y + dy) * w + 2 * xx + dx;
                    if x[idx] > x[best] {
                        best = idx;
                    }
                }
                let o = plane * oh * ow + y * ow + xx;
                out[o] = x[best];
                arg[o] = best;
            }
        }
    }
    (out, arg)
}

pub(crate) fn maxpool_backward(input_len: usize, argmax: &[usize], dy: &[f64]) -> Vec<f64> {
    let mut dx = vec![0.0; input_len];
    for (&i, &g) in argmax.iter().zip(dy) {
        dx[i] += g;
    }
    dx
}
