use super::{gemm, shape_err, Layout, NnError, Scalar, Tensor};
use crate::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
    Sigmoid,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Pooling {
    #[default]
    Max,
    Mean,
}

pub fn apply_activation<T: Scalar>(act: Activation, xs: &mut [T]) {
    match act {
        Activation::None => {}
        Activation::Relu => xs.iter_mut().for_each(|x| {
            if !(*x > T::ZERO) {
                *x = T::ZERO
            }
        }),
        Activation::Sigmoid => xs.iter_mut().for_each(|x| *x = T::ONE / (T::ONE + (-*x).exp())),
    }
}

/// Gradient with respect to the pre-activation, from the activation output.
pub fn activation_backward<T: Scalar>(act: Activation, out: &[T], dout: &[T]) -> Vec<T> {
    match act {
        Activation::None => dout.to_vec(),
        Activation::Relu => out.iter().zip(dout).map(|(&y, &d)| if y > T::ZERO { d } else { T::ZERO }).collect(),
        Activation::Sigmoid => out.iter().zip(dout).map(|(&y, &d)| d * y * (T::ONE - y)).collect(),
    }
}

/// `(before, after)` zero padding that keeps a dimension's size for a kernel
/// of extent `k`; the extra cell of an even kernel goes after.
pub fn same_padding(k: usize) -> (usize, usize) {
    let before = (k - 1) / 2;
    (before, k - 1 - before)
}

/// Looks up one table row per cell: `[rows, cols, dim]`.
pub fn embed<T: Scalar>(cells: &[u32], rows: usize, cols: usize, table: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    if cells.len() != rows * cols {
        return Err(shape_err("embed", &[rows * cols], &[cells.len()]));
    }
    let [v, d] = table.shape() else {
        return Err(shape_err("embed", &[0, 0], table.shape()));
    };
    let (v, d) = (*v, *d);
    let mut out = Vec::with_capacity(cells.len() * d);
    for &c in cells {
        if c as usize >= v {
            return Err(NnError::IndexOutOfRange { index: c, size: v });
        }
        out.extend_from_slice(&table.data()[c as usize * d..(c as usize + 1) * d]);
    }
    Tensor::new(&[rows, cols, d], out)
}

pub fn embed_backward<T: Scalar>(cells: &[u32], dout: &Tensor<T>, dtable: &mut Tensor<T>) {
    let d = dtable.shape()[1];
    let g = dtable.data_mut();
    for (i, &c) in cells.iter().enumerate() {
        let row = &mut g[c as usize * d..(c as usize + 1) * d];
        for (a, &b) in row.iter_mut().zip(&dout.data()[i * d..(i + 1) * d]) {
            *a += b;
        }
    }
}

struct ConvDims {
    h: usize,
    w: usize,
    cin: usize,
    kh: usize,
    kw: usize,
    cout: usize,
}

impl ConvDims {
    fn of<T: Scalar>(x: &Tensor<T>, k: &Tensor<T>, bias: &Tensor<T>) -> Result<Self, NnError> {
        let ([h, w, cin], [kh, kw, kc, cout]) = (x.shape(), k.shape()) else {
            return Err(shape_err("conv2d_same", &[0, 0, 0], x.shape()));
        };
        if kc != cin || bias.shape() != [*cout] {
            return Err(shape_err("conv2d_same", &[*kh, *kw, *cin, bias.len()], k.shape()));
        }
        Ok(ConvDims { h: *h, w: *w, cin: *cin, kh: *kh, kw: *kw, cout: *cout })
    }

    fn patch(&self) -> usize {
        self.kh * self.kw * self.cin
    }
}

/// Patch matrix: row `r*w + c` holds the zero-padded `kh×kw×cin` window
/// centred on output cell `(r, c)`.
fn im2col<T: Scalar>(x: &[T], d: &ConvDims) -> Vec<T> {
    let (pt, _) = same_padding(d.kh);
    let (pl, _) = same_padding(d.kw);
    let patch = d.patch();
    let mut col = vec![T::ZERO; d.h * d.w * patch];
    for r in 0..d.h {
        for c in 0..d.w {
            let base = (r * d.w + c) * patch;
            for dy in 0..d.kh {
                let Some(y) = (r + dy).checked_sub(pt).filter(|&y| y < d.h) else { continue };
                for dx in 0..d.kw {
                    let Some(xx) = (c + dx).checked_sub(pl).filter(|&xx| xx < d.w) else { continue };
                    let src = (y * d.w + xx) * d.cin;
                    let dst = base + (dy * d.kw + dx) * d.cin;
                    col[dst..dst + d.cin].copy_from_slice(&x[src..src + d.cin]);
                }
            }
        }
    }
    col
}

fn col2im_add<T: Scalar>(col: &[T], d: &ConvDims, dx: &mut [T]) {
    let (pt, _) = same_padding(d.kh);
    let (pl, _) = same_padding(d.kw);
    let patch = d.patch();
    for r in 0..d.h {
        for c in 0..d.w {
            let base = (r * d.w + c) * patch;
            for dy in 0..d.kh {
                let Some(y) = (r + dy).checked_sub(pt).filter(|&y| y < d.h) else { continue };
                for dxx in 0..d.kw {
                    let Some(xx) = (c + dxx).checked_sub(pl).filter(|&xx| xx < d.w) else { continue };
                    let dst = (y * d.w + xx) * d.cin;
                    let src = base + (dy * d.kw + dxx) * d.cin;
                    for (a, &b) in dx[dst..dst + d.cin].iter_mut().zip(&col[src..src + d.cin]) {
                        *a += b;
                    }
                }
            }
        }
    }
}

/// Stride-1 zero-padded cross-correlation, output the size of the input.
/// `x: [h, w, cin]`, `k: [kh, kw, cin, cout]`, `bias: [cout]`.
pub fn conv2d_same<T: Scalar>(
    x: &Tensor<T>,
    k: &Tensor<T>,
    bias: &Tensor<T>,
    act: Activation,
) -> Result<Tensor<T>, NnError> {
    let d = ConvDims::of(x, k, bias)?;
    let col = im2col(x.data(), &d);
    let hw = d.h * d.w;
    let mut out: Vec<T> = (0..hw).flat_map(|_| bias.data().iter().copied()).collect();
    gemm(hw, d.patch(), d.cout, &col, Layout::rows(d.patch()), k.data(), Layout::rows(d.cout), T::ONE, &mut out, Layout::rows(d.cout));
    apply_activation(act, &mut out);
    Tensor::new(&[d.h, d.w, d.cout], out)
}

/// Backward of [`conv2d_same`] given its output `out`. `dx` may be skipped
/// for a first layer.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_same_backward<T: Scalar>(
    x: &Tensor<T>,
    k: &Tensor<T>,
    bias: &Tensor<T>,
    out: &Tensor<T>,
    dout: &Tensor<T>,
    act: Activation,
    dx: Option<&mut Tensor<T>>,
    dk: &mut Tensor<T>,
    dbias: &mut Tensor<T>,
) -> Result<(), NnError> {
    let d = ConvDims::of(x, k, bias)?;
    if out.shape() != [d.h, d.w, d.cout] || dout.shape() != out.shape() {
        return Err(shape_err("conv2d_same_backward", &[d.h, d.w, d.cout], dout.shape()));
    }
    let dpre = activation_backward(act, out.data(), dout.data());
    let hw = d.h * d.w;
    for row in dpre.chunks_exact(d.cout) {
        for (a, &b) in dbias.data_mut().iter_mut().zip(row) {
            *a += b;
        }
    }
    let col = im2col(x.data(), &d);
    let patch = d.patch();
    gemm(patch, hw, d.cout, &col, Layout::transposed(patch), &dpre, Layout::rows(d.cout), T::ONE, dk.data_mut(), Layout::rows(d.cout));
    if let Some(dx) = dx {
        let mut dcol = col;
        gemm(hw, d.cout, patch, &dpre, Layout::rows(d.cout), k.data(), Layout::transposed(d.cout), T::ZERO, &mut dcol, Layout::rows(patch));
        col2im_add(&dcol, &d, dx.data_mut());
    }
    Ok(())
}

/// Non-overlapping max pooling with clipped edge windows. Returns the output
/// and, per output cell, the flat input index that won (first on ties).
pub fn maxpool<T: Scalar>(x: &Tensor<T>, ph: usize, pw: usize) -> Result<(Tensor<T>, Vec<u32>), NnError> {
    let [h, w, c] = *x.shape() else {
        return Err(shape_err("maxpool", &[0, 0, 0], x.shape()));
    };
    let (oh, ow) = (h.div_ceil(ph), w.div_ceil(pw));
    let mut out = Vec::with_capacity(oh * ow * c);
    let mut arg = Vec::with_capacity(oh * ow * c);
    let xd = x.data();
    for r in 0..oh {
        for q in 0..ow {
            for ch in 0..c {
                let mut best = (r * ph * w + q * pw) * c + ch;
                for y in r * ph..((r + 1) * ph).min(h) {
                    for xx in q * pw..((q + 1) * pw).min(w) {
                        let i = (y * w + xx) * c + ch;
                        if xd[i] > xd[best] {
                            best = i;
                        }
                    }
                }
                out.push(xd[best]);
                arg.push(best as u32);
            }
        }
    }
    Ok((Tensor::new(&[oh, ow, c], out)?, arg))
}

pub fn maxpool_backward<T: Scalar>(argmax: &[u32], dout: &Tensor<T>, dx: &mut Tensor<T>) {
    let g = dx.data_mut();
    for (&i, &d) in argmax.iter().zip(dout.data()) {
        g[i as usize] += d;
    }
}

/// `[x ⊙ y ; x − y]` concatenated on the last axis.
pub fn fuse<T: Scalar>(x: &Tensor<T>, y: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    if x.shape() != y.shape() {
        return Err(shape_err("fuse", x.shape(), y.shape()));
    }
    let c = *x.shape().last().expect("tensors have a shape");
    let mut out = Vec::with_capacity(2 * x.len());
    for (xa, ya) in x.data().chunks_exact(c).zip(y.data().chunks_exact(c)) {
        out.extend(xa.iter().zip(ya).map(|(&a, &b)| a * b));
        out.extend(xa.iter().zip(ya).map(|(&a, &b)| a - b));
    }
    let mut shape = x.shape().to_vec();
    *shape.last_mut().expect("non-empty") *= 2;
    Tensor::new(&shape, out)
}

pub fn fuse_backward<T: Scalar>(x: &Tensor<T>, y: &Tensor<T>, dout: &Tensor<T>, dx: &mut Tensor<T>, dy: &mut Tensor<T>) {
    let c = *x.shape().last().expect("tensors have a shape");
    let (gx, gy) = (dx.data_mut(), dy.data_mut());
    for (p, d) in dout.data().chunks_exact(2 * c).enumerate() {
        for i in 0..c {
            let j = p * c + i;
            let (dm, ds) = (d[i], d[c + i]);
            gx[j] += dm * y.data()[j] + ds;
            gy[j] += dm * x.data()[j] - ds;
        }
    }
}

/// Record of what [`global_pool_flatten`] selected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PoolTrace {
    Max(Vec<u32>),
    Mean { cells: usize },
}

/// Per-channel global pooling over all spatial cells, giving a `[c]` vector.
pub fn global_pool_flatten<T: Scalar>(x: &Tensor<T>, mode: Pooling) -> Result<(Tensor<T>, PoolTrace), NnError> {
    let c = *x.shape().last().expect("tensors have a shape");
    let cells = x.len() / c;
    let xd = x.data();
    match mode {
        Pooling::Max => {
            let mut arg: Vec<u32> = (0..c as u32).collect();
            for p in 1..cells {
                for ch in 0..c {
                    let i = p * c + ch;
                    if xd[i] > xd[arg[ch] as usize] {
                        arg[ch] = i as u32;
                    }
                }
            }
            let out = arg.iter().map(|&i| xd[i as usize]).collect();
            Ok((Tensor::new(&[c], out)?, PoolTrace::Max(arg)))
        }
        Pooling::Mean => {
            let mut out = vec![T::ZERO; c];
            for row in xd.chunks_exact(c) {
                for (a, &b) in out.iter_mut().zip(row) {
                    *a += b;
                }
            }
            let n = T::from_f64(cells as f64);
            out.iter_mut().for_each(|v| *v = *v / n);
            Ok((Tensor::new(&[c], out)?, PoolTrace::Mean { cells }))
        }
    }
}

pub fn global_pool_flatten_backward<T: Scalar>(trace: &PoolTrace, dout: &Tensor<T>, dx: &mut Tensor<T>) {
    let g = dx.data_mut();
    match trace {
        PoolTrace::Max(arg) => {
            for (&i, &d) in arg.iter().zip(dout.data()) {
                g[i as usize] += d;
            }
        }
        PoolTrace::Mean { cells } => {
            let c = dout.len();
            let n = T::from_f64(*cells as f64);
            for (i, v) in g.iter_mut().enumerate() {
                *v += dout.data()[i % c] / n;
            }
        }
    }
}

/// `act(xᵀW + b)` for `x: [n]`, `W: [n, m]`.
pub fn dense<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, bias: Option<&Tensor<T>>, act: Activation) -> Result<Tensor<T>, NnError> {
    let [n, m] = *w.shape() else {
        return Err(shape_err("dense", &[x.len(), 0], w.shape()));
    };
    if x.len() != n || bias.is_some_and(|b| b.len() != m) {
        return Err(shape_err("dense", &[n, m], &[x.len(), bias.map_or(m, Tensor::len)]));
    }
    let mut out = bias.map_or_else(|| vec![T::ZERO; m], |b| b.data().to_vec());
    gemm(1, n, m, x.data(), Layout::rows(n), w.data(), Layout::rows(m), T::ONE, &mut out, Layout::rows(m));
    apply_activation(act, &mut out);
    Tensor::new(&[m], out)
}

#[allow(clippy::too_many_arguments)]
pub fn dense_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    out: &Tensor<T>,
    dout: &Tensor<T>,
    act: Activation,
    dx: Option<&mut Tensor<T>>,
    dw: &mut Tensor<T>,
    dbias: Option<&mut Tensor<T>>,
) {
    let (n, m) = (w.shape()[0], w.shape()[1]);
    let dpre = activation_backward(act, out.data(), dout.data());
    if let Some(db) = dbias {
        for (a, &b) in db.data_mut().iter_mut().zip(&dpre) {
            *a += b;
        }
    }
    gemm(n, 1, m, x.data(), Layout::transposed(n), &dpre, Layout::rows(m), T::ONE, dw.data_mut(), Layout::rows(m));
    if let Some(dx) = dx {
        gemm(1, m, n, &dpre, Layout::rows(m), w.data(), Layout::transposed(m), T::ONE, dx.data_mut(), Layout::rows(n));
    }
}

/// Summed squared error of one sample and its gradient scaled for a
/// minibatch of `batch` samples.
pub fn mse_loss<T: Scalar>(pred: &Tensor<T>, target: &[T], batch: usize) -> Result<(f64, Tensor<T>), NnError> {
    if pred.len() != target.len() {
        return Err(shape_err("mse_loss", pred.shape(), &[target.len()]));
    }
    let mut loss = 0.0f64;
    let scale = T::from_f64(2.0 / batch as f64);
    let grad = pred
        .data()
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = p - t;
            loss += d.to_f64() * d.to_f64();
            d * scale
        })
        .collect();
    Ok((loss, Tensor::new(pred.shape(), grad)?))
}
