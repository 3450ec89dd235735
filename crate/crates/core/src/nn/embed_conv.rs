//! Embedding lookup followed by a same-padded convolution, computed through
//! per-token projections.
//!
//! With `P[tap][v] = table[v] · K[tap]`, the convolution output at a cell is
//! the bias plus one `P` row per in-bounds tap, so a grid costs
//! `cells × taps × cout` additions instead of a full patch product. The
//! backward pass collects `dL/dP` for the tokens that occur and turns it into
//! table and kernel gradients once per batch.

use super::ops::{activation_backward, apply_activation, same_padding};
use super::{gemm, shape_err, Activation, Layout, NnError, Scalar, Tensor};
use crate::prelude::*;

/// Projection of every vocabulary row through every kernel tap.
#[derive(Clone, Debug)]
pub struct EmbedConv<T: Scalar> {
    kh: usize,
    kw: usize,
    vocab: usize,
    cout: usize,
    /// `[tap][token][cout]`.
    proj: Vec<T>,
}

impl<T: Scalar> EmbedConv<T> {
    /// `table: [vocab, dim]`, `kernel: [kh, kw, dim, cout]`.
    pub fn new(table: &Tensor<T>, kernel: &Tensor<T>) -> Result<Self, NnError> {
        let (&[vocab, dim], &[kh, kw, kd, cout]) = (table.shape(), kernel.shape()) else {
            return Err(shape_err("embed_conv", table.shape(), kernel.shape()));
        };
        if kd != dim {
            return Err(shape_err("embed_conv", &[kh, kw, dim, cout], kernel.shape()));
        }
        let taps = kh * kw;
        let mut proj = vec![T::ZERO; taps * vocab * cout];
        for tap in 0..taps {
            gemm(
                vocab,
                dim,
                cout,
                table.data(),
                Layout::rows(dim),
                &kernel.data()[tap * dim * cout..],
                Layout::rows(cout),
                T::ZERO,
                &mut proj[tap * vocab * cout..],
                Layout::rows(cout),
            );
        }
        Ok(EmbedConv { kh, kw, vocab, cout, proj })
    }

    pub fn cout(&self) -> usize {
        self.cout
    }

    fn taps(&self, r: usize, c: usize, rows: usize, cols: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (pt, _) = same_padding(self.kh);
        let (pl, _) = same_padding(self.kw);
        (0..self.kh).flat_map(move |dy| {
            (0..self.kw).filter_map(move |dx| {
                let y = (r + dy).checked_sub(pt).filter(|&y| y < rows)?;
                let x = (c + dx).checked_sub(pl).filter(|&x| x < cols)?;
                Some((dy * self.kw + dx, y * cols + x))
            })
        })
    }

    fn check(&self, cells: &[u32], rows: usize, cols: usize) -> Result<(), NnError> {
        if cells.len() != rows * cols {
            return Err(shape_err("embed_conv", &[rows * cols], &[cells.len()]));
        }
        match cells.iter().find(|&&c| c as usize >= self.vocab) {
            Some(&c) => Err(NnError::IndexOutOfRange { index: c, size: self.vocab }),
            None => Ok(()),
        }
    }

    /// Same result as `conv2d_same(embed(cells, table), kernel, bias, act)`.
    pub fn forward(
        &self,
        cells: &[u32],
        rows: usize,
        cols: usize,
        bias: &Tensor<T>,
        act: Activation,
    ) -> Result<Tensor<T>, NnError> {
        self.check(cells, rows, cols)?;
        if bias.len() != self.cout {
            return Err(shape_err("embed_conv", &[self.cout], bias.shape()));
        }
        let co = self.cout;
        let mut out = vec![T::ZERO; rows * cols * co];
        for r in 0..rows {
            for c in 0..cols {
                let dst = &mut out[(r * cols + c) * co..(r * cols + c + 1) * co];
                dst.copy_from_slice(bias.data());
                for (tap, src) in self.taps(r, c, rows, cols) {
                    let off = (tap * self.vocab + cells[src] as usize) * co;
                    for (a, &b) in dst.iter_mut().zip(&self.proj[off..off + co]) {
                        *a += b;
                    }
                }
            }
        }
        apply_activation(act, &mut out);
        Tensor::new(&[rows, cols, co], out)
    }

    /// Adds `dL/dP` into `grad` and the bias gradient into `dbias`, given the
    /// activation output `out` and its gradient `dout`.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        cells: &[u32],
        rows: usize,
        cols: usize,
        out: &Tensor<T>,
        dout: &Tensor<T>,
        act: Activation,
        grad: &mut ProjGrad<T>,
        dbias: &mut Tensor<T>,
    ) -> Result<(), NnError> {
        self.check(cells, rows, cols)?;
        let co = self.cout;
        if dout.len() != rows * cols * co || grad.cout != co || grad.taps != self.kh * self.kw {
            return Err(shape_err("embed_conv_backward", &[rows, cols, co], dout.shape()));
        }
        let dpre = activation_backward(act, out.data(), dout.data());
        for row in dpre.chunks_exact(co) {
            for (a, &b) in dbias.data_mut().iter_mut().zip(row) {
                *a += b;
            }
        }
        let local: Vec<usize> = cells.iter().map(|&t| grad.slot(t)).collect();
        let stride = grad.taps * co;
        for r in 0..rows {
            for c in 0..cols {
                let d = &dpre[(r * cols + c) * co..(r * cols + c + 1) * co];
                if d.iter().all(|&v| v == T::ZERO) {
                    continue;
                }
                for (tap, src) in self.taps(r, c, rows, cols) {
                    let off = local[src] * stride + tap * co;
                    for (a, &b) in grad.rows[off..off + co].iter_mut().zip(d) {
                        *a += b;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sparse `dL/dP`: one `[tap][cout]` block per token seen, in first-seen
/// order.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjGrad<T: Scalar> {
    taps: usize,
    cout: usize,
    index: BTreeMap<u32, usize>,
    tokens: Vec<u32>,
    rows: Vec<T>,
}

impl<T: Scalar> ProjGrad<T> {
    pub fn new(kh: usize, kw: usize, cout: usize) -> Self {
        ProjGrad { taps: kh * kw, cout, index: BTreeMap::new(), tokens: Vec::new(), rows: Vec::new() }
    }

    fn slot(&mut self, token: u32) -> usize {
        if let Some(&i) = self.index.get(&token) {
            return i;
        }
        let i = self.tokens.len();
        self.index.insert(token, i);
        self.tokens.push(token);
        self.rows.extend(core::iter::repeat(T::ZERO).take(self.taps * self.cout));
        i
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Adds another accumulator, walking its tokens in their order.
    pub fn merge(&mut self, other: &ProjGrad<T>) {
        let stride = self.taps * self.cout;
        for (u, &t) in other.tokens.iter().enumerate() {
            let i = self.slot(t);
            for (a, &b) in self.rows[i * stride..(i + 1) * stride].iter_mut().zip(&other.rows[u * stride..(u + 1) * stride]) {
                *a += b;
            }
        }
    }

    /// Converts into table and kernel gradients (added into `dtable` and
    /// `dkernel`).
    pub fn apply(&self, table: &Tensor<T>, kernel: &Tensor<T>, dtable: &mut Tensor<T>, dkernel: &mut Tensor<T>) {
        if self.tokens.is_empty() {
            return;
        }
        let dim = table.shape()[1];
        let (u, co, stride) = (self.tokens.len(), self.cout, self.taps * self.cout);
        let mut e = Vec::with_capacity(u * dim);
        for &t in &self.tokens {
            e.extend_from_slice(&table.data()[t as usize * dim..(t as usize + 1) * dim]);
        }
        let s_layout = Layout { rs: stride, cs: 1 };
        let mut de = vec![T::ZERO; u * dim];
        for tap in 0..self.taps {
            let s = &self.rows[tap * co..];
            gemm(dim, u, co, &e, Layout::transposed(dim), s, s_layout, T::ONE, &mut dkernel.data_mut()[tap * dim * co..], Layout::rows(co));
            gemm(u, co, dim, s, s_layout, &kernel.data()[tap * dim * co..], Layout::transposed(co), T::ONE, &mut de, Layout::rows(dim));
        }
        let g = dtable.data_mut();
        for (i, &t) in self.tokens.iter().enumerate() {
            for (a, &b) in g[t as usize * dim..(t as usize + 1) * dim].iter_mut().zip(&de[i * dim..(i + 1) * dim]) {
                *a += b;
            }
        }
    }
}
