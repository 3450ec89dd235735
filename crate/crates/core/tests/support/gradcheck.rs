//! Central finite-difference checks of every differentiable kernel.
//!
//! Each check draws random inputs, takes `L = Σ wᵢ·outᵢ` with random weights
//! `w` (so the upstream gradient is `w`), and compares the analytic gradient
//! of every input entry against `(L(x+h) − L(x−h)) / 2h` in f64.

use amrq_core::nn::{
    conv2d_same, conv2d_same_backward, dense, dense_backward, embed, embed_backward, fuse, fuse_backward,
    global_pool_flatten, global_pool_flatten_backward, maxpool, maxpool_backward, mse_loss, Activation, EmbedConv,
    Pooling, ProjGrad, Tensor,
};
use amrq_core::{mix_seed, seeded_rng};
use rand::Rng;

pub const TOLERANCE: f64 = 1e-4;
const STEP: f64 = 1e-6;
/// Gradients smaller than this are compared on an absolute scale.
const FLOOR: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct GradCheck {
    pub op: String,
    pub shape: String,
    pub max_rel_err: f64,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.max_rel_err < TOLERANCE
    }
}

fn rand_tensor(shape: &[usize], rng: &mut impl Rng) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

fn weighted(out: &Tensor<f64>, w: &Tensor<f64>) -> f64 {
    out.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
}

/// Largest relative disagreement between `analytic` and a central
/// difference of `loss` over every entry of `x`.
fn compare(x: &Tensor<f64>, analytic: &Tensor<f64>, loss: impl Fn(&Tensor<f64>) -> f64) -> f64 {
    let mut worst = 0.0f64;
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = x.data()[i];
        probe.data_mut()[i] = orig + STEP;
        let up = loss(&probe);
        probe.data_mut()[i] = orig - STEP;
        let down = loss(&probe);
        probe.data_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        let a = analytic.data()[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
        worst = worst.max(err);
    }
    worst
}

fn dims(s: &[usize]) -> String {
    s.iter().map(ToString::to_string).collect::<Vec<_>>().join("x")
}

fn act_name(a: Activation) -> &'static str {
    match a {
        Activation::None => "linear",
        Activation::Relu => "relu",
        Activation::Sigmoid => "sigmoid",
    }
}

fn check_dense(n: usize, m: usize, act: Activation, bias: bool, seed: u64) -> GradCheck {
    let mut rng = seeded_rng(seed);
    let (x, w, b, up) = (rand_tensor(&[n], &mut rng), rand_tensor(&[n, m], &mut rng), rand_tensor(&[m], &mut rng), rand_tensor(&[m], &mut rng));
    let b = bias.then_some(b);
    let out = dense(&x, &w, b.as_ref(), act).unwrap();
    let (mut dx, mut dw, mut db) = (Tensor::zeros(&[n]), Tensor::zeros(&[n, m]), Tensor::zeros(&[m]));
    dense_backward(&x, &w, &out, &up, act, Some(&mut dx), &mut dw, b.as_ref().map(|_| &mut db));
    let mut err = compare(&x, &dx, |x| weighted(&dense(x, &w, b.as_ref(), act).unwrap(), &up));
    err = err.max(compare(&w, &dw, |w| weighted(&dense(&x, w, b.as_ref(), act).unwrap(), &up)));
    if let Some(bv) = &b {
        err = err.max(compare(bv, &db, |bv| weighted(&dense(&x, &w, Some(bv), act).unwrap(), &up)));
    }
    let op = format!("dense/{}{}", act_name(act), if bias { "+bias" } else { "" });
    GradCheck { op, shape: dims(&[n, m]), max_rel_err: err }
}

fn check_conv(x_shape: [usize; 3], k_shape: [usize; 4], act: Activation, seed: u64) -> GradCheck {
    let mut rng = seeded_rng(seed);
    let x = rand_tensor(&x_shape, &mut rng);
    let k = rand_tensor(&k_shape, &mut rng);
    let b = rand_tensor(&[k_shape[3]], &mut rng);
    let out = conv2d_same(&x, &k, &b, act).unwrap();
    let up = rand_tensor(out.shape(), &mut rng);
    let (mut dx, mut dk, mut db) = (Tensor::zeros(&x_shape), Tensor::zeros(&k_shape), Tensor::zeros(&[k_shape[3]]));
    conv2d_same_backward(&x, &k, &b, &out, &up, act, Some(&mut dx), &mut dk, &mut db).unwrap();
    let err = compare(&x, &dx, |x| weighted(&conv2d_same(x, &k, &b, act).unwrap(), &up))
        .max(compare(&k, &dk, |k| weighted(&conv2d_same(&x, k, &b, act).unwrap(), &up)))
        .max(compare(&b, &db, |b| weighted(&conv2d_same(&x, &k, b, act).unwrap(), &up)));
    GradCheck { op: format!("conv2d_same/{}", act_name(act)), shape: format!("{} * {}", dims(&x_shape), dims(&k_shape)), max_rel_err: err }
}

fn check_maxpool(shape: [usize; 3], ph: usize, pw: usize, seed: u64) -> GradCheck {
    let mut rng = seeded_rng(seed);
    let x = rand_tensor(&shape, &mut rng);
    let (out, arg) = maxpool(&x, ph, pw).unwrap();
    let up = rand_tensor(out.shape(), &mut rng);
    let mut dx = Tensor::zeros(&shape);
    maxpool_backward(&arg, &up, &mut dx);
    let err = compare(&x, &dx, |x| weighted(&maxpool(x, ph, pw).unwrap().0, &up));
    GradCheck { op: "maxpool".into(), shape: format!("{} / {ph}x{pw}", dims(&shape)), max_rel_err: err }
}

fn check_fuse(shape: &[usize], seed: u64) -> GradCheck {
    let mut rng = seeded_rng(seed);
    let (x, y) = (rand_tensor(shape, &mut rng), rand_tensor(shape, &mut rng));
    let out = fuse(&x, &y).unwrap();
    let up = rand_tensor(out.shape(), &mut rng);
    let (mut dx, mut dy) = (Tensor::zeros(shape), Tensor::zeros(shape));
    fuse_backward(&x, &y, &up, &mut dx, &mut dy);
    let err = compare(&x, &dx, |x| weighted(&fuse(x, &y).unwrap(), &up)).max(compare(&y, &dy, |y| weighted(&fuse(&x, y).unwrap(), &up)));
    GradCheck { op: "fuse".into(), shape: dims(shape), max_rel_err: err }
}

fn check_global_pool(shape: [usize; 3], mode: Pooling, seed: u64) -> GradCheck {
    let mut rng = seeded_rng(seed);
    let x = rand_tensor(&shape, &mut rng);
    let (out, trace) = global_pool_flatten(&x, mode).unwrap();
    let up = rand_tensor(out.shape(), &mut rng);
    let mut dx = Tensor::zeros(&shape);
    global_pool_flatten_backward(&trace, &up, &mut dx);
    let err = compare(&x, &dx, |x| weighted(&global_pool_flatten(x, mode).unwrap().0, &up));
    let op = match mode {
        Pooling::Max => "global_pool/max",
        Pooling::Mean => "global_pool/mean",
    };
    GradCheck { op: op.into(), shape: dims(&shape), max_rel_err: err }
}

fn cells(n: usize, vocab: usize, rng: &mut impl Rng) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(0..vocab as u32)).collect()
}

fn check_embed(rows: usize, cols: usize, vocab: usize, dim: usize, seed: u64) -> GradCheck {
    let mut rng = seeded_rng(seed);
    let table = rand_tensor(&[vocab, dim], &mut rng);
    let c = cells(rows * cols, vocab, &mut rng);
    let up = rand_tensor(&[rows, cols, dim], &mut rng);
    let mut dt = Tensor::zeros(&[vocab, dim]);
    embed_backward(&c, &up, &mut dt);
    let err = compare(&table, &dt, |t| weighted(&embed(&c, rows, cols, t).unwrap(), &up));
    GradCheck { op: "embed".into(), shape: format!("{rows}x{cols} of {vocab}x{dim}"), max_rel_err: err }
}

fn check_embed_conv(rows: usize, cols: usize, vocab: usize, k_shape: [usize; 4], seed: u64) -> GradCheck {
    let mut rng = seeded_rng(seed);
    let [kh, kw, dim, cout] = k_shape;
    let table = rand_tensor(&[vocab, dim], &mut rng);
    let kernel = rand_tensor(&k_shape, &mut rng);
    let bias = rand_tensor(&[cout], &mut rng);
    let c = cells(rows * cols, vocab, &mut rng);
    let act = Activation::Relu;
    let run = |t: &Tensor<f64>, k: &Tensor<f64>, b: &Tensor<f64>| EmbedConv::new(t, k).unwrap().forward(&c, rows, cols, b, act).unwrap();
    let out = run(&table, &kernel, &bias);
    let up = rand_tensor(out.shape(), &mut rng);
    let mut pg = ProjGrad::new(kh, kw, cout);
    let mut db = Tensor::zeros(&[cout]);
    EmbedConv::new(&table, &kernel).unwrap().backward(&c, rows, cols, &out, &up, act, &mut pg, &mut db).unwrap();
    let (mut dt, mut dk) = (Tensor::zeros(&[vocab, dim]), Tensor::zeros(&k_shape));
    pg.apply(&table, &kernel, &mut dt, &mut dk);
    let err = compare(&table, &dt, |t| weighted(&run(t, &kernel, &bias), &up))
        .max(compare(&kernel, &dk, |k| weighted(&run(&table, k, &bias), &up)))
        .max(compare(&bias, &db, |b| weighted(&run(&table, &kernel, b), &up)));
    GradCheck { op: "embed_conv/relu".into(), shape: format!("{rows}x{cols} of {vocab} * {}", dims(&k_shape)), max_rel_err: err }
}

fn check_mse(n: usize, batch: usize, seed: u64) -> GradCheck {
    let mut rng = seeded_rng(seed);
    let pred = rand_tensor(&[n], &mut rng);
    let target: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let (_, grad) = mse_loss(&pred, &target, batch).unwrap();
    let err = compare(&pred, &grad, |p| mse_loss(p, &target, batch).unwrap().0 / batch as f64);
    GradCheck { op: "mse_loss".into(), shape: format!("{n} / batch {batch}"), max_rel_err: err }
}

/// Every kernel on at least three shapes.
pub fn gradient_suite(seed: u64) -> Vec<GradCheck> {
    let mut s = (0u64..).map(move |i| mix_seed(seed, i));
    let mut next = move || s.next().expect("endless");
    let mut out = Vec::new();
    for act in [Activation::None, Activation::Relu, Activation::Sigmoid] {
        for (n, m, bias) in [(3, 2, true), (5, 4, false), (1, 6, true)] {
            out.push(check_dense(n, m, act, bias, next()));
        }
    }
    for act in [Activation::None, Activation::Relu] {
        out.push(check_conv([4, 3, 2], [3, 3, 2, 3], act, next()));
        out.push(check_conv([5, 4, 1], [2, 3, 1, 2], act, next()));
        out.push(check_conv([3, 5, 3], [1, 4, 3, 2], act, next()));
    }
    out.push(check_maxpool([4, 4, 2], 2, 2, next()));
    out.push(check_maxpool([5, 3, 1], 3, 2, next()));
    out.push(check_maxpool([6, 5, 3], 3, 3, next()));
    out.push(check_fuse(&[5], next()));
    out.push(check_fuse(&[3, 2], next()));
    out.push(check_fuse(&[2, 3, 4], next()));
    for mode in [Pooling::Max, Pooling::Mean] {
        out.push(check_global_pool([3, 4, 2], mode, next()));
        out.push(check_global_pool([2, 2, 5], mode, next()));
        out.push(check_global_pool([5, 1, 3], mode, next()));
    }
    out.push(check_embed(2, 3, 5, 3, next()));
    out.push(check_embed(4, 4, 3, 2, next()));
    out.push(check_embed(1, 5, 7, 4, next()));
    out.push(check_embed_conv(3, 4, 5, [3, 3, 2, 3], next()));
    out.push(check_embed_conv(5, 2, 4, [2, 3, 3, 2], next()));
    out.push(check_embed_conv(4, 4, 6, [3, 1, 2, 4], next()));
    out.push(check_mse(3, 1, next()));
    out.push(check_mse(5, 4, next()));
    out.push(check_mse(33, 64, next()));
    out
}
