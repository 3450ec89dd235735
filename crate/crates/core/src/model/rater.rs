use rand::Rng;

use super::config::{ModelConfig, ShapeTrace};
use super::ModelError;
use crate::exec::Executor;
use crate::grid::TokenGrid;
use crate::nn::{
    conv2d_same, conv2d_same_backward, dense, dense_backward, fuse, fuse_backward, global_pool_flatten,
    global_pool_flatten_backward, maxpool, maxpool_backward, Activation, EmbedConv, Parameter, PoolTrace, ProjGrad,
    Scalar, Tensor,
};
use crate::prelude::*;
use crate::rng::seeded_rng;

/// The two grids a rater reads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridPair {
    pub amr: TokenGrid,
    pub dep: TokenGrid,
}

impl AsRef<GridPair> for GridPair {
    fn as_ref(&self) -> &GridPair {
        self
    }
}

/// Inputs with a target row of `out_dims` values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub input: GridPair,
    pub target: Vec<f64>,
}

impl AsRef<GridPair> for Example {
    fn as_ref(&self) -> &GridPair {
        &self.input
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct SideSlots {
    table: usize,
    k1: usize,
    b1: usize,
    k2: usize,
    b2: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Slots {
    sides: [SideSlots; 2],
    a: usize,
    a_bias: Option<usize>,
    b: usize,
}

enum Init {
    Uniform(f64),
    Zero,
}

fn glorot(fan_in: usize, fan_out: usize) -> Init {
    Init::Uniform(libm::sqrt(6.0 / (fan_in + fan_out) as f64))
}

/// Parameter names, shapes and initialisers in storage order.
fn layout(cfg: &ModelConfig) -> (Vec<(String, Vec<usize>, Init)>, Slots) {
    let d = cfg.dims();
    let mut specs = Vec::new();
    let mut push = |name: String, shape: Vec<usize>, init: Init| {
        specs.push((name, shape, init));
        specs.len() - 1
    };
    let (kh1, kw1) = cfg.conv1_kernel;
    let (kh2, kw2) = cfg.conv2_kernel;
    let mut sides = Vec::with_capacity(2);
    for (side, vocab) in [("amr", cfg.amr_vocab), ("dep", cfg.dep_vocab)] {
        let table = if side == "dep" && cfg.share_vocab {
            sides.first().map(|s: &SideSlots| s.table).expect("amr side comes first")
        } else {
            push(format!("{side}.embed"), vec![vocab, cfg.embed_dim], Init::Uniform(0.05))
        };
        let k1 = push(
            format!("{side}.conv1.kernel"),
            vec![kh1, kw1, cfg.embed_dim, cfg.conv1_filters],
            glorot(kh1 * kw1 * cfg.embed_dim, kh1 * kw1 * cfg.conv1_filters),
        );
        let b1 = push(format!("{side}.conv1.bias"), vec![cfg.conv1_filters], Init::Zero);
        let k2 = push(
            format!("{side}.conv2.kernel"),
            vec![kh2, kw2, cfg.conv1_filters, cfg.conv2_filters],
            glorot(kh2 * kw2 * cfg.conv1_filters, kh2 * kw2 * cfg.conv2_filters),
        );
        let b2 = push(format!("{side}.conv2.bias"), vec![cfg.conv2_filters], Init::Zero);
        sides.push(SideSlots { table, k1, b1, k2, b2 });
    }
    let a = push("head.a".into(), vec![d.j, cfg.hidden], glorot(d.j, cfg.hidden));
    let a_bias = cfg.hidden_bias.then(|| push("head.a_bias".into(), vec![cfg.hidden], Init::Zero));
    let b = push("head.b".into(), vec![cfg.hidden, cfg.out_dims], glorot(cfg.hidden, cfg.out_dims));
    (specs, Slots { sides: [sides[0], sides[1]], a, a_bias, b })
}

/// The dual-branch convolutional rater.
#[derive(Clone, Debug, PartialEq)]
pub struct RaterModel<T: Scalar = f32> {
    config: ModelConfig,
    params: Vec<Parameter<T>>,
    slots: Slots,
}

/// Per-batch token projections of both branches.
pub struct Projections<T: Scalar> {
    sides: [EmbedConv<T>; 2],
}

struct SideCache<T: Scalar> {
    l1: Tensor<T>,
    l2: Tensor<T>,
    arg1: Vec<u32>,
    c2: Tensor<T>,
    arg2: Vec<u32>,
    g: Tensor<T>,
}

struct Cache<T: Scalar> {
    sides: [SideCache<T>; 2],
    pool: PoolTrace,
    j: Tensor<T>,
    h: Tensor<T>,
    out: Tensor<T>,
}

/// Summed gradients of a group of samples.
pub struct Gradients<T: Scalar> {
    dense: Vec<Tensor<T>>,
    proj: [ProjGrad<T>; 2],
    pub loss: f64,
    pub samples: usize,
}

impl<T: Scalar> Gradients<T> {
    pub fn new(model: &RaterModel<T>) -> Self {
        let (kh, kw) = model.config.conv1_kernel;
        let co = model.config.conv1_filters;
        Gradients {
            dense: model.params.iter().map(|p| Tensor::zeros(p.value.shape())).collect(),
            proj: [ProjGrad::new(kh, kw, co), ProjGrad::new(kh, kw, co)],
            loss: 0.0,
            samples: 0,
        }
    }

    pub fn merge(&mut self, other: &Gradients<T>) {
        for (a, b) in self.dense.iter_mut().zip(&other.dense) {
            a.add_assign(b);
        }
        for (a, b) in self.proj.iter_mut().zip(&other.proj) {
            a.merge(b);
        }
        self.loss += other.loss;
        self.samples += other.samples;
    }
}

fn two_mut<X>(v: &mut [X], i: usize, j: usize) -> (&mut X, &mut X) {
    assert!(i != j);
    if i < j {
        let (a, b) = v.split_at_mut(j);
        (&mut a[i], &mut b[0])
    } else {
        let (a, b) = v.split_at_mut(i);
        (&mut b[0], &mut a[j])
    }
}

fn uniform_tensor<T: Scalar>(shape: &[usize], init: &Init, rng: &mut impl Rng) -> Tensor<T> {
    match *init {
        Init::Zero => Tensor::zeros(shape),
        Init::Uniform(limit) => Tensor::from_fn(shape, |_| T::from_f64(rng.gen_range(-limit..limit))),
    }
}

impl<T: Scalar> RaterModel<T> {
    /// Freshly initialised parameters drawn from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let (specs, slots) = layout(&config);
        let mut rng = seeded_rng(config.seed);
        let params = specs
            .iter()
            .map(|(name, shape, init)| Parameter::new(name, uniform_tensor(shape, init, &mut rng)))
            .collect();
        Ok(RaterModel { config, params, slots })
    }

    /// Rebuilds a model from stored parameter values in storage order.
    pub fn from_values(config: ModelConfig, values: Vec<(String, Tensor<T>)>) -> Result<Self, ModelError> {
        config.validate()?;
        let (specs, slots) = layout(&config);
        if specs.len() != values.len() {
            return Err(ModelError::ParameterMismatch(format!("expected {} tensors, found {}", specs.len(), values.len())));
        }
        let mut params = Vec::with_capacity(specs.len());
        for ((name, shape, _), (got_name, value)) in specs.iter().zip(values) {
            if *name != got_name || value.shape() != shape.as_slice() {
                return Err(ModelError::ParameterMismatch(format!(
                    "expected {name} {shape:?}, found {got_name} {:?}",
                    value.shape()
                )));
            }
            params.push(Parameter::new(name, value));
        }
        Ok(RaterModel { config, params, slots })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[Parameter<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Parameter<T>] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> RaterModel<U> {
        RaterModel { config: self.config.clone(), params: self.params.iter().map(Parameter::cast).collect(), slots: self.slots }
    }

    fn value(&self, i: usize) -> &Tensor<T> {
        &self.params[i].value
    }

    pub fn projections(&self) -> Result<Projections<T>, ModelError> {
        let side = |s: &SideSlots| EmbedConv::new(self.value(s.table), self.value(s.k1));
        Ok(Projections { sides: [side(&self.slots.sides[0])?, side(&self.slots.sides[1])?] })
    }

    fn check_grid(&self, g: &TokenGrid) -> Result<(), ModelError> {
        if g.rows != self.config.rows || g.cols != self.config.cols {
            return Err(ModelError::GridShape { expected: (self.config.rows, self.config.cols), found: (g.rows, g.cols) });
        }
        Ok(())
    }

    fn run_forward(&self, proj: &Projections<T>, pair: &GridPair) -> Result<Cache<T>, ModelError> {
        let cfg = &self.config;
        let d = cfg.dims();
        let mut sides = Vec::with_capacity(2);
        for (s, grid) in [&pair.amr, &pair.dep].into_iter().enumerate() {
            self.check_grid(grid)?;
            let sl = &self.slots.sides[s];
            let l1 = proj.sides[s].forward(&grid.cells, cfg.rows, cfg.cols, self.value(sl.b1), Activation::Relu)?;
            let (l2, arg1) = maxpool(&l1, cfg.pool1.0, cfg.pool1.1)?;
            let c2 = conv2d_same(&l2, self.value(sl.k2), self.value(sl.b2), Activation::Relu)?;
            let (p2, arg2) = maxpool(&c2, cfg.pool2.0, cfg.pool2.1)?;
            let g = p2.reshape(&[d.g])?;
            sides.push(SideCache { l1, l2, arg1, c2, arg2, g });
        }
        let [amr, dep]: [SideCache<T>; 2] = sides.try_into().map_err(|_| ModelError::ParameterMismatch("branch count".into()))?;
        let (j_res, pool) = global_pool_flatten(&fuse(&amr.l1, &dep.l1)?, cfg.pooling)?;
        let j_glob = fuse(&amr.g, &dep.g)?;
        let mut jd = j_res.into_data();
        jd.extend_from_slice(j_glob.data());
        let j = Tensor::new(&[d.j], jd)?;
        let h = dense(&j, self.value(self.slots.a), self.slots.a_bias.map(|i| self.value(i)), Activation::Relu)?;
        let out = dense(&h, self.value(self.slots.b), None, Activation::Sigmoid)?;
        if !out.all_finite() {
            return Err(ModelError::Nn(crate::nn::NnError::NonFiniteValue { op: "forward" }));
        }
        Ok(Cache { sides: [amr, dep], pool, j, h, out })
    }

    /// Scores one input. Builds the token projections itself; use
    /// [`RaterModel::predict`] for many inputs.
    pub fn forward(&self, pair: &GridPair) -> Result<Vec<T>, ModelError> {
        Ok(self.run_forward(&self.projections()?, pair)?.out.into_data())
    }

    /// Sizes of every intermediate representation for `pair`.
    pub fn shape_trace(&self, pair: &GridPair) -> Result<ShapeTrace, ModelError> {
        let c = self.run_forward(&self.projections()?, pair)?;
        let [a, _] = &c.sides;
        Ok(ShapeTrace {
            l1: a.l1.shape().to_vec(),
            l2: a.l2.shape().to_vec(),
            conv2: a.c2.shape().to_vec(),
            g: a.g.len(),
            j_res: self.config.dims().j_res,
            j_glob: c.j.len() - self.config.dims().j_res,
            j: c.j.len(),
            hidden: c.h.len(),
            out: c.out.len(),
        })
    }

    /// Order-preserving batched scoring.
    pub fn predict<E: Executor, P: AsRef<GridPair> + Sync>(&self, inputs: &[P], exec: &E) -> Result<Vec<Vec<T>>, ModelError> {
        if inputs.is_empty() {
            return Ok(Vec::new());
        }
        let proj = self.projections()?;
        exec.map(inputs, |_, p| self.run_forward(&proj, p.as_ref()).map(|c| c.out.into_data())).into_iter().collect()
    }

    fn backward(
        &self,
        proj: &Projections<T>,
        c: &Cache<T>,
        pair: &GridPair, dout: &Tensor<T>, grads: &mut Gradients<T>) -> Result<(), ModelError> {
        let cfg = &self.config;
        let d = cfg.dims();
        let sl = self.slots;

        let mut dh = Tensor::zeros(&[cfg.hidden]);
        dense_backward(&c.h, self.value(sl.b), &c.out, dout, Activation::Sigmoid, Some(&mut dh), &mut grads.dense[sl.b], None);
        let mut dj = Tensor::zeros(&[d.j]);
        match sl.a_bias {
            Some(ab) => {
                let (da, dab) = two_mut(&mut grads.dense, sl.a, ab);
                dense_backward(&c.j, self.value(sl.a), &c.h, &dh, Activation::Relu, Some(&mut dj), da, Some(dab));
            }
            None => dense_backward(&c.j, self.value(sl.a), &c.h, &dh, Activation::Relu, Some(&mut dj), &mut grads.dense[sl.a], None),
        }
        let dj = dj.into_data();
        let dj_res = Tensor::new(&[d.j_res], dj[..d.j_res].to_vec())?;
        let dj_glob = Tensor::new(&[d.j_glob], dj[d.j_res..].to_vec())?;

        let [amr, dep] = &c.sides;
        let (mut dga, mut dgd) = (Tensor::zeros(&[d.g]), Tensor::zeros(&[d.g]));
        fuse_backward(&amr.g, &dep.g, &dj_glob, &mut dga, &mut dgd);
        let mut dfused = Tensor::zeros(&[d.l1[0], d.l1[1], 2 * d.l1[2]]);
        global_pool_flatten_backward(&c.pool, &dj_res, &mut dfused);
        let (mut dl1a, mut dl1d) = (Tensor::zeros(&d.l1), Tensor::zeros(&d.l1));
        fuse_backward(&amr.l1, &dep.l1, &dfused, &mut dl1a, &mut dl1d);

        let grids = [&pair.amr, &pair.dep];
        for (s, (side, (dg, mut dl1))) in c.sides.iter().zip([(dga, dl1a), (dgd, dl1d)]).enumerate() {
            let ss = sl.sides[s];
            let dp2 = dg.reshape(&d.pooled)?;
            let mut dc2 = Tensor::zeros(&d.conv2);
            maxpool_backward(&side.arg2, &dp2, &mut dc2);
            let mut dl2 = Tensor::zeros(&d.l2);
            let (dk2, db2) = two_mut(&mut grads.dense, ss.k2, ss.b2);
            conv2d_same_backward(&side.l2, self.value(ss.k2), self.value(ss.b2), &side.c2, &dc2, Activation::Relu, Some(&mut dl2), dk2, db2)?;
            maxpool_backward(&side.arg1, &dl2, &mut dl1);
            proj.sides[s].backward(
                &grids[s].cells,
                cfg.rows,
                cfg.cols,
                &side.l1,
                &dl1,
                Activation::Relu,
                &mut grads.proj[s],
                &mut grads.dense[ss.b1],
            )?;
        }
        Ok(())
    }

    /// Summed loss gradients of `batch`, with the loss averaged over
    /// `batch_len` samples. Samples are processed in fixed groups of `chunk`
    /// whose sums are added in order, so the result does not depend on the
    /// executor.
    pub fn batch_gradients<E: Executor>(
        &self,
        proj: &Projections<T>,
        batch: &[&Example],
        chunk: usize,
        exec: &E,
    ) -> Result<Gradients<T>, ModelError> {
        let n = batch.len();
        let groups: Vec<&[&Example]> = batch.chunks(chunk.max(1)).collect();
        let parts = exec.map(&groups, |_, group| -> Result<Gradients<T>, ModelError> {
            let mut g = Gradients::new(self);
            for ex in group.iter() {
                if ex.target.len() != self.config.out_dims {
                    return Err(ModelError::TargetDimensionMismatch { expected: self.config.out_dims, found: ex.target.len() });
                }
                let cache = self.run_forward(proj, &ex.input)?;
                let target: Vec<T> = ex.target.iter().map(|&t| T::from_f64(t)).collect();
                let (loss, dout) = crate::nn::mse_loss(&cache.out, &target, n)?;
                g.loss += loss;
                g.samples += 1;
                self.backward(proj, &cache, &ex.input, &dout, &mut g)?;
            }
            Ok(g)
        });
        let mut total = Gradients::new(self);
        for p in parts {
            total.merge(&p?);
        }
        Ok(total)
    }

    /// Moves accumulated gradients into the parameters' gradient buffers.
    pub fn load_gradients(&mut self, grads: Gradients<T>) {
        let Gradients { mut dense, proj, .. } = grads;
        for (s, pg) in proj.iter().enumerate() {
            let ss = self.slots.sides[s];
            let (dt, dk) = two_mut(&mut dense, ss.table, ss.k1);
            pg.apply(&self.params[ss.table].value, &self.params[ss.k1].value, dt, dk);
        }
        for (p, g) in self.params.iter_mut().zip(dense) {
            p.grad = g;
        }
    }
}
