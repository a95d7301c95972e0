use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ops::{self, BnBatch, ConvDims};
use super::params::NetParams;
use super::spec::{LayerSpec, NetSpec};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in normalisation layers.
    Train,
    /// Running statistics in normalisation layers.
    Eval,
}

#[derive(Debug, Clone)]
enum Op {
    Conv {
        cin: usize,
        cout: usize,
        h: usize,
        w: usize,
        weight: usize,
        bias: usize,
    },
    BatchNorm {
        channels: usize,
        spatial: usize,
        gamma: usize,
        beta: usize,
        mean: usize,
        var: usize,
    },
    Relu,
    MaxPool2 {
        c: usize,
        h: usize,
        w: usize,
    },
    Flatten,
    Dense {
        fin: usize,
        fout: usize,
        weight: usize,
        bias: usize,
    },
    Tanh,
}

#[derive(Debug, Clone)]
struct Branch {
    name: &'static str,
    ops: Vec<Op>,
    /// Per-item shape after each op (index 0 is the input shape).
    shapes: Vec<Vec<usize>>,
}

impl Branch {
    fn out_shape(&self) -> &[usize] {
        self.shapes.last().expect("branch has an input shape")
    }
}

enum OpCache {
    Conv { cols: Vec<f64> },
    BnTrain(BnBatch),
    BnEval { scale: Vec<f64>, xhat: Vec<f64> },
    Relu { out: Vec<f64> },
    Pool { argmax: Vec<usize>, input_len: usize },
    Dense { input: Vec<f64> },
    Tanh { out: Vec<f64> },
    None,
}

/// Intermediate values of one forward pass, consumed by `backward` and
/// `commit_running_stats`.
pub struct ForwardCache {
    batch: usize,
    state: Vec<OpCache>,
    action: Vec<OpCache>,
    head: Vec<OpCache>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

#[derive(Debug, Clone)]
pub struct Gradients {
    /// Aligned with the network's parameter list; zero for non-trainable
    /// entries.
    pub params: Vec<Tensor>,
    pub state_input: Tensor,
    pub action_input: Option<Tensor>,
}

/// Feed-forward network assembled from a [`NetSpec`].
#[derive(Debug, Clone)]
pub struct Network {
    spec: NetSpec,
    params: NetParams,
    state: Branch,
    action: Option<Branch>,
    head: Branch,
}

fn init_kind(layers: &[LayerSpec], i: usize) -> bool {
    // true: He-uniform (feeds a ReLU), false: Xavier-uniform
    layers[i + 1..]
        .iter()
        .find(|l| !matches!(l, LayerSpec::BatchNorm))
        .is_some_and(|l| matches!(l, LayerSpec::Relu))
}

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], limit: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-limit..limit)).collect();
    let mut t = Tensor::from_vec(shape, data).expect("sized above");
    t.round_to_f32();
    t
}

fn build_branch(
    name: &'static str,
    layers: &[LayerSpec],
    input: Vec<usize>,
    params: &mut NetParams,
    rng: &mut ChaCha8Rng,
) -> Result<Branch> {
    let mut shapes = vec![input];
    let mut ops = Vec::with_capacity(layers.len());
    for (i, layer) in layers.iter().enumerate() {
        let cur = shapes.last().expect("non-empty").clone();
        let lname = format!("{name}.{i}");
        let he = init_kind(layers, i);
        let (op, next) = match *layer {
            LayerSpec::Conv { out_channels } => {
                let [cin, h, w] = cur[..] else {
                    return Err(Error::shape(lname, format!("conv needs [c,h,w], got {cur:?}")));
                };
                let fan_in = cin * 9;
                let limit = if he {
                    (6.0 / fan_in as f64).sqrt()
                } else {
                    (6.0 / (fan_in + out_channels * 9) as f64).sqrt()
                };
                let weight = params.push(
                    format!("{lname}.weight"),
                    uniform(rng, &[out_channels, cin, 3, 3], limit),
                    true,
                );
                let bias = params.push(format!("{lname}.bias"), Tensor::zeros(&[out_channels]), true);
                (
                    Op::Conv {
                        cin,
                        cout: out_channels,
                        h,
                        w,
                        weight,
                        bias,
                    },
                    vec![out_channels, h, w],
                )
            }
            LayerSpec::BatchNorm => {
                let (channels, spatial) = match cur[..] {
                    [c, h, w] => (c, h * w),
                    [f] => (f, 1),
                    _ => return Err(Error::shape(lname, format!("unsupported shape {cur:?}"))),
                };
                let gamma = params.push(format!("{lname}.gamma"), Tensor::full(&[channels], 1.0), true);
                let beta = params.push(format!("{lname}.beta"), Tensor::zeros(&[channels]), true);
                let mean = params.push(
                    format!("{lname}.running_mean"),
                    Tensor::zeros(&[channels]),
                    false,
                );
                let var = params.push(
                    format!("{lname}.running_var"),
                    Tensor::full(&[channels], 1.0),
                    false,
                );
                (
                    Op::BatchNorm {
                        channels,
                        spatial,
                        gamma,
                        beta,
                        mean,
                        var,
                    },
                    cur,
                )
            }
            LayerSpec::Relu => (Op::Relu, cur),
            LayerSpec::Tanh => (Op::Tanh, cur),
            LayerSpec::MaxPool2 => {
                let [c, h, w] = cur[..] else {
                    return Err(Error::shape(lname, format!("pool needs [c,h,w], got {cur:?}")));
                };
                if h % 2 != 0 || w % 2 != 0 || h == 0 || w == 0 {
                    return Err(Error::shape(lname, format!("pool needs even sides, got {h}x{w}")));
                }
                (Op::MaxPool2 { c, h, w }, vec![c, h / 2, w / 2])
            }
            LayerSpec::Flatten => (Op::Flatten, vec![cur.iter().product()]),
            LayerSpec::Dense { units } => {
                let [fin] = cur[..] else {
                    return Err(Error::shape(lname, format!("dense needs [f], got {cur:?}")));
                };
                let limit = if he {
                    (6.0 / fin as f64).sqrt()
                } else {
                    (6.0 / (fin + units) as f64).sqrt()
                };
                let weight = params.push(
                    format!("{lname}.weight"),
                    uniform(rng, &[units, fin], limit),
                    true,
                );
                let bias = params.push(format!("{lname}.bias"), Tensor::zeros(&[units]), true);
                (
                    Op::Dense {
                        fin,
                        fout: units,
                        weight,
                        bias,
                    },
                    vec![units],
                )
            }
        };
        ops.push(op);
        shapes.push(next);
    }
    Ok(Branch { name, ops, shapes })
}

impl Network {
    pub fn new(spec: &NetSpec, seed: u64) -> Result<Self> {
        if spec.input_channels == 0 || spec.input_height == 0 || spec.input_width == 0 {
            return Err(Error::Config("network input must be non-empty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = NetParams::default();
        let state = build_branch(
            "state",
            &spec.state_branch,
            vec![spec.input_channels, spec.input_height, spec.input_width],
            &mut params,
            &mut rng,
        )?;
        let action = match spec.action_dim {
            Some(a) if a > 0 => Some(build_branch(
                "action",
                &spec.action_branch,
                vec![a],
                &mut params,
                &mut rng,
            )?),
            Some(_) => return Err(Error::Config("action_dim must be positive".into())),
            None if !spec.action_branch.is_empty() => {
                return Err(Error::Config("action branch without action_dim".into()))
            }
            None => None,
        };
        let flat = |b: &Branch, what: &str| -> Result<usize> {
            match b.out_shape() {
                [f] => Ok(*f),
                s => Err(Error::shape(
                    what.to_string(),
                    format!("branch output must be flat, got {s:?}"),
                )),
            }
        };
        let mut head_in = flat(&state, "state")?;
        if let Some(a) = &action {
            head_in += flat(a, "action")?;
        }
        let head = build_branch("head", &spec.head, vec![head_in], &mut params, &mut rng)?;
        Ok(Network {
            spec: spec.clone(),
            params,
            state,
            action,
            head,
        })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn params(&self) -> &NetParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut NetParams {
        &mut self.params
    }

    /// Replaces all parameters; names and shapes must match.
    pub fn set_params(&mut self, params: NetParams) -> Result<()> {
        self.params.check_compatible(&params)?;
        self.params = params;
        Ok(())
    }

    pub fn output_len(&self) -> usize {
        self.head.out_shape().iter().product()
    }

    fn run_branch(
        &self,
        branch: &Branch,
        mut x: Vec<f64>,
        batch: usize,
        mode: Mode,
        caches: &mut Vec<OpCache>,
    ) -> Vec<f64> {
        let p = &self.params;
        for op in &branch.ops {
            let (y, cache) = match *op {
                Op::Conv {
                    cin,
                    cout,
                    h,
                    w,
                    weight,
                    bias,
                } => {
                    let d = ConvDims {
                        batch,
                        cin,
                        cout,
                        h,
                        w,
                    };
                    let (y, cols) =
                        ops::conv_forward(&d, &x, p.value(weight).data(), p.value(bias).data());
                    (y, OpCache::Conv { cols })
                }
                Op::BatchNorm {
                    channels,
                    spatial,
                    gamma,
                    beta,
                    mean,
                    var,
                } => match mode {
                    Mode::Train => {
                        let (y, c) = ops::bn_forward_train(
                            batch,
                            channels,
                            spatial,
                            &x,
                            p.value(gamma).data(),
                            p.value(beta).data(),
                        );
                        (y, OpCache::BnTrain(c))
                    }
                    Mode::Eval => {
                        let (y, scale, xhat) = ops::bn_forward_eval(
                            batch,
                            channels,
                            spatial,
                            &x,
                            p.value(gamma).data(),
                            p.value(beta).data(),
                            p.value(mean).data(),
                            p.value(var).data(),
                        );
                        (y, OpCache::BnEval { scale, xhat })
                    }
                },
                Op::Relu => {
                    x.iter_mut().for_each(|v| *v = v.max(0.0));
                    let out = x.clone();
                    (x, OpCache::Relu { out })
                }
                Op::Tanh => {
                    x.iter_mut().for_each(|v| *v = v.tanh());
                    let out = x.clone();
                    (x, OpCache::Tanh { out })
                }
                Op::MaxPool2 { c, h, w } => {
                    let input_len = x.len();
                    let (y, argmax) = ops::maxpool_forward(batch, c, h, w, &x);
                    (y, OpCache::Pool { argmax, input_len })
                }
                Op::Flatten => (x, OpCache::None),
                Op::Dense {
                    fin,
                    fout,
                    weight,
                    bias,
                } => {
                    let y = ops::dense_forward(
                        batch,
                        fin,
                        fout,
                        &x,
                        p.value(weight).data(),
                        p.value(bias).data(),
                    );
                    (y, OpCache::Dense { input: x })
                }
            };
            caches.push(cache);
            x = y;
        }
        x
    }

    fn check_input(&self, state: &Tensor, action: Option<&Tensor>) -> Result<usize> {
        let want = &self.state.shapes[0];
        if state.shape().len() != 4 || &state.shape()[1..] != want.as_slice() {
            return Err(Error::shape(
                "input",
                format!("state must be [batch, {want:?}], got {:?}", state.shape()),
            ));
        }
        let batch = state.batch();
        if batch == 0 {
            return Err(Error::shape("input", "empty batch"));
        }
        match (&self.action, action) {
            (Some(b), Some(a)) => {
                if a.shape() != [batch, b.shapes[0][0]] {
                    return Err(Error::shape(
                        "input",
                        format!("action must be [{batch}, {}], got {:?}", b.shapes[0][0], a.shape()),
                    ));
                }
            }
            (Some(_), None) => return Err(Error::shape("input", "network needs an action input")),
            (None, Some(_)) => return Err(Error::shape("input", "network takes no action input")),
            (None, None) => {}
        }
        Ok(batch)
    }

    /// Runs the network and returns `[batch, outputs]` with the cache needed
    /// for backpropagation.
    pub fn forward_cached(
        &self,
        state: &Tensor,
        action: Option<&Tensor>,
        mode: Mode,
    ) -> Result<(Tensor, ForwardCache)> {
        let batch = self.check_input(state, action)?;
        let mut cache = ForwardCache {
            batch,
            state: Vec::new(),
            action: Vec::new(),
            head: Vec::new(),
        };
        let s = self.run_branch(&self.state, state.data().to_vec(), batch, mode, &mut cache.state);
        let head_in = match (&self.action, action) {
            (Some(b), Some(a)) => {
                let av = self.run_branch(b, a.data().to_vec(), batch, mode, &mut cache.action);
                let (ls, la) = (s.len() / batch, av.len() / batch);
                let mut cat = Vec::with_capacity(s.len() + av.len());
                for i in 0..batch {
                    cat.extend_from_slice(&s[i * ls..(i + 1) * ls]);
                    cat.extend_from_slice(&av[i * la..(i + 1) * la]);
                }
                cat
            }
            _ => s,
        };
        let out = self.run_branch(&self.head, head_in, batch, mode, &mut cache.head);
        let out = Tensor::from_vec(&[batch, self.output_len()], out)?;
        Ok((out, cache))
    }

    pub fn forward(&self, state: &Tensor, action: Option<&Tensor>, mode: Mode) -> Result<Tensor> {
        self.forward_cached(state, action, mode).map(|(t, _)| t)
    }

    fn backprop_branch(
        &self,
        branch: &Branch,
        caches: &[OpCache],
        mut dy: Vec<f64>,
        batch: usize,
        grads: &mut [Tensor],
    ) -> Vec<f64> {
        let p = &self.params;
        for (op, cache) in branch.ops.iter().zip(caches).rev() {
            dy = match (op, cache) {
                (
                    &Op::Conv {
                        cin,
                        cout,
                        h,
                        w,
                        weight,
                        bias,
                    },
                    OpCache::Conv { cols },
                ) => {
                    let d = ConvDims {
                        batch,
                        cin,
                        cout,
                        h,
                        w,
                    };
                    let (gw, gb) = two_mut(grads, weight, bias);
                    ops::conv_backward(&d, cols, p.value(weight).data(), &dy, gw, gb)
                }
                (
                    &Op::BatchNorm {
                        channels,
                        spatial,
                        gamma,
                        beta,
                        ..
                    },
                    c,
                ) => {
                    let (gg, gb) = two_mut(grads, gamma, beta);
                    match c {
                        OpCache::BnTrain(bc) => ops::bn_backward_train(
                            batch,
                            channels,
                            spatial,
                            bc,
                            p.value(gamma).data(),
                            &dy,
                            gg,
                            gb,
                        ),
                        OpCache::BnEval { scale, xhat } => ops::bn_backward_eval(
                            batch, channels, spatial, xhat, scale, &dy, gg, gb,
                        ),
                        _ => unreachable!("cache built by run_branch"),
                    }
                }
                (Op::Relu, OpCache::Relu { out }) => dy
                    .iter()
                    .zip(out)
                    .map(|(g, y)| if *y > 0.0 { *g } else { 0.0 })
                    .collect(),
                (Op::Tanh, OpCache::Tanh { out }) => dy
                    .iter()
                    .zip(out)
                    .map(|(g, y)| g * (1.0 - y * y))
                    .collect(),
                (Op::MaxPool2 { .. }, OpCache::Pool { argmax, input_len }) => {
                    ops::maxpool_backward(*input_len, argmax, &dy)
                }
                (Op::Flatten, OpCache::None) => dy,
                (
                    &Op::Dense {
                        fin,
                        fout,
                        weight,
                        bias,
                    },
                    OpCache::Dense { input },
                ) => {
                    let (gw, gb) = two_mut(grads, weight, bias);
                    ops::dense_backward(batch, fin, fout, input, p.value(weight).data(), &dy, gw, gb)
                }
                _ => unreachable!("cache built by run_branch"),
            };
        }
        dy
    }

    /// Gradients of `sum(grad_out * output)` with respect to every
    /// trainable parameter and to the inputs.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Tensor) -> Result<Gradients> {
        let batch = cache.batch;
        if grad_out.shape() != [batch, self.output_len()] {
            return Err(Error::shape(
                "backward",
                format!(
                    "output gradient must be [{batch}, {}], got {:?}",
                    self.output_len(),
                    grad_out.shape()
                ),
            ));
        }
        let mut grads: Vec<Tensor> = self
            .params
            .entries
            .iter()
            .map(|p| Tensor::zeros(p.value.shape()))
            .collect();
        let d_head_in =
            self.backprop_branch(&self.head, &cache.head, grad_out.data().to_vec(), batch, &mut grads);
        let ls: usize = self.state.out_shape().iter().product();
        let (d_state_out, d_action_out) = match &self.action {
            Some(b) => {
                let la: usize = b.out_shape().iter().product();
                let mut ds = Vec::with_capacity(batch * ls);
                let mut da = Vec::with_capacity(batch * la);
                for row in d_head_in.chunks(ls + la) {
                    ds.extend_from_slice(&row[..ls]);
                    da.extend_from_slice(&row[ls..]);
                }
                (ds, Some(da))
            }
            None => (d_head_in, None),
        };
        let ds = self.backprop_branch(&self.state, &cache.state, d_state_out, batch, &mut grads);
        let mut shape = vec![batch];
        shape.extend_from_slice(&self.state.shapes[0]);
        let state_input = Tensor::from_vec(&shape, ds)?;
        let action_input = match (&self.action, d_action_out) {
            (Some(b), Some(da)) => {
                let dx = self.backprop_branch(b, &cache.action, da, batch, &mut grads);
                Some(Tensor::from_vec(&[batch, b.shapes[0][0]], dx)?)
            }
            _ => None,
        };
        Ok(Gradients {
            params: grads,
            state_input,
            action_input,
        })
    }

    /// Folds the batch statistics of a training-mode pass into the running
    /// averages: `running = momentum * running + (1 - momentum) * batch`.
    pub fn commit_running_stats(&mut self, cache: &ForwardCache, momentum: f64) {
        let mut updates = Vec::new();
        let mut branches = vec![(&self.state, &cache.state), (&self.head, &cache.head)];
        if let Some(b) = &self.action {
            branches.push((b, &cache.action));
        }
        for (branch, caches) in branches {
            for (op, c) in branch.ops.iter().zip(caches) {
                if let (&Op::BatchNorm { mean, var, .. }, OpCache::BnTrain(bc)) = (op, c) {
                    updates.push((mean, bc.mean.clone()));
                    updates.push((var, bc.var.clone()));
                }
            }
        }
        for (idx, stat) in updates {
            let t = self.params.value_mut(idx);
            for (r, s) in t.data_mut().iter_mut().zip(&stat) {
                *r = momentum * *r + (1.0 - momentum) * s;
            }
            t.round_to_f32();
        }
    }

    /// Branch names in parameter-prefix order, for diagnostics.
    pub fn branch_names(&self) -> Vec<&'static str> {
        let mut v = vec![self.state.name];
        if let Some(b) = &self.action {
            v.push(b.name);
        }
        v.push(self.head.name);
        v
    }
}

fn two_mut(grads: &mut [Tensor], a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
    assert!(a < b, "weight index precedes bias index");
    let (lo, hi) = grads.split_at_mut(b);
    (lo[a].data_mut(), hi[0].data_mut())
}
