//! Small convolutional networks with hand-written backpropagation.

mod adam;
mod checkpoint;
mod network;
mod ops;
mod params;
mod spec;

pub use adam::Adam;
pub use checkpoint::{
    decode_tensors, encode_tensors, load_params, load_tensors, save_params, save_tensors,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use network::{ForwardCache, Gradients, Mode, Network};
pub use params::{soft_update, NetParams, Param};
pub use spec::{LayerSpec, NetConfig, NetSpec};

pub use crate::tensor::Tensor;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
        let n = shape.iter().product();
        Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn loss(net: &Network, s: &Tensor, a: Option<&Tensor>, c: &Tensor, mode: Mode) -> f64 {
        let y = net.forward(s, a, mode).unwrap();
        y.data().iter().zip(c.data()).map(|(y, c)| y * c).sum()
    }

    fn rel_err(g: f64, fd: f64) -> f64 {
        // absolute floor for gradients that vanish to rounding level
        (g - fd).abs() / g.abs().max(fd.abs()).max(1e-6)
    }

    // Seeds are fixed so that no ReLU or max-pool switch lies within one step.
    fn grad_check(spec: &NetSpec, batch: usize, mode: Mode, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network::new(spec, seed).unwrap();
        // perturb BN state so eval mode is non-trivial
        for p in net.params_mut().entries.iter_mut() {
            if p.name.ends_with("running_var") || p.name.ends_with("gamma") {
                p.value.data_mut().iter_mut().for_each(|v| *v = rng.random_range(0.5..1.5));
            } else if p.name.ends_with("running_mean") || p.name.ends_with("beta") {
                p.value.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.3..0.3));
            }
        }
        let s = random(
            &[batch, spec.input_channels, spec.input_height, spec.input_width],
            &mut rng,
        );
        let a = spec.action_dim.map(|d| random(&[batch, d], &mut rng));
        let c = random(&[batch, net.output_len()], &mut rng);
        let (_, cache) = net.forward_cached(&s, a.as_ref(), mode).unwrap();
        let g = net.backward(&cache, &c).unwrap();
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        for i in 0..net.params().len() {
            if !net.params().entries[i].trainable {
                continue;
            }
            for j in 0..net.params().value(i).len() {
                let orig = net.params().value(i).data()[j];
                net.params_mut().value_mut(i).data_mut()[j] = orig + h;
                let lp = loss(&net, &s, a.as_ref(), &c, mode);
                net.params_mut().value_mut(i).data_mut()[j] = orig - h;
                let lm = loss(&net, &s, a.as_ref(), &c, mode);
                net.params_mut().value_mut(i).data_mut()[j] = orig;
                let fd = (lp - lm) / (2.0 * h);
                let e = rel_err(g.params[i].data()[j], fd);
                assert!(
                    e < 1e-4,
                    "{}[{j}]: analytic {} vs numeric {fd} (rel {e})",
                    net.params().entries[i].name,
                    g.params[i].data()[j]
                );
                worst = worst.max(e);
            }
        }
        for j in 0..s.len() {
            let mut sp = s.clone();
            sp.data_mut()[j] += h;
            let mut sm = s.clone();
            sm.data_mut()[j] -= h;
            let fd = (loss(&net, &sp, a.as_ref(), &c, mode) - loss(&net, &sm, a.as_ref(), &c, mode))
                / (2.0 * h);
            let e = rel_err(g.state_input.data()[j], fd);
            assert!(e < 1e-4, "state input [{j}]: rel {e}");
        }
        if let (Some(a), Some(ga)) = (&a, &g.action_input) {
            for j in 0..a.len() {
                let mut ap = a.clone();
                ap.data_mut()[j] += h;
                let mut am = a.clone();
                am.data_mut()[j] -= h;
                let fd = (loss(&net, &s, Some(&ap), &c, mode) - loss(&net, &s, Some(&am), &c, mode))
                    / (2.0 * h);
                let e = rel_err(ga.data()[j], fd);
                assert!(e < 1e-4, "action input [{j}]: rel {e}");
            }
        }
    }

    fn small_config() -> NetConfig {
        NetConfig {
            input_height: 8,
            input_width: 8,
            actor_conv: vec![3, 4],
            actor_dense: 5,
            critic_conv: vec![2, 3],
            critic_branch_dense: 4,
            critic_head_dense: vec![6, 5],
        }
    }

    #[test]
    fn actor_gradients_match_finite_differences() {
        let spec = small_config().actor_spec();
        grad_check(&spec, 3, Mode::Train, 31);
        grad_check(&spec, 2, Mode::Eval, 12);
    }

    #[test]
    fn critic_gradients_match_finite_differences() {
        let spec = small_config().critic_spec();
        grad_check(&spec, 3, Mode::Train, 21);
        grad_check(&spec, 2, Mode::Eval, 22);
    }

    #[test]
    fn identity_kernel_reproduces_input() {
        let spec = NetSpec {
            input_channels: 1,
            input_height: 5,
            input_width: 4,
            action_dim: None,
            state_branch: vec![LayerSpec::Conv { out_channels: 1 }, LayerSpec::Flatten],
            action_branch: vec![],
            head: vec![],
        };
        let mut net = Network::new(&spec, 0).unwrap();
        let w = net.params_mut().value_mut(0);
        w.data_mut().fill(0.0);
        w.data_mut()[4] = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random(&[2, 1, 5, 4], &mut rng);
        let y = net.forward(&x, None, Mode::Eval).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn shifted_kernel_uses_zero_padding() {
        let spec = NetSpec {
            input_channels: 1,
            input_height: 3,
            input_width: 3,
            action_dim: None,
            state_branch: vec![LayerSpec::Conv { out_channels: 1 }, LayerSpec::Flatten],
            action_branch: vec![],
            head: vec![],
        };
        let mut net = Network::new(&spec, 0).unwrap();
        let w = net.params_mut().value_mut(0);
        w.data_mut().fill(0.0);
        // tap at (ky=1, kx=2): out[y][x] = in[y][x+1]
        w.data_mut()[5] = 1.0;
        let x = Tensor::from_vec(&[1, 1, 3, 3], (1..=9).map(f64::from).collect()).unwrap();
        let y = net.forward(&x, None, Mode::Eval).unwrap();
        assert_eq!(y.data(), &[2.0, 3.0, 0.0, 5.0, 6.0, 0.0, 8.0, 9.0, 0.0]);
    }

    #[test]
    fn zero_weights_give_bias_output() {
        let spec = NetConfig::desk(16, 16).critic_spec();
        let mut net = Network::new(&spec, 1).unwrap();
        let n = net.params().len();
        for i in 0..n {
            let name = net.params().entries[i].name.clone();
            if name.ends_with("weight") {
                net.params_mut().value_mut(i).data_mut().fill(0.0);
            }
        }
        let last_bias = n - 1;
        net.params_mut().value_mut(last_bias).data_mut()[0] = 0.25;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random(&[4, 1, 16, 16], &mut rng);
        let a = random(&[4, 1], &mut rng);
        let y = net.forward(&s, Some(&a), Mode::Train).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn output_shapes_and_actor_range() {
        let cfg = NetConfig::desk(32, 32);
        let actor = Network::new(&cfg.actor_spec(), 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = random(&[5, 1, 32, 32], &mut rng);
        let y = actor.forward(&s, None, Mode::Train).unwrap();
        assert_eq!(y.shape(), &[5, 1]);
        assert!(y.data().iter().all(|v| v.abs() <= 1.0));
        let wrong = random(&[5, 1, 16, 32], &mut rng);
        assert!(matches!(
            actor.forward(&wrong, None, Mode::Eval),
            Err(crate::Error::Shape { .. })
        ));
        let critic = Network::new(&cfg.critic_spec(), 9).unwrap();
        assert!(critic.forward(&s, None, Mode::Eval).is_err());
    }

    #[test]
    fn reference_widths_build() {
        let cfg = NetConfig::reference(64, 64);
        cfg.validate().unwrap();
        let actor = Network::new(&cfg.actor_spec(), 0).unwrap();
        let convs: Vec<usize> = actor
            .params()
            .entries
            .iter()
            .filter(|p| p.value.shape().len() == 4)
            .map(|p| p.value.shape()[0])
            .collect();
        assert_eq!(convs, vec![32, 64, 64, 128, 256]);
        assert!(NetConfig::reference(48, 48).validate().is_err());
    }

    #[test]
    fn adam_first_step_is_lr_times_sign() {
        let spec = small_config().actor_spec();
        let mut net = Network::new(&spec, 4).unwrap();
        let before = net.params().clone();
        let mut adam = Adam::new(net.params(), 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let grads: Vec<Tensor> = before
            .entries
            .iter()
            .map(|p| random(p.value.shape(), &mut rng))
            .collect();
        adam.apply(net.params_mut(), &grads).unwrap();
        for (i, p) in net.params().entries.iter().enumerate() {
            for j in 0..p.value.len() {
                let delta = p.value.data()[j] - before.entries[i].value.data()[j];
                if !p.trainable {
                    assert_eq!(delta, 0.0);
                    continue;
                }
                let g = grads[i].data()[j];
                let expect = -1e-3 * g.signum() * g.abs() / (g.abs() + 1e-8);
                assert!((delta - expect).abs() < 1e-6, "{} {delta} {expect}", p.name);
            }
        }
    }

    #[test]
    fn adam_with_zero_gradient_leaves_parameters() {
        let spec = small_config().critic_spec();
        let mut net = Network::new(&spec, 5).unwrap();
        let before = net.params().clone();
        let mut adam = Adam::new(net.params(), 1e-3);
        let zeros: Vec<Tensor> = before.entries.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
        for _ in 0..3 {
            adam.apply(net.params_mut(), &zeros).unwrap();
        }
        assert_eq!(net.params(), &before);
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for spec in [small_config().actor_spec(), small_config().critic_spec()] {
            let net = Network::new(&spec, 9).unwrap();
            let s = random(&[3, 1, 8, 8], &mut rng);
            let a = spec.action_dim.map(|d| random(&[3, d], &mut rng));
            let (y, cache) = net.forward_cached(&s, a.as_ref(), Mode::Train).unwrap();
            let g = net.backward(&cache, &Tensor::zeros(y.shape())).unwrap();
            assert!(g.params.iter().all(|t| t.data().iter().all(|&v| v == 0.0)));
            assert!(g.state_input.data().iter().all(|&v| v == 0.0));
            if let Some(ga) = g.action_input {
                assert!(ga.data().iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn running_stats_follow_momentum() {
        let spec = small_config().actor_spec();
        let mut net = Network::new(&spec, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random(&[4, 1, 8, 8], &mut rng);
        let (_, cache) = net.forward_cached(&s, None, Mode::Train).unwrap();
        // first BN sees the conv output; recompute its channel means directly
        let conv_only = NetSpec {
            state_branch: vec![LayerSpec::Conv { out_channels: 3 }, LayerSpec::Flatten],
            head: vec![],
            ..spec.clone()
        };
        let mut probe = Network::new(&conv_only, 0).unwrap();
        probe.params_mut().entries[0].value = net.params().entries[0].value.clone();
        probe.params_mut().entries[1].value = net.params().entries[1].value.clone();
        let co = probe.forward(&s, None, Mode::Eval).unwrap();
        let mut means = [0.0; 3];
        for b in 0..4 {
            for c in 0..3 {
                let base = (b * 3 + c) * 64;
                means[c] += co.data()[base..base + 64].iter().sum::<f64>() / 256.0;
            }
        }
        net.commit_running_stats(&cache, 0.99);
        let rm = net.params().get("state.1.running_mean").unwrap();
        for c in 0..3 {
            assert!((rm.data()[c] - 0.01 * means[c]).abs() < 1e-7);
        }
    }

    #[test]
    fn soft_update_interpolates() {
        let spec = small_config().actor_spec();
        let a = Network::new(&spec, 1).unwrap();
        let mut b = Network::new(&spec, 2).unwrap();
        let old = b.params().clone();
        soft_update(b.params_mut(), a.params(), 0.25).unwrap();
        for ((n, o), t) in b.params().entries.iter().zip(&old.entries).zip(&a.params().entries) {
            for j in 0..n.value.len() {
                let want = 0.25 * t.value.data()[j] + 0.75 * o.value.data()[j];
                assert!((n.value.data()[j] - want).abs() < 1e-6);
            }
        }
        let critic = Network::new(&small_config().critic_spec(), 0).unwrap();
        assert!(soft_update(b.params_mut(), critic.params(), 0.5).is_err());
    }

    #[test]
    fn checkpoint_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("actor.bin");
        let cfg = small_config();
        let actor = Network::new(&cfg.actor_spec(), 3).unwrap();
        save_params(actor.params(), &path).unwrap();
        let loaded = load_params(&path).unwrap();
        assert_eq!(&loaded, actor.params());

        let mut critic = Network::new(&cfg.critic_spec(), 3).unwrap();
        assert!(matches!(
            critic.set_params(loaded),
            Err(crate::Error::Shape { .. })
        ));

        let bytes = std::fs::read(&path).unwrap();
        assert!(matches!(
            decode_tensors(&bytes[..bytes.len() - 3]),
            Err(crate::Error::Data(_))
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_tensors(&bad), Err(crate::Error::Data(_))));
        let mut ver = bytes;
        ver[4] = 9;
        assert!(matches!(decode_tensors(&ver), Err(crate::Error::Data(_))));
    }

    #[test]
    fn checkpoint_header_layout() {
        let t = Tensor::from_vec(&[2], vec![1.5, -2.0]).unwrap();
        let buf = encode_tensors(&[("ab".into(), t)]).unwrap();
        assert_eq!(&buf[..4], b"RGNP");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
        assert_eq!(u32::from_le_bytes(buf[6..10].try_into().unwrap()), 1);
        assert_eq!(u16::from_le_bytes([buf[10], buf[11]]), 2);
        assert_eq!(&buf[12..14], b"ab");
        assert_eq!(buf[14], 1);
        assert_eq!(u32::from_le_bytes(buf[15..19].try_into().unwrap()), 2);
        assert_eq!(f32::from_le_bytes(buf[19..23].try_into().unwrap()), 1.5);
        assert_eq!(buf.len(), 27);
    }
}
