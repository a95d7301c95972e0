use super::params::NetParams;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Adam with bias correction. Parameters and moments are kept at single
/// precision after every step.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl Adam {
    pub fn new(params: &NetParams, lr: f64) -> Self {
        let zeros: Vec<Tensor> = params
            .entries
            .iter()
            .map(|p| Tensor::zeros(p.value.shape()))
            .collect();
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Descends along `grads`; negate the gradients to ascend.
    pub fn apply(&mut self, params: &mut NetParams, grads: &[Tensor]) -> Result<()> {
        if grads.len() != params.len() || self.m.len() != params.len() {
            return Err(Error::shape(
                "adam",
                format!(
                    "{} params, {} grads, {} moments",
                    params.len(),
                    grads.len(),
                    self.m.len()
                ),
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (i, p) in params.entries.iter_mut().enumerate() {
            if !p.trainable {
                continue;
            }
            let g = &grads[i];
            if g.shape() != p.value.shape() {
                return Err(Error::shape(
                    p.name.clone(),
                    format!("gradient {:?} vs param {:?}", g.shape(), p.value.shape()),
                ));
            }
            let (m, v) = (self.m[i].data_mut(), self.v[i].data_mut());
            for (((w, &gi), mi), vi) in p
                .value
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *w -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
            p.value.round_to_f32();
            self.m[i].round_to_f32();
            self.v[i].round_to_f32();
        }
        Ok(())
    }

    /// Moments as named tensors for checkpointing.
    pub fn named(&self, params: &NetParams, prefix: &str) -> Vec<(String, Tensor)> {
        let mut out = Vec::with_capacity(2 * self.m.len() + 1);
        for (p, (m, v)) in params.entries.iter().zip(self.m.iter().zip(&self.v)) {
            out.push((format!("{prefix}{}.adam_m", p.name), m.clone()));
            out.push((format!("{prefix}{}.adam_v", p.name), v.clone()));
        }
        out.push((
            format!("{prefix}adam_step"),
            Tensor::from_vec(&[1], vec![self.step as f64]).expect("scalar"),
        ));
        out
    }

    pub fn assign_named(
        &mut self,
        params: &NetParams,
        prefix: &str,
        named: &[(String, Tensor)],
    ) -> Result<()> {
        let find = |name: String, shape: &[usize]| -> Result<Tensor> {
            let (_, t) = named
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| Error::shape(name.clone(), "tensor missing from checkpoint"))?;
            if t.shape() != shape {
                return Err(Error::shape(name, format!("expected {shape:?}, got {:?}", t.shape())));
            }
            Ok(t.clone())
        };
        let mut m = Vec::with_capacity(params.len());
        let mut v = Vec::with_capacity(params.len());
        for p in &params.entries {
            m.push(find(format!("{prefix}{}.adam_m", p.name), p.value.shape())?);
            v.push(find(format!("{prefix}{}.adam_v", p.name), p.value.shape())?);
        }
        let step = find(format!("{prefix}adam_step"), &[1])?.data()[0];
        self.m = m;
        self.v = v;
        self.step = step as u64;
        Ok(())
    }
}
