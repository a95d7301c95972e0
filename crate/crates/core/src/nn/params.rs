use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    /// Running statistics are stored alongside weights but never receive
    /// gradients.
    pub trainable: bool,
}

/// Named tensors of one network (weights, biases, normalisation state).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetParams {
    pub entries: Vec<Param>,
}

impl NetParams {
    pub(crate) fn push(&mut self, name: String, value: Tensor, trainable: bool) -> usize {
        debug_assert!(self.entries.iter().all(|p| p.name != name));
        self.entries.push(Param {
            name,
            value,
            trainable,
        });
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|p| p.name == name).map(|p| &p.value)
    }

    pub fn value(&self, idx: usize) -> &Tensor {
        &self.entries[idx].value
    }

    pub fn value_mut(&mut self, idx: usize) -> &mut Tensor {
        &mut self.entries[idx].value
    }

    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|p| p.value.len()).sum()
    }

    /// Fails unless `other` has the same names and shapes in the same order.
    pub fn check_compatible(&self, other: &NetParams) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::shape(
                "params",
                format!("{} tensors vs {}", self.entries.len(), other.entries.len()),
            ));
        }
        for (a, b) in self.entries.iter().zip(&other.entries) {
            if a.name != b.name || a.value.shape() != b.value.shape() {
                return Err(Error::shape(
                    a.name.clone(),
                    format!(
                        "{} {:?} vs {} {:?}",
                        a.name,
                        a.value.shape(),
                        b.name,
                        b.value.shape()
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Replaces every value with the matching tensor from `named`.
    pub fn assign_named(&mut self, named: &[(String, Tensor)]) -> Result<()> {
        for p in &mut self.entries {
            let (_, t) = named
                .iter()
                .find(|(n, _)| *n == p.name)
                .ok_or_else(|| Error::shape(p.name.clone(), "tensor missing from checkpoint"))?;
            if t.shape() != p.value.shape() {
                return Err(Error::shape(
                    p.name.clone(),
                    format!("expected {:?}, checkpoint has {:?}", p.value.shape(), t.shape()),
                ));
            }
        }
        for p in &mut self.entries {
            let (_, t) = named.iter().find(|(n, _)| *n == p.name).expect("checked above");
            p.value = t.clone();
        }
        Ok(())
    }

    pub fn named(&self, prefix: &str) -> Vec<(String, Tensor)> {
        self.entries
            .iter()
            .map(|p| (format!("{prefix}{}", p.name), p.value.clone()))
            .collect()
    }
}

/// Polyak averaging `target <- tau * online + (1 - tau) * target`, applied to
/// every tensor including running statistics.
pub fn soft_update(target: &mut NetParams, online: &NetParams, tau: f64) -> Result<()> {
    target.check_compatible(online)?;
    for (t, o) in target.entries.iter_mut().zip(&online.entries) {
        for (x, y) in t.value.data_mut().iter_mut().zip(o.value.data()) {
            *x = tau * y + (1.0 - tau) * *x;
        }
        t.value.round_to_f32();
    }
    Ok(())
}
