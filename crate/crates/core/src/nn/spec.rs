use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerSpec {
    /// 3x3 same-padded convolution.
    Conv { out_channels: usize },
    BatchNorm,
    Relu,
    MaxPool2,
    Flatten,
    Dense { units: usize },
    Tanh,
}

/// Layer grammar of a single- or two-input network. The head consumes the
/// concatenation of the state branch and (if present) the action branch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub input_channels: usize,
    pub input_height: usize,
    pub input_width: usize,
    pub action_dim: Option<usize>,
    pub state_branch: Vec<LayerSpec>,
    pub action_branch: Vec<LayerSpec>,
    pub head: Vec<LayerSpec>,
}

/// Widths of the actor and critic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub input_height: usize,
    pub input_width: usize,
    pub actor_conv: Vec<usize>,
    pub actor_dense: usize,
    pub critic_conv: Vec<usize>,
    pub critic_branch_dense: usize,
    pub critic_head_dense: Vec<usize>,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self::desk(64, 64)
    }
}

impl NetConfig {
    /// Reduced widths for CPU-bound runs.
    pub fn desk(input_height: usize, input_width: usize) -> Self {
        NetConfig {
            input_height,
            input_width,
            actor_conv: vec![16, 32, 64],
            actor_dense: 64,
            critic_conv: vec![16, 32],
            critic_branch_dense: 32,
            critic_head_dense: vec![256, 256],
        }
    }

    /// Full-width reference architecture.
    pub fn reference(input_height: usize, input_width: usize) -> Self {
        NetConfig {
            input_height,
            input_width,
            actor_conv: vec![32, 64, 64, 128, 256],
            actor_dense: 256,
            critic_conv: vec![16, 32],
            critic_branch_dense: 32,
            critic_head_dense: vec![256, 256],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pools = self.actor_conv.len().max(self.critic_conv.len()) as u32;
        let div = 1usize << pools;
        if self.input_height % div != 0 || self.input_width % div != 0 || self.input_height == 0 {
            return Err(Error::Config(format!(
                "input {}x{} must be divisible by {div} for {pools} pooling stages",
                self.input_height, self.input_width
            )));
        }
        Ok(())
    }

    fn conv_blocks(widths: &[usize]) -> Vec<LayerSpec> {
        widths
            .iter()
            .flat_map(|&c| {
                [
                    LayerSpec::Conv { out_channels: c },
                    LayerSpec::BatchNorm,
                    LayerSpec::Relu,
                    LayerSpec::MaxPool2,
                ]
            })
            .collect()
    }

    pub fn actor_spec(&self) -> NetSpec {
        let mut state = Self::conv_blocks(&self.actor_conv);
        state.extend([
            LayerSpec::Flatten,
            LayerSpec::Dense {
                units: self.actor_dense,
            },
            LayerSpec::BatchNorm,
            LayerSpec::Relu,
        ]);
        NetSpec {
            input_channels: 1,
            input_height: self.input_height,
            input_width: self.input_width,
            action_dim: None,
            state_branch: state,
            action_branch: vec![],
            head: vec![LayerSpec::Dense { units: 1 }, LayerSpec::Tanh],
        }
    }

    pub fn critic_spec(&self) -> NetSpec {
        let branch = [
            LayerSpec::Dense {
                units: self.critic_branch_dense,
            },
            LayerSpec::BatchNorm,
            LayerSpec::Relu,
        ];
        let mut state = Self::conv_blocks(&self.critic_conv);
        state.push(LayerSpec::Flatten);
        state.extend(branch);
        let mut head: Vec<LayerSpec> = self
            .critic_head_dense
            .iter()
            .flat_map(|&u| [LayerSpec::Dense { units: u }, LayerSpec::Relu])
            .collect();
        head.push(LayerSpec::Dense { units: 1 });
        NetSpec {
            input_channels: 1,
            input_height: self.input_height,
            input_width: self.input_width,
            action_dim: Some(1),
            state_branch: state,
            action_branch: branch.to_vec(),
            head,
        }
    }
}
