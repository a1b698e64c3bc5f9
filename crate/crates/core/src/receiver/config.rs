use serde::{Deserialize, Serialize};

use crate::error::{Result, SpikeRxError};
use crate::spiking::{NeuronConfig, SewOp};
use crate::training::QuantizerConfig;

/// Residual block layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// conv, norm, LIF twice, then a spike-element-wise combine.
    Sew,
    /// norm, activation, conv twice, then a real-valued residual add.
    Traditional,
}

impl BlockKind {
    pub const ALL: [BlockKind; 2] = [BlockKind::Sew, BlockKind::Traditional];

    pub fn name(self) -> &'static str {
        match self {
            BlockKind::Sew => "sew",
            BlockKind::Traditional => "traditional",
        }
    }
}

/// Spiking receiver or its ReLU twin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    Snn,
    Ann,
}

impl NetworkKind {
    pub fn name(self) -> &'static str {
        match self {
            NetworkKind::Snn => "snn",
            NetworkKind::Ann => "ann",
        }
    }
}

/// Which resource elements enter the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossMask {
    /// Data symbols only; DMRS rows are excluded.
    #[default]
    Data,
    /// Every row of the grid.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Residual blocks (R_sew).
    pub blocks: usize,
    /// Feature channels (C).
    pub channels: usize,
    /// Odd square kernel size of the encoder and block convolutions.
    pub kernel: usize,
    /// Time steps (T).
    pub timesteps: usize,
    pub block_kind: BlockKind,
    pub sew_op: SewOp,
    pub network: NetworkKind,
    pub neuron: NeuronConfig,
    /// Receive antennas (N_R).
    pub rx_antennas: usize,
    /// Output bits per resource element (B_t).
    pub bits_per_symbol: usize,
    /// Weight quantization in the forward pass.
    pub quantization: Option<QuantizerConfig>,
    pub loss_mask: LossMask,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            blocks: 2,
            channels: 32,
            kernel: 3,
            timesteps: 2,
            block_kind: BlockKind::Sew,
            sew_op: SewOp::Add,
            network: NetworkKind::Snn,
            neuron: NeuronConfig::default(),
            rx_antennas: 1,
            bits_per_symbol: 4,
            quantization: None,
            loss_mask: LossMask::Data,
        }
    }
}

impl ModelConfig {
    /// Input planes: real and imaginary parts of every antenna plus the pilot.
    pub fn input_channels(&self) -> usize {
        2 * (self.rx_antennas + 1)
    }

    /// The ReLU baseline with the same depth and width.
    pub fn neuralrx(&self) -> ModelConfig {
        ModelConfig {
            timesteps: 1,
            block_kind: BlockKind::Traditional,
            network: NetworkKind::Ann,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SpikeRxError::Config(m));
        if self.blocks == 0 {
            return bad("model.blocks must be at least 1".into());
        }
        if self.timesteps == 0 {
            return bad("model.timesteps must be at least 1".into());
        }
        if self.rx_antennas == 0 || self.bits_per_symbol == 0 {
            return bad("model.rx_antennas and model.bits_per_symbol must be positive".into());
        }
        if self.channels < self.input_channels() {
            return bad(format!(
                "model.channels ({}) must be at least 2(N_R+1) = {}",
                self.channels,
                self.input_channels()
            ));
        }
        if self.kernel.is_multiple_of(2) {
            return bad(format!("model.kernel must be odd, got {}", self.kernel));
        }
        if self.network == NetworkKind::Ann && self.block_kind == BlockKind::Sew {
            return bad("sew blocks need a spiking network".into());
        }
        if let Some(q) = &self.quantization {
            q.validate()?;
        }
        self.neuron.validate()
    }

    /// Spiking neuron layers: the encoder plus two per block.
    pub fn lif_layers(&self) -> usize {
        match self.network {
            NetworkKind::Snn => 1 + 2 * self.blocks,
            NetworkKind::Ann => 0,
        }
    }

    /// Trainable scalars implied by the configuration.
    pub fn param_count(&self) -> usize {
        let (c, k2) = (self.channels, self.kernel * self.kernel);
        let encoder = c * self.input_channels() * k2 + c;
        let blocks = self.blocks * 2 * (c * c * k2 + c + 2 * c);
        let readout = self.bits_per_symbol * c + self.bits_per_symbol;
        let neuron = self.lif_layers() * self.neuron_params_per_layer();
        encoder + blocks + readout + neuron
    }

    fn neuron_params_per_layer(&self) -> usize {
        use crate::spiking::NeuronVariant::*;
        let c = self.channels;
        let beta = usize::from(self.neuron.beta_learnable);
        let v = match self.neuron.variant {
            Leaky | Lapicque => 0,
            RleakyOne2one => c,
            RleakyAll2all => c * c * self.kernel * self.kernel,
        };
        beta + v
    }
}
