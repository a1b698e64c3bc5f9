//! Leaky integrate-and-fire dynamics, surrogate derivatives of the spike
//! nonlinearity and spike-element-wise residual combination.

mod neuron;
mod ops;
mod sew;
mod surrogate;

pub use neuron::{lif_step, rleaky_step, NeuronConfig, NeuronState, NeuronVariant, Recurrent};
pub use ops::{membrane, spike, MembraneInputs, SpikeMode};
pub use sew::{sew_combine, sew_combine_var, SewOp};
pub use surrogate::{surrogate_grad, Surrogate, SurrogateKind};
