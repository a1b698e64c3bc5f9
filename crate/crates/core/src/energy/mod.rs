//! Operation counts, spiking rates, energy estimates and activity probes.

mod flops;
mod profile;
mod table;

pub use flops::{effective_kernel, flops_conv2d, flops_dsconv2d, flops_norm, snn_flops};
pub use profile::{
    activation_probability, energy, probe_membrane, profile_network, record_forward, spiking_rate,
    summarize, write_energy_csv, EnergySummary, LayerEnergy, LayerKind, LayerProfile, OpKind,
    SpikeCounting, SIGMOID_FLOPS,
};
pub use table::{EnergyTable, E_AC_32, E_AC_8, E_ADD_32, E_MAC_32, E_MAC_8, E_MULT_32};
