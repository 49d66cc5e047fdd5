//! Finite-rank operator algebra for intertwiners and spectral projections,
//! together with propagation probes and the truncation-decay experiment.

mod convolution;
mod intertwiner;
mod operator;
pub mod probes;

pub use convolution::{convolution_operator, ConvolutionOperator};
pub use intertwiner::{
    build_intertwiner, decay_fit, decay_rows, fit_decay_rows, norm_of_difference, truncation_bound, DecayFit,
    DecayRow, Intertwiner,
    MvnResiduals, NORM_FLOOR,
};
pub use operator::{ProductOperator, RankOneSumOperator};
pub use probes::{measure_propagation, probe_local_compactness, probe_propagation, PropagationProbeResult};
