//! Empirical and random-phase distributions of spectral fluctuations.

mod characteristic;
mod diagnostics;
mod distributions;
mod histogram;
mod propagation;
mod sampler;

pub use characteristic::{
    characteristic_function, check_symmetric_grid, empirical_characteristic, inverse_transform, symmetric_grid, CfMode,
    CharacteristicTable,
};
pub use diagnostics::{
    equidistribution_ks, gaussian, phase_ks, poisson_spacing, reference_curves, wigner_surmise, EquidistributionReport,
    ReferencePoint,
};
pub use distributions::{
    empirical_fluctuations, empirical_spacings, fluctuation_series, fluctuation_values, mc_delta, mc_spacing,
    merge_terms, sample_series, spacing_series, spacing_values, OscillatoryTerm, RandomPhaseSeries,
};
pub use histogram::{mean_variance, Binning, DistributionHistogram};
pub use propagation::{
    cascade, propagate_characteristic, propagate_level, LevelDistribution, PropagationCoefficients, Source,
    TransformOrdering,
};
pub use sampler::{TorusMode, TorusSampler};
