//! `s`-Carleson sequences, the `BMO^s` / `CMO^s` functionals, the best
//! Carleson-embedding constant and operator norms on `H^s`.

mod norm;
mod sequence;
mod spectral;

pub use norm::{
    antichains, bmo_s_norm, carleson_norm, cmo_tail, single_interval_sup, CarlesonOptions, CollectionValue, Mode, EXACT_MAX_DEPTH,
    EXACT_MAX_DEPTH_OVERRIDE, GREEDY_POOL,
};
pub use sequence::{CarlesonSequence, MAX_CARLESON_DEPTH};
pub use spectral::{
    embedding_constant, embedding_quotient, operator_norm_hs, Operator, SpectralEstimate, MAX_OPERATOR_DEPTH,
};
