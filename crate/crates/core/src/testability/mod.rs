//! Functional per-net features: vectorless signal probability, transition
//! activity, and SCOAP controllability/observability in full-scan and
//! no-scan variants.

mod probability;
mod scoap;

pub use probability::{compute_probabilities, NetProbability, ProbabilityMap};
pub use scoap::{
    compute_scoap, controllability_norms, ControllabilityNorm, ScanVariant, ScoapMap,
    ScoapValues, DEFAULT_SCOAP_CEILING,
};
