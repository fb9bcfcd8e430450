//! Flow analysis for networks with generative nodes.

// Negated float comparisons are deliberate: they reject NaN along with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod flowgraph;
mod scalar;

pub use scalar::Scalar;

pub mod imaging;

/// Derives an independent 64-bit seed for stream `index` of `base`
/// (SplitMix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub mod flowopt;
pub mod metrics;
pub mod ratequality;

/// Maps `f` over `items` on up to `jobs` threads. Results keep input order
/// for every `jobs`; `jobs <= 1` runs on the calling thread.
pub fn par_map<T, R, G>(items: &[T], jobs: usize, f: G) -> Vec<R>
where
    T: Sync,
    R: Send,
    G: Fn(usize, &T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()),
        Err(_) => items.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
    }
}

/// 64-bit FNV-1a hash, used for provenance tags on generated files.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    use std::hash::Hasher;
    let mut h = fnv::FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// `f64` instantiations of the generic numeric types.
pub type Topology = flowgraph::NetworkTopology<f64>;
pub type Flow = flowgraph::FlowAssignment<f64>;
pub type Curve = ratequality::RateQualityCurve<f64>;
pub type Scenario = flowopt::GenScenario<f64>;
pub type OptResult = flowopt::OptimizationResult<f64>;
pub type Gaussian = metrics::FeatureGaussian<f64>;
