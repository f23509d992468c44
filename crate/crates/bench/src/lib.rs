//! Fixtures shared by the criterion benches.

use agrnn::datagen::{gen_butterfly, gen_friedman, ButterflySpec, FriedmanSpec};
use agrnn::Dataset;

/// Butterfly data with features already scaled to `[0, 1]`.
pub fn scaled_butterfly(n: usize) -> Dataset {
    gen_butterfly(&ButterflySpec::new(n, 1))
        .and_then(|ds| ds.min_max_scale(false))
        .expect("valid generator spec")
}

pub fn friedman(n: usize) -> Dataset {
    gen_friedman(&FriedmanSpec::new(n, 1)).expect("valid generator spec")
}
