//! Benchmarks for the product engine, the series, the quadrature oracle and the reduction.
//! See `benches/pipeline.rs`.

use lcbif::sh_core::SHIndex;

/// All `(l, m)` with `l ≤ l_max`.
pub fn indices(l_max: u32) -> Vec<SHIndex> {
    (0..=l_max).flat_map(|l| (-(l as i32)..=l as i32).map(move |m| SHIndex::new(l, m))).collect()
}
