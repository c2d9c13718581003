#![allow(dead_code)]

use std::sync::OnceLock;

use imp_core::envs::{Family, ModelSet};
use imp_core::models::MIN_SAMPLES;

/// Small-sample models shared by the tests of one binary.
pub fn struct_models() -> ModelSet {
    static CELL: OnceLock<ModelSet> = OnceLock::new();
    CELL.get_or_init(|| ModelSet::generate(Family::StructUc, 30, MIN_SAMPLES, 11).unwrap())
        .clone()
}

pub fn owf_models() -> ModelSet {
    static CELL: OnceLock<ModelSet> = OnceLock::new();
    CELL.get_or_init(|| ModelSet::generate(Family::Owf, 20, MIN_SAMPLES, 11).unwrap())
        .clone()
}

/// Probability that at least `k` of the independent events fail, by
/// enumerating all `2^n` outcomes.
pub fn enumerate_k_out_of_n(p: &[f64], k: usize) -> f64 {
    let n = p.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        if (mask.count_ones() as usize) < k {
            continue;
        }
        let mut prob = 1.0;
        for (i, &pi) in p.iter().enumerate() {
            prob *= if mask & (1 << i) != 0 { pi } else { 1.0 - pi };
        }
        total += prob;
    }
    total
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
