//! Decoder contract under arbitrary finite keys: the phenotype is always
//! feasible, maximal, and its fitness matches the unbiased profits.

#![no_main]
#![allow(clippy::needless_range_loop)]

use arbitrary::Arbitrary;
use libfuzzer_sys::fuzz_target;
use mkp::coding::first_fit_decode;
use mkp::instance::MkpInstance;

#[derive(Arbitrary, Debug)]
struct Input {
    n: u8,
    m: u8,
    profits: Vec<u16>,
    consumption: Vec<u16>,
    capacities: Vec<u32>,
    key: Vec<u16>,
}

fn build(input: &Input) -> Option<(MkpInstance, Vec<f64>)> {
    let n = 1 + (input.n as usize % 64);
    let m = 1 + (input.m as usize % 8);
    if input.profits.len() < n || input.consumption.len() < m * n {
        return None;
    }
    if input.capacities.len() < m || input.key.len() < n {
        return None;
    }
    let profits: Vec<f64> = input.profits[..n].iter().map(|&p| p as f64 + 1.0).collect();
    let consumption: Vec<Vec<f64>> = (0..m)
        .map(|i| input.consumption[i * n..(i + 1) * n].iter().map(|&r| r as f64).collect())
        .collect();
    let capacities: Vec<f64> = input.capacities[..m].iter().map(|&b| b as f64).collect();
    let key: Vec<f64> = input.key[..n].iter().map(|&k| k as f64).collect();
    Some((MkpInstance::new("fuzz", profits, consumption, capacities), key))
}

fuzz_target!(|input: Input| {
    let Some((inst, key)) = build(&input) else { return };
    let ph = first_fit_decode(&inst, &key);
    assert!(inst.is_feasible(&ph.x), "decoded phenotype infeasible");
    assert_eq!(ph.fitness, inst.fitness(&ph.x), "fitness drifted from profits");
    // maximality: no unset item still fits the residual capacities
    let mut residual = inst.capacities.clone();
    for i in 0..inst.m {
        for j in 0..inst.n {
            if ph.x[j] {
                residual[i] -= inst.consumption[i][j];
            }
        }
    }
    for j in 0..inst.n {
        if !ph.x[j] {
            let fits = (0..inst.m).all(|i| inst.consumption[i][j] <= residual[i]);
            assert!(!fits, "item {j} still insertable");
        }
    }
    // decoding is a pure function of (instance, key)
    assert_eq!(ph.x, first_fit_decode(&inst, &key).x);
});
