//! Genotype evaluation on both decode paths (biased-profit order and the
//! surrogate pseudo-utility order) must stay panic-free and feasible for
//! arbitrary finite weights, including zero surrogate denominators.

#![no_main]

use arbitrary::Arbitrary;
use libfuzzer_sys::fuzz_target;
use mkp::coding::{evaluate, Genotype, SurrogateMultipliers};
use mkp::instance::MkpInstance;

#[derive(Arbitrary, Debug)]
struct Input {
    n: u8,
    m: u8,
    profits: Vec<u16>,
    consumption: Vec<u16>,
    capacities: Vec<u32>,
    weights: Vec<u16>,
    multipliers: Vec<u16>,
}

fn build(input: &Input) -> Option<(MkpInstance, Genotype, SurrogateMultipliers)> {
    let n = 1 + (input.n as usize % 64);
    let m = 1 + (input.m as usize % 8);
    if input.profits.len() < n || input.consumption.len() < m * n {
        return None;
    }
    if input.capacities.len() < m || input.weights.len() < n || input.multipliers.len() < m {
        return None;
    }
    let profits: Vec<f64> = input.profits[..n].iter().map(|&p| p as f64 + 1.0).collect();
    let consumption: Vec<Vec<f64>> = (0..m)
        .map(|i| input.consumption[i * n..(i + 1) * n].iter().map(|&r| r as f64).collect())
        .collect();
    let capacities: Vec<f64> = input.capacities[..m].iter().map(|&b| b as f64).collect();
    // weights may be zero; multipliers may be zero in some rows, which
    // exercises the degenerate-denominator fallback
    let weights: Vec<f64> = input.weights[..n].iter().map(|&w| w as f64 / 16.0).collect();
    let mult: Vec<f64> = input.multipliers[..m].iter().map(|&a| a as f64 / 16.0).collect();
    Some((
        MkpInstance::new("fuzz", profits, consumption, capacities),
        Genotype::new(weights),
        SurrogateMultipliers::new(mult),
    ))
}

fuzz_target!(|input: Input| {
    let Some((inst, g, mult)) = build(&input) else { return };
    let iwcea = evaluate(&inst, &g, None).expect("iwcea path evaluates");
    assert!(inst.is_feasible(&iwcea.x));
    let wcea = evaluate(&inst, &g, Some(&mult)).expect("wcea path evaluates");
    assert!(inst.is_feasible(&wcea.x));
    // wrong genotype length must error, not panic
    let short = Genotype::new(vec![1.0; inst.n + 1]);
    assert!(evaluate(&inst, &short, None).is_err());
});
