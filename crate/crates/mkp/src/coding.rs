//! The weight-coding representation: real-valued genotypes, the two
//! biasing schemes, pseudo-utility ratios, and the first-fit decoder.

use crate::instance::MkpInstance;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// A candidate solution: one nonnegative weight per item.
#[derive(Debug, Clone, PartialEq)]
pub struct Genotype {
    pub w: Vec<f64>,
}

impl Genotype {
    pub fn new(w: Vec<f64>) -> Self {
        debug_assert!(w.iter().all(|v| v.is_finite() && *v >= 0.0));
        Genotype { w }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// A decoded 0/1 solution with its unbiased fitness and a digest for
/// duplicate detection. Equality compares the packed bit vector exactly.
#[derive(Debug, Clone)]
pub struct Phenotype {
    pub x: Vec<bool>,
    pub fitness: f64,
    bits: Vec<u64>,
    hash: u64,
}

impl Phenotype {
    pub fn from_bits(inst: &MkpInstance, x: Vec<bool>) -> Self {
        let fitness = inst.fitness(&x);
        let bits = pack_bits(&x);
        let hash = fnv1a(&bits);
        Phenotype { x, fitness, bits, hash }
    }

    pub fn hash(&self) -> u64 {
        self.hash
    }

    pub fn same_solution(&self, other: &Phenotype) -> bool {
        self.hash == other.hash && self.bits == other.bits
    }
}

fn pack_bits(x: &[bool]) -> Vec<u64> {
    let mut bits = vec![0u64; x.len().div_ceil(64)];
    for (j, &set) in x.iter().enumerate() {
        if set {
            bits[j / 64] |= 1 << (j % 64);
        }
    }
    bits
}

fn fnv1a(words: &[u64]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &w in words {
        for k in 0..8 {
            h ^= (w >> (8 * k)) & 0xff;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

/// Which biasing distribution genes are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasScheme {
    /// `w = (1+gamma)^N(0,1)`, the WCEA scheme.
    LogNormal { gamma: f64 },
    /// `w_j` uniform on `[0, p_max/p_j]`, the IWCEA scheme.
    Uniform,
}

/// Biasing configuration bound to an instance (`p_max` cached).
#[derive(Debug, Clone, Copy)]
pub struct BiasConfig {
    pub scheme: BiasScheme,
    pub p_max: f64,
}

impl BiasConfig {
    pub fn lognormal(gamma: f64) -> Self {
        assert!(gamma > 0.0);
        BiasConfig { scheme: BiasScheme::LogNormal { gamma }, p_max: f64::NAN }
    }

    pub fn uniform(inst: &MkpInstance) -> Self {
        BiasConfig { scheme: BiasScheme::Uniform, p_max: inst.max_profit() }
    }
}

/// LP-relaxation shadow prices used to aggregate the knapsack rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateMultipliers {
    pub a: Vec<f64>,
}

impl SurrogateMultipliers {
    pub fn new(a: Vec<f64>) -> Self {
        debug_assert!(a.iter().all(|v| *v >= -1e-9));
        SurrogateMultipliers { a: a.into_iter().map(|v| v.max(0.0)).collect() }
    }
}

#[derive(Debug, Error)]
pub enum CodingError {
    #[error("weight vector length {got} does not match item count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("zero surrogate denominator for items {0:?}")]
    ZeroDenominator(Vec<usize>),
}

/// Draw one gene for item `j`. Log-normal draws are `exp(z ln(1+gamma))`
/// with `z ~ N(0,1)`; uniform draws cover `[0, p_max/p_j]`.
pub fn sample_weight<R: Rng>(cfg: &BiasConfig, profit_j: f64, rng: &mut R) -> f64 {
    match cfg.scheme {
        BiasScheme::LogNormal { gamma } => {
            let z: f64 = rng.sample(StandardNormal);
            (z * (1.0 + gamma).ln()).exp()
        }
        BiasScheme::Uniform => rng.random::<f64>() * (cfg.p_max / profit_j),
    }
}

/// Biased profits `p'_j = p_j w_j`.
pub fn bias_profits(inst: &MkpInstance, g: &Genotype) -> Result<Vec<f64>, CodingError> {
    if g.len() != inst.n {
        return Err(CodingError::LengthMismatch { expected: inst.n, got: g.len() });
    }
    Ok(inst.profits.iter().zip(&g.w).map(|(p, w)| p * w).collect())
}

/// Pseudo-utility ratios `u_j = p'_j / sum_i a_i r_ij`. Items whose
/// surrogate denominator vanishes are reported so the caller can order
/// them last.
pub fn pseudo_utilities(
    biased: &[f64],
    inst: &MkpInstance,
    mult: &SurrogateMultipliers,
) -> Result<Vec<f64>, CodingError> {
    assert_eq!(biased.len(), inst.n);
    assert_eq!(mult.a.len(), inst.m);
    let mut u = Vec::with_capacity(inst.n);
    let mut degenerate = Vec::new();
    for j in 0..inst.n {
        let denom: f64 = (0..inst.m).map(|i| mult.a[i] * inst.consumption[i][j]).sum();
        if denom <= 0.0 {
            degenerate.push(j);
            u.push(f64::NAN);
        } else {
            u.push(biased[j] / denom);
        }
    }
    if degenerate.is_empty() {
        Ok(u)
    } else {
        Err(CodingError::ZeroDenominator(degenerate))
    }
}

/// Item traversal order for a key vector: descending key, ties by
/// ascending item index.
pub fn sort_order(key: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..key.len()).collect();
    order.sort_by(|&a, &b| key[b].partial_cmp(&key[a]).unwrap().then(a.cmp(&b)));
    order
}

/// First-fit over an explicit item order: take every item that still fits
/// all residual capacities.
pub fn first_fit_decode_order(inst: &MkpInstance, order: &[usize]) -> Phenotype {
    let mut residual = inst.capacities.clone();
    let mut x = vec![false; inst.n];
    'items: for &j in order {
        for i in 0..inst.m {
            if inst.consumption[i][j] > residual[i] {
                continue 'items;
            }
        }
        for i in 0..inst.m {
            residual[i] -= inst.consumption[i][j];
        }
        x[j] = true;
    }
    Phenotype::from_bits(inst, x)
}

/// First-fit decode sorting by `key` descending (ties: ascending index).
pub fn first_fit_decode(inst: &MkpInstance, key: &[f64]) -> Phenotype {
    assert_eq!(key.len(), inst.n);
    first_fit_decode_order(inst, &sort_order(key))
}

/// Decode order under WCEA's surrogate heuristic, with the degenerate
/// fallback: finite-ratio items by u descending, then zero-denominator
/// items by biased profit descending.
fn wcea_order(
    biased: &[f64],
    inst: &MkpInstance,
    mult: &SurrogateMultipliers,
) -> Vec<usize> {
    match pseudo_utilities(biased, inst, mult) {
        Ok(u) => sort_order(&u),
        Err(CodingError::ZeroDenominator(degenerate)) => {
            let mut finite: Vec<usize> =
                (0..inst.n).filter(|j| !degenerate.contains(j)).collect();
            let denom = |j: usize| -> f64 {
                (0..inst.m).map(|i| mult.a[i] * inst.consumption[i][j]).sum()
            };
            finite.sort_by(|&a, &b| {
                let ua = biased[a] / denom(a);
                let ub = biased[b] / denom(b);
                ub.partial_cmp(&ua).unwrap().then(a.cmp(&b))
            });
            let mut tail = degenerate;
            tail.sort_by(|&a, &b| {
                biased[b].partial_cmp(&biased[a]).unwrap().then(a.cmp(&b))
            });
            finite.extend(tail);
            finite
        }
        Err(e) => unreachable!("{e}"),
    }
}

/// Full genotype evaluation: bias, order (surrogate ratios for WCEA when
/// multipliers are given, biased profits directly otherwise), first-fit.
pub fn evaluate(
    inst: &MkpInstance,
    g: &Genotype,
    mult: Option<&SurrogateMultipliers>,
) -> Result<Phenotype, CodingError> {
    let biased = bias_profits(inst, g)?;
    let order = match mult {
        Some(a) => wcea_order(&biased, inst, a),
        None => sort_order(&biased),
    };
    Ok(first_fit_decode_order(inst, &order))
}
