//! Population initialization: the greedy lower bound, the k_min/k_max
//! cut LPs, hyperplane-LP seeding for IWCEA, and plain random seeding.

use crate::coding::{self, BiasConfig, Genotype, Phenotype, SurrogateMultipliers};
use crate::instance::MkpInstance;
use crate::lp::{self, LpStatus, Sense};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsStatus {
    Ok,
    CutInfeasible,
}

/// The z-cut interval: hyperplane positions where a solution better than
/// the greedy bound can still live.
#[derive(Debug, Clone, Copy)]
pub struct InitBounds {
    pub z: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub status: BoundsStatus,
}

#[derive(Debug, Error)]
pub enum InitError {
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    #[error(transparent)]
    Coding(#[from] coding::CodingError),
    #[error("LP relaxation of the instance is {0:?}")]
    RelaxationNotOptimal(LpStatus),
    #[error("hyperplane LP at k'={k} unexpectedly {status:?}")]
    HyperplaneFailed { k: f64, status: LpStatus },
}

/// Surrogate multipliers from the LP relaxation's row duals.
pub fn surrogate_multipliers(inst: &MkpInstance) -> Result<SurrogateMultipliers, InitError> {
    let sol = lp::solve(&lp::relax_mkp(inst))?;
    if sol.status != LpStatus::Optimal {
        return Err(InitError::RelaxationNotOptimal(sol.status));
    }
    Ok(SurrogateMultipliers::new(sol.row_duals))
}

/// Greedy binary lower bound: first-fit on the unbiased pseudo-utility
/// ratios (the WCEA heuristic with all weights one).
pub fn greedy_lower_bound(inst: &MkpInstance) -> Result<(f64, Phenotype), InitError> {
    let mult = surrogate_multipliers(inst)?;
    let ones = Genotype::new(vec![1.0; inst.n]);
    let ph = coding::evaluate(inst, &ones, Some(&mult))?;
    Ok((ph.fitness, ph))
}

/// Solve the two bound LPs with the improvement cut `p.x >= z+1`.
pub fn compute_bounds(inst: &MkpInstance, z: f64) -> Result<InitBounds, InitError> {
    let max_sol = lp::solve(&lp::bounds_lp(inst, z, Sense::Max))?;
    if max_sol.status == LpStatus::Infeasible {
        return Ok(InitBounds { z, k_min: 0.0, k_max: 0.0, status: BoundsStatus::CutInfeasible });
    }
    let min_sol = lp::solve(&lp::bounds_lp(inst, z, Sense::Min))?;
    if min_sol.status == LpStatus::Infeasible {
        return Ok(InitBounds { z, k_min: 0.0, k_max: 0.0, status: BoundsStatus::CutInfeasible });
    }
    Ok(InitBounds {
        z,
        k_min: min_sol.objective,
        k_max: max_sol.objective,
        status: BoundsStatus::Ok,
    })
}

/// Seed `count` genotypes from hyperplane LPs at k' drawn uniformly from
/// [k_min, k_max]; each genotype is the LP solution itself. The draws are
/// made up front so the result is deterministic per rng state.
pub fn lp_seed_population<R: Rng>(
    inst: &MkpInstance,
    bounds: &InitBounds,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Genotype>, InitError> {
    assert_eq!(bounds.status, BoundsStatus::Ok);
    let base = lp::relax_mkp(inst);
    let ks: Vec<f64> = (0..count)
        .map(|_| bounds.k_min + rng.random::<f64>() * (bounds.k_max - bounds.k_min))
        .collect();
    let mut out = Vec::with_capacity(count);
    for k in ks {
        let sol = lp::solve(&lp::with_hyperplane(&base, k)?)?;
        if sol.status != LpStatus::Optimal {
            // cannot happen for k inside [k_min, k_max] by convexity
            return Err(InitError::HyperplaneFailed { k, status: sol.status });
        }
        out.push(Genotype::new(sol.x.into_iter().map(|v| v.clamp(0.0, 1.0)).collect()));
    }
    Ok(out)
}

/// Random genotypes with every gene drawn from the bias scheme's sampler.
pub fn random_population<R: Rng>(
    inst: &MkpInstance,
    count: usize,
    bias: &BiasConfig,
    rng: &mut R,
) -> Vec<Genotype> {
    (0..count)
        .map(|_| {
            Genotype::new(
                inst.profits
                    .iter()
                    .map(|&p| coding::sample_weight(bias, p, rng))
                    .collect(),
            )
        })
        .collect()
}
