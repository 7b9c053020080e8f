//! Single-objective elitist genetic algorithm over box-bounded latents:
//! tournament selection, blend crossover, Gaussian mutation clipped to
//! the bounds.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LatentVector;
use crate::rng::{standard_normal, stream_rng, uniform};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>, GaConfig<T>: Default"))]
#[serde(default)]
pub struct GaConfig<T> {
    pub population: usize,
    pub generations: usize,
    /// Mutation sigma as a fraction of each bound range.
    pub mutation_sigma_frac: T,
    /// Per-gene mutation probability.
    pub mutation_prob: T,
    pub tournament_size: usize,
    /// Unmutated top individuals carried over each generation.
    pub elites: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for GaConfig<T> {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 40,
            mutation_sigma_frac: T::from_f64(0.05),
            mutation_prob: T::from_f64(0.4),
            tournament_size: 2,
            elites: 2,
            seed: 0,
        }
    }
}

fn clip<T: Scalar>(v: T, lo: T, hi: T) -> T {
    v.max(lo).min(hi)
}

/// Runs the GA maximizing `score` and returns the top `count` unique
/// individuals (Euclidean distance > 1e-9) from the final population.
pub fn ga_propose<T: Scalar>(
    score: &(impl Fn(&[T]) -> T + Sync),
    bounds: &[(T, T)],
    cfg: &GaConfig<T>,
    count: usize,
) -> Result<Vec<LatentVector<T>>> {
    if bounds.is_empty() {
        return Err(Error::Config("empty bounds".into()));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if lo > hi {
            return Err(Error::Config(format!("infeasible bounds [{lo}, {hi}] at index {i}")));
        }
    }
    if cfg.population < count {
        return Err(Error::Config(format!(
            "population {} smaller than requested count {count}",
            cfg.population
        )));
    }
    if cfg.population == 0 || cfg.tournament_size == 0 {
        return Err(Error::Config("population and tournament size must be >= 1".into()));
    }
    let d = bounds.len();
    let mut rng = stream_rng(cfg.seed, 0x6A);
    let mut pop: Vec<Vec<T>> = (0..cfg.population)
        .map(|_| bounds.iter().map(|&(lo, hi)| uniform(&mut rng, lo, hi)).collect())
        .collect();
    let sigma: Vec<T> =
        bounds.iter().map(|&(lo, hi)| (hi - lo) * cfg.mutation_sigma_frac).collect();

    let eval = |pop: &[Vec<T>]| -> Vec<T> {
        pop.par_iter()
            .map(|ind| {
                let s = score(ind);
                if s.is_finite() {
                    s
                } else {
                    T::neg_infinity()
                }
            })
            .collect()
    };
    let ranked_indices = |scores: &[T]| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.sort_by(|&a, &b| {
            scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal)
        });
        idx
    };

    let mut scores = eval(&pop);
    for _gen in 0..cfg.generations {
        let order = ranked_indices(&scores);
        let mut next: Vec<Vec<T>> =
            order.iter().take(cfg.elites.min(pop.len())).map(|&i| pop[i].clone()).collect();
        while next.len() < cfg.population {
            let tournament = |rng: &mut rand_chacha::ChaCha8Rng| -> usize {
                let mut best = rng.gen_range(0..pop.len());
                for _ in 1..cfg.tournament_size {
                    let c = rng.gen_range(0..pop.len());
                    if scores[c] > scores[best] {
                        best = c;
                    }
                }
                best
            };
            let (pa, pb) = (tournament(&mut rng), tournament(&mut rng));
            // Blend crossover (BLX-alpha, alpha = 0.5) gene by gene.
            let alpha = T::half();
            let mut child = Vec::with_capacity(d);
            for g in 0..d {
                let (a, b) = (pop[pa][g], pop[pb][g]);
                let (lo_g, hi_g) = (a.min(b), a.max(b));
                let span = hi_g - lo_g;
                let v = uniform(&mut rng, lo_g - alpha * span, hi_g + alpha * span);
                child.push(clip(v, bounds[g].0, bounds[g].1));
            }
            for g in 0..d {
                if T::from_f64(rng.gen::<f64>()) < cfg.mutation_prob {
                    let step = standard_normal::<T>(&mut rng) * sigma[g];
                    child[g] = clip(child[g] + step, bounds[g].0, bounds[g].1);
                }
            }
            next.push(child);
        }
        pop = next;
        scores = eval(&pop);
    }

    let order = ranked_indices(&scores);
    let mut picked: Vec<Vec<T>> = Vec::with_capacity(count);
    for &i in &order {
        let candidate = &pop[i];
        let dup = picked.iter().any(|p| {
            p.iter()
                .zip(candidate)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<T>()
                .sqrt()
                < T::from_f64(1e-9)
        });
        if !dup {
            picked.push(candidate.clone());
            if picked.len() == count {
                break;
            }
        }
    }
    Ok(picked
        .into_iter()
        .map(|values| LatentVector { values, bounds: bounds.to_vec() })
        .collect())
}
