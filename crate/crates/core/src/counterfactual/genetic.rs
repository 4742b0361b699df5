use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Counterfactual, DistanceMetric, FeatureRange, GaConfig};
use crate::classifier::LinearModel;

/// Per-generation record of one search.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SearchTrace {
    /// Best fitness (`1/d`) seen up to and including each generation; `0.0`
    /// while no opposite-class candidate has been seen.
    pub best_fitness: Vec<f64>,
    /// Opposite-class candidates found in each generation's selection step.
    pub valid_per_generation: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Candidate {
    point: Vec<f64>,
    distance: f64,
}

fn uniform_point(ranges: &[FeatureRange], rng: &mut ChaCha8Rng) -> Vec<f64> {
    ranges
        .iter()
        .map(|r| r.min + (r.max - r.min) * rng.random::<f64>())
        .collect()
}

/// Keep opposite-class candidates at positive distance, nearest first.
/// The sort is stable so equal distances keep population order.
fn rank(
    population: Vec<Vec<f64>>,
    model: &LinearModel,
    x: &[f64],
    origin_class: u8,
    metric: DistanceMetric,
) -> Vec<Candidate> {
    let mut ranked: Vec<Candidate> = population
        .into_iter()
        .filter(|p| model.predict_unchecked(p) != origin_class)
        .filter_map(|point| {
            let distance = metric.eval(x, &point);
            (distance > 0.0).then_some(Candidate { point, distance })
        })
        .collect();
    ranked.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    ranked
}

/// Re-draw one uniformly chosen feature within its range.
fn mutate(individual: &mut [f64], ranges: &[FeatureRange], rng: &mut ChaCha8Rng) {
    let j = rng.random_range(0..individual.len());
    let r = ranges[j];
    individual[j] = r.min + (r.max - r.min) * rng.random::<f64>();
}

/// Swap each feature position between the two parents with probability 1/2.
fn crossover(a: &mut [f64], b: &mut [f64], rng: &mut ChaCha8Rng) {
    for j in 0..a.len() {
        if rng.random_bool(0.5) {
            std::mem::swap(&mut a[j], &mut b[j]);
        }
    }
}

/// Box around `x` of half-width `radius`, clipped to `ranges`. A box that
/// misses a range entirely falls back to that range.
fn refill_region(x: &[f64], radius: f64, ranges: &[FeatureRange]) -> Vec<FeatureRange> {
    x.iter()
        .zip(ranges)
        .map(|(&v, r)| {
            let min = r.min.max(v - radius);
            let max = r.max.min(v + radius);
            if min <= max {
                FeatureRange { min, max }
            } else {
                *r
            }
        })
        .collect()
}

pub(super) fn search(
    model: &LinearModel,
    x: &[f64],
    origin_index: usize,
    config: &GaConfig,
    ranges: &[FeatureRange],
    rng: &mut ChaCha8Rng,
) -> (Counterfactual, SearchTrace) {
    let origin_class = model.predict_unchecked(x);
    let metric = config.distance_metric;
    let mut trace = SearchTrace::default();
    let mut best: Option<Candidate> = None;
    let offer = |best: &mut Option<Candidate>, c: Option<&Candidate>| {
        if let Some(c) = c {
            if best.as_ref().is_none_or(|b| c.distance < b.distance) {
                *best = Some(c.clone());
            }
        }
    };

    let mut population: Vec<Vec<f64>> = (0..config.population_size)
        .map(|_| uniform_point(ranges, rng))
        .collect();

    for generation in 0..config.generations {
        let mut selected = rank(population, model, x, origin_class, metric);
        trace.valid_per_generation.push(selected.len());
        selected.truncate(config.retained_after_selection);
        offer(&mut best, selected.first());

        let elite_count = config.retained_for_next_generation.min(selected.len());
        let elites: Vec<Vec<f64>> = selected[..elite_count]
            .iter()
            .map(|c| c.point.clone())
            .collect();

        let mut pool: Vec<Vec<f64>> = selected.into_iter().map(|c| c.point).collect();
        for individual in pool.iter_mut() {
            if rng.random_bool(config.mutation_probability) {
                mutate(individual, ranges, rng);
            }
        }
        // Pool is in rank order, so chunks pair adjacent ranks.
        for pair in pool.chunks_mut(2) {
            if let [a, b] = pair {
                if rng.random_bool(config.crossover_probability) {
                    crossover(a, b, rng);
                }
            }
        }
        let mut children = rank(pool, model, x, origin_class, metric);
        offer(&mut best, children.first());
        children.truncate(config.retained_after_selection - elite_count);

        trace
            .best_fitness
            .push(best.as_ref().map_or(0.0, |b| 1.0 / b.distance));

        if generation + 1 == config.generations {
            break;
        }
        population = elites;
        population.extend(children.into_iter().map(|c| c.point));
        // Only points within the current best distance can improve on it.
        let region = match &best {
            Some(b) => refill_region(x, b.distance, ranges),
            None => ranges.to_vec(),
        };
        while population.len() < config.population_size {
            population.push(uniform_point(&region, rng));
        }
    }

    let cf = match best {
        Some(b) => Counterfactual::found(
            origin_index,
            x.to_vec(),
            b.point,
            b.distance,
            config.generations,
        ),
        None => Counterfactual::not_found(origin_index, x.to_vec(), config.generations),
    };
    (cf, trace)
}
