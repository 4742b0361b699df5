//! Two-feature Gaussian-mixture datasets with fixed sensitive attribute and label per component.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{DataPoint, Dataset, FeatureSchema};

/// One mixture component: `count` points around `(mu_x1, mu_x2)` with fixed `s` and `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecRow {
    pub mu_x1: f64,
    pub mu_x2: f64,
    pub s: i64,
    pub y: u8,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub rows: Vec<SpecRow>,
    pub sigma: f64,
}

impl SyntheticSpec {
    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.count).sum()
    }

    pub fn is_valid(&self) -> bool {
        self.sigma >= 0.0
            && self.sigma.is_finite()
            && self
                .rows
                .iter()
                .all(|r| r.count > 0 && (r.s == 0 || r.s == 1) && r.y <= 1)
    }
}

const fn row(mu_x1: f64, mu_x2: f64, s: i64, y: u8, count: usize) -> SpecRow {
    SpecRow {
        mu_x1,
        mu_x2,
        s,
        y,
        count,
    }
}

/// Equal acceptance rates, unequal distance to the boundary for the two unfavorable clusters.
pub fn preset_da() -> SyntheticSpec {
    SyntheticSpec {
        rows: vec![
            row(1.0, 9.0, 0, 0, 20),
            row(3.5, 5.0, 1, 0, 20),
            row(9.0, 1.0, 0, 1, 20),
            row(9.0, 1.0, 1, 1, 20),
        ],
        sigma: 1.0,
    }
}

/// Group 0 has the lower acceptance rate but the nearer unfavorable cluster.
pub fn preset_db() -> SyntheticSpec {
    SyntheticSpec {
        rows: vec![
            row(1.0, 9.0, 1, 0, 15),
            row(3.5, 5.0, 0, 0, 15),
            row(9.0, 1.0, 1, 1, 30),
            row(9.0, 1.0, 0, 1, 20),
        ],
        sigma: 1.0,
    }
}

/// Draw the mixture, rows in spec order, `x1` then `x2` per point.
///
/// Randomness comes from a ChaCha8 stream seeded with `seed`; standard
/// normals use `rand_distr`'s ziggurat sampler and are scaled as
/// `mu + sigma * z`. With `sigma = 0` every point sits on its mean.
pub fn generate(spec: &SyntheticSpec, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(spec.total());
    for r in &spec.rows {
        for _ in 0..r.count {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            points.push(DataPoint {
                x: vec![r.mu_x1 + spec.sigma * z1, r.mu_x2 + spec.sigma * z2],
                sensitive: vec![r.s],
                y: r.y,
            });
        }
    }
    Dataset {
        schema: FeatureSchema::synthetic(),
        points,
        favorable_label_raw: 1,
        audited: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn per_group(spec: &SyntheticSpec, s: i64) -> usize {
        spec.rows.iter().filter(|r| r.s == s).map(|r| r.count).sum()
    }

    #[test]
    fn presets_match_the_mixture_tables() {
        let da = preset_da();
        assert_eq!(da.total(), 80);
        assert_eq!(da.sigma, 1.0);
        assert!(da.is_valid());
        let db = preset_db();
        assert_eq!(db.total(), 80);
        assert_eq!(per_group(&db, 0), 35);
        assert_eq!(per_group(&db, 1), 45);
        assert_eq!(per_group(&da, 0), 40);
    }

    #[test]
    fn generated_da_layout() {
        let ds = generate(&preset_da(), 1);
        assert_eq!(ds.len(), 80);
        let expected = [(0, 0), (1, 0), (0, 1), (1, 1)];
        for (block, &(s, y)) in ds.points.chunks(20).zip(&expected) {
            assert!(block.iter().all(|p| p.sensitive == vec![s] && p.y == y));
        }
    }

    #[test]
    fn generated_db_layout() {
        let ds = generate(&preset_db(), 1);
        let rows = preset_db().rows;
        let mut offset = 0;
        for r in rows {
            for p in &ds.points[offset..offset + r.count] {
                assert_eq!((p.sensitive[0], p.y), (r.s, r.y));
            }
            offset += r.count;
        }
    }

    #[test]
    fn zero_sigma_collapses_to_means() {
        let spec = SyntheticSpec {
            rows: vec![row(2.0, -3.0, 1, 0, 3)],
            sigma: 0.0,
        };
        let ds = generate(&spec, 77);
        assert_eq!(ds.len(), 3);
        assert!(ds.points.iter().all(|p| p.x == vec![2.0, -3.0]));
    }

    #[test]
    fn sample_means_converge() {
        let spec = SyntheticSpec {
            rows: vec![row(1.0, 9.0, 0, 0, 10_000), row(3.5, 5.0, 1, 1, 10_000)],
            sigma: 1.0,
        };
        let ds = generate(&spec, 5);
        for (block, r) in ds.points.chunks(10_000).zip(&spec.rows) {
            let n = block.len() as f64;
            let m1 = block.iter().map(|p| p.x[0]).sum::<f64>() / n;
            let m2 = block.iter().map(|p| p.x[1]).sum::<f64>() / n;
            assert!((m1 - r.mu_x1).abs() < 0.05, "{m1}");
            assert!((m2 - r.mu_x2).abs() < 0.05, "{m2}");
        }
    }

    #[test]
    fn seeds_control_output() {
        let a = generate(&preset_db(), 11);
        let b = generate(&preset_db(), 11);
        let bits = |d: &Dataset| -> Vec<u64> {
            d.points
                .iter()
                .flat_map(|p| p.x.iter().map(|v| v.to_bits()))
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&generate(&preset_db(), 12)));
    }
}
