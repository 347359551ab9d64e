//! A continuous landscape whose optimum hides behind a low-fitness moat.
//!
//! Fitness falls off linearly with distance to a target and is cut to a tenth
//! inside an annulus around it, so the gradient outside the annulus leads
//! objective-driven search onto the rim and no further.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{BehaviorDescriptor, Domain, EvalError, Evaluation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeceptiveConfig {
    /// Genome length D.
    pub dims: usize,
    /// Every coordinate of the optimum.
    pub target: f64,
    /// Distance at which fitness reaches zero.
    pub scale: f64,
    pub moat_inner: f64,
    pub moat_outer: f64,
    pub moat_factor: f64,
    /// Standard deviation of per-gene Gaussian mutation.
    pub mutation_sigma: f64,
    /// Per-gene mutation probability; at least one gene always mutates.
    pub mutation_rate: f64,
}

impl Default for DeceptiveConfig {
    fn default() -> Self {
        Self {
            dims: 10,
            target: 0.5,
            scale: 4.0,
            moat_inner: 0.3,
            moat_outer: 0.5,
            moat_factor: 0.1,
            mutation_sigma: 0.1,
            mutation_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeceptiveDomain {
    config: DeceptiveConfig,
}

impl DeceptiveDomain {
    pub fn new(config: DeceptiveConfig) -> Self {
        assert!(config.dims >= 2, "deceptive genome needs at least 2 genes");
        Self { config }
    }

    pub fn config(&self) -> &DeceptiveConfig {
        &self.config
    }

    pub fn distance_to_target(&self, g: &[f64]) -> f64 {
        g.iter()
            .map(|x| (x - self.config.target).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn deceptive_fitness(&self, g: &[f64]) -> f64 {
        let c = &self.config;
        let dist = self.distance_to_target(g);
        let base = (1.0 - dist / c.scale).max(0.0);
        if (c.moat_inner..=c.moat_outer).contains(&dist) {
            base * c.moat_factor
        } else {
            base
        }
    }

    /// First two genes mapped from `[-1, 1]` into `[0, 1]`.
    pub fn deceptive_descriptor(&self, g: &[f64]) -> Vec<f64> {
        g[..2].iter().map(|x| (x + 1.0) / 2.0).collect()
    }

    fn check(&self, g: &[f64]) -> Result<(), EvalError> {
        if g.len() != self.config.dims {
            return Err(EvalError::Malformed(format!(
                "expected {} genes, got {}",
                self.config.dims,
                g.len()
            )));
        }
        if let Some(x) = g.iter().find(|x| !(-1.0..=1.0).contains(*x)) {
            return Err(EvalError::Malformed(format!("gene {x} outside [-1, 1]")));
        }
        Ok(())
    }
}

impl Domain for DeceptiveDomain {
    type Genome = Vec<f64>;

    fn name(&self) -> &'static str {
        "deceptive"
    }

    fn descriptor_dims(&self) -> usize {
        2
    }

    fn descriptor_bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0); 2]
    }

    fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.config.dims)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect()
    }

    fn mutate<R: Rng + ?Sized>(&self, genome: &Vec<f64>, rng: &mut R) -> Vec<f64> {
        let noise = Normal::new(0.0, self.config.mutation_sigma).expect("sigma is positive");
        let forced = rng.random_range(0..genome.len());
        genome
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if i == forced || rng.random_bool(self.config.mutation_rate) {
                    (x + noise.sample(rng)).clamp(-1.0, 1.0)
                } else {
                    x
                }
            })
            .collect()
    }

    /// Blend: a random point on the segment between the parents.
    fn crossover<R: Rng + ?Sized>(&self, a: &Vec<f64>, b: &Vec<f64>, rng: &mut R) -> Vec<f64> {
        let alpha: f64 = rng.random();
        a.iter()
            .zip(b)
            .map(|(x, y)| (x + alpha * (y - x)).clamp(-1.0, 1.0))
            .collect()
    }

    fn evaluate(&self, genome: &Vec<f64>) -> Result<Evaluation, EvalError> {
        self.check(genome)?;
        Evaluation::feasible(
            self.deceptive_fitness(genome),
            BehaviorDescriptor::new(self.deceptive_descriptor(genome))?,
        )
    }

    fn render(&self, genome: &Vec<f64>) -> String {
        let parts: Vec<String> = genome.iter().map(|x| format!("{x:?}")).collect();
        parts.join(",")
    }

    fn parse(&self, text: &str) -> Result<Vec<f64>, EvalError> {
        let g = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| EvalError::Malformed(format!("gene {s:?}: {e}")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        self.check(&g)?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::sub_stream;
    use proptest::prelude::*;

    fn domain() -> DeceptiveDomain {
        DeceptiveDomain::new(DeceptiveConfig::default())
    }

    #[test]
    fn optimum_scores_one() {
        let d = domain();
        let g = vec![0.5; 10];
        assert_eq!(d.deceptive_fitness(&g), 1.0);
        assert_eq!(d.evaluate(&g).unwrap().fitness, 1.0);
    }

    #[test]
    fn moat_cuts_fitness() {
        let d = domain();
        let mut g = vec![0.5; 10];
        g[3] += 0.4;
        let base = 1.0 - 0.4 / 4.0;
        assert!((d.deceptive_fitness(&g) - base * 0.1).abs() < 1e-12);
        // just outside the rim the full value applies
        g[3] = 0.5 + 0.55;
        assert!((d.deceptive_fitness(&g) - (1.0 - 0.55 / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn far_corner_clamps_to_zero() {
        let d = domain();
        let g = vec![-1.0; 10];
        assert_eq!(d.deceptive_fitness(&g), 0.0);
    }

    #[test]
    fn descriptor_maps_first_two_genes() {
        let d = domain();
        let mut g = vec![0.0; 10];
        g[0] = -1.0;
        g[1] = 1.0;
        assert_eq!(d.deceptive_descriptor(&g), vec![0.0, 1.0]);
    }

    #[test]
    fn malformed_genomes_rejected() {
        let d = domain();
        assert!(d.evaluate(&vec![0.0; 3]).is_err());
        let mut g = vec![0.0; 10];
        g[0] = 1.5;
        assert!(matches!(d.evaluate(&g), Err(EvalError::Malformed(_))));
    }

    #[test]
    fn render_round_trips_exactly() {
        let d = domain();
        let g = d.random_genome(&mut sub_stream(4, 0));
        assert_eq!(d.parse(&d.render(&g)).unwrap(), g);
    }

    proptest! {
        #[test]
        fn variation_stays_in_bounds(seed in 0u64..1000) {
            let d = domain();
            let mut rng = sub_stream(seed, 0);
            let a = d.random_genome(&mut rng);
            let b = d.random_genome(&mut rng);
            let c = d.mutate(&d.crossover(&a, &b, &mut rng), &mut rng);
            prop_assert!(c.iter().all(|x| (-1.0..=1.0).contains(x)));
            let e = d.evaluate(&c).unwrap();
            prop_assert!(e.descriptor.values().iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((0.0..=1.0).contains(&e.fitness));
        }
    }
}
