//! Mixture of isotropic Gaussians with a fixed spread, fit to binary
//! vectors by expectation-maximization.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureConfig {
    pub components: usize,
    pub spread: f64,
    pub mean_eps: f64,
    pub max_iters: usize,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        Self {
            components: 3,
            spread: 0.5,
            mean_eps: 1e-3,
            max_iters: 100,
        }
    }
}

impl Mixture {
    /// Fits to weighted points. Initial means are distinct points drawn
    /// with `rng` (repeated when there are fewer distinct points than
    /// components). Returns `None` without positive weight.
    pub fn fit<R: Rng + ?Sized>(
        points: &[(Vec<f64>, f64)],
        config: &MixtureConfig,
        rng: &mut R,
    ) -> Option<Self> {
        let total: f64 = points.iter().map(|p| p.1).sum();
        let k = config.components.max(1);
        if points.is_empty() || total <= 0.0 {
            return None;
        }
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.shuffle(rng);
        let clip = |v: f64| v.clamp(config.mean_eps, 1.0 - config.mean_eps);
        let mut mix = Self {
            weights: vec![1.0 / k as f64; k],
            means: (0..k)
                .map(|c| points[idx[c % idx.len()]].0.iter().map(|&v| clip(v)).collect())
                .collect(),
            spread: config.spread,
        };
        for _ in 0..config.max_iters {
            let mut w_sum = vec![0.0; k];
            let dims = points[0].0.len();
            let mut m_sum = vec![vec![0.0; dims]; k];
            for (x, wx) in points {
                let resp = mix.responsibilities(x);
                for c in 0..k {
                    let r = resp[c] * wx;
                    w_sum[c] += r;
                    for (acc, v) in m_sum[c].iter_mut().zip(x) {
                        *acc += r * v;
                    }
                }
            }
            let mut shift = 0.0f64;
            for c in 0..k {
                mix.weights[c] = w_sum[c] / total;
                if w_sum[c] > 1e-12 {
                    for d in 0..dims {
                        let next = clip(m_sum[c][d] / w_sum[c]);
                        shift = shift.max((next - mix.means[c][d]).abs());
                        mix.means[c][d] = next;
                    }
                }
            }
            if shift < 1e-9 {
                break;
            }
        }
        Some(mix)
    }

    pub fn log_density(&self, c: usize, x: &[f64]) -> f64 {
        let sq: f64 = self.means[c].iter().zip(x).map(|(m, v)| (m - v).powi(2)).sum();
        self.weights[c].max(1e-300).ln() - sq / (2.0 * self.spread * self.spread)
    }

    pub fn responsibilities(&self, x: &[f64]) -> Vec<f64> {
        let logs: Vec<f64> = (0..self.weights.len()).map(|c| self.log_density(c, x)).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / z).collect()
    }

    /// Component with the highest weighted likelihood for `x`.
    pub fn best_component(&self, x: &[f64]) -> usize {
        (0..self.weights.len())
            .max_by(|&a, &b| self.log_density(a, x).total_cmp(&self.log_density(b, x)).then(b.cmp(&a)))
            .unwrap_or(0)
    }

    /// Heaviest component (lowest index on ties).
    pub fn heaviest(&self) -> usize {
        (0..self.weights.len())
            .max_by(|&a, &b| self.weights[a].total_cmp(&self.weights[b]).then(b.cmp(&a)))
            .unwrap_or(0)
    }

    pub fn sample_component<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut u: f64 = rng.random::<f64>() * self.weights.iter().sum::<f64>();
        for (c, w) in self.weights.iter().enumerate() {
            if u < *w {
                return c;
            }
            u -= w;
        }
        self.weights.len() - 1
    }

    pub fn rounded(&self, c: usize) -> Vec<bool> {
        self.means[c].iter().map(|&m| m >= 0.5).collect()
    }
}
