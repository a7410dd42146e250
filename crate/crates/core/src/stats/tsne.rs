use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    /// Capped at `(N - 1) / 3` for small inputs.
    pub perplexity: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub early_exaggeration: f64,
    /// Exaggeration and the low momentum apply before this iteration.
    pub exaggeration_iterations: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            learning_rate: 200.0,
            iterations: 1000,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    pub points: Vec<[f64; 2]>,
    pub final_kl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub rows: Vec<Vec<f64>>,
    /// Columns with zero variance, mapped to all zeros.
    pub zero_variance: Vec<usize>,
}

/// Column-wise z-scores with the population standard deviation.
pub fn standardize(rows: &[Vec<f64>]) -> Result<Standardized, StatsError> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(StatsError::RaggedRows);
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFiniteInput);
    }
    let n = rows.len() as f64;
    let mut out = rows.to_vec();
    let mut zero_variance = Vec::new();
    for j in 0..width {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd == 0.0 {
            zero_variance.push(j);
            out.iter_mut().for_each(|r| r[j] = 0.0);
        } else {
            out.iter_mut().for_each(|r| r[j] = (r[j] - mean) / sd);
        }
    }
    Ok(Standardized { rows: out, zero_variance })
}

fn sq_distances(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut d = vec![0.0; n * n];
    d.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for j in 0..n {
            row[j] = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        }
    });
    d
}

/// Conditional affinities of point `i`, searching the Gaussian precision so
/// the entropy matches `ln(perplexity)`.
fn conditional_row(dist: &[f64], i: usize, perplexity: f64) -> Vec<f64> {
    let n = dist.len();
    let target = perplexity.ln();
    let (mut beta, mut lo, mut hi) = (1.0f64, f64::NEG_INFINITY, f64::INFINITY);
    let mut p = vec![0.0; n];
    for _ in 0..50 {
        let mut sum = 0.0;
        for j in 0..n {
            p[j] = if j == i { 0.0 } else { (-beta * dist[j]).exp() };
            sum += p[j];
        }
        let sum = sum.max(f64::MIN_POSITIVE);
        let weighted: f64 = (0..n).map(|j| dist[j] * p[j]).sum();
        let entropy = sum.ln() + beta * weighted / sum;
        p.iter_mut().for_each(|v| *v /= sum);
        let diff = entropy - target;
        if diff.abs() < 1e-5 {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
        }
    }
    p
}

/// Exact t-SNE into two dimensions. Inputs are expected to be standardized.
pub fn tsne_project(rows: &[Vec<f64>], config: &TsneConfig) -> Result<Embedding2D, StatsError> {
    let n = rows.len();
    if n < 4 {
        return Err(StatsError::TooFewPoints(n));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(StatsError::RaggedRows);
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFiniteInput);
    }
    let perplexity = config.perplexity.min((n - 1) as f64 / 3.0).max(1.0);
    let dist = sq_distances(rows);
    let cond: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| conditional_row(&dist[i * n..(i + 1) * n], i, perplexity))
        .collect();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i][j] + cond[j][i]) / (2.0 * n as f64)).max(1e-12);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            [a * 1e-4, b * 1e-4]
        })
        .collect();
    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut num = vec![0.0; n * n];
    for it in 0..config.iterations {
        let early = it < config.exaggeration_iterations;
        let exaggeration = if early { config.early_exaggeration } else { 1.0 };
        let momentum = if early { config.initial_momentum } else { config.final_momentum };
        num.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for j in 0..n {
                row[j] = if i == j {
                    0.0
                } else {
                    let dx = y[i][0] - y[j][0];
                    let dy = y[i][1] - y[j][1];
                    1.0 / (1.0 + dx * dx + dy * dy)
                };
            }
        });
        let z: f64 = num.par_chunks(n).map(|r| r.iter().sum::<f64>()).collect::<Vec<_>>().iter().sum();
        let grad: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0; 2];
                for j in 0..n {
                    let w = num[i * n + j];
                    let m = (exaggeration * p[i * n + j] - w / z) * w;
                    g[0] += 4.0 * m * (y[i][0] - y[j][0]);
                    g[1] += 4.0 * m * (y[i][1] - y[j][1]);
                }
                g
            })
            .collect();
        for i in 0..n {
            for d in 0..2 {
                let same_sign = (grad[i][d] > 0.0) == (update[i][d] > 0.0);
                gains[i][d] = if same_sign { gains[i][d] * 0.8 } else { gains[i][d] + 0.2 };
                gains[i][d] = gains[i][d].max(0.01);
                update[i][d] = momentum * update[i][d] - config.learning_rate * gains[i][d] * grad[i][d];
                y[i][d] += update[i][d];
            }
        }
        let mean = [
            y.iter().map(|p| p[0]).sum::<f64>() / n as f64,
            y.iter().map(|p| p[1]).sum::<f64>() / n as f64,
        ];
        y.iter_mut().for_each(|p| {
            p[0] -= mean[0];
            p[1] -= mean[1];
        });
    }

    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                num[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
                z += num[i * n + j];
            }
        }
    }
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let q = (num[i * n + j] / z).max(1e-12);
                kl += p[i * n + j] * (p[i * n + j] / q).ln();
            }
        }
    }
    if y.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFiniteInput);
    }
    Ok(Embedding2D {
        points: y,
        final_kl: kl.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> TsneConfig {
        TsneConfig {
            iterations: 300,
            ..TsneConfig::default()
        }
    }

    fn blobs() -> Vec<Vec<f64>> {
        (0..12)
            .map(|i| {
                let c = (i % 3) as f64 * 8.0;
                vec![c + (i as f64) * 0.125, c - (i as f64) * 0.0625, 1.0]
            })
            .collect()
    }

    #[test]
    fn standardize_examples() {
        let s = standardize(&[vec![0.0, 5.0], vec![10.0, 5.0]]).unwrap();
        assert_eq!(s.rows, vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(s.zero_variance, vec![1]);
        let again = standardize(&s.rows).unwrap();
        for (a, b) in again.rows.iter().flatten().zip(s.rows.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            tsne_project(&[vec![1.0], vec![2.0], vec![3.0]], &quick()),
            Err(StatsError::TooFewPoints(3))
        ));
    }

    #[test]
    fn deterministic_and_translation_invariant() {
        let rows = blobs();
        let a = tsne_project(&rows, &quick()).unwrap();
        let b = tsne_project(&rows, &quick()).unwrap();
        assert_eq!(a, b);
        let shifted: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v + 64.0).collect()).collect();
        assert_eq!(tsne_project(&shifted, &quick()).unwrap(), a);
        assert!(a.final_kl >= 0.0);
    }

    #[test]
    fn perplexity_search_hits_target() {
        let rows = blobs();
        let d = sq_distances(&rows);
        let n = rows.len();
        let p = conditional_row(&d[..n], 0, 3.0);
        let h: f64 = -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>();
        assert!((h - 3.0f64.ln()).abs() < 1e-4);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
