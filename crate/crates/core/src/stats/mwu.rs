use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{mid_ranks, EffectLabel, StatResult, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `U` for the first sample, in `result.statistic` as well.
    pub u: f64,
    pub z: f64,
    pub result: StatResult,
}

/// Two-sided Mann-Whitney U test. `U` counts, over all cross-sample pairs,
/// how often an `x` exceeds a `y` (ties count half). The p-value uses the
/// normal approximation with tie-corrected variance and a continuity
/// correction; the effect size is the rank-biserial `1 - 2U / (n1 n2)`.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<MannWhitney, StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFiniteInput);
    }
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let all: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = mid_ranks(&all);
    let r1: f64 = ranks[..x.len()].iter().sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;

    let n = n1 + n2;
    let mut sorted = all.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let mean = n1 * n2 / 2.0;
    let var = if n > 1.0 {
        n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))
    } else {
        0.0
    };
    let (z, p) = if var > 0.0 {
        let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
        (z.copysign(u - mean), erfc(z / std::f64::consts::SQRT_2).clamp(0.0, 1.0))
    } else {
        (0.0, 1.0)
    };
    let r = 1.0 - 2.0 * u / (n1 * n2);
    Ok(MannWhitney {
        u,
        z,
        result: StatResult {
            statistic: u,
            p_value: p,
            effect_size: r,
            effect_label: EffectLabel::of(r),
        },
    })
}
