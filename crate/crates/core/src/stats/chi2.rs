use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{EffectLabel, StatResult, StatsError};

/// Row 1 is the focal group `[yes, no]`, row 2 everyone else `[yes, no]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable2x2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable2x2 {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Self { a, b, c, d }
    }

    pub fn n(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    pub fn transposed(&self) -> Self {
        Self::new(self.a, self.c, self.b, self.d)
    }
}

/// Pearson chi-square for a 2x2 table, with Yates' continuity correction
/// when `continuity_correction` is set. The p-value is the df = 1 survival
/// function `erfc(sqrt(x / 2))`; the effect size is phi = sqrt(x / N).
pub fn chi_square_2x2(t: &ContingencyTable2x2, continuity_correction: bool) -> Result<StatResult, StatsError> {
    let (a, b, c, d) = (t.a as f64, t.b as f64, t.c as f64, t.d as f64);
    let n = a + b + c + d;
    let margins = [a + b, c + d, a + c, b + d];
    if n == 0.0 || margins.contains(&0.0) {
        return Err(StatsError::DegenerateTable);
    }
    let correction = if continuity_correction { n / 2.0 } else { 0.0 };
    let diff = ((a * d - b * c).abs() - correction).max(0.0);
    let statistic = n * diff * diff / margins.iter().product::<f64>();
    let phi = (statistic / n).sqrt();
    Ok(StatResult {
        statistic,
        p_value: erfc((statistic / 2.0).sqrt()).clamp(0.0, 1.0),
        effect_size: phi,
        effect_label: EffectLabel::of(phi),
    })
}
