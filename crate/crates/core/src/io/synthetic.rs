use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::IoError;
use crate::model::{validate_scenario, ScenarioData};

/// Recipe for a synthetic year calibrated to a peak residual capacity and a
/// hydrogen demand cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub hours: usize,
    /// Residual capacity outside congestion windows (MW).
    pub peak_mw: f64,
    /// Fraction of the peak removed inside a congestion window.
    pub congestion_depth: f64,
    pub congestion_hours_per_day: usize,
    /// Hour of day at which the daily window opens.
    pub congestion_start_hour: usize,
    /// Mean electricity price (€/MWh).
    pub price_level: f64,
    /// Half-width of the uniform price noise (€/MWh).
    pub price_volatility: f64,
    /// Hydrogen offtake cap (kg/h).
    pub demand_cap: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            hours: 8760,
            peak_mw: 63.0,
            congestion_depth: 0.3,
            congestion_hours_per_day: 4,
            congestion_start_hour: 16,
            price_level: 60.0,
            price_volatility: 20.0,
            demand_cap: 1800.0,
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    fn check(&self) -> Result<(), IoError> {
        let bad = |m: String| Err(IoError::Spec(m));
        if self.hours == 0 {
            return bad("hours must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.congestion_depth) {
            return bad(format!("congestion depth {} outside [0, 1]", self.congestion_depth));
        }
        if self.congestion_hours_per_day > 24 {
            return bad(format!("{} congestion hours per day", self.congestion_hours_per_day));
        }
        if self.congestion_start_hour >= 24 {
            return bad(format!("window start hour {}", self.congestion_start_hour));
        }
        for (name, v) in [
            ("peak", self.peak_mw),
            ("price level", self.price_level),
            ("price volatility", self.price_volatility),
            ("demand cap", self.demand_cap),
        ] {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }

    fn congested(&self, t: usize) -> bool {
        let h = t % 24;
        let offset = (h + 24 - self.congestion_start_hour) % 24;
        offset < self.congestion_hours_per_day
    }
}

/// Builds a validated scenario with reference parameters around synthetic
/// series. Deterministic for a fixed seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<ScenarioData, IoError> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let low = spec.peak_mw * (1.0 - spec.congestion_depth);
    let residual: Vec<f64> = (0..spec.hours)
        .map(|t| if spec.congested(t) { low } else { spec.peak_mw })
        .collect();
    let prices: Vec<f64> = (0..spec.hours)
        .map(|_| {
            let noise = if spec.price_volatility > 0.0 {
                rng.gen_range(-spec.price_volatility..=spec.price_volatility)
            } else {
                0.0
            };
            spec.price_level + noise
        })
        .collect();
    let demand = vec![spec.demand_cap; spec.hours];
    Ok(validate_scenario(ScenarioData::reference(residual, prices, demand))?)
}
