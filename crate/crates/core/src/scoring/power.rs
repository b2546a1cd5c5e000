// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::TradeoffPoint;
use crate::error::{Error, Result};

/// Power reading at a point in time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    pub seconds: f64,
    pub watts: f64,
}

/// Energy in joules by the trapezoid rule over a sampled power trace.
pub fn integrate_power(samples: &[PowerSample]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::invalid(format!(
            "at least two power samples are needed, got {}",
            samples.len()
        )));
    }
    for s in samples {
        if !s.seconds.is_finite() || !(s.watts >= 0.0 && s.watts.is_finite()) {
            return Err(Error::invalid(format!("invalid power sample {s:?}")));
        }
    }
    let mut energy = 0.0;
    for w in samples.windows(2) {
        let dt = w[1].seconds - w[0].seconds;
        if dt < 0.0 {
            return Err(Error::invalid(format!(
                "power sample timestamps go backwards at {}s",
                w[1].seconds
            )));
        }
        energy += 0.5 * (w[0].watts + w[1].watts) * dt;
    }
    Ok(energy)
}

pub fn joules_per_query(energy_joules: f64, num_queries: usize) -> Result<f64> {
    if num_queries == 0 {
        return Err(Error::invalid("query count must be positive"));
    }
    if !(energy_joules >= 0.0 && energy_joules.is_finite()) {
        return Err(Error::invalid(format!("invalid energy {energy_joules} J")));
    }
    Ok(energy_joules / num_queries as f64)
}

/// Lowest energy per query among configurations reaching both thresholds.
pub fn gated_joules_per_query(
    points: &[TradeoffPoint],
    min_qps: f64,
    min_accuracy: f64,
) -> Result<f64> {
    points
        .iter()
        .filter(|p| p.qps >= min_qps && p.accuracy >= min_accuracy)
        .filter_map(|p| p.energy_joules_per_query)
        .min_by(f64::total_cmp)
        .ok_or_else(|| {
            Error::invalid(format!(
                "no configuration with energy data reaches {min_qps} qps and accuracy {min_accuracy}"
            ))
        })
}
