// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Calendar convention of the cost model: no leap days.
pub const HOURS_PER_YEAR: f64 = 365.0 * 24.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModelInput {
    pub machine_msrp_usd: f64,
    pub avg_power_watts: f64,
    pub achieved_qps: f64,
    pub target_qps: f64,
    pub horizon_years: f64,
    pub energy_rate_usd_per_kwh: f64,
}

impl CostModelInput {
    /// Serving 100 000 QPS for 4 years at $0.10/kWh.
    pub fn new(machine_msrp_usd: f64, avg_power_watts: f64, achieved_qps: f64) -> Self {
        CostModelInput {
            machine_msrp_usd,
            avg_power_watts,
            achieved_qps,
            target_qps: 100_000.0,
            horizon_years: 4.0,
            energy_rate_usd_per_kwh: 0.10,
        }
    }

    fn validate(&self) -> Result<()> {
        let fields = [
            ("machine_msrp_usd", self.machine_msrp_usd),
            ("avg_power_watts", self.avg_power_watts),
            ("achieved_qps", self.achieved_qps),
            ("target_qps", self.target_qps),
            ("horizon_years", self.horizon_years),
            ("energy_rate_usd_per_kwh", self.energy_rate_usd_per_kwh),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Machines needed so that their combined throughput reaches the target.
pub fn machines_required(target_qps: f64, achieved_qps: f64) -> Result<u64> {
    if !(achieved_qps > 0.0 && achieved_qps.is_finite()) {
        return Err(Error::invalid(format!("achieved qps must be positive, got {achieved_qps}")));
    }
    Ok((target_qps / achieved_qps).ceil().max(1.0) as u64)
}

/// Purchase price plus energy cost of all machines over the horizon, in USD.
pub fn capacity_cost(input: &CostModelInput) -> Result<f64> {
    input.validate()?;
    let machines = machines_required(input.target_qps, input.achieved_qps)? as f64;
    let hours = input.horizon_years * HOURS_PER_YEAR;
    let energy_usd = input.avg_power_watts / 1000.0 * hours * input.energy_rate_usd_per_kwh;
    Ok(machines * (input.machine_msrp_usd + energy_usd))
}
