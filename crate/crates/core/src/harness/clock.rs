// SPDX-License-Identifier: Apache-2.0

use std::sync::Mutex;
use std::time::Instant;

/// Monotonic time source in nanoseconds.
pub trait Clock: Send + Sync {
    fn now_ns(&self) -> u64;
}

/// Wall clock measured from construction.
#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_ns(&self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }
}

/// Replays a fixed list of readings, then repeats the last one.
#[derive(Debug)]
pub struct ScriptedClock {
    ticks: Vec<u64>,
    next: Mutex<usize>,
}

impl ScriptedClock {
    /// Readings must be non-decreasing.
    pub fn new(ticks: Vec<u64>) -> Self {
        assert!(
            ticks.windows(2).all(|w| w[0] <= w[1]),
            "clock readings must be non-decreasing"
        );
        ScriptedClock {
            ticks,
            next: Mutex::new(0),
        }
    }

    /// Readings that make consecutive start/stop pairs span the given
    /// durations in seconds.
    pub fn from_pass_durations(seconds: &[f64]) -> Self {
        let mut ticks = Vec::with_capacity(seconds.len() * 2);
        let mut now = 0u64;
        for &s in seconds {
            ticks.push(now);
            now += (s * 1e9).round() as u64;
            ticks.push(now);
        }
        Self::new(ticks)
    }
}

impl Clock for ScriptedClock {
    fn now_ns(&self) -> u64 {
        let mut next = self.next.lock().unwrap();
        let i = (*next).min(self.ticks.len().saturating_sub(1));
        *next += 1;
        self.ticks.get(i).copied().unwrap_or(0)
    }
}
