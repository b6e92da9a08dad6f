use std::time::Instant;

use ccg_core::equilibrium::Clock;

/// Milliseconds since construction.
#[derive(Clone, Copy, Debug)]
pub struct StdClock {
    start: Instant,
}

impl StdClock {
    pub fn start() -> Self {
        Self { start: Instant::now() }
    }
}

impl Clock for StdClock {
    fn elapsed_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }
}
