use std::time::Duration;

use rand::Rng;

/// Exponential backoff with equal jitter: attempt `k` (0-based) waits a
/// uniform delay in `[d/2, d]` with `d = min(max_delay, base_delay * 2^k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay: Duration::from_millis(250),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    /// No waiting between attempts; used by offline runs and tests.
    pub fn immediate(max_attempts: u32) -> Self {
        Self {
            max_attempts,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        }
    }

    pub fn delay_for(&self, attempt: u32, rng: &mut impl Rng) -> Duration {
        let factor = 2u32.saturating_pow(attempt.min(30));
        let ceiling = self.base_delay.saturating_mul(factor).min(self.max_delay);
        if ceiling.is_zero() {
            return ceiling;
        }
        let half = ceiling / 2;
        half + ceiling.mul_f64(rng.gen::<f64>() * 0.5)
    }
}
