use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Spaces request starts at least `1 / qps` seconds apart across all threads.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl RateLimiter {
    /// `qps` must be positive; an infinite rate disables pacing.
    pub fn new(qps: f64) -> Self {
        assert!(qps > 0.0, "qps must be positive");
        let interval = if qps.is_finite() {
            Duration::from_secs_f64(1.0 / qps)
        } else {
            Duration::ZERO
        };
        RateLimiter {
            interval,
            next_slot: Mutex::new(None),
        }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Blocks until the caller may issue its request.
    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next_slot.lock().expect("rate limiter lock poisoned");
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paces_sequential_calls() {
        let rl = RateLimiter::new(50.0);
        let start = Instant::now();
        for _ in 0..6 {
            rl.acquire();
        }
        // 5 intervals of 20 ms
        assert!(start.elapsed() >= Duration::from_millis(100));
    }

    #[test]
    fn paces_across_threads() {
        let rl = RateLimiter::new(100.0);
        let start = Instant::now();
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    for _ in 0..3 {
                        rl.acquire();
                    }
                });
            }
        });
        // 12 slots -> 11 intervals of 10 ms
        assert!(start.elapsed() >= Duration::from_millis(110));
    }
}
