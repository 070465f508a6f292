use std::time::{Duration, Instant};

use log::warn;

use super::{BackendConfig, GatewayError, Reply, Result};

/// Runs `attempt` until it succeeds, fails permanently, or the retry count
/// or time budget runs out.
///
/// The whole call, backoff sleeps included, is bounded by
/// `(max_retries + 1) * timeout_s`. Each attempt receives the time it may
/// use, which shrinks as the budget is consumed.
pub(crate) fn with_retries<T>(cfg: &BackendConfig, mut attempt: impl FnMut(Duration) -> Result<T>) -> Result<Reply<T>> {
    let per_attempt = cfg.timeout();
    let deadline = Instant::now() + per_attempt * (cfg.max_retries + 1);
    let mut backoff = Duration::from_millis(cfg.backoff_ms);
    let mut retries = 0;
    loop {
        let remaining = deadline.saturating_duration_since(Instant::now());
        if remaining.is_zero() {
            return Err(GatewayError::Timeout);
        }
        let err = match attempt(per_attempt.min(remaining)) {
            Ok(value) => return Ok(Reply { value, retries }),
            Err(e) => e,
        };
        if !err.is_transient() || retries >= cfg.max_retries {
            return Err(err);
        }
        warn!("{} backend attempt {} failed: {err}; retrying", cfg.kind, retries + 1);
        let remaining = deadline.saturating_duration_since(Instant::now());
        if backoff >= remaining {
            return Err(GatewayError::Timeout);
        }
        std::thread::sleep(backoff);
        backoff *= 2;
        retries += 1;
    }
}
