use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wall-clock summary over repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub mean_seconds: f64,
    /// Sample standard deviation; absent for a single run.
    pub std_seconds: Option<f64>,
    pub repeats: usize,
}

/// Runs `computation` `warmup` times untimed, then `repeats` times on the
/// monotonic clock.
pub fn time_run<R>(mut computation: impl FnMut() -> R, repeats: usize, warmup: usize) -> Result<Timing> {
    if repeats == 0 {
        return Err(Error::arg("repeats must be at least 1"));
    }
    for _ in 0..warmup {
        std::hint::black_box(computation());
    }
    let samples: Vec<f64> = (0..repeats)
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(computation());
            start.elapsed().as_secs_f64()
        })
        .collect();
    Ok(Timing::from_samples(&samples))
}

impl Timing {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_seconds = (n >= 2).then(|| {
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            var.sqrt()
        });
        Self {
            mean_seconds: mean,
            std_seconds,
            repeats: n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_repeats_have_std() {
        let mut calls = 0;
        let t = time_run(|| calls += 1, 3, 2).unwrap();
        assert_eq!(calls, 5);
        assert_eq!(t.repeats, 3);
        assert!(t.std_seconds.is_some());
    }

    #[test]
    fn single_repeat_omits_std() {
        let t = time_run(|| (), 1, 0).unwrap();
        assert_eq!(t.std_seconds, None);
        assert!(time_run(|| (), 0, 0).is_err());
    }

    #[test]
    fn sample_statistics() {
        let t = Timing::from_samples(&[1.0, 2.0, 3.0]);
        assert_eq!(t.mean_seconds, 2.0);
        assert_eq!(t.std_seconds, Some(1.0));
    }
}
