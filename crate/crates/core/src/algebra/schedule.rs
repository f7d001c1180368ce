use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-constant function of time.
///
/// Segment `k` covers `[start_k, start_{k+1})`; the last segment extends to
/// infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule<T> {
    segments: Vec<(f64, T)>,
}

impl<T: Clone> Schedule<T> {
    pub fn new(segments: Vec<(f64, T)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Schedule("no segments".into()));
        }
        if let Some((t, _)) = segments.iter().find(|(t, _)| !t.is_finite()) {
            return Err(Error::Schedule(format!("non-finite start time {t}")));
        }
        for w in segments.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Schedule(format!(
                    "start times must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(Schedule { segments })
    }

    /// A single segment starting at t = 0.
    pub fn constant(value: T) -> Self {
        Schedule {
            segments: vec![(0.0, value)],
        }
    }

    pub fn start(&self) -> f64 {
        self.segments[0].0
    }

    pub fn at(&self, t: f64) -> Result<&T> {
        let start = self.start();
        if !(t >= start) {
            return Err(Error::BeforeSchedule { t, start });
        }
        // index of the last segment with start <= t
        let k = self.segments.partition_point(|(s, _)| *s <= t);
        Ok(&self.segments[k - 1].1)
    }

    pub fn segments(&self) -> &[(f64, T)] {
        &self.segments
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().map(|(t, _)| *t)
    }

    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.segments.iter().map(|(_, v)| v)
    }
}
