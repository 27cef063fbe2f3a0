//! Time-series containers used throughout the pipeline.

use nalgebra::DVector;
use thiserror::Error;

/// State vector at a single time point.
pub type State = DVector<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("series must contain at least one sample")]
    Empty,
    #[error("times and states have different lengths ({times} vs {states})")]
    LengthMismatch { times: usize, states: usize },
    #[error("times must be strictly increasing (violation at index {0})")]
    NonIncreasingTimes(usize),
    #[error("states must share one dimension (index {index} has {got}, expected {expected})")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

/// Ordered `(time, state)` samples with strictly increasing times and a
/// common state dimension. The universal currency between generation,
/// fitting, and scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    states: Vec<State>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, states: Vec<State>) -> Result<Self, SeriesError> {
        if times.is_empty() {
            return Err(SeriesError::Empty);
        }
        if times.len() != states.len() {
            return Err(SeriesError::LengthMismatch {
                times: times.len(),
                states: states.len(),
            });
        }
        let dim = states[0].len();
        for (i, t) in times.iter().enumerate() {
            if !t.is_finite() {
                return Err(SeriesError::NonFinite(i));
            }
            if i > 0 && times[i - 1] >= *t {
                return Err(SeriesError::NonIncreasingTimes(i));
            }
        }
        for (i, s) in states.iter().enumerate() {
            if s.len() != dim {
                return Err(SeriesError::DimensionMismatch {
                    index: i,
                    got: s.len(),
                    expected: dim,
                });
            }
            if !s.iter().all(|v| v.is_finite()) {
                return Err(SeriesError::NonFinite(i));
            }
        }
        Ok(Self { times, states })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty series
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &State {
        &self.states[i]
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last_state(&self) -> &State {
        self.states.last().unwrap()
    }

    /// Consecutive time increments, `len() - 1` of them.
    pub fn increments(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Value of the piecewise-linear interpolant through the samples.
    /// Clamps to the end states outside the observed span.
    pub fn interpolate_linear(&self, t: f64) -> State {
        if t <= self.times[0] {
            return self.states[0].clone();
        }
        if t >= self.last_time() {
            return self.last_state().clone();
        }
        // partition_point: first index with time > t, so seg in [1, len-1]
        let seg = self.times.partition_point(|&x| x <= t);
        let (t0, t1) = (self.times[seg - 1], self.times[seg]);
        if t == t0 {
            return self.states[seg - 1].clone();
        }
        let w = (t - t0) / (t1 - t0);
        &self.states[seg - 1] * (1.0 - w) + &self.states[seg] * w
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<State>) {
        (self.times, self.states)
    }
}

/// Forecast sampled at target times; entries may be missing when a method
/// diverges or declines to predict.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub times: Vec<f64>,
    pub states: Vec<Option<State>>,
}

impl Prediction {
    /// A prediction with every entry missing, the scoring convention for a
    /// failed fit.
    pub fn all_missing(times: Vec<f64>) -> Self {
        let states = vec![None; times.len()];
        Self { times, states }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64) -> State {
        DVector::from_vec(vec![x])
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        assert_eq!(TimeSeries::new(vec![], vec![]), Err(SeriesError::Empty));
        assert!(matches!(
            TimeSeries::new(vec![0.0, 1.0], vec![v(1.0)]),
            Err(SeriesError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn rejects_non_increasing_times() {
        let r = TimeSeries::new(vec![0.0, 0.0], vec![v(1.0), v(2.0)]);
        assert_eq!(r, Err(SeriesError::NonIncreasingTimes(1)));
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let r = TimeSeries::new(
            vec![0.0, 1.0],
            vec![v(1.0), DVector::from_vec(vec![1.0, 2.0])],
        );
        assert!(matches!(r, Err(SeriesError::DimensionMismatch { .. })));
    }

    #[test]
    fn linear_interpolation_hits_knots_and_midpoints() {
        let s = TimeSeries::new(vec![0.0, 1.0, 3.0], vec![v(0.0), v(2.0), v(6.0)]).unwrap();
        assert_eq!(s.interpolate_linear(0.0)[0], 0.0);
        assert_eq!(s.interpolate_linear(1.0)[0], 2.0);
        assert_eq!(s.interpolate_linear(0.5)[0], 1.0);
        assert_eq!(s.interpolate_linear(2.0)[0], 4.0);
        // clamped outside the span
        assert_eq!(s.interpolate_linear(-1.0)[0], 0.0);
        assert_eq!(s.interpolate_linear(9.0)[0], 6.0);
    }
}
