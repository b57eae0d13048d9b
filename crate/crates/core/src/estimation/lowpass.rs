use crate::EstimationError;

/// First-order IIR low-pass: `y ← y + α(x − y)`, `α = dt / (dt + 1/(2π fc))`.
///
/// The first sample after construction or [`reset`](Self::reset) passes
/// through unchanged and seeds the state.
#[derive(Debug, Clone, PartialEq)]
pub struct LowPassFilter {
    cutoff_hz: f64,
    sample_dt: f64,
    alpha: f64,
    state: Option<f64>,
}

impl LowPassFilter {
    pub fn new(cutoff_hz: f64, sample_dt: f64) -> Result<Self, EstimationError> {
        if !(cutoff_hz.is_finite() && cutoff_hz > 0.0) {
            return Err(EstimationError::Config(format!(
                "cutoff must be positive, got {cutoff_hz} Hz"
            )));
        }
        if !(sample_dt.is_finite() && sample_dt > 0.0) {
            return Err(EstimationError::Config(format!(
                "sample period must be positive, got {sample_dt} s"
            )));
        }
        let rc = 1.0 / (std::f64::consts::TAU * cutoff_hz);
        Ok(Self {
            cutoff_hz,
            sample_dt,
            alpha: sample_dt / (sample_dt + rc),
            state: None,
        })
    }

    /// Starts from a settled output `y0` instead of passing the first sample.
    pub fn with_state(mut self, y0: f64) -> Self {
        self.state = Some(y0);
        self
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn sample_dt(&self) -> f64 {
        self.sample_dt
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn output(&self) -> Option<f64> {
        self.state
    }

    pub fn reset(&mut self) {
        self.state = None;
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let y = match self.state {
            None => x,
            Some(y) => y + self.alpha * (x - y),
        };
        self.state = Some(y);
        y
    }
}
