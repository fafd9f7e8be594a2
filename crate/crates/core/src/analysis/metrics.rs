//! Step and transient metrics of a recorded signal.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("time and signal lengths differ ({t} vs {y})")]
    LengthMismatch { t: usize, y: usize },
    #[error("no samples at or after t_ref = {t_ref}")]
    NoSamples { t_ref: f64 },
    #[error("signal is not finite after t_ref")]
    NonFinite,
    #[error("signal is still outside the settling band at the last sample (t = {t_last})")]
    Unsettled { t_last: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOptions<T> {
    /// Settling band as a fraction of the peak deviation from the final value.
    pub band: T,
    /// Backswing threshold as a fraction of the first-swing amplitude.
    pub backswing_frac: T,
    /// Fraction of trailing samples averaged for the final value.
    pub tail_frac: T,
    pub final_value: Option<T>,
}

impl<T: Scalar> Default for MetricOptions<T> {
    fn default() -> Self {
        Self { band: T::lit(0.02), backswing_frac: T::lit(0.1), tail_frac: T::lit(0.05), final_value: None }
    }
}

impl<T: Scalar> MetricOptions<T> {
    pub fn with_final(mut self, v: T) -> Self {
        self.final_value = Some(v);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics<T> {
    /// Measured from `t_ref`.
    pub settling_time_2pct: T,
    pub first_swing_peak: T,
    pub first_swing_time: T,
    pub overshoot_pct: T,
    pub backswing_detected: bool,
    pub final_value: T,
    /// Largest |y − final| after `t_ref`.
    pub peak_deviation: T,
}

/// First local extremum of `y` (index), skipping flat stretches. Falls back to
/// the sample farthest from `y[0]` for monotone signals.
fn first_extremum<T: Scalar>(y: &[T]) -> usize {
    let mut dir = T::zero();
    for j in 1..y.len() {
        let d = y[j] - y[j - 1];
        if d == T::zero() {
            continue;
        }
        if dir != T::zero() && d.signum() != dir {
            // the extremum is the last sample before the turn
            return j - 1;
        }
        dir = d.signum();
    }
    let mut best = 0;
    for j in 0..y.len() {
        if (y[j] - y[0]).abs() > (y[best] - y[0]).abs() {
            best = j;
        }
    }
    best
}

pub fn compute_metrics<T: Scalar>(t: &[T], y: &[T], t_ref: T, opts: &MetricOptions<T>) -> Result<Metrics<T>, MetricsError> {
    if t.len() != y.len() {
        return Err(MetricsError::LengthMismatch { t: t.len(), y: y.len() });
    }
    let start = t.iter().position(|&ti| ti >= t_ref).ok_or(MetricsError::NoSamples { t_ref: t_ref.as_f64() })?;
    let (t, y) = (&t[start..], &y[start..]);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let n = y.len();

    let final_value = opts.final_value.unwrap_or_else(|| {
        let k = ((T::of_usize(n) * opts.tail_frac).ceil().to_usize().unwrap_or(1)).clamp(1, n);
        y[n - k..].iter().fold(T::zero(), |a, &v| a + v) / T::of_usize(k)
    });

    let dev: Vec<T> = y.iter().map(|&v| (v - final_value).abs()).collect();
    let peak_deviation = dev.iter().fold(T::zero(), |a, &v| a.max(v));
    let band = opts.band * peak_deviation;

    let settling_time_2pct = match dev.iter().rposition(|&d| d > band) {
        None => T::zero(),
        Some(i) if i + 1 == n => return Err(MetricsError::Unsettled { t_last: t[n - 1].as_f64() }),
        Some(i) => t[i + 1] - t[0],
    };

    let j = first_extremum(y);
    let first_swing_peak = y[j];
    let first_swing_time = t[j] - t[0];

    let step = final_value - y[0];
    let overshoot_pct = if step.abs() <= T::epsilon() * final_value.abs().max(T::one()) * T::lit(16.0) {
        T::zero()
    } else {
        let beyond = y.iter().fold(T::zero(), |a, &v| a.max((v - final_value) * step.signum()));
        beyond / step.abs() * T::lit(100.0)
    };

    let amp = first_swing_peak - final_value;
    let t_settle = t[0] + settling_time_2pct;
    let backswing_detected = amp != T::zero()
        && (j..n).take_while(|&i| t[i] <= t_settle).any(|i| (y[i] - final_value) * amp.signum() < -opts.backswing_frac * amp.abs());

    Ok(Metrics {
        settling_time_2pct,
        first_swing_peak,
        first_swing_time,
        overshoot_pct,
        backswing_detected,
        final_value,
        peak_deviation,
    })
}
