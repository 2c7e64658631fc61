use crate::error::{Error, Result};

/// Uniformly sampled real signal on `[0, len * dt)`. Identified with zero
/// outside its support, which is the convention every shifted sum and
/// convolution in this crate relies on.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    dt: f64,
    samples: Vec<f64>,
}

impl SampledSignal {
    pub fn new(dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidSignal(format!("sample step must be positive, got {dt}")));
        }
        if samples.is_empty() {
            return Err(Error::InvalidSignal("signal has no samples".into()));
        }
        if let Some(&bad) = samples.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidSignal(format!("non-finite sample {bad}")));
        }
        Ok(Self { dt, samples })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.samples.len() as f64
    }

    /// Sample at index `i`, where indices outside the support read as zero.
    pub fn get(&self, i: isize) -> f64 {
        if i < 0 {
            return 0.0;
        }
        self.samples.get(i as usize).copied().unwrap_or(0.0)
    }

    /// Linear interpolation between samples; zero outside the support.
    pub fn value_at(&self, t: f64) -> f64 {
        if !t.is_finite() || t < 0.0 {
            return 0.0;
        }
        let pos = t / self.dt;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        let a = self.get(i as isize);
        let b = self.get(i as isize + 1);
        a + frac * (b - a)
    }

    /// Energy under the rectangle rule: sum of x^2 * dt.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() * self.dt
    }

    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_bad_steps_and_samples() {
        assert!(SampledSignal::new(0.0, vec![1.0]).is_err());
        assert!(SampledSignal::new(-0.1, vec![1.0]).is_err());
        assert!(SampledSignal::new(0.1, vec![]).is_err());
        assert!(SampledSignal::new(0.1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn out_of_support_reads_zero() {
        let s = SampledSignal::new(0.5, vec![1.0, 2.0]).unwrap();
        assert_eq!(s.get(-1), 0.0);
        assert_eq!(s.get(0), 1.0);
        assert_eq!(s.get(2), 0.0);
        assert_eq!(s.value_at(-0.1), 0.0);
        assert_eq!(s.value_at(5.0), 0.0);
    }

    #[test]
    fn interpolates_between_samples() {
        let s = SampledSignal::new(1.0, vec![0.0, 2.0]).unwrap();
        assert_relative_eq!(s.value_at(0.5), 1.0);
    }

    #[test]
    fn energy_is_rectangle_sum() {
        let s = SampledSignal::new(0.5, vec![1.0, -2.0]).unwrap();
        assert_relative_eq!(s.energy(), (1.0 + 4.0) * 0.5);
        assert_relative_eq!(s.l2_norm(), (2.5f64).sqrt());
    }
}
