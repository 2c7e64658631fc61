//! A small family of stable, strictly proper plants used across the tests
//! and examples. The set mixes two regimes: pure-lag plants whose largest
//! certifiable slope already coincides with the trivial-multiplier value,
//! and underdamped plants with enough phase lag that nontrivial multipliers
//! buy a visibly larger slope range.

use crate::lti::TransferFunction;

/// Named benchmark plant. `circle_alpha` is the closed-form value of the
/// trivial-multiplier baseline where one exists: the reciprocal of the peak
/// real part of the frequency response.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: &'static str,
    pub plant: TransferFunction,
    pub circle_alpha: Option<f64>,
}

/// For 1/(s^2 + 2 zeta s + 1) the real part peaks at 1/(4 zeta (1 - zeta)),
/// attained where the squared frequency equals 1 - 2 zeta.
fn resonant_circle(zeta: f64) -> f64 {
    4.0 * zeta * (1.0 - zeta)
}

pub fn standard_benchmarks() -> Vec<Benchmark> {
    vec![
        // Two real poles; the peak real part is at zero frequency, G(0) = 1/2,
        // and the baseline already equals the linear stability limit.
        Benchmark {
            name: "lag2",
            plant: TransferFunction::new(vec![1.0], vec![1.0, 3.0, 2.0]).unwrap(),
            circle_alpha: Some(2.0),
        },
        // Underdamped pair, zeta = 0.2: baseline 0.64 against a linear limit
        // of 1, so better multipliers have room to work.
        Benchmark {
            name: "res-damped",
            plant: TransferFunction::new(vec![1.0], vec![1.0, 0.4, 1.0]).unwrap(),
            circle_alpha: Some(resonant_circle(0.2)),
        },
        // Lightly damped pair, zeta = 0.1: baseline 0.36 against a linear
        // limit of 1.
        Benchmark {
            name: "res-light",
            plant: TransferFunction::new(vec![1.0], vec![1.0, 0.2, 1.0]).unwrap(),
            circle_alpha: Some(resonant_circle(0.1)),
        },
        // Resonant pair behind a first-order lag; third order, heavy phase.
        Benchmark {
            name: "res-lag3",
            plant: TransferFunction::new(vec![1.0], vec![1.0, 1.2, 1.2, 1.0]).unwrap(),
            circle_alpha: None,
        },
        // Triple real pole; like lag2 the baseline and linear limit agree at 1.
        Benchmark {
            name: "chain3",
            plant: TransferFunction::new(vec![1.0], vec![1.0, 3.0, 3.0, 1.0]).unwrap(),
            circle_alpha: Some(1.0),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iqc::FrequencyGrid;
    use crate::search::circle_baseline;
    use approx::assert_relative_eq;

    #[test]
    fn all_benchmarks_are_stable_and_strictly_proper() {
        let set = standard_benchmarks();
        assert!(set.len() >= 5);
        for b in &set {
            assert!(b.plant.is_hurwitz(), "{} must be stable", b.name);
            assert!(b.plant.is_strictly_proper(), "{} must roll off", b.name);
        }
    }

    #[test]
    fn names_are_unique() {
        let set = standard_benchmarks();
        for (i, a) in set.iter().enumerate() {
            for b in &set[i + 1..] {
                assert_ne!(a.name, b.name);
            }
        }
    }

    #[test]
    fn closed_form_baselines_match_the_scan() {
        let grid = FrequencyGrid::default_certification();
        for b in standard_benchmarks() {
            let scanned = circle_baseline(&b.plant, &grid).unwrap();
            if let Some(expected) = b.circle_alpha {
                assert_relative_eq!(scanned, expected, max_relative = 1e-4);
            } else {
                assert!(scanned.is_finite() && scanned > 0.0);
            }
        }
    }

    #[test]
    fn resonant_peak_formula_spot_check() {
        // At zeta = 0.2 the peak real part 1/0.64 sits at squared frequency
        // 0.6; evaluate the response there directly.
        let g = TransferFunction::new(vec![1.0], vec![1.0, 0.4, 1.0]).unwrap();
        let w = 0.6f64.sqrt();
        let re = g.freq_response(w).unwrap().re;
        assert_relative_eq!(re, 1.0 / 0.64, max_relative = 1e-12);
    }
}
