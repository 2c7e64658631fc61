//! First-order Zames-Falb multiplier bases M(s) = 1 - H(s), with H split
//! into causal terms k/(s + a) and anticausal terms l/(b - s), all poles
//! positive. The L1 norm of the impulse response h and its sign pattern are
//! what certification verdicts hinge on.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlin::ClassTag;

/// Numerical slack accepted when testing the L1 bound and impulse sign.
const VALIDITY_TOL: f64 = 1e-9;

/// Multiplier basis with explicit causal and anticausal first-order terms.
/// Stored as (gain, pole) pairs; duplicate poles on a side are merged by
/// summing gains at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBasis")]
pub struct MultiplierBasis {
    /// Terms k/(s + a): impulse k e^{-a t} for t > 0.
    causal: Vec<(f64, f64)>,
    /// Terms l/(b - s): impulse l e^{b t} for t < 0.
    anticausal: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
struct RawBasis {
    #[serde(default)]
    causal: Vec<(f64, f64)>,
    #[serde(default)]
    anticausal: Vec<(f64, f64)>,
}

impl TryFrom<RawBasis> for MultiplierBasis {
    type Error = Error;

    fn try_from(raw: RawBasis) -> Result<Self> {
        MultiplierBasis::new(raw.causal, raw.anticausal)
    }
}

fn validate_side(terms: Vec<(f64, f64)>) -> Result<Vec<(f64, f64)>> {
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(terms.len());
    for (gain, pole) in terms {
        if !gain.is_finite() {
            return Err(Error::NonFiniteGain { value: gain });
        }
        if !(pole.is_finite() && pole > 0.0) {
            return Err(Error::NonPositivePole { value: pole });
        }
        match merged.iter_mut().find(|(_, p)| *p == pole) {
            Some(entry) => entry.0 += gain,
            None => merged.push((gain, pole)),
        }
    }
    Ok(merged)
}

impl MultiplierBasis {
    pub fn new(causal: Vec<(f64, f64)>, anticausal: Vec<(f64, f64)>) -> Result<Self> {
        Ok(Self { causal: validate_side(causal)?, anticausal: validate_side(anticausal)? })
    }

    /// The trivial multiplier M = 1 (no dynamic terms).
    pub fn identity() -> Self {
        Self { causal: Vec::new(), anticausal: Vec::new() }
    }

    pub fn causal(&self) -> &[(f64, f64)] {
        &self.causal
    }

    pub fn anticausal(&self) -> &[(f64, f64)] {
        &self.anticausal
    }

    pub fn is_identity(&self) -> bool {
        self.causal.is_empty() && self.anticausal.is_empty()
    }

    /// M(j omega) = 1 - H_c(j omega) - H_a(j omega). Positive poles keep the
    /// evaluation off every term's pole, so this cannot fail.
    pub fn freq_response(&self, omega: f64) -> Complex64 {
        let jw = Complex64::new(0.0, omega);
        let mut m = Complex64::new(1.0, 0.0);
        for &(k, a) in &self.causal {
            m -= k / (jw + a);
        }
        for &(l, b) in &self.anticausal {
            m -= l / (Complex64::new(b, 0.0) - jw);
        }
        m
    }

    /// High-frequency limit; the normalization pins this to 1.
    pub fn freq_response_at_infinity(&self) -> f64 {
        1.0
    }

    /// Impulse response h(t) of H. Causal terms live on t > 0, anticausal
    /// terms on t < 0; h(0) reads the causal-side limit h(0+).
    pub fn impulse(&self, t: f64) -> f64 {
        if t >= 0.0 {
            self.causal.iter().map(|&(k, a)| k * (-a * t).exp()).sum()
        } else {
            self.anticausal.iter().map(|&(l, b)| l * (b * t).exp()).sum()
        }
    }

    /// Closed-form bound sum |k|/a + sum |l|/b. Equals the L1 norm exactly
    /// whenever each side's gains share one sign.
    pub fn l1_upper_bound(&self) -> f64 {
        let c: f64 = self.causal.iter().map(|&(k, a)| k.abs() / a).sum();
        let a: f64 = self.anticausal.iter().map(|&(l, b)| l.abs() / b).sum();
        let total = c + a;
        // Empty sums fold from -0.0; keep the bound's sign bit clean.
        if total == 0.0 {
            0.0
        } else {
            total
        }
    }

    fn side_signs_mixed(terms: &[(f64, f64)]) -> bool {
        let mut pos = false;
        let mut neg = false;
        for &(g, _) in terms {
            if g > 0.0 {
                pos = true;
            }
            if g < 0.0 {
                neg = true;
            }
        }
        pos && neg
    }

    /// L1 norm of h. Single-sign sides use the closed form; mixed signs fall
    /// back to quadrature of |h| and return the smaller of the bound and the
    /// quadrature value plus its reported truncation error.
    pub fn l1_norm(&self) -> L1Norm {
        let closed_form = self.l1_upper_bound();
        let mixed =
            Self::side_signs_mixed(&self.causal) || Self::side_signs_mixed(&self.anticausal);
        if !mixed {
            return L1Norm { closed_form, quadrature: None, value: closed_form };
        }
        let (qc, tc) = side_abs_integral(&self.causal);
        let (qa, ta) = side_abs_integral(&self.anticausal);
        let quad = L1Quadrature { integral: qc + qa, truncation_error: tc + ta };
        let value = closed_form.min(quad.integral + quad.truncation_error);
        L1Norm { closed_form, quadrature: Some(quad), value }
    }

    /// Sign check of h by dense per-side sampling plus a tail test on the
    /// slowest pole's gain. Sampling-based: adversarial near-cancellations
    /// finer than the scan resolve conservatively only via the tail term.
    pub fn impulse_nonnegative(&self) -> bool {
        side_nonnegative(&self.causal) && side_nonnegative(&self.anticausal)
    }

    /// Validity report for a certification class: the L1 bound applies to
    /// every class, the impulse sign only to the non-odd ones.
    pub fn validity_for_class(&self, class: ClassTag) -> ValidityReport {
        let l1 = self.l1_norm();
        let l1_ok = l1.value <= 1.0 + VALIDITY_TOL;
        let mut reasons = Vec::new();
        if !l1_ok {
            reasons.push(format!("L1 norm {} exceeds 1", l1.value));
        }
        let impulse_nonnegative = if class.requires_nonnegative_impulse() {
            let ok = self.impulse_nonnegative();
            if !ok {
                reasons.push(format!(
                    "impulse response changes sign, which class {class} does not allow"
                ));
            }
            Some(ok)
        } else {
            None
        };
        ValidityReport { valid: reasons.is_empty(), l1, l1_ok, impulse_nonnegative, reasons }
    }
}

/// Integral of |h| over one side together with a truncation-error bound.
/// Sign changes are located by log-grid scanning plus bisection; between
/// sign changes the antiderivative of the exponential sum is exact.
fn side_abs_integral(terms: &[(f64, f64)]) -> (f64, f64) {
    if terms.is_empty() {
        return (0.0, 0.0);
    }
    let min_pole = terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let max_pole = terms.iter().map(|t| t.1).fold(0.0f64, f64::max);
    let horizon = 60.0 / min_pole;
    let eval = |t: f64| -> f64 { terms.iter().map(|&(g, p)| g * (-p * t).exp()).sum() };
    // Exact integral of h over [t0, t1].
    let segment = |t0: f64, t1: f64| -> f64 {
        terms.iter().map(|&(g, p)| g / p * ((-p * t0).exp() - (-p * t1).exp())).sum()
    };
    let mut knots = vec![0.0];
    let scan = 4000;
    let start = (1e-6 / max_pole).min(horizon / 2.0);
    let ratio = (horizon / start).powf(1.0 / (scan - 1) as f64);
    let mut prev_t = 0.0;
    let mut prev_v = eval(0.0);
    let mut t = start;
    for _ in 0..scan {
        let v = eval(t);
        if prev_v == 0.0 || v == 0.0 || (prev_v < 0.0) != (v < 0.0) {
            // Bisect the bracket to machine precision.
            let (mut lo, mut hi) = (prev_t, t);
            let mut flo = prev_v;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = eval(mid);
                if fm == 0.0 {
                    lo = mid;
                    break;
                }
                if (flo < 0.0) == (fm < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * hi {
                    break;
                }
            }
            knots.push(0.5 * (lo + hi));
        }
        prev_t = t;
        prev_v = v;
        t *= ratio;
    }
    knots.push(horizon);
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots.dedup();
    let mut integral = 0.0;
    for w in knots.windows(2) {
        integral += segment(w[0], w[1]).abs();
    }
    // Tail of |h| beyond the horizon, bounded term by term.
    let tail: f64 = terms.iter().map(|&(g, p)| g.abs() / p * (-p * horizon).exp()).sum();
    (integral, tail + f64::EPSILON * integral.abs())
}

fn side_nonnegative(terms: &[(f64, f64)]) -> bool {
    if terms.is_empty() {
        return true;
    }
    let min_pole = terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let max_pole = terms.iter().map(|t| t.1).fold(0.0f64, f64::max);
    let scale: f64 = terms.iter().map(|t| t.0.abs()).sum();
    let tol = -1e-12 * scale.max(1.0);
    let eval = |t: f64| -> f64 { terms.iter().map(|&(g, p)| g * (-p * t).exp()).sum() };
    if eval(0.0) < tol {
        return false;
    }
    let n = 2000;
    let start = 1e-6 / max_pole;
    let stop = 60.0 / min_pole;
    let ratio = (stop / start).powf(1.0 / (n - 1) as f64);
    let mut t = start;
    for _ in 0..n {
        if eval(t) < tol {
            return false;
        }
        t *= ratio;
    }
    // Tail sign is decided by the slowest pole's merged gain.
    let slow_gain = terms
        .iter()
        .fold((f64::INFINITY, 0.0), |acc, &(g, p)| if p < acc.0 { (p, g) } else { acc })
        .1;
    slow_gain >= 0.0
}

/// L1 norm report: the closed-form bound, an optional quadrature fallback
/// (present when a side mixes gain signs), and the value used for verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Norm {
    pub closed_form: f64,
    pub quadrature: Option<L1Quadrature>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Quadrature {
    pub integral: f64,
    pub truncation_error: f64,
}

/// Outcome of checking a multiplier against a class's requirements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub l1: L1Norm,
    pub l1_ok: bool,
    /// None when the class does not constrain the impulse sign.
    pub impulse_nonnegative: Option<bool>,
    pub reasons: Vec<String>,
}
