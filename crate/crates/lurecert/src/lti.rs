//! Rational LTI plant models: validated transfer functions, a Routh-Hurwitz
//! stability test, frequency responses, companion-form realizations, and
//! impulse responses through a scaling-and-squaring matrix exponential.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

/// Pivot substituted for an exact zero in the Routh table. Any row that needs
/// it marks the polynomial as marginal, which this crate treats as not
/// Hurwitz.
const ROUTH_EPS: f64 = 1e-30;

/// Relative agreement demanded from the companion-form round-trip check.
const REALIZATION_RTOL: f64 = 1e-10;

/// Proper SISO rational transfer function with descending-power coefficients.
/// The denominator is normalized to a unit leading coefficient on
/// construction, so two equal systems have equal coefficient vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
}

fn trim_leading_zeros(mut v: Vec<f64>) -> Vec<f64> {
    let lead = v.iter().position(|c| *c != 0.0).unwrap_or(v.len());
    v.drain(..lead);
    v
}

impl TransferFunction {
    /// Validates and normalizes a coefficient pair. Leading zeros are
    /// trimmed, the denominator must have a nonzero coefficient, and the
    /// numerator degree may not exceed the denominator degree.
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        for &c in num.iter().chain(den.iter()) {
            if !c.is_finite() {
                return Err(Error::NonFiniteCoefficient { value: c });
            }
        }
        let mut den = trim_leading_zeros(den);
        if den.is_empty() {
            return Err(Error::ZeroDenominator);
        }
        let num = trim_leading_zeros(num);
        if !num.is_empty() {
            let (nd, dd) = (num.len() - 1, den.len() - 1);
            if nd > dd {
                return Err(Error::Improper { num_deg: nd, den_deg: dd });
            }
        }
        let lead = den[0];
        let num: Vec<f64> = num.iter().map(|c| c / lead).collect();
        for c in den.iter_mut() {
            *c /= lead;
        }
        for &c in num.iter().chain(den.iter()) {
            if !c.is_finite() {
                return Err(Error::NonFiniteCoefficient { value: c });
            }
        }
        Ok(Self { num, den })
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    /// Denominator degree.
    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    pub fn relative_degree(&self) -> usize {
        if self.num.is_empty() {
            self.den.len()
        } else {
            self.den.len() - self.num.len()
        }
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.relative_degree() > 0
    }

    /// High-frequency limit G(inf): zero when strictly proper, otherwise the
    /// leading numerator coefficient (the denominator is monic).
    pub fn gain_at_infinity(&self) -> f64 {
        if self.is_strictly_proper() {
            0.0
        } else {
            self.num[0]
        }
    }

    /// Routh-Hurwitz test on the denominator, no root extraction. A zero
    /// first-column pivot is replaced by a tiny constant and the result is
    /// classified marginal, hence not Hurwitz; only a strictly positive first
    /// column passes.
    pub fn is_hurwitz(&self) -> bool {
        routh_all_positive(&self.den)
    }

    /// G(j*omega) by Horner evaluation of both polynomials. Errors when the
    /// denominator vanishes there (imaginary-axis pole).
    pub fn freq_response(&self, omega: f64) -> Result<Complex64> {
        let s = Complex64::new(0.0, omega);
        let d = horner(&self.den, s);
        if d.norm() == 0.0 {
            return Err(Error::PoleOnAxis { omega });
        }
        Ok(horner(&self.num, s) / d)
    }

    /// Companion (controllable canonical) realization. `d` is nonzero exactly
    /// when the transfer function is biproper. The construction is verified
    /// against the rational frequency response on a small log grid before it
    /// is returned.
    pub fn to_state_space(&self) -> Result<StateSpace> {
        let n = self.order();
        let d = self.gain_at_infinity();
        // Remainder numerator of G - d, padded to length n (coefficients of
        // s^{n-1} .. s^0).
        let mut rem = vec![0.0; n];
        for (i, &c) in self.num.iter().rev().enumerate() {
            // c multiplies s^i
            if i < n {
                rem[n - 1 - i] += c;
            }
        }
        if d != 0.0 {
            for (i, &c) in self.den.iter().rev().enumerate() {
                if i < n {
                    rem[n - 1 - i] -= d * c;
                }
            }
        }
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            // den = [1, a1, .., an]; last row holds [-an, .., -a1]
            a[(n - 1, j)] = -self.den[n - j];
        }
        let mut b = DVector::zeros(n);
        if n > 0 {
            b[n - 1] = 1.0;
        }
        let mut c = RowDVector::zeros(n);
        for j in 0..n {
            c[j] = rem[n - 1 - j];
        }
        let ss = StateSpace { a, b, c, d };
        for k in 0..10 {
            let w = 10f64.powf(-2.0 + 4.0 * k as f64 / 9.0);
            let g_tf = match self.freq_response(w) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let g_ss = ss.freq_response(w)?;
            let scale = g_tf.norm().max(1.0);
            if (g_tf - g_ss).norm() > REALIZATION_RTOL * scale {
                return Err(Error::Realization(format!(
                    "frequency response mismatch at omega = {w}: {g_tf} vs {g_ss}"
                )));
            }
        }
        Ok(ss)
    }

    /// Upper bound on the slowest time constant 1/|p_min|, from a Cauchy root
    /// bound applied to the reversed denominator. Errors when the denominator
    /// has a root at the origin.
    pub fn slow_time_constant_bound(&self) -> Result<f64> {
        let n = self.order();
        if n == 0 {
            return Ok(1.0);
        }
        let an = self.den[n].abs();
        if an == 0.0 {
            return Err(Error::PoleOnAxis { omega: 0.0 });
        }
        let mut m: f64 = 1.0;
        for &c in &self.den[..n] {
            m = m.max(c.abs());
        }
        Ok(1.0 + m / an)
    }

    /// Upper bound on the largest pole magnitude (Cauchy bound on the monic
    /// denominator).
    pub fn fast_pole_bound(&self) -> f64 {
        let mut m: f64 = 0.0;
        for &c in &self.den[1..] {
            m = m.max(c.abs());
        }
        1.0 + m
    }

    /// Geometric-mean pole magnitude estimate |a_n|^(1/n), read off the
    /// monic denominator. Defaults to 1 when degenerate.
    pub fn pole_scale_estimate(&self) -> f64 {
        let n = self.order();
        if n == 0 {
            return 1.0;
        }
        let an = self.den[n].abs();
        if an == 0.0 || !an.is_finite() {
            return 1.0;
        }
        an.powf(1.0 / n as f64)
    }
}

fn horner(coeffs: &[f64], s: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        acc = acc * s + c;
    }
    acc
}

/// First-column Routh test for a descending-power polynomial. Returns true
/// only when the full table exists with a strictly positive first column and
/// no zero pivot was patched.
fn routh_all_positive(poly: &[f64]) -> bool {
    let n = poly.len() - 1;
    if n == 0 {
        return true;
    }
    let width = n / 2 + 1;
    let mut row_prev = vec![0.0; width];
    let mut row_cur = vec![0.0; width];
    for (i, &c) in poly.iter().enumerate() {
        if i % 2 == 0 {
            row_prev[i / 2] = c;
        } else {
            row_cur[i / 2] = c;
        }
    }
    let mut marginal = false;
    let mut first_col = vec![row_prev[0]];
    for _ in 1..=n {
        if row_cur[0] == 0.0 {
            marginal = true;
            row_cur[0] = ROUTH_EPS;
        }
        first_col.push(row_cur[0]);
        let mut next = vec![0.0; width];
        for j in 0..width - 1 {
            next[j] = (row_cur[0] * row_prev[j + 1] - row_prev[0] * row_cur[j + 1]) / row_cur[0];
        }
        row_prev = std::mem::take(&mut row_cur);
        row_cur = next;
    }
    !marginal && first_col.iter().all(|&c| c > 0.0)
}

/// Dense SISO state-space model dx = A x + B u, y = C x + D u.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: RowDVector<f64>,
    d: f64,
}

impl StateSpace {
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &RowDVector<f64> {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// C (jwI - A)^{-1} B + D via a complex LU solve.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64> {
        let n = self.order();
        if n == 0 {
            return Ok(Complex64::new(self.d, 0.0));
        }
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex64::new(-self.a[(i, j)], if i == j { omega } else { 0.0 });
            }
        }
        let b = DVector::from_iterator(n, self.b.iter().map(|&v| Complex64::new(v, 0.0)));
        let x = m.lu().solve(&b).ok_or(Error::PoleOnAxis { omega })?;
        let mut y = Complex64::new(self.d, 0.0);
        for j in 0..n {
            y += Complex64::new(self.c[j], 0.0) * x[j];
        }
        Ok(y)
    }

    /// Samples of the strictly proper impulse part C e^{At} B on a uniform
    /// grid, plus the Dirac weight D reported separately. The propagator
    /// e^{A dt} is formed once and iterated.
    pub fn impulse_response(&self, dt: f64, t_final: f64) -> Result<ImpulseResponse> {
        if !(dt.is_finite() && dt > 0.0 && t_final.is_finite() && t_final > 0.0) {
            return Err(Error::InvalidSignal(format!(
                "impulse response needs positive dt and horizon, got dt = {dt}, t_final = {t_final}"
            )));
        }
        let steps = (t_final / dt).ceil() as usize;
        let n = self.order();
        if n == 0 {
            let samples = SampledSignal::new(dt, vec![0.0; steps.max(1)])?;
            return Ok(ImpulseResponse { dirac_weight: self.d, samples });
        }
        let prop = matrix_exponential(&(&self.a * dt))?;
        let mut x = self.b.clone();
        let mut out = Vec::with_capacity(steps + 1);
        for _ in 0..=steps {
            let y = (&self.c * &x)[0];
            if !y.is_finite() {
                return Err(Error::MatrixExpDiverged);
            }
            out.push(y);
            x = &prop * &x;
        }
        Ok(ImpulseResponse { dirac_weight: self.d, samples: SampledSignal::new(dt, out)? })
    }
}

/// Impulse response split into its Dirac weight (the feedthrough) and the
/// sampled strictly proper part.
#[derive(Debug, Clone)]
pub struct ImpulseResponse {
    pub dirac_weight: f64,
    pub samples: SampledSignal,
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series
/// at the scaled level. Intended for the small dense matrices that arise
/// from SISO realizations.
pub fn matrix_exponential(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix exponential needs a square matrix");
    let norm = a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0f64, f64::max);
    if !norm.is_finite() {
        return Err(Error::MatrixExpDiverged);
    }
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=40 {
        term = (&term * &scaled) / k as f64;
        sum += &term;
        let tnorm = term.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        if tnorm < 1e-16 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    if sum.iter().any(|v| !v.is_finite()) {
        return Err(Error::MatrixExpDiverged);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalizes_and_trims() {
        let g = TransferFunction::new(vec![2.0, 2.0], vec![2.0, 6.0, 4.0]).unwrap();
        assert_eq!(g.num(), &[1.0, 1.0]);
        assert_eq!(g.den(), &[1.0, 3.0, 2.0]);
        let g = TransferFunction::new(vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]).unwrap();
        assert_eq!(g.num(), &[1.0]);
        assert_eq!(g.den(), &[1.0, 1.0]);
        assert_eq!(g.relative_degree(), 1);
    }

    #[test]
    fn rejects_bad_coefficient_vectors() {
        assert!(matches!(
            TransferFunction::new(vec![1.0], vec![0.0, 0.0]),
            Err(Error::ZeroDenominator)
        ));
        assert!(matches!(
            TransferFunction::new(vec![1.0, 0.0], vec![1.0]),
            Err(Error::Improper { num_deg: 1, den_deg: 0 })
        ));
        assert!(TransferFunction::new(vec![f64::NAN], vec![1.0, 1.0]).is_err());
        assert!(TransferFunction::new(vec![1.0], vec![f64::INFINITY, 1.0]).is_err());
    }

    #[test]
    fn zero_numerator_is_allowed() {
        let g = TransferFunction::new(vec![0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(g.num(), &[] as &[f64]);
        assert_eq!(g.freq_response(1.0).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(g.gain_at_infinity(), 0.0);
    }

    #[test]
    fn hurwitz_verdicts_on_known_polynomials() {
        let tf = |den: Vec<f64>| TransferFunction::new(vec![1.0], den).unwrap();
        assert!(tf(vec![1.0, 1.0]).is_hurwitz());
        assert!(tf(vec![1.0, 3.0, 2.0]).is_hurwitz());
        assert!(tf(vec![1.0, 2.0, 2.0, 1.0]).is_hurwitz());
        assert!(!tf(vec![1.0, -1.0]).is_hurwitz());
        assert!(!tf(vec![1.0, -3.0, 2.0]).is_hurwitz());
        // Two right-half-plane roots despite all-positive first two rows.
        assert!(!tf(vec![1.0, 2.0, 3.0, 4.0, 5.0]).is_hurwitz());
        // Static gain has no poles.
        assert!(tf(vec![1.0]).is_hurwitz());
    }

    #[test]
    fn marginal_polynomials_are_rejected() {
        let tf = |den: Vec<f64>| TransferFunction::new(vec![1.0], den).unwrap();
        // s^2 + 1: zero pivot row.
        assert!(!tf(vec![1.0, 0.0, 1.0]).is_hurwitz());
        // (s + 1)(s^2 + 1): zero pivot appears mid-table.
        assert!(!tf(vec![1.0, 1.0, 1.0, 1.0]).is_hurwitz());
        // Integrator s(s + 1).
        assert!(!tf(vec![1.0, 1.0, 0.0]).is_hurwitz());
    }

    #[test]
    fn hurwitz_matches_impulse_energy_growth() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            // Random second-order system with known pole half-plane.
            let stable = rng.random_bool(0.5);
            let sign = if stable { -1.0 } else { 1.0 };
            let den = if rng.random_bool(0.5) {
                let re = sign * rng.random_range(0.2..2.0);
                let im = rng.random_range(0.2..2.0);
                vec![1.0, -2.0 * re, re * re + im * im]
            } else {
                let p1 = sign * rng.random_range(0.2..2.0);
                let p2 = sign * rng.random_range(0.2..2.0);
                vec![1.0, -(p1 + p2), p1 * p2]
            };
            let g = TransferFunction::new(vec![1.0], den).unwrap();
            assert_eq!(g.is_hurwitz(), stable);
            let h = g.to_state_space().unwrap().impulse_response(0.01, 30.0).unwrap();
            let xs = h.samples.samples();
            let half = xs.len() / 2;
            let head: f64 = xs[..half].iter().map(|v| v * v).sum();
            let tail: f64 = xs[half..].iter().map(|v| v * v).sum();
            assert_eq!(tail > head, !stable, "den = {:?}", g.den());
        }
    }

    #[test]
    fn freq_response_known_point() {
        let g = TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let v = g.freq_response(1.0).unwrap();
        assert_relative_eq!(v.re, 0.5, max_relative = 1e-12);
        assert_relative_eq!(v.im, -0.5, max_relative = 1e-12);
    }

    #[test]
    fn freq_response_errors_on_axis_pole() {
        let g = TransferFunction::new(vec![1.0], vec![1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(g.freq_response(1.0), Err(Error::PoleOnAxis { .. })));
        assert!(g.freq_response(2.0).is_ok());
    }

    proptest! {
        #[test]
        fn freq_response_conjugate_symmetry(
            num in proptest::collection::vec(-3.0f64..3.0, 1..4),
            den_tail in proptest::collection::vec(0.1f64..3.0, 1..4),
            omega in 0.01f64..100.0,
        ) {
            let mut den = vec![1.0];
            den.extend(den_tail);
            prop_assume!(num.len() <= den.len());
            let g = TransferFunction::new(num, den).unwrap();
            if let (Ok(vp), Ok(vm)) = (g.freq_response(omega), g.freq_response(-omega)) {
                prop_assert!((vp.conj() - vm).norm() <= 1e-12 * vp.norm().max(1.0));
            }
        }
    }

    #[test]
    fn companion_form_biproper_example() {
        let g = TransferFunction::new(vec![1.0, 1.0], vec![1.0, 2.0]).unwrap();
        let ss = g.to_state_space().unwrap();
        assert_eq!(ss.d(), 1.0);
        assert_eq!(ss.order(), 1);
        let cb = ss.c()[0] * ss.b()[0];
        assert_relative_eq!(cb, -1.0, max_relative = 1e-12);
    }

    #[test]
    fn companion_form_static_gain() {
        let g = TransferFunction::new(vec![1.0], vec![1.0]).unwrap();
        let ss = g.to_state_space().unwrap();
        assert_eq!(ss.order(), 0);
        assert_eq!(ss.d(), 1.0);
        assert_eq!(ss.freq_response(2.0).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn state_space_round_trip_on_random_plants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.random_range(1..=6);
            // Stable poles by construction keep responses well scaled.
            let mut den = vec![1.0];
            for _ in 0..n {
                let p = rng.random_range(0.1..5.0);
                let mut next = vec![0.0; den.len() + 1];
                for (i, &c) in den.iter().enumerate() {
                    next[i] += c;
                    next[i + 1] += c * p;
                }
                den = next;
            }
            let deg_num = rng.random_range(0..=n);
            let num: Vec<f64> = (0..=deg_num).map(|_| rng.random_range(-2.0..2.0)).collect();
            let Ok(g) = TransferFunction::new(num, den) else { continue };
            let ss = g.to_state_space().unwrap();
            for k in 0..10 {
                let w = 10f64.powf(-1.0 + 3.0 * k as f64 / 9.0);
                let a = g.freq_response(w).unwrap();
                let b = ss.freq_response(w).unwrap();
                assert!((a - b).norm() <= 1e-9 * a.norm().max(1.0), "mismatch at {w}");
            }
        }
    }

    #[test]
    fn matrix_exponential_oracles() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        let e = matrix_exponential(&d).unwrap();
        assert_relative_eq!(e[(0, 0)], (-1f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(e[(1, 1)], (-2f64).exp(), max_relative = 1e-12);
        assert_abs_diff_eq!(e[(0, 1)], 0.0, epsilon = 1e-15);

        let nilp = DMatrix::from_row_slice(2, 2, &[0.0, 100.0, 0.0, 0.0]);
        let e = matrix_exponential(&nilp).unwrap();
        assert_relative_eq!(e[(0, 1)], 100.0, max_relative = 1e-12);
        assert_relative_eq!(e[(0, 0)], 1.0, max_relative = 1e-12);

        // Rotation forces the squaring path.
        let w = 10.0;
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -w, w, 0.0]);
        let e = matrix_exponential(&rot).unwrap();
        assert_relative_eq!(e[(0, 0)], w.cos(), max_relative = 1e-10);
        assert_relative_eq!(e[(1, 0)], w.sin(), max_relative = 1e-10);
    }

    #[test]
    fn impulse_response_analytic_values() {
        let g = TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let h = g.to_state_space().unwrap().impulse_response(1e-3, 2.0).unwrap();
        assert_eq!(h.dirac_weight, 0.0);
        let g1 = h.samples.samples()[1000];
        assert_abs_diff_eq!(g1, (-1f64).exp(), epsilon = 1e-6);

        let g = TransferFunction::new(vec![1.0], vec![1.0, 3.0, 2.0]).unwrap();
        let h = g.to_state_space().unwrap().impulse_response(1e-3, 2.0).unwrap();
        let g1 = h.samples.samples()[1000];
        assert_abs_diff_eq!(g1, (-1f64).exp() - (-2f64).exp(), epsilon = 1e-6);
    }

    #[test]
    fn impulse_l1_of_first_order_lag() {
        let g = TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let h = g.to_state_space().unwrap().impulse_response(1e-3, 40.0).unwrap();
        let l1: f64 = h.samples.samples().iter().map(|v| v.abs()).sum::<f64>() * 1e-3;
        assert_abs_diff_eq!(l1, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn biproper_impulse_keeps_dirac_weight() {
        let g = TransferFunction::new(vec![1.0, 1.0], vec![1.0, 2.0]).unwrap();
        let h = g.to_state_space().unwrap().impulse_response(1e-3, 1.0).unwrap();
        assert_eq!(h.dirac_weight, 1.0);
        // Strictly proper part is -e^{-2t}.
        assert_abs_diff_eq!(h.samples.samples()[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn time_scale_bounds_bracket_true_poles() {
        let g = TransferFunction::new(vec![1.0], vec![1.0, 3.0, 2.0]).unwrap();
        // Poles at -1 and -2.
        assert!(g.slow_time_constant_bound().unwrap() >= 1.0);
        assert!(g.fast_pole_bound() >= 2.0);
        assert_relative_eq!(g.pole_scale_estimate(), 2f64.sqrt(), max_relative = 1e-12);
    }
}
