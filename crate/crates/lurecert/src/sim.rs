//! Time-domain side: Runge-Kutta simulation of the closed loop, a discrete
//! counterpart of the frequency-domain test value, and randomized
//! falsification runs that try to break a certified claim.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lti::TransferFunction;
use crate::multiplier::MultiplierBasis;
use crate::nonlin::{ClassTag, Shape};
use crate::signal::SampledSignal;

/// Output magnitude treated as numerical divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Closed-loop trajectory: the loop is `y = G u_total` with
/// `u_total = phi(y) + r` in positive feedback.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub dt: f64,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub r: Vec<f64>,
    /// Cumulative L2 norm of the output up to each sample.
    pub running_y_l2: Vec<f64>,
    pub diverged: bool,
}

impl SimResult {
    pub fn y_l2(&self) -> f64 {
        self.running_y_l2.last().copied().unwrap_or(0.0)
    }

    pub fn r_l2(&self) -> f64 {
        (self.r.iter().map(|v| v * v).sum::<f64>() * self.dt).sqrt()
    }

    /// Output-over-input energy ratio; infinite for a nonzero response to a
    /// zero input.
    pub fn gain_ratio(&self) -> f64 {
        let r = self.r_l2();
        if r > 0.0 {
            self.y_l2() / r
        } else if self.y_l2() > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// Step size keeping the fastest open-loop mode, stiffened by the feedback
/// slope, well inside the integrator's stability region. Plants with a pole
/// at the origin have no settling bound; unit scale stands in for them.
pub fn default_sim_dt(g: &TransferFunction, alpha: f64) -> f64 {
    let slow = 1e-3 * g.slow_time_constant_bound().unwrap_or(1.0);
    let fast = 0.4 / (g.fast_pole_bound() * (1.0 + alpha.max(0.0)));
    slow.min(fast)
}

/// Horizon long enough for the slowest bounded mode to settle.
pub fn default_sim_steps(g: &TransferFunction, dt: f64) -> usize {
    let slow = g.slow_time_constant_bound().unwrap_or(1.0);
    ((50.0 * slow / dt).ceil() as usize).max(16)
}

/// Integrates the Lur'e loop with classical fourth-order Runge-Kutta at the
/// input's sample step. The input is zero-extended and linearly interpolated
/// at half steps; integration runs for `steps` samples (defaulting to the
/// input length). Stops early once the output exceeds the divergence limit.
pub fn simulate_lure(
    g: &TransferFunction,
    phi: &Shape,
    r: &SampledSignal,
    steps: Option<usize>,
) -> Result<SimResult> {
    if !g.is_strictly_proper() {
        return Err(Error::BiproperPlant);
    }
    phi.validate()?;
    let ss = g.to_state_space()?;
    let n = steps.unwrap_or(r.len()).max(2);
    let dt = r.dt();
    let a = ss.a();
    let b = ss.b();
    let c = ss.c();
    let dim = a.nrows();
    let mut x = nalgebra::DVector::<f64>::zeros(dim);
    let mut t = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut rr = Vec::with_capacity(n);
    let mut running = Vec::with_capacity(n);
    let mut energy = 0.0;
    let mut diverged = false;
    let deriv = |x: &nalgebra::DVector<f64>, rv: f64| -> nalgebra::DVector<f64> {
        let yv = (c * x)[0];
        a * x + b * (phi.eval(yv) + rv)
    };
    for k in 0..n {
        let tk = k as f64 * dt;
        let yk = (c * &x)[0];
        let rk = r.get(k as isize);
        t.push(tk);
        y.push(yk);
        u.push(phi.eval(yk));
        rr.push(rk);
        energy += yk * yk * dt;
        running.push(energy.sqrt());
        if !yk.is_finite() || yk.abs() > DIVERGENCE_LIMIT {
            diverged = true;
            break;
        }
        let r_half = r.value_at(tk + 0.5 * dt);
        let r_next = r.get(k as isize + 1);
        let k1 = deriv(&x, rk);
        let k2 = deriv(&(&x + &k1 * (0.5 * dt)), r_half);
        let k3 = deriv(&(&x + &k2 * (0.5 * dt)), r_half);
        let k4 = deriv(&(&x + &k3 * dt), r_next);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    Ok(SimResult { dt, t, y, u, r: rr, running_y_l2: running, diverged })
}

fn convolve_basis(z: &[f64], dt: f64, m: &MultiplierBasis) -> Vec<f64> {
    let n = z.len();
    let mut out = vec![0.0; n];
    // Causal terms: state s_k = sum_{j<=k} k e^{-a (k-j) dt} z_j dt, advanced
    // by one decay factor per step.
    for &(gain, pole) in m.causal() {
        let decay = (-pole * dt).exp();
        let mut s = 0.0;
        for k in 0..n {
            s = s * decay + gain * z[k] * dt;
            out[k] += s;
        }
    }
    // Anticausal terms integrate strictly future samples backward in time.
    for &(gain, pole) in m.anticausal() {
        let decay = (-pole * dt).exp();
        let mut s = 0.0;
        for k in (0..n).rev() {
            out[k] += s;
            s = (s + gain * z[k] * dt) * decay;
        }
    }
    out
}

/// Discrete counterpart of the frequency-domain test value: for the slope
/// form, `2 <(alpha y - w) - h * (alpha y - w), w>` with `w = phi(y)`; for
/// the monotone form the same with `y` in place of `alpha y - w`. Decaying
/// signals and a compliant nonlinearity make this nonnegative up to
/// discretization error.
pub fn td_iqc_value(
    y: &SampledSignal,
    w: &SampledSignal,
    m: &MultiplierBasis,
    alpha: Option<f64>,
    class: ClassTag,
) -> Result<f64> {
    let alpha = crate::iqc::check_class_alpha(alpha, class)?;
    if y.len() != w.len() {
        return Err(Error::InvalidSignal(format!(
            "paired signals need equal lengths, got {} and {}",
            y.len(),
            w.len()
        )));
    }
    if (y.dt() - w.dt()).abs() > 1e-12 * y.dt() {
        return Err(Error::InvalidSignal(format!(
            "paired signals need matching sample steps, got {} and {}",
            y.dt(),
            w.dt()
        )));
    }
    let dt = y.dt();
    let z: Vec<f64> = match alpha {
        Some(a) => y.samples().iter().zip(w.samples()).map(|(yv, wv)| a * yv - wv).collect(),
        None => y.samples().to_vec(),
    };
    let hz = convolve_basis(&z, dt, m);
    let total: f64 =
        z.iter().zip(&hz).zip(w.samples()).map(|((zv, hzv), wv)| (zv - hzv) * wv).sum();
    Ok(2.0 * total * dt)
}

/// Random piecewise-linear nonlinearity with every segment slope in
/// `[0, alpha]`, mirrored for the odd classes. Extrapolation reuses the
/// outermost slopes, so membership holds on the whole line.
pub fn random_slope_nonlinearity(alpha: f64, odd: bool, rng: &mut ChaCha8Rng) -> Shape {
    let segments = rng.random_range(4..=19);
    let mut xs = vec![0.0];
    let mut ys = vec![0.0];
    for _ in 0..segments {
        let dx = rng.random_range(0.1..1.0);
        let slope = alpha * rng.random_range(0.0..=1.0);
        xs.push(xs.last().unwrap() + dx);
        ys.push(ys.last().unwrap() + slope * dx);
    }
    let mut points: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    if odd {
        let mirrored: Vec<(f64, f64)> =
            points.iter().skip(1).map(|&(x, y)| (-x, -y)).rev().collect();
        points = mirrored.into_iter().chain(points).collect();
    } else {
        let mut left = vec![(0.0, 0.0)];
        for _ in 0..segments {
            let dx = rng.random_range(0.1..1.0);
            let slope = alpha * rng.random_range(0.0..=1.0);
            let &(x, y) = left.last().unwrap();
            left.push((x - dx, y - slope * dx));
        }
        left.reverse();
        left.pop();
        points = left.into_iter().chain(points).collect();
    }
    Shape::PiecewiseLinear { points }
}

/// Random finite-energy excitation: a few decaying sinusoids.
pub fn random_decaying_input(
    dt: f64,
    steps: usize,
    amplitude: f64,
    rng: &mut ChaCha8Rng,
) -> SampledSignal {
    let parts: Vec<(f64, f64, f64, f64)> = (0..rng.random_range(1..=3))
        .map(|_| {
            (
                amplitude * rng.random_range(0.2..1.0),
                rng.random_range(0.2..2.0),
                10f64.powf(rng.random_range(-1.0..0.5)),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let samples = (0..steps)
        .map(|k| {
            let t = k as f64 * dt;
            parts
                .iter()
                .map(|&(a, tau, w, phase)| a * (-t / tau).exp() * (w * t + phase).cos())
                .sum()
        })
        .collect();
    SampledSignal::new(dt, samples).expect("generated samples are finite")
}

/// Summary of a randomized falsification campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FalsifyReport {
    pub trials: usize,
    pub divergences: usize,
    pub max_gain_ratio: f64,
}

/// Runs `trials` independent simulations of the loop against random
/// slope-compliant nonlinearities and random finite-energy inputs. A
/// certified claim should see no divergences and bounded gain ratios; a
/// divergence is a counterexample to the claim.
pub fn falsify(
    g: &TransferFunction,
    alpha: f64,
    odd: bool,
    trials: usize,
    seed: u64,
) -> Result<FalsifyReport> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidAlpha { value: alpha });
    }
    let dt = default_sim_dt(g, alpha);
    let steps = default_sim_steps(g, dt);
    let outcomes: Result<Vec<(bool, f64)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ (trial as u64).wrapping_mul(0x9e37_79b9));
            let phi = random_slope_nonlinearity(alpha, odd, &mut rng);
            let amplitude = 10f64.powf(rng.random_range(-1.0..1.0));
            let r = random_decaying_input(dt, steps, amplitude, &mut rng);
            let sim = simulate_lure(g, &phi, &r, Some(steps))?;
            Ok((sim.diverged, sim.gain_ratio()))
        })
        .collect();
    let outcomes = outcomes?;
    Ok(FalsifyReport {
        trials,
        divergences: outcomes.iter().filter(|(d, _)| *d).count(),
        max_gain_ratio: outcomes.iter().map(|(_, g)| *g).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlin::check_class;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn lag1() -> TransferFunction {
        TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap()
    }

    fn lag2() -> TransferFunction {
        TransferFunction::new(vec![1.0], vec![1.0, 3.0, 2.0]).unwrap()
    }

    fn constant_input(dt: f64, t_final: f64, level: f64) -> SampledSignal {
        let n = (t_final / dt).round() as usize;
        SampledSignal::new(dt, vec![level; n]).unwrap()
    }

    #[test]
    fn open_loop_step_matches_the_analytic_response() {
        // With a zero nonlinearity the loop is open: y(t) = 1 - e^{-t}.
        let g = lag1();
        let r = constant_input(1e-3, 5.0, 1.0);
        let sim = simulate_lure(&g, &Shape::Linear { gain: 0.0 }, &r, None).unwrap();
        assert!(!sim.diverged);
        let last_t = *sim.t.last().unwrap();
        let expected = 1.0 - (-last_t).exp();
        assert_relative_eq!(*sim.y.last().unwrap(), expected, max_relative = 1e-6);
        assert_abs_diff_eq!(sim.y[0], 0.0);
    }

    #[test]
    fn linear_feedback_below_the_limit_settles() {
        // Positive feedback with gain 1.9 leaves s^2 + 3s + 0.1, still stable:
        // the response to a decaying input dies out.
        let g = lag2();
        let dt = default_sim_dt(&g, 1.9);
        let steps = default_sim_steps(&g, dt);
        let r = constant_input(dt, 2.0, 1.0);
        let sim = simulate_lure(&g, &Shape::Linear { gain: 1.9 }, &r, Some(steps)).unwrap();
        assert!(!sim.diverged);
        // The shifted loop s^2 + 3s + 0.1 settles slowly; the default horizon
        // still knocks the response down to a few percent of its peak.
        let peak = sim.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let final_y = sim.y.last().unwrap().abs();
        assert!(final_y < 0.05 * peak, "final y = {final_y}, peak = {peak}");
    }

    #[test]
    fn linear_feedback_above_the_limit_diverges() {
        let g = lag2();
        let dt = 1e-3;
        let r = constant_input(dt, 1.0, 1.0);
        // Gain 4 flips a closed-loop pole to about +0.56; sixty time units
        // push the response far beyond the divergence limit.
        let steps = (60.0 / dt) as usize;
        let sim = simulate_lure(&g, &Shape::Linear { gain: 4.0 }, &r, Some(steps)).unwrap();
        assert!(sim.diverged);
        assert!(sim.y.len() < steps);
    }

    #[test]
    fn saturation_bounds_the_loop_even_past_the_linear_limit() {
        // Saturated feedback injects at most 0.5, so the output stays within
        // the DC gain times the total drive.
        let g = lag2();
        let r = constant_input(1e-3, 30.0, 1.0);
        let sim = simulate_lure(&g, &Shape::Saturation { level: 0.5 }, &r, None).unwrap();
        assert!(!sim.diverged);
        assert!(sim.y.iter().all(|v| v.abs() <= 0.75 + 1e-9));
    }

    #[test]
    fn biproper_plants_are_rejected() {
        let g = TransferFunction::new(vec![1.0, 1.0], vec![1.0, 2.0]).unwrap();
        let r = constant_input(1e-3, 1.0, 1.0);
        assert!(matches!(
            simulate_lure(&g, &Shape::Linear { gain: 0.0 }, &r, None),
            Err(Error::BiproperPlant)
        ));
    }

    #[test]
    fn convolution_recursion_matches_the_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = 200;
            let dt = 0.05;
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let m = MultiplierBasis::new(
                vec![(rng.random_range(0.0..1.0), rng.random_range(0.5..2.0))],
                vec![(rng.random_range(0.0..1.0), rng.random_range(0.5..2.0))],
            )
            .unwrap();
            let fast = convolve_basis(&z, dt, &m);
            for k in (0..n).step_by(37) {
                let mut direct = 0.0;
                for (j, zj) in z.iter().enumerate() {
                    let t = (k as f64 - j as f64) * dt;
                    // The kernel's value at exactly zero belongs to the causal
                    // side in the recursion.
                    let h = if t >= 0.0 {
                        m.causal().iter().map(|&(g, p)| g * (-p * t).exp()).sum::<f64>()
                    } else {
                        m.anticausal().iter().map(|&(g, p)| g * (p * t).exp()).sum::<f64>()
                    };
                    direct += h * zj * dt;
                }
                assert_relative_eq!(fast[k], direct, max_relative = 1e-10, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn td_value_is_nonnegative_for_a_compliant_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let dt = 0.01;
        let steps = 2000;
        for _ in 0..20 {
            let alpha = 1.5;
            let phi = random_slope_nonlinearity(alpha, true, &mut rng);
            let y = random_decaying_input(dt, steps, 2.0, &mut rng);
            let w =
                SampledSignal::new(dt, y.samples().iter().map(|&v| phi.eval(v)).collect()).unwrap();
            let m = MultiplierBasis::new(vec![(0.4, 1.0)], vec![(0.3, 2.0)]).unwrap();
            let tol = 50.0 * dt * y.energy().max(w.energy());
            let slope = td_iqc_value(&y, &w, &m, Some(alpha), ClassTag::SlopeOdd).unwrap();
            assert!(slope >= -tol, "slope-form value {slope} under -{tol}");
            let mono = td_iqc_value(&y, &w, &m, None, ClassTag::MonotoneOdd).unwrap();
            assert!(mono >= -tol, "monotone-form value {mono} under -{tol}");
        }
    }

    #[test]
    fn td_value_flags_mismatched_signals() {
        let y = SampledSignal::new(0.01, vec![1.0; 10]).unwrap();
        let w = SampledSignal::new(0.01, vec![1.0; 11]).unwrap();
        let m = MultiplierBasis::identity();
        assert!(td_iqc_value(&y, &w, &m, Some(1.0), ClassTag::Slope).is_err());
        let w2 = SampledSignal::new(0.02, vec![1.0; 10]).unwrap();
        assert!(td_iqc_value(&y, &w2, &m, Some(1.0), ClassTag::Slope).is_err());
        assert!(td_iqc_value(&y, &w, &m, None, ClassTag::Slope).is_err());
    }

    #[test]
    fn random_nonlinearities_are_in_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let grid: Vec<f64> = (0..1601).map(|i| -8.0 + i as f64 * 0.01).collect();
        for _ in 0..25 {
            let alpha = 10f64.powf(rng.random_range(-0.5..0.5));
            let odd = rng.random_bool(0.5);
            let phi = random_slope_nonlinearity(alpha, odd, &mut rng);
            let report = check_class(&phi, &grid).unwrap();
            assert!(report.monotone);
            assert!(report.min_slope >= -1e-9);
            assert!(report.max_slope <= alpha + 1e-9);
            if odd {
                assert!(report.odd);
            }
            assert_abs_diff_eq!(phi.eval(0.0), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn falsify_is_deterministic_and_clean_on_a_certified_slope() {
        let g = lag2();
        let a = falsify(&g, 1.5, false, 8, 77).unwrap();
        let b = falsify(&g, 1.5, false, 8, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.divergences, 0);
        assert!(a.max_gain_ratio.is_finite());
        assert!(falsify(&g, -1.0, false, 1, 0).is_err());
    }

    #[test]
    fn step_size_respects_both_time_scales() {
        let g = lag2();
        let slow = g.slow_time_constant_bound().unwrap();
        let dt = default_sim_dt(&g, 1.0);
        assert!(dt <= 1e-3 * slow);
        assert!(dt <= 0.4 / (g.fast_pole_bound() * 2.0));
        assert!(default_sim_steps(&g, dt) as f64 * dt >= 50.0 * slow);
    }
}
