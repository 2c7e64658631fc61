//! Multiplier search and end-to-end certification: the circle baseline, a
//! linear-program search for basis gains over fixed pole sets, a brute-force
//! single-term comparator, and bisection over the slope bound.
//!
//! Search and certification are deliberately decoupled: the LP minimizes the
//! worst test value over a coarse grid, and every candidate it produces is
//! re-verified on the full certification grid before a verdict is issued. A
//! search shortcut can therefore cost slope range but never soundness.

use crate::error::{Error, Result};
use crate::iqc::{
    self, default_epsilon, fdi_margin, fdi_margin_refined, Certificate, FdiScan, FrequencyGrid,
    PlantInfo, SearchInfo, ToolInfo, Verdict,
};
use crate::lti::TransferFunction;
use crate::multiplier::MultiplierBasis;
use crate::nonlin::ClassTag;
use crate::simplex::{solve, Constraint, LpProblem, LpStatus, Relation};

/// Bisection gives up below this slope bound.
pub const ALPHA_FLOOR: f64 = 1e-9;

/// Bisection stops expanding above this slope bound.
pub const ALPHA_CAP: f64 = 1e8;

/// The LP keeps the L1 bound strictly inside the unit ball by this much, so
/// optimal bases still pass the strict validity check.
const L1_HEADROOM: f64 = 1e-6;

/// Gains below this are dropped from LP solutions.
const GAIN_FLOOR: f64 = 1e-12;

/// Pole sets, search grid, and budgets for the multiplier search.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub causal_poles: Vec<f64>,
    pub anticausal_poles: Vec<f64>,
    pub lp_grid: FrequencyGrid,
    pub lp_iteration_limit: usize,
    pub bisect_rel_tol: f64,
}

impl SearchConfig {
    /// Fixed pole spread around unit scale.
    pub fn standard() -> Self {
        Self::scaled(1.0)
    }

    /// Pole spread centered on the plant's characteristic pole scale.
    pub fn default_for(g: &TransferFunction) -> Self {
        Self::scaled(g.pole_scale_estimate())
    }

    fn scaled(scale: f64) -> Self {
        let scale = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
        let poles: Vec<f64> = [0.1, 0.3, 1.0, 3.0, 10.0].iter().map(|p| p * scale).collect();
        Self {
            causal_poles: poles.clone(),
            anticausal_poles: poles,
            lp_grid: FrequencyGrid::default_search(),
            lp_iteration_limit: 10_000,
            bisect_rel_tol: 1e-3,
        }
    }
}

/// Largest slope bound certified by the trivial multiplier: the reciprocal of
/// the largest real part of the plant response, or infinity when that never
/// becomes positive.
pub fn circle_baseline(g: &TransferFunction, grid: &FrequencyGrid) -> Result<f64> {
    if !g.is_hurwitz() {
        return Err(Error::NotHurwitz);
    }
    let mut max_re = g.gain_at_infinity();
    if grid.include_zero() {
        max_re = max_re.max(g.freq_response(0.0)?.re);
    }
    for &w in grid.omegas() {
        max_re = max_re.max(g.freq_response(w)?.re);
    }
    if max_re <= 1e-12 {
        Ok(f64::INFINITY)
    } else {
        Ok(1.0 / max_re)
    }
}

/// Outcome of the gain LP over a fixed pole set.
#[derive(Debug, Clone)]
pub enum LpOutcome {
    /// The optimized worst grid value clears the strictness margin.
    Feasible { basis: MultiplierBasis, margin: f64 },
    /// The LP optimum itself cannot reach below the strictness margin, so no
    /// gain choice over these poles certifies on this grid.
    Infeasible { basis: MultiplierBasis, margin: f64 },
    /// The solver gave up without an optimum; deliberately distinct from
    /// infeasibility.
    Inconclusive { reason: String },
}

fn validate_poles(poles: &[f64]) -> Result<()> {
    for &p in poles {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::NonPositivePole { value: p });
        }
    }
    Ok(())
}

/// Minimizes the worst test value over the grid among multipliers with the
/// given poles, nonnegative gains, and L1 weight strictly under one. The
/// slack between the optimum and `-epsilon` decides feasibility.
#[allow(clippy::too_many_arguments)]
pub fn lp_feasibility(
    g: &TransferFunction,
    alpha: Option<f64>,
    class: ClassTag,
    causal_poles: &[f64],
    anticausal_poles: &[f64],
    grid: &FrequencyGrid,
    epsilon: f64,
    iteration_limit: usize,
) -> Result<LpOutcome> {
    let alpha = iqc::check_class_alpha(alpha, class)?;
    if !g.is_hurwitz() {
        return Err(Error::NotHurwitz);
    }
    validate_poles(causal_poles)?;
    validate_poles(anticausal_poles)?;
    let nc = causal_poles.len();
    let na = anticausal_poles.len();
    let nv = nc + na + 2;
    let load = |w: f64| -> Result<num_complex::Complex64> {
        let gv = g.freq_response(w)?;
        Ok(match alpha {
            Some(a) => a * gv - 1.0,
            None => gv,
        })
    };
    // Each frequency contributes: sum_i k_i phi_i + sum_j l_j psi_j + t >= 2 Re c,
    // which linearizes "worst value <= t" for M = 1 - sum k/(s+a) - sum l/(b-s).
    let mut constraints = Vec::new();
    let mut push_row = |c: num_complex::Complex64, w: Option<f64>| {
        let mut coeffs = vec![0.0; nv];
        if let Some(w) = w {
            let jw = num_complex::Complex64::new(0.0, w);
            for (i, &a) in causal_poles.iter().enumerate() {
                coeffs[i] = 2.0 * (c / (a + jw)).re;
            }
            for (j, &b) in anticausal_poles.iter().enumerate() {
                coeffs[nc + j] = 2.0 * (c / (b - jw)).re;
            }
        }
        coeffs[nv - 2] = 1.0;
        coeffs[nv - 1] = -1.0;
        constraints.push(Constraint { coeffs, rel: Relation::Ge, rhs: 2.0 * c.re });
    };
    if grid.include_zero() {
        push_row(load(0.0)?, Some(0.0));
    }
    for &w in grid.omegas() {
        push_row(load(w)?, Some(w));
    }
    if grid.check_tail() {
        let cinf = match alpha {
            Some(a) => a * g.gain_at_infinity() - 1.0,
            None => g.gain_at_infinity(),
        };
        push_row(num_complex::Complex64::new(cinf, 0.0), None);
    }
    let mut l1 = vec![0.0; nv];
    for (i, &a) in causal_poles.iter().enumerate() {
        l1[i] = 1.0 / a;
    }
    for (j, &b) in anticausal_poles.iter().enumerate() {
        l1[nc + j] = 1.0 / b;
    }
    constraints.push(Constraint { coeffs: l1, rel: Relation::Le, rhs: 1.0 - L1_HEADROOM });
    let mut objective = vec![0.0; nv];
    objective[nv - 2] = 1.0;
    objective[nv - 1] = -1.0;
    let solution = solve(&LpProblem { objective, constraints, maximize: false }, iteration_limit);
    match solution.status {
        LpStatus::Optimal => {
            let collect = |poles: &[f64], offset: usize| {
                poles
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| (solution.x[offset + i], p))
                    .filter(|(gain, _)| *gain > GAIN_FLOOR)
                    .collect::<Vec<_>>()
            };
            let basis =
                MultiplierBasis::new(collect(causal_poles, 0), collect(anticausal_poles, nc))?;
            let margin = solution.objective;
            if margin <= -epsilon {
                Ok(LpOutcome::Feasible { basis, margin })
            } else {
                Ok(LpOutcome::Infeasible { basis, margin })
            }
        }
        LpStatus::IterationLimit => Ok(LpOutcome::Inconclusive {
            reason: format!("gain search stopped at the {iteration_limit}-pivot limit"),
        }),
        status => Ok(LpOutcome::Inconclusive {
            reason: format!("gain search ended without an optimum ({status:?})"),
        }),
    }
}

/// Brute-force comparator over single-term multipliers: every pole paired
/// with ten gain fractions of its L1 budget, plus the trivial multiplier.
/// Returns the candidate with the smallest scanned margin.
pub fn pole_grid_search_with(
    g: &TransferFunction,
    alpha: Option<f64>,
    class: ClassTag,
    causal_poles: &[f64],
    anticausal_poles: &[f64],
    grid: &FrequencyGrid,
) -> Result<(MultiplierBasis, FdiScan)> {
    validate_poles(causal_poles)?;
    validate_poles(anticausal_poles)?;
    let mut candidates = vec![MultiplierBasis::identity()];
    for &a in causal_poles {
        for step in 1..=10 {
            let gain = 0.1 * step as f64 * a * (1.0 - L1_HEADROOM);
            candidates.push(MultiplierBasis::new(vec![(gain, a)], vec![])?);
        }
    }
    for &b in anticausal_poles {
        for step in 1..=10 {
            let gain = 0.1 * step as f64 * b * (1.0 - L1_HEADROOM);
            candidates.push(MultiplierBasis::new(vec![], vec![(gain, b)])?);
        }
    }
    let mut best: Option<(MultiplierBasis, FdiScan)> = None;
    for candidate in candidates {
        let scan = fdi_margin(g, &candidate, alpha, class, grid)?;
        let better = match &best {
            None => true,
            Some((_, bs)) => scan.margin < bs.margin,
        };
        if better {
            best = Some((candidate, scan));
        }
    }
    Ok(best.expect("candidate list is never empty"))
}

/// Default single-term sweep: 25 logarithmic poles per side over [1e-2, 1e2].
pub fn pole_grid_search(
    g: &TransferFunction,
    alpha: Option<f64>,
    class: ClassTag,
    grid: &FrequencyGrid,
) -> Result<(MultiplierBasis, FdiScan)> {
    let poles: Vec<f64> = (0..25).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 24.0)).collect();
    pole_grid_search_with(g, alpha, class, &poles, &poles, grid)
}

/// Verifies one multiplier against one plant and claim on one grid and
/// packages the outcome. The scan runs even when the multiplier fails its
/// class validity check, so the certificate still carries the evidence, but
/// the verdict can only be positive for a valid multiplier.
pub fn certify(
    g: &TransferFunction,
    class: ClassTag,
    alpha: Option<f64>,
    m: &MultiplierBasis,
    grid: &FrequencyGrid,
    epsilon: Option<f64>,
) -> Result<Certificate> {
    let alpha = iqc::check_class_alpha(alpha, class)?;
    if !g.is_hurwitz() {
        return Err(Error::NotHurwitz);
    }
    let validity = m.validity_for_class(class);
    let (scan, refinement) = fdi_margin_refined(g, m, alpha, class, grid)?;
    let epsilon = match epsilon {
        Some(e) if e.is_finite() && e > 0.0 => e,
        Some(e) => {
            return Err(Error::InvalidGrid(format!("strictness margin must be positive, got {e}")))
        }
        None => default_epsilon(g, alpha, grid)?,
    };
    let verdict = if !validity.valid {
        Verdict::NotCertified {
            reason: format!("multiplier invalid: {}", validity.reasons.join("; ")),
        }
    } else if scan.margin < -epsilon {
        Verdict::Certified
    } else {
        Verdict::NotCertified {
            reason: format!(
                "worst test value {:.6e} at {} does not clear -{:.3e}",
                scan.margin, scan.worst, epsilon
            ),
        }
    };
    Ok(Certificate {
        tool: ToolInfo::current(),
        plant: PlantInfo::of(g),
        class,
        alpha,
        multiplier: m.clone(),
        multiplier_l1: m.l1_norm(),
        multiplier_valid: validity.valid,
        validity_reasons: validity.reasons,
        grid: grid.description().clone(),
        refinement,
        epsilon,
        margin: scan.margin,
        worst: scan.worst,
        verdict,
        search: None,
    })
}

/// LP search followed by full-grid verification. The trivial multiplier is
/// always kept as a fallback candidate, so the search can never do worse
/// than the circle baseline. An inconclusive LP yields an inconclusive
/// verdict unless the fallback certifies outright.
pub fn search_certify(
    g: &TransferFunction,
    class: ClassTag,
    alpha: Option<f64>,
    config: &SearchConfig,
) -> Result<Certificate> {
    let checked = iqc::check_class_alpha(alpha, class)?;
    if !g.is_hurwitz() {
        return Err(Error::NotHurwitz);
    }
    let lp_epsilon = default_epsilon(g, checked, &config.lp_grid)?;
    let outcome = lp_feasibility(
        g,
        alpha,
        class,
        &config.causal_poles,
        &config.anticausal_poles,
        &config.lp_grid,
        lp_epsilon,
        config.lp_iteration_limit,
    )?;
    let mut candidates = vec![MultiplierBasis::identity()];
    let mut inconclusive_reason = None;
    match &outcome {
        LpOutcome::Feasible { basis, .. } | LpOutcome::Infeasible { basis, .. } => {
            candidates.insert(0, basis.clone());
        }
        LpOutcome::Inconclusive { reason } => inconclusive_reason = Some(reason.clone()),
    }
    let grid = FrequencyGrid::default_certification();
    let mut best: Option<Certificate> = None;
    for candidate in &candidates {
        let cert = certify(g, class, alpha, candidate, &grid, None)?;
        let better = match &best {
            None => true,
            Some(b) => {
                (cert.verdict.is_certified() && !b.verdict.is_certified())
                    || (cert.verdict.is_certified() == b.verdict.is_certified()
                        && cert.margin < b.margin)
            }
        };
        if better {
            best = Some(cert);
        }
    }
    let mut cert = best.expect("at least the trivial candidate was scored");
    if let (Some(reason), false) = (inconclusive_reason, cert.verdict.is_certified()) {
        cert.verdict = Verdict::Inconclusive { reason };
    }
    cert.search = Some(SearchInfo {
        causal_poles: config.causal_poles.clone(),
        anticausal_poles: config.anticausal_poles.clone(),
        lp_grid: config.lp_grid.description().clone(),
        lp_iteration_limit: config.lp_iteration_limit,
    });
    Ok(cert)
}

/// How each bisection trial produces its candidate multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    /// Trivial multiplier only; bisection then recovers the circle value.
    CircleM1,
    /// LP search over the configured pole sets at every trial slope.
    ZamesFalb,
}

/// One bisection trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectStep {
    pub alpha: f64,
    pub certified: bool,
    pub margin: f64,
}

/// Outcome of the slope-bound bisection: the largest certified slope found,
/// its certificate, and the full trial trace.
#[derive(Debug, Clone)]
pub struct BisectResult {
    pub alpha_star: f64,
    pub certificate: Certificate,
    pub trace: Vec<BisectStep>,
}

struct BisectDriver<'a> {
    g: &'a TransferFunction,
    class: ClassTag,
    strategy: SearchStrategy,
    config: &'a SearchConfig,
    grid: FrequencyGrid,
    trace: Vec<BisectStep>,
    best: Option<(f64, Certificate)>,
}

impl BisectDriver<'_> {
    fn trial(&mut self, alpha: f64) -> Result<bool> {
        let cert = match self.strategy {
            SearchStrategy::CircleM1 => certify(
                self.g,
                self.class,
                Some(alpha),
                &MultiplierBasis::identity(),
                &self.grid,
                None,
            )?,
            SearchStrategy::ZamesFalb => {
                search_certify(self.g, self.class, Some(alpha), self.config)?
            }
        };
        let certified = cert.verdict.is_certified();
        self.trace.push(BisectStep { alpha, certified, margin: cert.margin });
        if certified {
            let better = self.best.as_ref().is_none_or(|(a, _)| alpha > *a);
            if better {
                self.best = Some((alpha, cert));
            }
        }
        Ok(certified)
    }
}

/// Maximizes the certifiable slope bound by geometric bracketing and
/// bisection, expanding downward from the seed until a certifiable slope is
/// found (or the floor is hit) and upward until certification first fails
/// (or the cap is hit).
pub fn bisect_alpha(
    g: &TransferFunction,
    class: ClassTag,
    strategy: SearchStrategy,
    config: &SearchConfig,
) -> Result<BisectResult> {
    if !class.is_slope() {
        return Err(Error::InvalidNonlinearity(
            "slope-bound bisection applies to the slope-restricted classes".into(),
        ));
    }
    if !g.is_hurwitz() {
        return Err(Error::NotHurwitz);
    }
    let grid = FrequencyGrid::default_certification();
    let baseline = circle_baseline(g, &grid)?;
    let seed = if baseline.is_finite() { baseline.clamp(ALPHA_FLOOR, ALPHA_CAP) } else { 1.0 };
    let mut driver =
        BisectDriver { g, class, strategy, config, grid, trace: Vec::new(), best: None };
    let mut lo;
    let mut hi = None;
    if driver.trial(seed)? {
        lo = seed;
        loop {
            let next = (lo * 2.0).min(ALPHA_CAP);
            if next <= lo {
                break;
            }
            if driver.trial(next)? {
                lo = next;
            } else {
                hi = Some(next);
                break;
            }
        }
    } else {
        let mut shrink = seed;
        loop {
            hi = Some(shrink);
            shrink /= 2.0;
            if shrink < ALPHA_FLOOR {
                return Err(Error::NoCertifiableSlope);
            }
            if driver.trial(shrink)? {
                lo = shrink;
                break;
            }
        }
    }
    if let Some(mut hi) = hi {
        while hi / lo > 1.0 + config.bisect_rel_tol {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if driver.trial(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let (alpha_star, certificate) =
        driver.best.expect("bisection only exits the bracket with a certified low end");
    Ok(BisectResult { alpha_star, certificate, trace: driver.trace })
}
