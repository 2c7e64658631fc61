//! Frequency-domain verification layer: the 2x2 multiplier-induced forms,
//! the loop-shift congruence between the monotone and slope tests, worst-case
//! frequency-domain-inequality (FDI) scans over explicit grids with zero and
//! tail handling, and the certificate record a verdict is shipped in.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lti::TransferFunction;
use crate::multiplier::{L1Norm, MultiplierBasis};
use crate::nonlin::ClassTag;
use crate::signal::SampledSignal;

/// Hermitian residual tolerated when a 2x2 form is assembled numerically.
const HERMITIAN_TOL: f64 = 1e-14;

/// Imaginary residual tolerated in the scalar quadratic form.
const QUADRATIC_IM_TOL: f64 = 1e-12;

/// Which loop test a 2x2 form encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdiForm {
    MonotoneForm,
    SlopeForm,
}

/// Hermitian 2x2 frequency-domain form. Only the upper triangle is stored;
/// the (2,1) entry is the conjugate of `m12` by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqcMatrix {
    pub m11: f64,
    pub m12: Complex64,
    pub m22: f64,
    pub form: FdiForm,
}

impl IqcMatrix {
    /// Full 2x2 complex matrix view.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(self.m11, 0.0), self.m12],
            [self.m12.conj(), Complex64::new(self.m22, 0.0)],
        ]
    }

    /// Rebuilds the compact form from a dense matrix, rejecting anything
    /// whose Hermitian residual exceeds a strict tolerance.
    pub fn from_matrix(m: [[Complex64; 2]; 2], form: FdiForm) -> Result<Self> {
        let scale = m.iter().flatten().map(|v| v.norm()).fold(1.0f64, f64::max);
        let residual =
            (m[0][1] - m[1][0].conj()).norm().max(m[0][0].im.abs()).max(m[1][1].im.abs());
        if residual > HERMITIAN_TOL * scale {
            return Err(Error::InvalidGrid(format!(
                "form is not Hermitian: residual {residual} at scale {scale}"
            )));
        }
        Ok(Self { m11: m[0][0].re, m12: m[0][1], m22: m[1][1].re, form })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { m11: c * self.m11, m12: c * self.m12, m22: c * self.m22, form: self.form }
    }
}

/// Monotone-class form [[0, M*], [M, 0]] at one frequency.
pub fn pi_monotone(m: &MultiplierBasis, omega: f64) -> IqcMatrix {
    let mv = m.freq_response(omega);
    IqcMatrix { m11: 0.0, m12: mv.conj(), m22: 0.0, form: FdiForm::MonotoneForm }
}

/// Slope-class form [[0, alpha M*], [alpha M, -M* - M]] at one frequency.
pub fn pi_slope(m: &MultiplierBasis, alpha: f64, omega: f64) -> IqcMatrix {
    let mv = m.freq_response(omega);
    IqcMatrix { m11: 0.0, m12: alpha * mv.conj(), m22: -2.0 * mv.re, form: FdiForm::SlopeForm }
}

/// Loop-shift congruence: alpha * (X^-1)^H Pi X^-1 with X = [[1, 1/alpha],
/// [0, 1]], computed as explicit matrix products. Applied to the monotone
/// form this lands on the slope form, which the closed-form constructor
/// cross-checks in the tests.
pub fn loopshift_congruence(pi: &IqcMatrix, alpha: f64) -> Result<IqcMatrix> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidAlpha { value: alpha });
    }
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let xinv = [[one, Complex64::new(-1.0 / alpha, 0.0)], [zero, one]];
    let p = pi.matrix();
    let mut px = [[zero; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                px[i][j] += p[i][k] * xinv[k][j];
            }
        }
    }
    let mut out = [[zero; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                // (X^-1)^H row i is the conjugate of X^-1 column i.
                out[i][j] += xinv[k][i].conj() * px[k][j];
            }
        }
    }
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= alpha;
        }
    }
    IqcMatrix::from_matrix(out, FdiForm::SlopeForm)
}

/// Scalar test value [G; 1]^H Pi [G; 1] at one frequency response sample.
/// The form is Hermitian, so the imaginary part is asserted small and
/// discarded.
pub fn quadratic_form(g: Complex64, pi: &IqcMatrix) -> f64 {
    let v = pi.m11 * g.norm_sqr() + (g.conj() * pi.m12).re * 2.0 + pi.m22;
    debug_assert!(
        {
            let full = pi.matrix();
            let exact = (g.conj() * (full[0][0] * g + full[0][1]) + full[1][0] * g + full[1][1]).im;
            exact.abs() <= QUADRATIC_IM_TOL * (1.0 + v.abs())
        },
        "quadratic form lost Hermitian symmetry"
    );
    v
}

/// FDI value for a plant at one frequency under a prepared form.
pub fn fdi_value(g: &TransferFunction, pi: &IqcMatrix, omega: f64) -> Result<f64> {
    Ok(quadratic_form(g.freq_response(omega)?, pi))
}

/// Serializable description of a frequency grid, sufficient to rebuild it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GridSpec {
    Log { wmin: f64, wmax: f64, n: usize, include_zero: bool, check_tail: bool },
    Explicit { omegas: Vec<f64>, include_zero: bool, check_tail: bool },
}

impl GridSpec {
    pub fn build(&self) -> Result<FrequencyGrid> {
        match self {
            GridSpec::Log { wmin, wmax, n, include_zero, check_tail } => {
                FrequencyGrid::log_with(*wmin, *wmax, *n, *include_zero, *check_tail)
            }
            GridSpec::Explicit { omegas, include_zero, check_tail } => {
                FrequencyGrid::from_omegas(omegas.clone(), *include_zero, *check_tail)
            }
        }
    }
}

/// Strictly increasing positive frequency samples, with flags adding the
/// exact zero-frequency sample and the high-frequency tail limit to every
/// scan.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
    include_zero: bool,
    check_tail: bool,
    spec: GridSpec,
}

/// Hard cap on grid sizes accepted from callers and files.
pub const MAX_GRID_POINTS: usize = 10_000_000;

impl FrequencyGrid {
    /// Logarithmic grid including the zero sample and the tail limit.
    pub fn log(wmin: f64, wmax: f64, n: usize) -> Result<Self> {
        Self::log_with(wmin, wmax, n, true, true)
    }

    pub fn log_with(
        wmin: f64,
        wmax: f64,
        n: usize,
        include_zero: bool,
        check_tail: bool,
    ) -> Result<Self> {
        if !(wmin.is_finite() && wmax.is_finite() && wmin > 0.0 && wmax > wmin) {
            return Err(Error::InvalidGrid(format!("need 0 < wmin < wmax, got [{wmin}, {wmax}]")));
        }
        if !(2..=MAX_GRID_POINTS).contains(&n) {
            return Err(Error::InvalidGrid(format!(
                "grid size must lie in [2, {MAX_GRID_POINTS}], got {n}"
            )));
        }
        let lmin = wmin.ln();
        let lmax = wmax.ln();
        let mut omegas: Vec<f64> =
            (0..n).map(|i| (lmin + (lmax - lmin) * i as f64 / (n - 1) as f64).exp()).collect();
        // Pin the endpoints: ln/exp round trips can drift them by an ulp,
        // and near f64::MAX that drift overflows.
        omegas[0] = wmin;
        omegas[n - 1] = wmax;
        if omegas.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "range [{wmin}, {wmax}] is too wide for finite grid points"
            )));
        }
        let spec = GridSpec::Log { wmin, wmax, n, include_zero, check_tail };
        Ok(Self { omegas, include_zero, check_tail, spec })
    }

    pub fn from_omegas(omegas: Vec<f64>, include_zero: bool, check_tail: bool) -> Result<Self> {
        if omegas.is_empty() || omegas.len() > MAX_GRID_POINTS {
            return Err(Error::InvalidGrid(format!(
                "explicit grid size must lie in [1, {MAX_GRID_POINTS}], got {}",
                omegas.len()
            )));
        }
        if !omegas[0].is_finite() || omegas[0] <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "frequencies must be positive, got {}",
                omegas[0]
            )));
        }
        for w in omegas.windows(2) {
            if !(w[1].is_finite() && w[1] > w[0]) {
                return Err(Error::InvalidGrid(format!(
                    "frequencies must be finite and strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let spec = GridSpec::Explicit { omegas: omegas.clone(), include_zero, check_tail };
        Ok(Self { omegas, include_zero, check_tail, spec })
    }

    /// Default certification grid: 2000 log points over [1e-3, 1e4] plus the
    /// zero sample and tail limit.
    pub fn default_certification() -> Self {
        Self::log(1e-3, 1e4, 2000).expect("default grid parameters are valid")
    }

    /// Coarser grid for search-time LP rows.
    pub fn default_search() -> Self {
        Self::log(1e-3, 1e4, 200).expect("default grid parameters are valid")
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn include_zero(&self) -> bool {
        self.include_zero
    }

    pub fn check_tail(&self) -> bool {
        self.check_tail
    }

    pub fn description(&self) -> &GridSpec {
        &self.spec
    }

    /// Points per decade, used to size refinement grids.
    pub fn density_per_decade(&self) -> f64 {
        let span = (self.omegas.last().unwrap() / self.omegas[0]).log10().max(1e-9);
        self.omegas.len() as f64 / span
    }
}

/// Location of the worst FDI value in a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorstFreq {
    Zero,
    Omega(f64),
    Tail,
}

impl std::fmt::Display for WorstFreq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WorstFreq::Zero => write!(f, "omega=0"),
            WorstFreq::Omega(w) => write!(f, "omega={w:.6e}"),
            WorstFreq::Tail => write!(f, "the high-frequency tail"),
        }
    }
}

/// Result of a worst-case FDI sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdiScan {
    pub margin: f64,
    pub worst: WorstFreq,
}

fn tail_value(g: &TransferFunction, alpha: Option<f64>, class: ClassTag) -> f64 {
    let ginf = g.gain_at_infinity();
    // M(inf) = 1 under the fixed normalization.
    if class.is_slope() {
        2.0 * (alpha.unwrap_or(0.0) * ginf - 1.0)
    } else {
        2.0 * ginf
    }
}

fn form_at(m: &MultiplierBasis, alpha: Option<f64>, class: ClassTag, omega: f64) -> IqcMatrix {
    if class.is_slope() {
        pi_slope(m, alpha.expect("slope form needs alpha"), omega)
    } else {
        pi_monotone(m, omega)
    }
}

pub(crate) fn check_class_alpha(alpha: Option<f64>, class: ClassTag) -> Result<Option<f64>> {
    if class.is_slope() {
        match alpha {
            Some(a) if a.is_finite() && a > 0.0 => Ok(Some(a)),
            Some(a) => Err(Error::InvalidAlpha { value: a }),
            None => Err(Error::MissingAlpha),
        }
    } else {
        // The monotone loop test does not involve a slope bound.
        Ok(None)
    }
}

/// Worst FDI value for a stable plant over a grid, including the zero sample
/// and the tail limit when the grid asks for them. Certification needs this
/// below -epsilon everywhere.
pub fn fdi_margin(
    g: &TransferFunction,
    m: &MultiplierBasis,
    alpha: Option<f64>,
    class: ClassTag,
    grid: &FrequencyGrid,
) -> Result<FdiScan> {
    let alpha = check_class_alpha(alpha, class)?;
    if !g.is_hurwitz() {
        return Err(Error::NotHurwitz);
    }
    let mut best: Option<(f64, WorstFreq)> = None;
    let mut consider = |value: f64, at: WorstFreq| {
        let replace = match best {
            None => true,
            Some((bv, _)) => value > bv,
        };
        if replace {
            best = Some((value, at));
        }
    };
    if grid.include_zero() {
        let pi = form_at(m, alpha, class, 0.0);
        consider(fdi_value(g, &pi, 0.0)?, WorstFreq::Zero);
    }
    let scanned: Result<Vec<(f64, f64)>> = grid
        .omegas()
        .par_iter()
        .map(|&w| {
            let pi = form_at(m, alpha, class, w);
            Ok((fdi_value(g, &pi, w)?, w))
        })
        .collect();
    for (v, w) in scanned? {
        consider(v, WorstFreq::Omega(w));
    }
    if grid.check_tail() {
        consider(tail_value(g, alpha, class), WorstFreq::Tail);
    }
    let (margin, worst) = best.ok_or_else(|| Error::InvalidGrid("empty scan".into()))?;
    Ok(FdiScan { margin, worst })
}

/// One-decade refinement grid around a finite worst frequency, at ten times
/// the source grid's per-decade density. Zero and tail need no refinement.
pub fn refine_around(grid: &FrequencyGrid, worst: WorstFreq) -> Option<FrequencyGrid> {
    let WorstFreq::Omega(w) = worst else { return None };
    if !(w.is_finite() && w > 0.0) {
        return None;
    }
    let half = 10f64.sqrt();
    let n = ((10.0 * grid.density_per_decade()).ceil() as usize).clamp(20, 200_000);
    FrequencyGrid::log_with(w / half, w * half, n, false, false).ok()
}

/// Scan with one refinement pass: the base grid's worst point seeds a denser
/// local grid, and the reported margin is the worse of the two scans.
pub fn fdi_margin_refined(
    g: &TransferFunction,
    m: &MultiplierBasis,
    alpha: Option<f64>,
    class: ClassTag,
    grid: &FrequencyGrid,
) -> Result<(FdiScan, Option<GridSpec>)> {
    let base = fdi_margin(g, m, alpha, class, grid)?;
    let Some(fine) = refine_around(grid, base.worst) else {
        return Ok((base, None));
    };
    let refined = fdi_margin(g, m, alpha, class, &fine)?;
    let scan = if refined.margin > base.margin { refined } else { base };
    Ok((scan, Some(fine.description().clone())))
}

/// Default strictness margin: 1e-6 (1 + alpha * max |G|) over the scan
/// points, with alpha dropped for the monotone classes.
pub fn default_epsilon(
    g: &TransferFunction,
    alpha: Option<f64>,
    grid: &FrequencyGrid,
) -> Result<f64> {
    let mut gmax = g.gain_at_infinity().abs();
    if grid.include_zero() {
        gmax = gmax.max(g.freq_response(0.0)?.norm());
    }
    for &w in grid.omegas() {
        gmax = gmax.max(g.freq_response(w)?.norm());
    }
    Ok(1e-6 * (1.0 + alpha.unwrap_or(1.0) * gmax))
}

/// One row of FDI evidence: frequency (infinite for the tail limit), the
/// plant and multiplier responses, and the test value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdiRow {
    pub omega: f64,
    pub g: Complex64,
    pub m: Complex64,
    pub value: f64,
}

/// Evidence rows for a scan: the zero sample first, then the grid, then the
/// tail limit, matching the CSV layout the CLI emits.
pub fn fdi_rows(
    g: &TransferFunction,
    m: &MultiplierBasis,
    alpha: Option<f64>,
    class: ClassTag,
    grid: &FrequencyGrid,
) -> Result<Vec<FdiRow>> {
    let alpha = check_class_alpha(alpha, class)?;
    if !g.is_hurwitz() {
        return Err(Error::NotHurwitz);
    }
    let mut rows = Vec::with_capacity(grid.omegas().len() + 2);
    let mut push = |omega: f64| -> Result<()> {
        let gv = g.freq_response(omega)?;
        let mv = m.freq_response(omega);
        let pi = form_at(m, alpha, class, omega);
        rows.push(FdiRow { omega, g: gv, m: mv, value: quadratic_form(gv, &pi) });
        Ok(())
    };
    if grid.include_zero() {
        push(0.0)?;
    }
    for &w in grid.omegas() {
        push(w)?;
    }
    if grid.check_tail() {
        rows.push(FdiRow {
            omega: f64::INFINITY,
            g: Complex64::new(g.gain_at_infinity(), 0.0),
            m: Complex64::new(1.0, 0.0),
            value: tail_value(g, alpha, class),
        });
    }
    Ok(rows)
}

/// Time-domain versus frequency-domain inner products of two equally sampled
/// signals, with their relative gap. The two routes agree by the discrete
/// Parseval identity up to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsevalReport {
    pub time_ip: f64,
    pub freq_ip: f64,
    pub rel_gap: f64,
}

pub fn parseval_check(x: &SampledSignal, y: &SampledSignal) -> Result<ParsevalReport> {
    if x.len() != y.len() {
        return Err(Error::InvalidSignal(format!(
            "inner product needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if (x.dt() - y.dt()).abs() > 1e-12 * x.dt() {
        return Err(Error::InvalidSignal(format!(
            "inner product needs matching sample steps, got {} and {}",
            x.dt(),
            y.dt()
        )));
    }
    let n = x.len();
    let dt = x.dt();
    let time_ip = dt * x.samples().iter().zip(y.samples()).map(|(a, b)| a * b).sum::<f64>();
    let mut planner = rustfft::FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut xf: Vec<Complex64> = x.samples().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut yf: Vec<Complex64> = y.samples().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.process(&mut xf);
    fft.process(&mut yf);
    let freq_ip = dt / n as f64 * xf.iter().zip(&yf).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
    let scale = (x.energy() * y.energy()).sqrt().max(1e-300);
    let rel_gap = (time_ip - freq_ip).abs() / scale;
    Ok(ParsevalReport { time_ip, freq_ip, rel_gap })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self { name: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantInfo {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    pub digest: String,
}

impl PlantInfo {
    pub fn of(g: &TransferFunction) -> Self {
        Self { num: g.num().to_vec(), den: g.den().to_vec(), digest: plant_digest(g) }
    }

    pub fn to_transfer_function(&self) -> Result<TransferFunction> {
        TransferFunction::new(self.num.clone(), self.den.clone())
    }
}

/// Hex SHA-256 of the normalized coefficient vectors.
pub fn plant_digest(g: &TransferFunction) -> String {
    let canon = serde_json::to_string(&(g.num(), g.den())).expect("coefficients serialize");
    let hash = Sha256::digest(canon.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in hash {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Verdict {
    Certified,
    NotCertified {
        reason: String,
    },
    /// Distinct from a negative verdict: the search gave up (for example on
    /// an LP iteration limit) without deciding either way.
    Inconclusive {
        reason: String,
    },
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified)
    }
}

/// Search provenance recorded in certificates produced by the LP search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchInfo {
    pub causal_poles: Vec<f64>,
    pub anticausal_poles: Vec<f64>,
    pub lp_grid: GridSpec,
    pub lp_iteration_limit: usize,
}

/// Self-contained record of one certification run: plant, claim, multiplier,
/// scan evidence, and verdict. Serializes deterministically, so equal runs
/// produce byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub tool: ToolInfo,
    pub plant: PlantInfo,
    pub class: ClassTag,
    pub alpha: Option<f64>,
    pub multiplier: MultiplierBasis,
    pub multiplier_l1: L1Norm,
    pub multiplier_valid: bool,
    pub validity_reasons: Vec<String>,
    pub grid: GridSpec,
    pub refinement: Option<GridSpec>,
    pub epsilon: f64,
    pub margin: f64,
    pub worst: WorstFreq,
    pub verdict: Verdict,
    pub search: Option<SearchInfo>,
}
