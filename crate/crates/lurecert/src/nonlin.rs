//! Static nonlinearities: shape library, class checking by finite
//! differences, and the discrete area inequalities used to sanity-check the
//! multiplier machinery.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

/// Nonlinearity class a certification claim quantifies over. Monotone
/// classes carry a gain bound, slope classes a slope bound; odd variants
/// additionally demand symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassTag {
    Monotone,
    MonotoneOdd,
    Slope,
    SlopeOdd,
}

impl ClassTag {
    pub fn is_slope(self) -> bool {
        matches!(self, ClassTag::Slope | ClassTag::SlopeOdd)
    }

    pub fn requires_odd(self) -> bool {
        matches!(self, ClassTag::MonotoneOdd | ClassTag::SlopeOdd)
    }

    /// Non-odd classes need a nonnegative multiplier impulse response on top
    /// of the L1 bound.
    pub fn requires_nonnegative_impulse(self) -> bool {
        !self.requires_odd()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassTag::Monotone => "monotone",
            ClassTag::MonotoneOdd => "monotone_odd",
            ClassTag::Slope => "slope",
            ClassTag::SlopeOdd => "slope_odd",
        }
    }
}

impl std::str::FromStr for ClassTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monotone" => Ok(ClassTag::Monotone),
            "monotone_odd" => Ok(ClassTag::MonotoneOdd),
            "slope" => Ok(ClassTag::Slope),
            "slope_odd" => Ok(ClassTag::SlopeOdd),
            other => Err(Error::Parse(format!(
                "unknown class '{other}' (expected monotone, monotone_odd, slope, slope_odd)"
            ))),
        }
    }
}

impl std::fmt::Display for ClassTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Concrete static shapes. All evaluate to 0 at 0 once validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// clamp(x, -level, level)
    Saturation { level: f64 },
    /// Zero inside [-width, width], unit slope outside.
    Deadzone { width: f64 },
    /// Piecewise-linear interpolation through the listed points, continued
    /// with the end-segment slopes outside their range. Lookup is
    /// left-continuous at breakpoints.
    PiecewiseLinear { points: Vec<(f64, f64)> },
    /// gain * tanh(x)
    Sigmoid { gain: f64 },
    /// gain * x
    Linear { gain: f64 },
}

impl Shape {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Shape::Saturation { level } => x.clamp(-level, *level),
            Shape::Deadzone { width } => {
                if x > *width {
                    x - width
                } else if x < -*width {
                    x + width
                } else {
                    0.0
                }
            }
            Shape::PiecewiseLinear { points } => eval_pwl(points, x),
            Shape::Sigmoid { gain } => gain * x.tanh(),
            Shape::Linear { gain } => gain * x,
        }
    }

    /// Structural validation independent of any class claim.
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::InvalidNonlinearity(msg));
        match self {
            Shape::Saturation { level } => {
                if !(level.is_finite() && *level > 0.0) {
                    return err(format!("saturation level must be positive, got {level}"));
                }
            }
            Shape::Deadzone { width } => {
                if !(width.is_finite() && *width >= 0.0) {
                    return err(format!("deadzone width must be nonnegative, got {width}"));
                }
            }
            Shape::PiecewiseLinear { points } => {
                if points.len() < 2 {
                    return err("piecewise-linear shape needs at least two points".into());
                }
                for &(x, y) in points {
                    if !(x.is_finite() && y.is_finite()) {
                        return err(format!("non-finite breakpoint ({x}, {y})"));
                    }
                }
                for w in points.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return err(format!(
                            "breakpoints must be strictly increasing, got {} then {}",
                            w[0].0, w[1].0
                        ));
                    }
                }
            }
            Shape::Sigmoid { gain } => {
                if !(gain.is_finite() && *gain > 0.0) {
                    return err(format!("sigmoid gain must be positive, got {gain}"));
                }
            }
            Shape::Linear { gain } => {
                if !gain.is_finite() {
                    return err(format!("linear gain must be finite, got {gain}"));
                }
            }
        }
        Ok(())
    }

    /// Breakpoint abscissae, used to enrich measurement grids.
    fn knots(&self) -> Vec<f64> {
        match self {
            Shape::Saturation { level } => vec![-level, *level],
            Shape::Deadzone { width } => vec![-width, *width],
            Shape::PiecewiseLinear { points } => points.iter().map(|p| p.0).collect(),
            _ => Vec::new(),
        }
    }
}

/// Interval lookup that is left-continuous at breakpoints: x lands in
/// (x_{i-1}, x_i]. End segments extrapolate with their own slopes.
fn eval_pwl(points: &[(f64, f64)], x: f64) -> f64 {
    let seg = |i: usize, x: f64| {
        let (x0, y0) = points[i];
        let (x1, y1) = points[i + 1];
        y0 + (y1 - y0) / (x1 - x0) * (x - x0)
    };
    if x <= points[0].0 {
        return seg(0, x);
    }
    if x > points[points.len() - 1].0 {
        return seg(points.len() - 2, x);
    }
    // partition_point: first index with breakpoint >= x; x in (x_{i-1}, x_i].
    let i = points.partition_point(|p| p.0 < x);
    seg(i - 1, x)
}

/// Measurements of a shape over a grid: monotonicity and oddness flags,
/// the finite-difference slope range, and the sector bounds phi(x)/x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassReport {
    pub monotone: bool,
    pub odd: bool,
    pub min_slope: f64,
    pub max_slope: f64,
    pub min_sector: f64,
    pub max_sector: f64,
}

/// Finite-difference class measurement over a strictly increasing grid with
/// at least two points. Oddness is probed by evaluating at -x for every grid
/// point.
pub fn check_class(shape: &Shape, grid: &[f64]) -> Result<ClassReport> {
    if grid.len() < 2 {
        return Err(Error::InvalidGrid(format!(
            "class check needs at least two grid points, got {}",
            grid.len()
        )));
    }
    for w in grid.windows(2) {
        if !(w[0].is_finite() && w[1].is_finite() && w[1] > w[0]) {
            return Err(Error::InvalidGrid(format!(
                "class-check grid must be finite and strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let vals: Vec<f64> = grid.iter().map(|&x| shape.eval(x)).collect();
    let mut min_slope = f64::INFINITY;
    let mut max_slope = f64::NEG_INFINITY;
    for (w, v) in grid.windows(2).zip(vals.windows(2)) {
        let s = (v[1] - v[0]) / (w[1] - w[0]);
        min_slope = min_slope.min(s);
        max_slope = max_slope.max(s);
    }
    let scale: f64 = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let monotone = min_slope >= -1e-9 * scale;
    let odd = grid.iter().zip(&vals).all(|(&x, &v)| (shape.eval(-x) + v).abs() <= 1e-9 * scale);
    let mut min_sector = f64::INFINITY;
    let mut max_sector = f64::NEG_INFINITY;
    for (&x, &v) in grid.iter().zip(&vals) {
        if x.abs() > 1e-12 {
            let q = v / x;
            min_sector = min_sector.min(q);
            max_sector = max_sector.max(q);
        }
    }
    Ok(ClassReport { monotone, odd, min_slope, max_slope, min_sector, max_sector })
}

/// A shape together with the class claim it has been validated against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    class: ClassTag,
    /// Slope bound for slope classes.
    alpha: Option<f64>,
    /// Gain bound for monotone classes.
    gain_bound: Option<f64>,
    shape: Shape,
}

impl NonlinearitySpec {
    /// Validates `shape` against `class` with bound `bound` (the slope bound
    /// alpha for slope classes, the gain bound gamma for monotone classes).
    /// The check runs on a dense symmetric grid enriched with the shape's
    /// breakpoints.
    pub fn new(class: ClassTag, bound: f64, shape: Shape) -> Result<Self> {
        shape.validate()?;
        if !bound.is_finite() || bound < 0.0 {
            return Err(Error::InvalidNonlinearity(format!(
                "class bound must be a nonnegative finite number, got {bound}"
            )));
        }
        if !class.is_slope() && bound == 0.0 {
            return Err(Error::InvalidNonlinearity(
                "monotone classes need a positive gain bound".into(),
            ));
        }
        let at_zero = shape.eval(0.0);
        if at_zero.abs() > 1e-12 {
            return Err(Error::InvalidNonlinearity(format!(
                "shape must vanish at zero, got {at_zero}"
            )));
        }
        let grid = default_check_grid(&shape);
        let report = check_class(&shape, &grid)?;
        let tol = 1e-9 * (1.0 + bound);
        if !report.monotone {
            return Err(Error::InvalidNonlinearity(format!(
                "shape is not monotone on the check grid (min slope {})",
                report.min_slope
            )));
        }
        if class.requires_odd() && !report.odd {
            return Err(Error::InvalidNonlinearity("shape is not odd".into()));
        }
        if class.is_slope() {
            if report.max_slope > bound + tol {
                return Err(Error::InvalidNonlinearity(format!(
                    "slope {} exceeds the bound {bound}",
                    report.max_slope
                )));
            }
        } else {
            for &x in &grid {
                let v = shape.eval(x);
                if v.abs() > bound * x.abs() + tol {
                    return Err(Error::InvalidNonlinearity(format!(
                        "|phi({x})| = {} exceeds the gain bound {bound} * |x|",
                        v.abs()
                    )));
                }
            }
        }
        let (alpha, gain_bound) =
            if class.is_slope() { (Some(bound), None) } else { (None, Some(bound)) };
        Ok(Self { class, alpha, gain_bound, shape })
    }

    pub fn class(&self) -> ClassTag {
        self.class
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn gain_bound(&self) -> Option<f64> {
        self.gain_bound
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.shape.eval(x)
    }

    pub fn check(&self, grid: &[f64]) -> Result<ClassReport> {
        check_class(&self.shape, grid)
    }
}

fn default_check_grid(shape: &Shape) -> Vec<f64> {
    let mut extent = 10.0f64;
    for k in shape.knots() {
        extent = extent.max(2.5 * k.abs());
    }
    let n = 2001;
    let mut grid: Vec<f64> =
        (0..n).map(|i| -extent + 2.0 * extent * i as f64 / (n - 1) as f64).collect();
    grid.extend(shape.knots());
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * extent.max(1.0));
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AreaVariant {
    Plain,
    Odd,
}

/// Discrete area-inequality residual for a shift `tau` that must be an
/// integer multiple of the sample step. `Plain` returns
/// sum x phi(x) dt - sum x(t - tau) phi(x(t)) dt; `Odd` subtracts the
/// absolute value of the shifted sum instead. Both are nonnegative in the
/// continuum for the matching class, up to discretization error.
pub fn area_residual(
    spec: &NonlinearitySpec,
    x: &SampledSignal,
    tau: f64,
    variant: AreaVariant,
) -> Result<f64> {
    if !tau.is_finite() {
        return Err(Error::ShiftOffGrid { tau, dt: x.dt() });
    }
    let ratio = tau / x.dt();
    let m = ratio.round();
    if (ratio - m).abs() > 1e-6 {
        return Err(Error::ShiftOffGrid { tau, dt: x.dt() });
    }
    let m = m as isize;
    let dt = x.dt();
    let mut direct = 0.0;
    let mut shifted = 0.0;
    for k in 0..x.len() as isize {
        let phi = spec.eval(x.get(k));
        direct += x.get(k) * phi;
        shifted += x.get(k - m) * phi;
    }
    direct *= dt;
    shifted *= dt;
    Ok(match variant {
        AreaVariant::Plain => direct - shifted,
        AreaVariant::Odd => direct - shifted.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn sat(level: f64) -> Shape {
        Shape::Saturation { level }
    }

    #[test]
    fn shape_evaluations() {
        assert_eq!(sat(1.5).eval(2.0), 1.5);
        assert_eq!(sat(1.5).eval(-2.0), -1.5);
        assert_eq!(sat(1.5).eval(0.3), 0.3);
        let dz = Shape::Deadzone { width: 0.5 };
        assert_eq!(dz.eval(0.4), 0.0);
        assert_eq!(dz.eval(1.0), 0.5);
        assert_eq!(dz.eval(-1.0), -0.5);
        let lin = Shape::Linear { gain: 0.7 };
        assert_relative_eq!(lin.eval(2.0), 1.4);
        let sig = Shape::Sigmoid { gain: 2.0 };
        assert_relative_eq!(sig.eval(1.0), 2.0 * 1f64.tanh());
    }

    #[test]
    fn pwl_lookup_and_extrapolation() {
        let pwl = Shape::PiecewiseLinear { points: vec![(-1.0, -2.0), (0.0, 0.0), (1.0, 0.5)] };
        assert_relative_eq!(pwl.eval(0.5), 0.25);
        assert_relative_eq!(pwl.eval(-0.5), -1.0);
        // Beyond the last breakpoint the final segment slope continues.
        assert_relative_eq!(pwl.eval(2.0), 1.0);
        assert_relative_eq!(pwl.eval(-2.0), -4.0);
        // Exactly on a breakpoint.
        assert_relative_eq!(pwl.eval(1.0), 0.5);
        assert_relative_eq!(pwl.eval(0.0), 0.0);
    }

    #[test]
    fn pwl_validation_rejects_bad_points() {
        assert!(Shape::PiecewiseLinear { points: vec![(0.0, 0.0)] }.validate().is_err());
        assert!(Shape::PiecewiseLinear { points: vec![(0.0, 0.0), (0.0, 1.0)] }
            .validate()
            .is_err());
        assert!(Shape::PiecewiseLinear { points: vec![(1.0, 0.0), (0.0, 1.0)] }
            .validate()
            .is_err());
        assert!(Shape::PiecewiseLinear { points: vec![(0.0, f64::NAN), (1.0, 1.0)] }
            .validate()
            .is_err());
    }

    #[test]
    fn class_measurements_on_canonical_shapes() {
        let grid: Vec<f64> = (0..401).map(|i| -2.0 + i as f64 * 0.01).collect();
        let r = check_class(&sat(1.0), &grid).unwrap();
        assert!(r.monotone && r.odd);
        assert_abs_diff_eq!(r.max_slope, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.min_slope, 0.0, epsilon = 1e-9);

        let r = check_class(&Shape::Deadzone { width: 0.5 }, &grid).unwrap();
        assert!(r.monotone && r.odd);
        assert!(r.min_sector >= 0.0 && r.max_sector <= 1.0 + 1e-9);

        let skew = Shape::PiecewiseLinear { points: vec![(-1.0, -0.2), (0.0, 0.0), (1.0, 0.9)] };
        let r = check_class(&skew, &grid).unwrap();
        assert!(r.monotone);
        assert!(!r.odd);

        let sag = Shape::PiecewiseLinear { points: vec![(-1.0, 0.5), (0.0, 0.0), (1.0, 0.5)] };
        let r = check_class(&sag, &grid).unwrap();
        assert!(!r.monotone);
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        assert!(check_class(&sat(1.0), &[0.0]).is_err());
        assert!(check_class(&sat(1.0), &[0.0, 0.0]).is_err());
        assert!(check_class(&sat(1.0), &[1.0, 0.0]).is_err());
        assert!(check_class(&sat(1.0), &[0.0, f64::NAN]).is_err());
    }

    #[test]
    fn spec_validation_enforces_class() {
        assert!(NonlinearitySpec::new(ClassTag::SlopeOdd, 1.0, sat(1.0)).is_ok());
        // Saturation slope is 1, so a bound of 0.5 must fail.
        assert!(NonlinearitySpec::new(ClassTag::Slope, 0.5, sat(1.0)).is_err());
        // Non-odd shape in an odd class.
        let skew = Shape::PiecewiseLinear { points: vec![(-1.0, -0.2), (0.0, 0.0), (1.0, 0.9)] };
        assert!(NonlinearitySpec::new(ClassTag::SlopeOdd, 1.0, skew.clone()).is_err());
        assert!(NonlinearitySpec::new(ClassTag::Slope, 1.0, skew).is_ok());
        // Gain bound for monotone classes.
        assert!(
            NonlinearitySpec::new(ClassTag::Monotone, 1.0, Shape::Linear { gain: 2.0 }).is_err()
        );
        assert!(NonlinearitySpec::new(ClassTag::Monotone, 2.0, Shape::Linear { gain: 2.0 }).is_ok());
        // phi(0) = 0 is mandatory.
        let offset = Shape::PiecewiseLinear { points: vec![(-1.0, 0.5), (1.0, 1.5)] };
        assert!(matches!(
            NonlinearitySpec::new(ClassTag::Monotone, 5.0, offset),
            Err(Error::InvalidNonlinearity(_))
        ));
        // Decreasing shapes are out of scope entirely.
        assert!(NonlinearitySpec::new(ClassTag::Slope, 1.0, Shape::Linear { gain: -0.5 }).is_err());
    }

    #[test]
    fn zero_slope_is_a_valid_slope_class_member() {
        let spec = NonlinearitySpec::new(ClassTag::Slope, 0.0, Shape::Linear { gain: 0.0 });
        assert!(spec.is_ok());
    }

    #[test]
    fn area_residual_identity_pulse() {
        // Unit pulse on [0, 1), identity nonlinearity, tau = 0.5.
        let dt = 0.01;
        let mut xs = vec![1.0; 100];
        xs.extend(vec![0.0; 100]);
        let x = SampledSignal::new(dt, xs).unwrap();
        let spec =
            NonlinearitySpec::new(ClassTag::Slope, 1.0, Shape::Linear { gain: 1.0 }).unwrap();
        let r = area_residual(&spec, &x, 0.5, AreaVariant::Plain).unwrap();
        assert_abs_diff_eq!(r, 0.5, epsilon = 2.0 * dt);
    }

    #[test]
    fn area_residual_odd_beyond_support() {
        let dt = 0.01;
        let mut xs = vec![1.0; 100];
        xs.extend(vec![0.0; 100]);
        let x = SampledSignal::new(dt, xs).unwrap();
        let spec =
            NonlinearitySpec::new(ClassTag::SlopeOdd, 1.0, Shape::Linear { gain: 1.0 }).unwrap();
        // Shift beyond the support: the residual reduces to the direct term.
        let r = area_residual(&spec, &x, 2.0, AreaVariant::Odd).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 2.0 * dt);
        assert!(r > 0.0);
    }

    #[test]
    fn area_residual_negative_shift_matches_manual_sum() {
        let dt = 0.5;
        let x = SampledSignal::new(dt, vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let spec =
            NonlinearitySpec::new(ClassTag::Slope, 1.0, Shape::Linear { gain: 1.0 }).unwrap();
        let direct: f64 = x.samples().iter().map(|v| v * v).sum::<f64>() * dt;
        // tau = -dt shifts the companion signal one sample into the future.
        let shifted: f64 =
            (0..4).map(|k| x.get(k as isize + 1) * x.get(k as isize)).sum::<f64>() * dt;
        let r = area_residual(&spec, &x, -dt, AreaVariant::Plain).unwrap();
        assert_relative_eq!(r, direct - shifted, max_relative = 1e-12);
    }

    #[test]
    fn area_residual_rejects_off_grid_shift() {
        let x = SampledSignal::new(0.01, vec![1.0; 10]).unwrap();
        let spec =
            NonlinearitySpec::new(ClassTag::Slope, 1.0, Shape::Linear { gain: 1.0 }).unwrap();
        assert!(matches!(
            area_residual(&spec, &x, 0.005, AreaVariant::Plain),
            Err(Error::ShiftOffGrid { .. })
        ));
        assert!(area_residual(&spec, &x, f64::NAN, AreaVariant::Plain).is_err());
    }

    proptest! {
        #[test]
        fn canonical_odd_shapes_measure_monotone_odd(
            level in 0.2f64..3.0,
            gain in 0.1f64..2.0,
        ) {
            let grid: Vec<f64> = (0..801).map(|i| -4.0 + i as f64 * 0.01).collect();
            for shape in [
                Shape::Saturation { level },
                Shape::Deadzone { width: level },
                Shape::Sigmoid { gain },
                Shape::Linear { gain },
            ] {
                let r = check_class(&shape, &grid).unwrap();
                prop_assert!(r.monotone);
                prop_assert!(r.odd);
                prop_assert!(r.min_slope >= -1e-9);
            }
        }
    }
}
