//! Serialization boundary: JSON for plants, multipliers, and certificates;
//! compact spec strings for nonlinearities, grids, and excitation signals;
//! and the CSV evidence formats. Every parser validates before handing a
//! value to the numeric layers.

use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::iqc::{Certificate, FdiRow, FrequencyGrid};
use crate::lti::TransferFunction;
use crate::multiplier::MultiplierBasis;
use crate::nonlin::Shape;
use crate::search::BisectStep;
use crate::signal::SampledSignal;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlant {
    num: Vec<f64>,
    den: Vec<f64>,
}

/// Deserializes through an intermediate `Value`. Direct typed parsing
/// saturates oversized literals like 1e999 into infinities, which then
/// cannot be re-serialized; the `Value` parser rejects them up front.
fn typed_from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    Ok(serde_json::from_value(value)?)
}

/// Parses `{"num": [...], "den": [...]}` with coefficients in descending
/// powers, then runs full plant validation.
pub fn plant_from_json(text: &str) -> Result<TransferFunction> {
    let raw: RawPlant = typed_from_json(text)?;
    TransferFunction::new(raw.num, raw.den)
}

pub fn plant_to_json(g: &TransferFunction) -> String {
    let mut s = serde_json::to_string_pretty(g).expect("plants serialize");
    s.push('\n');
    s
}

pub fn multiplier_from_json(text: &str) -> Result<MultiplierBasis> {
    typed_from_json(text)
}

pub fn multiplier_to_json(m: &MultiplierBasis) -> String {
    let mut s = serde_json::to_string_pretty(m).expect("multipliers serialize");
    s.push('\n');
    s
}

pub fn certificate_from_json(text: &str) -> Result<Certificate> {
    typed_from_json(text)
}

pub fn certificate_to_json(cert: &Certificate) -> String {
    let mut s = serde_json::to_string_pretty(cert).expect("certificates serialize");
    s.push('\n');
    s
}

pub fn load_plant(path: &Path) -> Result<TransferFunction> {
    plant_from_json(&std::fs::read_to_string(path)?)
}

pub fn load_multiplier(path: &Path) -> Result<MultiplierBasis> {
    multiplier_from_json(&std::fs::read_to_string(path)?)
}

pub fn load_certificate(path: &Path) -> Result<Certificate> {
    certificate_from_json(&std::fs::read_to_string(path)?)
}

fn parse_f64(field: &str, text: &str) -> Result<f64> {
    let v = f64::from_str(text.trim())
        .map_err(|_| Error::Parse(format!("{field}: expected a number, got {text:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("{field}: must be finite, got {text:?}")));
    }
    Ok(v)
}

/// Parses a nonlinearity spec string:
/// `sat:LEVEL`, `dz:WIDTH`, `lin:GAIN`, `sig:GAIN`, or
/// `pwl:x1,y1;x2,y2;...` with strictly increasing breakpoints.
pub fn parse_phi_spec(text: &str) -> Result<Shape> {
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("nonlinearity spec {text:?} needs kind:args")))?;
    let shape = match kind.trim() {
        "sat" => Shape::Saturation { level: parse_f64("sat level", rest)? },
        "dz" => Shape::Deadzone { width: parse_f64("deadzone width", rest)? },
        "lin" => Shape::Linear { gain: parse_f64("linear gain", rest)? },
        "sig" => Shape::Sigmoid { gain: parse_f64("sigmoid gain", rest)? },
        "pwl" => {
            let mut points = Vec::new();
            for pair in rest.split(';') {
                let (x, y) = pair.split_once(',').ok_or_else(|| {
                    Error::Parse(format!("breakpoint {pair:?} needs the form x,y"))
                })?;
                points.push((parse_f64("breakpoint x", x)?, parse_f64("breakpoint y", y)?));
            }
            Shape::PiecewiseLinear { points }
        }
        other => {
            return Err(Error::Parse(format!(
                "unknown nonlinearity kind {other:?}; expected sat, dz, lin, sig, or pwl"
            )))
        }
    };
    shape.validate()?;
    Ok(shape)
}

/// Parses `WMIN:WMAX:N` into a logarithmic grid with the zero sample and
/// tail limit enabled.
pub fn parse_grid_spec(text: &str) -> Result<FrequencyGrid> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("grid spec {text:?} needs the form wmin:wmax:n")));
    }
    let wmin = parse_f64("wmin", parts[0])?;
    let wmax = parse_f64("wmax", parts[1])?;
    let n: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("grid size: expected an integer, got {:?}", parts[2])))?;
    FrequencyGrid::log(wmin, wmax, n)
}

/// Excitation signal shapes for the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputSignalSpec {
    /// Constant `amplitude` for `t < width`, zero after.
    Pulse { amplitude: f64, width: f64 },
    /// `amplitude * exp(-t/tau) * cos(omega t)`.
    ExpDecay { amplitude: f64, tau: f64, omega: f64 },
    /// Sinusoid sweeping linearly from `w0` to `w1` over the sampled window.
    Chirp { amplitude: f64, w0: f64, w1: f64 },
}

impl FromStr for InputSignalSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let spec = match parts.as_slice() {
            ["pulse", a, w] => InputSignalSpec::Pulse {
                amplitude: parse_f64("pulse amplitude", a)?,
                width: parse_f64("pulse width", w)?,
            },
            ["expdecay", a, tau, omega] => InputSignalSpec::ExpDecay {
                amplitude: parse_f64("decay amplitude", a)?,
                tau: parse_f64("decay time constant", tau)?,
                omega: parse_f64("decay frequency", omega)?,
            },
            ["chirp", a, w0, w1] => InputSignalSpec::Chirp {
                amplitude: parse_f64("chirp amplitude", a)?,
                w0: parse_f64("chirp start frequency", w0)?,
                w1: parse_f64("chirp end frequency", w1)?,
            },
            _ => {
                return Err(Error::Parse(format!(
                    "unknown input spec {text:?}; expected pulse:a:w, expdecay:a:tau:w, or chirp:a:w0:w1"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl InputSignalSpec {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            InputSignalSpec::Pulse { width, .. } => width > 0.0,
            InputSignalSpec::ExpDecay { tau, omega, .. } => tau > 0.0 && omega >= 0.0,
            InputSignalSpec::Chirp { w0, w1, .. } => w0 >= 0.0 && w1 >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parse(format!("input spec out of range: {self:?}")))
        }
    }

    pub fn sample(&self, dt: f64, steps: usize) -> Result<SampledSignal> {
        if !(dt.is_finite() && dt > 0.0) || steps == 0 {
            return Err(Error::InvalidSignal(format!(
                "sampling needs dt > 0 and at least one step, got dt = {dt}, steps = {steps}"
            )));
        }
        let horizon = steps as f64 * dt;
        let samples = (0..steps)
            .map(|k| {
                let t = k as f64 * dt;
                match *self {
                    InputSignalSpec::Pulse { amplitude, width } => {
                        if t < width {
                            amplitude
                        } else {
                            0.0
                        }
                    }
                    InputSignalSpec::ExpDecay { amplitude, tau, omega } => {
                        amplitude * (-t / tau).exp() * (omega * t).cos()
                    }
                    InputSignalSpec::Chirp { amplitude, w0, w1 } => {
                        amplitude * (w0 * t + (w1 - w0) * t * t / (2.0 * horizon)).sin()
                    }
                }
            })
            .collect();
        SampledSignal::new(dt, samples)
    }
}

/// Twelve significant digits; infinities spelled out, negative zero folded
/// into zero so equal values always print identically.
pub fn csv_number(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.11e}")
}

pub const FDI_CSV_HEADER: &str = "omega,re_G,im_G,re_M,im_M,fdi_value";

/// FDI evidence table, one row per scanned frequency in scan order.
pub fn write_fdi_csv(rows: &[FdiRow]) -> String {
    let mut out = String::from(FDI_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_number(row.omega),
            csv_number(row.g.re),
            csv_number(row.g.im),
            csv_number(row.m.re),
            csv_number(row.m.im),
            csv_number(row.value),
        ));
    }
    out
}

pub const TRACE_CSV_HEADER: &str = "alpha,certified,margin";

/// Bisection trial log in trial order.
pub fn write_trace_csv(trace: &[BisectStep]) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for step in trace {
        out.push_str(&format!(
            "{},{},{}\n",
            csv_number(step.alpha),
            u8::from(step.certified),
            csv_number(step.margin),
        ));
    }
    out
}
