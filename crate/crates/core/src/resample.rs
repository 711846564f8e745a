//! Separable resampling by kernel convolution.
//!
//! Output sample `n` sits at `x_src = n / scale + phase` in input index
//! space. B-spline bases (kernels reporting a prefilter degree) are applied
//! to coefficients from the causal/anticausal recursive prefilter.

use std::sync::Arc;

use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::polyalg::rational::{self, Rational};
use crate::zoo::bspline_pole;

/// Row-major grayscale image in double precision.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!("{} samples for a {width}x{height} image", data.len())));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i}")));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Sample at column `x`, row `y`.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { width: self.width, height: self.height, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Sub-image with `crop` pixels removed on every side.
    pub fn crop(&self, crop: usize) -> Result<Self> {
        if 2 * crop >= self.width || 2 * crop >= self.height {
            return Err(Error::TooSmall(format!("cannot crop {crop} from {}x{}", self.width, self.height)));
        }
        let (w, h) = (self.width - 2 * crop, self.height - 2 * crop);
        Ok(Self::from_fn(w, h, |x, y| self.get(x + crop, y + crop)))
    }
}

/// How samples outside the signal are defined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Repeat the edge sample.
    #[default]
    Replicate,
    /// Mirror about the edge sample (whole-sample symmetric).
    Reflect,
    /// Zero outside.
    Zero,
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "replicate" | "clamp" => Ok(Boundary::Replicate),
            "reflect" | "mirror" => Ok(Boundary::Reflect),
            "zero" => Ok(Boundary::Zero),
            _ => Err(Error::Parse(format!("unknown boundary '{s}'"))),
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Replicate => "replicate",
            Boundary::Reflect => "reflect",
            Boundary::Zero => "zero",
        })
    }
}

impl Boundary {
    /// Index of the stored sample standing in for `m`, or `None` for zero.
    pub fn index(self, m: i64, len: usize) -> Option<usize> {
        let n = len as i64;
        if (0..n).contains(&m) {
            return Some(m as usize);
        }
        match self {
            Boundary::Zero => None,
            Boundary::Replicate => Some(m.clamp(0, n - 1) as usize),
            Boundary::Reflect => {
                if n == 1 {
                    return Some(0);
                }
                let period = 2 * (n - 1);
                let k = m.rem_euclid(period);
                Some(if k < n { k } else { period - k } as usize)
            }
        }
    }

    fn sample(self, s: &[f64], m: i64) -> f64 {
        self.index(m, s.len()).map_or(0.0, |i| s[i])
    }
}

/// Kernel, sampling ratio and alignment for one resampling job.
#[derive(Clone)]
pub struct ResamplePlan {
    pub kernel: Arc<dyn Kernel>,
    /// Output samples per input sample.
    pub scale: Rational,
    /// Input-space position of output sample 0.
    pub phase: Rational,
    pub boundary: Boundary,
}

impl std::fmt::Debug for ResamplePlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ResamplePlan")
            .field("scale", &rational::format_rational(&self.scale))
            .field("phase", &rational::format_rational(&self.phase))
            .field("boundary", &self.boundary)
            .finish_non_exhaustive()
    }
}

impl ResamplePlan {
    pub fn new(kernel: Arc<dyn Kernel>, scale: Rational) -> Result<Self> {
        if !scale.is_positive() {
            return Err(Error::InvalidKernel("scale must be positive".into()));
        }
        Ok(Self { kernel, scale, phase: Rational::from_integer(0.into()), boundary: Boundary::default() })
    }

    pub fn with_boundary(self, boundary: Boundary) -> Self {
        Self { boundary, ..self }
    }

    pub fn with_phase(self, phase: Rational) -> Self {
        Self { phase, ..self }
    }

    /// `x_src` for output sample `n`, computed exactly before rounding.
    pub fn source_position(&self, n: usize) -> f64 {
        let x = Rational::from_integer((n as i64).into()) / &self.scale + &self.phase;
        rational::to_f64(&x)
    }
}

/// How many output samples cover an input line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputGrid {
    /// `round(len · scale)` samples, one cell per input sample.
    #[default]
    Cells,
    /// `(len - 1) · scale + 1` samples spanning first to last input sample.
    Endpoints,
}

impl std::fmt::Display for OutputGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutputGrid::Cells => "cells",
            OutputGrid::Endpoints => "endpoints",
        })
    }
}

impl std::str::FromStr for OutputGrid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cells" => Ok(OutputGrid::Cells),
            "endpoints" => Ok(OutputGrid::Endpoints),
            _ => Err(Error::Parse(format!("unknown output grid '{s}'"))),
        }
    }
}

pub fn output_len(len: usize, scale: &Rational, grid: OutputGrid) -> usize {
    let l = Rational::from_integer((len as i64).into());
    let n = match grid {
        OutputGrid::Cells => (l * scale).round(),
        OutputGrid::Endpoints if len == 0 => Rational::from_integer(0.into()),
        OutputGrid::Endpoints => {
            ((l - Rational::from_integer(1.into())) * scale).floor() + Rational::from_integer(1.into())
        }
    };
    n.to_integer().to_usize().unwrap_or(0)
}

/// Precomputed taps for one axis.
#[derive(Clone, Debug)]
struct AxisTaps {
    /// Per output sample: first source index and the weights from there.
    taps: Vec<(i64, Vec<f64>)>,
    lo: i64,
    hi: i64,
}

impl AxisTaps {
    fn new(plan: &ResamplePlan, out_len: usize) -> Self {
        let r = plan.kernel.support();
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        let taps: Vec<(i64, Vec<f64>)> = (0..out_len)
            .map(|n| {
                let x = plan.source_position(n);
                let first = (x - r).ceil() as i64;
                let last = (x + r).floor() as i64;
                lo = lo.min(first);
                hi = hi.max(last);
                let w = (first..=last).map(|m| plan.kernel.eval(x - m as f64)).collect();
                (first, w)
            })
            .collect();
        Self { taps, lo, hi }
    }

    fn apply(&self, line: &[f64], boundary: Boundary, prefilter: Option<u32>) -> Result<Vec<f64>> {
        let out: Vec<f64> = match prefilter {
            None => self
                .taps
                .iter()
                .map(|(first, w)| {
                    w.iter().enumerate().map(|(k, wk)| wk * boundary.sample(line, first + k as i64)).sum()
                })
                .collect(),
            Some(p) => {
                let (offset, coeffs) = prefilter_range(line, p, boundary, self.lo, self.hi)?;
                self.taps
                    .iter()
                    .map(|(first, w)| {
                        let base = (first - offset) as usize;
                        w.iter().zip(&coeffs[base..base + w.len()]).map(|(a, b)| a * b).sum()
                    })
                    .collect()
            }
        };
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("output sample {i}")));
        }
        Ok(out)
    }
}

/// Resamples one line to `out_len` samples.
pub fn resample_1d(signal: &[f64], out_len: usize, plan: &ResamplePlan) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::TooSmall("empty signal".into()));
    }
    AxisTaps::new(plan, out_len).apply(signal, plan.boundary, plan.kernel.prefilter_degree())
}

/// Row pass then column pass into an `out_width × out_height` image.
pub fn resample_2d(image: &Image, plan: &ResamplePlan, out_width: usize, out_height: usize) -> Result<Image> {
    if image.width == 0 || image.height == 0 {
        return Err(Error::TooSmall("empty image".into()));
    }
    let prefilter = plan.kernel.prefilter_degree();
    let xs = AxisTaps::new(plan, out_width);
    let rows: Vec<Vec<f64>> = (0..image.height)
        .into_par_iter()
        .map(|y| xs.apply(image.row(y), plan.boundary, prefilter))
        .collect::<Result<_>>()?;
    let ys = AxisTaps::new(plan, out_height);
    let cols: Vec<Vec<f64>> = (0..out_width)
        .into_par_iter()
        .map(|x| {
            let col: Vec<f64> = rows.iter().map(|r| r[x]).collect();
            ys.apply(&col, plan.boundary, prefilter)
        })
        .collect::<Result<_>>()?;
    Ok(Image::from_fn(out_width, out_height, |x, y| cols[x][y]))
}

/// Resamples with output sizes from `grid`.
pub fn resample_image(image: &Image, plan: &ResamplePlan, grid: OutputGrid) -> Result<Image> {
    let w = output_len(image.width, &plan.scale, grid);
    let h = output_len(image.height, &plan.scale, grid);
    resample_2d(image, plan, w, h)
}

/// Samples beyond which the pole's influence falls below 1e-14.
fn horizon(z: f64) -> usize {
    (1e-14f64.ln() / z.abs().ln()).ceil() as usize
}

/// Interpolating B-spline coefficients of `signal` (extended by `boundary`)
/// for indices `lo..=hi`. Returns the index of the first coefficient and the
/// coefficients.
pub fn prefilter_range(signal: &[f64], p: u32, boundary: Boundary, lo: i64, hi: i64) -> Result<(i64, Vec<f64>)> {
    let z = bspline_pole(p)?;
    let h = horizon(z) as i64;
    let lo = lo.min(0);
    let hi = hi.max(signal.len() as i64 - 1);
    let start = lo - h;
    let ext: Vec<f64> = (start..=hi + h).map(|m| boundary.sample(signal, m)).collect();
    let c = recursive_filter(&ext, z);
    let skip = h as usize;
    Ok((lo, c[skip..c.len() - skip].to_vec()))
}

/// Causal/anticausal first-order filtering with gain `(1 - z)(1 - 1/z)`.
/// Both passes start from their constant-signal steady state.
fn recursive_filter(s: &[f64], z: f64) -> Vec<f64> {
    let n = s.len();
    let gain = (1.0 - z) * (1.0 - 1.0 / z);
    let mut cp = vec![0.0; n];
    cp[0] = s[0] / (1.0 - z);
    for k in 1..n {
        cp[k] = s[k] + z * cp[k - 1];
    }
    let mut cm = vec![0.0; n];
    cm[n - 1] = -z / (1.0 - z) * cp[n - 1];
    for k in (0..n - 1).rev() {
        cm[k] = z * (cm[k + 1] - cp[k]);
    }
    cm.iter().map(|v| v * gain).collect()
}

/// B-spline coefficients for the samples of `signal` themselves.
pub fn bspline_prefilter(signal: &[f64], p: u32, boundary: Boundary) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::TooSmall("empty signal".into()));
    }
    let (_, c) = prefilter_range(signal, p, boundary, 0, signal.len() as i64 - 1)?;
    Ok(c)
}
