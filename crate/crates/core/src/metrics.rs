//! Zone-plate experiment and image comparison metrics.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::polyalg::rational::{self, int, rat, Rational};
use crate::resample::{resample_2d, Boundary, Image, OutputGrid, ResamplePlan};
use crate::staircase::edge_sample;

/// `(1 + cos(2πF(x² + y²))) / 2` sampled at `(i·dx, j·dx)`, `n × n` samples.
pub fn zone_plate(n: usize, frequency: f64, dx: &Rational) -> Image {
    let step = rational::to_f64(dx);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let y = j as f64 * step;
            (0..n)
                .map(|i| {
                    let x = i as f64 * step;
                    0.5 * (1.0 + (2.0 * PI * frequency * (x * x + y * y)).cos())
                })
                .collect()
        })
        .collect();
    Image::from_fn(n, n, |x, y| rows[y][x])
}

/// What the resampler sees beyond the sampled square.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Margin {
    /// The pattern itself, sampled on the same lattice past the edges.
    #[default]
    Analytic,
    /// The source square only, extended by a boundary policy.
    Policy(Boundary),
}

impl std::str::FromStr for Margin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "analytic" => Ok(Margin::Analytic),
            other => other.parse().map(Margin::Policy),
        }
    }
}

impl std::fmt::Display for Margin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Margin::Analytic => write!(f, "analytic"),
            Margin::Policy(b) => write!(f, "{b}"),
        }
    }
}

/// Source and ground-truth grids of the zone-plate experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ZonePlateSetup {
    pub frequency: f64,
    /// Source samples per unit length.
    pub source_rate: u32,
    /// Integer upsampling factor.
    pub upscale: u32,
    /// `Endpoints`: both ends of `[0, 1]` sampled (31 → 361).
    /// `Cells`: the right end excluded (30 → 360).
    pub grid: OutputGrid,
    pub margin: Margin,
}

impl Default for ZonePlateSetup {
    fn default() -> Self {
        Self { frequency: 6.0, source_rate: 30, upscale: 12, grid: OutputGrid::Endpoints, margin: Margin::Analytic }
    }
}

impl ZonePlateSetup {
    fn samples(&self, rate: u32) -> usize {
        match self.grid {
            OutputGrid::Endpoints => rate as usize + 1,
            OutputGrid::Cells => rate as usize,
        }
    }

    pub fn source(&self) -> Image {
        zone_plate(self.samples(self.source_rate), self.frequency, &rat(1, self.source_rate as i64))
    }

    pub fn ground_truth(&self) -> Image {
        let rate = self.source_rate * self.upscale;
        zone_plate(self.samples(rate), self.frequency, &rat(1, rate as i64))
    }

    pub fn output_size(&self) -> usize {
        self.samples(self.source_rate * self.upscale)
    }

    /// Source grid padded by `m` samples of the pattern on every side.
    fn padded_source(&self, m: usize) -> Image {
        let n = self.samples(self.source_rate) + 2 * m;
        let step = 1.0 / self.source_rate as f64;
        let f = self.frequency;
        Image::from_fn(n, n, |x, y| {
            let (u, v) = ((x as f64 - m as f64) * step, (y as f64 - m as f64) * step);
            0.5 * (1.0 + (2.0 * PI * f * (u * u + v * v)).cos())
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ZonePlateResult {
    pub rmse: f64,
    /// RMSE with `crop` pixels removed on every side.
    pub rmse_interior: f64,
    pub crop: usize,
    pub gcs: f64,
    #[serde(skip)]
    pub image: Image,
}

/// Samples padded around the source for analytic margins. Prefiltered
/// kernels get extra room so the recursive filter settles before the
/// visible square.
fn analytic_pad(kernel: &dyn Kernel) -> usize {
    let reach = kernel.support().ceil() as usize + 1;
    match kernel.prefilter_degree() {
        Some(_) => reach + 24,
        None => reach,
    }
}

/// Upsamples the zone plate with `kernel` and compares to the ground truth.
pub fn zone_plate_experiment(kernel: Arc<dyn Kernel>, setup: &ZonePlateSetup) -> Result<ZonePlateResult> {
    let up = setup.upscale as usize;
    let crop = kernel.support().ceil() as usize * up;
    let n = setup.output_size();
    let image = match setup.margin {
        Margin::Policy(boundary) => {
            let plan = ResamplePlan::new(kernel, int(setup.upscale as i64))?.with_boundary(boundary);
            resample_2d(&setup.source(), &plan, n, n)?
        }
        Margin::Analytic => {
            let m = analytic_pad(kernel.as_ref());
            let plan = ResamplePlan::new(kernel, int(setup.upscale as i64))?;
            let src = setup.padded_source(m);
            let full = (src.width() - 1) * up + 1;
            let big = resample_2d(&src, &plan, full, full)?;
            Image::from_fn(n, n, |x, y| big.get(x + m * up, y + m * up))
        }
    };
    let truth = setup.ground_truth();
    Ok(ZonePlateResult {
        rmse: rmse(&image, &truth, 0)?,
        rmse_interior: rmse(&image, &truth, crop)?,
        crop,
        gcs: gcs(&image, &truth)?,
        image,
    })
}

fn same_dims(a: &Image, b: &Image) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch(format!("{}x{} vs {}x{}", a.width(), a.height(), b.width(), b.height())));
    }
    Ok(())
}

/// Root mean square difference after removing `crop` pixels per side.
pub fn rmse(a: &Image, b: &Image, crop: usize) -> Result<f64> {
    same_dims(a, b)?;
    let (a, b) = if crop > 0 { (a.crop(crop)?, b.crop(crop)?) } else { (a.clone(), b.clone()) };
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / a.data().len() as f64).sqrt())
}

/// Per-pixel Scharr derivatives; `gx` along columns, `gy` along rows.
#[derive(Clone, Debug)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

impl GradientField {
    pub fn magnitude(&self) -> Image {
        Image::from_fn(self.width, self.height, |x, y| {
            let k = y * self.width + x;
            self.gx[k].hypot(self.gy[k])
        })
    }

    fn interior(&self) -> Self {
        let (w, h) = (self.width - 2, self.height - 2);
        let pick = |v: &[f64]| {
            (1..=h).flat_map(|y| (1..=w).map(move |x| (x, y))).map(|(x, y)| v[y * self.width + x]).collect()
        };
        Self { width: w, height: h, gx: pick(&self.gx), gy: pick(&self.gy) }
    }
}

/// 3×3 Scharr correlation with replicate borders. The side weights are
/// 1 and √12, normalized so a unit ramp has unit response.
pub fn scharr_gradients(img: &Image) -> Result<GradientField> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::TooSmall(format!("Scharr needs at least 3x3, got {w}x{h}")));
    }
    let s12 = 12f64.sqrt();
    let norm = 1.0 / (2.0 * (2.0 + s12));
    let at = |x: i64, y: i64| img.get(x.clamp(0, w as i64 - 1) as usize, y.clamp(0, h as i64 - 1) as usize);
    let mut gx = Vec::with_capacity(w * h);
    let mut gy = Vec::with_capacity(w * h);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let dx = (at(x + 1, y - 1) - at(x - 1, y - 1))
                + s12 * (at(x + 1, y) - at(x - 1, y))
                + (at(x + 1, y + 1) - at(x - 1, y + 1));
            let dy = (at(x - 1, y + 1) - at(x - 1, y - 1))
                + s12 * (at(x, y + 1) - at(x, y - 1))
                + (at(x + 1, y + 1) - at(x + 1, y - 1));
            gx.push(dx * norm);
            gy.push(dy * norm);
        }
    }
    Ok(GradientField { width: w, height: h, gx, gy })
}

fn cosine(a: &GradientField, b: &GradientField) -> Result<f64> {
    let dot: f64 = (0..a.gx.len()).map(|k| a.gx[k] * b.gx[k] + a.gy[k] * b.gy[k]).sum();
    let na: f64 = (0..a.gx.len()).map(|k| a.gx[k] * a.gx[k] + a.gy[k] * a.gy[k]).sum();
    let nb: f64 = (0..b.gx.len()).map(|k| b.gx[k] * b.gx[k] + b.gy[k] * b.gy[k]).sum();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Gradient cosine similarity over the whole frame.
pub fn gcs(a: &Image, b: &Image) -> Result<f64> {
    same_dims(a, b)?;
    cosine(&scharr_gradients(a)?, &scharr_gradients(b)?)
}

/// Gradient cosine similarity excluding the 1-pixel border.
pub fn gcs_interior(a: &Image, b: &Image) -> Result<f64> {
    same_dims(a, b)?;
    cosine(&scharr_gradients(a)?.interior(), &scharr_gradients(b)?.interior())
}

/// Affine rescale of raw scores: the worst kernel maps to 0 and the
/// ground-truth value to 100.
pub fn standardize_scores(
    raw: &BTreeMap<String, f64>,
    higher_better: bool,
    ground_truth: f64,
) -> Result<BTreeMap<String, f64>> {
    if raw.len() < 2 {
        return Err(Error::TooSmall("need at least two kernels".into()));
    }
    let values = raw.values().copied();
    let worst =
        if higher_better { values.fold(f64::INFINITY, f64::min) } else { values.fold(f64::NEG_INFINITY, f64::max) };
    let span = ground_truth - worst;
    if span == 0.0 || !span.is_finite() {
        return Err(Error::DegenerateRange(format!("worst {worst} equals ground truth")));
    }
    Ok(raw.iter().map(|(k, v)| (k.clone(), 100.0 * (v - worst) / span)).collect())
}

/// Rasterized diagonal edge `d(i - j)` on a `size × size` grid.
pub fn edge_image(size: usize, theta: &Rational) -> Image {
    let vals: Vec<f64> = (-2..=2).map(|d| rational::to_f64(&edge_sample(theta, d, 0))).collect();
    Image::from_fn(size, size, |x, y| {
        let d = (x as i64 - y as i64).clamp(-2, 2);
        vals[(d + 2) as usize]
    })
}

/// Upsampled diagonal edge and its gradient magnitude.
#[derive(Clone, Debug)]
pub struct EdgeField {
    /// Interpolant on a grid `upscale` times finer than the samples.
    pub interpolant: Image,
    /// Scharr gradient magnitude per unit of source spacing.
    pub magnitude: Image,
    pub upscale: u32,
}

/// Interpolates a `size × size` patch of the rasterized edge. The patch is
/// cut from a larger raster so its borders see real edge samples.
pub fn edge_field(kernel: Arc<dyn Kernel>, theta: &Rational, size: usize, upscale: u32) -> Result<EdgeField> {
    if size < 2 || upscale == 0 {
        return Err(Error::TooSmall(format!("edge field {size} samples at {upscale}x")));
    }
    let m = kernel.support().ceil() as usize + 1 + kernel.prefilter_degree().map_or(0, |_| 24);
    let raster = edge_image(size + 2 * m, theta);
    let up = upscale as usize;
    let full = (raster.width() - 1) * up + 1;
    let plan = ResamplePlan::new(kernel, int(upscale as i64))?;
    let big = resample_2d(&raster, &plan, full, full)?;
    let n = (size - 1) * up + 1;
    let interpolant = Image::from_fn(n, n, |x, y| big.get(x + m * up, y + m * up));
    let magnitude = scharr_gradients(&interpolant)?.magnitude().map(|g| g * upscale as f64);
    Ok(EdgeField { interpolant, magnitude, upscale })
}

/// Line segment of an isoline, in pixel coordinates `(x, y)`.
pub type Segment = ((f64, f64), (f64, f64));

/// Marching-squares isoline segments of `img` at `level`. Saddle cells are
/// resolved by the cell mean.
pub fn isolines(img: &Image, level: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    let lerp = |a: f64, b: f64| if a == b { 0.5 } else { (level - a) / (b - a) };
    for y in 0..img.height().saturating_sub(1) {
        for x in 0..img.width().saturating_sub(1) {
            let v = [img.get(x, y), img.get(x + 1, y), img.get(x + 1, y + 1), img.get(x, y + 1)];
            let (xf, yf) = (x as f64, y as f64);
            // edge crossings: top, right, bottom, left
            let edges = [
                (v[0], v[1], (xf + lerp(v[0], v[1]), yf)),
                (v[1], v[2], (xf + 1.0, yf + lerp(v[1], v[2]))),
                (v[3], v[2], (xf + lerp(v[3], v[2]), yf + 1.0)),
                (v[0], v[3], (xf, yf + lerp(v[0], v[3]))),
            ];
            let crossing: Vec<(usize, (f64, f64))> = edges
                .iter()
                .enumerate()
                .filter(|(_, (a, b, _))| (*a >= level) != (*b >= level))
                .map(|(k, (_, _, p))| (k, *p))
                .collect();
            match crossing.len() {
                2 => out.push((crossing[0].1, crossing[1].1)),
                4 => {
                    let above = (v.iter().sum::<f64>() / 4.0 >= level) == (v[0] >= level);
                    if above {
                        out.push((crossing[0].1, crossing[1].1));
                        out.push((crossing[2].1, crossing[3].1));
                    } else {
                        out.push((crossing[0].1, crossing[3].1));
                        out.push((crossing[1].1, crossing[2].1));
                    }
                }
                _ => {}
            }
        }
    }
    out
}
