//! Reference interpolation kernels in a uniform representation.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::kernelspace::{solve_spec, KernelSpec, PiecewiseKernel};
use crate::optimizer::{optimize_kernel, DesignMetric, SearchConfig};
use crate::polyalg::rational::{self, format_rational, int, parse_rational, rat, Rational};
use crate::polyalg::MultiPoly;
use crate::staircase::{eg_numeric, eg_squared, QuadratureConfig};

/// Default truncation `K` of the cardinal B-spline expansions.
pub const BSPLINE_TRUNCATION: usize = 20;

/// Every kernel the tool knows by name.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelName {
    Nearest,
    Linear,
    KeysCubic,
    Keys33,
    Lanczos(u32),
    Lagrange(u32),
    Schaum,
    MitchellNetravali,
    BSplineInterp { degree: u32, truncation: usize },
    SincTrunc(u32),
    Designed { spec: KernelSpec, metric: DesignMetric },
}

impl KernelName {
    /// Label in the notation of the result tables.
    pub fn label(&self) -> String {
        match self {
            KernelName::Nearest => "NN".into(),
            KernelName::Linear => "Linear".into(),
            KernelName::KeysCubic => "K_(2,3)_S".into(),
            KernelName::Keys33 => "Ks_(3,3)".into(),
            KernelName::Lanczos(r) => format!("Ls_{r}"),
            KernelName::Lagrange(r) => format!("Lg_({r},{})", 2 * r - 1),
            KernelName::Schaum => "Sc_(2,3)".into(),
            KernelName::MitchellNetravali => "MN_(2,3)".into(),
            KernelName::BSplineInterp { degree, .. } => format!("beta*_{degree}"),
            KernelName::SincTrunc(r) => format!("sinc_{r}"),
            KernelName::Designed { spec, metric } => match metric {
                DesignMetric::EgHalf => spec.label(),
                DesignMetric::EgAvg => format!("{}<avg>", spec.label()),
            },
        }
    }
}

impl fmt::Display for KernelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelName::Nearest => write!(f, "nearest"),
            KernelName::Linear => write!(f, "linear"),
            KernelName::KeysCubic => write!(f, "keys"),
            KernelName::Keys33 => write!(f, "keys33"),
            KernelName::Lanczos(r) => write!(f, "lanczos:{r}"),
            KernelName::Lagrange(r) => write!(f, "lagrange:{r}"),
            KernelName::Schaum => write!(f, "schaum"),
            KernelName::MitchellNetravali => write!(f, "mitchell-netravali"),
            KernelName::BSplineInterp { degree, truncation } if *truncation == BSPLINE_TRUNCATION => {
                write!(f, "bspline:{degree}")
            }
            KernelName::BSplineInterp { degree, truncation } => write!(f, "bspline:{degree}:{truncation}"),
            KernelName::SincTrunc(r) => write!(f, "sinc:{r}"),
            KernelName::Designed { spec, metric } => {
                let r = format_rational(&spec.radius());
                let s = if spec.smooth() { "_S" } else { "" };
                let m = if *metric == DesignMetric::EgAvg { ":avg" } else { "" };
                write!(f, "designed:K_{r}_{}{s}{m}", spec.degree())
            }
        }
    }
}

fn parse_u32(s: &str, what: &str) -> Result<u32> {
    s.parse().map_err(|_| Error::UnknownKernel(format!("bad {what} '{s}'")))
}

/// Parses `K_2_4_S`, `K_5/2_3` and `K_(5/2,3)_S`.
pub fn parse_spec_label(s: &str) -> Result<KernelSpec> {
    let bad = || Error::UnknownKernel(format!("bad kernel label '{s}'"));
    let upper = s.to_ascii_uppercase();
    let body = upper.strip_prefix("K_").or_else(|| upper.strip_prefix('K')).ok_or_else(bad)?;
    let (body, smooth) = match body.strip_suffix("_S") {
        Some(b) => (b, true),
        None => (body, false),
    };
    let body = body.trim_start_matches('(').trim_end_matches(')');
    let parts: Vec<&str> = body.split([',', '_']).collect();
    if parts.len() != 2 {
        return Err(bad());
    }
    let r = parse_rational(parts[0]).map_err(|_| bad())?;
    let p = parse_u32(parts[1], "degree")?;
    KernelSpec::from_radius(&r, p, smooth)
}

impl FromStr for KernelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let parts: Vec<&str> = lower.split(':').collect();
        let head = parts[0];
        let arg = |k: usize, what: &str| {
            parts.get(k).copied().ok_or_else(|| Error::UnknownKernel(format!("{head} needs a {what}")))
        };
        if parts.len() > 3 {
            return Err(Error::UnknownKernel(s.to_string()));
        }
        Ok(match head {
            "nearest" | "nn" => KernelName::Nearest,
            "linear" | "lin" => KernelName::Linear,
            "keys" | "catmull-rom" => KernelName::KeysCubic,
            "keys33" | "ks33" => KernelName::Keys33,
            "lanczos" | "ls" => KernelName::Lanczos(parse_u32(arg(1, "radius")?, "radius")?),
            "lagrange" | "lg" => KernelName::Lagrange(parse_u32(arg(1, "radius")?, "radius")?),
            "schaum" | "sc" => KernelName::Schaum,
            "mitchell-netravali" | "mn" => KernelName::MitchellNetravali,
            "bspline" => KernelName::BSplineInterp {
                degree: parse_u32(arg(1, "degree")?, "degree")?,
                truncation: match parts.get(2) {
                    Some(k) => parse_u32(k, "truncation")? as usize,
                    None => BSPLINE_TRUNCATION,
                },
            },
            "sinc" => KernelName::SincTrunc(parse_u32(arg(1, "radius")?, "radius")?),
            "designed" => {
                let metric = match parts.get(2).copied() {
                    None | Some("half") => DesignMetric::EgHalf,
                    Some("avg") => DesignMetric::EgAvg,
                    Some(m) => return Err(Error::UnknownKernel(format!("unknown metric '{m}'"))),
                };
                KernelName::Designed { spec: parse_spec_label(arg(1, "label")?)?, metric }
            }
            _ if head.starts_with('k') => {
                if parts.len() > 1 {
                    return Err(Error::UnknownKernel(s.to_string()));
                }
                KernelName::Designed { spec: parse_spec_label(head)?, metric: DesignMetric::EgHalf }
            }
            _ => return Err(Error::UnknownKernel(s.to_string())),
        })
    }
}

/// Kernel representation: exact piecewise polynomial or a numeric function.
#[derive(Clone)]
pub enum KernelForm {
    Piecewise(PiecewiseKernel),
    Analytic(Arc<dyn Kernel>),
}

/// A named kernel ready for evaluation and resampling.
#[derive(Clone)]
pub struct ReferenceKernel {
    pub name: KernelName,
    pub form: KernelForm,
    pub interpolating: bool,
}

impl fmt::Debug for ReferenceKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceKernel")
            .field("name", &self.name)
            .field("interpolating", &self.interpolating)
            .finish_non_exhaustive()
    }
}

impl ReferenceKernel {
    pub fn piecewise(&self) -> Option<&PiecewiseKernel> {
        match &self.form {
            KernelForm::Piecewise(k) => Some(k),
            KernelForm::Analytic(_) => None,
        }
    }

    /// Double-precision evaluator.
    pub fn numeric(&self) -> Result<Arc<dyn Kernel>> {
        Ok(match &self.form {
            KernelForm::Piecewise(k) => Arc::new(k.to_numeric()?),
            KernelForm::Analytic(k) => Arc::clone(k),
        })
    }

    /// The kernel the resampler convolves with. Cardinal B-splines are
    /// applied as the basis spline on prefiltered coefficients.
    pub fn resampler(&self) -> Result<Arc<dyn Kernel>> {
        match self.name {
            KernelName::BSplineInterp { degree, .. } => Ok(Arc::new(BSplineBasis::new(degree)?)),
            _ => self.numeric(),
        }
    }

    /// `E_g(θ)`: exact for piecewise polynomials, by quadrature otherwise.
    /// The flag tells whether the exact path was used.
    pub fn eg(&self, theta: f64, quad: &QuadratureConfig) -> Result<(f64, bool)> {
        match &self.form {
            KernelForm::Piecewise(k) => {
                let t = rational::from_f64(theta)?;
                let v = eg_squared(k, &t)?.value_f64().ok_or_else(|| Error::Symbolic(k.free_vars()))?;
                Ok((v.sqrt(), k.is_exact()))
            }
            KernelForm::Analytic(k) => Ok((eg_numeric(k.as_ref(), theta, quad)?, false)),
        }
    }
}

/// The 28 kernels of the comparison table, sorted by support then degree.
pub fn table_kernels() -> Result<Vec<KernelName>> {
    let designed = |twice_r: u32, p: u32, smooth: bool| -> Result<KernelName> {
        Ok(KernelName::Designed { spec: KernelSpec::new(twice_r, p, smooth)?, metric: DesignMetric::EgHalf })
    };
    let bspline = |degree| KernelName::BSplineInterp { degree, truncation: BSPLINE_TRUNCATION };
    Ok(vec![
        KernelName::Linear,
        designed(3, 2, false)?,
        designed(3, 4, false)?,
        designed(3, 4, true)?,
        designed(4, 2, false)?,
        designed(4, 3, false)?,
        KernelName::Lagrange(2),
        KernelName::Schaum,
        KernelName::KeysCubic,
        KernelName::MitchellNetravali,
        designed(4, 4, false)?,
        designed(4, 4, true)?,
        KernelName::Lanczos(2),
        designed(5, 2, false)?,
        designed(5, 3, false)?,
        designed(5, 3, true)?,
        designed(5, 4, false)?,
        designed(5, 4, true)?,
        designed(6, 2, false)?,
        designed(6, 3, false)?,
        designed(6, 3, true)?,
        KernelName::Keys33,
        designed(6, 4, false)?,
        designed(6, 4, true)?,
        KernelName::Lagrange(3),
        KernelName::Lanczos(3),
        bspline(2),
        bspline(3),
    ])
}

/// Builds a named kernel; designed kernels use the default search.
pub fn reference_kernel(name: &KernelName) -> Result<ReferenceKernel> {
    reference_kernel_with(name, &SearchConfig::default())
}

pub fn reference_kernel_with(name: &KernelName, search: &SearchConfig) -> Result<ReferenceKernel> {
    let piecewise = |k: PiecewiseKernel, interpolating| ReferenceKernel {
        name: *name,
        form: KernelForm::Piecewise(k),
        interpolating,
    };
    let analytic = |k: Arc<dyn Kernel>, interpolating| ReferenceKernel {
        name: *name,
        form: KernelForm::Analytic(k),
        interpolating,
    };
    Ok(match *name {
        KernelName::Nearest => analytic(Arc::new(Nearest), true),
        KernelName::Linear => piecewise(unique_kernel(KernelSpec::new(2, 1, false)?)?, true),
        KernelName::KeysCubic => piecewise(unique_kernel(KernelSpec::new(4, 3, true)?)?, true),
        KernelName::Keys33 => piecewise(keys33()?, true),
        KernelName::Lanczos(r) => analytic(Arc::new(Lanczos::new(r)?), true),
        KernelName::Lagrange(r) => piecewise(lagrange(r)?, true),
        KernelName::Schaum => piecewise(schaum()?, true),
        KernelName::MitchellNetravali => piecewise(mitchell_netravali()?, false),
        KernelName::BSplineInterp { degree, truncation } => {
            analytic(Arc::new(CardinalBSpline::new(degree, truncation)?), true)
        }
        KernelName::SincTrunc(r) => analytic(Arc::new(SincTrunc::new(r)?), true),
        KernelName::Designed { spec, metric } => piecewise(optimize_kernel(&spec, metric, search)?.kernel, true),
    })
}

fn unique_kernel(spec: KernelSpec) -> Result<PiecewiseKernel> {
    let sol = solve_spec(&spec).into_solution().ok_or_else(|| Error::Overconstrained(spec.label()))?;
    if !sol.is_unique() {
        return Err(Error::InvalidKernel(format!("{} is not unique", spec.label())));
    }
    Ok(sol.symbolic_kernel())
}

fn keys33() -> Result<PiecewiseKernel> {
    let rows = [[12, 0, -28, 16], [0, -8, 15, -7], [0, 1, -2, 1]];
    let coeffs = rows.iter().map(|r| r.iter().map(|&c| rat(c, 12)).collect()).collect();
    PiecewiseKernel::from_rationals(KernelSpec::new(6, 3, true)?, coeffs)
}

/// Local Lagrange kernel over `2r` nodes; piece `i` is the basis polynomial
/// of node `-i` on nodes `-r+1..=r`, in the local coordinate.
pub fn lagrange(r: u32) -> Result<PiecewiseKernel> {
    if r == 0 {
        return Err(Error::InvalidKernel("Lagrange radius must be positive".into()));
    }
    let r = r as i64;
    let spec = KernelSpec::new(2 * r as u32, 2 * r as u32 - 1, false)?;
    let v = MultiPoly::var("v");
    let mut coeffs = Vec::new();
    for i in 0..r {
        let node = -i;
        let mut basis = MultiPoly::one().with_vars(&["v"]);
        for n in (-r + 1..=r).filter(|&n| n != node) {
            let factor =
                (&v - &MultiPoly::constant(int(n))).scale(&(Rational::from_integer((node - n).into())).recip());
            basis = &basis * &factor;
        }
        let mut row: Vec<Rational> = basis.coefficients_in("v")?.iter().map(|c| c.constant_term()).collect();
        row.resize(spec.degree() as usize + 1, Rational::from_integer(0.into()));
        coeffs.push(row);
    }
    PiecewiseKernel::from_rationals(spec, coeffs)
}

/// Converts per-piece polynomials in `|x|` to local-coordinate rows of an
/// even kernel.
fn from_abs_polys(spec: KernelSpec, pieces: &[MultiPoly]) -> Result<PiecewiseKernel> {
    let v = MultiPoly::var("v");
    let coeffs = pieces
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let local = p.with_vars(&["x"]).substitute("x", &(&v + &MultiPoly::constant(int(i as i64))))?;
            let mut row: Vec<Rational> =
                local.with_vars(&["v"]).coefficients_in("v")?.iter().map(|c| c.constant_term()).collect();
            row.resize(spec.degree() as usize + 1, int(0));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    PiecewiseKernel::from_rationals(spec, coeffs)
}

fn poly_x(coeffs: &[i64], den: i64) -> MultiPoly {
    coeffs
        .iter()
        .enumerate()
        .fold(MultiPoly::zero(), |acc, (k, &c)| &acc + &MultiPoly::monomial(rat(c, den), &[("x", k as u32)]))
}

fn schaum() -> Result<PiecewiseKernel> {
    let x = MultiPoly::var("x");
    let c = |n: i64| MultiPoly::constant(int(n));
    let inner = &(&c(1) - &x) * &(&(&c(5) + &x.scale(&int(4))) - &(&x * &x).scale(&int(5)));
    let outer = &(&(&c(2) - &x) * &(&c(1) - &x)) * &(&c(12) - &x.scale(&int(5)));
    let pieces = [inner.scale(&rat(3, 15)), outer.scale(&rat(1, 15))];
    from_abs_polys(KernelSpec::new(4, 3, false)?, &pieces)
}

fn mitchell_netravali() -> Result<PiecewiseKernel> {
    let pieces = [poly_x(&[16, 0, -36, 21], 18), poly_x(&[32, -60, 36, -7], 18)];
    from_abs_polys(KernelSpec::new(4, 3, true)?, &pieces)
}

/// Box kernel on `[-1/2, 1/2)`, so exactly one sample is picked at ties.
#[derive(Clone, Copy, Debug)]
pub struct Nearest;

impl Kernel for Nearest {
    fn eval(&self, x: f64) -> f64 {
        if (-0.5..0.5).contains(&x) {
            1.0
        } else {
            0.0
        }
    }
    fn support(&self) -> f64 {
        0.5
    }
    fn derivative(&self, _x: f64) -> Option<f64> {
        Some(0.0)
    }
    fn breakpoint_offset(&self) -> f64 {
        0.5
    }
}

/// Normalized sinc and its derivative.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - (PI * x).powi(2) / 6.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn sinc_derivative(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        -PI * PI * x / 3.0
    } else {
        ((PI * x).cos() - sinc(x)) / x
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Lanczos {
    radius: f64,
}

impl Lanczos {
    pub fn new(r: u32) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidKernel("Lanczos radius must be positive".into()));
        }
        Ok(Self { radius: r as f64 })
    }
}

impl Kernel for Lanczos {
    fn eval(&self, x: f64) -> f64 {
        if x.abs() >= self.radius {
            0.0
        } else {
            sinc(x) * sinc(x / self.radius)
        }
    }
    fn support(&self) -> f64 {
        self.radius
    }
    fn derivative(&self, x: f64) -> Option<f64> {
        let r = self.radius;
        Some(if x.abs() >= r { 0.0 } else { sinc_derivative(x) * sinc(x / r) + sinc(x) * sinc_derivative(x / r) / r })
    }
}

/// Hard-truncated sinc.
#[derive(Clone, Copy, Debug)]
pub struct SincTrunc {
    radius: f64,
}

impl SincTrunc {
    pub fn new(r: u32) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidKernel("sinc radius must be positive".into()));
        }
        Ok(Self { radius: r as f64 })
    }
}

impl Kernel for SincTrunc {
    fn eval(&self, x: f64) -> f64 {
        if x.abs() >= self.radius {
            0.0
        } else {
            sinc(x)
        }
    }
    fn support(&self) -> f64 {
        self.radius
    }
    fn derivative(&self, x: f64) -> Option<f64> {
        Some(if x.abs() >= self.radius { 0.0 } else { sinc_derivative(x) })
    }
}

/// Centered B-spline of degree 2 or 3.
fn bspline(p: u32, x: f64) -> f64 {
    let a = x.abs();
    match p {
        2 if a < 0.5 => 0.75 - a * a,
        2 if a < 1.5 => 0.5 * (a - 1.5) * (a - 1.5),
        3 if a < 1.0 => 2.0 / 3.0 - a * a + 0.5 * a * a * a,
        3 if a < 2.0 => (2.0 - a).powi(3) / 6.0,
        _ => 0.0,
    }
}

fn bspline_derivative(p: u32, x: f64) -> f64 {
    let a = x.abs();
    let d = match p {
        2 if a < 0.5 => -2.0 * a,
        2 if a < 1.5 => a - 1.5,
        3 if a < 1.0 => -2.0 * a + 1.5 * a * a,
        3 if a < 2.0 => -0.5 * (2.0 - a).powi(2),
        _ => 0.0,
    };
    d * x.signum()
}

/// Pole of the interpolating prefilter of `β_p`.
pub fn bspline_pole(p: u32) -> Result<f64> {
    match p {
        2 => Ok(2.0 * 2f64.sqrt() - 3.0),
        3 => Ok(3f64.sqrt() - 2.0),
        _ => Err(Error::InvalidKernel(format!("B-spline degree {p} not supported (2 or 3)"))),
    }
}

/// Expansion weight of `β_p(x - k)` in `β*_p`.
pub fn bspline_weight(p: u32, k: i64) -> Result<f64> {
    let scale = (p as f64).sqrt();
    Ok(scale * bspline_pole(p)?.powi(k.unsigned_abs() as i32))
}

/// `Σ_{|k| > K} |w_k|`, the weight dropped by truncating at `K`.
pub fn bspline_tail_bound(p: u32, truncation: usize) -> Result<f64> {
    let z = bspline_pole(p)?.abs();
    Ok(2.0 * (p as f64).sqrt() * z.powi(truncation as i32 + 1) / (1.0 - z))
}

/// `β_p` itself, to be applied to prefiltered coefficients.
#[derive(Clone, Copy, Debug)]
pub struct BSplineBasis {
    degree: u32,
}

impl BSplineBasis {
    pub fn new(degree: u32) -> Result<Self> {
        bspline_pole(degree)?;
        Ok(Self { degree })
    }
}

impl Kernel for BSplineBasis {
    fn eval(&self, x: f64) -> f64 {
        bspline(self.degree, x)
    }
    fn support(&self) -> f64 {
        (self.degree as f64 + 1.0) / 2.0
    }
    fn derivative(&self, x: f64) -> Option<f64> {
        Some(bspline_derivative(self.degree, x))
    }
    fn breakpoint_offset(&self) -> f64 {
        if self.degree.is_multiple_of(2) {
            0.5
        } else {
            0.0
        }
    }
    fn prefilter_degree(&self) -> Option<u32> {
        Some(self.degree)
    }
}

/// Interpolating B-spline `β*_p`, truncated to `|k| ≤ K` basis shifts.
#[derive(Clone, Debug)]
pub struct CardinalBSpline {
    degree: u32,
    weights: Vec<f64>,
}

impl CardinalBSpline {
    pub fn new(degree: u32, truncation: usize) -> Result<Self> {
        let weights = (0..=truncation as i64).map(|k| bspline_weight(degree, k)).collect::<Result<_>>()?;
        Ok(Self { degree, weights })
    }

    pub fn truncation(&self) -> usize {
        self.weights.len() - 1
    }

    fn sum(&self, x: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = self.weights[0] * f(x);
        for (k, w) in self.weights.iter().enumerate().skip(1) {
            acc += w * (f(x - k as f64) + f(x + k as f64));
        }
        acc
    }
}

impl Kernel for CardinalBSpline {
    fn eval(&self, x: f64) -> f64 {
        self.sum(x, |y| bspline(self.degree, y))
    }
    fn support(&self) -> f64 {
        self.truncation() as f64 + (self.degree as f64 + 1.0) / 2.0
    }
    fn derivative(&self, x: f64) -> Option<f64> {
        Some(self.sum(x, |y| bspline_derivative(self.degree, y)))
    }
    fn breakpoint_offset(&self) -> f64 {
        if self.degree.is_multiple_of(2) {
            0.5
        } else {
            0.0
        }
    }
}

/// Max of `|Σ_k ψ(x - k) - 1|` over `grid` points of one period.
pub fn partition_unity_ripple<K: Kernel + ?Sized>(k: &K, grid: usize) -> f64 {
    let reach = k.support().ceil() as i64 + 1;
    (0..grid)
        .map(|n| {
            let x = n as f64 / grid as f64;
            let s: f64 = (-reach..=reach).map(|m| k.eval(x - m as f64)).sum();
            (s - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Max of `|ψ_a(x) - ψ_b(x)|` over `grid` uniform points spanning both
/// supports (endpoints included).
pub fn kernel_sup_distance<A: Kernel + ?Sized, B: Kernel + ?Sized>(a: &A, b: &B, grid: usize) -> f64 {
    let r = a.support().max(b.support());
    let n = grid.max(2);
    (0..n)
        .map(|i| {
            let x = -r + 2.0 * r * i as f64 / (n - 1) as f64;
            (a.eval(x) - b.eval(x)).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn build(s: &str) -> ReferenceKernel {
        reference_kernel(&s.parse().unwrap()).unwrap()
    }

    fn rows(k: &PiecewiseKernel) -> Vec<Vec<Rational>> {
        k.rational_coeffs().unwrap()
    }

    fn scaled(den: i64, m: &[&[i64]]) -> Vec<Vec<Rational>> {
        m.iter().map(|r| r.iter().map(|&c| rat(c, den)).collect()).collect()
    }

    #[test]
    fn names_round_trip() {
        for s in [
            "nearest",
            "linear",
            "keys",
            "keys33",
            "lanczos:3",
            "lagrange:2",
            "schaum",
            "mitchell-netravali",
            "bspline:3",
            "bspline:2:12",
            "sinc:20",
            "designed:K_2_4_S",
            "designed:K_5/2_3",
            "designed:K_3_4:avg",
        ] {
            let n: KernelName = s.parse().unwrap();
            assert_eq!(n.to_string(), s);
        }
        let a: KernelName = "K_(5/2,3)_S".parse().unwrap();
        let b: KernelName = "k_5/2_3_s".parse().unwrap();
        assert_eq!(a, b);
        assert!("gaussian".parse::<KernelName>().is_err());
        assert!("lanczos".parse::<KernelName>().is_err());
        assert!("designed:K_2".parse::<KernelName>().is_err());
    }

    #[test]
    fn keys_cubic_coefficients() {
        let k = build("keys");
        let expected = scaled(2, &[&[2, 0, -5, 3], &[0, -1, 2, -1]]);
        assert_eq!(rows(k.piecewise().unwrap()), expected);
    }

    #[test]
    fn lagrange_reference_matrices() {
        let lg23 = lagrange(2).unwrap();
        let mut e = scaled(6, &[&[6, -3, -6, 3], &[0, -2, 3, -1]]);
        assert_eq!(rows(&lg23), e);
        let lg35 = lagrange(3).unwrap();
        e = scaled(120, &[&[120, -40, -150, 50, 30, -10], &[0, -60, 80, -5, -20, 5], &[0, 6, -5, -5, 5, -1]]);
        // leading coefficient of the outer piece is -1/120 (C0 at the support edge)
        assert_eq!(rows(&lg35), e);
        assert!(lg35.constraint_residuals().unwrap().iter().all(|c| !c.label.starts_with("C0")));
        assert_eq!(rows(&lagrange(1).unwrap()), rows(build("linear").piecewise().unwrap()));
    }

    #[test]
    fn lagrange_reproduces_polynomials() {
        for r in 1..=4u32 {
            let k = lagrange(r).unwrap().to_numeric().unwrap();
            for deg in 0..(2 * r) as i32 {
                for n in 0..20 {
                    let x = n as f64 / 20.0;
                    let s: f64 =
                        (-(r as i64) - 1..=r as i64 + 1).map(|m| (m as f64).powi(deg) * k.eval(x - m as f64)).sum();
                    assert_abs_diff_eq!(s, x.powi(deg), epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn schaum_and_mn() {
        let sc = build("schaum");
        let sc_k = sc.piecewise().unwrap();
        assert!(sc_k.constraint_residuals().unwrap().is_empty());
        let mn = build("mn");
        let n = mn.numeric().unwrap();
        assert_abs_diff_eq!(n.eval(0.0), 16.0 / 18.0, epsilon = 1e-15);
        assert!(!mn.interpolating);
        // one third of β3 plus two thirds of Keys
        let keys = build("keys").numeric().unwrap();
        for i in 0..50 {
            let x = i as f64 * 0.05;
            assert_abs_diff_eq!(n.eval(x), bspline(3, x) / 3.0 + 2.0 * keys.eval(x) / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn keys33_reproduces_cubics() {
        let k = build("keys33");
        let pk = k.piecewise().unwrap();
        assert!(pk.constraint_residuals().unwrap().is_empty());
        // exact identity Σ m^d ψ(x - m) = x^d on [0, 1] for d ≤ 3
        let x = MultiPoly::var("x");
        for d in 0..=3u32 {
            let mut acc = MultiPoly::zero();
            for m in -3i64..=4 {
                let xm = &x - &MultiPoly::constant(int(m));
                let psi = piece_at(pk, m, &xm);
                acc = &acc + &psi.scale(&rational::pow(&int(m), d));
            }
            assert_eq!(acc, x.pow(d), "degree {d}");
        }
    }

    /// `ψ(x - m)` on `x ∈ [0, 1]` as a polynomial in `x`.
    fn piece_at(k: &PiecewiseKernel, m: i64, shifted: &MultiPoly) -> MultiPoly {
        let mid = rat(1, 2) - int(m);
        let a = if mid < int(0) { -mid.clone() } else { mid.clone() };
        let piece = k.spec().piece_of(&a);
        if piece >= k.spec().num_pieces() {
            return MultiPoly::zero();
        }
        let sign = if mid < int(0) { int(-1) } else { int(1) };
        let local = &shifted.scale(&sign) - &MultiPoly::constant(int(piece as i64));
        k.piece_poly(piece, "u").substitute("u", &local).unwrap()
    }

    #[test]
    fn interpolating_kernels_hit_delta() {
        for s in [
            "linear",
            "keys",
            "keys33",
            "lanczos:2",
            "lanczos:3",
            "lagrange:3",
            "schaum",
            "bspline:2",
            "bspline:3",
            "sinc:10",
            "nearest",
        ] {
            let k = build(s).numeric().unwrap();
            for m in -6i64..=6 {
                let expected = if m == 0 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(k.eval(m as f64), expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lanczos_ripple() {
        let l2 = build("lanczos:2").numeric().unwrap();
        let l3 = build("lanczos:3").numeric().unwrap();
        assert!((partition_unity_ripple(l2.as_ref(), 10_000) - 0.019).abs() <= 0.001);
        assert!((partition_unity_ripple(l3.as_ref(), 10_000) - 0.0057).abs() <= 0.0005);
        let keys = build("keys").numeric().unwrap();
        assert!(partition_unity_ripple(keys.as_ref(), 1000) < 1e-12);
    }

    #[test]
    fn bspline_tail() {
        assert!(bspline_tail_bound(2, BSPLINE_TRUNCATION).unwrap() < 1e-10);
        assert!(bspline_tail_bound(3, BSPLINE_TRUNCATION).unwrap() < 1e-10);
        // truncation at 12 leaves far more than 1e-10 for the cubic
        assert!(bspline_tail_bound(3, 12).unwrap() > 1e-8);
        // direct sum of the dropped weights
        let direct: f64 = (21..400).map(|k| 2.0 * bspline_weight(3, k).unwrap().abs()).sum();
        assert_abs_diff_eq!(direct, bspline_tail_bound(3, 20).unwrap(), epsilon = 1e-20);
    }

    #[test]
    fn cardinal_bspline_closed_forms() {
        let b3 = CardinalBSpline::new(3, BSPLINE_TRUNCATION).unwrap();
        assert_abs_diff_eq!(b3.eval(0.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(3f64.sqrt() * (2.0 / 3.0 + (3f64.sqrt() - 2.0) / 3.0), 1.0, epsilon = 1e-15);
        assert!(partition_unity_ripple(&b3, 500) < 1e-11);
        let b2 = CardinalBSpline::new(2, BSPLINE_TRUNCATION).unwrap();
        assert!(partition_unity_ripple(&b2, 500) < 1e-11);
        for x in [0.1, 0.7, 1.3, 2.45] {
            let fd = (b2.eval(x + 1e-6) - b2.eval(x - 1e-6)) / 2e-6;
            assert_abs_diff_eq!(b2.derivative(x).unwrap(), fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn lanczos_derivative_matches_difference() {
        let l = Lanczos::new(3).unwrap();
        for x in [-2.9, -1.1, -1e-7, 0.0, 0.3, 1.7] {
            let fd = (l.eval(x + 1e-6) - l.eval(x - 1e-6)) / 2e-6;
            assert_abs_diff_eq!(l.derivative(x).unwrap(), fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn sup_distance() {
        let k = build("keys").numeric().unwrap();
        assert_eq!(kernel_sup_distance(k.as_ref(), k.as_ref(), 10_000), 0.0);
        let lin = build("linear").numeric().unwrap();
        assert!(kernel_sup_distance(k.as_ref(), lin.as_ref(), 10_001) > 0.05);
    }

    #[test]
    fn nearest_picks_one_sample_at_ties() {
        let n = Nearest;
        assert_eq!(n.eval(0.5) + n.eval(-0.5), 1.0);
        assert_eq!(partition_unity_ripple(&n, 64), 0.0);
    }
}
