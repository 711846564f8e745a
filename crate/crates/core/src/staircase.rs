//! Staircasing objectives for a rasterized 45° edge.
//!
//! The edge `y = x + θ` separates a 0 half-plane from a 1 half-plane. Pixel
//! `(i, j)` holds the covered area `d(i - j)`, and the interpolant
//! `u(x, y) = Σ d(i - j) ψ(x - i) ψ(y - j)` is periodic along `(1, 1)`.
//! `E_g²(θ)` integrates `(∇u · (1, 1))²` over one period; the exact path
//! works square by square in rational arithmetic, the numeric path uses
//! Gauss-Legendre quadrature on the same squares.

use gauss_quad::GaussLegendre;
use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{derivative_or_fd, Kernel};
use crate::kernelspace::PiecewiseKernel;
use crate::polyalg::rational::{self, floor_to_i64, int, rat, Rational};
use crate::polyalg::MultiPoly;

const S: &str = "s";
const T: &str = "t";
const TAU: &str = "tau";
/// Name of the edge-offset variable in averaged objectives.
pub const THETA: &str = "theta";

/// Sub-pixel edge offset; symbolic when averaging over θ.
#[derive(Clone, Debug, PartialEq)]
pub enum EdgeOffset {
    Value(Rational),
    Symbolic,
}

/// Covered area of pixel `(i, j)`.
pub fn edge_sample(theta: &Rational, i: i64, j: i64) -> Rational {
    let one = Rational::one();
    match i - j {
        d if d < -1 => Rational::zero(),
        -1 => theta * theta / int(2),
        0 => &one - (&one - theta) * (&one - theta) / int(2),
        _ => one,
    }
}

fn edge_sample_poly(theta: &EdgeOffset, diff: i64) -> MultiPoly {
    match theta {
        EdgeOffset::Value(v) => MultiPoly::constant(edge_sample(v, diff, 0)),
        EdgeOffset::Symbolic => {
            let th = MultiPoly::var(THETA);
            let one = MultiPoly::one();
            match diff {
                d if d < -1 => MultiPoly::zero(),
                -1 => (&th * &th).scale(&rat(1, 2)),
                0 => {
                    let c = &one - &th;
                    &one - &(&c * &c).scale(&rat(1, 2))
                }
                _ => one,
            }
        }
    }
}

/// `ψ(shift + v)` for `v ∈ [0, 1]` as a polynomial in `v`, or `None` when it
/// vanishes on that interval.
fn local_piece(k: &PiecewiseKernel, shift: &Rational, var: &str) -> Result<Option<MultiPoly>> {
    let spec = k.spec();
    let r = spec.radius();
    let hi = shift + Rational::one();
    if hi <= -r.clone() || shift >= &r {
        return Ok(None);
    }
    let mid = shift + rat(1, 2);
    let piece = spec.piece_of(&mid.abs());
    if piece >= spec.num_pieces() {
        return Ok(None);
    }
    let sigma = if mid.is_zero() {
        // The unit interval straddles the origin (odd kernels): |x| is only
        // polynomial there when piece 0 has no odd powers.
        let odd_nonzero = k.coeffs()[0].iter().skip(1).step_by(2).any(|c| !c.is_zero());
        if odd_nonzero {
            return Err(Error::InvalidKernel(format!("{} has odd powers in the central piece", spec.label())));
        }
        int(1)
    } else if mid.is_positive() {
        int(1)
    } else {
        int(-1)
    };
    let offset = &sigma * shift - int(piece as i64);
    let local = &MultiPoly::var(var).scale(&sigma) + &MultiPoly::constant(offset);
    let p = k.piece_poly(piece, "__u").substitute("__u", &local)?;
    Ok(Some(p.with_vars(&[var])))
}

/// The interpolant restricted to one unit square, in local coordinates
/// `u(x0 + s, y0 + t)` with `s, t ∈ [0, 1]`.
#[derive(Clone, Debug)]
pub struct SquarePatch {
    pub x_index: i64,
    pub y_index: i64,
    pub x0: Rational,
    pub y0: Rational,
    pub poly: MultiPoly,
}

/// One period of the diagonal-edge interpolant.
#[derive(Clone, Debug)]
pub struct EdgeInterpolant {
    pub patches: Vec<SquarePatch>,
}

impl EdgeInterpolant {
    /// Patch covering `(x, y)`, shifted along the period if needed.
    pub fn eval_exact(&self, k: &PiecewiseKernel, theta: &Rational, x: &Rational, y: &Rational) -> Result<MultiPoly> {
        let delta = k.spec().offset();
        let a = floor_to_i64(&(x + &delta));
        let b = floor_to_i64(&(y + &delta));
        let poly = patch_poly(k, &EdgeOffset::Value(theta.clone()), a, b)?;
        let s = x - (int(a) - &delta);
        let t = y - (int(b) - &delta);
        poly.substitute_value(S, &s)?.substitute_value(T, &t)
    }
}

/// `u` on the square `[a - Δ, a + 1 - Δ] × [b - Δ, b + 1 - Δ]`.
pub fn patch_poly(k: &PiecewiseKernel, theta: &EdgeOffset, a: i64, b: i64) -> Result<MultiPoly> {
    let delta = k.spec().offset();
    let reach = k.spec().radius_f64().ceil() as i64 + 1;
    let x0 = int(a) - &delta;
    let y0 = int(b) - &delta;
    let mut rows = Vec::new();
    for j in b - reach..=b + reach {
        if let Some(p) = local_piece(k, &(&y0 - int(j)), T)? {
            rows.push((j, p));
        }
    }
    let mut u = MultiPoly::zero();
    for i in a - reach..=a + reach {
        let Some(pi) = local_piece(k, &(&x0 - int(i)), S)? else {
            continue;
        };
        let mut column = MultiPoly::zero();
        for (j, pj) in &rows {
            let d = edge_sample_poly(theta, i - j);
            if !d.is_zero() {
                column = &column + &(&d * pj);
            }
        }
        if !column.is_zero() {
            u = &u + &(&pi * &column);
        }
    }
    Ok(u.with_vars(&[S, T]))
}

/// Number of diagonal classes on each side of the edge that can carry a
/// gradient; generous, zero squares are skipped.
fn class_reach(k: &PiecewiseKernel) -> i64 {
    2 * k.spec().radius_f64().ceil() as i64 + 3
}

/// Builds the interpolant on one representative square of every diagonal
/// class. Square `(n, 0)` stands for the class `x_index - y_index = n`; the
/// compound region `[k-Δ, k+1-Δ]×[-k-Δ, 1-k-Δ] ∪ [k+1-Δ, k+2-Δ]×[-k-Δ, 1-k-Δ]`
/// visits each class exactly once, and `u` is invariant under `(1, 1)`
/// shifts, so both decompositions integrate to the same value.
pub fn build_edge_interpolant(k: &PiecewiseKernel, theta: &Rational) -> Result<EdgeInterpolant> {
    build_interpolant(k, &EdgeOffset::Value(theta.clone()), class_reach(k))
}

fn build_interpolant(k: &PiecewiseKernel, theta: &EdgeOffset, reach: i64) -> Result<EdgeInterpolant> {
    let delta = k.spec().offset();
    let patches = (-reach..=reach)
        .into_par_iter()
        .map(|n| {
            Ok(SquarePatch {
                x_index: n,
                y_index: 0,
                x0: int(n) - &delta,
                y0: -delta.clone(),
                poly: patch_poly(k, theta, n, 0)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EdgeInterpolant { patches })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    /// `E_g²(θ)` at a fixed θ.
    EgSquared,
    /// `⟨E_g⟩² = ∫₀¹ E_g²(θ) dθ`.
    EgSquaredAvg,
    /// `E_d(θ) = ∫₀¹ (u(t, θ + t) - 1/2)² dt`.
    Ed,
}

/// A staircasing objective as an exact polynomial in the kernel's free
/// coefficients (a constant for a fully instantiated kernel).
#[derive(Clone, Debug)]
pub struct Objective {
    pub poly: MultiPoly,
    pub metric: Metric,
    pub theta: Option<Rational>,
    pub free: Vec<String>,
}

impl Objective {
    pub fn value(&self) -> Option<Rational> {
        self.poly.as_constant()
    }

    pub fn value_f64(&self) -> Option<f64> {
        self.value().map(|v| rational::to_f64(&v))
    }

    /// Degree in the free coefficients.
    pub fn degree(&self) -> u32 {
        self.poly.degree_in_vars(&self.free)
    }
}

/// `∫∫ ((∂s + ∂t) u)²` over the unit square.
///
/// The integrand is grouped by monomials in the free coefficients so that
/// the `(s, t)` moments are taken pairwise instead of expanding the square.
fn gradient_energy(poly: &MultiPoly) -> Result<MultiPoly> {
    let g = &poly.diff(S)? + &poly.diff(T)?;
    if g.is_zero() {
        return Ok(MultiPoly::zero());
    }
    let vars = g.vars().to_vec();
    let is = vars.iter().position(|v| v == S).expect("s declared");
    let it = vars.iter().position(|v| v == T).expect("t declared");
    let mut groups: BTreeMap<Vec<u32>, Vec<(usize, usize, Rational)>> = BTreeMap::new();
    for (e, c) in g.terms() {
        let key: Vec<u32> = e.iter().enumerate().filter(|&(k, _)| k != is && k != it).map(|(_, &x)| x).collect();
        groups.entry(key).or_default().push((e[is] as usize, e[it] as usize, c.clone()));
    }
    let max_s = g.degree_in(S) as usize;
    let max_t = g.degree_in(T) as usize;
    // moment[a][b] = ∫∫ s^a t^b
    let moment: Vec<Vec<Rational>> =
        (0..=2 * max_s).map(|a| (0..=2 * max_t).map(|b| rat(1, ((a + 1) * (b + 1)) as i64)).collect()).collect();
    let groups: Vec<(Vec<u32>, Vec<(usize, usize, Rational)>)> = groups.into_iter().collect();
    // Each group's coefficients paired against the moment table.
    let projected: Vec<Vec<Vec<Rational>>> = groups
        .iter()
        .map(|(_, terms)| {
            let mut q = vec![vec![Rational::zero(); max_t + 1]; max_s + 1];
            for (a, row) in q.iter_mut().enumerate() {
                for (b, cell) in row.iter_mut().enumerate() {
                    for (c, d, v) in terms {
                        *cell += v * &moment[a + c][b + d];
                    }
                }
            }
            q
        })
        .collect();
    let mut out = Vec::new();
    for (m, (key_m, terms_m)) in groups.iter().enumerate() {
        for (n, (key_n, _)) in groups.iter().enumerate().skip(m) {
            let q = &projected[n];
            let mut acc = Rational::zero();
            for (a, b, v) in terms_m {
                acc += v * &q[*a][*b];
            }
            if m != n {
                acc *= int(2);
            }
            let key: Vec<u32> = key_m.iter().zip(key_n).map(|(x, y)| x + y).collect();
            out.push((key, acc));
        }
    }
    let rest: Vec<String> = vars.into_iter().filter(|v| v != S && v != T).collect();
    MultiPoly::from_terms(rest, out)
}

fn sum_energy(k: &PiecewiseKernel, theta: &EdgeOffset, reach: i64) -> Result<MultiPoly> {
    let parts = (-reach..=reach)
        .into_par_iter()
        .map(|n| gradient_energy(&patch_poly(k, theta, n, 0)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.iter().fold(MultiPoly::zero(), |acc, p| &acc + p))
}

/// Exact `E_g²(θ)`.
pub fn eg_squared(k: &PiecewiseKernel, theta: &Rational) -> Result<Objective> {
    eg_squared_with_reach(k, theta, class_reach(k))
}

/// `E_g²(θ)` summed over diagonal classes `|n| ≤ reach`.
pub fn eg_squared_with_reach(k: &PiecewiseKernel, theta: &Rational, reach: i64) -> Result<Objective> {
    let poly = sum_energy(k, &EdgeOffset::Value(theta.clone()), reach)?;
    Ok(Objective { poly, metric: Metric::EgSquared, theta: Some(theta.clone()), free: k.free_vars() })
}

/// Exact `⟨E_g⟩²`. The case structure of `d` does not depend on θ, so θ
/// enters polynomially and is integrated out exactly.
pub fn eg_squared_avg(k: &PiecewiseKernel) -> Result<Objective> {
    let poly = sum_energy(k, &EdgeOffset::Symbolic, class_reach(k))?.with_vars(&[THETA]).integrate(
        THETA,
        &Rational::zero(),
        &Rational::one(),
    )?;
    Ok(Objective { poly, metric: Metric::EgSquaredAvg, theta: None, free: k.free_vars() })
}

/// Integrates `(f(τ) - 1/2)²` along the edge line `(τ, θ + τ)`, `τ ∈ [0, 1]`,
/// where `patch(a, b)` yields the interpolant on square `(a, b)`.
fn line_deviation<F>(delta: &Rational, theta: &Rational, mut patch: F) -> Result<MultiPoly>
where
    F: FnMut(i64, i64) -> Result<MultiPoly>,
{
    let zero = Rational::zero();
    let one = Rational::one();
    let mut cuts = vec![zero.clone(), one.clone()];
    for shift in [delta.clone(), delta + theta] {
        // τ + shift ∈ ℤ
        let mut c = shift.ceil() - &shift;
        while c < one {
            if c > zero {
                cuts.push(c.clone());
            }
            c += &one;
        }
    }
    cuts.sort();
    cuts.dedup();
    let half = MultiPoly::constant(rat(1, 2));
    let tau = MultiPoly::var(TAU);
    let mut total = MultiPoly::zero();
    for w in cuts.windows(2) {
        let mid = (&w[0] + &w[1]) / int(2);
        let a = floor_to_i64(&(&mid + delta));
        let b = floor_to_i64(&(&mid + theta + delta));
        let s_expr = &tau - &MultiPoly::constant(int(a) - delta);
        let t_expr = &tau + &MultiPoly::constant(theta - (int(b) - delta));
        let u = patch(a, b)?.substitute(S, &s_expr)?.substitute(T, &t_expr)?;
        let dev = &u - &half;
        total = &total + &(&dev * &dev).with_vars(&[TAU]).integrate(TAU, &w[0], &w[1])?;
    }
    Ok(total)
}

/// Exact `E_d(θ)`.
pub fn ed(k: &PiecewiseKernel, theta: &Rational) -> Result<Objective> {
    let off = EdgeOffset::Value(theta.clone());
    let poly = line_deviation(&k.spec().offset(), theta, |a, b| patch_poly(k, &off, a, b))?;
    Ok(Objective { poly, metric: Metric::Ed, theta: Some(theta.clone()), free: k.free_vars() })
}

/// Settings for the quadrature path.
#[derive(Clone, Debug, serde::Serialize)]
pub struct QuadratureConfig {
    /// Gauss-Legendre points per axis and unit square.
    pub order: usize,
    /// Central-difference step when the kernel has no analytic derivative.
    pub fd_step: f64,
    /// Square lattice offset; defaults to the kernel's breakpoint offset.
    pub grid_offset: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { order: 16, fd_step: 1e-5, grid_offset: None }
    }
}

fn edge_value(theta: f64, diff: i64) -> f64 {
    match diff {
        d if d < -1 => 0.0,
        -1 => theta * theta / 2.0,
        0 => 1.0 - (1.0 - theta) * (1.0 - theta) / 2.0,
        _ => 1.0,
    }
}

/// Numeric `E_g²(θ)` for any kernel.
///
/// Only squares whose contributing samples are not all equal are
/// integrated, i.e. the squares that see the edge. For kernels with exact
/// partition of unity this is the whole region with nonzero gradient; for
/// kernels without it (Lanczos, truncated sinc) it excludes the constant
/// ripple of the far field.
pub fn eg_squared_numeric<K: Kernel + ?Sized>(k: &K, theta: f64, quad: &QuadratureConfig) -> Result<f64> {
    let rule =
        GaussLegendre::new(quad.order.max(2)).map_err(|e| Error::InvalidKernel(format!("quadrature order: {e}")))?;
    let nodes: Vec<(f64, f64)> = rule.as_node_weight_pairs().iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
    let delta = quad.grid_offset.unwrap_or_else(|| k.breakpoint_offset());
    let radius = k.support();
    let sample_range = |lo: f64| {
        let first = (lo - radius).floor() as i64;
        let last = (lo + 1.0 + radius).ceil() as i64;
        first..=last
    };
    let js: Vec<i64> = sample_range(-delta).collect();
    let (j_min, j_max) = (js[0], *js.last().unwrap());
    let reach = (2.0 * radius).ceil() as i64 + 3;

    // Kernel values and derivatives at the quadrature nodes, per sample.
    let table = |origin: f64, samples: &[i64]| -> Result<Vec<Vec<(f64, f64)>>> {
        nodes
            .iter()
            .map(|&(v, _)| {
                samples
                    .iter()
                    .map(|&m| {
                        let x = origin + v - m as f64;
                        let f = k.eval(x);
                        let d = derivative_or_fd(k, x, quad.fd_step);
                        if f.is_finite() && d.is_finite() {
                            Ok((f, d))
                        } else {
                            Err(Error::NonFinite(format!("kernel at {x}")))
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let y_table = table(-delta, &js)?;

    let parts = (-reach..=reach)
        .into_par_iter()
        .map(|n| -> Result<f64> {
            let x0 = n as f64 - delta;
            let is: Vec<i64> = sample_range(x0).collect();
            let (i_min, i_max) = (is[0], *is.last().unwrap());
            // every sample pair on the same side of the edge
            if i_min - j_max > 0 || i_max - j_min < -1 {
                return Ok(0.0);
            }
            let x_table = table(x0, &is)?;
            let mut acc = 0.0;
            for (xa, &(_, wx)) in x_table.iter().zip(&nodes) {
                for (yb, &(_, wy)) in y_table.iter().zip(&nodes) {
                    let mut g = 0.0;
                    for (&i, &(fi, di)) in is.iter().zip(xa) {
                        let mut sv = 0.0;
                        let mut sd = 0.0;
                        for (&j, &(fj, dj)) in js.iter().zip(yb) {
                            let d = edge_value(theta, i - j);
                            sv += d * fj;
                            sd += d * dj;
                        }
                        g += di * sv + fi * sd;
                    }
                    acc += wx * wy * g * g;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.iter().sum())
}

/// Numeric `E_g(θ)`.
pub fn eg_numeric<K: Kernel + ?Sized>(k: &K, theta: f64, quad: &QuadratureConfig) -> Result<f64> {
    Ok(eg_squared_numeric(k, theta, quad)?.sqrt())
}

/// Numeric `⟨E_g⟩²`: Gauss-Legendre over `θ` with `quad.order` nodes.
pub fn eg_squared_avg_numeric<K: Kernel + ?Sized>(k: &K, quad: &QuadratureConfig) -> Result<f64> {
    let mut acc = 0.0;
    for (t, w) in unit_rule(quad.order)? {
        acc += w * eg_squared_numeric(k, t, quad)?;
    }
    Ok(acc)
}

fn unit_rule(order: usize) -> Result<Vec<(f64, f64)>> {
    let rule = GaussLegendre::new(order.max(2)).map_err(|e| Error::InvalidKernel(format!("quadrature order: {e}")))?;
    Ok(rule.as_node_weight_pairs().iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect())
}

/// Edge interpolant `u(x, y)` by direct summation.
pub fn edge_value_at<K: Kernel + ?Sized>(k: &K, theta: f64, x: f64, y: f64) -> f64 {
    let r = k.support().ceil() as i64;
    let (cx, cy) = (x.floor() as i64, y.floor() as i64);
    let mut u = 0.0;
    for i in cx - r..=cx + r + 1 {
        let ki = k.eval(x - i as f64);
        if ki == 0.0 {
            continue;
        }
        for j in cy - r..=cy + r + 1 {
            u += edge_value(theta, i - j) * ki * k.eval(y - j as f64);
        }
    }
    u
}

/// Numeric `E_d(θ)`. The segment is split where it crosses the kernel's
/// breakpoint lattice so each piece integrates a smooth function.
pub fn ed_numeric<K: Kernel + ?Sized>(k: &K, theta: f64, quad: &QuadratureConfig) -> Result<f64> {
    let delta = quad.grid_offset.unwrap_or_else(|| k.breakpoint_offset());
    let frac = |v: f64| v - v.floor();
    let mut cuts = vec![0.0, 1.0, frac(-delta), frac(-delta - theta)];
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let rule = unit_rule(quad.order)?;
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        for &(t, wt) in &rule {
            let s = a + (b - a) * t;
            let dev = edge_value_at(k, theta, s, theta + s) - 0.5;
            acc += (b - a) * wt * dev * dev;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernelspace::{solve_spec, KernelSpec};

    fn kernel(tr: u32, p: u32, smooth: bool) -> PiecewiseKernel {
        solve_spec(&KernelSpec::new(tr, p, smooth).unwrap()).into_solution().unwrap().symbolic_kernel()
    }

    fn univariate(coeffs: &[i64], den: i64, var: &str) -> MultiPoly {
        coeffs
            .iter()
            .enumerate()
            .fold(MultiPoly::zero(), |acc, (k, &a)| &acc + &MultiPoly::monomial(rat(a, den), &[(var, k as u32)]))
    }

    #[test]
    fn numeric_avg_and_ed_match_exact() {
        let quad = QuadratureConfig::default();
        for (tr, p, s, vals) in [(4, 2, false, vec![-0.6]), (5, 3, false, vec![-1.5, -0.8])] {
            let sym = kernel(tr, p, s);
            let values: BTreeMap<String, Rational> = sym
                .free_vars()
                .into_iter()
                .zip(vals)
                .map(|(n, v)| (n, crate::polyalg::rational::from_f64(v).unwrap()))
                .collect();
            let k = sym.substitute(&values).unwrap();
            let num = k.to_numeric().unwrap();
            let avg = eg_squared_avg(&k).unwrap().value_f64().unwrap();
            assert!((eg_squared_avg_numeric(&num, &quad).unwrap() - avg).abs() < 1e-10);
            for theta in [rat(1, 2), rat(1, 5)] {
                let exact = ed(&k, &theta).unwrap().value_f64().unwrap();
                let numeric = ed_numeric(&num, rational::to_f64(&theta), &quad).unwrap();
                assert!((exact - numeric).abs() < 1e-12, "{exact} vs {numeric}");
            }
        }
    }

    #[test]
    fn edge_sample_cases() {
        let half = rat(1, 2);
        assert_eq!(edge_sample(&half, 0, 1), rat(1, 8));
        assert_eq!(edge_sample(&half, 3, 3), rat(7, 8));
        assert_eq!(edge_sample(&rat(1, 3), 7, 2), int(1));
        assert_eq!(edge_sample(&rat(1, 3), 0, 2), int(0));
    }

    #[test]
    fn linear_interpolant_hits_samples() {
        let lin = kernel(2, 1, false);
        let theta = rat(1, 2);
        let u = build_edge_interpolant(&lin, &theta).unwrap();
        for i in -3..=3 {
            for j in -3..=3 {
                let v = u.eval_exact(&lin, &theta, &int(i), &int(j)).unwrap();
                assert_eq!(v.as_constant().unwrap(), edge_sample(&theta, i, j), "({i},{j})");
            }
        }
    }

    #[test]
    fn far_from_edge_is_constant() {
        let k = kernel(6, 3, true).substitute(&[("c0_2".to_string(), rat(-2, 1))].into()).unwrap();
        let theta = rat(1, 3);
        let far_one = patch_poly(&k, &EdgeOffset::Value(theta.clone()), 12, 0).unwrap();
        assert_eq!(far_one.as_constant(), Some(int(1)));
        let far_zero = patch_poly(&k, &EdgeOffset::Value(theta), -12, 0).unwrap();
        assert!(far_zero.is_zero());
    }

    #[test]
    fn symbolic_patch_is_quadratic_in_free_coefficient() {
        let k = kernel(4, 2, false);
        let u = build_edge_interpolant(&k, &rat(1, 2)).unwrap();
        assert!(u.patches.iter().all(|p| p.poly.degree_in("c0_1") <= 2));
        assert!(u.patches.iter().any(|p| p.poly.degree_in("c0_1") == 2));
    }

    #[test]
    fn k22_objective() {
        let obj = eg_squared(&kernel(4, 2, false), &rat(1, 2)).unwrap();
        assert_eq!(obj.poly, univariate(&[752, 2611, 3192, 1334, 196], 1440, "c0_1"));
        assert_eq!(obj.degree(), 4);
    }

    #[test]
    fn k24s_objective() {
        let obj = eg_squared(&kernel(4, 4, true), &rat(1, 2)).unwrap();
        let expected = univariate(&[9318135, 7949688, 3041872, 323456, 12544], 33868800, "c0_2");
        assert_eq!(obj.poly, expected);
    }

    #[test]
    fn k33s_objective() {
        let obj = eg_squared(&kernel(6, 3, true), &rat(1, 2)).unwrap();
        let expected = univariate(&[92669325, 117493344, 52220952, 9325760, 598096], 25804800, "c0_2");
        assert_eq!(obj.poly, expected);
    }

    #[test]
    fn minimal_reach_is_about_twice_the_radius() {
        let k = kernel(6, 3, false);
        let full = eg_squared(&k, &rat(1, 2)).unwrap().poly;
        assert_eq!(eg_squared_with_reach(&k, &rat(1, 2), 6).unwrap().poly, full);
        assert_ne!(eg_squared_with_reach(&k, &rat(1, 2), 5).unwrap().poly, full);
    }

    #[test]
    fn linear_kernel_eg() {
        let obj = eg_squared(&kernel(2, 1, false), &rat(1, 2)).unwrap();
        let eg = obj.value_f64().unwrap().sqrt();
        assert_eq!(format!("{eg:.3}"), "0.368");
    }

    #[test]
    fn wider_reach_changes_nothing() {
        let k = kernel(5, 3, false);
        let a = eg_squared(&k, &rat(1, 2)).unwrap().poly;
        let b = eg_squared_with_reach(&k, &rat(1, 2), class_reach(&k) + 4).unwrap().poly;
        assert_eq!(a, b);
    }

    #[test]
    fn averaged_objective_below_worst_case_for_linear() {
        let lin = kernel(2, 1, false);
        let avg = eg_squared_avg(&lin).unwrap().value().unwrap();
        let half = eg_squared(&lin, &rat(1, 2)).unwrap().value().unwrap();
        assert!(avg <= half);
        assert!(avg > Rational::zero());
    }

    #[test]
    fn averaged_objective_matches_quadrature_over_theta() {
        // Boole's rule is exact on E_g²(θ), a quartic in θ.
        let keys = kernel(4, 3, true);
        let avg = eg_squared_avg(&keys).unwrap().value().unwrap();
        let at = |t: Rational| eg_squared(&keys, &t).unwrap().value().unwrap();
        let boole =
            ((at(int(0)) + at(int(1))) * int(7) + (at(rat(1, 4)) + at(rat(3, 4))) * int(32) + at(rat(1, 2)) * int(12))
                / int(90);
        assert_eq!(avg, boole);
    }

    #[test]
    fn ed_of_constant_half_is_zero() {
        let v =
            line_deviation(&Rational::zero(), &rat(1, 3), |_, _| Ok(MultiPoly::constant(rat(1, 2)).with_vars(&[S, T])))
                .unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn ed_linear_positive() {
        let lin = kernel(2, 1, false);
        let v = ed(&lin, &rat(1, 2)).unwrap().value().unwrap();
        assert!(v > Rational::zero());
        let odd = kernel(3, 2, false);
        assert!(ed(&odd, &rat(1, 4)).unwrap().value().unwrap() >= Rational::zero());
    }

    #[test]
    fn ed_matches_pointwise_midpoint_rule() {
        let k = kernel(4, 3, true);
        let theta = rat(1, 3);
        let exact = rational::to_f64(&ed(&k, &theta).unwrap().value().unwrap());
        let u = build_edge_interpolant(&k, &theta).unwrap();
        let n = 600;
        let mut acc = 0.0;
        for m in 0..n {
            let t = rat(2 * m + 1, 2 * n);
            let y = &t + &theta;
            let v = rational::to_f64(&u.eval_exact(&k, &theta, &t, &y).unwrap().as_constant().unwrap());
            acc += (v - 0.5).powi(2) / n as f64;
        }
        assert!((acc - exact).abs() < 1e-5, "{acc} vs {exact}");
    }

    #[test]
    fn numeric_matches_exact_for_keys() {
        let keys = kernel(4, 3, true);
        let exact = eg_squared(&keys, &rat(1, 2)).unwrap().value_f64().unwrap();
        let num = eg_squared_numeric(&keys.to_numeric().unwrap(), 0.5, &QuadratureConfig::default()).unwrap();
        assert!((exact - num).abs() < 1e-12, "{exact} {num}");
        assert_eq!(format!("{:.3}", num.sqrt()), "0.339");
    }

    #[test]
    fn numeric_matches_exact_for_odd_kernel() {
        let k = kernel(5, 3, false);
        let mut v = BTreeMap::new();
        v.insert("c0_2".to_string(), rat(-3, 2));
        v.insert("c1_1".to_string(), rat(-4, 5));
        let k = k.substitute(&v).unwrap();
        let exact = eg_squared(&k, &rat(1, 3)).unwrap().value_f64().unwrap();
        let num = eg_squared_numeric(&k.to_numeric().unwrap(), 1.0 / 3.0, &QuadratureConfig::default()).unwrap();
        assert!((exact - num).abs() < 1e-10, "{exact} {num}");
    }

    #[test]
    fn odd_powers_in_central_piece_are_rejected() {
        // odd kernel whose central piece has a linear term
        let spec = KernelSpec::new(3, 2, false).unwrap();
        let bad =
            PiecewiseKernel::from_rationals(spec, vec![vec![int(1), int(-1), int(0)], vec![int(0), int(0), int(0)]])
                .unwrap();
        assert!(eg_squared(&bad, &rat(1, 2)).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_rat() -> impl Strategy<Value = Rational> {
            (-24i64..=24, 1i64..=8).prop_map(|(n, d)| rat(n, d))
        }

        fn unit_rat() -> impl Strategy<Value = Rational> {
            (0i64..=16).prop_map(|n| rat(n, 16))
        }

        fn spec() -> impl Strategy<Value = (u32, u32, bool)> {
            prop::sample::select(vec![(4, 2, false), (5, 3, false), (4, 4, true), (6, 3, true), (5, 2, false)])
        }

        fn instantiate(k: &PiecewiseKernel, values: &[Rational]) -> PiecewiseKernel {
            let map: BTreeMap<String, Rational> = k.free_vars().into_iter().zip(values.iter().cloned()).collect();
            k.substitute(&map).unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn samples_depend_on_difference_only(theta in unit_rat(), i in -6i64..6, j in -6i64..6, s in -4i64..4) {
                let d = edge_sample(&theta, i, j);
                prop_assert_eq!(&d, &edge_sample(&theta, i + s, j + s));
                let one = Rational::one();
                let allowed = [Rational::zero(), &theta * &theta / int(2), &one - (&one - &theta) * (&one - &theta) / int(2), one.clone()];
                prop_assert!(allowed.contains(&d));
            }

            #[test]
            fn objectives_nonnegative(sp in spec(), theta in unit_rat(), vals in prop::collection::vec(small_rat(), 3)) {
                let k = instantiate(&kernel(sp.0, sp.1, sp.2), &vals);
                let eg = eg_squared(&k, &theta).unwrap().value().unwrap();
                prop_assert!(eg >= Rational::zero());
                let e = ed(&k, &theta).unwrap().value().unwrap();
                prop_assert!(e >= Rational::zero());
            }

            #[test]
            fn symbolic_objective_commutes_with_instantiation(sp in spec(), vals in prop::collection::vec(small_rat(), 3)) {
                let k = kernel(sp.0, sp.1, sp.2);
                let obj = eg_squared(&k, &rat(1, 2)).unwrap();
                prop_assert!(obj.degree() <= 4);
                let map: BTreeMap<String, Rational> = k.free_vars().into_iter().zip(vals.iter().cloned()).collect();
                let direct = eg_squared(&k.substitute(&map).unwrap(), &rat(1, 2)).unwrap().value().unwrap();
                prop_assert_eq!(obj.poly.eval_rational(&map).unwrap(), direct);
            }

            #[test]
            fn exact_and_numeric_agree(sp in spec(), theta in unit_rat(), vals in prop::collection::vec(small_rat(), 3)) {
                let k = instantiate(&kernel(sp.0, sp.1, sp.2), &vals);
                let exact = eg_squared(&k, &theta).unwrap().value_f64().unwrap();
                let t = rational::to_f64(&theta);
                let num = eg_squared_numeric(&k.to_numeric().unwrap(), t, &QuadratureConfig::default()).unwrap();
                prop_assert!((exact.sqrt() - num.sqrt()).abs() < 1e-6, "{} vs {}", exact, num);
            }
        }
    }
}
