//! Minimization of a staircasing objective over the free kernel
//! coefficients.
//!
//! The gradient and Hessian are derived exactly from the objective
//! polynomial, then compiled to double precision for Newton iterations from
//! a grid plus a scrambled Sobol set of starting points. Converged points
//! are deduplicated and classified with a Cholesky test on the Hessian.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernelspace::{solve_spec, GeneralSolution, KernelSpec, PiecewiseKernel, SolveOutcome};
use crate::polyalg::rational::{self, rat};
use crate::polyalg::MultiPoly;
use crate::staircase::{eg_squared, eg_squared_avg, Objective};

/// A polynomial compiled for fast evaluation at `f64` points.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    /// Compiles `p` with variables indexed by their position in `vars`.
    pub fn new(p: &MultiPoly, vars: &[String]) -> Result<Self> {
        let index: Vec<Option<usize>> = p.vars().iter().map(|v| vars.iter().position(|w| w == v)).collect();
        let mut terms = Vec::with_capacity(p.num_terms());
        for (e, c) in p.terms() {
            let mut factors = Vec::new();
            for (k, &x) in e.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                match index[k] {
                    Some(i) => factors.push((i, x as i32)),
                    None => return Err(Error::UnknownVariable(p.vars()[k].clone())),
                }
            }
            terms.push((rational::to_f64(c), factors));
        }
        Ok(Self { terms })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, f)| f.iter().fold(*c, |acc, &(i, e)| acc * x[i].powi(e))).sum()
    }
}

/// Exact partial derivatives of the objective, one per free coefficient in
/// the order of `obj.free`.
pub fn gradient_system(obj: &Objective) -> Result<Vec<MultiPoly>> {
    let used = obj.poly.used_vars();
    if obj.free.is_empty() || !obj.free.iter().any(|v| used.contains(v)) {
        return Err(Error::ConstantObjective);
    }
    obj.free.iter().map(|v| obj.poly.with_vars(&[v.as_str()]).diff(v)).collect()
}

/// Exact Hessian, row-major over `free`.
pub fn hessian_system(grad: &[MultiPoly], free: &[String]) -> Result<Vec<Vec<MultiPoly>>> {
    grad.iter().map(|g| free.iter().map(|v| g.with_vars(&[v.as_str()]).diff(v)).collect()).collect()
}

/// Settings for the multistart Newton search.
#[derive(Clone, Debug, Serialize)]
pub struct SearchConfig {
    pub lower: f64,
    pub upper: f64,
    /// Grid points per axis (the grid has `grid_per_axis^d` starts).
    pub grid_per_axis: usize,
    /// Additional scrambled Sobol starts.
    pub quasi_random: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the max-norm of the gradient.
    pub tolerance: f64,
    /// Two converged points closer than this (max-norm) are merged.
    pub dedup: f64,
    /// Smallest Cholesky pivot accepted as positive.
    pub pivot_tolerance: f64,
    pub seed: u32,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            lower: -4.0,
            upper: 4.0,
            grid_per_axis: 3,
            quasi_random: 200,
            max_iterations: 100,
            tolerance: 1e-10,
            dedup: 1e-8,
            pivot_tolerance: 1e-12,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalPoint {
    pub coords: BTreeMap<String, f64>,
    pub objective_value: f64,
    pub hessian_pd: bool,
    pub converged: bool,
    /// Max-norm of the gradient at `coords`.
    pub residual: f64,
    /// Signs of the Hessian eigenvalues (-1, 0 or 1).
    pub hessian_eigen_signs: Vec<i8>,
    /// Number of starts that converged to this point.
    pub hits: usize,
}

impl CriticalPoint {
    pub fn values(&self, free: &[String]) -> Vec<f64> {
        free.iter().map(|v| self.coords[v]).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    pub starts: usize,
    pub converged_starts: usize,
    pub diagnostics: Vec<String>,
}

impl CriticalSearch {
    /// Points passing the Hessian test, lowest objective first.
    pub fn minima(&self) -> Vec<&CriticalPoint> {
        let mut m: Vec<&CriticalPoint> = self.points.iter().filter(|p| p.hessian_pd).collect();
        m.sort_by(|a, b| a.objective_value.total_cmp(&b.objective_value));
        m
    }
}

/// Cholesky factorization test; every pivot must exceed `tol`.
pub fn is_positive_definite(h: &[Vec<f64>], tol: f64) -> bool {
    let n = h.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let pivot = h[i][i] - s;
                if !(pivot > tol) {
                    return false;
                }
                l[i][i] = pivot.sqrt();
            } else {
                l[i][j] = (h[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

fn starting_points(d: usize, config: &SearchConfig) -> Vec<Vec<f64>> {
    let span = config.upper - config.lower;
    let g = config.grid_per_axis;
    let mut starts = Vec::new();
    if g > 0 {
        let axis: Vec<f64> = if g == 1 {
            vec![config.lower + span / 2.0]
        } else {
            (0..g).map(|k| config.lower + span * k as f64 / (g - 1) as f64).collect()
        };
        let total = g.pow(d as u32);
        for mut idx in 0..total {
            let mut p = Vec::with_capacity(d);
            for _ in 0..d {
                p.push(axis[idx % g]);
                idx /= g;
            }
            starts.push(p);
        }
    }
    for n in 0..config.quasi_random {
        starts.push(
            (0..d)
                .map(|k| config.lower + span * sobol_burley::sample(n as u32, k as u32, config.seed) as f64)
                .collect(),
        );
    }
    starts
}

struct Compiled {
    f: CompiledPoly,
    grad: Vec<CompiledPoly>,
    hess: Vec<Vec<CompiledPoly>>,
}

impl Compiled {
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.eval(x)).collect()
    }

    fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.hess.iter().map(|row| row.iter().map(|h| h.eval(x)).collect()).collect()
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn newton(c: &Compiled, start: &[f64], config: &SearchConfig) -> Option<Vec<f64>> {
    let d = start.len();
    let mut x = start.to_vec();
    let far = 1e3 * (config.upper - config.lower).abs().max(1.0);
    for _ in 0..config.max_iterations {
        let g = c.gradient(&x);
        if !g.iter().all(|v| v.is_finite()) {
            return None;
        }
        if max_norm(&g) < config.tolerance {
            return Some(x);
        }
        let h = c.hessian(&x);
        let hm = DMatrix::from_fn(d, d, |i, j| h[i][j]);
        let step = hm.lu().solve(&DVector::from_vec(g))?;
        for (xi, si) in x.iter_mut().zip(step.iter()) {
            *xi -= si;
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > far) {
            return None;
        }
    }
    (max_norm(&c.gradient(&x)) < config.tolerance).then_some(x)
}

fn eigen_signs(h: &[Vec<f64>], tol: f64) -> Vec<i8> {
    let d = h.len();
    let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (h[i][j] + h[j][i]));
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.iter()
        .map(|&e| {
            if e > tol {
                1
            } else if e < -tol {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Finds the real critical points of `obj` inside the search box.
pub fn find_critical_points(obj: &Objective, config: &SearchConfig) -> Result<CriticalSearch> {
    let grad = gradient_system(obj)?;
    let hess = hessian_system(&grad, &obj.free)?;
    let free = &obj.free;
    let compiled = Compiled {
        f: CompiledPoly::new(&obj.poly, free)?,
        grad: grad.iter().map(|g| CompiledPoly::new(g, free)).collect::<Result<_>>()?,
        hess: hess
            .iter()
            .map(|row| row.iter().map(|h| CompiledPoly::new(h, free)).collect::<Result<_>>())
            .collect::<Result<_>>()?,
    };
    let starts = starting_points(free.len(), config);
    let roots: Vec<Option<Vec<f64>>> = starts.par_iter().map(|s| newton(&compiled, s, config)).collect();

    let mut diagnostics = Vec::new();
    let mut outside = 0;
    let mut clusters: Vec<(Vec<f64>, usize)> = Vec::new();
    let margin = 1e-9 * (config.upper - config.lower).abs();
    for x in roots.iter().flatten() {
        if x.iter().any(|&v| v < config.lower - margin || v > config.upper + margin) {
            outside += 1;
            continue;
        }
        match clusters.iter_mut().find(|(y, _)| x.iter().zip(y.iter()).all(|(a, b)| (a - b).abs() < config.dedup)) {
            Some(c) => c.1 += 1,
            None => clusters.push((x.clone(), 1)),
        }
    }
    let converged_starts = roots.iter().flatten().count();
    if converged_starts == 0 {
        diagnostics.push(format!("no start out of {} converged", starts.len()));
    }
    if outside > 0 {
        diagnostics.push(format!("{outside} converged starts left the search box"));
    }

    let mut points: Vec<CriticalPoint> = clusters
        .into_iter()
        .map(|(x, hits)| {
            let h = compiled.hessian(&x);
            CriticalPoint {
                coords: free.iter().cloned().zip(x.iter().copied()).collect(),
                objective_value: compiled.f.eval(&x),
                hessian_pd: is_positive_definite(&h, config.pivot_tolerance),
                converged: true,
                residual: max_norm(&compiled.gradient(&x)),
                hessian_eigen_signs: eigen_signs(&h, config.pivot_tolerance),
                hits,
            }
        })
        .collect();
    points.sort_by(|a, b| a.objective_value.total_cmp(&b.objective_value));
    Ok(CriticalSearch { points, starts: starts.len(), converged_starts, diagnostics })
}

/// Objective minimized by [`optimize_kernel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DesignMetric {
    /// `E_g²(1/2)`.
    EgHalf,
    /// `⟨E_g⟩²`.
    EgAvg,
}

impl DesignMetric {
    pub fn objective(self, k: &PiecewiseKernel) -> Result<Objective> {
        match self {
            DesignMetric::EgHalf => eg_squared(k, &rat(1, 2)),
            DesignMetric::EgAvg => eg_squared_avg(k),
        }
    }
}

/// A designed kernel with the search that produced it.
#[derive(Clone, Debug)]
pub struct Design {
    pub kernel: PiecewiseKernel,
    pub solution: GeneralSolution,
    /// Absent when the constraints fix the kernel uniquely.
    pub objective: Option<Objective>,
    pub search: Option<CriticalSearch>,
    pub minimum: Option<CriticalPoint>,
    pub warnings: Vec<String>,
}

/// Constraints, general solution, objective and minimization in one call.
pub fn optimize_kernel(spec: &KernelSpec, metric: DesignMetric, config: &SearchConfig) -> Result<Design> {
    let solution = match solve_spec(spec) {
        SolveOutcome::Solved(s) => s,
        SolveOutcome::Overconstrained => return Err(Error::Overconstrained(spec.label())),
    };
    if solution.is_unique() {
        return Ok(Design {
            kernel: solution.symbolic_kernel(),
            solution,
            objective: None,
            search: None,
            minimum: None,
            warnings: Vec::new(),
        });
    }
    let objective = metric.objective(&solution.symbolic_kernel())?;
    let search = find_critical_points(&objective, config)?;
    let mut warnings = search.diagnostics.clone();
    let minima = search.minima();
    if minima.len() != 1 {
        warnings.push(format!("{} local minima found for {}", minima.len(), spec.label()));
    }
    let best = minima.first().map(|p| (*p).clone()).ok_or_else(|| Error::NoCriticalPoint(spec.label()))?;
    let values: BTreeMap<String, f64> = best.coords.clone();
    let kernel = solution.instantiate_f64(&values)?;
    Ok(Design { kernel, solution, objective: Some(objective), search: Some(search), minimum: Some(best), warnings })
}
