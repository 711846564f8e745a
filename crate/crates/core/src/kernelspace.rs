//! Piecewise-polynomial kernel family, its linear constraint systems and
//! their exact general solutions.
//!
//! A kernel of radius `r` and degree `p` is written piece by piece as
//! `ψ(x) = Σ_j c[i][j] (|x| - i)^j` with `i = floor(|x| + Δ)`, where `Δ` is 0
//! for integer radii (even kernels) and 1/2 for half-integer radii (odd
//! kernels). Coefficients are [`MultiPoly`] values so that the same type can
//! hold a concrete kernel or one parameterized by free coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::polyalg::rational::{self, floor_to_i64, format_rational, int, rat, Rational};
use crate::polyalg::MultiPoly;

const LOCAL: &str = "t";
const POS: &str = "x";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

/// Shape of a kernel: support radius (a positive multiple of 1/2), degree and
/// whether C¹ continuity is imposed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelSpec {
    twice_radius: u32,
    degree: u32,
    smooth: bool,
}

impl Serialize for KernelSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("KernelSpec", 3)?;
        st.serialize_field("r", &format_rational(&self.radius()))?;
        st.serialize_field("p", &self.degree)?;
        st.serialize_field("smooth", &self.smooth)?;
        st.end()
    }
}

impl KernelSpec {
    pub fn new(twice_radius: u32, degree: u32, smooth: bool) -> Result<Self> {
        if twice_radius == 0 {
            return Err(Error::InvalidKernel("radius must be positive".into()));
        }
        Ok(Self { twice_radius, degree, smooth })
    }

    pub fn from_radius(radius: &Rational, degree: u32, smooth: bool) -> Result<Self> {
        let twice = radius * int(2);
        if !twice.is_integer() || !twice.is_positive() {
            return Err(Error::InvalidKernel(format!(
                "radius {} is not a positive multiple of 1/2",
                format_rational(radius)
            )));
        }
        let twice = u32::try_from(twice.to_integer()).map_err(|_| Error::InvalidKernel("radius too large".into()))?;
        Self::new(twice, degree, smooth)
    }

    pub fn twice_radius(&self) -> u32 {
        self.twice_radius
    }

    pub fn radius(&self) -> Rational {
        rat(self.twice_radius as i64, 2)
    }

    pub fn radius_f64(&self) -> f64 {
        self.twice_radius as f64 / 2.0
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn smooth(&self) -> bool {
        self.smooth
    }

    pub fn with_smooth(self, smooth: bool) -> Self {
        Self { smooth, ..self }
    }

    pub fn parity(&self) -> Parity {
        if self.twice_radius.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Δ: 0 for even kernels, 1/2 for odd ones.
    pub fn offset(&self) -> Rational {
        match self.parity() {
            Parity::Even => Rational::zero(),
            Parity::Odd => rat(1, 2),
        }
    }

    pub fn num_pieces(&self) -> usize {
        (self.twice_radius as usize).div_ceil(2)
    }

    /// Piece index for a nonnegative abscissa.
    pub fn piece_of(&self, abs_x: &Rational) -> usize {
        floor_to_i64(&(abs_x + self.offset())) as usize
    }

    /// Local coordinate range `|x| - i` covered by piece `i`.
    pub fn local_range(&self, piece: usize) -> (Rational, Rational) {
        match self.parity() {
            Parity::Even => (Rational::zero(), Rational::one()),
            Parity::Odd if piece == 0 => (Rational::zero(), rat(1, 2)),
            Parity::Odd => (rat(-1, 2), rat(1, 2)),
        }
    }

    /// One period of `Σ_k ψ(x - k)` up to the kernel's even symmetry.
    pub fn fundamental_interval(&self) -> (Rational, Rational) {
        match self.parity() {
            Parity::Even => (Rational::zero(), Rational::one()),
            Parity::Odd => (Rational::zero(), rat(1, 2)),
        }
    }

    /// `K_(5/2,3)_S`-style label.
    pub fn label(&self) -> String {
        let r = format_rational(&self.radius());
        format!("K_({r},{}){}", self.degree, if self.smooth { "_S" } else { "" })
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Name of the coefficient `c[i][j]` when it is treated as a variable.
pub fn coeff_name(piece: usize, power: usize) -> String {
    format!("c{piece}_{power}")
}

/// Symmetric piecewise-polynomial kernel; coefficients may be symbolic.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseKernel {
    spec: KernelSpec,
    coeffs: Vec<Vec<MultiPoly>>,
    exact: bool,
}

impl PiecewiseKernel {
    pub fn new(spec: KernelSpec, coeffs: Vec<Vec<MultiPoly>>) -> Result<Self> {
        if coeffs.len() != spec.num_pieces() || coeffs.iter().any(|row| row.len() != spec.degree() as usize + 1) {
            return Err(Error::InvalidKernel(format!(
                "{spec} needs {} pieces of {} coefficients",
                spec.num_pieces(),
                spec.degree() + 1
            )));
        }
        Ok(Self { spec, coeffs, exact: true })
    }

    pub fn from_rationals(spec: KernelSpec, coeffs: Vec<Vec<Rational>>) -> Result<Self> {
        Self::new(spec, coeffs.into_iter().map(|row| row.into_iter().map(MultiPoly::constant).collect()).collect())
    }

    /// Kernel from decimal coefficients; the floats are converted exactly but
    /// the kernel is flagged inexact for output purposes.
    pub fn from_f64(spec: KernelSpec, coeffs: &[Vec<f64>]) -> Result<Self> {
        let rows = coeffs
            .iter()
            .map(|row| row.iter().map(|&v| rational::from_f64(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut k = Self::from_rationals(spec, rows)?;
        k.exact = false;
        Ok(k)
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn coeffs(&self) -> &[Vec<MultiPoly>] {
        &self.coeffs
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub(crate) fn set_exact(&mut self, exact: bool) {
        self.exact = exact;
    }

    /// Symbols remaining in the coefficients, sorted.
    pub fn free_vars(&self) -> Vec<String> {
        let mut v: Vec<String> = self.coeffs.iter().flatten().flat_map(|c| c.used_vars()).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn is_instantiated(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn rational_coeffs(&self) -> Result<Vec<Vec<Rational>>> {
        let free = self.free_vars();
        if !free.is_empty() {
            return Err(Error::Symbolic(free));
        }
        Ok(self.coeffs.iter().map(|row| row.iter().map(|c| c.constant_term()).collect()).collect())
    }

    pub fn float_coeffs(&self) -> Result<Vec<Vec<f64>>> {
        Ok(self.rational_coeffs()?.iter().map(|row| row.iter().map(rational::to_f64).collect()).collect())
    }

    /// `Σ_j c[piece][j] · var^j`.
    pub fn piece_poly(&self, piece: usize, var: &str) -> MultiPoly {
        let v = MultiPoly::var(var);
        let mut acc = MultiPoly::zero();
        for c in self.coeffs[piece].iter().rev() {
            acc = &(&acc * &v) + c;
        }
        acc.with_vars(&[var])
    }

    /// Substitutes values for (some of) the free coefficients.
    pub fn substitute(&self, values: &BTreeMap<String, Rational>) -> Result<Self> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|row| row.iter().map(|c| c.substitute_all(values)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spec: self.spec, coeffs, exact: self.exact })
    }

    /// Exact value at a rational abscissa (possibly symbolic).
    pub fn eval_exact(&self, x: &Rational) -> MultiPoly {
        let a = x.abs();
        if a >= self.spec.radius() {
            return MultiPoly::zero();
        }
        let i = self.spec.piece_of(&a);
        let t = a - int(i as i64);
        self.piece_poly(i, LOCAL).substitute_value(LOCAL, &t).expect("local variable is declared")
    }

    /// ψ(x) in double precision.
    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.to_numeric()?.eval(x))
    }

    pub fn to_numeric(&self) -> Result<PolyKernel> {
        Ok(PolyKernel::new(self.spec, self.float_coeffs()?))
    }

    /// All constraint expressions that do not vanish identically.
    pub fn constraint_residuals(&self) -> Result<Vec<Constraint>> {
        Ok(constraint_exprs(&self.spec, &self.coeffs)?.into_iter().filter(|c| !c.expr.is_zero()).collect())
    }

    pub fn to_json(&self) -> Result<KernelJson> {
        let rows = self.rational_coeffs()?;
        let interpolating =
            rows.iter().enumerate().all(|(i, row)| row[0] == if i == 0 { Rational::one() } else { Rational::zero() });
        let fmt = |c: &Rational| {
            if self.exact || c.is_integer() {
                format_rational(c)
            } else {
                format!("{}", rational::to_f64(c))
            }
        };
        let coeffs = rows
            .iter()
            .map(|row| {
                let skip = usize::from(interpolating);
                row[skip..].iter().map(fmt).collect()
            })
            .collect();
        Ok(KernelJson {
            r: format_rational(&self.spec.radius()),
            p: self.spec.degree(),
            smooth: self.spec.smooth(),
            coeffs,
        })
    }

    pub fn from_json(json: &KernelJson) -> Result<Self> {
        let radius = rational::parse_rational(&json.r)?;
        let spec = KernelSpec::from_radius(&radius, json.p, json.smooth)?;
        let p = json.p as usize;
        let mut exact = true;
        let mut rows = Vec::with_capacity(json.coeffs.len());
        for (i, row) in json.coeffs.iter().enumerate() {
            let mut parsed = Vec::with_capacity(p + 1);
            if row.len() == p {
                parsed.push(if i == 0 { Rational::one() } else { Rational::zero() });
            } else if row.len() != p + 1 {
                return Err(Error::InvalidKernel(format!(
                    "row {i} has {} entries, expected {p} or {}",
                    row.len(),
                    p + 1
                )));
            }
            for s in row {
                if s.contains('.') || s.contains(['e', 'E']) {
                    exact = false;
                }
                parsed.push(rational::parse_rational(s)?);
            }
            rows.push(parsed);
        }
        let mut k = Self::from_rationals(spec, rows)?;
        k.exact = exact;
        Ok(k)
    }
}

/// Serialized kernel. `coeffs[i]` lists `c[i][1..=p]` when the kernel takes
/// the interpolating values `c[i][0] = [i = 0]`, and `c[i][0..=p]` otherwise.
/// Exact coefficients are written as `"p/q"`, inexact ones as decimals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelJson {
    pub r: String,
    pub p: u32,
    pub smooth: bool,
    pub coeffs: Vec<Vec<String>>,
}

/// Numeric piecewise-polynomial kernel.
#[derive(Clone, Debug)]
pub struct PolyKernel {
    spec: KernelSpec,
    radius: f64,
    offset: f64,
    coeffs: Vec<Vec<f64>>,
}

impl PolyKernel {
    pub fn new(spec: KernelSpec, coeffs: Vec<Vec<f64>>) -> Self {
        let offset = if spec.parity() == Parity::Odd { 0.5 } else { 0.0 };
        Self { spec, radius: spec.radius_f64(), offset, coeffs }
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let a = x.abs();
        if a >= self.radius {
            return None;
        }
        let i = ((a + self.offset).floor() as usize).min(self.coeffs.len() - 1);
        Some((i, a - i as f64))
    }
}

impl Kernel for PolyKernel {
    fn eval(&self, x: f64) -> f64 {
        match self.locate(x) {
            None => 0.0,
            Some((i, t)) => self.coeffs[i].iter().rev().fold(0.0, |acc, &c| acc * t + c),
        }
    }

    fn support(&self) -> f64 {
        self.radius
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        let d = match self.locate(x) {
            None => 0.0,
            Some((i, t)) => {
                let row = &self.coeffs[i];
                let mut acc = 0.0;
                for j in (1..row.len()).rev() {
                    acc = acc * t + j as f64 * row[j];
                }
                acc * x.signum()
            }
        };
        Some(if x == 0.0 { 0.0 } else { d })
    }

    fn breakpoint_offset(&self) -> f64 {
        self.offset
    }
}

/// One scalar equation `expr = 0` on the kernel coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub label: String,
    pub expr: MultiPoly,
}

/// `ψ(x - k)` as a polynomial in `x` on the fundamental interval, or `None`
/// when the shifted kernel vanishes there.
fn shifted_piece(spec: &KernelSpec, coeffs: &[Vec<MultiPoly>], k: i64) -> Option<MultiPoly> {
    let (lo, hi) = spec.fundamental_interval();
    let mid = (lo + hi) / int(2) - int(k);
    if mid.abs() >= spec.radius() {
        return None;
    }
    let sigma = if mid.is_positive() { int(1) } else { int(-1) };
    let piece = spec.piece_of(&mid.abs());
    // t = σ(x - k) - piece
    let t = &MultiPoly::var(POS).scale(&sigma) - &MultiPoly::constant(&sigma * int(k) + int(piece as i64));
    let mut acc = MultiPoly::zero();
    for c in coeffs[piece].iter().rev() {
        acc = &(&acc * &t) + c;
    }
    Some(acc.with_vars(&[POS]))
}

fn piece_value(coeffs: &[MultiPoly], t: &Rational, derivative: bool) -> MultiPoly {
    let mut acc = MultiPoly::zero();
    for (j, c) in coeffs.iter().enumerate() {
        let (factor, power) = if derivative {
            if j == 0 {
                continue;
            }
            (int(j as i64), j as u32 - 1)
        } else {
            (int(1), j as u32)
        };
        acc = &acc + &c.scale(&(factor * rational::pow(t, power)));
    }
    acc
}

/// Every constraint of the family as an expression in the coefficients:
/// interpolation, C⁰ junctions, partition of unity and linear-term
/// reproduction, plus C¹ junctions and `ψ'(0) = 0` when `spec.smooth()`.
pub fn constraint_exprs(spec: &KernelSpec, coeffs: &[Vec<MultiPoly>]) -> Result<Vec<Constraint>> {
    let mut out = Vec::new();
    let n = spec.num_pieces();

    for (i, row) in coeffs.iter().enumerate() {
        let target = if i == 0 { int(1) } else { int(0) };
        out.push(Constraint { label: format!("interpolation[{i}]"), expr: &row[0] - &MultiPoly::constant(target) });
    }

    let derivs: &[bool] = if spec.smooth() { &[false, true] } else { &[false] };
    for &d in derivs {
        let kind = if d { "C1" } else { "C0" };
        for i in 0..n {
            let (_, right) = spec.local_range(i);
            let left_value = piece_value(&coeffs[i], &right, d);
            let right_value = if i + 1 < n {
                let (next_lo, _) = spec.local_range(i + 1);
                piece_value(&coeffs[i + 1], &next_lo, d)
            } else {
                MultiPoly::zero()
            };
            out.push(Constraint {
                label: format!("{kind} junction after piece {i}"),
                expr: &left_value - &right_value,
            });
        }
        if d {
            out.push(Constraint {
                label: "C1 at origin".into(),
                expr: piece_value(&coeffs[0], &Rational::zero(), true),
            });
        }
    }

    let reach = spec.radius_f64().ceil() as i64 + 1;
    let mut unity = MultiPoly::constant(int(-1)).with_vars(&[POS]);
    let mut linear = -&MultiPoly::var(POS);
    for k in -reach..=reach {
        if let Some(p) = shifted_piece(spec, coeffs, k) {
            unity = &unity + &p;
            linear = &linear + &p.scale(&int(k));
        }
    }
    for (name, poly) in [("partition of unity", unity), ("linear term", linear)] {
        for (m, c) in poly.coefficients_in(POS)?.into_iter().enumerate() {
            out.push(Constraint { label: format!("{name}[x^{m}]"), expr: c });
        }
    }
    Ok(out)
}

/// Linear system `A u = b` over the non-constant coefficients `c[i][1..=p]`.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub spec: KernelSpec,
    pub unknowns: Vec<String>,
    pub rows: Vec<Vec<Rational>>,
    pub rhs: Vec<Rational>,
    pub labels: Vec<String>,
}

/// Kernel whose coefficients `c[i][j≥1]` are the symbols `c{i}_{j}` and
/// `c[i][0]` already takes its interpolating value.
fn generic_coeffs(spec: &KernelSpec) -> Vec<Vec<MultiPoly>> {
    (0..spec.num_pieces())
        .map(|i| {
            (0..=spec.degree() as usize)
                .map(|j| {
                    if j == 0 {
                        MultiPoly::constant(if i == 0 { int(1) } else { int(0) })
                    } else {
                        MultiPoly::var(&coeff_name(i, j))
                    }
                })
                .collect()
        })
        .collect()
}

pub fn build_constraints(spec: &KernelSpec) -> LinearSystem {
    let unknowns: Vec<String> =
        (0..spec.num_pieces()).flat_map(|i| (1..=spec.degree() as usize).map(move |j| coeff_name(i, j))).collect();
    let exprs = constraint_exprs(spec, &generic_coeffs(spec)).expect("generic kernel is well formed");
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut labels = Vec::new();
    for c in exprs {
        let (k, row) = c.expr.linear_form(&unknowns).expect("constraints are linear");
        if k.is_zero() && row.iter().all(Zero::is_zero) {
            continue;
        }
        rows.push(row);
        rhs.push(-k);
        labels.push(c.label);
    }
    LinearSystem { spec: *spec, unknowns, rows, rhs, labels }
}

/// Every solution is `particular + Σ_k t_k · basis[k]`, where `t_k` is the
/// value of the free coefficient `free_names[k]`.
#[derive(Clone, Debug)]
pub struct GeneralSolution {
    pub spec: KernelSpec,
    pub unknowns: Vec<String>,
    pub free_names: Vec<String>,
    pub particular: Vec<Rational>,
    pub basis: Vec<Vec<Rational>>,
    system: LinearSystem,
}

#[derive(Clone, Debug)]
pub enum SolveOutcome {
    Solved(GeneralSolution),
    Overconstrained,
}

impl SolveOutcome {
    /// Number of free coefficients, `None` when overconstrained.
    pub fn free_count(&self) -> Option<usize> {
        match self {
            SolveOutcome::Solved(gs) => Some(gs.free_count()),
            SolveOutcome::Overconstrained => None,
        }
    }

    pub fn into_solution(self) -> Option<GeneralSolution> {
        match self {
            SolveOutcome::Solved(gs) => Some(gs),
            SolveOutcome::Overconstrained => None,
        }
    }
}

/// Exact elimination. Columns are visited from the highest `(i, j)` down so
/// that the low-index coefficients are the ones left free.
pub fn solve_general(system: &LinearSystem) -> SolveOutcome {
    let order: Vec<usize> = (0..system.unknowns.len()).rev().collect();
    solve_with_order(system, &order)
}

/// Gauss-Jordan elimination visiting columns in `order`; columns that do not
/// receive a pivot become the free coefficients.
pub fn solve_with_order(system: &LinearSystem, order: &[usize]) -> SolveOutcome {
    let n = system.unknowns.len();
    let mut m: Vec<Vec<Rational>> = system
        .rows
        .iter()
        .zip(&system.rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut next_row = 0;
    for &col in order {
        let Some(p) = (next_row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(next_row, p);
        let inv = m[next_row][col].recip();
        for v in m[next_row].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = m[next_row].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == next_row || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        pivots.push((next_row, col));
        next_row += 1;
    }
    if m[next_row..].iter().any(|row| !row[n].is_zero()) {
        return SolveOutcome::Overconstrained;
    }

    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let free_cols: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    let mut particular = vec![Rational::zero(); n];
    let mut basis = vec![vec![Rational::zero(); n]; free_cols.len()];
    for &(r, c) in &pivots {
        particular[c] = m[r][n].clone();
        for (k, &fc) in free_cols.iter().enumerate() {
            basis[k][c] = -m[r][fc].clone();
        }
    }
    for (k, &fc) in free_cols.iter().enumerate() {
        basis[k][fc] = Rational::one();
    }
    SolveOutcome::Solved(GeneralSolution {
        spec: system.spec,
        unknowns: system.unknowns.clone(),
        free_names: free_cols.iter().map(|&c| system.unknowns[c].clone()).collect(),
        particular,
        basis,
        system: system.clone(),
    })
}

impl GeneralSolution {
    pub fn free_count(&self) -> usize {
        self.free_names.len()
    }

    pub fn is_unique(&self) -> bool {
        self.free_names.is_empty()
    }

    /// Rows `[constant, coefficient of each free name]` for every dependent
    /// coefficient, in `(i, j)` order.
    pub fn dependent_rows(&self) -> Vec<(String, Vec<Rational>)> {
        self.unknowns
            .iter()
            .enumerate()
            .filter(|(_, u)| !self.free_names.contains(u))
            .map(|(k, u)| {
                let mut row = vec![self.particular[k].clone()];
                row.extend(self.basis.iter().map(|b| b[k].clone()));
                (u.clone(), row)
            })
            .collect()
    }

    /// The same solution set expressed with `free` as the free coefficients.
    pub fn in_basis(&self, free: &[&str]) -> Result<Self> {
        let idx = |name: &str| {
            self.unknowns.iter().position(|u| u == name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
        };
        let wanted: Vec<usize> = free.iter().map(|f| idx(f)).collect::<Result<_>>()?;
        let mut order: Vec<usize> = (0..self.unknowns.len()).rev().filter(|c| !wanted.contains(c)).collect();
        order.extend(wanted.iter().rev());
        match solve_with_order(&self.system, &order) {
            SolveOutcome::Solved(gs) => {
                let mut got = gs.free_names.clone();
                got.sort();
                let mut want: Vec<String> = free.iter().map(|s| s.to_string()).collect();
                want.sort();
                if got != want {
                    return Err(Error::InvalidKernel(format!(
                        "{free:?} cannot parameterize {}; free set would be {:?}",
                        self.spec, gs.free_names
                    )));
                }
                Ok(gs)
            }
            SolveOutcome::Overconstrained => Err(Error::Overconstrained(self.spec.label())),
        }
    }

    fn build(&self, values: &[MultiPoly]) -> Result<PiecewiseKernel> {
        let mut by_name = BTreeMap::new();
        for (k, u) in self.unknowns.iter().enumerate() {
            let mut v = MultiPoly::constant(self.particular[k].clone());
            for (t, b) in values.iter().zip(&self.basis) {
                if !b[k].is_zero() {
                    v = &v + &t.scale(&b[k]);
                }
            }
            by_name.insert(u.clone(), v);
        }
        let mut coeffs = generic_coeffs(&self.spec);
        for (i, row) in coeffs.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate().skip(1) {
                *c = by_name.remove(&coeff_name(i, j)).expect("every unknown is solved");
            }
        }
        PiecewiseKernel::new(self.spec, coeffs)
    }

    /// Kernel whose coefficients are polynomials in the free names.
    pub fn symbolic_kernel(&self) -> PiecewiseKernel {
        let vars: Vec<MultiPoly> = self.free_names.iter().map(|f| MultiPoly::var(f)).collect();
        self.build(&vars).expect("coefficient layout matches the kernel shape")
    }

    pub fn instantiate(&self, values: &BTreeMap<String, Rational>) -> Result<PiecewiseKernel> {
        let vals = self
            .free_names
            .iter()
            .map(|f| values.get(f).cloned().map(MultiPoly::constant).ok_or_else(|| Error::MissingFreeValue(f.clone())))
            .collect::<Result<Vec<_>>>()?;
        self.build(&vals)
    }

    /// Instantiation from floats. The dependent coefficients are derived in
    /// exact arithmetic from the (exactly converted) inputs, so the
    /// constraints still hold exactly.
    pub fn instantiate_f64(&self, values: &BTreeMap<String, f64>) -> Result<PiecewiseKernel> {
        let exact =
            values.iter().map(|(k, &v)| Ok((k.clone(), rational::from_f64(v)?))).collect::<Result<BTreeMap<_, _>>>()?;
        let mut k = self.instantiate(&exact)?;
        k.set_exact(false);
        Ok(k)
    }
}

/// `build_constraints` + `solve_general` in one call.
pub fn solve_spec(spec: &KernelSpec) -> SolveOutcome {
    solve_general(&build_constraints(spec))
}
