use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::rational::{self, Rational};
use crate::error::{Error, Result};

type Exponents = Vec<u32>;

/// Sparse multivariate polynomial with exact rational coefficients.
///
/// Variables are kept sorted by name; every exponent vector has one entry per
/// declared variable. Declared-but-unused variables are allowed (so that
/// `diff` with respect to them is well defined) and are ignored by equality.
#[derive(Clone, Debug, Default)]
pub struct MultiPoly {
    vars: Vec<String>,
    terms: BTreeMap<Exponents, Rational>,
}

impl MultiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        Self { vars: Vec::new(), terms }
    }

    pub fn var(name: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![1], Rational::one());
        Self { vars: vec![name.to_string()], terms }
    }

    /// Builds `coeff * Π var^exp` from `(name, exponent)` pairs.
    pub fn monomial(coeff: Rational, factors: &[(&str, u32)]) -> Self {
        let mut p = Self::constant(coeff);
        for &(name, e) in factors {
            p = &p * &Self::var(name).pow(e);
        }
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs over sorted,
    /// distinct `vars`; repeated exponents are summed.
    pub fn from_terms(vars: Vec<String>, terms: impl IntoIterator<Item = (Vec<u32>, Rational)>) -> Result<Self> {
        if vars.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::DimensionMismatch("variables must be sorted and distinct".into()));
        }
        let mut acc: HashMap<Exponents, Rational> = HashMap::new();
        for (e, c) in terms {
            if e.len() != vars.len() {
                return Err(Error::DimensionMismatch(format!(
                    "exponent vector of length {} for {} variables",
                    e.len(),
                    vars.len()
                )));
            }
            *acc.entry(e).or_insert_with(Rational::zero) += c;
        }
        Ok(Self::from_map(vars, acc))
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Variables that actually occur with a nonzero exponent.
    pub fn used_vars(&self) -> Vec<String> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(k, _)| self.terms.keys().any(|e| e[*k] > 0))
            .map(|(_, v)| v.clone())
            .collect()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &Rational)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant value if no variable occurs.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&x| x == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn constant_term(&self) -> Rational {
        let zero = vec![0; self.vars.len()];
        self.terms.get(&zero).cloned().unwrap_or_else(Rational::zero)
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.vars.binary_search_by(|v| v.as_str().cmp(name)).map_err(|_| Error::UnknownVariable(name.to_string()))
    }

    pub fn has_var(&self, name: &str) -> bool {
        self.index_of(name).is_ok()
    }

    /// Highest exponent of `name` (0 if absent).
    pub fn degree_in(&self, name: &str) -> u32 {
        match self.index_of(name) {
            Ok(k) => self.terms.keys().map(|e| e[k]).max().unwrap_or(0),
            Err(_) => 0,
        }
    }

    /// Highest total degree over the given variables.
    pub fn degree_in_vars(&self, names: &[String]) -> u32 {
        let idx: Vec<usize> = names.iter().filter_map(|n| self.index_of(n).ok()).collect();
        self.terms.keys().map(|e| idx.iter().map(|&k| e[k]).sum()).max().unwrap_or(0)
    }

    /// Re-expresses `self` over a superset of its variables.
    fn embed(&self, vars: &[String]) -> Self {
        if vars == self.vars.as_slice() {
            return self.clone();
        }
        let map: Vec<usize> =
            self.vars.iter().map(|v| vars.binary_search(v).expect("embed target must be a superset")).collect();
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut ne = vec![0; vars.len()];
                for (k, &x) in e.iter().enumerate() {
                    ne[map[k]] = x;
                }
                (ne, c.clone())
            })
            .collect();
        Self { vars: vars.to_vec(), terms }
    }

    fn union_vars(a: &[String], b: &[String]) -> Vec<String> {
        let mut v: Vec<String> = a.iter().chain(b.iter()).cloned().collect();
        v.sort();
        v.dedup();
        v
    }

    /// Declares additional variables without changing the value.
    pub fn with_vars(&self, names: &[&str]) -> Self {
        let extra: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        self.embed(&Self::union_vars(&self.vars, &extra))
    }

    fn from_map(vars: Vec<String>, map: HashMap<Exponents, Rational>) -> Self {
        let terms = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Self { vars, terms }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return Self { vars: self.vars.clone(), terms: BTreeMap::new() };
        }
        Self { vars: self.vars.clone(), terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect() }
    }

    fn add_scaled(&self, other: &Self, sign: bool) -> Self {
        let vars = Self::union_vars(&self.vars, &other.vars);
        let mut out = self.embed(&vars);
        let b = other.embed(&vars);
        for (e, c) in b.terms {
            let entry = out.terms.entry(e);
            match entry {
                std::collections::btree_map::Entry::Occupied(mut o) => {
                    if sign {
                        *o.get_mut() += c;
                    } else {
                        *o.get_mut() -= c;
                    }
                    if o.get().is_zero() {
                        o.remove();
                    }
                }
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert(if sign { c } else { -c });
                }
            }
        }
        out
    }

    fn mul_impl(&self, other: &Self) -> Self {
        let vars = Self::union_vars(&self.vars, &other.vars);
        let a = self.embed(&vars);
        let b = other.embed(&vars);
        let mut acc: HashMap<Exponents, Rational> = HashMap::with_capacity(a.terms.len() * b.terms.len() / 2 + 1);
        for (ea, ca) in &a.terms {
            for (eb, cb) in &b.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                let prod = ca * cb;
                match acc.get_mut(&e) {
                    Some(c) => *c += prod,
                    None => {
                        acc.insert(e, prod);
                    }
                }
            }
        }
        Self::from_map(vars, acc)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one().embed(&self.vars);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = &out * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        out
    }

    /// Exact partial derivative.
    pub fn diff(&self, name: &str) -> Result<Self> {
        let k = self.index_of(name)?;
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[k] == 0 {
                continue;
            }
            let mut ne = e.clone();
            ne[k] -= 1;
            terms.insert(ne, c * Rational::from_integer(e[k].into()));
        }
        Ok(Self { vars: self.vars.clone(), terms })
    }

    /// Exact definite integral over `name ∈ [lo, hi]`; `name` is removed
    /// from the variable list of the result.
    pub fn integrate(&self, name: &str, lo: &Rational, hi: &Rational) -> Result<Self> {
        let k = self.index_of(name)?;
        let mut vars = self.vars.clone();
        vars.remove(k);
        let mut acc: HashMap<Exponents, Rational> = HashMap::new();
        let max_e = self.degree_in(name) + 1;
        let hi_pows: Vec<Rational> = (0..=max_e).map(|n| rational::pow(hi, n)).collect();
        let lo_pows: Vec<Rational> = (0..=max_e).map(|n| rational::pow(lo, n)).collect();
        for (e, c) in &self.terms {
            let n = e[k] as usize + 1;
            let factor = (&hi_pows[n] - &lo_pows[n]) / Rational::from_integer(n.into());
            let mut ne = e.clone();
            ne.remove(k);
            let v = c * factor;
            *acc.entry(ne).or_insert_with(Rational::zero) += v;
        }
        Ok(Self::from_map(vars, acc))
    }

    /// Collects `self` as `Σ_n coeff_n · name^n`; index n of the result holds
    /// `coeff_n` (which no longer declares `name`).
    pub fn coefficients_in(&self, name: &str) -> Result<Vec<Self>> {
        let k = self.index_of(name)?;
        let mut vars = self.vars.clone();
        vars.remove(k);
        let deg = self.degree_in(name) as usize;
        let mut out: Vec<BTreeMap<Exponents, Rational>> = vec![BTreeMap::new(); deg + 1];
        for (e, c) in &self.terms {
            let mut ne = e.clone();
            let n = ne.remove(k) as usize;
            out[n].insert(ne, c.clone());
        }
        Ok(out.into_iter().map(|terms| Self { vars: vars.clone(), terms }).collect())
    }

    /// Composition: replaces `name` by `expr`.
    pub fn substitute(&self, name: &str, expr: &Self) -> Result<Self> {
        let coeffs = self.coefficients_in(name)?;
        let mut out = Self::zero();
        // Horner scheme from the top coefficient down.
        for c in coeffs.iter().rev() {
            out = &(&out * expr) + c;
        }
        let mut vars = self.vars.clone();
        vars.retain(|v| v != name);
        Ok(out.embed(&Self::union_vars(&vars, &expr.vars)))
    }

    pub fn substitute_value(&self, name: &str, value: &Rational) -> Result<Self> {
        self.substitute(name, &Self::constant(value.clone()))
    }

    /// Substitutes every listed variable by a rational value.
    pub fn substitute_all(&self, values: &BTreeMap<String, Rational>) -> Result<Self> {
        let mut p = self.clone();
        for (name, v) in values {
            if p.has_var(name) {
                p = p.substitute_value(name, v)?;
            }
        }
        Ok(p)
    }

    /// Exact value; every used variable must be covered.
    pub fn eval_rational(&self, values: &BTreeMap<String, Rational>) -> Result<Rational> {
        let p = self.substitute_all(values)?;
        match p.used_vars().first() {
            Some(v) => Err(Error::UnknownVariable(v.clone())),
            None => Ok(p.constant_term()),
        }
    }

    pub fn eval_f64(&self, values: &HashMap<&str, f64>) -> Result<f64> {
        let xs: Vec<f64> = self
            .vars
            .iter()
            .enumerate()
            .map(|(k, v)| match values.get(v.as_str()) {
                Some(&x) => Ok(x),
                None if self.terms.keys().all(|e| e[k] == 0) => Ok(0.0),
                None => Err(Error::UnknownVariable(v.clone())),
            })
            .collect::<Result<_>>()?;
        Ok(self
            .terms
            .iter()
            .map(|(e, c)| e.iter().zip(&xs).fold(rational::to_f64(c), |acc, (&n, &x)| acc * x.powi(n as i32)))
            .sum())
    }

    /// Splits a polynomial of total degree ≤ 1 into constant and linear
    /// coefficients over `unknowns`.
    pub fn linear_form(&self, unknowns: &[String]) -> Result<(Rational, Vec<Rational>)> {
        let mut coeffs = vec![Rational::zero(); unknowns.len()];
        let mut constant = Rational::zero();
        for (e, c) in &self.terms {
            let nz: Vec<usize> = (0..e.len()).filter(|&k| e[k] > 0).collect();
            match nz.as_slice() {
                [] => constant += c,
                [k] if e[*k] == 1 => {
                    let name = &self.vars[*k];
                    let pos =
                        unknowns.iter().position(|u| u == name).ok_or_else(|| Error::UnknownVariable(name.clone()))?;
                    coeffs[pos] += c;
                }
                _ => return Err(Error::InvalidKernel(format!("expected a linear expression, got {self}"))),
            }
        }
        Ok((constant, coeffs))
    }
}

impl PartialEq for MultiPoly {
    fn eq(&self, other: &Self) -> bool {
        let vars = Self::union_vars(&self.vars, &other.vars);
        self.embed(&vars).terms == other.embed(&vars).terms
    }
}

impl Eq for MultiPoly {}

impl From<Rational> for MultiPoly {
    fn from(c: Rational) -> Self {
        Self::constant(c)
    }
}

impl<'a> Add<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &'a MultiPoly) -> MultiPoly {
        self.add_scaled(rhs, true)
    }
}

impl<'a> Sub<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &'a MultiPoly) -> MultiPoly {
        self.add_scaled(rhs, false)
    }
}

impl<'a> Mul<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &'a MultiPoly) -> MultiPoly {
        self.mul_impl(rhs)
    }
}

impl Add for MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: MultiPoly) -> MultiPoly {
        &self + &rhs
    }
}

impl Sub for MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: MultiPoly) -> MultiPoly {
        &self - &rhs
    }
}

impl Mul for MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: MultiPoly) -> MultiPoly {
        &self * &rhs
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&-Rational::one())
    }
}

impl Neg for MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        -&self
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (e, c)) in self.terms.iter().enumerate() {
            let mono: Vec<String> = e
                .iter()
                .zip(&self.vars)
                .filter(|(&x, _)| x > 0)
                .map(|(&x, v)| if x == 1 { v.clone() } else { format!("{v}^{x}") })
                .collect();
            let neg = c < &Rational::zero();
            let abs = if neg { -c.clone() } else { c.clone() };
            if n == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            if mono.is_empty() {
                write!(f, "{}", rational::format_rational(&abs))?;
            } else if abs.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{}*{}", rational::format_rational(&abs), mono.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::rational::{int, rat};

    fn x() -> MultiPoly {
        MultiPoly::var("x")
    }
    fn y() -> MultiPoly {
        MultiPoly::var("y")
    }
    fn c(v: i64) -> MultiPoly {
        MultiPoly::constant(int(v))
    }

    #[test]
    fn difference_of_squares() {
        let p = &(&x() + &c(1)) * &(&x() - &c(1));
        assert_eq!(p, &x().pow(2) - &c(1));
    }

    #[test]
    fn additive_identity() {
        let p = &x().pow(3) + &y();
        assert_eq!(&p + &MultiPoly::zero(), p);
    }

    #[test]
    fn binomial_expansion() {
        // hand expansion: (x+y)^2 = x^2 + 2xy + y^2
        let p = (&x() + &y()).pow(2);
        let expected = &(&x().pow(2) + &(&c(2) * &(&x() * &y()))) + &y().pow(2);
        assert_eq!(p, expected);
        assert_eq!(p.num_terms(), 3);
    }

    #[test]
    fn derivatives() {
        assert_eq!(x().pow(3).diff("x").unwrap(), &c(3) * &x().pow(2));
        let p = x().pow(2).with_vars(&["c"]);
        assert!(p.diff("c").unwrap().is_zero());
        assert!(matches!(x().diff("z"), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn derivative_of_k22_objective() {
        let cv = MultiPoly::var("c");
        let coeffs = [752, 2611, 3192, 1334, 196];
        let mut p = MultiPoly::zero();
        for (k, &a) in coeffs.iter().enumerate() {
            p = &p + &MultiPoly::monomial(rat(a, 1440), &[("c", k as u32)]);
        }
        let d = p.diff("c").unwrap();
        let mut expected = MultiPoly::zero();
        for (k, &a) in [2611, 6384, 4002, 784].iter().enumerate() {
            expected = &expected + &MultiPoly::monomial(rat(a, 1440), &[("c", k as u32)]);
        }
        assert_eq!(d, expected);
        let _ = cv;
    }

    #[test]
    fn definite_integrals() {
        let zero = int(0);
        let one = int(1);
        let p = x().pow(2).integrate("x", &zero, &one).unwrap();
        assert_eq!(p.as_constant(), Some(rat(1, 3)));
        assert!(p.vars().is_empty());

        let q = (&MultiPoly::var("c") * &x()).integrate("x", &zero, &one).unwrap();
        assert_eq!(q, MultiPoly::var("c").scale(&rat(1, 2)));

        // antiderivative x^2 - x evaluated between 1/2 and 1 is 0 - (-1/4)
        let r = (&c(2) * &x() - c(1)).integrate("x", &rat(1, 2), &one).unwrap();
        assert_eq!(r.as_constant(), Some(rat(1, 4)));
    }

    #[test]
    fn substitution() {
        let p = x().pow(2).substitute("x", &(&x() - &c(1))).unwrap();
        assert_eq!(p, &(&x().pow(2) - &(&c(2) * &x())) + &c(1));
        let v = (&x().pow(2) + &y()).substitute_value("x", &rat(1, 3)).unwrap();
        assert_eq!(v, &y() + &MultiPoly::constant(rat(1, 9)));
        assert!(x().substitute("q", &y()).is_err());
    }

    #[test]
    fn linear_form_extraction() {
        let p = &(&c(3) + &MultiPoly::var("a").scale(&rat(1, 2))) - &MultiPoly::var("b");
        let (k, v) = p.linear_form(&["a".into(), "b".into()]).unwrap();
        assert_eq!(k, int(3));
        assert_eq!(v, vec![rat(1, 2), int(-1)]);
        assert!(x().pow(2).linear_form(&["x".into()]).is_err());
    }

    #[test]
    fn display_is_readable() {
        let p = &(&x().pow(2).scale(&rat(-1, 2)) + &y()) + &c(3);
        let s = p.to_string();
        assert!(s.contains("x^2"), "{s}");
    }
}
