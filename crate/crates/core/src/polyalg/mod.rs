//! Exact rational arithmetic and sparse multivariate polynomials.
//!
//! Everything symbolic in the crate (constraint systems, the edge
//! interpolant, staircasing objectives) is built from these two types.

mod poly;
pub mod rational;

pub use poly::MultiPoly;
pub use rational::Rational;

#[cfg(test)]
mod props {
    use super::rational::{int, rat};
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn small_rat() -> impl Strategy<Value = Rational> {
        (-20i64..=20, 1i64..=6).prop_map(|(n, d)| rat(n, d))
    }

    fn poly() -> impl Strategy<Value = MultiPoly> {
        let var = prop::sample::select(vec!["x", "y", "c"]);
        prop::collection::vec((small_rat(), var, 0u32..4, 0u32..3), 0..5).prop_map(|ts| {
            ts.into_iter()
                .fold(MultiPoly::zero(), |acc, (k, v, e, ey)| &acc + &MultiPoly::monomial(k, &[(v, e), ("y", ey)]))
        })
    }

    fn univariate() -> impl Strategy<Value = MultiPoly> {
        prop::collection::vec(small_rat(), 1..6).prop_map(|cs| {
            cs.into_iter()
                .enumerate()
                .fold(MultiPoly::zero(), |acc, (k, c)| &acc + &MultiPoly::monomial(c, &[("x", k as u32)]))
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in poly(), b in poly(), c in poly()) {
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert!((&a - &a).is_zero());
        }

        #[test]
        fn integration_is_linear(a in poly(), b in poly(), lo in small_rat(), hi in small_rat()) {
            let a = a.with_vars(&["x"]);
            let b = b.with_vars(&["x"]);
            let lhs = (&a + &b).integrate("x", &lo, &hi).unwrap();
            let rhs = &a.integrate("x", &lo, &hi).unwrap() + &b.integrate("x", &lo, &hi).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn fundamental_theorem(p in univariate(), hi in small_rat()) {
            // F(t) = ∫_0^t p, so dF/dt = p(t)
            let t = MultiPoly::var("t");
            let anti = p.substitute("x", &(&MultiPoly::var("s") * &t)).unwrap();
            let anti = (&anti * &t).integrate("s", &int(0), &int(1)).unwrap();
            let back = anti.diff("t").unwrap().substitute("t", &MultiPoly::var("x")).unwrap();
            prop_assert_eq!(&back, &p);
            let f = anti.substitute_value("t", &hi).unwrap();
            prop_assert_eq!(f, p.integrate("x", &int(0), &hi).unwrap());
        }

        #[test]
        fn evaluation_homomorphism(a in poly(), b in poly(), x in small_rat(), y in small_rat(), c in small_rat()) {
            let mut v = BTreeMap::new();
            v.insert("x".to_string(), x);
            v.insert("y".to_string(), y);
            v.insert("c".to_string(), c);
            let ea = a.eval_rational(&v).unwrap();
            let eb = b.eval_rational(&v).unwrap();
            prop_assert_eq!((&a * &b).eval_rational(&v).unwrap(), &ea * &eb);
            prop_assert_eq!((&a + &b).eval_rational(&v).unwrap(), &ea + &eb);
            prop_assert_eq!((&a - &b).eval_rational(&v).unwrap(), ea - eb);
        }
    }
}
