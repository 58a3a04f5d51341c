//! Leading-order arithmetic on monomials `c·ε^k`.
//!
//! Every asymptotic quantity in this crate is tracked as a single monomial:
//! a nonnegative coefficient together with an exact rational exponent of the
//! perturbation parameter ε. Two such quantities are asymptotically
//! equivalent exactly when their monomials coincide, so the algebra below is
//! enough to propagate equivalence through sums, products and ratios of
//! nonnegative quantities. Subtraction is deliberately absent: cancellation
//! would invalidate the leading order, and no pipeline step needs it.

use num_rational::Ratio;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

use crate::error::{Error, Result};

/// Exact rational exponent of ε.
pub type Exponent = Ratio<i64>;

/// Builds an exponent from a numerator/denominator pair.
///
/// Panics if `den == 0`; use [`try_exponent`] for fallible construction.
pub fn exponent(num: i64, den: i64) -> Exponent {
    Ratio::new(num, den)
}

/// Fallible exponent construction (rejects zero denominators).
pub fn try_exponent(num: i64, den: i64) -> Result<Exponent> {
    if den == 0 {
        return Err(Error::InvalidExponent {
            num,
            den,
            reason: "zero denominator".into(),
        });
    }
    Ok(Ratio::new(num, den))
}

/// Result of comparing two perturbed values as ε → 0 (the limit of `a/b`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    /// `a/b → 0`: the exponent of `a` is strictly larger.
    Negligible,
    /// `a/b` converges to the enclosed positive limit (equal exponents).
    Comparable(f64),
    /// `a/b → ∞`: the exponent of `a` is strictly smaller.
    Dominant,
    /// Both values are identically zero.
    BothZero,
}

/// A nonnegative quantity of the form `coeff · ε^exp`, or identically zero.
///
/// Invariants: a nonzero value has `coeff > 0` and finite; the zero value is
/// the canonical pair `(0, 0)`. Exponents are exact rationals, so ties in
/// addition are detected exactly. Stored chain entries always carry
/// exponents ≥ 0, but the type itself admits negative exponents: ratios such
/// as class-mass reciprocals legitimately diverge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedValue {
    coeff: f64,
    exp: Exponent,
}

impl PerturbedValue {
    /// The identically-zero function of ε.
    pub const fn zero() -> Self {
        PerturbedValue {
            coeff: 0.0,
            exp: Ratio::new_raw(0, 1),
        }
    }

    /// The constant 1 (coefficient 1, exponent 0).
    pub const fn one() -> Self {
        PerturbedValue {
            coeff: 1.0,
            exp: Ratio::new_raw(0, 1),
        }
    }

    /// A monomial `coeff · ε^exp` with `coeff > 0`.
    pub fn monomial(coeff: f64, exp: Exponent) -> Result<Self> {
        if !coeff.is_finite() || coeff <= 0.0 {
            return Err(Error::InvalidCoefficient { coeff });
        }
        Ok(PerturbedValue { coeff, exp })
    }

    /// Monomial with an integer exponent; panics on a nonpositive or
    /// non-finite coefficient. Convenience for literals in tests and fixtures.
    pub fn mono(coeff: f64, exp_num: i64) -> Self {
        Self::monomial(coeff, Ratio::from_integer(exp_num)).expect("invalid monomial literal")
    }

    pub fn is_zero(&self) -> bool {
        self.coeff == 0.0
    }

    /// Coefficient (0 exactly when the value is zero).
    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    /// Exponent of ε; meaningful only for nonzero values.
    pub fn exp(&self) -> Exponent {
        self.exp
    }

    /// Leading-order sum. The smaller exponent wins; equal exponents add
    /// coefficients. Exact for nonnegative summands (no cancellation).
    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        match self.exp.cmp(&other.exp) {
            std::cmp::Ordering::Less => *self,
            std::cmp::Ordering::Greater => *other,
            std::cmp::Ordering::Equal => PerturbedValue {
                coeff: self.coeff + other.coeff,
                exp: self.exp,
            },
        }
    }

    /// Exact product: coefficients multiply, exponents add.
    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        PerturbedValue {
            coeff: self.coeff * other.coeff,
            exp: self.exp + other.exp,
        }
    }

    /// Ratio of leading orders. The exponent may go negative (the ratio
    /// diverges as ε → 0); dividing by zero signals a structurally
    /// unreachable target.
    pub fn div(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(Self::zero());
        }
        Ok(PerturbedValue {
            coeff: self.coeff / other.coeff,
            exp: self.exp - other.exp,
        })
    }

    /// Classifies `lim self/other` as ε → 0. A zero value is negligible
    /// against any nonzero value and dominant over none.
    pub fn order(&self, other: &Self) -> Order {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Order::BothZero,
            (true, false) => Order::Negligible,
            (false, true) => Order::Dominant,
            (false, false) => match self.exp.cmp(&other.exp) {
                std::cmp::Ordering::Greater => Order::Negligible,
                std::cmp::Ordering::Less => Order::Dominant,
                std::cmp::Ordering::Equal => Order::Comparable(self.coeff / other.coeff),
            },
        }
    }

    /// Evaluates `coeff · eps^exp` at a concrete ε ∈ (0, 1].
    pub fn evaluate(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::EpsOutOfRange { eps });
        }
        if self.is_zero() {
            return Ok(0.0);
        }
        let e = *self.exp.numer() as f64 / *self.exp.denom() as f64;
        Ok(self.coeff * eps.powf(e))
    }

    /// Exponent as a float, for fits and diagnostics.
    pub fn exp_f64(&self) -> f64 {
        *self.exp.numer() as f64 / *self.exp.denom() as f64
    }
}

impl fmt::Display for PerturbedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if self.exp == Ratio::from_integer(0) {
            write!(f, "{}", self.coeff)
        } else if self.exp.is_integer() {
            write!(f, "{}*eps^{}", self.coeff, self.exp.numer())
        } else {
            write!(f, "{}*eps^({}/{})", self.coeff, self.exp.numer(), self.exp.denom())
        }
    }
}

impl Serialize for PerturbedValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            coeff: f64,
            exp: [i64; 2],
        }
        Repr {
            coeff: self.coeff,
            exp: [*self.exp.numer(), *self.exp.denom()],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PerturbedValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            coeff: f64,
            exp: [i64; 2],
        }
        let r = Repr::deserialize(deserializer)?;
        if r.coeff == 0.0 {
            return Ok(PerturbedValue::zero());
        }
        if r.exp[1] == 0 {
            return Err(D::Error::custom("zero exponent denominator"));
        }
        PerturbedValue::monomial(r.coeff, Ratio::new(r.exp[0], r.exp[1]))
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(c: f64, num: i64, den: i64) -> PerturbedValue {
        PerturbedValue::monomial(c, exponent(num, den)).unwrap()
    }

    #[test]
    fn add_lower_order_dominates() {
        let a = PerturbedValue::mono(1.0, 1);
        let b = PerturbedValue::mono(1.0, 2);
        assert_eq!(a.add(&b), a);
        assert_eq!(b.add(&a), a);
    }

    #[test]
    fn add_equal_exponents_sum_coefficients() {
        let a = PerturbedValue::mono(0.5, 1);
        assert_eq!(a.add(&a), PerturbedValue::mono(1.0, 1));
    }

    #[test]
    fn add_zero_is_identity() {
        let a = PerturbedValue::mono(2.0, 0);
        assert_eq!(PerturbedValue::zero().add(&a), a);
        assert_eq!(a.add(&PerturbedValue::zero()), a);
    }

    #[test]
    fn mul_path_weights_compose() {
        // Two ε-steps compose to an ε² path weight.
        let step = PerturbedValue::mono(1.0, 1);
        assert_eq!(step.mul(&step), PerturbedValue::mono(1.0, 2));
    }

    #[test]
    fn mul_zero_absorbs() {
        let a = PerturbedValue::mono(2.0, 0);
        assert!(a.mul(&PerturbedValue::zero()).is_zero());
    }

    #[test]
    fn mul_rational_exponents_add_exactly() {
        let h = pv(0.5, 1, 2);
        assert_eq!(h.mul(&h), PerturbedValue::mono(0.25, 1));
    }

    #[test]
    fn div_subtracts_exponents() {
        let a = PerturbedValue::mono(1.0, 2);
        let b = PerturbedValue::mono(1.0, 1);
        assert_eq!(a.div(&b).unwrap(), PerturbedValue::mono(1.0, 1));
    }

    #[test]
    fn div_self_ratio_is_one() {
        let a = PerturbedValue::mono(3.0, 1);
        assert_eq!(a.div(&a).unwrap(), PerturbedValue::one());
    }

    #[test]
    fn div_allows_negative_exponent() {
        let a = PerturbedValue::mono(1.0, 1);
        let b = PerturbedValue::mono(1.0, 2);
        let r = a.div(&b).unwrap();
        assert_eq!(r.exp(), exponent(-1, 1));
        assert_eq!(r.coeff(), 1.0);
    }

    #[test]
    fn div_by_zero_is_error() {
        let a = PerturbedValue::mono(1.0, 1);
        assert!(matches!(a.div(&PerturbedValue::zero()), Err(Error::DivisionByZero)));
    }

    #[test]
    fn order_classification() {
        let e1 = PerturbedValue::mono(1.0, 1);
        let e2 = PerturbedValue::mono(1.0, 2);
        assert_eq!(e2.order(&e1), Order::Negligible);
        assert_eq!(e1.order(&e2), Order::Dominant);
        assert_eq!(
            PerturbedValue::mono(2.0, 1).order(&e1),
            Order::Comparable(2.0)
        );
        assert_eq!(PerturbedValue::zero().order(&PerturbedValue::zero()), Order::BothZero);
        assert_eq!(PerturbedValue::zero().order(&e1), Order::Negligible);
        assert_eq!(e1.order(&PerturbedValue::zero()), Order::Dominant);
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(PerturbedValue::mono(1.0, 2).evaluate(0.1).unwrap(), 0.01);
        assert_eq!(PerturbedValue::mono(1.0, 0).evaluate(1e-3).unwrap(), 1.0);
        assert!((PerturbedValue::mono(0.5, 1).evaluate(0.01).unwrap() - 0.005).abs() < 1e-15);
    }

    #[test]
    fn evaluate_rejects_out_of_range_eps() {
        let a = PerturbedValue::mono(1.0, 1);
        assert!(a.evaluate(0.0).is_err());
        assert!(a.evaluate(-0.5).is_err());
        assert!(a.evaluate(1.5).is_err());
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(PerturbedValue::monomial(0.0, exponent(1, 1)).is_err());
        assert!(PerturbedValue::monomial(-1.0, exponent(1, 1)).is_err());
        assert!(PerturbedValue::monomial(f64::NAN, exponent(1, 1)).is_err());
    }

    #[test]
    fn add_relative_error_shrinks_along_ladder() {
        // |add(a,b)(ε)/(a(ε)+b(ε)) − 1| must decrease monotonically as ε → 0.
        let a = PerturbedValue::mono(1.0, 1);
        let b = PerturbedValue::mono(3.0, 2);
        let s = a.add(&b);
        let mut last = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3] {
            let exact = a.evaluate(eps).unwrap() + b.evaluate(eps).unwrap();
            let err = (s.evaluate(eps).unwrap() / exact - 1.0).abs();
            assert!(err < last, "error not shrinking: {err} vs {last}");
            last = err;
        }
    }

    fn arb_pv() -> impl Strategy<Value = PerturbedValue> {
        prop_oneof![
            1 => Just(PerturbedValue::zero()),
            9 => (1e-3..1e3f64, -6i64..=6, 1i64..=4)
                .prop_map(|(c, n, d)| PerturbedValue::monomial(c, exponent(n, d)).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn mul_is_evaluate_homomorphism(a in arb_pv(), b in arb_pv(), eps in 1e-4..1.0f64) {
            let lhs = a.mul(&b).evaluate(eps).unwrap();
            let rhs = a.evaluate(eps).unwrap() * b.evaluate(eps).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));
        }

        #[test]
        fn add_is_commutative_and_associative(a in arb_pv(), b in arb_pv(), c in arb_pv()) {
            prop_assert_eq!(a.add(&b), b.add(&a));
            prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        }

        #[test]
        fn mul_is_commutative_and_associative(a in arb_pv(), b in arb_pv(), c in arb_pv()) {
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            let l = a.mul(&b).mul(&c);
            let r = a.mul(&b.mul(&c));
            prop_assert!(l.is_zero() == r.is_zero());
            if !l.is_zero() {
                prop_assert_eq!(l.exp(), r.exp());
                prop_assert!((l.coeff() / r.coeff() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn order_is_antisymmetric(a in arb_pv(), b in arb_pv()) {
            let ab = a.order(&b);
            let ba = b.order(&a);
            prop_assert_eq!(ab == Order::Negligible, ba == Order::Dominant);
            prop_assert_eq!(ab == Order::Dominant, ba == Order::Negligible);
        }
    }
}
