//! Polynomials over the rationals: homogeneous forms in class coordinates and
//! univariate polynomials in the flow time, with exact root isolation.

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::rational::{q, rational_sqrt, serde_q, ClassVector, Rational};
use super::CohomologyError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    #[serde(with = "serde_q")]
    pub coeff: Rational,
}

/// Homogeneous polynomial in the coordinates of a class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HomogeneousPoly {
    pub terms: Vec<Monomial>,
}

impl HomogeneousPoly {
    /// Linear form `a ↦ Σ coeffs[i]·a[i]`.
    pub fn linear(coeffs: &[Rational]) -> Self {
        let nvars = coeffs.len();
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                let mut exponents = vec![0; nvars];
                exponents[i] = 1;
                Monomial {
                    exponents,
                    coeff: c.clone(),
                }
            })
            .collect();
        Self { terms }
    }

    /// Checks the number of variables and homogeneity; returns the degree.
    pub fn validate(&self, nvars: usize) -> Result<u32, CohomologyError> {
        let mut degree = None;
        for term in &self.terms {
            if term.exponents.len() != nvars {
                return Err(CohomologyError::InvalidModel(format!(
                    "monomial with {} exponents in a {}-dimensional basis",
                    term.exponents.len(),
                    nvars
                )));
            }
            let d: u32 = term.exponents.iter().sum();
            match degree {
                None => degree = Some(d),
                Some(prev) if prev != d => {
                    return Err(CohomologyError::InvalidModel(
                        "polynomial is not homogeneous".into(),
                    ))
                }
                _ => {}
            }
        }
        degree.ok_or_else(|| CohomologyError::InvalidModel("empty polynomial".into()))
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .first()
            .map(|t| t.exponents.iter().sum())
            .unwrap_or(0)
    }

    pub fn eval(&self, a: &ClassVector) -> Rational {
        self.terms.iter().fold(Rational::zero(), |acc, term| {
            let value = term
                .exponents
                .iter()
                .zip(a.coords())
                .fold(term.coeff.clone(), |v, (&e, x)| v * num::pow(x.clone(), e as usize));
            acc + value
        })
    }

    /// Univariate polynomial `t ↦ P(base + t·direction)`.
    pub fn along_line(&self, base: &ClassVector, direction: &ClassVector) -> UPoly {
        let mut out = UPoly::zero();
        for term in &self.terms {
            let mut product = UPoly::constant(term.coeff.clone());
            for ((&e, b), d) in term.exponents.iter().zip(base.coords()).zip(direction.coords()) {
                let linear = UPoly::new(vec![b.clone(), d.clone()]);
                for _ in 0..e {
                    product = product.mul(&linear);
                }
            }
            out = out.add(&product);
        }
        out
    }
}

/// Dense univariate polynomial, coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UPoly(Vec<Rational>);

impl UPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self(coeffs)
    }

    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    fn lead(&self) -> Rational {
        self.0.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        self.0
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * t + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        let zero = Rational::zero();
        Self::new(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&zero) + other.0.get(i).unwrap_or(&zero))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Rational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Rational::from_integer((i as i64).into()))
                .collect(),
        )
    }

    pub fn rem(&self, divisor: &Self) -> Self {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let mut r = self.0.clone();
        let dd = divisor.0.len() - 1;
        let lead = divisor.lead();
        while r.len() > dd && !r.is_empty() {
            let shift = r.len() - 1 - dd;
            let factor = r.last().unwrap() / &lead;
            for (i, c) in divisor.0.iter().enumerate() {
                r[shift + i] -= &factor * c;
            }
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        Self::new(r)
    }

    fn sturm_chain(&self) -> Vec<UPoly> {
        let mut chain = vec![self.clone(), self.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let r = chain[n - 2].rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(Self::new(r.0.into_iter().map(|c| -c).collect()));
        }
        chain
    }

    /// Number of distinct real roots in `(lo, hi]`.
    fn roots_in(&self, chain: &[UPoly], lo: &Rational, hi: &Rational) -> usize {
        let variations = |t: &Rational| {
            let signs: Vec<i8> = chain
                .iter()
                .map(|p| p.eval(t))
                .filter(|v| !v.is_zero())
                .map(|v| if v.is_positive() { 1 } else { -1 })
                .collect();
            signs.windows(2).filter(|w| w[0] != w[1]).count()
        };
        // Sturm counts roots in (lo, hi] when p(lo) != 0.
        variations(lo).saturating_sub(variations(hi))
    }

    /// Cauchy bound: every real root has |t| < bound.
    fn root_bound(&self) -> Rational {
        let lead = self.lead().abs();
        let max = self
            .0
            .iter()
            .take(self.0.len().saturating_sub(1))
            .map(|c| c.abs() / &lead)
            .fold(Rational::zero(), |a, b| if b > a { b } else { a });
        max + Rational::one()
    }

    /// Smallest strictly positive real root. Degree one and rational-discriminant
    /// quadratics are solved exactly; everything else is bracketed by Sturm
    /// bisection to width `width`.
    pub fn first_positive_root(&self, width: &Rational) -> RootLocation {
        let zero = Rational::zero();
        match self.degree() {
            None | Some(0) => RootLocation::None,
            Some(1) => {
                let root = -&self.0[0] / &self.0[1];
                if root.is_positive() {
                    RootLocation::Exact(root)
                } else {
                    RootLocation::None
                }
            }
            Some(2) => {
                let (c, b, a) = (&self.0[0], &self.0[1], &self.0[2]);
                let disc = b * b - Rational::from_integer(4.into()) * a * c;
                if disc.is_negative() {
                    return RootLocation::None;
                }
                match rational_sqrt(&disc) {
                    Some(s) => {
                        let two_a = a * Rational::from_integer(2.into());
                        let mut roots = [(-b - &s) / &two_a, (-b + &s) / &two_a];
                        roots.sort();
                        roots
                            .into_iter()
                            .find(|r| r > &zero)
                            .map(RootLocation::Exact)
                            .unwrap_or(RootLocation::None)
                    }
                    None => self.isolate(width),
                }
            }
            Some(_) => self.isolate(width),
        }
    }

    fn isolate(&self, width: &Rational) -> RootLocation {
        let zero = Rational::zero();
        if self.eval(&zero).is_zero() {
            // Root at the origin is not positive; strip the factor t.
            let stripped = Self::new(self.0.iter().skip(1).cloned().collect());
            return stripped.isolate(width);
        }
        let chain = self.sturm_chain();
        let mut hi = self.root_bound();
        if self.roots_in(&chain, &zero, &hi) == 0 {
            return RootLocation::None;
        }
        let mut lo = zero;
        let two = Rational::from_integer(2.into());
        while &hi - &lo > *width {
            let mid = (&lo + &hi) / &two;
            if self.eval(&mid).is_zero() && self.roots_in(&chain, &lo, &mid) == 1 {
                return RootLocation::Exact(mid);
            }
            if self.roots_in(&chain, &lo, &mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        // A rational root with denominator below ~10^6 is the simplest
        // fraction in a bracket this narrow.
        let simple = simplest_between(&lo, &hi);
        if self.eval(&simple).is_zero() {
            return RootLocation::Exact(simple);
        }
        RootLocation::Bracket { lower: lo, upper: hi }
    }
}

/// Fraction with the smallest denominator in the closed interval `[lo, hi]`
/// (`0 <= lo <= hi`), by continued fractions.
fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    let floor = lo.floor();
    if &floor == lo {
        return floor;
    }
    if &(&floor + Rational::one()) <= hi {
        return floor + Rational::one();
    }
    // Both ends share the integer part; recurse on reciprocals of the
    // fractional parts (order flips).
    let lo_frac = lo - &floor;
    let hi_frac = hi - &floor;
    let inner = simplest_between(&hi_frac.recip(), &lo_frac.recip());
    floor + inner.recip()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RootLocation {
    None,
    Exact(Rational),
    /// The root lies in `(lower, upper)`; no root in `(0, lower]`.
    Bracket { lower: Rational, upper: Rational },
}

/// Bracket width used when a failure time is irrational.
pub fn default_bracket_width() -> Rational {
    q(1, 1_000_000_000_000)
}

#[cfg(test)]
mod tests {
    use super::super::rational::{qi, to_f64};
    use super::*;

    fn p(c: &[i64]) -> UPoly {
        UPoly::new(c.iter().map(|&v| qi(v)).collect())
    }

    #[test]
    fn linear_roots() {
        assert_eq!(p(&[4, -2]).first_positive_root(&default_bracket_width()), RootLocation::Exact(qi(2)));
        assert_eq!(p(&[4, 2]).first_positive_root(&default_bracket_width()), RootLocation::None);
    }

    #[test]
    fn rational_quadratic_is_exact() {
        // (3 - t)(1 - 2t) = 3 - 7t + 2t^2
        assert_eq!(
            p(&[3, -7, 2]).first_positive_root(&default_bracket_width()),
            RootLocation::Exact(q(1, 2))
        );
    }

    #[test]
    fn irrational_quadratic_is_bracketed() {
        // 2 - t^2, root sqrt(2)
        match p(&[2, 0, -1]).first_positive_root(&default_bracket_width()) {
            RootLocation::Bracket { lower, upper } => {
                assert!(&upper - &lower <= default_bracket_width());
                assert!(to_f64(&lower) <= 2f64.sqrt() && 2f64.sqrt() <= to_f64(&upper));
            }
            other => panic!("expected bracket, got {other:?}"),
        }
    }

    #[test]
    fn cubic_isolation_finds_smallest_root() {
        // (t - 1)(t - 2)(t - 3) with sign flipped so p(0) > 0
        let poly = p(&[6, -11, 6, -1]);
        assert_eq!(poly.first_positive_root(&default_bracket_width()), RootLocation::Exact(qi(1)));
        // (t^2 - 2)(t - 5): first positive root sqrt 2
        let poly = p(&[10, -2, -5, 1]);
        match poly.first_positive_root(&default_bracket_width()) {
            RootLocation::Bracket { lower, .. } => assert!((to_f64(&lower) - 2f64.sqrt()).abs() < 1e-11),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn simplest_fraction_in_interval() {
        assert_eq!(simplest_between(&q(3, 10), &q(4, 10)), q(1, 3));
        assert_eq!(simplest_between(&q(1, 2), &q(1, 2)), q(1, 2));
        assert_eq!(simplest_between(&q(9, 10), &q(11, 10)), qi(1));
    }

    #[test]
    fn line_restriction_expands_products() {
        // P(a) = a0 * a1 along (1,2) + t(-1, 1): (1 - t)(2 + t) = 2 - t - t^2
        let poly = HomogeneousPoly {
            terms: vec![Monomial {
                exponents: vec![1, 1],
                coeff: qi(1),
            }],
        };
        let up = poly.along_line(&ClassVector::from_ints(&[1, 2]), &ClassVector::from_ints(&[-1, 1]));
        assert_eq!(up, p(&[2, -1, -1]));
    }
}
