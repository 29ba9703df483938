//! Natural-log probability arithmetic.
//!
//! Zero mass is represented by negative infinity. All functions here are
//! total: `NEG_INF` is absorbed as the additive identity.

use crate::scalar::LogFloat;

/// Log of zero probability.
#[inline]
pub fn neg_inf<F: LogFloat>() -> F {
    F::neg_infinity()
}

/// `ln(e^a + e^b)` without overflow or underflow.
#[inline]
pub fn log_sum_exp<F: LogFloat>(a: F, b: F) -> F {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == F::neg_infinity() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^xᵢ` over a slice; `NEG_INF` for an empty slice.
pub fn log_sum_exp_slice<F: LogFloat>(xs: &[F]) -> F {
    let max = xs.iter().copied().fold(F::neg_infinity(), F::max);
    if max == F::neg_infinity() {
        return max;
    }
    if max == F::infinity() {
        return max;
    }
    let sum = xs
        .iter()
        .fold(F::zero(), |acc, &x| acc + (x - max).exp());
    max + sum.ln()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NI: f64 = f64::NEG_INFINITY;

    #[test]
    fn zero_mass_identity() {
        assert_eq!(log_sum_exp(NI, -1.0), -1.0);
        assert_eq!(log_sum_exp(-1.0, NI), -1.0);
        assert_eq!(log_sum_exp(NI, NI), NI);
    }

    #[test]
    fn halves_sum_to_one() {
        let h = 0.5f64.ln();
        assert!(log_sum_exp(h, h).abs() < 1e-15);
    }

    #[test]
    fn linear_domain_addition() {
        let got = log_sum_exp(0.36f64.ln(), 0.24f64.ln());
        assert!((got - 0.60f64.ln()).abs() < 1e-15);
        assert!((got - (-0.5108)).abs() < 1e-4);
    }

    #[test]
    fn no_overflow_at_extremes() {
        let got = log_sum_exp(700.0f64, 699.0);
        assert!((got - (700.0 + (1.0 + (-1.0f64).exp()).ln())).abs() < 1e-12);
        let got = log_sum_exp(-700.0f64, -700.0);
        assert!((got - (-700.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn f32_agrees() {
        let got = log_sum_exp(0.36f32.ln(), 0.24f32.ln());
        assert!((got - 0.6f32.ln()).abs() < 1e-6);
    }

    #[test]
    fn slice_matches_pairwise() {
        let xs = [-1.0f64, -2.5, NI, -0.3];
        let pairwise = xs.iter().copied().fold(NI, log_sum_exp);
        assert!((log_sum_exp_slice(&xs) - pairwise).abs() < 1e-14);
        assert_eq!(log_sum_exp_slice::<f64>(&[]), NI);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: CompensatedSum = [1.0, 1e-16, -1.0, 1e-16].into_iter().collect();
        assert!((s.value() - 2e-16).abs() < 1e-30);
    }

    proptest! {
        #[test]
        fn matches_linear_addition(p in 1e-300f64..1.0, q in 1e-300f64..1.0) {
            let got = log_sum_exp(p.ln(), q.ln()).exp();
            let want = p + q;
            prop_assert!(((got - want) / want).abs() <= 1e-12);
        }

        #[test]
        fn commutative_and_associative(a in -700.0f64..0.0, b in -700.0f64..0.0, c in -700.0f64..0.0) {
            prop_assert_eq!(log_sum_exp(a, b), log_sum_exp(b, a));
            let l = log_sum_exp(log_sum_exp(a, b), c);
            let r = log_sum_exp(a, log_sum_exp(b, c));
            prop_assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0));
        }
    }
}
