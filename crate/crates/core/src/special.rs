//! Scalar special functions evaluated in a numerically safe domain.

use std::f64::consts::PI;

const TEN_ROOT6_DBL_EPSILON: f64 = 2.460_783_300_575_925e-2;
#[allow(clippy::excessive_precision)]
const SQRT_PI: f64 = 1.772_453_850_905_516_027_3;

/// `h(x) = exp(-1/x)` for `x > 0`, zero otherwise.
#[inline]
pub fn flat_exp(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `1 / (1 + e^x)`.
#[inline]
pub fn logistic_neg(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// `ln(e^a - e^b)` for `a >= b`.
pub fn log_diff_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + (-(b - a).exp_m1()).ln()
}

/// `ln(Σ e^{x_i})`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Natural log of the complementary error function, accurate far into the
/// tail where `erfc` itself underflows. Rational tail approximation after
/// the GSL `log_erfc` routine.
pub fn ln_erfc(x: f64) -> f64 {
    if x * x < TEN_ROOT6_DBL_EPSILON {
        ln_erfc_small(x)
    } else if x > 8.0 {
        erfc8_sum(x).ln() - x * x
    } else {
        libm::erfc(x).ln()
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, c| acc * x + c)
}

#[allow(clippy::excessive_precision)]
fn ln_erfc_small(x: f64) -> f64 {
    let y = x / SQRT_PI;
    let c: [f64; 15] = [
        0.00048204,
        -0.00142906,
        0.0013200243174,
        0.0009461589032,
        -0.0045563339802,
        0.00556964649138,
        0.00125993961762116,
        -0.01621575378835404,
        0.02629651521057465,
        -0.001829764677455021,
        2.0 * (1.0 - PI / 3.0),
        (4.0 - PI) / 3.0,
        1.0,
        1.0,
        0.0,
    ];
    -2.0 * horner(&c, y)
}

#[allow(clippy::excessive_precision)]
fn erfc8_sum(x: f64) -> f64 {
    const P: [f64; 6] = [
        0.5641895835477550741253201704,
        1.275366644729965952479585264,
        5.019049726784267463450058,
        6.1602098531096305440906,
        7.409740605964741794425,
        2.97886562639399288862,
    ];
    const Q: [f64; 7] = [
        1.0,
        2.260528520767326969591866945,
        9.396034016235054150430579648,
        12.0489519278551290360340491,
        17.08144074746600431571095,
        9.608965327192787870698,
        3.3690752069827527677,
    ];
    horner(&P, x) / horner(&Q, x)
}

/// `ln ∫_lo^hi exp(-x²/s) dx` for `0 <= lo < hi`, via log-erfc differences.
pub fn ln_gauss_window(lo: f64, hi: f64, s: f64) -> f64 {
    let r = s.sqrt();
    let (u1, u2) = (lo / r, hi / r);
    (r * SQRT_PI / 2.0).ln() + log_diff_exp(ln_erfc(u1), ln_erfc(u2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_erfc_branches_join() {
        for &x in &[TEN_ROOT6_DBL_EPSILON.sqrt(), 8.0] {
            let lo = ln_erfc(x * (1.0 - 1e-12));
            let hi = ln_erfc(x * (1.0 + 1e-12));
            assert!((lo - hi).abs() < 1e-9 * lo.abs().max(1.0), "{x}: {lo} vs {hi}");
        }
        // reference: ln erfc(10) = -102.8798...
        assert!((ln_erfc(10.0) - (-102.879_889_024_844_1)).abs() < 1e-10);
    }

    #[test]
    fn ln_erfc_deep_tail_is_finite() {
        let v = ln_erfc(1e3);
        assert!(v.is_finite() && v < -1e6);
    }

    #[test]
    fn logistic_and_softplus_are_consistent() {
        for &d in &[-800.0, -3.0, 0.0, 2.5, 900.0] {
            let s = logistic_neg(d);
            assert!((0.0..=1.0).contains(&s));
            let ls = -softplus(d);
            if s > 0.0 {
                assert!((s.ln() - ls).abs() < 1e-12 * ls.abs().max(1.0));
            }
        }
        assert_eq!(logistic_neg(0.0), 0.5);
    }

    #[test]
    fn flat_exp_vanishes_on_nonpositive() {
        assert_eq!(flat_exp(0.0), 0.0);
        assert_eq!(flat_exp(-1.0), 0.0);
        assert_eq!(flat_exp(1.0), (-1.0f64).exp());
    }
}
