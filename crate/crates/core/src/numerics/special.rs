//! Special functions: log-beta, incomplete beta, normal CDF/quantile and
//! harmonic numbers.

use crate::error::{domain, numeric, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Stirling-series remainder `ln Γ(x) - [(x - ½) ln x - x + ln √(2π)]`, valid for x ≥ 10.
fn stirling_correction(x: f64) -> f64 {
    // B_{2k} / (2k (2k-1)), k = 1..8
    const COEF: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in COEF.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// Natural log of the gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(libm::lgamma(x))
}

/// `ln β(a, b)`.
///
/// Large arguments go through Stirling corrections rather than a difference
/// of log-gammas, which would cancel catastrophically.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(domain(format!("ln_beta requires a, b > 0, got ({a}, {b})")));
    }
    let (p, q) = if a < b { (a, b) } else { (b, a) };
    let sum = p + q;
    if p >= 10.0 {
        let corr = stirling_correction(p) + stirling_correction(q) - stirling_correction(sum);
        Ok(-0.5 * q.ln() + LN_SQRT_2PI + corr + (p - 0.5) * (p / sum).ln() + q * (-p / sum).ln_1p())
    } else if q >= 10.0 {
        let corr = stirling_correction(q) - stirling_correction(sum);
        Ok(libm::lgamma(p) + corr + p - p * sum.ln() + (q - 0.5) * (-p / sum).ln_1p())
    } else {
        Ok(libm::lgamma(p) + libm::lgamma(q) - libm::lgamma(sum))
    }
}

const CF_MAX_ITER: usize = 20_000;

/// Continued fraction for the regularized incomplete beta (modified Lentz).
fn beta_cf(x: f64, a: f64, b: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= 1e-16 {
            return Ok(h);
        }
    }
    Err(numeric(format!(
        "incomplete beta continued fraction did not converge for x={x}, a={a}, b={b}"
    )))
}

/// Regularized lower incomplete beta `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("incomplete beta requires 0 <= x <= 1, got {x}")));
    }
    let lb = ln_beta(a, b)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - lb;
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_front.exp() * beta_cf(x, a, b)? / a)
    } else {
        Ok(1.0 - ln_front.exp() * beta_cf(1.0 - x, b, a)? / b)
    }
}

/// Unregularized lower incomplete beta `β_x(a,b) = ∫₀ˣ t^(a-1) (1-t)^(b-1) dt`.
///
/// `incomplete_beta(1, a, b) == β(a, b)`.
pub fn incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    Ok(regularized_incomplete_beta(x, a, b)? * ln_beta(a, b)?.exp())
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

/// Standard normal CDF `Φ(z)`; accurate in both tails.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * INV_SQRT_2)
}

/// Inverse of [`normal_cdf`] on the open interval (0, 1).
///
/// Wichura's AS241 rational approximation, polished with one Halley step
/// against the complementary tail so that tiny tail probabilities survive.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("normal_quantile requires 0 < p < 1, got {p}")));
    }
    let z = as241(p);
    // Refine against whichever tail is smaller so the residual keeps relative precision.
    let (resid, dens) = if p < 0.5 {
        (normal_cdf(z) - p, normal_pdf(z))
    } else {
        (-(normal_cdf(-z) - (1.0 - p)), normal_pdf(z))
    };
    if dens == 0.0 || !resid.is_finite() {
        return Ok(z);
    }
    let u = resid / dens;
    Ok(z - u / (1.0 + 0.5 * z * u))
}

#[allow(clippy::excessive_precision)]
fn as241(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2.509_080_928_730_122_672_7e3 * r + 3.343_057_558_358_812_810_5e4) * r
                + 6.726_577_092_700_870_085_3e4)
                * r
                + 4.592_195_393_154_987_145_7e4)
                * r
                + 1.373_169_376_550_946_112_5e4)
                * r
                + 1.971_590_950_306_551_442_7e3)
                * r
                + 1.331_416_678_917_843_774_5e2)
                * r
                + 3.387_132_872_796_366_608_0)
            / (((((((5.226_495_278_852_854_561_0e3 * r + 2.872_908_573_572_194_267_4e4) * r
                + 3.930_789_580_009_271_061_0e4)
                * r
                + 2.121_379_430_158_659_586_7e4)
                * r
                + 5.394_196_021_424_751_107_7e3)
                * r
                + 6.871_870_074_920_579_083_0e2)
                * r
                + 4.231_333_070_160_091_125_2e1)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414_076_4e-4 * r + 2.272_384_498_926_918_458_3e-2) * r
            + 2.417_807_251_774_506_117_7e-1)
            * r
            + 1.270_458_252_452_368_382_58)
            * r
            + 3.647_848_324_763_204_605_04)
            * r
            + 5.769_497_221_460_691_405_5)
            * r
            + 4.630_337_846_156_545_295_9)
            * r
            + 1.423_437_110_749_683_577_34)
            / (((((((1.050_750_071_644_416_843_24e-9 * r + 5.475_938_084_995_344_946e-4) * r
                + 1.519_866_656_361_645_719_66e-2)
                * r
                + 1.481_039_764_274_800_745_9e-1)
                * r
                + 6.897_673_349_851_000_045_5e-1)
                * r
                + 1.676_384_830_183_803_849_4)
                * r
                + 2.053_191_626_637_758_821_87)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288_132_65e-7 * r + 2.711_555_568_743_487_578_15e-5) * r
            + 1.242_660_947_388_078_438_6e-3)
            * r
            + 2.653_218_952_657_612_309_3e-2)
            * r
            + 2.965_605_718_285_048_912_3e-1)
            * r
            + 1.784_826_539_917_291_335_8)
            * r
            + 5.463_784_911_164_114_369_9)
            * r
            + 6.657_904_643_501_103_777_2)
            / (((((((2.044_263_103_389_939_785_64e-15 * r + 1.421_511_758_316_445_888_7e-7) * r
                + 1.846_318_317_510_054_681_8e-5)
                * r
                + 7.868_691_311_456_132_591e-4)
                * r
                + 1.487_536_129_085_061_485_25e-2)
                * r
                + 1.369_298_809_227_358_053_1e-1)
                * r
                + 5.998_322_065_558_879_376_9e-1)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Harmonic number `H_k = Σ_{i=1..k} 1/i`, with `H_0 = 0`.
///
/// Summed smallest-term-first with Neumaier compensation.
pub fn harmonic(k: u64) -> f64 {
    let mut acc = super::NeumaierSum::default();
    for i in (1..=k).rev() {
        acc.add(1.0 / i as f64);
    }
    acc.value()
}

/// `x ln x` with the continuous extension `0 ln 0 = 0`.
pub fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Adaptive Simpson on [a, b]; test-only oracle, independent of the library quadrature.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    #[test]
    fn ln_beta_trivial_values() {
        assert_eq!(ln_beta(1.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(ln_beta(2.0, 3.0).unwrap(), (1.0f64 / 12.0).ln(), max_relative = 1e-14);
    }

    #[test]
    fn ln_beta_matches_quadrature() {
        // ∫ t^4.5 (1-t)^1.5: integrand smooth, endpoints vanish.
        let oracle = simpson(&|t: f64| t.powf(4.5) * (1.0 - t).powf(1.5), 0.0, 1.0, 1e-14);
        assert_relative_eq!(ln_beta(5.5, 2.5).unwrap(), oracle.ln(), max_relative = 1e-10);
    }

    #[test]
    fn ln_beta_large_arguments() {
        // β(a, 1) = 1/a exactly.
        for a in [10.0, 1e3, 1e6] {
            assert_relative_eq!(ln_beta(a, 1.0).unwrap(), -a.ln(), max_relative = 1e-12);
        }
        // β(a, 2) = 1/(a(a+1)).
        let a = 123_456.5;
        assert_relative_eq!(ln_beta(a, 2.0).unwrap(), -(a * (a + 1.0)).ln(), max_relative = 1e-12);
        // Symmetric large case against Stirling evaluated independently in lgamma form.
        let v = ln_beta(1e6, 1e6).unwrap();
        let w = libm::lgamma(1e6) * 2.0 - libm::lgamma(2e6);
        assert_relative_eq!(v, w, max_relative = 1e-10);
    }

    #[test]
    fn ln_beta_rejects_nonpositive() {
        assert!(ln_beta(0.0, 1.0).is_err());
        assert!(ln_beta(1.0, -2.0).is_err());
    }

    #[test]
    fn incomplete_beta_examples() {
        for (a, b) in [(2.0, 3.0), (0.5, 7.0), (40.0, 12.0)] {
            assert_relative_eq!(
                incomplete_beta(1.0, a, b).unwrap(),
                ln_beta(a, b).unwrap().exp(),
                max_relative = 1e-14
            );
        }
        for x in [0.0, 0.1, 0.5, 0.99, 1.0] {
            assert_relative_eq!(incomplete_beta(x, 1.0, 1.0).unwrap(), x, epsilon = 1e-15);
        }
        let oracle = simpson(&|t: f64| t * (1.0 - t).powi(3), 0.0, 0.3, 1e-15);
        assert_relative_eq!(incomplete_beta(0.3, 2.0, 4.0).unwrap(), oracle, max_relative = 1e-10);
    }

    #[test]
    fn incomplete_beta_domain() {
        assert!(incomplete_beta(-0.1, 1.0, 1.0).is_err());
        assert!(incomplete_beta(1.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn incomplete_beta_large_parameters() {
        let v = regularized_incomplete_beta(0.25, 1025.0, 3073.0).unwrap();
        assert!(v > 0.4 && v < 0.6, "{v}");
    }

    #[test]
    fn normal_examples() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_cdf(1.96) - 0.9750).abs() < 1e-4);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn normal_cdf_series_oracle() {
        // Φ(z) = ½ + φ(z) Σ z^(2k+1)/(1·3·…·(2k+1)) converges for moderate z.
        for z in [-3.0, -1.0, 0.3, 1.96, 2.5] {
            let mut term: f64 = z;
            let mut sum = z;
            let mut k = 1.0;
            while term.abs() > 1e-18 {
                term *= z * z / (2.0 * k + 1.0);
                sum += term;
                k += 1.0;
            }
            let oracle = 0.5 + normal_pdf(z) * sum;
            // the oracle cancels in the lower tail, so compare absolutely
            assert!(
                (normal_cdf(z) - oracle).abs() < 1e-15,
                "z={z}: {} vs {oracle}",
                normal_cdf(z)
            );
        }
    }

    #[test]
    fn normal_round_trip() {
        // Roundoff in Φ(z) near 1 limits how well z can be recovered from the
        // upper tail (half an ulp of 1 over φ(z)); the lower tail keeps full precision.
        let mut z = -6.0;
        while z <= 6.0 {
            let p = normal_cdf(z);
            let back = normal_quantile(p).unwrap();
            let ulp_bound = 0.5 * f64::EPSILON * p.max(0.0) / normal_pdf(z);
            assert!((back - z).abs() <= 1e-9f64.max(2.0 * ulp_bound), "z={z} back={back}");
            if z <= 0.0 {
                assert!((back - z).abs() <= 1e-9, "z={z} back={back}");
            }
            z += 0.01;
        }
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic(0), 0.0);
        assert_eq!(harmonic(1), 1.0);
        assert_relative_eq!(harmonic(3), 11.0 / 6.0, max_relative = 1e-15);
        // Asymptotic expansion oracle: ln k + γ + 1/(2k) - 1/(12k²).
        let k = 1_000_000u64;
        let kf = k as f64;
        let asym = kf.ln() + 0.577_215_664_901_532_9 + 1.0 / (2.0 * kf) - 1.0 / (12.0 * kf * kf);
        assert!((harmonic(k) - asym).abs() < 1e-12);
        assert!((harmonic(k) - (kf.ln() + 0.5772156649)).abs() < 1e-6);
    }

    proptest::proptest! {
        #[test]
        fn incomplete_beta_monotone_and_complement(x in 0.0f64..1.0, dx in 0.0f64..0.1, a in 0.2f64..60.0, b in 0.2f64..60.0) {
            let x2 = (x + dx).min(1.0);
            let lo = incomplete_beta(x, a, b).unwrap();
            let hi = incomplete_beta(x2, a, b).unwrap();
            proptest::prop_assert!(hi >= lo - 1e-15 * lo.abs().max(1e-300));
            let full = ln_beta(a, b).unwrap().exp();
            let comp = full - incomplete_beta(1.0 - x, b, a).unwrap();
            proptest::prop_assert!((lo - comp).abs() <= 1e-10 * full.max(1.0));
        }

        #[test]
        fn normal_cdf_symmetric(z in -30.0f64..30.0) {
            proptest::prop_assert!((normal_cdf(z) + normal_cdf(-z) - 1.0).abs() <= 1e-12);
            proptest::prop_assert!(normal_cdf(z + 1e-3) >= normal_cdf(z));
        }
    }
}
