//! Standard normal distribution function and its inverse.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Φ⁻¹(p) for p in (0, 1).
///
/// Wichura's AS241 (PPND16) rational approximation followed by one Newton
/// step on [`normal_cdf`]. Upper-half arguments are reflected so the
/// refinement always runs where Φ carries full relative precision.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "normal quantile requires p in (0, 1), got {p}"
        )));
    }
    if p > 0.5 {
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

fn lower_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let x = ppnd16(p);
    let density = normal_pdf(x);
    if density > 0.0 && density.is_finite() {
        x - (normal_cdf(x) - p) / density
    } else {
        x
    }
}

#[allow(clippy::excessive_precision)]
fn ppnd16(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        2.417_807_251_774_506_117_7e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        6.897_673_349_851_000_045_5e-1,
        1.481_039_764_274_800_745_9e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        2.965_605_718_285_048_912_3e-1,
        2.653_218_952_657_612_309_3e-2,
        1.242_660_947_388_078_438_6e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_9e-1,
        1.369_298_809_227_358_053_1e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

fn poly(coef: &[f64; 8], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Φ by the Taylor series of erf for |x| small and a Lentz continued
    /// fraction for erfc in the tails. Independent of `libm`.
    fn cdf_reference(x: f64) -> f64 {
        let z = x.abs() * FRAC_1_SQRT_2;
        let upper_tail = if z < 2.5 {
            // erf(z) = 2/sqrt(pi) * sum (-1)^k z^(2k+1) / (k! (2k+1))
            let mut term = z;
            let mut sum = z;
            for k in 1..200 {
                term *= -z * z / k as f64;
                let add = term / (2 * k + 1) as f64;
                sum += add;
                if add.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            0.5 * (1.0 - 2.0 / PI.sqrt() * sum)
        } else {
            // erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + 1/2/(z + 1/(z + 3/2/(z + ...))))
            let tiny = 1e-300;
            let mut f = z;
            let mut c = z;
            let mut d = 0.0;
            for k in 1..500 {
                let a = k as f64 / 2.0;
                d = z + a * d;
                if d.abs() < tiny {
                    d = tiny;
                }
                c = z + a / c;
                if c.abs() < tiny {
                    c = tiny;
                }
                d = 1.0 / d;
                let delta = c * d;
                f *= delta;
                if (delta - 1.0).abs() < 1e-16 {
                    break;
                }
            }
            0.5 * (-z * z).exp() / PI.sqrt() / f
        };
        if x >= 0.0 {
            1.0 - upper_tail
        } else {
            upper_tail
        }
    }

    #[test]
    fn cdf_matches_reference() {
        let mut x = -8.0;
        while x <= 8.0 {
            let diff = (normal_cdf(x) - cdf_reference(x)).abs();
            assert!(diff <= 1e-12, "x={x} diff={diff}");
            x += 0.01;
        }
    }

    #[test]
    fn cdf_symmetry() {
        assert_eq!(normal_cdf(0.0), 0.5);
        for x in [0.5, 1.0, 2.0] {
            assert!((normal_cdf(-x) + normal_cdf(x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn quantile_round_trip() {
        let mut x = -7.5;
        while x <= 7.5 {
            let back = normal_quantile(normal_cdf(x)).unwrap();
            // for large x, rounding p near 1 moves the quantile by about eps / φ(x)
            let tol = 1e-9 + f64::EPSILON / normal_pdf(x);
            assert!((back - x).abs() <= tol, "x={x} back={back}");
            x += 0.05;
        }
    }

    #[test]
    fn quantile_reference_values() {
        // bisection on the independent reference cdf
        let bisect = |p: f64| {
            let (mut lo, mut hi) = (-10.0, 10.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if cdf_reference(mid) < p {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        for p in [0.975, 0.75, 0.5, 0.1, 1e-5, 1e-12] {
            let q = normal_quantile(p).unwrap();
            assert!((q - bisect(p)).abs() < 1e-9, "p={p}");
        }
        assert!((normal_quantile(0.975).unwrap() - 1.959964).abs() < 1e-6);
        assert!((normal_quantile(0.025).unwrap() + 1.959964).abs() < 1e-6);
    }

    #[test]
    fn quantile_domain() {
        assert!(matches!(normal_quantile(0.0), Err(Error::Domain(_))));
        assert!(matches!(normal_quantile(1.0), Err(Error::Domain(_))));
        assert!(normal_quantile(f64::NAN).is_err());
    }
}
