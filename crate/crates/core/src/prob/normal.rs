//! Standard normal density, distribution and quantile functions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

use crate::error::{Error, Result};

/// `(2π)^(-1/2)`
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density φ(u). Underflows to 0 for |u| beyond about 38.6.
#[inline]
pub fn std_normal_pdf(u: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * u * u).exp()
}

/// Standard normal distribution function Φ(u).
///
/// Evaluated through `erfc` on the tail side of the argument so that neither
/// tail loses relative accuracy to cancellation.
#[inline]
pub fn std_normal_cdf(u: f64) -> f64 {
    if u < 0.0 {
        0.5 * erfc(-u * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * erfc(u * FRAC_1_SQRT_2)
    }
}

/// Upper tail 1 − Φ(u) without cancellation.
#[inline]
pub fn std_normal_sf(u: f64) -> f64 {
    std_normal_cdf(-u)
}

/// Standard normal quantile Φ⁻¹(p) for p in (0,1).
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "normal quantile requires 0 < p < 1, got {p}"
        )));
    }
    Ok(ppnd16(p))
}

/// Algorithm AS 241 (PPND16) rational approximations, relative accuracy
/// about 1e-16 over the whole open interval. `p` must lie in (0,1).
#[inline]
pub(crate) fn ppnd16(p: f64) -> f64 {
    const SPLIT1: f64 = 0.425;
    const SPLIT2: f64 = 5.0;
    const CONST1: f64 = 0.180625;
    const CONST2: f64 = 1.6;

    const A: [f64; 8] = [
        3.387_132_872_796_366_608_0,
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
        6.871_870_074_920_579_083_0e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061_0e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_545_925e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_90,
        5.769_497_221_460_691_405_50,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        2.417_807_251_774_506_117_70e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_40e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_40,
        6.897_673_349_851_000_045_50e-1,
        1.481_039_764_274_800_745_90e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946_00e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_20,
        5.463_784_911_164_114_369_90,
        1.784_826_539_917_291_335_80,
        2.965_605_718_285_048_912_30e-1,
        2.653_218_952_657_612_309_30e-2,
        1.242_660_947_388_078_438_60e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_90e-1,
        1.369_298_809_227_358_053_10e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591_00e-4,
        1.846_318_317_510_054_681_80e-5,
        1.421_511_758_316_445_888_70e-7,
        2.044_263_103_389_939_785_64e-15,
    ];

    #[inline]
    fn poly(c: &[f64; 8], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
    }

    let q = p - 0.5;
    if q.abs() <= SPLIT1 {
        let r = CONST1 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let value = if r <= SPLIT2 {
        let r = r - CONST2;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - SPLIT2;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -value
    } else {
        value
    }
}

/// k-th derivative of φ, k ≤ 6, via probabilists' Hermite polynomials:
/// φ⁽ᵏ⁾(u) = (−1)ᵏ Heₖ(u) φ(u).
pub fn std_normal_pdf_derivative(u: f64, order: usize) -> f64 {
    let u2 = u * u;
    let he = match order {
        0 => 1.0,
        1 => u,
        2 => u2 - 1.0,
        3 => u * (u2 - 3.0),
        4 => u2 * (u2 - 6.0) + 3.0,
        5 => u * (u2 * (u2 - 10.0) + 15.0),
        6 => u2 * (u2 * (u2 - 15.0) + 45.0) - 15.0,
        _ => panic!("derivative order {order} not supported"),
    };
    let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
    sign * he * std_normal_pdf(u)
}

/// `1/(2√π)`, the roughness ∫φ² of the Gaussian kernel.
pub fn gaussian_roughness() -> f64 {
    0.5 / PI.sqrt()
}
