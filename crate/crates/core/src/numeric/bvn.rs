//! Bivariate normal upper-orthant probability, after Genz's method: Gauss-Legendre on
//! Drezner-Wesolowsky's integral for moderate correlation, and an asymptotic
//! expansion around the singular case for `|r| >= 0.925`.

use super::normal::norm_cdf;
use std::f64::consts::PI;

// (weight, abscissa) pairs for the positive half of each Gauss-Legendre rule.
const GL6: [(f64, f64); 3] = [
    (0.171_324_492_379_169_75, 0.932_469_514_203_152),
    (0.360_761_573_048_138_94, 0.661_209_386_466_264_5),
    (0.467_913_934_572_691_37, 0.238_619_186_083_196_93),
];
const GL12: [(f64, f64); 6] = [
    (0.047_175_336_386_512_02, 0.981_560_634_246_719_2),
    (0.106_939_325_995_318_88, 0.904_117_256_370_474_8),
    (0.160_078_328_543_346_1, 0.769_902_674_194_304_7),
    (0.203_167_426_723_065_65, 0.587_317_954_286_617_5),
    (0.233_492_536_538_354_64, 0.367_831_498_998_180_2),
    (0.249_147_045_813_402_7, 0.125_233_408_511_468_9),
];
const GL20: [(f64, f64); 10] = [
    (0.017_614_007_139_153_273, 0.993_128_599_185_094_9),
    (0.040_601_429_800_386_22, 0.963_971_927_277_913_8),
    (0.062_672_048_334_109_44, 0.912_234_428_251_325_8),
    (0.083_276_741_576_704_67, 0.839_116_971_822_218_8),
    (0.101_930_119_817_240_26, 0.746_331_906_460_150_8),
    (0.118_194_531_961_518_25, 0.636_053_680_726_515),
    (0.131_688_638_449_176_53, 0.510_867_001_950_827_1),
    (0.142_096_109_318_381_87, 0.373_706_088_715_419_55),
    (0.149_172_986_472_603_66, 0.227_785_851_141_645_1),
    (0.152_753_387_130_725_78, 0.076_526_521_133_497_34),
];

/// `P{X > h, Y > k}` for standard normals with correlation `r`.
pub fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return norm_cdf(-k);
    }
    if k == f64::NEG_INFINITY {
        return norm_cdf(-h);
    }
    let r = r.clamp(-1.0, 1.0);
    if r == 0.0 {
        return norm_cdf(-h) * norm_cdf(-k);
    }
    let rule: &[(f64, f64)] = if r.abs() < 0.3 {
        &GL6
    } else if r.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    };
    let tp = 2.0 * PI;
    let value = if r.abs() < 0.925 {
        let hk = h * k;
        let hs = 0.5 * (h * h + k * k);
        let asr = 0.5 * r.asin();
        let mut sum = 0.0;
        for &(w, x) in rule {
            for node in [1.0 - x, 1.0 + x] {
                let sn = (asr * node).sin();
                sum += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        sum * asr / tp + norm_cdf(-h) * norm_cdf(-k)
    } else {
        // Reflect to positive correlation, expand around r = 1, reflect back.
        let k = if r < 0.0 { -k } else { k };
        let hk = h * k;
        let mut bvn = 0.0;
        if r.abs() < 1.0 {
            let a2 = (1.0 - r) * (1.0 + r);
            let mut a = a2.sqrt();
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 80.0;
            let asr = -0.5 * (bs / a2 + hk);
            if asr > -100.0 {
                bvn = a * asr.exp() * (1.0 - c * (bs - a2) * (1.0 - d * bs) / 3.0 + c * d * a2 * a2);
            }
            if hk > -100.0 {
                let b = bs.sqrt();
                let sp = tp.sqrt() * norm_cdf(-b / a);
                bvn -= (-0.5 * hk).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a *= 0.5;
            let mut sum = 0.0;
            for &(w, x) in rule {
                for node in [1.0 - x, 1.0 + x] {
                    let xs = (a * node) * (a * node);
                    let asr = -0.5 * (bs / xs + hk);
                    if asr > -100.0 {
                        let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                        let rs = (1.0 - xs).sqrt();
                        let ep = (-0.5 * hk * xs / ((1.0 + rs) * (1.0 + rs))).exp() / rs;
                        sum += w * asr.exp() * (sp - ep);
                    }
                }
            }
            bvn = (a * sum - bvn) / tp;
        }
        if r > 0.0 {
            bvn + norm_cdf(-h.max(k))
        } else if h >= k {
            -bvn
        } else {
            let l = if h < 0.0 { norm_cdf(k) - norm_cdf(h) } else { norm_cdf(-h) - norm_cdf(-k) };
            l - bvn
        }
    };
    value.clamp(0.0, 1.0)
}
