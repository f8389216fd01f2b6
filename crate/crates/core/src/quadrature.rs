//! Adaptive Gauss-Kronrod (7/15) integration on finite intervals.

/// Kronrod abscissae on [-1, 1], positive half, descending; the last one is 0.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd-indexed Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (k, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Integral {
    let (value, err) = gauss_kronrod(f, a, b);
    if err <= tol || depth >= MAX_DEPTH || (b - a).abs() < f64::EPSILON * a.abs().max(1.0) {
        return Integral {
            value,
            error_estimate: err,
        };
    }
    let mid = 0.5 * (a + b);
    let left = adapt(f, a, mid, 0.5 * tol, depth + 1);
    let right = adapt(f, mid, b, 0.5 * tol, depth + 1);
    Integral {
        value: left.value + right.value,
        error_estimate: left.error_estimate + right.error_estimate,
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol`, bisecting
/// until the Gauss/Kronrod difference on each panel meets its share.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Integral {
    if a == b {
        return Integral {
            value: 0.0,
            error_estimate: 0.0,
        };
    }
    adapt(&f, a, b, abs_tol.max(f64::MIN_POSITIVE), 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_interval_length() {
        let kronrod: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        let gauss: f64 = 2.0 * WG[..3].iter().sum::<f64>() + WG[3];
        assert!((kronrod - 2.0).abs() < 1e-15);
        assert!((gauss - 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_panel_is_exact_for_high_degree_polynomials() {
        // K15 integrates polynomials up to degree 22 exactly; G7 up to 13.
        let (k, _) = gauss_kronrod(&|x: f64| x.powi(22), -1.0, 1.0);
        assert!((k - 2.0 / 23.0).abs() < 1e-15);
        let (k, err) = gauss_kronrod(&|x: f64| x.powi(12) + 3.0 * x.powi(5), 0.0, 1.0);
        assert!((k - (1.0 / 13.0 + 0.5)).abs() < 1e-15);
        assert!(err < 1e-15);
    }

    #[test]
    fn exponential_tail() {
        let r = integrate(|t| 2.5 * (-2.5 * t).exp(), 0.0, 40.0, 1e-13);
        assert!((r.value - (1.0 - (-100.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn kinked_integrand() {
        let r = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12);
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-11);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate(|x| x, 1.0, 1.0, 1e-9).value, 0.0);
    }
}
