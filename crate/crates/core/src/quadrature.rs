//! Adaptive Gauss–Kronrod (7/15) quadrature.
#![allow(clippy::excessive_precision)]

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

// Gauss weights for the odd-indexed Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: u64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64, depth: u32, acc: &mut Integral) {
    let (value, error) = gk15(f, lo, hi);
    acc.evaluations += 15;
    if error <= tol || depth >= MAX_DEPTH {
        acc.value += value;
        acc.error += error;
        return;
    }
    let mid = 0.5 * (lo + hi);
    adapt(f, lo, mid, 0.5 * tol, depth + 1, acc);
    adapt(f, mid, hi, 0.5 * tol, depth + 1, acc);
}

/// Integrate over consecutive panels `[breaks[i], breaks[i+1]]`, splitting the
/// absolute tolerance in proportion to panel width.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64) -> Integral {
    let total = breaks[breaks.len() - 1] - breaks[0];
    let mut acc = Integral { value: 0.0, error: 0.0, evaluations: 0 };
    for w in breaks.windows(2) {
        adapt(&f, w[0], w[1], tol * (w[1] - w[0]) / total, 0, &mut acc);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_and_transcendentals() {
        let r = integrate(|x| x * x * x, &[0.0, 1.0], 1e-14);
        assert!((r.value - 0.25).abs() < 1e-15);
        let r = integrate(f64::exp, &[0.0, 0.5, 1.0], 1e-13);
        assert!((r.value - (std::f64::consts::E - 1.0)).abs() < 1e-13);
        let r = integrate(|x: f64| x.sqrt(), &[0.0, 1.0], 1e-10);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-9);
    }
}
