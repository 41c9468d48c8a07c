//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.

// nodes and weights as tabulated, beyond f64 precision
#![allow(clippy::excessive_precision)]

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
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

// Gauss weights for the odd Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: f64,
}

fn gk15<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64) -> Segment<N> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = [0.0; N];
    let mut gauss = [0.0; N];
    for n in 0..N {
        kronrod[n] = WGK[7] * fc[n];
        gauss[n] = WG[3] * fc[n];
    }
    for k in 0..7 {
        let dx = half * XGK[k];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for n in 0..N {
            let s = f1[n] + f2[n];
            kronrod[n] += WGK[k] * s;
            if k % 2 == 1 {
                gauss[n] += WG[k / 2] * s;
            }
        }
    }
    let mut error = 0.0f64;
    for n in 0..N {
        kronrod[n] *= half;
        gauss[n] *= half;
        error = error.max((kronrod[n] - gauss[n]).abs());
    }
    Segment {
        a,
        b,
        value: kronrod,
        error,
    }
}

/// Integrates `f` over consecutive `breaks` (must be increasing), refining
/// the worst segment until the max-norm error estimate falls below
/// `rel_tol * max|I| + abs_tol` or `max_segments` is reached.
pub(crate) fn integrate<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: F,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_segments: usize,
) -> [f64; N] {
    let mut segs: Vec<Segment<N>> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    loop {
        let mut total = [0.0; N];
        let mut err = 0.0;
        for s in &segs {
            for (t, v) in total.iter_mut().zip(&s.value) {
                *t += v;
            }
            err += s.error;
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if err <= rel_tol * scale + abs_tol || segs.len() >= max_segments {
            return total;
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(k, _)| k)
            .unwrap();
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segs.push(gk15(&f, s.a, mid));
        segs.push(gk15(&f, mid, s.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| [x * x, 1.0], &[0.0, 2.0], 1e-14, 0.0, 10);
        assert!((v[0] - 8.0 / 3.0).abs() < 1e-14);
        assert!((v[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn narrow_lorentzian() {
        let w = 1e-3;
        let v = integrate(|x| [w / (x * x + w * w)], &[-1.0, -w, 0.0, w, 1.0], 1e-12, 0.0, 500);
        let exact = 2.0 * (1.0 / w).atan();
        assert!((v[0] - exact).abs() / exact < 1e-10, "{} vs {exact}", v[0]);
        assert!((exact - PI).abs() < 3e-3);
    }
}
