//! Adaptive Gauss–Kronrod (7/15) quadrature for small vector-valued integrands.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone)]
pub struct QuadResult<const N: usize> {
    pub value: [f64; N],
    /// Sum of per-interval |Kronrod − Gauss| estimates (max over components).
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: f64,
}

fn kronrod<const N: usize, F: FnMut(f64) -> [f64; N]>(f: &mut F, a: f64, b: f64) -> Segment<N> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    let fc = f(center);
    for c in 0..N {
        k[c] = WGK[7] * fc[c];
        g[c] = WG[3] * fc[c];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for c in 0..N {
            let s = f1[c] + f2[c];
            k[c] += WGK[j] * s;
            if j % 2 == 1 {
                g[c] += WG[j / 2] * s;
            }
        }
    }
    let mut error = 0.0_f64;
    for c in 0..N {
        k[c] *= half;
        g[c] *= half;
        error = error.max((k[c] - g[c]).abs());
    }
    Segment { a, b, value: k, error }
}

/// Integrates `f` over the union of consecutive intervals given by
/// `breakpoints` (ascending), bisecting the worst segment until the summed
/// error estimate drops below `abs_tol` or `max_segments` is reached.
pub fn integrate_adaptive<const N: usize, F>(
    mut f: F,
    breakpoints: &[f64],
    abs_tol: f64,
    max_segments: usize,
) -> QuadResult<N>
where
    F: FnMut(f64) -> [f64; N],
{
    let mut segments: Vec<Segment<N>> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod(&mut f, w[0], w[1]))
        .collect();
    loop {
        let total_err: f64 = segments.iter().map(|s| s.error).sum();
        if total_err <= abs_tol || segments.len() >= max_segments {
            let mut value = [0.0; N];
            for s in &segments {
                for c in 0..N {
                    value[c] += s.value[c];
                }
            }
            return QuadResult { value, error: total_err, intervals: segments.len(), converged: total_err <= abs_tol };
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            // cannot split further; freeze it
            segments.push(Segment { error: 0.0, ..seg });
            continue;
        }
        segments.push(kronrod(&mut f, seg.a, mid));
        segments.push(kronrod(&mut f, mid, seg.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate_adaptive(|x| [x.powi(5) - 2.0 * x], &[0.0, 2.0], 1e-12, 50);
        assert!((r.value[0] - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate_adaptive(|x: f64| [x.sqrt(), (1.0 / x.sqrt()).min(1e12)], &[0.0, 1.0], 1e-9, 400);
        assert!((r.value[0] - 2.0 / 3.0).abs() < 1e-9);
        assert!((r.value[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn breakpoints_handle_kinks() {
        let r = integrate_adaptive(|x: f64| [(x - 0.3).abs()], &[0.0, 0.3, 1.0], 1e-12, 10);
        assert!((r.value[0] - (0.045 + 0.245)).abs() < 1e-14);
    }
}
