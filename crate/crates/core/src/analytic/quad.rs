//! Adaptive Gauss-Kronrod (7/15) quadrature.

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
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 50;

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` until the Gauss/Kronrod difference on each
/// panel is below `max(abs_tol, rel_tol * |panel|)` scaled to its width.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        abs_tol: f64,
        rel_tol: f64,
        depth: u32,
    ) -> f64 {
        let (value, err) = kronrod(f, a, b);
        if err <= abs_tol.max(rel_tol * value.abs()) || depth >= MAX_DEPTH {
            return value;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * abs_tol, rel_tol, depth + 1)
            + recurse(f, mid, b, 0.5 * abs_tol, rel_tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    recurse(&f, a, b, abs_tol, rel_tol, 0)
}
