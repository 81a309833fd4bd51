//! Globally adaptive Gauss–Kronrod integration, used as an independent
//! reference by the test suites and the `selftest` command.
//!
//! Integrable endpoint singularities (logarithms, inverse square roots) are
//! handled by bisection towards the endpoint; interior singular points must be
//! passed as breakpoints.

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let (f1, f2) = (f(c - h * XGK[j]), f(c + h * XGK[j]));
        k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    Piece {
        a,
        b,
        value: h * k,
        error: (h * (k - g)).abs(),
    }
}

/// Integral of `f` over `[a, b]` to absolute tolerance `tol`, or as close as
/// rounding allows.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    integrate_breaks(f, &[a, b], tol)
}

/// Integral over `[points[0], points[last]]` with the given breakpoints.
pub fn integrate_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: f64) -> f64 {
    assert!(points.len() >= 2, "need at least two breakpoints");
    let mut pieces: Vec<Piece> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod(&f, w[0], w[1]))
        .collect();
    for _ in 0..20_000 {
        let total: f64 = pieces.iter().map(|p| p.error).sum();
        if total <= tol {
            break;
        }
        let (idx, worst) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, p)| (i, *p))
            .unwrap();
        let m = 0.5 * (worst.a + worst.b);
        if worst.b - worst.a <= 1e-13 * (worst.a.abs() + worst.b.abs()) + f64::MIN_POSITIVE {
            // interval exhausted at rounding level
            pieces[idx].error = 0.0;
            continue;
        }
        pieces[idx] = kronrod(&f, worst.a, m);
        pieces.push(kronrod(&f, m, worst.b));
    }
    // sum small contributions first
    let mut values: Vec<f64> = pieces.iter().map(|p| p.value).collect();
    values.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    values.iter().sum()
}
