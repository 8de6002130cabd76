//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

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

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Panel { a, b, value: k * h, error: ((k - g) * h).abs() }
}

/// Integrates `f` over `[a, b]` split into `initial` equal panels, bisecting the
/// worst panel until the summed error estimate is below `abs_tol` or `max_panels`
/// is reached.
pub fn integrate<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    initial: usize,
    abs_tol: f64,
    max_panels: usize,
) -> Integral {
    if !(b > a) {
        return Integral { value: 0.0, error: 0.0, evaluations: 0 };
    }
    let initial = initial.max(1);
    let width = (b - a) / initial as f64;
    let edges: Vec<f64> = (0..=initial).map(|i| if i == initial { b } else { a + width * i as f64 }).collect();
    integrate_on(f, &edges, abs_tol, max_panels)
}

/// [`integrate`] starting from the panels between consecutive `edges` (increasing).
/// Put edges around features narrower than a panel, which the error estimate of a
/// coarse panel can miss.
pub fn integrate_on<F: FnMut(f64) -> f64>(mut f: F, edges: &[f64], abs_tol: f64, max_panels: usize) -> Integral {
    let mut panels: Vec<Panel> =
        edges.windows(2).filter(|w| w[1] > w[0]).map(|w| gk15(&mut f, w[0], w[1])).collect();
    if panels.is_empty() {
        return Integral { value: 0.0, error: 0.0, evaluations: 0 };
    }
    let max_panels = max_panels.max(panels.len());
    let mut evaluations = 15 * panels.len();
    loop {
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if error <= abs_tol || panels.len() >= max_panels {
            break;
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("nonempty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // panel cannot be split further in floating point
            panels.push(Panel { error: 0.0, ..p });
            continue;
        }
        panels.push(gk15(&mut f, p.a, mid));
        panels.push(gk15(&mut f, mid, p.b));
        evaluations += 30;
    }
    // sum in position order so the result does not depend on the refinement history
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    Integral {
        value: panels.iter().map(|p| p.value).sum(),
        error: panels.iter().map(|p| p.error).sum(),
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1, 1e-14, 10);
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn kink_is_refined() {
        let r = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1, 1e-12, 200);
        assert!((r.value - 0.29).abs() < 1e-11, "{r:?}");
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate(|_| 1.0, 1.0, 1.0, 4, 1e-9, 10).value, 0.0);
    }
}
