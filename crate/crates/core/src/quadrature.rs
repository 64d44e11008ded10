//! Globally adaptive Gauss–Kronrod (7, 15) quadrature on intervals.
//!
//! Intervals are bisected worst-first until the summed error estimate drops
//! below the requested absolute tolerance. Callers may pass breakpoints where
//! the integrand has jumps or kinks; they seed the initial partition.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    /// Final partition: `(a, b, estimate, error)` per leaf, sorted by `a`.
    pub leaves: Vec<(f64, f64, f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Largest width of an interval in the initial partition; guarantees that
    /// narrow features are sampled.
    pub max_initial_width: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-10, rel_tol: 0.0, max_intervals: 20_000, max_initial_width: f64::INFINITY }
    }
}

impl QuadOptions {
    pub fn abs(tol: f64) -> Self {
        QuadOptions { abs_tol: tol, ..Default::default() }
    }
}

/// One 15-point Kronrod panel: (integral, error estimate).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kron * h;
    let err = ((kron - gauss) * h).abs();
    (value, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error).then(o.a.total_cmp(&self.a))
    }
}

/// Integrates `f` over `[a, b]` with the given breakpoints.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breaks: &[f64], opts: &QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0, leaves: vec![] });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = std::iter::once(lo)
        .chain(breaks.iter().copied().filter(|x| *x > lo && *x < hi && x.is_finite()))
        .chain(std::iter::once(hi))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if opts.max_initial_width.is_finite() && opts.max_initial_width > 0.0 {
        let mut refined = vec![cuts[0]];
        for w in cuts.windows(2) {
            let n = ((w[1] - w[0]) / opts.max_initial_width).ceil().max(1.0) as usize;
            for i in 1..=n {
                refined.push(if i == n { w[1] } else { w[0] + (w[1] - w[0]) * i as f64 / n as f64 });
            }
        }
        cuts = refined;
    }
    let mut heap = BinaryHeap::new();
    let mut evals = 0usize;
    for w in cuts.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        evals += 15;
        heap.push(Panel { a: w[0], b: w[1], value: v, error: e });
    }
    let totals = |heap: &BinaryHeap<Panel>| {
        let mut v = NeumaierSum::new();
        let mut e = NeumaierSum::new();
        for p in heap.iter() {
            v.add(p.value);
            e.add(p.error);
        }
        (v.value(), e.value())
    };
    let (mut value, mut error) = totals(&heap);
    while error > opts.abs_tol.max(opts.rel_tol * value.abs()) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::QuadratureNotConverged { estimate: sign * value, error, tol: opts.abs_tol });
        }
        let worst = heap.pop().expect("nonempty heap");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // interval at machine resolution; cannot refine further
            heap.push(worst);
            return Err(Error::QuadratureNotConverged { estimate: sign * value, error, tol: opts.abs_tol });
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        evals += 30;
        value += (v1 + v2) - worst.value;
        error += (e1 + e2) - worst.error;
        heap.push(Panel { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: worst.b, value: v2, error: e2 });
        if heap.len() % 64 == 0 {
            (value, error) = totals(&heap);
        }
    }
    let (value, error) = totals(&heap);
    let mut leaves: Vec<_> = heap.into_iter().map(|p| (p.a, p.b, sign * p.value, p.error)).collect();
    leaves.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(QuadResult { value: sign * value, error, evaluations: evals, leaves })
}
