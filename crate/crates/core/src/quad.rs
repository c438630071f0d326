//! Adaptive Gauss–Kronrod quadrature (7/15-point pair, global bisection).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Exponential envelope cut-off used for semi-infinite integrals: the tail
/// beyond `a + TAIL_DECADES / rate` is below `e^-40` of the envelope peak.
pub const TAIL_DECADES: f64 = 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-14,
            rel: 1e-10,
            max_intervals: 20_000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [0.0; 15];
    fv[14] = f(c);
    for j in 0..7 {
        let dx = h * XGK[j];
        fv[2 * j] = f(c - dx);
        fv[2 * j + 1] = f(c + dx);
    }
    let mut kronrod = fv[14] * WGK[7];
    let mut gauss = fv[14] * WG[3];
    let mut abs = fv[14].abs() * WGK[7];
    for j in 0..7 {
        let s = fv[2 * j] + fv[2 * j + 1];
        kronrod += WGK[j] * s;
        abs += WGK[j] * (fv[2 * j].abs() + fv[2 * j + 1].abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fv[14] - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
    }
    let h = h.abs();
    let (asc, abs) = (asc * h, abs * h);
    // error scaling and round-off floor as in QUADPACK's QK15
    let mut error = ((kronrod - gauss) * h).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs);
    }
    Segment {
        a,
        b,
        value: kronrod * h,
        error,
    }
}

/// `∫_a^b f(x) dx` to `max(tol.abs, tol.rel * |I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("integration limits must be finite"));
    }
    let first = gk15(&mut f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    while error > tol.abs.max(tol.rel * value.abs()) {
        if heap.len() >= tol.max_intervals {
            return Err(Error::Accuracy(format!(
                "quadrature did not converge on [{a}, {b}]: estimate {value}, error {error}"
            )));
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split in floating point
            return Err(Error::Accuracy(format!(
                "quadrature interval collapsed near {mid}"
            )));
        }
        let left = gk15(&mut f, worst.a, mid);
        let right = gk15(&mut f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // re-sum to shed accumulated rounding from the running updates
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    if !value.is_finite() {
        return Err(Error::Accuracy(
            "quadrature produced a non-finite value".into(),
        ));
    }
    Ok(Estimate { value, error })
}

/// `∫_a^b f(x) dx` for an integrand built from exponentials `exp(-r (x-a))`
/// with `r` in `rates`. The range is cut at `a + TAIL_DECADES / r` for every
/// rate so that fast transients get their own sub-interval; an infinite `b`
/// is truncated at the cut of the slowest rate.
pub fn integrate_decaying<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rates: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::domain("decay rates must be finite and >= 0"));
    }
    let mut cuts: Vec<f64> = rates
        .iter()
        .filter(|r| **r > 0.0)
        .map(|r| a + TAIL_DECADES / r)
        .collect();
    cuts.sort_by(f64::total_cmp);
    let end = if b.is_finite() {
        b
    } else {
        *cuts
            .last()
            .ok_or_else(|| Error::domain("an infinite range needs a positive decay rate"))?
    };
    let mut total = Estimate {
        value: 0.0,
        error: 0.0,
    };
    let mut lo = a;
    for hi in cuts
        .into_iter()
        .filter(|c| *c < end)
        .chain(std::iter::once(end))
    {
        if hi > lo {
            let e = integrate(&mut f, lo, hi, tol)?;
            total.value += e.value;
            total.error += e.error;
            lo = hi;
        }
    }
    Ok(total)
}

/// `∫_a^∞ f(x) dx`; see [`integrate_decaying`].
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    rates: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    integrate_decaying(f, a, f64::INFINITY, rates, tol)
}

/// `∫_a^b ∫_{lo(x)}^{hi(x)} f(x, y) dy dx` by nested adaptive quadrature.
pub fn integrate_2d<F, L, H>(f: F, a: f64, b: f64, lo: L, hi: H, tol: Tolerance) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64,
    L: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let inner_tol = Tolerance {
        abs: tol.abs * 1e-2,
        rel: tol.rel * 1e-2,
        ..tol
    };
    let mut failure = None;
    let est = integrate(
        |x| match integrate(|y| f(x, y), lo(x), hi(x), inner_tol) {
            Ok(e) => e.value,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        tol,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let e = integrate(|x| 3.0 * x * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((e.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn exponential_tail() {
        let e = integrate_to_infinity(
            |t| 5.0 * (-5.0 * t).exp(),
            0.0,
            &[5.0],
            Tolerance::default(),
        )
        .unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        // a transient 12 decades faster than the tail is still resolved
        let k = 1e12;
        let f = |t: f64| k * (-k * t).exp() + (-t).exp();
        let e = integrate_to_infinity(f, 0.0, &[k, 1.0], Tolerance::default()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-9, "{}", e.value);
    }

    #[test]
    fn sharp_feature() {
        let k = 1e3;
        let e = integrate(
            |t| k * (-k * t).exp() + (-t).exp(),
            0.0,
            1.0,
            Tolerance::default(),
        )
        .unwrap();
        let exact = 1.0 - (-k).exp() + 1.0 - (-1.0f64).exp();
        assert!((e.value - exact).abs() < 1e-10, "{}", e.value);
    }

    #[test]
    fn finite_range_with_fast_start() {
        let k = 1e9;
        let e = integrate_decaying(|t| k * (-k * t).exp(), 0.0, 5.0, &[k], Tolerance::default())
            .unwrap();
        assert!((e.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn triangle_area() {
        let e = integrate_2d(|_, _| 1.0, 0.0, 1.0, |_| 0.0, |x| x, Tolerance::default()).unwrap();
        assert!((e.value - 0.5).abs() < 1e-13);
    }

    #[test]
    fn budget_exhaustion_is_accuracy_error() {
        let tol = Tolerance {
            abs: 0.0,
            rel: 0.0,
            max_intervals: 8,
        };
        assert!(matches!(
            integrate(|x| x.sin(), 0.0, 100.0, tol),
            Err(Error::Accuracy(_))
        ));
    }
}
