//! Globally adaptive Gauss–Kronrod (7–15) quadrature for real and complex
//! integrands.
//!
//! The integrator keeps a pool of panels, repeatedly bisecting the one with the
//! largest error estimate (|K15 − G7|) until the summed estimate falls below
//! `max(abs, rel·|I|)` or the node budget runs out.

use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub const NODES_PER_PANEL: usize = 15;

/// Values that can be integrated: real or complex.
pub trait Quadrable:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;
}

impl Quadrable for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Quadrable for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral<V> {
    pub value: V,
    pub error: f64,
    pub nodes: usize,
}

struct Panel<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One Gauss–Kronrod panel on `[a, b]`. Nodes are visited in ascending order,
/// which lets stateful integrands compare neighbouring evaluations.
pub fn gk15<V, F>(f: &mut F, a: f64, b: f64) -> Result<(V, f64)>
where
    V: Quadrable,
    F: FnMut(f64) -> Result<V>,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = V::default();
    let mut gauss = V::default();
    for j in 0..7 {
        let x = centre - half * XGK[j];
        let y = f(x)?;
        kronrod = kronrod + y * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + y * WG[j / 2];
        }
    }
    let y = f(centre)?;
    kronrod = kronrod + y * WGK[7];
    gauss = gauss + y * WG[3];
    for j in (0..7).rev() {
        let x = centre + half * XGK[j];
        let y = f(x)?;
        kronrod = kronrod + y * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + y * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).magnitude();
    Ok((value, error))
}

/// Adaptive integration over `[points[0], points[last]]`, with the interior
/// points used as initial panel boundaries (e.g. kinks of the integrand).
pub fn integrate_breakpoints<V, F>(
    mut f: F,
    points: &[f64],
    tol: Tolerance,
    max_nodes: usize,
) -> Result<Integral<V>>
where
    V: Quadrable,
    F: FnMut(f64) -> Result<V>,
{
    if points.len() < 2 {
        return Ok(Integral { value: V::default(), error: 0.0, nodes: 0 });
    }
    let mut heap = BinaryHeap::with_capacity(points.len() * 4);
    let mut nodes = 0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b == a {
            continue;
        }
        let (value, error) = gk15(&mut f, a, b)?;
        nodes += NODES_PER_PANEL;
        heap.push(Panel { a, b, value, error });
    }

    loop {
        let (value, error) = totals(&heap);
        if error <= tol.target(value.magnitude()) {
            return Ok(Integral { value, error, nodes });
        }
        if nodes + 2 * NODES_PER_PANEL > max_nodes {
            return Err(Error::Quadrature { error, nodes });
        }
        let Some(worst) = heap.pop() else {
            return Ok(Integral { value, error, nodes });
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            return Err(Error::Quadrature { error, nodes });
        }
        let (lv, le) = gk15(&mut f, worst.a, mid)?;
        let (rv, re) = gk15(&mut f, mid, worst.b)?;
        nodes += 2 * NODES_PER_PANEL;
        heap.push(Panel { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Panel { a: mid, b: worst.b, value: rv, error: re });
    }
}

pub fn integrate<V, F>(f: F, a: f64, b: f64, tol: Tolerance, max_nodes: usize) -> Result<Integral<V>>
where
    V: Quadrable,
    F: FnMut(f64) -> Result<V>,
{
    integrate_breakpoints(f, &[a, b], tol, max_nodes)
}

fn totals<V: Quadrable>(heap: &BinaryHeap<Panel<V>>) -> (V, f64) {
    heap.iter()
        .fold((V::default(), 0.0), |(v, e), p| (v + p.value, e + p.error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact_on_one_panel() {
        let mut f = |x: f64| Ok(x.powi(5) - 3.0 * x * x + 1.0);
        let (v, _) = gk15::<f64, _>(&mut f, -1.0, 2.0).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0) + 3.0;
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn nodes_are_visited_in_ascending_order() {
        let mut last = f64::NEG_INFINITY;
        let mut f = |x: f64| {
            assert!(x > last);
            last = x;
            Ok(1.0)
        };
        gk15::<f64, _>(&mut f, 0.0, 1.0).unwrap();
    }

    #[test]
    fn complex_oscillatory_integral() {
        // ∫_0^10 e^{i 3 x} dx = (e^{30 i} - 1) / (3 i)
        let f = |x: f64| Ok(Complex64::new(0.0, 3.0 * x).exp());
        let r = integrate(f, 0.0, 10.0, Tolerance::absolute(1e-12), 1 << 16).unwrap();
        let exact = (Complex64::new(0.0, 30.0).exp() - 1.0) / Complex64::new(0.0, 3.0);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let f = |x: f64| Ok(if x < 0.3 { 0.0 } else { 1.0 });
        let err = integrate(f, 0.0, 1.0, Tolerance::absolute(1e-15), 100).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn breakpoints_handle_kinks() {
        let f = |x: f64| Ok((x - 0.3_f64).abs());
        let r = integrate_breakpoints(f, &[0.0, 0.3, 1.0], Tolerance::absolute(1e-14), 1 << 12)
            .unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-14);
    }
}
