//! Central finite-difference machinery.
//!
//! Everything geometric in this crate ultimately differentiates smooth
//! user-supplied fields (metrics, connections, potentials) with central
//! stencils of order 2 or 4, optionally sharpened by one Richardson
//! extrapolation step. Boundary handling lives in the chart layer; the
//! helpers here assume the supplied closures are evaluable on the whole
//! stencil.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Order of accuracy of the central stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOrder {
    Two,
    Four,
}

impl Serialize for FdOrder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u64(self.exponent() as u64)
    }
}

impl<'de> Deserialize<'de> for FdOrder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = u64::deserialize(d)?;
        match v {
            2 => Ok(FdOrder::Two),
            4 => Ok(FdOrder::Four),
            other => Err(serde::de::Error::custom(format!(
                "fd order must be 2 or 4, got {other}"
            ))),
        }
    }
}

impl FdOrder {
    /// Half-width of the stencil in units of the step.
    pub fn half_width(self) -> usize {
        match self {
            FdOrder::Two => 1,
            FdOrder::Four => 2,
        }
    }

    /// Nominal truncation exponent (error ~ h^exponent).
    pub fn exponent(self) -> i32 {
        match self {
            FdOrder::Two => 2,
            FdOrder::Four => 4,
        }
    }
}

/// A finite-difference scheme: uniform step, stencil order, optional
/// Richardson extrapolation. The step is shared by all chart axes; the
/// built-in geometry catalog keeps every chart at unit coordinate scale.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FdScheme {
    pub step: f64,
    pub order: FdOrder,
    #[serde(default)]
    pub richardson: bool,
}

impl Default for FdScheme {
    fn default() -> Self {
        Self {
            step: 1e-3,
            order: FdOrder::Four,
            richardson: false,
        }
    }
}

impl FdScheme {
    pub fn new(step: f64, order: FdOrder, richardson: bool) -> Self {
        Self {
            step,
            order,
            richardson,
        }
    }

    /// Chart-distance the stencil reaches from the expansion point when
    /// `levels` differentiations are nested.
    pub fn margin(&self, levels: usize) -> f64 {
        self.step * self.order.half_width() as f64 * levels as f64
    }

    /// Run `compute` at the scheme's step, fusing in one Richardson step
    /// when enabled.
    pub fn extrapolate<T, F>(&self, mut compute: F) -> T
    where
        F: FnMut(f64) -> T,
        T: RichardsonCombine,
    {
        let coarse = compute(self.step);
        if !self.richardson {
            return coarse;
        }
        let fine = compute(self.step / 2.0);
        let w = (2.0f64).powi(self.order.exponent());
        T::combine(&fine, &coarse, w)
    }
}

/// Values that support the Richardson combination (w*fine - coarse)/(w - 1).
pub trait RichardsonCombine {
    fn combine(fine: &Self, coarse: &Self, w: f64) -> Self;
}

impl RichardsonCombine for f64 {
    fn combine(fine: &Self, coarse: &Self, w: f64) -> Self {
        (w * fine - coarse) / (w - 1.0)
    }
}

impl RichardsonCombine for Vec<f64> {
    fn combine(fine: &Self, coarse: &Self, w: f64) -> Self {
        fine.iter()
            .zip(coarse)
            .map(|(f, c)| (w * f - c) / (w - 1.0))
            .collect()
    }
}

impl RichardsonCombine for DMatrix<f64> {
    fn combine(fine: &Self, coarse: &Self, w: f64) -> Self {
        (fine * w - coarse) / (w - 1.0)
    }
}

/// First derivative of a 1-d sampled function `f(t)` (t is the offset along
/// one axis) at t = 0.
pub fn d1<F: FnMut(f64) -> f64>(mut f: F, h: f64, order: FdOrder) -> f64 {
    match order {
        FdOrder::Two => (f(h) - f(-h)) / (2.0 * h),
        FdOrder::Four => (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h),
    }
}

/// Second derivative of a 1-d sampled function at t = 0.
pub fn d2<F: FnMut(f64) -> f64>(mut f: F, h: f64, order: FdOrder) -> f64 {
    match order {
        FdOrder::Two => (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h),
        FdOrder::Four => {
            (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h))
                / (12.0 * h * h)
        }
    }
}

/// Mixed second derivative d^2 f / (ds dt) of a 2-d sampled function at the
/// origin, built by nesting the first-derivative stencil.
pub fn d2_mixed<F: FnMut(f64, f64) -> f64>(mut f: F, h: f64, order: FdOrder) -> f64 {
    d1(|s| d1(|t| f(s, t), h, order), h, order)
}

/// Gradient of a scalar field over an n-dimensional chart.
pub fn gradient<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    p: &[f64],
    h: f64,
    order: FdOrder,
) -> Vec<f64> {
    let mut q = p.to_vec();
    (0..p.len())
        .map(|axis| {
            d1(
                |t| {
                    q[axis] = p[axis] + t;
                    let v = f(&q);
                    q[axis] = p[axis];
                    v
                },
                h,
                order,
            )
        })
        .collect()
}

/// First derivatives of a (possibly rectangular) matrix field along every
/// chart axis.
pub fn matrix_gradient(
    eval: MatrixEval,
    p: &[f64],
    nrows: usize,
    ncols: usize,
    h: f64,
    order: FdOrder,
) -> Vec<DMatrix<f64>> {
    let mut buf = DMatrix::<f64>::zeros(nrows, ncols);
    let mut q = p.to_vec();
    let mut at = |q: &[f64], buf: &mut DMatrix<f64>| -> DMatrix<f64> {
        eval(q, buf);
        buf.clone()
    };
    (0..p.len())
        .map(|axis| {
            let d = match order {
                FdOrder::Two => {
                    q[axis] = p[axis] + h;
                    let fp = at(&q, &mut buf);
                    q[axis] = p[axis] - h;
                    let fm = at(&q, &mut buf);
                    (fp - fm) / (2.0 * h)
                }
                FdOrder::Four => {
                    q[axis] = p[axis] + 2.0 * h;
                    let fp2 = at(&q, &mut buf);
                    q[axis] = p[axis] + h;
                    let fp1 = at(&q, &mut buf);
                    q[axis] = p[axis] - h;
                    let fm1 = at(&q, &mut buf);
                    q[axis] = p[axis] - 2.0 * h;
                    let fm2 = at(&q, &mut buf);
                    (-fp2 + fp1 * 8.0 - fm1 * 8.0 + fm2) / (12.0 * h)
                }
            };
            q[axis] = p[axis];
            d
        })
        .collect()
}

impl RichardsonCombine for Vec<DMatrix<f64>> {
    fn combine(fine: &Self, coarse: &Self, w: f64) -> Self {
        fine.iter()
            .zip(coarse)
            .map(|(f, c)| DMatrix::combine(f, c, w))
            .collect()
    }
}

/// Second-order jet (value, gradient, Hessian) of a matrix-valued field.
///
/// `d2g` is stored as a full symmetric matrix of matrices; only the upper
/// triangle is computed, the lower triangle aliases it by clone.
#[derive(Debug, Clone)]
pub struct MatrixJet {
    pub g: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub d2g: Vec<Vec<DMatrix<f64>>>,
}

impl RichardsonCombine for MatrixJet {
    fn combine(fine: &Self, coarse: &Self, w: f64) -> Self {
        MatrixJet {
            g: fine.g.clone(),
            dg: fine
                .dg
                .iter()
                .zip(&coarse.dg)
                .map(|(f, c)| DMatrix::combine(f, c, w))
                .collect(),
            d2g: fine
                .d2g
                .iter()
                .zip(&coarse.d2g)
                .map(|(fr, cr)| {
                    fr.iter()
                        .zip(cr)
                        .map(|(f, c)| DMatrix::combine(f, c, w))
                        .collect()
                })
                .collect(),
        }
    }
}

/// Matrix-field evaluation callback: fills `out` with the field value at `p`.
pub type MatrixEval<'a> = &'a mut dyn FnMut(&[f64], &mut DMatrix<f64>);

/// Compute the second-order jet of an `n x n` matrix field on a `dim`
/// dimensional chart at `p`, using step `h` and the given stencil order.
pub fn matrix_jet(eval: MatrixEval, p: &[f64], n: usize, h: f64, order: FdOrder) -> MatrixJet {
    let dim = p.len();
    let mut buf = DMatrix::<f64>::zeros(n, n);
    let mut q = p.to_vec();
    let mut at = |q: &[f64], buf: &mut DMatrix<f64>| -> DMatrix<f64> {
        eval(q, buf);
        buf.clone()
    };

    let g = at(p, &mut buf);

    // First derivatives and diagonal second derivatives share stencil points.
    let hw = order.half_width();
    let mut dg = Vec::with_capacity(dim);
    let mut d2g = vec![vec![DMatrix::<f64>::zeros(n, n); dim]; dim];
    for axis in 0..dim {
        let mut plus = Vec::with_capacity(hw);
        let mut minus = Vec::with_capacity(hw);
        for k in 1..=hw {
            q[axis] = p[axis] + k as f64 * h;
            plus.push(at(&q, &mut buf));
            q[axis] = p[axis] - k as f64 * h;
            minus.push(at(&q, &mut buf));
            q[axis] = p[axis];
        }
        let (first, second) = match order {
            FdOrder::Two => (
                (&plus[0] - &minus[0]) / (2.0 * h),
                (&plus[0] - &g * 2.0 + &minus[0]) / (h * h),
            ),
            FdOrder::Four => (
                (-&plus[1] + &plus[0] * 8.0 - &minus[0] * 8.0 + &minus[1]) / (12.0 * h),
                (-&plus[1] + &plus[0] * 16.0 - &g * 30.0 + &minus[0] * 16.0 - &minus[1])
                    / (12.0 * h * h),
            ),
        };
        dg.push(first);
        d2g[axis][axis] = second;
    }

    // Mixed second derivatives: nested first-derivative stencils.
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut acc = DMatrix::<f64>::zeros(n, n);
            let (offsets, weights): (Vec<f64>, Vec<f64>) = match order {
                FdOrder::Two => (vec![h, -h], vec![0.5 / h, -0.5 / h]),
                FdOrder::Four => (
                    vec![2.0 * h, h, -h, -2.0 * h],
                    vec![
                        -1.0 / (12.0 * h),
                        8.0 / (12.0 * h),
                        -8.0 / (12.0 * h),
                        1.0 / (12.0 * h),
                    ],
                ),
            };
            for (si, wi) in offsets.iter().zip(&weights) {
                for (sj, wj) in offsets.iter().zip(&weights) {
                    q[i] = p[i] + si;
                    q[j] = p[j] + sj;
                    let m = at(&q, &mut buf);
                    acc += m * (wi * wj);
                    q[i] = p[i];
                    q[j] = p[j];
                }
            }
            d2g[i][j] = acc.clone();
            d2g[j][i] = acc;
        }
    }

    MatrixJet { g, dg, d2g }
}
