//! Compact Lie group data in a coordinate chart: structure constants,
//! invariant frames, the adjoint representation, Haar quadrature and the
//! closed-form scalar curvature of a group orbit.
//!
//! Built-in charts cover SU(2) in exponential coordinates and the abelian
//! tori U(1)^n. The frame matrices follow the composition function of the
//! group: `v_bar` differentiates the left factor (right-invariant frame),
//! `left_frame` differentiates the right factor (the left-invariant frame
//! that generates the right group action).

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{KkError, Result};
use crate::tensor::Tensor3;

/// Structure constants and integrity checks of a (unimodular) Lie algebra.
#[derive(Debug, Clone)]
pub struct LieStructure {
    dim_g: usize,
    c: Tensor3,
    label: String,
}

impl LieStructure {
    /// Validates antisymmetry (exact), the Jacobi identity (1e-12) and
    /// unimodularity c^k_{mk} = 0 at construction.
    pub fn new(label: impl Into<String>, c: Tensor3) -> Result<Self> {
        let n = c.n0;
        if c.n1 != n || c.n2 != n {
            return Err(KkError::InvalidInput("structure constants not cubic".into()));
        }
        for a in 0..n {
            for m in 0..n {
                for k in 0..n {
                    if c.get(a, m, k) != -c.get(a, k, m) {
                        return Err(KkError::InvalidInput(format!(
                            "c^{a}_{{{m}{k}}} not antisymmetric"
                        )));
                    }
                }
            }
        }
        let ls = Self {
            dim_g: n,
            c,
            label: label.into(),
        };
        let jac = ls.jacobi_residual();
        if jac > 1e-12 {
            return Err(KkError::InvalidInput(format!("jacobi residual {jac:.3e}")));
        }
        for m in 0..n {
            let mut tr = 0.0;
            for k in 0..n {
                tr += ls.c.get(k, m, k);
            }
            if tr.abs() > 1e-14 {
                return Err(KkError::InvalidInput(format!(
                    "not unimodular: c^k_{{{m}k}} = {tr:.3e}"
                )));
            }
        }
        Ok(ls)
    }

    pub fn dim(&self) -> usize {
        self.dim_g
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// c^alpha_{mu nu}
    #[inline]
    pub fn c(&self, alpha: usize, mu: usize, nu: usize) -> f64 {
        self.c.get(alpha, mu, nu)
    }

    /// Largest absolute value of the Jacobi combination
    /// c^a_{bs} c^s_{mn} + c^a_{ms} c^s_{nb} + c^a_{ns} c^s_{bm}.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim_g;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for m in 0..n {
                    for nu in 0..n {
                        let mut v = 0.0;
                        for s in 0..n {
                            v += self.c.get(a, b, s) * self.c.get(s, m, nu)
                                + self.c.get(a, m, s) * self.c.get(s, nu, b)
                                + self.c.get(a, nu, s) * self.c.get(s, b, m);
                        }
                        worst = worst.max(v.abs());
                    }
                }
            }
        }
        worst
    }

    /// Adjoint action matrix (ad_x)^mu_nu = c^mu_{alpha nu} x^alpha.
    pub fn ad(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim_g;
        let mut m = DMatrix::zeros(n, n);
        for mu in 0..n {
            for nu in 0..n {
                let mut v = 0.0;
                for al in 0..n {
                    v += self.c.get(mu, al, nu) * x[al];
                }
                m[(mu, nu)] = v;
            }
        }
        m
    }
}

/// Shape of the group chart's coordinate domain.
#[derive(Debug, Clone, Copy)]
pub enum GroupDomain {
    /// Open ball of the given radius (exponential charts).
    Ball { radius: f64 },
    /// Periodic box, each coordinate identified modulo `period`.
    Torus { period: f64 },
}

type FrameFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
type ComposeFn = dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync;

/// Chart-level group data: frame matrices, adjoint action and the
/// composition function, all as closures over chart coordinates.
#[derive(Clone)]
pub struct GroupChart {
    dim_g: usize,
    domain: GroupDomain,
    v_bar: Arc<FrameFn>,
    u_bar: Arc<FrameFn>,
    left_frame: Arc<FrameFn>,
    rho: Arc<FrameFn>,
    compose: Arc<ComposeFn>,
}

impl std::fmt::Debug for GroupChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GroupChart")
            .field("dim_g", &self.dim_g)
            .field("domain", &self.domain)
            .finish()
    }
}

impl GroupChart {
    pub fn dim_g(&self) -> usize {
        self.dim_g
    }

    pub fn domain(&self) -> GroupDomain {
        self.domain
    }

    /// Chart coordinates of the identity element (the chart origin).
    pub fn identity(&self) -> Vec<f64> {
        vec![0.0; self.dim_g]
    }

    /// Derivative of the composition function in its left argument at e.
    pub fn v_bar(&self, a: &[f64]) -> DMatrix<f64> {
        (self.v_bar)(a)
    }

    /// Inverse of `v_bar`; the fibre block of the bundle metric is
    /// u_bar^T gamma u_bar.
    pub fn u_bar(&self, a: &[f64]) -> DMatrix<f64> {
        (self.u_bar)(a)
    }

    /// Left-invariant frame (derivative of the composition in its right
    /// argument at e); generates the right group action.
    pub fn left_frame(&self, a: &[f64]) -> DMatrix<f64> {
        (self.left_frame)(a)
    }

    /// Adjoint representation matrix.
    pub fn rho(&self, a: &[f64]) -> DMatrix<f64> {
        (self.rho)(a)
    }

    /// Chart coordinates of the product ab.
    pub fn compose(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        (self.compose)(a, b)
    }

    pub fn det_u_bar(&self, a: &[f64]) -> f64 {
        self.u_bar(a).determinant()
    }

    pub fn contains(&self, a: &[f64]) -> bool {
        match self.domain {
            GroupDomain::Ball { radius } => {
                a.iter().map(|x| x * x).sum::<f64>().sqrt() < radius
            }
            GroupDomain::Torus { .. } => true,
        }
    }
}

/// A Lie group as the lab uses it: algebra data plus one global chart.
#[derive(Debug, Clone)]
pub struct LieGroup {
    pub structure: LieStructure,
    pub chart: GroupChart,
}

// ---------------------------------------------------------------------------
// Built-in groups
// ---------------------------------------------------------------------------

/// Assemble I + c1 [a]x + c2 [a]x^2 entry-wise (one allocation, hot-loop
/// friendly), using [a]x^2 = a a^T - |a|^2 I.
fn axis_angle_poly(a: &[f64], c1: f64, c2: f64) -> DMatrix<f64> {
    let r2 = a.iter().map(|x| x * x).sum::<f64>();
    let mut m = DMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            let mut v = c2 * a[i] * a[j];
            if i == j {
                v += 1.0 - c2 * r2;
            }
            m[(i, j)] = v;
        }
    }
    m[(0, 1)] += -c1 * a[2];
    m[(1, 0)] += c1 * a[2];
    m[(0, 2)] += c1 * a[1];
    m[(2, 0)] += -c1 * a[1];
    m[(1, 2)] += -c1 * a[0];
    m[(2, 1)] += c1 * a[0];
    m
}

/// J_l(a) = I + (1-cos r)/r^2 [a]x + (r - sin r)/r^3 [a]x^2, with the series
/// fallback near the origin. This is u_bar for the exponential chart.
fn so3_left_jacobian(a: &[f64]) -> DMatrix<f64> {
    let r2 = a.iter().map(|x| x * x).sum::<f64>();
    let r = r2.sqrt();
    let (c1, c2) = if r < 1e-4 {
        (
            0.5 - r2 / 24.0 + r2 * r2 / 720.0,
            1.0 / 6.0 - r2 / 120.0 + r2 * r2 / 5040.0,
        )
    } else {
        ((1.0 - r.cos()) / r2, (r - r.sin()) / (r2 * r))
    };
    axis_angle_poly(a, c1, c2)
}

/// Rodrigues rotation exp([a]x): the adjoint representation of SU(2).
fn so3_exp(a: &[f64]) -> DMatrix<f64> {
    let r2 = a.iter().map(|x| x * x).sum::<f64>();
    let r = r2.sqrt();
    let (s, c) = if r < 1e-4 {
        (1.0 - r2 / 6.0 + r2 * r2 / 120.0, 0.5 - r2 / 24.0 + r2 * r2 / 720.0)
    } else {
        (r.sin() / r, (1.0 - r.cos()) / r2)
    };
    axis_angle_poly(a, s, c)
}

fn quat_from_chart(a: &[f64]) -> [f64; 4] {
    let r = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let half = 0.5 * r;
    let s = if r < 1e-8 {
        0.5 - r * r / 48.0
    } else {
        half.sin() / r
    };
    [half.cos(), s * a[0], s * a[1], s * a[2]]
}

fn quat_to_chart(q: [f64; 4]) -> Vec<f64> {
    let vn = (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    if vn < 1e-14 {
        // near the identity (or the antipode, a measure-zero chart edge)
        return vec![2.0 * q[1], 2.0 * q[2], 2.0 * q[3]];
    }
    let angle = 2.0 * vn.atan2(q[0]);
    vec![angle * q[1] / vn, angle * q[2] / vn, angle * q[3] / vn]
}

fn quat_mul(p: [f64; 4], q: [f64; 4]) -> [f64; 4] {
    [
        p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
        p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
        p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
        p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0],
    ]
}

/// SU(2) with c^a_{mn} = epsilon_{amn} in exponential coordinates.
///
/// The chart ball has radius 2*pi: that covers the whole group minus the
/// antipodal point, so Haar quadrature over the chart sees the full group.
pub fn build_su2() -> LieGroup {
    let mut c = Tensor3::zeros(3, 3, 3);
    for (i, j, k, s) in [
        (0usize, 1usize, 2usize, 1.0f64),
        (1, 2, 0, 1.0),
        (2, 0, 1, 1.0),
        (0, 2, 1, -1.0),
        (2, 1, 0, -1.0),
        (1, 0, 2, -1.0),
    ] {
        c.set(i, j, k, s);
    }
    let structure = LieStructure::new("su2", c).expect("levi-civita constants are consistent");
    let chart = GroupChart {
        dim_g: 3,
        domain: GroupDomain::Ball { radius: 2.0 * PI },
        u_bar: Arc::new(so3_left_jacobian),
        v_bar: Arc::new(|a| {
            so3_left_jacobian(a)
                .try_inverse()
                .expect("left jacobian invertible inside the chart ball")
        }),
        left_frame: Arc::new(|a| {
            let neg: Vec<f64> = a.iter().map(|x| -x).collect();
            so3_left_jacobian(&neg)
                .try_inverse()
                .expect("right jacobian invertible inside the chart ball")
        }),
        rho: Arc::new(so3_exp),
        compose: Arc::new(|a, b| quat_to_chart(quat_mul(quat_from_chart(a), quat_from_chart(b)))),
    };
    LieGroup { structure, chart }
}

/// U(1)^n: vanishing structure constants, identity frames, composition by
/// addition modulo 2*pi.
pub fn build_abelian(n: usize) -> LieGroup {
    assert!(n >= 1, "abelian group needs at least one dimension");
    let structure = LieStructure::new(format!("u1^{n}"), Tensor3::zeros(n, n, n))
        .expect("zeros are consistent");
    let id = move |_a: &[f64]| DMatrix::<f64>::identity(n, n);
    let chart = GroupChart {
        dim_g: n,
        domain: GroupDomain::Torus { period: 2.0 * PI },
        u_bar: Arc::new(id),
        v_bar: Arc::new(id),
        left_frame: Arc::new(id),
        rho: Arc::new(id),
        compose: Arc::new(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x + y).rem_euclid(2.0 * PI))
                .collect()
        }),
    };
    LieGroup { structure, chart }
}

// ---------------------------------------------------------------------------
// Orbit scalar curvature
// ---------------------------------------------------------------------------

/// Scalar curvature of the group orbit carrying the invariant metric
/// `gamma`, as a closed form in the structure constants:
///
///   R = -( 1/2 g^{mn} c^s_{ma} c^a_{ns}
///        + 1/4 g_{ms} g^{ab} g^{en} c^m_{ea} c^s_{nb} )
///
/// normalized so that round spheres come out positive, matching the
/// default chart-calculus convention.
pub fn orbit_scalar_curvature(ls: &LieStructure, gamma: &DMatrix<f64>) -> Result<f64> {
    let n = ls.dim();
    if gamma.nrows() != n || gamma.ncols() != n {
        return Err(KkError::InvalidInput(format!(
            "gamma is {}x{}, algebra dimension is {n}",
            gamma.nrows(),
            gamma.ncols()
        )));
    }
    let (ginv, _) = crate::chart::spd_inverse(gamma)?;
    let mut term1 = 0.0;
    for mu in 0..n {
        for nu in 0..n {
            let mut s = 0.0;
            for si in 0..n {
                for al in 0..n {
                    s += ls.c(si, mu, al) * ls.c(al, nu, si);
                }
            }
            term1 += 0.5 * ginv[(mu, nu)] * s;
        }
    }
    let mut term2 = 0.0;
    for mu in 0..n {
        for si in 0..n {
            for al in 0..n {
                for be in 0..n {
                    for ep in 0..n {
                        for nu in 0..n {
                            term2 += 0.25
                                * gamma[(mu, si)]
                                * ginv[(al, be)]
                                * ginv[(ep, nu)]
                                * ls.c(mu, ep, al)
                                * ls.c(si, nu, be);
                        }
                    }
                }
            }
        }
    }
    Ok(-(term1 + term2))
}

// ---------------------------------------------------------------------------
// Haar quadrature
// ---------------------------------------------------------------------------

/// Quadrature nodes and weights for the normalized invariant measure: the
/// chart density is |det u_bar(a)| da. `chart_volume` keeps the raw chart
/// mass (the integral of that density) around for kernel normalization.
#[derive(Debug, Clone)]
pub struct HaarQuadrature {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub chart_volume: f64,
}

impl HaarQuadrature {
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        let mut sum = 0.0;
        let mut comp = 0.0;
        for (node, &w) in self.nodes.iter().zip(&self.weights) {
            let y = w * f(node) - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum
    }
}

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton iteration from the Chebyshev-style initial guess.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Deterministic product-rule quadrature for the normalized Haar measure
/// on the group chart. Weights are positive and sum to one.
pub fn haar_quadrature(gc: &GroupChart, resolution: usize) -> HaarQuadrature {
    let res = resolution.max(1);
    let mut nodes = Vec::new();
    let mut raw = Vec::new();
    match gc.domain() {
        GroupDomain::Torus { period } => {
            let n_axis = 4 * res;
            let dim = gc.dim_g();
            let cell = (period / n_axis as f64).powi(dim as i32);
            let mut idx = vec![0usize; dim];
            loop {
                let node: Vec<f64> =
                    idx.iter().map(|&k| period * k as f64 / n_axis as f64).collect();
                raw.push(cell * gc.det_u_bar(&node).abs());
                nodes.push(node);
                let mut axis = 0;
                while axis < dim {
                    idx[axis] += 1;
                    if idx[axis] < n_axis {
                        break;
                    }
                    idx[axis] = 0;
                    axis += 1;
                }
                if axis == dim {
                    break;
                }
            }
        }
        GroupDomain::Ball { radius } => {
            assert_eq!(gc.dim_g(), 3, "ball charts are used for 3-dim groups");
            let n_r = (2 * res).max(4);
            let n_t = res.max(2);
            let n_p = (2 * res).max(4);
            let (r_nodes, r_weights) = gauss_legendre(n_r);
            let (t_nodes, t_weights) = gauss_legendre(n_t);
            for (rn, rw) in r_nodes.iter().zip(&r_weights) {
                let r = radius * (rn + 1.0) / 2.0;
                let wr = rw * radius / 2.0;
                for (tn, tw) in t_nodes.iter().zip(&t_weights) {
                    let cos_t = *tn;
                    let sin_t = (1.0 - cos_t * cos_t).sqrt();
                    for kp in 0..n_p {
                        let phi = 2.0 * PI * kp as f64 / n_p as f64;
                        let node =
                            vec![r * sin_t * phi.cos(), r * sin_t * phi.sin(), r * cos_t];
                        let w = wr * tw * (2.0 * PI / n_p as f64)
                            * r
                            * r
                            * gc.det_u_bar(&node).abs();
                        raw.push(w);
                        nodes.push(node);
                    }
                }
            }
        }
    }
    let mut total = 0.0;
    let mut comp = 0.0;
    for &w in &raw {
        let y = w - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
    }
    let weights = raw.iter().map(|w| w / total).collect();
    HaarQuadrature {
        nodes,
        weights,
        chart_volume: total,
    }
}

/// Fibre components of the Killing vectors of the right group action in
/// adapted coordinates: the left-invariant frame matrix at `a`
/// (K[s][alpha] = K^s_alpha).
pub fn killing_vectors_adapted(gc: &GroupChart, a: &[f64]) -> Result<DMatrix<f64>> {
    if !gc.contains(a) {
        return Err(KkError::OutOfDomain(format!("group point {a:?}")));
    }
    Ok(gc.left_frame(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{curvature_pack, Axis, ChartedMetric, SignConvention};
    use crate::fd::{self, FdScheme};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    /// Test-only oracle: matrix exponential by scaling and squaring.
    fn mat_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = m.nrows();
        let norm = m.abs().max();
        let scale = norm.log2().ceil().max(0.0) as i32 + 4;
        let scaled = m / (2.0f64.powi(scale));
        let mut term = DMatrix::<f64>::identity(n, n);
        let mut sum = DMatrix::<f64>::identity(n, n);
        for k in 1..24 {
            term = &term * &scaled / k as f64;
            sum += &term;
        }
        for _ in 0..scale {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn su2_structure_constants_and_jacobi() {
        let g = build_su2();
        assert_eq!(g.structure.c(0, 1, 2), 1.0);
        assert_eq!(g.structure.c(0, 2, 1), -1.0);
        assert_eq!(g.structure.jacobi_residual(), 0.0);
    }

    #[test]
    fn su2_rho_is_exponential_of_ad() {
        let g = build_su2();
        // quarter turn about the first axis
        let a = [PI / 2.0, 0.0, 0.0];
        let rho = g.chart.rho(&a);
        let oracle = mat_exp(&g.structure.ad(&a));
        assert!((&rho - &oracle).abs().max() < 1e-12);
        let expected =
            DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        assert!((&rho - &expected).abs().max() < 1e-12);
        // and at a generic point
        let a = [0.4, -1.1, 0.7];
        assert!((g.chart.rho(&a) - mat_exp(&g.structure.ad(&a))).abs().max() < 1e-12);
    }

    #[test]
    fn abelian_basics() {
        let g = build_abelian(1);
        assert_eq!(g.structure.c(0, 0, 0), 0.0);
        let c = g.chart.compose(&[0.5], &[0.7]);
        assert!((c[0] - 1.2).abs() < 1e-15);
        assert!((g.chart.rho(&[2.2]) - DMatrix::<f64>::identity(1, 1)).abs().max() == 0.0);
    }

    #[test]
    fn frames_invert_and_rho_is_homomorphism() {
        let g = build_su2();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.8..1.8)).collect();
            let prod = g.chart.u_bar(&a) * g.chart.v_bar(&a);
            assert!((prod - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-10);
        }
        for _ in 0..40 {
            let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.2..1.2)).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.2..1.2)).collect();
            let ab = g.chart.compose(&a, &b);
            let lhs = g.chart.rho(&ab);
            let rhs = g.chart.rho(&a) * g.chart.rho(&b);
            assert!((lhs - rhs).abs().max() < 1e-10);
            let ae = g.chart.compose(&a, &g.chart.identity());
            let ea = g.chart.compose(&g.chart.identity(), &a);
            for i in 0..3 {
                assert!((ae[i] - a[i]).abs() < 1e-10);
                assert!((ea[i] - a[i]).abs() < 1e-10);
            }
        }
        assert!(
            (g.chart.rho(&g.chart.identity()) - DMatrix::<f64>::identity(3, 3))
                .abs()
                .max()
                < 1e-14
        );
    }

    #[test]
    fn haar_normalization_and_known_integrals() {
        // U(1): normalization and cos^2 -> 1/2
        let u1 = build_abelian(1);
        let q = haar_quadrature(&u1.chart, 4);
        let sum: f64 = q.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((q.integrate(|_| 1.0) - 1.0).abs() < 1e-12);
        assert!((q.integrate(|a| a[0].cos().powi(2)) - 0.5).abs() < 1e-12);
        assert!((q.chart_volume - 2.0 * PI).abs() < 1e-10);

        // SU(2): weight sum, fundamental character orthogonality, volume
        let su2 = build_su2();
        let q = haar_quadrature(&su2.chart, 8);
        let sum: f64 = q.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(q.weights.iter().all(|&w| w >= 0.0));
        // |chi(a)|^2 for the fundamental character chi = 2 cos(|a|/2)
        let chi2 = q.integrate(|a| {
            let r = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            4.0 * (0.5 * r).cos().powi(2)
        });
        assert!((chi2 - 1.0).abs() < 1e-3, "character integral {chi2}");
        // chart volume of the exponential ball is 16 pi^2
        assert!(
            (q.chart_volume - 16.0 * PI * PI).abs() / (16.0 * PI * PI) < 1e-6,
            "chart volume {}",
            q.chart_volume
        );
    }

    #[test]
    fn haar_left_invariance() {
        let su2 = build_su2();
        let q = haar_quadrature(&su2.chart, 10);
        let m = DMatrix::from_row_slice(3, 3, &[0.3, 1.0, -0.2, 0.0, 0.7, 0.4, -1.1, 0.2, 0.9]);
        let f = |a: &[f64]| (su2.chart.rho(a) * &m).trace();
        let g = [0.9, -0.4, 0.6];
        let direct = q.integrate(f);
        let translated = q.integrate(|a| f(&su2.chart.compose(&g, a)));
        assert!(
            (direct - translated).abs() < 1e-4,
            "direct {direct} vs translated {translated}"
        );
    }

    #[test]
    fn killing_vectors_frame_and_commutators() {
        let su2 = build_su2();
        let e = su2.chart.identity();
        let k = killing_vectors_adapted(&su2.chart, &e).unwrap();
        assert!((k - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-14);

        let u1 = build_abelian(2);
        let k = killing_vectors_adapted(&u1.chart, &[0.3, 1.0]).unwrap();
        assert!((k - DMatrix::<f64>::identity(2, 2)).abs().max() == 0.0);

        // [K_a, K_b] = +c^m_{ab} K_m, frame derivatives by finite differences.
        let a = [0.25, -0.4, 0.55];
        let frame = |x: &[f64]| su2.chart.left_frame(x);
        let k0 = frame(&a);
        let mut dk = Vec::new();
        for tau in 0..3 {
            let mut md = DMatrix::<f64>::zeros(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    let mut q = a.to_vec();
                    md[(i, j)] = fd::d1(
                        |t| {
                            q[tau] = a[tau] + t;
                            let v = frame(&q)[(i, j)];
                            q[tau] = a[tau];
                            v
                        },
                        1e-3,
                        fd::FdOrder::Four,
                    );
                }
            }
            dk.push(md);
        }
        for al in 0..3 {
            for be in 0..3 {
                for si in 0..3 {
                    let mut bracket = 0.0;
                    for tau in 0..3 {
                        bracket += k0[(tau, al)] * dk[tau][(si, be)]
                            - k0[(tau, be)] * dk[tau][(si, al)];
                    }
                    let mut expected = 0.0;
                    for mu in 0..3 {
                        expected += su2.structure.c(mu, al, be) * k0[(si, mu)];
                    }
                    assert!(
                        (bracket - expected).abs() < 1e-6,
                        "commutator ({al},{be}) component {si}: {bracket} vs {expected}"
                    );
                }
            }
        }
    }

    #[test]
    fn abelian_orbit_curvature_vanishes() {
        let g = build_abelian(2);
        let gamma = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert_eq!(orbit_scalar_curvature(&g.structure, &gamma).unwrap(), 0.0);
    }

    /// Chart metric of the invariant metric defined by a constant gamma:
    /// G(a) = u_bar(a)^T gamma u_bar(a).
    fn invariant_metric_chart(g: &LieGroup, gamma: DMatrix<f64>) -> ChartedMetric {
        let chart = g.chart.clone();
        let n = chart.dim_g();
        ChartedMetric::new(
            "invariant-metric",
            vec![Axis::bounded(-1.5, 1.5); n],
            move |a, out| {
                let u = chart.u_bar(a);
                let m = u.transpose() * &gamma * u;
                out.copy_from(&m);
            },
        )
    }

    #[test]
    fn orbit_curvature_matches_chart_calculus() {
        let su2 = build_su2();
        let s = FdScheme::default();
        let points: [[f64; 3]; 2] = [[0.12, -0.33, 0.21], [0.4, 0.1, -0.2]];

        // bi-invariant: the round 3-sphere of radius 2 (scalar 6/4 = 1.5)
        let gamma = DMatrix::<f64>::identity(3, 3);
        let closed = orbit_scalar_curvature(&su2.structure, &gamma).unwrap();
        assert!((closed - 1.5).abs() < 1e-12);
        let m = invariant_metric_chart(&su2, gamma);
        for p in &points {
            let pack = curvature_pack(&m, p, &s, SignConvention::PositiveSpheres).unwrap();
            assert!(
                (pack.scalar - closed).abs() < 1e-5,
                "bi-invariant: chart {} vs closed {closed}",
                pack.scalar
            );
        }

        // squashed: gamma = diag(1, 1, 4)
        let gamma = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 4.0]));
        let closed = orbit_scalar_curvature(&su2.structure, &gamma).unwrap();
        let m = invariant_metric_chart(&su2, gamma);
        let pack = curvature_pack(&m, &points[0], &s, SignConvention::PositiveSpheres).unwrap();
        assert!(
            (pack.scalar - closed).abs() < 1e-5,
            "squashed: chart {} vs closed {closed}",
            pack.scalar
        );

        // random SPD gammas
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for trial in 0..5 {
            let l = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-0.6..0.6));
            let gamma = &l * l.transpose() + DMatrix::<f64>::identity(3, 3) * 0.8;
            let closed = orbit_scalar_curvature(&su2.structure, &gamma).unwrap();
            let m = invariant_metric_chart(&su2, gamma);
            let pack =
                curvature_pack(&m, &points[trial % 2], &s, SignConvention::PositiveSpheres)
                    .unwrap();
            assert!(
                (pack.scalar - closed).abs() < 1e-5,
                "trial {trial}: chart {} vs closed {closed}",
                pack.scalar
            );
        }
    }

    #[test]
    fn killing_vectors_outside_chart_fail() {
        let su2 = build_su2();
        let err = killing_vectors_adapted(&su2.chart, &[7.0, 0.0, 0.0]);
        assert!(matches!(err, Err(KkError::OutOfDomain(_))));
    }
}
