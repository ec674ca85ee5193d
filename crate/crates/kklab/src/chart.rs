//! Pointwise tensor calculus on a single coordinate chart: metric fields,
//! Christoffel symbols, Riemann/Ricci/scalar curvature and the
//! Laplace-Beltrami operator, all by central finite differences.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{KkError, Result};
use crate::fd::{self, FdScheme};
use crate::tensor::{Tensor3, Tensor4};

/// Condition-number guard for metric inversion.
pub const MAX_CONDITION: f64 = 1e12;

/// One chart axis: a closed interval, optionally identified periodically
/// (period = hi - lo).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Axis {
    pub fn bounded(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            periodic: false,
        }
    }

    pub fn periodic(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            periodic: true,
        }
    }

    pub fn extent(&self) -> f64 {
        self.hi - self.lo
    }

    fn wrap(&self, x: f64) -> f64 {
        let period = self.extent();
        let mut y = (x - self.lo).rem_euclid(period) + self.lo;
        if y >= self.hi {
            y -= period;
        }
        y
    }
}

/// The two overall signs of the Riemann tensor found in the literature.
/// `PositiveSpheres` (the default) makes round spheres carry positive
/// scalar curvature; `NegativeSpheres` is the opposite choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SignConvention {
    #[default]
    #[serde(rename = "positive-spheres")]
    PositiveSpheres,
    #[serde(rename = "negative-spheres")]
    NegativeSpheres,
}

impl SignConvention {
    pub fn sign(self) -> f64 {
        match self {
            SignConvention::PositiveSpheres => 1.0,
            SignConvention::NegativeSpheres => -1.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            SignConvention::PositiveSpheres => SignConvention::NegativeSpheres,
            SignConvention::NegativeSpheres => SignConvention::PositiveSpheres,
        }
    }
}

type MetricFn = dyn Fn(&[f64], &mut DMatrix<f64>) + Send + Sync;

/// A metric field on a coordinate chart. The evaluation callback fills a
/// caller-provided matrix so that hot loops (stochastic integration,
/// stencil sweeps) run without per-call allocation.
#[derive(Clone)]
pub struct ChartedMetric {
    dim: usize,
    label: String,
    axes: Vec<Axis>,
    eval: Arc<MetricFn>,
}

impl std::fmt::Debug for ChartedMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartedMetric")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("axes", &self.axes)
            .finish()
    }
}

impl ChartedMetric {
    pub fn new<F>(label: impl Into<String>, axes: Vec<Axis>, eval: F) -> Self
    where
        F: Fn(&[f64], &mut DMatrix<f64>) + Send + Sync + 'static,
    {
        Self {
            dim: axes.len(),
            label: label.into(),
            axes,
            eval: Arc::new(eval),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Wrap periodic coordinates into their fundamental interval; bounded
    /// axes are left untouched.
    pub fn wrap_point(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(&self.axes)
            .map(|(&x, ax)| if ax.periodic { ax.wrap(x) } else { x })
            .collect()
    }

    /// True when `p` sits inside the chart with `margin` of room on every
    /// non-periodic axis.
    pub fn is_interior(&self, p: &[f64], margin: f64) -> bool {
        p.iter().zip(&self.axes).all(|(&x, ax)| {
            if ax.periodic {
                true
            } else {
                x >= ax.lo + margin && x <= ax.hi - margin
            }
        })
    }

    /// Check that a stencil of the given reach fits around `p`, returning
    /// the wrapped evaluation point.
    pub fn stencil_point(&self, p: &[f64], margin: f64) -> Result<Vec<f64>> {
        if p.len() != self.dim {
            return Err(KkError::InvalidInput(format!(
                "point has {} coordinates, chart '{}' has {}",
                p.len(),
                self.label,
                self.dim
            )));
        }
        if !self.is_interior(p, margin) {
            return Err(KkError::OutOfDomain(format!(
                "{:?} needs margin {} inside chart '{}'",
                p, margin, self.label
            )));
        }
        Ok(self.wrap_point(p))
    }

    /// Fill `out` with the metric at `p` (periodic axes wrapped).
    pub fn fill_metric(&self, p: &[f64], out: &mut DMatrix<f64>) {
        let q = self.wrap_point(p);
        (self.eval)(&q, out);
    }

    /// Allocating convenience evaluation.
    pub fn metric_at(&self, p: &[f64]) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.dim, self.dim);
        self.fill_metric(p, &mut g);
        g
    }

    /// Construction-time invariants: symmetry to 1e-14 and positive
    /// definiteness at the queried point.
    pub fn validate_at(&self, p: &[f64]) -> Result<()> {
        let g = self.metric_at(p);
        let asym = (&g - g.transpose()).abs().max();
        if asym > 1e-14 * g.abs().max().max(1.0) {
            return Err(KkError::InvalidInput(format!(
                "metric '{}' asymmetric by {asym:.3e} at {p:?}",
                self.label
            )));
        }
        spd_inverse(&g).map(|_| ()).map_err(|_| {
            KkError::SingularMetric(format!(
                "metric '{}' not positive definite at {p:?}",
                self.label
            ))
        })
    }
}

/// Inverse, determinant and condition number of a symmetric positive
/// definite matrix, rejecting indefinite or ill-conditioned input.
pub fn spd_inverse(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let eig = g.clone().symmetric_eigen();
    let mut lambda_min = f64::INFINITY;
    let mut lambda_max = 0.0f64;
    for &l in eig.eigenvalues.iter() {
        lambda_min = lambda_min.min(l);
        lambda_max = lambda_max.max(l);
    }
    if lambda_min <= 0.0 {
        return Err(KkError::SingularMetric(format!(
            "eigenvalue {lambda_min:.3e} <= 0"
        )));
    }
    if lambda_max / lambda_min > MAX_CONDITION {
        return Err(KkError::SingularMetric(format!(
            "condition number {:.3e} exceeds {MAX_CONDITION:.0e}",
            lambda_max / lambda_min
        )));
    }
    let n = g.nrows();
    let mut inv = DMatrix::zeros(n, n);
    let mut det = 1.0;
    for k in 0..n {
        det *= eig.eigenvalues[k];
        let col = eig.eigenvectors.column(k);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] += col[i] * col[j] / eig.eigenvalues[k];
            }
        }
    }
    Ok((inv, det))
}

/// Curvature data of a metric at one point: Christoffel symbols
/// Gamma^a_bc, the Riemann tensor R^a_{b c d} (antisymmetric in the last
/// index pair), the Ricci contraction and the scalar curvature.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub christoffel: Tensor3,
    pub riemann: Tensor4,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub convention: SignConvention,
}

fn christoffel_from_jet(jet: &fd::MatrixJet, ginv: &DMatrix<f64>) -> Tensor3 {
    let n = jet.g.nrows();
    let mut gamma = Tensor3::zeros(n, n, n);
    for b in 0..n {
        for c in b..n {
            for a in 0..n {
                let mut v = 0.0;
                for d in 0..n {
                    v += 0.5
                        * ginv[(a, d)]
                        * (jet.dg[b][(d, c)] + jet.dg[c][(d, b)] - jet.dg[d][(b, c)]);
                }
                gamma.set(a, b, c, v);
                gamma.set(a, c, b, v); // torsion-free: exact lower symmetry
            }
        }
    }
    gamma
}

/// d_e Gamma^a_bc assembled from the metric jet; d(G^-1) = -G^-1 dG G^-1.
fn dchristoffel_from_jet(jet: &fd::MatrixJet, ginv: &DMatrix<f64>) -> Vec<Tensor3> {
    let n = jet.g.nrows();
    let dginv: Vec<DMatrix<f64>> = jet.dg.iter().map(|dg| -(ginv * dg * ginv)).collect();
    (0..n)
        .map(|e| {
            let mut out = Tensor3::zeros(n, n, n);
            for b in 0..n {
                for c in 0..n {
                    for a in 0..n {
                        let mut v = 0.0;
                        for d in 0..n {
                            v += 0.5
                                * dginv[e][(a, d)]
                                * (jet.dg[b][(d, c)] + jet.dg[c][(d, b)] - jet.dg[d][(b, c)]);
                            v += 0.5
                                * ginv[(a, d)]
                                * (jet.d2g[e][b][(d, c)] + jet.d2g[e][c][(d, b)]
                                    - jet.d2g[e][d][(b, c)]);
                        }
                        out.set(a, b, c, v);
                    }
                }
            }
            out
        })
        .collect()
}

fn metric_jet(m: &ChartedMetric, p: &[f64], s: &FdScheme) -> Result<fd::MatrixJet> {
    // Mixed second derivatives nest two first-derivative stencils.
    let q = m.stencil_point(p, s.margin(2))?;
    let n = m.dim();
    let jet = s.extrapolate(|h| {
        let mut eval = |x: &[f64], out: &mut DMatrix<f64>| m.fill_metric(x, out);
        fd::matrix_jet(&mut eval, &q, n, h, s.order)
    });
    Ok(jet)
}

/// Christoffel symbols Gamma^a_bc = 1/2 G^{ad} (d_b G_dc + d_c G_db - d_d G_bc).
pub fn christoffel(m: &ChartedMetric, p: &[f64], s: &FdScheme) -> Result<Tensor3> {
    let jet = metric_jet(m, p, s)?;
    let (ginv, _) = spd_inverse(&jet.g)?;
    Ok(christoffel_from_jet(&jet, &ginv))
}

/// Full curvature data at `p`. The Riemann tensor is assembled from the
/// curvature operator of the Levi-Civita connection in the coordinate
/// basis; `convention` flips its overall sign.
pub fn curvature_pack(
    m: &ChartedMetric,
    p: &[f64],
    s: &FdScheme,
    convention: SignConvention,
) -> Result<CurvaturePack> {
    let jet = metric_jet(m, p, s)?;
    let (ginv, _) = spd_inverse(&jet.g)?;
    let gamma = christoffel_from_jet(&jet, &ginv);
    let dgamma = dchristoffel_from_jet(&jet, &ginv);
    let n = m.dim();
    let sign = convention.sign();

    let mut riemann = Tensor4::zeros(n);
    for mu in 0..n {
        for nu in (mu + 1)..n {
            for rho in 0..n {
                for si in 0..n {
                    let mut v = dgamma[mu].get(rho, nu, si) - dgamma[nu].get(rho, mu, si);
                    for lam in 0..n {
                        v += gamma.get(rho, mu, lam) * gamma.get(lam, nu, si)
                            - gamma.get(rho, nu, lam) * gamma.get(lam, mu, si);
                    }
                    let v = sign * v;
                    riemann.set(rho, si, mu, nu, v);
                    riemann.set(rho, si, nu, mu, -v); // exact antisymmetry
                }
            }
        }
    }

    let mut ricci = DMatrix::zeros(n, n);
    for si in 0..n {
        for nu in 0..n {
            let mut v = 0.0;
            for rho in 0..n {
                v += riemann.get(rho, si, rho, nu);
            }
            ricci[(si, nu)] = v;
        }
    }
    let mut scalar = 0.0;
    for si in 0..n {
        for nu in 0..n {
            scalar += ginv[(si, nu)] * ricci[(si, nu)];
        }
    }

    Ok(CurvaturePack {
        christoffel: gamma,
        riemann,
        ricci,
        scalar,
        convention,
    })
}

/// Laplace-Beltrami action G^{-1/2} d_A (G^{AB} G^{1/2} d_B f) on a scalar
/// field, evaluated by nesting finite differences: the inner gradient of
/// `f` is differenced again inside the outer divergence stencil.
pub fn laplace_beltrami(
    m: &ChartedMetric,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    p: &[f64],
    s: &FdScheme,
) -> Result<f64> {
    let q = m.stencil_point(p, s.margin(2))?;
    let n = m.dim();

    let flux = |x: &[f64], axis: usize, h: f64| -> Result<f64> {
        let g = m.metric_at(x);
        let (ginv, det) = spd_inverse(&g)?;
        let sqrt_det = det.sqrt();
        let grad = fd::gradient(|y| f(&m.wrap_point(y)), x, h, s.order);
        let mut v = 0.0;
        for (b, gb) in grad.iter().enumerate() {
            v += ginv[(axis, b)] * sqrt_det * gb;
        }
        Ok(v)
    };

    let g0 = m.metric_at(&q);
    let (_, det0) = spd_inverse(&g0)?;

    let value = s.extrapolate(|h| {
        let mut total = 0.0;
        let mut x = q.clone();
        for axis in 0..n {
            let d = fd::d1(
                |t| {
                    x[axis] = q[axis] + t;
                    let v = flux(&x, axis, h).unwrap_or(f64::NAN);
                    x[axis] = q[axis];
                    v
                },
                h,
                s.order,
            );
            total += d;
        }
        total
    });
    if !value.is_finite() {
        return Err(KkError::SingularMetric(format!(
            "laplace-beltrami stencil hit a singular metric near {q:?}"
        )));
    }
    Ok(value / det0.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn euclidean(dim: usize) -> ChartedMetric {
        ChartedMetric::new(
            "euclidean",
            vec![Axis::bounded(-10.0, 10.0); dim],
            move |_p, out| {
                out.fill(0.0);
                out.fill_diagonal(1.0);
            },
        )
    }

    fn flat_torus(dim: usize) -> ChartedMetric {
        ChartedMetric::new(
            "flat-torus",
            vec![Axis::periodic(0.0, 2.0 * PI); dim],
            move |_p, out| {
                out.fill(0.0);
                out.fill_diagonal(1.0);
            },
        )
    }

    fn polar_plane() -> ChartedMetric {
        ChartedMetric::new(
            "polar-plane",
            vec![Axis::bounded(0.2, 50.0), Axis::periodic(0.0, 2.0 * PI)],
            |p, out| {
                out.fill(0.0);
                out[(0, 0)] = 1.0;
                out[(1, 1)] = p[0] * p[0];
            },
        )
    }

    fn sphere2(r: f64) -> ChartedMetric {
        ChartedMetric::new(
            format!("s2({r})"),
            vec![Axis::bounded(0.05, PI - 0.05), Axis::periodic(0.0, 2.0 * PI)],
            move |p, out| {
                out.fill(0.0);
                out[(0, 0)] = r * r;
                out[(1, 1)] = r * r * p[0].sin().powi(2);
            },
        )
    }

    fn sphere3(r: f64) -> ChartedMetric {
        ChartedMetric::new(
            format!("s3({r})"),
            vec![
                Axis::bounded(0.05, PI - 0.05),
                Axis::bounded(0.05, PI - 0.05),
                Axis::periodic(0.0, 2.0 * PI),
            ],
            move |p, out| {
                out.fill(0.0);
                out[(0, 0)] = r * r;
                out[(1, 1)] = r * r * p[0].sin().powi(2);
                out[(2, 2)] = r * r * p[0].sin().powi(2) * p[1].sin().powi(2);
            },
        )
    }

    #[test]
    fn christoffel_flat_space_is_zero() {
        let m = euclidean(3);
        let s = FdScheme::default();
        let gamma = christoffel(&m, &[0.3, -1.2, 4.0], &s).unwrap();
        assert_eq!(gamma.max_abs(), 0.0);
    }

    #[test]
    fn christoffel_polar_plane_closed_form() {
        // Closed-form polar Christoffels: Gamma^r_tt = -r, Gamma^t_rt = 1/r.
        let m = polar_plane();
        let s = FdScheme::default();
        let g = christoffel(&m, &[2.0, 0.0], &s).unwrap();
        assert!((g.get(0, 1, 1) - (-2.0)).abs() < 1e-9);
        assert!((g.get(1, 0, 1) - 0.5).abs() < 1e-9);
        assert!((g.get(1, 1, 0) - 0.5).abs() < 1e-9);
        // everything else vanishes
        let mut rest = 0.0f64;
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    if (a, b, c) != (0, 1, 1) && (a, b, c) != (1, 0, 1) && (a, b, c) != (1, 1, 0) {
                        rest = rest.max(g.get(a, b, c).abs());
                    }
                }
            }
        }
        assert!(rest < 1e-9);
    }

    #[test]
    fn christoffel_unit_sphere_closed_form() {
        let m = sphere2(1.0);
        let s = FdScheme::default();
        let th = PI / 3.0;
        let g = christoffel(&m, &[th, 0.0], &s).unwrap();
        assert!((g.get(0, 1, 1) - (-th.sin() * th.cos())).abs() < 1e-9);
        assert!((g.get(1, 0, 1) - th.cos() / th.sin()).abs() < 1e-9);
    }

    #[test]
    fn christoffel_lower_symmetry_is_exact() {
        let m = sphere3(1.3);
        let s = FdScheme::default();
        let g = christoffel(&m, &[1.1, 0.9, 0.5], &s).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    assert_eq!(g.get(a, b, c), g.get(a, c, b));
                }
            }
        }
    }

    #[test]
    fn curvature_flat_torus_vanishes() {
        let m = flat_torus(3);
        let s = FdScheme::default();
        let pack = curvature_pack(&m, &[0.1, 5.0, 2.2], &s, SignConvention::PositiveSpheres)
            .unwrap();
        assert!(pack.scalar.abs() < 1e-8);
        assert!(pack.riemann.max_abs() < 1e-8);
    }

    #[test]
    fn curvature_spheres_closed_form() {
        let s = FdScheme::default();
        // S^2(r): scalar = 2 / r^2
        for r in [0.5f64, 1.0, 2.0] {
            let m = sphere2(r);
            let pack =
                curvature_pack(&m, &[1.0, 0.3], &s, SignConvention::PositiveSpheres).unwrap();
            assert!(
                (pack.scalar - 2.0 / (r * r)).abs() < 1e-6,
                "r = {r}: scalar = {}",
                pack.scalar
            );
        }
        // S^3(1): scalar = n(n-1)/r^2 = 6
        let m = sphere3(1.0);
        let pack = curvature_pack(&m, &[1.2, 0.9, 0.4], &s, SignConvention::PositiveSpheres)
            .unwrap();
        assert!((pack.scalar - 6.0).abs() < 1e-5, "scalar = {}", pack.scalar);
    }

    #[test]
    fn curvature_convention_flips_sign() {
        let s = FdScheme::default();
        let m = sphere2(0.5);
        let plus = curvature_pack(&m, &[1.0, 0.0], &s, SignConvention::PositiveSpheres).unwrap();
        let minus = curvature_pack(&m, &[1.0, 0.0], &s, SignConvention::NegativeSpheres).unwrap();
        assert!((plus.scalar - 8.0).abs() < 1e-6);
        assert!((plus.scalar + minus.scalar).abs() < 1e-12);
    }

    #[test]
    fn riemann_antisymmetry_and_ricci_symmetry() {
        let s = FdScheme::default();
        let m = sphere3(0.8);
        let pack = curvature_pack(&m, &[1.0, 1.2, 0.7], &s, SignConvention::PositiveSpheres)
            .unwrap();
        let n = 3;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        assert_eq!(
                            pack.riemann.get(a, b, c, d),
                            -pack.riemann.get(a, b, d, c),
                            "antisymmetry must hold exactly"
                        );
                    }
                }
            }
        }
        let asym = (&pack.ricci - pack.ricci.transpose()).abs().max();
        assert!(asym < 1e-7, "ricci asymmetry {asym}");
    }

    #[test]
    fn product_metric_scalar_curvature_adds() {
        // diag(s2(1), s2(0.7)) as a 4-dim block metric.
        let m = ChartedMetric::new(
            "s2 x s2",
            vec![
                Axis::bounded(0.05, PI - 0.05),
                Axis::periodic(0.0, 2.0 * PI),
                Axis::bounded(0.05, PI - 0.05),
                Axis::periodic(0.0, 2.0 * PI),
            ],
            |p, out| {
                out.fill(0.0);
                out[(0, 0)] = 1.0;
                out[(1, 1)] = p[0].sin().powi(2);
                let r = 0.7;
                out[(2, 2)] = r * r;
                out[(3, 3)] = r * r * p[2].sin().powi(2);
            },
        );
        let s = FdScheme::default();
        let pack = curvature_pack(&m, &[1.1, 0.2, 0.9, 1.5], &s, SignConvention::PositiveSpheres)
            .unwrap();
        let expected = 2.0 + 2.0 / (0.7f64 * 0.7);
        assert!((pack.scalar - expected).abs() < 1e-5);
    }

    #[test]
    fn order_two_convergence_rate() {
        // Halving the step with the order-2 scheme should shrink the error
        // by ~4 (measured exponent within [1.7, 2.3]).
        let m = sphere2(1.0);
        let p = [1.0, 0.4];
        let exact = 2.0;
        let err = |h: f64| {
            let s = FdScheme::new(h, crate::fd::FdOrder::Two, false);
            (curvature_pack(&m, &p, &s, SignConvention::PositiveSpheres)
                .unwrap()
                .scalar
                - exact)
                .abs()
        };
        let e1 = err(2e-3);
        let e2 = err(1e-3);
        let rate = (e1 / e2).log2();
        assert!((1.7..=2.3).contains(&rate), "rate {rate}, e1 {e1}, e2 {e2}");
    }

    #[test]
    fn laplace_beltrami_cases() {
        let s = FdScheme::default();
        // constant on a torus
        let m = flat_torus(2);
        let v = laplace_beltrami(&m, &|_p| 3.5, &[1.0, 2.0], &s).unwrap();
        assert!(v.abs() < 1e-9);
        // flat plane, f = x^2 + y^2 -> 4
        let e = euclidean(2);
        let v = laplace_beltrami(&e, &|p| p[0] * p[0] + p[1] * p[1], &[0.7, -0.2], &s).unwrap();
        assert!((v - 4.0).abs() < 1e-7, "laplacian {v}");
        // unit sphere, l=1 harmonic: lap(cos th) = -2 cos th
        let m = sphere2(1.0);
        for th in [0.8f64, 1.4, 2.0] {
            let v = laplace_beltrami(&m, &|p| p[0].cos(), &[th, 1.0], &s).unwrap();
            assert!(
                (v + 2.0 * th.cos()).abs() < 1e-6,
                "theta {th}: lap {v} vs {}",
                -2.0 * th.cos()
            );
        }
    }

    #[test]
    fn out_of_domain_and_singular_errors() {
        let s = FdScheme::default();
        let m = sphere2(1.0);
        // too close to the chart boundary for the stencil
        let err = curvature_pack(&m, &[0.051, 0.0], &s, SignConvention::PositiveSpheres);
        assert!(matches!(err, Err(KkError::OutOfDomain(_))));
        // degenerate metric
        let bad = ChartedMetric::new(
            "degenerate",
            vec![Axis::bounded(-1.0, 1.0), Axis::bounded(-1.0, 1.0)],
            |p, out| {
                out.fill(0.0);
                out[(0, 0)] = 1.0;
                out[(1, 1)] = p[0] * p[0]; // vanishes at x = 0
            },
        );
        let err = christoffel(&bad, &[0.0, 0.0], &s);
        assert!(matches!(err, Err(KkError::SingularMetric(_))));
    }

    #[test]
    fn periodic_wrap_reaches_across_seam() {
        let m = sphere2(1.0);
        let s = FdScheme::default();
        // phi = 0 sits on the periodic seam; stencils must wrap silently.
        let a = curvature_pack(&m, &[1.0, 0.0], &s, SignConvention::PositiveSpheres).unwrap();
        let b = curvature_pack(&m, &[1.0, 2.0 * PI - 1e-9], &s, SignConvention::PositiveSpheres)
            .unwrap();
        assert!((a.scalar - b.scalar).abs() < 1e-9);
    }
}
