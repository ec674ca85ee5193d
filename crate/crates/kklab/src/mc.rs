//! Stochastic verification lab: Euler-Maruyama integration of the
//! metric-generated diffusion, Feynman-Kac kernel estimation with a
//! mollified endpoint delta, and the group-averaged reduction check.
//!
//! Reproducibility contract: every path draws from its own
//! counter-split ChaCha stream (master seed + path index), and estimator
//! accumulation runs over fixed-size path chunks combined in index order
//! with compensated summation, so results are bit-identical for any
//! worker count.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{Axis, ChartedMetric};
use crate::error::{KkError, Result};
use crate::fd::{FdOrder, FdScheme};
use crate::kk::{self, KKBundle};
use crate::lie;
use crate::quantum::PhysicalParams;

type ScalarFn = dyn Fn(&[f64]) -> f64 + Sync + Send;

const CHUNK: usize = 1024;

/// Bump evaluations beyond this many widths contribute below 1e-15 and
/// are skipped deterministically.
const BUMP_CUTOFF: f64 = 8.5;

/// Diffusion generated by a chart metric, with the potential (weighted by
/// 1/(mu^2 kappa m) in the exponent) and an optional extra exponent rate
/// (the reduction Jacobian on base-space processes).
#[derive(Clone)]
pub struct SdeSpec {
    pub metric: ChartedMetric,
    pub params: PhysicalParams,
    potential: Option<Arc<ScalarFn>>,
    extra_rate: Option<Arc<ScalarFn>>,
    drift_scheme: FdScheme,
}

impl SdeSpec {
    /// Drift derivatives default to order-2 central differences at step
    /// 1e-3; the weak order-1 integrator cannot use more accuracy.
    pub fn new(metric: ChartedMetric, params: PhysicalParams) -> Self {
        Self {
            metric,
            params,
            potential: None,
            extra_rate: None,
            drift_scheme: FdScheme::new(1e-3, FdOrder::Two, false),
        }
    }

    pub fn with_potential<F>(mut self, v: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.potential = Some(Arc::new(v));
        self
    }

    pub fn with_extra_exponent<F>(mut self, j: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.extra_rate = Some(Arc::new(j));
        self
    }

    /// d(log weight)/dt at a path point.
    fn log_weight_rate(&self, y: &[f64]) -> f64 {
        let p = &self.params;
        let mut rate = 0.0;
        if let Some(v) = &self.potential {
            rate += v(y) / (p.mu2() * p.kappa * p.m);
        }
        if let Some(j) = &self.extra_rate {
            rate += j(y);
        }
        rate
    }
}

// ---------------------------------------------------------------------------
// Dense linear algebra on reused buffers (hot loop)
// ---------------------------------------------------------------------------

/// In-place Cholesky factorization; the lower triangle of `a` becomes L
/// and the determinant of the original matrix is returned. `None` when
/// the matrix is not positive definite.
fn cholesky_in_place(a: &mut DMatrix<f64>) -> Option<f64> {
    let n = a.nrows();
    let mut det = 1.0;
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= a[(j, k)] * a[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        det *= d;
        let l = d.sqrt();
        a[(j, j)] = l;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = v / l;
        }
    }
    Some(det)
}

/// Inverse of the lower-triangular factor, written into `out`.
fn lower_tri_inverse(l: &DMatrix<f64>, out: &mut DMatrix<f64>) {
    let n = l.nrows();
    out.fill(0.0);
    for j in 0..n {
        out[(j, j)] = 1.0 / l[(j, j)];
        for i in (j + 1)..n {
            let mut v = 0.0;
            for k in j..i {
                v -= l[(i, k)] * out[(k, j)];
            }
            out[(i, j)] = v / l[(i, i)];
        }
    }
}

/// out = linv^T linv (the SPD inverse from the factor inverse).
fn spd_inverse_from_factor(linv: &DMatrix<f64>, out: &mut DMatrix<f64>) {
    let n = linv.nrows();
    for i in 0..n {
        for j in i..n {
            let mut v = 0.0;
            for k in i.max(j)..n {
                v += linv[(k, i)] * linv[(k, j)];
            }
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
}

/// Solve L^T z = xi in place (back substitution); afterwards xi holds z,
/// a noise vector with covariance G^{-1}.
fn solve_upper_from_lower(l: &DMatrix<f64>, xi: &mut [f64]) {
    let n = l.nrows();
    for i in (0..n).rev() {
        let mut v = xi[i];
        for k in (i + 1)..n {
            v -= l[(k, i)] * xi[k];
        }
        xi[i] = v / l[(i, i)];
    }
}

// ---------------------------------------------------------------------------
// metric_sqrt_frame
// ---------------------------------------------------------------------------

/// Principal symmetric square-root factor of the inverse metric:
/// X = G^{-1/2}, so that X X^T = G^{AB}.
pub fn metric_sqrt_frame(m: &ChartedMetric, p: &[f64]) -> Result<DMatrix<f64>> {
    let g = m.metric_at(p);
    let eig = g.clone().symmetric_eigen();
    let n = g.nrows();
    for &l in eig.eigenvalues.iter() {
        if l <= 0.0 {
            return Err(KkError::SingularMetric(format!(
                "eigenvalue {l:.3e} <= 0 at {p:?}"
            )));
        }
    }
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let scale = 1.0 / eig.eigenvalues[k].sqrt();
        let col = eig.eigenvectors.column(k);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += scale * col[i] * col[j];
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Euler-Maruyama stepping
// ---------------------------------------------------------------------------

struct Stepper<'a> {
    spec: &'a SdeSpec,
    dim: usize,
    dt: f64,
    noise_scale: f64, // mu sqrt(kappa dt)
    drift_factor: f64, // 1/2 mu^2 kappa
    g: DMatrix<f64>,
    linv: DMatrix<f64>,
    m_shift: DMatrix<f64>,
    work: DMatrix<f64>,
    drift: Vec<f64>,
    xi: Vec<f64>,
    q: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(spec: &'a SdeSpec, dt: f64) -> Self {
        let dim = spec.metric.dim();
        let p = &spec.params;
        Self {
            spec,
            dim,
            dt,
            noise_scale: p.mu2().sqrt() * (p.kappa * dt).sqrt(),
            drift_factor: 0.5 * p.mu2() * p.kappa,
            g: DMatrix::zeros(dim, dim),
            linv: DMatrix::zeros(dim, dim),
            m_shift: DMatrix::zeros(dim, dim),
            work: DMatrix::zeros(dim, dim),
            drift: vec![0.0; dim],
            xi: vec![0.0; dim],
            q: vec![0.0; dim],
        }
    }

    /// sqrt(det G) * G^{-1} at `q`, written into `self.m_shift`.
    fn sqrtdet_ginv(&mut self, q: &[f64]) -> Option<()> {
        self.spec.metric.fill_metric(q, &mut self.work);
        let det = cholesky_in_place(&mut self.work)?;
        lower_tri_inverse(&self.work, &mut self.linv);
        spd_inverse_from_factor(&self.linv, &mut self.m_shift);
        let s = det.sqrt();
        self.m_shift.iter_mut().for_each(|v| *v *= s);
        Some(())
    }

    /// One Euler-Maruyama step from `y`; returns false when the metric
    /// degenerates at the current point.
    fn step<R: rand::Rng>(&mut self, y: &mut [f64], rng: &mut R) -> bool {
        let h = self.spec.drift_scheme.step;

        // drift^A = 1/2 mu^2 kappa G^{-1/2} sum_B d_B(sqrt(G) G^{AB})
        self.drift.iter_mut().for_each(|v| *v = 0.0);
        for b_axis in 0..self.dim {
            self.q.copy_from_slice(y);
            self.q[b_axis] = y[b_axis] + h;
            if self.sqrtdet_ginv(&self.q.clone()).is_none() {
                return false;
            }
            for a in 0..self.dim {
                self.drift[a] += self.m_shift[(a, b_axis)] / (2.0 * h);
            }
            self.q[b_axis] = y[b_axis] - h;
            if self.sqrtdet_ginv(&self.q.clone()).is_none() {
                return false;
            }
            for a in 0..self.dim {
                self.drift[a] -= self.m_shift[(a, b_axis)] / (2.0 * h);
            }
        }

        // diffusion frame from the Cholesky factor at y
        self.spec.metric.fill_metric(y, &mut self.g);
        let det = match cholesky_in_place(&mut self.g) {
            Some(d) => d,
            None => return false,
        };
        let inv_sqrt_det = 1.0 / det.sqrt();

        for x in self.xi.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
        solve_upper_from_lower(&self.g, &mut self.xi);

        for a in 0..self.dim {
            y[a] += self.drift_factor * inv_sqrt_det * self.drift[a] * self.dt
                + self.noise_scale * self.xi[a];
        }
        true
    }
}

/// Wrap periodic coordinates, or report an exit on bounded axes.
fn wrap_or_exit(axes: &[Axis], y: &mut [f64]) -> bool {
    for (x, ax) in y.iter_mut().zip(axes) {
        if ax.periodic {
            let period = ax.extent();
            *x = (*x - ax.lo).rem_euclid(period) + ax.lo;
        } else if *x < ax.lo || *x > ax.hi {
            return false;
        }
    }
    true
}

fn path_steps(t_a: f64, t_b: f64, dt: f64) -> Result<usize> {
    if dt <= 0.0 || t_b <= t_a {
        return Err(KkError::InvalidInput(
            "need dt > 0 and t_b > t_a".into(),
        ));
    }
    let n = ((t_b - t_a) / dt).round();
    if (n * dt - (t_b - t_a)).abs() > 1e-9 {
        return Err(KkError::InvalidInput(format!(
            "dt = {dt} does not divide t_b - t_a = {}",
            t_b - t_a
        )));
    }
    Ok(n as usize)
}

/// One path's own random stream, split from the master seed by counter.
pub fn rng_for_path(seed: u64, path_index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// A discrete sample path with its accumulated Feynman-Kac exponent.
#[derive(Debug, Clone)]
pub struct PathResult {
    pub points: Vec<Vec<f64>>,
    pub log_weight: f64,
}

/// Integrate one path from `start` over [t_a, t_b]; deterministic given
/// the seed. Leaving a bounded chart axis raises `ChartExit`.
pub fn euler_maruyama_path(
    spec: &SdeSpec,
    start: &[f64],
    t_a: f64,
    t_b: f64,
    dt: f64,
    seed: u64,
) -> Result<PathResult> {
    let n_steps = path_steps(t_a, t_b, dt)?;
    let mut rng = rng_for_path(seed, 0);
    let mut stepper = Stepper::new(spec, dt);
    let mut y = spec.metric.wrap_point(start);
    let mut points = Vec::with_capacity(n_steps + 1);
    points.push(y.clone());
    let mut log_weight = 0.0;
    for k in 0..n_steps {
        log_weight += spec.log_weight_rate(&y) * dt;
        if !stepper.step(&mut y, &mut rng) {
            return Err(KkError::SingularMetric(format!(
                "metric degenerated along the path at t = {}",
                t_a + k as f64 * dt
            )));
        }
        if !wrap_or_exit(spec.metric.axes(), &mut y) {
            return Err(KkError::ChartExit {
                t: t_a + (k + 1) as f64 * dt,
            });
        }
        points.push(y.clone());
    }
    Ok(PathResult { points, log_weight })
}

/// Endpoint-only simulation used by the estimators: `None` when the path
/// leaves the chart (discarded and counted by the caller).
fn simulate_endpoint(
    spec: &SdeSpec,
    start: &[f64],
    n_steps: usize,
    dt: f64,
    rng: &mut ChaCha12Rng,
    stepper: &mut Stepper,
) -> Option<(Vec<f64>, f64)> {
    let mut y = spec.metric.wrap_point(start);
    let mut log_weight = 0.0;
    for _ in 0..n_steps {
        log_weight += spec.log_weight_rate(&y) * dt;
        if !stepper.step(&mut y, rng) {
            return None;
        }
        if !wrap_or_exit(spec.metric.axes(), &mut y) {
            return None;
        }
    }
    Some((y, log_weight))
}

/// Normalized Gaussian bump in chart coordinates (product over axes),
/// with the nearest periodic image on wrapped axes.
fn bump(axes: &[Axis], width: f64, from: &[f64], to: &[f64]) -> f64 {
    let norm = 1.0 / (width * (2.0 * std::f64::consts::PI).sqrt());
    let mut value = 1.0;
    for ((&a, &b), ax) in from.iter().zip(to).zip(axes) {
        let mut d = a - b;
        if ax.periodic {
            let period = ax.extent();
            d = d.rem_euclid(period);
            if d > 0.5 * period {
                d -= period;
            }
        }
        if d.abs() > BUMP_CUTOFF * width {
            return 0.0;
        }
        value *= norm * (-0.5 * d * d / (width * width)).exp();
    }
    value
}

/// Chunked deterministic moment accumulation: `per_path` fills a value
/// vector for a path index (false = discarded). Returns per-value sums,
/// sums of squares, and the discard count, independent of worker count.
fn chunked_stats<F>(n_paths: usize, n_values: usize, per_path: F) -> (Vec<f64>, Vec<f64>, usize)
where
    F: Fn(usize, &mut [f64]) -> bool + Sync,
{
    let n_chunks = n_paths.div_ceil(CHUNK);
    let partials: Vec<(Vec<f64>, Vec<f64>, usize)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(n_paths);
            let mut sums = vec![0.0; n_values];
            let mut comps = vec![0.0; n_values];
            let mut sq_sums = vec![0.0; n_values];
            let mut sq_comps = vec![0.0; n_values];
            let mut discarded = 0usize;
            let mut values = vec![0.0; n_values];
            for idx in lo..hi {
                values.iter_mut().for_each(|v| *v = 0.0);
                if !per_path(idx, &mut values) {
                    discarded += 1;
                    // discarded paths contribute zero but stay in n
                }
                for (k, &v) in values.iter().enumerate() {
                    let y = v - comps[k];
                    let t = sums[k] + y;
                    comps[k] = (t - sums[k]) - y;
                    sums[k] = t;
                    let y2 = v * v - sq_comps[k];
                    let t2 = sq_sums[k] + y2;
                    sq_comps[k] = (t2 - sq_sums[k]) - y2;
                    sq_sums[k] = t2;
                }
            }
            (sums, sq_sums, discarded)
        })
        .collect();

    let mut sums = vec![0.0; n_values];
    let mut comps = vec![0.0; n_values];
    let mut sq_sums = vec![0.0; n_values];
    let mut sq_comps = vec![0.0; n_values];
    let mut discarded = 0;
    for (s, s2, d) in partials {
        discarded += d;
        for k in 0..n_values {
            let y = s[k] - comps[k];
            let t = sums[k] + y;
            comps[k] = (t - sums[k]) - y;
            sums[k] = t;
            let y2 = s2[k] - sq_comps[k];
            let t2 = sq_sums[k] + y2;
            sq_comps[k] = (t2 - sq_sums[k]) - y2;
            sq_sums[k] = t2;
        }
    }
    (sums, sq_sums, discarded)
}

/// A Monte Carlo kernel value with its statistical error.
#[derive(Debug, Clone, Serialize)]
pub struct KernelEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub n_discarded: usize,
    pub time_step: f64,
    pub start: Vec<f64>,
    pub t_a: f64,
    pub target: Vec<f64>,
    pub t_b: f64,
    pub smoothing_width: f64,
}

fn estimate_from_moments(sum: f64, sq_sum: f64, n: usize) -> (f64, f64) {
    let mean = sum / n as f64;
    let var = ((sq_sum - sum * sum / n as f64) / (n.saturating_sub(1).max(1)) as f64).max(0.0);
    (mean, (var / n as f64).sqrt())
}

/// Kernel estimates for several endpoint targets sharing one path
/// ensemble. The endpoint delta is mollified by a normalized Gaussian
/// bump against the Riemannian volume.
pub fn kernel_estimates(
    spec: &SdeSpec,
    x_a: &[f64],
    t_a: f64,
    t_b: f64,
    dt: f64,
    n_paths: usize,
    smoothing_width: f64,
    seed: u64,
    targets: &[Vec<f64>],
) -> Result<Vec<KernelEstimate>> {
    if smoothing_width <= 0.0 {
        return Err(KkError::InvalidInput("smoothing width must be positive".into()));
    }
    if n_paths < 100 {
        return Err(KkError::InvalidInput(
            "kernel estimation needs at least 100 paths".into(),
        ));
    }
    let n_steps = path_steps(t_a, t_b, dt)?;
    let axes = spec.metric.axes().to_vec();
    let dim = spec.metric.dim();

    let per_path = |idx: usize, values: &mut [f64]| -> bool {
        let mut rng = rng_for_path(seed, idx as u64);
        let mut stepper = Stepper::new(spec, dt);
        let Some((end, lw)) = simulate_endpoint(spec, x_a, n_steps, dt, &mut rng, &mut stepper)
        else {
            return false;
        };
        let mut g = DMatrix::zeros(dim, dim);
        spec.metric.fill_metric(&end, &mut g);
        let det = g.determinant();
        if det <= 0.0 {
            return false;
        }
        let dress = det.sqrt().recip() * lw.exp();
        for (k, target) in targets.iter().enumerate() {
            values[k] = bump(&axes, smoothing_width, &end, target) * dress;
        }
        true
    };

    let (sums, sq_sums, discarded) = chunked_stats(n_paths, targets.len(), per_path);
    if discarded == n_paths {
        return Err(KkError::InsufficientPaths { n_paths });
    }
    Ok(targets
        .iter()
        .enumerate()
        .map(|(k, target)| {
            let (value, std_error) = estimate_from_moments(sums[k], sq_sums[k], n_paths);
            KernelEstimate {
                value,
                std_error,
                n_paths,
                n_discarded: discarded,
                time_step: dt,
                start: x_a.to_vec(),
                t_a,
                target: target.clone(),
                t_b,
                smoothing_width,
            }
        })
        .collect())
}

/// Feynman-Kac kernel estimate between two points.
pub fn feynman_kac_kernel(
    spec: &SdeSpec,
    x_a: &[f64],
    t_a: f64,
    x_b: &[f64],
    t_b: f64,
    dt: f64,
    n_paths: usize,
    smoothing_width: f64,
    seed: u64,
) -> Result<KernelEstimate> {
    let mut v = kernel_estimates(
        spec,
        x_a,
        t_a,
        t_b,
        dt,
        n_paths,
        smoothing_width,
        seed,
        &[x_b.to_vec()],
    )?;
    Ok(v.pop().expect("one target yields one estimate"))
}

/// Weighted sum of kernels over many targets, estimated per path so the
/// standard error accounts for cross-target correlation.
#[allow(clippy::too_many_arguments)]
fn weighted_kernel_sum(
    spec: &SdeSpec,
    x_a: &[f64],
    t_a: f64,
    t_b: f64,
    dt: f64,
    n_paths: usize,
    smoothing_width: f64,
    seed: u64,
    targets: &[Vec<f64>],
    weights: &[f64],
    scale: f64,
) -> Result<(f64, f64, usize)> {
    let n_steps = path_steps(t_a, t_b, dt)?;
    let axes = spec.metric.axes().to_vec();
    let dim = spec.metric.dim();

    let per_path = |idx: usize, values: &mut [f64]| -> bool {
        let mut rng = rng_for_path(seed, idx as u64);
        let mut stepper = Stepper::new(spec, dt);
        let Some((end, lw)) = simulate_endpoint(spec, x_a, n_steps, dt, &mut rng, &mut stepper)
        else {
            return false;
        };
        let mut g = DMatrix::zeros(dim, dim);
        spec.metric.fill_metric(&end, &mut g);
        let det = g.determinant();
        if det <= 0.0 {
            return false;
        }
        let dress = det.sqrt().recip() * lw.exp() * scale;
        let mut acc = 0.0;
        for (target, &w) in targets.iter().zip(weights) {
            let bv = bump(&axes, smoothing_width, &end, target);
            if bv != 0.0 {
                acc += w * bv;
            }
        }
        values[0] = acc * dress;
        true
    };

    let (sums, sq_sums, discarded) = chunked_stats(n_paths, 1, per_path);
    if discarded == n_paths {
        return Err(KkError::InsufficientPaths { n_paths });
    }
    let (value, std_error) = estimate_from_moments(sums[0], sq_sums[0], n_paths);
    Ok((value, std_error, discarded))
}

// ---------------------------------------------------------------------------
// Jacobian tabulation (base-space weight functional)
// ---------------------------------------------------------------------------

/// Multilinear-interpolated scalar field over the base chart, used to
/// evaluate the reduction Jacobian along millions of path steps without
/// re-differencing the fibre metric at every one of them.
struct TabulatedField {
    axes: Vec<Axis>,
    nodes_per_axis: usize,
    lo: Vec<f64>,
    step: Vec<f64>,
    values: Vec<f64>,
}

impl TabulatedField {
    fn build(
        axes: &[Axis],
        nodes_per_axis: usize,
        margin: f64,
        f: &dyn Fn(&[f64]) -> Result<f64>,
    ) -> Result<Self> {
        let dim = axes.len();
        let mut lo = Vec::with_capacity(dim);
        let mut step = Vec::with_capacity(dim);
        for ax in axes {
            if ax.periodic {
                lo.push(ax.lo);
                step.push(ax.extent() / nodes_per_axis as f64);
            } else {
                lo.push(ax.lo + margin);
                step.push((ax.extent() - 2.0 * margin) / (nodes_per_axis - 1) as f64);
            }
        }
        let total = nodes_per_axis.pow(dim as u32);
        let mut values = vec![0.0; total];
        let mut idx = vec![0usize; dim];
        for flat in 0..total {
            let mut rem = flat;
            for d in 0..dim {
                idx[d] = rem % nodes_per_axis;
                rem /= nodes_per_axis;
            }
            let p: Vec<f64> = (0..dim).map(|d| lo[d] + idx[d] as f64 * step[d]).collect();
            values[flat] = f(&p)?;
        }
        Ok(Self {
            axes: axes.to_vec(),
            nodes_per_axis,
            lo,
            step,
            values,
        })
    }

    fn at(&self, p: &[f64]) -> f64 {
        let dim = self.axes.len();
        let n = self.nodes_per_axis;
        // locate the cell, clamping bounded axes to the tabulated range
        let mut base = vec![0usize; dim];
        let mut frac = vec![0.0; dim];
        for d in 0..dim {
            let t = (p[d] - self.lo[d]) / self.step[d];
            if self.axes[d].periodic {
                let t = t.rem_euclid(n as f64);
                base[d] = (t as usize) % n;
                frac[d] = t - t.floor();
            } else {
                let t = t.clamp(0.0, (n - 1) as f64 - 1e-12);
                base[d] = t as usize;
                frac[d] = t - base[d] as f64;
            }
        }
        let mut value = 0.0;
        for corner in 0..(1usize << dim) {
            let mut weight = 1.0;
            let mut flat = 0;
            let mut stride = 1;
            for d in 0..dim {
                let up = (corner >> d) & 1 == 1;
                let i = if up {
                    if self.axes[d].periodic {
                        (base[d] + 1) % n
                    } else {
                        (base[d] + 1).min(n - 1)
                    }
                } else {
                    base[d]
                };
                weight *= if up { frac[d] } else { 1.0 - frac[d] };
                flat += i * stride;
                stride *= n;
            }
            value += weight * self.values[flat];
        }
        value
    }
}

// ---------------------------------------------------------------------------
// Reduction check
// ---------------------------------------------------------------------------

/// Two-sided Monte Carlo check of the group-averaged kernel relation:
/// the fibre-determinant-dressed base kernel with the Jacobian functional
/// against the Haar average of total-space kernels.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionCheck {
    pub case: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// combined standard error of the ratio
    pub stderr: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    #[serde(skip)]
    pub lhs_error: f64,
    #[serde(skip)]
    pub rhs_error: f64,
    #[serde(skip)]
    pub n_discarded: usize,
}

/// Estimate both sides of the reduction relation on a trivial-bundle
/// catalog entry with a global adapted chart.
///
/// The left side runs the base diffusion with the Jacobian functional in
/// the exponent and dresses the kernel with det(gamma)^{-1/4} at both
/// endpoints. The right side starts total-space paths at (x_a, e) and
/// averages the kernel over fibre targets (x_b, theta) with Haar
/// quadrature; the average is taken in the chart normalization of the
/// invariant measure (weights times the group chart volume), which is
/// what the determinant-normalized kernels require. The two sides draw
/// from unrelated random streams.
#[allow(clippy::too_many_arguments)]
pub fn reduction_check(
    b: &KKBundle,
    x_a: &[f64],
    x_b: &[f64],
    t_a: f64,
    t_b: f64,
    dt: f64,
    n_paths: usize,
    smoothing_width: f64,
    seed: u64,
    haar_resolution: usize,
    params: &PhysicalParams,
) -> Result<ReductionCheck> {
    let fd = FdScheme::new(1e-3, FdOrder::Four, false);

    // --- left side: base process with the Jacobian functional
    let nodes = if b.base_dim() == 1 { 1024 } else { 64 };
    let margin = fd.margin(2) + 1e-6;
    let bundle = b.clone();
    let j_table = TabulatedField::build(b.base_axes(), nodes, margin, &move |x| {
        kk::jacobian_direct(&bundle, x, &fd, params).map(|j| j.jacobian)
    })?;
    let bundle = b.clone();
    let mut base_spec = SdeSpec::new(b.base_metric(), *params)
        .with_extra_exponent(move |x: &[f64]| j_table.at(x));
    if b.has_potential() {
        let bundle2 = b.clone();
        base_spec = base_spec.with_potential(move |x: &[f64]| bundle2.potential(x));
    }
    let base_kernel = feynman_kac_kernel(
        &base_spec,
        x_a,
        t_a,
        x_b,
        t_b,
        dt,
        n_paths,
        smoothing_width,
        seed,
    )?;
    let det_gamma_a = bundle.gamma_at(x_a).determinant();
    let det_gamma_b = bundle.gamma_at(x_b).determinant();
    if det_gamma_a <= 0.0 || det_gamma_b <= 0.0 {
        return Err(KkError::SingularMetric("fibre metric determinant".into()));
    }
    let dressing = det_gamma_a.powf(-0.25) * det_gamma_b.powf(-0.25);
    let lhs = dressing * base_kernel.value;
    let lhs_error = dressing * base_kernel.std_error;

    // --- right side: total-space process averaged over fibre targets
    let total = kk::assemble_kk_metric(b);
    let n_base = b.base_dim();
    let bundle3 = b.clone();
    let mut total_spec = SdeSpec::new(total, *params);
    if b.has_potential() {
        total_spec =
            total_spec.with_potential(move |q: &[f64]| bundle3.potential(&q[..n_base]));
    }
    let haar = lie::haar_quadrature(&b.group().chart, haar_resolution);
    let targets: Vec<Vec<f64>> = haar
        .nodes
        .iter()
        .map(|theta| {
            let mut t = x_b.to_vec();
            t.extend_from_slice(theta);
            t
        })
        .collect();
    let start = b.section_point(x_a);
    // unrelated master seed for the independent right-side streams
    let rhs_seed = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(0x243f6a8885a308d3);
    let (rhs, rhs_error, discarded) = weighted_kernel_sum(
        &total_spec,
        &start,
        t_a,
        t_b,
        dt,
        n_paths,
        smoothing_width,
        rhs_seed,
        &targets,
        &haar.weights,
        haar.chart_volume,
    )?;

    let ratio = lhs / rhs;
    let stderr = ratio.abs()
        * ((lhs_error / lhs).powi(2) + (rhs_error / rhs).powi(2)).sqrt();
    Ok(ReductionCheck {
        case: b.label().to_string(),
        lhs,
        rhs,
        ratio,
        stderr,
        n_paths,
        dt,
        seed,
        lhs_error,
        rhs_error,
        n_discarded: discarded,
    })
}
