//! Built-in geometry catalog: named charts and bundles with documented
//! closed-form reference values, used by the CLI, the tests and the
//! acceptance suite.
//!
//! Names accept an optional parenthesized argument, e.g. `s2(0.5)` or
//! `warped-u1-line(0.1)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::chart::{Axis, ChartedMetric};
use crate::error::{KkError, Result};
use crate::kk::{self, KKBundle};
use crate::lie::{build_abelian, build_su2};

/// Polar margin for charts that degenerate at theta = 0, pi.
pub const POLE_MARGIN: f64 = 0.3;

/// Margin kept clear of the coordinate poles when sampling the Hopf base
/// chart; chart calculus rejects stencils that straddle the boundary.
pub const HOPF_POLE_MARGIN: f64 = 0.35;

/// A named catalog entry.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub kind: &'static str,
    pub summary: &'static str,
}

/// A built geometry: either a bare chart metric or a full bundle.
/// Instances are built once per run, so the variant size gap is harmless.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum CatalogGeometry {
    Metric(ChartedMetric),
    Bundle(KKBundle),
}

impl CatalogGeometry {
    pub fn label(&self) -> &str {
        match self {
            CatalogGeometry::Metric(m) => m.label(),
            CatalogGeometry::Bundle(b) => b.label(),
        }
    }

    /// Axes a scenario samples points from (base axes for bundles).
    pub fn sample_axes(&self) -> &[Axis] {
        match self {
            CatalogGeometry::Metric(m) => m.axes(),
            CatalogGeometry::Bundle(b) => b.base_axes(),
        }
    }
}

pub fn listing() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "flat-torus(n)",
            kind: "metric",
            summary: "flat n-torus, periodic 2*pi axes; scalar curvature 0",
        },
        CatalogEntry {
            name: "s2(r)",
            kind: "metric",
            summary: "round 2-sphere of radius r in polar chart; scalar 2/r^2",
        },
        CatalogEntry {
            name: "s3(r)",
            kind: "metric",
            summary: "round 3-sphere of radius r, hyperspherical chart; scalar 6/r^2",
        },
        CatalogEntry {
            name: "polar-plane",
            kind: "metric",
            summary: "flat plane in polar coordinates; scalar 0",
        },
        CatalogEntry {
            name: "hopf",
            kind: "bundle",
            summary: "unit 3-sphere as a circle bundle over s2(1/2) with the monopole connection; constant fibre metric",
        },
        CatalogEntry {
            name: "trivial-su2-product",
            kind: "bundle",
            summary: "flat circle base times SU(2) with the bi-invariant fibre metric; A = 0",
        },
        CatalogEntry {
            name: "warped-su2",
            kind: "bundle",
            summary: "flat 2-torus base, trigonometric SPD gamma(x), divergence-free non-abelian connection",
        },
        CatalogEntry {
            name: "warped-u1-line(eps)",
            kind: "bundle",
            summary: "1-dim base segment, U(1) fibre with gamma = exp(2 eps x); default eps 0.1",
        },
        CatalogEntry {
            name: "warped-u1-gauss",
            kind: "bundle",
            summary: "1-dim base segment, U(1) fibre with gamma = exp(2 x^2)",
        },
    ]
}

// ---------------------------------------------------------------------------
// Metric builders
// ---------------------------------------------------------------------------

pub fn flat_torus(n: usize) -> ChartedMetric {
    ChartedMetric::new(
        format!("flat-torus({n})"),
        vec![Axis::periodic(0.0, 2.0 * PI); n],
        move |_p, out| {
            out.fill(0.0);
            out.fill_diagonal(1.0);
        },
    )
}

pub fn s2(r: f64) -> ChartedMetric {
    ChartedMetric::new(
        format!("s2({r})"),
        vec![
            Axis::bounded(POLE_MARGIN, PI - POLE_MARGIN),
            Axis::periodic(0.0, 2.0 * PI),
        ],
        move |p, out| {
            out.fill(0.0);
            out[(0, 0)] = r * r;
            out[(1, 1)] = r * r * p[0].sin().powi(2);
        },
    )
}

pub fn s3(r: f64) -> ChartedMetric {
    ChartedMetric::new(
        format!("s3({r})"),
        vec![
            Axis::bounded(POLE_MARGIN, PI - POLE_MARGIN),
            Axis::bounded(POLE_MARGIN, PI - POLE_MARGIN),
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

pub fn polar_plane() -> ChartedMetric {
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

// ---------------------------------------------------------------------------
// Bundle builders
// ---------------------------------------------------------------------------

/// Unit round 3-sphere presented as a U(1) bundle over the half-radius
/// 2-sphere: h = diag(1/4, sin^2(th)/4), gamma = 1, A_phi = cos(th)/2.
/// Reference values: R_total = 6, R_base = 8, quarter-F^2 term = 2.
pub fn hopf() -> KKBundle {
    KKBundle::new(
        "hopf",
        vec![
            Axis::bounded(HOPF_POLE_MARGIN, PI - HOPF_POLE_MARGIN),
            Axis::periodic(0.0, 2.0 * PI),
        ],
        build_abelian(1),
        |x, out| {
            out.fill(0.0);
            out[(0, 0)] = 0.25;
            out[(1, 1)] = 0.25 * x[0].sin().powi(2);
        },
        |_x, out| {
            out[(0, 0)] = 1.0;
        },
        |x, out| {
            out[(0, 0)] = 0.0;
            out[(1, 0)] = 0.5 * x[0].cos();
        },
    )
}

/// Flat circle base times SU(2) with the bi-invariant fibre metric; the
/// assembled space is the product of a circle and the radius-2 3-sphere.
pub fn trivial_su2_product() -> KKBundle {
    KKBundle::new(
        "trivial-su2-product",
        vec![Axis::periodic(0.0, 2.0 * PI)],
        build_su2(),
        |_x, out| {
            out[(0, 0)] = 1.0;
        },
        |_x, out| {
            out.fill(0.0);
            out.fill_diagonal(1.0);
        },
        |_x, out| {
            out.fill(0.0);
        },
    )
}

/// Flat 2-torus base with a trigonometric SPD fibre metric
/// gamma = L^T L + 0.3 I and a divergence-free non-abelian connection
/// (A_1 depends only on x_2 and vice versa).
pub fn warped_su2() -> KKBundle {
    KKBundle::new(
        "warped-su2",
        vec![Axis::periodic(0.0, 2.0 * PI), Axis::periodic(0.0, 2.0 * PI)],
        build_su2(),
        |_x, out| {
            out.fill(0.0);
            out.fill_diagonal(1.0);
        },
        |x, out| {
            let l = DMatrix::from_row_slice(
                3,
                3,
                &[
                    1.0 + 0.3 * x[0].sin(),
                    0.2 * x[1].cos(),
                    0.0,
                    0.1 * (x[0] + x[1]).sin(),
                    1.1,
                    0.15 * x[0].cos(),
                    0.05 * x[1].sin(),
                    0.1 * x[0].cos(),
                    0.9 + 0.2 * x[1].sin(),
                ],
            );
            let m = l.transpose() * &l + DMatrix::<f64>::identity(3, 3) * 0.3;
            out.copy_from(&m);
        },
        |x, out| {
            out[(0, 0)] = 0.4 * x[1].cos();
            out[(0, 1)] = 0.3 * (x[1] + 0.7).sin();
            out[(0, 2)] = -0.2 * x[1].sin();
            out[(1, 0)] = 0.25 * x[0].sin();
            out[(1, 1)] = -0.35 * (x[0] + 0.3).cos();
            out[(1, 2)] = 0.15 * x[0].cos();
        },
    )
}

/// 1-dim base segment, 1-dim fibre with gamma = exp(2 eps x), A = 0.
/// The Jacobian bracket is the constant eps^2.
pub fn warped_u1_line(eps: f64) -> KKBundle {
    KKBundle::new(
        format!("warped-u1-line({eps})"),
        vec![Axis::bounded(-8.0, 8.0)],
        build_abelian(1),
        |_x, out| {
            out[(0, 0)] = 1.0;
        },
        move |x, out| {
            out[(0, 0)] = (2.0 * eps * x[0]).exp();
        },
        |_x, out| {
            out.fill(0.0);
        },
    )
}

/// 1-dim base segment, 1-dim fibre with gamma = exp(2 x^2); the Jacobian
/// bracket is 4 + 4 x^2.
pub fn warped_u1_gauss() -> KKBundle {
    KKBundle::new(
        "warped-u1-gauss",
        vec![Axis::bounded(-2.0, 2.0)],
        build_abelian(1),
        |_x, out| {
            out[(0, 0)] = 1.0;
        },
        |x, out| {
            out[(0, 0)] = (2.0 * x[0] * x[0]).exp();
        },
        |_x, out| {
            out.fill(0.0);
        },
    )
}

// ---------------------------------------------------------------------------
// Name resolution and self-validation
// ---------------------------------------------------------------------------

fn parse_args(name: &str) -> Result<(String, Vec<f64>)> {
    let name = name.trim();
    if let Some(open) = name.find('(') {
        if !name.ends_with(')') {
            return Err(KkError::InvalidInput(format!(
                "unbalanced parentheses in geometry name '{name}'"
            )));
        }
        let stem = name[..open].to_string();
        let inner = &name[open + 1..name.len() - 1];
        let args = inner
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    KkError::InvalidInput(format!("bad numeric argument '{s}' in '{name}'"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((stem, args))
    } else {
        Ok((name.to_string(), Vec::new()))
    }
}

/// Build a catalog geometry by name.
pub fn build(name: &str) -> Result<CatalogGeometry> {
    let (stem, args) = parse_args(name)?;
    let arg = |k: usize, default: f64| args.get(k).copied().unwrap_or(default);
    let geom = match stem.as_str() {
        "flat-torus" => {
            let n = arg(0, 2.0);
            if !(1.0..=4.0).contains(&n) || n.fract() != 0.0 {
                return Err(KkError::InvalidInput(format!(
                    "flat-torus dimension must be an integer in 1..=4, got {n}"
                )));
            }
            CatalogGeometry::Metric(flat_torus(n as usize))
        }
        "s2" => {
            let r = arg(0, 1.0);
            if r <= 0.0 {
                return Err(KkError::InvalidInput("s2 radius must be positive".into()));
            }
            CatalogGeometry::Metric(s2(r))
        }
        "s3" => {
            let r = arg(0, 1.0);
            if r <= 0.0 {
                return Err(KkError::InvalidInput("s3 radius must be positive".into()));
            }
            CatalogGeometry::Metric(s3(r))
        }
        "polar-plane" => CatalogGeometry::Metric(polar_plane()),
        "hopf" => CatalogGeometry::Bundle(hopf()),
        "trivial-su2-product" => CatalogGeometry::Bundle(trivial_su2_product()),
        "warped-su2" => CatalogGeometry::Bundle(warped_su2()),
        "warped-u1-line" => CatalogGeometry::Bundle(warped_u1_line(arg(0, 0.1))),
        "warped-u1-gauss" => CatalogGeometry::Bundle(warped_u1_gauss()),
        other => {
            return Err(KkError::InvalidInput(format!(
                "unknown catalog geometry '{other}'"
            )))
        }
    };
    Ok(geom)
}

/// Random point strictly inside the given axes.
pub fn random_interior_point<R: Rng>(axes: &[Axis], margin: f64, rng: &mut R) -> Vec<f64> {
    axes.iter()
        .map(|ax| {
            let lo = if ax.periodic { ax.lo } else { ax.lo + margin };
            let hi = if ax.periodic { ax.hi } else { ax.hi - margin };
            rng.gen_range(lo..hi)
        })
        .collect()
}

/// SPD self-validation at 10 random points; bundles additionally check
/// the fibre metric and the assembled total metric.
pub fn self_check(geom: &CatalogGeometry, seed: u64) -> Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    match geom {
        CatalogGeometry::Metric(m) => {
            for _ in 0..10 {
                let p = random_interior_point(m.axes(), 0.05, &mut rng);
                m.validate_at(&p)?;
            }
        }
        CatalogGeometry::Bundle(b) => {
            let total = kk::assemble_kk_metric(b);
            for _ in 0..10 {
                let x = random_interior_point(b.base_axes(), 0.05, &mut rng);
                b.base_metric().validate_at(&x)?;
                crate::chart::spd_inverse(&b.gamma_at(&x)).map_err(|e| {
                    KkError::SingularMetric(format!("{}: fibre metric: {e}", b.label()))
                })?;
                let mut q = x.clone();
                for _ in 0..b.dim_g() {
                    q.push(rng.gen_range(-1.3..1.3));
                }
                total.validate_at(&q)?;
            }
        }
    }
    Ok(())
}
