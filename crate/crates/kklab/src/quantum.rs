//! Coefficient fields of the reduced Hamiltonians: the scalar
//! (zero-momentum) operator and its matrix-valued analogue acting on
//! sections of the associated bundle. No spectral problem is solved here;
//! the module only assembles coefficients from the geometric data.
//!
//! The intended inner product for the matrix-valued operator integrates
//! the fibre-space inner product of two sections against the base volume
//! sqrt(det h) dx.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::chart;
use crate::error::{KkError, Result};
use crate::fd::{self, FdScheme};
use crate::kk::{self, KKBundle};
use crate::lie::LieStructure;

pub type CMatrix = DMatrix<Complex<f64>>;
pub type CVector = nalgebra::DVector<Complex<f64>>;

/// Physical constants of the evolution problem; mu^2 = hbar/m is derived,
/// never stored.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub m: f64,
    pub kappa: f64,
}

impl PhysicalParams {
    pub fn new(hbar: f64, m: f64, kappa: f64) -> Self {
        assert!(hbar > 0.0 && m > 0.0, "hbar and m must be positive");
        Self { hbar, m, kappa }
    }

    pub fn mu2(&self) -> f64 {
        self.hbar / self.m
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            m: 1.0,
            kappa: 1.0,
        }
    }
}

/// Weight attached to the gamma^{an} J_a J_n block of the matrix
/// Hamiltonian. The display in the source material carries no prefactor;
/// dimensional consistency suggests the Laplacian's -hbar^2/2m, which is
/// the default. `Bare` keeps the literal unweighted term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CasimirWeight {
    #[default]
    #[serde(rename = "dimensional")]
    Dimensional,
    #[serde(rename = "bare")]
    Bare,
}

/// Generators of a (finite-dimensional) representation, supplied as
/// matrices and validated against the structure constants they pair with.
#[derive(Debug, Clone)]
pub struct Representation {
    label: String,
    dim_v: usize,
    generators: Vec<CMatrix>,
}

impl Representation {
    pub fn new(label: impl Into<String>, generators: Vec<CMatrix>) -> Self {
        let dim_v = generators.first().map(|g| g.nrows()).unwrap_or(1);
        Self {
            label: label.into(),
            dim_v,
            generators,
        }
    }

    /// The trivial representation: every generator is the 1x1 zero.
    pub fn trivial(dim_g: usize) -> Self {
        Self::new(
            "trivial",
            (0..dim_g)
                .map(|_| CMatrix::zeros(1, 1))
                .collect::<Vec<_>>(),
        )
    }

    /// Spin-1/2 of su(2) with c = epsilon: J_a = -i sigma_a / 2
    /// (anti-Hermitian).
    pub fn su2_spin_half() -> Self {
        let i = Complex::new(0.0, 1.0);
        let z = Complex::new(0.0, 0.0);
        let half = Complex::new(0.5, 0.0);
        let s1 = CMatrix::from_row_slice(2, 2, &[z, half, half, z]);
        let s2 = CMatrix::from_row_slice(2, 2, &[z, -i * half, i * half, z]);
        let s3 = CMatrix::from_row_slice(2, 2, &[half, z, z, -half]);
        Self::new("spin-1/2", vec![s1 * -i, s2 * -i, s3 * -i])
    }

    /// Charge-q representation of U(1): J = i q (anti-Hermitian 1x1).
    pub fn u1_charge(q: f64) -> Self {
        Self::new(
            format!("charge-{q}"),
            vec![CMatrix::from_element(1, 1, Complex::new(0.0, q))],
        )
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    /// Check [J_a, J_b] = c^m_{ab} J_m within 1e-10.
    pub fn check_against(&self, ls: &LieStructure) -> Result<()> {
        let g = ls.dim();
        if self.generators.len() != g {
            return Err(KkError::RepresentationMismatch(format!(
                "{} generators for a dimension-{g} algebra",
                self.generators.len()
            )));
        }
        for a in 0..g {
            for b in 0..g {
                let mut comm = &self.generators[a] * &self.generators[b]
                    - &self.generators[b] * &self.generators[a];
                for m in 0..g {
                    comm -= &self.generators[m] * Complex::new(ls.c(m, a, b), 0.0);
                }
                let worst = comm.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
                if worst > 1e-10 {
                    return Err(KkError::RepresentationMismatch(format!(
                        "commutator [J_{a}, J_{b}] deviates by {worst:.3e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Positive Casimir block -gamma^{an} J_a J_n (gamma_inv = inverse
    /// fibre metric); equals (3/4) I for spin-1/2 with gamma = identity.
    pub fn casimir(&self, gamma_inv: &DMatrix<f64>) -> CMatrix {
        let g = self.generators.len();
        let mut c = CMatrix::zeros(self.dim_v, self.dim_v);
        for a in 0..g {
            for n in 0..g {
                c -= &self.generators[a] * &self.generators[n] * Complex::new(gamma_inv[(a, n)], 0.0);
            }
        }
        c
    }
}

/// Pointwise coefficients of a reduced Hamiltonian. The kinetic and
/// first-order entries are stored as the raw expansion coefficients of
/// the horizontal Laplacian (h^{ij} and 2 h^{ij} A^a_j J_a); the zeroth
/// order carries every weight, so a dim_V = 1 instance reduces exactly to
/// the scalar operator's fields.
#[derive(Debug, Clone)]
pub struct HamiltonianCoeffs {
    pub point: Vec<f64>,
    pub kinetic_inverse_metric: DMatrix<f64>,
    pub first_order: Vec<CMatrix>,
    pub zeroth_order: CMatrix,
    pub casimir_weight: CasimirWeight,
}

impl HamiltonianCoeffs {
    pub fn dim_v(&self) -> usize {
        self.zeroth_order.nrows()
    }

    /// Largest deviation of the zeroth-order matrix from Hermiticity.
    pub fn hermiticity_residual(&self) -> f64 {
        let adj = self.zeroth_order.adjoint();
        (&self.zeroth_order - adj)
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max)
    }

    /// JSON value with matrices as nested row-major arrays of [re, im]
    /// pairs.
    pub fn to_json(&self) -> serde_json::Value {
        let real_matrix = |m: &DMatrix<f64>| -> serde_json::Value {
            serde_json::json!((0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>())
                .collect::<Vec<_>>())
        };
        let complex_matrix = |m: &CMatrix| -> serde_json::Value {
            serde_json::json!((0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| vec![m[(i, j)].re, m[(i, j)].im])
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>())
        };
        serde_json::json!({
            "point": self.point,
            "kinetic_inverse_metric": real_matrix(&self.kinetic_inverse_metric),
            "first_order": self.first_order.iter().map(complex_matrix).collect::<Vec<_>>(),
            "zeroth_order": complex_matrix(&self.zeroth_order),
            "casimir_weight": match self.casimir_weight {
                CasimirWeight::Dimensional => "dimensional",
                CasimirWeight::Bare => "bare",
            },
        })
    }
}

/// Shared zeroth-order scalar: (hbar^2/8m) j_tilde + V.
fn scalar_zeroth(p: &PhysicalParams, j_tilde: f64, v: f64) -> f64 {
    p.hbar * p.hbar / (8.0 * p.m) * j_tilde + v
}

/// Coefficients of the scalar (zero-momentum) reduced Hamiltonian:
/// kinetic h^{ij}, no first-order term, zeroth order
/// (hbar^2/8m) j_tilde + V.
pub fn scalar_hamiltonian_coeffs(
    b: &KKBundle,
    x: &[f64],
    s: &FdScheme,
    p: &PhysicalParams,
) -> Result<HamiltonianCoeffs> {
    let (hinv, _) = chart::spd_inverse(&b.h_at(x))?;
    let j_tilde = kk::jacobian_tilde_geometric(b, x, s)?;
    let v = b.potential(x);
    let n = b.base_dim();
    Ok(HamiltonianCoeffs {
        point: x.to_vec(),
        kinetic_inverse_metric: hinv,
        first_order: (0..n).map(|_| CMatrix::zeros(1, 1)).collect(),
        zeroth_order: CMatrix::from_element(1, 1, Complex::new(scalar_zeroth(p, j_tilde, v), 0.0)),
        casimir_weight: CasimirWeight::Dimensional,
    })
}

/// Coefficients of the kappa-parametrized generator form
/// (hbar kappa / 2m) lap - (hbar kappa / 8m) [j_tilde bracket] + V /
/// (hbar kappa): returned as the coefficient triple (laplacian, bracket,
/// potential). The physical operator is recovered coefficient-wise from
/// -(hbar/kappa) times these with kappa^2 -> -1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaFormCoeffs {
    pub laplacian: f64,
    pub j_bracket: f64,
    pub potential: f64,
}

pub fn kappa_form_coeffs(p: &PhysicalParams, kappa: f64) -> KappaFormCoeffs {
    KappaFormCoeffs {
        laplacian: p.hbar * kappa / (2.0 * p.m),
        j_bracket: -p.hbar * kappa / (8.0 * p.m),
        potential: 1.0 / (p.hbar * kappa),
    }
}

/// Coefficients of the matrix-valued Hamiltonian on sections of the
/// associated bundle for the given representation.
///
/// first_order[i] = 2 h^{ij} A^a_j J_a. The zeroth order collects the
/// horizontal-Laplacian remainder
/// -(hbar^2/2m) h^{ij} [d_i Gamma_j + Gamma_i Gamma_j - Gamma^m_ij Gamma_m]
/// (the gauge-covariant sign on the derivative term, pinned by the
/// abelian gauge-covariance test), the weighted Casimir block, the
/// (hbar^2/8m) j_tilde correction and the potential.
pub fn matrix_hamiltonian_coeffs(
    b: &KKBundle,
    rep: &Representation,
    x: &[f64],
    s: &FdScheme,
    p: &PhysicalParams,
    weight: CasimirWeight,
) -> Result<HamiltonianCoeffs> {
    rep.check_against(&b.group().structure)?;
    let n = b.base_dim();
    let g = b.dim_g();
    let dv = rep.dim_v();
    let kinetic_factor = -p.hbar * p.hbar / (2.0 * p.m);

    let (hinv, _) = chart::spd_inverse(&b.h_at(x))?;
    let base = b.base_metric();
    let q = base.stencil_point(x, s.margin(1))?;
    let am = b.a_at(&q);
    let a_field = b.a_field();
    let da = s.extrapolate(|h| {
        let mut eval = |y: &[f64], out: &mut DMatrix<f64>| a_field(&base.wrap_point(y), out);
        fd::matrix_gradient(&mut eval, &q, n, g, h, s.order)
    });

    // Gamma^E_i = A^a_i J_a and its base derivatives
    let gamma_e: Vec<CMatrix> = (0..n)
        .map(|i| {
            let mut m = CMatrix::zeros(dv, dv);
            for a in 0..g {
                m += &rep.generators()[a] * Complex::new(am[(i, a)], 0.0);
            }
            m
        })
        .collect();
    let d_gamma_e: Vec<Vec<CMatrix>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut m = CMatrix::zeros(dv, dv);
                    for a in 0..g {
                        m += &rep.generators()[a] * Complex::new(da[i][(j, a)], 0.0);
                    }
                    m
                })
                .collect()
        })
        .collect();

    let first_order: Vec<CMatrix> = (0..n)
        .map(|i| {
            let mut m = CMatrix::zeros(dv, dv);
            for j in 0..n {
                m += &gamma_e[j] * Complex::new(2.0 * hinv[(i, j)], 0.0);
            }
            m
        })
        .collect();

    // horizontal-Laplacian zeroth-order remainder
    let chr = if n >= 1 {
        chart::christoffel(&base, &q, s)?
    } else {
        crate::tensor::Tensor3::zeros(0, 0, 0)
    };
    let mut lap_zeroth = CMatrix::zeros(dv, dv);
    for i in 0..n {
        for j in 0..n {
            let hij = Complex::new(hinv[(i, j)], 0.0);
            lap_zeroth += (&d_gamma_e[i][j] + &gamma_e[i] * &gamma_e[j]) * hij;
            for m in 0..n {
                lap_zeroth -= &gamma_e[m] * Complex::new(hinv[(i, j)] * chr.get(m, i, j), 0.0);
            }
        }
    }

    let gamma = b.gamma_at(x);
    let (ginv, _) = chart::spd_inverse(&gamma)?;
    let casimir_term = match weight {
        CasimirWeight::Dimensional => {
            // -(hbar^2/2m) gamma^{an} J_a J_n = +(hbar^2/2m) casimir
            rep.casimir(&ginv) * Complex::new(-kinetic_factor, 0.0)
        }
        CasimirWeight::Bare => rep.casimir(&ginv) * Complex::new(-1.0, 0.0),
    };

    let j_tilde = kk::jacobian_tilde_geometric(b, x, s)?;
    let v = b.potential(x);
    let scalar_part = scalar_zeroth(p, j_tilde, v);

    let mut zeroth = lap_zeroth * Complex::new(kinetic_factor, 0.0) + casimir_term;
    for k in 0..dv {
        zeroth[(k, k)] += Complex::new(scalar_part, 0.0);
    }

    Ok(HamiltonianCoeffs {
        point: x.to_vec(),
        kinetic_inverse_metric: hinv,
        first_order,
        zeroth_order: zeroth,
        casimir_weight: weight,
    })
}

/// Apply the operator described by `coeffs` to a section by finite
/// differences:
///
///   H psi = -(hbar^2/2m) [ h^{ij} (d_i d_j - Gamma^m_ij d_m) psi
///                          + first_order_i d_i psi ] + zeroth psi.
pub fn apply_hamiltonian(
    coeffs: &HamiltonianCoeffs,
    b: &KKBundle,
    psi: &(dyn Fn(&[f64]) -> CVector + Sync),
    x: &[f64],
    s: &FdScheme,
    p: &PhysicalParams,
) -> Result<CVector> {
    let n = b.base_dim();
    let dv = coeffs.dim_v();
    let base = b.base_metric();
    let q = base.stencil_point(x, s.margin(2))?;
    let kinetic_factor = Complex::new(-p.hbar * p.hbar / (2.0 * p.m), 0.0);

    let component = |y: &[f64], k: usize, re: bool| -> f64 {
        let v = psi(&base.wrap_point(y));
        if re {
            v[k].re
        } else {
            v[k].im
        }
    };

    // gradient and Hessian of each section component
    let mut grad = vec![CVector::zeros(dv); n];
    let mut hess = vec![vec![CVector::zeros(dv); n]; n];
    for k in 0..dv {
        for re in [true, false] {
            let g = fd::gradient(|y| component(y, k, re), &q, s.step, s.order);
            for i in 0..n {
                let unit = Complex::new(if re { g[i] } else { 0.0 }, if re { 0.0 } else { g[i] });
                grad[i][k] += unit;
            }
            for i in 0..n {
                for j in i..n {
                    let d2 = if i == j {
                        let mut y = q.clone();
                        fd::d2(
                            |t| {
                                y[i] = q[i] + t;
                                let v = component(&y, k, re);
                                y[i] = q[i];
                                v
                            },
                            s.step,
                            s.order,
                        )
                    } else {
                        let mut y = q.clone();
                        fd::d2_mixed(
                            |t, u| {
                                y[i] = q[i] + t;
                                y[j] = q[j] + u;
                                let v = component(&y, k, re);
                                y[i] = q[i];
                                y[j] = q[j];
                                v
                            },
                            s.step,
                            s.order,
                        )
                    };
                    let unit = Complex::new(if re { d2 } else { 0.0 }, if re { 0.0 } else { d2 });
                    hess[i][j][k] += unit;
                    if i != j {
                        hess[j][i][k] += unit;
                    }
                }
            }
        }
    }

    let chr = chart::christoffel(&base, &q, s)?;
    let hinv = &coeffs.kinetic_inverse_metric;
    let mut out = CVector::zeros(dv);
    for i in 0..n {
        for j in 0..n {
            let hij = Complex::new(hinv[(i, j)], 0.0);
            out += &hess[i][j] * hij * kinetic_factor;
            for m in 0..n {
                out -= &grad[m] * Complex::new(hinv[(i, j)] * chr.get(m, i, j), 0.0) * kinetic_factor;
            }
        }
    }
    for i in 0..n {
        out += &coeffs.first_order[i] * &grad[i] * kinetic_factor;
    }
    out += &coeffs.zeroth_order * psi(&q);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{hopf, trivial_su2_product, warped_su2, warped_u1_line};
    use crate::chart::Axis;
    use crate::lie::build_abelian;

    #[test]
    fn scalar_coeffs_on_catalog_bundles() {
        let s = FdScheme::default();
        let p = PhysicalParams::new(1.3, 0.7, 1.0);

        // product bundle and hopf: the bracket vanishes, no potential
        for (b, x) in [
            (trivial_su2_product(), vec![1.0]),
            (hopf(), vec![1.2, 0.4]),
        ] {
            let c = scalar_hamiltonian_coeffs(&b, &x, &s, &p).unwrap();
            assert_eq!(c.dim_v(), 1);
            assert!(c.zeroth_order[(0, 0)].norm() < 1e-5, "{}", b.label());
            assert!(c.first_order.iter().all(|m| m[(0, 0)].norm() == 0.0));
        }

        // warped line: zeroth = (hbar^2/8m) * 1 + V
        let b = warped_u1_line(1.0).with_potential(|x: &[f64]| 0.3 * x[0]);
        let x = [0.5];
        let c = scalar_hamiltonian_coeffs(&b, &x, &s, &p).unwrap();
        let expected = p.hbar * p.hbar / (8.0 * p.m) * 1.0 + 0.15;
        assert!(
            (c.zeroth_order[(0, 0)].re - expected).abs() < 1e-5,
            "zeroth {} vs {expected}",
            c.zeroth_order[(0, 0)].re
        );
        assert!((c.kinetic_inverse_metric[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kappa_form_reproduces_hamiltonian_coefficients() {
        let p = PhysicalParams::new(1.7, 2.3, 0.9);
        for kappa in [0.5, 1.0, 3.7] {
            let k = kappa_form_coeffs(&p, kappa);
            // -(hbar/kappa) * laplacian coefficient = -hbar^2/2m
            let kin = -(p.hbar / kappa) * k.laplacian;
            assert!((kin - (-p.hbar * p.hbar / (2.0 * p.m))).abs() < 1e-14);
            // -(hbar/kappa) * bracket coefficient = +hbar^2/8m
            let jt = -(p.hbar / kappa) * k.j_bracket;
            assert!((jt - p.hbar * p.hbar / (8.0 * p.m)).abs() < 1e-14);
            // -(hbar/kappa) * potential coefficient = -1/kappa^2, which is
            // +1 after the kappa^2 -> -1 substitution
            let pot = -(p.hbar / kappa) * k.potential; // = -1/kappa^2
            let substituted = pot * (kappa * kappa) / -1.0;
            assert!((substituted - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn trivial_representation_equals_scalar_path_exactly() {
        let s = FdScheme::default();
        let p = PhysicalParams::new(1.0, 2.0, 1.5);
        let b = warped_u1_line(0.7).with_potential(|x: &[f64]| (0.2 * x[0]).cos());
        let x = [0.4];
        let scalar = scalar_hamiltonian_coeffs(&b, &x, &s, &p).unwrap();
        let rep = Representation::trivial(1);
        let matrix =
            matrix_hamiltonian_coeffs(&b, &rep, &x, &s, &p, CasimirWeight::Dimensional).unwrap();
        assert_eq!(
            scalar.zeroth_order[(0, 0)].re,
            matrix.zeroth_order[(0, 0)].re,
            "trivial-rep zeroth order must match the scalar path bit for bit"
        );
        assert_eq!(scalar.zeroth_order[(0, 0)].im, matrix.zeroth_order[(0, 0)].im);
        assert_eq!(
            scalar.kinetic_inverse_metric,
            matrix.kinetic_inverse_metric
        );
        for (a, b) in scalar.first_order.iter().zip(&matrix.first_order) {
            assert_eq!(a[(0, 0)], b[(0, 0)]);
        }
    }

    #[test]
    fn spin_half_casimir_block() {
        let rep = Representation::su2_spin_half();
        let su2 = crate::lie::build_su2();
        rep.check_against(&su2.structure).unwrap();
        let id = DMatrix::<f64>::identity(3, 3);
        let cas = rep.casimir(&id);
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 0.75 } else { 0.0 };
                assert!(
                    (cas[(i, j)] - Complex::new(expected, 0.0)).norm() < 1e-12,
                    "casimir[{i}][{j}] = {}",
                    cas[(i, j)]
                );
            }
        }
    }

    #[test]
    fn abelian_charge_rep_first_order() {
        let s = FdScheme::default();
        let p = PhysicalParams::default();
        let q = 2.0;
        // flat 2-torus base with constant A
        let b = crate::kk::KKBundle::new(
            "u1-const-a",
            vec![
                Axis::periodic(0.0, 2.0 * std::f64::consts::PI),
                Axis::periodic(0.0, 2.0 * std::f64::consts::PI),
            ],
            build_abelian(1),
            |_x, out| {
                out.fill(0.0);
                out[(0, 0)] = 2.0;
                out[(1, 1)] = 1.0;
            },
            |_x, out| {
                out[(0, 0)] = 1.0;
            },
            |_x, out| {
                out[(0, 0)] = 0.3;
                out[(1, 0)] = -0.7;
            },
        );
        let rep = Representation::u1_charge(q);
        let c = matrix_hamiltonian_coeffs(&b, &rep, &[1.0, 2.0], &s, &p, CasimirWeight::Dimensional)
            .unwrap();
        // first_order_i = 2 h^{ij} A_j * iq
        let h00 = 0.5; // inverse of 2.0
        let expected0 = Complex::new(0.0, 2.0 * h00 * 0.3 * q);
        let expected1 = Complex::new(0.0, 2.0 * 1.0 * (-0.7) * q);
        assert!((c.first_order[0][(0, 0)] - expected0).norm() < 1e-12);
        assert!((c.first_order[1][(0, 0)] - expected1).norm() < 1e-12);
        assert!(c.hermiticity_residual() < 1e-10);
    }

    #[test]
    fn hermiticity_with_anti_hermitian_generators() {
        let s = FdScheme::default();
        let p = PhysicalParams::default();
        // warped-su2 carries a divergence-free connection on a flat base,
        // so the zeroth order stays Hermitian even with x-dependent A.
        let b = warped_su2();
        let rep = Representation::su2_spin_half();
        for x in [[1.0, 2.0], [0.3, 4.1], [2.6, 0.9]] {
            let c = matrix_hamiltonian_coeffs(&b, &rep, &x, &s, &p, CasimirWeight::Dimensional)
                .unwrap();
            assert!(
                c.hermiticity_residual() < 1e-10,
                "hermiticity residual {} at {x:?}",
                c.hermiticity_residual()
            );
        }
        // hopf with the charge rep: the monopole potential is divergence
        // free as well
        let b = hopf();
        let rep = Representation::u1_charge(1.0);
        let c = matrix_hamiltonian_coeffs(&b, &rep, &[1.2, 0.4], &s, &p, CasimirWeight::Dimensional)
            .unwrap();
        assert!(c.hermiticity_residual() < 1e-10);
    }

    #[test]
    fn mismatched_generators_are_rejected() {
        let s = FdScheme::default();
        let p = PhysicalParams::default();
        let b = trivial_su2_product();
        // wrong scale: J = -i sigma (factor 2 off)
        let half = Representation::su2_spin_half();
        let wrong = Representation::new(
            "wrong-scale",
            half.generators()
                .iter()
                .map(|g| g * Complex::new(2.0, 0.0))
                .collect(),
        );
        let err = matrix_hamiltonian_coeffs(&b, &wrong, &[1.0], &s, &p, CasimirWeight::Dimensional);
        assert!(matches!(err, Err(KkError::RepresentationMismatch(_))));
    }

    #[test]
    fn abelian_gauge_covariance_of_the_operator() {
        // Shift A by the gradient of chi and conjugate the section by
        // exp(-i q chi): the operator action must transform covariantly.
        let s = FdScheme::new(1e-3, crate::fd::FdOrder::Four, false);
        let p = PhysicalParams::default();
        let q_charge = 2.0;
        let chi = |x: f64| 0.2 * x.sin();
        let dchi = |x: f64| 0.2 * x.cos();

        let make = move |shift: bool| {
            crate::kk::KKBundle::new(
                "gauge-cov",
                vec![Axis::periodic(0.0, 2.0 * std::f64::consts::PI)],
                build_abelian(1),
                |_x, out| {
                    out[(0, 0)] = 1.0;
                },
                |_x, out| {
                    out[(0, 0)] = 1.0;
                },
                move |x, out| {
                    out[(0, 0)] = 0.4 + 0.15 * x[0].cos();
                    if shift {
                        out[(0, 0)] += dchi(x[0]);
                    }
                },
            )
        };
        let rep = Representation::u1_charge(q_charge);
        let x = [1.3];
        let coeffs = matrix_hamiltonian_coeffs(
            &make(false),
            &rep,
            &x,
            &s,
            &p,
            CasimirWeight::Dimensional,
        )
        .unwrap();
        let coeffs_shift = matrix_hamiltonian_coeffs(
            &make(true),
            &rep,
            &x,
            &s,
            &p,
            CasimirWeight::Dimensional,
        )
        .unwrap();

        let psi = |y: &[f64]| {
            CVector::from_element(
                1,
                Complex::new(0.0, 0.7 * y[0].cos()).exp() * Complex::new(1.0 + 0.2 * y[0].sin(), 0.0),
            )
        };
        let psi_shift = move |y: &[f64]| {
            let phase = Complex::new(0.0, -q_charge * chi(y[0])).exp();
            psi(y) * phase
        };

        let h_plain = apply_hamiltonian(&coeffs, &make(false), &psi, &x, &s, &p).unwrap();
        let h_shift =
            apply_hamiltonian(&coeffs_shift, &make(true), &psi_shift, &x, &s, &p).unwrap();
        let phase = Complex::new(0.0, -q_charge * chi(x[0])).exp();
        let expected = h_plain[0] * phase;
        assert!(
            (h_shift[0] - expected).norm() < 1e-6,
            "gauge covariance: {} vs {}",
            h_shift[0],
            expected
        );
    }
}
