//! Hermite cubic Galerkin discretization of the clamped–free beam on `[0, 1]`.
//!
//! Each node carries a value and a slope. The clamp `w(0) = w_x(0) = 0` is
//! enforced by dropping the first node's two degrees of freedom, so reduced
//! index `2(i - 1)` is the value and `2(i - 1) + 1` the slope of node `i`.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{check_dim, dot, SymBandMatrix};
use crate::quadrature::GaussRule;
use crate::real::Real;

/// Half bandwidth of the reduced matrices: one element couples four DOFs.
const BANDWIDTH: usize = 3;

/// Tolerance for the clamp compatibility check on initial data.
const CLAMP_TOL: f64 = 1e-12;

/// Unit vector picking one reduced degree of freedom.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Selection {
    pub index: usize,
    pub dim: usize,
}

impl Selection {
    #[inline]
    pub fn dot<T: Real>(&self, v: &[T]) -> T {
        v[self.index]
    }

    pub fn to_dense<T: Real>(&self) -> Vec<T> {
        let mut e = vec![T::zero(); self.dim];
        e[self.index] = T::one();
        e
    }
}

/// Assembled beam discretization.
///
/// `m0`, `a` and `k` realize `∫ w u`, `∫ w_x u_x` and `∫ w_xx u_xx` on the
/// reduced (clamped) space.
#[derive(Clone, Debug)]
pub struct BeamMesh<T> {
    pub n_elements: usize,
    pub h: T,
    pub quad_order: usize,
    pub m0: SymBandMatrix<T>,
    pub a: SymBandMatrix<T>,
    pub k: SymBandMatrix<T>,
    pub sel_w1: Selection,
    pub sel_wx1: Selection,
}

/// Hermite cubic shape functions on an element of length `h`, evaluated at
/// local coordinate `xi ∈ [0, 1]`. Returns values, x-derivatives and second
/// x-derivatives for the DOF order `[w_left, θ_left, w_right, θ_right]`.
pub(crate) fn hermite<T: Real>(xi: T, h: T) -> ([T; 4], [T; 4], [T; 4]) {
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    let six = T::lit(6.0);
    let twelve = T::lit(12.0);
    let xi2 = xi * xi;
    let xi3 = xi2 * xi;
    let n = [
        one - three * xi2 + two * xi3,
        h * (xi - two * xi2 + xi3),
        three * xi2 - two * xi3,
        h * (xi3 - xi2),
    ];
    let d = [
        (six * xi2 - six * xi) / h,
        one - four * xi + three * xi2,
        (six * xi - six * xi2) / h,
        three * xi2 - two * xi,
    ];
    let dd = [
        (twelve * xi - six) / (h * h),
        (six * xi - four) / h,
        (six - twelve * xi) / (h * h),
        (six * xi - two) / h,
    ];
    (n, d, dd)
}

impl<T: Real> BeamMesh<T> {
    /// Assembles the three beam matrices with `quad_order` Gauss points per element.
    pub fn new(n_elements: usize, quad_order: usize) -> Result<Self> {
        if n_elements < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_elements must be at least 2, got {n_elements}"
            )));
        }
        if quad_order < 3 {
            return Err(Error::InvalidParameter(format!(
                "quad_order must be at least 3, got {quad_order}"
            )));
        }
        let dim = 2 * n_elements;
        let h = T::one() / T::lit(n_elements as f64);
        let rule = GaussRule::<T>::new(quad_order);

        let mut m0_e = [[T::zero(); 4]; 4];
        let mut a_e = [[T::zero(); 4]; 4];
        let mut k_e = [[T::zero(); 4]; 4];
        for (&xi, &wq) in rule.points.iter().zip(&rule.weights) {
            let (n, d, dd) = hermite(xi, h);
            let jw = wq * h;
            for i in 0..4 {
                for j in 0..4 {
                    m0_e[i][j] = m0_e[i][j] + jw * n[i] * n[j];
                    a_e[i][j] = a_e[i][j] + jw * d[i] * d[j];
                    k_e[i][j] = k_e[i][j] + jw * dd[i] * dd[j];
                }
            }
        }

        let mut m0 = SymBandMatrix::zeros(dim, BANDWIDTH);
        let mut a = SymBandMatrix::zeros(dim, BANDWIDTH);
        let mut k = SymBandMatrix::zeros(dim, BANDWIDTH);
        for e in 0..n_elements {
            // full numbering 2e..2e+3, reduced = full - 2
            let dofs: [Option<usize>; 4] =
                std::array::from_fn(|l| (2 * e + l).checked_sub(2));
            for i in 0..4 {
                let Some(gi) = dofs[i] else { continue };
                for j in 0..=i {
                    let Some(gj) = dofs[j] else { continue };
                    // one slot per symmetric pair keeps the assembly exactly symmetric
                    m0.add(gi, gj, m0_e[i][j]);
                    a.add(gi, gj, a_e[i][j]);
                    k.add(gi, gj, k_e[i][j]);
                }
            }
        }

        Ok(BeamMesh {
            n_elements,
            h,
            quad_order,
            m0,
            a,
            k,
            sel_w1: Selection {
                index: dim - 2,
                dim,
            },
            sel_wx1: Selection {
                index: dim - 1,
                dim,
            },
        })
    }

    /// Reduced system dimension, `2 * n_elements`.
    pub fn dim(&self) -> usize {
        2 * self.n_elements
    }

    /// Node coordinate of node `i` (0 is the clamped end).
    pub fn node(&self, i: usize) -> T {
        T::lit(i as f64) * self.h
    }

    /// Local DOF values `[w_l, θ_l, w_r, θ_r]` of element `e`, with clamped DOFs zero.
    pub(crate) fn element_dofs(&self, dofs: &[T], e: usize) -> [T; 4] {
        std::array::from_fn(|l| match (2 * e + l).checked_sub(2) {
            Some(g) => dofs[g],
            None => T::zero(),
        })
    }

    /// Interpolant value, slope and curvature at `x ∈ [0, 1]`.
    pub fn eval(&self, dofs: &[T], x: T) -> Result<(T, T, T)> {
        check_dim(self.dim(), dofs.len())?;
        let s = x / self.h;
        let e = s
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(self.n_elements - 1);
        let xi = s - T::lit(e as f64);
        let (n, d, dd) = hermite(xi, self.h);
        let loc = self.element_dofs(dofs, e);
        Ok((dot(&n, &loc), dot(&d, &loc), dot(&dd, &loc)))
    }

    /// Nodal Hermite interpolation of `f` (with derivative `df`) onto the reduced space.
    pub fn interpolate<F, D>(&self, f: F, df: D) -> Vec<T>
    where
        F: Fn(T) -> T,
        D: Fn(T) -> T,
    {
        (1..=self.n_elements)
            .flat_map(|i| {
                let x = self.node(i);
                [f(x), df(x)]
            })
            .collect()
    }
}

/// Builds the discretization; see [`BeamMesh::new`].
pub fn build_mesh<T: Real>(n_elements: usize, quad_order: usize) -> Result<BeamMesh<T>> {
    BeamMesh::new(n_elements, quad_order)
}

type ScalarFn<T> = Box<dyn Fn(T) -> T + Send + Sync>;

/// Initial displacement and velocity profiles, each with its x-derivative.
pub struct InitialCondition<T> {
    iota: ScalarFn<T>,
    iota_x: ScalarFn<T>,
    varsigma: ScalarFn<T>,
    varsigma_x: ScalarFn<T>,
}

impl<T> fmt::Debug for InitialCondition<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("InitialCondition { .. }")
    }
}

impl<T: Real> InitialCondition<T> {
    /// Rejects data that violate `ι(0) = ι'(0) = ς(0) = ς'(0) = 0`.
    pub fn new<A, B, C, D>(iota: A, iota_x: B, varsigma: C, varsigma_x: D) -> Result<Self>
    where
        A: Fn(T) -> T + Send + Sync + 'static,
        B: Fn(T) -> T + Send + Sync + 'static,
        C: Fn(T) -> T + Send + Sync + 'static,
        D: Fn(T) -> T + Send + Sync + 'static,
    {
        let tol = T::lit(CLAMP_TOL);
        let z = T::zero();
        let checks = [
            ("iota(0)", iota(z)),
            ("iota'(0)", iota_x(z)),
            ("varsigma(0)", varsigma(z)),
            ("varsigma'(0)", varsigma_x(z)),
        ];
        for (name, v) in checks {
            if !(v.abs() <= tol) {
                return Err(Error::IncompatibleInitialCondition(format!("{name} = {v}")));
            }
        }
        Ok(InitialCondition {
            iota: Box::new(iota),
            iota_x: Box::new(iota_x),
            varsigma: Box::new(varsigma),
            varsigma_x: Box::new(varsigma_x),
        })
    }

    /// `ι₀ = x − sin x`, `ς₀ = 1 − cos x`.
    pub fn sine_profile() -> Self {
        Self::new(
            |x: T| x - x.sin(),
            |x: T| T::one() - x.cos(),
            |x: T| T::one() - x.cos(),
            |x: T| x.sin(),
        )
        .expect("sine profile is clamp compatible")
    }

    pub fn zero() -> Self {
        Self::new(
            |_| T::zero(),
            |_| T::zero(),
            |_| T::zero(),
            |_| T::zero(),
        )
        .expect("zero data is clamp compatible")
    }

    /// Polynomial data `ι(x) = Σ c_j x^j`, `ς(x) = Σ d_j x^j`.
    pub fn polynomial(iota: Vec<T>, varsigma: Vec<T>) -> Result<Self> {
        let (di, dv) = (poly_derivative(&iota), poly_derivative(&varsigma));
        Self::new(
            move |x| poly_eval(&iota, x),
            move |x| poly_eval(&di, x),
            move |x| poly_eval(&varsigma, x),
            move |x| poly_eval(&dv, x),
        )
    }

    pub fn displacement(&self, x: T) -> T {
        (self.iota)(x)
    }

    pub fn velocity(&self, x: T) -> T {
        (self.varsigma)(x)
    }
}

fn poly_eval<T: Real>(c: &[T], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &ci| acc * x + ci)
}

fn poly_derivative<T: Real>(c: &[T]) -> Vec<T> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(j, &cj)| T::lit(j as f64) * cj)
        .collect()
}

/// Nodal values and slopes of the initial displacement and velocity.
pub fn project_initial<T: Real>(mesh: &BeamMesh<T>, ic: &InitialCondition<T>) -> (Vec<T>, Vec<T>) {
    let w0 = mesh.interpolate(&ic.iota, &ic.iota_x);
    let v0 = mesh.interpolate(&ic.varsigma, &ic.varsigma_x);
    (w0, v0)
}

/// `(‖w‖, ‖w_x‖, ‖w_xx‖)` of the Hermite interpolant.
pub fn discrete_norms<T: Real>(mesh: &BeamMesh<T>, w: &[T]) -> Result<(T, T, T)> {
    Ok((
        mesh.m0.quad_form(w)?.max(T::zero()).sqrt(),
        mesh.a.quad_form(w)?.max(T::zero()).sqrt(),
        mesh.k.quad_form(w)?.max(T::zero()).sqrt(),
    ))
}
