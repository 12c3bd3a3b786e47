//! Dense kernels shared by the Fock-space engine.
//!
//! Complex products are split into real GEMMs so they go through the
//! blocked `matrixmultiply` path; nalgebra's generic complex product is
//! roughly forty times slower at the sizes used here.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub(crate) fn split(a: &CMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    (a.map(|z| z.re), a.map(|z| z.im))
}

pub(crate) fn join(re: &DMatrix<f64>, im: &DMatrix<f64>) -> CMatrix {
    re.zip_map(im, C64::new)
}

/// `a * b` for complex matrices.
pub fn cmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    join(&re, &im)
}

/// `a * b^†`.
pub fn cmul_adjoint(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let brt = br.transpose();
    let bit = bi.transpose();
    // b^† = br^T - i bi^T
    let re = &ar * &brt + &ai * &bit;
    let im = &ai * &brt - &ar * &bit;
    join(&re, &im)
}

/// `a^† * b`.
pub fn cadjoint_mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let art = ar.transpose();
    let ait = ai.transpose();
    let re = &art * &br + &ait * &bi;
    let im = &art * &bi - &ait * &br;
    join(&re, &im)
}

/// `v * rho * v^†`.
pub fn sandwich(v: &CMatrix, rho: &CMatrix) -> CMatrix {
    cmul_adjoint(&cmul(v, rho), v)
}

/// `Tr[a * b]` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Largest absolute entry.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// Largest absolute entry of the leading `limit x limit` block.
pub fn max_abs_block(a: &CMatrix, limit: usize) -> f64 {
    let limit = limit.min(a.nrows()).min(a.ncols());
    let mut m = 0.0_f64;
    for j in 0..limit {
        for i in 0..limit {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// Spectral norm of the leading `limit x limit` block.
pub fn op_norm_block(a: &CMatrix, limit: usize) -> f64 {
    let limit = limit.min(a.nrows()).min(a.ncols());
    if limit == 0 {
        return 0.0;
    }
    let block = a.view((0, 0), (limit, limit)).into_owned();
    let gram = block.adjoint() * &block;
    let eig = SymmetricEigen::new(gram);
    eig.eigenvalues
        .iter()
        .fold(0.0_f64, |m, &v| m.max(v.max(0.0)))
        .sqrt()
}

/// Leading block on which truncated displacement operators agree with the
/// infinite-dimensional ones.
///
/// The spread of `D(beta)|n>` in the number basis grows like `|beta| sqrt(n)`,
/// so the margin carries a `sqrt(dim)` term on top of the `4|beta|^2 + 8` base.
pub fn interior_limit(dim: usize, beta_abs: f64) -> usize {
    let margin = 4.0 * beta_abs * beta_abs + 8.0 + 1.2 * beta_abs * (dim as f64).sqrt();
    dim.saturating_sub(margin.ceil() as usize)
}

/// Eigen-decomposition of the truncated quadrature `a + a^†`.
///
/// Every displacement on a given truncation is a phase-rotated function of
/// this one real symmetric tridiagonal matrix, so it is computed once per
/// dimension and shared.
#[derive(Debug)]
pub struct QuadratureBasis {
    pub nodes: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl QuadratureBasis {
    fn compute(dim: usize) -> Self {
        let x = DMatrix::<f64>::from_fn(dim, dim, |i, j| {
            if j == i + 1 {
                (j as f64).sqrt()
            } else if i == j + 1 {
                (i as f64).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(x);
        QuadratureBasis {
            nodes: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// `U diag(f(x_k)) U^T` for a complex-valued spectral function.
    pub fn spectral_function(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let values: Vec<C64> = self.nodes.iter().map(|&x| f(x)).collect();
        let u = &self.vectors;
        let mut scaled_re = u.clone();
        let mut scaled_im = u.clone();
        for (k, v) in values.iter().enumerate() {
            scaled_re.column_mut(k).scale_mut(v.re);
            scaled_im.column_mut(k).scale_mut(v.im);
        }
        let ut = u.transpose();
        join(&(scaled_re * &ut), &(scaled_im * &ut))
    }

    /// `R(psi)^† exp(i r X) R(psi)`, i.e. the displacement `D(r e^{i(psi + pi/2)})`.
    pub fn displacement(&self, beta: C64) -> CMatrix {
        let r = beta.norm();
        let mut d = self.spectral_function(|x| C64::from_polar(1.0, r * x));
        if r > 0.0 {
            let psi = beta.arg() - FRAC_PI_2;
            conjugate_by_rotation(&mut d, psi);
        }
        d
    }
}

/// In place `R(psi)^† m R(psi)` with `R(psi) = exp(-i psi a^†a)`.
pub(crate) fn conjugate_by_rotation(m: &mut CMatrix, psi: f64) {
    let n = m.nrows();
    let phases: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(1.0, psi * k as f64))
        .collect();
    for j in 0..n {
        let right = phases[j].conj();
        for i in 0..n {
            m[(i, j)] *= phases[i] * right;
        }
    }
}

/// Shared per-dimension quadrature bases.
pub fn quadrature_basis(dim: usize) -> Arc<QuadratureBasis> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().expect("basis cache poisoned").get(&dim) {
        return Arc::clone(b);
    }
    // Computed outside the lock; a racing duplicate is discarded.
    let basis = Arc::new(QuadratureBasis::compute(dim));
    let mut guard = cache.lock().expect("basis cache poisoned");
    Arc::clone(guard.entry(dim).or_insert(basis))
}
