//! Truncated Fock-space states, operators, observables and thermal damping.

use std::f64::consts::SQRT_2;

use log::warn;
use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{quadrature_basis, CMatrix, C64};

/// Tail mass beyond the truncation above which a thermal state is rejected.
pub const TAIL_MASS_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorSpec {
    /// Mode angular frequency (rad/s).
    pub omega: f64,
    /// Energy damping rate towards the bath (1/s).
    #[serde(default)]
    pub gamma: f64,
    /// Extra heating rate on top of the bath (1/s).
    #[serde(default)]
    pub gamma_h: f64,
    pub n_thermal: f64,
    /// Fock truncation; 0 in a config means "choose automatically".
    #[serde(default)]
    pub dim: usize,
}

impl OscillatorSpec {
    pub fn new(omega: f64, n_thermal: f64, dim: usize) -> Self {
        OscillatorSpec {
            omega,
            gamma: 0.0,
            gamma_h: 0.0,
            n_thermal,
            dim,
        }
    }

    pub fn with_damping(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::validation("oscillator.omega", "must be positive and finite"));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::validation("oscillator.gamma", "must be >= 0"));
        }
        if !(self.gamma_h.is_finite() && self.gamma_h >= 0.0) {
            return Err(Error::validation("oscillator.gamma_h", "must be >= 0"));
        }
        if !(self.n_thermal.is_finite() && self.n_thermal >= 0.0) {
            return Err(Error::validation("oscillator.n_thermal", "must be >= 0"));
        }
        if self.dim < 2 {
            return Err(Error::validation("oscillator.dim", "must be at least 2"));
        }
        Ok(())
    }

    /// Rates of the `a` and `a^†` jump operators.
    pub fn jump_rates(&self) -> (f64, f64) {
        (
            self.gamma * (self.n_thermal + 1.0),
            self.gamma * self.n_thermal + self.gamma_h,
        )
    }
}

/// What to do when a thermal state does not fit in the truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationPolicy {
    #[default]
    Strict,
    Lax,
}

/// Hermitian, unit-trace operator on the truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix after checking shape, Hermiticity and trace.
    pub fn from_entries(entries: CMatrix) -> Result<Self> {
        let n = entries.nrows();
        if n < 2 || entries.ncols() != n {
            return Err(Error::validation("rho", "must be square with dim >= 2"));
        }
        let rho = DensityMatrix { entries };
        let herm = rho.hermiticity_error();
        if herm > 1e-12 {
            return Err(Error::validation("rho", format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::validation("rho", format!("trace is {tr}, expected 1")));
        }
        Ok(rho)
    }

    pub(crate) fn from_entries_unchecked(entries: CMatrix) -> Self {
        DensityMatrix { entries }
    }

    pub fn fock(n: usize, dim: usize) -> Self {
        assert!(n < dim, "Fock level {n} outside truncation {dim}");
        let mut m = CMatrix::zeros(dim, dim);
        m[(n, n)] = C64::new(1.0, 0.0);
        DensityMatrix { entries: m }
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::fock(0, dim)
    }

    /// `|psi><psi|` for a state vector, normalized.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 0.0) {
            return Err(Error::validation("psi", "zero vector"));
        }
        let n = psi.len();
        let m = CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / norm2);
        Ok(DensityMatrix { entries: m })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.entries.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue. Costs a full Hermitian eigensolve.
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = SymmetricEigen::new(self.entries.clone());
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Logs a warning when the state has a noticeably negative eigenvalue.
    /// Returns the smallest eigenvalue; nothing is projected away.
    pub fn positivity_diagnostic(&self) -> f64 {
        let m = self.min_eigenvalue();
        if m < -1e-8 {
            warn!("density matrix has negative eigenvalue {m:e}");
        }
        m
    }

    /// Ratio of off-diagonal to diagonal Frobenius weight in the number basis.
    pub fn offdiagonal_ratio(&self) -> f64 {
        let n = self.dim();
        let (mut diag, mut off) = (0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                let w = self.entries[(i, j)].norm_sqr();
                if i == j {
                    diag += w;
                } else {
                    off += w;
                }
            }
        }
        (off / diag).sqrt()
    }

    /// Frobenius distance between two states.
    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        (&self.entries - &other.entries).norm()
    }
}

/// Thermal state `(1-q) q^k` with `q = n/(n+1)`, renormalized on the truncation.
pub fn build_thermal(spec: &OscillatorSpec, policy: TruncationPolicy) -> Result<DensityMatrix> {
    spec.validate()?;
    let n = spec.n_thermal;
    let dim = spec.dim;
    if (dim as f64) < 10.0 * (n + 1.0) {
        warn!("truncation dim={dim} is below the 10(n+1) rule of thumb for n={n}");
    }
    let q = n / (n + 1.0);
    let tail = q.powi(dim as i32);
    if tail > TAIL_MASS_LIMIT {
        let msg = format!("thermal tail mass {tail:e} beyond dim={dim} for n={n}");
        match policy {
            TruncationPolicy::Strict => return Err(Error::Truncation(msg)),
            TruncationPolicy::Lax => warn!("{msg}"),
        }
    }
    let mut weights = Vec::with_capacity(dim);
    let mut w = 1.0;
    for _ in 0..dim {
        weights.push(w);
        w *= q;
    }
    let total: f64 = weights.iter().sum();
    let mut m = CMatrix::zeros(dim, dim);
    for (k, w) in weights.iter().enumerate() {
        m[(k, k)] = C64::new(w / total, 0.0);
    }
    Ok(DensityMatrix { entries: m })
}

/// Smallest truncation that keeps the thermal tail beyond `dim` below the limit.
pub fn minimal_thermal_dim(n_thermal: f64) -> usize {
    if n_thermal <= 0.0 {
        return 2;
    }
    let q = n_thermal / (n_thermal + 1.0);
    let d = (TAIL_MASS_LIMIT.ln() / q.ln()).ceil() as usize;
    d.max(2)
}

/// `exp(beta a^† - beta* a)` on the truncated space.
///
/// Built from the eigenbasis of the truncated quadrature, so the result is
/// exactly unitary on the truncated space and agrees with the untruncated
/// operator away from the edge (see [`crate::linalg::interior_limit`]).
pub fn displacement_op(beta: C64, dim: usize) -> CMatrix {
    assert!(dim >= 2, "dim must be at least 2");
    if beta == C64::new(0.0, 0.0) {
        return CMatrix::identity(dim, dim);
    }
    quadrature_basis(dim).displacement(beta)
}

/// `exp(-i theta a^†a)`.
pub fn rotation_op(theta: f64, dim: usize) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |k, _| {
        C64::from_polar(1.0, -theta * k as f64)
    }))
}

/// `a` on the truncated space.
pub fn annihilation_op(dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `R(theta) rho R(theta)^†` without matrix products.
pub fn rotate_state(rho: &DensityMatrix, theta: f64) -> DensityMatrix {
    let mut m = rho.entries.clone();
    let n = m.nrows();
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] *= C64::from_polar(1.0, -theta * (i as f64 - j as f64));
        }
    }
    DensityMatrix { entries: m }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub occupancy: f64,
    pub mean_x: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub purity: f64,
}

/// Quadratures are `X = (a + a^†)/sqrt 2` and `P = (a - a^†)/(i sqrt 2)`.
pub fn observables_of(rho: &DensityMatrix) -> Observables {
    let m = &rho.entries;
    let n = m.nrows();
    let mut occ = 0.0;
    let mut a1 = C64::new(0.0, 0.0);
    let mut a2 = C64::new(0.0, 0.0);
    for k in 0..n {
        let kf = k as f64;
        occ += kf * m[(k, k)].re;
        if k + 1 < n {
            a1 += m[(k + 1, k)] * (kf + 1.0).sqrt();
        }
        if k + 2 < n {
            a2 += m[(k + 2, k)] * ((kf + 1.0) * (kf + 2.0)).sqrt();
        }
    }
    let mean_x = SQRT_2 * a1.re;
    let mean_p = SQRT_2 * a1.im;
    let x2 = a2.re + occ + 0.5;
    let p2 = -a2.re + occ + 0.5;
    let purity = m.iter().map(|z| z.norm_sqr()).sum();
    Observables {
        occupancy: occ,
        mean_x,
        var_x: x2 - mean_x * mean_x,
        var_p: p2 - mean_p * mean_p,
        purity,
    }
}

/// Fixed-step RK4 integrator for the thermal-contact master equation
///
/// `d rho/dt = k_down D[a] rho + k_up D[a^†] rho`
///
/// in the frame rotating with the mode. The step count is fixed at
/// construction by a halving check, so one channel can be reused for every
/// round that shares the same spec and duration.
#[derive(Debug, Clone)]
pub struct DampingChannel {
    k_down: f64,
    k_up: f64,
    duration: f64,
    steps: usize,
}

const HALVING_TOL: f64 = 1e-8;
const TRACE_TOL: f64 = 1e-8;

impl DampingChannel {
    /// Picks a step from the accuracy and stability bounds, then doubles the
    /// step count until halving changes `probe` by less than the tolerance.
    pub fn calibrate(spec: &OscillatorSpec, duration: f64, probe: &DensityMatrix) -> Result<Self> {
        spec.validate()?;
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::validation("duration", "must be finite and >= 0"));
        }
        let (k_down, k_up) = spec.jump_rates();
        let mut channel = DampingChannel {
            k_down,
            k_up,
            duration,
            steps: 0,
        };
        if duration == 0.0 || (k_down == 0.0 && k_up == 0.0) {
            return Ok(channel);
        }
        let dim = spec.dim as f64;
        // Fastest decaying coherence sets the RK4 stability limit.
        let lambda_max = k_down * (dim - 1.0) + k_up * dim;
        let mut h = 1.0 / lambda_max;
        if spec.gamma > 0.0 {
            h = h.min(0.05 / (spec.gamma * (spec.n_thermal + 1.0)));
        }
        channel.steps = (duration / h).ceil().max(1.0) as usize;

        for _ in 0..6 {
            let coarse = channel.integrate(probe.entries(), channel.steps);
            let fine = channel.integrate(probe.entries(), 2 * channel.steps);
            let diff = crate::linalg::max_abs(&(&coarse - &fine));
            if diff < HALVING_TOL {
                return Ok(channel);
            }
            channel.steps *= 2;
        }
        Err(Error::StepSize(format!(
            "halving check did not converge below {HALVING_TOL:e} for duration {duration}"
        )))
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if self.steps == 0 {
            return Ok(rho.clone());
        }
        let out = self.integrate(rho.entries(), self.steps);
        let out = DensityMatrix { entries: out };
        let drift = (out.trace() - rho.trace()).abs();
        if drift > TRACE_TOL || !drift.is_finite() {
            return Err(Error::StepSize(format!("trace drift {drift:e} in damping step")));
        }
        Ok(out)
    }

    /// The dissipator maps each offset diagonal `rho[(k + d, k)]` onto itself,
    /// so the diagonals are integrated independently and the upper triangle is
    /// filled by Hermiticity. All-zero diagonals stay zero and are skipped.
    fn integrate(&self, rho: &CMatrix, steps: usize) -> CMatrix {
        let n = rho.nrows();
        let h = self.duration / steps as f64;
        let sq: Vec<f64> = (0..=n).map(|k| (k as f64).sqrt()).collect();
        // Truncated a a^† is diag(1, 2, .., n-1, 0).
        let aad = |k: usize| if k + 1 < n { k as f64 + 1.0 } else { 0.0 };
        let mut out = CMatrix::zeros(n, n);
        for d in 0..n {
            let len = n - d;
            let mut y: Vec<C64> = (0..len).map(|k| rho[(k + d, k)]).collect();
            if y.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                continue;
            }
            let decay: Vec<f64> = (0..len)
                .map(|k| 0.5 * self.k_down * (2 * k + d) as f64 + 0.5 * self.k_up * (aad(k + d) + aad(k)))
                .collect();
            // down[k] couples k <- k+1, up[k] couples k <- k-1
            let down: Vec<f64> = (0..len).map(|k| self.k_down * sq[k + d + 1] * sq[k + 1]).collect();
            let up: Vec<f64> = (0..len).map(|k| self.k_up * sq[k + d] * sq[k]).collect();
            let gen = |y: &[C64], out: &mut [C64]| {
                for k in 0..len {
                    let mut v = -y[k] * decay[k];
                    if k + 1 < len {
                        v += y[k + 1] * down[k];
                    }
                    if k > 0 {
                        v += y[k - 1] * up[k];
                    }
                    out[k] = v;
                }
            };
            let zero = C64::new(0.0, 0.0);
            let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
                (vec![zero; len], vec![zero; len], vec![zero; len], vec![zero; len], vec![zero; len]);
            for _ in 0..steps {
                gen(&y, &mut k1);
                for q in 0..len {
                    tmp[q] = y[q] + k1[q] * (0.5 * h);
                }
                gen(&tmp, &mut k2);
                for q in 0..len {
                    tmp[q] = y[q] + k2[q] * (0.5 * h);
                }
                gen(&tmp, &mut k3);
                for q in 0..len {
                    tmp[q] = y[q] + k3[q] * h;
                }
                gen(&tmp, &mut k4);
                for q in 0..len {
                    y[q] += (k1[q] + (k2[q] + k3[q]) * 2.0 + k4[q]) * (h / 6.0);
                }
            }
            for (k, z) in y.into_iter().enumerate() {
                if d == 0 {
                    out[(k, k)] = C64::new(z.re, 0.0);
                } else {
                    out[(k + d, k)] = z;
                    out[(k, k + d)] = z.conj();
                }
            }
        }
        out
    }
}

/// Evolves `rho` under thermal damping for `duration`, calibrating the step on `rho`.
pub fn lindblad_damping(rho: &DensityMatrix, spec: &OscillatorSpec, duration: f64) -> Result<DensityMatrix> {
    DampingChannel::calibrate(spec, duration, rho)?.apply(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cmul, interior_limit, max_abs_block};
    use proptest::prelude::*;

    fn spec(n: f64, dim: usize) -> OscillatorSpec {
        OscillatorSpec::new(1.0, n, dim)
    }

    /// Scaling-and-squaring exponential on a padded space, cropped back.
    fn padded_displacement(beta: C64, dim: usize) -> CMatrix {
        let big = dim + 80;
        let a = annihilation_op(big);
        let gen = &a.adjoint() * beta - &a * beta.conj();
        gen.exp().view((0, 0), (dim, dim)).into_owned()
    }

    #[test]
    fn thermal_zero_temperature_is_vacuum() {
        let rho = build_thermal(&spec(0.0, 8), TruncationPolicy::Strict).unwrap();
        assert_eq!(rho, DensityMatrix::vacuum(8));
    }

    #[test]
    fn thermal_occupancy_matches_geometric_series() {
        let rho = build_thermal(&spec(10.0, 256), TruncationPolicy::Strict).unwrap();
        let obs = observables_of(&rho);
        assert!((obs.occupancy - 10.0).abs() < 1e-6, "{}", obs.occupancy);
        assert!((obs.var_x - 10.5).abs() < 1e-6);
        assert!((obs.var_p - 10.5).abs() < 1e-6);
        // purity of a thermal state is 1/(2n+1)
        assert!((obs.purity - 1.0 / 21.0).abs() < 1e-6);
    }

    #[test]
    fn thermal_tail_rule() {
        let err = build_thermal(&spec(10.0, 16), TruncationPolicy::Strict).unwrap_err();
        assert!(matches!(err, Error::Truncation(_)));
        assert!(build_thermal(&spec(10.0, 16), TruncationPolicy::Lax).is_ok());
        assert!(minimal_thermal_dim(10.0) <= 160);
    }

    #[test]
    fn displacement_zero_is_identity() {
        assert_eq!(displacement_op(C64::new(0.0, 0.0), 6), CMatrix::identity(6, 6));
    }

    #[test]
    fn coherent_state_occupancy() {
        let d = displacement_op(C64::new(0.0, 0.25), 32);
        let psi: Vec<C64> = d.column(0).iter().cloned().collect();
        let obs = observables_of(&DensityMatrix::pure(&psi).unwrap());
        assert!((obs.occupancy - 0.0625).abs() < 1e-8);
    }

    #[test]
    fn displacement_matches_padded_exponential() {
        for &(re, im) in &[(0.3, -0.1), (-1.2, 0.7), (0.0, 2.0)] {
            let beta = C64::new(re, im);
            for &dim in &[32usize, 64, 160] {
                let lim = interior_limit(dim, beta.norm());
                let err = max_abs_block(&(displacement_op(beta, dim) - padded_displacement(beta, dim)), lim);
                assert!(err < 1e-10, "beta={beta} dim={dim} err={err:e}");
            }
        }
    }

    #[test]
    fn displacement_inverse_and_unitarity() {
        let beta = C64::new(0.8, -0.4);
        let dim = 48;
        let lim = interior_limit(dim, beta.norm());
        let d = displacement_op(beta, dim);
        let prod = cmul(&d, &displacement_op(-beta, dim));
        assert!(max_abs_block(&(prod - CMatrix::identity(dim, dim)), lim) < 1e-9);
        let gram = d.adjoint() * &d;
        assert!(max_abs_block(&(gram - CMatrix::identity(dim, dim)), dim) < 1e-12);
    }

    #[test]
    fn rotation_periodicity_and_conjugation() {
        assert!(crate::linalg::max_abs(&(rotation_op(std::f64::consts::TAU, 9) - CMatrix::identity(9, 9))) < 1e-12);
        let dim = 32;
        let (theta, beta) = (0.9, C64::new(0.4, 0.3));
        let lhs = rotation_op(theta, dim) * displacement_op(beta, dim) * rotation_op(-theta, dim);
        let rhs = displacement_op(beta * C64::from_polar(1.0, -theta), dim);
        assert!(max_abs_block(&(lhs - rhs), interior_limit(dim, beta.norm())) < 1e-9);
    }

    #[test]
    fn vacuum_variances() {
        let obs = observables_of(&DensityMatrix::vacuum(4));
        assert_eq!(obs.occupancy, 0.0);
        assert!((obs.var_x - 0.5).abs() < 1e-15 && (obs.var_p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn even_cat_occupancy() {
        let lam = 0.25;
        let dim = 40;
        let plus = displacement_op(C64::new(0.0, lam), dim);
        let minus = displacement_op(C64::new(0.0, -lam), dim);
        let psi: Vec<C64> = (0..dim).map(|k| plus[(k, 0)] + minus[(k, 0)]).collect();
        let obs = observables_of(&DensityMatrix::pure(&psi).unwrap());
        let expected = lam * lam * (lam * lam as f64).tanh();
        assert!((obs.occupancy - expected).abs() < 1e-6, "{} vs {expected}", obs.occupancy);
    }

    #[test]
    fn damping_fixed_point_and_identity() {
        let s = spec(3.0, 64).with_damping(0.2);
        let th = build_thermal(&s, TruncationPolicy::Strict).unwrap();
        let out = lindblad_damping(&th, &s, 4.0).unwrap();
        assert!(crate::linalg::max_abs(&(out.entries() - th.entries())) < 1e-8);

        let free = spec(3.0, 64);
        let rho = DensityMatrix::fock(3, 64);
        assert_eq!(lindblad_damping(&rho, &free, 10.0).unwrap(), rho);
    }

    #[test]
    fn damping_from_vacuum_follows_exact_law() {
        let s = spec(10.0, 200).with_damping(0.5);
        let out = lindblad_damping(&DensityMatrix::vacuum(200), &s, 2.0).unwrap();
        let n = observables_of(&out).occupancy;
        let exact = 10.0 * (1.0 - (-1.0f64).exp());
        assert!((n - exact).abs() / exact < 0.01, "{n} vs {exact}");
        assert!((out.trace() - 1.0).abs() < 1e-8);
        assert!(out.hermiticity_error() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn displacement_composition_rule(
            r1 in -1.0f64..1.0, i1 in -1.0f64..1.0,
            r2 in -1.0f64..1.0, i2 in -1.0f64..1.0,
        ) {
            let dim = 32;
            let (b1, b2) = (C64::new(r1, i1), C64::new(r2, i2));
            let lhs = cmul(&displacement_op(b1, dim), &displacement_op(b2, dim));
            let phase = C64::from_polar(1.0, (b1 * b2.conj()).im);
            let rhs = displacement_op(b1 + b2, dim) * phase;
            let lim = interior_limit(dim, b1.norm() + b2.norm());
            prop_assert!(max_abs_block(&(lhs - rhs), lim) < 1e-9);
        }

        #[test]
        fn uncertainty_and_trace_under_damping(
            n0 in 0.0f64..2.0, nth in 0.0f64..2.0, gt in 0.0f64..1.0,
            re in -1.0f64..1.0, im in -1.0f64..1.0,
        ) {
            let dim = 40;
            let s = spec(nth, dim).with_damping(1.0);
            let th = build_thermal(&spec(n0, dim), TruncationPolicy::Lax).unwrap();
            let d = displacement_op(C64::new(re, im), dim);
            let rho = DensityMatrix::from_entries_unchecked(crate::linalg::sandwich(&d, th.entries()));
            let out = lindblad_damping(&rho, &s, gt).unwrap();
            prop_assert!((out.trace() - 1.0).abs() < 1e-8);
            prop_assert!(out.hermiticity_error() < 1e-10);
            let o = observables_of(&out);
            prop_assert!(o.occupancy >= 0.0);
            prop_assert!(o.var_x * o.var_p >= 0.25 - 1e-9);
        }

        #[test]
        fn thermalization_law(n0 in 0.0f64..3.0, nth in 0.0f64..3.0, gt in 0.0f64..5.0) {
            let dim = 72;
            let s = spec(nth, dim).with_damping(1.0);
            let rho = build_thermal(&spec(n0, dim), TruncationPolicy::Lax).unwrap();
            let n = observables_of(&lindblad_damping(&rho, &s, gt).unwrap()).occupancy;
            let exact = nth + (n0 - nth) * (-gt).exp();
            prop_assert!((n - exact).abs() <= 0.01 * exact.max(1e-3) + 1e-9, "{} vs {}", n, exact);
        }
    }
}
