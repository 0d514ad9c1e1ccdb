//! Resonant Jaynes-Cummings dynamics in a truncated Fock space.
//!
//! On resonance the time dependence of the interaction enters only through
//! the scalar coupling, so the propagator for a pulse of area θ acts as an
//! exact 2x2 rotation inside each excitation manifold:
//!
//! ```text
//! |n-1⟩|e⟩ → cos(√n θ)|n-1⟩|e⟩ − i sin(√n θ)|n⟩|g⟩
//! ```
//!
//! [`jc_propagate`] applies that rotation to a joint pure state.
//! [`EmissionKraus`] packages the same dynamics as a quantum channel on the
//! field alone: inject one excited atom, evolve for area θ, trace the atom
//! out. Its Kraus pair is a diagonal "stay" operator (atom leaves in |e⟩)
//! and a raising "emit" operator (atom leaves in |g⟩).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Tolerance on trace and state normalization.
pub const TRACE_TOL: f64 = 1e-12;
/// Tolerance on Hermiticity defects.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Eigenvalue floor for the positive-semidefiniteness check; repeated
/// channel composition accumulates round-off below this.
pub const PSD_EIGEN_FLOOR: f64 = -1e-10;
/// Maximum population tolerated at the cutoff level when a pulse could
/// raise it out of the truncated space.
pub const CUTOFF_HEADROOM_TOL: f64 = 1e-12;

const I_UNIT: C64 = C64::new(0.0, 1.0);

/// Pure state of (field ⊗ one atom), Fock levels 0..=n_max.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    n_max: usize,
    amp_e: DVector<C64>,
    amp_g: DVector<C64>,
}

impl JointState {
    /// Vacuum field with the atom excited: |0⟩|e⟩.
    pub fn fresh_excited(n_max: usize) -> Self {
        let mut amp_e = DVector::zeros(n_max + 1);
        amp_e[0] = C64::ONE;
        JointState {
            n_max,
            amp_e,
            amp_g: DVector::zeros(n_max + 1),
        }
    }

    /// Build from amplitude vectors (atom in |e⟩ / |g⟩ per Fock level).
    /// The state must be normalized to within [`TRACE_TOL`].
    pub fn from_amplitudes(amp_e: DVector<C64>, amp_g: DVector<C64>) -> Result<Self> {
        if amp_e.len() != amp_g.len() || amp_e.is_empty() {
            return Err(Error::InvalidArgument(
                "amplitude vectors must be nonempty and of equal length".into(),
            ));
        }
        let state = JointState {
            n_max: amp_e.len() - 1,
            amp_e,
            amp_g,
        };
        let norm = state.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidArgument(format!(
                "state norm {norm} is not 1 within {TRACE_TOL:.0e}"
            )));
        }
        Ok(state)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Amplitudes with the atom in |e⟩, indexed by photon number.
    pub fn amp_e(&self) -> &DVector<C64> {
        &self.amp_e
    }

    /// Amplitudes with the atom in |g⟩, indexed by photon number.
    pub fn amp_g(&self) -> &DVector<C64> {
        &self.amp_g
    }

    pub fn norm(&self) -> f64 {
        (self.amp_e.norm_squared() + self.amp_g.norm_squared()).sqrt()
    }

    /// Swap in a fresh excited atom, keeping only the |g⟩ branch of the
    /// outgoing one (the all-emissions path). No renormalization.
    pub fn reload_excited(&self) -> Self {
        JointState {
            n_max: self.n_max,
            amp_e: self.amp_g.clone(),
            amp_g: DVector::zeros(self.n_max + 1),
        }
    }
}

/// Propagate a joint pure state through a resonant pulse of area `theta`.
///
/// Rotates each excitation manifold by √n·θ; the |0⟩|g⟩ amplitude is
/// untouched. Population at the cutoff level in |e⟩ would leave the
/// truncated space, so it raises [`Error::TruncationOverflow`] instead of
/// silently leaking norm.
pub fn jc_propagate(state: &JointState, theta: f64) -> Result<JointState> {
    if !theta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "theta must be finite, got {theta}"
        )));
    }
    let n_max = state.n_max;
    let top_population = state.amp_e[n_max].norm_sqr();
    if theta != 0.0 && top_population > CUTOFF_HEADROOM_TOL {
        return Err(Error::TruncationOverflow {
            n_max,
            population: top_population,
        });
    }
    let mut amp_e = state.amp_e.clone();
    let mut amp_g = state.amp_g.clone();
    for n in 1..=n_max {
        let angle = (n as f64).sqrt() * theta;
        let c = angle.cos();
        let s = angle.sin();
        let e = amp_e[n - 1];
        let g = amp_g[n];
        amp_e[n - 1] = c * e - I_UNIT * s * g;
        amp_g[n] = -I_UNIT * s * e + c * g;
    }
    Ok(JointState {
        n_max,
        amp_e,
        amp_g,
    })
}

/// Field state after tracing out the atoms: a dense density matrix in the
/// Fock basis, levels 0..=n_max.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDensityMatrix {
    n_max: usize,
    rho: DMatrix<C64>,
}

impl FieldDensityMatrix {
    /// |0⟩⟨0| on levels 0..=n_max.
    pub fn vacuum(n_max: usize) -> Self {
        Self::fock(n_max, 0).expect("vacuum always fits")
    }

    /// |n⟩⟨n| on levels 0..=n_max.
    pub fn fock(n_max: usize, n: usize) -> Result<Self> {
        if n > n_max {
            return Err(Error::InvalidArgument(format!(
                "Fock level {n} exceeds cutoff n_max={n_max}"
            )));
        }
        let mut rho = DMatrix::zeros(n_max + 1, n_max + 1);
        rho[(n, n)] = C64::ONE;
        Ok(FieldDensityMatrix { n_max, rho })
    }

    /// Wrap a raw matrix, checking Hermiticity, unit trace, and positive
    /// semidefiniteness (to the module tolerances).
    pub fn from_matrix(rho: DMatrix<C64>) -> Result<Self> {
        if rho.nrows() != rho.ncols() || rho.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "density matrix must be square and nonempty, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let state = FieldDensityMatrix {
            n_max: rho.nrows() - 1,
            rho,
        };
        state.validate()?;
        Ok(state)
    }

    pub(crate) fn from_matrix_unchecked(rho: DMatrix<C64>) -> Self {
        FieldDensityMatrix {
            n_max: rho.nrows() - 1,
            rho,
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn rho(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|z| z.re).sum()
    }

    /// Largest |ρ[m][n] − conj(ρ[n][m])| over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for m in 0..=self.n_max {
            for n in m..=self.n_max {
                let d = (self.rho[(m, n)] - self.rho[(n, m)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Smallest eigenvalue of the (Hermitian) matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let eigenvalues = self.rho.clone().symmetric_eigen().eigenvalues;
        eigenvalues.iter().fold(f64::INFINITY, |acc, &x| acc.min(x))
    }

    pub fn validate(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        if !(defect <= HERMITICITY_TOL) {
            return Err(Error::InvalidArgument(format!(
                "density matrix is not Hermitian: defect {defect:.3e}"
            )));
        }
        let trace = self.trace();
        if !((trace - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::InvalidArgument(format!(
                "density matrix trace {trace} is not 1 within {TRACE_TOL:.0e}"
            )));
        }
        let min_eig = self.min_eigenvalue();
        if !(min_eig >= PSD_EIGEN_FLOOR) {
            return Err(Error::InvalidArgument(format!(
                "density matrix has eigenvalue {min_eig:.3e} below the PSD floor"
            )));
        }
        Ok(())
    }
}

/// Kraus pair of the single-atom emission channel at pulse area θ.
///
/// `stay` is diagonal with entries cos(√(n+1) θ) (atom exits in |e⟩, photon
/// number unchanged); `emit` maps |n⟩ → |n+1⟩ with amplitude −i sin(√(n+1) θ)
/// (atom exits in |g⟩). Together they satisfy
/// `stay†stay + emit†emit = 1` on levels 0..n_max−1; the cutoff level has no
/// emit entry, which is why the channel demands headroom there.
#[derive(Debug, Clone)]
pub struct EmissionKraus {
    theta: f64,
    stay: Vec<f64>,
    emit: Vec<C64>,
}

impl EmissionKraus {
    pub fn new(n_max: usize, theta: f64) -> Self {
        let stay = (0..=n_max)
            .map(|n| (((n + 1) as f64).sqrt() * theta).cos())
            .collect();
        let emit = (0..n_max)
            .map(|n| -I_UNIT * (((n + 1) as f64).sqrt() * theta).sin())
            .collect();
        EmissionKraus { theta, stay, emit }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Diagonal entries of the stay operator, |n⟩ → |n⟩.
    pub fn stay(&self) -> &[f64] {
        &self.stay
    }

    /// Subdiagonal entries of the emit operator, |n⟩ → |n+1⟩.
    pub fn emit(&self) -> &[C64] {
        &self.emit
    }

    /// Largest deviation of stay†stay + emit†emit from the identity on
    /// levels 0..n_max−1.
    pub fn completeness_defect(&self) -> f64 {
        self.emit
            .iter()
            .zip(&self.stay)
            .map(|(s, c)| (c * c + s.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn check_headroom(&self, rho: &FieldDensityMatrix) -> Result<()> {
        let top = rho.rho[(rho.n_max, rho.n_max)].re;
        if self.theta != 0.0 && top.abs() > CUTOFF_HEADROOM_TOL {
            return Err(Error::TruncationOverflow {
                n_max: rho.n_max,
                population: top,
            });
        }
        Ok(())
    }

    /// stay·ρ·stay†: the branch where the atom keeps its excitation.
    pub fn apply_stay(&self, rho: &FieldDensityMatrix) -> FieldDensityMatrix {
        let d = rho.n_max + 1;
        let mut out = DMatrix::zeros(d, d);
        for m in 0..d {
            for n in 0..d {
                out[(m, n)] = self.stay[m] * self.stay[n] * rho.rho[(m, n)];
            }
        }
        FieldDensityMatrix::from_matrix_unchecked(out)
    }

    /// emit·ρ·emit†, unnormalized: the branch where the atom emits. Its
    /// trace is the emission probability for the incoming state.
    pub fn apply_emit(&self, rho: &FieldDensityMatrix) -> Result<FieldDensityMatrix> {
        self.check_headroom(rho)?;
        let d = rho.n_max + 1;
        let mut out = DMatrix::zeros(d, d);
        for m in 1..d {
            for n in 1..d {
                out[(m, n)] = self.emit[m - 1] * self.emit[n - 1].conj() * rho.rho[(m - 1, n - 1)];
            }
        }
        Ok(FieldDensityMatrix::from_matrix_unchecked(out))
    }

    /// The full trace-preserving channel stay·ρ·stay† + emit·ρ·emit†.
    pub fn apply(&self, rho: &FieldDensityMatrix) -> Result<FieldDensityMatrix> {
        let emit_part = self.apply_emit(rho)?;
        let stay_part = self.apply_stay(rho);
        Ok(FieldDensityMatrix::from_matrix_unchecked(
            stay_part.rho + emit_part.rho,
        ))
    }
}

/// One-atom emission channel: inject |e⟩, evolve for pulse area `theta`,
/// trace the atom out. Preserves trace, Hermiticity, and positivity.
pub fn emission_channel(rho: &FieldDensityMatrix, theta: f64) -> Result<FieldDensityMatrix> {
    EmissionKraus::new(rho.n_max(), theta).apply(rho)
}

/// The emission branch alone (atom exits in |g⟩), unnormalized; its trace
/// is the per-step emission probability.
pub fn success_branch(rho: &FieldDensityMatrix, theta: f64) -> Result<FieldDensityMatrix> {
    EmissionKraus::new(rho.n_max(), theta).apply_emit(rho)
}

/// Population of Fock level `n`: ⟨n|ρ|n⟩, clamped to [0, 1].
pub fn fock_fidelity(rho: &FieldDensityMatrix, n: usize) -> Result<f64> {
    if n > rho.n_max() {
        return Err(Error::InvalidArgument(format!(
            "Fock level {n} exceeds cutoff n_max={}",
            rho.n_max()
        )));
    }
    Ok(rho.rho[(n, n)].re.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn pi_half_pulse_transfers_the_photon() {
        // |0⟩|e⟩ --θ=π/2--> −i|1⟩|g⟩
        let state = JointState::fresh_excited(1);
        let out = jc_propagate(&state, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(out.amp_g()[1].norm_sqr(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amp_g()[1].im, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amp_e()[0].norm_sqr(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_area_is_identity() {
        let state = JointState::fresh_excited(3);
        let out = jc_propagate(&state, 0.0).unwrap();
        assert_eq!(out, state);
    }

    #[test]
    fn one_photon_manifold_rotation() {
        // |1⟩|e⟩ at θ=π/2: cos(√2 π/2) ≈ −0.6057 stays, rest emits.
        let mut amp_e = DVector::zeros(3);
        amp_e[1] = C64::ONE;
        let state = JointState::from_amplitudes(amp_e, DVector::zeros(3)).unwrap();
        let out = jc_propagate(&state, FRAC_PI_2).unwrap();
        let c = (2.0_f64.sqrt() * FRAC_PI_2).cos();
        assert_abs_diff_eq!(c, -0.6056998670788134, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amp_e()[1].re, c, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amp_g()[2].norm_sqr(), 1.0 - c * c, epsilon = 1e-12);
    }

    #[test]
    fn propagation_from_top_level_is_rejected() {
        let mut amp_e = DVector::zeros(2);
        amp_e[1] = C64::ONE; // |1⟩|e⟩ with n_max = 1: nowhere to emit
        let state = JointState::from_amplitudes(amp_e, DVector::zeros(2)).unwrap();
        assert!(matches!(
            jc_propagate(&state, 0.3),
            Err(Error::TruncationOverflow { n_max: 1, .. })
        ));
        assert!(jc_propagate(&state, 0.0).is_ok());
    }

    #[test]
    fn channel_moves_vacuum_to_one_photon() {
        let rho = FieldDensityMatrix::vacuum(1);
        let out = emission_channel(&rho, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(fock_fidelity(&out, 1).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn channel_zero_area_is_identity() {
        let rho = FieldDensityMatrix::fock(4, 2).unwrap();
        let out = emission_channel(&rho, 0.0).unwrap();
        assert_eq!(out.rho(), rho.rho());
    }

    #[test]
    fn channel_splits_one_photon_state() {
        // |1⟩⟨1| at θ=π/2 → cos²(√2 π/2)|1⟩⟨1| + sin²(√2 π/2)|2⟩⟨2|
        let rho = FieldDensityMatrix::fock(2, 1).unwrap();
        let out = emission_channel(&rho, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(
            fock_fidelity(&out, 1).unwrap(),
            0.36687232897929223,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            fock_fidelity(&out, 2).unwrap(),
            0.6331276710207078,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn success_branch_trace_is_emission_probability() {
        let rho = FieldDensityMatrix::vacuum(1);
        let full = success_branch(&rho, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(full.trace(), 1.0, epsilon = 1e-12);
        let half = success_branch(&rho, FRAC_PI_2 / 2.0).unwrap();
        assert_abs_diff_eq!(half.trace(), 0.5, epsilon = 1e-12);
        // |1⟩⟨1| at θ = π/(2√2) → |2⟩⟨2| with certainty
        let one = FieldDensityMatrix::fock(2, 1).unwrap();
        let out = success_branch(&one, FRAC_PI_2 / 2.0_f64.sqrt()).unwrap();
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.rho()[(2, 2)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn channel_demands_cutoff_headroom() {
        let rho = FieldDensityMatrix::fock(2, 2).unwrap();
        assert!(matches!(
            emission_channel(&rho, 0.7),
            Err(Error::TruncationOverflow { n_max: 2, .. })
        ));
        assert!(emission_channel(&rho, 0.0).is_ok());
    }

    #[test]
    fn fidelity_edge_cases() {
        let rho = FieldDensityMatrix::fock(5, 3).unwrap();
        assert_eq!(fock_fidelity(&rho, 3).unwrap(), 1.0);
        assert_eq!(fock_fidelity(&rho, 1).unwrap(), 0.0);
        assert!(fock_fidelity(&rho, 6).is_err());
        // maximally mixed: every level carries 1/(n_max+1)
        let dim = 6;
        let mixed = FieldDensityMatrix::from_matrix(DMatrix::from_diagonal_element(
            dim,
            dim,
            C64::new(1.0 / dim as f64, 0.0),
        ))
        .unwrap();
        for n in 0..dim {
            assert_abs_diff_eq!(
                fock_fidelity(&mixed, n).unwrap(),
                1.0 / dim as f64,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn kraus_completeness_below_cutoff() {
        for &theta in &[0.0, 0.3, FRAC_PI_2, 2.7, -4.1] {
            let kraus = EmissionKraus::new(6, theta);
            assert!(kraus.completeness_defect() <= 1e-15);
        }
    }

    #[test]
    fn from_matrix_rejects_bad_states() {
        // non-Hermitian
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 0)] = C64::ONE;
        m[(0, 1)] = C64::new(0.3, 0.0);
        assert!(FieldDensityMatrix::from_matrix(m).is_err());
        // wrong trace
        let m = DMatrix::from_diagonal_element(2, 2, C64::new(0.9, 0.0));
        assert!(FieldDensityMatrix::from_matrix(m).is_err());
        // negative eigenvalue
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(FieldDensityMatrix::from_matrix(m).is_err());
    }
}
