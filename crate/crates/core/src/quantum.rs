//! Finite-dimensional quantum states in a labeled basis, the unitaries used by
//! the trap simulators (Rabi pulses, beam splitters), projective measurement
//! and the dephasing channel.

use std::collections::HashSet;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::RngStream;
use crate::{Error, Result, C64};

/// Norm drift left alone.
pub const NORM_TOLERANCE: f64 = 1e-12;
/// Drift beyond this is silently renormalized.
pub const RENORMALIZE_THRESHOLD: f64 = 1e-10;
/// Drift beyond this is a bug, not round-off.
pub const NORM_HARD_LIMIT: f64 = 1e-6;
/// Accepted deviation of `U†U` from the identity.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn check_unique(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

fn norm_sqr(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

/// Applies the drift policy: untouched below [`RENORMALIZE_THRESHOLD`],
/// renormalized up to [`NORM_HARD_LIMIT`], error beyond.
fn enforce_norm(amps: &mut [C64]) -> Result<()> {
    let norm = norm_sqr(amps).sqrt();
    let drift = (norm - 1.0).abs();
    if !drift.is_finite() || drift > NORM_HARD_LIMIT {
        return Err(Error::NormDrift { drift });
    }
    if drift > RENORMALIZE_THRESHOLD {
        amps.iter_mut().for_each(|a| *a /= norm);
    }
    Ok(())
}

/// Draws an index with the given (unnormalized, non-negative) weights.
pub(crate) fn sample_index(weights: &[f64], rng: &mut RngStream) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.uniform() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // u landed on the upper edge through rounding; take the last non-empty outcome
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Normalized vector over an ordered set of unique basis labels.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    labels: Arc<[String]>,
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Builds a state without normalizing it. Use [`PureState::normalize`] or
    /// [`PureState::normalized`] to get a unit vector.
    pub fn new<S: Into<String>>(
        labels: impl IntoIterator<Item = S>,
        amplitudes: Vec<C64>,
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                actual: amplitudes.len(),
            });
        }
        check_unique(&labels)?;
        Ok(PureState {
            labels: labels.into(),
            amplitudes,
        })
    }

    pub fn normalized<S: Into<String>>(
        labels: impl IntoIterator<Item = S>,
        amplitudes: Vec<C64>,
    ) -> Result<Self> {
        PureState::new(labels, amplitudes)?.normalize()
    }

    /// The basis vector `|label⟩`.
    pub fn basis<S: Into<String>>(
        labels: impl IntoIterator<Item = S>,
        label: &str,
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let idx = labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        let mut amps = vec![ZERO; labels.len()];
        amps[idx] = ONE;
        PureState::new(labels, amps)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amplitudes).sqrt()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn amplitude(&self, label: &str) -> Result<C64> {
        Ok(self.amplitudes[self.index_of(label)?])
    }

    pub fn probability(&self, label: &str) -> Result<f64> {
        Ok(self.amplitude(label)?.norm_sqr())
    }

    /// Same direction, unit norm.
    pub fn normalize(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateState);
        }
        Ok(PureState {
            labels: self.labels.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a / norm).collect(),
        })
    }

    /// Transforms the amplitudes on `targets` (in that order) by `u`, leaving
    /// every other amplitude untouched.
    pub fn apply_unitary(&self, u: &DMatrix<C64>, targets: &[&str]) -> Result<Self> {
        if u.nrows() != u.ncols() || u.nrows() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: targets.len(),
                actual: u.nrows(),
            });
        }
        let deviation = unitarity_deviation(u);
        if deviation > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        let idx = targets
            .iter()
            .map(|t| self.index_of(t))
            .collect::<Result<Vec<_>>>()?;
        let mut unique = HashSet::new();
        for t in targets {
            if !unique.insert(*t) {
                return Err(Error::DuplicateLabel(t.to_string()));
            }
        }
        let mut out = self.amplitudes.clone();
        for (row, &i) in idx.iter().enumerate() {
            out[i] = idx
                .iter()
                .enumerate()
                .map(|(col, &j)| u[(row, col)] * self.amplitudes[j])
                .sum();
        }
        enforce_norm(&mut out)?;
        Ok(PureState {
            labels: self.labels.clone(),
            amplitudes: out,
        })
    }

    /// Born-rule measurement in the labeled basis. `basis` must list every
    /// label of the state exactly once; the returned label is the outcome and
    /// the state is the renormalized projection onto it.
    pub fn projective_measure(
        &self,
        basis: &[&str],
        rng: &mut RngStream,
    ) -> Result<(String, Self)> {
        let idx = self.partition_indices(basis)?;
        let weights: Vec<f64> = idx.iter().map(|&i| self.amplitudes[i].norm_sqr()).collect();
        let k = sample_index(&weights, rng);
        let i = idx[k];
        let a = self.amplitudes[i];
        let mut amps = vec![ZERO; self.dim()];
        amps[i] = a / a.norm();
        Ok((
            self.labels[i].clone(),
            PureState {
                labels: self.labels.clone(),
                amplitudes: amps,
            },
        ))
    }

    pub(crate) fn partition_indices(&self, basis: &[&str]) -> Result<Vec<usize>> {
        basis_cover(&self.labels, basis)
    }
}

fn basis_cover(labels: &[String], basis: &[&str]) -> Result<Vec<usize>> {
    if basis.len() != labels.len() {
        return Err(Error::IncompleteBasis(format!(
            "{} basis labels for {} state labels",
            basis.len(),
            labels.len()
        )));
    }
    let mut seen = vec![false; labels.len()];
    let mut out = Vec::with_capacity(basis.len());
    for b in basis {
        let i = labels
            .iter()
            .position(|l| l == b)
            .ok_or_else(|| Error::UnknownLabel(b.to_string()))?;
        if seen[i] {
            return Err(Error::IncompleteBasis(format!("label `{b}` listed twice")));
        }
        seen[i] = true;
        out.push(i);
    }
    Ok(out)
}

/// Largest entry of `|U†U − I|`.
pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let prod = u.adjoint() * u;
    let n = u.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { ONE } else { ZERO };
            worst = worst.max((prod[(r, c)] - target).norm());
        }
    }
    worst
}

/// Two-level Rabi rotation by `theta` about an equatorial axis at laser phase `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelRotation {
    pub theta: f64,
    pub phi: f64,
}

impl TwoLevelRotation {
    pub fn new(theta: f64, phi: f64) -> Self {
        TwoLevelRotation { theta, phi }
    }

    pub fn half_pi(phi: f64) -> Self {
        TwoLevelRotation::new(std::f64::consts::FRAC_PI_2, phi)
    }

    pub fn pi(phi: f64) -> Self {
        TwoLevelRotation::new(std::f64::consts::PI, phi)
    }

    pub fn matrix(&self) -> Matrix2<C64> {
        rotation_matrix(*self)
    }
}

/// `R(θ,φ) = [[cos θ/2, −i e^{−iφ} sin θ/2], [−i e^{iφ} sin θ/2, cos θ/2]]`.
pub fn rotation_matrix(r: TwoLevelRotation) -> Matrix2<C64> {
    let (s, c) = (r.theta / 2.0).sin_cos();
    let c = C64::new(c, 0.0);
    let off_upper = -I * C64::from_polar(1.0, -r.phi) * s;
    let off_lower = -I * C64::from_polar(1.0, r.phi) * s;
    Matrix2::new(c, off_upper, off_lower, c)
}

/// Symmetric 50:50 beam splitter `(1/√2)[[1, i], [i, 1]]`.
pub fn beam_splitter() -> Matrix2<C64> {
    let t = C64::new(FRAC_1_SQRT_2, 0.0);
    let r = C64::new(0.0, FRAC_1_SQRT_2);
    Matrix2::new(t, r, r, t)
}

/// `diag(1, e^{iφ})`: relative phase on the second mode.
pub fn phase_shift(phi: f64) -> Matrix2<C64> {
    Matrix2::new(ONE, ZERO, ZERO, C64::from_polar(1.0, phi))
}

pub fn to_dynamic(m: &Matrix2<C64>) -> DMatrix<C64> {
    DMatrix::from_column_slice(2, 2, m.as_slice())
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases of
/// `R`'s diagonal folded back into `Q`.
pub fn random_unitary(n: usize, rng: &mut RngStream) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for c in 0..n {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for row in 0..n {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// Two complex amplitudes without labels, for hot Monte Carlo loops where a
/// labeled [`PureState`] would allocate on every step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spinor(pub [C64; 2]);

impl Spinor {
    pub fn basis(i: usize) -> Self {
        let mut a = [ZERO; 2];
        a[i] = ONE;
        Spinor(a)
    }

    #[inline]
    pub fn apply(&mut self, m: &Matrix2<C64>) {
        let [a, b] = self.0;
        self.0 = [m[(0, 0)] * a + m[(0, 1)] * b, m[(1, 0)] * a + m[(1, 1)] * b];
    }

    #[inline]
    pub fn probability(&self, i: usize) -> f64 {
        self.0[i].norm_sqr()
    }

    /// Born-rule measurement in the computational basis; collapses in place
    /// and returns the outcome index.
    #[inline]
    pub fn measure(&mut self, rng: &mut RngStream) -> usize {
        let k = sample_index(&[self.0[0].norm_sqr(), self.0[1].norm_sqr()], rng);
        let a = self.0[k];
        self.0 = [ZERO; 2];
        self.0[k] = a / a.norm();
        k
    }

    pub fn to_state(self, labels: &[&str; 2]) -> PureState {
        PureState::new(labels.iter().copied(), self.0.to_vec()).expect("two distinct labels")
    }
}

/// Density operator over labeled basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    labels: Arc<[String]>,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
    pub const TRACE_TOLERANCE: f64 = 1e-12;
    pub const EIGENVALUE_FLOOR: f64 = -1e-10;

    /// Validated construction: Hermitian, unit trace, positive semidefinite.
    pub fn new<S: Into<String>>(
        labels: impl IntoIterator<Item = S>,
        matrix: DMatrix<C64>,
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        check_unique(&labels)?;
        if matrix.nrows() != labels.len() || matrix.ncols() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                actual: matrix.nrows(),
            });
        }
        let rho = DensityMatrix {
            labels: labels.into(),
            matrix,
        };
        rho.validate()?;
        Ok(rho)
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        DensityMatrix {
            labels: psi.labels.clone(),
            matrix: &v * v.adjoint(),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn element(&self, row: &str, col: &str) -> Result<C64> {
        let r = self.index_of(row)?;
        let c = self.index_of(col)?;
        Ok(self.matrix[(r, c)])
    }

    fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.matrix.nrows();
        let mut herm = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                herm = herm.max((self.matrix[(r, c)] - self.matrix[(c, r)].conj()).norm());
            }
        }
        if herm > Self::HERMITIAN_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > Self::TRACE_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < Self::EIGENVALUE_FLOOR {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    /// Phase-damping channel: coherences between distinct basis states are
    /// multiplied by `e^{−γτ}`, populations are left alone.
    pub fn dephase(&self, gamma_tau: f64, basis: &[&str]) -> Result<Self> {
        if gamma_tau.is_nan() || gamma_tau < 0.0 {
            return Err(Error::param(
                "gamma_tau",
                format!("must be >= 0, got {gamma_tau}"),
            ));
        }
        basis_cover(&self.labels, basis)?;
        let factor = (-gamma_tau).exp();
        let mut m = self.matrix.clone();
        let n = m.nrows();
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    m[(r, c)] *= factor;
                }
            }
        }
        Ok(DensityMatrix {
            labels: self.labels.clone(),
            matrix: m,
        })
    }

    /// `U ρ U†` with `U` acting on `targets`.
    pub fn conjugate(&self, u: &DMatrix<C64>, targets: &[&str]) -> Result<Self> {
        if u.nrows() != targets.len() || u.ncols() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: targets.len(),
                actual: u.nrows(),
            });
        }
        let deviation = unitarity_deviation(u);
        if deviation > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        let n = self.matrix.nrows();
        let mut full = DMatrix::<C64>::identity(n, n);
        let idx = targets
            .iter()
            .map(|t| self.index_of(t))
            .collect::<Result<Vec<_>>>()?;
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                full[(i, j)] = u[(r, c)];
            }
        }
        Ok(DensityMatrix {
            labels: self.labels.clone(),
            matrix: &full * &self.matrix * full.adjoint(),
        })
    }

    /// `½ Σ |eig(ρ − σ)|`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.labels != other.labels {
            return Err(Error::DimensionMismatch {
                expected: self.labels.len(),
                actual: other.labels.len(),
            });
        }
        let diff = &self.matrix - &other.matrix;
        let herm = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
        Ok(0.5
            * SymmetricEigen::new(herm)
                .eigenvalues
                .iter()
                .map(|e| e.abs())
                .sum::<f64>())
    }
}

/// Running average of `|ψ⟩⟨ψ|` over trajectories.
#[derive(Clone, Debug)]
pub struct EnsembleAverage {
    labels: Option<Arc<[String]>>,
    sum: DMatrix<C64>,
    count: usize,
}

impl Default for EnsembleAverage {
    fn default() -> Self {
        EnsembleAverage {
            labels: None,
            sum: DMatrix::zeros(0, 0),
            count: 0,
        }
    }
}

impl EnsembleAverage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, psi: &PureState) -> Result<()> {
        match &self.labels {
            None => {
                self.labels = Some(psi.labels.clone());
                self.sum = DMatrix::zeros(psi.dim(), psi.dim());
            }
            Some(l) if *l != psi.labels => {
                return Err(Error::DimensionMismatch {
                    expected: l.len(),
                    actual: psi.dim(),
                })
            }
            _ => {}
        }
        let a = psi.amplitudes();
        for r in 0..a.len() {
            for c in 0..a.len() {
                self.sum[(r, c)] += a[r] * a[c].conj();
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self) -> Result<DensityMatrix> {
        let labels = self.labels.clone().ok_or(Error::DegenerateState)?;
        Ok(DensityMatrix {
            labels,
            matrix: &self.sum / C64::new(self.count as f64, 0.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn normalize_examples() {
        let s = PureState::new(["a", "b"], vec![c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(
            s.normalize().unwrap().amplitudes(),
            &[c(1.0, 0.0), c(0.0, 0.0)]
        );

        let s = PureState::normalized(["a", "b"], vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        for a in s.amplitudes() {
            assert!(close(*a, c(FRAC_1_SQRT_2, 0.0), 1e-15));
        }

        let zero = PureState::new(["a", "b"], vec![c(0.0, 0.0); 2]).unwrap();
        assert_eq!(zero.normalize(), Err(Error::DegenerateState));
    }

    #[test]
    fn labels_must_be_unique() {
        assert!(matches!(
            PureState::new(["a", "a"], vec![c(1.0, 0.0), c(0.0, 0.0)]),
            Err(Error::DuplicateLabel(_))
        ));
    }

    #[test]
    fn rotation_examples() {
        let id = rotation_matrix(TwoLevelRotation::new(0.0, 0.3));
        assert!((id - Matrix2::identity()).norm() < 1e-15);

        let mut s = Spinor::basis(0);
        s.apply(&rotation_matrix(TwoLevelRotation::pi(0.0)));
        assert!(close(s.0[0], c(0.0, 0.0), 1e-15));
        assert!(close(s.0[1], c(0.0, -1.0), 1e-15));

        let half = rotation_matrix(TwoLevelRotation::half_pi(0.0));
        let full = rotation_matrix(TwoLevelRotation::pi(0.0));
        assert!((half * half - full).norm() < 1e-15);
    }

    #[test]
    fn rotations_are_unitary() {
        for k in 0..50 {
            let theta = 0.37 * k as f64;
            let phi = -1.1 + 0.23 * k as f64;
            let m = to_dynamic(&rotation_matrix(TwoLevelRotation::new(theta, phi)));
            assert!(unitarity_deviation(&m) < 1e-14);
        }
    }

    #[test]
    fn beam_splitter_examples() {
        let bs = beam_splitter();
        let mut s = Spinor::basis(0);
        s.apply(&bs);
        assert!(close(s.0[0], c(FRAC_1_SQRT_2, 0.0), 1e-15));
        assert!(close(s.0[1], c(0.0, FRAC_1_SQRT_2), 1e-15));
        s.apply(&bs);
        assert!(close(s.0[0], c(0.0, 0.0), 1e-15));
        assert!(close(s.0[1], c(0.0, 1.0), 1e-15));
        assert!((bs.determinant().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn apply_unitary_on_subset() {
        let s = PureState::basis(["armA", "armB", "lost"], "armA").unwrap();
        let out = s
            .apply_unitary(&to_dynamic(&beam_splitter()), &["armA", "armB"])
            .unwrap();
        assert!(close(
            out.amplitude("armA").unwrap(),
            c(FRAC_1_SQRT_2, 0.0),
            1e-15
        ));
        assert!(close(
            out.amplitude("armB").unwrap(),
            c(0.0, FRAC_1_SQRT_2),
            1e-15
        ));
        assert_eq!(out.amplitude("lost").unwrap(), c(0.0, 0.0));

        let same = s
            .apply_unitary(&DMatrix::identity(3, 3), &["armA", "armB", "lost"])
            .unwrap();
        assert_eq!(same, s);
    }

    #[test]
    fn apply_unitary_errors() {
        let s = PureState::basis(["a", "b"], "a").unwrap();
        let not_unitary = DMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(matches!(
            s.apply_unitary(&not_unitary, &["a", "b"]),
            Err(Error::NotUnitary { .. })
        ));
        let bs = to_dynamic(&beam_splitter());
        assert!(matches!(
            s.apply_unitary(&bs, &["a", "z"]),
            Err(Error::UnknownLabel(_))
        ));
        assert!(matches!(
            s.apply_unitary(&DMatrix::identity(3, 3), &["a", "b"]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn random_unitary_preserves_norm() {
        let mut rng = RngStream::new(11, 0);
        let labels = ["0", "1", "2", "3", "4"];
        for _ in 0..100 {
            let u = random_unitary(5, &mut rng);
            assert!(unitarity_deviation(&u) < 1e-13);
            let amps: Vec<C64> = (0..5)
                .map(|_| c(rng.uniform() - 0.5, rng.uniform() - 0.5))
                .collect();
            let psi = PureState::normalized(labels, amps).unwrap();
            let out = psi.apply_unitary(&u, &labels).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenstate_measurement_is_certain() {
        let mut rng = RngStream::new(3, 0);
        let s = PureState::basis(["0", "1"], "0").unwrap();
        for _ in 0..1000 {
            let (label, post) = s.projective_measure(&["0", "1"], &mut rng).unwrap();
            assert_eq!(label, "0");
            assert_eq!(post, s);
        }
    }

    #[test]
    fn remeasurement_is_idempotent() {
        let mut rng = RngStream::new(4, 0);
        let s = PureState::normalized(["0", "1"], vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        for _ in 0..1000 {
            let (first, post) = s.projective_measure(&["0", "1"], &mut rng).unwrap();
            let (second, _) = post.projective_measure(&["1", "0"], &mut rng).unwrap();
            assert_eq!(first, second);
        }
    }

    #[test]
    fn born_rule_frequency() {
        // binomial standard error at n = 1e6, p = 1/2 is 5e-4; 0.002 is 4 SE
        let n = 1_000_000;
        let mut rng = RngStream::new(5, 0);
        let s = PureState::normalized(["0", "1"], vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let zeros = (0..n)
            .filter(|_| s.projective_measure(&["0", "1"], &mut rng).unwrap().0 == "0")
            .count();
        let f = zeros as f64 / n as f64;
        assert!((f - 0.5).abs() < 0.002, "frequency {f}");
    }

    #[test]
    fn measurement_requires_full_basis() {
        let mut rng = RngStream::new(5, 0);
        let s = PureState::basis(["0", "1", "2"], "0").unwrap();
        assert!(matches!(
            s.projective_measure(&["0", "1"], &mut rng),
            Err(Error::IncompleteBasis(_))
        ));
        assert!(matches!(
            s.projective_measure(&["0", "1", "1"], &mut rng),
            Err(Error::IncompleteBasis(_))
        ));
    }

    fn plus_state() -> DensityMatrix {
        let psi = PureState::normalized(["0", "1"], vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        DensityMatrix::from_pure(&psi)
    }

    #[test]
    fn dephase_examples() {
        let rho = plus_state();
        assert_eq!(rho.dephase(0.0, &["0", "1"]).unwrap(), rho);

        let half = rho.dephase(LN_2, &["0", "1"]).unwrap();
        let off = half.element("0", "1").unwrap();
        assert!(close(off, rho.element("0", "1").unwrap() * 0.5, 1e-15));
        assert_eq!(
            half.element("0", "0").unwrap(),
            rho.element("0", "0").unwrap()
        );

        let diag = rho.dephase(f64::INFINITY, &["0", "1"]).unwrap();
        assert_eq!(diag.element("0", "1").unwrap(), c(0.0, 0.0));
        diag.validate().unwrap();

        assert!(matches!(
            rho.dephase(-0.1, &["0", "1"]),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn dephase_keeps_trace_and_positivity() {
        let mut rng = RngStream::new(8, 0);
        let labels = ["a", "b", "c", "d"];
        for k in 0..40 {
            let u = random_unitary(4, &mut rng);
            let psi = PureState::basis(labels, "a")
                .unwrap()
                .apply_unitary(&u, &labels)
                .unwrap();
            let rho = DensityMatrix::from_pure(&psi);
            let out = rho.dephase(0.05 * k as f64, &labels).unwrap();
            assert_eq!(out.trace(), rho.trace());
            assert!(out.eigenvalues().iter().all(|&e| e >= -1e-10));
        }
    }

    #[test]
    fn invalid_density_matrices_rejected() {
        let m =
            DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(0.5, 0.0)]);
        assert!(DensityMatrix::new(["a", "b"], m).is_err());
        let m =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(DensityMatrix::new(["a", "b"], m).is_err());
        let m =
            DMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(DensityMatrix::new(["a", "b"], m).is_err());
    }

    #[test]
    fn measurement_channel_matches_trajectories() {
        // ensemble of {prob p: measure, else identity} against
        // (1 - p) ρ + p Σ_k P_k ρ P_k built from explicit projectors
        let labels = ["0", "1", "2"];
        let mut rng = RngStream::new(21, 0);
        let psi = PureState::basis(labels, "0")
            .unwrap()
            .apply_unitary(&random_unitary(3, &mut rng), &labels)
            .unwrap();
        let p = 0.3;
        let n = 100_000;
        let mut avg = EnsembleAverage::new();
        for _ in 0..n {
            if rng.bernoulli(p) {
                avg.add(&psi.projective_measure(&labels, &mut rng).unwrap().1)
                    .unwrap();
            } else {
                avg.add(&psi).unwrap();
            }
        }
        let rho = DensityMatrix::from_pure(&psi);
        let mut mixed = rho.matrix() * C64::new(1.0 - p, 0.0);
        for k in 0..3 {
            let mut proj = DMatrix::<C64>::zeros(3, 3);
            proj[(k, k)] = c(1.0, 0.0);
            mixed += &proj * rho.matrix() * &proj * C64::new(p, 0.0);
        }
        let expected = DensityMatrix::new(labels, mixed).unwrap();
        let d = avg.finish().unwrap().trace_distance(&expected).unwrap();
        assert!(d < 5.0 / (n as f64).sqrt(), "trace distance {d}");
    }

    #[test]
    fn phase_shift_is_diagonal() {
        let m = phase_shift(PI);
        assert!(close(m[(1, 1)], c(-1.0, 0.0), 1e-15));
        assert_eq!(m[(0, 1)], c(0.0, 0.0));
    }
}
