//! Brute-force path sums on a finite unitary hopping lattice.
//!
//! A path from `A` to `C` is a sequence of sites, one per time step; its
//! weight is the product of the step amplitudes `K[next, prev]`, which is the
//! lattice form of `e^{iS}` with an additive action. Summing weights by
//! explicit enumeration is checked against matrix powers, against the product
//! of segment amplitudes through an intermediate point, and against the
//! decomposition over a time slice.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::quantum::{random_unitary, unitarity_deviation};
use crate::rng::RngStream;
use crate::{Error, Result, C64};

/// Largest number of explicit path terms an enumeration may visit.
pub const ENUMERATION_BUDGET: f64 = 1e8;
/// Longest time span an enumeration may cover.
pub const MAX_ENUMERATION_STEPS: usize = 14;
/// Amplitude magnitude below which a spacetime point counts as null.
pub const NULL_TOLERANCE: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// One-step amplitudes: `K[b, a]` carries site `a` to site `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct HoppingKernel {
    matrix: DMatrix<C64>,
}

impl HoppingKernel {
    pub const UNITARY_TOLERANCE: f64 = 1e-12;

    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        if matrix.nrows() < 2 {
            return Err(Error::param("n_sites", "need at least 2 sites"));
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation > Self::UNITARY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(HoppingKernel { matrix })
    }

    pub fn random(n_sites: usize, rng: &mut RngStream) -> Result<Self> {
        HoppingKernel::new(random_unitary(n_sites, rng))
    }

    /// `K = e^{−iH}` for Hermitian `H`, via its eigendecomposition.
    pub fn from_hamiltonian(h: &DMatrix<C64>) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch {
                expected: h.nrows(),
                actual: h.ncols(),
            });
        }
        let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e)));
        let v = &eig.eigenvectors;
        HoppingKernel::new(v * phases * v.adjoint())
    }

    pub fn n_sites(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    #[inline]
    pub fn hop(&self, to: usize, from: usize) -> C64 {
        self.matrix[(to, from)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub site: usize,
    pub step: usize,
}

impl SpacetimePoint {
    pub fn new(site: usize, step: usize) -> Self {
        SpacetimePoint { site, step }
    }
}

fn check_site(k: &HoppingKernel, p: SpacetimePoint) -> Result<()> {
    if p.site >= k.n_sites() {
        return Err(Error::param(
            "site",
            format!("site {} out of range for {} sites", p.site, k.n_sites()),
        ));
    }
    Ok(())
}

/// `K^T ψ0` by repeated application.
pub fn propagate(k: &HoppingKernel, psi0: &[C64], steps: usize) -> Result<Vec<C64>> {
    if psi0.len() != k.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: k.n_sites(),
            actual: psi0.len(),
        });
    }
    let mut v = DVector::from_column_slice(psi0);
    for _ in 0..steps {
        v = &k.matrix * v;
    }
    Ok(v.iter().copied().collect())
}

fn check_budget(k: &HoppingKernel, steps: usize) -> Result<()> {
    let terms = (k.n_sites() as f64).powi(steps as i32 - 1);
    if steps > MAX_ENUMERATION_STEPS || terms > ENUMERATION_BUDGET {
        return Err(Error::EnumerationTooLarge { terms, steps });
    }
    Ok(())
}

/// Depth-first sum over every site sequence. `pinned[s]` restricts the site
/// visited at relative step `s`.
fn enumerate(
    k: &HoppingKernel,
    start: usize,
    end: usize,
    steps: usize,
    pinned: &[Option<usize>],
) -> C64 {
    fn walk(
        k: &HoppingKernel,
        site: usize,
        step: usize,
        steps: usize,
        end: usize,
        weight: C64,
        pinned: &[Option<usize>],
    ) -> C64 {
        if step + 1 == steps {
            return weight * k.hop(end, site);
        }
        let next_step = step + 1;
        let mut total = ZERO;
        for next in 0..k.n_sites() {
            if let Some(p) = pinned.get(next_step).copied().flatten() {
                if p != next {
                    continue;
                }
            }
            total += walk(
                k,
                next,
                next_step,
                steps,
                end,
                weight * k.hop(next, site),
                pinned,
            );
        }
        total
    }
    walk(k, start, 0, steps, end, ONE, pinned)
}

/// Sum over all lattice paths from `a` to `c`, each weighted by its product of
/// step amplitudes.
pub fn enumerate_paths(k: &HoppingKernel, a: SpacetimePoint, c: SpacetimePoint) -> Result<C64> {
    check_site(k, a)?;
    check_site(k, c)?;
    if c.step <= a.step {
        return Err(Error::Ordering(format!(
            "need A.step < C.step, got {} and {}",
            a.step, c.step
        )));
    }
    let steps = c.step - a.step;
    check_budget(k, steps)?;
    Ok(enumerate(k, a.site, c.site, steps, &[]))
}

/// Sum over the paths from `a` to `c` that visit `b.site` at time `b.step`.
pub fn through_point_amplitude(
    k: &HoppingKernel,
    a: SpacetimePoint,
    b: SpacetimePoint,
    c: SpacetimePoint,
) -> Result<C64> {
    check_site(k, a)?;
    check_site(k, b)?;
    check_site(k, c)?;
    if !(a.step < b.step && b.step < c.step) {
        return Err(Error::Ordering(format!(
            "need A.step < B.step < C.step, got {}, {}, {}",
            a.step, b.step, c.step
        )));
    }
    let steps = c.step - a.step;
    check_budget(k, steps)?;
    let mut pinned = vec![None; steps];
    pinned[b.step - a.step] = Some(b.site);
    Ok(enumerate(k, a.site, c.site, steps, &pinned))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScreeningReport {
    pub passed: bool,
    pub max_deviation: f64,
    pub null_points: usize,
    pub steps: usize,
}

/// Checks that removing the amplitude at genuinely null spacetime points does
/// not change what arrives downstream: propagates twice, once zeroing those
/// points as it goes, and reports the largest difference at `t_check`.
pub fn null_screening_check(
    k: &HoppingKernel,
    psi0: &[C64],
    null_points: &[SpacetimePoint],
    t_check: usize,
) -> Result<ScreeningReport> {
    if psi0.len() != k.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: k.n_sites(),
            actual: psi0.len(),
        });
    }
    for p in null_points {
        check_site(k, *p)?;
        if p.step > t_check {
            return Err(Error::Ordering(format!(
                "null point at step {} after t_check {t_check}",
                p.step
            )));
        }
    }
    let nulls_at = |step: usize| null_points.iter().filter(move |p| p.step == step);

    let mut free = DVector::from_column_slice(psi0);
    let mut screened = free.clone();
    for step in 0..=t_check {
        if step > 0 {
            free = &k.matrix * free;
            screened = &k.matrix * screened;
        }
        for p in nulls_at(step) {
            let magnitude = free[p.site].norm();
            if magnitude >= NULL_TOLERANCE {
                return Err(Error::NotNull {
                    site: p.site,
                    step,
                    magnitude,
                });
            }
            screened[p.site] = ZERO;
        }
    }
    let max_deviation = free
        .iter()
        .zip(screened.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(ScreeningReport {
        passed: max_deviation <= 1e-10,
        max_deviation,
        null_points: null_points.len(),
        steps: t_check,
    })
}

/// Reflection-symmetric kernel on an odd number of sites together with an
/// antisymmetric initial state: the centre site stays null at every step.
pub fn parity_instance(n_sites: usize, rng: &mut RngStream) -> Result<(HoppingKernel, Vec<C64>)> {
    if n_sites < 3 || n_sites.is_multiple_of(2) {
        return Err(Error::param(
            "n_sites",
            "parity construction needs an odd count >= 3",
        ));
    }
    let m = random_unitary(n_sites, rng);
    let base = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let reflect = |i: usize| n_sites - 1 - i;
    let h = DMatrix::from_fn(n_sites, n_sites, |r, c| {
        base[(r, c)] + base[(reflect(r), reflect(c))]
    });
    let kernel = HoppingKernel::from_hamiltonian(&h)?;
    let mut psi0 = vec![ZERO; n_sites];
    for i in 0..n_sites / 2 {
        let a = C64::new(rng.uniform() - 0.5, rng.uniform() - 0.5);
        psi0[i] = a;
        psi0[reflect(i)] = -a;
    }
    let norm = psi0.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    psi0.iter_mut().for_each(|a| *a /= norm);
    Ok((kernel, psi0))
}

/// Summary emitted by the `pathsum` harness run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathsumReport {
    pub instances: usize,
    /// Worst absolute error over all identity checks: enumeration against the
    /// matrix power, through-point sum against the product of its segments,
    /// and slice decomposition against the direct amplitude.
    pub max_factorization_error: f64,
    pub max_screening_deviation: f64,
}

/// Random `(K, A, B, C)` instances with `2..=max_sites` sites and
/// `2..=max_steps` steps, checked against every identity; plus one
/// parity-constructed screening instance.
pub fn oracle_suite(
    instances: usize,
    max_sites: usize,
    max_steps: usize,
    rng: &mut RngStream,
) -> Result<PathsumReport> {
    if max_sites < 2 || max_steps < 2 {
        return Err(Error::param(
            "pathsum",
            "need max_sites >= 2 and max_steps >= 2",
        ));
    }
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let n = 2 + (rng.uniform() * (max_sites - 1) as f64) as usize;
        let t = 2 + (rng.uniform() * (max_steps - 1) as f64) as usize;
        let k = HoppingKernel::random(n, rng)?;
        let pick = |rng: &mut RngStream| (rng.uniform() * n as f64) as usize;
        let a = SpacetimePoint::new(pick(rng), 0);
        let c = SpacetimePoint::new(pick(rng), t);
        let b_step = 1 + (rng.uniform() * (t - 1) as f64) as usize;
        let b = SpacetimePoint::new(pick(rng), b_step);

        let direct = enumerate_paths(&k, a, c)?;
        let mut unit = vec![ZERO; n];
        unit[a.site] = ONE;
        let by_matrix = propagate(&k, &unit, t)?[c.site];
        worst = worst.max((direct - by_matrix).norm());

        let through = through_point_amplitude(&k, a, b, c)?;
        let product = enumerate_paths(&k, a, b)? * enumerate_paths(&k, b, c)?;
        worst = worst.max((through - product).norm());

        let mut slice = ZERO;
        for site in 0..n {
            slice += through_point_amplitude(&k, a, SpacetimePoint::new(site, b_step), c)?;
        }
        worst = worst.max((slice - direct).norm());
    }

    let (k, psi0) = parity_instance(5, rng)?;
    let t_check = 12;
    let nulls: Vec<SpacetimePoint> = (0..=t_check).map(|s| SpacetimePoint::new(2, s)).collect();
    let screening = null_screening_check(&k, &psi0, &nulls, t_check)?;

    Ok(PathsumReport {
        instances,
        max_factorization_error: worst,
        max_screening_deviation: screening.max_deviation,
    })
}
