//! One-dimensional Schrödinger evolution (ħ = 1) with probability-density,
//! probability-current and continuity diagnostics.
//!
//! The grid ends are hard walls: `ψ = 0` at the first and last sample.
//! Radial problems use `u(r) = r·R(r)` on `[0, r_max]`, which fits the same
//! convention since `u(0) = 0`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Default relative node tolerance for [`find_nodes`].
pub const DEFAULT_NODE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub dx: f64,
    pub n_points: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, dx: f64, n_points: usize) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::param("dx", format!("must be > 0, got {dx}")));
        }
        if n_points < 8 {
            return Err(Error::param(
                "n_points",
                format!("must be >= 8, got {n_points}"),
            ));
        }
        if !x_min.is_finite() {
            return Err(Error::param("x_min", "must be finite"));
        }
        Ok(Grid1D {
            x_min,
            dx,
            n_points,
        })
    }

    /// Grid with `n_points` samples spanning `[x_min, x_max]` inclusive.
    pub fn spanning(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::param(
                "n_points",
                format!("must be >= 8, got {n_points}"),
            ));
        }
        Grid1D::new(x_min, (x_max - x_min) / (n_points - 1) as f64, n_points)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n_points - 1)
    }

    /// Wall-to-wall length.
    pub fn length(&self) -> f64 {
        (self.n_points - 1) as f64 * self.dx
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|i| self.x(i))
    }

    pub fn contains(&self, x: f64) -> bool {
        let eps = 1e-9 * self.dx;
        x >= self.x_min - eps && x <= self.x_max() + eps
    }

    /// `dx²·m/2`.
    pub fn default_dt(&self, mass: f64) -> f64 {
        self.dx * self.dx * mass / 2.0
    }
}

/// Complex samples `ψ(x_i)` with the particle mass.
#[derive(Clone, Debug, PartialEq)]
pub struct GridWavefunction {
    pub grid: Grid1D,
    pub samples: Vec<C64>,
    pub mass: f64,
}

impl GridWavefunction {
    /// Samples taken as given, no normalization.
    pub fn from_raw(grid: Grid1D, samples: Vec<C64>, mass: f64) -> Result<Self> {
        if samples.len() != grid.n_points {
            return Err(Error::DimensionMismatch {
                expected: grid.n_points,
                actual: samples.len(),
            });
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::param("mass", format!("must be > 0, got {mass}")));
        }
        Ok(GridWavefunction {
            grid,
            samples,
            mass,
        })
    }

    /// Samples rescaled so that `Σ|ψ_i|²·dx = 1`.
    pub fn normalized(grid: Grid1D, samples: Vec<C64>, mass: f64) -> Result<Self> {
        let mut psi = GridWavefunction::from_raw(grid, samples, mass)?;
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateState);
        }
        let scale = 1.0 / norm.sqrt();
        psi.samples.iter_mut().for_each(|s| *s *= scale);
        Ok(psi)
    }

    pub fn from_fn(grid: Grid1D, mass: f64, f: impl Fn(f64) -> C64) -> Result<Self> {
        let samples = grid.points().map(f).collect();
        GridWavefunction::normalized(grid, samples, mass)
    }

    /// Discrete norm `Σ|ψ_i|²·dx`.
    pub fn norm(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.grid.dx
    }

    pub fn density(&self) -> Vec<f64> {
        density(self)
    }

    pub fn current(&self) -> Vec<f64> {
        current(self)
    }

    /// Normalized `Σ c_k ψ_k`; all parts must share grid and mass.
    pub fn superpose(parts: &[(C64, &GridWavefunction)]) -> Result<Self> {
        let (_, first) = parts.first().ok_or(Error::DegenerateState)?;
        let mut samples = vec![ZERO; first.grid.n_points];
        for (c, psi) in parts {
            if psi.grid != first.grid || psi.mass != first.mass {
                return Err(Error::GridMismatch);
            }
            for (acc, s) in samples.iter_mut().zip(&psi.samples) {
                *acc += c * s;
            }
        }
        GridWavefunction::normalized(first.grid, samples, first.mass)
    }

    fn same_grid(&self, other: &GridWavefunction) -> bool {
        self.grid == other.grid && self.mass == other.mass
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    pub samples: Vec<f64>,
}

impl Potential {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::param(
                "potential",
                format!("must be finite, found {v}"),
            ));
        }
        Ok(Potential { samples })
    }

    pub fn zero(grid: &Grid1D) -> Self {
        Potential {
            samples: vec![0.0; grid.n_points],
        }
    }

    pub fn from_fn(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Potential::new(grid.points().map(f).collect())
    }
}

/// Interval `[a, b]` meant to sit on nodes of the state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleBoundary {
    pub a: f64,
    pub b: f64,
}

impl BubbleBoundary {
    /// `a <= b`; `a == b` is allowed and encloses nothing.
    pub fn new(a: f64, b: f64, grid: &Grid1D) -> Result<Self> {
        if a.is_nan() || b.is_nan() || a > b {
            return Err(Error::param(
                "boundary",
                format!("need a <= b, got [{a}, {b}]"),
            ));
        }
        if !grid.contains(a) || !grid.contains(b) {
            return Err(Error::param(
                "boundary",
                format!("[{a}, {b}] outside grid [{}, {}]", grid.x_min, grid.x_max()),
            ));
        }
        Ok(BubbleBoundary { a, b })
    }
}

/// Box eigenstate `sin(nπ(x − x_min)/L)` between the grid walls. On the grid
/// these are exact eigenvectors of the three-point Laplacian.
pub fn box_eigenstate(grid: Grid1D, n: usize, mass: f64) -> Result<GridWavefunction> {
    if n == 0 {
        return Err(Error::param("n", "box quantum number starts at 1"));
    }
    let l = grid.length();
    let samples = grid
        .points()
        .map(|x| C64::new((n as f64 * PI * (x - grid.x_min) / l).sin(), 0.0))
        .collect();
    walled(grid, samples, mass)
}

/// Zeroes the wall samples (sin(nπ) is ~1e-16, not 0) and normalizes.
fn walled(grid: Grid1D, mut samples: Vec<C64>, mass: f64) -> Result<GridWavefunction> {
    let last = grid.n_points - 1;
    samples[0] = ZERO;
    samples[last] = ZERO;
    GridWavefunction::normalized(grid, samples, mass)
}

/// Continuum box energy `n²π²/(2mL²)`.
pub fn box_energy(grid: &Grid1D, n: usize, mass: f64) -> f64 {
    let l = grid.length();
    (n * n) as f64 * PI * PI / (2.0 * mass * l * l)
}

/// Gaussian packet `exp(−(x−x0)²/(4σ²) + i k0 x)`; `sigma` is the position
/// standard deviation of `|ψ|²`.
pub fn gaussian_packet(
    grid: Grid1D,
    mass: f64,
    x0: f64,
    sigma: f64,
    k0: f64,
) -> Result<GridWavefunction> {
    let samples = grid
        .points()
        .map(|x| C64::from_polar((-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp(), k0 * x))
        .collect();
    walled(grid, samples, mass)
}

/// Crank–Nicolson propagator for a fixed grid, potential and time step.
///
/// `(1 + i dt H/2) ψ' = (1 − i dt H/2) ψ` with the three-point Laplacian on the
/// interior and `ψ = 0` on both walls. The tridiagonal left-hand side is
/// factored once; every step is one forward sweep and one back substitution.
#[derive(Clone, Debug)]
pub struct CrankNicolson {
    grid: Grid1D,
    mass: f64,
    dt: f64,
    /// `(i dt/2)·H_ii` on the interior.
    half_diag: Vec<C64>,
    /// `(i dt/2)·H_{i,i±1}`.
    half_off: C64,
    /// Modified super-diagonal of the forward sweep.
    c_prime: Vec<C64>,
    /// Reciprocal pivots of the forward sweep.
    inv_pivot: Vec<C64>,
}

impl CrankNicolson {
    pub fn new(grid: Grid1D, potential: &Potential, mass: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be > 0, got {dt}")));
        }
        if potential.samples.len() != grid.n_points {
            return Err(Error::GridMismatch);
        }
        if mass.is_nan() || mass <= 0.0 {
            return Err(Error::param("mass", format!("must be > 0, got {mass}")));
        }
        let n = grid.n_points - 2;
        let kinetic = 1.0 / (2.0 * mass * grid.dx * grid.dx);
        let alpha = C64::new(0.0, dt / 2.0);
        let half_off = alpha * -kinetic;
        let half_diag: Vec<C64> = (1..=n)
            .map(|i| alpha * (2.0 * kinetic + potential.samples[i]))
            .collect();

        let one = C64::new(1.0, 0.0);
        let mut c_prime = vec![ZERO; n];
        let mut inv_pivot = vec![ZERO; n];
        for i in 0..n {
            let pivot = one + half_diag[i]
                - if i > 0 {
                    half_off * c_prime[i - 1]
                } else {
                    ZERO
                };
            inv_pivot[i] = one / pivot;
            c_prime[i] = half_off * inv_pivot[i];
        }
        Ok(CrankNicolson {
            grid,
            mass,
            dt,
            half_diag,
            half_off,
            c_prime,
            inv_pivot,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, psi: &GridWavefunction) -> Result<GridWavefunction> {
        let mut out = psi.clone();
        self.step_in_place(&mut out)?;
        Ok(out)
    }

    pub fn step_in_place(&self, psi: &mut GridWavefunction) -> Result<()> {
        if psi.grid != self.grid || psi.mass != self.mass {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.n_points - 2;
        let s = &mut psi.samples;
        let one = C64::new(1.0, 0.0);
        // right-hand side (1 − i dt H/2) ψ on the interior, fused with the forward sweep
        let mut d = vec![ZERO; n];
        for k in 0..n {
            let i = k + 1;
            let left = if k > 0 { s[i - 1] } else { ZERO };
            let right = if k + 1 < n { s[i + 1] } else { ZERO };
            let rhs = (one - self.half_diag[k]) * s[i] - self.half_off * (left + right);
            let prev = if k > 0 {
                self.half_off * d[k - 1]
            } else {
                ZERO
            };
            d[k] = (rhs - prev) * self.inv_pivot[k];
        }
        for k in (0..n.saturating_sub(1)).rev() {
            let next = d[k + 1];
            d[k] -= self.c_prime[k] * next;
        }
        s[0] = ZERO;
        s[n + 1] = ZERO;
        s[1..=n].copy_from_slice(&d);
        Ok(())
    }
}

/// One Crank–Nicolson step. Builds the propagator each call; use
/// [`CrankNicolson`] directly when stepping repeatedly.
pub fn evolve_step(
    psi: &GridWavefunction,
    potential: &Potential,
    dt: f64,
) -> Result<GridWavefunction> {
    CrankNicolson::new(psi.grid, potential, psi.mass, dt)?.step(psi)
}

/// `ρ_i = |ψ_i|²`.
pub fn density(psi: &GridWavefunction) -> Vec<f64> {
    psi.samples.iter().map(|s| s.norm_sqr()).collect()
}

fn central_derivative(samples: &[C64], dx: f64) -> Vec<C64> {
    let n = samples.len();
    let mut d = vec![ZERO; n];
    for i in 1..n - 1 {
        d[i] = (samples[i + 1] - samples[i - 1]) / (2.0 * dx);
    }
    d[0] = (samples[1] - samples[0]) / dx;
    d[n - 1] = (samples[n - 1] - samples[n - 2]) / dx;
    d
}

/// Probability current `j = (1/2mi)(ψ* ∂ψ − ψ ∂ψ*) = Im(ψ* ∂ψ)/m` with central
/// differences inside and one-sided differences at the ends.
pub fn current(psi: &GridWavefunction) -> Vec<f64> {
    let d = central_derivative(&psi.samples, psi.grid.dx);
    psi.samples
        .iter()
        .zip(&d)
        .map(|(s, ds)| (s.conj() * ds).im / psi.mass)
        .collect()
}

/// Largest interior value of `|Δρ/dt + ∂j_mid|`, where `j_mid` is the current
/// of the midpoint state `(ψ(t) + ψ(t+dt))/2` and `∂` is the central difference.
pub fn continuity_residual(
    before: &GridWavefunction,
    after: &GridWavefunction,
    dt: f64,
) -> Result<f64> {
    if !before.same_grid(after) {
        return Err(Error::GridMismatch);
    }
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    let mid = GridWavefunction {
        grid: before.grid,
        mass: before.mass,
        samples: before
            .samples
            .iter()
            .zip(&after.samples)
            .map(|(a, b)| (a + b) * 0.5)
            .collect(),
    };
    let j = current(&mid);
    let dx = before.grid.dx;
    let n = before.grid.n_points;
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        let drho = (after.samples[i].norm_sqr() - before.samples[i].norm_sqr()) / dt;
        let div = (j[i + 1] - j[i - 1]) / (2.0 * dx);
        worst = worst.max((drho + div).abs());
    }
    Ok(worst)
}

/// Linear interpolation of grid values at `x` (clamped to the grid).
fn interpolate(grid: &Grid1D, values: &[f64], x: f64) -> f64 {
    let t = ((x - grid.x_min) / grid.dx).clamp(0.0, (grid.n_points - 1) as f64);
    let i = (t.floor() as usize).min(grid.n_points - 2);
    let f = t - i as f64;
    values[i] * (1.0 - f) + values[i + 1] * f
}

/// Integral over `[a, b]` of the piecewise-linear interpolant of `values`;
/// the trapezoid rule when `a` and `b` sit on grid points.
fn integrate_linear(grid: &Grid1D, values: &[f64], a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let pos = |x: f64| ((x - grid.x_min) / grid.dx).clamp(0.0, (grid.n_points - 1) as f64);
    let (ta, tb) = (pos(a), pos(b));
    let value_at = |t: f64| {
        let i = (t.floor() as usize).min(grid.n_points - 2);
        let f = t - i as f64;
        values[i] * (1.0 - f) + values[i + 1] * f
    };
    // cut [ta, tb] at the interior grid nodes
    let first = ta.floor() as usize + 1;
    let last = tb.ceil() as usize;
    let mut total = 0.0;
    let mut t0 = ta;
    let mut v0 = value_at(ta);
    for (k, &v1) in values.iter().enumerate().take(last).skip(first) {
        let t1 = k as f64;
        total += 0.5 * (v0 + v1) * (t1 - t0);
        t0 = t1;
        v0 = v1;
    }
    total += 0.5 * (v0 + value_at(tb)) * (tb - t0);
    total * grid.dx
}

/// Probability inside the boundary, `∫_a^b ρ dx`.
pub fn region_probability(psi: &GridWavefunction, boundary: &BubbleBoundary) -> f64 {
    integrate_linear(&psi.grid, &density(psi), boundary.a, boundary.b)
}

/// Positions where the density passes through (numerical) zero.
///
/// Two detectors are combined: sign changes of the real part after rotating
/// away the dominant global phase (located by linear interpolation), and
/// interior local minima of `ρ` (located by a parabola through three points).
/// A candidate counts only if the interpolated density there is below
/// `tol · max ρ`. The walls at the grid ends are never reported.
pub fn find_nodes(psi: &GridWavefunction, tol: f64) -> Result<Vec<f64>> {
    find_nodes_in(&psi.grid, &psi.samples, tol)
}

pub fn find_nodes_in(grid: &Grid1D, samples: &[C64], tol: f64) -> Result<Vec<f64>> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::param("tol", format!("must be > 0, got {tol}")));
    }
    if samples.len() != grid.n_points {
        return Err(Error::DimensionMismatch {
            expected: grid.n_points,
            actual: samples.len(),
        });
    }
    let n = samples.len();
    let rho: Vec<f64> = samples.iter().map(|s| s.norm_sqr()).collect();
    let max_rho = rho.iter().copied().fold(0.0, f64::max);
    if max_rho == 0.0 {
        return Ok(Vec::new());
    }
    let threshold = tol * max_rho;

    let sum_sq: C64 = samples.iter().map(|s| s * s).sum();
    let rotation = C64::from_polar(1.0, -0.5 * sum_sq.arg());
    let rotated: Vec<C64> = samples.iter().map(|s| s * rotation).collect();

    // (position, from sign change)
    let mut candidates: Vec<(f64, bool)> = Vec::new();

    // exact zeros strictly inside, with non-zero neighbours on both sides of the run
    let mut i = 1;
    while i < n - 1 {
        if samples[i] == ZERO {
            let start = i;
            while i < n - 1 && samples[i] == ZERO {
                i += 1;
            }
            let end = i - 1;
            if samples[start - 1] != ZERO && i < n && samples[i] != ZERO {
                candidates.push((0.5 * (grid.x(start) + grid.x(end)), true));
            }
        }
        i += 1;
    }

    for i in 0..n - 1 {
        let (r0, r1) = (rotated[i].re, rotated[i + 1].re);
        if r0 * r1 < 0.0 {
            let f = r0 / (r0 - r1);
            let interp = rotated[i] * (1.0 - f) + rotated[i + 1] * f;
            if interp.norm_sqr() < threshold {
                candidates.push((grid.x(i) + f * grid.dx, true));
            }
        }
    }

    for i in 1..n - 1 {
        let (l, c, r) = (rho[i - 1], rho[i], rho[i + 1]);
        if c < l && c <= r && c < threshold {
            let curvature = l - 2.0 * c + r;
            let shift = if curvature > 0.0 {
                0.5 * (l - r) / curvature
            } else {
                0.0
            };
            candidates.push((grid.x(i) + shift.clamp(-1.0, 1.0) * grid.dx, false));
        }
    }

    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut nodes: Vec<(f64, bool)> = Vec::new();
    for c in candidates {
        match nodes.last_mut() {
            Some(last) if (c.0 - last.0).abs() <= grid.dx => {
                if c.1 && !last.1 {
                    *last = c;
                }
            }
            _ => nodes.push(c),
        }
    }
    Ok(nodes.into_iter().map(|(x, _)| x).collect())
}

/// Hydrogen 2s radial function in atomic units, `(1/2√2)(2 − r)e^{−r/2}`.
pub fn hydrogen_2s_radial(r: f64) -> f64 {
    (2.0 - r) * (-r / 2.0).exp() / (2.0 * SQRT_2)
}

/// `u(r) = r·R(r)` sampled on a radial grid starting at `r = 0`.
pub fn radial_wavefunction(
    grid: Grid1D,
    mass: f64,
    radial: impl Fn(f64) -> f64,
) -> Result<GridWavefunction> {
    GridWavefunction::from_fn(grid, mass, |r| C64::new(r * radial(r), 0.0))
}

/// Composite Simpson rule on `n` (even) panels over `[a, b]`.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n.max(2) };
    let h = (b - a) / n as f64;
    let mut total = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        total += w * f(a + k as f64 * h);
    }
    total * h / 3.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BubbleSample {
    pub step: usize,
    pub time: f64,
    pub enclosed_probability: f64,
    pub boundary_current_max: f64,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubbleTrace {
    pub boundary: BubbleBoundary,
    pub dt: f64,
    pub samples: Vec<BubbleSample>,
}

impl BubbleTrace {
    /// `max − min` of the enclosed probability over the run.
    pub fn enclosed_variation(&self) -> f64 {
        let (lo, hi) =
            self.samples
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                    (
                        lo.min(s.enclosed_probability),
                        hi.max(s.enclosed_probability),
                    )
                });
        hi - lo
    }

    pub fn max_boundary_current(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.boundary_current_max)
            .fold(0.0, f64::max)
    }
}

fn bubble_sample(
    psi: &GridWavefunction,
    boundary: &BubbleBoundary,
    step: usize,
    dt: f64,
) -> BubbleSample {
    let j = current(psi);
    let ja = interpolate(&psi.grid, &j, boundary.a).abs();
    let jb = interpolate(&psi.grid, &j, boundary.b).abs();
    BubbleSample {
        step,
        time: step as f64 * dt,
        enclosed_probability: region_probability(psi, boundary),
        boundary_current_max: ja.max(jb),
        norm: psi.norm(),
    }
}

/// Evolves `n_steps` and records the enclosed probability and the boundary
/// current after every step (row 0 is the initial state).
pub fn bubble_trace(
    psi0: &GridWavefunction,
    potential: &Potential,
    boundary: &BubbleBoundary,
    dt: f64,
    n_steps: usize,
) -> Result<BubbleTrace> {
    if !psi0.grid.contains(boundary.a) || !psi0.grid.contains(boundary.b) {
        return Err(Error::param("boundary", "outside the grid"));
    }
    let stepper = CrankNicolson::new(psi0.grid, potential, psi0.mass, dt)?;
    let mut psi = psi0.clone();
    let mut samples = Vec::with_capacity(n_steps + 1);
    samples.push(bubble_sample(&psi, boundary, 0, dt));
    for step in 1..=n_steps {
        stepper.step_in_place(&mut psi)?;
        samples.push(bubble_sample(&psi, boundary, step, dt));
    }
    Ok(BubbleTrace {
        boundary: *boundary,
        dt,
        samples,
    })
}
