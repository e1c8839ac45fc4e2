//! Flow of discretized paths toward (and away from) saddle points, the
//! linearized flow spectrum, and Gaussian expansions of the action.
//!
//! Paths z(t_j; u) live on a uniform grid over [ti, tf] with endpoints
//! pinned to the boundary data. With the action
//!
//!     I[z] = i Int dt [ z'(t)^2 / (2 eps) - eps V(z) ],    t_c = eps t,
//!
//! discretized by central differences and a trapezoid rule, the downward
//! flow in the (1/h)-scaled metric reads
//!
//!     dz_j/du = -(1/h) conj( dI/dz_j )
//!             = -i conj( (D2 z)_j / eps + eps V'(z_j) ),
//!
//! which decreases Re I monotonically and conserves Im I. Splitting
//! V'(z) = w0^2 z + R(z) and the path z = lin + w into the boundary
//! interpolant plus a Dirichlet remainder, the linear part is diagonal
//! in the discrete sine basis: each mode obeys dm/du = g conj(m) + c
//! with g = i (mu_l / conj(eps) - conj(eps) w0^2), solved in closed form
//! per step, so the stiff spectrum (mu_l up to 4/h^2) costs nothing in
//! stability. The cubic double-well remainder R = 2 z^3 is advanced by a
//! midpoint rule in a Strang arrangement. Because the flow amplifies
//! mode l at rates up to mu_l ~ 4/h^2, mode amplitudes below the
//! round-off floor of the sine transform (1e-12 relative) are cleared
//! when a sample vector enters mode space: they are transform noise,
//! not data, and would otherwise dominate within u ~ h^2. Around a saddle z_s the
//! perturbation doublet f = f1 + i f2 obeys the eigenproblem
//!
//!     L (f1, f2) = lambda (f1, f2),
//!     L = -(D2 + Om^2) s3 - G^2 s1,   Om^2 + i G^2 = V''(conj z_s),
//!
//! a real symmetric 2N x 2N matrix whose spectrum is symmetric under
//! lambda -> -lambda (the map (f1, f2) -> (f2, -f1) anticommutes with
//! L). Directions e^{i pi/4} f with lambda > 0 span the descent
//! submanifold, and I[z_s + sum a_n e^{i pi/4} f_n] = I[z_s]
//! - sum lambda_n a_n^2 / 2 exactly in the discrete quadratic theory.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::num::{C, I, ZERO};
use crate::saddles::{BoundaryData, ClassicalSolution};
use crate::{Error, Result};

/// Background potential for flows and spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialId {
    /// V = 0.
    Free,
    /// V = z^2 / 2.
    Harmonic,
    /// V = (z^2 - 1)^2 / 2.
    DoubleWell,
}

impl PotentialId {
    pub fn v(self, z: C) -> C {
        match self {
            PotentialId::Free => ZERO,
            PotentialId::Harmonic => 0.5 * z * z,
            PotentialId::DoubleWell => {
                let w = z * z - 1.0;
                0.5 * w * w
            }
        }
    }

    pub fn v_prime(self, z: C) -> C {
        match self {
            PotentialId::Free => ZERO,
            PotentialId::Harmonic => z,
            PotentialId::DoubleWell => 2.0 * z * (z * z - 1.0),
        }
    }

    pub fn v_double_prime(self, z: C) -> C {
        match self {
            PotentialId::Free => ZERO,
            PotentialId::Harmonic => C::new(1.0, 0.0),
            PotentialId::DoubleWell => 6.0 * z * z - 2.0,
        }
    }

    /// Curvature of the exactly-integrated linear part of V'.
    fn omega0_sq(self) -> f64 {
        match self {
            PotentialId::Free => 0.0,
            PotentialId::Harmonic => 1.0,
            PotentialId::DoubleWell => -2.0,
        }
    }

    /// R(z) = V'(z) - w0^2 z, the part handled by the midpoint substep.
    fn remainder(self, z: C) -> C {
        match self {
            PotentialId::Free | PotentialId::Harmonic => ZERO,
            PotentialId::DoubleWell => 2.0 * z * z * z,
        }
    }

    fn has_remainder(self) -> bool {
        matches!(self, PotentialId::DoubleWell)
    }
}

/// A discretized path at flow time u; endpoints stay pinned to bc.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub samples: Vec<C>,
    pub u: f64,
    pub bc: BoundaryData,
}

const MIN_INTERIOR: usize = 32;
const MAX_ABS: f64 = 1e8;

impl FlowState {
    /// Wrap a sample vector, checking the pinned endpoints.
    pub fn new(samples: Vec<C>, bc: BoundaryData) -> Result<Self> {
        if samples.len() < MIN_INTERIOR + 2 {
            return Err(Error::Config(format!(
                "flow grid needs at least {MIN_INTERIOR} interior points, got {}",
                samples.len().saturating_sub(2)
            )));
        }
        let scale = 1.0 + bc.xi.norm().max(bc.xf.norm());
        let first = samples[0];
        let last = *samples.last().unwrap();
        if (first - bc.xi).norm() > 1e-9 * scale || (last - bc.xf).norm() > 1e-9 * scale {
            return Err(Error::Config(
                "flow state endpoints must match the boundary data".into(),
            ));
        }
        Ok(FlowState { samples, u: 0.0, bc })
    }

    /// Sample a solved trajectory on a uniform grid of n_total points.
    pub fn from_solution(sol: &ClassicalSolution, n_total: usize) -> Result<Self> {
        let mut samples = Vec::with_capacity(n_total);
        for j in 0..n_total {
            let t = sol.bc.ti + sol.bc.duration() * j as f64 / (n_total - 1) as f64;
            samples.push(sol.z(t)?);
        }
        // Pin the endpoints exactly; z(t) reproduces them to solver
        // tolerance only.
        samples[0] = sol.bc.xi;
        let last = samples.len() - 1;
        samples[last] = sol.bc.xf;
        FlowState::new(samples, sol.bc)
    }
}

/// Step size, count, and the optional Stokes-regulating phase: the flow
/// descends Re(e^{i delta} I), breaking saddle-to-saddle connections at
/// delta != 0 (at the price of an Im I drift proportional to delta).
#[derive(Debug, Clone, Copy)]
pub struct FlowParams {
    pub du: f64,
    pub steps: usize,
    pub stokes_delta: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams { du: 1e-3, steps: 1000, stokes_delta: 0.0 }
    }
}

/// Final state plus the action recorded after every step.
#[derive(Debug, Clone)]
pub struct FlowReport {
    pub state: FlowState,
    /// (u, discrete action) trace, starting at the initial state.
    pub trace: Vec<(f64, C)>,
}

/// Action of a sampled path in the same discretization the flow
/// descends: link kinetic terms and a trapezoid potential sum.
pub fn discrete_action(samples: &[C], bc: &BoundaryData, potential: PotentialId) -> C {
    let n_total = samples.len();
    let h = bc.duration() / (n_total - 1) as f64;
    let eps = bc.time.epsilon();
    let mut kin = ZERO;
    for j in 0..n_total - 1 {
        let dz = samples[j + 1] - samples[j];
        kin += dz * dz;
    }
    let mut pot = 0.5 * (potential.v(samples[0]) + potential.v(samples[n_total - 1]));
    for &z in &samples[1..n_total - 1] {
        pot += potential.v(z);
    }
    I * (kin / (2.0 * eps * h) - eps * h * pot)
}

/// Type-I discrete sine transform on n interior points, dense O(n^2).
struct Dst {
    n: usize,
    table: Vec<f64>,
}

impl Dst {
    fn new(n: usize) -> Self {
        let mut table = vec![0.0; n * n];
        let step = std::f64::consts::PI / (n + 1) as f64;
        for l in 1..=n {
            for j in 1..=n {
                table[(l - 1) * n + (j - 1)] = (step * (l * j) as f64).sin();
            }
        }
        Dst { n, table }
    }

    fn forward(&self, w: &[C]) -> Vec<C> {
        let mut out = vec![ZERO; self.n];
        for l in 0..self.n {
            let row = &self.table[l * self.n..(l + 1) * self.n];
            let mut acc = ZERO;
            for (s, z) in row.iter().zip(w) {
                acc += *s * *z;
            }
            out[l] = acc;
        }
        out
    }

    fn inverse(&self, modes: &[C]) -> Vec<C> {
        let scale = 2.0 / (self.n + 1) as f64;
        let mut out = vec![ZERO; self.n];
        for j in 0..self.n {
            let mut acc = ZERO;
            for l in 0..self.n {
                acc += self.table[l * self.n + j] * modes[l];
            }
            out[j] = scale * acc;
        }
        out
    }
}

/// Clear mode amplitudes below the transform round-off floor.
fn floor_filter(modes: &mut [C]) {
    let max = modes.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let floor = 1e-12 * max;
    for z in modes.iter_mut() {
        if z.norm() < floor {
            *z = ZERO;
        }
    }
}

/// Dirichlet eigenvalue of -D2 for sine mode l on n interior points.
fn mode_rate(l: usize, n: usize, h: f64) -> f64 {
    let s = (std::f64::consts::PI * l as f64 / (2.0 * (n + 1) as f64)).sin();
    4.0 * s * s / (h * h)
}

fn boundary_interpolant(bc: &BoundaryData, n_total: usize) -> Vec<C> {
    (0..n_total)
        .map(|j| {
            let frac = j as f64 / (n_total - 1) as f64;
            bc.xi + (bc.xf - bc.xi) * frac
        })
        .collect()
}

/// Integrate the downward flow: Re(e^{i delta} I) decreases, Im I is
/// conserved (exactly for free and harmonic backgrounds, to O(du^2) per
/// unit u for the double well).
pub fn downward_flow(
    initial: &FlowState,
    potential: PotentialId,
    params: &FlowParams,
) -> Result<FlowReport> {
    integrate(initial, potential, params, false)
}

/// Integrate the upward flow (the downward flow of -I): Re I increases.
pub fn upward_flow(
    initial: &FlowState,
    potential: PotentialId,
    params: &FlowParams,
) -> Result<FlowReport> {
    integrate(initial, potential, params, true)
}

fn integrate(
    initial: &FlowState,
    potential: PotentialId,
    params: &FlowParams,
    upward: bool,
) -> Result<FlowReport> {
    if !(params.du > 0.0 && params.du.is_finite()) {
        return Err(Error::Config(format!("flow step must be positive, got {}", params.du)));
    }
    let n_total = initial.samples.len();
    if n_total < MIN_INTERIOR + 2 {
        return Err(Error::Config(format!(
            "flow grid needs at least {MIN_INTERIOR} interior points, got {}",
            n_total.saturating_sub(2)
        )));
    }
    let n = n_total - 2;
    let bc = initial.bc;
    let h = bc.duration() / (n + 1) as f64;
    let eps = bc.time.epsilon();
    let ec = eps.conj();
    let sign = if upward { -1.0 } else { 1.0 };
    let rot = sign * (-I * params.stokes_delta).exp();
    let du = params.du;

    let dst = Dst::new(n);
    let lin = boundary_interpolant(&bc, n_total);
    let lin_modes = dst.forward(&lin[1..=n]);
    let w0 = potential.omega0_sq();

    // Per-mode closed-form step data for dm/du = g conj(m) + c.
    let mut zp = vec![ZERO; n];
    let mut ch = vec![0.0f64; n];
    let mut sh = vec![ZERO; n];
    let mut degenerate = vec![false; n];
    let mut gamma_c = vec![(ZERO, ZERO); n];
    for l in 1..=n {
        let mu = mode_rate(l, n, h);
        let g = rot * I * (mu / ec - ec * w0);
        let c = rot * (-I) * ec * w0 * lin_modes[l - 1].conj();
        let lam = g.norm();
        gamma_c[l - 1] = (g, c);
        if lam < 1e-12 {
            degenerate[l - 1] = true;
            continue;
        }
        if w0 != 0.0 {
            zp[l - 1] = -c.conj() / g.conj();
        }
        ch[l - 1] = (lam * du).cosh();
        sh[l - 1] = (lam * du).sinh() * (g / lam);
    }

    let step_modes = |modes: &mut [C]| {
        for l in 0..n {
            if degenerate[l] {
                let (g, c) = gamma_c[l];
                modes[l] += (g * modes[l].conj() + c) * du;
            } else {
                let eta = modes[l] - zp[l];
                modes[l] = if eta == ZERO {
                    zp[l]
                } else {
                    zp[l] + ch[l] * eta + sh[l] * eta.conj()
                };
            }
        }
    };

    let half_remainder = |interior: &mut [C]| {
        let f = |z: C| rot * (-I) * ec * potential.remainder(z).conj();
        let tau = 0.5 * du;
        for z in interior.iter_mut() {
            let mid = *z + 0.5 * tau * f(*z);
            *z += tau * f(mid);
        }
    };

    let mono_phase = (I * params.stokes_delta).exp();
    let act0 = discrete_action(&initial.samples, &bc, potential);
    let mut trace = Vec::with_capacity(params.steps + 1);
    trace.push((initial.u, act0));
    let mut mono_prev = (mono_phase * act0).re;

    let guard = |u: f64, samples: &[C], act: C, mono_prev: &mut f64| -> Result<()> {
        let max_abs = samples.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if !(max_abs.is_finite() && act.is_finite()) || max_abs > MAX_ABS {
            return Err(Error::FlowDiverged(max_abs));
        }
        let mono = (mono_phase * act).re;
        let dre = sign * (mono - *mono_prev);
        if dre > 1e-6 * (1.0 + mono_prev.abs()) {
            return Err(Error::FlowUnstable { u, dre });
        }
        *mono_prev = mono;
        Ok(())
    };

    let mut samples = initial.samples.clone();
    if potential.has_remainder() {
        for k in 1..=params.steps {
            half_remainder(&mut samples[1..=n]);
            let w: Vec<C> = samples[1..=n]
                .iter()
                .zip(&lin[1..=n])
                .map(|(z, l)| z - l)
                .collect();
            let mut modes = dst.forward(&w);
            floor_filter(&mut modes);
            step_modes(&mut modes);
            for (j, wj) in dst.inverse(&modes).into_iter().enumerate() {
                samples[j + 1] = lin[j + 1] + wj;
            }
            half_remainder(&mut samples[1..=n]);
            let u = initial.u + k as f64 * du;
            let act = discrete_action(&samples, &bc, potential);
            guard(u, &samples, act, &mut mono_prev)?;
            trace.push((u, act));
        }
    } else {
        // No remainder: stay in mode space for the whole flow, so modes
        // never leak into each other through transform round-off.
        let w: Vec<C> = samples[1..=n]
            .iter()
            .zip(&lin[1..=n])
            .map(|(z, l)| z - l)
            .collect();
        let mut modes = dst.forward(&w);
        floor_filter(&mut modes);
        for k in 1..=params.steps {
            step_modes(&mut modes);
            for (j, wj) in dst.inverse(&modes).into_iter().enumerate() {
                samples[j + 1] = lin[j + 1] + wj;
            }
            let u = initial.u + k as f64 * du;
            let act = discrete_action(&samples, &bc, potential);
            guard(u, &samples, act, &mut mono_prev)?;
            trace.push((u, act));
        }
    }

    let u_final = initial.u + params.steps as f64 * du;
    Ok(FlowReport {
        state: FlowState { samples, u: u_final, bc },
        trace,
    })
}

/// One eigenpair of the linearized flow operator. The eigenfunction is
/// stored on the full grid (endpoint zeros included), normalized so
/// h Sum |f|^2 = 1.
#[derive(Debug, Clone)]
pub struct SpectralPair {
    pub lambda: f64,
    pub f: Vec<C>,
}

impl SpectralPair {
    /// Near-zero eigenvalues signal a Stokes-degenerate direction.
    pub fn is_stokes_degenerate(&self, tol: f64) -> bool {
        self.lambda.abs() < tol
    }
}

/// Spectrum of the linearized flow around a solved double-well saddle,
/// V''(conj z) = 6 conj(z)^2 - 2 sampled along the trajectory.
pub fn linearized_spectrum(sol: &ClassicalSolution, grid_n: usize) -> Result<Vec<SpectralPair>> {
    let bc = sol.bc;
    let mut vpp = Vec::with_capacity(grid_n);
    for j in 1..=grid_n {
        let t = bc.ti + bc.duration() * j as f64 / (grid_n + 1) as f64;
        let zc = sol.z(t)?.conj();
        vpp.push(6.0 * zc * zc - 2.0);
    }
    spectrum_from_profile(&vpp, bc.duration() / (grid_n + 1) as f64)
}

/// Spectrum of the linearized flow for a constant curvature V''
/// (0 for the free particle, 1 for the harmonic oscillator).
pub fn constant_curvature_spectrum(
    vpp: C,
    bc: &BoundaryData,
    grid_n: usize,
) -> Result<Vec<SpectralPair>> {
    let profile = vec![vpp; grid_n];
    spectrum_from_profile(&profile, bc.duration() / (grid_n + 1) as f64)
}

fn spectrum_from_profile(vpp: &[C], h: f64) -> Result<Vec<SpectralPair>> {
    let n = vpp.len();
    if n < 64 {
        return Err(Error::Config(format!(
            "spectrum grid needs at least 64 interior points, got {n}"
        )));
    }
    let inv_h2 = 1.0 / (h * h);
    let mut mat = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for j in 0..n {
        let om2 = vpp[j].re;
        let g2 = vpp[j].im;
        mat[(j, j)] = 2.0 * inv_h2 - om2;
        mat[(n + j, n + j)] = -(2.0 * inv_h2 - om2);
        mat[(j, n + j)] = -g2;
        mat[(n + j, j)] = -g2;
        if j + 1 < n {
            mat[(j, j + 1)] = -inv_h2;
            mat[(j + 1, j)] = -inv_h2;
            mat[(n + j, n + j + 1)] = inv_h2;
            mat[(n + j + 1, n + j)] = inv_h2;
        }
    }
    let es = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| es.eigenvalues[a].total_cmp(&es.eigenvalues[b]));
    let scale = 1.0 / h.sqrt();
    let mut pairs = Vec::with_capacity(2 * n);
    for &k in &order {
        let col = es.eigenvectors.column(k);
        let mut f = Vec::with_capacity(n + 2);
        f.push(ZERO);
        for j in 0..n {
            f.push(scale * C::new(col[j], col[n + j]));
        }
        f.push(ZERO);
        pairs.push(SpectralPair { lambda: es.eigenvalues[k], f });
    }
    Ok(pairs)
}

/// Descent-direction basis {e^{i pi/4} f : lambda > 0}, ascending in
/// lambda; applying the pairing map f -> -i f yields the ascent basis.
pub fn thimble_tangent_basis(spectrum: &[SpectralPair]) -> Vec<Vec<C>> {
    let phase = (I * std::f64::consts::FRAC_PI_4).exp();
    spectrum
        .iter()
        .filter(|p| p.lambda > 0.0)
        .map(|p| p.f.iter().map(|&z| phase * z).collect())
        .collect()
}

/// Quadratic action along the descent directions: I[z_s] - Sum
/// lambda_k a_k^2 / 2, with a_k the coefficient of the k-th positive
/// mode (ascending).
pub fn gaussian_action_expansion(base_action: C, spectrum: &[SpectralPair], a: &[f64]) -> C {
    let mut act = base_action;
    for (pair, &ak) in spectrum.iter().filter(|p| p.lambda > 0.0).zip(a) {
        act -= 0.5 * pair.lambda * ak * ak;
    }
    act
}
