//! Exact Feynman kernels for the three solvable systems: the free
//! particle on a line, the free particle on a circle with a theta term,
//! and the harmonic oscillator.
//!
//! Conventions (mass 1, duration T = tf - ti):
//!
//!     K_free = sqrt(1/(2 pi i hbar T)) exp( i (xf-xi)^2 / (2 hbar T) ),
//!     K_circle = Sum_w e^{-i theta w} K_free(xf - xi + 2 pi w),
//!     K_ho = sqrt(1/(2 pi i hbar |sin T|)) exp( I_cl/hbar - i pi nu/2 ),
//!     I_cl = i [ (xi^2 + xf^2) cos T - 2 xi xf ] / (2 sin T),
//!
//! with nu the Maslov index, the largest non-negative integer below
//! T/pi. Square roots are principal. The winding sum converges only as
//! an Abel limit at real T, so each term is evaluated at the shifted
//! time T - i delta with delta = 0.02. The shift is additive rather
//! than multiplicative so that every term still solves the Schroedinger
//! equation in (x, T) exactly; the regulated sum has a Gaussian tail in
//! w, |term| ~ exp(-delta (2 pi w)^2 / (2 hbar (T^2 + delta^2))), and
//! agrees with the twisted momentum representation
//!
//!     K_circle = (1/2 pi) Sum_n e^{ i (n+a) (xf-xi) - i hbar (n+a)^2 T/2 },
//!
//! a = theta/(2 pi), regulated the same way. Wave-packet propagation
//! needs no regulator: the mode sum against packet coefficients is
//! absolutely convergent.
//!
//! The Wick family interpolates the free kernel along t = -i e^{i phi} s:
//! the heat kernel at phi = 0 reaches the real-time kernel at phi =
//! pi/2, with the Gaussian fluctuation basis rotated by e^{i phi/2}.

use crate::flow::PotentialId;
use crate::num::{adaptive_simpson, C, I, ONE, ZERO};
use crate::saddles::BoundaryData;
use crate::{Error, Result};

const TAU: f64 = 2.0 * std::f64::consts::PI;
const CAUSTIC_WINDOW: f64 = 1e-6;
/// Absolute imaginary-time shift T - i*delta regulating the winding and
/// momentum sums. An absolute shift keeps every term an exact solution
/// of the Schroedinger equation in (x, T), because d(T - i*delta)/dT = 1;
/// a multiplicative shift T(1 - i*delta) would leave a residual of order
/// delta times the kinetic term, which no choice of delta makes small
/// uniformly over the retained modes.
const CIRCLE_DELTA: f64 = 2e-2;

/// Inputs shared by the kernel evaluators. `theta` matters for the
/// circle, `phi` for the Wick family, `w_max` truncates the winding sum
/// (0 picks the automatic window with tail below 1e-12).
#[derive(Debug, Clone, Copy)]
pub struct KernelParams {
    pub xi: f64,
    pub xf: f64,
    pub t: f64,
    pub hbar: f64,
    pub theta: f64,
    pub w_max: usize,
    pub phi: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            xi: 0.0,
            xf: 0.0,
            t: 1.0,
            hbar: 1.0,
            theta: 0.0,
            w_max: 0,
            phi: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl KernelParams {
    fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::Config(format!("duration must be positive, got {}", self.t)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::Config(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.xi.is_finite() && self.xf.is_finite() && self.theta.is_finite()) {
            return Err(Error::Config("kernel endpoints must be finite".into()));
        }
        Ok(())
    }
}

/// A kernel evaluation: the amplitude, the classical action I = i S of
/// the dominant saddle, and the Maslov index entering e^{-i pi nu/2}.
#[derive(Debug, Clone, Copy)]
pub struct KernelValue {
    pub amplitude: C,
    pub classical_action: C,
    pub maslov: i32,
}

/// Principal sqrt(1/(2 pi i hbar tau)) for complex effective duration.
pub fn fresnel_prefactor(hbar: f64, tau: C) -> C {
    (TAU * I * hbar * tau).sqrt().inv()
}

/// Free-particle kernel on the line.
pub fn free_kernel(p: &KernelParams) -> Result<KernelValue> {
    p.validate()?;
    let dx = p.xf - p.xi;
    let action = I * dx * dx / (2.0 * p.t);
    Ok(KernelValue {
        amplitude: fresnel_prefactor(p.hbar, C::new(p.t, 0.0)) * (action / p.hbar).exp(),
        classical_action: action,
        maslov: 0,
    })
}

/// One regulated winding term at displacement d.
fn winding_term(hbar: f64, t_reg: C, d: f64) -> C {
    fresnel_prefactor(hbar, t_reg) * (I * d * d / (2.0 * hbar * t_reg)).exp()
}

/// Circle kernel with theta term: winding sum with phases e^{-i theta w},
/// so K(xf + 2 pi) = e^{i theta} K(xf). Returns the kernel value and the
/// truncation-tail estimate.
pub fn circle_kernel(p: &KernelParams) -> Result<(KernelValue, f64)> {
    p.validate()?;
    // Reduce the displacement to (-pi, pi]; the winding index w = u - m
    // keeps the theta phases, and the reduced displacements r + 2 pi u
    // are free of the phase jitter a large unreduced dx would cause in
    // the far, rapidly oscillating terms.
    let dx = p.xf - p.xi;
    let m = (dx / TAU).round();
    let r = dx - TAU * m;
    let t_reg = C::new(p.t, -CIRCLE_DELTA);
    // Window around the dominant winding; the automatic width puts the
    // regulated Gaussian tail below 1e-12 of the term scale.
    let width = if p.w_max > 0 {
        p.w_max as i64
    } else {
        let scale = 2.0 * p.hbar * (p.t * p.t + CIRCLE_DELTA * CIRCLE_DELTA);
        let spread = (scale * 30.0 / CIRCLE_DELTA).sqrt();
        (spread / TAU).ceil() as i64 + 2
    };
    let mut sum = ZERO;
    for u in -width..=width {
        let d = r + TAU * u as f64;
        let phase = (-I * p.theta * u as f64).exp();
        sum += phase * winding_term(p.hbar, t_reg, d);
    }
    sum *= (I * p.theta * m).exp();
    let edge = |u: i64| winding_term(p.hbar, t_reg, r + TAU * u as f64).norm();
    let tail = 2.0 * (edge(width + 1) + edge(-width - 1));

    let action = I * r * r / (2.0 * p.t) + I * p.hbar * p.theta * m;
    Ok((
        KernelValue { amplitude: sum, classical_action: action, maslov: 0 },
        tail,
    ))
}

/// Twisted momentum representation of the circle kernel, regulated the
/// same way as the winding sum.
pub fn circle_kernel_momentum(p: &KernelParams) -> Result<KernelValue> {
    p.validate()?;
    let dx = p.xf - p.xi;
    let a = p.theta / TAU;
    let t_reg = C::new(p.t, -CIRCLE_DELTA);
    let n_max = (2.0 * 30.0 / (p.hbar * CIRCLE_DELTA)).sqrt().ceil() as i64 + 2;
    let mut sum = ZERO;
    for n in -n_max..=n_max {
        let k = n as f64 + a;
        sum += (I * k * dx - I * p.hbar * k * k * t_reg / 2.0).exp();
    }
    sum /= TAU;
    let w_center = (-dx / TAU).round() as i64;
    let d_dom = dx + TAU * w_center as f64;
    let action = I * d_dom * d_dom / (2.0 * p.t) - I * p.hbar * p.theta * w_center as f64;
    Ok(KernelValue { amplitude: sum, classical_action: action, maslov: 0 })
}

/// Maslov index: the largest non-negative integer strictly below T/pi.
pub fn maslov_index(t: f64) -> Result<i32> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Config(format!("duration must be positive, got {t}")));
    }
    let ratio = t / std::f64::consts::PI;
    if (ratio - ratio.round()).abs() * std::f64::consts::PI <= CAUSTIC_WINDOW {
        return Err(Error::Caustic(t));
    }
    Ok(ratio.floor() as i32)
}

/// Harmonic-oscillator kernel (Mehler form with the Maslov phase).
pub fn harmonic_kernel(p: &KernelParams) -> Result<KernelValue> {
    p.validate()?;
    let nu = maslov_index(p.t)?;
    let s = p.t.sin();
    let c = p.t.cos();
    let action = I * ((p.xi * p.xi + p.xf * p.xf) * c - 2.0 * p.xi * p.xf) / (2.0 * s);
    let prefactor = fresnel_prefactor(p.hbar, C::new(s.abs(), 0.0));
    let maslov_phase = (-I * std::f64::consts::FRAC_PI_2 * nu as f64).exp();
    Ok(KernelValue {
        amplitude: prefactor * (action / p.hbar).exp() * maslov_phase,
        classical_action: action,
        maslov: nu,
    })
}

/// Free kernel along the Wick family t = -i e^{i phi} s: effective
/// duration tau = e^{i phi} T runs from the heat kernel (phi = 0) to the
/// real-time kernel (phi = pi/2).
pub fn wick_kernel(p: &KernelParams) -> Result<KernelValue> {
    p.validate()?;
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&p.phi) {
        return Err(Error::Config(format!(
            "wick angle must lie in [0, pi/2], got {}",
            p.phi
        )));
    }
    let tau = (I * p.phi).exp() * p.t;
    let dx = p.xf - p.xi;
    let action = -dx * dx / (2.0 * tau);
    Ok(KernelValue {
        // Heat-kernel form sqrt(1/(2 pi hbar tau)) exp(-dx^2/(2 hbar tau)):
        // at phi = pi/2 this is the real-time Fresnel kernel.
        amplitude: (TAU * p.hbar * tau).sqrt().inv() * (action / p.hbar).exp(),
        classical_action: action,
        maslov: 0,
    })
}

/// Phase of the Gaussian fluctuation basis on the Wick thimble.
pub fn wick_thimble_phase(phi: f64) -> C {
    (I * 0.5 * phi).exp()
}

/// Ratio of fluctuation-determinant products, harmonic over free:
/// Prod_{l<=n} (1 - (T/pi l)^2)^{-1/2} with principal roots, which
/// tends to sqrt(T/|sin T|) e^{-i pi nu/2} as n grows.
pub fn gaussian_product_prefactor(system: PotentialId, t: f64, n_modes: usize) -> Result<C> {
    if n_modes == 0 {
        return Err(Error::Config("mode product needs at least one factor".into()));
    }
    match system {
        PotentialId::Free => Ok(ONE),
        PotentialId::Harmonic => {
            let mut prod = ONE;
            for l in 1..=n_modes {
                let x = 1.0 - (t / (std::f64::consts::PI * l as f64)).powi(2);
                prod *= C::new(x, 0.0).sqrt().inv();
            }
            Ok(prod)
        }
        PotentialId::DoubleWell => Err(Error::Config(
            "mode-product prefactor is closed-form only for free and harmonic systems".into(),
        )),
    }
}

/// Discrete classical path for a constant-curvature potential on n
/// interior sites: (D2 z)_j = omega^2' z_j with pinned endpoints, i.e.
/// the stationary point of the discretized action.
fn discrete_classical_path(omega_sq: f64, p: &KernelParams, n: usize) -> Vec<C> {
    let h = p.t / (n + 1) as f64;
    let mut diag = vec![C::new(-2.0 / (h * h) + omega_sq, 0.0); n];
    let off = 1.0 / (h * h);
    let mut rhs = vec![ZERO; n];
    rhs[0] = C::new(-off * p.xi, 0.0);
    rhs[n - 1] += C::new(-off * p.xf, 0.0);
    // Thomas elimination on the constant-coefficient tridiagonal system.
    for j in 1..n {
        let m = off / diag[j - 1];
        diag[j] -= m * off;
        let prev = rhs[j - 1];
        rhs[j] -= m * prev;
    }
    let mut z = vec![ZERO; n + 2];
    z[n] = rhs[n - 1] / diag[n - 1];
    for j in (0..n - 1).rev() {
        z[j + 1] = (rhs[j] - off * z[j + 2]) / diag[j];
    }
    z[0] = C::new(p.xi, 0.0);
    z[n + 1] = C::new(p.xf, 0.0);
    z
}

/// Gradient of the discretized action at a sampled path.
fn discrete_action_gradient(samples: &[C], bc: &BoundaryData, potential: PotentialId) -> Vec<C> {
    let n_total = samples.len();
    let h = bc.duration() / (n_total - 1) as f64;
    let eps = bc.time.epsilon();
    (1..n_total - 1)
        .map(|j| {
            let d2 = (samples[j - 1] - 2.0 * samples[j] + samples[j + 1]) / (h * h);
            -I * h * (d2 / eps + eps * potential.v_prime(samples[j]))
        })
        .collect()
}

/// Quantum-equation-of-motion check on an N-site thimble: centers the
/// Gaussian on the discrete classical path, where every first moment
/// <a_k> vanishes, so <dI/dz_j> reduces to the gradient at the center.
/// Returns max_j |<dI/dz_j>|.
pub fn schwinger_dyson_check(system: PotentialId, n: usize, p: &KernelParams) -> Result<f64> {
    p.validate()?;
    if !(2..=12).contains(&n) {
        return Err(Error::Config(format!("site count must lie in [2, 12], got {n}")));
    }
    let omega_sq = match system {
        PotentialId::Free => 0.0,
        PotentialId::Harmonic => 1.0,
        PotentialId::DoubleWell => {
            return Err(Error::Config(
                "the moment check needs a quadratic action; use free or harmonic".into(),
            ))
        }
    };
    let z = discrete_classical_path(omega_sq, p, n);
    let bc = BoundaryData::new(
        C::new(p.xi, 0.0),
        C::new(p.xf, 0.0),
        0.0,
        p.t,
        crate::saddles::TimeDirection::RealTime,
    )?;
    let grad = discrete_action_gradient(&z, &bc, system);
    Ok(grad.iter().map(|g| g.norm()).fold(0.0f64, f64::max))
}

/// Numerical semigroup composition through the midpoint saddle: the y
/// integral is taken along the stationary-phase descent ray, where the
/// integrand decays as a Gaussian.
pub fn compose_kernels<K>(kernel: K, xi: f64, xf: f64, hbar: f64, quad_coeff: f64) -> Result<C>
where
    K: Fn(f64, C) -> Result<C>,
{
    let y_star = 0.5 * (xi + xf);
    let psi = std::f64::consts::FRAC_PI_4 * quad_coeff.signum();
    let dir = (I * psi).exp();
    let width = (2.0 * hbar / quad_coeff.abs()).sqrt();
    let span = 7.0 * width;
    let f = |s: f64| -> Result<C> {
        let y = C::new(y_star, 0.0) + dir * s;
        kernel(xi, y).and_then(|k1| kernel(xf, y).map(|k2| k1 * k2))
    };
    let q = adaptive_simpson(&f, -span, span, 1e-10, 40)?;
    Ok(dir * q.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::discrete_action;
    use crate::num::{fd4_first, fd4_second};
    use crate::saddles::TimeDirection;

    fn params(xi: f64, xf: f64, t: f64) -> KernelParams {
        KernelParams { xi, xf, t, ..KernelParams::default() }
    }

    /// Schrodinger residual |i hbar dK/dT + (hbar^2/2) d^2K/dxf^2 - V K|
    /// by fourth-order finite differences at step 1e-3.
    fn schrodinger_residual<K>(kernel: K, p: &KernelParams, v_of_x: fn(f64) -> f64) -> f64
    where
        K: Fn(&KernelParams) -> C + Copy,
    {
        let h = 1e-3;
        let kt = fd4_first(|t| kernel(&KernelParams { t, ..*p }), p.t, h);
        let kxx = fd4_second(|xf| kernel(&KernelParams { xf, ..*p }), p.xf, h);
        let k = kernel(p);
        (I * p.hbar * kt + 0.5 * p.hbar * p.hbar * kxx - v_of_x(p.xf) * k).norm()
    }

    #[test]
    fn free_kernel_closed_form() {
        let p = params(0.4, 0.4, 2.0);
        let k = free_kernel(&p).unwrap();
        assert_eq!(k.maslov, 0);
        assert!(k.classical_action.norm() < 1e-15);
        let want = (TAU * 2.0f64).sqrt().recip() * (-I * std::f64::consts::FRAC_PI_4).exp();
        assert!((k.amplitude - want).norm() < 1e-15);

        let p2 = params(-0.3, 1.1, 0.7);
        let k2 = free_kernel(&p2).unwrap();
        let dx = 1.4;
        assert!((k2.classical_action - I * dx * dx / 1.4).norm() < 1e-15);
        assert!((k2.amplitude.norm() - (TAU * 0.7f64).sqrt().recip()).abs() < 1e-15);

        assert!(free_kernel(&params(0.0, 1.0, -1.0)).is_err());
        assert!(free_kernel(&KernelParams { hbar: 0.0, ..p }).is_err());
    }

    #[test]
    fn free_kernel_schrodinger_residual() {
        let p = params(0.3, 0.7, 1.3);
        let r = schrodinger_residual(|p| free_kernel(p).unwrap().amplitude, &p, |_| 0.0);
        assert!(r < 1e-6, "free residual {r}");
    }

    #[test]
    fn free_semigroup() {
        let p = params(-0.2, 0.9, 1.6);
        let half = |xe: f64, y: C| -> Result<C> {
            let dx = C::new(xe, 0.0) - y;
            let t = 0.5 * p.t;
            Ok(fresnel_prefactor(p.hbar, C::new(t, 0.0)) * (I * dx * dx / (2.0 * p.hbar * t)).exp())
        };
        let quad_coeff = 4.0 / p.t;
        let composed = compose_kernels(half, p.xi, p.xf, p.hbar, quad_coeff).unwrap();
        let direct = free_kernel(&p).unwrap().amplitude;
        assert!(
            (composed - direct).norm() < 1e-6,
            "semigroup defect {}",
            (composed - direct).norm()
        );
    }

    #[test]
    fn circle_matches_momentum_representation() {
        for theta in [0.0, std::f64::consts::FRAC_PI_3] {
            let p = KernelParams { theta, ..params(0.2, 1.1, 0.8) };
            let (kw, tail) = circle_kernel(&p).unwrap();
            assert!(tail < 1e-10 * kw.amplitude.norm());
            let km = circle_kernel_momentum(&p).unwrap();
            let diff = (kw.amplitude - km.amplitude).norm() / kw.amplitude.norm();
            assert!(diff < 1e-9, "theta {theta}: representations differ by {diff}");
        }
    }

    #[test]
    fn circle_twist_and_convergence() {
        let theta = std::f64::consts::FRAC_PI_3;
        let p = KernelParams { theta, ..params(0.2, 1.1, 0.8) };
        let (k, _) = circle_kernel(&p).unwrap();
        let shifted = KernelParams { xf: p.xf + TAU, ..p };
        let (ks, _) = circle_kernel(&shifted).unwrap();
        let twist = (I * theta).exp();
        assert!((ks.amplitude - twist * k.amplitude).norm() < 1e-13);

        // Doubling an explicit truncation beyond the automatic window
        // moves the value by no more than the tail estimate.
        let wide = KernelParams { w_max: 8, ..p };
        let wider = KernelParams { w_max: 16, ..p };
        let (ka, tail_a) = circle_kernel(&wide).unwrap();
        let (kb, _) = circle_kernel(&wider).unwrap();
        assert!((ka.amplitude - kb.amplitude).norm() < 1e-12 * ka.amplitude.norm());
        assert!(tail_a < 1e-12);

        // theta = 0, xi = xf: plain sum of displaced Gaussians.
        let p0 = params(0.0, 0.0, 0.8);
        let (k0, _) = circle_kernel(&p0).unwrap();
        let km = circle_kernel_momentum(&p0).unwrap();
        assert!((k0.amplitude - km.amplitude).norm() < 1e-9 * k0.amplitude.norm());
    }

    #[test]
    fn circle_schrodinger_residual() {
        // A fixed window keeps every retained term resolvable by the
        // h = 1e-3 stencil: the w-th term oscillates in T at frequency
        // d^2 / (2 hbar T^2), which the difference quotient tracks only
        // while that frequency stays well below 1/h.
        for theta in [0.0, std::f64::consts::FRAC_PI_3] {
            let p = KernelParams { theta, w_max: 4, ..params(0.2, 0.6, 4.0) };
            let r = schrodinger_residual(|p| circle_kernel(p).unwrap().0.amplitude, &p, |_| 0.0);
            assert!(r < 1e-6, "circle residual {r} at theta {theta}");
        }
    }

    #[test]
    fn maslov_index_values() {
        assert_eq!(maslov_index(3.0).unwrap(), 0);
        assert_eq!(maslov_index(4.0).unwrap(), 1);
        assert_eq!(maslov_index(7.0).unwrap(), 2);
        assert!(matches!(maslov_index(std::f64::consts::PI), Err(Error::Caustic(_))));
        assert!(harmonic_kernel(&params(0.0, 0.0, std::f64::consts::PI)).is_err());
    }

    #[test]
    fn harmonic_kernel_mehler_form() {
        let p = params(0.3, 0.7, 1.0);
        let k = harmonic_kernel(&p).unwrap();
        assert_eq!(k.maslov, 0);
        let s = 1.0f64.sin();
        let c = 1.0f64.cos();
        let act = I * ((0.09 + 0.49) * c - 2.0 * 0.21) / (2.0 * s);
        assert!((k.classical_action - act).norm() < 1e-15);
        let want = (TAU * s).sqrt().recip() * (-I * std::f64::consts::FRAC_PI_4).exp() * act.exp();
        assert!((k.amplitude - want).norm() < 1e-14);

        // Short times approach the free action to O(T).
        let ps = params(0.3, 0.7, 1e-3);
        let kh = harmonic_kernel(&ps).unwrap();
        let kf = free_kernel(&ps).unwrap();
        assert!((kh.classical_action - kf.classical_action).norm() < 2e-4);
    }

    #[test]
    fn harmonic_schrodinger_residual() {
        for t in [1.3, 4.0] {
            let p = params(0.3, 0.7, t);
            let r = schrodinger_residual(
                |p| harmonic_kernel(p).unwrap().amplitude,
                &p,
                |x| 0.5 * x * x,
            );
            assert!(r < 1e-6, "harmonic residual {r} at T = {t}");
        }
    }

    #[test]
    fn harmonic_maslov_jump_across_caustic() {
        let delta = 0.01;
        let lo = harmonic_kernel(&params(0.0, 0.0, std::f64::consts::PI - delta)).unwrap();
        let hi = harmonic_kernel(&params(0.0, 0.0, std::f64::consts::PI + delta)).unwrap();
        assert_eq!(lo.maslov, 0);
        assert_eq!(hi.maslov, 1);
        // At xi = xf = 0 the classical action vanishes, so the phase
        // jump isolates the Maslov factor.
        let jump = hi.amplitude.arg() - lo.amplitude.arg();
        let wrapped = (jump + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
        assert!(
            (wrapped + std::f64::consts::FRAC_PI_2).abs() < 1e-4,
            "phase jump {wrapped}"
        );
    }

    #[test]
    fn harmonic_semigroup_accumulates_maslov() {
        for t in [1.0, 4.0] {
            let p = params(0.25, -0.4, t);
            let half_t = 0.5 * t;
            let half = |xe: f64, y: C| -> Result<C> {
                let s = half_t.sin();
                let c = half_t.cos();
                let xe = C::new(xe, 0.0);
                let act = I * ((xe * xe + y * y) * c - 2.0 * xe * y) / (2.0 * s);
                Ok(fresnel_prefactor(p.hbar, C::new(s, 0.0)) * (act / p.hbar).exp())
            };
            let quad_coeff = 2.0 * (half_t.cos() / half_t.sin());
            let composed = compose_kernels(half, p.xi, p.xf, p.hbar, quad_coeff).unwrap();
            let direct = harmonic_kernel(&p).unwrap().amplitude;
            assert!(
                (composed - direct).norm() < 1e-6,
                "T = {t}: semigroup defect {}",
                (composed - direct).norm()
            );
        }
    }

    #[test]
    fn wick_kernel_interpolates_heat_to_fresnel() {
        let p = KernelParams { phi: 0.0, ..params(-0.3, 0.5, 1.2) };
        let k0 = wick_kernel(&p).unwrap();
        assert!(k0.amplitude.im.abs() < 1e-15);
        assert!(k0.amplitude.re > 0.0);
        let heat = (TAU * 1.2f64).sqrt().recip() * (-0.64f64 / 2.4).exp();
        assert!((k0.amplitude.re - heat).abs() < 1e-15);

        let p2 = KernelParams { phi: std::f64::consts::FRAC_PI_2, ..p };
        let k2 = wick_kernel(&p2).unwrap();
        let free = free_kernel(&p2).unwrap();
        assert!((k2.amplitude - free.amplitude).norm() < 1e-14);

        let mut prev = k0.amplitude;
        for j in 1..=100 {
            let phi = std::f64::consts::FRAC_PI_2 * j as f64 / 100.0;
            let k = wick_kernel(&KernelParams { phi, ..p }).unwrap();
            assert!(k.amplitude.is_finite());
            assert!((k.amplitude - prev).norm() < 0.05 * prev.norm().max(0.05));
            prev = k.amplitude;
        }

        assert!(wick_kernel(&KernelParams { phi: 2.0, ..p }).is_err());
    }

    #[test]
    fn wick_thimble_phase_makes_action_descend() {
        for phi in [0.0, 0.3, std::f64::consts::FRAC_PI_2] {
            let bc = BoundaryData::new(
                C::new(-0.3, 0.0),
                C::new(0.5, 0.0),
                0.0,
                1.2,
                TimeDirection::WickAngle(phi),
            )
            .unwrap();
            let n_total = 130;
            let base: Vec<C> = (0..n_total)
                .map(|j| {
                    let f = j as f64 / (n_total - 1) as f64;
                    bc.xi + (bc.xf - bc.xi) * f
                })
                .collect();
            let mut perturbed = base.clone();
            for j in 1..n_total - 1 {
                let s = (std::f64::consts::PI * j as f64 / (n_total - 1) as f64).sin();
                perturbed[j] += 0.05 * wick_thimble_phase(phi) * s;
            }
            let da = discrete_action(&perturbed, &bc, PotentialId::Free)
                - discrete_action(&base, &bc, PotentialId::Free);
            assert!(da.re < 0.0, "phi {phi}: action rose by {}", da.re);
            assert!(da.im.abs() < 1e-12 * da.norm(), "phi {phi}: drift {}", da.im);
        }
    }

    #[test]
    fn gaussian_product_tracks_closed_form() {
        let free = gaussian_product_prefactor(PotentialId::Free, 1.0, 100).unwrap();
        assert_eq!(free, ONE);

        let t = 1.0;
        let prod = gaussian_product_prefactor(PotentialId::Harmonic, t, 10_000).unwrap();
        let want = (t / t.sin().abs()).sqrt();
        assert!((prod.norm() - want).abs() < 1e-3);
        assert!(prod.im.abs() < 1e-12);

        let t4 = 4.0;
        let prod4 = gaussian_product_prefactor(PotentialId::Harmonic, t4, 10_000).unwrap();
        let want4 = (t4 / t4.sin().abs()).sqrt();
        assert!((prod4.norm() - want4).abs() < 2e-3 * want4);
        // Exactly one flipped factor (l = 1): the phase is -pi/2.
        assert!((prod4.arg() + std::f64::consts::FRAC_PI_2).abs() < 1e-12);

        assert!(gaussian_product_prefactor(PotentialId::DoubleWell, 1.0, 10).is_err());
        assert!(gaussian_product_prefactor(PotentialId::Harmonic, 1.0, 0).is_err());
    }

    #[test]
    fn schwinger_dyson_residuals() {
        let p = params(0.2, -0.5, 4.0);
        let free4 = schwinger_dyson_check(PotentialId::Free, 4, &p).unwrap();
        assert!(free4 < 1e-12, "free N=4 residual {free4}");
        let ho8 = schwinger_dyson_check(PotentialId::Harmonic, 8, &p).unwrap();
        assert!(ho8 < 1e-10, "harmonic N=8 residual {ho8}");
        for n in 2..=12 {
            for system in [PotentialId::Free, PotentialId::Harmonic] {
                let r = schwinger_dyson_check(system, n, &p).unwrap();
                assert!(r < 1e-10, "{system:?} N={n} residual {r}");
            }
        }
        assert!(schwinger_dyson_check(PotentialId::DoubleWell, 4, &p).is_err());
        assert!(schwinger_dyson_check(PotentialId::Free, 13, &p).is_err());
    }

    #[test]
    fn thimble_shift_invariance() {
        // Shifting the Gaussian contour by eps*v leaves the partition
        // function invariant: the quadratic completion cancels exactly.
        let p = params(0.2, -0.5, 4.0);
        let n = 8;
        let h = p.t / (n + 1) as f64;
        let mut hmat = nalgebra::DMatrix::<C>::zeros(n, n);
        for j in 0..n {
            hmat[(j, j)] = -I * h * (-2.0 / (h * h) + 1.0);
            if j + 1 < n {
                hmat[(j, j + 1)] = -I * h / (h * h);
                hmat[(j + 1, j)] = -I * h / (h * h);
            }
        }
        let v = nalgebra::DVector::<C>::from_element(n, ONE);
        let hv = &hmat * &v;
        let vhv: C = v.iter().zip(hv.iter()).map(|(a, b)| *a * *b).sum();
        // Decompose v over the eigenbasis of (D2 + 1) to sum the
        // completion terms sum_k (f_k^T H v)^2 / (f_k^T H f_k).
        let mut amat = nalgebra::DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            amat[(j, j)] = -2.0 / (h * h) + 1.0;
            if j + 1 < n {
                amat[(j, j + 1)] = 1.0 / (h * h);
                amat[(j + 1, j)] = 1.0 / (h * h);
            }
        }
        let es = nalgebra::SymmetricEigen::new(amat);
        let mut completion = ZERO;
        for k in 0..n {
            let f = es.eigenvectors.column(k);
            let fv: C = f.iter().zip(v.iter()).map(|(a, b)| *a * *b).sum();
            let fhf = -I * h * es.eigenvalues[k];
            completion += fv * fv * fhf;
        }
        let eps = 1e-3;
        let hbar = 1.0;
        let log_ratio = eps * eps / (2.0 * hbar) * (vhv - completion);
        assert!(
            log_ratio.norm() < 1e-10,
            "shift changes log Z by {log_ratio}"
        );
    }

    #[test]
    fn packet_norm_is_preserved() {
        let hbar = 1.0;
        let sigma = 1.0;
        let k0 = 0.7;
        let packet = |y: f64| -> C {
            let gauss = (-(y * y) / (2.0 * sigma * sigma)).exp();
            (std::f64::consts::PI * sigma * sigma).powf(-0.25) * gauss * (I * k0 * y).exp()
        };
        let t = 1.1;

        for system in [PotentialId::Free, PotentialId::Harmonic] {
            let kern = |x: f64, y: f64| -> C {
                let p = params(y, x, t);
                match system {
                    PotentialId::Free => free_kernel(&p).unwrap().amplitude,
                    PotentialId::Harmonic => harmonic_kernel(&p).unwrap().amplitude,
                    PotentialId::DoubleWell => unreachable!(),
                }
            };
            let psi_t = |x: f64| -> C {
                adaptive_simpson(&|y: f64| Ok(kern(x, y) * packet(y)), -9.0, 9.0, 1e-9, 32)
                    .unwrap()
                    .value
            };
            let norm = adaptive_simpson(
                &|x: f64| Ok(C::new(psi_t(x).norm_sqr(), 0.0)),
                -10.0,
                10.0,
                1e-7,
                28,
            )
            .unwrap()
            .value
            .re;
            assert!(
                (norm - 1.0).abs() < 1e-6,
                "{system:?}: norm after propagation {norm}"
            );
        }

        // Circle: propagate in the twisted momentum basis, where the
        // packet sum is absolutely convergent without a regulator.
        let a = std::f64::consts::FRAC_PI_3 / TAU;
        let wrapped = |x: f64| -> C {
            let mut s = ZERO;
            for w in -6..=6 {
                let y = x + TAU * w as f64 - std::f64::consts::PI;
                s += (-(y * y) / (2.0 * 0.3 * 0.3)).exp() * (I * k0 * y).exp();
            }
            s
        };
        let grid_n = 512;
        let coeff = |n: i64| -> C {
            let mut acc = ZERO;
            for j in 0..grid_n {
                let x = TAU * j as f64 / grid_n as f64;
                acc += wrapped(x) * (-I * (n as f64 + a) * x).exp();
            }
            acc / grid_n as f64
        };
        let mut norm0 = 0.0;
        let mut norm_t = 0.0;
        for n in -40..=40 {
            let c = coeff(n);
            let k = n as f64 + a;
            let evolved = c * (-I * hbar * k * k * t / 2.0).exp();
            norm0 += TAU * c.norm_sqr();
            norm_t += TAU * evolved.norm_sqr();
        }
        assert!(
            ((norm_t - norm0) / norm0).abs() < 1e-12,
            "circle norm drift {}",
            (norm_t - norm0) / norm0
        );
    }
}
