//! Boundary residual R(xi) whose roots are the saddle moduli.
//!
//! Writing the trajectory as z(t) = A sd(epsilon (t - ti)/xi + u_i | m)
//! with m = 1/2 + xi^2 and A = sigma k k'/xi, the endpoint conditions and
//! the winding prescription for label (n, m) collapse to one equation,
//!
//!     R(xi) = n w1 + m w3 + (xi/2) [ (-1)^{n+m} u_f - u_i ] - T_c/2 = 0,
//!
//!     w1 = xi K(1/2 + xi^2),   w3 = i xi K(1/2 - xi^2),
//!     u_i = sd^{-1}(x_i / A),  u_f = sd^{-1}(x_f / A),
//!
//! with principal inverses and one-sided complete integrals. The half
//! period terms carry the winding; the u-terms carry the endpoint data.
//! Two structural shortcuts keep R analytic where the generic formula
//! would touch branch cuts: both endpoint terms vanish identically for
//! zero endpoints, and for antisymmetric data x_i = -x_f they cancel
//! whenever n + m is odd (the sign flip across the winding matches the
//! endpoint reflection). In particular labels (n, 0) have R independent
//! of K(1/2 - xi^2), hence analytic across the imaginary axis where the
//! Euclidean instanton roots live.

use crate::elliptic::{complete_k_unchecked, inv_sd, BranchedModulus};
use crate::num::{C, I};
use crate::saddles::{BoundaryData, SaddleLabel};
use crate::Result;

/// Residual scale: roots are accepted when |R| < RES_TOL * max(1, |T_c|).
pub(crate) const RES_TOL: f64 = 1e-12;

/// Evaluate the winding residual at `xi` with amplitude sign `sigma`.
pub(crate) fn residual_sigma(
    xi_var: C,
    label: SaddleLabel,
    bc: &BoundaryData,
    sigma: f64,
) -> Result<C> {
    let msq = C::new(0.5, 0.0) + xi_var * xi_var;
    let tc = bc.complex_duration();
    let mut r = -0.5 * tc;
    if label.n != 0 {
        r += label.n as f64 * xi_var * complete_k_unchecked(msq);
    }
    if label.m != 0 {
        r += label.m as f64 * I * xi_var * complete_k_unchecked(C::new(1.0, 0.0) - msq);
    }
    if let Some(sign) = endpoint_sign(label, bc) {
        let k = msq.sqrt();
        let kp = (C::new(1.0, 0.0) - msq).sqrt();
        let a = sigma * k * kp / xi_var;
        let bm = BranchedModulus::new(msq);
        let ui = inv_sd(bc.xi / a, &bm)?;
        let uf = inv_sd(bc.xf / a, &bm)?;
        r += 0.5 * xi_var * (sign * uf - ui);
    }
    Ok(r)
}

/// Whether the endpoint terms are structurally present; `Some(sign)`
/// carries (-1)^{n+m}.
pub(crate) fn endpoint_sign(label: SaddleLabel, bc: &BoundaryData) -> Option<f64> {
    let scale = 1.0 + bc.xi.norm().max(bc.xf.norm());
    if bc.xi.norm() < 1e-14 * scale && bc.xf.norm() < 1e-14 * scale {
        return None;
    }
    let odd = (label.n + label.m).rem_euclid(2) == 1;
    if odd && (bc.xi + bc.xf).norm() < 1e-14 * scale {
        return None;
    }
    Some(if odd { -1.0 } else { 1.0 })
}

/// Winding residual of the two-point boundary problem at modulus `xi_var`,
/// with the principal (sigma = +1) amplitude branch. Vanishes exactly on
/// saddle moduli; analytic in `xi_var` away from the half-period branch
/// rays, so Newton iteration on it is well posed.
pub fn boundary_residual(xi_var: C, label: SaddleLabel, bc: &BoundaryData) -> Result<C> {
    residual_sigma(xi_var, label, bc, 1.0)
}

/// Residual and a central-difference derivative along the radial
/// direction (R is analytic, so the directional quotient is the complex
/// derivative).
pub(crate) fn residual_and_slope(
    xi_var: C,
    label: SaddleLabel,
    bc: &BoundaryData,
    sigma: f64,
) -> Result<(C, C)> {
    let r = residual_sigma(xi_var, label, bc, sigma)?;
    let dir = if xi_var.norm() > 0.0 {
        xi_var / xi_var.norm()
    } else {
        C::new(1.0, 0.0)
    };
    let h = 1e-6 * xi_var.norm().max(1e-3);
    let rp = residual_sigma(xi_var + h * dir, label, bc, sigma)?;
    let rm = residual_sigma(xi_var - h * dir, label, bc, sigma)?;
    Ok((r, (rp - rm) / (2.0 * h * dir)))
}
