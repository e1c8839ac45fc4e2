//! Weierstrass elliptic function on a period lattice.
//!
//! Two evaluation routes share one formula,
//!
//!   P(z) = e3 + (e1 - e3) / sn(z sqrt(e1 - e3), m)^2,
//!   m = (e2 - e3)/(e1 - e3),
//!
//! (DLMF 23.6.21 arrangement). For a lattice built from a modulus the scale
//! sqrt(e1 - e3) = 1/s and m itself are already known. For raw generators
//! (2 omega1, 2 omega3) the modulus is recovered from theta constants at the
//! nome q = exp(i pi omega3/omega1): m = (theta2/theta3)^4 and
//! sqrt(e1 - e3) = (pi / (2 omega1)) theta3^2 (DLMF 23.6.2-4).

use super::jacobi::jacobi_raw;
use super::PeriodLattice;
use crate::num::{C, ONE};
use crate::{Error, Result};

/// Weierstrass P function. Signals a pole when z is within `POLE_EPS` of a
/// lattice point.
pub fn weierstrass_p(z: C, lat: &PeriodLattice) -> Result<C> {
    let (scale, msq) = match lat.modulus_route() {
        Some((msq, scale)) => (scale, msq),
        None => theta_route(lat)?,
    };
    // e-triple from (scale, m): e1 - e3 = scale^2, e2 - e3 = m scale^2,
    // e1 + e2 + e3 = 0.
    let a = scale * scale;
    let e3 = -a * (ONE + msq) / 3.0;
    let w = scale * z;
    let v = jacobi_raw(w, msq);
    let d = v.sn / scale; // leading distance to the lattice point
    if d.norm() < super::jacobi::POLE_EPS {
        return Err(Error::PoleProximity {
            residue_dir: ONE, // double pole, +1/z^2 leading coefficient
            dist: d.norm(),
        });
    }
    Ok(e3 + a / (v.sn * v.sn))
}

/// Modulus and scale from theta constants of the raw generators.
fn theta_route(lat: &PeriodLattice) -> Result<(C, C)> {
    let (g1, g3) = lat.generators();
    let o1 = g1 / 2.0;
    let mut tau = g3 / g1;
    if tau.im < 0.0 {
        // Same lattice with the second generator negated.
        tau = -tau;
    }
    let q = (crate::num::I * std::f64::consts::PI * tau).exp();
    if q.norm() > 0.9995 {
        return Err(Error::DegenerateLattice);
    }
    // theta2 = 2 q^{1/4} sum q^{j(j+1)}, theta3 = 1 + 2 sum q^{j^2}.
    let mut th2 = ONE;
    let mut th3 = ONE;
    let mut term2 = ONE;
    let mut term3;
    for j in 1..200 {
        term2 = term2 * q.powf(2.0 * j as f64); // q^{j(j+1)} / q^{(j-1)j} = q^{2j}
        term3 = q.powf((j * j) as f64);
        th2 += term2;
        th3 += 2.0 * term3;
        if term2.norm() < 1e-18 && term3.norm() < 1e-18 {
            break;
        }
    }
    th2 *= 2.0 * q.powf(0.25);
    let msq = (th2 / th3).powi(4);
    let scale = std::f64::consts::PI / (2.0 * o1) * th3 * th3;
    Ok((scale, msq))
}
