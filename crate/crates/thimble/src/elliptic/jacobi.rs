//! Jacobi elliptic functions sn, cn, dn (and sd = sn/dn) for complex argument
//! and complex parameter m = k^2.
//!
//! Evaluation pipeline: special limits at m = 0 and m = 1, the reciprocal
//! transformation for |m| > 1 (A&S 16.11), the imaginary-modulus
//! transformation for real m < 0 (A&S 16.10), then lattice reduction by
//! (2K, 2iK') and the descending Landen recursion (DLMF 22.7.2-4, Gauss
//! transformation), terminated in the trigonometric limit with the first-order
//! corrections of A&S 16.13. All back-transforms are rational in
//! (sn, cn, dn), so no square-root branch enters after the periods are fixed.

use super::{complete_k_unchecked, BranchedModulus};
use crate::num::{C, ONE};
use crate::{Error, Result};

/// Distance (in the u plane, natural units) below which a pole is signaled.
pub const POLE_EPS: f64 = 1e-8;

/// Values of the three basic Jacobi functions at one point.
#[derive(Debug, Clone, Copy)]
pub struct JacobiValues {
    pub sn: C,
    pub cn: C,
    pub dn: C,
}

/// Total evaluation: never errs, values may be arbitrarily large near poles.
pub fn jacobi_raw(u: C, msq: C) -> JacobiValues {
    // m = 0: trigonometric.
    if msq.norm() == 0.0 {
        return JacobiValues {
            sn: u.sin(),
            cn: u.cos(),
            dn: ONE,
        };
    }
    // m = 1: hyperbolic, with the first-order correction of A&S 16.15.
    if (msq - ONE).norm() < 1e-12 {
        let e = ONE - msq;
        let (sh, ch) = (u.sinh(), u.cosh());
        let sech = ch.inv();
        let w = sh * ch - u;
        return JacobiValues {
            sn: u.tanh() + 0.25 * e * w * sech * sech,
            cn: sech - 0.25 * e * w * u.tanh() * sech,
            dn: sech + 0.25 * e * (sh * ch + u) * u.tanh() * sech,
        };
    }
    // |m| > 1: reciprocal transformation sn(u|m) = k^-1 sn(k u | 1/m),
    // cn(u|m) = dn(k u | 1/m), dn(u|m) = cn(k u | 1/m), k = sqrt(m).
    if msq.norm() > 1.0 {
        let k = msq.sqrt();
        let inner = jacobi_raw(k * u, msq.inv());
        return JacobiValues {
            sn: inner.sn / k,
            cn: inner.dn,
            dn: inner.cn,
        };
    }
    // Real m < 0: imaginary-modulus transformation to m1 = -m/(1-m) in (0,1):
    // sn(u|m) = g sd(u/g | m1), cn(u|m) = cd, dn(u|m) = nd, g = (1-m)^-1/2.
    if msq.im == 0.0 && msq.re < 0.0 {
        let m1 = -msq / (ONE - msq);
        let g = (ONE - msq).sqrt().inv();
        let inner = jacobi_raw(u / g, m1);
        return JacobiValues {
            sn: g * inner.sn / inner.dn,
            cn: inner.cn / inner.dn,
            dn: inner.dn.inv(),
        };
    }
    // Core region: |m| <= 1, m off (-inf, 0] and [1, inf). Reduce u by the
    // period lattice (2K, 2iK'), then run the descending Landen recursion.
    let big_k = complete_k_unchecked(msq);
    let big_kp = complete_k_unchecked(ONE - msq);
    let (p1, p2) = (2.0 * big_k, 2.0 * crate::num::I * big_kp);
    let det = p1.re * p2.im - p1.im * p2.re;
    let (mut a, mut b) = (0i64, 0i64);
    if det.abs() > 1e-12 {
        let ar = (u.re * p2.im - u.im * p2.re) / det;
        let br = (p1.re * u.im - p1.im * u.re) / det;
        a = ar.round() as i64;
        b = br.round() as i64;
    }
    let r = u - (a as f64) * p1 - (b as f64) * p2;
    let core = landen(r, msq, 0);
    // Quasi-periodicity signs: sn flips under both half periods, cn under
    // 2K and 2iK' combined, dn under 2iK' only.
    let sgn = |flip: bool| if flip { -ONE } else { ONE };
    JacobiValues {
        sn: core.sn * sgn(a % 2 != 0),
        cn: core.cn * sgn((a + b) % 2 != 0),
        dn: core.dn * sgn(b % 2 != 0),
    }
}

/// Descending Landen recursion on the reduced argument.
fn landen(u: C, msq: C, depth: u32) -> JacobiValues {
    if msq.norm() < 1e-14 || depth > 24 {
        // A&S 16.13: sn = sin u - m/4 (u - sin u cos u) cos u, etc.
        let (s, c) = (u.sin(), u.cos());
        let w = u - s * c;
        return JacobiValues {
            sn: s - 0.25 * msq * w * c,
            cn: c + 0.25 * msq * w * s,
            dn: ONE - 0.5 * msq * s * s,
        };
    }
    let kp = (ONE - msq).sqrt();
    let k1 = (ONE - kp) / (ONE + kp);
    let inner = landen(u / (ONE + k1), k1 * k1, depth + 1);
    let s2 = inner.sn * inner.sn;
    let d = ONE + k1 * s2;
    JacobiValues {
        sn: (ONE + k1) * inner.sn / d,
        cn: inner.cn * inner.dn / d,
        dn: (ONE - k1 * s2) / d,
    }
}

/// Estimated distance from u to the nearest pole of sn/cn/dn (all three share
/// simple poles on the lattice of iK').
fn shared_pole_distance(v: &JacobiValues, msq: C) -> f64 {
    // Near a pole sn ~ 1/(k du), dn ~ -1/du (up to phases), so both estimates
    // agree to leading order; take the larger magnitude for robustness.
    let by_dn = v.dn.norm();
    let by_sn = (msq.sqrt() * v.sn).norm();
    1.0 / by_dn.max(by_sn).max(1e-300)
}

fn pole_guard(v: &JacobiValues, msq: C) -> Result<()> {
    let d = shared_pole_distance(v, msq);
    if d < POLE_EPS {
        // Residue of sn at iK' is 1/k; use it as the direction scale.
        let dir = msq.sqrt().inv();
        return Err(Error::PoleProximity {
            residue_dir: dir / dir.norm().max(1e-300),
            dist: d,
        });
    }
    Ok(())
}

pub fn jacobi_sn(u: C, m: &BranchedModulus) -> Result<C> {
    let v = jacobi_raw(u, m.ksq);
    pole_guard(&v, m.ksq)?;
    Ok(v.sn)
}

pub fn jacobi_cn(u: C, m: &BranchedModulus) -> Result<C> {
    let v = jacobi_raw(u, m.ksq);
    pole_guard(&v, m.ksq)?;
    Ok(v.cn)
}

pub fn jacobi_dn(u: C, m: &BranchedModulus) -> Result<C> {
    let v = jacobi_raw(u, m.ksq);
    pole_guard(&v, m.ksq)?;
    Ok(v.dn)
}

/// sd = sn/dn. Signals a pole (zero of dn, at K + iK' modulo the lattice)
/// with the residue direction when u is within `POLE_EPS` of it.
pub fn jacobi_sd(u: C, m: &BranchedModulus) -> Result<C> {
    let v = jacobi_raw(u, m.ksq);
    // Distance to the dn zero: |dn| / |dn'|, dn' = -m sn cn.
    let dnp = (m.ksq * v.sn * v.cn).norm();
    if dnp > 0.0 && v.dn.norm() / dnp < POLE_EPS {
        let res = -(m.ksq * v.cn).inv();
        return Err(Error::PoleProximity {
            residue_dir: res / res.norm().max(1e-300),
            dist: v.dn.norm() / dnp,
        });
    }
    pole_guard(&v, m.ksq)?;
    Ok(v.sn / v.dn)
}

/// sd and its u-derivative cn/dn^2, sharing one evaluation.
pub(crate) fn sd_with_derivative(u: C, msq: C) -> (C, C) {
    let v = jacobi_raw(u, msq);
    (v.sn / v.dn, v.cn / (v.dn * v.dn))
}
