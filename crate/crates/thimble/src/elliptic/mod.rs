//! Complete elliptic integrals and period data on the complex modulus plane.
//!
//! All functions are parameterized by the squared modulus m = k^2 (the
//! "parameter" of A&S chapter 17). Square roots are principal unless stated.
//! K(m) is computed by the arithmetic-geometric mean with the right-half-plane
//! root choice, which reproduces the principal branch of DLMF 19.8.5 on
//! C \ [1, inf). The derived period data use the frozen branch
//!
//!   s = sqrt(m - 1/2)   (principal; positive on the real segment (1/2, 1)),
//!   omega1 = s K(m),    omega3 = i s K(1 - m),   omega2 = omega1 + omega3,
//!
//! which makes omega1 and omega3 single-valued and jump-free for m off the
//! real rays (-inf, 1/2] and [1, inf). On those rays the values are
//! side-dependent and the public entry points say so.

pub mod invsd;
pub mod jacobi;
pub mod weierstrass;

pub use invsd::inv_sd;
pub use jacobi::{jacobi_cn, jacobi_dn, jacobi_sd, jacobi_sn, JacobiValues};
pub(crate) use jacobi::sd_with_derivative;
pub use weierstrass::weierstrass_p;

use crate::num::{C, ONE};
use crate::{Error, Result};

/// Squared modulus with its principal square root and a cut flag.
///
/// `on_cut` is true when `ksq` lies on the real rays (-inf, 1/2] or [1, inf),
/// where the half-period branch is side-dependent. IEEE signed zeros in
/// `ksq.im` select the side consistently throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchedModulus {
    pub ksq: C,
    pub k: C,
    pub on_cut: bool,
}

impl BranchedModulus {
    pub fn new(ksq: C) -> Self {
        let on_cut = ksq.im == 0.0 && (ksq.re <= 0.5 || ksq.re >= 1.0);
        BranchedModulus {
            ksq,
            k: ksq.sqrt(),
            on_cut,
        }
    }

    /// Complementary parameter 1 - m.
    pub fn comp(&self) -> C {
        ONE - self.ksq
    }
}

/// Half periods of the energy-p lattice attached to a modulus.
#[derive(Debug, Clone, Copy)]
pub struct HalfPeriods {
    pub omega1: C,
    pub omega3: C,
    pub omega2: C,
}

/// Period lattice spanned by the generators (2 omega1, 2 omega3).
///
/// Lattices built from a modulus remember it, so Weierstrass evaluation can
/// reuse the modulus directly; raw-generator lattices go through theta
/// constants instead.
#[derive(Debug, Clone, Copy)]
pub struct PeriodLattice {
    g1: C,
    g3: C,
    modulus_route: Option<(C, C)>, // (msq, scale = sqrt(e1 - e3))
}

impl PeriodLattice {
    /// Lattice from raw generators. Errors if the generators are
    /// real-collinear (zero area).
    pub fn new(g1: C, g3: C) -> Result<Self> {
        let tau = g3 / g1;
        if !tau.is_finite() || tau.im.abs() < 1e-12 {
            return Err(Error::DegenerateLattice);
        }
        Ok(PeriodLattice {
            g1,
            g3,
            modulus_route: None,
        })
    }

    /// Lattice of the modulus m: generators (2 s K(m), 2 i s K(1-m)).
    pub fn from_modulus(m: &BranchedModulus) -> Result<Self> {
        let hp = half_periods_any_branch(m.ksq);
        let tau = hp.omega3 / hp.omega1;
        if !tau.is_finite() || tau.im.abs() < 1e-12 {
            return Err(Error::DegenerateLattice);
        }
        let s = s_branch(m.ksq);
        Ok(PeriodLattice {
            g1: 2.0 * hp.omega1,
            g3: 2.0 * hp.omega3,
            modulus_route: Some((m.ksq, 1.0 / s)),
        })
    }

    pub fn generators(&self) -> (C, C) {
        (self.g1, self.g3)
    }

    pub(crate) fn modulus_route(&self) -> Option<(C, C)> {
        self.modulus_route
    }
}

/// Principal branch s = sqrt(m - 1/2), positive on (1/2, 1).
pub fn s_branch(ksq: C) -> C {
    (ksq - 0.5).sqrt()
}

/// Complete elliptic integral K(m) by the arithmetic-geometric mean,
/// principal branch on C \ [1, inf).
///
/// Errors: divergence exactly at m = 1; cut ambiguity for real m > 1, where
/// the two sides of the cut give complex-conjugate values (resolve by passing
/// a signed zero imaginary part and calling the internal one-sided routine).
pub fn complete_k(msq: C) -> Result<C> {
    if msq.im == 0.0 && msq.re == 1.0 {
        return Err(Error::EllipticDivergence);
    }
    if msq.im == 0.0 && msq.re > 1.0 {
        return Err(Error::CutAmbiguity(msq));
    }
    Ok(complete_k_unchecked(msq))
}

/// One-sided K(m): no cut policing, signed zeros pick the side on [1, inf).
pub(crate) fn complete_k_unchecked(msq: C) -> C {
    let b0 = (ONE - msq).sqrt();
    std::f64::consts::FRAC_PI_2 / agm(ONE, b0)
}

/// Arithmetic-geometric mean with the optimal square-root choice
/// |a_n - b_n| <= |a_n + b_n| (Cox), which converges to the principal value
/// when started from the principal b_0.
fn agm(a0: C, b0: C) -> C {
    let mut a = a0;
    let mut b = b0;
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        let mut bn = (a * b).sqrt();
        if (an - bn).norm_sqr() > (an + bn).norm_sqr() {
            bn = -bn;
        }
        a = an;
        b = bn;
        if (a - b).norm() <= 1e-17 * a.norm() {
            break;
        }
    }
    0.5 * (a + b)
}

/// Half periods omega1 = s K(m), omega3 = i s K(1-m), omega2 = omega1+omega3.
///
/// Both periods vanish like sqrt(m - 1/2) as m -> 1/2; that limit is allowed.
/// Elsewhere on the real rays (-inf, 1/2) and [1, inf) the branch is
/// side-dependent and a cut-ambiguity error is returned.
pub fn half_periods(m: &BranchedModulus) -> Result<HalfPeriods> {
    if m.on_cut && m.ksq != C::new(0.5, 0.0) {
        return Err(Error::CutAmbiguity(m.ksq));
    }
    if m.ksq.im == 0.0 && m.ksq.re == 1.0 {
        return Err(Error::EllipticDivergence);
    }
    Ok(half_periods_any_branch(m.ksq))
}

/// One-sided half periods; signed zeros in ksq.im select the cut side.
pub(crate) fn half_periods_any_branch(ksq: C) -> HalfPeriods {
    let s = s_branch(ksq);
    let omega1 = s * complete_k_unchecked(ksq);
    let omega3 = crate::num::I * s * complete_k_unchecked(ONE - ksq);
    HalfPeriods {
        omega1,
        omega3,
        omega2: omega1 + omega3,
    }
}

/// K(1/2), the lemniscatic-like constant entering every short-time formula.
pub fn k_half() -> f64 {
    complete_k_unchecked(C::new(0.5, 0.0)).re
}
