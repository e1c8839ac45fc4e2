//! Holomorphic action of a solved saddle.
//!
//! On a classical trajectory the Lagrangian reduces through the first
//! integral zdot_c^2 = p^2 - (z^2 - 1)^2 to
//!
//!     I = i INT dt_c [ zdot_c^2/2 - (z^2-1)^2/2 ]
//!       = i epsilon T INT_0^1 dtau [ p^2/2 - (z^2-1)^2 ].
//!
//! Oscillatory saddles run close to the poles of sd, which sit at the
//! zeros of dn, u_p = K + i K' modulo the lattice (2K, 2i K'); there the
//! integrand blows up like a fourth-order pole and defeats any direct
//! quadrature. The shift identity sd(u_p + d) = -i ds(d)/(k k') turns the
//! integrand near every such pole into an exact Laurent series in
//! ds^2(d), whose principal part
//!
//!     h(d) = -4 p^2 / d^4 - (4p/3) / d^2
//!
//! is subtracted across the whole interval and integrated back in closed
//! form. The remainder is analytic in a fixed neighbourhood of the path:
//! away from poles it is evaluated directly, inside a quarter-cell radius
//! from the Laurent tail of ds^2 so no cancellation is left. Adaptive
//! refinement then converges at ordinary depth, and the quadrature error
//! estimate is reported alongside the value.

use crate::elliptic::complete_k_unchecked;
use crate::num::{adaptive_simpson, C, I, ONE, ZERO};
use crate::saddles::{ClassicalSolution, SolutionKind};
use crate::Result;

/// Action value with an absolute error estimate from the quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexAction {
    pub value: C,
    pub error: f64,
}

/// Evaluate the action I[z] on a solved trajectory.
pub fn action(sol: &ClassicalSolution) -> Result<ComplexAction> {
    let eps = sol.bc.time.epsilon();
    let t_len = sol.bc.duration();
    let psq = sol.p * sol.p;
    if let SolutionKind::Constant(z0) = sol.kind {
        let w = z0 * z0 - 1.0;
        return Ok(ComplexAction {
            value: I * eps * t_len * (0.5 * psq - w * w),
            error: 0.0,
        });
    }
    let sub = PoleSubtraction::prepare(sol);
    let integrand = |tau: f64| sub.smooth(sol, tau);
    let npanel = 16 + 4 * (sol.label.n.unsigned_abs() + sol.label.m.unsigned_abs()) as usize;
    let tol = 1e-12 * (1.0 + psq.norm());
    let mut acc = sub.added_back();
    let mut err = 0.0;
    for j in 0..npanel {
        let a = j as f64 / npanel as f64;
        let b = (j + 1) as f64 / npanel as f64;
        let quad = match adaptive_simpson(&integrand, a, b, tol, 36) {
            Ok(q) => q,
            Err(_) => adaptive_simpson(&integrand, a, b, 1e3 * tol, 36)?,
        };
        acc += quad.value;
        err += quad.error;
    }
    Ok(ComplexAction {
        value: I * eps * t_len * acc,
        error: t_len * err,
    })
}

struct Pole {
    cell: (i64, i64),
    u: C,
    tau: C,
}

/// The subtraction scheme for one trajectory: the pole lattice of sd in
/// the u plane, the poles within a quarter cell of the integration
/// segment, and the even Laurent coefficients of ds^2 about a dn zero,
///
///     ds^2(d) = 1/d^2 + sum_{j>=0} c_j d^{2j}.
struct PoleSubtraction {
    u0: C,
    w: C,
    base: C,
    g1: C,
    g2: C,
    /// Row-major inverse of the lattice matrix, mapping (Re d, Im d) to
    /// real lattice coordinates; empty subtraction when degenerate.
    minv: Option<[f64; 4]>,
    r0: f64,
    p: C,
    psq: C,
    cser: Vec<C>,
    poles: Vec<Pole>,
}

impl PoleSubtraction {
    fn prepare(sol: &ClassicalSolution) -> Self {
        let msq = sol.ksq;
        let p = sol.p;
        let kc = complete_k_unchecked(msq);
        let kp = complete_k_unchecked(ONE - msq);
        let g1 = 2.0 * kc;
        let g2 = 2.0 * I * kp;
        let base = kc + I * kp;
        let mut lmin = f64::INFINITY;
        for a in -1..=1i64 {
            for b in -1..=1i64 {
                if (a, b) != (0, 0) {
                    lmin = lmin.min((a as f64 * g1 + b as f64 * g2).norm());
                }
            }
        }
        let r0 = 0.25 * lmin;
        let u0 = sol.offset;
        let w = sol.bc.time.epsilon() * sol.bc.duration() / sol.modulus;
        let det = g1.re * g2.im - g2.re * g1.im;
        let minv = if det.abs() > 1e-12 * g1.norm() * g2.norm() {
            Some([g2.im / det, -g2.re / det, -g1.im / det, g1.re / det])
        } else {
            None
        };
        let mut sub = PoleSubtraction {
            u0,
            w,
            base,
            g1,
            g2,
            minv,
            r0,
            p,
            psq: p * p,
            cser: laurent_tail(msq),
            poles: Vec::new(),
        };
        if let Some(mi) = sub.minv {
            let coord = |u: C| -> (f64, f64) {
                let d = u - base;
                (mi[0] * d.re + mi[1] * d.im, mi[2] * d.re + mi[3] * d.im)
            };
            let (a0, b0) = coord(u0);
            let (a1, b1) = coord(u0 + w);
            let alo = a0.min(a1).floor() as i64 - 2;
            let ahi = a0.max(a1).ceil() as i64 + 2;
            let blo = b0.min(b1).floor() as i64 - 2;
            let bhi = b0.max(b1).ceil() as i64 + 2;
            for a in alo..=ahi {
                for b in blo..=bhi {
                    let u = base + a as f64 * g1 + b as f64 * g2;
                    let t = (((u - u0) * w.conj()).re / w.norm_sqr()).clamp(0.0, 1.0);
                    if (u - (u0 + t * w)).norm() < r0 {
                        sub.poles.push(Pole {
                            cell: (a, b),
                            u,
                            tau: (u - u0) / w,
                        });
                    }
                }
            }
        }
        sub
    }

    /// Principal part at one pole, as a function of d = u - u_p.
    fn principal(&self, d: C) -> C {
        let d2 = d * d;
        -4.0 * self.psq / (d2 * d2) - (4.0 / 3.0) * self.p / d2
    }

    /// The subtracted integrand p^2/2 - (z^2-1)^2 - sum_q h_q.
    fn smooth(&self, sol: &ClassicalSolution, tau: f64) -> Result<C> {
        let u = self.u0 + self.w * tau;
        let near = self.minv.and_then(|mi| {
            let d0 = u - self.base;
            let a = (mi[0] * d0.re + mi[1] * d0.im).round() as i64;
            let b = (mi[2] * d0.re + mi[3] * d0.im).round() as i64;
            let dred = d0 - a as f64 * self.g1 - b as f64 * self.g2;
            let windowed = self.poles.iter().any(|q| q.cell == (a, b));
            (dred.norm() < self.r0 && windowed).then_some(((a, b), dred))
        });
        let mut f = match near {
            Some((cell, dred)) => {
                // Laurent remainder at the nearest pole: the 1/d^4 and
                // 1/d^2 parts of -4p ds^2 - 4p^2 ds^4 - h cancel exactly,
                // leaving series in G = ds^2 - 1/d^2 and the shifted tail.
                let dsq = dred * dred;
                let last = self.cser.len() - 1;
                let mut g = self.cser[last];
                for j in (0..last).rev() {
                    g = g * dsq + self.cser[j];
                }
                let mut s1 = self.cser[last];
                for j in (1..last).rev() {
                    s1 = s1 * dsq + self.cser[j];
                }
                let mut f = 0.5 * self.psq - 1.0
                    - 4.0 * self.p * g
                    - 4.0 * self.psq * g * g
                    - 8.0 * self.psq * s1;
                for q in &self.poles {
                    if q.cell != cell {
                        f -= self.principal(u - q.u);
                    }
                }
                return Ok(f);
            }
            None => {
                let z = sol.z(sol.bc.ti + sol.bc.duration() * tau)?;
                let v = z * z - 1.0;
                0.5 * self.psq - v * v
            }
        };
        for q in &self.poles {
            f -= self.principal(u - q.u);
        }
        Ok(f)
    }

    /// Exact integral over [0, 1] of every subtracted principal part.
    fn added_back(&self) -> C {
        let w2 = self.w * self.w;
        let w4 = w2 * w2;
        let mut acc = ZERO;
        for q in &self.poles {
            let a = (ONE - q.tau).inv();
            let b = (-q.tau).inv();
            acc += 4.0 * self.psq / (3.0 * w4) * (a * a * a - b * b * b)
                + 4.0 * self.p / (3.0 * w2) * (a - b);
        }
        acc
    }
}

/// Even Laurent coefficients c_j of ds^2 about a zero of dn, from the
/// Laurent series ds(d) = sum_k b_k d^(2k-1). The b_k follow from
/// ds'' = 2 ds^3 + (2m-1) ds except at k = 2, where the recursion
/// denominator vanishes and the first integral
/// (ds')^2 = (ds^2 + m)(ds^2 + m - 1) supplies the coefficient.
fn laurent_tail(msq: C) -> Vec<C> {
    const NB: usize = 18;
    let mut b = vec![ZERO; NB];
    b[0] = ONE;
    b[1] = (ONE - 2.0 * msq) / 6.0;
    b[2] = (7.0 * b[1] * b[1] - msq * msq + msq) / 10.0;
    for k in 3..NB {
        let mut t = ZERO;
        for k1 in 0..k {
            for k2 in 0..=(k - k1).min(k - 1) {
                let k3 = k - k1 - k2;
                if k3 < k {
                    t += b[k1] * b[k2] * b[k3];
                }
            }
        }
        b[k] = (2.0 * t + (2.0 * msq - 1.0) * b[k - 1])
            / (2.0 * (2 * k + 1) as f64 * (k as f64 - 2.0));
    }
    (0..NB - 1)
        .map(|j| (0..=j + 1).map(|k| b[k] * b[j + 1 - k]).sum())
        .collect()
}
