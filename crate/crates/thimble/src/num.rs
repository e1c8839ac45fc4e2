//! Shared numeric helpers: the complex scalar alias, adaptive quadrature, and
//! small finite-difference utilities.

use crate::{Error, Result};

pub type C = num_complex::Complex64;

/// The imaginary unit.
pub const I: C = C::new(0.0, 1.0);

pub const ONE: C = C::new(1.0, 0.0);
pub const ZERO: C = C::new(0.0, 0.0);

/// Default absolute tolerance of the adaptive quadrature.
pub const QUAD_TOL: f64 = 1e-11;

/// Result of an adaptive quadrature: value and an error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: C,
    pub error: f64,
}

/// Adaptive Simpson integration of a complex-valued integrand on a real
/// interval. The integrand may refuse an evaluation point (for example near a
/// pole) by returning `Err`; the interval is then subdivided around it, up to
/// `max_depth` halvings.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<Quadrature>
where
    F: Fn(f64) -> Result<C>,
{
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = match (f(a), f(m), f(b)) {
        (Ok(fa), Ok(fm), Ok(fb)) => (fa, fm, fb),
        _ => {
            // An endpoint or midpoint is unusable; split off-center so the
            // recursion does not keep landing on the same bad abscissa.
            let c = a + (b - a) * 0.375;
            let left = adaptive_simpson(f, a, c, 0.5 * tol, max_depth.saturating_sub(1))?;
            let right = adaptive_simpson(f, c, b, 0.5 * tol, max_depth.saturating_sub(1))?;
            return Ok(Quadrature {
                value: left.value + right.value,
                error: left.error + right.error,
            });
        }
    };
    if max_depth == 0 {
        return Err(Error::Quadrature(format!(
            "maximum subdivision depth reached on [{a}, {b}]"
        )));
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: C,
    fm: C,
    fb: C,
    whole: C,
    tol: f64,
    depth: u32,
) -> Result<Quadrature>
where
    F: Fn(f64) -> Result<C>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = match (f(lm), f(rm)) {
        (Ok(x), Ok(y)) => (x, y),
        _ => {
            if depth == 0 {
                return Err(Error::Quadrature(format!(
                    "pole blocked subdivision on [{a}, {b}]"
                )));
            }
            let left = adaptive_simpson(f, a, m, 0.5 * tol, depth - 1)?;
            let right = adaptive_simpson(f, m, b, 0.5 * tol, depth - 1)?;
            return Ok(Quadrature {
                value: left.value + right.value,
                error: left.error + right.error,
            });
        }
    };
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.norm() <= 15.0 * tol || depth == 0 {
        if delta.norm() > 15.0 * tol {
            return Err(Error::Quadrature(format!(
                "tolerance {tol:.3e} not reached on [{a}, {b}] (defect {:.3e})",
                delta.norm()
            )));
        }
        return Ok(Quadrature {
            value: left + right + delta / 15.0,
            error: delta.norm() / 15.0,
        });
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(Quadrature {
        value: l.value + r.value,
        error: l.error + r.error,
    })
}

/// Fourth-order central first derivative on a 5-point stencil.
pub fn fd4_first<F: Fn(f64) -> C>(f: F, x: f64, h: f64) -> C {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Fourth-order central second derivative on a 5-point stencil.
pub fn fd4_second<F: Fn(f64) -> C>(f: F, x: f64, h: f64) -> C {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}

/// Greatest common divisor of two non-negative integers.
pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Deterministic xorshift generator for test sampling.
#[derive(Debug, Clone)]
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    /// Uniform sample in [-1, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
    }

    /// Uniform complex sample in the square [-r, r]^2.
    pub fn complex(&mut self, r: f64) -> C {
        C::new(r * self.uniform(), r * self.uniform())
    }
}
