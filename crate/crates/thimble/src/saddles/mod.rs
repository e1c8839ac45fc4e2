//! Complex classical saddles of the double-well path integral.
//!
//! The potential is V(z) = (z^2 - 1)^2 / 2 and the action functional is
//!
//!     I[z] = i INT dt_c [ zdot^2/2 - V(z) ],   t_c = epsilon * t,
//!
//! where t runs over the real interval [ti, tf] and epsilon selects the
//! time contour: epsilon = 1 (real time), -i (imaginary time), or
//! -i e^{i phi} (rotated contour interpolating between the two).
//!
//! Stationary trajectories z(t_c) conserve zdot_c^2 + (z^2 - 1)^2 = p^2 and
//! are elliptic functions
//!
//!     z(t) = A sd(epsilon (t - ti)/s + u0 | m),
//!     m = k^2 = (1 + p)/(2p),  s^2 = k^2 - 1/2,  A = k k'/s,
//!
//! so a saddle is fixed by one complex number: the branch variable xi = s.
//! Boundary conditions z(ti) = xi, z(tf) = xf leave a discrete family
//! indexed by a winding label (n, m): the trajectory advances by n half
//! periods 2*omega1 and m half periods 2*omega3 of the sd lattice while
//! interpolating between the endpoint preimages. Because sd flips sign
//! under either half-period shift, only labels whose windings respect the
//! endpoint signs admit solutions; membership in that set Sigma is a
//! gcd-parity condition on (n, m).
//!
//! The solver reduces the two-point boundary problem to one analytic
//! residual equation R(xi) = 0 (see `boundary_residual`) and follows its
//! roots by Newton continuation in the total duration, starting from the
//! short-time expansion xi ~ T_c / (2 (n + i m) K(1/2)).
//!
//! Saddle relevance is decided by the sign of Re I: real trajectories
//! contribute with unit intersection number, saddles with Re I > 0 after
//! an infinitesimal contour rotation are excluded, and exponentially
//! suppressed saddles (Re I < 0) have an undetermined intersection number
//! at this level of analysis, which `classify` reports as `None` rather
//! than inventing a count.

use crate::num::{gcd, C, I};
use crate::elliptic::BranchedModulus;
use crate::{Error, Result};

mod residual;
mod solve;
mod action;
mod enumerate;

pub use residual::boundary_residual;
pub use solve::solve_modulus;
pub use action::{action, ComplexAction};
pub use enumerate::{enumerate_saddles, EnumerationReport, LabelOutcome};

/// Winding label (n, m): the trajectory advances n real and m imaginary
/// half periods of the sd lattice between its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SaddleLabel {
    pub n: i64,
    pub m: i64,
}

impl SaddleLabel {
    pub fn new(n: i64, m: i64) -> Self {
        SaddleLabel { n, m }
    }

    /// Representative of the (n, m) ~ (-n, -m) equivalence with n > 0,
    /// or n = 0 and m >= 0.
    pub fn canonical(self) -> Self {
        if self.n < 0 || (self.n == 0 && self.m < 0) {
            SaddleLabel { n: -self.n, m: -self.m }
        } else {
            self
        }
    }

    /// Complex winding number n + i m.
    pub fn nu(self) -> C {
        C::new(self.n as f64, self.m as f64)
    }
}

/// Membership in the admissible label set Sigma.
///
/// With g = gcd(|n|, |m|) (taking g = 1 when n m = 0), the label (n, m)
/// is admissible iff (n/g)(m/g) is even: the reduced windings may not
/// both be odd, otherwise the endpoint sign constraints are inconsistent.
pub fn in_sigma(label: SaddleLabel) -> bool {
    let (n, m) = (label.n, label.m);
    if n == 0 || m == 0 {
        return true;
    }
    let g = gcd(n, m);
    (n / g) % 2 == 0 || (m / g) % 2 == 0
}

/// Time contour selector for the integration variable t in [ti, tf].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeDirection {
    /// t_c = t: oscillatory weight e^{iS}.
    RealTime,
    /// t_c = -i t: Euclidean weight e^{-S_E}.
    ImaginaryTime,
    /// t_c = -i e^{i phi} t: phi = pi/2 is real time, phi = 0 imaginary.
    WickAngle(f64),
}

impl TimeDirection {
    /// The contour factor epsilon with t_c = epsilon * t.
    pub fn epsilon(self) -> C {
        match self {
            TimeDirection::RealTime => C::new(1.0, 0.0),
            TimeDirection::ImaginaryTime => C::new(0.0, -1.0),
            TimeDirection::WickAngle(phi) => -I * (I * phi).exp(),
        }
    }
}

/// Endpoint data for the two-point boundary problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    pub xi: C,
    pub xf: C,
    pub ti: f64,
    pub tf: f64,
    pub time: TimeDirection,
}

impl BoundaryData {
    pub fn new(xi: C, xf: C, ti: f64, tf: f64, time: TimeDirection) -> Result<Self> {
        if !(tf > ti) {
            return Err(Error::Config(format!(
                "boundary data needs tf > ti, got ti = {ti}, tf = {tf}"
            )));
        }
        if !(xi.is_finite() && xf.is_finite()) {
            return Err(Error::Config("boundary endpoints must be finite".into()));
        }
        Ok(BoundaryData { xi, xf, ti, tf, time })
    }

    /// Real duration T = tf - ti.
    pub fn duration(&self) -> f64 {
        self.tf - self.ti
    }

    /// Complex duration T_c = epsilon (tf - ti).
    pub fn complex_duration(&self) -> C {
        self.time.epsilon() * self.duration()
    }
}

/// How the trajectory is represented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolutionKind {
    /// Generic elliptic trajectory amp * sd(u | m).
    Elliptic,
    /// Degenerate constant trajectory z(t) = z0 (hilltop or vacuum).
    Constant(C),
}

/// A solved saddle: label, branch data, and the sd parametrisation.
#[derive(Debug, Clone)]
pub struct ClassicalSolution {
    pub label: SaddleLabel,
    pub bc: BoundaryData,
    /// Branch variable xi = s with s^2 = k^2 - 1/2; the root of the
    /// boundary residual this solution was continued to.
    pub modulus: C,
    /// Conserved momentum scale, p = 1/(2 xi^2).
    pub p: C,
    /// Offset u0 in z = amp * sd(epsilon (t - ti)/xi + u0).
    pub offset: C,
    pub kind: SolutionKind,
    pub(crate) amp: C,
    pub(crate) ksq: C,
}

impl ClassicalSolution {
    /// Trajectory value z(t) for t in [ti, tf] (or analytically continued
    /// nearby). Signals `PoleProximity` within ~1e-8 of a lattice pole.
    pub fn z(&self, t: f64) -> Result<C> {
        match self.kind {
            SolutionKind::Constant(z0) => Ok(z0),
            SolutionKind::Elliptic => {
                let u = self.bc.time.epsilon() * (t - self.bc.ti) / self.modulus + self.offset;
                let bm = BranchedModulus::new(self.ksq);
                Ok(self.amp * crate::elliptic::jacobi_sd(u, &bm)?)
            }
        }
    }

    /// Contour velocity dz/dt_c.
    pub(crate) fn zdot_contour(&self, t: f64) -> Result<C> {
        match self.kind {
            SolutionKind::Constant(_) => Ok(C::new(0.0, 0.0)),
            SolutionKind::Elliptic => {
                let u = self.bc.time.epsilon() * (t - self.bc.ti) / self.modulus + self.offset;
                let (_, dsd) = crate::elliptic::sd_with_derivative(u, self.ksq);
                if !dsd.is_finite() {
                    return Err(Error::PoleProximity {
                        residue_dir: C::new(1.0, 0.0),
                        dist: 0.0,
                    });
                }
                Ok(self.amp / self.modulus * dsd)
            }
        }
    }

    /// First-integral defect max_t | zdot_c^2 + (z^2-1)^2 - p^2 | over a
    /// sample grid, skipping points adjacent to trajectory poles.
    pub fn energy_defect(&self, samples: usize) -> f64 {
        let psq = self.p * self.p;
        let mut worst = 0.0f64;
        let n = samples.max(2);
        for j in 0..n {
            let t = self.bc.ti + self.bc.duration() * (j as f64 + 0.5) / n as f64;
            let (z, v) = match (self.z(t), self.zdot_contour(t)) {
                (Ok(z), Ok(v)) => (z, v),
                _ => continue,
            };
            if z.norm() > 1e6 {
                continue;
            }
            let w = z * z - 1.0;
            let defect = (v * v + w * w - psq).norm() / (1.0 + psq.norm() + (w * w).norm());
            worst = worst.max(defect);
        }
        worst
    }
}

/// Relevance of a saddle to the integration contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SaddleClass {
    /// Trajectory is real: lies on the original contour, n_sigma = 1.
    RealSolution,
    /// Re I > 0 after the regulating rotation: cannot contribute.
    Excluded,
    /// Re I < 0: exponentially suppressed; whether it contributes is not
    /// decided by the sign test, so no intersection number is assigned.
    Suppressed,
    /// Re I within tolerance of zero even after regulating: undecided.
    Undetermined,
}

/// Classification result: the class and, where determined, the
/// intersection number n_sigma of the dual thimble with the contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub class: SaddleClass,
    pub n_sigma: Option<i32>,
    /// Re( e^{i delta} I ) used for the sign test.
    pub rotated_re: f64,
}

/// Decide relevance of a solved saddle.
///
/// A trajectory that is real along the whole contour (max |Im z| < 1e-6
/// over a sample grid) is on the original integration cycle and gets
/// n_sigma = 1. Otherwise the sign of Re(e^{i delta} I) decides: positive
/// means excluded (n_sigma = 0), negative means suppressed, in which case
/// the intersection number is left undetermined (`None`), never guessed.
/// The rotation delta > 0 regulates Stokes-boundary cases where Re I = 0.
pub fn classify(sol: &ClassicalSolution, stokes_delta: f64) -> Result<Classification> {
    let mut max_im = 0.0f64;
    let mut max_scale = 1.0f64;
    let samples = 128;
    for j in 0..=samples {
        let t = self_sample_time(&sol.bc, j, samples);
        match sol.z(t) {
            Ok(z) => {
                max_im = max_im.max(z.im.abs());
                max_scale = max_scale.max(z.norm());
            }
            Err(_) => continue,
        }
    }
    if max_im < 1e-6 * max_scale {
        return Ok(Classification {
            class: SaddleClass::RealSolution,
            n_sigma: Some(1),
            rotated_re: 0.0,
        });
    }
    let act = action(sol)?;
    let rotated = (I * stokes_delta).exp() * act.value;
    let tol = 1e-10 * (1.0 + act.value.norm());
    let (class, n_sigma) = if rotated.re > tol {
        (SaddleClass::Excluded, Some(0))
    } else if rotated.re < -tol {
        (SaddleClass::Suppressed, None)
    } else {
        (SaddleClass::Undetermined, None)
    };
    Ok(Classification { class, n_sigma, rotated_re: rotated.re })
}

fn self_sample_time(bc: &BoundaryData, j: usize, samples: usize) -> f64 {
    bc.ti + bc.duration() * j as f64 / samples as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_membership_truth_table() {
        // nm = 0 always admissible.
        for v in -5..=5 {
            assert!(in_sigma(SaddleLabel::new(v, 0)));
            assert!(in_sigma(SaddleLabel::new(0, v)));
        }
        // Reduced windings may not both be odd.
        assert!(in_sigma(SaddleLabel::new(2, 1)));
        assert!(in_sigma(SaddleLabel::new(1, 2)));
        assert!(in_sigma(SaddleLabel::new(3, 2)));
        assert!(in_sigma(SaddleLabel::new(31, 30)));
        assert!(in_sigma(SaddleLabel::new(52, 50)));
        assert!(!in_sigma(SaddleLabel::new(1, 1)));
        assert!(!in_sigma(SaddleLabel::new(3, 1)));
        assert!(!in_sigma(SaddleLabel::new(1, 3)));
        assert!(!in_sigma(SaddleLabel::new(3, -3)));
        assert!(!in_sigma(SaddleLabel::new(5, 3)));
        // (2, 6): g = 2, reduced (1, 3) both odd: excluded.
        assert!(!in_sigma(SaddleLabel::new(2, 6)));
        // (2, 4): reduced (1, 2): admissible.
        assert!(in_sigma(SaddleLabel::new(2, 4)));
        // Symmetry under negation of either entry.
        for n in -6..=6i64 {
            for m in -6..=6i64 {
                let a = in_sigma(SaddleLabel::new(n, m));
                assert_eq!(a, in_sigma(SaddleLabel::new(-n, -m)));
                assert_eq!(a, in_sigma(SaddleLabel::new(n, -m)));
            }
        }
    }

    #[test]
    fn canonical_representative() {
        assert_eq!(SaddleLabel::new(-2, 1).canonical(), SaddleLabel::new(2, -1));
        assert_eq!(SaddleLabel::new(0, -3).canonical(), SaddleLabel::new(0, 3));
        assert_eq!(SaddleLabel::new(0, 3).canonical(), SaddleLabel::new(0, 3));
        assert_eq!(SaddleLabel::new(4, -2).canonical(), SaddleLabel::new(4, -2));
    }

    #[test]
    fn epsilon_of_time_directions() {
        use approx::assert_abs_diff_eq;
        let e = TimeDirection::RealTime.epsilon();
        assert_abs_diff_eq!(e.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.im, 0.0, epsilon = 1e-15);
        let e = TimeDirection::ImaginaryTime.epsilon();
        assert_abs_diff_eq!(e.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.im, -1.0, epsilon = 1e-15);
        // phi = pi/2 reproduces real time, phi = 0 imaginary time.
        let e = TimeDirection::WickAngle(std::f64::consts::FRAC_PI_2).epsilon();
        assert_abs_diff_eq!(e.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.im, 0.0, epsilon = 1e-15);
        let e = TimeDirection::WickAngle(0.0).epsilon();
        assert_abs_diff_eq!(e.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn boundary_data_validation() {
        let ok = BoundaryData::new(
            C::new(-1.0, 0.0),
            C::new(1.0, 0.0),
            0.0,
            10.0,
            TimeDirection::RealTime,
        );
        assert!(ok.is_ok());
        let bad = BoundaryData::new(
            C::new(0.0, 0.0),
            C::new(0.0, 0.0),
            1.0,
            1.0,
            TimeDirection::RealTime,
        );
        assert!(matches!(bad, Err(Error::Config(_))));
    }
}
