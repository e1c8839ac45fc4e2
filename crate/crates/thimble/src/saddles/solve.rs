//! Newton continuation for roots of the boundary residual.
//!
//! Strategy: start from the short-duration expansion of the root,
//!
//!     xi ~ T_c / (2 (n + i m) K(1/2)),            (n, m) != (0, 0),
//!     xi ~ sqrt( T_c / (2 (x_f - x_i)) ),         (n, m) == (0, 0),
//!
//! at a reduced duration T0, then follow the root along a geometric ramp
//! of durations up to the requested one, bisecting the ramp where Newton
//! loses the root. Damped Newton iterations use the analytic residual
//! with a central-difference complex derivative.
//!
//! Two bookkeeping rules keep the continued family well defined. The
//! amplitude A = sigma k k'/xi uses principal square roots, so when the
//! path crosses a branch ray of k k' the sign `sigma` is parallel
//! transported (flipped) to keep A continuous; and the final solution is
//! normalised back to sigma = +1 by the exact symmetry
//! (A, u0) -> (-A, u0 + 2K), under which the trajectory is unchanged.
//! Solutions are accepted only after direct verification: endpoint
//! mismatch and the first-integral defect must sit at solver precision.
//! A coarse grid scan over the xi plane backs up the continuation for
//! the rare roots it loses.

use crate::elliptic::{complete_k_unchecked, inv_sd, k_half, BranchedModulus};
use crate::num::{C, ONE, ZERO};
use crate::saddles::residual::{residual_and_slope, residual_sigma, RES_TOL};
use crate::saddles::{
    in_sigma, BoundaryData, ClassicalSolution, SaddleLabel, SolutionKind,
};
use crate::{Error, Result};

/// Solve the two-point boundary problem for the saddle with winding label
/// `label`, returning its sd-parametrisation. An optional `seed` skips the
/// continuation and polishes from the given modulus directly (falling back
/// to the full path if it does not converge).
pub fn solve_modulus(
    label: SaddleLabel,
    bc: &BoundaryData,
    seed: Option<C>,
) -> Result<ClassicalSolution> {
    if !in_sigma(label) {
        return Err(Error::LabelNotInSigma(label.n, label.m));
    }
    let scale_x = 1.0 + bc.xi.norm().max(bc.xf.norm());
    if label.n == 0 && label.m == 0 && (bc.xi - bc.xf).norm() < 1e-12 * scale_x {
        return constant_solution(label, bc);
    }
    if let Some(guess) = seed {
        if let Ok(sol) = newton(label, bc, 1.0, guess)
            .and_then(|root| finalize(label, bc, root, 1.0))
        {
            return Ok(sol);
        }
    }
    match continuation(label, bc) {
        Ok((root, sigma)) => {
            finalize(label, bc, root, sigma).or_else(|_| grid_scan(label, bc))
        }
        Err(_) => grid_scan(label, bc),
    }
}

/// Degenerate (0, 0) solutions with coincident endpoints: the constant
/// trajectories at the critical points of the potential. z = 0 sits on
/// the barrier top with p^2 = 1; z = +-1 are the vacua with p = 0. Any
/// other coincident endpoint admits no (0, 0) saddle.
fn constant_solution(label: SaddleLabel, bc: &BoundaryData) -> Result<ClassicalSolution> {
    let z0 = bc.xi;
    if z0.norm() < 1e-9 {
        return Ok(ClassicalSolution {
            label,
            bc: *bc,
            modulus: C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            p: ONE,
            offset: ZERO,
            kind: SolutionKind::Constant(ZERO),
            amp: ZERO,
            ksq: ONE,
        });
    }
    if (z0 - ONE).norm() < 1e-9 || (z0 + ONE).norm() < 1e-9 {
        let w = if z0.re > 0.0 { ONE } else { -ONE };
        return Ok(ClassicalSolution {
            label,
            bc: *bc,
            modulus: ZERO,
            p: ZERO,
            offset: ZERO,
            kind: SolutionKind::Constant(w),
            amp: ZERO,
            ksq: ZERO,
        });
    }
    Err(Error::LabelExcluded(label.n, label.m))
}

/// Short-duration root estimate at duration `t`.
fn seed_at(label: SaddleLabel, bc: &BoundaryData, t: f64) -> C {
    let tc = bc.time.epsilon() * t;
    if label.n == 0 && label.m == 0 {
        (tc / (2.0 * (bc.xf - bc.xi))).sqrt()
    } else {
        tc / (2.0 * label.nu() * k_half())
    }
}

fn with_duration(bc: &BoundaryData, t: f64) -> BoundaryData {
    BoundaryData { tf: bc.ti + t, ..*bc }
}

fn geometric_path(a: f64, b: f64, steps: usize) -> Vec<f64> {
    if b <= a * (1.0 + 1e-12) {
        return vec![b];
    }
    let ratio = (b / a).powf(1.0 / steps as f64);
    let mut path = Vec::with_capacity(steps + 1);
    path.push(a);
    for j in 1..steps {
        path.push(a * ratio.powi(j as i32));
    }
    path.push(b);
    path
}

/// Parallel transport of the amplitude sign across branch rays of
/// k(xi) k'(xi): flip sigma whenever the principal product jumps to the
/// opposite half plane relative to the previous accepted root.
struct SignTransport {
    sigma: f64,
    qref: Option<C>,
}

impl SignTransport {
    fn kkp(xi_var: C) -> C {
        let msq = C::new(0.5, 0.0) + xi_var * xi_var;
        msq.sqrt() * (ONE - msq).sqrt()
    }

    fn would_flip(&self, xi_var: C) -> bool {
        match self.qref {
            None => false,
            Some(prev) => {
                let cand = self.sigma * Self::kkp(xi_var);
                (cand - prev).norm() > (cand + prev).norm()
            }
        }
    }

    fn commit(&mut self, xi_var: C) {
        self.qref = Some(self.sigma * Self::kkp(xi_var));
    }
}

fn continuation(label: SaddleLabel, bc: &BoundaryData) -> Result<(C, f64)> {
    let t_target = bc.duration();
    let t0 = if label.n == 0 && label.m == 0 {
        (0.2 * (bc.xf - bc.xi).norm()).min(t_target)
    } else {
        (0.35 * label.nu().norm()).min(t_target)
    };
    let mut pending = geometric_path(t0, t_target, 12);
    let mut transport = SignTransport { sigma: 1.0, qref: None };
    let mut solved: Option<(f64, C)> = None;
    let mut failures = 0usize;
    let mut idx = 0usize;
    while idx < pending.len() {
        let t = pending[idx];
        let bct = with_duration(bc, t);
        let guess = solved
            .map(|(_, x)| x)
            .unwrap_or_else(|| seed_at(label, bc, t));
        let attempt = newton(label, &bct, transport.sigma, guess).and_then(|root| {
            if transport.would_flip(root) {
                transport.sigma = -transport.sigma;
                newton(label, &bct, transport.sigma, guess)
            } else {
                Ok(root)
            }
        });
        match attempt {
            Ok(root) => {
                transport.commit(root);
                solved = Some((t, root));
                idx += 1;
            }
            Err(e) => {
                failures += 1;
                if failures > 64 {
                    return Err(e);
                }
                match solved {
                    None => {
                        if t < 1e-8 {
                            return Err(e);
                        }
                        pending.insert(idx, 0.5 * t);
                    }
                    Some((tl, _)) => {
                        if t - tl < 1e-9 * t_target.max(1.0) {
                            return Err(e);
                        }
                        pending.insert(idx, 0.5 * (tl + t));
                    }
                }
            }
        }
    }
    match solved {
        Some((_, root)) => Ok((root, transport.sigma)),
        None => Err(Error::NonConvergence(format!(
            "continuation produced no root for label ({}, {})",
            label.n, label.m
        ))),
    }
}

/// Damped Newton iteration on the residual at fixed boundary data.
fn newton(label: SaddleLabel, bc: &BoundaryData, sigma: f64, start: C) -> Result<C> {
    // The residual sums terms of size |T_c| and, for boundary-active
    // labels, |xi| |u|; cancellation noise scales with the larger of the
    // two. Deep Euclidean roots have |xi| ~ e^{T/2}, so the duration
    // alone would put the tolerance under the evaluation floor.
    let tol_of = |xi_var: C| {
        RES_TOL
            * bc.complex_duration()
                .norm()
                .max(4.0 * xi_var.norm())
                .max(1.0)
    };
    let mut xi_var = start;
    let mut r = residual_sigma(xi_var, label, bc, sigma)?;
    for _ in 0..48 {
        let tol = tol_of(xi_var);
        if !r.is_finite() {
            return Err(Error::NonConvergence("residual not finite".into()));
        }
        if r.norm() < tol {
            return Ok(xi_var);
        }
        let (_, dr) = residual_and_slope(xi_var, label, bc, sigma)?;
        if !dr.is_finite() || dr.norm() < 1e-280 {
            return Err(Error::NonConvergence("degenerate residual slope".into()));
        }
        let mut step = r / dr;
        let mut advanced = false;
        for _ in 0..10 {
            let cand = xi_var - step;
            if let Ok(rc) = residual_sigma(cand, label, bc, sigma) {
                if rc.is_finite() && rc.norm() < r.norm() {
                    xi_var = cand;
                    r = rc;
                    advanced = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !advanced {
            // No damped step improves the residual: the iterate sits at
            // the evaluation noise floor. Accept it if it is already at
            // the relaxed tolerance, as the post-loop check would.
            if r.norm() < 100.0 * tol {
                return Ok(xi_var);
            }
            return Err(Error::NonConvergence("newton step stalled".into()));
        }
    }
    if r.norm() < 100.0 * tol_of(xi_var) {
        Ok(xi_var)
    } else {
        Err(Error::NonConvergence(format!(
            "newton residual stuck at {:.3e}",
            r.norm()
        )))
    }
}

/// Coarse scan of the xi plane for residual minima, polished by Newton.
/// Fallback for roots the duration ramp loses.
fn grid_scan(label: SaddleLabel, bc: &BoundaryData) -> Result<ClassicalSolution> {
    let mut last_err = Error::NonConvergence(format!(
        "no residual root found for label ({}, {})",
        label.n, label.m
    ));
    for sigma in [1.0, -1.0] {
        let n = 81usize;
        let mut cells: Vec<(f64, C)> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let xi_var = C::new(
                    -2.0 + 4.0 * i as f64 / (n - 1) as f64,
                    -2.0 + 4.0 * j as f64 / (n - 1) as f64,
                );
                if xi_var.norm() < 5e-2 {
                    continue;
                }
                if let Ok(r) = residual_sigma(xi_var, label, bc, sigma) {
                    if r.is_finite() {
                        cells.push((r.norm(), xi_var));
                    }
                }
            }
        }
        cells.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(_, guess) in cells.iter().take(12) {
            match newton(label, bc, sigma, guess)
                .and_then(|root| finalize(label, bc, root, sigma))
            {
                Ok(sol) => return Ok(sol),
                Err(e) => last_err = e,
            }
        }
    }
    Err(last_err)
}

/// Build and verify the solution object at a residual root.
fn finalize(
    label: SaddleLabel,
    bc: &BoundaryData,
    xi_root: C,
    sigma: f64,
) -> Result<ClassicalSolution> {
    let msq = C::new(0.5, 0.0) + xi_root * xi_root;
    let k = msq.sqrt();
    let kp = (ONE - msq).sqrt();
    let a_signed = sigma * k * kp / xi_root;
    let bm = BranchedModulus::new(msq);
    let scale_x = 1.0 + bc.xi.norm().max(bc.xf.norm());
    let u_i = if bc.xi.norm() < 1e-14 * scale_x {
        ZERO
    } else {
        inv_sd(bc.xi / a_signed, &bm)?
    };
    // sd(2K - u) = sd(u): inverting sd only pins z(ti), and the two
    // preimages are the two shooting directions through that value. Keep
    // whichever forward trajectory meets the far boundary value.
    let kc = complete_k_unchecked(msq);
    let mut last = Error::NonConvergence("no admissible offset".into());
    for cand in [u_i, 2.0 * kc - u_i] {
        let (amp, offset) = if sigma < 0.0 {
            (-a_signed, cand + 2.0 * kc)
        } else {
            (a_signed, cand)
        };
        let sol = ClassicalSolution {
            label,
            bc: *bc,
            modulus: xi_root,
            p: (2.0 * xi_root * xi_root).inv(),
            offset,
            kind: SolutionKind::Elliptic,
            amp,
            ksq: msq,
        };
        match verify(&sol) {
            Ok(()) => return Ok(sol),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn verify(sol: &ClassicalSolution) -> Result<()> {
    let scale = 1.0 + sol.bc.xi.norm().max(sol.bc.xf.norm());
    let zi = sol.z(sol.bc.ti)?;
    if (zi - sol.bc.xi).norm() > 1e-6 * scale {
        return Err(Error::NonConvergence(format!(
            "initial endpoint off by {:.3e}",
            (zi - sol.bc.xi).norm()
        )));
    }
    let zf = sol.z(sol.bc.tf)?;
    if (zf - sol.bc.xf).norm() > 1e-6 * scale {
        return Err(Error::NonConvergence(format!(
            "final endpoint off by {:.3e}",
            (zf - sol.bc.xf).norm()
        )));
    }
    let defect = sol.energy_defect(64);
    if defect > 1e-7 {
        return Err(Error::NonConvergence(format!(
            "first integral defect {defect:.3e}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saddles::boundary_residual;
    use crate::saddles::TimeDirection;

    fn bc_wells(t: f64, time: TimeDirection) -> BoundaryData {
        BoundaryData::new(C::new(-1.0, 0.0), C::new(1.0, 0.0), 0.0, t, time).unwrap()
    }

    #[test]
    fn label_and_input_rejection() {
        let bc = bc_wells(5.0, TimeDirection::RealTime);
        assert!(matches!(
            solve_modulus(SaddleLabel::new(1, 1), &bc, None),
            Err(Error::LabelNotInSigma(1, 1))
        ));
        let bc_bad = BoundaryData::new(
            C::new(0.5, 0.0),
            C::new(0.5, 0.0),
            0.0,
            5.0,
            TimeDirection::RealTime,
        )
        .unwrap();
        assert!(matches!(
            solve_modulus(SaddleLabel::new(0, 0), &bc_bad, None),
            Err(Error::LabelExcluded(0, 0))
        ));
    }

    #[test]
    fn degenerate_constants() {
        let bc0 = BoundaryData::new(
            ZERO,
            ZERO,
            0.0,
            4.0,
            TimeDirection::RealTime,
        )
        .unwrap();
        let sol = solve_modulus(SaddleLabel::new(0, 0), &bc0, None).unwrap();
        assert_eq!(sol.kind, SolutionKind::Constant(ZERO));
        assert!((sol.p - ONE).norm() < 1e-15);
        assert!(sol.z(1.7).unwrap().norm() < 1e-15);

        let bc1 = BoundaryData::new(
            ONE,
            ONE,
            0.0,
            4.0,
            TimeDirection::ImaginaryTime,
        )
        .unwrap();
        let sol = solve_modulus(SaddleLabel::new(0, 0), &bc1, None).unwrap();
        assert_eq!(sol.kind, SolutionKind::Constant(ONE));
        assert!(sol.p.norm() < 1e-15);
    }

    #[test]
    fn oscillatory_label_two_one() {
        // Interwell data, T = 10: the (2, 1) saddle has p near 1 with a
        // small positive imaginary part.
        let bc = bc_wells(10.0, TimeDirection::RealTime);
        let sol = solve_modulus(SaddleLabel::new(2, 1), &bc, None).unwrap();
        assert!((sol.p - C::new(1.001, 0.027)).norm() < 5e-3, "p = {}", sol.p);
        let r = boundary_residual(sol.modulus, sol.label, &bc).unwrap();
        assert!(r.norm() < 1e-9, "round-trip residual {:.3e}", r.norm());
        assert!(sol.energy_defect(64) < 1e-8);
        assert!((sol.z(0.0).unwrap() - bc.xi).norm() < 1e-8);
        assert!((sol.z(10.0).unwrap() - bc.xf).norm() < 1e-8);
    }

    #[test]
    fn oscillatory_label_three_two() {
        let bc = bc_wells(15.0, TimeDirection::RealTime);
        let sol = solve_modulus(SaddleLabel::new(3, 2), &bc, None).unwrap();
        assert!((sol.p - C::new(0.987, 0.024)).norm() < 5e-3, "p = {}", sol.p);
    }

    #[test]
    fn conjugate_labels_have_conjugate_moduli() {
        let bc = bc_wells(6.0, TimeDirection::RealTime);
        let a = solve_modulus(SaddleLabel::new(2, 1), &bc, None).unwrap();
        let b = solve_modulus(SaddleLabel::new(2, -1), &bc, None).unwrap();
        assert!((a.modulus - b.modulus.conj()).norm() < 1e-9);
        assert!((a.p - b.p.conj()).norm() < 1e-9);
    }

    #[test]
    fn euclidean_instanton_momentum() {
        // Imaginary time, (1, 0). For large T the conserved momentum
        // approaches -8 e^{-T}.
        let bc = bc_wells(10.0, TimeDirection::ImaginaryTime);
        let sol = solve_modulus(SaddleLabel::new(1, 0), &bc, None).unwrap();
        let p_ref = C::new(-8.0 * (-10.0f64).exp(), 0.0);
        assert!(
            (sol.p - p_ref).norm() < 1e-2 * p_ref.norm(),
            "p = {} vs {}",
            sol.p,
            p_ref
        );
        // Root sits on the lower imaginary axis near -i e^{T/2}/4.
        let xi_ref = C::new(0.0, -(5.0f64).exp() / 4.0);
        assert!((sol.modulus - xi_ref).norm() < 0.5, "xi = {}", sol.modulus);
        // With p < 0 the endpoints z = +-1 lie past the real turning
        // points, where (dz/dtau)^2 = -p^2 < 0, so no real path reaches
        // them: this saddle is one of a conjugate pair of complex loops.
        // It hugs the kink tails near the ends, to within the
        // turning-point penetration depth sqrt(|p|), ...
        let band = sol.p.norm().sqrt();
        for j in 0..=4 {
            let t = 0.5 * j as f64;
            let z0 = sol.z(t).unwrap();
            let z1 = sol.z(10.0 - t).unwrap();
            assert!(z0.im.abs() < band, "Im z({t}) = {:e}", z0.im);
            assert!(z1.im.abs() < band, "Im z({}) = {:e}", 10.0 - t, z1.im);
        }
        // ... swings out to |z|^2 = 1 + |p| at the midpoint ...
        let zm = sol.z(5.0).unwrap();
        assert!(zm.re.abs() < 1e-6, "Re z(5) = {:e}", zm.re);
        assert!(
            (zm.norm_sqr() - 1.0).abs() < 3.0 * sol.p.norm(),
            "|z(5)|^2 = {}",
            zm.norm_sqr()
        );
        // ... and is odd under reflection through the midpoint combined
        // with conjugation.
        for j in 0..=10 {
            let t = 0.5 * j as f64;
            let z0 = sol.z(t).unwrap();
            let z1 = sol.z(10.0 - t).unwrap();
            assert!(
                (z1 + z0.conj()).norm() < 1e-8,
                "reflection defect at t = {t}"
            );
        }
    }

    #[test]
    fn euclidean_direct_roll() {
        // Imaginary time, (0, 0): same boundary data reached without
        // winding; p approaches 8 i e^{-T}.
        let bc = bc_wells(10.0, TimeDirection::ImaginaryTime);
        let sol = solve_modulus(SaddleLabel::new(0, 0), &bc, None).unwrap();
        let p_ref = C::new(0.0, 8.0 * (-10.0f64).exp());
        assert!(
            (sol.p - p_ref).norm() < 1e-2 * p_ref.norm(),
            "p = {} vs {}",
            sol.p,
            p_ref
        );
    }

    #[test]
    fn real_oscillation_above_barrier() {
        // (0, 1) at real time: a real periodic trajectory crossing both
        // wells, with p^2 > 1.
        let bc = bc_wells(3.0, TimeDirection::RealTime);
        let sol = solve_modulus(SaddleLabel::new(0, 1), &bc, None).unwrap();
        let psq = sol.p * sol.p;
        assert!(psq.im.abs() < 1e-9);
        assert!(psq.re > 1.0);
        for j in 0..=30 {
            let z = sol.z(0.1 * j as f64).unwrap();
            assert!(z.im.abs() < 1e-8);
        }
    }

    #[test]
    fn null_label_free_sweep() {
        // (0, 0) at short real time: nearly free motion between the
        // endpoints, p ~ (x_f - x_i)/T_c.
        let bc = bc_wells(0.5, TimeDirection::RealTime);
        let sol = solve_modulus(SaddleLabel::new(0, 0), &bc, None).unwrap();
        let p_free = (bc.xf - bc.xi) / bc.complex_duration();
        assert!((sol.p - p_free).norm() < 0.25 * p_free.norm(), "p = {}", sol.p);
        let r = boundary_residual(sol.modulus, sol.label, &bc).unwrap();
        assert!(r.norm() < 1e-9);
    }

    #[test]
    fn seeded_solve_matches_continuation() {
        let bc = bc_wells(10.0, TimeDirection::RealTime);
        let cont = solve_modulus(SaddleLabel::new(2, 1), &bc, None).unwrap();
        let seeded =
            solve_modulus(SaddleLabel::new(2, 1), &bc, Some(cont.modulus + C::new(1e-3, 1e-3)))
                .unwrap();
        assert!((seeded.modulus - cont.modulus).norm() < 1e-9);
    }

    #[test]
    fn shooting_oracle_agrees_with_closed_form() {
        // Independent check: integrate the equation of motion
        // z'' = -epsilon^2 2 z (z^2 - 1) in the real parameter t by RK4
        // from the solved initial data and compare along the way.
        let cases: [(SaddleLabel, f64, TimeDirection); 5] = [
            (SaddleLabel::new(1, 0), 4.0, TimeDirection::ImaginaryTime),
            (SaddleLabel::new(0, 1), 3.0, TimeDirection::RealTime),
            (SaddleLabel::new(2, 1), 4.0, TimeDirection::RealTime),
            (SaddleLabel::new(3, 2), 5.0, TimeDirection::RealTime),
            (SaddleLabel::new(2, -1), 4.0, TimeDirection::WickAngle(1.1)),
        ];
        for (label, t, time) in cases {
            let bc = bc_wells(t, time);
            let sol = solve_modulus(label, &bc, None).unwrap();
            let eps = time.epsilon();
            let acc = |z: C| -> C { -eps * eps * 2.0 * z * (z * z - 1.0) };
            let mut z = sol.z(0.0).unwrap();
            let mut v = eps * sol.zdot_contour(0.0).unwrap();
            let steps = 40_000usize;
            let h = t / steps as f64;
            let mut worst = 0.0f64;
            for j in 0..steps {
                let (k1z, k1v) = (v, acc(z));
                let (k2z, k2v) = (v + 0.5 * h * k1v, acc(z + 0.5 * h * k1z));
                let (k3z, k3v) = (v + 0.5 * h * k2v, acc(z + 0.5 * h * k2z));
                let (k4z, k4v) = (v + h * k3v, acc(z + h * k3z));
                z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
                v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
                if j % 400 == 0 {
                    let zc = sol.z(h * (j + 1) as f64).unwrap();
                    worst = worst.max((z - zc).norm() / zc.norm().max(1.0));
                }
            }
            let zc = sol.z(t).unwrap();
            worst = worst.max((z - zc).norm() / zc.norm().max(1.0));
            assert!(worst < 1e-6, "label ({},{}) deviation {worst:.3e}", label.n, label.m);
        }
    }
}
