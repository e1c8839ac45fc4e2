//! Principal inverse of sd = sn/dn.
//!
//! From (d sd/du)^2 expressed in sd itself,
//!
//!   u(x) = INT_0^x dw / sqrt( (1 - (1-m) w^2)(1 + m w^2) ),
//!
//! continued analytically from u'(0) = 1 along a path from 0 to x. The
//! quartic radicand is split into linear factors, one square root per
//! factor, each cut ray pointing away from the integration path, so the
//! product is single-valued on the path with no runtime branch tracking;
//! the overall sign is pinned by sqrt(...) = +1 at w = 0. The path is the
//! straight segment unless a branch point +-1/sqrt(1-m) or +-i/sqrt(m)
//! crowds its interior, in which case the crowded stretch is bypassed on
//! the far side, which leaves the value unchanged (no branch point is
//! crossed). Legs are integrated by tanh-sinh quadrature, for which a
//! singularity near a leg is harmless at a leg endpoint as long as it
//! sits well off the incoming track: the double-exponential map turns
//! the angle to the track into the width of the analyticity strip. The
//! endpoint x itself may sit within 1e-4 of a branch point (trajectories
//! that start almost at rest do exactly that, and can even have a pair
//! of them straddling x), so the final approach runs diagonally in from
//! outside, keeping every such root at a blunt angle; bypass sides are
//! chosen by scoring that strip width and cut rays are checked against
//! the whole path. Newton steps on sd(u) = x polish the result where
//! sd' is healthy.

use super::jacobi::sd_with_derivative;
use super::BranchedModulus;
use crate::num::{C, I, ONE, ZERO};
use crate::{Error, Result};

/// Branch points closer to the segment than this (in units of |x|) force
/// a detour.
const CLEARANCE: f64 = 0.09;
/// Height of the detour, in units of |x|. Must exceed CLEARANCE.
const LIFT: f64 = 0.18;

/// Principal inverse of sd at parameter m.
pub fn inv_sd(x: C, m: &BranchedModulus) -> Result<C> {
    let msq = m.ksq;
    if x.norm() == 0.0 {
        return Ok(ZERO);
    }
    let quads = split_factors(x, msq);
    let path = build_path(x, &quads);
    let scheme = SqrtScheme::fit(x, &quads, &path);
    let mut u = ZERO;
    for leg in path.points.windows(2) {
        u += tanh_sinh(&|w| scheme.eval_inv(w), leg[0], leg[1], x)?;
    }
    polish(u, x, msq)
}

/// One quadratic factor 1 + q w^2 of the radicand: kept whole (principal
/// square root) while it stays within 1% of 1 on the path, split into
/// linear factors at its roots +-rho otherwise.
enum Quad {
    Whole(C),
    Split { q: C, rho: C },
}

fn split_factors(x: C, msq: C) -> Vec<Quad> {
    let reach = 1.6 * x.norm();
    [msq - 1.0, msq]
        .into_iter()
        .map(|q| {
            if q.norm() * reach * reach < 1e-2 {
                Quad::Whole(q)
            } else {
                Quad::Split {
                    q,
                    rho: (-q.inv()).sqrt(),
                }
            }
        })
        .collect()
}

struct Path {
    points: Vec<C>,
    /// Stretches (lo, hi, side) of the normalized segment [0, 1] where the
    /// path runs lifted off the axis; the terminal stretch has hi > 1.
    covers: Vec<(f64, f64, f64)>,
}

/// Width of the tanh-sinh analyticity strip for a singularity at w when
/// integrating over the leg [a, b], in units of the step tau. Zero on the
/// leg itself; large when the singularity sits behind an endpoint or at a
/// blunt angle to it.
fn strip_score(a: C, b: C, w: C) -> f64 {
    let half = 0.5 * (b - a);
    if half.norm() == 0.0 {
        return f64::INFINITY;
    }
    let dstar = (b - w) / half;
    if dstar.norm() == 0.0 {
        return 0.0;
    }
    let s = 0.5 * (2.0 * dstar.inv() - ONE).ln();
    (2.0 / std::f64::consts::PI * s).asinh().im.abs()
}

fn min_strip(legs: &[C], roots: &[C]) -> f64 {
    let mut worst = f64::INFINITY;
    for leg in legs.windows(2) {
        for r in roots {
            worst = worst.min(strip_score(leg[0], leg[1], *r));
        }
    }
    worst
}

/// Straight segment from 0 to x in normalized coordinates, with
/// rectangular detours over stretches whose interior is crowded by a
/// branch point. A branch point crowding the far endpoint replaces the
/// tail by an excursion past the endpoint and a diagonal approach into
/// it from outside, so roots straddling x stay at a blunt angle to the
/// incoming track. Each detour takes whichever side scores the wider
/// analyticity strip against the full set of branch points.
fn build_path(x: C, quads: &[Quad]) -> Path {
    let mut roots: Vec<C> = Vec::new();
    for quad in quads {
        if let Quad::Split { rho, .. } = quad {
            roots.push(*rho / x);
            roots.push(-*rho / x);
        }
    }
    let mut spans: Vec<(f64, f64)> = Vec::new();
    let mut terminal: Option<f64> = None;
    for z in &roots {
        if z.im.abs() >= CLEARANCE || z.re <= 0.02 || z.re >= 1.0 {
            continue;
        }
        if z.re > 0.82 {
            let lo = z.re - 0.16;
            terminal = Some(terminal.map_or(lo, |t: f64| t.min(lo)));
        } else {
            spans.push((z.re - 0.16, z.re + 0.16));
        }
    }
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for s in spans {
        match merged.last_mut() {
            Some(last) if s.0 <= last.1 => last.1 = last.1.max(s.1),
            _ => merged.push(s),
        }
    }
    if let Some(lo) = &mut terminal {
        while let Some(last) = merged.last() {
            if last.1 >= *lo - 1e-9 {
                *lo = lo.min(last.0);
                merged.pop();
            } else {
                break;
            }
        }
    }
    let best_side = |legs_of: &dyn Fn(f64) -> Vec<C>| -> f64 {
        let up = min_strip(&legs_of(1.0), &roots);
        let down = min_strip(&legs_of(-1.0), &roots);
        if down > up {
            -1.0
        } else {
            1.0
        }
    };
    let mut pts = vec![ZERO];
    let mut covers = Vec::new();
    for (lo, hi) in merged {
        let lo = lo.max(0.02);
        let legs_of = |s: f64| -> Vec<C> {
            let lift = C::new(0.0, s * LIFT);
            vec![
                C::new(lo, 0.0),
                C::new(lo, 0.0) + lift,
                C::new(hi, 0.0) + lift,
                C::new(hi, 0.0),
            ]
        };
        let side = best_side(&legs_of);
        pts.extend_from_slice(&legs_of(side));
        covers.push((lo, hi, side));
    }
    match terminal {
        Some(lo) => {
            let lo = lo.max(0.02);
            let legs_of = |s: f64| -> Vec<C> {
                let lift = C::new(0.0, s * LIFT);
                vec![
                    C::new(lo, 0.0),
                    C::new(lo, 0.0) + lift,
                    C::new(1.0 + LIFT, 0.0) + lift,
                    ONE,
                ]
            };
            let side = best_side(&legs_of);
            pts.extend_from_slice(&legs_of(side));
            covers.push((lo, 1.0 + LIFT, side));
        }
        None => pts.push(ONE),
    }
    pts.dedup();
    Path {
        points: pts.into_iter().map(|z| z * x).collect(),
        covers,
    }
}

/// Whether the ray origin + t dir, t > 0, crosses any leg of the path
/// (all in normalized coordinates).
fn ray_hits_path(origin: C, dir: C, pts: &[C]) -> bool {
    let cross = |a: C, b: C| a.re * b.im - a.im * b.re;
    for leg in pts.windows(2) {
        let e = leg[1] - leg[0];
        let den = cross(dir, e);
        if den.abs() < 1e-14 * (1.0 + e.norm()) {
            continue;
        }
        let rel = leg[0] - origin;
        let t = cross(rel, e) / den;
        let s = cross(rel, dir) / den;
        if t > 1e-9 && (-0.02..=1.02).contains(&s) {
            return true;
        }
    }
    false
}

/// Square root of the radicand as a product of per-factor square roots
/// with frozen cut rays, normalised to +1 at w = 0.
struct SqrtScheme {
    /// (root, mu, minus conj of the cut direction) per linear factor;
    /// sqrt(w - root) with the cut along `dir` is sqrt((w - root) * mcd) * mu.
    linear: Vec<(C, C, C)>,
    whole: Vec<C>,
    consts: C,
    r0: C,
}

impl SqrtScheme {
    fn fit(x: C, quads: &[Quad], path: &Path) -> Self {
        let xhat = x / x.norm();
        let norm_pts: Vec<C> = path.points.iter().map(|p| p / x).collect();
        let f = std::f64::consts::FRAC_1_SQRT_2;
        let mut scheme = SqrtScheme {
            linear: Vec::new(),
            whole: Vec::new(),
            consts: ONE,
            r0: ONE,
        };
        for quad in quads {
            match quad {
                Quad::Whole(q) => scheme.whole.push(*q),
                Quad::Split { q, rho } => {
                    scheme.consts *= q.sqrt();
                    for root in [*rho, -*rho] {
                        let z = root / x;
                        let covered = path
                            .covers
                            .iter()
                            .find(|(lo, hi, _)| *lo <= z.re && z.re <= *hi && z.im.abs() < LIFT);
                        let zdir = match covered {
                            Some((_, hi, side)) => {
                                // Diagonal-first near the terminal wedge,
                                // vertical-first under an interior bump;
                                // then anything that clears the path.
                                let mut cands = vec![
                                    C::new(-f, -side * f),
                                    C::new(0.0, -side),
                                    C::new(-1.0, 0.0),
                                    C::new(f, -side * f),
                                    C::new(0.0, *side),
                                    C::new(-f, side * f),
                                    C::new(1.0, 0.0),
                                    C::new(f, side * f),
                                ];
                                if *hi <= 1.0 {
                                    cands.swap(0, 1);
                                }
                                cands
                                    .iter()
                                    .copied()
                                    .find(|d| !ray_hits_path(z, *d, &norm_pts))
                                    .unwrap_or(cands[0])
                            }
                            None => {
                                let (dist, near, leg) = nearest_on_path(z, &norm_pts);
                                let away = if dist < 1e-13 * (1.0 + z.norm()) {
                                    I * leg
                                } else {
                                    (z - near) / dist
                                };
                                if ray_hits_path(z, away, &norm_pts) {
                                    let cands = [
                                        away,
                                        I * away,
                                        -I * away,
                                        C::new(f, f) * away,
                                        C::new(f, -f) * away,
                                        -away,
                                    ];
                                    cands
                                        .iter()
                                        .copied()
                                        .find(|d| !ray_hits_path(z, *d, &norm_pts))
                                        .unwrap_or(away)
                                } else {
                                    away
                                }
                            }
                        };
                        let dir = zdir * xhat;
                        scheme.linear.push((root, (-dir).sqrt(), -dir.conj()));
                    }
                }
            }
        }
        scheme.r0 = scheme.raw(ZERO);
        scheme
    }

    fn raw(&self, w: C) -> C {
        let mut r = self.consts;
        for &(root, mu, mcd) in &self.linear {
            r *= ((w - root) * mcd).sqrt() * mu;
        }
        for &q in &self.whole {
            r *= (ONE + q * w * w).sqrt();
        }
        r
    }

    fn eval_inv(&self, w: C) -> C {
        self.r0 / self.raw(w)
    }
}

fn nearest_on_path(p: C, pts: &[C]) -> (f64, C, C) {
    let mut best = (f64::INFINITY, ZERO, ONE);
    for leg in pts.windows(2) {
        let d = leg[1] - leg[0];
        let len2 = d.norm_sqr();
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p - leg[0]) * d.conj()).re / len2).clamp(0.0, 1.0)
        };
        let q = leg[0] + t * d;
        let dist = (p - q).norm();
        if dist < best.0 {
            let unit = if len2 == 0.0 { ONE } else { d / len2.sqrt() };
            best = (dist, q, unit);
        }
    }
    best
}

/// Tanh-sinh quadrature of f over the segment [a, b], with node positions
/// held in offset-from-endpoint form so clustering is not lost to rounding.
fn tanh_sinh(f: &impl Fn(C) -> C, a: C, b: C, x: C) -> Result<C> {
    if (b - a).norm() == 0.0 {
        return Ok(ZERO);
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    const TMAX: f64 = 3.8;
    const PI_2: f64 = std::f64::consts::FRAC_PI_2;
    // Node pair at +-tau: offset d = 1 -+ t from the near endpoint, weight
    // from sech^2 = d (2 - d).
    let pair = |tau: f64| -> C {
        let s = PI_2 * tau.sinh();
        let d = 2.0 / (1.0 + (2.0 * s).exp());
        if d < 1e-22 {
            return ZERO;
        }
        let wgt = PI_2 * tau.cosh() * d * (2.0 - d);
        wgt * (f(b - half * d) + f(a + half * d))
    };
    let mut h = 0.5;
    let mut acc = PI_2 * f(mid);
    let mut k = 1;
    while (k as f64) * h <= TMAX {
        acc += pair(k as f64 * h);
        k += 1;
    }
    let mut value = acc * h * half;
    for level in 0..6 {
        let hh = 0.5 * h;
        let mut k = 1;
        while (k as f64) * hh <= TMAX {
            acc += pair(k as f64 * hh);
            k += 2;
        }
        h = hh;
        let next = acc * h * half;
        let diff = (next - value).norm();
        value = next;
        if (level >= 1 && diff < 1e-12 * (1.0 + value.norm()))
            || (level == 5 && diff < 1e-9 * (1.0 + value.norm()))
        {
            return Ok(value);
        }
    }
    Err(Error::NonConvergence(format!(
        "sd inverse quadrature stalled on the way to {x}"
    )))
}

fn polish(mut u: C, x: C, msq: C) -> Result<C> {
    let mut best = u;
    let mut best_res = f64::INFINITY;
    for _ in 0..6 {
        let (sd, dsd) = sd_with_derivative(u, msq);
        let res = (sd - x).norm();
        if res < best_res {
            best_res = res;
            best = u;
        }
        // Near a turning point the derivative vanishes; the quadrature
        // value is already accurate there and Newton would overshoot.
        if dsd.norm() < 1e-10 {
            break;
        }
        let step = (sd - x) / dsd;
        if step.norm() > 0.05 * (1.0 + u.norm()) {
            break;
        }
        u -= step;
        if step.norm() < 1e-15 * (1.0 + u.norm()) {
            break;
        }
    }
    let (sd, _) = sd_with_derivative(best, msq);
    let res = (sd - x).norm();
    if res > 1e-9 * (1.0 + x.norm()) {
        return Err(Error::NonConvergence(format!(
            "sd inverse polish stalled: residual {res:.3e} at x = {x}"
        )));
    }
    Ok(best)
}
