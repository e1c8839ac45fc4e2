//! Atlas construction: solve and classify every admissible label in a
//! winding window.

use rayon::prelude::*;

use crate::saddles::{
    classify, in_sigma, solve_modulus, BoundaryData, Classification, ClassicalSolution,
    SaddleLabel,
};
use crate::Result;

/// Outcome for one label: either a solved, classified saddle or the error
/// that stopped it. Failures are data here, not aborts: one stubborn label
/// must not take down an atlas.
#[derive(Debug)]
pub struct LabelOutcome {
    pub label: SaddleLabel,
    pub result: Result<(ClassicalSolution, Classification)>,
}

/// Full result of an atlas sweep.
#[derive(Debug)]
pub struct EnumerationReport {
    pub outcomes: Vec<LabelOutcome>,
}

impl EnumerationReport {
    pub fn solved(&self) -> impl Iterator<Item = (&ClassicalSolution, &Classification)> {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok().map(|(s, c)| (s, c)))
    }

    pub fn failures(&self) -> impl Iterator<Item = (SaddleLabel, &crate::Error)> {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().err().map(|e| (o.label, e)))
    }
}

/// Solve and classify all canonical admissible labels with 0 <= n <= n_max
/// and |m| <= m_max. Labels are deduplicated under (n, m) ~ (-n, -m) by
/// keeping n > 0 or (n = 0, m >= 0). Work is distributed across threads;
/// the report is sorted by label for deterministic output.
pub fn enumerate_saddles(
    bc: &BoundaryData,
    n_max: i64,
    m_max: i64,
    stokes_delta: f64,
) -> EnumerationReport {
    let labels: Vec<SaddleLabel> = (0..=n_max)
        .flat_map(|n| (-m_max..=m_max).map(move |m| SaddleLabel::new(n, m)))
        .filter(|l| (l.n > 0 || l.m >= 0) && in_sigma(*l))
        .collect();
    let mut outcomes: Vec<LabelOutcome> = labels
        .into_par_iter()
        .map(|label| {
            let result = solve_modulus(label, bc, None).and_then(|sol| {
                let cls = classify(&sol, stokes_delta)?;
                Ok((sol, cls))
            });
            LabelOutcome { label, result }
        })
        .collect();
    outcomes.sort_by_key(|o| o.label);
    EnumerationReport { outcomes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::C;
    use crate::saddles::{SaddleClass, TimeDirection};

    #[test]
    fn atlas_on_short_interwell_window() {
        let bc = BoundaryData::new(
            C::new(-1.0, 0.0),
            C::new(1.0, 0.0),
            0.0,
            0.5,
            TimeDirection::RealTime,
        )
        .unwrap();
        let report = enumerate_saddles(&bc, 2, 2, 1e-3);
        // Canonical admissible labels with n <= 2, |m| <= 2; (2,2) and
        // (2,-2) reduce to (1,1) and (1,-1), which have both reduced
        // components odd and fall outside the admissible set:
        // (0,0) (0,1) (0,2) (1,-2) (1,0) (1,2) (2,-1) (2,0) (2,1).
        assert_eq!(report.outcomes.len(), 9);
        let solved: Vec<_> = report.solved().collect();
        assert!(
            solved.len() == 9,
            "only {} of 9 labels solved",
            solved.len()
        );
        // (0, 0) at short duration is a nearly free sweep: a real saddle.
        let zero = report
            .solved()
            .find(|(s, _)| s.label == SaddleLabel::new(0, 0))
            .expect("(0,0) must solve");
        assert_eq!(zero.1.class, SaddleClass::RealSolution);
        assert_eq!(zero.1.n_sigma, Some(1));
        // No classified suppressed saddle may carry an intersection number.
        for (_, cls) in report.solved() {
            if cls.class == SaddleClass::Suppressed {
                assert_eq!(cls.n_sigma, None);
            }
        }
        // Deterministic order.
        let labels: Vec<_> = report.outcomes.iter().map(|o| o.label).collect();
        let mut sorted = labels.clone();
        sorted.sort();
        assert_eq!(labels, sorted);
    }

    #[test]
    fn conjugate_pairs_swap_suppressed_and_excluded() {
        let bc = BoundaryData::new(
            C::new(-1.0, 0.0),
            C::new(1.0, 0.0),
            0.0,
            4.0,
            TimeDirection::RealTime,
        )
        .unwrap();
        let report = enumerate_saddles(&bc, 2, 1, 1e-3);
        let find = |n: i64, m: i64| {
            report
                .solved()
                .find(|(s, _)| s.label == SaddleLabel::new(n, m))
                .map(|(_, c)| c.class)
        };
        let up = find(2, 1).expect("(2,1) solves");
        let dn = find(2, -1).expect("(2,-1) solves");
        let swapped = |a: SaddleClass| match a {
            SaddleClass::Suppressed => SaddleClass::Excluded,
            SaddleClass::Excluded => SaddleClass::Suppressed,
            other => other,
        };
        assert_eq!(up, swapped(dn));
    }
}
