use serde::{Deserialize, Serialize};

use crate::VisionError;

/// Knife travel covered by the deformation map, mm.
pub const STROKE_MM: f64 = 35.0;

/// Nominal deformation of each class, percent.
pub const NOMINAL_DEFORMATION: [f64; 4] = [0.0, 33.0, 67.0, 100.0];

/// Position→deformation knots (mm, %); flat at 0% before the first.
const KNOTS: [(f64, f64); 4] = [(12.0, 0.0), (21.7, 33.0), (30.1, 67.0), (35.0, 100.0)];

/// The four compression levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DeformationClass {
    Compress00,
    Compress01,
    Compress02,
    Compress03,
}

impl DeformationClass {
    pub const ALL: [DeformationClass; 4] = [
        DeformationClass::Compress00,
        DeformationClass::Compress01,
        DeformationClass::Compress02,
        DeformationClass::Compress03,
    ];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Self> {
        Self::ALL.get(id).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            DeformationClass::Compress00 => "Compress00",
            DeformationClass::Compress01 => "Compress01",
            DeformationClass::Compress02 => "Compress02",
            DeformationClass::Compress03 => "Compress03",
        }
    }

    pub fn nominal_deformation(self) -> f64 {
        NOMINAL_DEFORMATION[self.id()]
    }

    /// Knife positions of the class, mm: `[lo, hi)`, closed at 35 for the last.
    pub fn position_range(self) -> (f64, f64) {
        match self {
            DeformationClass::Compress00 => (0.0, 12.0),
            DeformationClass::Compress01 => (12.0, 21.7),
            DeformationClass::Compress02 => (21.7, 30.1),
            DeformationClass::Compress03 => (30.1, 35.0),
        }
    }

    pub fn midpoint_mm(self) -> f64 {
        let (lo, hi) = self.position_range();
        0.5 * (lo + hi)
    }
}

impl std::fmt::Display for DeformationClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn check_position(p: f64) -> Result<(), VisionError> {
    if (0.0..=STROKE_MM).contains(&p) {
        Ok(())
    } else {
        Err(VisionError::OutOfRange(p))
    }
}

/// Piecewise-linear deformation (%) at a knife position (mm).
pub fn ground_truth_deformation(position_mm: f64) -> Result<f64, VisionError> {
    check_position(position_mm)?;
    if position_mm <= KNOTS[0].0 {
        return Ok(0.0);
    }
    for w in KNOTS.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if position_mm <= x1 {
            return Ok(y0 + (position_mm - x0) / (x1 - x0) * (y1 - y0));
        }
    }
    Ok(100.0)
}

pub fn class_from_position(position_mm: f64) -> Result<DeformationClass, VisionError> {
    check_position(position_mm)?;
    Ok(DeformationClass::ALL
        .into_iter()
        .find(|c| position_mm < c.position_range().1)
        .unwrap_or(DeformationClass::Compress03))
}

/// A probability vector over the four classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct ClassProbabilities([f64; 4]);

impl ClassProbabilities {
    pub const SUM_TOLERANCE: f64 = 1e-6;

    pub fn new(p: [f64; 4]) -> Result<Self, VisionError> {
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(VisionError::Probabilities(format!(
                "entries must lie in [0, 1]: {p:?}"
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(VisionError::Probabilities(format!("entries sum to {sum}")));
        }
        Ok(Self(p))
    }

    /// Normalises non-negative weights.
    pub fn from_weights(w: [f64; 4]) -> Result<Self, VisionError> {
        let sum: f64 = w.iter().sum();
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !(sum > 0.0) {
            return Err(VisionError::Probabilities(format!("bad weights {w:?}")));
        }
        Ok(Self(w.map(|v| v / sum)))
    }

    pub fn one_hot(class: DeformationClass) -> Self {
        let mut p = [0.0; 4];
        p[class.id()] = 1.0;
        Self(p)
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn get(&self, class: DeformationClass) -> f64 {
        self.0[class.id()]
    }

    /// Classes ordered by decreasing probability; ties keep class order.
    pub fn ranked(&self) -> [DeformationClass; 4] {
        let mut order = DeformationClass::ALL;
        order.sort_by(|a, b| self.get(*b).total_cmp(&self.get(*a)));
        order
    }

    pub fn argmax(&self) -> DeformationClass {
        self.ranked()[0]
    }
}

impl TryFrom<[f64; 4]> for ClassProbabilities {
    type Error = VisionError;
    fn try_from(p: [f64; 4]) -> Result<Self, Self::Error> {
        Self::new(p)
    }
}

impl From<ClassProbabilities> for [f64; 4] {
    fn from(p: ClassProbabilities) -> Self {
        p.0
    }
}

/// Probability-weighted nominal deformation, percent.
///
/// Takes a raw vector so that weightings that do not quite sum to one can be
/// reproduced as written.
pub fn optimized_deformation(probs: &[f64; 4]) -> f64 {
    probs
        .iter()
        .zip(NOMINAL_DEFORMATION)
        .map(|(p, n)| p * n)
        .sum()
}

/// Snap-or-blend rule for turning class probabilities into one number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    /// Top-1 probability a class must exceed to snap to its nominal value.
    pub snap_threshold: [f64; 4],
    /// Renormalise the top-2 probabilities before blending.
    pub renormalize: bool,
}

impl Default for DecisionRule {
    fn default() -> Self {
        Self {
            snap_threshold: [0.90, 0.95, 0.95, 0.95],
            renormalize: true,
        }
    }
}

impl DecisionRule {
    /// Whether the top class clears its threshold.
    pub fn snaps(&self, probs: &ClassProbabilities) -> Option<DeformationClass> {
        let top = probs.argmax();
        (probs.get(top) > self.snap_threshold[top.id()]).then_some(top)
    }

    pub fn decide(&self, probs: &ClassProbabilities) -> f64 {
        if let Some(c) = self.snaps(probs) {
            return c.nominal_deformation();
        }
        let [a, b, ..] = probs.ranked();
        let (pa, pb) = (probs.get(a), probs.get(b));
        let blended = pa * a.nominal_deformation() + pb * b.nominal_deformation();
        if self.renormalize {
            blended / (pa + pb)
        } else {
            blended
        }
    }
}

/// [`DecisionRule::decide`] with the stock thresholds and renormalisation.
pub fn decide_deformation(probs: &ClassProbabilities) -> f64 {
    DecisionRule::default().decide(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use DeformationClass::*;

    #[test]
    fn ground_truth_examples() {
        assert_eq!(ground_truth_deformation(5.0).unwrap(), 0.0);
        assert!((ground_truth_deformation(21.7).unwrap() - 33.0).abs() < 1e-12);
        assert!((ground_truth_deformation(25.9).unwrap() - 50.0).abs() < 1e-12);
        assert_eq!(ground_truth_deformation(35.0).unwrap(), 100.0);
        assert!(ground_truth_deformation(35.1).is_err());
        assert!(ground_truth_deformation(-0.1).is_err());
    }

    #[test]
    fn class_boundaries() {
        assert_eq!(class_from_position(5.0).unwrap(), Compress00);
        assert_eq!(class_from_position(12.0).unwrap(), Compress01);
        assert_eq!(class_from_position(21.7).unwrap(), Compress02);
        assert_eq!(class_from_position(30.1).unwrap(), Compress03);
        assert_eq!(class_from_position(35.0).unwrap(), Compress03);
        assert!(class_from_position(36.0).is_err());
    }

    #[test]
    fn ranges_partition_stroke() {
        let ranges: Vec<_> = DeformationClass::ALL.iter().map(|c| c.position_range()).collect();
        assert_eq!(ranges[0].0, 0.0);
        assert_eq!(ranges[3].1, STROKE_MM);
        for w in ranges.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        assert!(NOMINAL_DEFORMATION.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn optimized_examples() {
        // The prose quotes 0.0004 for the third class; the worked formula
        // uses .004, which is what produces 32.5519.
        let v = optimized_deformation(&[0.0213, 0.9783, 0.004, 0.0]);
        assert!((v - 32.5519).abs() < 1e-4, "{v}");
        assert_eq!(optimized_deformation(&[0.0, 0.0, 0.0, 1.0]), 100.0);
        assert_eq!(optimized_deformation(&[0.25; 4]), 50.0);
    }

    #[test]
    fn decision_examples() {
        let p = |v| ClassProbabilities::new(v).unwrap();
        assert_eq!(decide_deformation(&p([0.92, 0.05, 0.02, 0.01])), 0.0);
        assert_eq!(decide_deformation(&p([0.02, 0.96, 0.01, 0.01])), 33.0);
        let v = decide_deformation(&p([0.10, 0.50, 0.40, 0.00]));
        assert!((v - (0.50 * 33.0 + 0.40 * 67.0) / 0.90).abs() < 1e-12);
        assert!((v - 48.11).abs() < 0.005);
        let raw = DecisionRule {
            renormalize: false,
            ..DecisionRule::default()
        };
        assert!((raw.decide(&p([0.10, 0.50, 0.40, 0.00])) - 43.3).abs() < 1e-12);
    }

    #[test]
    fn probability_contract() {
        assert!(ClassProbabilities::new([0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(ClassProbabilities::new([1.1, -0.1, 0.0, 0.0]).is_err());
        assert!(ClassProbabilities::new([0.25; 4]).is_ok());
        let json = serde_json::to_string(&ClassProbabilities::one_hot(Compress02)).unwrap();
        assert_eq!(json, "[0.0,0.0,1.0,0.0]");
        assert!(serde_json::from_str::<ClassProbabilities>("[0.5,0.6,0,0]").is_err());
    }

    proptest::proptest! {
        #[test]
        fn optimized_permutation_invariant(
            w in proptest::array::uniform4(0.0f64..1.0), perm in proptest::sample::select(vec![
                [0usize, 1, 2, 3], [3, 2, 1, 0], [1, 0, 3, 2], [2, 3, 0, 1], [1, 2, 3, 0],
            ])
        ) {
            let s: f64 = w.iter().sum::<f64>().max(1e-9);
            let p = w.map(|v| v / s);
            let direct = optimized_deformation(&p);
            let permuted: f64 = perm.iter().map(|&i| p[i] * NOMINAL_DEFORMATION[i]).sum();
            proptest::prop_assert!((direct - permuted).abs() < 1e-9);
            proptest::prop_assert!((0.0..=100.0 + 1e-9).contains(&direct));
        }
    }
}
