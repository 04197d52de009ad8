use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LatticeSupport, SequenceModel, StepAmbiguity, Steps};
use crate::error::{invalid, Result};

/// On-disk form of a [`SequenceModel`].
///
/// ```json
/// { "horizon": 2, "delta": 1.0,
///   "iid": { "points": [-2, -1, 1, 2],
///            "measures": [[0, 0.5, 0.5, 0], [0.5, 0, 0, 0.5]] } }
/// ```
///
/// Exactly one of `iid` and `steps` must be present. Points are lattice
/// indices; probabilities are written in shortest round-trip decimal form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub horizon: usize,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iid: Option<StepFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<StepFile>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepFile {
    pub points: Vec<i64>,
    pub measures: Vec<Vec<f64>>,
}

impl StepFile {
    fn build(&self, delta: f64) -> Result<StepAmbiguity> {
        StepAmbiguity::new(LatticeSupport::new(delta, self.points.clone())?, self.measures.clone())
    }

    fn of(step: &StepAmbiguity) -> Self {
        Self { points: step.support().points().to_vec(), measures: step.measures().to_vec() }
    }
}

impl ModelFile {
    pub fn build(&self) -> Result<SequenceModel> {
        match (&self.iid, &self.steps) {
            (Some(step), None) => SequenceModel::iid(step.build(self.delta)?, self.horizon),
            (None, Some(steps)) => {
                if steps.len() != self.horizon {
                    return Err(invalid(format!("horizon is {} but {} steps are listed", self.horizon, steps.len())));
                }
                let steps = steps.iter().map(|s| s.build(self.delta)).collect::<Result<_>>()?;
                SequenceModel::explicit(steps)
            }
            (Some(_), Some(_)) => Err(invalid("model lists both `iid` and `steps`")),
            (None, None) => Err(invalid("model needs either `iid` or `steps`")),
        }
    }

    pub fn of(model: &SequenceModel) -> Self {
        let (iid, steps) = match model.steps() {
            Steps::Iid(s) => (Some(StepFile::of(s)), None),
            Steps::Explicit(v) => (None, Some(v.iter().map(StepFile::of).collect())),
        };
        Self { horizon: model.horizon(), delta: model.delta(), iid, steps }
    }

    pub fn from_json(text: &str) -> Result<SequenceModel> {
        serde_json::from_str::<Self>(text)?.build()
    }

    pub fn to_json(model: &SequenceModel) -> String {
        serde_json::to_string_pretty(&Self::of(model)).expect("model serialization cannot fail")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SequenceModel> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::random::{random_model, RandomModelSpec};
    use crate::rng::SplitMix64;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..50 {
            let model = random_model(&mut rng, &RandomModelSpec::default());
            let back = ModelFile::from_json(&ModelFile::to_json(&model)).unwrap();
            assert_eq!(back, model);
        }
    }

    #[test]
    fn parses_documented_example() {
        let text = r#"{ "horizon": 2, "delta": 1.0,
            "iid": { "points": [-2, -1, 1, 2],
                     "measures": [[0, 0.5, 0.5, 0], [0.5, 0, 0, 0.5]] } }"#;
        let m = ModelFile::from_json(text).unwrap();
        assert_eq!(m.horizon(), 2);
        assert!(m.is_iid());
        assert_eq!(m.step(1).measure_count(), 2);
    }

    #[test]
    fn rejects_inconsistent_files() {
        let both = r#"{"horizon":1,"delta":1,"iid":{"points":[0],"measures":[[1]]},
                       "steps":[{"points":[0],"measures":[[1]]}]}"#;
        assert!(ModelFile::from_json(both).is_err());
        let short = r#"{"horizon":2,"delta":1,"steps":[{"points":[0],"measures":[[1]]}]}"#;
        assert!(ModelFile::from_json(short).is_err());
        let extra = r#"{"horizon":1,"delta":1,"iid":{"points":[0],"measures":[[1]]},"x":1}"#;
        assert!(ModelFile::from_json(extra).is_err());
        assert!(ModelFile::from_json("{").is_err());
    }
}
