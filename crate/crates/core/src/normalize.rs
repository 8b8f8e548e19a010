//! Min-max scaling fitted on training cases only.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureCase;

/// Per-feature `(min, max)` from the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationParams {
    pub fn fit(train: &[FeatureCase]) -> Result<Self> {
        let first = train.first().ok_or(Error::Empty("normalization needs training cases"))?;
        let dims = first.dims();
        let mut min = first.features.clone();
        let mut max = first.features.clone();
        for case in &train[1..] {
            if case.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    found: case.dims(),
                });
            }
            for (d, &v) in case.features.iter().enumerate() {
                min[d] = min[d].min(v);
                max[d] = max[d].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn dims(&self) -> usize {
        self.min.len()
    }

    /// `(x - min) / (max - min)`; constant features map to 0. No clamping,
    /// so unseen data may land outside `[0, 1]`.
    pub fn transform(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: features.len(),
            });
        }
        Ok(features
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
            .collect())
    }

    pub fn transform_case(&self, case: &FeatureCase) -> Result<FeatureCase> {
        Ok(FeatureCase {
            features: self.transform(&case.features)?,
            ..case.clone()
        })
    }

    pub fn transform_cases(&self, cases: &[FeatureCase]) -> Result<Vec<FeatureCase>> {
        cases.iter().map(|c| self.transform_case(c)).collect()
    }
}

/// Fits on `train` and transforms `train` plus every set in `others`.
pub fn minmax_fit_apply(
    train: &[FeatureCase],
    others: &[&[FeatureCase]],
) -> Result<(NormalizationParams, Vec<FeatureCase>, Vec<Vec<FeatureCase>>)> {
    let params = NormalizationParams::fit(train)?;
    let train_t = params.transform_cases(train)?;
    let others_t = others
        .iter()
        .map(|set| params.transform_cases(set))
        .collect::<Result<_>>()?;
    Ok((params, train_t, others_t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn case(features: Vec<f64>) -> FeatureCase {
        FeatureCase {
            player_id: "p".into(),
            season: 2010,
            week: 1,
            features,
            label: 7.0,
        }
    }

    #[test]
    fn endpoints_map_to_zero_and_one() {
        let train = [case(vec![2.0]), case(vec![4.0])];
        let (_, t, _) = minmax_fit_apply(&train, &[]).unwrap();
        assert_eq!(t[0].features, vec![0.0]);
        assert_eq!(t[1].features, vec![1.0]);
        assert_eq!(t[0].label, 7.0);
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let train = [case(vec![5.0]), case(vec![5.0]), case(vec![5.0])];
        let (_, t, _) = minmax_fit_apply(&train, &[]).unwrap();
        assert!(t.iter().all(|c| c.features == vec![0.0]));
    }

    #[test]
    fn test_values_are_not_clamped() {
        let train = [case(vec![2.0]), case(vec![4.0])];
        let test = [case(vec![6.0])];
        let (params, _, others) = minmax_fit_apply(&train, &[&test]).unwrap();
        assert_eq!(others[0][0].features, vec![2.0]);
        assert_eq!(params.min, vec![2.0]);
        assert_eq!(params.max, vec![4.0]);
    }

    #[test]
    fn empty_and_ragged_inputs_error() {
        assert!(NormalizationParams::fit(&[]).is_err());
        assert!(NormalizationParams::fit(&[case(vec![1.0]), case(vec![1.0, 2.0])]).is_err());
        let params = NormalizationParams::fit(&[case(vec![1.0])]).unwrap();
        assert!(params.transform(&[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn transformed_train_lies_in_unit_box(
            rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 4), 1..30)
        ) {
            let train: Vec<_> = rows.into_iter().map(case).collect();
            let (_, t, _) = minmax_fit_apply(&train, &[]).unwrap();
            for c in &t {
                for &v in &c.features {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }
}
