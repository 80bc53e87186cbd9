use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ClassifierError;
use crate::features::{FeatureName, FeatureVector};
use crate::frame::{FrameMeta, PoseClass};

#[derive(Debug, Clone, PartialEq)]
pub struct PoseSample {
    pub features: FeatureVector,
    pub label: PoseClass,
    pub meta: Option<FrameMeta>,
}

/// Feature rows sharing one feature list, each with a pose label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    feature_names: Vec<FeatureName>,
    samples: Vec<PoseSample>,
}

impl LabeledDataset {
    pub fn new(
        feature_names: Vec<FeatureName>,
        samples: Vec<PoseSample>,
    ) -> Result<Self, ClassifierError> {
        if samples.is_empty() {
            return Err(ClassifierError::EmptyDataset);
        }
        let consistent = samples.iter().all(|s| {
            s.features.len() == feature_names.len()
                && feature_names.iter().all(|&n| s.features.contains(n))
        });
        if !consistent {
            return Err(ClassifierError::InconsistentFeatures);
        }
        Ok(Self {
            feature_names,
            samples,
        })
    }

    pub fn feature_names(&self) -> &[FeatureName] {
        &self.feature_names
    }

    pub fn samples(&self) -> &[PoseSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<PoseClass> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Column of one feature across all rows.
    pub fn column(&self, name: FeatureName) -> Option<Vec<f64>> {
        self.samples.iter().map(|s| s.features.get(name)).collect()
    }

    /// Row-major matrix of the requested features.
    pub fn matrix(&self, names: &[FeatureName]) -> Result<Vec<Vec<f64>>, ClassifierError> {
        self.samples
            .iter()
            .map(|s| {
                names
                    .iter()
                    .map(|&n| {
                        s.features
                            .get(n)
                            .ok_or(ClassifierError::FeatureSetMismatch(n))
                    })
                    .collect()
            })
            .collect()
    }

    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for s in &self.samples {
            counts[s.label.index()] += 1;
        }
        counts
    }

    fn subset(&self, indices: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.7,
            validation: 0.15,
            test: 0.15,
        }
    }
}

/// Deterministic stratified partition into train / validation / test.
///
/// Each class is shuffled with the seeded generator and cut by rounding its
/// share of every ratio; the remainder goes to the test split.
pub fn split(
    dataset: &LabeledDataset,
    ratios: SplitRatios,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset), ClassifierError> {
    let SplitRatios {
        train,
        validation,
        test,
    } = ratios;
    if [train, validation, test].iter().any(|r| !(*r >= 0.0))
        || (train + validation + test - 1.0).abs() > 1e-9
    {
        return Err(ClassifierError::InvalidRatios);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut tr, mut va, mut te) = (Vec::new(), Vec::new(), Vec::new());
    for class in crate::frame::PoseClass::ALL {
        let mut idx: Vec<usize> = (0..dataset.len())
            .filter(|&i| dataset.samples[i].label == class)
            .collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let n = idx.len() as f64;
        let n_train = ((n * train).round() as usize).min(idx.len());
        let n_val = ((n * validation).round() as usize).min(idx.len() - n_train);
        tr.extend_from_slice(&idx[..n_train]);
        va.extend_from_slice(&idx[n_train..n_train + n_val]);
        te.extend_from_slice(&idx[n_train + n_val..]);
    }
    for (name, part) in [("train", &tr), ("validation", &va), ("test", &te)] {
        if part.is_empty() {
            return Err(ClassifierError::EmptySplit(name));
        }
    }
    tr.shuffle(&mut rng);
    Ok((
        dataset.subset(&tr),
        dataset.subset(&va),
        dataset.subset(&te),
    ))
}
