use super::{ClassifierError, LabeledDataset};
use crate::features::FeatureName;
use crate::frame::PoseClass;

/// Features whose absolute mutual correlation exceeds this are redundant.
pub const REDUNDANCY_LIMIT: f64 = 0.95;

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        // a constant column carries no information
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Mean absolute one-vs-rest point-biserial correlation of each feature.
pub fn relevance_scores(train: &LabeledDataset) -> Vec<(FeatureName, f64)> {
    let labels = train.labels();
    let present: Vec<PoseClass> = PoseClass::ALL
        .into_iter()
        .filter(|c| labels.contains(c))
        .collect();
    train
        .feature_names()
        .iter()
        .map(|&name| {
            let col = train.column(name).expect("dataset rows are consistent");
            let score = present
                .iter()
                .map(|&c| {
                    let ind: Vec<f64> = labels
                        .iter()
                        .map(|&l| f64::from(u8::from(l == c)))
                        .collect();
                    pearson(&col, &ind).abs()
                })
                .sum::<f64>()
                / present.len() as f64;
            (name, score)
        })
        .collect()
}

/// Ranks features by relevance and greedily keeps the top `k`, skipping any
/// feature that is nearly collinear with one already kept.
pub fn select_features(
    train: &LabeledDataset,
    k: usize,
) -> Result<Vec<FeatureName>, ClassifierError> {
    let available = train.feature_names().len();
    if k > available {
        return Err(ClassifierError::TooFewFeatures {
            requested: k,
            available,
        });
    }
    let mut ranked = relevance_scores(train);
    // stable sort keeps dataset order among equal scores
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));

    let mut kept: Vec<(FeatureName, Vec<f64>)> = Vec::with_capacity(k);
    for (name, _) in ranked {
        if kept.len() == k {
            break;
        }
        let col = train.column(name).expect("dataset rows are consistent");
        let redundant = kept
            .iter()
            .any(|(_, other)| pearson(&col, other).abs() > REDUNDANCY_LIMIT);
        if !redundant {
            kept.push((name, col));
        }
    }
    if kept.len() < k {
        return Err(ClassifierError::TooFewFeatures {
            requested: k,
            available: kept.len(),
        });
    }
    Ok(kept.into_iter().map(|(n, _)| n).collect())
}
