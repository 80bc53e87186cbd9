use serde::{Deserialize, Serialize};

use super::{ClassifierError, LabeledDataset, PoseModel};

/// Accuracy and 3x3 confusion counts; `confusion[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: [[usize; 3]; 3],
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..3).map(|i| self.confusion[i][i]).sum()
    }
}

pub fn evaluate(model: &PoseModel, test: &LabeledDataset) -> Result<EvalReport, ClassifierError> {
    if test.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    let mut confusion = [[0usize; 3]; 3];
    for s in test.samples() {
        let p = model.predict(&s.features)?;
        confusion[s.label.index()][p.class.index()] += 1;
    }
    let correct: usize = (0..3).map(|i| confusion[i][i]).sum();
    Ok(EvalReport {
        accuracy: correct as f64 / test.len() as f64,
        confusion,
    })
}
