use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Classification metrics. `confusion[t][p]` counts samples of true class
/// `t` predicted as `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub overall_acc: f64,
    /// Mean recall over classes with at least one sample.
    pub class_acc: f64,
    pub confusion: Vec<Vec<u64>>,
}

impl Metrics {
    pub fn from_predictions(predicted: &[usize], labels: &[usize], n_classes: usize) -> Result<Self> {
        if predicted.len() != labels.len() {
            return Err(invalid("prediction and label counts differ"));
        }
        if labels.is_empty() {
            return Err(invalid("no samples to evaluate"));
        }
        let mut confusion = vec![vec![0u64; n_classes]; n_classes];
        for (&p, &t) in predicted.iter().zip(labels) {
            if p >= n_classes || t >= n_classes {
                return Err(invalid(format!("class index out of range ({t} -> {p})")));
            }
            confusion[t][p] += 1;
        }
        let total = labels.len() as f64;
        let correct: u64 = (0..n_classes).map(|k| confusion[k][k]).sum();
        let recalls: Vec<f64> = confusion
            .iter()
            .enumerate()
            .filter_map(|(k, row)| {
                let n: u64 = row.iter().sum();
                (n > 0).then(|| row[k] as f64 / n as f64)
            })
            .collect();
        Ok(Self {
            overall_acc: correct as f64 / total,
            class_acc: recalls.iter().sum::<f64>() / recalls.len() as f64,
            confusion,
        })
    }

    /// Header row of class names, then one row per true class.
    pub fn confusion_csv(&self, class_names: &[String]) -> String {
        let mut s = String::from("true\\pred");
        for n in class_names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for (name, row) in class_names.iter().zip(&self.confusion) {
            s.push_str(name);
            for c in row {
                s.push_str(&format!(",{c}"));
            }
            s.push('\n');
        }
        s
    }
}
