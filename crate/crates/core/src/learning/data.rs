use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::LearningError;
use crate::rng::seeded_rng;

/// Row-major feature matrix with one class label per row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Samples {
    pub dim: usize,
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
}

impl Samples {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push(&mut self, row: &[f64], label: usize) {
        assert_eq!(row.len(), self.dim);
        self.features.extend_from_slice(row);
        self.labels.push(label);
    }

    /// A new set holding rows `indices` in that order.
    pub fn subset(&self, indices: &[usize]) -> Samples {
        let mut out = Samples::new(self.dim);
        for &i in indices {
            out.push(self.row(i), self.labels[i]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub num_classes: usize,
    pub train: Samples,
    pub test: Samples,
}

impl Dataset {
    pub fn new(num_classes: usize, train: Samples, test: Samples) -> Result<Self, LearningError> {
        if num_classes < 2 || train.dim == 0 || train.dim != test.dim {
            return Err(LearningError::BadDataset(format!(
                "need >= 2 classes and matching non-zero dims (k={num_classes}, train d={}, test d={})",
                train.dim, test.dim
            )));
        }
        for k in 0..num_classes {
            if !test.labels.contains(&k) {
                return Err(LearningError::BadDataset(format!(
                    "class {k} missing from the test split"
                )));
            }
        }
        if train.labels.iter().chain(&test.labels).any(|&l| l >= num_classes) {
            return Err(LearningError::BadDataset("label out of range".into()));
        }
        Ok(Self {
            num_classes,
            train,
            test,
        })
    }

    pub fn dim(&self) -> usize {
        self.train.dim
    }
}

/// Gaussian-blob classification task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTask {
    pub num_samples: usize,
    pub features_d: usize,
    pub classes_k: usize,
    /// Share of each class held out for testing.
    pub test_fraction: f64,
    /// Standard deviation of the class centroids; noise has unit variance.
    pub class_separation: f64,
}

impl Default for SyntheticTask {
    fn default() -> Self {
        Self {
            num_samples: 12_000,
            features_d: 20,
            classes_k: 10,
            test_fraction: 0.2,
            class_separation: 1.0,
        }
    }
}

impl SyntheticTask {
    pub fn validate(&self) -> Result<(), LearningError> {
        if self.classes_k < 2 || self.features_d == 0 {
            return Err(LearningError::BadDataset(
                "task needs classes_k >= 2 and features_d >= 1".into(),
            ));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(LearningError::BadDataset(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.num_samples < 2 * self.classes_k {
            return Err(LearningError::BadDataset(format!(
                "num_samples {} too small for {} classes",
                self.num_samples, self.classes_k
            )));
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return Err(LearningError::BadDataset("class_separation must be >= 0".into()));
        }
        Ok(())
    }

    /// Balanced classes; every class contributes at least one test sample.
    pub fn generate(&self, seed: u64) -> Result<Dataset, LearningError> {
        self.validate()?;
        let mut rng = seeded_rng(seed);
        let d = self.features_d;
        let k = self.classes_k;
        let centroid_dist = Normal::new(0.0, self.class_separation)
            .map_err(|e| LearningError::BadDataset(e.to_string()))?;
        let noise = Normal::new(0.0, 1.0).expect("unit normal");
        let centroids: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| centroid_dist.sample(&mut rng)).collect())
            .collect();

        let mut train = Samples::new(d);
        let mut test = Samples::new(d);
        let mut row = vec![0.0; d];
        for (class, centroid) in centroids.iter().enumerate() {
            let count = self.num_samples / k + usize::from(class < self.num_samples % k);
            let n_test = ((count as f64 * self.test_fraction).round() as usize).clamp(1, count - 1);
            for i in 0..count {
                for (x, c) in row.iter_mut().zip(centroid) {
                    *x = c + noise.sample(&mut rng);
                }
                if i < n_test {
                    test.push(&row, class);
                } else {
                    train.push(&row, class);
                }
            }
        }
        // interleave classes so shard order carries no label structure
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng);
        let train = train.subset(&order);
        Dataset::new(k, train, test)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_dataset_is_balanced_and_seeded() {
        let task = SyntheticTask {
            num_samples: 1000,
            features_d: 4,
            classes_k: 5,
            test_fraction: 0.1,
            class_separation: 2.0,
        };
        let a = task.generate(3).unwrap();
        assert_eq!(a, task.generate(3).unwrap());
        assert_eq!(a.train.len() + a.test.len(), 1000);
        assert_eq!(a.test.len(), 100);
        for k in 0..5 {
            assert_eq!(a.test.labels.iter().filter(|&&l| l == k).count(), 20);
        }
        assert_eq!(a.train.features.len(), a.train.len() * 4);
    }

    #[test]
    fn dataset_requires_every_class_in_test() {
        let mut test = Samples::new(1);
        test.push(&[0.0], 0);
        assert!(Dataset::new(2, Samples::new(1), test).is_err());
    }
}
