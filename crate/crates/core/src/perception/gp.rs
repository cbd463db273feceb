//! Zero-mean GP regression with a squared-exponential kernel over raw pin
//! coordinates.
//!
//! Hyperparameters come from data unless fixed: the lengthscale is the median
//! pairwise feature distance, the signal variance is the labels' second moment
//! about the zero prior mean, and the noise variance is
//! `max(1e-4 * signal_variance, noise_floor)`. Every fit factorizes from
//! scratch; with training sets of a few hundred taps that is cheap.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::{FeatureVector, LabeledTap, ReferenceTap};
use crate::error::{Error, Result};

/// Largest diagonal jitter tried, relative to the signal variance.
pub const MAX_RELATIVE_JITTER: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Feature-space lengthscale, mm.
    pub lengthscale: f64,
    /// deg^2
    pub signal_variance: f64,
    /// deg^2
    pub noise_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    /// Lower bound on the noise variance, deg^2.
    pub noise_floor: f64,
    /// Use these instead of the data-driven heuristics.
    pub fixed: Option<Hyperparameters>,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            noise_floor: 0.25,
            fixed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Posterior mean displacement, degrees.
    pub angle: f64,
    /// Posterior standard deviation, degrees.
    pub std: f64,
}

#[derive(Debug, Clone)]
struct Fitted {
    hyper: Hyperparameters,
    jitter: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct GpModel {
    config: GpConfig,
    training: Vec<LabeledTap>,
    fitted: Option<Fitted>,
}

impl GpModel {
    pub fn new(config: GpConfig) -> Self {
        Self {
            config,
            training: Vec::new(),
            fitted: None,
        }
    }

    pub fn with_training(config: GpConfig, training: Vec<LabeledTap>) -> Self {
        Self {
            config,
            training,
            fitted: None,
        }
    }

    pub fn config(&self) -> &GpConfig {
        &self.config
    }

    pub fn training(&self) -> &[LabeledTap] {
        &self.training
    }

    pub fn len(&self) -> usize {
        self.training.len()
    }

    pub fn is_empty(&self) -> bool {
        self.training.is_empty()
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted.is_some()
    }

    pub fn hyperparameters(&self) -> Option<Hyperparameters> {
        self.fitted.as_ref().map(|f| f.hyper)
    }

    /// Diagonal jitter that was needed on top of the noise variance.
    pub fn jitter(&self) -> Option<f64> {
        self.fitted.as_ref().map(|f| f.jitter)
    }

    pub fn fit(&self) -> Result<GpModel> {
        if self.training.len() < 2 {
            return Err(Error::InsufficientData(self.training.len()));
        }
        let hyper = self.config.fixed.unwrap_or_else(|| self.heuristic_hyper());
        self.fit_with(hyper)
    }

    fn heuristic_hyper(&self) -> Hyperparameters {
        let n = self.training.len();
        let mut dists = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                dists.push(
                    self.training[i]
                        .feature
                        .squared_distance(&self.training[j].feature)
                        .sqrt(),
                );
            }
        }
        dists.sort_by(f64::total_cmp);
        let mut lengthscale = median_sorted(&dists);
        if !(lengthscale > 0.0) {
            // mostly duplicated inputs: fall back to the mean positive distance
            let positive: Vec<f64> = dists.iter().copied().filter(|d| *d > 0.0).collect();
            lengthscale = if positive.is_empty() {
                1.0
            } else {
                positive.iter().sum::<f64>() / positive.len() as f64
            };
        }
        let mut signal_variance =
            self.training.iter().map(|t| t.label * t.label).sum::<f64>() / n as f64;
        if !(signal_variance > 0.0) {
            signal_variance = 1.0;
        }
        let noise_variance = (1e-4 * signal_variance).max(self.config.noise_floor);
        Hyperparameters {
            lengthscale,
            signal_variance,
            noise_variance,
        }
    }

    fn fit_with(&self, hyper: Hyperparameters) -> Result<GpModel> {
        let n = self.training.len();
        let mut k = DMatrix::from_fn(n, n, |i, j| {
            kernel(&hyper, &self.training[i].feature, &self.training[j].feature)
        });
        for i in 0..n {
            k[(i, i)] += hyper.noise_variance;
        }
        let y = DVector::from_iterator(n, self.training.iter().map(|t| t.label));

        let mut jitter = 0.0;
        let max_jitter = MAX_RELATIVE_JITTER * hyper.signal_variance;
        loop {
            let mut kj = k.clone();
            if jitter > 0.0 {
                for i in 0..n {
                    kj[(i, i)] += jitter;
                }
            }
            if let Some(chol) = kj.cholesky() {
                let alpha = chol.solve(&y);
                return Ok(GpModel {
                    config: self.config.clone(),
                    training: self.training.clone(),
                    fitted: Some(Fitted {
                        hyper,
                        jitter,
                        chol,
                        alpha,
                    }),
                });
            }
            if jitter >= max_jitter {
                return Err(Error::SingularKernel);
            }
            jitter = if jitter == 0.0 {
                1e-12 * hyper.signal_variance
            } else {
                (jitter * 10.0).min(max_jitter)
            };
        }
    }

    pub fn predict(&self, query: &FeatureVector) -> Result<Prediction> {
        let fitted = self.fitted.as_ref().ok_or(Error::Unfitted)?;
        if let Some(first) = self.training.first() {
            if first.feature.len() != query.len() {
                return Err(Error::LengthMismatch {
                    left: first.feature.len(),
                    right: query.len(),
                });
            }
        }
        let hyper = &fitted.hyper;
        let kstar = DVector::from_iterator(
            self.training.len(),
            self.training.iter().map(|t| kernel(hyper, &t.feature, query)),
        );
        let angle = kstar.dot(&fitted.alpha);
        let v = fitted
            .chol
            .l_dirty()
            .solve_lower_triangular(&kstar)
            .expect("cholesky factor has a positive diagonal");
        let var = (hyper.signal_variance - v.norm_squared()).max(0.0);
        Ok(Prediction {
            angle,
            std: var.sqrt(),
        })
    }

    /// Append taps and refit on the full training set.
    pub fn update(&self, new: &[LabeledTap]) -> Result<GpModel> {
        if new.is_empty() {
            return Ok(self.clone());
        }
        let mut training = self.training.clone();
        training.extend_from_slice(new);
        GpModel::with_training(self.config.clone(), training).fit()
    }

    pub fn checkpoint(&self, reference: Option<&ReferenceTap>) -> Result<GpCheckpoint> {
        let hyper = self.hyperparameters().ok_or(Error::Unfitted)?;
        Ok(GpCheckpoint {
            config: self.config.clone(),
            hyperparameters: hyper,
            features: self.training.iter().map(|t| t.feature.clone()).collect(),
            labels: self.training.iter().map(|t| t.label).collect(),
            reference: reference.cloned(),
        })
    }
}

/// Serializable model state: everything needed to rebuild identical predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpCheckpoint {
    pub config: GpConfig,
    pub hyperparameters: Hyperparameters,
    pub features: Vec<FeatureVector>,
    pub labels: Vec<f64>,
    pub reference: Option<ReferenceTap>,
}

impl GpCheckpoint {
    pub fn restore(&self) -> Result<GpModel> {
        if self.features.len() != self.labels.len() {
            return Err(Error::LengthMismatch {
                left: self.features.len(),
                right: self.labels.len(),
            });
        }
        let training = self
            .features
            .iter()
            .zip(&self.labels)
            .map(|(f, &label)| LabeledTap {
                feature: f.clone(),
                label,
            })
            .collect();
        GpModel::with_training(self.config.clone(), training).fit_with(self.hyperparameters)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn kernel(hyper: &Hyperparameters, a: &FeatureVector, b: &FeatureVector) -> f64 {
    let r2 = a.squared_distance(b);
    hyper.signal_variance * (-r2 / (2.0 * hyper.lengthscale * hyper.lengthscale)).exp()
}

fn median_sorted(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tap(x: &[f64], label: f64) -> LabeledTap {
        LabeledTap {
            feature: FeatureVector(x.to_vec()),
            label,
        }
    }

    #[test]
    fn two_taps_near_interpolate() {
        let m = GpModel::with_training(
            GpConfig::default(),
            vec![tap(&[0.0, 0.0], -2.0), tap(&[1.0, 0.5], 3.0)],
        )
        .fit()
        .unwrap();
        let sn = m.hyperparameters().unwrap().noise_variance.sqrt();
        for t in m.training() {
            let p = m.predict(&t.feature).unwrap();
            assert!((p.angle - t.label).abs() <= 3.0 * sn, "{p:?}");
        }
    }

    #[test]
    fn duplicated_inputs_fit() {
        let config = GpConfig {
            noise_floor: 0.0,
            fixed: Some(Hyperparameters {
                lengthscale: 1.0,
                signal_variance: 4.0,
                noise_variance: 0.0,
            }),
        };
        let m = GpModel::with_training(
            config,
            vec![tap(&[1.0, 1.0], 2.0), tap(&[1.0, 1.0], 2.0), tap(&[0.0, 3.0], -1.0)],
        )
        .fit()
        .unwrap();
        let jitter = m.jitter().unwrap();
        assert!(jitter > 0.0 && jitter <= MAX_RELATIVE_JITTER * 4.0);
        assert!((m.predict(&FeatureVector(vec![1.0, 1.0])).unwrap().angle - 2.0).abs() < 1e-3);
    }

    #[test]
    fn constant_labels_recovered() {
        let train: Vec<_> = (0..6).map(|i| tap(&[i as f64 * 0.3, 1.0], 4.5)).collect();
        let m = GpModel::with_training(GpConfig::default(), train).fit().unwrap();
        let p = m.predict(&FeatureVector(vec![0.75, 1.0])).unwrap();
        assert!((p.angle - 4.5).abs() < 0.1, "{p:?}");
    }

    #[test]
    fn interpolation_and_prior_reversion() {
        let config = GpConfig {
            noise_floor: 0.0,
            fixed: Some(Hyperparameters {
                lengthscale: 1.0,
                signal_variance: 9.0,
                noise_variance: 1e-10,
            }),
        };
        let m = GpModel::with_training(
            config,
            vec![tap(&[0.0], 1.0), tap(&[1.5], -2.0), tap(&[3.0], 0.5)],
        )
        .fit()
        .unwrap();
        let p = m.predict(&FeatureVector(vec![1.5])).unwrap();
        assert!((p.angle + 2.0).abs() < 1e-6);
        assert!(p.std < 1e-3);
        let far = m.predict(&FeatureVector(vec![100.0])).unwrap();
        assert!(far.angle.abs() < 1e-12);
        assert!((far.std - 3.0).abs() < 1e-12);
    }

    #[test]
    fn unfitted_and_insufficient() {
        let m = GpModel::new(GpConfig::default());
        assert!(matches!(m.predict(&FeatureVector(vec![0.0])), Err(Error::Unfitted)));
        let one = GpModel::with_training(GpConfig::default(), vec![tap(&[0.0], 1.0)]);
        assert!(matches!(one.fit(), Err(Error::InsufficientData(1))));
    }

    #[test]
    fn empty_update_is_identity() {
        let m = GpModel::with_training(
            GpConfig::default(),
            vec![tap(&[0.0, 1.0], 1.0), tap(&[2.0, 0.0], -1.0), tap(&[1.0, 1.0], 0.2)],
        )
        .fit()
        .unwrap();
        let u = m.update(&[]).unwrap();
        let q = FeatureVector(vec![0.4, 0.9]);
        let (a, b) = (m.predict(&q).unwrap(), u.predict(&q).unwrap());
        assert!((a.angle - b.angle).abs() < 1e-12 && (a.std - b.std).abs() < 1e-12);
    }

    #[test]
    fn sequential_updates_match_batch() {
        let base = GpModel::with_training(
            GpConfig::default(),
            vec![tap(&[0.0, 0.0], 0.0), tap(&[1.0, 0.0], 1.0)],
        )
        .fit()
        .unwrap();
        let a = vec![tap(&[2.0, 0.5], 2.0), tap(&[0.5, 1.0], -1.0)];
        let b = vec![tap(&[3.0, 1.0], 3.0)];
        let seq = base.update(&a).unwrap().update(&b).unwrap();
        let all: Vec<_> = a.iter().chain(&b).cloned().collect();
        let batch = base.update(&all).unwrap();
        for i in 0..20 {
            let q = FeatureVector(vec![i as f64 * 0.2, 0.3]);
            let (p, r) = (seq.predict(&q).unwrap(), batch.predict(&q).unwrap());
            assert!((p.angle - r.angle).abs() < 1e-9);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = GpModel::with_training(
            GpConfig::default(),
            vec![tap(&[0.0, 1.0], 1.0), tap(&[2.0, 0.0], -1.0), tap(&[1.0, 1.0], 0.2)],
        )
        .fit()
        .unwrap();
        let json = m.checkpoint(None).unwrap().to_json().unwrap();
        let back = GpCheckpoint::from_json(&json).unwrap().restore().unwrap();
        let q = FeatureVector(vec![0.3, 0.3]);
        assert_eq!(m.predict(&q).unwrap(), back.predict(&q).unwrap());
    }
}
