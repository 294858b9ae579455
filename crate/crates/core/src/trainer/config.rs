use serde::{Deserialize, Serialize};

use crate::autoencoder::Architecture;
use crate::dataset::ViewLayout;
use crate::selfexpr::LossWeights;
use crate::trainer::adam::AdamConfig;
use crate::{Error, Result};

/// `lambda1 = 10^(k/10 - 3)` for `k` subspaces.
pub fn default_lambda1(k: usize) -> f64 {
    10f64.powf(k as f64 / 10.0 - 3.0)
}

/// The full training recipe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Self-expression weight. Ignored when `lambda1_from_clusters` is set.
    pub lambda1: f64,
    /// Derive `lambda1` from the cluster count via [`default_lambda1`].
    pub lambda1_from_clusters: bool,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub learning_rate: f64,
    pub pretrain_epochs: usize,
    pub finetune_epochs: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Upper bound of the uniform initialization of every coefficient matrix.
    pub z_init_scale: f64,
    /// Number of clusters; falls back to the dataset's label count.
    pub clusters: Option<usize>,
    /// Empty: per-view defaults. One entry: used for every view. Otherwise
    /// one entry per view.
    pub architectures: Vec<Architecture>,
    /// Score NMI/ACC against the labels every this many fine-tuning epochs
    /// (0 disables).
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let w = LossWeights::default();
        Self {
            lambda1: w.lambda1,
            lambda1_from_clusters: false,
            lambda2: w.lambda2,
            lambda3: w.lambda3,
            lambda4: w.lambda4,
            learning_rate: 1e-3,
            pretrain_epochs: 1000,
            finetune_epochs: 1000,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            z_init_scale: 1e-4,
            clusters: None,
            architectures: Vec::new(),
            eval_every: 0,
        }
    }
}

impl TrainConfig {
    /// Defaults with the shorter pretraining schedule used for small
    /// synthetic problems.
    pub fn desk_scale() -> Self {
        Self {
            pretrain_epochs: 200,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("lambda4", self.lambda4),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite value >= 0, got {v}"));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be > 0, got {}", self.learning_rate));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.adam_epsilon > 0.0 && self.adam_epsilon.is_finite()) {
            return bad(format!("adam_epsilon must be > 0, got {}", self.adam_epsilon));
        }
        if !(self.z_init_scale >= 0.0 && self.z_init_scale.is_finite()) {
            return bad(format!("z_init_scale must be >= 0, got {}", self.z_init_scale));
        }
        if let Some(k) = self.clusters {
            if k < 2 {
                return bad(format!("need at least 2 clusters, got {k}"));
            }
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    /// Loss weights for a problem with `k` clusters.
    pub fn weights(&self, k: usize) -> LossWeights {
        LossWeights {
            lambda1: if self.lambda1_from_clusters {
                default_lambda1(k)
            } else {
                self.lambda1
            },
            lambda2: self.lambda2,
            lambda3: self.lambda3,
            lambda4: self.lambda4,
        }
    }

    pub fn architecture_for(&self, view: usize, layout: ViewLayout) -> Result<Architecture> {
        match self.architectures.len() {
            0 => Ok(Architecture::default_for(layout)),
            1 => Ok(self.architectures[0].clone()),
            n => self
                .architectures
                .get(view)
                .cloned()
                .ok_or_else(|| Error::InvalidConfig(format!("{n} architectures given but view {view} has none"))),
        }
    }
}
