//! Pretraining, joint fine-tuning and the end-to-end clustering pipeline.
//!
//! Pretraining fits one auto-encoder per view on reconstruction alone. Its
//! weights then initialize both the view-specific network (feeding `Z_i`)
//! and the shared network (feeding `Z`). Fine-tuning runs full-batch Adam
//! on the joint objective, updating auto-encoder weights and coefficient
//! matrices together, and re-zeroes every diagonal after each step.

mod adam;
mod checkpoint;
mod config;
mod log;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::Checkpoint;
pub use config::{default_lambda1, TrainConfig};
pub use log::{moving_average, EpochRecord, TrainLog, CSV_HEADER};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::autoencoder::{self, init_params, AutoencoderParams, ForwardCache};
use crate::dataset::MultiViewDataset;
use crate::metrics::{self, EvaluationReport};
use crate::selfexpr::{self, LossBreakdown, LossWeights, SelfExprState, ViewTerms};
use crate::spectral::{build_affinity, spectral_cluster, AffinityMatrix};
use crate::{Error, Result};

const STREAM_Z_INIT: u64 = 1;
const STREAM_SPECTRAL: u64 = 2;
const STREAM_EVAL: u64 = 3;
const STREAM_VIEW_INIT: u64 = 1000;

/// Independent 64-bit seed for a named stream (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn column_inputs(dataset: &MultiViewDataset) -> Vec<Array2<f64>> {
    dataset.views().iter().map(|v| v.to_column_major_samples()).collect()
}

/// Cluster count from the config, else from the dataset labels.
pub fn resolve_clusters(dataset: &MultiViewDataset, config: &TrainConfig) -> Result<usize> {
    let k = config
        .clusters
        .or_else(|| dataset.n_classes())
        .ok_or_else(|| Error::InvalidConfig("cluster count unknown: set clusters or supply labels".into()))?;
    if k < 2 || k > dataset.n_samples() {
        return Err(Error::InvalidConfig(format!(
            "cluster count {k} must lie in 2..={}",
            dataset.n_samples()
        )));
    }
    Ok(k)
}

/// Per-view auto-encoders after reconstruction-only training.
#[derive(Clone, Debug)]
pub struct Pretrained {
    pub params: Vec<AutoencoderParams>,
    /// Summed reconstruction loss over views, one entry per epoch.
    pub losses: Vec<f64>,
}

/// He-initialized auto-encoders for every view.
pub fn initial_params(dataset: &MultiViewDataset, config: &TrainConfig) -> Result<Vec<AutoencoderParams>> {
    dataset
        .views()
        .iter()
        .enumerate()
        .map(|(i, view)| {
            let arch = config.architecture_for(i, view.layout())?;
            init_params(
                view.layout(),
                &arch,
                derive_seed(config.seed, STREAM_VIEW_INIT + i as u64),
            )
        })
        .collect()
}

/// Trains each view's auto-encoder on `||X_i - X_hat_i||^2` alone.
pub fn pretrain(dataset: &MultiViewDataset, config: &TrainConfig) -> Result<Pretrained> {
    config.validate()?;
    let inputs = column_inputs(dataset);
    let adam_cfg = config.adam();
    let runs: Vec<Result<(AutoencoderParams, Vec<f64>)>> = initial_params(dataset, config)?
        .into_par_iter()
        .zip(inputs.par_iter())
        .map(|(mut params, x)| {
            let mut adam = AdamState::new(params.tensors().iter().map(|t| t.len()));
            let mut losses = Vec::with_capacity(config.pretrain_epochs);
            for epoch in 0..config.pretrain_epochs {
                let (f, enc) = autoencoder::encode(&params, x)?;
                let (x_hat, dec) = autoencoder::decode(&params, &f)?;
                let (loss, grad) = autoencoder::reconstruction_loss(x, &x_hat);
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        stage: "pretrain",
                        term: "reconstruction",
                        epoch,
                    });
                }
                losses.push(loss);
                let grads = autoencoder::backward(&params, &enc, &dec, &grad, None)?;
                let g: Vec<&[f64]> = grads.layers.iter().map(Vec::as_slice).collect();
                adam.step(&mut params.tensors_mut(), &g, &adam_cfg)?;
            }
            Ok((params, losses))
        })
        .collect();

    let mut params = Vec::with_capacity(runs.len());
    let mut losses = vec![0.0; config.pretrain_epochs];
    for run in runs {
        let (p, l) = run?;
        for (acc, v) in losses.iter_mut().zip(l) {
            *acc += v;
        }
        params.push(p);
    }
    Ok(Pretrained { params, losses })
}

/// Everything fine-tuning updates.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub dnet: Vec<AutoencoderParams>,
    pub unet: Vec<AutoencoderParams>,
    pub state: SelfExprState,
}

/// Gradients of the joint objective for every part of a [`Model`].
#[derive(Clone, Debug)]
pub struct ModelGradients {
    pub dnet: Vec<Vec<Vec<f64>>>,
    pub unet: Vec<Vec<Vec<f64>>>,
    pub z_common: Array2<f64>,
    pub z_views: Vec<Array2<f64>>,
}

/// Dnet weights, Unet weights and `Z_i` gradient for one view.
type ViewGradients = (Vec<Vec<f64>>, Vec<Vec<f64>>, Array2<f64>);

struct Pass {
    latent: Array2<f64>,
    recon: Array2<f64>,
    enc: ForwardCache,
    dec: ForwardCache,
}

fn run(params: &AutoencoderParams, x: &Array2<f64>) -> Result<Pass> {
    let (latent, enc) = autoencoder::encode(params, x)?;
    let (recon, dec) = autoencoder::decode(params, &latent)?;
    Ok(Pass {
        latent,
        recon,
        enc,
        dec,
    })
}

impl Model {
    /// Both networks start from the same pretrained weights.
    pub fn from_pretrained(pretrained: &[AutoencoderParams], state: SelfExprState) -> Self {
        Self {
            dnet: pretrained.to_vec(),
            unet: pretrained.to_vec(),
            state,
        }
    }

    pub fn n_views(&self) -> usize {
        self.dnet.len()
    }

    fn passes(&self, inputs: &[Array2<f64>]) -> Result<Vec<(Pass, Pass)>> {
        if inputs.len() != self.n_views() || self.state.n_views() != self.n_views() {
            return Err(Error::dims(
                "view count",
                self.n_views(),
                (inputs.len(), self.state.n_views()),
            ));
        }
        (0..self.n_views())
            .into_par_iter()
            .map(|i| Ok((run(&self.dnet[i], &inputs[i])?, run(&self.unet[i], &inputs[i])?)))
            .collect()
    }

    fn breakdown(&self, inputs: &[Array2<f64>], passes: &[(Pass, Pass)], w: &LossWeights) -> Result<LossBreakdown> {
        let terms: Vec<ViewTerms<'_>> = passes
            .iter()
            .zip(inputs)
            .map(|((s, c), x)| ViewTerms {
                input: x,
                latent_specific: &s.latent,
                latent_common: &c.latent,
                recon_specific: &s.recon,
                recon_common: &c.recon,
            })
            .collect();
        selfexpr::total_loss(&terms, &self.state, w)
    }

    /// Value of the joint objective. `inputs` are `d_i x n` per view.
    pub fn objective(&self, inputs: &[Array2<f64>], w: &LossWeights) -> Result<LossBreakdown> {
        let passes = self.passes(inputs)?;
        self.breakdown(inputs, &passes, w)
    }

    /// Objective value and its gradient with respect to every parameter.
    pub fn objective_and_gradients(
        &self,
        inputs: &[Array2<f64>],
        w: &LossWeights,
    ) -> Result<(LossBreakdown, ModelGradients)> {
        let passes = self.passes(inputs)?;
        let loss = self.breakdown(inputs, &passes, w)?;
        let state = &self.state;
        let per_view: Vec<Result<ViewGradients>> = (0..self.n_views())
            .into_par_iter()
            .map(|i| {
                let (s, c) = &passes[i];
                let x = &inputs[i];
                let (_, gs) = autoencoder::reconstruction_loss(x, &s.recon);
                let fs = selfexpr::grad_latent(&s.latent, &state.views[i], w.lambda1)?;
                let dnet = autoencoder::backward(&self.dnet[i], &s.enc, &s.dec, &gs, Some(&fs))?;
                let (_, gc) = autoencoder::reconstruction_loss(x, &c.recon);
                let fc = selfexpr::grad_latent(&c.latent, &state.common, w.lambda1)?;
                let unet = autoencoder::backward(&self.unet[i], &c.enc, &c.dec, &gc, Some(&fc))?;
                let zi = selfexpr::grad_z_view(i, &s.latent, state, w)?;
                Ok((dnet.layers, unet.layers, zi))
            })
            .collect();
        let mut grads = ModelGradients {
            dnet: Vec::new(),
            unet: Vec::new(),
            z_common: Array2::zeros((0, 0)),
            z_views: Vec::new(),
        };
        for r in per_view {
            let (d, u, z) = r?;
            grads.dnet.push(d);
            grads.unet.push(u);
            grads.z_views.push(z);
        }
        let common_latents: Vec<&Array2<f64>> = passes.iter().map(|(_, c)| &c.latent).collect();
        grads.z_common = selfexpr::grad_z_common(&common_latents, state, w)?;
        Ok((loss, grads))
    }

    /// Parameter tensors in a fixed order: view-specific networks, shared
    /// networks, `Z`, then each `Z_i`.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for m in self.dnet.iter_mut().chain(self.unet.iter_mut()) {
            out.extend(m.tensors_mut());
        }
        out.push(self.state.common.as_slice_mut().expect("standard layout"));
        for z in &mut self.state.views {
            out.push(z.as_slice_mut().expect("standard layout"));
        }
        out
    }

    fn tensor_sizes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for m in self.dnet.iter().chain(&self.unet) {
            out.extend(m.tensors().iter().map(|t| t.len()));
        }
        out.extend(self.state.matrices().map(|z| z.len()));
        out
    }

    pub fn is_finite(&self) -> bool {
        self.dnet.iter().chain(&self.unet).all(AutoencoderParams::is_finite)
            && self.state.matrices().all(|z| z.iter().all(|v| v.is_finite()))
    }
}

impl ModelGradients {
    /// Same order as [`Model::tensors_mut`].
    pub fn flat(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for net in self.dnet.iter().chain(&self.unet) {
            out.extend(net.iter().map(Vec::as_slice));
        }
        out.push(self.z_common.as_slice().expect("standard layout"));
        for z in &self.z_views {
            out.push(z.as_slice().expect("standard layout"));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Finetuned {
    pub model: Model,
    pub log: TrainLog,
}

/// Joint full-batch fine-tuning of both networks and all coefficient
/// matrices, starting from pretrained auto-encoders.
pub fn finetune(
    dataset: &MultiViewDataset,
    pretrained: &[AutoencoderParams],
    config: &TrainConfig,
) -> Result<Finetuned> {
    config.validate()?;
    if pretrained.len() != dataset.n_views() {
        return Err(Error::dims("pretrained views", dataset.n_views(), pretrained.len()));
    }
    let k = resolve_clusters(dataset, config)?;
    let weights = config.weights(k);
    let inputs = column_inputs(dataset);
    let n = dataset.n_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_Z_INIT));
    let state = SelfExprState::random_uniform(n, dataset.n_views(), config.z_init_scale, &mut rng);
    let mut model = Model::from_pretrained(pretrained, state);
    let mut adam = AdamState::new(model.tensor_sizes());
    let adam_cfg = config.adam();
    let mut log = TrainLog::default();

    for epoch in 0..config.finetune_epochs {
        let (loss, grads) = model.objective_and_gradients(&inputs, &weights)?;
        if let Some(term) = loss.first_non_finite() {
            return Err(Error::NonFiniteLoss {
                stage: "finetune",
                term,
                epoch,
            });
        }
        let (nmi, acc) = match dataset.labels() {
            Some(truth) if config.eval_every > 0 && epoch % config.eval_every == 0 => {
                let pred = cluster_state(&model.state, k, derive_seed(config.seed, STREAM_EVAL))?;
                (Some(metrics::nmi(truth, &pred)?), Some(metrics::acc(truth, &pred)?))
            }
            _ => (None, None),
        };
        log.epochs.push(EpochRecord { epoch, loss, nmi, acc });
        adam.step(&mut model.tensors_mut(), &grads.flat(), &adam_cfg)?;
        model.state.project();
    }
    Ok(Finetuned { model, log })
}

fn cluster_state(state: &SelfExprState, k: usize, seed: u64) -> Result<Vec<usize>> {
    spectral_cluster(&build_affinity(&state.common)?, k, seed)
}

/// Output of the full pipeline.
#[derive(Clone, Debug)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub clusters: usize,
    pub model: Model,
    pub affinity: AffinityMatrix,
    pub log: TrainLog,
    /// Scores against the dataset labels, when present.
    pub metrics: Option<EvaluationReport>,
    pub seed: u64,
    pub epochs: usize,
}

impl ClusteringResult {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            seed: self.seed,
            epoch: self.epochs,
            clusters: Some(self.clusters),
            dnet: self.model.dnet.clone(),
            unet: self.model.unet.clone(),
            state: self.model.state.clone(),
        }
    }
}

/// Pretrain, fine-tune, then spectral clustering on `(|Z| + |Z|^T) / 2`.
pub fn train(dataset: &MultiViewDataset, config: &TrainConfig) -> Result<ClusteringResult> {
    config.validate()?;
    let k = resolve_clusters(dataset, config)?;
    let pre = pretrain(dataset, config)?;
    let Finetuned { model, mut log } = finetune(dataset, &pre.params, config)?;
    log.pretrain = pre.losses;
    let affinity = build_affinity(&model.state.common)?;
    let labels = spectral_cluster(&affinity, k, derive_seed(config.seed, STREAM_SPECTRAL))?;
    let metrics = dataset
        .labels()
        .map(|truth| metrics::evaluate(truth, &labels))
        .transpose()?;
    Ok(ClusteringResult {
        labels,
        clusters: k,
        model,
        affinity,
        log,
        metrics,
        seed: config.seed,
        epochs: config.finetune_epochs,
    })
}

/// Re-runs spectral clustering on a checkpoint's shared matrix.
pub fn cluster_checkpoint(ckpt: &Checkpoint, k: usize) -> Result<Vec<usize>> {
    cluster_state(&ckpt.state, k, derive_seed(ckpt.seed, STREAM_SPECTRAL))
}
