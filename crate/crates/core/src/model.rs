//! The evolving network: a shared tied-weight encoder trained generatively on
//! every sample and discriminatively, through a softmax head, on labeled ones.
//! Both phases can add and remove hidden units.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dae::{all_finite, DaeLayer, MaskSpec};
use crate::error::{Error, Result};
use crate::monitor::{
    hidden_significance, should_grow, should_prune, snapshot_discriminative, snapshot_generative,
    weakest_node, NodeStats, ResetMode, SpcTracker,
};
use crate::numerics::{argmax, sigmoid, softmax_row, vec_mat, xavier_draw, Mat, Seed, StreamRng};
use crate::streams::StreamBatch;

pub const CHECKPOINT_FORMAT: &str = "devdan-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

const MODEL_RNG_STREAM: u64 = 0x006d_6f64_656c;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DevdanConfig {
    pub lr_generative: f64,
    pub lr_discriminative: f64,
    pub momentum: f64,
    pub mask_fraction: f64,
    pub reset_mode: ResetMode,
    pub enable_generative: bool,
    pub enable_grow: bool,
    pub enable_prune: bool,
    pub seed: u64,
}

impl Default for DevdanConfig {
    fn default() -> Self {
        DevdanConfig {
            lr_generative: 0.001,
            lr_discriminative: 0.01,
            momentum: 0.95,
            mask_fraction: 0.10,
            reset_mode: ResetMode::Standard,
            enable_generative: true,
            enable_grow: true,
            enable_prune: true,
            seed: 0,
        }
    }
}

impl DevdanConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lr_generative.is_finite() && self.lr_generative >= 0.0) {
            return bad(format!(
                "lr_generative must be >= 0, got {}",
                self.lr_generative
            ));
        }
        if !(self.lr_discriminative.is_finite() && self.lr_discriminative >= 0.0) {
            return bad(format!(
                "lr_discriminative must be >= 0, got {}",
                self.lr_discriminative
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            ));
        }
        if !(0.0..=1.0).contains(&self.mask_fraction) {
            return bad(format!(
                "mask_fraction must lie in [0, 1], got {}",
                self.mask_fraction
            ));
        }
        Ok(())
    }
}

/// Softmax output layer `softmax(y Θ + η)` with momentum buffers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxHead {
    theta: Mat,
    eta: Vec<f64>,
    theta_velocity: Mat,
    eta_velocity: Vec<f64>,
}

impl SoftmaxHead {
    pub fn new(theta: Mat, eta: Vec<f64>) -> Result<Self> {
        if eta.len() != theta.cols() {
            return Err(Error::Dimension {
                context: "output bias",
                expected: theta.cols(),
                actual: eta.len(),
            });
        }
        Ok(SoftmaxHead {
            theta_velocity: Mat::zeros(theta.rows(), theta.cols()),
            eta_velocity: vec![0.0; eta.len()],
            theta,
            eta,
        })
    }

    fn initial<R: Rng + ?Sized>(width: usize, classes: usize, rng: &mut R) -> Self {
        let theta = Mat::from_fn(width, classes, |_, _| xavier_draw(width, classes, rng));
        SoftmaxHead::new(theta, vec![0.0; classes]).expect("consistent head shape")
    }

    pub fn theta(&self) -> &Mat {
        &self.theta
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn classes(&self) -> usize {
        self.eta.len()
    }

    pub fn probabilities(&self, hidden: &[f64]) -> Vec<f64> {
        let mut logits = vec_mat(hidden, &self.theta);
        for (l, e) in logits.iter_mut().zip(&self.eta) {
            *l += e;
        }
        softmax_row(&logits)
    }

    fn push_row(&mut self, row: &[f64]) {
        self.theta.push_row(row);
        self.theta_velocity.push_row(&vec![0.0; row.len()]);
    }

    fn remove_row(&mut self, index: usize) {
        self.theta.remove_row(index);
        self.theta_velocity.remove_row(index);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminativeGrads {
    pub weights: Mat,
    pub enc_bias: Vec<f64>,
    pub theta: Mat,
    pub eta: Vec<f64>,
}

/// Cross-entropy gradients of the encoder + head on a clean sample.
pub fn discriminative_gradients(
    layer: &DaeLayer,
    head: &SoftmaxHead,
    x: &[f64],
    label: usize,
) -> Result<(DiscriminativeGrads, f64)> {
    let classes = head.classes();
    if label >= classes {
        return Err(Error::Label { label, classes });
    }
    if head.theta.rows() != layer.width() {
        return Err(Error::Dimension {
            context: "head rows",
            expected: layer.width(),
            actual: head.theta.rows(),
        });
    }
    let pre = layer.pre_activation(x)?;
    Ok(discriminative_gradients_from(layer, head, x, label, &pre))
}

fn discriminative_gradients_from(
    layer: &DaeLayer,
    head: &SoftmaxHead,
    x: &[f64],
    label: usize,
    pre: &[f64],
) -> (DiscriminativeGrads, f64) {
    let (n, r, m) = (layer.input_dim(), layer.width(), head.classes());
    let hidden: Vec<f64> = pre.iter().map(|&a| sigmoid(a)).collect();
    let probs = head.probabilities(&hidden);
    let loss = -probs[label].max(f64::MIN_POSITIVE).ln();

    // fused softmax + cross-entropy: dL/dlogits = p - onehot
    let mut d_logits = probs;
    d_logits[label] -= 1.0;

    let theta = Mat::from_fn(r, m, |i, k| hidden[i] * d_logits[k]);
    let d_pre: Vec<f64> = (0..r)
        .map(|i| {
            let g: f64 = head
                .theta
                .row(i)
                .iter()
                .zip(&d_logits)
                .map(|(t, d)| t * d)
                .sum();
            g * hidden[i] * (1.0 - hidden[i])
        })
        .collect();
    let weights = Mat::from_fn(n, r, |j, i| x[j] * d_pre[i]);
    (
        DiscriminativeGrads {
            weights,
            enc_bias: d_pre,
            theta,
            eta: d_logits,
        },
        loss,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    pub class: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub grew: bool,
    pub pruned: bool,
    pub loss: f64,
    pub width: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchTrainReport {
    pub generative_steps: usize,
    pub discriminative_steps: usize,
    pub generative_loss: f64,
    pub discriminative_loss: f64,
    pub grows: usize,
    pub prunes: usize,
    pub width: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrackerSummary {
    pub count: u64,
    pub mean: f64,
    pub std: f64,
    pub min_mean: Option<f64>,
    pub min_std: Option<f64>,
}

impl From<&SpcTracker> for TrackerSummary {
    fn from(t: &SpcTracker) -> Self {
        TrackerSummary {
            count: t.current().count(),
            mean: t.mean(),
            std: t.std(),
            min_mean: t.min_mean(),
            min_std: t.min_std(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSummary {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "R")]
    pub width: usize,
    pub parameter_count: usize,
    pub samples_seen: u64,
    pub generative_bias: TrackerSummary,
    pub generative_variance: TrackerSummary,
    pub discriminative_bias: TrackerSummary,
    pub discriminative_variance: TrackerSummary,
    pub config: DevdanConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DevdanModel {
    config: DevdanConfig,
    layer: DaeLayer,
    head: SoftmaxHead,
    enc_velocity: Mat,
    enc_bias_velocity: Vec<f64>,
    gen_stats: NodeStats,
    gen_bias: SpcTracker,
    gen_var: SpcTracker,
    disc_stats: NodeStats,
    disc_bias: SpcTracker,
    disc_var: SpcTracker,
    rng: StreamRng,
    samples_seen: u64,
}

impl DevdanModel {
    /// Fresh model with a single hidden unit.
    pub fn new(input_dim: usize, classes: usize, config: DevdanConfig) -> Result<Self> {
        config.validate()?;
        if input_dim == 0 {
            return Err(Error::Config("input dimension must be at least 1".into()));
        }
        if classes < 2 {
            return Err(Error::Config(format!(
                "need at least two classes, got {classes}"
            )));
        }
        let mut rng = Seed(config.seed).rng(MODEL_RNG_STREAM);
        let layer = DaeLayer::initial(input_dim, &mut rng);
        let head = SoftmaxHead::initial(1, classes, &mut rng);
        Ok(DevdanModel {
            config,
            layer,
            head,
            enc_velocity: Mat::zeros(input_dim, 1),
            enc_bias_velocity: vec![0.0],
            gen_stats: NodeStats::new(1),
            gen_bias: SpcTracker::new(),
            gen_var: SpcTracker::new(),
            disc_stats: NodeStats::new(1),
            disc_bias: SpcTracker::new(),
            disc_var: SpcTracker::new(),
            rng,
            samples_seen: 0,
        })
    }

    /// Model with caller-supplied parameters and empty monitors.
    pub fn from_parts(layer: DaeLayer, head: SoftmaxHead, config: DevdanConfig) -> Result<Self> {
        config.validate()?;
        let (n, r) = (layer.input_dim(), layer.width());
        let model = DevdanModel {
            rng: Seed(config.seed).rng(MODEL_RNG_STREAM),
            config,
            enc_velocity: Mat::zeros(n, r),
            enc_bias_velocity: vec![0.0; r],
            gen_stats: NodeStats::new(r),
            gen_bias: SpcTracker::new(),
            gen_var: SpcTracker::new(),
            disc_stats: NodeStats::new(r),
            disc_bias: SpcTracker::new(),
            disc_var: SpcTracker::new(),
            layer,
            head,
            samples_seen: 0,
        };
        model.check_consistency()?;
        Ok(model)
    }

    pub fn config(&self) -> &DevdanConfig {
        &self.config
    }

    pub fn layer(&self) -> &DaeLayer {
        &self.layer
    }

    pub fn head(&self) -> &SoftmaxHead {
        &self.head
    }

    pub fn generative_stats(&self) -> &NodeStats {
        &self.gen_stats
    }

    pub fn discriminative_stats(&self) -> &NodeStats {
        &self.disc_stats
    }

    pub fn input_dim(&self) -> usize {
        self.layer.input_dim()
    }

    pub fn classes(&self) -> usize {
        self.head.classes()
    }

    pub fn width(&self) -> usize {
        self.layer.width()
    }

    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    /// `n·R + R + n + R·m + m`
    pub fn parameter_count(&self) -> usize {
        let (n, r, m) = (self.input_dim(), self.width(), self.classes());
        n * r + r + n + r * m + m
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let hidden = self.layer.encode(x)?;
        let probabilities = self.head.probabilities(&hidden);
        let class = argmax(&probabilities);
        Ok(Prediction {
            probabilities,
            class,
        })
    }

    /// One unsupervised step: mask, reconstruct, monitor, evolve, then SGD on
    /// `(W, b, c)`.
    pub fn generative_step(&mut self, x: &[f64]) -> Result<StepReport> {
        let sample = self.samples_seen;
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                context: "layer input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let mask = MaskSpec {
            fraction: self.config.mask_fraction,
        };
        let x_tilde = mask.apply(x, &mut self.rng);
        let fwd = self.layer.reconstruct(&x_tilde)?;
        let residual: Vec<f64> = x.iter().zip(&fwd.output).map(|(a, z)| a - z).collect();

        self.gen_stats.update(&fwd.pre_activation)?;
        let snap = snapshot_generative(&self.layer, &self.gen_stats, x)?;
        if !snap.ns.is_finite() {
            return Err(Error::NonFinite {
                block: "generative significance",
                sample: Some(sample),
            });
        }

        self.gen_bias.update(snap.bias2);
        let grew = self.config.enable_grow && should_grow(&self.gen_bias, snap.bias2);
        if grew {
            self.layer.grow_generative(&residual, &mut self.rng);
            self.attach_node();
            self.gen_bias.reset(self.config.reset_mode);
        }

        self.gen_var.update(snap.variance);
        let pruned = self.config.enable_prune
            && should_prune(&self.gen_var, snap.variance, grew, self.width());
        if pruned {
            let hs = hidden_significance(&self.gen_stats);
            self.remove_node(weakest_node(&hs)?)?;
            self.gen_var.reset(self.config.reset_mode);
        }

        let (grads, loss) = if grew || pruned {
            let fwd = self.layer.reconstruct(&x_tilde)?;
            self.layer.gradients_from(x, &x_tilde, &fwd)
        } else {
            self.layer.gradients_from(x, &x_tilde, &fwd)
        };
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                block: "generative loss",
                sample: Some(sample),
            });
        }
        self.layer
            .apply_generative(&grads, self.config.lr_generative)
            .map_err(|e| with_sample(e, sample))?;
        self.samples_seen += 1;
        Ok(StepReport {
            grew,
            pruned,
            loss,
            width: self.width(),
        })
    }

    /// One supervised step on a clean sample: monitor, evolve, then momentum
    /// SGD on `(W, b, Θ, η)` through the cross-entropy loss.
    pub fn discriminative_step(&mut self, x: &[f64], label: usize) -> Result<StepReport> {
        let sample = self.samples_seen;
        let classes = self.classes();
        if label >= classes {
            return Err(Error::Label { label, classes });
        }
        let pre = self.layer.pre_activation(x)?;
        let mut target = vec![0.0; classes];
        target[label] = 1.0;

        self.disc_stats.update(&pre)?;
        let snap =
            snapshot_discriminative(&self.head.theta, &self.head.eta, &self.disc_stats, &target)?;
        if !snap.ns.is_finite() {
            return Err(Error::NonFinite {
                block: "discriminative significance",
                sample: Some(sample),
            });
        }

        self.disc_bias.update(snap.bias2);
        let grew = self.config.enable_grow && should_grow(&self.disc_bias, snap.bias2);
        if grew {
            let (n, r) = (self.input_dim(), self.width() + 1);
            let column: Vec<f64> = (0..n).map(|_| xavier_draw(n, r, &mut self.rng)).collect();
            let bias = xavier_draw(n, r, &mut self.rng);
            self.layer.push_node(&column, bias);
            self.attach_node();
            self.disc_bias.reset(self.config.reset_mode);
        }

        self.disc_var.update(snap.variance);
        let pruned = self.config.enable_prune
            && should_prune(&self.disc_var, snap.variance, grew, self.width());
        if pruned {
            let hs = hidden_significance(&self.disc_stats);
            self.remove_node(weakest_node(&hs)?)?;
            self.disc_var.reset(self.config.reset_mode);
        }

        let pre = if grew || pruned {
            self.layer.pre_activation_unchecked(x)
        } else {
            pre
        };
        let (grads, loss) = discriminative_gradients_from(&self.layer, &self.head, x, label, &pre);
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                block: "discriminative loss",
                sample: Some(sample),
            });
        }
        self.apply_discriminative(&grads)
            .map_err(|e| with_sample(e, sample))?;
        self.samples_seen += 1;
        Ok(StepReport {
            grew,
            pruned,
            loss,
            width: self.width(),
        })
    }

    /// Momentum SGD: `v ← μ v + g`, `θ ← θ − lr v`.
    pub fn apply_discriminative(&mut self, grads: &DiscriminativeGrads) -> Result<()> {
        let blocks: [(&'static str, bool); 4] = [
            ("discriminative weight gradient", grads.weights.is_finite()),
            (
                "discriminative encoder bias gradient",
                all_finite(&grads.enc_bias),
            ),
            ("output weight gradient", grads.theta.is_finite()),
            ("output bias gradient", all_finite(&grads.eta)),
        ];
        if let Some((block, _)) = blocks.iter().find(|(_, ok)| !ok) {
            return Err(Error::NonFinite {
                block,
                sample: None,
            });
        }
        let (lr, mu) = (self.config.lr_discriminative, self.config.momentum);
        momentum_update(
            self.layer.weights_mut().as_mut_slice(),
            self.enc_velocity.as_mut_slice(),
            grads.weights.as_slice(),
            lr,
            mu,
        );
        momentum_update(
            self.layer.enc_bias_mut(),
            &mut self.enc_bias_velocity,
            &grads.enc_bias,
            lr,
            mu,
        );
        momentum_update(
            self.head.theta.as_mut_slice(),
            self.head.theta_velocity.as_mut_slice(),
            grads.theta.as_slice(),
            lr,
            mu,
        );
        momentum_update(
            &mut self.head.eta,
            &mut self.head.eta_velocity,
            &grads.eta,
            lr,
            mu,
        );
        Ok(())
    }

    /// Generative pass over every row, then a discriminative pass over the
    /// labeled rows, one epoch each.
    pub fn train_batch(&mut self, batch: &StreamBatch) -> Result<BatchTrainReport> {
        self.train_rows(&batch.features, &batch.labels, &batch.labeled_mask)
    }

    /// As [`train_batch`](Self::train_batch) with an explicit label mask.
    pub fn train_rows(
        &mut self,
        features: &Mat,
        labels: &[usize],
        labeled_mask: &[bool],
    ) -> Result<BatchTrainReport> {
        if labels.len() != features.rows() {
            return Err(Error::Dimension {
                context: "batch labels",
                expected: features.rows(),
                actual: labels.len(),
            });
        }
        if labeled_mask.len() != features.rows() {
            return Err(Error::Dimension {
                context: "batch label mask",
                expected: features.rows(),
                actual: labeled_mask.len(),
            });
        }
        let mut report = BatchTrainReport::default();
        if self.config.enable_generative {
            for row in features.iter_rows() {
                let step = self.generative_step(row)?;
                report.generative_steps += 1;
                report.generative_loss += step.loss;
                report.grows += step.grew as usize;
                report.prunes += step.pruned as usize;
            }
        }
        for (i, row) in features.iter_rows().enumerate() {
            if !labeled_mask[i] {
                continue;
            }
            let step = self.discriminative_step(row, labels[i])?;
            report.discriminative_steps += 1;
            report.discriminative_loss += step.loss;
            report.grows += step.grew as usize;
            report.prunes += step.pruned as usize;
        }
        if report.generative_steps > 0 {
            report.generative_loss /= report.generative_steps as f64;
        }
        if report.discriminative_steps > 0 {
            report.discriminative_loss /= report.discriminative_steps as f64;
        }
        report.width = self.width();
        Ok(report)
    }

    /// Registers a node just appended to the layer with the head, the
    /// momentum buffers and both statistics sets.
    fn attach_node(&mut self) {
        let (n, r, m) = (self.input_dim(), self.width(), self.classes());
        let row: Vec<f64> = (0..m).map(|_| xavier_draw(r, m, &mut self.rng)).collect();
        self.head.push_row(&row);
        self.enc_velocity.push_col(&vec![0.0; n]);
        self.enc_bias_velocity.push(0.0);
        self.gen_stats.push_node();
        self.disc_stats.push_node();
    }

    fn remove_node(&mut self, index: usize) -> Result<()> {
        self.layer.prune_node(index)?;
        self.head.remove_row(index);
        self.enc_velocity.remove_col(index);
        self.enc_bias_velocity.remove(index);
        self.gen_stats.remove_node(index);
        self.disc_stats.remove_node(index);
        Ok(())
    }

    /// Verifies that every per-node container matches the hidden width.
    pub fn check_consistency(&self) -> Result<()> {
        let r = self.width();
        let n = self.input_dim();
        let checks = [
            ("head rows", self.head.theta.rows()),
            ("head velocity rows", self.head.theta_velocity.rows()),
            ("encoder velocity columns", self.enc_velocity.cols()),
            ("encoder bias velocity", self.enc_bias_velocity.len()),
            ("generative statistics", self.gen_stats.len()),
            ("discriminative statistics", self.disc_stats.len()),
        ];
        for (context, actual) in checks {
            if actual != r {
                return Err(Error::Dimension {
                    context,
                    expected: r,
                    actual,
                });
            }
        }
        if self.enc_velocity.rows() != n {
            return Err(Error::Dimension {
                context: "encoder velocity rows",
                expected: n,
                actual: self.enc_velocity.rows(),
            });
        }
        let m = self.classes();
        if self.head.theta.cols() != m
            || self.head.theta_velocity.cols() != m
            || self.head.eta_velocity.len() != m
        {
            return Err(Error::Dimension {
                context: "head classes",
                expected: m,
                actual: self.head.theta.cols(),
            });
        }
        if !self.layer.is_finite() || !self.head.theta.is_finite() || !all_finite(&self.head.eta) {
            return Err(Error::NonFinite {
                block: "model parameters",
                sample: None,
            });
        }
        Ok(())
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            n: self.input_dim(),
            m: self.classes(),
            width: self.width(),
            parameter_count: self.parameter_count(),
            samples_seen: self.samples_seen,
            generative_bias: (&self.gen_bias).into(),
            generative_variance: (&self.gen_var).into(),
            discriminative_bias: (&self.disc_bias).into(),
            discriminative_variance: (&self.disc_var).into(),
            config: self.config.clone(),
        }
    }

    /// SHA-256 over the full serialized state, parameters, monitors and RNG
    /// included.
    pub fn state_digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("model state serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn write_checkpoint<W: Write>(&self, writer: W) -> Result<()> {
        let doc = CheckpointRef {
            format: CHECKPOINT_FORMAT,
            version: CHECKPOINT_VERSION,
            model: self,
        };
        serde_json::to_writer(writer, &doc)?;
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(reader: R) -> Result<Self> {
        let doc: Checkpoint = serde_json::from_reader(reader)
            .map_err(|e| Error::Checkpoint(format!("malformed checkpoint: {e}")))?;
        if doc.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unexpected format tag {:?}",
                doc.format
            )));
        }
        if doc.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {}",
                doc.version
            )));
        }
        doc.model.config.validate()?;
        doc.model.check_consistency()?;
        Ok(doc.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_checkpoint(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_checkpoint(std::io::BufReader::new(file))
    }
}

#[derive(Serialize)]
struct CheckpointRef<'a> {
    format: &'a str,
    version: u32,
    model: &'a DevdanModel,
}

#[derive(Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    model: DevdanModel,
}

fn momentum_update(params: &mut [f64], velocity: &mut [f64], grads: &[f64], lr: f64, mu: f64) {
    for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grads) {
        *v = mu * *v + g;
        *p -= lr * *v;
    }
}

fn with_sample(err: Error, sample: u64) -> Error {
    match err {
        Error::NonFinite { block, .. } => Error::NonFinite {
            block,
            sample: Some(sample),
        },
        other => other,
    }
}
