//! Training loop and evaluation.
//!
//! One run is sequential in its optimizer state; the gradient of each
//! mini-batch is averaged over the batch's samples, computed in
//! parallel and reduced in index order so results do not depend on
//! thread scheduling.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nn::{
    backward_with_prediction, forward, argmax, NetworkSpec, OptimizerKind, OptimizerState,
    Parameters,
};
use crate::rng::{derive_seed, Rng};
use crate::signal::LabeledDataset;

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Gradient scope per update: 1 is stochastic GD, the dataset size
    /// is batch GD, anything between is mini-batch GD.
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    /// Seeds the per-epoch shuffles; the weight-init seed is derived
    /// from it.
    pub shuffle_seed: u64,
}

impl TrainConfig {
    /// Replication defaults: batches of 32 with each architecture's
    /// default update rule and learning rate; 30 epochs for the dense
    /// nets, 12 for the convolutional ones (Adam converges in a few
    /// epochs there, and 12 keeps CNN2 under a desk-scale minute).
    pub fn for_architecture(arch: crate::nn::Architecture, shuffle_seed: u64) -> Self {
        let (optimizer, learning_rate) = arch.default_optimizer();
        let epochs = if arch.is_convolutional() { 12 } else { 30 };
        TrainConfig { epochs, batch_size: 32, optimizer, learning_rate, shuffle_seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::param("epochs must be >= 1".to_string()));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size must be >= 1".to_string()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::param(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// Weight-initialization seed, derived so that one seed field
    /// reproduces the whole run.
    pub fn init_seed(&self) -> u64 {
        derive_seed(self.shuffle_seed, 0x1217, 0)
    }
}

/// Per-epoch training statistics. The accuracy is measured on the
/// predictions observed during the epoch's own batches (parameters
/// evolve within the epoch).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub mean_loss: f64,
    pub train_accuracy: f64,
}

/// A fitted network.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub spec: NetworkSpec,
    pub params: Parameters,
    pub train_log: Vec<EpochStats>,
    pub init_seed: u64,
    pub config: TrainConfig,
}

fn check_dataset(spec: &NetworkSpec, ds: &LabeledDataset) -> Result<()> {
    ds.validate()?;
    if ds.is_empty() {
        return Err(Error::param("dataset is empty".to_string()));
    }
    if ds.input_length() != spec.input_length {
        return Err(Error::shape(format!(
            "dataset signals have {} samples, network expects {}",
            ds.input_length(),
            spec.input_length
        )));
    }
    if ds.set.len() != spec.num_classes {
        return Err(Error::shape(format!(
            "dataset has {} classes, network expects {}",
            ds.set.len(),
            spec.num_classes
        )));
    }
    Ok(())
}

/// Mean loss and mean gradient over a batch of samples, plus the number
/// of argmax-correct predictions seen on the way. Per-sample gradients
/// are computed in parallel and summed in index order.
pub fn batch_gradient(
    spec: &NetworkSpec,
    params: &Parameters,
    samples: &[(&[f64], usize)],
) -> Result<(f64, Parameters, usize)> {
    if samples.is_empty() {
        return Err(Error::param("empty batch".to_string()));
    }
    let per_sample: Vec<(f64, Parameters, usize)> = samples
        .par_iter()
        .map(|&(input, label)| backward_with_prediction(spec, params, input, label))
        .collect::<Result<_>>()?;

    let mut grads = params.zeros_like();
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    for (i, (loss, g, predicted)) in per_sample.iter().enumerate() {
        loss_sum += loss;
        grads.add_assign(g);
        if *predicted == samples[i].1 {
            correct += 1;
        }
    }
    let scale = 1.0 / samples.len() as f64;
    grads.scale(scale);
    Ok((loss_sum * scale, grads, correct))
}

/// Fits `spec` to `train_set`.
///
/// Deterministic for a fixed config: the shuffles, the weight init, and
/// the batched reductions are all seeded or order-fixed.
pub fn train(
    spec: &NetworkSpec,
    train_set: &LabeledDataset,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    config.validate()?;
    spec.validate()?;
    check_dataset(spec, train_set)?;

    let init_seed = config.init_seed();
    let mut params = Parameters::init_he_uniform(spec, init_seed)?;
    let mut opt = OptimizerState::new(config.optimizer, config.learning_rate, params.len())?;

    let n = train_set.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut train_log = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        Rng::new(derive_seed(config.shuffle_seed, 1, epoch as u64)).shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let samples: Vec<(&[f64], usize)> = batch
                .iter()
                .map(|&i| (train_set.signals[i].samples.as_slice(), train_set.labels[i]))
                .collect();
            let (batch_loss, grads, batch_correct) = batch_gradient(spec, &params, &samples)?;
            loss_sum += batch_loss * samples.len() as f64;
            correct += batch_correct;
            opt.step(&mut params, &grads)?;
        }

        let mean_loss = loss_sum / n as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        train_log.push(EpochStats { mean_loss, train_accuracy: correct as f64 / n as f64 });
    }

    Ok(TrainedModel { spec: spec.clone(), params, train_log, init_seed, config: *config })
}

/// Fraction of `test_set` classified correctly by argmax over the
/// logits (ties to the lowest index).
pub fn evaluate_accuracy(model: &TrainedModel, test_set: &LabeledDataset) -> Result<f64> {
    accuracy_of(&model.spec, &model.params, test_set)
}

/// As [`evaluate_accuracy`] for a bare (spec, params) pair, e.g. a
/// model loaded from disk.
pub fn accuracy_of(
    spec: &NetworkSpec,
    params: &Parameters,
    test_set: &LabeledDataset,
) -> Result<f64> {
    check_dataset(spec, test_set)?;
    let correct: usize = test_set
        .signals
        .par_iter()
        .zip(&test_set.labels)
        .map(|(signal, &label)| {
            forward(spec, params, &signal.samples).map(|logits| (argmax(&logits) == label) as usize)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(correct as f64 / test_set.len() as f64)
}

/// Writes a training log as CSV: `epoch,mean_loss,train_accuracy`.
pub fn save_train_log_csv(log: &[EpochStats], path: &Path) -> Result<()> {
    let mut out = String::from("epoch,mean_loss,train_accuracy\n");
    for (epoch, stats) in log.iter().enumerate() {
        let _ = writeln!(out, "{epoch},{},{}", stats.mean_loss, stats.train_accuracy);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{build_architecture, sgd_step, Architecture};
    use crate::signal::{generate_dataset, FrequencySet, SignalParams};

    fn omega1() -> FrequencySet {
        FrequencySet::new("omega1", vec![5.0, 5.5, 6.0]).unwrap()
    }

    fn base_params(sigma: f64) -> SignalParams {
        SignalParams {
            amplitude: 1.0,
            frequency: 1.0,
            phase: 0.0,
            noise_std: sigma,
            duration: 1.0,
            dt: 0.01,
            seed: 0,
        }
    }

    fn small_dataset(per_class: usize, sigma: f64, seed: u64) -> LabeledDataset {
        generate_dataset(&omega1(), per_class, &base_params(sigma), seed).unwrap()
    }

    #[test]
    fn noiseless_dnn_reaches_full_train_accuracy() {
        let ds = small_dataset(100, 0.0, 5);
        let spec = build_architecture(Architecture::Dnn, 101, 3).unwrap();
        let mut config = TrainConfig::for_architecture(Architecture::Dnn, 11);
        config.epochs = 20;
        let model = train(&spec, &ds, &config).unwrap();
        let reached = model
            .train_log
            .iter()
            .position(|s| s.train_accuracy == 1.0)
            .expect("never reached 100% train accuracy within 20 epochs");
        assert!(reached < 20, "first perfect epoch: {reached}");
    }

    #[test]
    fn zero_epochs_rejected() {
        let ds = small_dataset(2, 0.0, 5);
        let spec = build_architecture(Architecture::Dnn, 101, 3).unwrap();
        let mut config = TrainConfig::for_architecture(Architecture::Dnn, 11);
        config.epochs = 0;
        assert!(train(&spec, &ds, &config).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let ds = small_dataset(10, 0.2, 6);
        let spec = build_architecture(Architecture::Dnn, 101, 3).unwrap();
        let mut config = TrainConfig::for_architecture(Architecture::Dnn, 3);
        config.epochs = 5;
        let a = train(&spec, &ds, &config).unwrap();
        let b = train(&spec, &ds, &config).unwrap();
        assert_eq!(a.params.data, b.params.data);
        assert_eq!(a.train_log, b.train_log);
    }

    #[test]
    fn duplicated_sample_batch_equals_single_gradient() {
        let ds = small_dataset(1, 0.1, 7);
        let spec = build_architecture(Architecture::Dnn, 101, 3).unwrap();
        let params = Parameters::init_he_uniform(&spec, 9).unwrap();
        let sample = (ds.signals[0].samples.as_slice(), ds.labels[0]);
        let (loss1, g1, _) = batch_gradient(&spec, &params, &[sample]).unwrap();
        let (loss2, g2, _) = batch_gradient(&spec, &params, &[sample, sample]).unwrap();
        assert!((loss1 - loss2).abs() < 1e-15);
        for (a, b) in g1.data.iter().zip(&g2.data) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn one_epoch_batch_gd_is_one_averaged_step() {
        // Full-batch gradient descent for one epoch must equal a single
        // SGD step with the hand-averaged gradient.
        let set = FrequencySet::new("pair", vec![5.0, 6.0]).unwrap();
        let ds = generate_dataset(&set, 1, &base_params(0.1), 21).unwrap();
        let spec = build_architecture(Architecture::Dnn, 101, 2).unwrap();
        let config = TrainConfig {
            epochs: 1,
            batch_size: ds.len(),
            optimizer: OptimizerKind::Sgd,
            learning_rate: 0.05,
            shuffle_seed: 40,
        };
        let model = train(&spec, &ds, &config).unwrap();

        let mut manual = Parameters::init_he_uniform(&spec, config.init_seed()).unwrap();
        let mut summed = manual.zeros_like();
        for (signal, &label) in ds.signals.iter().zip(&ds.labels) {
            let (_, g) = crate::nn::backward(&spec, &manual, &signal.samples, label).unwrap();
            summed.add_assign(&g);
        }
        summed.scale(1.0 / ds.len() as f64);
        let mut opt = OptimizerState::new(OptimizerKind::Sgd, 0.05, manual.len()).unwrap();
        sgd_step(&mut manual, &summed, &mut opt).unwrap();

        for (a, b) in model.params.data.iter().zip(&manual.data) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn evaluate_accuracy_basics() {
        let ds = small_dataset(4, 0.0, 8);
        let spec = build_architecture(Architecture::Dnn, 101, 3).unwrap();

        // Zero weights predict class 0 everywhere: chance level on a
        // balanced set.
        let zero = Parameters::zeros(&spec).unwrap();
        let acc = accuracy_of(&spec, &zero, &ds).unwrap();
        assert!((acc - 1.0 / 3.0).abs() < 1e-12);

        // A trained model on its own noiseless training set is perfect.
        // The set is tiny (12 signals), so give the optimizer room.
        let mut config = TrainConfig::for_architecture(Architecture::Dnn, 11);
        config.epochs = 100;
        let model = train(&spec, &ds, &config).unwrap();
        assert_eq!(evaluate_accuracy(&model, &ds).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_invariant_under_test_set_permutation() {
        let ds = small_dataset(6, 0.3, 9);
        let spec = build_architecture(Architecture::Dnn, 101, 3).unwrap();
        let mut config = TrainConfig::for_architecture(Architecture::Dnn, 13);
        config.epochs = 3;
        let model = train(&spec, &ds, &config).unwrap();

        let mut permuted = ds.clone();
        permuted.signals.reverse();
        permuted.labels.reverse();
        assert_eq!(
            evaluate_accuracy(&model, &ds).unwrap(),
            evaluate_accuracy(&model, &permuted).unwrap()
        );
    }

    #[test]
    fn relabeling_with_permuted_outputs_keeps_accuracy() {
        // Swap classes 0 and 2 in the labels and swap the corresponding
        // output units: accuracy must not change.
        let ds = small_dataset(6, 0.3, 10);
        let spec = build_architecture(Architecture::Dnn, 101, 3).unwrap();
        let mut config = TrainConfig::for_architecture(Architecture::Dnn, 14);
        config.epochs = 3;
        let model = train(&spec, &ds, &config).unwrap();
        let base = evaluate_accuracy(&model, &ds).unwrap();

        let mut swapped = model.clone();
        let block = *swapped.params.blocks.last().unwrap();
        let n_in = block.weight_len / block.bias_len;
        for i in 0..n_in {
            swapped.params.data.swap(block.weight_offset + i, block.weight_offset + 2 * n_in + i);
        }
        swapped.params.data.swap(block.bias_offset, block.bias_offset + 2);

        let mut relabeled = ds.clone();
        for l in &mut relabeled.labels {
            *l = match *l {
                0 => 2,
                2 => 0,
                other => other,
            };
        }
        assert_eq!(evaluate_accuracy(&swapped, &relabeled).unwrap(), base);
    }

    #[test]
    fn loss_mostly_non_increasing() {
        let ds = small_dataset(40, 0.1, 12);
        let spec = build_architecture(Architecture::Dnn, 101, 3).unwrap();
        let mut config = TrainConfig::for_architecture(Architecture::Dnn, 15);
        config.epochs = 15;
        let model = train(&spec, &ds, &config).unwrap();
        let drops = model
            .train_log
            .windows(2)
            .filter(|w| w[1].mean_loss <= w[0].mean_loss)
            .count();
        let total = model.train_log.len() - 1;
        assert!(
            drops as f64 / total as f64 >= 0.8,
            "only {drops}/{total} non-increasing transitions"
        );
    }

    #[test]
    fn mismatched_dataset_rejected() {
        let ds = small_dataset(2, 0.0, 5);
        let spec = build_architecture(Architecture::Dnn, 50, 3).unwrap();
        let config = TrainConfig::for_architecture(Architecture::Dnn, 11);
        assert!(matches!(train(&spec, &ds, &config), Err(Error::Shape(_))));
    }

    #[test]
    fn train_log_csv_layout() {
        let log = vec![
            EpochStats { mean_loss: 1.0986, train_accuracy: 0.33 },
            EpochStats { mean_loss: 0.5, train_accuracy: 0.9 },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        save_train_log_csv(&log, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "epoch,mean_loss,train_accuracy");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,1.0986,"));
    }
}
