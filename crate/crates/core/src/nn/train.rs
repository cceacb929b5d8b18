use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::cross_entropy;
use super::network::{argmax, Network};
use super::optim::Sgd;
use crate::dataset::LabeledImage;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Stop after this many epochs without a validation-accuracy improvement.
    /// Training also stops once validation accuracy is perfect.
    pub patience: Option<usize>,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.01,
            momentum: 0.9,
            patience: Some(2),
            seed: 0,
        }
    }
}

/// Per-epoch training log entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    /// `None` when training without a validation set.
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

pub struct Trained<T> {
    /// Parameters from the epoch with the best validation accuracy (earliest
    /// on ties), or from the last epoch when there was no validation set.
    pub network: Network<T>,
    pub records: Vec<TrainRecord>,
    pub best_epoch: usize,
}

/// Mean loss, accuracy, and predicted class per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub predictions: Vec<usize>,
}

pub fn evaluate<T: Scalar>(
    network: &Network<T>,
    samples: &[LabeledImage<T>],
) -> Result<Evaluation> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    let mut predictions = Vec::with_capacity(samples.len());
    for s in samples {
        let probs = network.forward(&s.image)?;
        let (l, _) = cross_entropy(&probs, s.label.index())?;
        loss += l.as_f64();
        let (pred, _) = argmax(probs.data());
        correct += usize::from(pred == s.label.index());
        predictions.push(pred);
    }
    let n = samples.len().max(1) as f64;
    Ok(Evaluation {
        loss: loss / n,
        accuracy: correct as f64 / n,
        predictions,
    })
}

/// Minibatch SGD with momentum; see [`train_with`].
pub fn train<T: Scalar>(
    network: Network<T>,
    train_set: &[LabeledImage<T>],
    validation: &[LabeledImage<T>],
    hp: &HyperParams,
) -> Result<Trained<T>> {
    train_with(network, train_set, validation, hp, |_, _| {
        ControlFlow::Continue(())
    })
}

/// Trains for up to `hp.epochs`, reshuffling the training order every epoch
/// from a generator seeded with `hp.seed`. `observer` sees each epoch's record
/// and may stop training early.
pub fn train_with<T: Scalar>(
    mut network: Network<T>,
    train_set: &[LabeledImage<T>],
    validation: &[LabeledImage<T>],
    hp: &HyperParams,
    mut observer: impl FnMut(&TrainRecord, &Network<T>) -> ControlFlow<()>,
) -> Result<Trained<T>> {
    if train_set.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    if hp.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut opt = Sgd::new(T::of(hp.learning_rate), T::of(hp.momentum));
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut records = Vec::with_capacity(hp.epochs);
    let mut best: Option<(f64, usize, Network<T>)> = None;

    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(hp.batch_size) {
            network.zero_grad();
            for &i in batch {
                let sample = &train_set[i];
                let trace = network.forward_trace(&sample.image)?;
                let (loss, grad) = cross_entropy(&trace.probs, sample.label.index())?;
                loss_sum += loss.as_f64();
                correct += usize::from(argmax(trace.probs.data()).0 == sample.label.index());
                network.backward(trace, &grad)?;
            }
            opt.step(&mut network, T::one() / T::of(batch.len() as f64));
        }
        let n = train_set.len() as f64;
        let (val_loss, val_accuracy) = if validation.is_empty() {
            (None, None)
        } else {
            let ev = evaluate(&network, validation)?;
            (Some(ev.loss), Some(ev.accuracy))
        };
        let record = TrainRecord {
            epoch,
            train_loss: loss_sum / n,
            train_accuracy: correct as f64 / n,
            val_loss,
            val_accuracy,
        };
        log::info!(
            "epoch {epoch}: loss {:.4} acc {:.4} val_loss {:?} val_acc {:?}",
            record.train_loss,
            record.train_accuracy,
            record.val_loss,
            record.val_accuracy
        );
        if let Some(acc) = val_accuracy {
            if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
                best = Some((acc, epoch, network.clone()));
            }
        }
        let flow = observer(&record, &network);
        records.push(record);
        let plateaued = match (&best, hp.patience) {
            (Some((acc, best_epoch, _)), patience) => {
                *acc >= 1.0 || patience.is_some_and(|p| epoch - best_epoch >= p)
            }
            _ => false,
        };
        if flow.is_break() || plateaued {
            break;
        }
    }

    let last = records.len().saturating_sub(1);
    let (network, best_epoch) = match best {
        Some((_, epoch, net)) => (net, epoch),
        None => (network, last),
    };
    Ok(Trained {
        network,
        records,
        best_epoch,
    })
}
