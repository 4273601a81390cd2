use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{infer, map_weights, program_pair, CrossbarPair, ProgramReport};
use crate::device::PopulationParams;
use crate::error::{Error, Result};
use crate::protocols::WriteVerifySpec;
use crate::seed::{derive, rng_from, stream};
use crate::xbar::{BiasScheme, Crossbar};

/// Synthetic linearly separable classification task. Labels come from a
/// random linear teacher; samples closer than `margin` to a decision
/// boundary are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskSpec {
    pub n_features: usize,
    pub n_classes: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Minimum gap between the best and second-best teacher score.
    pub margin: f64,
    pub teacher_bias_std: f64,
}

impl Default for TaskSpec {
    fn default() -> Self {
        Self { n_features: 8, n_classes: 4, n_train: 400, n_test: 400, margin: 0.3, teacher_bias_std: 0.5 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Samples {
    /// Features in `[-1, 1]`, without the bias input.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub n_features: usize,
    pub n_classes: usize,
    pub train: Samples,
    pub test: Samples,
}

pub fn generate_task(spec: &TaskSpec, seed: u64) -> Result<Dataset> {
    if spec.n_features == 0 || spec.n_classes < 2 {
        return Err(Error::InvalidArgument("task needs >= 1 feature and >= 2 classes".into()));
    }
    if !(spec.margin >= 0.0 && spec.teacher_bias_std >= 0.0) {
        return Err(Error::InvalidArgument("margin and teacher_bias_std must be >= 0".into()));
    }
    let (d, k) = (spec.n_features, spec.n_classes);
    let mut rng = rng_from(derive(seed, stream::DATASET, 0));
    let teacher = DMatrix::from_fn(d, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let bias = DVector::from_fn(k, |_, _| spec.teacher_bias_std * rng.sample::<f64, _>(StandardNormal));

    let want = spec.n_train + spec.n_test;
    let budget = 1000 * want.max(1);
    let mut all = Samples::default();
    let mut attempts = 0;
    while all.len() < want {
        if attempts == budget {
            return Err(Error::SamplingFailed { attempts });
        }
        attempts += 1;
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let s = teacher.tr_mul(&DVector::from_column_slice(&x)) + &bias;
        let (best, second) = top_two(s.as_slice());
        if s[best] - s[second] >= spec.margin {
            all.x.push(x);
            all.y.push(best);
        }
    }
    let test = Samples { x: all.x.split_off(spec.n_train), y: all.y.split_off(spec.n_train) };
    Ok(Dataset { n_features: d, n_classes: k, train: all, test })
}

fn top_two(s: &[f64]) -> (usize, usize) {
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    (idx[0], idx[1])
}

/// Index of the largest score, first on ties.
pub fn argmax(s: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in s.iter().enumerate() {
        if *v > s[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSpec {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self { epochs: 500, learning_rate: 0.5, l2: 1e-3 }
    }
}

/// Feature vector with the constant bias input appended.
pub fn augment(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.push(1.0);
    v
}

/// Full-batch gradient descent on softmax cross-entropy. Returns the
/// `(n_features + 1) x n_classes` weight matrix, bias in the last row.
pub fn train_softmax(data: &Samples, n_classes: usize, spec: &TrainSpec) -> Result<DMatrix<f64>> {
    if data.is_empty() {
        return Err(Error::InsufficientData { need: 1, got: 0 });
    }
    let n = data.len();
    let d = data.x[0].len() + 1;
    let x = DMatrix::from_fn(n, d, |i, j| if j + 1 == d { 1.0 } else { data.x[i][j] });
    let mut y = DMatrix::zeros(n, n_classes);
    for (i, &c) in data.y.iter().enumerate() {
        y[(i, c)] = 1.0;
    }
    let mut w = DMatrix::zeros(d, n_classes);
    for _ in 0..spec.epochs {
        let mut p = &x * &w;
        for mut row in p.row_iter_mut() {
            let m = row.max();
            row.apply(|v| *v = (*v - m).exp());
            let z = row.sum();
            row /= z;
        }
        let grad = x.tr_mul(&(p - &y)) / n as f64 + &w * spec.l2;
        w -= grad * spec.learning_rate;
    }
    Ok(w)
}

pub fn accuracy(scores: impl Iterator<Item = Vec<f64>>, labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = scores.zip(labels).filter(|(s, &y)| argmax(s) == y).count();
    hits as f64 / labels.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferSpec {
    /// Row voltage per unit feature value.
    pub v_in: f64,
    pub r_seg: f64,
    pub scheme: BiasScheme,
    pub write_verify: WriteVerifySpec,
}

impl Default for TransferSpec {
    fn default() -> Self {
        Self { v_in: 0.2, r_seg: 8.0, scheme: BiasScheme::HalfV, write_verify: WriteVerifySpec::default() }
    }
}

#[derive(Clone, Debug)]
pub struct TransferReport {
    pub float_accuracy: f64,
    pub array_accuracy: f64,
    pub weights: DMatrix<f64>,
    pub stored: DMatrix<f64>,
    pub program: ProgramReport,
}

impl TransferReport {
    pub fn relative_accuracy(&self) -> f64 {
        self.array_accuracy / self.float_accuracy
    }
}

/// Ex-situ transfer: generate the task, train in floating point, program
/// the weights into a fresh differential pair and score the test set on
/// the array.
pub fn run_transfer(
    pop: &PopulationParams,
    task: &TaskSpec,
    train: &TrainSpec,
    transfer: &TransferSpec,
    seed: u64,
) -> Result<TransferReport> {
    let data = generate_task(task, seed)?;
    let w = train_softmax(&data.train, data.n_classes, train)?;
    let float_accuracy =
        accuracy(data.test.x.iter().map(|x| w.tr_mul(&DVector::from_vec(augment(x))).as_slice().to_vec()), &data.test.y);

    let (n, m) = w.shape();
    let array = |k: u64| -> Result<Crossbar> {
        Ok(Crossbar::from_population(pop, n, m, transfer.r_seg, derive(seed, stream::ARRAY, k))?
            .with_scheme(transfer.scheme))
    };
    let mapped = map_weights(&w, (pop.g_lo, pop.g_hi))?;
    let mut pair = CrossbarPair::new(array(0)?, array(1)?, mapped.mapping.clone())?;
    let program = program_pair(&mut pair, &mapped, &transfer.write_verify)?;

    let mut scores = Vec::with_capacity(data.test.len());
    for x in &data.test.x {
        let v: Vec<f64> = augment(x).iter().map(|f| f * transfer.v_in).collect();
        scores.push(infer(&pair, &v)?);
    }
    let array_accuracy = accuracy(scores.into_iter(), &data.test.y);
    Ok(TransferReport { float_accuracy, array_accuracy, weights: w, stored: pair.stored_weights(), program })
}

/// Extension point for training on the array itself. No implementation is
/// provided.
pub trait InSituTrainer {
    fn step(&mut self, pair: &mut CrossbarPair, input: &[f64], label: usize) -> Result<()>;
}
