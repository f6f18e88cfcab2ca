//! Synthetic benchmark generators.
//!
//! | name      | task     | definition |
//! |-----------|----------|------------|
//! | twonorm   | 2 classes, 20-d | `N(+a·1, I)` vs `N(-a·1, I)`, `a = 2/√20` |
//! | threenorm | 2 classes, 20-d | equal mixture of `N(a·1, I)`, `N(-a·1, I)` vs `N((a,-a,a,…), I)`, `a = 2/√20` |
//! | ringnorm  | 2 classes, 20-d | `N(0, 4I)` vs `N(a·1, I)`, `a = 1/√20` |
//! | waveform  | 3 classes, 21-d | `u·h_j + (1-u)·h_k + N(0, I)`, `u ~ U(0,1)`, pairs (1,2), (1,3), (2,3) |
//! | friedman1 | regression, 10-d | `10 sin(π x1 x2) + 20 (x3 - ½)² + 10 x4 + 5 x5 + N(0,1)`, `x ~ U(0,1)^10` |
//! | friedman2 | regression, 4-d | `√(x1² + (x2 x3 - 1/(x2 x4))²) + N(0, σ2²)` |
//! | friedman3 | regression, 4-d | `atan((x2 x3 - 1/(x2 x4)) / x1) + N(0, σ3²)` |
//!
//! Waveform base functions: `h1(i) = max(6 - |i - 11|, 0)`, `h2(i) = h1(i - 4)`,
//! `h3(i) = h1(i + 4)` for `i = 1..=21`. Friedman 2/3 inputs are uniform on
//! `x1 ∈ [0,100]`, `x2 ∈ [40π, 560π]`, `x3 ∈ [0,1]`, `x4 ∈ [1,11]`; σ2 and σ3
//! give a 3:1 ratio of signal to noise standard deviation (frozen from a
//! 10⁶-sample pilot run).
//!
//! Class labels are 0-based; every class is equiprobable.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Dataset, Target, Task};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

pub const TWONORM_A: f64 = 0.447_213_595_499_957_9; // 2/√20
pub const THREENORM_A: f64 = TWONORM_A;
pub const RINGNORM_A: f64 = 0.223_606_797_749_978_97; // 1/√20
pub const NORM_DIM: usize = 20;
pub const WAVEFORM_DIM: usize = 21;
pub const FRIEDMAN1_DIM: usize = 10;
pub const FRIEDMAN1_NOISE_SD: f64 = 1.0;
/// Signal sd ≈ 379.5.
pub const FRIEDMAN2_NOISE_SD: f64 = 126.5;
/// Signal sd ≈ 0.3168.
pub const FRIEDMAN3_NOISE_SD: f64 = 0.1056;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SyntheticName {
    Waveform,
    Twonorm,
    Threenorm,
    Ringnorm,
    Friedman1,
    Friedman2,
    Friedman3,
}

impl SyntheticName {
    pub const ALL: [SyntheticName; 7] = [
        SyntheticName::Waveform,
        SyntheticName::Twonorm,
        SyntheticName::Threenorm,
        SyntheticName::Ringnorm,
        SyntheticName::Friedman1,
        SyntheticName::Friedman2,
        SyntheticName::Friedman3,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SyntheticName::Waveform => "waveform",
            SyntheticName::Twonorm => "twonorm",
            SyntheticName::Threenorm => "threenorm",
            SyntheticName::Ringnorm => "ringnorm",
            SyntheticName::Friedman1 => "friedman1",
            SyntheticName::Friedman2 => "friedman2",
            SyntheticName::Friedman3 => "friedman3",
        }
    }

    pub fn task(&self) -> Task {
        match self {
            SyntheticName::Waveform => Task::Classification { num_classes: 3 },
            SyntheticName::Twonorm | SyntheticName::Threenorm | SyntheticName::Ringnorm => {
                Task::Classification { num_classes: 2 }
            }
            _ => Task::Regression,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            SyntheticName::Waveform => WAVEFORM_DIM,
            SyntheticName::Twonorm | SyntheticName::Threenorm | SyntheticName::Ringnorm => NORM_DIM,
            SyntheticName::Friedman1 => FRIEDMAN1_DIM,
            SyntheticName::Friedman2 | SyntheticName::Friedman3 => 4,
        }
    }

    fn ordinal(&self) -> u64 {
        *self as u64
    }
}

impl fmt::Display for SyntheticName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SyntheticName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "waveform" => Ok(SyntheticName::Waveform),
            "twonorm" => Ok(SyntheticName::Twonorm),
            "threenorm" | "threennorm" => Ok(SyntheticName::Threenorm),
            "ringnorm" => Ok(SyntheticName::Ringnorm),
            "friedman1" => Ok(SyntheticName::Friedman1),
            "friedman2" => Ok(SyntheticName::Friedman2),
            "friedman3" => Ok(SyntheticName::Friedman3),
            _ => Err(Error::UnknownGenerator(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub name: SyntheticName,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub noise_on: bool,
}

impl SyntheticSpec {
    /// Default sizes: 300/3000 for classification, 200/2000 for regression.
    pub fn standard(name: SyntheticName, seed: u64) -> Self {
        let (n_train, n_test) = if name.task().is_classification() {
            (300, 3000)
        } else {
            (200, 2000)
        };
        SyntheticSpec {
            name,
            n_train,
            n_test,
            seed,
            noise_on: true,
        }
    }
}

/// Draws the train and test sets from disjoint sub-streams of `spec.seed`.
pub fn generate(spec: &SyntheticSpec) -> Result<(Dataset, Dataset)> {
    if spec.n_train == 0 || spec.n_test == 0 {
        return Err(Error::invalid("n_train and n_test must be positive"));
    }
    let key = spec.name.ordinal();
    let mut train_stream = Stream::derive(spec.seed, &[rng::DATAGEN, key, 0]);
    let mut test_stream = Stream::derive(spec.seed, &[rng::DATAGEN, key, 1]);
    let train = sample(spec.name, spec.n_train, spec.noise_on, &mut train_stream)?;
    let test = sample(spec.name, spec.n_test, spec.noise_on, &mut test_stream)?;
    Ok((train, test))
}

/// `n` i.i.d. rows from generator `name`.
pub fn sample(name: SyntheticName, n: usize, noise_on: bool, stream: &mut Stream) -> Result<Dataset> {
    let p = name.n_features();
    let mut features = Vec::with_capacity(n * p);
    let task = name.task();
    let target = match task {
        Task::Classification { num_classes } => {
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let class = stream.index(num_classes);
                labels.push(class);
                draw_class_row(name, class, stream, &mut features);
            }
            Target::Class(labels)
        }
        Task::Regression => {
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let start = features.len();
                draw_regression_inputs(name, stream, &mut features);
                let x = &features[start..];
                let noise = if noise_on {
                    noise_sd(name) * stream.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                };
                y.push(signal(name, x)? + noise);
            }
            Target::Real(y)
        }
    };
    Dataset::new(name.as_str(), features, p, target, task)
}

fn gauss(stream: &mut Stream) -> f64 {
    stream.sample(StandardNormal)
}

fn draw_class_row(name: SyntheticName, class: usize, stream: &mut Stream, out: &mut Vec<f64>) {
    match name {
        SyntheticName::Twonorm => {
            let mean = if class == 0 { TWONORM_A } else { -TWONORM_A };
            out.extend((0..NORM_DIM).map(|_| mean + gauss(stream)));
        }
        SyntheticName::Threenorm => {
            if class == 0 {
                let mean = if stream.index(2) == 0 { THREENORM_A } else { -THREENORM_A };
                out.extend((0..NORM_DIM).map(|_| mean + gauss(stream)));
            } else {
                out.extend((0..NORM_DIM).map(|j| {
                    let mean = if j % 2 == 0 { THREENORM_A } else { -THREENORM_A };
                    mean + gauss(stream)
                }));
            }
        }
        SyntheticName::Ringnorm => {
            if class == 0 {
                out.extend((0..NORM_DIM).map(|_| 2.0 * gauss(stream)));
            } else {
                out.extend((0..NORM_DIM).map(|_| RINGNORM_A + gauss(stream)));
            }
        }
        SyntheticName::Waveform => {
            let (j, k) = match class {
                0 => (0, 1),
                1 => (0, 2),
                _ => (1, 2),
            };
            let u = stream.unit();
            out.extend((1..=WAVEFORM_DIM).map(|i| {
                u * waveform_base(j, i) + (1.0 - u) * waveform_base(k, i) + gauss(stream)
            }));
        }
        _ => unreachable!("regression generator in classification path"),
    }
}

/// Triangular base waveform `h_{which+1}` at position `i` (1-based).
pub fn waveform_base(which: usize, i: usize) -> f64 {
    let shift: i64 = match which {
        0 => 0,
        1 => 4,
        _ => -4,
    };
    let pos = i as i64 - shift;
    (6.0 - (pos - 11).abs() as f64).max(0.0)
}

fn draw_regression_inputs(name: SyntheticName, stream: &mut Stream, out: &mut Vec<f64>) {
    match name {
        SyntheticName::Friedman1 => out.extend((0..FRIEDMAN1_DIM).map(|_| stream.unit())),
        SyntheticName::Friedman2 | SyntheticName::Friedman3 => {
            out.push(stream.uniform(0.0, 100.0));
            out.push(stream.uniform(40.0 * PI, 560.0 * PI));
            out.push(stream.unit());
            out.push(stream.uniform(1.0, 11.0));
        }
        _ => unreachable!("classification generator in regression path"),
    }
}

pub fn noise_sd(name: SyntheticName) -> f64 {
    match name {
        SyntheticName::Friedman1 => FRIEDMAN1_NOISE_SD,
        SyntheticName::Friedman2 => FRIEDMAN2_NOISE_SD,
        SyntheticName::Friedman3 => FRIEDMAN3_NOISE_SD,
        _ => 0.0,
    }
}

/// Noise-free regression function of `name` at `x`.
pub fn signal(name: SyntheticName, x: &[f64]) -> Result<f64> {
    let need = name.n_features();
    if name.task().is_classification() {
        return Err(Error::invalid(format!("{name} has no regression function")));
    }
    if x.len() != need {
        return Err(Error::DimensionMismatch {
            expected: need,
            got: x.len(),
        });
    }
    Ok(match name {
        SyntheticName::Friedman1 => {
            10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
        }
        SyntheticName::Friedman2 => {
            let a = x[1] * x[2] - 1.0 / (x[1] * x[3]);
            (x[0] * x[0] + a * a).sqrt()
        }
        _ => {
            let a = x[1] * x[2] - 1.0 / (x[1] * x[3]);
            (a / x[0]).atan()
        }
    })
}
