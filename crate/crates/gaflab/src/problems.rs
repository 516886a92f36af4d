//! Analytic test landscapes and toy networks covering ill-conditioning,
//! saddles, plateaus, and vanishing/exploding gradient regimes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("unknown problem name `{0}`")]
    UnknownName(String),
    #[error("quadratic eigenvalues must be strictly positive, got ({0}, {1})")]
    InvalidEigenvalues(f64, f64),
    #[error("dataset size must be even and at least 8, got {0}")]
    InvalidDatasetSize(usize),
    #[error("hidden width must be in 1..=16, got {0}")]
    InvalidWidth(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

type LossFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type HessFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;
type BatchLossFn = Arc<dyn Fn(&[f64], &[usize]) -> f64 + Send + Sync>;
type BatchGradFn = Arc<dyn Fn(&[f64], &[usize]) -> Vec<f64> + Send + Sync>;

/// Mini-batch access for problems backed by a sample set.
#[derive(Clone)]
pub struct BatchOps {
    pub n_samples: usize,
    loss: BatchLossFn,
    grad: BatchGradFn,
}

impl BatchOps {
    pub fn loss(&self, w: &[f64], indices: &[usize]) -> f64 {
        (self.loss)(w, indices)
    }

    pub fn grad(&self, w: &[f64], indices: &[usize]) -> Vec<f64> {
        (self.grad)(w, indices)
    }
}

/// A differentiable landscape: loss, exact gradient, optional Hessian.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub dim: usize,
    /// True when the loss is a sum of per-coordinate terms.
    pub separable: bool,
    loss: LossFn,
    grad: GradFn,
    hessian: Option<HessFn>,
    batch: Option<BatchOps>,
}

impl Problem {
    pub fn loss(&self, w: &[f64]) -> f64 {
        debug_assert_eq!(w.len(), self.dim);
        (self.loss)(w)
    }

    pub fn grad(&self, w: &[f64]) -> Vec<f64> {
        debug_assert_eq!(w.len(), self.dim);
        (self.grad)(w)
    }

    pub fn hessian(&self, w: &[f64]) -> Option<Vec<Vec<f64>>> {
        self.hessian.as_ref().map(|h| h(w))
    }

    pub fn batch(&self) -> Option<&BatchOps> {
        self.batch.as_ref()
    }

    /// Gradient of the coordinate-`n` section through the origin, used
    /// by the surface generator for separable problems.
    pub fn axis_grad(&self, axis: usize, u: f64) -> f64 {
        let mut w = vec![0.0; self.dim];
        w[axis] = u;
        self.grad(&w)[axis]
    }
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("separable", &self.separable)
            .finish()
    }
}

/// Built-in analytic landscapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinProblem {
    /// w1^2 + 0.2 w2^2, the separable ill-conditioned example.
    PaperQuadratic,
    /// Diagonal quadratic l1*w1^2 + l2*w2^2, the same scaling
    /// convention as paper_quadratic.
    Quadratic { lambda1: f64, lambda2: f64 },
    /// 1-D plateau well w^4/4 with gradient w^3.
    QuarticWell,
    /// w1^2 - w2^2, indefinite stationary point at the origin.
    Saddle,
    /// 1-D curve flatter than quadratic near 0, steeper tails: w^2/(1+|w|).
    Type1Curve,
}

impl BuiltinProblem {
    pub fn parse(name: &str) -> Result<Self, ProblemError> {
        match name {
            "paper_quadratic" => Ok(Self::PaperQuadratic),
            "quartic_well" => Ok(Self::QuarticWell),
            "saddle" => Ok(Self::Saddle),
            "type1_curve" => Ok(Self::Type1Curve),
            other => {
                // quadratic(l1,l2)
                if let Some(args) = other
                    .strip_prefix("quadratic(")
                    .and_then(|s| s.strip_suffix(')'))
                {
                    let parts: Vec<_> = args.split(',').map(str::trim).collect();
                    if parts.len() == 2 {
                        if let (Ok(l1), Ok(l2)) = (parts[0].parse(), parts[1].parse()) {
                            return build_quadratic_args(l1, l2);
                        }
                    }
                }
                Err(ProblemError::UnknownName(other.to_string()))
            }
        }
    }
}

fn build_quadratic_args(l1: f64, l2: f64) -> Result<BuiltinProblem, ProblemError> {
    if !(l1 > 0.0 && l2 > 0.0 && l1.is_finite() && l2.is_finite()) {
        return Err(ProblemError::InvalidEigenvalues(l1, l2));
    }
    Ok(BuiltinProblem::Quadratic {
        lambda1: l1,
        lambda2: l2,
    })
}

pub fn builtin_problem(which: BuiltinProblem) -> Result<Problem, ProblemError> {
    match which {
        BuiltinProblem::PaperQuadratic => Ok(diag_quadratic("paper_quadratic", 1.0, 0.2)),
        BuiltinProblem::Quadratic { lambda1, lambda2 } => {
            build_quadratic_args(lambda1, lambda2)?;
            Ok(diag_quadratic(
                &format!("quadratic({lambda1},{lambda2})"),
                lambda1,
                lambda2,
            ))
        }
        BuiltinProblem::QuarticWell => Ok(Problem {
            name: "quartic_well".into(),
            dim: 1,
            separable: true,
            loss: Arc::new(|w| 0.25 * w[0].powi(4)),
            grad: Arc::new(|w| vec![w[0].powi(3)]),
            hessian: Some(Arc::new(|w| vec![vec![3.0 * w[0] * w[0]]])),
            batch: None,
        }),
        BuiltinProblem::Saddle => Ok(Problem {
            name: "saddle".into(),
            dim: 2,
            separable: true,
            loss: Arc::new(|w| w[0] * w[0] - w[1] * w[1]),
            grad: Arc::new(|w| vec![2.0 * w[0], -2.0 * w[1]]),
            hessian: Some(Arc::new(|_| vec![vec![2.0, 0.0], vec![0.0, -2.0]])),
            batch: None,
        }),
        BuiltinProblem::Type1Curve => Ok(Problem {
            name: "type1_curve".into(),
            dim: 1,
            separable: true,
            loss: Arc::new(|w| w[0] * w[0] / (1.0 + w[0].abs())),
            grad: Arc::new(|w| {
                let x = w[0];
                let a = x.abs();
                // d/dx [x^2/(1+|x|)] = (x^2 sgn(x) + 2x) / (1+|x|)^2,
                // continuous (C^1) through 0.
                vec![(x * a + 2.0 * x) / ((1.0 + a) * (1.0 + a))]
            }),
            hessian: None,
            batch: None,
        }),
    }
}

fn diag_quadratic(name: &str, l1: f64, l2: f64) -> Problem {
    Problem {
        name: name.to_string(),
        dim: 2,
        separable: true,
        loss: Arc::new(move |w| l1 * w[0] * w[0] + l2 * w[1] * w[1]),
        grad: Arc::new(move |w| vec![2.0 * l1 * w[0], 2.0 * l2 * w[1]]),
        hessian: Some(Arc::new(move |_| {
            vec![vec![2.0 * l1, 0.0], vec![0.0, 2.0 * l2]]
        })),
        batch: None,
    }
}

// ---------------------------------------------------------------------------
// Deep scalar chain

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainActivation {
    Sigmoid,
    Identity,
}

/// A depth-`d` chain of scalar layers `a_i = act(w_i * a_{i-1})` with
/// squared-error loss, the vanishing/exploding gradient test vehicle.
#[derive(Debug, Clone)]
pub struct DeepChainNet {
    pub depth: usize,
    pub activation: ChainActivation,
    pub weights: Vec<f64>,
    pub input: f64,
    pub target: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl DeepChainNet {
    pub fn uniform(
        depth: usize,
        activation: ChainActivation,
        weight: f64,
        input: f64,
        target: f64,
    ) -> Self {
        assert!(depth >= 1);
        Self {
            depth,
            activation,
            weights: vec![weight; depth],
            input,
            target,
        }
    }

    fn act(&self, z: f64) -> f64 {
        match self.activation {
            ChainActivation::Sigmoid => sigmoid(z),
            ChainActivation::Identity => z,
        }
    }

    fn act_deriv(&self, z: f64) -> f64 {
        match self.activation {
            ChainActivation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            ChainActivation::Identity => 1.0,
        }
    }

    pub fn forward(&self) -> f64 {
        let mut a = self.input;
        for &w in &self.weights {
            a = self.act(w * a);
        }
        a
    }

    /// Loss and the exact chain-rule gradient with respect to the first
    /// layer's weight.
    pub fn loss_and_first_weight_grad(&self) -> (f64, f64) {
        let mut activations = Vec::with_capacity(self.depth + 1);
        let mut pre = Vec::with_capacity(self.depth);
        let mut a = self.input;
        activations.push(a);
        for &w in &self.weights {
            let z = w * a;
            pre.push(z);
            a = self.act(z);
            activations.push(a);
        }
        let out = activations[self.depth];
        let loss = (out - self.target) * (out - self.target);
        let mut upstream = 2.0 * (out - self.target);
        for i in (1..self.depth).rev() {
            upstream *= self.act_deriv(pre[i]) * self.weights[i];
        }
        let grad = upstream * self.act_deriv(pre[0]) * activations[0];
        (loss, grad)
    }
}

// ---------------------------------------------------------------------------
// Synthetic dataset and MLP

/// Two seeded Gaussian blobs with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub inputs: Vec<[f64; 2]>,
    pub labels: Vec<u8>,
    pub seed: u64,
}

pub fn make_dataset(seed: u64, n: usize) -> Result<SyntheticDataset, ProblemError> {
    if n < 8 || n % 2 != 0 {
        return Err(ProblemError::InvalidDatasetSize(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let gauss = move |rng: &mut ChaCha8Rng| {
        // Box-Muller, deterministic given the stream position.
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    for i in 0..n {
        let (label, mx, my) = if i < n / 2 {
            (1u8, 1.0, 1.0)
        } else {
            (0u8, -1.0, -1.0)
        };
        let x = mx + 0.5 * gauss(&mut rng);
        let y = my + 0.5 * gauss(&mut rng);
        inputs.push([x, y]);
        labels.push(label);
    }
    Ok(SyntheticDataset {
        inputs,
        labels,
        seed,
    })
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("x1,x2,label\n");
        for (x, y) in self.inputs.iter().zip(&self.labels) {
            out.push_str(&format!("{},{},{}\n", x[0], x[1], y));
        }
        out
    }
}

/// Parameter layout for the 2 -> width -> 1 sigmoid MLP: `w1` row-major
/// (width x 2), then `b1`, then `w2`, then `b2`.
pub fn mlp_dim(width: usize) -> usize {
    width * 2 + width + width + 1
}

struct MlpViews<'a> {
    w1: &'a [f64],
    b1: &'a [f64],
    w2: &'a [f64],
    b2: f64,
}

fn split_params(w: &[f64], width: usize) -> MlpViews<'_> {
    let (w1, rest) = w.split_at(width * 2);
    let (b1, rest) = rest.split_at(width);
    let (w2, b2) = rest.split_at(width);
    MlpViews {
        w1,
        b1,
        w2,
        b2: b2[0],
    }
}

fn mlp_forward(views: &MlpViews<'_>, x: &[f64; 2], hidden: &mut [f64]) -> f64 {
    let width = views.b1.len();
    let mut out = views.b2;
    for j in 0..width {
        let z = views.w1[2 * j] * x[0] + views.w1[2 * j + 1] * x[1] + views.b1[j];
        let h = sigmoid(z);
        hidden[j] = h;
        out += views.w2[j] * h;
    }
    out
}

fn mlp_loss_on(w: &[f64], width: usize, data: &SyntheticDataset, indices: &[usize]) -> f64 {
    let views = split_params(w, width);
    let mut hidden = vec![0.0; width];
    let mut total = 0.0;
    for &i in indices {
        let out = mlp_forward(&views, &data.inputs[i], &mut hidden);
        let p = sigmoid(out).clamp(1e-12, 1.0 - 1e-12);
        let y = data.labels[i] as f64;
        total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    total / indices.len() as f64
}

fn mlp_grad_on(w: &[f64], width: usize, data: &SyntheticDataset, indices: &[usize]) -> Vec<f64> {
    let views = split_params(w, width);
    let mut hidden = vec![0.0; width];
    let mut grad = vec![0.0; w.len()];
    let scale = 1.0 / indices.len() as f64;
    for &i in indices {
        let x = &data.inputs[i];
        let out = mlp_forward(&views, x, &mut hidden);
        let p = sigmoid(out);
        let delta = (p - data.labels[i] as f64) * scale;
        for j in 0..width {
            let h = hidden[j];
            grad[width * 3 + j] += delta * h; // w2
            let dz = delta * views.w2[j] * h * (1.0 - h);
            grad[2 * j] += dz * x[0]; // w1
            grad[2 * j + 1] += dz * x[1];
            grad[width * 2 + j] += dz; // b1
        }
        grad[width * 4] += delta; // b2
    }
    grad
}

/// Wraps the MLP cross-entropy loss over `dataset` as a `Problem` on the
/// flattened weight vector, with exact backpropagation gradients and
/// mini-batch access.
pub fn mlp_problem(dataset: SyntheticDataset, hidden_width: usize) -> Result<Problem, ProblemError> {
    if hidden_width == 0 || hidden_width > 16 {
        return Err(ProblemError::InvalidWidth(hidden_width));
    }
    let n = dataset.len();
    let all: Vec<usize> = (0..n).collect();
    let data_loss = Arc::new(dataset);
    let data_grad = Arc::clone(&data_loss);
    let data_bl = Arc::clone(&data_loss);
    let data_bg = Arc::clone(&data_loss);
    let all_loss = all.clone();
    let all_grad = all;
    Ok(Problem {
        name: format!("mlp(w={hidden_width},n={n})"),
        dim: mlp_dim(hidden_width),
        separable: false,
        loss: Arc::new(move |w| mlp_loss_on(w, hidden_width, &data_loss, &all_loss)),
        grad: Arc::new(move |w| mlp_grad_on(w, hidden_width, &data_grad, &all_grad)),
        hessian: None,
        batch: Some(BatchOps {
            n_samples: n,
            loss: Arc::new(move |w, idx| mlp_loss_on(w, hidden_width, &data_bl, idx)),
            grad: Arc::new(move |w, idx| mlp_grad_on(w, hidden_width, &data_bg, idx)),
        }),
    })
}

/// Fraction of the dataset the MLP classifies correctly at `w`.
pub fn mlp_accuracy(w: &[f64], width: usize, data: &SyntheticDataset) -> f64 {
    let views = split_params(w, width);
    let mut hidden = vec![0.0; width];
    let mut correct = 0usize;
    for (x, &y) in data.inputs.iter().zip(&data.labels) {
        let out = mlp_forward(&views, x, &mut hidden);
        let predicted = (out > 0.0) as u8;
        if predicted == y {
            correct += 1;
        }
    }
    correct as f64 / data.len() as f64
}

/// Deterministic small initial weights for the MLP.
pub fn mlp_init(width: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d6c70);
    (0..mlp_dim(width)).map(|_| rng.gen_range(-0.5..0.5)).collect()
}
