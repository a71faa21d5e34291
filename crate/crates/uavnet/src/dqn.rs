//! Per-UAV deep Q-network: a fixed 2-10-5 multilayer perceptron with a
//! rectifier hidden layer, epsilon-greedy action selection, FIFO experience
//! replay, a frozen target copy, and plain gradient descent on the summed
//! squared temporal-difference error of the taken actions.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

pub const INPUT_DIM: usize = 2;
pub const HIDDEN_DIM: usize = 10;
pub const OUTPUT_DIM: usize = 5;

/// Q-network parameters. Weight rows are indexed by output neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub w1: [[f64; INPUT_DIM]; HIDDEN_DIM],
    pub b1: [f64; HIDDEN_DIM],
    pub w2: [[f64; HIDDEN_DIM]; OUTPUT_DIM],
    pub b2: [f64; OUTPUT_DIM],
}

impl QNetwork {
    pub fn zeros() -> Self {
        Self {
            w1: [[0.0; INPUT_DIM]; HIDDEN_DIM],
            b1: [0.0; HIDDEN_DIM],
            w2: [[0.0; HIDDEN_DIM]; OUTPUT_DIM],
            b2: [0.0; OUTPUT_DIM],
        }
    }

    /// Uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases.
    pub fn init<R: Rng>(rng: &mut R) -> Self {
        let mut net = Self::zeros();
        let lim1 = (6.0 / (INPUT_DIM + HIDDEN_DIM) as f64).sqrt();
        for row in net.w1.iter_mut() {
            for w in row.iter_mut() {
                *w = (rng.gen::<f64>() * 2.0 - 1.0) * lim1;
            }
        }
        let lim2 = (6.0 / (HIDDEN_DIM + OUTPUT_DIM) as f64).sqrt();
        for row in net.w2.iter_mut() {
            for w in row.iter_mut() {
                *w = (rng.gen::<f64>() * 2.0 - 1.0) * lim2;
            }
        }
        net
    }

    fn forward_full(&self, state: [f64; INPUT_DIM]) -> ([f64; HIDDEN_DIM], [f64; HIDDEN_DIM], [f64; OUTPUT_DIM]) {
        let mut pre = [0.0; HIDDEN_DIM];
        let mut hidden = [0.0; HIDDEN_DIM];
        for j in 0..HIDDEN_DIM {
            let mut acc = self.b1[j];
            for k in 0..INPUT_DIM {
                acc += self.w1[j][k] * state[k];
            }
            pre[j] = acc;
            hidden[j] = acc.max(0.0);
        }
        let mut q = [0.0; OUTPUT_DIM];
        for a in 0..OUTPUT_DIM {
            let mut acc = self.b2[a];
            for j in 0..HIDDEN_DIM {
                acc += self.w2[a][j] * hidden[j];
            }
            q[a] = acc;
        }
        (pre, hidden, q)
    }

    /// Q-values for a normalized state.
    pub fn forward(&self, state: [f64; INPUT_DIM]) -> Result<[f64; OUTPUT_DIM]> {
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite network input {state:?}")));
        }
        Ok(self.forward_full(state).2)
    }

    /// Visit every parameter mutably in a fixed order (W1 rows, b1, W2
    /// rows, b2).
    pub fn for_each_param(&mut self, mut f: impl FnMut(&mut f64)) {
        for row in self.w1.iter_mut() {
            row.iter_mut().for_each(&mut f);
        }
        self.b1.iter_mut().for_each(&mut f);
        for row in self.w2.iter_mut() {
            row.iter_mut().for_each(&mut f);
        }
        self.b2.iter_mut().for_each(&mut f);
    }
}

/// One stored experience.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: [f64; INPUT_DIM],
    pub action: usize,
    pub reward: f64,
    pub next_state: [f64; INPUT_DIM],
}

/// Fixed-capacity FIFO replay memory with uniform mini-batch sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn contains(&self, t: &Transition) -> bool {
        self.items.contains(t)
    }

    /// Draw `batch_size` distinct transitions uniformly.
    pub fn sample<R: Rng>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<Transition>> {
        if self.items.len() < batch_size {
            return Err(Error::NotReady {
                have: self.items.len(),
                need: batch_size,
            });
        }
        let idx = rand::seq::index::sample(rng, self.items.len(), batch_size);
        Ok(idx.into_iter().map(|i| self.items[i]).collect())
    }
}

/// Training constants: learning rate, discount, replay capacity, batch
/// size, target-sync period, exploration probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DqnHyperparams {
    pub learning_rate: f64,
    pub discount: f64,
    pub capacity: usize,
    pub batch_size: usize,
    pub target_sync: u64,
    pub epsilon: f64,
}

impl Default for DqnHyperparams {
    fn default() -> Self {
        // (alpha, gamma, N, B, C) = (0.01, 0.9, 2000, 50, 200); epsilon 0.1.
        Self {
            learning_rate: 0.01,
            discount: 0.9,
            capacity: 2000,
            batch_size: 50,
            target_sync: 200,
            epsilon: 0.1,
        }
    }
}

impl DqnHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::Config(format!(
                "discount must be in [0,1), got {}",
                self.discount
            )));
        }
        if self.batch_size == 0 || self.batch_size > self.capacity {
            return Err(Error::Config(format!(
                "batch_size must be in 1..=capacity, got {} (capacity {})",
                self.batch_size, self.capacity
            )));
        }
        if self.target_sync == 0 {
            return Err(Error::Config("target_sync must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "epsilon must be in [0,1], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Epsilon-greedy choice over the five Q-values: argmax (ties to the lowest
/// index) with probability 1-epsilon, uniform otherwise. With epsilon = 0 no
/// randomness is consumed.
pub fn select_action<R: Rng>(q: &[f64; OUTPUT_DIM], epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return rng.gen_range(0..OUTPUT_DIM);
    }
    let mut best = 0;
    for a in 1..OUTPUT_DIM {
        if q[a] > q[best] {
            best = a;
        }
    }
    best
}

/// Regression targets y = r + gamma * max_a' Q~(s', a') from the frozen
/// target network.
pub fn td_targets(batch: &[Transition], target_net: &QNetwork, gamma: f64) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::Domain("td_targets on an empty batch".into()));
    }
    batch
        .iter()
        .map(|t| {
            let q = target_net.forward(t.next_state)?;
            let max_q = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Ok(t.reward + gamma * max_q)
        })
        .collect()
}

/// One plain gradient-descent step on the summed squared TD error of the
/// taken actions. Returns the pre-update loss.
pub fn train_step(
    net: &mut QNetwork,
    batch: &[Transition],
    targets: &[f64],
    learning_rate: f64,
) -> Result<f64> {
    if batch.is_empty() || batch.len() != targets.len() {
        return Err(Error::Domain(format!(
            "batch of {} transitions with {} targets",
            batch.len(),
            targets.len()
        )));
    }
    let mut g_w1 = [[0.0; INPUT_DIM]; HIDDEN_DIM];
    let mut g_b1 = [0.0; HIDDEN_DIM];
    let mut g_w2 = [[0.0; HIDDEN_DIM]; OUTPUT_DIM];
    let mut g_b2 = [0.0; OUTPUT_DIM];
    let mut loss = 0.0;

    for (t, &y) in batch.iter().zip(targets) {
        if t.action >= OUTPUT_DIM {
            return Err(Error::Domain(format!("action index {} out of range", t.action)));
        }
        let (pre, hidden, q) = net.forward_full(t.state);
        let err = q[t.action] - y;
        loss += err * err;
        // d loss / d q[action] = 2 * err; targets are constants.
        let g_q = 2.0 * err;
        g_b2[t.action] += g_q;
        for j in 0..HIDDEN_DIM {
            g_w2[t.action][j] += g_q * hidden[j];
            if pre[j] > 0.0 {
                let g_u = g_q * net.w2[t.action][j];
                g_b1[j] += g_u;
                for k in 0..INPUT_DIM {
                    g_w1[j][k] += g_u * t.state[k];
                }
            }
        }
    }

    if !loss.is_finite() {
        return Err(Error::Training(format!("non-finite loss {loss}")));
    }
    let finite = g_b2.iter().all(|g| g.is_finite())
        && g_b1.iter().all(|g| g.is_finite())
        && g_w1.iter().flatten().all(|g| g.is_finite())
        && g_w2.iter().flatten().all(|g| g.is_finite());
    if !finite {
        return Err(Error::Training("non-finite gradient".into()));
    }

    for j in 0..HIDDEN_DIM {
        net.b1[j] -= learning_rate * g_b1[j];
        for k in 0..INPUT_DIM {
            net.w1[j][k] -= learning_rate * g_w1[j][k];
        }
    }
    for a in 0..OUTPUT_DIM {
        net.b2[a] -= learning_rate * g_b2[a];
        for j in 0..HIDDEN_DIM {
            net.w2[a][j] -= learning_rate * g_w2[a][j];
        }
    }
    Ok(loss)
}

/// Exact parameter copy for use as the frozen target.
pub fn sync_target(net: &QNetwork) -> QNetwork {
    net.clone()
}

/// Serialize the network as text: a `qnet v1 2 10 5` header, then W1 rows,
/// the b1 row, W2 rows, the b2 row. Values use shortest round-trip
/// formatting so loading restores bit-identical parameters.
pub fn checkpoint_to_string(net: &QNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "qnet v1 {INPUT_DIM} {HIDDEN_DIM} {OUTPUT_DIM}");
    let row = |vals: &[f64]| {
        vals.iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for r in &net.w1 {
        let _ = writeln!(out, "{}", row(r));
    }
    let _ = writeln!(out, "{}", row(&net.b1));
    for r in &net.w2 {
        let _ = writeln!(out, "{}", row(r));
    }
    let _ = writeln!(out, "{}", row(&net.b2));
    out
}

/// Write a checkpoint atomically (temp file in the same directory, then
/// rename).
pub fn save_checkpoint(net: &QNetwork, path: &Path) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "qnet".into())
    ));
    std::fs::write(&tmp, checkpoint_to_string(net))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn checkpoint_from_str(text: &str) -> Result<QNetwork> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { row: 1, msg: "empty checkpoint".into() })?;
    let expected = format!("qnet v1 {INPUT_DIM} {HIDDEN_DIM} {OUTPUT_DIM}");
    if header.trim() != expected {
        return Err(Error::Parse {
            row: 1,
            msg: format!("bad header {header:?}, expected {expected:?}"),
        });
    }
    let mut parse_row = |want: usize| -> Result<Vec<f64>> {
        let (idx, line) = lines.next().ok_or_else(|| Error::Parse {
            row: 0,
            msg: "checkpoint truncated".into(),
        })?;
        let vals = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|e| Error::Parse {
                    row: idx + 1,
                    msg: format!("bad number {tok:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != want {
            return Err(Error::Parse {
                row: idx + 1,
                msg: format!("expected {want} values, found {}", vals.len()),
            });
        }
        Ok(vals)
    };
    let mut net = QNetwork::zeros();
    for j in 0..HIDDEN_DIM {
        let vals = parse_row(INPUT_DIM)?;
        net.w1[j].copy_from_slice(&vals);
    }
    net.b1.copy_from_slice(&parse_row(HIDDEN_DIM)?);
    for a in 0..OUTPUT_DIM {
        let vals = parse_row(HIDDEN_DIM)?;
        net.w2[a].copy_from_slice(&vals);
    }
    net.b2.copy_from_slice(&parse_row(OUTPUT_DIM)?);
    Ok(net)
}

pub fn load_checkpoint(path: &Path) -> Result<QNetwork> {
    let text = std::fs::read_to_string(path)?;
    checkpoint_from_str(&text)
}
