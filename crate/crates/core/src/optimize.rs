//! Gradient-based optimizers for the variational loop: Adam, Adagrad,
//! Nesterov momentum, vanilla gradient descent, and Polak-Ribière nonlinear
//! conjugate gradient with a backtracking Armijo line search.

use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Adagrad,
    NesterovMomentum,
    VanillaGd,
    NonlinearCg,
}

impl OptimizerKind {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Adagrad => "adagrad",
            OptimizerKind::NesterovMomentum => "nesterov",
            OptimizerKind::VanillaGd => "gd",
            OptimizerKind::NonlinearCg => "cg",
        }
    }
}

impl FromStr for OptimizerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(OptimizerKind::Adam),
            "adagrad" => Ok(OptimizerKind::Adagrad),
            "nesterov" => Ok(OptimizerKind::NesterovMomentum),
            "gd" | "vanilla" => Ok(OptimizerKind::VanillaGd),
            "cg" => Ok(OptimizerKind::NonlinearCg),
            other => Err(format!(
                "unknown optimizer {other:?} (expected adam, adagrad, nesterov, gd, or cg)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub step_rate: f64,
    /// Convergence threshold on the cost difference between cycles (eV).
    pub tol: f64,
    pub max_cycles: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub momentum: f64,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            step_rate: 0.01,
            tol: 1e-7,
            max_cycles: 2000,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            momentum: 0.9,
        }
    }

    pub fn with_step_rate(mut self, step_rate: f64) -> Self {
        self.step_rate = step_rate;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_cycles(mut self, max_cycles: usize) -> Self {
        self.max_cycles = max_cycles;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.step_rate > 0.0) {
            return Err(format!("step_rate must be positive (got {})", self.step_rate));
        }
        if !(self.tol > 0.0) {
            return Err(format!("tol must be positive (got {})", self.tol));
        }
        if self.max_cycles == 0 {
            return Err("max_cycles must be at least 1".into());
        }
        Ok(())
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::new(OptimizerKind::Adam)
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn update(&mut self, theta: &mut [f64], grad: &[f64], cfg: &OptimizerConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t);
        let bc2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            theta[i] -= cfg.step_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdagradState {
    accum: Vec<f64>,
}

impl AdagradState {
    pub fn new(dim: usize) -> Self {
        Self {
            accum: vec![0.0; dim],
        }
    }

    pub fn update(&mut self, theta: &mut [f64], grad: &[f64], cfg: &OptimizerConfig) {
        for i in 0..theta.len() {
            self.accum[i] += grad[i] * grad[i];
            theta[i] -= cfg.step_rate * grad[i] / (self.accum[i].sqrt() + cfg.epsilon);
        }
    }
}

#[derive(Debug, Clone)]
pub struct NesterovState {
    velocity: Vec<f64>,
}

impl NesterovState {
    pub fn new(dim: usize) -> Self {
        Self {
            velocity: vec![0.0; dim],
        }
    }

    /// The point at which the gradient should be evaluated.
    pub fn lookahead(&self, theta: &[f64], cfg: &OptimizerConfig) -> Vec<f64> {
        theta
            .iter()
            .zip(self.velocity.iter())
            .map(|(t, v)| t + cfg.momentum * v)
            .collect()
    }

    pub fn update(&mut self, theta: &mut [f64], grad_at_lookahead: &[f64], cfg: &OptimizerConfig) {
        for i in 0..theta.len() {
            self.velocity[i] = cfg.momentum * self.velocity[i] - cfg.step_rate * grad_at_lookahead[i];
            theta[i] += self.velocity[i];
        }
    }
}

pub fn vanilla_gd_update(theta: &mut [f64], grad: &[f64], cfg: &OptimizerConfig) {
    for i in 0..theta.len() {
        theta[i] -= cfg.step_rate * grad[i];
    }
}

/// Polak-Ribière direction state with automatic restart when the computed
/// direction stops being a descent direction.
#[derive(Debug, Clone)]
pub struct CgState {
    prev_grad: Option<Vec<f64>>,
    prev_dir: Vec<f64>,
}

impl CgState {
    pub fn new(dim: usize) -> Self {
        Self {
            prev_grad: None,
            prev_dir: vec![0.0; dim],
        }
    }

    pub fn direction(&mut self, grad: &[f64]) -> Vec<f64> {
        let dir = match &self.prev_grad {
            None => grad.iter().map(|g| -g).collect::<Vec<f64>>(),
            Some(prev) => {
                let denom: f64 = prev.iter().map(|g| g * g).sum();
                let numer: f64 = grad
                    .iter()
                    .zip(prev.iter())
                    .map(|(g, p)| g * (g - p))
                    .sum();
                let beta = if denom > 0.0 { (numer / denom).max(0.0) } else { 0.0 };
                let mut d: Vec<f64> = grad
                    .iter()
                    .zip(self.prev_dir.iter())
                    .map(|(g, pd)| -g + beta * pd)
                    .collect();
                let descent: f64 = grad.iter().zip(d.iter()).map(|(g, x)| g * x).sum();
                if descent >= 0.0 {
                    d = grad.iter().map(|g| -g).collect();
                }
                d
            }
        };
        self.prev_grad = Some(grad.to_vec());
        self.prev_dir = dir.clone();
        dir
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub cost: f64,
    /// Number of cost evaluations spent probing.
    pub probes: usize,
}

/// Backtracking Armijo search along `dir` starting from step `alpha0`.
///
/// Returns alpha = 0 with the current cost when no probe improves
/// sufficiently, which the caller treats as a stall.
pub fn backtracking_line_search(
    cost: &mut dyn FnMut(&[f64]) -> f64,
    theta: &[f64],
    dir: &[f64],
    cost_now: f64,
    grad_dot_dir: f64,
    alpha0: f64,
) -> LineSearchOutcome {
    const C1: f64 = 1e-4;
    const SHRINK: f64 = 0.5;
    const MAX_PROBES: usize = 30;

    let mut alpha = alpha0;
    let mut probes = 0;
    let mut trial = vec![0.0; theta.len()];
    while probes < MAX_PROBES {
        for i in 0..theta.len() {
            trial[i] = theta[i] + alpha * dir[i];
        }
        let c = cost(&trial);
        probes += 1;
        if c.is_finite() && c <= cost_now + C1 * alpha * grad_dot_dir {
            return LineSearchOutcome {
                alpha,
                cost: c,
                probes,
            };
        }
        alpha *= SHRINK;
    }
    LineSearchOutcome {
        alpha: 0.0,
        cost: cost_now,
        probes,
    }
}
