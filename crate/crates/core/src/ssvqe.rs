//! Subspace-search minimization of the weighted cost
//! C(θ) = Σ_l w_l ⟨ψ_l|U†(θ) H U(θ)|ψ_l⟩ over mutually orthogonal initial
//! basis states, and the k-path sweep that turns it into band structures.
//!
//! One optimization tracks all p states at once: with strictly descending
//! weights the global minimum maps the l-th initial state onto the l-th
//! eigenstate, so the unweighted per-state expectations at the optimum are
//! the lowest p eigenvalues.
//!
//! Gradients use the parameter-shift rule, exact for circuits built from
//! half-turn generators: g_i = [C(θ + π/2·e_i) − C(θ − π/2·e_i)] / 2.
//!
//! In stochastic modes every cost evaluation draws its own seed, derived
//! from the mode seed and a running evaluation counter, so a full run is
//! reproducible bit-for-bit while successive evaluations stay independent.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{AnsatzParams, CircuitError, EvalMode, StateVector, evaluate};
use crate::eigen::eigh;
use crate::kp::{KPoint, KpOptions, MaterialParams, build_hamiltonian};
use crate::matrix::MatrixError;
use crate::optimize::{
    AdagradState, AdamState, CgState, NesterovState, OptimizerConfig, OptimizerKind,
    backtracking_line_search, vanilla_gd_update,
};
use crate::pauli::{PauliError, PauliHamiltonian, QwcGroup, decompose, qwc_partition};

/// Fixed default master seed; override through configuration.
pub const DEFAULT_MASTER_SEED: u64 = 0x5EED_0001;

#[derive(Debug, thiserror::Error)]
pub enum SsvqeError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("optimization diverged (non-finite cost) after {} cycles", .0.cycles)]
    Diverged(Box<SsvqeResult>),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// A fully specified subspace-search minimization.
#[derive(Debug, Clone)]
pub struct SsvqeProblem {
    hamiltonian: PauliHamiltonian,
    groups: Vec<QwcGroup>,
    weights: Vec<f64>,
    initial_basis_indices: Vec<usize>,
    n_layers: usize,
    mode: EvalMode,
}

impl SsvqeProblem {
    /// Validates weights (strictly descending, positive), basis indices
    /// (distinct, in range), and the evaluation mode; the QWC partition is
    /// computed here once.
    pub fn new(
        hamiltonian: PauliHamiltonian,
        weights: Vec<f64>,
        initial_basis_indices: Vec<usize>,
        n_layers: usize,
        mode: EvalMode,
    ) -> Result<Self, SsvqeError> {
        if weights.is_empty() || weights.len() != initial_basis_indices.len() {
            return Err(SsvqeError::InvalidProblem(format!(
                "{} weights vs {} initial states",
                weights.len(),
                initial_basis_indices.len()
            )));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(SsvqeError::InvalidProblem("weights must be positive".into()));
        }
        if weights.windows(2).any(|w| w[0] <= w[1]) {
            return Err(SsvqeError::InvalidProblem(
                "weights must be strictly descending".into(),
            ));
        }
        let dim = hamiltonian.dim();
        let mut seen = std::collections::HashSet::new();
        for &idx in &initial_basis_indices {
            if idx >= dim {
                return Err(SsvqeError::InvalidProblem(format!(
                    "initial basis index {idx} out of range for dimension {dim}"
                )));
            }
            if !seen.insert(idx) {
                return Err(SsvqeError::InvalidProblem(format!(
                    "initial basis index {idx} repeated"
                )));
            }
        }
        if n_layers == 0 {
            return Err(SsvqeError::InvalidProblem("n_layers must be at least 1".into()));
        }
        mode.validate()?;
        let groups = qwc_partition(&hamiltonian);
        Ok(Self {
            hamiltonian,
            groups,
            weights,
            initial_basis_indices,
            n_layers,
            mode,
        })
    }

    /// Problem for the four-band model: all computational basis states,
    /// weights (4, 3, 2, 1).
    pub fn four_band(
        hamiltonian: PauliHamiltonian,
        n_layers: usize,
        mode: EvalMode,
    ) -> Result<Self, SsvqeError> {
        Self::new(
            hamiltonian,
            vec![4.0, 3.0, 2.0, 1.0],
            vec![0, 1, 2, 3],
            n_layers,
            mode,
        )
    }

    pub fn hamiltonian(&self) -> &PauliHamiltonian {
        &self.hamiltonian
    }

    pub fn groups(&self) -> &[QwcGroup] {
        &self.groups
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_states(&self) -> usize {
        self.weights.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.hamiltonian.n_qubits()
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn mode(&self) -> &EvalMode {
        &self.mode
    }

    pub fn n_angles(&self) -> usize {
        3 * self.n_qubits() * self.n_layers
    }

    fn check_theta(&self, theta: &[f64]) -> Result<(), SsvqeError> {
        if theta.len() != self.n_angles() {
            return Err(SsvqeError::Shape(format!(
                "theta has {} angles, problem needs {}",
                theta.len(),
                self.n_angles()
            )));
        }
        Ok(())
    }

    fn params(&self, theta: &[f64]) -> Result<AnsatzParams, SsvqeError> {
        AnsatzParams::new(self.n_qubits(), self.n_layers, theta.to_vec()).map_err(SsvqeError::from)
    }
}

/// Internal: weighted cost with per-expectation derived seeds. `eval_counter`
/// advances by one per tracked state.
fn cost_inner(
    theta: &[f64],
    problem: &SsvqeProblem,
    eval_counter: &mut u64,
) -> Result<f64, SsvqeError> {
    let params = problem.params(theta)?;
    let mut total = 0.0;
    for (l, &basis) in problem.initial_basis_indices.iter().enumerate() {
        let initial = StateVector::basis(problem.n_qubits(), basis)?;
        let mode = problem.mode.reseeded(*eval_counter);
        *eval_counter += 1;
        let e = evaluate(&params, &initial, &problem.hamiltonian, &problem.groups, &mode)?;
        total += problem.weights[l] * e;
    }
    Ok(total)
}

/// Weighted SSVQE cost at `theta`. Deterministic in Exact mode; in stochastic
/// modes it is the estimate for the evaluation stream starting at zero, so
/// repeated calls with the same inputs agree bit-for-bit.
pub fn cost(theta: &[f64], problem: &SsvqeProblem) -> Result<f64, SsvqeError> {
    problem.check_theta(theta)?;
    let mut counter = 0;
    cost_inner(theta, problem, &mut counter)
}

fn gradient_inner(
    theta: &[f64],
    problem: &SsvqeProblem,
    eval_counter: &mut u64,
) -> Result<Vec<f64>, SsvqeError> {
    const SHIFT: f64 = std::f64::consts::FRAC_PI_2;
    let mut shifted = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        shifted[i] = theta[i] + SHIFT;
        let plus = cost_inner(&shifted, problem, eval_counter)?;
        shifted[i] = theta[i] - SHIFT;
        let minus = cost_inner(&shifted, problem, eval_counter)?;
        shifted[i] = theta[i];
        grad.push((plus - minus) / 2.0);
    }
    Ok(grad)
}

/// Parameter-shift gradient of the cost.
pub fn gradient(theta: &[f64], problem: &SsvqeProblem) -> Result<Vec<f64>, SsvqeError> {
    problem.check_theta(theta)?;
    let mut counter = 0;
    gradient_inner(theta, problem, &mut counter)
}

/// Unweighted per-state energies at `theta`, ascending, with the initial
/// basis index each energy came from.
pub fn state_energies(
    theta: &[f64],
    problem: &SsvqeProblem,
    eval_counter: &mut u64,
) -> Result<Vec<(usize, f64)>, SsvqeError> {
    let params = problem.params(theta)?;
    let mut out = Vec::with_capacity(problem.n_states());
    for &basis in &problem.initial_basis_indices {
        let initial = StateVector::basis(problem.n_qubits(), basis)?;
        let mode = problem.mode.reseeded(*eval_counter);
        *eval_counter += 1;
        let e = evaluate(&params, &initial, &problem.hamiltonian, &problem.groups, &mode)?;
        out.push((basis, e));
    }
    out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SsvqeResult {
    /// Ascending per-state energies at `theta_opt` (eV).
    pub energies: Vec<f64>,
    /// Initial basis index behind each entry of `energies`.
    pub provenance: Vec<usize>,
    pub theta_opt: AnsatzParams,
    /// Optimizer updates performed.
    pub cycles: usize,
    pub wall_time: f64,
    pub converged: bool,
    /// Cost after every cycle, starting with the initial cost.
    pub cost_history: Vec<f64>,
    /// Circuit expectation evaluations consumed (line-search probes included).
    pub evaluations: u64,
}

/// Minimizes the weighted cost from `theta_init`.
///
/// Convergence: |C_t − C_{t−1}| < tol, required once in Exact mode and on
/// three consecutive cycles in stochastic modes. `theta_opt` is the iterate
/// with the lowest cost seen, not necessarily the last one.
pub fn minimize(
    problem: &SsvqeProblem,
    opt: &OptimizerConfig,
    theta_init: &[f64],
) -> Result<SsvqeResult, SsvqeError> {
    opt.validate().map_err(SsvqeError::InvalidProblem)?;
    problem.check_theta(theta_init)?;
    let started = Instant::now();
    let dim = theta_init.len();
    let mut theta = theta_init.to_vec();
    let mut counter: u64 = 0;

    let mut adam = AdamState::new(dim);
    let mut adagrad = AdagradState::new(dim);
    let mut nesterov = NesterovState::new(dim);
    let mut cg = CgState::new(dim);

    let streak_needed = if problem.mode.is_stochastic() { 3 } else { 1 };
    let mut streak = 0usize;

    let mut current = cost_inner(&theta, problem, &mut counter)?;
    let mut history = vec![current];
    let mut best_cost = current;
    let mut best_theta = theta.clone();
    let mut cycles = 0usize;
    let mut converged = false;

    let finish = |theta_opt: Vec<f64>,
                  cycles: usize,
                  converged: bool,
                  history: Vec<f64>,
                  counter: &mut u64|
     -> Result<SsvqeResult, SsvqeError> {
        let pairs = state_energies(&theta_opt, problem, counter)?;
        Ok(SsvqeResult {
            energies: pairs.iter().map(|(_, e)| *e).collect(),
            provenance: pairs.iter().map(|(b, _)| *b).collect(),
            theta_opt: AnsatzParams::new(problem.n_qubits(), problem.n_layers, theta_opt)?,
            cycles,
            wall_time: started.elapsed().as_secs_f64(),
            converged,
            cost_history: history,
            evaluations: *counter,
        })
    };

    if !current.is_finite() {
        let res = finish(best_theta, 0, false, history, &mut counter)?;
        return Err(SsvqeError::Diverged(Box::new(res)));
    }

    for cycle in 1..=opt.max_cycles {
        let mut next_cost: Option<f64> = None;
        match opt.kind {
            OptimizerKind::Adam => {
                let g = gradient_inner(&theta, problem, &mut counter)?;
                check_finite(&g, &theta, cycle)?;
                adam.update(&mut theta, &g, opt);
            }
            OptimizerKind::Adagrad => {
                let g = gradient_inner(&theta, problem, &mut counter)?;
                check_finite(&g, &theta, cycle)?;
                adagrad.update(&mut theta, &g, opt);
            }
            OptimizerKind::NesterovMomentum => {
                let look = nesterov.lookahead(&theta, opt);
                let g = gradient_inner(&look, problem, &mut counter)?;
                check_finite(&g, &theta, cycle)?;
                nesterov.update(&mut theta, &g, opt);
            }
            OptimizerKind::VanillaGd => {
                let g = gradient_inner(&theta, problem, &mut counter)?;
                check_finite(&g, &theta, cycle)?;
                vanilla_gd_update(&mut theta, &g, opt);
            }
            OptimizerKind::NonlinearCg => {
                let g = gradient_inner(&theta, problem, &mut counter)?;
                check_finite(&g, &theta, cycle)?;
                let dir = cg.direction(&g);
                let gd: f64 = g.iter().zip(dir.iter()).map(|(a, b)| a * b).sum();
                let mut probe_err: Option<SsvqeError> = None;
                let outcome = {
                    let mut probe = |t: &[f64]| match cost_inner(t, problem, &mut counter) {
                        Ok(c) => c,
                        Err(e) => {
                            probe_err = Some(e);
                            f64::INFINITY
                        }
                    };
                    backtracking_line_search(&mut probe, &theta, &dir, current, gd, opt.step_rate)
                };
                if let Some(e) = probe_err {
                    return Err(e);
                }
                for i in 0..dim {
                    theta[i] += outcome.alpha * dir[i];
                }
                next_cost = Some(outcome.cost);
            }
        }

        let c_new = match next_cost {
            Some(c) => c,
            None => cost_inner(&theta, problem, &mut counter)?,
        };
        cycles = cycle;
        history.push(c_new);
        if !c_new.is_finite() {
            let res = finish(best_theta, cycles, false, history, &mut counter)?;
            return Err(SsvqeError::Diverged(Box::new(res)));
        }
        if c_new < best_cost {
            best_cost = c_new;
            best_theta.copy_from_slice(&theta);
        }
        if (c_new - current).abs() < opt.tol {
            streak += 1;
            if streak >= streak_needed {
                converged = true;
                break;
            }
        } else {
            streak = 0;
        }
        current = c_new;
    }

    finish(best_theta, cycles, converged, history, &mut counter)
}

fn check_finite(grad: &[f64], theta: &[f64], cycle: usize) -> Result<(), SsvqeError> {
    if grad.iter().any(|g| !g.is_finite()) || theta.iter().any(|t| !t.is_finite()) {
        return Err(SsvqeError::Shape(format!(
            "non-finite gradient or parameters at cycle {cycle}"
        )));
    }
    Ok(())
}

/// Configuration of a band-structure sweep along a k-path.
#[derive(Debug, Clone)]
pub struct BandSweepConfig {
    pub n_layers: usize,
    pub optimizer: OptimizerConfig,
    pub mode: EvalMode,
    pub weights: Vec<f64>,
    pub master_seed: u64,
    /// Start each point from the previous point's optimum instead of fresh
    /// random angles.
    pub warm_start: bool,
    pub kp: KpOptions,
    pub prune_tol: f64,
}

impl BandSweepConfig {
    pub fn new(n_layers: usize, optimizer: OptimizerConfig, mode: EvalMode) -> Self {
        Self {
            n_layers,
            optimizer,
            mode,
            weights: vec![4.0, 3.0, 2.0, 1.0],
            master_seed: DEFAULT_MASTER_SEED,
            warm_start: true,
            kp: KpOptions::default(),
            prune_tol: 1e-12,
        }
    }
}

// Salt spaces for per-point derived seeds.
const SALT_POINT_MODE: u64 = 0x0001_0000_0000;
const SALT_INIT_ANGLES: u64 = 0x0002_0000_0000;

/// One solved k-point of a band sweep.
#[derive(Debug, Clone)]
pub struct BandPoint {
    pub k: KPoint,
    /// Ascending SSVQE energies (eV).
    pub energies: Vec<f64>,
    /// Ascending exact eigenvalues of the same Hamiltonian (eV).
    pub exact: Vec<f64>,
    /// |energies[i] − exact[i]| per band.
    pub errors: Vec<f64>,
    pub cycles: usize,
    pub seconds: f64,
    pub converged: bool,
    pub diverged: bool,
    pub evaluations: u64,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BandStructureResult {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub points: Vec<BandPoint>,
}

impl BandStructureResult {
    pub fn any_diverged(&self) -> bool {
        self.points.iter().any(|p| p.diverged)
    }

    pub fn max_error(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|p| p.errors.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn median_error(&self) -> f64 {
        let mut all: Vec<f64> = self
            .points
            .iter()
            .flat_map(|p| p.errors.iter().copied())
            .collect();
        if all.is_empty() {
            return 0.0;
        }
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = all.len();
        if n % 2 == 1 {
            all[n / 2]
        } else {
            0.5 * (all[n / 2 - 1] + all[n / 2])
        }
    }

    pub fn total_cycles(&self) -> usize {
        self.points.iter().map(|p| p.cycles).sum()
    }
}

/// Sequential sweep over `path` with warm starts.
///
/// The first point starts from seeded random angles in [−π, π]; each later
/// point starts from the previous optimum (when `warm_start`). A diverging
/// point is flagged and the sweep continues from its best prefix iterate.
/// Every point also records the exact spectrum and per-band errors.
pub fn band_sweep(
    material: &MaterialParams,
    path: &[KPoint],
    cfg: &BandSweepConfig,
) -> Result<BandStructureResult, SsvqeError> {
    if path.is_empty() {
        return Err(SsvqeError::InvalidProblem("empty k-path".into()));
    }
    let mut points = Vec::with_capacity(path.len());
    let mut carry: Option<Vec<f64>> = None;
    let n_qubits = 2usize;

    for (i, k) in path.iter().enumerate() {
        let h = build_hamiltonian(material, k, &cfg.kp);
        let ph = decompose(&h, cfg.prune_tol)?;
        let mode = cfg.mode.reseeded(SALT_POINT_MODE | i as u64);
        let problem = SsvqeProblem::new(
            ph,
            cfg.weights.clone(),
            (0..cfg.weights.len()).collect(),
            cfg.n_layers,
            mode,
        )?;

        let theta_init = match (&carry, cfg.warm_start) {
            (Some(prev), true) => prev.clone(),
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(crate::circuit::derive_seed(
                    cfg.master_seed,
                    SALT_INIT_ANGLES | i as u64,
                ));
                AnsatzParams::random(n_qubits, cfg.n_layers, &mut rng)
                    .angles()
                    .to_vec()
            }
        };

        let (result, diverged) = match minimize(&problem, &cfg.optimizer, &theta_init) {
            Ok(res) => (res, false),
            Err(SsvqeError::Diverged(res)) => (*res, true),
            Err(other) => return Err(other),
        };

        let exact = eigh(&h).eigenvalues;
        let errors: Vec<f64> = result
            .energies
            .iter()
            .zip(exact.iter())
            .map(|(e, x)| (e - x).abs())
            .collect();
        carry = Some(result.theta_opt.angles().to_vec());
        points.push(BandPoint {
            k: *k,
            energies: result.energies,
            exact,
            errors,
            cycles: result.cycles,
            seconds: result.wall_time,
            converged: result.converged,
            diverged,
            evaluations: result.evaluations,
            theta: result.theta_opt.angles().to_vec(),
        });
    }
    Ok(BandStructureResult {
        n_qubits,
        n_layers: cfg.n_layers,
        points,
    })
}
