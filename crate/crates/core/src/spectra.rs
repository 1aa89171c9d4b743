//! Interband transition amplitudes from superposition-state measurements,
//! and absorption spectra assembled over a k-path.
//!
//! For a Hermitian observable T and optimized angles θ, the off-diagonal
//! matrix element between two tracked states is recovered from expectation
//! values alone:
//!
//! ```text
//! Re⟨v|T̃|c⟩ = ⟨+x|T̃|+x⟩ − ½⟨v|T̃|v⟩ − ½⟨c|T̃|c⟩
//! Im⟨v|T̃|c⟩ = ½⟨v|T̃|v⟩ + ½⟨c|T̃|c⟩ − ⟨+y|T̃|+y⟩
//! ```
//!
//! with T̃ = U†(θ) T U(θ), |+x⟩ = (|v⟩+|c⟩)/√2 and |+y⟩ = (|v⟩+i|c⟩)/√2.
//! Every run can be cross-checked against the dense inner product of
//! [`crate::eigen::direct_amplitude`]; in exact mode the two agree to
//! rounding.

use crate::circuit::{AnsatzParams, CircuitError, EvalMode, StateVector, evaluate};
use crate::matrix::C64;
use crate::pauli::{PauliHamiltonian, QwcGroup, qwc_partition};
use crate::ssvqe::BandStructureResult;

#[derive(Debug, thiserror::Error)]
pub enum SpectraError {
    #[error("valence and conduction indices must differ (both {0})")]
    SameIndex(usize),
    #[error("state index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },
    #[error("photon-energy grid must be positive and strictly increasing")]
    BadGrid,
    #[error("band result holds no k-points")]
    EmptyBand,
    #[error("k-point {index}: stored angle count {got} does not match the ansatz shape {expected}")]
    BadTheta {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Observable with its measurement grouping precomputed.
#[derive(Debug, Clone)]
pub struct Observable {
    pub hamiltonian: PauliHamiltonian,
    pub groups: Vec<QwcGroup>,
}

impl Observable {
    pub fn new(hamiltonian: PauliHamiltonian) -> Self {
        let groups = qwc_partition(&hamiltonian);
        Self {
            hamiltonian,
            groups,
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::new(PauliHamiltonian::identity(n_qubits))
    }

    pub fn n_qubits(&self) -> usize {
        self.hamiltonian.n_qubits()
    }
}

fn check_pair(n_qubits: usize, v: usize, c: usize) -> Result<(), SpectraError> {
    let dim = 1usize << n_qubits;
    if v == c {
        return Err(SpectraError::SameIndex(v));
    }
    for index in [v, c] {
        if index >= dim {
            return Err(SpectraError::IndexOutOfRange { index, n_qubits });
        }
    }
    Ok(())
}

/// (|v⟩ + |c⟩)/√2 as a statevector.
pub fn superposition_x(n_qubits: usize, v: usize, c: usize) -> Result<StateVector, SpectraError> {
    check_pair(n_qubits, v, c)?;
    let dim = 1usize << n_qubits;
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    let w = std::f64::consts::FRAC_1_SQRT_2;
    amps[v] = C64::new(w, 0.0);
    amps[c] = C64::new(w, 0.0);
    Ok(StateVector::from_amplitudes(amps).expect("normalized by construction"))
}

/// (|v⟩ + i|c⟩)/√2 as a statevector.
pub fn superposition_y(n_qubits: usize, v: usize, c: usize) -> Result<StateVector, SpectraError> {
    check_pair(n_qubits, v, c)?;
    let dim = 1usize << n_qubits;
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    let w = std::f64::consts::FRAC_1_SQRT_2;
    amps[v] = C64::new(w, 0.0);
    amps[c] = C64::new(0.0, w);
    Ok(StateVector::from_amplitudes(amps).expect("normalized by construction"))
}

// Salt spaces keeping the derived evaluation streams of one k-point apart.
fn diag_salt(basis: usize) -> u64 {
    basis as u64
}

fn pair_salt(kind: u64, v: usize, c: usize) -> u64 {
    kind | ((v as u64) << 8) | (c as u64)
}

const SALT_PLUS_X: u64 = 0x1_0000;
const SALT_PLUS_Y: u64 = 0x2_0000;
const SALT_SPECTRUM_POINT: u64 = 0x0004_0000_0000;

fn expect_from(
    params: &AnsatzParams,
    initial: &StateVector,
    obs: &Observable,
    mode: &EvalMode,
    salt: u64,
) -> Result<f64, SpectraError> {
    let mode = mode.reseeded(salt);
    Ok(evaluate(
        params,
        initial,
        &obs.hamiltonian,
        &obs.groups,
        &mode,
    )?)
}

/// ⟨v|T̃|c⟩ reconstructed from four expectation values (two diagonal, two
/// superposition states).
pub fn transition_amplitude(
    params: &AnsatzParams,
    v: usize,
    c: usize,
    obs: &Observable,
    mode: &EvalMode,
) -> Result<C64, SpectraError> {
    check_pair(params.n_qubits(), v, c)?;
    let n = params.n_qubits();
    let d_v = expect_from(params, &StateVector::basis(n, v)?, obs, mode, diag_salt(v))?;
    let d_c = expect_from(params, &StateVector::basis(n, c)?, obs, mode, diag_salt(c))?;
    let ex = expect_from(
        params,
        &superposition_x(n, v, c)?,
        obs,
        mode,
        pair_salt(SALT_PLUS_X, v, c),
    )?;
    let ey = expect_from(
        params,
        &superposition_y(n, v, c)?,
        obs,
        mode,
        pair_salt(SALT_PLUS_Y, v, c),
    )?;
    let re = ex - 0.5 * d_v - 0.5 * d_c;
    let im = 0.5 * d_v + 0.5 * d_c - ey;
    Ok(C64::new(re, im))
}

/// Amplitudes for several valence states against one conduction state, with
/// the diagonal expectations shared across pairs.
#[derive(Debug, Clone)]
pub struct AmplitudeSet {
    /// One amplitude per entry of the `valence` argument.
    pub amplitudes: Vec<C64>,
    /// Circuit expectation evaluations actually spent.
    pub evaluations: usize,
}

pub fn transition_amplitudes(
    params: &AnsatzParams,
    valence: &[usize],
    conduction: usize,
    obs: &Observable,
    mode: &EvalMode,
) -> Result<AmplitudeSet, SpectraError> {
    let n = params.n_qubits();
    let mut evaluations = 0usize;
    let mut diagonals: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    for &idx in valence.iter().chain(std::iter::once(&conduction)) {
        if let std::collections::btree_map::Entry::Vacant(e) = diagonals.entry(idx) {
            let d = expect_from(params, &StateVector::basis(n, idx)?, obs, mode, diag_salt(idx))?;
            e.insert(d);
            evaluations += 1;
        }
    }
    let d_c = diagonals[&conduction];
    let mut amplitudes = Vec::with_capacity(valence.len());
    for &v in valence {
        check_pair(n, v, conduction)?;
        let d_v = diagonals[&v];
        let ex = expect_from(
            params,
            &superposition_x(n, v, conduction)?,
            obs,
            mode,
            pair_salt(SALT_PLUS_X, v, conduction),
        )?;
        let ey = expect_from(
            params,
            &superposition_y(n, v, conduction)?,
            obs,
            mode,
            pair_salt(SALT_PLUS_Y, v, conduction),
        )?;
        evaluations += 2;
        amplitudes.push(C64::new(
            ex - 0.5 * d_v - 0.5 * d_c,
            0.5 * d_v + 0.5 * d_c - ey,
        ));
    }
    Ok(AmplitudeSet {
        amplitudes,
        evaluations,
    })
}

/// Number of circuit expectation evaluations one k-point needs: one per
/// distinct diagonal state plus two superposition evaluations per pair.
pub fn call_budget(valence: &[usize], conduction: usize) -> usize {
    let mut distinct: std::collections::BTreeSet<usize> = valence.iter().copied().collect();
    distinct.insert(conduction);
    if valence.is_empty() {
        return 0;
    }
    distinct.len() + 2 * valence.len()
}

/// Photon-energy grid with summed squared transition amplitudes, scaled to
/// unit maximum.
#[derive(Debug, Clone)]
pub struct AbsorptionSpectrum {
    pub photon_energies: Vec<f64>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AbsorptionOptions {
    /// Use the step Θ(ε_vc − ħω) instead of the default Θ(ħω − ε_vc),
    /// turning absorption on below the transition energy instead of above.
    pub printed_step_order: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct CallAccounting {
    pub per_kpoint: usize,
    pub kpoints: usize,
    pub total: usize,
}

/// Default grid: 5 meV steps from 5 meV up to `eps_gamma + 1` eV.
pub fn default_omega_grid(eps_gamma: f64) -> Vec<f64> {
    let step = 0.005;
    let max = eps_gamma + 1.0;
    let n = (max / step).floor() as usize;
    (1..=n).map(|i| i as f64 * step).collect()
}

/// α(ħω) ∝ (1/ħω)·Σ_{v,k} |⟨v|T̃(θ_k)|c⟩|²·Θ(ħω − ε_vc(k)), conduction fixed
/// to the top tracked state, summed over the valence set and every k-point,
/// then normalized to unit maximum.
pub fn absorption(
    band: &BandStructureResult,
    obs: &Observable,
    omega_grid: &[f64],
    mode: &EvalMode,
    opts: &AbsorptionOptions,
) -> Result<(AbsorptionSpectrum, CallAccounting), SpectraError> {
    if band.points.is_empty() {
        return Err(SpectraError::EmptyBand);
    }
    if omega_grid.is_empty()
        || omega_grid[0] <= 0.0
        || omega_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(SpectraError::BadGrid);
    }

    let n_qubits = band.n_qubits;
    let expected_angles = 3 * n_qubits * band.n_layers;
    let p = band.points[0].energies.len();
    let conduction = p - 1;
    let valence: Vec<usize> = (0..p - 1).collect();
    let per_kpoint = call_budget(&valence, conduction);

    let mut alpha = vec![0.0; omega_grid.len()];
    let mut total_evals = 0usize;
    for (ki, point) in band.points.iter().enumerate() {
        if point.theta.len() != expected_angles {
            return Err(SpectraError::BadTheta {
                index: ki,
                got: point.theta.len(),
                expected: expected_angles,
            });
        }
        let params = AnsatzParams::new(n_qubits, band.n_layers, point.theta.clone())?;
        let point_mode = mode.reseeded(SALT_SPECTRUM_POINT | ki as u64);
        let set = transition_amplitudes(&params, &valence, conduction, obs, &point_mode)?;
        total_evals += set.evaluations;
        let e_c = point.energies[conduction];
        for (vi, &v) in valence.iter().enumerate() {
            let eps_vc = e_c - point.energies[v];
            let weight = set.amplitudes[vi].norm_sqr();
            for (j, &omega) in omega_grid.iter().enumerate() {
                let open = if opts.printed_step_order {
                    eps_vc - omega >= 0.0
                } else {
                    omega - eps_vc >= 0.0
                };
                if open {
                    alpha[j] += weight / omega;
                }
            }
        }
    }

    let max = alpha.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        for a in &mut alpha {
            *a /= max;
        }
    }
    Ok((
        AbsorptionSpectrum {
            photon_energies: omega_grid.to_vec(),
            alpha,
        },
        CallAccounting {
            per_kpoint,
            kpoints: band.points.len(),
            total: total_evals,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::apply_ansatz_to;
    use crate::eigen::direct_amplitude;
    use crate::matrix::{CMatrix, HermitianMatrix};
    use crate::pauli::decompose;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c64(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_params(seed: u64, layers: usize) -> AnsatzParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AnsatzParams::random(2, layers, &mut rng)
    }

    fn random_observable(seed: u64) -> (Observable, HermitianMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = CMatrix::zeros(4);
        for i in 0..4 {
            m[(i, i)] = c64(rng.random_range(-1.0..1.0), 0.0);
            for j in (i + 1)..4 {
                let v = c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        let h = HermitianMatrix::new(m).unwrap();
        let ph = decompose(&h, 0.0).unwrap();
        (Observable::new(ph), h)
    }

    #[test]
    fn superposition_amplitudes_match_definitions() {
        let x = superposition_x(2, 0, 1).unwrap();
        let w = std::f64::consts::FRAC_1_SQRT_2;
        assert!((x.amplitudes()[0] - c64(w, 0.0)).norm() < 1e-15);
        assert!((x.amplitudes()[1] - c64(w, 0.0)).norm() < 1e-15);
        assert_eq!(x.amplitudes()[2].norm(), 0.0);
        assert_eq!(x.amplitudes()[3].norm(), 0.0);

        let y = superposition_y(2, 0, 1).unwrap();
        assert!((y.amplitudes()[0] - c64(w, 0.0)).norm() < 1e-15);
        assert!((y.amplitudes()[1] - c64(0.0, w)).norm() < 1e-15);
    }

    #[test]
    fn superpositions_are_normalized_for_all_pairs() {
        for v in 0..4 {
            for c in 0..4 {
                if v == c {
                    assert!(superposition_x(2, v, c).is_err());
                    continue;
                }
                assert!((superposition_x(2, v, c).unwrap().norm() - 1.0).abs() < 1e-12);
                assert!((superposition_y(2, v, c).unwrap().norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    /// Gate-route construction of the superposition states, checked against
    /// the canonical amplitudes: Hadamard on the differing bit, CNOT onto any
    /// further differing bits, a phase gate for the y-type state.
    #[test]
    fn gate_construction_reproduces_superpositions() {
        use crate::matrix::C64;
        fn gate_route(n: usize, v: usize, c: usize, with_phase: bool) -> Vec<C64> {
            let dim = 1usize << n;
            let diff = v ^ c;
            let pivot_bit = (0..n).find(|&q| diff >> (n - 1 - q) & 1 == 1).unwrap();
            let pivot_mask = 1usize << (n - 1 - pivot_bit);
            // Start from whichever label has the pivot bit clear.
            let (low, _high) = if v & pivot_mask == 0 { (v, c) } else { (c, v) };
            let mut amps = vec![C64::new(0.0, 0.0); dim];
            amps[low] = C64::new(1.0, 0.0);
            // H on pivot.
            let w = std::f64::consts::FRAC_1_SQRT_2;
            let mut next = vec![C64::new(0.0, 0.0); dim];
            for (i, a) in amps.iter().enumerate() {
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                if i & pivot_mask == 0 {
                    next[i] += a * w;
                    next[i | pivot_mask] += a * w;
                } else {
                    next[i & !pivot_mask] += a * w;
                    next[i] -= a * w;
                }
            }
            amps = next;
            // CNOTs from pivot onto the remaining differing bits.
            for q in 0..n {
                let mask = 1usize << (n - 1 - q);
                if q != pivot_bit && diff & mask != 0 {
                    let mut next = vec![C64::new(0.0, 0.0); dim];
                    for (i, a) in amps.iter().enumerate() {
                        let j = if i & pivot_mask != 0 { i ^ mask } else { i };
                        next[j] += a;
                    }
                    amps = next;
                }
            }
            if with_phase {
                // S (or S†) on the pivot puts the i on the |c⟩ branch.
                let phase = if v & pivot_mask == 0 {
                    C64::new(0.0, 1.0)
                } else {
                    C64::new(0.0, -1.0)
                };
                for (i, a) in amps.iter_mut().enumerate() {
                    if i & pivot_mask != 0 {
                        *a *= phase;
                    }
                }
            }
            // Fix the global phase so the |v⟩ amplitude is real positive.
            let phase = amps[v] / amps[v].norm();
            amps.iter().map(|a| a / phase).collect()
        }

        for v in 0..4usize {
            for c in 0..4usize {
                if v == c {
                    continue;
                }
                let gx = gate_route(2, v, c, false);
                let x = superposition_x(2, v, c).unwrap();
                for (a, b) in gx.iter().zip(x.amplitudes()) {
                    assert!((a - b).norm() < 1e-12, "x-type pair ({v},{c})");
                }
                let gy = gate_route(2, v, c, true);
                let y = superposition_y(2, v, c).unwrap();
                for (a, b) in gy.iter().zip(y.amplitudes()) {
                    assert!((a - b).norm() < 1e-12, "y-type pair ({v},{c})");
                }
            }
        }
    }

    #[test]
    fn identity_observable_gives_delta_amplitudes() {
        let obs = Observable::identity(2);
        for seed in 0..5 {
            let params = random_params(seed, 3);
            for v in 0..4 {
                for c in 0..4 {
                    if v == c {
                        continue;
                    }
                    let a = transition_amplitude(&params, v, c, &obs, &EvalMode::Exact).unwrap();
                    assert!(a.norm() < 1e-10, "pair ({v},{c}): {a}");
                }
            }
        }
    }

    #[test]
    fn reconstruction_matches_direct_amplitude_in_exact_mode() {
        for seed in 0..30u64 {
            let (obs, dense) = random_observable(500 + seed);
            let params = random_params(600 + seed, 2 + (seed % 3) as usize);
            let v = (seed % 4) as usize;
            let c = ((seed + 1 + seed / 4) % 4) as usize;
            if v == c {
                continue;
            }
            let rec = transition_amplitude(&params, v, c, &obs, &EvalMode::Exact).unwrap();
            let direct = direct_amplitude(&params, v, c, &dense);
            assert!(
                (rec - direct).norm() < 1e-10,
                "seed {seed}: {rec} vs {direct}"
            );
        }
    }

    #[test]
    fn amplitude_is_hermitian_symmetric() {
        let (obs, _) = random_observable(9);
        let params = random_params(10, 3);
        for (v, c) in [(0usize, 1usize), (1, 3), (2, 0)] {
            let a = transition_amplitude(&params, v, c, &obs, &EvalMode::Exact).unwrap();
            let b = transition_amplitude(&params, c, v, &obs, &EvalMode::Exact).unwrap();
            assert!((a - b.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn sampled_amplitude_mean_is_within_three_standard_errors() {
        let (obs, _) = random_observable(11);
        let params = random_params(12, 3);
        let exact = transition_amplitude(&params, 0, 3, &obs, &EvalMode::Exact).unwrap();
        let n_seeds = 100;
        let samples: Vec<C64> = (0..n_seeds)
            .map(|s| {
                transition_amplitude(
                    &params,
                    0,
                    3,
                    &obs,
                    &EvalMode::Sampled {
                        shots: 10_000,
                        seed: s,
                    },
                )
                .unwrap()
            })
            .collect();
        for part in [0usize, 1] {
            let vals: Vec<f64> = samples
                .iter()
                .map(|a| if part == 0 { a.re } else { a.im })
                .collect();
            let target = if part == 0 { exact.re } else { exact.im };
            let mean = vals.iter().sum::<f64>() / n_seeds as f64;
            let var =
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_seeds - 1) as f64;
            let sem = (var / n_seeds as f64).sqrt();
            assert!(
                (mean - target).abs() <= 3.0 * sem,
                "part {part}: bias {} vs sem {sem}",
                (mean - target).abs()
            );
        }
    }

    #[test]
    fn shared_diagonals_agree_with_individual_amplitudes_in_exact_mode() {
        let (obs, _) = random_observable(13);
        let params = random_params(14, 3);
        let set = transition_amplitudes(&params, &[0, 1, 2], 3, &obs, &EvalMode::Exact).unwrap();
        assert_eq!(set.evaluations, 10);
        for (vi, v) in [0usize, 1, 2].iter().enumerate() {
            let single = transition_amplitude(&params, *v, 3, &obs, &EvalMode::Exact).unwrap();
            assert!((set.amplitudes[vi] - single).norm() < 1e-12);
        }
    }

    #[test]
    fn call_budget_counts() {
        assert_eq!(call_budget(&[0], 3), 4);
        assert_eq!(call_budget(&[0, 1, 2], 3), 10);
        assert_eq!(call_budget(&[], 3), 0);
    }

    #[test]
    fn unitarity_check_superposition_route() {
        // Applying U to a superposition equals the superposition of applied
        // states; the matrix oracle for the preparation chain.
        let params = random_params(20, 4);
        let x = superposition_x(2, 1, 2).unwrap();
        let through = apply_ansatz_to(&params, &x);
        let v = crate::circuit::apply_ansatz(&params, 1).unwrap();
        let c = crate::circuit::apply_ansatz(&params, 2).unwrap();
        let w = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..4 {
            let expect = (v.amplitudes()[i] + c.amplitudes()[i]) * w;
            assert!((through.amplitudes()[i] - expect).norm() < 1e-12);
        }
    }
}
