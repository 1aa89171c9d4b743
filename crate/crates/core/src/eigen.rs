//! Classical ground truth: dense Hermitian eigendecomposition by cyclic
//! Jacobi rotations, plus direct transition-amplitude evaluation.
//!
//! Self-contained so the oracle stays auditable; the matrices here are at
//! most a few dozen rows, where Jacobi converges in a handful of sweeps.

use crate::circuit::{AnsatzParams, StateVector, apply_ansatz};
use crate::matrix::{C64, CMatrix, HermitianMatrix};

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending eigenvalues (eV).
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, matching `eigenvalues`.
    pub eigenvectors: CMatrix,
}

const MAX_SWEEPS: usize = 100;
const OFF_TOL: f64 = 1e-14;

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += 2.0 * a[(i, j)].norm_sqr();
        }
    }
    sum.sqrt()
}

/// Eigendecomposition of a Hermitian matrix (dim ≤ 64).
///
/// Each rotation zeroes one off-diagonal pair with the unitary
/// [[c, −s·e^{iφ}], [s·e^{−iφ}, c]] acting on rows/columns (p, q), where
/// e^{iφ} is the phase of a_pq; sweeps repeat until the off-diagonal norm
/// falls below 1e-14 relative to the matrix scale.
pub fn eigh(h: &HermitianMatrix) -> EigenDecomposition {
    let n = h.dim();
    assert!(n <= 64, "eigh is meant for desk-scale matrices (dim {n})");
    let mut a = h.matrix().clone();
    let mut v = CMatrix::identity(n);
    let scale = f64::max(1.0, a.frobenius_norm());

    for _sweep in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= OFF_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= OFF_TOL * scale / (n as f64) {
                    continue;
                }
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (app - aqq) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A <- U† A U, column pass then row pass.
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c + aiq * s * phase.conj();
                    a[(i, q)] = -aip * s * phase + aiq * c;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c + aqj * s * phase;
                    a[(q, j)] = -apj * s * phase.conj() + aqj * c;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(c * c * app + 2.0 * s * c * r + s * s * aqq, 0.0);
                a[(q, q)] = C64::new(s * s * app - 2.0 * s * c * r + c * c * aqq, 0.0);

                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c + viq * s * phase.conj();
                    v[(i, q)] = -vip * s * phase + viq * c;
                }
            }
        }
    }
    debug_assert!(off_diagonal_norm(&a) <= 1e-12 * scale);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut eigenvectors = CMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[(i, new_col)] = v[(i, old_col)];
        }
    }
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, col: usize) -> Vec<C64> {
        (0..self.dim()).map(|i| self.eigenvectors[(i, col)]).collect()
    }

    /// V·diag(λ)·V†.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.dim();
        let mut d = CMatrix::zeros(n);
        for (i, &l) in self.eigenvalues.iter().enumerate() {
            d[(i, i)] = C64::new(l, 0.0);
        }
        self.eigenvectors.mul(&d).mul(&self.eigenvectors.adjoint())
    }
}

/// ⟨U(θ)|v⟩ | T | U(θ)|c⟩ by statevector simulation and a dense inner
/// product. This is the reference route the superposition-identity
/// reconstruction is checked against.
pub fn direct_amplitude(
    params: &AnsatzParams,
    v_index: usize,
    c_index: usize,
    t: &HermitianMatrix,
) -> C64 {
    let dim = 1usize << params.n_qubits();
    assert_eq!(t.dim(), dim, "observable dimension mismatch");
    let psi_v = apply_ansatz(params, v_index).expect("v_index in range");
    let psi_c = apply_ansatz(params, c_index).expect("c_index in range");
    inner_with_matrix(&psi_v, t.matrix(), &psi_c)
}

fn inner_with_matrix(left: &StateVector, m: &CMatrix, right: &StateVector) -> C64 {
    let tv = m.mul_vec(right.amplitudes());
    left.amplitudes()
        .iter()
        .zip(tv.iter())
        .map(|(a, b)| a.conj() * b)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kp::{KPoint, KpOptions, builtin_material, build_hamiltonian, make_kpath};
    use crate::pauli::Pauli;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(dim: usize, rng: &mut impl Rng) -> HermitianMatrix {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(rng.random_range(-2.0..2.0), 0.0);
            for j in (i + 1)..dim {
                let v = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        HermitianMatrix::new(m).unwrap()
    }

    /// Characteristic polynomial det(H − xI), evaluated by Gaussian
    /// elimination with partial pivoting.
    fn char_poly(h: &CMatrix, x: f64) -> f64 {
        let n = h.dim();
        let mut m = h.clone();
        for i in 0..n {
            m[(i, i)] -= C64::new(x, 0.0);
        }
        let mut det = C64::new(1.0, 0.0);
        for col in 0..n {
            let mut pivot = col;
            for row in (col + 1)..n {
                if m[(row, col)].norm() > m[(pivot, col)].norm() {
                    pivot = row;
                }
            }
            if m[(pivot, col)].norm() == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    let tmp = m[(col, j)];
                    m[(col, j)] = m[(pivot, j)];
                    m[(pivot, j)] = tmp;
                }
                det = -det;
            }
            det *= m[(col, col)];
            for row in (col + 1)..n {
                let factor = m[(row, col)] / m[(col, col)];
                for j in col..n {
                    let sub = factor * m[(col, j)];
                    m[(row, j)] -= sub;
                }
            }
        }
        det.re
    }

    /// Finds all real roots of the quartic characteristic polynomial by
    /// sign-change bisection over a Gershgorin-bounded interval.
    fn charpoly_roots(h: &HermitianMatrix) -> Vec<f64> {
        let m = h.matrix();
        let n = m.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let radius: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].norm()).sum();
            lo = lo.min(m[(i, i)].re - radius);
            hi = hi.max(m[(i, i)].re + radius);
        }
        lo -= 1e-6;
        hi += 1e-6;
        let samples = 20000;
        let mut roots = Vec::new();
        let mut prev_x = lo;
        let mut prev_f = char_poly(m, lo);
        for s in 1..=samples {
            let x = lo + (hi - lo) * s as f64 / samples as f64;
            let f = char_poly(m, x);
            if prev_f == 0.0 {
                roots.push(prev_x);
            } else if prev_f.signum() != f.signum() && f != 0.0 {
                let (mut a, mut b) = (prev_x, x);
                let mut fa = prev_f;
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let fm = char_poly(m, mid);
                    if fm == 0.0 || (b - a) < 1e-12 {
                        a = mid;
                        break;
                    }
                    if fa.signum() == fm.signum() {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            prev_x = x;
            prev_f = f;
        }
        roots
    }

    #[test]
    fn diagonal_matrix_sorts_ascending() {
        let mut m = CMatrix::zeros(4);
        for (i, v) in [0.0, 0.0, -0.341, 1.519].iter().enumerate() {
            m[(i, i)] = C64::new(*v, 0.0);
        }
        let d = eigh(&HermitianMatrix::new(m).unwrap());
        let expected = [-0.341, 0.0, 0.0, 1.519];
        for (got, want) in d.eigenvalues.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn pauli_x_tensor_identity_spectrum() {
        let xi = Pauli::X.matrix().kron(&Pauli::I.matrix());
        let d = eigh(&HermitianMatrix::new(xi).unwrap());
        let expected = [-1.0, -1.0, 1.0, 1.0];
        for (got, want) in d.eigenvalues.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_over_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let dim = [2usize, 3, 4, 6, 8, 12, 16][trial % 7];
            let h = random_hermitian(dim, &mut rng);
            let d = eigh(&h);
            let back = d.reconstruct();
            let tol = 1e-10 * f64::max(1.0, h.matrix().frobenius_norm());
            assert!(
                h.matrix().max_abs_diff(&back) <= tol,
                "dim {dim}: reconstruction error {}",
                h.matrix().max_abs_diff(&back)
            );
            // Orthonormality and residuals.
            for i in 0..dim {
                let vi = d.eigenvector(i);
                for j in 0..dim {
                    let vj = d.eigenvector(j);
                    let dot: C64 = vi.iter().zip(vj.iter()).map(|(a, b)| a.conj() * b).sum();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((dot.norm() - expected).abs() < 1e-10);
                }
                let hv = h.matrix().mul_vec(&vi);
                let res: f64 = hv
                    .iter()
                    .zip(vi.iter())
                    .map(|(a, b)| (a - b * d.eigenvalues[i]).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-10 * f64::max(1.0, h.matrix().frobenius_norm()));
            }
        }
    }

    #[test]
    fn gaas_eigenvalues_match_charpoly_bisection() {
        let m = builtin_material("GaAs").unwrap();
        let h = build_hamiltonian(&m, &KPoint::new(0.05, 0.0, 0.0), &KpOptions::default());
        let jac = eigh(&h).eigenvalues;
        let mut roots = charpoly_roots(&h);
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(roots.len(), 4, "expected 4 simple roots, got {roots:?}");
        for (a, b) in jac.iter().zip(roots.iter()) {
            assert!((a - b).abs() < 1e-9, "jacobi {a} vs charpoly {b}");
        }
    }

    #[test]
    fn inversion_symmetry_of_kp_spectra() {
        let m = builtin_material("GaAs").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let k = KPoint::new(
                rng.random_range(-0.1..0.1),
                rng.random_range(-0.1..0.1),
                rng.random_range(-0.1..0.1),
            );
            let minus = KPoint::new(-k.kx, -k.ky, -k.kz);
            let ep = eigh(&build_hamiltonian(&m, &k, &KpOptions::default())).eigenvalues;
            let em = eigh(&build_hamiltonian(&m, &minus, &KpOptions::default())).eigenvalues;
            for (a, b) in ep.iter().zip(em.iter()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eigenvalues_are_continuous_along_the_path() {
        // Lipschitz check with an empirically frozen constant per material.
        for (name, c_lip) in [("GaAs", 40.0), ("InSb", 120.0)] {
            let m = builtin_material(name).unwrap();
            let path = make_kpath(m.a, 21, 0.1).unwrap();
            let mut prev: Option<(Vec<f64>, f64)> = None;
            for k in &path {
                let vals = eigh(&build_hamiltonian(&m, k, &KpOptions::default())).eigenvalues;
                if let Some((pvals, pcoord)) = prev {
                    let dk = k.path_coord - pcoord;
                    for (a, b) in vals.iter().zip(pvals.iter()) {
                        assert!(
                            (a - b).abs() <= c_lip * dk,
                            "{name}: jump {} over dk {dk}",
                            (a - b).abs()
                        );
                    }
                }
                prev = Some((vals, k.path_coord));
            }
        }
    }

    #[test]
    fn adjacent_point_overlap_matching_agrees_with_sorting_away_from_crossings() {
        let m = builtin_material("GaAs").unwrap();
        let path = make_kpath(m.a, 21, 0.1).unwrap();
        let decomps: Vec<EigenDecomposition> = path
            .iter()
            .map(|k| eigh(&build_hamiltonian(&m, k, &KpOptions::default())))
            .collect();
        let mut crossings = Vec::new();
        for w in 0..decomps.len() - 1 {
            let (a, b) = (&decomps[w], &decomps[w + 1]);
            // Greedy maximum-overlap assignment between consecutive bases.
            let n = a.dim();
            let mut overlap = vec![vec![0.0f64; n]; n];
            for i in 0..n {
                let vi = a.eigenvector(i);
                for j in 0..n {
                    let vj = b.eigenvector(j);
                    let dot: C64 = vi.iter().zip(vj.iter()).map(|(x, y)| x.conj() * y).sum();
                    overlap[i][j] = dot.norm();
                }
            }
            let mut taken = vec![false; n];
            let mut assignment = vec![0usize; n];
            for i in 0..n {
                let j = (0..n)
                    .filter(|&j| !taken[j])
                    .max_by(|&x, &y| overlap[i][x].partial_cmp(&overlap[i][y]).unwrap())
                    .unwrap();
                taken[j] = true;
                assignment[i] = j;
            }
            // States hybridize quickly inside (avoided) crossings, where the
            // overlap assignment legitimately disagrees with plain sorting.
            const CROSSING_GAP: f64 = 0.02; // eV
            for (i, &j) in assignment.iter().enumerate() {
                if i != j {
                    let gap = (a.eigenvalues[i] - a.eigenvalues[j])
                        .abs()
                        .min((b.eigenvalues[i] - b.eigenvalues[j]).abs());
                    assert!(
                        gap < CROSSING_GAP,
                        "sorting glitch away from any crossing at segment {w}: gap {gap}"
                    );
                    crossings.push((w, i, j));
                }
            }
        }
        // Log-only: crossings are expected at/near Γ where HH/LH meet.
        eprintln!("detected {} crossing assignments", crossings.len());
    }
}
