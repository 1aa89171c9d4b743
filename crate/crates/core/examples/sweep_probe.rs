use kpvqe::circuit::EvalMode;
use kpvqe::kp::{builtin_material, make_kpath};
use kpvqe::optimize::{OptimizerConfig, OptimizerKind};
use kpvqe::ssvqe::{BandSweepConfig, band_sweep};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let material = args.get(1).map(|s| s.as_str()).unwrap_or("GaAs");
    let layers: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(5);
    let m = builtin_material(material).unwrap();
    let kpoints: usize = args.get(7).and_then(|s| s.parse().ok()).unwrap_or(21);
    let sampled = args.get(8).map(|s| s == "sampled").unwrap_or(false);
    let path = make_kpath(m.a, kpoints, 0.1).unwrap();
    let warm = args.get(3).map(|s| s != "cold").unwrap_or(true);
    let seed: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(kpvqe::ssvqe::DEFAULT_MASTER_SEED);
    let tol: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(1e-7);
    let max_cycles: usize = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let opt = OptimizerConfig::new(OptimizerKind::Adam)
        .with_step_rate(0.01)
        .with_tol(tol)
        .with_max_cycles(max_cycles);
    let mode = if sampled {
        EvalMode::Sampled { shots: 10_000, seed }
    } else {
        EvalMode::Exact
    };
    let mut cfg = BandSweepConfig::new(layers, opt, mode);
    cfg.warm_start = warm;
    cfg.master_seed = seed;
    let start = Instant::now();
    let sweep = band_sweep(&m, &path, &cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let total_cycles = sweep.total_cycles();
    println!(
        "{material} layers={layers}: max_err={:.6} eV median_err={:.6} eV total_cycles={} mean_cycles={:.1} elapsed={:.2}s converged={}/{}",
        sweep.max_error(),
        sweep.median_error(),
        total_cycles,
        total_cycles as f64 / sweep.points.len() as f64,
        elapsed,
        sweep.points.iter().filter(|p| p.converged).count(),
        sweep.points.len()
    );
    let worst = sweep
        .points
        .iter()
        .enumerate()
        .max_by(|a, b| {
            let ea = a.1.errors.iter().cloned().fold(0.0, f64::max);
            let eb = b.1.errors.iter().cloned().fold(0.0, f64::max);
            ea.partial_cmp(&eb).unwrap()
        })
        .unwrap();
    println!(
        "worst point {} k=({:.4},{:.4},{:.4}) errors={:?} cycles={}",
        worst.0, worst.1.k.kx, worst.1.k.ky, worst.1.k.kz, worst.1.errors, worst.1.cycles
    );
}
