//! Serializable run summaries and plot-ready text output.
//!
//! The JSON summary is the durable record of a band run (configuration plus
//! per-point energies, errors, and optimized angles); the CSV body carries
//! the same numbers in fixed columns for plotting. CSV bodies are
//! deterministic for a given configuration and seed; wall-clock fields are
//! the one exception and live in the `seconds` column and JSON metadata.

use serde::{Deserialize, Serialize};

use crate::circuit::NoiseConfig;
use crate::kp::KPoint;
use crate::ssvqe::{BandPoint, BandStructureResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSummary {
    pub index: usize,
    pub path_coord: f64,
    pub kx: f64,
    pub ky: f64,
    pub kz: f64,
    /// Ascending SSVQE energies (eV).
    pub energies: Vec<f64>,
    /// Ascending exact eigenvalues (eV).
    pub exact: Vec<f64>,
    pub errors: Vec<f64>,
    pub cycles: usize,
    pub seconds: f64,
    pub converged: bool,
    pub diverged: bool,
    pub evaluations: u64,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub material: String,
    pub n_layers: usize,
    pub optimizer: String,
    pub step_rate: f64,
    pub tol: f64,
    pub max_cycles: usize,
    /// statevector | sampled | noisy
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    pub seed: u64,
    pub kpoints_per_segment: usize,
    pub extent: f64,
    pub convention: String,
    pub pz_over_sqrt3: bool,
    pub warm_start: bool,
    /// Timestamp metadata; never part of the CSV body.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_unix_secs: Option<u64>,
    pub points: Vec<PointSummary>,
}

impl RunSummary {
    pub fn points_from_sweep(result: &BandStructureResult) -> Vec<PointSummary> {
        result
            .points
            .iter()
            .enumerate()
            .map(|(index, p)| PointSummary {
                index,
                path_coord: p.k.path_coord,
                kx: p.k.kx,
                ky: p.k.ky,
                kz: p.k.kz,
                energies: p.energies.clone(),
                exact: p.exact.clone(),
                errors: p.errors.clone(),
                cycles: p.cycles,
                seconds: p.seconds,
                converged: p.converged,
                diverged: p.diverged,
                evaluations: p.evaluations,
                theta: p.theta.clone(),
            })
            .collect()
    }

    /// Structural checks for summaries read back from disk.
    pub fn validate(&self) -> Result<(), String> {
        if self.n_layers == 0 {
            return Err("n_layers must be at least 1".into());
        }
        if self.points.is_empty() {
            return Err("summary holds no k-points".into());
        }
        let p = self.points[0].energies.len();
        if p == 0 {
            return Err("points carry no energies".into());
        }
        let angle_count = 3 * 2 * self.n_layers;
        for (i, point) in self.points.iter().enumerate() {
            if point.energies.len() != p || point.exact.len() != p || point.errors.len() != p {
                return Err(format!("point {i}: inconsistent band counts"));
            }
            if point.theta.len() != angle_count {
                return Err(format!(
                    "point {i}: theta holds {} angles, expected {angle_count}",
                    point.theta.len()
                ));
            }
            let all = point
                .energies
                .iter()
                .chain(&point.exact)
                .chain(&point.errors)
                .chain(&point.theta)
                .chain([&point.path_coord, &point.kx, &point.ky, &point.kz, &point.seconds]);
            for v in all {
                if !v.is_finite() {
                    return Err(format!("point {i}: non-finite value"));
                }
            }
        }
        Ok(())
    }

    /// Rebuilds the sweep structure needed by the spectra pipeline.
    pub fn to_band_result(&self) -> Result<BandStructureResult, String> {
        self.validate()?;
        let points = self
            .points
            .iter()
            .map(|p| BandPoint {
                k: KPoint {
                    kx: p.kx,
                    ky: p.ky,
                    kz: p.kz,
                    path_coord: p.path_coord,
                },
                energies: p.energies.clone(),
                exact: p.exact.clone(),
                errors: p.errors.clone(),
                cycles: p.cycles,
                seconds: p.seconds,
                converged: p.converged,
                diverged: p.diverged,
                evaluations: p.evaluations,
                theta: p.theta.clone(),
            })
            .collect();
        Ok(BandStructureResult {
            n_qubits: 2,
            n_layers: self.n_layers,
            points,
        })
    }
}

pub const BANDS_CSV_HEADER: &str =
    "index,path_coord,kx,ky,kz,e0,e1,e2,e3,x0,x1,x2,x3,err0,err1,err2,err3,cycles,seconds";

/// Renders the fixed-column CSV body for a four-band run.
pub fn bands_csv(points: &[PointSummary]) -> String {
    let mut out = String::from(BANDS_CSV_HEADER);
    out.push('\n');
    for p in points {
        assert_eq!(p.energies.len(), 4, "bands CSV is fixed to four bands");
        out.push_str(&format!("{},{},{},{},{}", p.index, p.path_coord, p.kx, p.ky, p.kz));
        for e in &p.energies {
            out.push_str(&format!(",{e}"));
        }
        for x in &p.exact {
            out.push_str(&format!(",{x}"));
        }
        for err in &p.errors {
            out.push_str(&format!(",{err}"));
        }
        out.push_str(&format!(",{},{:.6}", p.cycles, p.seconds));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub layers: usize,
    pub optimizer: String,
    pub mean_cycles: f64,
    pub min_cycles: usize,
    pub max_cycles: usize,
    pub mean_seconds: f64,
    pub mean_seconds_per_cycle: f64,
    pub total_evaluations: u64,
    pub converged_points: usize,
    pub total_points: usize,
}

impl BenchmarkRow {
    pub fn from_sweep(layers: usize, optimizer: &str, sweep: &BandStructureResult) -> Self {
        let n = sweep.points.len().max(1);
        let total_cycles: usize = sweep.points.iter().map(|p| p.cycles).sum();
        let total_seconds: f64 = sweep.points.iter().map(|p| p.seconds).sum();
        BenchmarkRow {
            layers,
            optimizer: optimizer.to_string(),
            mean_cycles: total_cycles as f64 / n as f64,
            min_cycles: sweep.points.iter().map(|p| p.cycles).min().unwrap_or(0),
            max_cycles: sweep.points.iter().map(|p| p.cycles).max().unwrap_or(0),
            mean_seconds: total_seconds / n as f64,
            mean_seconds_per_cycle: if total_cycles > 0 {
                total_seconds / total_cycles as f64
            } else {
                0.0
            },
            total_evaluations: sweep.points.iter().map(|p| p.evaluations).sum(),
            converged_points: sweep.points.iter().filter(|p| p.converged).count(),
            total_points: sweep.points.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub material: String,
    pub seed: u64,
    pub kpoints_per_segment: usize,
    pub extent: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_unix_secs: Option<u64>,
    pub rows: Vec<BenchmarkRow>,
}

pub const BENCHMARK_CSV_HEADER: &str =
    "layers,optimizer,mean_cycles,min_cycles,max_cycles,mean_seconds,mean_seconds_per_cycle";

pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from(BENCHMARK_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.2},{},{},{:.4},{:.6}\n",
            r.layers,
            r.optimizer,
            r.mean_cycles,
            r.min_cycles,
            r.max_cycles,
            r.mean_seconds,
            r.mean_seconds_per_cycle
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_point(index: usize) -> PointSummary {
        PointSummary {
            index,
            path_coord: 0.1 * index as f64,
            kx: 0.05,
            ky: 0.0,
            kz: 0.0,
            energies: vec![-0.3, 0.0, 0.0, 1.5],
            exact: vec![-0.3, 0.0, 0.0, 1.5],
            errors: vec![0.0; 4],
            cycles: 100,
            seconds: 0.5,
            converged: true,
            diverged: false,
            evaluations: 1000,
            theta: vec![0.0; 30],
        }
    }

    fn sample_summary() -> RunSummary {
        RunSummary {
            material: "GaAs".into(),
            n_layers: 5,
            optimizer: "adam".into(),
            step_rate: 0.01,
            tol: 1e-7,
            max_cycles: 2000,
            mode: "statevector".into(),
            shots: None,
            noise: None,
            seed: 1,
            kpoints_per_segment: 21,
            extent: 0.1,
            convention: "figure-consistent".into(),
            pz_over_sqrt3: false,
            warm_start: true,
            generated_unix_secs: Some(0),
            points: vec![sample_point(0), sample_point(1)],
        }
    }

    #[test]
    fn summary_json_round_trips() {
        let s = sample_summary();
        let text = serde_json::to_string_pretty(&s).unwrap();
        let back: RunSummary = serde_json::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(back.points.len(), 2);
        assert_eq!(back.material, "GaAs");
    }

    #[test]
    fn validation_catches_inconsistent_points() {
        let mut s = sample_summary();
        s.points[1].theta.pop();
        assert!(s.validate().is_err());
        let mut s = sample_summary();
        s.points[0].energies.pop();
        assert!(s.validate().is_err());
        let mut s = sample_summary();
        s.points[0].exact[0] = f64::NAN;
        assert!(s.validate().is_err());
    }

    #[test]
    fn csv_header_and_shape_are_stable() {
        let s = sample_summary();
        let csv = bands_csv(&s.points);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), BANDS_CSV_HEADER);
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 19);
        assert!(first.starts_with("0,0,0.05,0,0,-0.3,"));
    }
}
