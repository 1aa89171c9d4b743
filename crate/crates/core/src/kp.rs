//! Four-band k·p Hamiltonians for zinc-blende III-V semiconductors.
//!
//! The model couples the heavy-hole, light-hole, split-off, and lowest
//! conduction bands near the zone center. Its inputs are the empirical
//! Luttinger parameters γ₁, γ₂, γ₃, the spin-orbit splitting Δ, the direct
//! gap ε_Γ, the Kane energy E_p, the conduction effective mass m*, and the
//! lattice constant a. Energies are in eV, lengths in Å, wave vectors in Å⁻¹.
//!
//! Two sign conventions for the matrix are provided (see [`SignConvention`]):
//! the default places the split-off band at −Δ and bends all valence bands
//! downward; the alternative keeps the terms exactly as commonly tabulated,
//! with the split-off diagonal at +Δ and an asymmetric sign between the two
//! quadratic valence terms. Both are useful: the default for physically
//! ordered band structures, the other for auditing against the tabulated form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::matrix::{C64, CMatrix, HermitianMatrix};

/// ħ²/2m₀ in eV·Å².
pub const HBAR2_OVER_2M0: f64 = 3.80998;

/// Empirical parameter set for one compound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    pub name: String,
    /// Luttinger parameters (dimensionless).
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// Spin-orbit splitting Δ (eV).
    pub delta: f64,
    /// Direct band gap ε_Γ at the zone center (eV).
    pub eps_gamma: f64,
    /// Kane energy E_p (eV).
    pub ep: f64,
    /// Conduction-band effective mass in units of the free-electron mass.
    pub m_eff: f64,
    /// Lattice constant (Å).
    pub a: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum MaterialError {
    #[error("invalid material file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{field} {message}")]
    Invariant {
        field: &'static str,
        message: &'static str,
    },
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), MaterialError> {
        fn bad(field: &'static str, message: &'static str) -> MaterialError {
            MaterialError::Invariant { field, message }
        }
        let finite = [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("delta", self.delta),
            ("eps_gamma", self.eps_gamma),
            ("ep", self.ep),
            ("m_eff", self.m_eff),
            ("a", self.a),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(bad(field, "must be finite"));
            }
        }
        if self.eps_gamma <= 0.0 {
            return Err(bad("eps_gamma", "must be positive"));
        }
        if self.ep <= 0.0 {
            return Err(bad("ep", "must be positive"));
        }
        if self.delta < 0.0 {
            return Err(bad("delta", "must be non-negative"));
        }
        if self.m_eff <= 0.0 {
            return Err(bad("m_eff", "must be positive"));
        }
        if self.a <= 0.0 {
            return Err(bad("a", "must be positive"));
        }
        if self.gamma1 <= 0.0 {
            return Err(bad("gamma1", "must be positive"));
        }
        if self.gamma1 <= 2.0 * self.gamma2.abs() {
            return Err(bad("gamma1", "must exceed 2·|gamma2|"));
        }
        Ok(())
    }

    /// Kane momentum parameter P = sqrt(E_p · ħ²/2m₀), in eV·Å.
    pub fn kane_p(&self) -> f64 {
        (self.ep * HBAR2_OVER_2M0).sqrt()
    }
}

/// Parses and validates a material parameter file (flat JSON key-value).
/// Unknown keys are rejected; every violation names the offending field.
pub fn load_material(text: &str) -> Result<MaterialParams, MaterialError> {
    let params: MaterialParams = serde_json::from_str(text)?;
    params.validate()?;
    Ok(params)
}

/// Parameter files bundled with the repository, keyed by compound name.
pub const BUILTIN_MATERIALS: &[(&str, &str)] = &[
    ("GaAs", include_str!("../../../materials/GaAs.json")),
    ("InP", include_str!("../../../materials/InP.json")),
    ("InAs", include_str!("../../../materials/InAs.json")),
    ("InSb", include_str!("../../../materials/InSb.json")),
    ("AlP", include_str!("../../../materials/AlP.json")),
    ("GaP", include_str!("../../../materials/GaP.json")),
    ("GaSb", include_str!("../../../materials/GaSb.json")),
];

pub fn builtin_material(name: &str) -> Option<MaterialParams> {
    BUILTIN_MATERIALS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| load_material(text).expect("bundled material files are valid"))
}

/// A wave vector with its accumulated position along a plotted path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KPoint {
    pub kx: f64,
    pub ky: f64,
    pub kz: f64,
    /// Euclidean k-distance accumulated from the start of the path.
    pub path_coord: f64,
}

impl KPoint {
    pub fn new(kx: f64, ky: f64, kz: f64) -> Self {
        Self {
            kx,
            ky,
            kz,
            path_coord: 0.0,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.kx * self.kx + self.ky * self.ky + self.kz * self.kz).sqrt()
    }
}

/// Parses "kx,ky,kz" (Å⁻¹) into a k-point.
pub fn parse_k_triple(s: &str) -> Result<KPoint, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected kx,ky,kz but got {} components", parts.len()));
    }
    let mut vals = [0.0f64; 3];
    for (i, p) in parts.iter().enumerate() {
        let v: f64 = p
            .trim()
            .parse()
            .map_err(|_| format!("component {} ({:?}) is not a number", i, p))?;
        if !v.is_finite() {
            return Err(format!("component {i} is not finite"));
        }
        vals[i] = v;
    }
    Ok(KPoint::new(vals[0], vals[1], vals[2]))
}

/// Sign/mass convention for assembling the 4×4 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SignConvention {
    /// Both quadratic valence terms carry the overall −ħ²/2m₀ prefactor and
    /// the split-off diagonal sits at −Δ, so the k = 0 spectrum is
    /// {−Δ, 0, 0, ε_Γ} with valence bands curving downward.
    #[default]
    FigureConsistent,
    /// The commonly tabulated form taken verbatim: ħ²/2m* prefactors, a
    /// leading minus on T but not on Q, and the split-off diagonal at +Δ.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KpOptions {
    pub convention: SignConvention,
    /// Use −P_z/√3 instead of −P_z/3 for the split-off/conduction coupling.
    pub pz_over_sqrt3: bool,
}

/// Assembles the 4×4 k·p Hamiltonian for `params` at wave vector `k`.
///
/// Upper triangle is filled from the model terms, the lower triangle by
/// conjugate transposition, so the result is Hermitian by construction.
pub fn build_hamiltonian(params: &MaterialParams, k: &KPoint, opts: &KpOptions) -> HermitianMatrix {
    let (kx, ky, kz) = (k.kx, k.ky, k.kz);
    let kpar2 = kx * kx + ky * ky;
    let kz2 = kz * kz;
    let k2 = kpar2 + kz2;
    let (g1, g2, g3) = (params.gamma1, params.gamma2, params.gamma3);

    // The default convention uses the free-electron mass in the Luttinger
    // terms (the γs already encode the band masses); the as-printed form
    // divides by m*.
    let pref = match opts.convention {
        SignConvention::FigureConsistent => HBAR2_OVER_2M0,
        SignConvention::AsPrinted => HBAR2_OVER_2M0 / params.m_eff,
    };

    let t = -pref * ((g1 - g2) * kpar2 + (g1 + 2.0 * g2) * kz2);
    let q = match opts.convention {
        SignConvention::FigureConsistent => -pref * ((g1 + g2) * kpar2 + (g1 - 2.0 * g2) * kz2),
        SignConvention::AsPrinted => pref * ((g1 + g2) * kpar2 + (g1 - 2.0 * g2) * kz2),
    };

    let k_minus = C64::new(kx, -ky) / 2.0f64.sqrt();
    let k_plus = C64::new(kx, ky) / 2.0f64.sqrt();
    let s = Complex64::new(0.0, 1.0) * pref * 2.0 * 3.0f64.sqrt() * g3 * kz * k_minus;

    let p = params.kane_p();
    let pz = p * kz;
    let p_plus = p * k_plus;

    let eg = params.eps_gamma;
    let e_gamma = eg
        + HBAR2_OVER_2M0
            * k2
            * (1.0 / params.m_eff - (params.ep / 3.0) * (2.0 / eg + 1.0 / (eg + params.delta)));

    let so_diag = match opts.convention {
        SignConvention::FigureConsistent => (q + t) / 2.0 - params.delta,
        SignConvention::AsPrinted => (q + t) / 2.0 + params.delta,
    };

    let pz_coupling = if opts.pz_over_sqrt3 {
        -pz / 3.0f64.sqrt()
    } else {
        -pz / 3.0
    };

    let i = Complex64::new(0.0, 1.0);
    let re = |x: f64| C64::new(x, 0.0);
    let sqrt2 = 2.0f64.sqrt();

    let mut m = CMatrix::zeros(4);
    m[(0, 0)] = re(t);
    m[(0, 1)] = -s;
    m[(0, 2)] = i * (t - q) / sqrt2;
    m[(0, 3)] = -i * (2.0f64 / 3.0).sqrt() * pz;
    m[(1, 1)] = re(q);
    m[(1, 2)] = -i * s.conj() / sqrt2;
    m[(1, 3)] = -p_plus;
    m[(2, 2)] = re(so_diag);
    m[(2, 3)] = re(pz_coupling);
    m[(3, 3)] = re(e_gamma);
    for r in 0..4 {
        for c in 0..r {
            m[(r, c)] = m[(c, r)].conj();
        }
    }

    HermitianMatrix::new(m).expect("upper-triangle construction is hermitian")
}

#[derive(Debug, thiserror::Error)]
pub enum KPathError {
    #[error("n_per_segment must be at least 2 (got {0})")]
    TooFewPoints(usize),
    #[error("extent must lie in (0, 1] (got {0})")]
    BadExtent(f64),
}

/// Samples the X–Γ–L path: `extent`·X → Γ → `extent`·L, with
/// X = (2π/a)(1,0,0) and L = (π/a)(1,1,1).
///
/// Each segment carries `n_per_segment` uniformly spaced points including its
/// endpoints; Γ is shared, so the path holds 2·n_per_segment − 1 points.
/// `path_coord` accumulates Euclidean k-distance from the first point.
pub fn make_kpath(a: f64, n_per_segment: usize, extent: f64) -> Result<Vec<KPoint>, KPathError> {
    if n_per_segment < 2 {
        return Err(KPathError::TooFewPoints(n_per_segment));
    }
    if !(extent > 0.0 && extent <= 1.0) {
        return Err(KPathError::BadExtent(extent));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let x_point = [extent * two_pi / a, 0.0, 0.0];
    let l_point = [
        extent * std::f64::consts::PI / a,
        extent * std::f64::consts::PI / a,
        extent * std::f64::consts::PI / a,
    ];

    let mut raw: Vec<[f64; 3]> = Vec::with_capacity(2 * n_per_segment - 1);
    let steps = (n_per_segment - 1) as f64;
    for i in 0..n_per_segment {
        let t = 1.0 - i as f64 / steps;
        raw.push([x_point[0] * t, x_point[1] * t, x_point[2] * t]);
    }
    for j in 1..n_per_segment {
        let t = j as f64 / steps;
        raw.push([l_point[0] * t, l_point[1] * t, l_point[2] * t]);
    }

    let mut points = Vec::with_capacity(raw.len());
    let mut coord = 0.0;
    for (i, kv) in raw.iter().enumerate() {
        if i > 0 {
            let prev = raw[i - 1];
            let d = ((kv[0] - prev[0]).powi(2) + (kv[1] - prev[1]).powi(2) + (kv[2] - prev[2]).powi(2))
                .sqrt();
            coord += d;
        }
        points.push(KPoint {
            kx: kv[0],
            ky: kv[1],
            kz: kv[2],
            path_coord: coord,
        });
    }
    Ok(points)
}
