//! Physics-level checks assembled from the lower layers: zero-mode
//! distributions and their size independence, the scattering gap, and mode
//! census sweeps over `(N, mu)` grids.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bethe::{self, BetheError, BetheRoot, Side};
use crate::model::{build_ssh, build_ssh_on_locus, ModelError};
use crate::spectral::{classify_modes, eig, eig_split, EigenSystem, Precision, ModeCensus, ModeClass, ModeRecord, SpectralError, Tolerances};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid parameters: {0}")]
    Domain(String),
    #[error("census identity violated at N = {n_sites}, mu = {mu}: {census:?}")]
    CensusViolation { n_sites: usize, mu: f64, census: ModeCensus },
    #[error("at N = {n_sites}, mu = {mu}: {source}")]
    AtPoint {
        n_sites: usize,
        mu: f64,
        #[source]
        source: Box<AnalysisError>,
    },
    #[error("could not build a thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Bethe(#[from] BetheError),
}

/// Site-resolved moduli `P(j) = |<j|psi>|`, `j = 1..N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionProfile {
    pub n_sites: usize,
    pub mu: f64,
    pub values: Vec<f64>,
}

impl DistributionProfile {
    /// `sum P(j)^2`.
    pub fn total_weight(&self) -> f64 {
        self.values.iter().map(|p| p * p).sum()
    }

    /// `max_j |P(2j-1) / (P(1) mu^(1-j)) - 1|` over the odd sites.
    pub fn odd_site_ratio_deviation(&self) -> f64 {
        let p1 = self.values[0];
        self.values
            .iter()
            .step_by(2)
            .enumerate()
            .map(|(j, p)| (p / (p1 * self.mu.powi(-(j as i32))) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn dirac_distribution(amplitudes: &[Complex64], mu: f64) -> DistributionProfile {
    DistributionProfile {
        n_sites: amplitudes.len(),
        mu,
        values: amplitudes.iter().map(|z| z.norm()).collect(),
    }
}

/// Distribution of the closed-form right zero mode.
pub fn zero_mode_distribution(n_sites: usize, mu: f64) -> Result<DistributionProfile, AnalysisError> {
    let zm = bethe::zero_mode(n_sites, mu, Side::Right)?;
    Ok(dirac_distribution(&zm.amplitudes, mu))
}

/// `Omega_inf = sqrt((mu^2 - 1)/2) / mu`, the large-N limit of the zero-mode
/// normalization for `mu > 1`.
pub fn omega_limit(mu: f64) -> Result<f64, AnalysisError> {
    if !(mu > 1.0 && mu.is_finite()) {
        return Err(AnalysisError::Domain(format!("Omega limit needs mu > 1, got {mu}")));
    }
    Ok(((mu * mu - 1.0) / 2.0).sqrt() / mu)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonPartReport {
    pub n_small: usize,
    pub n_large: usize,
    pub mu: f64,
    /// Largest `|P_small - P_large|` over the compared sites.
    pub max_deviation: f64,
    /// Same comparison after dividing each profile by its `P(1)`.
    pub ratio_deviation: f64,
    /// `max_deviation * mu^n_small`.
    pub scaled_constant: f64,
    pub sites_compared: usize,
}

/// Compares the zero-mode profiles of two chain lengths on the shared edge
/// structure: odd sites counted from the left end and their mirror images
/// counted from the right end, for the first `n_small / 2` positions.
pub fn common_part_compare(n_small: usize, n_large: usize, mu: f64) -> Result<CommonPartReport, AnalysisError> {
    if n_small > n_large {
        return Err(AnalysisError::Domain(format!(
            "n_small = {n_small} exceeds n_large = {n_large}"
        )));
    }
    if !(mu > 1.0 && mu.is_finite()) {
        return Err(AnalysisError::Domain(format!("common part comparison needs mu > 1, got {mu}")));
    }
    let small = zero_mode_distribution(n_small, mu)?;
    let large = zero_mode_distribution(n_large, mu)?;
    let (s1, l1) = (small.values[0], large.values[0]);
    let mut max_dev: f64 = 0.0;
    let mut ratio_dev: f64 = 0.0;
    let mut compared = 0;
    for j in (1..=n_small / 2).step_by(2) {
        let pairs = [
            (small.values[j - 1], large.values[j - 1]),
            (small.values[n_small - j], large.values[n_large - j]),
        ];
        for (a, b) in pairs {
            max_dev = max_dev.max((a - b).abs());
            ratio_dev = ratio_dev.max((a / s1 - b / l1).abs());
            compared += 1;
        }
    }
    Ok(CommonPartReport {
        n_small,
        n_large,
        mu,
        max_deviation: max_dev,
        ratio_deviation: ratio_dev,
        scaled_constant: max_dev * mu.powi(n_small as i32),
        sites_compared: compared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub holds: bool,
    /// `|1 - mu|`.
    pub lower_bound: f64,
    /// `1 + mu`.
    pub upper_bound: f64,
    /// Smallest `|eps|` among scattering levels (infinite if none).
    pub min_scattering: f64,
    pub max_scattering: f64,
    /// `min_scattering - lower_bound`.
    pub margin: f64,
}

/// Every scattering level must satisfy `|1-mu| - tol <= |eps| <= 1+mu + tol`.
pub fn gap_bound_check(modes: &[ModeRecord], mu: f64, tolerance: f64) -> GapReport {
    let lower = (1.0 - mu).abs();
    let upper = 1.0 + mu;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for m in modes.iter().filter(|m| m.mode_class == ModeClass::RealScattering) {
        lo = lo.min(m.eigenvalue.norm());
        hi = hi.max(m.eigenvalue.norm());
    }
    GapReport {
        holds: lo >= lower - tolerance && hi <= upper + tolerance,
        lower_bound: lower,
        upper_bound: upper,
        min_scattering: lo,
        max_scattering: hi,
        margin: lo - lower,
    }
}

/// Dense spectrum of one SSH chain with its mode classification.
#[derive(Debug, Clone)]
pub struct ChainSpectrum {
    pub n_sites: usize,
    pub mu: f64,
    pub gamma: f64,
    pub eigensystem: EigenSystem,
    pub modes: Vec<ModeRecord>,
    pub census: ModeCensus,
}

pub fn analyze_chain(n_sites: usize, mu: f64, gamma: f64, tol: &Tolerances) -> Result<ChainSpectrum, AnalysisError> {
    let h = build_ssh(n_sites, mu, gamma)?;
    let eigensystem = eig(&h, tol.residual)?;
    let (modes, census) = classify_modes(&eigensystem, tol)?;
    Ok(ChainSpectrum {
        n_sites,
        mu,
        gamma,
        eigensystem,
        modes,
        census,
    })
}

/// As [`analyze_chain`] at `gamma = mu^(1 - N/2)`, with the coupling
/// carried beyond `f64` precision. Rounding `gamma` moves the chain off its
/// exceptional point and splits the zero pair by about `sqrt(eps_mach)`;
/// the extended tail keeps the split at rounding level.
pub fn analyze_chain_on_locus(n_sites: usize, mu: f64, tol: &Tolerances) -> Result<ChainSpectrum, AnalysisError> {
    let chain = build_ssh_on_locus(n_sites, mu)?;
    let eigensystem = eig_split(&chain.matrix, &chain.tail, tol.residual, Precision::Auto)?;
    let (modes, census) = classify_modes(&eigensystem, tol)?;
    Ok(ChainSpectrum {
        n_sites,
        mu,
        gamma: chain.gamma,
        eigensystem,
        modes,
        census,
    })
}

/// Roots of the quantization equation whose energies cover the whole
/// spectrum: real-k roots, the two exact zero-mode roots and (for
/// `mu < 1`) the polished imaginary pair.
pub fn bethe_root_set(n_sites: usize, mu: f64, gamma: f64, root_tolerance: f64) -> Result<Vec<BetheRoot>, AnalysisError> {
    let mut roots = bethe::solve_real_k(mu, gamma, n_sites, root_tolerance)?.roots;
    roots.extend(bethe::zero_mode_roots(mu, gamma, n_sites)?);
    if mu < 1.0 {
        roots.extend(
            bethe::solve_evanescent(mu, gamma, n_sites, root_tolerance)?
                .into_iter()
                .filter(|r| r.sector == bethe::Sector::ImaginaryAxis && r.epsilon.norm() > 0.0),
        );
    }
    Ok(roots)
}

/// Fills `matched_bethe_root` with the wavevector of the root whose energy
/// lies within `tolerance * max(1, |eps|)` of each eigenvalue. Returns the
/// number of modes left unmatched.
pub fn match_bethe_roots(modes: &mut [ModeRecord], roots: &[BetheRoot], tolerance: f64) -> usize {
    let mut unmatched = 0;
    for m in modes.iter_mut() {
        let best = roots
            .iter()
            .map(|r| ((r.epsilon - m.eigenvalue).norm(), r))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match best {
            Some((d, r)) if d <= tolerance * m.eigenvalue.norm().max(1.0) => m.matched_bethe_root = Some(r.k),
            _ => {
                m.matched_bethe_root = None;
                unmatched += 1;
            }
        }
    }
    unmatched
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_sites: usize,
    pub mu: f64,
    pub gamma: f64,
    pub census: ModeCensus,
    pub edge_modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Row-major over `(N, mu)` in input order.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// For every `N`, the edge-mode count is constant on each side of
    /// `mu = 1` and differs between the sides (when both are sampled).
    pub fn phase_boundary_holds(&self) -> bool {
        let mut ns: Vec<usize> = self.points.iter().map(|p| p.n_sites).collect();
        ns.dedup();
        ns.iter().all(|&n| {
            let side = |above: bool| {
                let mut v: Vec<usize> = self
                    .points
                    .iter()
                    .filter(|p| p.n_sites == n && (p.mu > 1.0) == above)
                    .map(|p| p.edge_modes)
                    .collect();
                v.dedup();
                v
            };
            let (hi, lo) = (side(true), side(false));
            hi.len() <= 1 && lo.len() <= 1 && (hi.is_empty() || lo.is_empty() || hi != lo)
        })
    }
}

fn sweep_point(n_sites: usize, mu: f64, tol: &Tolerances) -> Result<SweepPoint, AnalysisError> {
    let wrap = |e: AnalysisError| AnalysisError::AtPoint {
        n_sites,
        mu,
        source: Box::new(e),
    };
    if mu == 1.0 {
        return Err(wrap(AnalysisError::Domain("mu = 1 sits on the phase boundary".into())));
    }
    let chain = analyze_chain_on_locus(n_sites, mu, tol).map_err(wrap)?;
    if !chain.census.is_consistent() {
        return Err(AnalysisError::CensusViolation {
            n_sites,
            mu,
            census: chain.census,
        });
    }
    Ok(SweepPoint {
        n_sites,
        mu,
        gamma: chain.gamma,
        census: chain.census,
        edge_modes: chain.census.edge_modes(),
    })
}

/// Census at every `(N, mu)` with `gamma` on the EP locus. Points run in
/// parallel (at most `threads` workers when given); output order is the
/// row-major input order. The first failing point in that order is
/// reported.
pub fn census_sweep(
    n_list: &[usize],
    mu_list: &[f64],
    tol: &Tolerances,
    threads: Option<usize>,
) -> Result<SweepResult, AnalysisError> {
    let grid: Vec<(usize, f64)> = n_list
        .iter()
        .flat_map(|&n| mu_list.iter().map(move |&mu| (n, mu)))
        .collect();
    let run = || -> Vec<Result<SweepPoint, AnalysisError>> {
        grid.par_iter().map(|&(n, mu)| sweep_point(n, mu, tol)).collect()
    };
    let results = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| AnalysisError::ThreadPool(e.to_string()))?
            .install(run),
        None => run(),
    };
    let points = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult { points })
}
