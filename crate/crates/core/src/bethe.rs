//! Closed-form solutions of the non-Hermitian SSH chain at the exceptional
//! point `gamma = mu^(1 - N/2)`.
//!
//! A Bethe wavefunction `f_l = A e^{ikl} + B e^{-ikl}` (odd `l`),
//! `C e^{ikl} + D e^{-ikl}` (even `l`) solves the bulk equations for any
//! complex `k` with
//!
//! ```text
//! eps_k^2 = 1 + mu^2 - mu (e^{2ik} + e^{-2ik}),
//! ```
//!
//! and the two boundary rows reduce to the quantization equation
//!
//! ```text
//! (eps^2 - gamma^2 - 1)[e^{i(N-2)k} - e^{-i(N-2)k}] + mu [e^{i(N-4)k} - e^{-i(N-4)k}]
//!     + mu (gamma^2 + eps^2)(e^{ikN} - e^{-ikN}) = 0.
//! ```
//!
//! Real roots give the scattering levels; `k = i kappa` (or `pi + i kappa`)
//! gives the zero mode (`kappa = +-ln(mu)/2`) and, for `mu < 1`, the
//! evanescent pair with imaginary energy.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{norm2, ComplexMatrix};
use crate::model::{build_ssh, gamma_ep, ModelError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BetheError {
    #[error("mu = 1 is the uniform chain; the closed forms divide by 1 - mu^2")]
    DegenerateUniformChain,
    #[error("{0}")]
    OutOfDomain(String),
    #[error("amplitude ratio has a pole at k = {k} (1 - mu e^(-2ik) = 0)")]
    Pole { k: Complex64 },
    #[error("found {found} distinct real-k levels, expected {expected} (grid of {grid} points)")]
    RootCountMismatch {
        found: usize,
        expected: usize,
        grid: usize,
    },
    #[error("root near k = {k} did not polish below tolerance (relative residual {residual:e})")]
    NotConverged { k: f64, residual: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Choice of sign in `eps = +- sqrt(...)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

/// Line of the complex `k` plane a root was found on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sector {
    RealAxis,
    /// `k = i kappa`.
    ImaginaryAxis,
    /// `k = pi + i kappa`.
    ShiftedImaginaryAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetheRoot {
    pub k: Complex64,
    pub branch: Branch,
    pub epsilon: Complex64,
    /// Relative residual of the quantization equation at `k`.
    pub residual: f64,
    pub sector: Sector,
}

fn check_mu(mu: f64) -> Result<(), BetheError> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(ModelError::InvalidMu(mu).into());
    }
    Ok(())
}

fn check_closed_form(n_sites: usize, mu: f64) -> Result<(), BetheError> {
    check_mu(mu)?;
    if n_sites < 4 || n_sites % 2 != 0 {
        return Err(ModelError::InvalidSiteCount(n_sites).into());
    }
    if mu == 1.0 {
        return Err(BetheError::DegenerateUniformChain);
    }
    Ok(())
}

fn i() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

/// `eps_k^2 = 1 + mu^2 - mu (e^{2ik} + e^{-2ik})`.
pub fn epsilon_squared(k: Complex64, mu: f64) -> Complex64 {
    let e2 = (2.0 * i() * k).exp();
    1.0 + mu * mu - mu * (e2 + 1.0 / e2)
}

/// Both branches `(+sqrt, -sqrt)` of the dispersion, principal root.
pub fn epsilon_of_k(k: Complex64, mu: f64) -> (Complex64, Complex64) {
    let s = epsilon_squared(k, mu).sqrt();
    (s, -s)
}

/// Wavevector with `eps_k = eps`: `cos 2k = (1 + mu^2 - eps^2) / (2 mu)`.
pub fn k_from_epsilon(eps: Complex64, mu: f64) -> Complex64 {
    ((1.0 + mu * mu - eps * eps) / (2.0 * mu)).acos() / 2.0
}

/// The three terms of the quantization equation, in order.
pub fn quantization_terms(k: Complex64, mu: f64, gamma: f64, n_sites: usize) -> [Complex64; 3] {
    let n = n_sites as f64;
    let e2 = epsilon_squared(k, mu);
    let g2 = gamma * gamma;
    let diff = |m: f64| (i() * m * k).exp() - (-i() * m * k).exp();
    [
        (e2 - g2 - 1.0) * diff(n - 2.0),
        mu * diff(n - 4.0),
        mu * (g2 + e2) * diff(n),
    ]
}

pub fn quantization_residual(k: Complex64, mu: f64, gamma: f64, n_sites: usize) -> Complex64 {
    quantization_terms(k, mu, gamma, n_sites).iter().sum()
}

/// `|sum of terms| / sum of |terms|`; 0 when every term vanishes.
pub fn relative_quantization_residual(k: Complex64, mu: f64, gamma: f64, n_sites: usize) -> f64 {
    let t = quantization_terms(k, mu, gamma, n_sites);
    let scale: f64 = t.iter().map(|z| z.norm()).sum();
    if scale == 0.0 || !scale.is_finite() {
        return 0.0;
    }
    t.iter().sum::<Complex64>().norm() / scale
}

/// Quantization equation along `k = i kappa`:
/// `(eps^2 - gamma^2 - 1) sinh((N-2) kappa) + mu sinh((N-4) kappa)
///  + mu (gamma^2 + eps^2) sinh(N kappa)`, `eps^2 = 1 + mu^2 - 2 mu cosh(2 kappa)`.
pub fn evanescent_residual(kappa: f64, mu: f64, gamma: f64, n_sites: usize) -> f64 {
    let n = n_sites as f64;
    let e2 = 1.0 + mu * mu - 2.0 * mu * (2.0 * kappa).cosh();
    let g2 = gamma * gamma;
    (e2 - g2 - 1.0) * ((n - 2.0) * kappa).sinh() + mu * ((n - 4.0) * kappa).sinh() + mu * (g2 + e2) * (n * kappa).sinh()
}

/// Same sign as [`evanescent_residual`] but divided by
/// `cosh(N kappa) (1 + gamma^2 + |eps^2|)`, evaluated without overflow.
fn evanescent_scaled(kappa: f64, mu: f64, gamma: f64, n_sites: usize) -> f64 {
    let n = n_sites as f64;
    let e2 = 1.0 + mu * mu - 2.0 * mu * (2.0 * kappa).cosh();
    let g2 = gamma * gamma;
    // sinh(a kappa) / cosh(N kappa)
    let ratio = |a: f64| {
        let x = kappa.abs();
        let s = ((a - n) * x).exp() - (-(a + n) * x).exp();
        kappa.signum() * s / (1.0 + (-2.0 * n * x).exp())
    };
    let f = (e2 - g2 - 1.0) * ratio(n - 2.0) + mu * ratio(n - 4.0) + mu * (g2 + e2) * ratio(n);
    f / (1.0 + g2 + e2.abs())
}

/// Terms of the quantization equation on `k = i kappa` divided by
/// `cosh(N kappa)`, parametrized by `delta = gamma^2 + eps^2` so the
/// cancellation between `gamma^2` and `-eps^2` is carried exactly.
fn evanescent_terms_by_delta(delta: f64, mu: f64, gamma: f64, n_sites: usize) -> Option<([f64; 3], f64)> {
    let n = n_sites as f64;
    let g2 = gamma * gamma;
    let cosh2 = (1.0 + mu * mu + g2 - delta) / (2.0 * mu);
    if cosh2 < 1.0 {
        return None;
    }
    let kappa = 0.5 * cosh2.acosh();
    let ratio = |a: f64| {
        let s = ((a - n) * kappa).exp() - (-(a + n) * kappa).exp();
        s / (1.0 + (-2.0 * n * kappa).exp())
    };
    Some((
        [
            (delta - 2.0 * g2 - 1.0) * ratio(n - 2.0),
            mu * ratio(n - 4.0),
            mu * delta * ratio(n),
        ],
        kappa,
    ))
}

/// Re-polish an evanescent root in the `delta` variable. Returns
/// `(kappa, eps^2 + gamma^2, relative residual)`.
fn polish_by_delta(kappa: f64, mu: f64, gamma: f64, n_sites: usize) -> Option<(f64, f64, f64)> {
    let g2 = gamma * gamma;
    let delta0 = g2 + 1.0 + mu * mu - 2.0 * mu * (2.0 * kappa).cosh();
    let f = |d: f64| evanescent_terms_by_delta(d, mu, gamma, n_sites).map_or(f64::NAN, |(t, _)| t.iter().sum());
    let mut width = 1e-12 * (1.0 + delta0.abs()) + 4.0 * f64::EPSILON * g2;
    for _ in 0..60 {
        let (a, b) = (delta0 - width, delta0 + width);
        let (fa, fb) = (f(a), f(b));
        if fa.is_finite() && fb.is_finite() && fa.signum() != fb.signum() {
            let d = brent(&f, a, b, 0.0);
            let (t, kappa) = evanescent_terms_by_delta(d, mu, gamma, n_sites)?;
            let scale: f64 = t.iter().map(|x| x.abs()).sum();
            let rel = if scale == 0.0 { 0.0 } else { t.iter().sum::<f64>().abs() / scale };
            return Some((kappa, d, rel));
        }
        width *= 4.0;
    }
    None
}

/// Real form of the quantization equation for real `k` (the complex
/// residual is `2i` times this).
fn real_quantization(k: f64, mu: f64, gamma: f64, n_sites: usize) -> f64 {
    let n = n_sites as f64;
    let e2 = 1.0 + mu * mu - 2.0 * mu * (2.0 * k).cos();
    let g2 = gamma * gamma;
    (e2 - g2 - 1.0) * ((n - 2.0) * k).sin() + mu * ((n - 4.0) * k).sin() + mu * (g2 + e2) * (n * k).sin()
}

/// Brent's method on a bracketing interval `[a, b]` with `f(a) f(b) <= 0`.
fn brent(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    b
}

/// Sign-change scan of `f` on `grid`, each bracket polished by Brent.
/// Scan chunks run in parallel; output order follows the grid.
fn scan_roots(f: impl Fn(f64) -> f64 + Sync, grid: &[f64]) -> Vec<f64> {
    use rayon::prelude::*;
    let values: Vec<f64> = grid.par_iter().map(|&x| f(x)).collect();
    (0..grid.len().saturating_sub(1))
        .into_par_iter()
        .filter_map(|j| {
            let (fa, fb) = (values[j], values[j + 1]);
            if !(fa.is_finite() && fb.is_finite()) {
                return None;
            }
            if fa == 0.0 {
                return Some(grid[j]);
            }
            if fa.signum() != fb.signum() && fb != 0.0 {
                return Some(brent(&f, grid[j], grid[j + 1], 1e-16));
            }
            None
        })
        .collect()
}

/// Number of distinct positive real-k levels on the EP locus: the `(N-2)/2`
/// nonzero level pairs minus those supplied by evanescent roots. This is
/// `(N-2)/2` for `mu > 1` and `(N-4)/2` for `mu < 1`, except in the window
/// `mu_c(N) < mu < 1` where the imaginary pair has turned real.
pub fn expected_real_level_count(mu: f64, gamma: f64, n_sites: usize, root_tolerance: f64) -> Result<usize, BetheError> {
    let pairs = (n_sites - 2) / 2;
    let evanescent = evanescent_levels(mu, gamma, n_sites, root_tolerance)?.len();
    pairs.checked_sub(evanescent).ok_or(BetheError::RootCountMismatch {
        found: evanescent,
        expected: pairs,
        grid: 400 * n_sites,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealRootSet {
    /// Distinct real wavevectors in `(0, pi/2)`, one per level pair.
    pub wavevectors: Vec<f64>,
    /// Two entries (both branches) per wavevector.
    pub roots: Vec<BetheRoot>,
    pub on_ep_locus: bool,
    pub grid_points: usize,
}

impl RealRootSet {
    /// Real eigenvalues `+-eps_k`, sorted ascending.
    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.roots.iter().map(|r| r.epsilon.re).collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

/// Real-k roots of the quantization equation on `(0, pi)`.
///
/// `k = pi/2` makes every sine in the equation vanish for even `N` and is
/// discarded as trivial; `k` and `pi - k` give the same level and are
/// merged by eigenvalue. On the EP locus the number of levels is checked
/// against [`expected_real_level_count`], refining the grid up to five
/// times before giving up.
pub fn solve_real_k(mu: f64, gamma: f64, n_sites: usize, root_tolerance: f64) -> Result<RealRootSet, BetheError> {
    check_closed_form(n_sites, mu)?;
    let on_locus = on_ep_locus(mu, gamma, n_sites)?;
    let expected = if on_locus {
        expected_real_level_count(mu, gamma, n_sites, root_tolerance)?
    } else {
        0
    };
    let mut points = 40 * n_sites;
    let mut last_found = 0;
    for _ in 0..6 {
        let grid: Vec<f64> = (1..points).map(|j| PI * j as f64 / points as f64).collect();
        let raw = scan_roots(|k| real_quantization(k, mu, gamma, n_sites), &grid);
        let mut ks: Vec<f64> = Vec::new();
        let mut energies: Vec<f64> = Vec::new();
        for k in raw {
            if (k - FRAC_PI_2).abs() < 1e-8 || k < 1e-8 || PI - k < 1e-8 {
                continue;
            }
            let k_rep = if k > FRAC_PI_2 { PI - k } else { k };
            let eps = epsilon_of_k(Complex64::new(k_rep, 0.0), mu).0.re;
            if energies.iter().any(|&e| (e - eps).abs() <= 1e-10 * (1.0 + mu)) {
                continue;
            }
            energies.push(eps);
            ks.push(k_rep);
        }
        last_found = ks.len();
        if !on_locus || ks.len() == expected {
            ks.sort_by(f64::total_cmp);
            let mut roots = Vec::with_capacity(2 * ks.len());
            for &k in &ks {
                let kc = Complex64::new(k, 0.0);
                let residual = relative_quantization_residual(kc, mu, gamma, n_sites);
                if residual > root_tolerance {
                    return Err(BetheError::NotConverged { k, residual });
                }
                let (plus, minus) = epsilon_of_k(kc, mu);
                for (branch, eps) in [(Branch::Plus, plus), (Branch::Minus, minus)] {
                    roots.push(BetheRoot {
                        k: kc,
                        branch,
                        epsilon: Complex64::new(eps.re, 0.0),
                        residual,
                        sector: Sector::RealAxis,
                    });
                }
            }
            return Ok(RealRootSet {
                wavevectors: ks,
                roots,
                on_ep_locus: on_locus,
                grid_points: points,
            });
        }
        points *= 2;
    }
    Err(BetheError::RootCountMismatch {
        found: last_found,
        expected,
        grid: points / 2,
    })
}

/// The exact zero-energy roots `k = +-(i/2) ln mu`.
pub fn zero_mode_roots(mu: f64, gamma: f64, n_sites: usize) -> Result<[BetheRoot; 2], BetheError> {
    check_closed_form(n_sites, mu)?;
    let kappa = 0.5 * mu.ln();
    let make = |k: Complex64, branch| BetheRoot {
        k,
        branch,
        epsilon: Complex64::new(0.0, 0.0),
        residual: relative_quantization_residual(k, mu, gamma, n_sites),
        sector: Sector::ImaginaryAxis,
    };
    Ok([
        make(Complex64::new(0.0, kappa), Branch::Plus),
        make(Complex64::new(0.0, -kappa), Branch::Minus),
    ])
}

fn on_ep_locus(mu: f64, gamma: f64, n_sites: usize) -> Result<bool, BetheError> {
    let g = gamma_ep(mu, n_sites)?;
    Ok(((gamma - g) / g).abs() < 1e-12)
}

/// Roots of the quantization equation on `k = i kappa`, `kappa > 0`.
///
/// On the EP locus the exact zero-mode root `kappa = |ln mu| / 2` is divided
/// out before scanning, so a nearby evanescent root cannot cancel its sign
/// change, and is then reported exactly. Returns both energy branches per
/// root, each also reported at the equivalent `pi + i kappa` with
/// [`Sector::ShiftedImaginaryAxis`].
pub fn solve_evanescent(mu: f64, gamma: f64, n_sites: usize, root_tolerance: f64) -> Result<Vec<BetheRoot>, BetheError> {
    check_closed_form(n_sites, mu)?;
    let n = n_sites as f64;
    let kappa_max = ((n - 1.0) / 2.0 * mu.ln().abs()).max(mu.ln().abs()) * 1.5 + 2.0;
    let points = 400 * n_sites;
    let grid: Vec<f64> = (1..=points).map(|j| kappa_max * j as f64 / points as f64).collect();
    let zero_kappa = 0.5 * mu.ln().abs();
    let on_locus = on_ep_locus(mu, gamma, n_sites)?;
    let kappas = if on_locus {
        scan_roots(|x| evanescent_scaled(x, mu, gamma, n_sites) / (x - zero_kappa), &grid)
    } else {
        scan_roots(|x| evanescent_scaled(x, mu, gamma, n_sites), &grid)
    };
    let mut found = Vec::with_capacity(kappas.len() + 1);
    if on_locus {
        let k = Complex64::new(0.0, zero_kappa);
        let residual = relative_quantization_residual(k, mu, gamma, n_sites);
        found.push((zero_kappa, Complex64::new(0.0, 0.0), residual));
    }
    for kappa in kappas {
        let (kappa, delta, residual) =
            polish_by_delta(kappa, mu, gamma, n_sites).ok_or(BetheError::NotConverged { k: kappa, residual: f64::NAN })?;
        found.push((kappa, Complex64::new(delta - gamma * gamma, 0.0).sqrt(), residual));
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    for (kappa, eps, residual) in found {
        if residual > root_tolerance {
            return Err(BetheError::NotConverged { k: kappa, residual });
        }
        let k = Complex64::new(0.0, kappa);
        // N is even, so every term is invariant under k -> pi + k.
        let shifted = Complex64::new(PI, kappa);
        for (branch, e) in [(Branch::Plus, eps), (Branch::Minus, -eps)] {
            for (k, sector) in [(k, Sector::ImaginaryAxis), (shifted, Sector::ShiftedImaginaryAxis)] {
                out.push(BetheRoot {
                    k,
                    branch,
                    epsilon: e,
                    residual,
                    sector,
                });
            }
        }
    }
    Ok(out)
}

/// Energies of the evanescent roots with imaginary energy, `+i|eps|`
/// first. Empty for `mu > 1`.
pub fn imaginary_pair(mu: f64, gamma: f64, n_sites: usize, root_tolerance: f64) -> Result<Vec<Complex64>, BetheError> {
    let roots = solve_evanescent(mu, gamma, n_sites, root_tolerance)?;
    let mut out: Vec<Complex64> = roots
        .iter()
        .filter(|r| r.sector == Sector::ImaginaryAxis && r.epsilon.re == 0.0 && r.epsilon.im != 0.0)
        .map(|r| r.epsilon)
        .collect();
    out.sort_by(|a, b| b.im.total_cmp(&a.im));
    Ok(out)
}

/// Energies `+|eps|` or `+i|eps|` of the evanescent roots other than the
/// zero mode, one per level pair.
pub fn evanescent_levels(mu: f64, gamma: f64, n_sites: usize, root_tolerance: f64) -> Result<Vec<Complex64>, BetheError> {
    Ok(solve_evanescent(mu, gamma, n_sites, root_tolerance)?
        .into_iter()
        .filter(|r| r.sector == Sector::ImaginaryAxis && r.branch == Branch::Plus && r.epsilon.norm() != 0.0)
        .map(|r| r.epsilon)
        .collect())
}

/// Spectrum assembled from the closed forms: `+-eps_k` over real roots,
/// a doubly counted zero, and `+-eps` for every other evanescent root (the
/// imaginary pair, or an in-gap real pair near `mu = 1`). Sorted by real
/// then imaginary part.
pub fn bethe_spectrum(mu: f64, gamma: f64, n_sites: usize, root_tolerance: f64) -> Result<Vec<Complex64>, BetheError> {
    let real = solve_real_k(mu, gamma, n_sites, root_tolerance)?;
    let mut spectrum: Vec<Complex64> = real.energies().into_iter().map(|e| Complex64::new(e, 0.0)).collect();
    spectrum.push(Complex64::new(0.0, 0.0));
    spectrum.push(Complex64::new(0.0, 0.0));
    for e in evanescent_levels(mu, gamma, n_sites, root_tolerance)? {
        spectrum.extend([e, -e]);
    }
    spectrum.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(spectrum)
}

/// Which zero mode: of `h_ssh` (right) or of `h_ssh^dagger` (left).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroModeWavefunction {
    pub n_sites: usize,
    pub mu: f64,
    pub amplitudes: Vec<Complex64>,
    pub omega: f64,
    pub side: Side,
}

/// Dirac normalization `Omega = mu^(N/2-1) sqrt((1 - mu^2) / (2 - 2 mu^N))`.
pub fn zero_mode_normalization(n_sites: usize, mu: f64) -> Result<f64, BetheError> {
    check_closed_form(n_sites, mu)?;
    let n = n_sites as f64;
    Ok(mu.powf(n / 2.0 - 1.0) * ((1.0 - mu * mu) / (2.0 - 2.0 * mu.powf(n))).sqrt())
}

/// Coalescing zero mode: odd sites `Omega mu^(1-j)`, even sites
/// `-+i Omega mu^(j - N/2)` (minus for the right vector, plus for the left),
/// `j = 1..N/2`.
pub fn zero_mode(n_sites: usize, mu: f64, side: Side) -> Result<ZeroModeWavefunction, BetheError> {
    let omega = zero_mode_normalization(n_sites, mu)?;
    let half = n_sites / 2;
    let sign = match side {
        Side::Right => -1.0,
        Side::Left => 1.0,
    };
    let mut amplitudes = Vec::with_capacity(n_sites);
    for j in 1..=half {
        let jf = j as f64;
        amplitudes.push(Complex64::new(omega * mu.powf(1.0 - jf), 0.0));
        amplitudes.push(Complex64::new(0.0, sign * omega * mu.powf(jf - half as f64)));
    }
    Ok(ZeroModeWavefunction {
        n_sites,
        mu,
        amplitudes,
        omega,
        side,
    })
}

/// Large-`N` / small-`mu` approximation of the imaginary-energy pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EvanescentApprox {
    /// `sigma = +` localized on site 1, `sigma = -` on site N.
    pub vectors: [Vec<Complex64>; 2],
    /// `+i mu^(1-N/2)` and `-i mu^(1-N/2)`.
    pub eigenvalues: [Complex64; 2],
    /// `(1-N)/2 ln mu`.
    pub kappa: f64,
}

/// Asymptotic end modes `psi^sigma = ((1+sigma)|1> + (1-sigma)|N>)/2` with
/// `eps = +-i mu^(1-N/2)`. Only meaningful for `0 < mu < 1`.
pub fn evanescent_modes(n_sites: usize, mu: f64) -> Result<EvanescentApprox, BetheError> {
    check_closed_form(n_sites, mu)?;
    if mu >= 1.0 {
        return Err(BetheError::OutOfDomain(format!(
            "evanescent imaginary modes require 0 < mu < 1, got {mu}"
        )));
    }
    let g = gamma_ep(mu, n_sites)?;
    let mut plus = vec![Complex64::new(0.0, 0.0); n_sites];
    let mut minus = plus.clone();
    for sigma in [1.0f64, -1.0] {
        let target = if sigma > 0.0 { &mut plus } else { &mut minus };
        target[0] = Complex64::new(0.5 * (1.0 + sigma), 0.0);
        target[n_sites - 1] = Complex64::new(0.5 * (1.0 - sigma), 0.0);
    }
    Ok(EvanescentApprox {
        vectors: [plus, minus],
        eigenvalues: [Complex64::new(0.0, g), Complex64::new(0.0, -g)],
        kappa: (1.0 - n_sites as f64) / 2.0 * mu.ln(),
    })
}

/// `B/D = C/A = e^{-ik} sqrt((1 - mu e^{2ik}) / (1 - mu e^{-2ik}))`,
/// principal root.
pub fn amplitude_ratio(k: Complex64, mu: f64) -> Result<Complex64, BetheError> {
    let num = 1.0 - mu * (2.0 * i() * k).exp();
    let den = 1.0 - mu * (-2.0 * i() * k).exp();
    if den.norm() <= 1e-14 * (1.0 + mu) {
        return Err(BetheError::Pole { k });
    }
    Ok((-i() * k).exp() * (num / den).sqrt())
}

/// Bethe wavefunction with amplitudes fixed by the two boundary rows, for
/// a root `k` with energy `epsilon` (nonzero). Dirac-normalized.
pub fn bethe_wavefunction(
    k: Complex64,
    epsilon: Complex64,
    mu: f64,
    gamma: f64,
    n_sites: usize,
) -> Result<Vec<Complex64>, BetheError> {
    check_closed_form(n_sites, mu)?;
    if epsilon.norm() == 0.0 {
        return Err(BetheError::OutOfDomain("zero energy has no plane-wave ratio; use zero_mode".into()));
    }
    let e = |m: f64| (i() * m * k).exp();
    // C/A = B/D for the branch carrying this epsilon.
    let r = ((-i() * k).exp() - mu * (i() * k).exp()) / epsilon;
    let n = n_sites as f64;
    let ig = Complex64::new(0.0, gamma);
    let row1 = [(ig - epsilon) * e(1.0) + r * e(2.0), (ig - epsilon) * r * e(-1.0) + e(-2.0)];
    let row2 = [
        e(n - 1.0) - (ig + epsilon) * r * e(n),
        r * e(-(n - 1.0)) - (ig + epsilon) * e(-n),
    ];
    let pick = if row1[0].norm() + row1[1].norm() >= row2[0].norm() + row2[1].norm() {
        row1
    } else {
        row2
    };
    let (a, d) = (pick[1], -pick[0]);
    let f: Vec<Complex64> = (1..=n_sites)
        .map(|l| {
            let lf = l as f64;
            if l % 2 == 1 {
                a * e(lf) + r * d * e(-lf)
            } else {
                r * a * e(lf) + d * e(-lf)
            }
        })
        .collect();
    let nrm = norm2(&f);
    Ok(f.iter().map(|z| z / nrm).collect())
}

/// `||h v - eps v||_inf` for the chain at the given parameters.
pub fn chain_residual(v: &[Complex64], epsilon: Complex64, mu: f64, gamma: f64) -> Result<f64, BetheError> {
    let h: ComplexMatrix = build_ssh(v.len(), mu, gamma)?;
    Ok(h.mul_vec(v)
        .iter()
        .zip(v)
        .map(|(x, y)| (x - epsilon * y).norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{inner, overlap};
    use crate::model::pt_vector;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dispersion_examples() {
        let (p, m) = epsilon_of_k(c(FRAC_PI_2, 0.0), 1.0);
        assert!((p - c(2.0, 0.0)).norm() < 1e-15);
        assert!((m + c(2.0, 0.0)).norm() < 1e-15);
        for mu in [0.3, 2.0, 7.5] {
            let (z, _) = epsilon_of_k(c(0.0, 0.5 * f64::ln(mu)), mu);
            assert!(z.norm() < 1e-7, "{z}"); // sqrt of a rounding-level eps^2
            assert!(epsilon_squared(c(0.0, 0.5 * f64::ln(mu)), mu).norm() < 1e-14);
        }
        // Direct evaluation: 1 + 2.25 - 3 cos(0.6)
        let expected = (3.25 - 3.0 * 0.6f64.cos()).sqrt();
        let (p, _) = epsilon_of_k(c(0.3, 0.0), 1.5);
        assert!((p.re - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_mode_wavevector_solves_quantization() {
        let k = c(0.0, 0.5 * 2.0f64.ln());
        let r = quantization_residual(k, 2.0, 0.25, 6);
        assert!(r.norm() < 1e-13, "{r}");
        assert!(evanescent_residual(0.5 * 2.0f64.ln(), 2.0, 0.25, 6).abs() < 1e-13);
        for (mu, n) in [(0.4, 10), (3.0, 8)] {
            assert_eq!(evanescent_residual(0.0, mu, 0.3, n), 0.0);
        }
    }

    #[test]
    fn generic_point_is_not_a_root() {
        let mu = 1.5f64;
        let r = quantization_residual(c(PI / 7.0, 0.0), mu, mu.powi(-2), 6);
        assert!(r.norm() > 1e-3);
    }

    #[test]
    fn exact_evanescent_root_approaches_asymptotic_kappa() {
        for (mu, n) in [(0.4f64, 20usize), (0.3, 30)] {
            let g = gamma_ep(mu, n).unwrap();
            let asym = (1.0 - n as f64) / 2.0 * mu.ln();
            let roots = solve_evanescent(mu, g, n, 1e-9).unwrap();
            let top = roots.iter().map(|r| r.k.im).fold(0.0, f64::max);
            assert!((top - asym).abs() < 1e-3 * asym, "{top} vs {asym}");
            assert!(roots.iter().any(|r| r.epsilon == Complex64::new(0.0, 0.0)));
        }
    }

    #[test]
    fn real_roots_for_printed_cases() {
        let set = solve_real_k(2.0, 0.25, 6, 1e-9).unwrap();
        assert_eq!(set.wavevectors.len(), 2);
        let expected_hi = (350.0 + 2.0 * 3553f64.sqrt()).sqrt() / 8.0;
        let expected_lo = (350.0 - 2.0 * 3553f64.sqrt()).sqrt() / 8.0;
        let e = set.energies();
        for (got, want) in e.iter().zip([-expected_hi, -expected_lo, expected_lo, expected_hi]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        let set = solve_real_k(0.5, 4.0, 6, 1e-9).unwrap();
        assert_eq!(set.wavevectors.len(), 1);
        let want = (2.0 * 238f64.sqrt() - 25.0).sqrt() / 2.0;
        assert!((set.energies()[1] - want).abs() < 1e-12);
        for root in &set.roots {
            let q = relative_quantization_residual(root.k, 0.5, 4.0, 6);
            assert!(q <= 1e-9);
            let b = epsilon_of_k(root.k, 0.5);
            assert!(root.epsilon == b.0 || root.epsilon == b.1);
        }
    }

    #[test]
    fn uniform_chain_is_rejected() {
        assert_eq!(solve_real_k(1.0, 1.0, 6, 1e-9), Err(BetheError::DegenerateUniformChain));
        assert_eq!(zero_mode(6, 1.0, Side::Right), Err(BetheError::DegenerateUniformChain));
        assert!(matches!(evanescent_modes(6, 1.5), Err(BetheError::OutOfDomain(_))));
    }

    fn phase_invariant_match(a: &[Complex64], b: &[Complex64]) -> f64 {
        overlap(a, b)
    }

    #[test]
    fn zero_mode_matches_printed_vectors_after_gauge() {
        use crate::model::sign_gauge;
        let printed1 = [c(0.0, 4.0), c(1.0, 0.0), c(0.0, -2.0), c(-2.0, 0.0), c(0.0, 1.0), c(4.0, 0.0)];
        let printed2 = [c(0.0, 1.0), c(4.0, 0.0), c(0.0, -2.0), c(-2.0, 0.0), c(0.0, 4.0), c(1.0, 0.0)];
        let g = sign_gauge(6);
        for (mu, printed) in [(2.0, printed1), (0.5, printed2)] {
            let psi = zero_mode(6, mu, Side::Right).unwrap();
            let gauged: Vec<Complex64> = psi.amplitudes.iter().zip(&g).map(|(z, s)| z * *s).collect();
            assert!((phase_invariant_match(&gauged, &printed) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_mode_identities() {
        for (n, mu) in [(6, 2.0), (10, 0.5), (30, 1.5)] {
            let psi = zero_mode(n, mu, Side::Right).unwrap();
            let eta = zero_mode(n, mu, Side::Left).unwrap();
            assert!((norm2(&psi.amplitudes) - 1.0).abs() < 1e-14);
            assert!(inner(&eta.amplitudes, &psi.amplitudes).norm() < 1e-13);
            let ip: Vec<Complex64> = psi.amplitudes.iter().rev().map(|z| z * c(0.0, 1.0)).collect();
            for j in 0..n {
                assert!((eta.amplitudes[j] - ip[j]).norm() < 1e-15);
                assert!((eta.amplitudes[j] - psi.amplitudes[j].conj()).norm() < 1e-15);
            }
            let g = gamma_ep(mu, n).unwrap();
            assert!(chain_residual(&psi.amplitudes, c(0.0, 0.0), mu, g).unwrap() < 1e-12);
            // PT maps the zero mode onto itself up to phase.
            assert!((overlap(&pt_vector(&psi.amplitudes), &psi.amplitudes) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn evanescent_approximation() {
        let approx = evanescent_modes(6, 0.5).unwrap();
        assert_eq!(approx.eigenvalues[0], c(0.0, 4.0));
        assert_eq!(approx.vectors[0][0], c(1.0, 0.0));
        assert_eq!(approx.vectors[1][5], c(1.0, 0.0));
        assert_eq!(approx.vectors[0].iter().filter(|z| z.norm() > 0.0).count(), 1);
        let exact = (2.0 * 238f64.sqrt() + 25.0).sqrt() / 2.0;
        let rel = (4.0 - exact) / exact;
        assert!(rel > 0.06 && rel < 0.08, "{rel}");
    }

    #[test]
    fn exact_imaginary_pair_for_printed_case() {
        let pair = imaginary_pair(0.5, 4.0, 6, 1e-9).unwrap();
        let exact = (2.0 * 238f64.sqrt() + 25.0).sqrt() / 2.0;
        assert_eq!(pair.len(), 2);
        assert!((pair[0] - c(0.0, exact)).norm() < 1e-12, "{pair:?}");
        assert!((pair[1] + c(0.0, exact)).norm() < 1e-12);
        assert!(imaginary_pair(2.0, 0.25, 6, 1e-9).unwrap().is_empty());
    }

    #[test]
    fn amplitude_ratio_properties() {
        for k in [0.1, 0.7, 1.3, 2.9] {
            for mu in [0.4, 1.5, 3.0] {
                let r = amplitude_ratio(c(k, 0.0), mu).unwrap();
                assert!((r.norm() - 1.0).abs() < 1e-14);
            }
        }
        // k = (i/2) ln mu: numerator 1 - mu e^{2ik} = 1 - mu/mu vanishes, so B = C = 0.
        let r = amplitude_ratio(c(0.0, 0.5 * 2.0f64.ln()), 2.0).unwrap();
        assert!(r.norm() < 1e-7);
        // k = -(i/2) ln mu hits the pole instead: A = D = 0.
        assert!(matches!(
            amplitude_ratio(c(0.0, -0.5 * 2.0f64.ln()), 2.0),
            Err(BetheError::Pole { .. })
        ));
    }

    #[test]
    fn amplitude_ratio_satisfies_bulk_equations() {
        // Plane waves with C = rA, B = rD obey every interior row of the chain.
        let (k, mu, n) = (c(0.3, 0.0), 1.5, 12);
        let r = amplitude_ratio(k, mu).unwrap();
        let eps = ((-c(0.0, 1.0) * k).exp() - mu * (c(0.0, 1.0) * k).exp()) / r;
        assert!((eps * eps - epsilon_squared(k, mu)).norm() < 1e-13);
        let (a, d) = (c(1.0, 0.0), c(0.7, -0.2));
        let f: Vec<Complex64> = (1..=n)
            .map(|l| {
                let e = (c(0.0, 1.0) * k * l as f64).exp();
                if l % 2 == 1 {
                    a * e + r * d / e
                } else {
                    r * a * e + d / e
                }
            })
            .collect();
        let h = build_ssh(n, mu, 0.123).unwrap();
        let hf = h.mul_vec(&f);
        for row in 1..n - 1 {
            assert!((hf[row] - eps * f[row]).norm() < 1e-12);
        }
    }

    #[test]
    fn bethe_wavefunctions_are_eigenvectors() {
        for (mu, n) in [(2.0, 6), (1.5, 14), (0.5, 10), (0.3, 20)] {
            let g = gamma_ep(mu, n).unwrap();
            let h = build_ssh(n, mu, g).unwrap();
            let set = solve_real_k(mu, g, n, 1e-9).unwrap();
            for root in &set.roots {
                let f = bethe_wavefunction(root.k, root.epsilon, mu, g, n).unwrap();
                let res = chain_residual(&f, root.epsilon, mu, g).unwrap();
                assert!(res <= 1e-10 * h.norm_inf(), "mu={mu} n={n} k={} res={res}", root.k);
            }
        }
    }

    #[test]
    fn imaginary_pair_turns_real_near_uniform_chain() {
        use crate::spectral::{eig_split, Precision};
        // (mu, evanescent levels, real-k levels) for N = 6; the pair crosses
        // zero at mu ~ 0.83702.
        for (mu, evanescent, real_k) in [(0.836, 1, 1), (0.8372, 1, 1), (0.848, 0, 2)] {
            let n = 6;
            let g = gamma_ep(mu, n).unwrap();
            let levels = evanescent_levels(mu, g, n, 1e-9).unwrap();
            assert_eq!(levels.len(), evanescent, "mu={mu}");
            assert_eq!(solve_real_k(mu, g, n, 1e-9).unwrap().wavevectors.len(), real_k, "mu={mu}");
            let chain = crate::model::build_ssh_on_locus(n, mu).unwrap();
            let es = eig_split(&chain.matrix, &chain.tail, 1e-11, Precision::Auto).unwrap();
            let mut want = bethe_spectrum(mu, g, n, 1e-9).unwrap();
            for z in &es.eigenvalues {
                let (j, d) = want
                    .iter()
                    .enumerate()
                    .map(|(j, y)| (j, (z - y).norm()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                assert!(d < 1e-9, "mu={mu}: {z} unmatched ({d:e})");
                want.remove(j);
            }
        }
        let in_gap = evanescent_levels(0.8372, gamma_ep(0.8372, 6).unwrap(), 6, 1e-9).unwrap()[0];
        assert!(in_gap.im == 0.0 && in_gap.re > 0.0 && in_gap.re < 1.0 - 0.8372);
    }
}
