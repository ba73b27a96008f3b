//! Model parameters and every matrix of the construction: the Majorana ring
//! core matrix, the non-Hermitian SSH chain, the block transformation that
//! splits the ring into two SSH chains, and the exceptional-point coupling.
//!
//! Indices are 0-based in code. In comments, sites are 1-based as in the
//! usual lattice notation; Majorana basis index `2j-1` carries `a_j` and
//! `2j` carries `b_j`.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use thiserror::Error;

use crate::dd::DoubleDouble;
use crate::matrix::{ComplexMatrix, MatrixError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("site count N = {0} must be even and at least 4")]
    InvalidSiteCount(usize),
    #[error("chemical potential mu = {0} must be positive and finite")]
    InvalidMu(f64),
    #[error("non-Hermiticity gamma = {0} must be non-negative and finite")]
    InvalidGamma(f64),
    #[error("parameter {name} = {value} is not finite")]
    NonFinite { name: &'static str, value: f64 },
    #[error("impurity potentials are not in the PT configuration (mu_L = {mu_left}, mu_R = {mu_right})")]
    NotPtConfiguration {
        mu_left: Complex64,
        mu_right: Complex64,
    },
    #[error("matrix has dimension {actual}, expected {expected}")]
    WrongDimension { expected: usize, actual: usize },
    #[error("block transform leaves cross-block weight {weight:e} (threshold {threshold:e})")]
    NotBlockDiagonal { weight: f64, threshold: f64 },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn check_sites(n: usize) -> Result<(), ModelError> {
    if n < 4 || n % 2 != 0 {
        return Err(ModelError::InvalidSiteCount(n));
    }
    Ok(())
}

fn check_mu(mu: f64) -> Result<(), ModelError> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(ModelError::InvalidMu(mu));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<(), ModelError> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(ModelError::InvalidGamma(gamma));
    }
    Ok(())
}

/// Physical parameters of the Kitaev ring with two impurities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    n_sites: usize,
    t: f64,
    delta: f64,
    mu: f64,
    gamma: f64,
    mu_left: Complex64,
    mu_right: Complex64,
}

impl ModelParams {
    /// PT configuration at the symmetric point: `t = delta = 1`,
    /// `mu_L = i gamma`, `mu_R = -i gamma`.
    pub fn pt(n_sites: usize, mu: f64, gamma: f64) -> Result<Self, ModelError> {
        Self::new(n_sites, 1.0, 1.0, mu, gamma)
    }

    /// PT configuration with explicit hopping and pairing amplitudes.
    pub fn new(n_sites: usize, t: f64, delta: f64, mu: f64, gamma: f64) -> Result<Self, ModelError> {
        check_sites(n_sites)?;
        check_mu(mu)?;
        check_gamma(gamma)?;
        for (name, value) in [("t", t), ("delta", delta)] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { name, value });
            }
        }
        Ok(Self {
            n_sites,
            t,
            delta,
            mu,
            gamma,
            mu_left: Complex64::new(0.0, gamma),
            mu_right: Complex64::new(0.0, -gamma),
        })
    }

    /// Replaces the two impurity potentials (general configuration).
    pub fn with_impurities(mut self, mu_left: Complex64, mu_right: Complex64) -> Result<Self, ModelError> {
        for (name, value) in [
            ("mu_L.re", mu_left.re),
            ("mu_L.im", mu_left.im),
            ("mu_R.re", mu_right.re),
            ("mu_R.im", mu_right.im),
        ] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { name, value });
            }
        }
        self.mu_left = mu_left;
        self.mu_right = mu_right;
        Ok(self)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn mu_left(&self) -> Complex64 {
        self.mu_left
    }
    pub fn mu_right(&self) -> Complex64 {
        self.mu_right
    }

    /// `mu_L = -mu_R = conj(mu_R)`, both purely imaginary.
    pub fn is_pt_configuration(&self) -> bool {
        self.mu_left.re == 0.0 && self.mu_right.re == 0.0 && self.mu_left == self.mu_right.conj()
    }

    /// Whether `gamma` sits on the exceptional-point locus `mu^(1 - N/2)`.
    pub fn is_on_ep_locus(&self, rel_tol: f64) -> bool {
        let g = self.mu.powf(1.0 - self.n_sites as f64 / 2.0);
        (self.gamma - g).abs() <= rel_tol * g
    }
}

/// Coupling at which the SSH chain sits at its exceptional point,
/// `gamma = mu^(1 - N/2)`.
pub fn gamma_ep(mu: f64, n_sites: usize) -> Result<f64, ModelError> {
    Ok(gamma_ep_extended(mu, n_sites)?.to_f64())
}

/// [`gamma_ep`] in double-double precision.
pub fn gamma_ep_extended(mu: f64, n_sites: usize) -> Result<DoubleDouble, ModelError> {
    check_mu(mu)?;
    check_sites(n_sites)?;
    let mu = DoubleDouble::from_f64(mu);
    let mut p = DoubleDouble::ONE;
    for _ in 0..n_sites / 2 - 1 {
        p = p * mu;
    }
    Ok(DoubleDouble::ONE / p)
}

/// SSH chain on its exceptional-point locus, split as `matrix + tail` where
/// `tail` holds the part of `+-i gamma` lost when rounding to `f64`.
#[derive(Debug, Clone)]
pub struct LocusChain {
    pub matrix: ComplexMatrix,
    pub tail: ComplexMatrix,
    /// `gamma` rounded to `f64`, as stored in `matrix`.
    pub gamma: f64,
}

pub fn build_ssh_on_locus(n_sites: usize, mu: f64) -> Result<LocusChain, ModelError> {
    let g = gamma_ep_extended(mu, n_sites)?;
    let matrix = build_ssh(n_sites, mu, g.hi())?;
    let mut tail = ComplexMatrix::zeros(n_sites);
    tail[(0, 0)] = Complex64::new(0.0, g.lo());
    tail[(n_sites - 1, n_sites - 1)] = Complex64::new(0.0, -g.lo());
    Ok(LocusChain {
        matrix,
        tail,
        gamma: g.hi(),
    })
}

/// Sign carried by the inter-cell (`mu`) bonds of the SSH chain.
///
/// The chain Hamiltonian is written with `-mu` on the bonds `2l -> 2l+1`;
/// the printed 6-site example matrices carry `+mu`. The two are related by
/// the diagonal gauge [`sign_gauge`] and share the same spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DimerSign {
    #[default]
    Minus,
    Plus,
}

/// `N x N` non-Hermitian SSH chain: hopping 1 on bonds `(2l-1, 2l)`,
/// `-mu` on bonds `(2l, 2l+1)`, and `+i gamma`, `-i gamma` on the first and
/// last diagonal entries.
pub fn build_ssh(n_sites: usize, mu: f64, gamma: f64) -> Result<ComplexMatrix, ModelError> {
    build_ssh_with(n_sites, mu, gamma, DimerSign::Minus)
}

pub fn build_ssh_with(n_sites: usize, mu: f64, gamma: f64, sign: DimerSign) -> Result<ComplexMatrix, ModelError> {
    check_sites(n_sites)?;
    check_mu(mu)?;
    if !gamma.is_finite() {
        return Err(ModelError::InvalidGamma(gamma));
    }
    let inter = match sign {
        DimerSign::Minus => -mu,
        DimerSign::Plus => mu,
    };
    let mut h = ComplexMatrix::zeros(n_sites);
    for l in 0..n_sites - 1 {
        let c = if l % 2 == 0 { 1.0 } else { inter };
        h[(l, l + 1)] = Complex64::new(c, 0.0);
        h[(l + 1, l)] = Complex64::new(c, 0.0);
    }
    h[(0, 0)] = Complex64::new(0.0, gamma);
    h[(n_sites - 1, n_sites - 1)] = Complex64::new(0.0, -gamma);
    Ok(h)
}

/// Diagonal `+-1` gauge `G` with `G * build_ssh_with(.., Minus) * G =
/// build_ssh_with(.., Plus)`: the pattern `(+, +, -, -, +, +, ...)`.
pub fn sign_gauge(n_sites: usize) -> Vec<f64> {
    (0..n_sites).map(|j| if (j / 2) % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

/// Exchange permutation `|l> -> |N + 1 - l>` as a matrix.
pub fn parity(n_sites: usize) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(n_sites);
    for l in 0..n_sites {
        p[(l, n_sites - 1 - l)] = Complex64::new(1.0, 0.0);
    }
    p
}

/// `P conj(h) P`: the PT image of a matrix.
pub fn pt_image(h: &ComplexMatrix) -> ComplexMatrix {
    let n = h.dim();
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = h[(n - 1 - i, n - 1 - j)].conj();
        }
    }
    out
}

/// PT image of a vector, `P conj(v)`.
pub fn pt_vector(v: &[Complex64]) -> Vec<Complex64> {
    v.iter().rev().map(|z| z.conj()).collect()
}

/// Largest entrywise deviation between `h` and its PT image.
pub fn pt_defect(h: &ComplexMatrix) -> f64 {
    (&pt_image(h) - h).max_abs()
}

/// `2N x 2N` Majorana core matrix of the ring, basis `(a_1, b_1, ..., a_N, b_N)`.
///
/// Ring bonds `b_j a_{j+1}` carry `-(i/4)(t + delta)` and `b_{j+1} a_j`
/// carry `-(i/4)(t - delta)` (periodic, `a_{N+1} = a_1`); dimers
/// `a_j b_j` carry `-(i/2) mu` except at sites 1 and N/2+1, where `mu_L` and
/// `mu_R` take its place. Each coupling `c` at `(p, q)` is paired with
/// `-c` at `(q, p)`, so the matrix is antisymmetric and Hermitian whenever
/// the impurity potentials are real.
pub fn build_majorana_ring(params: &ModelParams) -> ComplexMatrix {
    let n = params.n_sites;
    let dim = 2 * n;
    let mut h = ComplexMatrix::zeros(dim);
    let a = |j: usize| 2 * (j % n); // a_{j+1} for 0-based site j
    let b = |j: usize| 2 * (j % n) + 1;
    let mut couple = |p: usize, q: usize, c: Complex64| {
        h[(p, q)] += c;
        h[(q, p)] -= c;
    };
    let minus_half_i = Complex64::new(0.0, -0.5);
    let forward = minus_half_i * 0.5 * (params.t + params.delta);
    let backward = minus_half_i * 0.5 * (params.t - params.delta);
    for j in 0..n {
        couple(b(j), a(j + 1), forward);
        if backward != Complex64::new(0.0, 0.0) {
            couple(b(j + 1), a(j), backward);
        }
    }
    let right_site = n / 2;
    for j in 0..n {
        let potential = match j {
            0 => params.mu_left,
            _ if j == right_site => params.mu_right,
            _ => Complex64::new(params.mu, 0.0),
        };
        if potential != Complex64::new(0.0, 0.0) {
            couple(a(j), b(j), minus_half_i * potential);
        }
    }
    h
}

/// Change of basis to the `|sigma, m>` vectors, as columns in the `|j>`
/// basis, ordered `(+, 1..N)` then `(-, 1..N)`:
///
/// `|s, 2l-1> = e^{-i pi/4}/2 (|2l> + i s |2N+3-2l>)`,
/// `|s, 2l>   = e^{+i pi/4}/2 (|2l+1> - i s |2N+2-2l>)`, with `|2N+1> = |1>`.
///
/// Columns have squared norm 1/2 ([`BLOCK_TRANSFORM_GRAM`]); the matrix is
/// not unitary and is inverted explicitly where needed.
pub fn build_block_transform(n_sites: usize) -> Result<ComplexMatrix, ModelError> {
    check_sites(n_sites)?;
    let dim = 2 * n_sites;
    let idx = |one_based: usize| (one_based - 1) % dim;
    let lower = Complex64::from_polar(0.5, -FRAC_PI_4);
    let upper = Complex64::from_polar(0.5, FRAC_PI_4);
    let i = Complex64::new(0.0, 1.0);
    let mut u = ComplexMatrix::zeros(dim);
    for (block, sigma) in [1.0, -1.0].into_iter().enumerate() {
        for m in 1..=n_sites {
            let col = block * n_sites + m - 1;
            if m % 2 == 1 {
                let l = (m + 1) / 2;
                u[(idx(2 * l), col)] += lower;
                u[(idx(dim + 3 - 2 * l), col)] += lower * i * sigma;
            } else {
                let l = m / 2;
                u[(idx(2 * l + 1), col)] += upper;
                u[(idx(dim + 2 - 2 * l), col)] -= upper * i * sigma;
            }
        }
    }
    Ok(u)
}

/// Squared norm of every column of [`build_block_transform`]; its Gram
/// matrix is this constant times the identity.
pub const BLOCK_TRANSFORM_GRAM: f64 = 0.5;

/// Which SSH orientation a block matched when fitting the scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockOrientation {
    /// `h_plus = s * h_ssh`.
    Direct,
    /// `h_plus = s * h_ssh^dagger`.
    Adjoint,
}

/// Fitted complex scale relating the `sigma = +` block to a reference
/// SSH matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFit {
    pub scale: Complex64,
    pub orientation: BlockOrientation,
    /// `max |h_plus - s * ref| / max |h_plus|`.
    pub relative_residual: f64,
}

#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub h_plus: ComplexMatrix,
    pub h_minus: ComplexMatrix,
    pub transform: ComplexMatrix,
    pub gram_constant: f64,
    /// Largest off-diagonal-block entry after the similarity transform.
    pub cross_block_weight: f64,
    /// `h_plus` and `h_minus` embedded back in the `|j>` basis.
    pub embedded_plus: ComplexMatrix,
    pub embedded_minus: ComplexMatrix,
}

impl BlockDecomposition {
    /// `max |[H_+, H_-]|` of the embedded blocks.
    pub fn commutator_norm(&self) -> f64 {
        self.embedded_plus
            .commutator(&self.embedded_minus)
            .map(|c| c.max_abs())
            .unwrap_or(f64::INFINITY)
    }

    /// Least-squares complex scale `s` with `h_plus ~ s * reference` (or its
    /// adjoint, whichever fits better).
    pub fn fit_scale(&self, reference: &ComplexMatrix) -> Result<ScaleFit, ModelError> {
        if reference.dim() != self.h_plus.dim() {
            return Err(ModelError::WrongDimension {
                expected: self.h_plus.dim(),
                actual: reference.dim(),
            });
        }
        let fit = |r: &ComplexMatrix, orientation| {
            let num: Complex64 = r
                .as_slice()
                .iter()
                .zip(self.h_plus.as_slice())
                .map(|(x, y)| x.conj() * y)
                .sum();
            let den: f64 = r.as_slice().iter().map(|x| x.norm_sqr()).sum();
            let scale = num / den;
            let resid = (&self.h_plus - &r.scale(scale)).max_abs() / self.h_plus.max_abs().max(f64::MIN_POSITIVE);
            ScaleFit {
                scale,
                orientation,
                relative_residual: resid,
            }
        };
        let direct = fit(reference, BlockOrientation::Direct);
        let adjoint = fit(&reference.adjoint(), BlockOrientation::Adjoint);
        Ok(if adjoint.relative_residual < direct.relative_residual {
            adjoint
        } else {
            direct
        })
    }
}

/// Splits the ring matrix into its two commuting `N x N` blocks via the
/// similarity `U^{-1} h U` with `U` from [`build_block_transform`].
pub fn decompose_blocks(h: &ComplexMatrix, n_sites: usize) -> Result<BlockDecomposition, ModelError> {
    check_sites(n_sites)?;
    if h.dim() != 2 * n_sites {
        return Err(ModelError::WrongDimension {
            expected: 2 * n_sites,
            actual: h.dim(),
        });
    }
    let u = build_block_transform(n_sites)?;
    let u_inv = u.inverse()?;
    let b = &(&u_inv * h) * &u;

    let mut cross = 0.0f64;
    for i in 0..n_sites {
        for j in 0..n_sites {
            cross = cross
                .max(b[(i, n_sites + j)].norm())
                .max(b[(n_sites + i, j)].norm());
        }
    }
    let threshold = 1e-12 * h.max_abs().max(1.0);
    if cross > threshold {
        return Err(ModelError::NotBlockDiagonal {
            weight: cross,
            threshold,
        });
    }
    let h_plus = b.sub_block(0, n_sites);
    let h_minus = b.sub_block(n_sites, n_sites);

    let embed = |block: &ComplexMatrix, offset: usize| {
        let mut full = ComplexMatrix::zeros(2 * n_sites);
        for i in 0..n_sites {
            for j in 0..n_sites {
                full[(offset + i, offset + j)] = block[(i, j)];
            }
        }
        &(&u * &full) * &u_inv
    };
    let embedded_plus = embed(&h_plus, 0);
    let embedded_minus = embed(&h_minus, n_sites);
    Ok(BlockDecomposition {
        h_plus,
        h_minus,
        transform: u,
        gram_constant: BLOCK_TRANSFORM_GRAM,
        cross_block_weight: cross,
        embedded_plus,
        embedded_minus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn extended_gamma_matches_rational_value() {
        // 1.5^-2 = 4/9; the double-double value carries the digits f64 drops.
        let g = gamma_ep_extended(1.5, 6).unwrap();
        let nine_g = g * DoubleDouble::from_f64(9.0);
        assert!((nine_g - DoubleDouble::from_f64(4.0)).abs().to_f64() < 1e-30);
        assert_eq!(gamma_ep(2.0, 6).unwrap(), 0.25);
        assert_eq!(gamma_ep(0.5, 6).unwrap(), 4.0);
        let chain = build_ssh_on_locus(6, 2.0).unwrap();
        assert_eq!(chain.tail.max_abs(), 0.0);
        assert_eq!(chain.matrix[(0, 0)], c(0.0, 0.25));
    }

    /// The 6-site matrix printed for mu = 2 (+mu convention).
    fn printed_m1() -> ComplexMatrix {
        let r = |v: [Complex64; 6]| v.to_vec();
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let two = c(2.0, 0.0);
        ComplexMatrix::from_rows(&[
            r([c(0.0, 0.25), one, z, z, z, z]),
            r([one, z, two, z, z, z]),
            r([z, two, z, one, z, z]),
            r([z, z, one, z, two, z]),
            r([z, z, z, two, z, one]),
            r([z, z, z, z, one, c(0.0, -0.25)]),
        ])
        .unwrap()
    }

    #[test]
    fn gamma_ep_values() {
        assert_eq!(gamma_ep(2.0, 6).unwrap(), 0.25);
        assert_eq!(gamma_ep(0.5, 6).unwrap(), 4.0);
        for n in [4, 6, 10, 30] {
            assert_eq!(gamma_ep(1.0, n).unwrap(), 1.0);
        }
        assert_eq!(gamma_ep(0.0, 6), Err(ModelError::InvalidMu(0.0)));
        assert_eq!(gamma_ep(-1.0, 6), Err(ModelError::InvalidMu(-1.0)));
        assert_eq!(gamma_ep(2.0, 7), Err(ModelError::InvalidSiteCount(7)));
        assert_eq!(gamma_ep(2.0, 2), Err(ModelError::InvalidSiteCount(2)));
    }

    #[test]
    fn printed_matrices_are_the_plus_convention() {
        assert_eq!(build_ssh_with(6, 2.0, 0.25, DimerSign::Plus).unwrap(), printed_m1());
        let m2 = build_ssh_with(6, 0.5, 4.0, DimerSign::Plus).unwrap();
        assert_eq!(m2[(0, 0)], c(0.0, 4.0));
        assert_eq!(m2[(5, 5)], c(0.0, -4.0));
        assert_eq!(m2[(1, 2)], c(0.5, 0.0));
        assert_eq!(m2[(3, 4)], c(0.5, 0.0));
        assert_eq!(m2[(0, 1)], c(1.0, 0.0));
    }

    #[test]
    fn gauge_maps_minus_to_plus() {
        for n in [4, 6, 10] {
            let minus = build_ssh(n, 1.7, 0.3).unwrap();
            let plus = build_ssh_with(n, 1.7, 0.3, DimerSign::Plus).unwrap();
            let g: Vec<Complex64> = sign_gauge(n).into_iter().map(|s| c(s, 0.0)).collect();
            let gm = ComplexMatrix::from_diagonal(&g);
            assert_eq!(&(&gm * &minus) * &gm, plus);
        }
    }

    #[test]
    fn ssh_rejects_bad_parameters() {
        assert!(matches!(build_ssh(5, 1.0, 0.0), Err(ModelError::InvalidSiteCount(5))));
        assert!(matches!(build_ssh(6, 0.0, 0.0), Err(ModelError::InvalidMu(_))));
        assert!(matches!(build_ssh(6, 1.0, f64::NAN), Err(ModelError::InvalidGamma(_))));
    }

    #[test]
    fn hermitian_limit_and_sparsity() {
        let h = build_ssh(4, 1.0, 0.0).unwrap();
        assert_eq!(h, h.adjoint());
        assert_eq!(h[(0, 1)], c(1.0, 0.0));
        assert_eq!(h[(1, 2)], c(-1.0, 0.0));
        assert_eq!(h[(2, 3)], c(1.0, 0.0));
        for n in [4, 8, 16] {
            let h = build_ssh(n, 1.3, 0.7).unwrap();
            let diag = h.diagonal().iter().filter(|z| z.norm() != 0.0).count();
            assert_eq!(diag, 2);
            assert_eq!(h.count_nonzero() - diag, 2 * (n - 1));
        }
    }

    #[test]
    fn ssh_is_pt_symmetric() {
        for n in [4, 6, 12, 30] {
            let h = build_ssh(n, 0.7, gamma_ep(0.7, n).unwrap()).unwrap();
            assert_eq!(pt_defect(&h), 0.0);
        }
    }

    #[test]
    fn params_validation_and_pt_configuration() {
        assert!(ModelParams::pt(3, 1.0, 0.0).is_err());
        assert!(ModelParams::pt(6, -1.0, 0.0).is_err());
        assert!(ModelParams::pt(6, 1.0, -0.1).is_err());
        let p = ModelParams::pt(6, 2.0, 0.25).unwrap();
        assert!(p.is_pt_configuration());
        assert!(p.is_on_ep_locus(1e-12));
        let q = p.with_impurities(c(0.0, 0.0), c(2.0, 0.0)).unwrap();
        assert!(!q.is_pt_configuration());
    }

    #[test]
    fn ring_is_antisymmetric_and_hermitian_without_gamma() {
        let p = ModelParams::pt(4, 1.0, 0.0).unwrap();
        let h = build_majorana_ring(&p);
        assert_eq!(h.dim(), 8);
        assert_eq!(h, h.adjoint());
        assert_eq!(h, h.transpose().scale(c(-1.0, 0.0)));
        let p = ModelParams::pt(6, 2.0, 0.25).unwrap();
        let h = build_majorana_ring(&p);
        assert_eq!(h, h.transpose().scale(c(-1.0, 0.0)));
        // impurity block (gamma/2)(|1><2| - |N+1><N+2| - h.c.)
        assert_eq!(h[(0, 1)], c(0.125, 0.0));
        assert_eq!(h[(1, 0)], c(-0.125, 0.0));
        assert_eq!(h[(6, 7)], c(-0.125, 0.0));
        assert_eq!(h[(7, 6)], c(0.125, 0.0));
        // ring closure b_N a_1
        assert_eq!(h[(11, 0)], c(0.0, -0.5));
        assert_eq!(h[(0, 11)], c(0.0, 0.5));
    }

    fn is_single_open_path(h: &ComplexMatrix) -> bool {
        let n = h.dim();
        let neighbours: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && h[(i, j)].norm() != 0.0).collect())
            .collect();
        let ends = neighbours.iter().filter(|v| v.len() == 1).count();
        if ends != 2 || neighbours.iter().any(|v| v.len() > 2 || v.is_empty()) {
            return false;
        }
        // connected?
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            if !seen[i] {
                seen[i] = true;
                stack.extend(&neighbours[i]);
            }
        }
        seen.into_iter().all(|s| s)
    }

    #[test]
    fn vanishing_left_impurity_opens_the_ring() {
        let p = ModelParams::pt(6, 1.5, 0.0)
            .unwrap()
            .with_impurities(c(0.0, 0.0), c(1.5, 0.0))
            .unwrap();
        assert!(is_single_open_path(&build_majorana_ring(&p)));
        let closed = ModelParams::pt(6, 1.5, 0.3).unwrap();
        assert!(!is_single_open_path(&build_majorana_ring(&closed)));
    }

    #[test]
    fn block_transform_columns() {
        let n = 6;
        let u = build_block_transform(n).unwrap();
        let col = u.column(0);
        let nz: Vec<usize> = (0..2 * n).filter(|&i| col[i].norm() != 0.0).collect();
        // rows 2 and 2N+1 = 1 (1-based)
        assert_eq!(nz, vec![0, 1]);
        let gram = &u.adjoint() * &u;
        let target = ComplexMatrix::identity(2 * n).scale(c(BLOCK_TRANSFORM_GRAM, 0.0));
        assert!((&gram - &target).max_abs() < 1e-15);
    }

    #[test]
    fn ring_splits_into_scaled_ssh_blocks() {
        let n = 6;
        let p = ModelParams::pt(n, 2.0, 0.25).unwrap();
        let h = build_majorana_ring(&p);
        let d = decompose_blocks(&h, n).unwrap();
        assert!(d.cross_block_weight < 1e-14);
        assert!(d.commutator_norm() < 1e-13);
        assert!((&d.h_minus - &d.h_plus.adjoint()).max_abs() < 1e-14);
        let sum = &d.embedded_plus + &d.embedded_minus;
        assert!((&sum - &h).max_abs() < 1e-14);
        let fit = d.fit_scale(&build_ssh(n, 2.0, 0.25).unwrap()).unwrap();
        assert!((fit.scale - c(0.5, 0.0)).norm() < 1e-14, "{fit:?}");
        assert!(fit.relative_residual < 1e-14);
        assert_eq!(fit.orientation, BlockOrientation::Adjoint);
    }

    #[test]
    fn hermitian_ring_gives_hermitian_blocks() {
        let p = ModelParams::pt(8, 0.6, 0.0).unwrap();
        let d = decompose_blocks(&build_majorana_ring(&p), 8).unwrap();
        assert!((&d.h_plus - &d.h_plus.adjoint()).max_abs() < 1e-14);
    }

    #[test]
    fn decompose_rejects_wrong_dimension() {
        let h = ComplexMatrix::zeros(10);
        assert!(matches!(decompose_blocks(&h, 6), Err(ModelError::WrongDimension { .. })));
    }
}
