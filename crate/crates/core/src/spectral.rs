//! Biorthogonal eigendecomposition, exceptional-point detection and the
//! mode census of the chain spectra.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dd::DoubleDouble;
use crate::matrix::{inner, norm2, normalized, overlap, ComplexMatrix};
use crate::schur::{self, SchurFailure};

/// Largest dimension accepted by [`eig`].
pub const MAX_DIM: usize = 4096;

/// Above this dimension [`Precision::Auto`] falls back to `f64`.
pub const EXTENDED_PRECISION_MAX_DIM: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("QR iteration did not converge for eigenvalue index {index}")]
    NoConvergence { index: usize },
    #[error("dimension {dim} exceeds the solver ceiling {max}")]
    DimensionOverflow { dim: usize, max: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("tail dimension {tail} does not match matrix dimension {head}")]
    TailDimension { head: usize, tail: usize },
    #[error("eigenpair {index} ({side}) has residual {residual:e} above bound {bound:e}")]
    Residual {
        index: usize,
        side: &'static str,
        residual: f64,
        bound: f64,
    },
    #[error("left/right pairing conflict at index {index}: nearest left eigenvalue is {distance:e} away")]
    PairingConflict { index: usize, distance: f64 },
    #[error("eigenvalue {index} = {value} is neither real nor imaginary within tolerance (off the EP locus?)")]
    Unclassifiable { index: usize, value: Complex64 },
}

impl From<SchurFailure> for SpectralError {
    fn from(f: SchurFailure) -> Self {
        match f {
            SchurFailure::NoConvergence { index } => SpectralError::NoConvergence { index },
        }
    }
}

/// Working precision of the dense solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// Double-double up to [`EXTENDED_PRECISION_MAX_DIM`], `f64` above.
    #[default]
    Auto,
    Double,
    Extended,
}

/// Tolerances shared by the spectral routines. All are relative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Residual bound as a multiple of `||A||_inf`.
    pub residual: f64,
    /// Real/imaginary classification threshold as a multiple of `max |eps|`.
    pub class: f64,
    /// Bound on `|<w|v>|` and on `1 - |<v_i|v_j>|` for coalescence.
    pub ep: f64,
    /// Bound on the relative residual of quantization-equation roots.
    pub root: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-11,
            class: 1e-8,
            ep: 1e-6,
            root: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub dim: usize,
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// Dirac-normalized right eigenvectors.
    pub right_vectors: Vec<Vec<Complex64>>,
    /// Dirac-normalized eigenvectors of `A^dagger` for `conj(lambda_i)`.
    pub left_vectors: Vec<Vec<Complex64>>,
    /// `max(||A v - lambda v||_inf, ||A^dagger w - conj(lambda) w||_inf)`.
    pub residuals: Vec<f64>,
    /// `<w_i|v_i>` of the Dirac-normalized pair.
    pub biorth_norms: Vec<Complex64>,
    pub matrix_norm: f64,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_modulus(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn eigen_raw(a: &ComplexMatrix, tail: Option<&ComplexMatrix>, precision: Precision) -> Result<schur::RawEigen, SchurFailure> {
    let extended = match precision {
        Precision::Auto => a.dim() <= EXTENDED_PRECISION_MAX_DIM,
        Precision::Double => false,
        Precision::Extended => true,
    };
    if extended {
        schur::eigen_split::<DoubleDouble>(a, tail)
    } else {
        schur::eigen_split::<f64>(a, tail)
    }
}

fn residual(a: &ComplexMatrix, lambda: Complex64, v: &[Complex64]) -> f64 {
    a.mul_vec(v)
        .iter()
        .zip(v)
        .map(|(x, y)| (x - lambda * y).norm())
        .fold(0.0, f64::max)
}

/// Full eigensystem with `residual_tolerance` relative to `||A||_inf`, in the
/// default precision.
pub fn eig(a: &ComplexMatrix, residual_tolerance: f64) -> Result<EigenSystem, SpectralError> {
    eig_with(a, residual_tolerance, Precision::Auto)
}

pub fn eig_with(a: &ComplexMatrix, residual_tolerance: f64, precision: Precision) -> Result<EigenSystem, SpectralError> {
    eig_impl(a, None, residual_tolerance, precision)
}

/// Eigensystem of `head + tail`, where `tail` holds the rounding remainders
/// of entries not representable in `f64` (see
/// [`crate::model::build_ssh_on_locus`]). Residuals are checked against
/// `head`.
pub fn eig_split(
    head: &ComplexMatrix,
    tail: &ComplexMatrix,
    residual_tolerance: f64,
    precision: Precision,
) -> Result<EigenSystem, SpectralError> {
    if tail.dim() != head.dim() {
        return Err(SpectralError::TailDimension {
            head: head.dim(),
            tail: tail.dim(),
        });
    }
    eig_impl(head, Some(tail), residual_tolerance, precision)
}

fn eig_impl(
    a: &ComplexMatrix,
    tail: Option<&ComplexMatrix>,
    residual_tolerance: f64,
    precision: Precision,
) -> Result<EigenSystem, SpectralError> {
    let n = a.dim();
    if n > MAX_DIM {
        return Err(SpectralError::DimensionOverflow { dim: n, max: MAX_DIM });
    }
    if !a.is_finite() || tail.is_some_and(|t| !t.is_finite()) {
        return Err(SpectralError::NonFinite);
    }
    let right = eigen_raw(a, tail, precision)?;
    let adj = a.adjoint();
    let adj_tail = tail.map(ComplexMatrix::adjoint);
    let left = eigen_raw(&adj, adj_tail.as_ref(), precision)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (x, y) = (right.values[i], right.values[j]);
        x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
    });

    let norm = a.norm_inf();
    let scale = norm.max(f64::MIN_POSITIVE);
    let bound = residual_tolerance * scale;
    let pairing_bound = 1e-6 * norm.max(1.0);

    let mut used = vec![false; n];
    let mut sys = EigenSystem {
        dim: n,
        eigenvalues: Vec::with_capacity(n),
        right_vectors: Vec::with_capacity(n),
        left_vectors: Vec::with_capacity(n),
        residuals: Vec::with_capacity(n),
        biorth_norms: Vec::with_capacity(n),
        matrix_norm: norm,
    };
    for (pos, &i) in order.iter().enumerate() {
        let lambda = right.values[i];
        let target = lambda.conj();
        // Greedy nearest unmatched left eigenvalue.
        let (j, distance) = (0..n)
            .filter(|&j| !used[j])
            .map(|j| (j, (left.values[j] - target).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("one unmatched left eigenvalue per right eigenvalue");
        if distance > pairing_bound {
            return Err(SpectralError::PairingConflict { index: pos, distance });
        }
        used[j] = true;
        let v = right.vectors[i].clone();
        let w = left.vectors[j].clone();
        let r_right = residual(a, lambda, &v);
        let r_left = residual(&adj, target, &w);
        if r_right > bound {
            return Err(SpectralError::Residual {
                index: pos,
                side: "right",
                residual: r_right,
                bound,
            });
        }
        if r_left > bound {
            return Err(SpectralError::Residual {
                index: pos,
                side: "left",
                residual: r_left,
                bound,
            });
        }
        sys.biorth_norms.push(inner(&w, &v));
        sys.residuals.push(r_right.max(r_left));
        sys.eigenvalues.push(lambda);
        sys.right_vectors.push(v);
        sys.left_vectors.push(w);
    }
    Ok(sys)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoHermiticity {
    pub holds: bool,
    pub unmatched: Vec<Complex64>,
}

/// Whether the multiset of eigenvalues is closed under complex conjugation
/// within `tol` (absolute).
pub fn pseudo_hermiticity_check(eigenvalues: &[Complex64], tol: f64) -> PseudoHermiticity {
    let n = eigenvalues.len();
    let mut partner = vec![false; n];
    let mut unmatched = Vec::new();
    for i in 0..n {
        if partner[i] {
            continue;
        }
        let z = eigenvalues[i];
        if z.im.abs() <= tol {
            partner[i] = true;
            continue;
        }
        let target = z.conj();
        let best = (0..n)
            .filter(|&j| j != i && !partner[j])
            .map(|j| (j, (eigenvalues[j] - target).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1));
        match best {
            Some((j, d)) if d <= tol => {
                partner[i] = true;
                partner[j] = true;
            }
            _ => {
                partner[i] = true;
                unmatched.push(z);
            }
        }
    }
    PseudoHermiticity {
        holds: unmatched.is_empty(),
        unmatched,
    }
}

/// A set of eigenpairs that have merged into one level.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalescenceCluster {
    pub indices: Vec<usize>,
    /// Coalesced pairs in the cluster: members minus the rank of their right vectors.
    pub pairs: usize,
    /// Mean of the member eigenvalues.
    pub eigenvalue: Complex64,
    /// Normalized coalesced eigenvector; the largest entry is real positive.
    pub vector: Vec<Complex64>,
    /// Largest `|<w_i|v_i>|` over members.
    pub max_biorth_norm: f64,
    /// Smallest pairwise `|<v_i|v_j>|` over members.
    pub min_overlap: f64,
}

/// Rotates `v` so its largest-modulus entry is real and positive.
pub fn fix_phase(v: &[Complex64]) -> Vec<Complex64> {
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(Complex64::new(1.0, 0.0));
    if pivot.norm() == 0.0 {
        return v.to_vec();
    }
    let phase = pivot.conj() / pivot.norm();
    v.iter().map(|z| z * phase).collect()
}

/// Groups eigenpairs with vanishing biorthogonal norm (`|<w|v>| <= ep_tolerance`)
/// whose eigenvalues agree within `ep_tolerance` times `max(1, max |lambda|)`.
/// A group is a cluster when its right vectors are linearly dependent; a
/// vector counts as dependent when its part orthogonal to the others is at
/// most `sqrt(2 ep_tolerance)`, which for two members is
/// `|<v_i|v_j>| >= 1 - ep_tolerance`.
pub fn detect_coalescence(es: &EigenSystem, ep_tolerance: f64) -> Vec<CoalescenceCluster> {
    let n = es.len();
    let scale = es.max_modulus().max(1.0);
    let candidate: Vec<bool> = es.biorth_norms.iter().map(|b| b.norm() <= ep_tolerance).collect();
    let close = |i: usize, j: usize| (es.eigenvalues[i] - es.eigenvalues[j]).norm() <= ep_tolerance * scale;
    let mut assigned = vec![false; n];
    let mut clusters = Vec::new();
    for i in 0..n {
        if assigned[i] || !candidate[i] {
            continue;
        }
        let mut members = vec![i];
        let mut k = 0;
        while k < members.len() {
            let m = members[k];
            for j in 0..n {
                if !members.contains(&j) && !assigned[j] && candidate[j] && close(m, j) {
                    members.push(j);
                }
            }
            k += 1;
        }
        members.sort_unstable();
        let vectors: Vec<&[Complex64]> = members.iter().map(|&m| es.right_vectors[m].as_slice()).collect();
        let pairs = members.len() - numerical_rank(&vectors, (2.0 * ep_tolerance).sqrt());
        if pairs == 0 {
            continue;
        }
        for &m in &members {
            assigned[m] = true;
        }
        let mean = members.iter().map(|&m| es.eigenvalues[m]).sum::<Complex64>() / members.len() as f64;
        let mut min_overlap = 1.0f64;
        for (a, &p) in members.iter().enumerate() {
            for &q in &members[a + 1..] {
                min_overlap = min_overlap.min(overlap(&es.right_vectors[p], &es.right_vectors[q]));
            }
        }
        let max_biorth = members
            .iter()
            .map(|&m| es.biorth_norms[m].norm())
            .fold(0.0, f64::max);
        clusters.push(CoalescenceCluster {
            vector: fix_phase(&normalized(&es.right_vectors[members[0]])),
            indices: members,
            pairs,
            eigenvalue: mean,
            max_biorth_norm: max_biorth,
            min_overlap,
        });
    }
    clusters
}

/// Rank by modified Gram-Schmidt: a vector whose normalized remainder falls
/// to `threshold` or below adds nothing.
fn numerical_rank(vectors: &[&[Complex64]], threshold: f64) -> usize {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for v in vectors {
        let mut r = normalized(v);
        for _ in 0..2 {
            for b in &basis {
                let c = inner(b, &r);
                for (x, y) in r.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let norm = norm2(&r);
        if norm > threshold {
            basis.push(r.iter().map(|z| z / norm).collect());
        }
    }
    basis.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeClass {
    RealScattering,
    ZeroCoalescing,
    ImaginaryEvanescent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeRecord {
    pub eigenvalue: Complex64,
    pub mode_class: ModeClass,
    pub biorth_norm: Complex64,
    pub matched_bethe_root: Option<Complex64>,
}

/// Counts of imaginary levels, coalescing pairs and real scattering levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCensus {
    pub n_imaginary: usize,
    pub n_ep: usize,
    pub n_scattering: usize,
    pub n_sites: usize,
}

impl ModeCensus {
    /// `n_I + 2 n_EP + n_S = N`.
    pub fn is_consistent(&self) -> bool {
        self.n_imaginary + 2 * self.n_ep + self.n_scattering == self.n_sites
    }

    pub fn as_tuple(&self) -> (usize, usize, usize) {
        (self.n_imaginary, self.n_ep, self.n_scattering)
    }

    /// Coalescing pairs count as two states, plus the imaginary pair.
    pub fn edge_modes(&self) -> usize {
        2 * self.n_ep + self.n_imaginary
    }
}

/// Assigns every eigenvalue one [`ModeClass`] and tallies the census.
pub fn classify_modes(es: &EigenSystem, tol: &Tolerances) -> Result<(Vec<ModeRecord>, ModeCensus), SpectralError> {
    let scale = es.max_modulus();
    let cut = tol.class * scale;
    let clusters = detect_coalescence(es, tol.ep);
    let in_zero_cluster = |i: usize| {
        clusters
            .iter()
            .any(|c| c.indices.contains(&i) && c.eigenvalue.norm() <= cut)
    };
    let mut records = Vec::with_capacity(es.len());
    let mut census = ModeCensus {
        n_imaginary: 0,
        n_ep: 0,
        n_scattering: 0,
        n_sites: es.dim,
    };
    for (i, &eps) in es.eigenvalues.iter().enumerate() {
        let class = if eps.norm() <= cut && in_zero_cluster(i) && es.biorth_norms[i].norm() <= tol.ep {
            ModeClass::ZeroCoalescing
        } else if eps.im.abs() <= cut {
            census.n_scattering += 1;
            ModeClass::RealScattering
        } else if eps.re.abs() <= cut {
            census.n_imaginary += 1;
            ModeClass::ImaginaryEvanescent
        } else {
            return Err(SpectralError::Unclassifiable { index: i, value: eps });
        };
        records.push(ModeRecord {
            eigenvalue: eps,
            mode_class: class,
            biorth_norm: es.biorth_norms[i],
            matched_bethe_root: None,
        });
    }
    census.n_ep = clusters
        .iter()
        .filter(|c| c.eigenvalue.norm() <= cut)
        .map(|c| c.pairs)
        .sum();
    Ok((records, census))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_majorana_ring, build_ssh, gamma_ep, ModelParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_matrix() {
        let a = ComplexMatrix::from_diagonal(&[c(1.0, 0.0), c(0.0, 2.0)]);
        let es = eig(&a, 1e-11).unwrap();
        assert_eq!(es.eigenvalues, vec![c(0.0, 2.0), c(1.0, 0.0)]);
        for v in &es.right_vectors {
            assert!((crate::matrix::norm2(v) - 1.0).abs() < 1e-15);
            assert_eq!(v.iter().filter(|z| z.norm() > 0.0).count(), 1);
        }
        for b in &es.biorth_norms {
            assert!((b.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_ceiling() {
        let a = ComplexMatrix::zeros(MAX_DIM + 1);
        assert!(matches!(eig(&a, 1e-11), Err(SpectralError::DimensionOverflow { .. })));
    }

    #[test]
    fn pseudo_hermiticity_examples() {
        assert!(pseudo_hermiticity_check(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], 1e-12).holds);
        let r = pseudo_hermiticity_check(&[c(0.0, 1.0)], 1e-12);
        assert!(!r.holds);
        assert_eq!(r.unmatched, vec![c(0.0, 1.0)]);
        assert!(pseudo_hermiticity_check(&[c(0.0, 1.0), c(0.0, -1.0), c(0.5, 0.0)], 1e-12).holds);
    }

    #[test]
    fn hermitian_matrix_has_no_coalescence() {
        let h = build_ssh(8, 1.3, 0.0).unwrap();
        let es = eig(&h, 1e-11).unwrap();
        assert!(detect_coalescence(&es, 1e-6).is_empty());
        let (_, census) = classify_modes(&es, &Tolerances::default()).unwrap();
        assert_eq!(census.as_tuple(), (0, 0, 8));
    }

    #[test]
    fn single_ep_cluster_at_zero_for_n10() {
        let mu = 1.5;
        let h = build_ssh(10, mu, gamma_ep(mu, 10).unwrap()).unwrap();
        let es = eig(&h, 1e-11).unwrap();
        let clusters = detect_coalescence(&es, 1e-6);
        assert_eq!(clusters.len(), 1);
        assert!(clusters[0].eigenvalue.norm() < 1e-12);
        assert_eq!(clusters[0].indices.len(), 2);
    }

    #[test]
    fn ring_holds_one_coalesced_pair_per_block() {
        for (n, mu) in [(6, 2.0), (10, 0.5)] {
            let h = build_majorana_ring(&ModelParams::pt(n, mu, gamma_ep(mu, n).unwrap()).unwrap());
            let es = eig(&h, 1e-11 * h.norm_inf()).unwrap();
            let (records, census) = classify_modes(&es, &Tolerances::default()).unwrap();
            assert_eq!(census.n_ep, 2);
            assert!(census.is_consistent());
            let zero = records.iter().filter(|r| r.mode_class == ModeClass::ZeroCoalescing).count();
            assert_eq!(zero, 4);
        }
    }

    #[test]
    fn generic_complex_eigenvalue_is_unclassifiable() {
        let a = ComplexMatrix::from_diagonal(&[c(1.0, 1.0), c(1.0, -1.0), c(0.5, 0.0)]);
        let es = eig(&a, 1e-11).unwrap();
        assert!(matches!(
            classify_modes(&es, &Tolerances::default()),
            Err(SpectralError::Unclassifiable { .. })
        ));
    }

    #[test]
    fn off_locus_chain_loses_the_ep() {
        // The chain spectrum stays real-or-imaginary; only the EP disappears.
        let h = build_ssh(6, 2.0, 3.0).unwrap();
        let es = eig(&h, 1e-11).unwrap();
        let (_, census) = classify_modes(&es, &Tolerances::default()).unwrap();
        assert_eq!(census.as_tuple(), (2, 0, 4));
    }

    #[test]
    fn census_examples() {
        let tol = Tolerances::default();
        for (n, mu, expected) in [(6, 2.0, (0, 1, 4)), (6, 0.5, (2, 1, 2)), (14, 0.5, (2, 1, 10))] {
            let h = build_ssh(n, mu, gamma_ep(mu, n).unwrap()).unwrap();
            let es = eig(&h, tol.residual).unwrap();
            let (records, census) = classify_modes(&es, &tol).unwrap();
            assert_eq!(census.as_tuple(), expected, "N={n} mu={mu}");
            assert!(census.is_consistent());
            assert_eq!(records.len(), n);
        }
    }

    #[test]
    fn zero_ep_tolerance_finds_nothing() {
        let h = build_ssh(6, 2.0, 0.25).unwrap();
        let es = eig(&h, 1e-11).unwrap();
        assert!(detect_coalescence(&es, 0.0).is_empty());
    }

    #[test]
    fn extended_coupling_keeps_the_zero_pair_together() {
        use crate::model::build_ssh_on_locus;
        let chain = build_ssh_on_locus(6, 1.5).unwrap();
        assert!(chain.tail[(0, 0)].im != 0.0);
        let split = eig_split(&chain.matrix, &chain.tail, 1e-11, Precision::Auto).unwrap();
        let plain = eig(&chain.matrix, 1e-11).unwrap();
        let smallest = |es: &EigenSystem| {
            let mut m: Vec<f64> = es.eigenvalues.iter().map(|z| z.norm()).collect();
            m.sort_by(f64::total_cmp);
            m[1]
        };
        assert!(smallest(&split) < 1e-14, "{}", smallest(&split));
        // Rounding gamma alone opens the pair at the square root of the offset.
        assert!(smallest(&plain) > 1e-10);
        let wrong = ComplexMatrix::zeros(5);
        assert!(matches!(
            eig_split(&chain.matrix, &wrong, 1e-11, Precision::Auto),
            Err(SpectralError::TailDimension { head: 6, tail: 5 })
        ));
    }
}
