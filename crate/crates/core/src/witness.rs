//! Inversion of multi-k rate data into Zeno susceptibilities `T_μ`, coupling
//! norms `‖H_ij‖₂`, the `C` matrix and the coherence witness `Ω`.

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, RMatrix};
use crate::propagate::{
    drive_factor, multinomial, task_seed, MeasurementDesign, Protocol, RateMode, TransitionData,
};
use crate::superop::{ordered_pairs, spectral_spread, QuantumModel, ZenoDecomposition};

/// Singular values of `M` below this fraction of `σ_max` make `W` ill-defined.
pub const RANK_TOL: f64 = 1e-10;

/// Conditioning required of automatically generated designs.
pub const DESIGN_COND_TOL: f64 = 1e-6;

/// Maximum number of jittered `k_set` retries in [`design_measurement`].
pub const DESIGN_ATTEMPTS: usize = 20;

/// Imaginary residue of `T_μ` tolerated before it is reported as an error.
pub const IMAG_ERROR_TOL: f64 = 1e-6;

/// Relative asymmetry and negativity of `C` tolerated as numerical noise.
pub const C_REL_TOL: f64 = 1e-8;

/// Negative coupling-norm radicands above `−RADICAND_TOL` are clipped to zero.
pub const RADICAND_TOL: f64 = 1e-9;

/// Bootstrap resamples for the sampled-mode `Ω` standard error.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Exact and finite-difference rates carry an `O(t‖𝓛‖₂)` truncation error in
/// `T_μ`; consistency checks there allow `ENVELOPE_FACTOR·t·‖𝓛‖₂³`.
pub const ENVELOPE_FACTOR: f64 = 1.0;

/// One susceptibility matrix `T_μ` for the ordered pair `μ = (r, s)` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct Susceptibility {
    pub mu: (usize, usize),
    pub matrix: RMatrix,
}

#[derive(Serialize, Deserialize)]
struct SusceptibilityRepr {
    mu: [usize; 2],
    matrix: linalg::RealMatrixRepr,
}

impl Serialize for Susceptibility {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SusceptibilityRepr {
            mu: [self.mu.0 + 1, self.mu.1 + 1],
            matrix: (&self.matrix).into(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Susceptibility {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SusceptibilityRepr::deserialize(d)?;
        if repr.mu[0] == 0 || repr.mu[1] == 0 {
            return Err(serde::de::Error::custom("μ indices are 1-based"));
        }
        Ok(Susceptibility {
            mu: (repr.mu[0] - 1, repr.mu[1] - 1),
            matrix: RMatrix::try_from(repr.matrix).map_err(serde::de::Error::custom)?,
        })
    }
}

/// Ground truth computed directly from the Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spectral_spread: f64,
    pub omega: f64,
    pub t_mu: Vec<Susceptibility>,
    #[serde(with = "crate::linalg::real_matrix_serde")]
    pub coupling_norms: RMatrix,
}

/// Numerical health of an extraction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `oracle` or the rate mode used.
    pub source: String,
    pub t: Option<f64>,
    pub eta: Vec<f64>,
    pub k_set: Vec<f64>,
    pub cond_m: Option<f64>,
    pub sigma_min: Option<f64>,
    pub sigma_max: Option<f64>,
    /// `‖W·M − 𝟙‖_F`.
    pub constraint_residual: Option<f64>,
    /// `max_μ |Σ_k W_μk|`.
    pub row_sum_residual: Option<f64>,
    /// Largest `‖Im T_μ‖_F` discarded.
    pub imaginary_residue: f64,
    /// `‖ΣT − (ΣT)ᵀ‖_F / 2` before symmetrization.
    pub asymmetry: f64,
    /// Sum of `|λ|` over negative eigenvalues of `C` that were clipped.
    pub clipped_mass: f64,
    /// `‖C·v‖ / ‖C‖_F` for `v_i = √d_i` (0 when `C = 0`).
    pub null_residual: f64,
    /// Negative coupling-norm radicands clipped to zero.
    pub clipped_radicands: usize,
    /// Absolute tolerance applied to the consistency checks.
    pub tolerance: f64,
}

/// Output of an extraction, from simulated rates or from the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub dims: Vec<usize>,
    pub t_mu: Vec<Susceptibility>,
    #[serde(with = "crate::linalg::real_matrix_serde")]
    pub coupling_norms: RMatrix,
    #[serde(with = "crate::linalg::real_matrix_serde")]
    pub c_matrix: RMatrix,
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
    pub diagnostics: Diagnostics,
}

impl WitnessReport {
    pub fn n(&self) -> usize {
        self.dims.len()
    }

    /// `T_μ` for `μ = (r, s)` (0-based).
    pub fn t(&self, r: usize, s: usize) -> Option<&RMatrix> {
        self.t_mu.iter().find(|x| x.mu == (r, s)).map(|x| &x.matrix)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Flat CSV with columns `quantity,i,j,value` (1-based indices, blank for scalars).
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["quantity", "i", "j", "value"])?;
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    w.write_record([
                        "coupling_norm".to_string(),
                        (i + 1).to_string(),
                        (j + 1).to_string(),
                        format!("{:e}", self.coupling_norms[(i, j)]),
                    ])?;
                }
            }
        }
        let mut scalar = |name: &str, v: Option<f64>| -> Result<()> {
            if let Some(v) = v {
                w.write_record([name, "", "", &format!("{v:e}")])?;
            }
            Ok(())
        };
        let d = &self.diagnostics;
        scalar("omega", Some(self.omega))?;
        scalar("omega_stderr", self.omega_stderr)?;
        scalar(
            "spectral_spread",
            self.ground_truth.as_ref().map(|g| g.spectral_spread),
        )?;
        scalar("omega_true", self.ground_truth.as_ref().map(|g| g.omega))?;
        scalar("cond_m", d.cond_m)?;
        scalar("sigma_min", d.sigma_min)?;
        scalar("sigma_max", d.sigma_max)?;
        scalar("clipped_mass", Some(d.clipped_mass))?;
        scalar("imaginary_residue", Some(d.imaginary_residue))?;
        scalar("asymmetry", Some(d.asymmetry))?;
        scalar("null_residual", Some(d.null_residual))?;
        w.flush()?;
        Ok(())
    }
}

/// How inconsistencies in extracted quantities are handled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Absolute size below which residues count as noise.
    pub absolute: f64,
    /// Whether larger residues are errors (`true`) or only clipped and reported.
    pub enforce: bool,
}

impl Tolerance {
    pub fn strict(absolute: f64) -> Self {
        Tolerance {
            absolute,
            enforce: true,
        }
    }

    pub fn lenient() -> Self {
        Tolerance {
            absolute: f64::INFINITY,
            enforce: false,
        }
    }
}

/// `R = D^{−1/2}·Ṗ·D^{1/2}` with `D = diag(d)`.
pub fn normalized_rates(pdot: &RMatrix, dims: &[usize]) -> Result<RMatrix> {
    let n = dims.len();
    if pdot.nrows() != n || pdot.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "rate matrix is {}x{}, expected {n}x{n}",
            pdot.nrows(),
            pdot.ncols()
        )));
    }
    if dims.contains(&0) {
        return Err(Error::DimensionMismatch(
            "block dimensions must be positive".into(),
        ));
    }
    Ok(RMatrix::from_fn(n, n, |i, j| {
        pdot[(i, j)] * (dims[j] as f64 / dims[i] as f64).sqrt()
    }))
}

/// First `n` terms of the Mian–Chowla sequence shifted to start at 0
/// (0, 1, 3, 7, 12, 20, 30, 44, ...): a greedy Sidon set.
pub fn mian_chowla(n: usize) -> Vec<u64> {
    let mut seq: Vec<u64> = Vec::with_capacity(n);
    let mut sums = std::collections::HashSet::new();
    let mut cand = 0u64;
    while seq.len() < n {
        let new_sums: Vec<u64> = seq
            .iter()
            .chain(std::iter::once(&cand))
            .map(|a| a + cand)
            .collect();
        let mut distinct = std::collections::HashSet::new();
        if new_sums
            .iter()
            .all(|s| !sums.contains(s) && distinct.insert(*s))
        {
            sums.extend(new_sums);
            seq.push(cand);
        }
        cand += 1;
    }
    seq
}

/// `M_kμ = (e^{−itkω_μ} − 1)/(ikω_μ)`, rows in `k_set` order, columns lexicographic in `(r, s)`.
pub fn modulation_matrix(design: &MeasurementDesign) -> Result<CMatrix> {
    design.validate()?;
    let freqs = design.frequencies();
    assert!(
        freqs.iter().all(|w| *w != 0.0),
        "validated designs have nonzero frequencies"
    );
    Ok(CMatrix::from_fn(
        design.k_set.len(),
        freqs.len(),
        |row, col| -drive_factor(design.t, design.k_set[row], freqs[col]),
    ))
}

fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `(σ_min, σ_max)` over the `min(rows, cols)` singular values.
pub fn singular_range(m: &CMatrix) -> (f64, f64) {
    let s = singular_values(m);
    (
        s.last().copied().unwrap_or(0.0),
        s.first().copied().unwrap_or(0.0),
    )
}

/// Constrained pseudoinverse: `W·M = 𝟙` and `W·1 = 0`, minimum Frobenius norm.
///
/// Computed as the first `m` rows of `[M | 1]⁺`, which is exactly the
/// minimum-norm solution of both constraints once `[M | 1]` has full column rank.
pub fn pseudoinverse_w(m: &CMatrix) -> Result<CMatrix> {
    let (rows, cols) = m.shape();
    if rows < cols + 1 {
        return Err(Error::InvalidDesign(format!(
            "need at least {} drive strengths for {cols} frequencies, got {rows}",
            cols + 1
        )));
    }
    let (s_min, s_max) = singular_range(m);
    if s_max.is_nan() || s_max <= 0.0 || s_min < RANK_TOL * s_max {
        return Err(Error::IllConditioned(format!(
            "M has σ_min = {s_min:.3e} against σ_max = {s_max:.3e}"
        )));
    }
    // M scales like t while the constant column does not; balancing the two
    // keeps [M | 1] as well conditioned as M itself. The minimum-norm solution
    // for M/s is s·W, so the scaling is undone exactly afterwards.
    let mut aug = CMatrix::from_element(rows, cols + 1, c(1.0));
    aug.view_mut((0, 0), (rows, cols))
        .copy_from(&(m / c(s_max)));
    let (a_min, a_max) = singular_range(&aug);
    if a_min < RANK_TOL * a_max {
        return Err(Error::IllConditioned(format!(
            "constant vector lies in the span of M's columns (σ_min[M|1] = {a_min:.3e})"
        )));
    }
    let pinv = aug
        .pseudo_inverse(0.0)
        .map_err(|e| Error::IllConditioned(e.to_string()))?;
    let mut w = pinv.rows(0, cols) / c(s_max);
    // the exact solution has zero row sums; remove what roundoff left behind
    for mut row in w.row_iter_mut() {
        let mean = row.sum() / c(rows as f64);
        row.add_scalar_mut(-mean);
    }
    Ok(w)
}

/// `(‖W·M − 𝟙‖_F, max_μ |Σ_k W_μk|)`.
pub fn constraint_residuals(w: &CMatrix, m: &CMatrix) -> (f64, f64) {
    let eye = CMatrix::identity(m.ncols(), m.ncols());
    let prod = (w * m - eye).norm();
    let rows = w.row_iter().map(|r| r.sum().norm()).fold(0.0, f64::max);
    (prod, rows)
}

/// Candidate `t·k·ω_min` ranges tried by [`design_measurement`].
pub const DESIGN_SPANS: [(f64, f64); 9] = {
    use std::f64::consts::PI;
    [
        (0.5, 2.0 * PI),
        (0.25, 2.0 * PI),
        (1.0, 2.0 * PI),
        (0.5, 3.0 * PI),
        (0.25, 3.0 * PI),
        (1.0, 3.0 * PI),
        (0.5, 4.0 * PI),
        (0.25, 4.0 * PI),
        (1.0, 4.0 * PI),
    ]
};

/// Automatic design: Mian–Chowla levels and `n(n−1)+1` drive strengths.
///
/// Strengths are spaced linearly over `k_span`, or, without one, over each of
/// [`DESIGN_SPANS`] (scaled by `1/t`), keeping the design whose `W` has the
/// smallest Frobenius norm. A span whose `M` is worse conditioned than
/// [`DESIGN_COND_TOL`] is retried with strengths jittered by up to a quarter
/// step.
pub fn design_measurement(
    n: usize,
    t: f64,
    k_span: Option<(f64, f64)>,
) -> Result<MeasurementDesign> {
    if n < 2 {
        return Err(Error::InvalidDesign(format!("need n ≥ 2 blocks, got {n}")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidDesign(format!(
            "probe time must be positive, got {t}"
        )));
    }
    let eta: Vec<f64> = mian_chowla(n).into_iter().map(|x| x as f64).collect();
    let spans: Vec<(f64, f64)> = match k_span {
        Some((lo, hi)) => {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::InvalidDesign(format!("bad k span ({lo}, {hi})")));
            }
            vec![(lo, hi)]
        }
        None => DESIGN_SPANS
            .iter()
            .map(|&(lo, hi)| (lo / t, hi / t))
            .collect(),
    };
    let mut best: Option<(f64, MeasurementDesign)> = None;
    let mut last = Error::InvalidDesign("no candidate spans".into());
    for (lo, hi) in spans {
        match span_design(n, t, &eta, lo, hi) {
            Ok((norm, design)) => {
                if best.as_ref().is_none_or(|(b, _)| norm < *b) {
                    best = Some((norm, design));
                }
            }
            Err(e) => last = e,
        }
    }
    let (norm, design) = best.ok_or(last)?;
    debug!(
        "design n={n}: k ∈ [{:.3e}, {:.3e}], ‖W‖_F = {norm:.3e}",
        design.k_set[0],
        design.k_set[design.k_set.len() - 1]
    );
    Ok(design)
}

fn span_design(
    n: usize,
    t: f64,
    eta: &[f64],
    lo: f64,
    hi: f64,
) -> Result<(f64, MeasurementDesign)> {
    let count = n * (n - 1) + 1;
    let step = (hi - lo) / (count - 1) as f64;
    let base: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + n as u64);
    let mut k_set = base.clone();
    let mut last = (0.0, 0.0);
    for attempt in 0..=DESIGN_ATTEMPTS {
        if attempt > 0 {
            k_set = base
                .iter()
                .map(|k| (k + 0.25 * step * rng.random_range(-1.0..1.0)).max(lo * 0.5))
                .collect();
        }
        let design = MeasurementDesign::new(eta.to_vec(), k_set.clone(), t);
        let m = modulation_matrix(&design)?;
        let (s_min, s_max) = singular_range(&m);
        last = (s_min, s_max);
        if s_min >= DESIGN_COND_TOL * s_max {
            if let Ok(w) = pseudoinverse_w(&m) {
                return Ok((w.norm(), design));
            }
        }
    }
    Err(Error::IllConditioned(format!(
        "no well-conditioned design for n = {n} after {DESIGN_ATTEMPTS} retries (σ_min = {:.3e}, σ_max = {:.3e})",
        last.0, last.1
    )))
}

/// Complex `T_μ = Σ_k W_μk·R(k)` for every μ, lexicographic.
fn raw_susceptibilities(w: &CMatrix, rates: &[RMatrix]) -> Result<Vec<CMatrix>> {
    if w.ncols() != rates.len() {
        return Err(Error::DimensionMismatch(format!(
            "W has {} columns but {} rate matrices were given",
            w.ncols(),
            rates.len()
        )));
    }
    let Some(reference) = rates.first() else {
        return Ok(vec![CMatrix::zeros(0, 0); w.nrows()]);
    };
    let n = reference.nrows();
    // W·1 = 0, so subtracting R(k₀) changes nothing except removing the
    // k-independent part before it can leave rounding residue behind
    let shifted: Vec<RMatrix> = rates.iter().map(|r| r - reference).collect();
    Ok((0..w.nrows())
        .map(|mu| {
            let mut acc = CMatrix::zeros(n, n);
            for (k, r) in shifted.iter().enumerate().skip(1) {
                let weight = w[(mu, k)];
                acc.zip_apply(r, |a, b| *a += weight * b);
            }
            acc
        })
        .collect())
}

fn split_real(raw: Vec<CMatrix>, n: usize, tol: Tolerance) -> Result<(Vec<Susceptibility>, f64)> {
    let mut residue = 0.0_f64;
    let mut out = Vec::with_capacity(raw.len());
    for ((r, s), m) in ordered_pairs(n).into_iter().zip(raw) {
        let im = m.map(|z| z.im).norm();
        residue = residue.max(im);
        if tol.enforce && im > tol.absolute {
            return Err(Error::Inconsistent(format!(
                "T_({},{}) has imaginary part {im:.3e} above {:.3e}",
                r + 1,
                s + 1,
                tol.absolute
            )));
        }
        out.push(Susceptibility {
            mu: (r, s),
            matrix: m.map(|z| z.re),
        });
    }
    Ok((out, residue))
}

/// `T_μ = Σ_k W_μk·R(k)` from normalized rates given in the design's `k_set` order.
///
/// Imaginary parts above [`IMAG_ERROR_TOL`] relative to the largest `‖T_μ‖_F`
/// (or absolutely, when all `T_μ` vanish) are an error.
pub fn susceptibilities(w: &CMatrix, rates: &[RMatrix]) -> Result<Vec<Susceptibility>> {
    let n = rates.first().map_or(0, |r| r.nrows());
    if w.nrows() != n * n.saturating_sub(1) {
        return Err(Error::DimensionMismatch(format!(
            "W has {} rows, expected {} for n = {n}",
            w.nrows(),
            n * n.saturating_sub(1)
        )));
    }
    let raw = raw_susceptibilities(w, rates)?;
    let scale = raw.iter().map(|m| m.norm()).fold(1.0, f64::max);
    Ok(split_real(raw, n, Tolerance::strict(IMAG_ERROR_TOL * scale))?.0)
}

fn check_complete(t_mu: &[Susceptibility], dims: &[usize]) -> Result<()> {
    let n = dims.len();
    let expected = ordered_pairs(n);
    if t_mu.len() != expected.len() || t_mu.iter().zip(&expected).any(|(x, mu)| x.mu != *mu) {
        return Err(Error::DimensionMismatch(format!(
            "need T_μ for all {} ordered pairs in lexicographic order",
            expected.len()
        )));
    }
    if t_mu.iter().any(|x| x.matrix.shape() != (n, n)) {
        return Err(Error::DimensionMismatch(format!("T_μ must be {n}x{n}")));
    }
    Ok(())
}

fn coupling_norms_with(
    t_mu: &[Susceptibility],
    dims: &[usize],
    tol: Tolerance,
) -> Result<(RMatrix, usize)> {
    check_complete(t_mu, dims)?;
    let n = dims.len();
    let mut out = RMatrix::zeros(n, n);
    let mut clipped = 0;
    for x in t_mu {
        let (i, j) = x.mu;
        let radicand = -((dims[i] * dims[j]) as f64).sqrt() * x.matrix[(i, j)];
        if radicand < 0.0 {
            if tol.enforce && radicand < -tol.absolute {
                return Err(Error::Inconsistent(format!(
                    "coupling radicand for ({},{}) is {radicand:.3e}",
                    i + 1,
                    j + 1
                )));
            }
            clipped += 1;
        }
        out[(i, j)] = radicand.max(0.0).sqrt();
    }
    Ok((out, clipped))
}

/// `‖H_ij‖₂ = sqrt(−√(d_i d_j)·[T_(i,j)]_ij)` off the diagonal, zero on it.
pub fn coupling_norms(t_mu: &[Susceptibility], dims: &[usize]) -> Result<RMatrix> {
    Ok(coupling_norms_with(t_mu, dims, Tolerance::strict(RADICAND_TOL))?.0)
}

struct OmegaParts {
    omega: f64,
    c_matrix: RMatrix,
    asymmetry: f64,
    clipped_mass: f64,
    null_residual: f64,
}

fn omega_with(t_mu: &[Susceptibility], dims: &[usize], tol: Tolerance) -> Result<OmegaParts> {
    check_complete(t_mu, dims)?;
    let n = dims.len();
    let sum = t_mu
        .iter()
        .fold(RMatrix::zeros(n, n), |acc, x| acc + &x.matrix);
    let asymmetry = (&sum - sum.transpose()).norm() / 2.0;
    let c_matrix = (&sum + sum.transpose()) * 0.5;
    let norm = c_matrix.norm();
    let limit = tol.absolute.max(0.0);
    if tol.enforce && asymmetry > limit {
        return Err(Error::Inconsistent(format!(
            "C is asymmetric by {asymmetry:.3e} (tolerance {limit:.3e})"
        )));
    }
    let eig = linalg::eigvalsh_real(&c_matrix);
    let lo = eig.first().copied().unwrap_or(0.0);
    if tol.enforce && lo < -limit {
        return Err(Error::Inconsistent(format!(
            "C has eigenvalue {lo:.3e} below −{limit:.3e}"
        )));
    }
    let clipped_mass = eig.iter().filter(|v| **v < 0.0).fold(0.0, |acc, v| acc - v);
    let lam_max = eig.last().copied().unwrap_or(0.0);
    let v = nalgebra::DVector::from_iterator(n, dims.iter().map(|d| (*d as f64).sqrt()));
    let null_residual = if norm > 0.0 {
        (&c_matrix * v).norm() / norm
    } else {
        0.0
    };
    Ok(OmegaParts {
        omega: lam_max.max(0.0).sqrt(),
        c_matrix,
        asymmetry,
        clipped_mass,
        null_residual,
    })
}

/// `C = Σ_μ T_μ` (symmetrized) and `Ω = sqrt(λ_max(C))`.
///
/// Asymmetry or negative eigenvalues beyond `1e−8·‖C‖_F` are errors; smaller
/// negative eigenvalues are clipped.
pub fn witness_omega(t_mu: &[Susceptibility], dims: &[usize]) -> Result<(f64, RMatrix)> {
    let n = dims.len();
    let scale = t_mu
        .iter()
        .fold(RMatrix::zeros(n, n), |acc, x| acc + &x.matrix)
        .norm();
    let parts = omega_with(t_mu, dims, Tolerance::strict(C_REL_TOL * scale))?;
    Ok((parts.omega, parts.c_matrix))
}

/// `T_μ = Tr[P̃_i ad_H 𝓠_μ ad_H P̃_j]` evaluated literally with `P̃_i = P_i/√d_i`.
pub fn oracle_susceptibilities(h: &CMatrix, decomp: &ZenoDecomposition) -> Vec<Susceptibility> {
    let n = decomp.n();
    let dims = decomp.dims();
    let scaled: Vec<CMatrix> = (0..n)
        .map(|i| decomp.projector(i) / c((dims[i] as f64).sqrt()))
        .collect();
    ordered_pairs(n)
        .into_iter()
        .map(|(r, s)| {
            let matrix = RMatrix::from_fn(n, n, |i, j| {
                let first = linalg::commutator(h, &scaled[j]);
                let mut block = CMatrix::zeros(h.nrows(), h.ncols());
                for &a in &decomp.blocks()[r] {
                    for &b in &decomp.blocks()[s] {
                        block[(a, b)] = first[(a, b)];
                    }
                }
                let second = linalg::commutator(h, &block);
                linalg::trace(&(&scaled[i] * second)).re
            });
            Susceptibility { mu: (r, s), matrix }
        })
        .collect()
}

/// Ground-truth report computed from `H` alone; `ground_truth` is filled in as well.
pub fn oracle_report(model: &QuantumModel, decomp: &ZenoDecomposition) -> Result<WitnessReport> {
    decomp.check_dim(model.dim())?;
    let dims = decomp.dims();
    let h = model.hamiltonian();
    let t_mu = oracle_susceptibilities(h, decomp);
    let spread = spectral_spread(h);
    // T_μ is exact up to rounding of products of two commutators
    let floor = 1e-12 * (h.norm().powi(2)).max(f64::MIN_POSITIVE);
    let tol = Tolerance::strict(floor);
    let (coupling, clipped_radicands) = coupling_norms_with(&t_mu, &dims, tol)?;
    let parts = omega_with(&t_mu, &dims, tol)?;
    let ground_truth = GroundTruth {
        spectral_spread: spread,
        omega: parts.omega,
        t_mu: t_mu.clone(),
        coupling_norms: coupling.clone(),
    };
    Ok(WitnessReport {
        dims,
        t_mu,
        coupling_norms: coupling,
        c_matrix: parts.c_matrix,
        omega: parts.omega,
        omega_stderr: None,
        ground_truth: Some(ground_truth),
        diagnostics: Diagnostics {
            source: "oracle".into(),
            asymmetry: parts.asymmetry,
            clipped_mass: parts.clipped_mass,
            null_residual: parts.null_residual,
            clipped_radicands,
            tolerance: floor,
            ..Diagnostics::default()
        },
    })
}

/// Protocol output at every `k` of the design plus the extracted report.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub transitions: Vec<TransitionData>,
    pub report: WitnessReport,
}

/// Simulate the protocol at every drive strength and extract the witness.
pub fn run_pipeline(
    model: &QuantumModel,
    decomp: &ZenoDecomposition,
    design: &MeasurementDesign,
) -> Result<WitnessReport> {
    Ok(run_pipeline_detailed(model, decomp, design)?.report)
}

/// [`run_pipeline`], also returning the per-k protocol data.
pub fn run_pipeline_detailed(
    model: &QuantumModel,
    decomp: &ZenoDecomposition,
    design: &MeasurementDesign,
) -> Result<PipelineRun> {
    let protocol = Protocol::new(model, decomp, design)?;
    let m = modulation_matrix(design)?;
    let w = pseudoinverse_w(&m)?;
    let transitions: Vec<TransitionData> = design
        .k_set
        .par_iter()
        .map(|&k| protocol.rates(k))
        .collect::<Result<_>>()?;
    let dims = decomp.dims();
    let rates: Vec<RMatrix> = transitions
        .iter()
        .map(|d| normalized_rates(d.pdot.as_ref().expect("rate modes fill pdot"), &dims))
        .collect::<Result<_>>()?;

    let raw = raw_susceptibilities(&w, &rates)?;
    let cancellation = 1e-12 * w.norm() * rates.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let l_norm = protocol.lindbladian().norm2();
    let tol = match design.rate_mode {
        RateMode::Smalltime => {
            let scale = raw.iter().map(|m| m.norm()).fold(0.0, f64::max);
            Tolerance::strict((C_REL_TOL * scale).max(cancellation))
        }
        RateMode::Exact | RateMode::FiniteDifference => {
            Tolerance::strict(cancellation + ENVELOPE_FACTOR * design.t * l_norm.powi(3))
        }
        RateMode::Sampled => Tolerance::lenient(),
    };
    let imag_tol = if design.rate_mode == RateMode::Smalltime {
        let scale = raw.iter().map(|m| m.norm()).fold(0.0, f64::max);
        Tolerance::strict((IMAG_ERROR_TOL * scale).max(cancellation))
    } else {
        tol
    };
    let (t_mu, imaginary_residue) = split_real(raw, dims.len(), imag_tol)?;
    let radicand_tol = Tolerance {
        absolute: tol.absolute.max(RADICAND_TOL),
        enforce: tol.enforce,
    };
    let (coupling, clipped_radicands) = coupling_norms_with(&t_mu, &dims, radicand_tol)?;
    let parts = omega_with(&t_mu, &dims, tol)?;
    let (s_min, s_max) = singular_range(&m);
    let (constraint_residual, row_sum_residual) = constraint_residuals(&w, &m);

    let omega_stderr = if design.rate_mode == RateMode::Sampled {
        Some(bootstrap_omega_stderr(&w, &transitions, &dims, design.seed))
    } else {
        None
    };

    let report = WitnessReport {
        dims,
        t_mu,
        coupling_norms: coupling,
        c_matrix: parts.c_matrix,
        omega: parts.omega,
        omega_stderr,
        ground_truth: None,
        diagnostics: Diagnostics {
            source: design.rate_mode.as_str().into(),
            t: Some(design.t),
            eta: design.eta.clone(),
            k_set: design.k_set.clone(),
            cond_m: Some(s_max / s_min),
            sigma_min: Some(s_min),
            sigma_max: Some(s_max),
            constraint_residual: Some(constraint_residual),
            row_sum_residual: Some(row_sum_residual),
            imaginary_residue,
            asymmetry: parts.asymmetry,
            clipped_mass: parts.clipped_mass,
            null_residual: parts.null_residual,
            clipped_radicands,
            tolerance: tol.absolute,
        },
    };
    Ok(PipelineRun {
        transitions,
        report,
    })
}

/// Pipeline report with the oracle attached as `ground_truth`.
pub fn run_pipeline_with_truth(
    model: &QuantumModel,
    decomp: &ZenoDecomposition,
    design: &MeasurementDesign,
) -> Result<WitnessReport> {
    let mut report = run_pipeline(model, decomp, design)?;
    report.ground_truth = oracle_report(model, decomp)?.ground_truth;
    Ok(report)
}

/// Parametric bootstrap of `Ω`: resample the `t ± h` frequencies multinomially
/// from the observed ones and rerun the extraction with clipping.
fn bootstrap_omega_stderr(
    w: &CMatrix,
    transitions: &[TransitionData],
    dims: &[usize],
    seed: u64,
) -> f64 {
    let n = dims.len();
    let omegas: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|b| {
            let rates: Vec<RMatrix> = transitions
                .iter()
                .enumerate()
                .map(|(ki, d)| {
                    let s = d
                        .sampled
                        .as_ref()
                        .expect("sampled transitions keep frequencies");
                    let redraw = |p: &RMatrix, tag: u64| {
                        let mut out = RMatrix::zeros(n, n);
                        for j in 0..n {
                            let mut rng = ChaCha8Rng::seed_from_u64(task_seed(
                                seed ^ 0xb007_57a9,
                                (b * transitions.len() + ki) as u64,
                                j as u64,
                                tag,
                            ));
                            let probs: Vec<f64> = p.column(j).iter().copied().collect();
                            let counts = multinomial(&mut rng, s.shots, &probs, probs.iter().sum());
                            for i in 0..n {
                                out[(i, j)] = counts[i] as f64 / s.shots as f64;
                            }
                        }
                        out
                    };
                    let pdot = (redraw(&s.p_plus, 2) - redraw(&s.p_minus, 1)) / (2.0 * s.h);
                    normalized_rates(&pdot, dims).expect("dimensions checked")
                })
                .collect();
            let raw = raw_susceptibilities(w, &rates).expect("shapes checked");
            let (t_mu, _) = split_real(raw, n, Tolerance::lenient()).expect("lenient");
            omega_with(&t_mu, dims, Tolerance::lenient())
                .expect("lenient")
                .omega
        })
        .collect();
    let mean = omegas.iter().sum::<f64>() / omegas.len() as f64;
    let var = omegas.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / (omegas.len() - 1) as f64;
    var.sqrt()
}

/// `X = |ψ_max⟩⟨ψ_min|` and its Hilbert-Schmidt norm `‖ad_H[X]‖₂`, equal to `𝔠(H)`.
pub fn spread_maximizer(h: &CMatrix) -> (CMatrix, f64) {
    let (_, vecs) = linalg::eigh(h);
    let d = h.nrows();
    let hi = vecs.column(d - 1).into_owned();
    let lo = vecs.column(0).into_owned();
    let x = &hi * lo.adjoint();
    let value = linalg::commutator(h, &x).norm();
    (x, value)
}
