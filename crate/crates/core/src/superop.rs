//! Superoperators over column-stacked operators.
//!
//! A [`SuperOp`] on a `d`-dimensional system is a `d²×d²` matrix acting on
//! `vec(X)`, where `vec` stacks the columns of `X`. With that convention
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`, and every Kronecker construction in this
//! module follows from that identity.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    anticommutator, c, commutator, devectorize, eigh, identity, random_unit_hermitian, vectorize,
    CMatrix, ComplexMatrixRepr, I,
};

/// Relative Hermiticity tolerance for Hamiltonians.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default relative threshold for the noise-compatibility residual.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// Hamiltonian plus jump operators of a Lindblad generator (ħ = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuantumModelRepr", into = "QuantumModelRepr")]
pub struct QuantumModel {
    hamiltonian: CMatrix,
    jumps: Vec<CMatrix>,
}

#[derive(Serialize, Deserialize)]
struct QuantumModelRepr {
    dim: usize,
    hamiltonian: ComplexMatrixRepr,
    #[serde(default)]
    jumps: Vec<ComplexMatrixRepr>,
}

impl TryFrom<QuantumModelRepr> for QuantumModel {
    type Error = Error;

    fn try_from(repr: QuantumModelRepr) -> Result<Self> {
        let h = CMatrix::try_from(repr.hamiltonian)?;
        let jumps = repr
            .jumps
            .into_iter()
            .map(CMatrix::try_from)
            .collect::<Result<Vec<_>>>()?;
        if h.nrows() != repr.dim {
            return Err(Error::InvalidModel(format!(
                "declared dim {} but hamiltonian has {} rows",
                repr.dim,
                h.nrows()
            )));
        }
        QuantumModel::new(h, jumps)
    }
}

impl From<QuantumModel> for QuantumModelRepr {
    fn from(m: QuantumModel) -> Self {
        QuantumModelRepr {
            dim: m.dim(),
            hamiltonian: (&m.hamiltonian).into(),
            jumps: m.jumps.iter().map(Into::into).collect(),
        }
    }
}

impl QuantumModel {
    pub fn new(hamiltonian: CMatrix, jumps: Vec<CMatrix>) -> Result<Self> {
        let model = QuantumModel { hamiltonian, jumps };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.hamiltonian;
        let d = h.nrows();
        if d == 0 || !h.is_square() {
            return Err(Error::InvalidModel(format!(
                "hamiltonian must be a non-empty square matrix, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        let defect = (h - h.adjoint()).norm();
        if defect > HERMITIAN_TOL * h.norm() {
            return Err(Error::InvalidModel(format!(
                "hamiltonian is not Hermitian: ‖H − H†‖_F = {defect:.3e} exceeds {HERMITIAN_TOL:e}·‖H‖_F"
            )));
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidModel(
                "hamiltonian has non-finite entries".into(),
            ));
        }
        for (k, w) in self.jumps.iter().enumerate() {
            if w.nrows() != d || w.ncols() != d {
                return Err(Error::InvalidModel(format!(
                    "jump {k} is {}x{}, expected {d}x{d}",
                    w.nrows(),
                    w.ncols()
                )));
            }
            if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "jump {k} has non-finite entries"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[CMatrix] {
        &self.jumps
    }

    pub fn with_hamiltonian(&self, hamiltonian: CMatrix) -> Result<Self> {
        QuantumModel::new(hamiltonian, self.jumps.clone())
    }

    pub fn with_jumps(&self, jumps: Vec<CMatrix>) -> Result<Self> {
        QuantumModel::new(self.hamiltonian.clone(), jumps)
    }

    /// Express the model in the basis given by the columns of `unitary`
    /// (`H → U†HU`, `W → U†WU`). Block decompositions of the result are
    /// basis-aligned in the new frame.
    pub fn conjugated(&self, unitary: &CMatrix) -> Result<Self> {
        let d = self.dim();
        if unitary.nrows() != d || unitary.ncols() != d {
            return Err(Error::DimensionMismatch(format!("unitary must be {d}x{d}")));
        }
        let defect = (unitary.adjoint() * unitary - identity(d)).norm();
        if defect > 1e-10 {
            return Err(Error::InvalidModel(format!(
                "conjugating matrix is not unitary (‖U†U − 1‖_F = {defect:.3e})"
            )));
        }
        let ud = unitary.adjoint();
        let h = &ud * &self.hamiltonian * unitary;
        let h = (&h + h.adjoint()) * c(0.5);
        let jumps = self.jumps.iter().map(|w| &ud * w * unitary).collect();
        QuantumModel::new(h, jumps)
    }

    /// `Σ_μ ‖W_μ‖_F²`, the natural scale of the dissipator.
    pub fn jump_scale(&self) -> f64 {
        self.jumps.iter().map(|w| w.norm_squared()).sum()
    }

    /// `φ*(𝟙) = Σ_μ W_μ† W_μ`.
    pub fn jump_gram(&self) -> CMatrix {
        let d = self.dim();
        self.jumps
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, w| acc + w.adjoint() * w)
    }

    /// `𝓛_φ[X] = Σ_μ W_μ X W_μ† − ½{W_μ†W_μ, X}`.
    pub fn apply_dissipator(&self, x: &CMatrix) -> CMatrix {
        let jump_part = self
            .jumps
            .iter()
            .fold(CMatrix::zeros(x.nrows(), x.ncols()), |acc, w| {
                acc + w * x * w.adjoint()
            });
        jump_part - anticommutator(&self.jump_gram(), x) * c(0.5)
    }

    /// Hilbert-Schmidt adjoint `𝓛_φ*[X] = Σ_μ W_μ† X W_μ − ½{W_μ†W_μ, X}`.
    pub fn apply_dissipator_adjoint(&self, x: &CMatrix) -> CMatrix {
        let jump_part = self
            .jumps
            .iter()
            .fold(CMatrix::zeros(x.nrows(), x.ncols()), |acc, w| {
                acc + w.adjoint() * x * w
            });
        jump_part - anticommutator(&self.jump_gram(), x) * c(0.5)
    }

    /// `𝓛[X] = −i[H, X] + 𝓛_φ[X]` evaluated directly on the operator.
    pub fn apply_lindbladian(&self, x: &CMatrix) -> CMatrix {
        commutator(&self.hamiltonian, x) * (-I) + self.apply_dissipator(x)
    }
}

/// Ordered partition of the basis indices into Zeno subspaces.
///
/// Indices are 0-based in memory and 1-based in the serialized form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DecompositionRepr", into = "DecompositionRepr")]
pub struct ZenoDecomposition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct DecompositionRepr {
    blocks: Vec<Vec<usize>>,
}

impl TryFrom<DecompositionRepr> for ZenoDecomposition {
    type Error = Error;

    fn try_from(repr: DecompositionRepr) -> Result<Self> {
        ZenoDecomposition::from_one_based(repr.blocks)
    }
}

impl From<ZenoDecomposition> for DecompositionRepr {
    fn from(z: ZenoDecomposition) -> Self {
        DecompositionRepr {
            blocks: z.one_based_blocks(),
        }
    }
}

impl ZenoDecomposition {
    /// Build from 0-based index blocks; they must partition `0..d` for
    /// `d = Σ |block|` and there must be at least two blocks.
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.len() < 2 {
            return Err(Error::InvalidDecomposition(format!(
                "need at least 2 blocks, got {}",
                blocks.len()
            )));
        }
        if let Some(i) = blocks.iter().position(Vec::is_empty) {
            return Err(Error::InvalidDecomposition(format!(
                "block {} is empty",
                i + 1
            )));
        }
        let d: usize = blocks.iter().map(Vec::len).sum();
        let mut block_of = vec![usize::MAX; d];
        for (b, block) in blocks.iter().enumerate() {
            for &idx in block {
                if idx >= d {
                    return Err(Error::InvalidDecomposition(format!(
                        "index {} out of range 1..={d}",
                        idx + 1
                    )));
                }
                if block_of[idx] != usize::MAX {
                    return Err(Error::InvalidDecomposition(format!(
                        "index {} appears in more than one block",
                        idx + 1
                    )));
                }
                block_of[idx] = b;
            }
        }
        let blocks = blocks
            .into_iter()
            .map(|b| b.into_iter().collect::<BTreeSet<_>>().into_iter().collect())
            .collect();
        Ok(ZenoDecomposition { blocks, block_of })
    }

    pub fn from_one_based(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let zero_based = blocks
            .into_iter()
            .map(|b| {
                b.into_iter()
                    .map(|i| {
                        i.checked_sub(1).ok_or_else(|| {
                            Error::InvalidDecomposition("block indices are 1-based".into())
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        ZenoDecomposition::new(zero_based)
    }

    /// One block per basis state.
    pub fn single_site(d: usize) -> Result<Self> {
        ZenoDecomposition::new((0..d).map(|i| vec![i]).collect())
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn one_based_blocks(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|i| i + 1).collect())
            .collect()
    }

    /// Number of blocks `n`.
    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    /// Hilbert-space dimension `d`.
    pub fn dim(&self) -> usize {
        self.block_of.len()
    }

    /// Block dimensions `d_i`.
    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn block_of(&self, index: usize) -> usize {
        self.block_of[index]
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "decomposition covers {} basis states but the model has dimension {d}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Projector `P_i` as a `d×d` matrix.
    pub fn projector(&self, i: usize) -> CMatrix {
        let d = self.dim();
        CMatrix::from_fn(d, d, |r, k| {
            if r == k && self.block_of[r] == i {
                c(1.0)
            } else {
                c(0.0)
            }
        })
    }

    /// `P_r X P_s`.
    pub fn block(&self, x: &CMatrix, r: usize, s: usize) -> CMatrix {
        CMatrix::from_fn(x.nrows(), x.ncols(), |a, b| {
            if self.block_of[a] == r && self.block_of[b] == s {
                x[(a, b)]
            } else {
                c(0.0)
            }
        })
    }

    /// `𝓟[X] = Σ_i P_i X P_i`.
    pub fn pinch(&self, x: &CMatrix) -> CMatrix {
        CMatrix::from_fn(x.nrows(), x.ncols(), |a, b| {
            if self.block_of[a] == self.block_of[b] {
                x[(a, b)]
            } else {
                c(0.0)
            }
        })
    }

    /// `𝓠[X] = X − 𝓟[X]`.
    pub fn off_blocks(&self, x: &CMatrix) -> CMatrix {
        x - self.pinch(x)
    }

    /// `Tr[P_i X]` for every block.
    pub fn block_traces(&self, x: &CMatrix) -> Vec<Complex64> {
        let mut out = vec![c(0.0); self.n()];
        for (a, &b) in self.block_of.iter().enumerate() {
            out[b] += x[(a, a)];
        }
        out
    }

    /// Ordered pairs `(r, s)`, `r ≠ s`, in lexicographic order.
    pub fn ordered_pairs(&self) -> Vec<(usize, usize)> {
        ordered_pairs(self.n())
    }
}

/// Lexicographic list of ordered pairs `(r, s)` with `r ≠ s` over `0..n`.
pub fn ordered_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|r| (0..n).filter(move |&s| s != r).map(move |s| (r, s)))
        .collect()
}

/// Dense superoperator on column-stacked `d×d` operators.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOp {
    dim: usize,
    matrix: CMatrix,
}

impl SuperOp {
    pub fn from_matrix(dim: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator on dimension {dim} must be {0}x{0}, got {1}x{2}",
                dim * dim,
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(SuperOp { dim, matrix })
    }

    /// Matrix of the linear map `f`, built column by column from its action
    /// on the matrix units `E_ab`.
    pub fn from_fn<F: Fn(&CMatrix) -> CMatrix>(dim: usize, f: F) -> Self {
        let d2 = dim * dim;
        let mut matrix = CMatrix::zeros(d2, d2);
        for col in 0..d2 {
            let mut unit = CMatrix::zeros(dim, dim);
            unit[(col % dim, col / dim)] = c(1.0);
            matrix.set_column(col, &vectorize(&f(&unit)));
        }
        SuperOp { dim, matrix }
    }

    pub fn identity(dim: usize) -> Self {
        SuperOp {
            dim,
            matrix: CMatrix::identity(dim * dim, dim * dim),
        }
    }

    pub fn zero(dim: usize) -> Self {
        SuperOp {
            dim,
            matrix: CMatrix::zeros(dim * dim, dim * dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `devec(M · vec(X))`.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        assert_eq!(x.nrows(), self.dim, "operator dimension mismatch");
        devectorize(&(&self.matrix * vectorize(x)), self.dim)
    }

    /// Composition `self ∘ other`.
    pub fn compose(&self, other: &SuperOp) -> SuperOp {
        assert_eq!(self.dim, other.dim);
        SuperOp {
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn scale(&self, factor: Complex64) -> SuperOp {
        SuperOp {
            dim: self.dim,
            matrix: &self.matrix * factor,
        }
    }

    pub fn add(&self, other: &SuperOp) -> SuperOp {
        assert_eq!(self.dim, other.dim);
        SuperOp {
            dim: self.dim,
            matrix: &self.matrix + &other.matrix,
        }
    }

    pub fn sub(&self, other: &SuperOp) -> SuperOp {
        assert_eq!(self.dim, other.dim);
        SuperOp {
            dim: self.dim,
            matrix: &self.matrix - &other.matrix,
        }
    }

    /// Largest singular value of the matrix representation.
    pub fn norm2(&self) -> f64 {
        crate::linalg::spectral_norm(&self.matrix)
    }
}

/// `𝟙 ⊗ A`: left multiplication `X ↦ A X`.
fn left_mul(a: &CMatrix) -> CMatrix {
    identity(a.nrows()).kronecker(a)
}

/// `Bᵀ ⊗ 𝟙`: right multiplication `X ↦ X B`.
fn right_mul(b: &CMatrix) -> CMatrix {
    b.transpose().kronecker(&identity(b.nrows()))
}

/// `ad_H`: `X ↦ HX − XH`.
pub fn adjoint_action(h: &CMatrix) -> Result<SuperOp> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "adjoint action needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    SuperOp::from_matrix(h.nrows(), left_mul(h) - right_mul(h))
}

/// Dissipative part `𝓛_φ` of the Lindbladian.
pub fn dissipator(model: &QuantumModel) -> SuperOp {
    let d = model.dim();
    let gram = model.jump_gram();
    let mut m = (left_mul(&gram) + right_mul(&gram)) * c(-0.5);
    for w in model.jumps() {
        // vec(W X W†) = (conj(W) ⊗ W) vec(X)
        m += w.conjugate().kronecker(w);
    }
    SuperOp { dim: d, matrix: m }
}

/// `𝓛 = −i·ad_H + 𝓛_φ`.
pub fn build_lindbladian(model: &QuantumModel) -> Result<SuperOp> {
    model.validate()?;
    let ad = adjoint_action(model.hamiltonian())?;
    Ok(ad.scale(-I).add(&dissipator(model)))
}

/// The projector family `𝓟`, `𝓠` and the off-diagonal block projectors `𝓠_rs`.
#[derive(Debug, Clone)]
pub struct BlockProjectors {
    pub p: SuperOp,
    pub q: SuperOp,
    /// `((r, s), 𝓠_rs)` in lexicographic pair order.
    pub q_rs: Vec<((usize, usize), SuperOp)>,
}

/// Diagonal superoperator whose entry for `vec` index `a + b·d` is `f(block(a), block(b))`.
fn block_diagonal_superop<F: Fn(usize, usize) -> Complex64>(
    decomp: &ZenoDecomposition,
    f: F,
) -> SuperOp {
    let d = decomp.dim();
    let mut m = CMatrix::zeros(d * d, d * d);
    for b in 0..d {
        for a in 0..d {
            let idx = a + b * d;
            m[(idx, idx)] = f(decomp.block_of(a), decomp.block_of(b));
        }
    }
    SuperOp { dim: d, matrix: m }
}

pub fn projectors(decomp: &ZenoDecomposition) -> BlockProjectors {
    let p = block_diagonal_superop(decomp, |r, s| if r == s { c(1.0) } else { c(0.0) });
    let q = SuperOp::identity(decomp.dim()).sub(&p);
    let q_rs = decomp
        .ordered_pairs()
        .into_iter()
        .map(|(r, s)| {
            let op = block_diagonal_superop(
                decomp,
                |a, b| {
                    if a == r && b == s {
                        c(1.0)
                    } else {
                        c(0.0)
                    }
                },
            );
            ((r, s), op)
        })
        .collect();
    BlockProjectors { p, q, q_rs }
}

/// `𝓠·ad_{H_m}⁻¹·𝓠` for `H_m = Σ η_i P_i`: multiplies block `(r, s)` by `1/(η_r − η_s)`.
pub fn block_inverse_adjoint(decomp: &ZenoDecomposition, eta: &[f64]) -> Result<SuperOp> {
    if eta.len() != decomp.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} levels for {} blocks",
            eta.len(),
            decomp.n()
        )));
    }
    for (r, s) in decomp.ordered_pairs() {
        if eta[r] == eta[s] {
            return Err(Error::InvalidDesign(format!(
                "levels {} and {} coincide",
                r + 1,
                s + 1
            )));
        }
    }
    Ok(block_diagonal_superop(decomp, |r, s| {
        if r == s {
            c(0.0)
        } else {
            c(1.0 / (eta[r] - eta[s]))
        }
    }))
}

/// Zeno-limit data: `H_Z = Σ P_i H P_i`, `L_Z = 𝓟𝓛𝓟`, and the Kraus
/// operators `P_i W_μ P_j` of `φ_eff = 𝓟φ𝓟` restricted to block-diagonal states.
#[derive(Debug, Clone)]
pub struct ZenoReduction {
    pub zeno_hamiltonian: CMatrix,
    pub liouvillian: SuperOp,
    pub effective_jumps: Vec<CMatrix>,
}

impl ZenoReduction {
    /// Model with `H_Z` and the effective jumps; its Lindbladian agrees with
    /// `L_Z` on block-diagonal states.
    pub fn effective_model(&self) -> Result<QuantumModel> {
        QuantumModel::new(self.zeno_hamiltonian.clone(), self.effective_jumps.clone())
    }
}

pub fn zeno_reduction(model: &QuantumModel, decomp: &ZenoDecomposition) -> Result<ZenoReduction> {
    decomp.check_dim(model.dim())?;
    let lindbladian = build_lindbladian(model)?;
    let proj = projectors(decomp);
    let liouvillian = proj.p.compose(&lindbladian).compose(&proj.p);
    let zeno_hamiltonian = decomp.pinch(model.hamiltonian());
    let n = decomp.n();
    let mut effective_jumps = Vec::new();
    for w in model.jumps() {
        for i in 0..n {
            for j in 0..n {
                let piece = decomp.block(w, i, j);
                if piece.iter().any(|z| z.norm() > 0.0) {
                    effective_jumps.push(piece);
                }
            }
        }
    }
    Ok(ZenoReduction {
        zeno_hamiltonian,
        liouvillian,
        effective_jumps,
    })
}

/// Residual of the noise-compatibility condition:
/// `max_i ‖𝓠[Σ_μ W_μ P_i W_μ†]‖_F + ‖𝓠[Σ_μ W_μ† P_i W_μ]‖_F`.
pub fn verify_noise_compatibility(model: &QuantumModel, decomp: &ZenoDecomposition) -> Result<f64> {
    decomp.check_dim(model.dim())?;
    let d = model.dim();
    let mut worst = 0.0_f64;
    for i in 0..decomp.n() {
        let p = decomp.projector(i);
        let mut forward = CMatrix::zeros(d, d);
        let mut backward = CMatrix::zeros(d, d);
        for w in model.jumps() {
            forward += w * &p * w.adjoint();
            backward += w.adjoint() * &p * w;
        }
        let r = decomp.off_blocks(&forward).norm() + decomp.off_blocks(&backward).norm();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Whether the compatibility residual is below `rel_tol · Σ‖W_μ‖_F²`
/// (`rel_tol` defaults to [`COMPATIBILITY_TOL`]).
pub fn is_noise_compatible(
    model: &QuantumModel,
    decomp: &ZenoDecomposition,
    rel_tol: Option<f64>,
) -> Result<bool> {
    let residual = verify_noise_compatibility(model, decomp)?;
    Ok(residual <= compatibility_threshold(model, rel_tol))
}

pub fn compatibility_threshold(model: &QuantumModel, rel_tol: Option<f64>) -> f64 {
    rel_tol.unwrap_or(COMPATIBILITY_TOL) * model.jump_scale()
}

/// `𝔠(H) = λ_max(H) − λ_min(H)`.
pub fn spectral_spread(h: &CMatrix) -> f64 {
    let (vals, _) = eigh(h);
    match (vals.first(), vals.last()) {
        (Some(lo), Some(hi)) => (hi - lo).max(0.0),
        _ => 0.0,
    }
}

/// Largest Leibnitz defect `‖𝓛(AB) − 𝓛(A)B − A𝓛(B)‖_F` over `trials` seeded
/// random Hermitian pairs normalized to unit Hilbert-Schmidt norm.
pub fn leibnitz_defect_norm(model: &QuantumModel, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Config(
            "leibnitz defect needs at least one trial".into(),
        ));
    }
    let d = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let a = random_unit_hermitian(&mut rng, d);
        let b = random_unit_hermitian(&mut rng, d);
        let defect = model.apply_lindbladian(&(&a * &b))
            - model.apply_lindbladian(&a) * &b
            - &a * model.apply_lindbladian(&b);
        worst = worst.max(defect.norm());
    }
    Ok(worst)
}
