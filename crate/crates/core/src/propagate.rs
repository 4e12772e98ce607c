//! Driven evolution under `𝓛 − ik·ad_{H_m}` and the prepare/evolve/measure
//! protocol that yields transition probabilities `P(k, t)` and rates `Ṗ(k, t)`.

use std::io::Write;
use std::str::FromStr;

use log::warn;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, RMatrix, I};
use crate::superop::{
    adjoint_action, build_lindbladian, compatibility_threshold, ordered_pairs,
    verify_noise_compatibility, QuantumModel, SuperOp, ZenoDecomposition,
};

/// Relative tolerance used when comparing measurement levels and their differences.
pub const LEVEL_TOL: f64 = 1e-12;

/// Default probe time in units of `1/‖𝓛‖₂`.
pub const DEFAULT_T_NORM: f64 = 0.01;

/// `t·‖𝓛‖₂` above which small-time rates are refused.
pub const SMALLTIME_MAX_T_NORM: f64 = 0.1;

/// `t·‖𝓛‖₂` above which small-time rates log a warning.
pub const SMALLTIME_WARN_T_NORM: f64 = 0.05;

/// Eigenvalue floor for accepting an input density matrix.
pub const PSD_FLOOR: f64 = -1e-10;

/// How `Ṗ` is obtained from the simulated protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// Generator applied to the exactly propagated state.
    Exact,
    /// Central difference of exact probabilities at `t ± h`.
    #[serde(alias = "fd")]
    FiniteDifference,
    /// Closed-form next-to-leading-order small-time rates.
    Smalltime,
    /// Central difference of multinomially sampled frequencies.
    Sampled,
}

impl RateMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RateMode::Exact => "exact",
            RateMode::FiniteDifference => "finite_difference",
            RateMode::Smalltime => "smalltime",
            RateMode::Sampled => "sampled",
        }
    }
}

impl std::fmt::Display for RateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(RateMode::Exact),
            "fd" | "finite_difference" => Ok(RateMode::FiniteDifference),
            "smalltime" => Ok(RateMode::Smalltime),
            "sampled" => Ok(RateMode::Sampled),
            other => Err(Error::Config(format!(
                "unknown rate mode '{other}' (expected exact, fd, smalltime or sampled)"
            ))),
        }
    }
}

/// Levels of `H_m`, drive strengths, probe time and rate estimation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDesign {
    pub eta: Vec<f64>,
    pub k_set: Vec<f64>,
    pub t: f64,
    #[serde(default = "default_mode")]
    pub rate_mode: RateMode,
    /// Finite-difference half step; `t·1e−3` when absent.
    #[serde(default)]
    pub fd_step: Option<f64>,
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_mode() -> RateMode {
    RateMode::Exact
}

impl MeasurementDesign {
    pub fn new(eta: Vec<f64>, k_set: Vec<f64>, t: f64) -> Self {
        MeasurementDesign {
            eta,
            k_set,
            t,
            rate_mode: RateMode::Exact,
            fd_step: None,
            shots: 0,
            seed: 0,
        }
    }

    pub fn with_mode(mut self, mode: RateMode) -> Self {
        self.rate_mode = mode;
        self
    }

    pub fn with_shots(mut self, shots: u64) -> Self {
        self.shots = shots;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = Some(h);
        self
    }

    pub fn n(&self) -> usize {
        self.eta.len()
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step.unwrap_or(self.t * 1e-3)
    }

    /// Frequencies `ω_μ = η_r − η_s` in lexicographic `(r, s)` order.
    pub fn frequencies(&self) -> Vec<f64> {
        ordered_pairs(self.n())
            .into_iter()
            .map(|(r, s)| self.eta[r] - self.eta[s])
            .collect()
    }

    fn level_scale(&self) -> f64 {
        self.eta.iter().fold(1.0_f64, |m, e| m.max(e.abs()))
    }

    /// Pairs of distinct ordered pairs whose frequencies coincide (1-based).
    pub fn duplicate_differences(&self) -> Vec<((usize, usize), (usize, usize))> {
        let pairs = ordered_pairs(self.n());
        let freqs = self.frequencies();
        let tol = LEVEL_TOL * self.level_scale();
        let mut dups = Vec::new();
        for a in 0..pairs.len() {
            for b in (a + 1)..pairs.len() {
                if (freqs[a] - freqs[b]).abs() <= tol {
                    let (r, s) = pairs[a];
                    let (u, v) = pairs[b];
                    dups.push(((r + 1, s + 1), (u + 1, v + 1)));
                }
            }
        }
        dups
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta.len() < 2 {
            return Err(Error::InvalidDesign(format!(
                "need at least 2 levels, got {}",
                self.eta.len()
            )));
        }
        if self.eta.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidDesign("levels must be finite".into()));
        }
        let tol = LEVEL_TOL * self.level_scale();
        for (r, s) in ordered_pairs(self.n()) {
            if r < s && (self.eta[r] - self.eta[s]).abs() <= tol {
                return Err(Error::InvalidDesign(format!(
                    "levels {} and {} coincide (η = {})",
                    r + 1,
                    s + 1,
                    self.eta[r]
                )));
            }
        }
        let dups = self.duplicate_differences();
        if let Some(((r, s), (u, v))) = dups.first() {
            return Err(Error::InvalidDesign(format!(
                "duplicate level difference: η{r} − η{s} = η{u} − η{v} ({} duplicate pair(s))",
                dups.len()
            )));
        }
        if self.k_set.is_empty() {
            return Err(Error::InvalidDesign("k_set is empty".into()));
        }
        if let Some(k) = self.k_set.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
            return Err(Error::InvalidDesign(format!(
                "drive strengths must be positive, got {k}"
            )));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(Error::InvalidDesign(format!(
                "probe time must be positive, got {}",
                self.t
            )));
        }
        let h = self.fd_step();
        if !(h.is_finite() && h > 0.0 && h < self.t) {
            return Err(Error::InvalidDesign(format!(
                "finite-difference step must lie in (0, t), got {h}"
            )));
        }
        if self.rate_mode == RateMode::Sampled && self.shots == 0 {
            return Err(Error::InvalidDesign("sampled mode needs shots > 0".into()));
        }
        Ok(())
    }

    fn check_against(&self, decomp: &ZenoDecomposition) -> Result<()> {
        self.validate()?;
        if self.n() != decomp.n() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} levels but the decomposition has {} blocks",
                self.n(),
                decomp.n()
            )));
        }
        Ok(())
    }
}

/// Multinomial frequencies at `t ± h` kept for resampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFrequencies {
    pub shots: u64,
    pub h: f64,
    #[serde(with = "crate::linalg::real_matrix_serde")]
    pub p_minus: RMatrix,
    #[serde(with = "crate::linalg::real_matrix_serde")]
    pub p_plus: RMatrix,
}

/// Protocol output at one drive strength: `[P]_ij = p_{i←j}(k, t)` and `Ṗ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionData {
    pub k: f64,
    pub t: f64,
    pub mode: RateMode,
    #[serde(default, with = "crate::linalg::opt_real_matrix_serde")]
    pub p: Option<RMatrix>,
    #[serde(default, with = "crate::linalg::opt_real_matrix_serde")]
    pub pdot: Option<RMatrix>,
    #[serde(default, with = "crate::linalg::opt_real_matrix_serde")]
    pub p_stderr: Option<RMatrix>,
    #[serde(default, with = "crate::linalg::opt_real_matrix_serde")]
    pub pdot_stderr: Option<RMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled: Option<SampledFrequencies>,
}

impl TransitionData {
    fn empty(k: f64, t: f64, mode: RateMode) -> Self {
        TransitionData {
            k,
            t,
            mode,
            p: None,
            pdot: None,
            p_stderr: None,
            pdot_stderr: None,
            sampled: None,
        }
    }

    pub fn n(&self) -> usize {
        self.p
            .as_ref()
            .or(self.pdot.as_ref())
            .map_or(0, |m| m.nrows())
    }
}

/// Write protocol records as CSV with columns `k,t,i,j,p,pdot,stderr`
/// (1-based `i`, `j`; `stderr` refers to `pdot` when present, else `p`).
pub fn write_transition_csv<W: Write>(data: &[TransitionData], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "t", "i", "j", "p", "pdot", "stderr"])?;
    let fmt = |m: &Option<RMatrix>, i: usize, j: usize| {
        m.as_ref()
            .map(|m| format!("{:e}", m[(i, j)]))
            .unwrap_or_default()
    };
    for d in data {
        let stderr = if d.pdot.is_some() {
            &d.pdot_stderr
        } else {
            &d.p_stderr
        };
        for i in 0..d.n() {
            for j in 0..d.n() {
                w.write_record([
                    format!("{:e}", d.k),
                    format!("{:e}", d.t),
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    fmt(&d.p, i, j),
                    fmt(&d.pdot, i, j),
                    fmt(stderr, i, j),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `H_m = Σ_i η_i P_i`.
pub fn measurement_hamiltonian(decomp: &ZenoDecomposition, eta: &[f64]) -> CMatrix {
    let d = decomp.dim();
    CMatrix::from_fn(d, d, |a, b| {
        if a == b {
            c(eta[decomp.block_of(a)])
        } else {
            c(0.0)
        }
    })
}

/// `‖𝓛‖₂`, the largest singular value of the Liouvillian matrix.
pub fn liouvillian_norm(model: &QuantumModel) -> Result<f64> {
    Ok(build_lindbladian(model)?.norm2())
}

/// Probe time `t = t_norm/‖𝓛‖₂` (`t_norm` defaults to [`DEFAULT_T_NORM`]).
pub fn default_probe_time(model: &QuantumModel, t_norm: Option<f64>) -> Result<f64> {
    let norm = liouvillian_norm(model)?;
    if norm <= 0.0 {
        return Err(Error::InvalidModel(
            "the Liouvillian vanishes; no natural probe time".into(),
        ));
    }
    Ok(t_norm.unwrap_or(DEFAULT_T_NORM) / norm)
}

/// `𝓛 − ik·ad_{H_m}` with `H_m = Σ η_i P_i`.
pub fn full_generator(
    model: &QuantumModel,
    decomp: &ZenoDecomposition,
    design: &MeasurementDesign,
    k: f64,
) -> Result<SuperOp> {
    decomp.check_dim(model.dim())?;
    design.check_against(decomp)?;
    let lindbladian = build_lindbladian(model)?;
    let drive = adjoint_action(&measurement_hamiltonian(decomp, &design.eta))?;
    Ok(driven(&lindbladian, &drive, k))
}

fn driven(lindbladian: &SuperOp, drive: &SuperOp, k: f64) -> SuperOp {
    if k == 0.0 {
        lindbladian.clone()
    } else {
        lindbladian.sub(&drive.scale(I * c(k)))
    }
}

/// Propagator `exp(t·G)`.
pub fn propagator(gen: &SuperOp, t: f64) -> SuperOp {
    let m = gen.matrix() * c(t);
    SuperOp::from_matrix(gen.dim(), m.exp()).expect("exponential preserves shape")
}

fn validate_state(rho: &CMatrix, d: usize) -> Result<()> {
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::InvalidState(format!(
            "state is {}x{}, expected {d}x{d}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let herm = linalg::hermiticity_defect(rho);
    if herm > 1e-10 * rho.norm().max(1.0) {
        return Err(Error::InvalidState(format!(
            "state is not Hermitian (defect {herm:.3e})"
        )));
    }
    let tr = linalg::trace(rho);
    if (tr - c(1.0)).norm() > 1e-10 {
        return Err(Error::InvalidState(format!(
            "state trace is {tr}, expected 1"
        )));
    }
    let (vals, _) = linalg::eigh(rho);
    if let Some(&lo) = vals.first() {
        if lo < PSD_FLOOR {
            return Err(Error::InvalidState(format!(
                "state has eigenvalue {lo:.3e} below {PSD_FLOOR:e}"
            )));
        }
    }
    Ok(())
}

/// `devec(exp(t·G)·vec(ρ₀))`.
pub fn evolve_state(gen: &SuperOp, rho0: &CMatrix, t: f64) -> Result<CMatrix> {
    validate_state(rho0, gen.dim())?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidState(format!(
            "evolution time must be ≥ 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    Ok(propagator(gen, t).apply(rho0))
}

/// `(1 − e^{−itkω})/(ikω) = t·e^{−iy/2}·sinc(y/2)` with `y = tkω`; equals `t` at `kω = 0`.
pub fn drive_factor(t: f64, k: f64, omega: f64) -> Complex64 {
    let half = 0.5 * t * k * omega;
    let sinc = if half.abs() < 0.5e-6 {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    Complex64::from_polar(t * sinc, -half)
}

/// Everything needed to run the protocol repeatedly for one (model, decomposition, design).
#[derive(Debug, Clone)]
pub struct Protocol<'a> {
    model: &'a QuantumModel,
    decomp: &'a ZenoDecomposition,
    design: &'a MeasurementDesign,
    lindbladian: SuperOp,
    drive: SuperOp,
}

impl<'a> Protocol<'a> {
    pub fn new(
        model: &'a QuantumModel,
        decomp: &'a ZenoDecomposition,
        design: &'a MeasurementDesign,
    ) -> Result<Self> {
        decomp.check_dim(model.dim())?;
        design.check_against(decomp)?;
        let lindbladian = build_lindbladian(model)?;
        let drive = adjoint_action(&measurement_hamiltonian(decomp, &design.eta))?;
        Ok(Protocol {
            model,
            decomp,
            design,
            lindbladian,
            drive,
        })
    }

    pub fn lindbladian(&self) -> &SuperOp {
        &self.lindbladian
    }

    pub fn generator(&self, k: f64) -> SuperOp {
        driven(&self.lindbladian, &self.drive, k)
    }

    /// Initial state `P_j/d_j`.
    pub fn preparation(&self, j: usize) -> CMatrix {
        let d_j = self.decomp.blocks()[j].len() as f64;
        self.decomp.projector(j) / c(d_j)
    }

    fn block_populations(&self, rho: &CMatrix) -> Vec<f64> {
        self.decomp
            .block_traces(rho)
            .into_iter()
            .map(|z| z.re)
            .collect()
    }

    /// Exact `P(k, t')` for all preparations.
    fn exact_probabilities(&self, k: f64, t: f64) -> RMatrix {
        let n = self.decomp.n();
        if t == 0.0 {
            return RMatrix::identity(n, n);
        }
        let prop = propagator(&self.generator(k), t);
        let mut p = RMatrix::zeros(n, n);
        for j in 0..n {
            let rho = prop.apply(&self.preparation(j));
            for (i, v) in self.block_populations(&rho).into_iter().enumerate() {
                p[(i, j)] = v;
            }
        }
        p
    }

    fn k_index(&self, k: f64) -> u64 {
        self.design
            .k_set
            .iter()
            .position(|&x| x.to_bits() == k.to_bits())
            .map_or(k.to_bits(), |i| i as u64)
    }

    /// Sample `shots` outcomes per column of `p`; returns frequencies and binomial stderrs.
    fn sample(&self, p: &RMatrix, k: f64, tag: u64) -> (RMatrix, RMatrix) {
        let n = p.nrows();
        let shots = self.design.shots;
        let mut freq = RMatrix::zeros(n, n);
        let mut stderr = RMatrix::zeros(n, n);
        for j in 0..n {
            let seed = task_seed(self.design.seed, self.k_index(k), j as u64, tag);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let probs: Vec<f64> = (0..n).map(|i| p[(i, j)].clamp(0.0, 1.0)).collect();
            let total: f64 = probs.iter().sum();
            let counts = multinomial(&mut rng, shots, &probs, total);
            for i in 0..n {
                let f = counts[i] as f64 / shots as f64;
                freq[(i, j)] = f;
                stderr[(i, j)] = (f * (1.0 - f) / shots as f64).sqrt();
            }
        }
        (freq, stderr)
    }

    /// Steps 1–4 of the protocol: `P(k, t)` only.
    pub fn transition(&self, k: f64) -> TransitionData {
        let t = self.design.t;
        let exact = self.exact_probabilities(k, t);
        let mut out = TransitionData::empty(k, t, self.design.rate_mode);
        if self.design.rate_mode == RateMode::Sampled {
            let (freq, se) = self.sample(&exact, k, 0);
            out.p = Some(freq);
            out.p_stderr = Some(se);
        } else {
            out.p = Some(exact);
        }
        out
    }

    /// `P` and `Ṗ` according to the design's rate mode.
    pub fn rates(&self, k: f64) -> Result<TransitionData> {
        match self.design.rate_mode {
            RateMode::Exact => Ok(self.exact_rates(k)),
            RateMode::FiniteDifference => Ok(self.finite_difference_rates(k)),
            RateMode::Sampled => Ok(self.sampled_rates(k)),
            RateMode::Smalltime => self.smalltime(k),
        }
    }

    fn exact_rates(&self, k: f64) -> TransitionData {
        let t = self.design.t;
        let n = self.decomp.n();
        let gen = self.generator(k);
        let prop = propagator(&gen, t);
        let mut p = RMatrix::zeros(n, n);
        let mut pdot = RMatrix::zeros(n, n);
        for j in 0..n {
            let rho = prop.apply(&self.preparation(j));
            let drho = gen.apply(&rho);
            for (i, v) in self.block_populations(&rho).into_iter().enumerate() {
                p[(i, j)] = v;
            }
            for (i, v) in self.block_populations(&drho).into_iter().enumerate() {
                pdot[(i, j)] = v;
            }
        }
        let mut out = TransitionData::empty(k, t, RateMode::Exact);
        out.p = Some(p);
        out.pdot = Some(pdot);
        out
    }

    fn finite_difference_rates(&self, k: f64) -> TransitionData {
        let t = self.design.t;
        let h = self.design.fd_step();
        let plus = self.exact_probabilities(k, t + h);
        let minus = self.exact_probabilities(k, t - h);
        let mut out = TransitionData::empty(k, t, RateMode::FiniteDifference);
        out.p = Some(self.exact_probabilities(k, t));
        out.pdot = Some((plus - minus) / (2.0 * h));
        out
    }

    fn sampled_rates(&self, k: f64) -> TransitionData {
        let t = self.design.t;
        let h = self.design.fd_step();
        let (p, p_se) = self.sample(&self.exact_probabilities(k, t), k, 0);
        let (minus, minus_se) = self.sample(&self.exact_probabilities(k, t - h), k, 1);
        let (plus, plus_se) = self.sample(&self.exact_probabilities(k, t + h), k, 2);
        let pdot = (&plus - &minus) / (2.0 * h);
        let pdot_se = plus_se.zip_map(&minus_se, |a, b| (a * a + b * b).sqrt() / (2.0 * h));
        let mut out = TransitionData::empty(k, t, RateMode::Sampled);
        out.p = Some(p);
        out.p_stderr = Some(p_se);
        out.pdot = Some(pdot);
        out.pdot_stderr = Some(pdot_se);
        out.sampled = Some(SampledFrequencies {
            shots: self.design.shots,
            h,
            p_minus: minus,
            p_plus: plus,
        });
        out
    }

    /// Small-time rates `Tr[P_i (𝓓₀(t) + 𝓓₁(t))[ρ_j]]`.
    pub fn smalltime(&self, k: f64) -> Result<TransitionData> {
        let t = self.design.t;
        let t_norm = t * self.lindbladian.norm2();
        if t_norm > SMALLTIME_MAX_T_NORM {
            return Err(Error::InvalidDesign(format!(
                "small-time rates need t·‖𝓛‖₂ ≤ {SMALLTIME_MAX_T_NORM}, got {t_norm:.4}"
            )));
        }
        if t_norm > SMALLTIME_WARN_T_NORM {
            warn!("t·‖𝓛‖₂ = {t_norm:.4} is above {SMALLTIME_WARN_T_NORM}; small-time rates lose accuracy");
        }
        let residual = verify_noise_compatibility(self.model, self.decomp)?;
        if residual > compatibility_threshold(self.model, None) {
            warn!("noise is not compatible with the decomposition (residual {residual:.3e})");
        }
        let mut out = TransitionData::empty(k, t, RateMode::Smalltime);
        out.pdot = Some(self.smalltime_pdot(k, true));
        Ok(out)
    }

    /// `Ṗ` from `𝓓₀`, optionally plus `𝓓₁`.
    fn smalltime_pdot(&self, k: f64, with_coherent: bool) -> RMatrix {
        let t = self.design.t;
        let n = self.decomp.n();
        let l = &self.lindbladian;
        let mut pdot = RMatrix::zeros(n, n);
        for j in 0..n {
            let rho = self.preparation(j);
            let first = l.apply(&rho);
            let populations = self.decomp.pinch(&first);
            let mut rate = self.decomp.pinch(&l.apply(&(&rho + &populations * c(t))));
            if with_coherent {
                let coherences = &first - &populations;
                let rotated = CMatrix::from_fn(rho.nrows(), rho.ncols(), |a, b| {
                    let (r, s) = (self.decomp.block_of(a), self.decomp.block_of(b));
                    if r == s {
                        c(0.0)
                    } else {
                        coherences[(a, b)]
                            * drive_factor(t, k, self.design.eta[r] - self.design.eta[s])
                    }
                });
                rate += self.decomp.pinch(&l.apply(&rotated));
            }
            for (i, v) in self.block_populations(&rate).into_iter().enumerate() {
                pdot[(i, j)] = v;
            }
        }
        pdot
    }
}

/// Per-task seed derived from `(seed, k-index, preparation, tag)` so that
/// parallel and serial evaluation draw identical samples.
pub fn task_seed(seed: u64, k_index: u64, j: u64, tag: u64) -> u64 {
    let mut x = seed;
    for v in [k_index, j, tag] {
        x = splitmix(x ^ splitmix(v.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    x
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Multinomial draw by sequential binomials.
pub(crate) fn multinomial<R: rand::Rng>(
    rng: &mut R,
    shots: u64,
    probs: &[f64],
    total: f64,
) -> Vec<u64> {
    let mut counts = vec![0; probs.len()];
    let mut remaining = shots;
    let mut mass = total;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            counts[i] = remaining;
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(remaining, q)
            .expect("probability in [0, 1]")
            .sample(rng);
        counts[i] = draw;
        remaining -= draw;
        mass -= p;
    }
    counts
}

/// Protocol probabilities `P(k, t)`.
pub fn transition_matrix(
    model: &QuantumModel,
    decomp: &ZenoDecomposition,
    design: &MeasurementDesign,
    k: f64,
) -> Result<TransitionData> {
    Ok(Protocol::new(model, decomp, design)?.transition(k))
}

/// Protocol probabilities and rates in the design's rate mode.
pub fn rate_matrix(
    model: &QuantumModel,
    decomp: &ZenoDecomposition,
    design: &MeasurementDesign,
    k: f64,
) -> Result<TransitionData> {
    Protocol::new(model, decomp, design)?.rates(k)
}

/// Closed-form small-time rates (`Ṗ` only).
pub fn smalltime_rates(
    model: &QuantumModel,
    decomp: &ZenoDecomposition,
    design: &MeasurementDesign,
    k: f64,
) -> Result<TransitionData> {
    Protocol::new(model, decomp, design)?.smalltime(k)
}

/// Zeno-limit rates `Tr[P_i 𝓓₀(t)[ρ_j]]` (the `k → ∞` limit of small-time rates).
pub fn zeno_limit_rates(
    model: &QuantumModel,
    decomp: &ZenoDecomposition,
    design: &MeasurementDesign,
) -> Result<RMatrix> {
    Ok(Protocol::new(model, decomp, design)?.smalltime_pdot(0.0, false))
}
