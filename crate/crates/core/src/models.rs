//! Example systems: a driven qubit with spontaneous emission and two
//! tight-binding chains (alternating and linearly tilted on-site energies)
//! with thermally biased nearest-neighbour hopping noise.

use std::f64::consts::FRAC_PI_2;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::superop::{QuantumModel, ZenoDecomposition};

pub const DEFAULT_GAMMA: f64 = 0.1;
pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_E: f64 = 1.0;
pub const DEFAULT_J: f64 = 0.5;
pub const DEFAULT_N: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    QubitRabi,
    Rollercoaster,
    Ladder,
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qubit_rabi" | "qubit" => Ok(ModelFamily::QubitRabi),
            "rollercoaster" => Ok(ModelFamily::Rollercoaster),
            "ladder" => Ok(ModelFamily::Ladder),
            other => Err(Error::Config(format!("unknown model family '{other}'"))),
        }
    }
}

/// Partition patterns for chains of `N` sites.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionPattern {
    /// `N` blocks of one site each.
    #[default]
    SingleSite,
    /// `{1}, {2..N}`.
    #[serde(alias = "edges_1_n-1")]
    Edges,
    /// `{1}, {2..N−1}, {N}`.
    #[serde(alias = "sandwich_1_n-2_1")]
    Sandwich,
    /// Explicit 1-based blocks.
    Custom(Vec<Vec<usize>>),
}

impl DecompositionPattern {
    pub fn name(&self) -> &'static str {
        match self {
            DecompositionPattern::SingleSite => "single_site",
            DecompositionPattern::Edges => "edges",
            DecompositionPattern::Sandwich => "sandwich",
            DecompositionPattern::Custom(_) => "custom",
        }
    }
}

impl FromStr for DecompositionPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_site" => Ok(DecompositionPattern::SingleSite),
            "edges" | "edges_1_n-1" => Ok(DecompositionPattern::Edges),
            "sandwich" | "sandwich_1_n-2_1" => Ok(DecompositionPattern::Sandwich),
            other => Err(Error::Config(format!(
                "unknown decomposition pattern '{other}' (expected single_site, edges or sandwich)"
            ))),
        }
    }
}

/// Numeric parameters; absent entries take the family defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_z: Option<f64>,
}

impl ModelParams {
    /// Set a parameter by name from a CLI/grid key.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "delta" => self.delta = Some(value),
            "theta" => self.theta = Some(value),
            "gamma" => self.gamma = Some(value),
            "e" | "E" => self.e = Some(value),
            "j" | "J" => self.j = Some(value),
            "beta" => self.beta = Some(value),
            "gamma_z" => self.gamma_z = Some(value),
            "n" | "N" => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!(
                        "N must be a nonnegative integer, got {value}"
                    )));
                }
                self.n = Some(value as usize)
            }
            other => return Err(Error::Config(format!("unknown model parameter '{other}'"))),
        }
        Ok(())
    }
}

/// A named example system plus the decomposition to measure it with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default)]
    pub decomposition: DecompositionPattern,
}

impl ModelSpec {
    pub fn new(family: ModelFamily) -> Self {
        ModelSpec {
            family,
            params: ModelParams::default(),
            decomposition: DecompositionPattern::SingleSite,
        }
    }

    pub fn qubit(delta: f64, theta: f64, gamma: f64) -> Self {
        let mut spec = ModelSpec::new(ModelFamily::QubitRabi);
        spec.params.delta = Some(delta);
        spec.params.theta = Some(theta);
        spec.params.gamma = Some(gamma);
        spec
    }

    pub fn chain(family: ModelFamily, n: usize, e: f64, j: f64) -> Self {
        let mut spec = ModelSpec::new(family);
        spec.params.n = Some(n);
        spec.params.e = Some(e);
        spec.params.j = Some(j);
        spec
    }

    pub fn with_pattern(mut self, pattern: DecompositionPattern) -> Self {
        self.decomposition = pattern;
        self
    }

    /// Hilbert-space dimension (2 for the qubit, `N` for chains).
    pub fn dim(&self) -> usize {
        match self.family {
            ModelFamily::QubitRabi => 2,
            _ => self.params.n.unwrap_or(DEFAULT_N),
        }
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma.unwrap_or(DEFAULT_GAMMA)
    }

    pub fn build_model(&self) -> Result<QuantumModel> {
        let p = &self.params;
        let gamma = self.gamma();
        let model = match self.family {
            ModelFamily::QubitRabi => {
                qubit_rabi(p.delta.unwrap_or(1.0), p.theta.unwrap_or(FRAC_PI_2), gamma)?.model
            }
            family => chain(
                family,
                self.dim(),
                p.e.unwrap_or(DEFAULT_E),
                p.j.unwrap_or(DEFAULT_J),
                gamma,
                p.beta.unwrap_or(DEFAULT_BETA),
                p.gamma_z.unwrap_or(0.0),
            )?,
        };
        if self.family == ModelFamily::QubitRabi {
            if let Some(gz) = p.gamma_z.filter(|g| *g > 0.0) {
                let mut jumps = model.jumps().to_vec();
                for a in 0..2 {
                    let mut z = CMatrix::zeros(2, 2);
                    z[(a, a)] = c(gz.sqrt());
                    jumps.push(z);
                }
                return model.with_jumps(jumps);
            }
        }
        Ok(model)
    }

    pub fn build_decomposition(&self) -> Result<ZenoDecomposition> {
        standard_decomposition(self.dim(), &self.decomposition)
    }

    /// Closed-form expectations (qubit only).
    pub fn expectations(&self) -> Option<QubitExpectations> {
        (self.family == ModelFamily::QubitRabi).then(|| {
            let p = &self.params;
            qubit_expectations(p.delta.unwrap_or(1.0), p.theta.unwrap_or(FRAC_PI_2))
        })
    }
}

/// Closed-form values for the qubit with single-site measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitExpectations {
    pub coupling_norm: f64,
    pub spectral_spread: f64,
    pub omega: f64,
    pub zeno_hamiltonian: CMatrix,
}

/// Qubit model together with its closed-form expectations.
#[derive(Debug, Clone)]
pub struct QubitRabi {
    pub model: QuantumModel,
    pub expectations: QubitExpectations,
}

fn qubit_expectations(delta: f64, theta: f64) -> QubitExpectations {
    let z = 0.5 * delta * theta.cos();
    QubitExpectations {
        coupling_norm: 0.5 * (delta * theta.sin()).abs(),
        spectral_spread: delta.abs(),
        omega: (delta * theta.sin()).abs(),
        zeno_hamiltonian: CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(z), c(-z)])),
    }
}

/// `H = (Δ/2)(cosθ·σ_z + sinθ·σ_x)` with the single jump `√γ·|0⟩⟨1|`.
pub fn qubit_rabi(delta: f64, theta: f64, gamma: f64) -> Result<QubitRabi> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::InvalidModel(format!("γ must be ≥ 0, got {gamma}")));
    }
    let (z, x) = (0.5 * delta * theta.cos(), 0.5 * delta * theta.sin());
    let h = CMatrix::from_row_slice(2, 2, &[c(z), c(x), c(x), c(-z)]);
    let mut w = CMatrix::zeros(2, 2);
    w[(0, 1)] = c(gamma.sqrt());
    Ok(QubitRabi {
        model: QuantumModel::new(h, vec![w])?,
        expectations: qubit_expectations(delta, theta),
    })
}

fn chain(
    family: ModelFamily,
    n: usize,
    e: f64,
    j: f64,
    gamma: f64,
    beta: f64,
    gamma_z: f64,
) -> Result<QuantumModel> {
    if n < 2 {
        return Err(Error::InvalidModel(format!(
            "chains need N ≥ 2 sites, got {n}"
        )));
    }
    if !(gamma >= 0.0 && gamma_z >= 0.0) {
        return Err(Error::InvalidModel("rates must be ≥ 0".into()));
    }
    if ![e, j, beta].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidModel("E, J and β must be finite".into()));
    }
    // site s (1-based) sits at index s − 1
    let energy = |site: usize| match family {
        ModelFamily::Rollercoaster => e * (site % 2) as f64,
        ModelFamily::Ladder => e * (n - site) as f64,
        ModelFamily::QubitRabi => unreachable!("qubit is not a chain"),
    };
    let h = CMatrix::from_fn(n, n, |a, b| {
        if a == b {
            c(energy(a + 1))
        } else if a.abs_diff(b) == 1 {
            c(j)
        } else {
            c(0.0)
        }
    });
    let mut jumps = Vec::new();
    if gamma > 0.0 {
        for site in 1..=n {
            let amp = gamma.sqrt()
                * if site % 2 == 1 {
                    (beta * e).exp()
                } else {
                    (-beta * e).exp()
                };
            for target in [site.wrapping_sub(1), site + 1] {
                if (1..=n).contains(&target) {
                    let mut w = CMatrix::zeros(n, n);
                    w[(target - 1, site - 1)] = c(amp);
                    jumps.push(w);
                }
            }
        }
    }
    if gamma_z > 0.0 {
        for a in 0..n {
            let mut w = CMatrix::zeros(n, n);
            w[(a, a)] = c(gamma_z.sqrt());
            jumps.push(w);
        }
    }
    QuantumModel::new(h, jumps)
}

/// On-site energies `E·(s mod 2)`, hopping `J`, biased hopping noise.
pub fn rollercoaster_chain(
    n: usize,
    e: f64,
    j: f64,
    gamma: f64,
    beta: f64,
) -> Result<QuantumModel> {
    chain(ModelFamily::Rollercoaster, n, e, j, gamma, beta, 0.0)
}

/// On-site energies `E·(N − s)`, otherwise as [`rollercoaster_chain`].
pub fn ladder_chain(n: usize, e: f64, j: f64, gamma: f64, beta: f64) -> Result<QuantumModel> {
    chain(ModelFamily::Ladder, n, e, j, gamma, beta, 0.0)
}

/// Standard partitions of `N` sites.
pub fn standard_decomposition(
    n: usize,
    pattern: &DecompositionPattern,
) -> Result<ZenoDecomposition> {
    match pattern {
        DecompositionPattern::SingleSite => ZenoDecomposition::single_site(n),
        DecompositionPattern::Edges => {
            if n < 2 {
                return Err(Error::InvalidDecomposition(format!(
                    "edges pattern needs N ≥ 2, got {n}"
                )));
            }
            ZenoDecomposition::new(vec![vec![0], (1..n).collect()])
        }
        DecompositionPattern::Sandwich => {
            if n < 3 {
                return Err(Error::InvalidDecomposition(format!(
                    "sandwich pattern needs N ≥ 3, got {n}"
                )));
            }
            ZenoDecomposition::new(vec![vec![0], (1..n - 1).collect(), vec![n - 1]])
        }
        DecompositionPattern::Custom(blocks) => ZenoDecomposition::from_one_based(blocks.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superop::{spectral_spread, verify_noise_compatibility, zeno_reduction};
    use crate::witness::oracle_report;
    use std::f64::consts::PI;

    #[test]
    fn qubit_examples() {
        let tight = qubit_rabi(1.0, FRAC_PI_2, 0.1).unwrap();
        assert!((tight.expectations.omega - 1.0).abs() < 1e-15);
        assert!((tight.expectations.spectral_spread - 1.0).abs() < 1e-15);
        assert_eq!(qubit_rabi(1.0, 0.0, 0.1).unwrap().expectations.omega, 0.0);
        let q = qubit_rabi(2.0, PI / 6.0, 0.1).unwrap();
        assert!((q.expectations.coupling_norm - 0.5).abs() < 1e-15);
        assert!(qubit_rabi(1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn qubit_expectations_match_oracle() {
        let decomp = ZenoDecomposition::single_site(2).unwrap();
        for i in 0..=8 {
            let theta = PI * i as f64 / 8.0;
            let q = qubit_rabi(1.0, theta, 0.1).unwrap();
            let report = oracle_report(&q.model, &decomp).unwrap();
            let truth = report.ground_truth.as_ref().unwrap();
            // Ω and ‖H₁₂‖ are square roots, so compare their squares at 1e−12
            assert!((report.omega.powi(2) - q.expectations.omega.powi(2)).abs() < 1e-12);
            assert!(
                (report.coupling_norms[(0, 1)].powi(2) - q.expectations.coupling_norm.powi(2))
                    .abs()
                    < 1e-12
            );
            assert!((truth.spectral_spread - q.expectations.spectral_spread).abs() < 1e-12);
            let hz = zeno_reduction(&q.model, &decomp).unwrap().zeno_hamiltonian;
            assert!((hz - &q.expectations.zeno_hamiltonian).norm() < 1e-12);
        }
    }

    #[test]
    fn rollercoaster_examples() {
        let m = rollercoaster_chain(2, 1.5, 0.3, 0.1, 0.5).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[c(1.5), c(0.3), c(0.3), c(0.0)]);
        assert_eq!(m.hamiltonian(), &expected);
        let flat = rollercoaster_chain(5, 2.0, 0.0, 0.1, 0.5).unwrap();
        assert!((spectral_spread(flat.hamiltonian()) - 2.0).abs() < 1e-12);
        // two end sites with one neighbour, three interior sites with two
        assert_eq!(m.jumps().len(), 2);
        assert_eq!(
            rollercoaster_chain(5, 1.0, 1.0, 0.1, 0.5)
                .unwrap()
                .jumps()
                .len(),
            8
        );
    }

    #[test]
    fn jump_amplitudes_follow_site_parity() {
        let (gamma, beta, e) = (0.2_f64, 0.7, 1.3);
        let m = rollercoaster_chain(3, e, 1.0, gamma, beta).unwrap();
        for w in m.jumps() {
            let (row, col) = (0..3)
                .flat_map(|a| (0..3).map(move |b| (a, b)))
                .find(|&(a, b)| w[(a, b)].norm() > 0.0)
                .unwrap();
            let site = col + 1;
            let expected = gamma.sqrt()
                * if site % 2 == 1 {
                    (beta * e).exp()
                } else {
                    (-beta * e).exp()
                };
            assert!((w[(row, col)].re - expected).abs() < 1e-15);
            assert_eq!(row.abs_diff(col), 1);
        }
    }

    #[test]
    fn ladder_examples() {
        let m = ladder_chain(3, 1.0, 0.2, 0.1, 0.5).unwrap();
        let expected = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0),
                c(0.2),
                c(0.0),
                c(0.2),
                c(1.0),
                c(0.2),
                c(0.0),
                c(0.2),
                c(0.0),
            ],
        );
        assert_eq!(m.hamiltonian(), &expected);
        let flat = ladder_chain(6, 1.5, 0.0, 0.1, 0.5).unwrap();
        assert!((spectral_spread(flat.hamiltonian()) - 7.5).abs() < 1e-12);
    }

    #[test]
    fn chains_are_compatible_with_standard_patterns() {
        for n in 3..=7 {
            for pattern in [
                DecompositionPattern::SingleSite,
                DecompositionPattern::Edges,
                DecompositionPattern::Sandwich,
            ] {
                let decomp = standard_decomposition(n, &pattern).unwrap();
                for family in [ModelFamily::Rollercoaster, ModelFamily::Ladder] {
                    let model = chain(family, n, 1.0, 0.7, 0.1, 0.5, 0.05).unwrap();
                    assert!(verify_noise_compatibility(&model, &decomp).unwrap() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn families_share_couplings_and_omega() {
        for n in 3..=6 {
            for pattern in [
                DecompositionPattern::SingleSite,
                DecompositionPattern::Sandwich,
            ] {
                let decomp = standard_decomposition(n, &pattern).unwrap();
                let a = oracle_report(
                    &rollercoaster_chain(n, 1.0, 2.0, 0.1, 0.5).unwrap(),
                    &decomp,
                )
                .unwrap();
                let b =
                    oracle_report(&ladder_chain(n, 1.0, 2.0, 0.1, 0.5).unwrap(), &decomp).unwrap();
                assert!((&a.coupling_norms - &b.coupling_norms).norm() < 1e-12);
                assert!((a.omega - b.omega).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_site_couplings_are_nearest_neighbour() {
        let model = rollercoaster_chain(5, 1.0, 0.8, 0.1, 0.5).unwrap();
        let decomp = ZenoDecomposition::single_site(5).unwrap();
        let norms = oracle_report(&model, &decomp).unwrap().coupling_norms;
        for i in 0..5usize {
            for j in 0..5 {
                let expected = if i.abs_diff(j) == 1 { 0.8 } else { 0.0 };
                assert!(
                    (norms[(i, j)] - expected).abs() < 1e-7,
                    "{i} {j} {}",
                    norms[(i, j)]
                );
            }
        }
    }

    #[test]
    fn decomposition_patterns() {
        let one =
            |n, p: DecompositionPattern| standard_decomposition(n, &p).unwrap().one_based_blocks();
        assert_eq!(
            one(4, DecompositionPattern::SingleSite),
            vec![vec![1], vec![2], vec![3], vec![4]]
        );
        assert_eq!(
            one(4, DecompositionPattern::Sandwich),
            vec![vec![1], vec![2, 3], vec![4]]
        );
        assert_eq!(
            one(4, DecompositionPattern::Edges),
            vec![vec![1], vec![2, 3, 4]]
        );
        assert!(standard_decomposition(2, &DecompositionPattern::Sandwich).is_err());
        assert_eq!(
            one(3, DecompositionPattern::Custom(vec![vec![1, 3], vec![2]])),
            vec![vec![1, 3], vec![2]]
        );
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{"family":"rollercoaster","params":{"n":5,"j":2.0},"decomposition":"sandwich_1_n-2_1"}"#;
        let spec: ModelSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.decomposition, DecompositionPattern::Sandwich);
        assert_eq!(spec.dim(), 5);
        let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let custom: ModelSpec = serde_json::from_str(
            r#"{"family":"ladder","params":{"n":3},"decomposition":{"custom":[[1],[2,3]]}}"#,
        )
        .unwrap();
        assert_eq!(custom.build_decomposition().unwrap().n(), 2);
        assert!(
            serde_json::from_str::<ModelSpec>(r#"{"family":"ladder","params":{"q":1}}"#).is_err()
        );
    }
}
