#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeno_witness::linalg::{c, random_hermitian, CMatrix};
use zeno_witness::{QuantumModel, WitnessReport, ZenoDecomposition};

/// Random model with site-diagonal noise (hopping `|a⟩⟨b|` and dephasing
/// `|a⟩⟨a|` jumps) and a random basis-aligned partition into 2–4 blocks.
/// Noise of this form is compatible with every basis-aligned partition.
pub fn random_compatible(seed: u64, max_dim: usize) -> (QuantumModel, ZenoDecomposition) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let d = r.random_range(2..=max_dim);
    let h = random_hermitian(&mut r, d);
    let mut jumps = Vec::new();
    for _ in 0..r.random_range(1..=d + 1) {
        let a = r.random_range(0..d);
        let b = if r.random_bool(0.7) {
            r.random_range(0..d)
        } else {
            a
        };
        let mut w = CMatrix::zeros(d, d);
        w[(a, b)] = c(0.5 * r.random::<f64>());
        jumps.push(w);
    }
    let n = r.random_range(2..=d.min(4));
    let mut order: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        order.swap(i, r.random_range(0..=i));
    }
    let mut blocks = vec![Vec::new(); n];
    for (slot, site) in order.into_iter().enumerate() {
        let b = if slot < n { slot } else { r.random_range(0..n) };
        blocks[b].push(site);
    }
    for b in &mut blocks {
        b.sort_unstable();
    }
    (
        QuantumModel::new(h, jumps).unwrap(),
        ZenoDecomposition::new(blocks).unwrap(),
    )
}

/// Relative Frobenius distance between the stacked `T_μ` of two reports.
pub fn t_mu_error(report: &WitnessReport, reference: &WitnessReport) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in report.t_mu.iter().zip(&reference.t_mu) {
        assert_eq!(a.mu, b.mu);
        num += (&a.matrix - &b.matrix).norm_squared();
        den += b.matrix.norm_squared();
    }
    (num, den)
}
