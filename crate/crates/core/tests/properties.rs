mod common;

use proptest::prelude::*;
use zeno_witness::linalg::{eigvalsh_real, RMatrix};
use zeno_witness::superop::spectral_spread;
use zeno_witness::witness::{
    constraint_residuals, design_measurement, modulation_matrix, oracle_report, pseudoinverse_w,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn auto_design_w_satisfies_constraints(n in 2usize..=6, log_t in -4.0f64..2.0) {
        let design = design_measurement(n, 10f64.powf(log_t), None).unwrap();
        let m = modulation_matrix(&design).unwrap();
        let w = pseudoinverse_w(&m).unwrap();
        let (constraint, rows) = constraint_residuals(&w, &m);
        prop_assert!(constraint <= 1e-10, "‖WM − 1‖ = {constraint:e}");
        prop_assert!(rows <= 1e-10, "row sum {rows:e}");
    }

    #[test]
    fn oracle_c_is_psd_with_sqrt_dim_null_vector(seed in any::<u64>()) {
        let (model, decomp) = common::random_compatible(seed, 6);
        let report = oracle_report(&model, &decomp).unwrap();
        let c = &report.c_matrix;
        let scale = c.norm().max(1e-300);
        prop_assert!((c - c.transpose()).norm() <= 1e-12 * scale);
        let lmin = eigvalsh_real(c).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(lmin >= -1e-12 * scale);
        let v = RMatrix::from_iterator(c.nrows(), 1, report.dims.iter().map(|&d| (d as f64).sqrt()));
        prop_assert!((c * v).norm() <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn witness_never_exceeds_spectral_spread(seed in any::<u64>()) {
        let (model, decomp) = common::random_compatible(seed, 6);
        let omega = oracle_report(&model, &decomp).unwrap().omega;
        prop_assert!(omega <= spectral_spread(model.hamiltonian()) + 1e-9);
    }

    #[test]
    fn coupling_norms_are_symmetric_and_nonnegative(seed in any::<u64>()) {
        let (model, decomp) = common::random_compatible(seed, 5);
        let h = oracle_report(&model, &decomp).unwrap().coupling_norms;
        for i in 0..h.nrows() {
            prop_assert!(h[(i, i)] == 0.0);
            for j in 0..h.ncols() {
                prop_assert!(h[(i, j)] >= 0.0);
                prop_assert!((h[(i, j)] - h[(j, i)]).abs() <= 1e-12 * (1.0 + h[(i, j)]));
            }
        }
    }
}
