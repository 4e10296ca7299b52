//! Frozen baselines for the small toy run (gamma = 3/4, p = inf, C = c = 1,
//! k_max = 1, n_max = 400).

use hcgrowth::harness::{run_suite, RunConfig};

fn toy(dir: &std::path::Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    for (k, v) in [("C", "1"), ("c", "1"), ("k_max", "1"), ("n_max", "400")] {
        cfg.set(k, v).unwrap();
    }
    cfg.output_dir = dir.to_path_buf();
    cfg
}

fn close(got: f64, want: f64) -> bool {
    (got - want).abs() <= 1e-9 * want.abs()
}

#[test]
fn toy_run_matches_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_suite(&toy(dir.path())).unwrap();
    assert_eq!(out.exit_code, 0);
    let assembly = out.bundle.assembly.as_ref().unwrap();

    // alpha_1 = 9 puts the first nonempty kernel at n >= 81 and the first
    // active block at n = 90 = 2 * 45; class 1 then steps by 4 up to 398
    let expected_n: Vec<u64> = (90..=400).step_by(4).collect();
    let built: Vec<u64> = assembly.blocks.iter().map(|b| b.descriptor.n).collect();
    assert_eq!(built, expected_n);
    // one term per kernel coefficient: floor(sqrt(n) / 9) is 2 from n = 326 on
    let terms: usize = expected_n.iter().map(|&n| if n >= 324 { 2 } else { 1 }).sum();
    assert_eq!(assembly.series.len(), terms);
    assert_eq!(assembly.series.min_exponent(), Some(90 * 90));

    let witness = out.bundle.witness.unwrap();
    assert!(close(witness.value, 0.094_177_194_499_252_66), "{witness:?}");
    let growth = out.bundle.growth.as_ref().unwrap();
    assert!(close(growth.sup_gamma, 0.183_336_428_734_686_9), "{}", growth.sup_gamma);
    let density = &out.bundle.density.as_ref().unwrap()[0];
    assert!(close(density.running_max, 0.076_041_256_312_353_66), "{}", density.running_max);
}
