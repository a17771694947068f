use spinthermal::ensemble::*;
use spinthermal::fit::FitConfig;

fn config() -> EnsembleConfig {
    EnsembleConfig {
        sites: 8,
        lambdas: vec![0.5, 4.0],
        betas: vec![0.0, 0.05, 1.0, 5.0],
        realizations: 12,
        master_seed: 11,
        separations: vec![0, 1, 2],
        fit: Some(FitConfig {
            max_iterations: 20,
            ..FitConfig::default()
        }),
        ..EnsembleConfig::default()
    }
}

fn run_with_threads(threads: usize) -> EnsembleRun {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| run_ensemble(&config()).unwrap())
}

#[test]
fn results_are_bitwise_independent_of_thread_count() {
    let one = run_with_threads(1);
    let many = run_with_threads(5);
    assert_eq!(one, many);
    let bits = |r: &EnsembleRun| -> Vec<u64> {
        r.stats
            .iter()
            .flat_map(|c| [c.mean_eof.to_bits(), c.var_eof.to_bits()])
            .collect()
    };
    assert_eq!(bits(&one), bits(&many));
}

#[test]
fn high_temperature_reduced_states_are_separable() {
    let run = run_with_threads(2);
    assert!(run.failures.is_empty());
    let mut checked = 0;
    for rec in &run.records {
        for p in rec.points.iter().filter(|p| p.beta <= 0.05) {
            assert!(p.purity <= 1.0 / 3.0);
            assert_eq!(p.eof, 0.0);
            checked += 1;
        }
    }
    assert_eq!(checked, 2 * 12 * 2 * 3);
}

#[test]
fn realizations_can_be_rerun_individually() {
    let cfg = config();
    let run = run_ensemble(&cfg).unwrap();
    let rec = &run.records[cfg.realizations + 3];
    assert_eq!(rec.lambda, 4.0);
    let again = run_realization(&cfg, rec.lambda, rec.index).unwrap();
    assert_eq!(&again, rec);
    assert_eq!(
        rec.fields,
        sample_disorder(realization_seed(cfg.master_seed, 3), cfg.sites)
    );
}
