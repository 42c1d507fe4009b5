use dagrta::io::{load_taskset, save_taskset, taskset_from_json, taskset_to_json};
use dagrta::taskgen::{assign_priorities_dm, gen_dag, gen_task, gen_taskset, rng_from_seed, GenConfig, UTIL_TOLERANCE};
use proptest::prelude::*;

#[test]
fn generated_tasks_respect_their_ranges() {
    let cfg = GenConfig::default();
    let mut rng = rng_from_seed(2024);
    let (mut edges, mut pairs) = (0usize, 0usize);
    for _ in 0..10_000 {
        let dag = gen_dag(&cfg, &mut rng);
        let n = dag.len();
        assert!((cfg.n_min..=cfg.n_max).contains(&n));
        assert!(dag.is_weakly_connected());
        assert!(dag.wcets().iter().all(|w| (cfg.wcet_min..=cfg.wcet_max).contains(w)));
        edges += dag.edges().len();
        pairs += n * (n - 1) / 2;

        let task = gen_task(dag, &cfg, &mut rng);
        let (c, l, d, t) = (task.work(), task.span(), task.deadline(), task.period());
        assert!(l <= d && d <= t, "L={l} D={d} T={t}");
        let u = c as f64 / t as f64;
        assert!(u <= c as f64 / l as f64);
        if c as f64 / l as f64 >= cfg.beta {
            // Periods are rounded to integers.
            assert!(u >= cfg.beta * c as f64 / (c as f64 + 0.5 * cfg.beta), "u={u}");
        } else {
            assert_eq!(t, l);
        }
    }
    // The fix-up only adds edges, so the density is at least the edge probability.
    let density = edges as f64 / pairs as f64;
    assert!(
        density >= cfg.edge_prob * 0.98 && density <= cfg.edge_prob + 0.1,
        "{density}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sets_hit_the_target_utilization(seed in any::<u64>(), m in 1u64..=16, frac in 0.05f64..1.0) {
        let cfg = GenConfig::desk();
        let target = (frac * m as f64).max(cfg.beta);
        let ts = gen_taskset(target, m, &cfg, &mut rng_from_seed(seed)).unwrap();
        prop_assert!((ts.utilization() - target).abs() / target <= UTIL_TOLERANCE);
        prop_assert_eq!(ts.processors, m);
        let again = gen_taskset(target, m, &cfg, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(&ts, &again);

        let dm = assign_priorities_dm(ts.clone());
        prop_assert!(dm.tasks.windows(2).all(|w| w[0].deadline() <= w[1].deadline()));

        let back = taskset_from_json(&taskset_to_json(&dm)).unwrap();
        prop_assert_eq!(&back, &dm);
    }
}

#[test]
fn files_round_trip() {
    let ts = gen_taskset(3.0, 4, &GenConfig::desk(), &mut rng_from_seed(9)).unwrap();
    let dir = std::env::temp_dir().join(format!("dagrta-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("set.json");
    save_taskset(&ts, &path).unwrap();
    assert_eq!(load_taskset(&path).unwrap(), ts);
    std::fs::remove_dir_all(&dir).unwrap();
}
