// scratch harness for inspecting default-suite dynamics
use meshfuse::config::ExperimentConfig;
use meshfuse::metrics::aggregate;
use meshfuse::models::train_bundle;
use meshfuse::pipeline::{compare, generate_suite, render_stats_report, run_strategy};
use meshfuse::sim::Strategy;

fn main() {
    let t0 = std::time::Instant::now();
    let mut cfg = ExperimentConfig::default();
    let args: Vec<String> = std::env::args().collect();
    // args: [min max area hotspots sigma amp_lo amp_hi]
    if args.len() > 2 {
        cfg.suite.node_count_min = args[1].parse().unwrap();
        cfg.suite.node_count_max = args[2].parse().unwrap();
    }
    if args.len() > 3 {
        cfg.suite.area_width = args[3].parse().unwrap();
        cfg.suite.area_height = cfg.suite.area_width;
    }
    if args.len() > 4 {
        cfg.simulation.congestion.hotspot_count = args[4].parse().unwrap();
    }
    if args.len() > 5 {
        cfg.simulation.congestion.hotspot_sigma_m = args[5].parse().unwrap();
    }
    if args.len() > 7 {
        cfg.simulation.congestion.amplitude_min = args[6].parse().unwrap();
        cfg.simulation.congestion.amplitude_max = args[7].parse().unwrap();
    }
    eprintln!(
        "suite: n={}..{} area={} hotspots={} sigma={} amp={}..{}",
        cfg.suite.node_count_min,
        cfg.suite.node_count_max,
        cfg.suite.area_width,
        cfg.simulation.congestion.hotspot_count,
        cfg.simulation.congestion.hotspot_sigma_m,
        cfg.simulation.congestion.amplitude_min,
        cfg.simulation.congestion.amplitude_max,
    );
    let scenarios = generate_suite(&cfg).unwrap();

    let baseline = run_strategy(&scenarios, &cfg, Strategy::Baseline, None).unwrap();
    println!("baseline run: {:?}", t0.elapsed());
    let b = aggregate(&baseline).unwrap();
    println!(
        "baseline: pdr={:.2} ttl_left={:?} delay={:?} hops={:?}",
        b.pdr_percent, b.avg_ttl_left, b.avg_delay_s, b.avg_hops
    );

    let t1 = std::time::Instant::now();
    let bundle = train_bundle(&baseline, &scenarios, &cfg.simulation, cfg.training.seed).unwrap();
    println!("train: {:?}", t1.elapsed());
    println!("validation A: {:?}", bundle.validation.a);
    println!("validation B: {:?}", bundle.validation.b);
    println!("validation C: {:?}", bundle.validation.c);
    println!("validation D: {:?}", bundle.validation.d);

    let t2 = std::time::Instant::now();
    let abc = run_strategy(&scenarios, &cfg, Strategy::Abc, Some(&bundle)).unwrap();
    let abcd = run_strategy(&scenarios, &cfg, Strategy::Abcd, Some(&bundle)).unwrap();
    println!("ml runs: {:?}", t2.elapsed());

    for logs in [&abc, &abcd] {
        let s = aggregate(logs).unwrap();
        println!(
            "{}: pdr={:.2} ttl_left={:?} delay={:?} hops={:?}",
            s.mode, s.pdr_percent, s.avg_ttl_left, s.avg_delay_s, s.avg_hops
        );
    }

    let report = compare(&baseline, &abc, &abcd, &cfg).unwrap();
    println!("{}", render_stats_report(&report));
    println!("per-scenario PDR (baseline / abc / abcd):");
    for (sid, row) in report.table.scenario_ids.iter().zip(&report.table.cells) {
        println!("  s{sid}: {:.1} / {:.1} / {:.1}", row[0], row[1], row[2]);
    }
    println!("total: {:?}", t0.elapsed());
}
