// scratch calibration runs for the acceptance suite; removed before release
use crossing_core::mc::{self, MCConfig};
use crossing_core::process::{Barrier, Preset, ProcessSpec};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("bench");
    match which {
        "bench" => {
            // raw step throughput: driftless BM far from the barrier
            let spec = ProcessSpec::from_preset(Preset::BmDrift { mu: 0.0 }).unwrap();
            let b = Barrier::new(1000.0, 0.0).unwrap();
            let cfg = MCConfig::new(1e-4, 200, 50.0, 7, false).unwrap();
            let t0 = Instant::now();
            let samples = mc::simulate_paths(&spec, &b, &cfg).unwrap();
            let dt = t0.elapsed().as_secs_f64();
            let steps: f64 = samples.iter().map(|s| s.tau / 1e-4).sum();
            println!("bench: {:.1}M steps in {:.2}s -> {:.1}M steps/s (wall, all cores)",
                steps / 1e6, dt, steps / dt / 1e6);
        }
        "minlaw" => {
            let mu: f64 = args[2].parse().unwrap();
            let x: f64 = args[3].parse().unwrap();
            let t_max: f64 = args[4].parse().unwrap();
            let n: usize = args[5].parse().unwrap();
            let bridge: bool = args.get(6).map(|s| s == "bridge").unwrap_or(false);
            let spec = ProcessSpec::from_preset(Preset::BmDrift { mu }).unwrap();
            let b = Barrier::new(2.0, x).unwrap();
            let cfg = MCConfig::new(1e-4, n, t_max, 2024, bridge).unwrap();
            let t0 = Instant::now();
            let samples = mc::simulate_paths(&spec, &b, &cfg).unwrap();
            let wall = t0.elapsed().as_secs_f64();
            let stats = mc::estimate_crossing_stats(&samples).unwrap();
            let ks = mc::min_law_check(&samples, &spec, &b).unwrap();
            println!(
                "minlaw mu={mu} x={x} t_max={t_max} n={n} bridge={bridge}: KS={ks:.4} censored={:.4} wall={wall:.1}s",
                stats.censored_fraction
            );
        }
        _ => eprintln!("unknown pilot"),
    }
}
