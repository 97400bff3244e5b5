// Scratch scan for surveillance training dynamics across reward scales,
// exploration widths and kernel bandwidths.
use std::time::Instant;

use kpg_core::envs::{SurveillanceEnv, SurveillanceParams};
use kpg_core::pg::{Trainer, TrainerConfig, VarianceMode};
use kpg_core::rkhs::KernelSpec;

struct Outcome {
    max_m: usize,
    low: u32,
    high: u32,
    goal: u32,
    charger: u32,
    max_speed: f64,
    max_dist: f64,
    secs: f64,
    guard: bool,
}

fn run(iters: u64, seed: u64, c_pos: f64, sigma: f64, bw_x: f64, bw_b: f64) -> Outcome {
    let params = SurveillanceParams {
        position_weight: c_pos,
        velocity_weight: c_pos * 0.25,
        action_weight: c_pos * 0.05,
        barrier_weight: c_pos * 2.5,
        reward_bound: 1.0,
        ..SurveillanceParams::default()
    };
    let env = SurveillanceEnv::new(params.clone()).unwrap();
    let kernel = KernelSpec::new(6, 2, vec![bw_x, bw_x, bw_x, bw_x, bw_b, 1.0]).unwrap();
    let config = TrainerConfig {
        gamma: 0.9,
        eta: 0.05,
        compression_k: 0.5,
        variance_mode: VarianceMode::AntitheticNoise,
        max_model_order_guard: Some(600),
        seed,
        legacy_q_scaling: false,
    };
    let mut trainer = Trainer::new(&env, kernel, vec![sigma * sigma, sigma * sigma], config).unwrap();

    let start = Instant::now();
    let mut o = Outcome {
        max_m: 0,
        low: 0,
        high: 0,
        goal: 0,
        charger: 0,
        max_speed: 0.0,
        max_dist: 0.0,
        secs: 0.0,
        guard: false,
    };
    let mut prev_b = 100.0f64;
    let mut last_visit = ' ';
    for _ in 0..iters {
        let rec = match trainer.step(&env) {
            Ok(r) => r,
            Err(_) => {
                o.guard = true;
                break;
            }
        };
        let s = &rec.system_state;
        o.max_m = o.max_m.max(rec.model_order);
        let b = s[4];
        if prev_b >= 40.0 && b < 40.0 {
            o.low += 1;
        }
        if prev_b < 90.0 && b >= 90.0 {
            o.high += 1;
        }
        prev_b = b;
        let dg = ((s[0] - params.goal[0]).powi(2) + (s[1] - params.goal[1]).powi(2)).sqrt();
        let dc = ((s[0] - params.charger[0]).powi(2) + (s[1] - params.charger[1]).powi(2)).sqrt();
        if dg <= 1.0 && last_visit != 'G' {
            o.goal += 1;
            last_visit = 'G';
        }
        if dc <= 1.0 && last_visit != 'C' {
            o.charger += 1;
            last_visit = 'C';
        }
        o.max_speed = o.max_speed.max((s[2] * s[2] + s[3] * s[3]).sqrt());
        o.max_dist = o.max_dist.max((s[0] * s[0] + s[1] * s[1]).sqrt());
    }
    o.secs = start.elapsed().as_secs_f64();
    o
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let iters: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    println!("iters={iters}");
    println!("c_pos  sigma bw_x bw_b | maxM lo hi goal chg |v|max distmax secs guard");
    for &c_pos in &[0.0003, 0.001, 0.003] {
        for &sigma in &[1.0, 2.0] {
            for &(bw_x, bw_b) in &[(3.0, 400.0), (4.0, 400.0)] {
                let o = run(iters, 1, c_pos, sigma, bw_x, bw_b);
                println!(
                    "{c_pos:<6} {sigma:<5} {bw_x:<4} {bw_b:<4} | {:4} {:2} {:2} {:4} {:3} {:7.1} {:7.1} {:5.1} {}",
                    o.max_m, o.low, o.high, o.goal, o.charger, o.max_speed, o.max_dist, o.secs, o.guard
                );
            }
        }
    }
}
