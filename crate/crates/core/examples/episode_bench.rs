//! Times random-brain episodes on random bodies and prints their qualities.

use std::time::Instant;

use vsr_core::controller::{random_params, ControllerSpec};
use vsr_core::morphology::random_body;
use vsr_core::seeding;
use vsr_core::tasks::{TaskEnv, TaskId};

fn main() {
    let task: TaskId = std::env::args().nth(1).as_deref().unwrap_or("simple").parse().expect("task name");
    let n: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(50);
    let env = TaskEnv::new(task);
    let mut rng = seeding::stream(1, &[]);
    let mut qs = Vec::new();
    let start = Instant::now();
    for _ in 0..n {
        let body = random_body(&mut rng);
        let theta = random_params(&ControllerSpec::default(), &mut rng);
        match env.run_episode(&body, &theta, 0) {
            Ok(r) => qs.push(r.quality),
            Err(e) => eprintln!("{body}: {e}"),
        }
    }
    let elapsed = start.elapsed();
    qs.sort_by(f64::total_cmp);
    println!("{n} episodes in {elapsed:?} ({:?} each)", elapsed / n as u32);
    if !qs.is_empty() {
        println!("min {:.3} median {:.3} max {:.3}", qs[0], qs[qs.len() / 2], qs[qs.len() - 1]);
    }
}
