//! Times one BO learner and one random-search learner on a random body.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use vsr_core::bayesopt::BoConfig;
use vsr_core::controller::uniform_params;
use vsr_core::evolution::{evaluate, EvalContext};
use vsr_core::morphology::random_body;
use vsr_core::seeding::stream;
use vsr_core::tasks::{TaskEnv, TaskId};

fn main() {
    let env = TaskEnv::new(TaskId::Simple);
    let bo = BoConfig { n0: 4, n_final: 20, ..Default::default() };
    let counter = AtomicU64::new(0);
    for no_bo in [false, true] {
        let ctx = EvalContext { env: &env, bo: &bo, no_bo, episodes: &counter };
        let t = Instant::now();
        let mut best = Vec::new();
        for s in 0..5 {
            let mut rng = stream(s, &[]);
            let body = random_body(&mut rng);
            let init: Vec<_> = (0..4).map(|_| uniform_params(321, -1.0, 1.0, &mut rng)).collect();
            best.push(evaluate(&body, &init, &ctx, s, None, None).quality);
        }
        println!(
            "no_bo={no_bo}: {:.1} ms per learner, best {:?}",
            t.elapsed().as_secs_f64() * 1e3 / 5.0,
            best.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>()
        );
    }
    println!("episodes {}", counter.load(Ordering::Relaxed));
}
