//! Follow the straight beam for one seed and print every foothold.
//!
//! `cargo run --example beam_walk -- [seed]`
use tacfoot::{run, ControllerConfig, Scenario};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let scenario = Scenario::beam();
    let log = run(&ControllerConfig::default(), &scenario, seed);

    println!("step  x_mm     y_mm    edge_dist_mm  retrained");
    for (i, f) in log.footholds().iter().enumerate() {
        let retrained = i > 0 && log.steps().nth(i - 1).is_some_and(|s| s.retrained);
        println!("{i:>4}  {:>7.1}  {:>6.1}  {:>12.2}  {retrained}", f.point.x, f.point.y, f.signed_edge_distance);
    }
    let end = log.end().expect("run always ends");
    println!("{:?} after {} taps, {} arcs", end.reason, log.total_taps(), log.arcs().len());
}
