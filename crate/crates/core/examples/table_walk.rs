//! Walk around the round table edge. Uses the long-stride table preset, where
//! the foot regularly loses the edge and has to search for it.
use tacfoot::experiment::ExperimentConfig;
use tacfoot::run;

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let config = ExperimentConfig::table(vec![seed]);
    let scenario = config.scenario();
    let log = run(&config.controller, &scenario, seed);

    for f in log.footholds() {
        let angle = f.point.y.atan2(f.point.x).to_degrees();
        println!("{angle:>8.1} deg  {:>6.2} mm from edge", f.signed_edge_distance);
    }
    let searches = log.steps().filter(|s| s.searched).count();
    println!("{:?}, {searches} searches", log.end().map(|e| e.reason));
}
