//! Walk blind (no tactile correction) and compare against the sensing walker.
use tacfoot::controller::EndReason;
use tacfoot::{run, ControllerConfig, Scenario};

fn main() {
    let scenario = Scenario::beam();
    for sensing in [true, false] {
        let config = ControllerConfig { sensing, ..ControllerConfig::default() };
        let falls = (0..20)
            .map(|seed| run(&config, &scenario, seed))
            .filter(|log| log.end().is_some_and(|e| e.reason == EndReason::Fall))
            .count();
        println!("sensing {sensing:<5}: {falls}/20 falls");
    }
}
