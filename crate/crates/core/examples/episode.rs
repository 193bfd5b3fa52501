//! Runs the default world and prints the episode report.

use hfmt_core::sim::{run_episode, SimConfig, World};

fn main() {
    let world = World::two_turn_course();
    let cfg = SimConfig {
        trajectory_stride: 50,
        ..SimConfig::for_world(&world)
    };
    let report = run_episode(&world, &cfg).expect("default controller config is valid");
    println!("{}", report.to_json());
}
