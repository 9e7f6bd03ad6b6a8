#![no_main]

use libfuzzer_sys::fuzz_target;
use logsum_cli::{Command, ExperimentConfig, Overrides};

const COMMANDS: [Command; 5] = [
    Command::Solve,
    Command::SeFixedPoint,
    Command::PhaseDiagram,
    Command::MseSweep,
    Command::BestMseGrid,
];

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(overrides) = Overrides::from_toml_str(text) else {
        return;
    };
    for command in COMMANDS {
        if let Ok(cfg) = ExperimentConfig::resolve(command, overrides.clone()) {
            cfg.validate().expect("resolved config must validate");
        }
    }
});
