#![no_main]

use jetspace::harness::ExperimentConfig;
use jetspace::io::{parse, Input};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(doc) = parse::<Input<ExperimentConfig>>(data) {
        let _ = doc.body.n_used();
    }
});
