#![no_main]

use jetspace::io::{parse, Input, MetricInput};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(doc) = parse::<Input<MetricInput>>(data) {
        let _ = doc.body.build();
    }
});
