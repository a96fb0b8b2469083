#![no_main]

use jetspace::io::{parse, Input, InstanceSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(doc) = parse::<Input<InstanceSpec>>(data) {
        let _ = doc.body.build();
    }
});
