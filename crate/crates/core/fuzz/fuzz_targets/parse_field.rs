#![no_main]

use jetspace::io::{parse, FieldSpec, Input};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(doc) = parse::<Input<FieldSpec>>(data) {
        let _ = doc.body.build();
    }
});
