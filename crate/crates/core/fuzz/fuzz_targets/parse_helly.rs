#![no_main]

use jetspace::io::{parse, HellyInput, Input};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse::<Input<HellyInput>>(data);
});
