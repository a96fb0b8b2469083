#![no_main]

use jetspace::io::{parse, Input, TreeInput};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse::<Input<TreeInput>>(data);
});
