#![no_main]

use libfuzzer_sys::fuzz_target;
use signal_fuzz::checks;

fuzz_target!(|data: &str| {
    checks::parse_query_input(data);
});
