#![no_main]

use libfuzzer_sys::fuzz_target;
use signal_fuzz::checks;

fuzz_target!(|data: &[u8]| {
    checks::ingest_csv_input(data);
});
