#![no_main]

use divprune::cli::parse_grid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(grid) = parse_grid(s) {
            assert!(!grid.is_empty());
            assert!(grid.iter().all(|v| v.is_finite()));
        }
    }
});
