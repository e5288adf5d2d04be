#![no_main]

use divprune::cli::RunManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = RunManifest::from_json_slice(data) {
        let again = RunManifest::from_json_slice(m.to_json().as_bytes()).expect("round trip");
        assert_eq!(again, m);
    }
});
