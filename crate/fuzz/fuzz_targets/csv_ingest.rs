#![no_main]

use divprune::data::{read_csv, LabelColumn};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    for column in [LabelColumn::Name("label".into()), LabelColumn::Index(0)] {
        if let Ok(d) = read_csv(data, "fuzz", &column, "1") {
            assert!(d.labels().iter().all(|&y| y == 1 || y == -1));
            assert!((0..d.len()).all(|i| d.row(i).iter().all(|v| v.is_finite())));
        }
    }
});
