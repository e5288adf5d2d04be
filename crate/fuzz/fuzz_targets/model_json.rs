#![no_main]

use divprune::learners::SavedModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = SavedModel::from_json_slice(data) {
        let e = model
            .ensemble()
            .expect("validated model builds an ensemble");
        let x = vec![0.0; model.n_features];
        let v = e.vote(&x);
        assert!((-1..=1).contains(&v));
        let again = SavedModel::from_json_slice(model.to_json().as_bytes()).expect("round trip");
        assert_eq!(again, model);
    }
});
