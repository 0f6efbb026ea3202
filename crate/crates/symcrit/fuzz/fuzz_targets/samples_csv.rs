#![no_main]

use libfuzzer_sys::fuzz_target;
use symcrit::Measure;

fuzz_target!(|data: &[u8]| {
    let Ok(mu) = Measure::samples_from_reader(data) else {
        return;
    };
    // every accepted sample cloud has a bounded characteristic function
    let xi = nalgebra::DVector::from_element(mu.dim(), 0.8);
    if let Ok(t) = mu.char_fn(&xi) {
        assert!(t.value.norm() <= 1.0 + t.error_estimate + 1e-12);
    }
});
