#![no_main]

use libfuzzer_sys::fuzz_target;
use symcrit::spec::ProcessSpecFile;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = ProcessSpecFile::from_toml_str(src) else {
        return;
    };
    // normalization must be a printable fixed point
    let printed = spec.to_normalized_toml().expect("normalized spec serializes");
    let reparsed = ProcessSpecFile::from_toml_str(&printed)
        .expect("normalized spec re-validates");
    assert_eq!(reparsed, spec.normalize());

    // symbol construction and a pointwise eval must not panic
    if let Ok(sym) = spec.build_symbol() {
        let _ = sym.eval1(0.5, 1.3);
    }
    let _ = spec.build_sde();
    let _ = spec.grid_points();
});
