#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(expr) = symcrit::expr::parse(src) else {
        return;
    };
    // evaluation must not panic on any parsed expression
    for x in [-2.0, 0.0, 0.5, 3.0] {
        let _ = expr.eval(x);
    }
    // the polynomial declaration, when present, must agree with eval
    if let Some(coeffs) = expr.poly_coeffs() {
        let x = 0.7;
        let horner = coeffs.iter().rev().fold(0.0f64, |acc, &c| acc * x + c);
        let direct = expr.eval(x);
        if horner.is_finite() && direct.is_finite() {
            let scale = 1.0 + horner.abs().max(direct.abs());
            assert!(
                (horner - direct).abs() <= 1e-9 * scale,
                "poly {horner} vs eval {direct} for `{src}`"
            );
        }
    }
});
