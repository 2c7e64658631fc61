#![no_main]

use libfuzzer_sys::fuzz_target;
use lurecert::io::parse_phi_spec;

fuzz_target!(|text: &str| {
    let Ok(shape) = parse_phi_spec(text) else { return };
    // Parsing implies structural validity, and evaluation is total.
    assert!(shape.validate().is_ok());
    for x in [-1e9, -1.0, -1e-9, 0.0, 1e-9, 1.0, 1e9] {
        let _ = shape.eval(x);
    }
});
