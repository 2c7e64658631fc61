#![no_main]

use libfuzzer_sys::fuzz_target;
use lurecert::io::InputSignalSpec;

fuzz_target!(|text: &str| {
    let Ok(spec) = text.parse::<InputSignalSpec>() else { return };
    // Sampling either yields an all-finite signal or reports an error;
    // it must never panic on parser-accepted specs.
    if let Ok(sig) = spec.sample(1e-2, 512) {
        assert!(sig.samples().iter().all(|s| s.is_finite()));
    }
});
