#![no_main]

use libfuzzer_sys::fuzz_target;
use lurecert::io::{certificate_from_json, certificate_to_json};

fuzz_target!(|text: &str| {
    let Ok(cert) = certificate_from_json(text) else { return };
    // Replay depends on certificates surviving a print/parse cycle verbatim.
    let back =
        certificate_from_json(&certificate_to_json(&cert)).expect("printed certificate re-parses");
    assert_eq!(cert, back);
});
