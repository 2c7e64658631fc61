#![no_main]

use libfuzzer_sys::fuzz_target;
use lurecert::io::{multiplier_from_json, multiplier_to_json};
use lurecert::ClassTag;

fuzz_target!(|text: &str| {
    let Ok(m) = multiplier_from_json(text) else { return };
    // Accepted bases survive a print/parse cycle verbatim.
    let back = multiplier_from_json(&multiplier_to_json(&m)).expect("printed basis re-parses");
    assert_eq!(m, back);
    // Validity checking must be total over everything the parser accepts.
    for class in [ClassTag::Monotone, ClassTag::MonotoneOdd, ClassTag::Slope, ClassTag::SlopeOdd] {
        let _ = m.validity_for_class(class);
    }
});
