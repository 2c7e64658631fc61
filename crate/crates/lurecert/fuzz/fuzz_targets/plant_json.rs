#![no_main]

use libfuzzer_sys::fuzz_target;
use lurecert::io::{plant_from_json, plant_to_json};

fuzz_target!(|text: &str| {
    let Ok(g) = plant_from_json(text) else { return };
    // Accepted plants survive a print/parse cycle verbatim.
    let back = plant_from_json(&plant_to_json(&g)).expect("printed plant re-parses");
    assert_eq!(g, back);
});
