#![no_main]

use libfuzzer_sys::fuzz_target;
use lurecert::io::parse_grid_spec;

fuzz_target!(|text: &str| {
    let Ok(grid) = parse_grid_spec(text) else { return };
    // Accepted grids carry only finite positive frequencies.
    assert!(grid.omegas().len() >= 2);
    assert!(grid.omegas().iter().all(|&w| w.is_finite() && w > 0.0));
});
