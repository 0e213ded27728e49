#![no_main]

use libfuzzer_sys::fuzz_target;
use spectrum_market::simulator::{AxisGrid, MAX_GRID_POINTS};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = AxisGrid::parse(text) {
        assert!(!grid.values.is_empty() && grid.values.len() <= MAX_GRID_POINTS);
        assert!(grid.values.iter().all(|v| v.is_finite()));
    }
});
