#![no_main]

use libfuzzer_sys::fuzz_target;
use spectrum_market::config::{parse_scenario, render_scenario};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Anything accepted must survive a render/parse cycle unchanged.
    if let Ok(scenario) = parse_scenario(text) {
        let again = parse_scenario(&render_scenario(&scenario)).expect("rendered scenario parses");
        assert_eq!(again, scenario);
    }
});
