#![no_main]

use std::str::FromStr;

use libfuzzer_sys::fuzz_target;
use phaselock::locking::ContinuedFraction;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cf) = ContinuedFraction::from_str(s) {
            // Large quotients may overflow; that must be an error, not a panic.
            let _ = cf.value();
            let _ = cf.alternate_quotients();
            assert_eq!(ContinuedFraction::from_str(&cf.to_string()), Ok(cf));
        }
    }
});
