#![no_main]

use std::str::FromStr;

use libfuzzer_sys::fuzz_target;
use phaselock::locking::{self, Rational};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(x) = Rational::from_str(s) {
            assert_eq!(Rational::from_str(&x.to_string()), Ok(x));
            assert_eq!(locking::cf_expand(x).value().ok(), Some(x));
        }
    }
});
