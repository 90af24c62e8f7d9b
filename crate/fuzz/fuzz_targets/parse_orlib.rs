//! The OR-Library parser must never panic on untrusted text, and every
//! accepted input must survive a serialize/reparse round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mkp::instance::{parse_orlib, serialize_orlib};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(insts) = parse_orlib(text) else { return };
    let back = parse_orlib(&serialize_orlib(&insts)).expect("round trip reparses");
    assert_eq!(insts.len(), back.len());
    for (a, b) in insts.iter().zip(&back) {
        assert_eq!(a.profits, b.profits);
        assert_eq!(a.consumption, b.consumption);
        assert_eq!(a.capacities, b.capacities);
        assert_eq!(a.known_best, b.known_best);
    }
});
