#![no_main]

use gframe_core::{parse_spec, Error};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    match parse_spec(text) {
        Ok(frame) => {
            assert!(frame.hilbert_dim() > 0);
            assert!(!frame.is_empty());
        }
        Err(Error::Parse { line, .. }) => assert!(line >= 1 || text.is_empty()),
        Err(Error::Schema { .. }) | Err(Error::InvalidFrame(_)) | Err(Error::NonFinite) => {}
        Err(other) => panic!("unexpected error kind from the parser: {other:?}"),
    }
});
