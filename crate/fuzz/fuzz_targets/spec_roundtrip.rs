#![no_main]

use gframe_core::format::parse_document;
use gframe_core::serialize_spec;
use libfuzzer_sys::fuzz_target;

// Anything that parses must serialize back to a document that parses to
// bit-identical values and is a fixed point of serialization.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(doc) = parse_document(text) else {
        return;
    };
    let Ok(frame) = doc.to_frame() else {
        return;
    };
    let out = serialize_spec(&frame, doc.metadata.clone());
    let back = parse_document(&out).expect("serialized specs parse");
    let frame2 = back.to_frame().expect("serialized specs are valid");
    for (a, b) in frame.blocks().iter().zip(frame2.blocks()) {
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
    assert_eq!(back.metadata, doc.metadata);
    assert_eq!(serialize_spec(&frame2, back.metadata.clone()), out);
});
