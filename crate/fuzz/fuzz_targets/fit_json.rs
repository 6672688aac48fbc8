#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Documents that load must re-serialize to an equal document.
    if let Ok(doc) = scalelab::ingest::read_fit(data) {
        let mut buf = Vec::new();
        scalelab::ingest::write_fit(&doc, &mut buf).unwrap();
        let back = scalelab::ingest::read_fit(buf.as_slice()).unwrap();
        assert_eq!(doc, back);
    }
});
