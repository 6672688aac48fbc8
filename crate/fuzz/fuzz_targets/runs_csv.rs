#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Arbitrary bytes must either parse into fully validated records or fail
    // with a typed error; accepted records must survive a save/load cycle.
    if let Ok(records) = scalelab::ingest::parse_runs_csv(data) {
        let mut buf = Vec::new();
        scalelab::ingest::save_runs_csv(&records, &mut buf).unwrap();
        let back = scalelab::ingest::parse_runs_csv(buf.as_slice()).unwrap();
        assert_eq!(records.len(), back.len());
    }
});
