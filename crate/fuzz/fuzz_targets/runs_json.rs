#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = scalelab::ingest::parse_runs_json(data) {
        for r in &records {
            assert!(r.loss() > 0.0);
            assert!(r.n_total() >= r.n_active());
            let s = r.sparsity();
            assert!((0.0..1.0).contains(&s));
        }
    }
});
