#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(tables) = scalelab::ingest::parse_assignments_csv(data) {
        for t in &tables {
            // Accepted tables are dense grids; the metrics must never panic.
            for layer in 0..t.num_layers() {
                let _ = scalelab::moespec::entropy_specialization(t, layer);
                let _ = scalelab::moespec::uniform_deviation_specialization(t, layer);
            }
        }
    }
});
