//! Training-FLOPs accounting per architecture.
//!
//! Dense and MoE decoders use C = 6*N*D with N the (active) parameter count.
//! Late-fusion models add the vision encoder's share: C = 6*(N_v*D_v + N*D)
//! where D_v is the vision-token portion of the stream.

/// C = 6*N*D for a dense early-fusion decoder.
pub fn early_flops(n: f64, d: f64) -> f64 {
    debug_assert!(n >= 1.0 && d >= 1.0);
    6.0 * n * d
}

/// C = 6*(N_v*D_v + N*D) with D_v = vision_token_fraction * D.
/// `n_decoder` excludes the vision encoder.
pub fn late_flops(n_vision: f64, n_decoder: f64, d: f64, vision_token_fraction: f64) -> f64 {
    debug_assert!(n_vision > 0.0 && n_decoder > 0.0 && d > 0.0);
    debug_assert!((0.0..=1.0).contains(&vision_token_fraction));
    6.0 * (n_vision * (vision_token_fraction * d) + n_decoder * d)
}

/// C = 6*N*D with N the number of *active* parameters of a sparse model.
pub fn moe_flops(n_active: f64, d: f64) -> f64 {
    early_flops(n_active, d)
}
