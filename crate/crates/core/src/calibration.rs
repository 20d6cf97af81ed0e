//! Constants measured once on frozen, seeded sweeps and committed here.
//!
//! Each constant is the sweep maximum rounded up in the fourth significant
//! digit; the sweeps that produce them live in [`crate::verify`].

/// Bound on `sup|f| / (‖f‖ + ‖∂ₓf‖ + ‖∂_y f‖ + ‖∂_y∂ₓf‖)`.
pub const C_SOB: f64 = 0.2563;

/// Two-sided bound on the ratios between `E_ω − Ė_ω` and `E¹_g + E_h`.
pub const C_REL: f64 = 1.934;

/// `‖C_j‖_{L²(T)} ≤ C ‖∂ₓʲω‖`.
pub const C_LEMMA_CJ: f64 = 6.442;
/// `‖∂ₓC_j‖_{L²(T)} ≤ C (‖∂ₓ^{j+1}ω‖ + ‖∂ₓʲω‖)`.
pub const C_LEMMA_DX_CJ: f64 = 5.332;
/// `‖g_j‖_{L²(y ≤ 3)} ≤ C ‖∂ₓʲω‖`.
pub const C_LEMMA_G_LOW: f64 = 1.528;
pub const C_LEMMA_TILDE_GJ_GJ: [f64; 2] = [0.001249, 0.0009090];
pub const C_LEMMA_TILDE_GJ: [[f64; 2]; 3] = [[0.0002691, 0.0002452], [6.197e-5, 5.737e-5], [3.512e-5, 3.485e-5]];
pub const C_LEMMA_DY_TILDE: f64 = 7.635e-7;

/// Largest low-half binomial convolution ratio, indexed by shift `m` then `τ ∈ {0.5, 1, 2}`.
pub const BINOM_LOW: [[f64; 3]; 6] = [
    [1.001, 1.0, 1.0],
    [0.003309, 0.001373, 0.0006275],
    [0.001486, 0.0004816, 0.0001187],
    [0.003703, 0.0004756, 5.65e-05],
    [0.02521, 0.00114, 0.0001076],
    [0.4181, 0.01062, 0.0002951],
];
pub const BINOM_HIGH: [[f64; 3]; 6] = [
    [1.137, 1.139, 1.143],
    [0.1065, 0.05483, 0.02651],
    [0.07976, 0.01984, 0.00529],
    [0.1943, 0.02205, 0.003088],
    [0.6675, 0.06017, 0.003958],
    [7.279, 0.2521, 0.005375],
];
/// Three-sequence multinomial ratio with both shifts equal to `m`.
pub const MULTINOM: [[f64; 3]; 6] = [
    [0.9997, 0.9981, 0.999],
    [6.585e-06, 1.561e-06, 4.368e-07],
    [6.134e-07, 4.635e-08, 2.912e-09],
    [1.651e-06, 4.783e-08, 5.378e-10],
    [5.469e-05, 2.152e-07, 7.376e-10],
    [0.006028, 1.611e-05, 4.408e-09],
];

/// Exponent bounding the growth of two-run gaps, `gap(t) ≤ gap(t₀)·e^{Λ(t − t₀)}`.
pub const LAMBDA_CAL: f64 = -0.6168;
