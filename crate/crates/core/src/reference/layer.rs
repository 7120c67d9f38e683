//! Closed-form integrals over the stretched interface layer.
//!
//! With `φ(z) = ½(1 + tanh z)` and `D(z) = α + (1 − α)φ(z)`:
//! `I0 = ∫₀ᶻ 1/D`, `I1 = ∫₀ᶻ φ/D`, `I2 = ∫₀ᶻ φ`.

/// `log(α + e^{2z})` without overflow for large `|z|`.
pub fn log_alpha_exp(z: f64, alpha: f64) -> f64 {
    if z > 0.0 {
        2.0 * z + (alpha * (-2.0 * z).exp()).ln_1p()
    } else {
        alpha.ln() + ((2.0 * z).exp() / alpha).ln_1p()
    }
}

/// Layer profile in the stretched variable.
pub fn layer_phi(z: f64) -> f64 {
    0.5 * (1.0 + z.tanh())
}

pub fn layer_d(z: f64, alpha: f64) -> f64 {
    alpha + (1.0 - alpha) * layer_phi(z)
}

/// `(I0, I1, I2)` at `z`.
pub fn layer_integrals(z: f64, alpha: f64) -> (f64, f64, f64) {
    let l = log_alpha_exp(z, alpha);
    let l0 = (alpha + 1.0).ln();
    let i0 = ((alpha - 1.0) * l + 2.0 * z) / (2.0 * alpha) - (alpha - 1.0) * l0 / (2.0 * alpha);
    let i1 = 0.5 * l - 0.5 * l0;
    let i2 = 0.5 * log_alpha_exp(z, 1.0) - 0.5 * std::f64::consts::LN_2;
    (i0, i1, i2)
}

/// Limit of `I0(z) − z` as `z → +∞`.
pub fn i0_right_offset(alpha: f64) -> f64 {
    -(alpha - 1.0) * (alpha + 1.0).ln() / (2.0 * alpha)
}

/// Limit of `I0(z) − z/α` as `z → −∞`.
pub fn i0_left_offset(alpha: f64) -> f64 {
    (alpha - 1.0) / (2.0 * alpha) * (alpha / (alpha + 1.0)).ln()
}

/// Limit of `I1(z) − z` as `z → +∞`.
pub fn i1_right_offset(alpha: f64) -> f64 {
    -0.5 * (alpha + 1.0).ln()
}

/// Limit of `I1(z)` as `z → −∞`.
pub fn i1_left_limit(alpha: f64) -> f64 {
    0.5 * (alpha / (alpha + 1.0)).ln()
}

/// Right side of `φ/D = 1/(1−α) − α/(1−α) · 1/D`, for `α ≠ 1`.
pub fn phi_over_d_identity(z: f64, alpha: f64) -> f64 {
    1.0 / (1.0 - alpha) - alpha / (1.0 - alpha) / layer_d(z, alpha)
}
