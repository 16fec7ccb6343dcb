//! Uniform scalar quantization of transform coefficients and edge samples.

/// Quantizer step `2^((qp - 4) / 6)` in 1/256 units.
pub fn step_q8(qp: u8) -> i32 {
    (256.0 * 2f64.powf((f64::from(qp) - 4.0) / 6.0)).round() as i32
}

/// Level for residual `r`, rounding to the nearest reconstruction value.
#[inline]
pub fn quantize(r: i32, step: i32) -> i16 {
    let mag = (r.abs() * 256 + step / 2) / step;
    (r.signum() * mag).clamp(i16::MIN as i32, i16::MAX as i32) as i16
}

#[inline]
pub fn dequantize(level: i16, step: i32) -> i32 {
    let v = i32::from(level) * step;
    v.signum() * ((v.abs() + 128) >> 8)
}
