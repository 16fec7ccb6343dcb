//! Deterministic synthetic test clips with a moving salient object.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::plane::Plane;
use crate::error::{Error, Result};
use crate::types::{normalize_saliency, FrameLayout, SaliencyMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClipKind {
    /// Smooth panning gradient with a shaded disc.
    Gradient,
    /// Panning multi-frequency texture with a shaded disc.
    Texture,
    /// Flat gray, no motion.
    Static,
}

impl ClipKind {
    pub const ALL: [ClipKind; 3] = [ClipKind::Gradient, ClipKind::Texture, ClipKind::Static];

    pub fn name(self) -> &'static str {
        match self {
            ClipKind::Gradient => "gradient",
            ClipKind::Texture => "texture",
            ClipKind::Static => "static",
        }
    }
}

impl fmt::Display for ClipKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClipKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClipKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown clip kind {s:?}")))
    }
}

/// Frames plus the per-frame CTU saliency centred on the moving object.
#[derive(Debug, Clone)]
pub struct SyntheticClip {
    pub kind: ClipKind,
    pub frames: Vec<Plane>,
    pub saliency: Vec<SaliencyMap>,
}

struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
    amp: f64,
}

struct Scene {
    waves: Vec<Wave>,
    tilt: (f64, f64),
    pan: (f64, f64),
    radius: f64,
    center: (f64, f64),
    swing: (f64, f64),
    omega: (f64, f64),
    phase: (f64, f64),
    pulse_amp: f64,
    pulse_period: f64,
    spin: f64,
    pattern_period: f64,
}

impl Scene {
    fn new(kind: ClipKind, width: usize, height: usize, rng: &mut ChaCha8Rng) -> Self {
        // Broadband detail with roughly 1/f amplitudes and evenly spread
        // orientations; the gradient clip keeps the detail faint.
        let (count, periods, total_amp) = match kind {
            ClipKind::Texture => (16, (3.0f64, 64.0f64), 70.0),
            _ => (16, (12.0f64, 128.0f64), 60.0),
        };
        let raw: Vec<(f64, f64, f64)> = (0..count)
            .map(|i| {
                let u: f64 = rng.gen_range(0.0..1.0);
                let period = periods.0 * (periods.1 / periods.0).powf(u);
                let theta = (i as f64 + rng.gen_range(0.0..1.0)) * TAU / (2.0 * count as f64);
                (period, theta, rng.gen_range(0.0..TAU))
            })
            .collect();
        let norm: f64 = raw.iter().map(|r| r.0).sum();
        let waves = raw
            .into_iter()
            .map(|(period, theta, phase)| Wave {
                kx: TAU / period * theta.cos(),
                ky: TAU / period * theta.sin(),
                phase,
                amp: total_amp * period / norm,
            })
            .collect();
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let m = width.min(height) as f64;
        Scene {
            waves,
            tilt: match kind {
                ClipKind::Texture => (rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)),
                _ => (rng.gen_range(0.02..0.05), rng.gen_range(-0.04..0.04)),
            },
            pan: (sign * rng.gen_range(0.4..1.1), rng.gen_range(-0.5..0.5)),
            radius: 0.18 * m,
            center: (width as f64 / 2.0, height as f64 / 2.0),
            swing: (0.25 * width as f64, 0.2 * height as f64),
            omega: (
                rng.gen_range(1.0..1.6) / (0.25 * width as f64),
                rng.gen_range(0.5..0.9) / (0.2 * height as f64),
            ),
            phase: (rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)),
            pulse_amp: rng.gen_range(25.0..40.0),
            pulse_period: rng.gen_range(10.0..16.0),
            spin: sign * rng.gen_range(0.09..0.13),
            pattern_period: rng.gen_range(7.0..11.0),
        }
    }

    fn object(&self, t: f64) -> (f64, f64) {
        (
            self.center.0 + self.swing.0 * (self.omega.0 * t + self.phase.0).sin(),
            self.center.1 + self.swing.1 * (self.omega.1 * t + self.phase.1).sin(),
        )
    }

    fn background(&self, x: f64, y: f64, t: f64) -> f64 {
        let bx = x + self.pan.0 * t;
        let by = y + self.pan.1 * t;
        let waves: f64 = self
            .waves
            .iter()
            .map(|w| w.amp * (w.kx * bx + w.ky * by + w.phase).sin())
            .sum();
        128.0 + waves + self.tilt.0 * (bx - self.center.0) + self.tilt.1 * (by - self.center.1)
    }

    fn sample(&self, x: f64, y: f64, t: f64, obj: (f64, f64)) -> u8 {
        let bg = self.background(x, y, t);
        let d = ((x - obj.0).powi(2) + (y - obj.1).powi(2)).sqrt();
        let alpha = (self.radius + 0.5 - d).clamp(0.0, 1.0);
        let v = if alpha > 0.0 {
            let r = d / self.radius;
            let pulse = self.pulse_amp * (TAU * t / self.pulse_period).sin();
            // Rotating surface pattern that block translation cannot follow.
            let (dx, dy) = (x - obj.0, y - obj.1);
            let (sn, cs) = (self.spin * t).sin_cos();
            let u = dx * cs + dy * sn;
            let v = -dx * sn + dy * cs;
            let k = TAU / self.pattern_period;
            let pattern = 30.0 * ((k * u).sin() + (0.7 * k * v).cos());
            let fg = 190.0 - 60.0 * r * r + pulse + pattern;
            alpha * fg + (1.0 - alpha) * bg
        } else {
            bg
        };
        v.round().clamp(0.0, 255.0) as u8
    }
}

/// Gaussian saliency around `obj` evaluated at CTU centres, scaled to max 1.
fn object_saliency(layout: &FrameLayout, obj: (f64, f64), sigma: f64) -> Result<SaliencyMap> {
    let raw: Vec<f64> = (0..layout.num_ctus())
        .map(|n| {
            let (x0, y0, w, h) = layout.ctu_rect(n);
            let cx = x0 as f64 + w as f64 / 2.0;
            let cy = y0 as f64 + h as f64 / 2.0;
            let d2 = (cx - obj.0).powi(2) + (cy - obj.1).powi(2);
            (-d2 / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    normalize_saliency(*layout, &raw)
}

/// Generates `num_frames` frames of the named clip kind.
pub fn generate_clip(
    kind: ClipKind,
    layout: &FrameLayout,
    num_frames: usize,
    seed: u64,
) -> Result<SyntheticClip> {
    if num_frames == 0 {
        return Err(Error::validation("clip must have at least one frame"));
    }
    let (w, h) = (layout.width(), layout.height());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = Scene::new(kind, w, h, &mut rng);
    let mut frames = Vec::with_capacity(num_frames);
    let mut saliency = Vec::with_capacity(num_frames);
    for k in 0..num_frames {
        let t = k as f64;
        match kind {
            ClipKind::Static => {
                frames.push(Plane::new(w, h, 128));
                saliency.push(object_saliency(layout, scene.center, 1.5 * scene.radius)?);
            }
            _ => {
                let obj = scene.object(t);
                frames.push(Plane::from_fn(w, h, |x, y| {
                    scene.sample(x as f64, y as f64, t, obj)
                }));
                saliency.push(object_saliency(layout, obj, 1.5 * scene.radius)?);
            }
        }
    }
    Ok(SyntheticClip {
        kind,
        frames,
        saliency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let l = FrameLayout::new(128, 64, 64).unwrap();
        let a = generate_clip(ClipKind::Texture, &l, 3, 7).unwrap();
        let b = generate_clip(ClipKind::Texture, &l, 3, 7).unwrap();
        let c = generate_clip(ClipKind::Texture, &l, 3, 8).unwrap();
        assert_eq!(a.frames, b.frames);
        assert_ne!(a.frames, c.frames);
        assert_eq!(a.saliency, b.saliency);
    }

    #[test]
    fn saliency_peaks_at_one() {
        let l = FrameLayout::new(256, 128, 64).unwrap();
        let clip = generate_clip(ClipKind::Gradient, &l, 2, 1).unwrap();
        for s in &clip.saliency {
            let max = s.weights().iter().cloned().fold(0.0, f64::max);
            assert_eq!(max, 1.0);
        }
    }

    #[test]
    fn static_clip_is_flat() {
        let l = FrameLayout::new(64, 64, 64).unwrap();
        let clip = generate_clip(ClipKind::Static, &l, 2, 0).unwrap();
        assert!(clip.frames.iter().all(|f| f.data().iter().all(|&v| v == 128)));
        assert_eq!("texture".parse::<ClipKind>().unwrap(), ClipKind::Texture);
        assert!("noise".parse::<ClipKind>().is_err());
    }
}
