//! Versioned color and texture catalogs.
//!
//! Everything here is a pure function of an id; the tables never change
//! within a generator version.

use crate::seed::mix64;

pub const FLAG_COLORS: usize = 100;
pub const BALL_COLORS: usize = 108;
pub const BACKDROPS: usize = 50;
pub const GROUND_TEXTURES: usize = 42;

pub type Rgb = [u8; 3];

/// `h` in degrees, `s` and `v` in [0, 1].
pub fn hsv(h: f64, s: f64, v: f64) -> Rgb {
    let h = h.rem_euclid(360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|ch| ((ch + m) * 255.0).round().clamp(0.0, 255.0) as u8)
}

/// 25 hues × 4 saturation/value levels.
pub fn flag_color(id: usize) -> Rgb {
    const LEVELS: [(f64, f64); 4] = [(1.0, 1.0), (0.7, 1.0), (1.0, 0.75), (0.55, 0.85)];
    let (s, v) = LEVELS[(id % FLAG_COLORS) / 25];
    hsv((id % 25) as f64 * 360.0 / 25.0, s, v)
}

/// 27 hues × 4 levels, all strongly saturated so that no ground texture
/// pixel can be mistaken for a ball.
pub fn ball_color(id: usize) -> Rgb {
    const LEVELS: [(f64, f64); 4] = [(1.0, 1.0), (0.75, 1.0), (1.0, 0.8), (0.75, 0.8)];
    let (s, v) = LEVELS[(id % BALL_COLORS) / 27];
    hsv((id % 27) as f64 * 360.0 / 27.0, s, v)
}

/// Largest per-channel difference.
pub fn chebyshev(a: Rgb, b: Rgb) -> u8 {
    (0..3).map(|i| a[i].abs_diff(b[i])).max().unwrap_or(0)
}

fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

/// Hash noise on an integer lattice, in [0, 1).
pub fn lattice(ix: i64, iy: i64, salt: u64) -> f64 {
    unit(mix64(
        salt ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F),
    ))
}

/// Bilinear value noise, in [0, 1).
pub fn value_noise(x: f64, y: f64, salt: u64) -> f64 {
    let (fx, fy) = (x.floor(), y.floor());
    let (tx, ty) = (x - fx, y - fy);
    let (sx, sy) = (tx * tx * (3.0 - 2.0 * tx), ty * ty * (3.0 - 2.0 * ty));
    let (ix, iy) = (fx as i64, fy as i64);
    let a = lattice(ix, iy, salt);
    let b = lattice(ix + 1, iy, salt);
    let c = lattice(ix, iy + 1, salt);
    let d = lattice(ix + 1, iy + 1, salt);
    let top = a + (b - a) * sx;
    let bottom = c + (d - c) * sx;
    top + (bottom - top) * sy
}

fn lerp(a: Rgb, b: Rgb, t: f64) -> [f64; 3] {
    [0, 1, 2].map(|i| a[i] as f64 + (b[i] as f64 - a[i] as f64) * t)
}

fn to_rgb(c: [f64; 3]) -> Rgb {
    c.map(|v| v.round().clamp(0.0, 255.0) as u8)
}

/// Sky gradient with a little noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backdrop {
    pub horizon: Rgb,
    pub zenith: Rgb,
    pub noise: f64,
    pub frequency: f64,
    salt: u64,
}

impl Backdrop {
    pub fn get(id: usize) -> Self {
        let id = id % BACKDROPS;
        let h = mix64(0xB4C4_D00D ^ id as u64);
        let hue = (id as f64 * 137.508) % 360.0;
        let f = |shift: u32| unit(h.rotate_left(shift));
        Self {
            horizon: hsv(hue, 0.1 + 0.25 * f(0), 0.8 + 0.15 * f(8)),
            zenith: hsv(hue + 25.0 * (f(16) - 0.5), 0.3 + 0.4 * f(24), 0.45 + 0.45 * f(32)),
            noise: 24.0 * f(40),
            frequency: 2.0 + 10.0 * f(48),
            salt: h,
        }
    }

    /// `elevation` in radians above the horizon (negative below it),
    /// `azimuth` in radians.
    pub fn shade(&self, elevation: f64, azimuth: f64) -> Rgb {
        let t = (elevation.max(0.0) / std::f64::consts::FRAC_PI_2).powf(0.6);
        let mut c = lerp(self.horizon, self.zenith, t);
        let (ax, ay) = (azimuth.cos() * self.frequency, azimuth.sin() * self.frequency);
        let n = value_noise(ax + elevation * self.frequency * 2.0, ay, self.salt) - 0.5;
        if elevation < 0.0 {
            // Distant haze below the horizon.
            c = c.map(|v| v * 0.8);
        }
        to_rgb(c.map(|v| v + n * self.noise))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextureFamily {
    Checker,
    Stripes,
    Noise,
}

/// Procedural ground material, in low-saturation earth and stone tones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTexture {
    pub family: TextureFamily,
    pub a: Rgb,
    pub b: Rgb,
    /// Pattern period, meters.
    pub scale: f64,
    pub direction: f64,
    salt: u64,
}

/// Luminance jitter applied equally to all channels.
const GRAIN: f64 = 8.0;

impl GroundTexture {
    pub fn get(id: usize) -> Self {
        let id = id % GROUND_TEXTURES;
        let family = match id % 3 {
            0 => TextureFamily::Checker,
            1 => TextureFamily::Stripes,
            _ => TextureFamily::Noise,
        };
        let v = id / 3;
        let h = mix64(0x6A0D ^ id as u64);
        let l1 = 70.0 + ((v * 37) % 110) as f64;
        let l2 = if l1 > 125.0 { l1 - 40.0 } else { l1 + 40.0 };
        let tint = (h % 25) as f64 - 12.0;
        let tone = |l: f64| to_rgb([l + tint, l + tint * 0.3, l - tint]);
        Self {
            family,
            a: tone(l1),
            b: tone(l2),
            scale: 0.25 + (v % 5) as f64 * 0.15,
            direction: unit(h) * std::f64::consts::PI,
            salt: h,
        }
    }

    /// Color at ground point `(x, y)`.
    pub fn shade(&self, x: f64, y: f64) -> Rgb {
        let (u, w) = (x / self.scale, y / self.scale);
        let t = match self.family {
            TextureFamily::Checker => ((u.floor() + w.floor()) as i64).rem_euclid(2) as f64,
            TextureFamily::Stripes => {
                let s = u * self.direction.cos() + w * self.direction.sin();
                if s.rem_euclid(1.0) < 0.5 { 0.0 } else { 1.0 }
            }
            TextureFamily::Noise => value_noise(u, w, self.salt),
        };
        let grain = (value_noise(x * 12.0, y * 12.0, self.salt ^ 0x55) - 0.5) * GRAIN;
        to_rgb(lerp(self.a, self.b, t).map(|c| c + grain))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spread(c: Rgb) -> u8 {
        c.iter().max().unwrap() - c.iter().min().unwrap()
    }

    #[test]
    fn catalog_sizes_and_distinct_entries() {
        let flags: std::collections::HashSet<Rgb> = (0..FLAG_COLORS).map(flag_color).collect();
        let balls: std::collections::HashSet<Rgb> = (0..BALL_COLORS).map(ball_color).collect();
        assert_eq!(flags.len(), FLAG_COLORS);
        assert_eq!(balls.len(), BALL_COLORS);
    }

    #[test]
    fn hsv_primaries() {
        assert_eq!(hsv(0.0, 1.0, 1.0), [255, 0, 0]);
        assert_eq!(hsv(120.0, 1.0, 1.0), [0, 255, 0]);
        assert_eq!(hsv(240.0, 1.0, 1.0), [0, 0, 255]);
        assert_eq!(hsv(77.0, 0.0, 0.5), [128, 128, 128]);
    }

    #[test]
    fn ground_is_never_ball_colored() {
        // A ground pixel can only fall within 60 of a ball color if its own
        // channel spread is at least 33; ground stays well below that.
        for id in 0..GROUND_TEXTURES {
            let t = GroundTexture::get(id);
            for i in 0..400 {
                let c = t.shade(i as f64 * 0.173 - 20.0, (i * 7 % 61) as f64 * 0.29 - 9.0);
                assert!(spread(c) <= 30, "texture {id}: {c:?}");
                for b in 0..BALL_COLORS {
                    assert!(chebyshev(c, ball_color(b)) > 60);
                }
            }
        }
    }

    #[test]
    fn noise_is_bounded_and_pure() {
        for i in 0..1000 {
            let x = i as f64 * 0.37 - 100.0;
            let n = value_noise(x, -x * 0.5, 9);
            assert!((0.0..1.0).contains(&n));
            assert_eq!(n, value_noise(x, -x * 0.5, 9));
        }
    }

    #[test]
    fn backdrops_differ() {
        let set: std::collections::HashSet<(Rgb, Rgb)> =
            (0..BACKDROPS).map(|i| (Backdrop::get(i).horizon, Backdrop::get(i).zenith)).collect();
        assert_eq!(set.len(), BACKDROPS);
    }
}
