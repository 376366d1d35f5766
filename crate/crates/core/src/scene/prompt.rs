//! Templated scene captions.
//!
//! Captions describe what the first frame shows and, for wind scenes, that
//! there is wind. They never state a force direction or magnitude.

use serde::{Deserialize, Serialize};

use super::{AblationConfig, BallSceneSpec, FlagSceneSpec, SceneSpec};
use crate::physics::BallMaterial;
use crate::render::palette::{Backdrop, GroundTexture, TextureFamily};
use crate::seed::mix64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextPrompt {
    pub text: String,
    pub contains_keywords: bool,
}

impl TextPrompt {
    pub fn new(text: String) -> Self {
        let contains_keywords = contains_wind_keyword(&text);
        Self { text, contains_keywords }
    }
}

const KEYWORDS: [&str; 3] = ["wind", "breeze", "blow"];

/// Case-insensitive substring match against wind, breeze and blow.
pub fn contains_wind_keyword(text: &str) -> bool {
    let lower = text.to_lowercase();
    KEYWORDS.iter().any(|k| lower.contains(k))
}

const HUES: [&str; 12] = [
    "red", "orange", "golden", "yellow", "lime", "green", "teal", "cyan", "azure", "blue", "violet", "magenta",
];

fn hue_name(degrees: f64) -> &'static str {
    HUES[((degrees.rem_euclid(360.0) + 15.0) / 30.0) as usize % 12]
}

fn flag_color_name(id: usize) -> String {
    const TONES: [&str; 4] = ["bright", "pastel", "deep", "muted"];
    let hue = (id % 25) as f64 * 360.0 / 25.0;
    format!("{} {}", TONES[(id % 100) / 25], hue_name(hue))
}

fn ball_color_name(id: usize) -> String {
    const TONES: [&str; 4] = ["vivid", "light", "rich", "soft"];
    let hue = (id % 27) as f64 * 360.0 / 27.0;
    format!("{} {}", TONES[(id % 108) / 27], hue_name(hue))
}

fn rgb_hue(c: [u8; 3]) -> (f64, f64) {
    let [r, g, b] = c.map(|v| v as f64 / 255.0);
    let (max, min) = (r.max(g).max(b), r.min(g).min(b));
    let d = max - min;
    let h = if d == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    (h, max)
}

fn sky_phrase(id: usize) -> String {
    let b = Backdrop::get(id);
    let (hue, value) = rgb_hue(b.zenith);
    let tone = if value < 0.6 { "dusky" } else if value < 0.75 { "soft" } else { "bright" };
    let texture = if b.noise > 12.0 { "streaked with cloud" } else { "clear" };
    format!("a {tone} {} sky, {texture}", hue_name(hue))
}

fn ground_phrase(id: usize) -> String {
    let t = GroundTexture::get(id);
    let lum = t.a.iter().map(|&v| v as f64).sum::<f64>() / 3.0;
    let tone = if lum < 110.0 { "dark" } else if lum < 160.0 { "gray" } else { "pale" };
    let surface = match t.family {
        TextureFamily::Checker => "checkered tile floor",
        TextureFamily::Stripes => "striped plank deck",
        TextureFamily::Noise => "mottled stone court",
    };
    format!("{tone} {surface}")
}

fn count_phrase(n: usize) -> &'static str {
    match n {
        2 => "Two",
        3 => "Three",
        4 => "Four",
        5..=9 => "A handful of",
        10..=24 => "Several",
        25..=44 => "Many",
        _ => "Dozens of",
    }
}

const WIND_CLAUSES: [&str; 4] = [
    "They ripple and snap in the wind.",
    "A steady breeze sweeps across them.",
    "The wind blows the fabric into rolling waves.",
    "Gusts of wind tug at every flag.",
];

fn flag_prompt(spec: &FlagSceneSpec, ablation: &AblationConfig) -> String {
    let variant = mix64(spec.seed ^ 0x7E47) as usize;
    let subject = match spec.flags.as_slice() {
        [only] => format!("A single {} flag hangs", flag_color_name(only.color_id)),
        [a, b, ..] => format!(
            "{} flags in {}, {} and other colors hang",
            count_phrase(spec.flags.len()),
            flag_color_name(a.color_id),
            flag_color_name(b.color_id)
        ),
        [] => "An empty flagpole stands".to_string(),
    };
    let motion = if ablation.drop_wind_keywords {
        "The fabric ripples and flutters."
    } else {
        WIND_CLAUSES[variant % WIND_CLAUSES.len()]
    };
    format!(
        "{subject} from tall poles above a {}, set against {}. {motion}",
        ground_phrase(spec.ground_texture_id),
        sky_phrase(spec.backdrop_id)
    )
}

fn material(m: BallMaterial) -> &'static str {
    match m {
        BallMaterial::Soccer => "soccer ball",
        BallMaterial::Bowling => "bowling ball",
    }
}

fn ball_prompt(spec: &BallSceneSpec) -> String {
    let ground = ground_phrase(spec.ground_texture_id);
    let items: Vec<String> = spec
        .balls
        .iter()
        .map(|b| format!("a {} {}", ball_color_name(b.color_id), material(b.material)))
        .collect();
    match items.as_slice() {
        [one] => format!("A close view of {one} resting on a {ground}. The ball is nudged and starts to roll."),
        [init @ .., last] => format!(
            "{} balls rest on a {ground}: {} and {last}. One of them is nudged and starts to roll.",
            count_phrase(items.len()),
            init.join(", ")
        ),
        [] => format!("An empty {ground}."),
    }
}

/// The one caption shared by every plant record.
pub const PLANT_PROMPT: &str =
    "A carnation on a slender green stem stands in a quiet garden. The flower sways back and forth after a gentle touch.";

pub fn make_text_prompt(spec: &SceneSpec, ablation: &AblationConfig) -> TextPrompt {
    let text = match spec {
        SceneSpec::Flag(s) => flag_prompt(s, ablation),
        SceneSpec::Ball(s) => ball_prompt(s),
        SceneSpec::Plant(_) => PLANT_PROMPT.to_string(),
    };
    TextPrompt::new(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{sample_scene, Scenario};

    #[test]
    fn keyword_detection() {
        assert!(contains_wind_keyword("A BREEZE"));
        assert!(contains_wind_keyword("it blows"));
        assert!(!contains_wind_keyword("a calm day"));
    }

    #[test]
    fn flag_prompts_mention_wind_unless_dropped() {
        let on = AblationConfig::default();
        let off = AblationConfig { drop_wind_keywords: true, ..on };
        for seed in 0..300 {
            let spec = sample_scene(Scenario::Flag, seed, &on);
            assert!(make_text_prompt(&spec, &on).contains_keywords);
            let p = make_text_prompt(&spec, &off);
            assert!(!p.contains_keywords, "{}", p.text);
        }
    }

    #[test]
    fn no_digits_and_no_stray_keywords() {
        let a = AblationConfig::default();
        for scenario in [Scenario::Ball, Scenario::Plant] {
            for seed in 0..300 {
                let p = make_text_prompt(&sample_scene(scenario, seed, &a), &a);
                assert!(!p.text.chars().any(|c| c.is_ascii_digit()), "{}", p.text);
                assert!(!p.contains_keywords, "{}", p.text);
            }
        }
        for seed in 0..300 {
            let p = make_text_prompt(&sample_scene(Scenario::Flag, seed, &a), &a);
            assert!(!p.text.chars().any(|c| c.is_ascii_digit()), "{}", p.text);
        }
    }

    #[test]
    fn plant_prompt_is_shared() {
        let a = AblationConfig::default();
        let p0 = make_text_prompt(&sample_scene(Scenario::Plant, 1, &a), &a);
        let p1 = make_text_prompt(&sample_scene(Scenario::Plant, 2, &a), &a);
        assert_eq!(p0, p1);
    }
}
