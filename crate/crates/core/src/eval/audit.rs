//! Goodness-of-fit audits of sampled scene distributions.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::physics::BallMaterial;
use crate::render::palette::{BACKDROPS, BALL_COLORS, FLAG_COLORS, GROUND_TEXTURES};
use crate::scene::{PlanEntry, SceneSpec};

/// Significance level every audit uses.
pub const ALPHA: f64 = 0.01;
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("unknown field {0:?}")]
    UnknownField(String),
    #[error("audit needs at least {MIN_SAMPLES} records, got {0}")]
    TooFewSamples(usize),
    #[error("plan mixes scenarios")]
    MixedScenarios,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum FieldTest {
    ChiSquare { statistic: f64, dof: usize, p_value: f64 },
    KolmogorovSmirnov { statistic: f64, p_value: f64 },
    /// An ablation pins the field; passes when every sample equals `value`.
    Degenerate { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldAudit {
    pub field: String,
    pub n: usize,
    pub expected: String,
    #[serde(flatten)]
    pub test: FieldTest,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub records: usize,
    pub fields: Vec<FieldAudit>,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.fields.iter().all(|f| f.pass)
    }

    pub fn field(&self, name: &str) -> Option<&FieldAudit> {
        self.fields.iter().find(|f| f.field == name)
    }
}

/// Pearson chi-square of observed counts against expected probabilities.
pub fn chi_square(observed: &[u64], probabilities: &[f64]) -> (f64, usize, f64) {
    let n: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(probabilities)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = observed.len().saturating_sub(1).max(1);
    let p = ChiSquared::new(dof as f64).expect("dof is positive").sf(stat);
    (stat, dof, p)
}

/// Asymptotic Kolmogorov distribution tail with Stephens' small-sample
/// correction.
fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test against `Unif[lo, hi)`.
pub fn ks_uniform(samples: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    let mut xs: Vec<f64> = samples.iter().map(|x| ((x - lo) / (hi - lo)).clamp(0.0, 1.0)).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max);
    (d, kolmogorov_p(d, xs.len()))
}

enum Expected {
    /// Uniform over `lo..=hi`.
    Integers(usize, usize),
    Categories(Vec<f64>),
    Continuous(f64, f64),
}

struct Field {
    name: &'static str,
    expected: Expected,
    pinned: Option<f64>,
    values: Vec<f64>,
}

fn describe(e: &Expected) -> String {
    match e {
        Expected::Integers(lo, hi) => format!("Unif{{{lo}..{hi}}}"),
        Expected::Categories(p) => format!("categorical {p:?}"),
        Expected::Continuous(lo, hi) => format!("Unif[{lo}, {hi})"),
    }
}

fn run(field: &Field) -> FieldAudit {
    let n = field.values.len();
    let expected = describe(&field.expected);
    if let Some(v) = field.pinned {
        let pass = field.values.iter().all(|&x| x == v);
        return FieldAudit { field: field.name.into(), n, expected: format!("pinned at {v}"), test: FieldTest::Degenerate { value: v }, pass };
    }
    let test = match &field.expected {
        Expected::Integers(lo, hi) => {
            let (lo, hi) = (*lo, *hi);
            let k = hi - lo + 1;
            let mut counts = vec![0u64; k];
            let mut outside = 0u64;
            for &v in &field.values {
                let i = v as i64 - lo as i64;
                if v.fract() == 0.0 && (0..k as i64).contains(&i) {
                    counts[i as usize] += 1;
                } else {
                    outside += 1;
                }
            }
            let (statistic, dof, p) = chi_square(&counts, &vec![1.0 / k as f64; k]);
            FieldTest::ChiSquare { statistic, dof, p_value: if outside > 0 { 0.0 } else { p } }
        }
        Expected::Categories(probs) => {
            let mut counts = vec![0u64; probs.len()];
            for &v in &field.values {
                counts[(v as usize).min(probs.len() - 1)] += 1;
            }
            let (statistic, dof, p_value) = chi_square(&counts, probs);
            FieldTest::ChiSquare { statistic, dof, p_value }
        }
        Expected::Continuous(lo, hi) => {
            let (statistic, p_value) = ks_uniform(&field.values, *lo, *hi);
            FieldTest::KolmogorovSmirnov { statistic, p_value }
        }
    };
    let pass = match test {
        FieldTest::ChiSquare { p_value, .. } | FieldTest::KolmogorovSmirnov { p_value, .. } => p_value > ALPHA,
        FieldTest::Degenerate { .. } => unreachable!(),
    };
    FieldAudit { field: field.name.into(), n, expected, test, pass }
}

fn field(name: &'static str, expected: Expected, pinned: Option<f64>) -> Field {
    Field { name, expected, pinned, values: Vec::new() }
}

fn collect(entries: &[PlanEntry]) -> Result<Vec<Field>, AuditError> {
    let first = &entries[0];
    let ab = first.ablation;
    let background = |f: &mut Vec<Field>| {
        let pin = ab.single_background.then_some(0.0);
        f.push(field("backdrop", Expected::Integers(0, BACKDROPS - 1), pin));
        f.push(field("ground_texture", Expected::Integers(0, GROUND_TEXTURES - 1), pin));
    };
    let mut fields = Vec::new();
    match &first.spec {
        SceneSpec::Flag(_) => {
            fields.push(field("flag_count", Expected::Integers(1, 64), ab.single_flag.then_some(1.0)));
            fields.push(field("flag_color", Expected::Integers(0, FLAG_COLORS - 1), None));
            background(&mut fields);
            fields.push(field("wind_angle", Expected::Continuous(0.0, 360.0), None));
            fields.push(field("wind_speed", Expected::Continuous(0.0, 1.0), None));
        }
        SceneSpec::Ball(_) => {
            fields.push(field("ball_count", Expected::Integers(2, 4), ab.no_distractors.then_some(1.0)));
            fields.push(field("soccer_fraction", Expected::Categories(vec![2.0 / 3.0, 1.0 / 3.0]), None));
            fields.push(field("target_color", Expected::Integers(0, BALL_COLORS - 1), None));
            background(&mut fields);
            fields.push(field("force_angle", Expected::Continuous(0.0, 360.0), None));
            fields.push(field("force_magnitude", Expected::Continuous(0.0, 1.0), None));
        }
        SceneSpec::Plant(_) => {
            fields.push(field("contact", Expected::Integers(0, crate::physics::ChainState::DEFAULT_SEGMENTS - 1), None));
            background(&mut fields);
            fields.push(field("force_angle", Expected::Continuous(0.0, 360.0), None));
            fields.push(field("force_magnitude", Expected::Continuous(0.0, 1.0), None));
        }
    }
    let mut push = |name: &str, v: f64| {
        if let Some(f) = fields.iter_mut().find(|f| f.name == name) {
            f.values.push(v);
        }
    };
    for e in entries {
        if e.spec.scenario() != first.spec.scenario() {
            return Err(AuditError::MixedScenarios);
        }
        match &e.spec {
            SceneSpec::Flag(s) => {
                push("flag_count", s.flags.len() as f64);
                for f in &s.flags {
                    push("flag_color", f.color_id as f64);
                }
                push("backdrop", s.backdrop_id as f64);
                push("ground_texture", s.ground_texture_id as f64);
                push("wind_angle", s.wind_angle);
                push("wind_speed", s.wind_speed);
            }
            SceneSpec::Ball(s) => {
                push("ball_count", s.balls.len() as f64);
                for b in &s.balls {
                    push("soccer_fraction", if b.material == BallMaterial::Soccer { 0.0 } else { 1.0 });
                }
                if let Some(t) = s.balls.get(s.target) {
                    push("target_color", t.color_id as f64);
                }
                push("backdrop", s.backdrop_id as f64);
                push("ground_texture", s.ground_texture_id as f64);
                push("force_angle", s.force_angle);
                push("force_magnitude", s.force_magnitude);
            }
            SceneSpec::Plant(s) => {
                push("contact", s.contact as f64);
                push("backdrop", s.backdrop_id as f64);
                push("ground_texture", s.ground_texture_id as f64);
                push("force_angle", s.force_angle);
                push("force_magnitude", s.force_magnitude);
            }
        }
    }
    Ok(fields)
}

/// Names of the fields audited for a plan's scenario.
pub fn audit_fields(entries: &[PlanEntry]) -> Vec<&'static str> {
    if entries.is_empty() {
        return Vec::new();
    }
    collect(&entries[..1]).map(|f| f.iter().map(|f| f.name).collect()).unwrap_or_default()
}

/// Audits every field, or only `only` when given. Ablation-pinned fields
/// are reported as degenerate rather than failed.
pub fn audit_distributions(entries: &[PlanEntry], only: Option<&[String]>) -> Result<AuditReport, AuditError> {
    if entries.len() < MIN_SAMPLES {
        return Err(AuditError::TooFewSamples(entries.len()));
    }
    let mut fields = collect(entries)?;
    if let Some(names) = only {
        for n in names {
            if !fields.iter().any(|f| f.name == n) {
                return Err(AuditError::UnknownField(n.clone()));
            }
        }
        fields.retain(|f| names.iter().any(|n| n == f.name));
    }
    Ok(AuditReport { records: entries.len(), fields: crate::par::map_slice(&fields, run) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn chi_square_matches_textbook_value() {
        // 3 categories, statistic 2.0 with 2 dof: p = exp(-1).
        let (stat, dof, p) = chi_square(&[30, 40, 50], &[1.0 / 3.0; 3]);
        assert!((stat - 5.0).abs() < 1e-12);
        assert_eq!(dof, 2);
        assert!((p - (-2.5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn kolmogorov_tail_reference_points() {
        // Classical critical values: lambda 1.36 -> 0.05, 1.63 -> 0.01.
        let p = |lambda: f64| {
            let mut s = 0.0;
            for k in 1..100 {
                let t = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
                s += if k % 2 == 1 { t } else { -t };
            }
            2.0 * s
        };
        assert!((p(1.358) - 0.05).abs() < 1e-3);
        assert!((p(1.628) - 0.01).abs() < 1e-3);
        assert!((kolmogorov_p(1.358 / 1e4f64.sqrt(), 10_000) - 0.05).abs() < 2e-3);
    }

    #[test]
    fn ks_accepts_uniform_and_rejects_skew() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let u: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_uniform(&u, 0.0, 1.0).1 > ALPHA);
        let skew: Vec<f64> = u.iter().map(|x| x * x).collect();
        assert!(ks_uniform(&skew, 0.0, 1.0).1 < 1e-6);
    }
}
