//! Generative model of annotator behaviour with known ground truth.
//!
//! Each (verbatim, dimension) gets a latent intensity `mu` in [-1, 1] and
//! salience `s` in [0, 1]. Annotator `j` marks the dimension iff
//! `s + eps_j > tau_j` with `eps_j ~ Normal(0, sigma)`; a mark carries the
//! sign of `mu`, flipped with probability `rho`. The verbatim text is a
//! shuffled bag of marker tokens (count grows with `s`, identity encodes
//! dimension and sign) and filler tokens.
//!
//! This threshold-plus-noise law is one concrete instantiation of a graded
//! annotation process; outputs are tagged with [`LAW_ID`].

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalCdf};
use thiserror::Error;

use crate::aggregate::SoftDistribution;
use crate::corpus::{AnnotationRecord, AnnotationValue, Corpus, Dimension, Post, Project, Verbatim};
use crate::seed::rng_for;

pub const LAW_ID: &str = "threshold-noise/1";

/// Smallest |mu| drawn, so salient verbatims always have a sign.
pub const MIN_INTENSITY: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum SimulatorError {
    #[error("invalid simulator config: {0}")]
    InvalidConfig(String),
    #[error("sign undefined: intensity is zero but the dimension can be marked")]
    SignUndefined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentState {
    pub intensity: f64,
    pub salience: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SalienceLaw {
    /// `s = 0` with probability `zero_weight`, else `s ~ Beta(alpha, beta)`.
    ZeroInflatedBeta {
        zero_weight: f64,
        alpha: f64,
        beta: f64,
    },
    Constant {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionLaw {
    pub salience: SalienceLaw,
    /// Probability that `mu > 0`.
    pub positive_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerVocabulary {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextConfig {
    pub markers: BTreeMap<Dimension, MarkerVocabulary>,
    pub filler: Vec<String>,
    /// Marker count is `round(s * max_markers)`.
    pub max_markers: usize,
    pub filler_tokens: usize,
}

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

impl Default for TextConfig {
    fn default() -> Self {
        let vocab = |pos: &[&str], neg: &[&str]| MarkerVocabulary { positive: words(pos), negative: words(neg) };
        TextConfig {
            markers: BTreeMap::from([
                (Dimension::Familiarity, vocab(&["familier", "habituel"], &["insolite", "etrange"])),
                (Dimension::Pleasantness, vocab(&["agreable", "charmant"], &["penible", "desagreable"])),
                (Dimension::Utility, vocab(&["pratique", "efficace"], &["inutile", "superflu"])),
                (Dimension::Legitimacy, vocab(&["legitime", "equitable"], &["abusif", "injuste"])),
            ]),
            filler: words(&[
                "le", "concept", "semble", "avec", "une", "idee", "pour", "nous", "cette", "solution", "vraiment",
                "enfin", "alors", "aussi", "bien", "chez", "donc", "tout",
            ]),
            max_markers: 8,
            filler_tokens: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulatorConfig {
    pub n_projects: usize,
    pub verbatims_per_project: usize,
    pub verbatims_per_post: usize,
    pub n_annotators: usize,
    pub dimensions: BTreeMap<Dimension, DimensionLaw>,
    /// One threshold per annotator.
    pub thresholds: Vec<f64>,
    pub noise_sigma: f64,
    pub flip_probability: f64,
    pub text: TextConfig,
    pub seed: u64,
}

fn spread(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1).max(1) as f64).collect()
}

impl Default for SimulatorConfig {
    /// 21 projects x 200 verbatims, 6 annotators, moderately salient
    /// dimensions and little noise.
    fn default() -> Self {
        let law = |zero_weight, positive_probability| DimensionLaw {
            salience: SalienceLaw::ZeroInflatedBeta { zero_weight, alpha: 2.0, beta: 2.0 },
            positive_probability,
        };
        SimulatorConfig {
            n_projects: 21,
            verbatims_per_project: 200,
            verbatims_per_post: 2,
            n_annotators: 6,
            dimensions: BTreeMap::from([
                (Dimension::Familiarity, law(0.2, 0.6)),
                (Dimension::Pleasantness, law(0.2, 0.7)),
                (Dimension::Utility, law(0.1, 0.75)),
                (Dimension::Legitimacy, law(0.2, 0.7)),
            ]),
            thresholds: spread(6, 0.1, 0.85),
            noise_sigma: 0.05,
            flip_probability: 0.02,
            text: TextConfig::default(),
            seed: 0,
        }
    }
}

impl SimulatorConfig {
    /// Tuned so corpus statistics resemble a sparse, mostly positive real
    /// campaign: about 76% of verbatims unmarked on Familiarity, 45% on
    /// Utility, and about 3% of (verbatim, dimension) pairs marked negative.
    /// Sign flips are off.
    pub fn sparse_campaign() -> Self {
        let law = |zero_weight, positive_probability| DimensionLaw {
            salience: SalienceLaw::ZeroInflatedBeta { zero_weight, alpha: 2.0, beta: 2.0 },
            positive_probability,
        };
        SimulatorConfig {
            dimensions: BTreeMap::from([
                (Dimension::Familiarity, law(0.725, 0.70)),
                (Dimension::Pleasantness, law(0.678, 0.95)),
                (Dimension::Utility, law(0.36, 0.97)),
                (Dimension::Legitimacy, law(0.678, 0.94)),
            ]),
            thresholds: spread(6, 0.25, 0.75),
            noise_sigma: 0.1,
            flip_probability: 0.0,
            ..Self::default()
        }
    }

    /// Same shape, every dimension at one constant salience.
    pub fn with_constant_salience(mut self, value: f64) -> Self {
        for law in self.dimensions.values_mut() {
            law.salience = SalienceLaw::Constant { value };
        }
        self
    }

    pub fn validate(&self) -> Result<(), SimulatorError> {
        let bad = |m: String| Err(SimulatorError::InvalidConfig(m));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.n_projects == 0 || self.verbatims_per_project == 0 || self.verbatims_per_post == 0 {
            return bad("project, verbatim and post counts must be positive".into());
        }
        if self.n_annotators < 2 {
            return bad(format!("need at least 2 annotators, got {}", self.n_annotators));
        }
        if self.thresholds.len() != self.n_annotators {
            return bad(format!("{} thresholds for {} annotators", self.thresholds.len(), self.n_annotators));
        }
        if !self.thresholds.iter().all(|&t| prob(t)) {
            return bad("thresholds must lie in [0, 1]".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be a finite non-negative number".into());
        }
        if !(0.0..0.5).contains(&self.flip_probability) {
            return bad("flip_probability must lie in [0, 0.5)".into());
        }
        for d in Dimension::ALL {
            let Some(law) = self.dimensions.get(&d) else {
                return bad(format!("missing law for dimension {d}"));
            };
            if !prob(law.positive_probability) {
                return bad(format!("positive_probability out of range for {d}"));
            }
            match law.salience {
                SalienceLaw::ZeroInflatedBeta { zero_weight, alpha, beta } => {
                    let positive = |x: f64| x > 0.0 && x.is_finite();
                    if !prob(zero_weight) || !positive(alpha) || !positive(beta) {
                        return bad(format!("invalid salience law for {d}"));
                    }
                }
                SalienceLaw::Constant { value } => {
                    if !prob(value) {
                        return bad(format!("constant salience out of range for {d}"));
                    }
                }
            }
            if self.text.max_markers > 0 {
                let v = self.text.markers.get(&d);
                if v.is_none_or(|v| v.positive.is_empty() || v.negative.is_empty()) {
                    return bad(format!("marker vocabulary missing for {d}"));
                }
            }
        }
        if self.text.filler_tokens > 0 && self.text.filler.is_empty() {
            return bad("filler vocabulary is empty".into());
        }
        Ok(())
    }
}

/// Latent state and closed-form expected vote distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthEntry {
    pub state: LatentState,
    pub expected: SoftDistribution<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub entries: BTreeMap<(String, Dimension), TruthEntry>,
}

#[derive(Serialize)]
struct TruthLine<'a> {
    verbatim_id: &'a str,
    dimension: Dimension,
    mu: f64,
    salience: f64,
    expected: [f64; 3],
    law: &'static str,
}

impl GroundTruth {
    pub fn get(&self, verbatim_id: &str, dimension: Dimension) -> Option<&TruthEntry> {
        self.entries.get(&(verbatim_id.to_string(), dimension))
    }

    /// JSONL: `{verbatim_id, dimension, mu, salience, expected: [p_neg, p_zero, p_pos], law}`.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for ((id, dim), e) in &self.entries {
            let line = TruthLine {
                verbatim_id: id,
                dimension: *dim,
                mu: e.state.intensity,
                salience: e.state.salience,
                expected: e.expected.as_array(),
                law: LAW_ID,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Probability that annotator with threshold `tau` marks a verbatim of salience `s`.
fn mark_probability(s: f64, tau: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return if s > tau { 1.0 } else { 0.0 };
    }
    NormalCdf::standard().cdf((s - tau) / sigma)
}

/// Closed-form vote distribution averaged over annotators.
pub fn expected_soft_label(
    state: &LatentState,
    config: &SimulatorConfig,
) -> Result<SoftDistribution<f64>, SimulatorError> {
    let n = config.thresholds.len() as f64;
    let marked =
        config.thresholds.iter().map(|&t| mark_probability(state.salience, t, config.noise_sigma)).sum::<f64>() / n;
    if state.intensity == 0.0 && (state.salience > 0.0 || marked > 0.0) {
        return Err(SimulatorError::SignUndefined);
    }
    let rho = config.flip_probability;
    let (p_neg, p_pos) =
        if state.intensity > 0.0 { (marked * rho, marked * (1.0 - rho)) } else { (marked * (1.0 - rho), marked * rho) };
    Ok(SoftDistribution::new(p_neg, 1.0 - p_neg - p_pos, p_pos))
}

fn sample_salience<R: Rng>(law: &SalienceLaw, rng: &mut R) -> f64 {
    match *law {
        SalienceLaw::Constant { value } => value,
        SalienceLaw::ZeroInflatedBeta { zero_weight, alpha, beta } => {
            if rng.random::<f64>() < zero_weight {
                0.0
            } else {
                Beta::new(alpha, beta).expect("validated beta parameters").sample(rng)
            }
        }
    }
}

/// Draws a corpus and its ground truth. Streams are derived from
/// `config.seed` with labels `simulator/latent`, `simulator/annotators` and
/// `simulator/text`.
pub fn generate(config: &SimulatorConfig) -> Result<(Corpus, GroundTruth), SimulatorError> {
    config.validate()?;
    let mut latent_rng = rng_for(config.seed, "simulator/latent");
    let mut vote_rng = rng_for(config.seed, "simulator/annotators");
    let mut text_rng = rng_for(config.seed, "simulator/text");
    let noise = (config.noise_sigma > 0.0).then(|| Normal::new(0.0, config.noise_sigma).expect("validated sigma"));
    let annotators: Vec<String> = (0..config.n_annotators).map(|j| format!("a{j}")).collect();

    let mut projects = Vec::new();
    let mut posts = Vec::new();
    let mut verbatims = Vec::new();
    let mut records = Vec::new();
    let mut truth = GroundTruth::default();

    for p in 0..config.n_projects {
        let project_id = format!("p{p:02}");
        projects.push(Project { id: project_id.clone(), name: format!("Simulated concept {p}") });
        for v in 0..config.verbatims_per_project {
            let post_idx = v / config.verbatims_per_post;
            let post_id = format!("{project_id}-s{post_idx:04}");
            if v % config.verbatims_per_post == 0 {
                posts.push(Post {
                    id: post_id.clone(),
                    project_id: project_id.clone(),
                    participant_id: format!("u{:03}", (p * 31 + post_idx) % 240),
                });
            }
            let verbatim_id = format!("{project_id}-v{v:04}");
            let mut tokens: Vec<&str> = Vec::new();

            for dim in Dimension::ALL {
                let law = &config.dimensions[&dim];
                let salience = sample_salience(&law.salience, &mut latent_rng);
                let magnitude = latent_rng.random_range(MIN_INTENSITY..=1.0);
                let positive = latent_rng.random::<f64>() < law.positive_probability;
                let state = LatentState { intensity: if positive { magnitude } else { -magnitude }, salience };
                let expected = expected_soft_label(&state, config)?;
                truth.entries.insert((verbatim_id.clone(), dim), TruthEntry { state, expected });

                for (annotator, &tau) in annotators.iter().zip(&config.thresholds) {
                    let eps = noise.map_or(0.0, |n| n.sample(&mut vote_rng));
                    let value = if salience + eps > tau {
                        let sign = if positive { AnnotationValue::Positive } else { AnnotationValue::Negative };
                        if config.flip_probability > 0.0 && vote_rng.random::<f64>() < config.flip_probability {
                            sign.flipped()
                        } else {
                            sign
                        }
                    } else {
                        AnnotationValue::Zero
                    };
                    records.push(AnnotationRecord {
                        verbatim_id: verbatim_id.clone(),
                        annotator_id: annotator.clone(),
                        dimension: dim,
                        value,
                    });
                }

                let count = (salience * config.text.max_markers as f64).round() as usize;
                if count > 0 {
                    let vocab = &config.text.markers[&dim];
                    let pool = if positive { &vocab.positive } else { &vocab.negative };
                    for _ in 0..count {
                        tokens.push(pool.choose(&mut text_rng).expect("non-empty vocabulary"));
                    }
                }
            }
            for _ in 0..config.text.filler_tokens {
                tokens.push(config.text.filler.choose(&mut text_rng).expect("non-empty filler"));
            }
            tokens.shuffle(&mut text_rng);
            verbatims.push(Verbatim {
                id: verbatim_id,
                project_id: project_id.clone(),
                post_id,
                position: (v % config.verbatims_per_post) as u64,
                text: tokens.join(" "),
            });
        }
    }
    Ok((Corpus::from_parts(projects, posts, verbatims, records), truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimulatorConfig {
        SimulatorConfig { n_projects: 2, verbatims_per_project: 10, ..SimulatorConfig::default() }
    }

    #[test]
    fn below_every_threshold_is_all_zero() {
        let cfg = SimulatorConfig { noise_sigma: 0.0, ..small() };
        let e = expected_soft_label(&LatentState { intensity: 0.5, salience: 0.05 }, &cfg).unwrap();
        assert_eq!(e.as_array(), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn fully_salient_noiseless_is_unanimous() {
        let cfg = SimulatorConfig { noise_sigma: 0.0, flip_probability: 0.0, ..small() };
        let e = expected_soft_label(&LatentState { intensity: 0.5, salience: 1.0 }, &cfg).unwrap();
        assert_eq!(e.as_array(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn on_threshold_with_noise_is_half() {
        let cfg = SimulatorConfig { noise_sigma: 0.1, flip_probability: 0.0, thresholds: vec![0.5; 6], ..small() };
        let e = expected_soft_label(&LatentState { intensity: 0.3, salience: 0.5 }, &cfg).unwrap();
        assert!((e.p_pos - 0.5).abs() < 1e-12);
        assert_eq!(e.p_neg, 0.0);
    }

    #[test]
    fn zero_intensity_when_salient_is_an_error() {
        let cfg = small();
        assert_eq!(
            expected_soft_label(&LatentState { intensity: 0.0, salience: 0.4 }, &cfg),
            Err(SimulatorError::SignUndefined)
        );
        let silent = SimulatorConfig { noise_sigma: 0.0, ..small() };
        assert!(expected_soft_label(&LatentState { intensity: 0.0, salience: 0.0 }, &silent).is_ok());
    }

    #[test]
    fn flips_split_mass() {
        let cfg = SimulatorConfig { noise_sigma: 0.0, flip_probability: 0.1, ..small() };
        let e = expected_soft_label(&LatentState { intensity: -0.5, salience: 1.0 }, &cfg).unwrap();
        assert!((e.p_neg - 0.9).abs() < 1e-12);
        assert!((e.p_pos - 0.1).abs() < 1e-12);
    }

    #[test]
    fn noiseless_unit_salience_gives_unanimous_corpus() {
        let cfg = SimulatorConfig { noise_sigma: 0.0, flip_probability: 0.0, thresholds: vec![0.5; 6], ..small() }
            .with_constant_salience(1.0);
        let (corpus, truth) = generate(&cfg).unwrap();
        for v in corpus.verbatims() {
            for d in Dimension::ALL {
                let sign = truth.get(&v.id, d).unwrap().state.intensity.signum() as i8;
                for r in corpus.records_for(&v.id).iter().filter(|r| r.dimension == d) {
                    assert_eq!(r.value.as_i8(), sign);
                }
            }
        }
    }

    #[test]
    fn zero_salience_gives_all_zero_corpus() {
        let cfg = SimulatorConfig { noise_sigma: 0.0, ..small() }.with_constant_salience(0.0);
        let (corpus, _) = generate(&cfg).unwrap();
        assert!(corpus.records().iter().all(|r| r.value == AnnotationValue::Zero));
        assert_eq!(corpus.records().len(), 20 * 6 * 4);
    }

    #[test]
    fn generation_is_seeded() {
        let (a, ta) = generate(&small()).unwrap();
        let (b, tb) = generate(&small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = generate(&SimulatorConfig { seed: 1, ..small() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generated_corpus_is_valid() {
        let (corpus, truth) = generate(&small()).unwrap();
        assert!(crate::corpus::validate(&corpus).is_empty());
        assert_eq!(truth.entries.len(), 20 * 4);
        assert_eq!(corpus.posts().len(), 10);
        for e in truth.entries.values() {
            assert!(e.state.intensity.abs() >= MIN_INTENSITY);
            assert!((e.expected.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SimulatorConfig::default().validate().is_ok());
        assert!(SimulatorConfig::sparse_campaign().validate().is_ok());
        assert!(SimulatorConfig { n_annotators: 1, thresholds: vec![0.5], ..small() }.validate().is_err());
        assert!(SimulatorConfig { flip_probability: 0.5, ..small() }.validate().is_err());
        assert!(SimulatorConfig { thresholds: vec![0.5; 5], ..small() }.validate().is_err());
        assert!(SimulatorConfig { noise_sigma: -1.0, ..small() }.validate().is_err());
    }

    #[test]
    fn config_json_round_trip_and_partial() {
        let cfg = SimulatorConfig::sparse_campaign();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<SimulatorConfig>(&text).unwrap(), cfg);
        let partial: SimulatorConfig = serde_json::from_str(r#"{"n_projects": 3}"#).unwrap();
        assert_eq!(partial.n_projects, 3);
        assert_eq!(partial.n_annotators, 6);
    }
}
