//! Pipeline plumbing: corpus-file metadata codec, Kaldi data-directory
//! emission, and run configuration with hashing for reproducibility
//! headers.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Device {
    Laptop, // 0
    Pc,     // 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mic {
    Usb,  // 0
    Jack, // 1
}

/// Metadata encoded in a 9-character recording-file stem:
/// gender (1) + device (1) + mic (1) + sentence id (3) + speaker id (3).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UtteranceMeta {
    pub gender: Gender,
    pub device: Device,
    pub mic: Mic,
    pub sentence_id: u16, // 000-699
    pub speaker_id: u16,  // 000-999
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetaError {
    #[error("filename stem {0:?} must be exactly 9 characters")]
    BadLength(String),
    #[error("position {pos}: {msg}")]
    BadField { pos: usize, msg: String },
}

pub const MAX_SENTENCE_ID: u16 = 699;

impl UtteranceMeta {
    /// Parse a 9-character stem such as "F00123045" (extension already
    /// stripped).
    pub fn parse(stem: &str) -> Result<Self, MetaError> {
        let chars: Vec<char> = stem.chars().collect();
        if chars.len() != 9 || !chars.iter().all(|c| c.is_ascii()) {
            return Err(MetaError::BadLength(stem.to_string()));
        }
        let gender = match chars[0] {
            'F' => Gender::Female,
            'M' => Gender::Male,
            c => {
                return Err(MetaError::BadField {
                    pos: 1,
                    msg: format!("gender must be F or M, got {:?}", c),
                })
            }
        };
        let device = match chars[1] {
            '0' => Device::Laptop,
            '1' => Device::Pc,
            c => {
                return Err(MetaError::BadField {
                    pos: 2,
                    msg: format!("device must be 0 (laptop) or 1 (PC), got {:?}", c),
                })
            }
        };
        let mic = match chars[2] {
            '0' => Mic::Usb,
            '1' => Mic::Jack,
            c => {
                return Err(MetaError::BadField {
                    pos: 3,
                    msg: format!("mic must be 0 (USB) or 1 (jack), got {:?}", c),
                })
            }
        };
        let digits = |range: std::ops::Range<usize>, pos: usize, what: &str| {
            let s: String = chars[range].iter().collect();
            s.parse::<u16>().map_err(|_| MetaError::BadField {
                pos,
                msg: format!("{} must be 3 digits, got {:?}", what, s),
            })
        };
        let sentence_id = digits(3..6, 4, "sentence id")?;
        if sentence_id > MAX_SENTENCE_ID {
            return Err(MetaError::BadField {
                pos: 4,
                msg: format!("sentence id {} exceeds {}", sentence_id, MAX_SENTENCE_ID),
            });
        }
        let speaker_id = digits(6..9, 7, "speaker id")?;
        Ok(UtteranceMeta {
            gender,
            device,
            mic,
            sentence_id,
            speaker_id,
        })
    }

    /// Render the 9-character stem; inverse of [`UtteranceMeta::parse`].
    pub fn render(&self) -> String {
        format!(
            "{}{}{}{:03}{:03}",
            match self.gender {
                Gender::Female => 'F',
                Gender::Male => 'M',
            },
            match self.device {
                Device::Laptop => '0',
                Device::Pc => '1',
            },
            match self.mic {
                Mic::Usb => '0',
                Mic::Jack => '1',
            },
            self.sentence_id,
            self.speaker_id
        )
    }

    /// Kaldi utterance id: speaker-prefixed so that utterance-sorted
    /// order groups by speaker.
    pub fn utt_id(&self) -> String {
        format!("{:03}_{}", self.speaker_id, self.render())
    }

    pub fn speaker(&self) -> String {
        format!("{:03}", self.speaker_id)
    }
}

impl fmt::Display for UtteranceMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// One manifest row for Kaldi data-directory emission.
#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub audio_path: String,
    pub meta: UtteranceMeta,
    pub transcript: String,
}

#[derive(Debug, Error)]
pub enum DatadirError {
    #[error("duplicate utterance id {0}")]
    DuplicateUtterance(String),
    #[error("utterance {0} has an empty audio path")]
    MissingAudioPath(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// The four Kaldi data-directory files, rendered in memory; keys sorted
/// per Kaldi's sorted-unique conventions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KaldiDatadir {
    pub text: String,
    pub wav_scp: String,
    pub utt2spk: String,
    pub spk2utt: String,
}

pub fn build_kaldi_datadir(manifest: &[ManifestEntry]) -> Result<KaldiDatadir, DatadirError> {
    let mut rows: BTreeMap<String, &ManifestEntry> = BTreeMap::new();
    for entry in manifest {
        let utt_id = entry.meta.utt_id();
        if entry.audio_path.trim().is_empty() {
            return Err(DatadirError::MissingAudioPath(utt_id));
        }
        if rows.insert(utt_id.clone(), entry).is_some() {
            return Err(DatadirError::DuplicateUtterance(utt_id));
        }
    }
    let mut text = String::new();
    let mut wav_scp = String::new();
    let mut utt2spk = String::new();
    let mut speakers: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (utt_id, entry) in &rows {
        text.push_str(&format!("{} {}\n", utt_id, entry.transcript));
        wav_scp.push_str(&format!("{} {}\n", utt_id, entry.audio_path));
        let speaker = entry.meta.speaker();
        utt2spk.push_str(&format!("{} {}\n", utt_id, speaker));
        speakers.entry(speaker).or_default().push(utt_id.clone());
    }
    let mut spk2utt = String::new();
    for (speaker, utts) in &speakers {
        spk2utt.push_str(&format!("{} {}\n", speaker, utts.join(" ")));
    }
    Ok(KaldiDatadir {
        text,
        wav_scp,
        utt2spk,
        spk2utt,
    })
}

/// Write the four files plus a sidecar `.meta` carrying the
/// reproducibility header (the data files themselves must stay
/// comment-free for Kaldi).
pub fn emit_kaldi_datadir(
    manifest: &[ManifestEntry],
    outdir: &Path,
    meta_header: &str,
) -> Result<(), DatadirError> {
    let datadir = build_kaldi_datadir(manifest)?;
    fs::create_dir_all(outdir)?;
    fs::write(outdir.join("text"), &datadir.text)?;
    fs::write(outdir.join("wav.scp"), &datadir.wav_scp)?;
    fs::write(outdir.join("utt2spk"), &datadir.utt2spk)?;
    fs::write(outdir.join("spk2utt"), &datadir.spk2utt)?;
    fs::write(outdir.join(".meta"), meta_header)?;
    Ok(())
}

/// Run configuration: a flat key=value file with environment-variable
/// overrides (`SORANI_<UPPERCASED_KEY>`).
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub rules_path: Option<String>,
    pub constraints_path: Option<String>,
    pub corrections_path: Option<String>,
    pub variants_path: Option<String>,
    pub lexicon_k: usize,
    pub lm_discount: f64,
    pub lm_order: usize,
    pub designer_epsilon: f64,
    pub designer_max_sentences: usize,
    pub merge_ix: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            rules_path: None,
            constraints_path: None,
            corrections_path: None,
            variants_path: None,
            lexicon_k: 60_000,
            lm_discount: crate::ngram_lm::DEFAULT_DISCOUNT,
            lm_order: crate::ngram_lm::DEFAULT_ORDER,
            designer_epsilon: 1e-4,
            designer_max_sentences: 700,
            merge_ix: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("config key {key}: {msg}")]
    BadValue { key: String, msg: String },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineConfig {
    const KEYS: [&'static str; 10] = [
        "rules_path",
        "constraints_path",
        "corrections_path",
        "variants_path",
        "lexicon_k",
        "lm_discount",
        "lm_order",
        "designer_epsilon",
        "designer_max_sentences",
        "merge_ix",
    ];

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |msg: &str| ConfigError::BadValue {
            key: key.to_string(),
            msg: msg.to_string(),
        };
        // empty path values mean "unset" so render/parse round-trips
        let path = |v: &str| {
            if v.is_empty() {
                None
            } else {
                Some(v.to_string())
            }
        };
        match key {
            "rules_path" => self.rules_path = path(value),
            "constraints_path" => self.constraints_path = path(value),
            "corrections_path" => self.corrections_path = path(value),
            "variants_path" => self.variants_path = path(value),
            "lexicon_k" => self.lexicon_k = value.parse().map_err(|_| bad("expected integer"))?,
            "lm_discount" => {
                self.lm_discount = value.parse().map_err(|_| bad("expected float"))?
            }
            "lm_order" => self.lm_order = value.parse().map_err(|_| bad("expected integer"))?,
            "designer_epsilon" => {
                self.designer_epsilon = value.parse().map_err(|_| bad("expected float"))?
            }
            "designer_max_sentences" => {
                self.designer_max_sentences =
                    value.parse().map_err(|_| bad("expected integer"))?
            }
            "merge_ix" => {
                self.merge_ix = value
                    .parse()
                    .map_err(|_| bad("expected true or false"))?
            }
            _ => return Err(bad("unknown key")),
        }
        Ok(())
    }

    /// Parse the key=value config text (`#` comments, blank lines ok).
    pub fn parse(data: &str) -> Result<Self, ConfigError> {
        let mut config = PipelineConfig::default();
        for (idx, raw) in data.lines().enumerate() {
            let line = idx + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (key, value) = t.split_once('=').ok_or(ConfigError::Malformed {
                line,
                msg: "expected key=value".into(),
            })?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Apply `SORANI_<KEY>` environment overrides on top of the file
    /// values.
    pub fn apply_env(&mut self) -> Result<(), ConfigError> {
        for key in Self::KEYS {
            let var = format!("SORANI_{}", key.to_uppercase());
            if let Ok(value) = std::env::var(&var) {
                self.set(key, &value)?;
            }
        }
        Ok(())
    }

    /// Canonical serialization: every key on its own line, fixed order.
    pub fn render(&self) -> String {
        let opt = |v: &Option<String>| v.clone().unwrap_or_default();
        format!(
            "rules_path={}\nconstraints_path={}\ncorrections_path={}\nvariants_path={}\nlexicon_k={}\nlm_discount={}\nlm_order={}\ndesigner_epsilon={}\ndesigner_max_sentences={}\nmerge_ix={}\n",
            opt(&self.rules_path),
            opt(&self.constraints_path),
            opt(&self.corrections_path),
            opt(&self.variants_path),
            self.lexicon_k,
            self.lm_discount,
            self.lm_order,
            self.designer_epsilon,
            self.designer_max_sentences,
            self.merge_ix
        )
    }

    /// Hex SHA-256 of the canonical serialization; embedded in output
    /// headers so artifacts are traceable to their configuration.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.render().as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{:02x}", byte));
        }
        out
    }

    /// Standard comment header for text artifacts.
    pub fn header(&self) -> String {
        format!(
            "# sorani-speech {} config {}\n",
            crate::TOOL_VERSION,
            self.hash()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_known_stems() {
        let m = UtteranceMeta::parse("F00123045").unwrap();
        assert_eq!(m.gender, Gender::Female);
        assert_eq!(m.device, Device::Laptop);
        assert_eq!(m.mic, Mic::Usb);
        assert_eq!(m.sentence_id, 123);
        assert_eq!(m.speaker_id, 45);

        let m = UtteranceMeta::parse("M11000999").unwrap();
        assert_eq!(m.gender, Gender::Male);
        assert_eq!(m.device, Device::Pc);
        assert_eq!(m.mic, Mic::Jack);
        assert_eq!(m.sentence_id, 0);
        assert_eq!(m.speaker_id, 999);
    }

    #[test]
    fn malformed_stems_rejected_with_positions() {
        assert!(matches!(
            UtteranceMeta::parse("X00123045"),
            Err(MetaError::BadField { pos: 1, .. })
        ));
        assert!(matches!(
            UtteranceMeta::parse("F20123045"),
            Err(MetaError::BadField { pos: 2, .. })
        ));
        assert!(matches!(
            UtteranceMeta::parse("F00723045"),
            Err(MetaError::BadField { pos: 4, .. })
        ));
        assert!(matches!(
            UtteranceMeta::parse("F0012304"),
            Err(MetaError::BadLength(_))
        ));
        assert!(matches!(
            UtteranceMeta::parse("F00a23045"),
            Err(MetaError::BadField { pos: 4, .. })
        ));
    }

    #[test]
    fn render_parse_identity() {
        for stem in ["F00123045", "M11000999", "F10699000"] {
            let meta = UtteranceMeta::parse(stem).unwrap();
            assert_eq!(meta.render(), stem);
            assert_eq!(UtteranceMeta::parse(&meta.render()).unwrap(), meta);
        }
    }

    #[test]
    fn utt_id_is_speaker_prefixed() {
        let meta = UtteranceMeta::parse("F00123045").unwrap();
        assert_eq!(meta.utt_id(), "045_F00123045");
    }

    fn manifest_entry(stem: &str, text: &str) -> ManifestEntry {
        ManifestEntry {
            audio_path: format!("/audio/{}.wav", stem),
            meta: UtteranceMeta::parse(stem).unwrap(),
            transcript: text.to_string(),
        }
    }

    #[test]
    fn one_utterance_manifest() {
        let d = build_kaldi_datadir(&[manifest_entry("F00123045", "دڵ")]).unwrap();
        assert_eq!(d.text, "045_F00123045 دڵ\n");
        assert_eq!(d.wav_scp, "045_F00123045 /audio/F00123045.wav\n");
        assert_eq!(d.utt2spk, "045_F00123045 045\n");
        assert_eq!(d.spk2utt, "045 045_F00123045\n");
    }

    #[test]
    fn utt2spk_and_spk2utt_are_mutual_inverses() {
        let manifest = vec![
            manifest_entry("F00123045", "a"),
            manifest_entry("F00124045", "b"),
            manifest_entry("M10200007", "c"),
        ];
        let d = build_kaldi_datadir(&manifest).unwrap();
        let mut from_utt2spk: Vec<(String, String)> = d
            .utt2spk
            .lines()
            .map(|l| {
                let (u, s) = l.split_once(' ').unwrap();
                (s.to_string(), u.to_string())
            })
            .collect();
        from_utt2spk.sort();
        let mut from_spk2utt: Vec<(String, String)> = Vec::new();
        for l in d.spk2utt.lines() {
            let (s, utts) = l.split_once(' ').unwrap();
            for u in utts.split(' ') {
                from_spk2utt.push((s.to_string(), u.to_string()));
            }
        }
        from_spk2utt.sort();
        assert_eq!(from_utt2spk, from_spk2utt);
    }

    #[test]
    fn duplicates_and_missing_audio_rejected() {
        let dup = vec![
            manifest_entry("F00123045", "a"),
            manifest_entry("F00123045", "b"),
        ];
        assert!(matches!(
            build_kaldi_datadir(&dup),
            Err(DatadirError::DuplicateUtterance(_))
        ));
        let mut missing = manifest_entry("F00123045", "a");
        missing.audio_path = String::new();
        assert!(matches!(
            build_kaldi_datadir(&[missing]),
            Err(DatadirError::MissingAudioPath(_))
        ));
    }

    #[test]
    fn datadir_lines_are_sorted() {
        let manifest = vec![
            manifest_entry("M10200007", "c"),
            manifest_entry("F00123045", "a"),
        ];
        let d = build_kaldi_datadir(&manifest).unwrap();
        let utts: Vec<&str> = d.text.lines().collect();
        let mut sorted = utts.clone();
        sorted.sort();
        assert_eq!(utts, sorted);
    }

    #[test]
    fn config_parse_and_render_round_trip() {
        let text = "# comment\nlexicon_k=500\nlm_discount=0.5\nmerge_ix=true\n";
        let config = PipelineConfig::parse(text).unwrap();
        assert_eq!(config.lexicon_k, 500);
        assert_eq!(config.lm_discount, 0.5);
        assert!(config.merge_ix);
        let again = PipelineConfig::parse(&config.render()).unwrap();
        assert_eq!(again, config);
        assert_eq!(again.hash(), config.hash());
    }

    #[test]
    fn config_rejects_bad_input() {
        assert!(matches!(
            PipelineConfig::parse("lexicon_k ten"),
            Err(ConfigError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            PipelineConfig::parse("lexicon_k=ten"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            PipelineConfig::parse("bogus=1"),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn config_hash_distinguishes_configs() {
        let a = PipelineConfig::default();
        let mut b = PipelineConfig::default();
        b.lexicon_k = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn env_overrides_apply() {
        // set + unset within one test to avoid cross-test interference
        std::env::set_var("SORANI_LEXICON_K", "77");
        let mut config = PipelineConfig::default();
        config.apply_env().unwrap();
        std::env::remove_var("SORANI_LEXICON_K");
        assert_eq!(config.lexicon_k, 77);
    }
}
