//! Intelligibility scoring and import of externally computed perceptual scores.

mod stoi;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};

pub use stoi::{resample, stoi_value, SEGMENT_FRAMES, STOI_RATE_HZ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Metric {
    Stoi,
    Pesq,
    Peaq,
    Visqol,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Stoi => "STOI",
            Metric::Pesq => "PESQ",
            Metric::Peaq => "PEAQ",
            Metric::Visqol => "VISQOL",
        }
    }

    /// Valid value range: STOI is a fraction, the others are on the 1-5 opinion scale.
    pub fn range(self) -> (f64, f64) {
        match self {
            Metric::Stoi => (0.0, 1.0),
            _ => (1.0, 5.0),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "STOI" => Ok(Metric::Stoi),
            "PESQ" => Ok(Metric::Pesq),
            "PEAQ" => Ok(Metric::Peaq),
            "VISQOL" => Ok(Metric::Visqol),
            other => Err(Error::InvalidConfig(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSource {
    Internal,
    Imported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub metric: Metric,
    pub value: f64,
    pub source: ScoreSource,
    /// Clip the score belongs to, when known.
    pub clip_id: Option<String>,
}

pub fn stoi(reference: &AudioClip, degraded: &AudioClip) -> Result<QualityScore> {
    Ok(QualityScore {
        metric: Metric::Stoi,
        value: stoi_value(reference, degraded)?,
        source: ScoreSource::Internal,
        clip_id: None,
    })
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    metric: String,
    clip_id: String,
    value: f64,
}

/// Reads a `metric,clip_id,value` CSV. An empty file yields no scores.
pub fn import_scores(path: impl AsRef<Path>) -> Result<Vec<QualityScore>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut scores = Vec::new();
    for (i, row) in reader.deserialize::<ScoreRow>().enumerate() {
        // header is line 1
        let line = i + 2;
        let row = row.map_err(|e| Error::InvalidScore {
            line,
            detail: e.to_string(),
        })?;
        let metric: Metric = row.metric.parse().map_err(|_| Error::InvalidScore {
            line,
            detail: format!("unknown metric `{}`", row.metric),
        })?;
        let (lo, hi) = metric.range();
        if !(lo..=hi).contains(&row.value) {
            return Err(Error::InvalidScore {
                line,
                detail: format!("{metric} value {} outside [{lo}, {hi}]", row.value),
            });
        }
        scores.push(QualityScore {
            metric,
            value: row.value,
            source: ScoreSource::Imported,
            clip_id: Some(row.clip_id),
        });
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio_io::add_noise_snr;
    use crate::vocal_tract::{synthesize_static, SynthConfig, TractParams};
    use std::io::Write;

    fn voice(dur: f64) -> AudioClip {
        let p = TractParams::new(140.0, 0.9, 20.0, 2.0, 1.0, 30.0, 1.1, 0.9).unwrap();
        synthesize_static(&p, dur, &SynthConfig::default()).unwrap()
    }

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn identical_signals_score_near_one() {
        let x = voice(1.0);
        assert!(stoi(&x, &x).unwrap().value >= 0.99);
    }

    #[test]
    fn score_drops_as_noise_grows() {
        let x = voice(1.0);
        let s: Vec<f64> = [20.0, 10.0, 0.0]
            .iter()
            .map(|&snr| stoi_value(&x, &add_noise_snr(&x, snr, 3).unwrap()).unwrap())
            .collect();
        assert!(s[0] > s[1] && s[1] > s[2], "{s:?}");
    }

    #[test]
    fn gain_of_degraded_signal_is_ignored() {
        let x = voice(0.8);
        let y = add_noise_snr(&x, 5.0, 1).unwrap();
        let y2 = AudioClip::new(y.samples().iter().map(|v| 2.0 * v).collect(), y.sample_rate_hz()).unwrap();
        assert!((stoi_value(&x, &y).unwrap() - stoi_value(&x, &y2).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn appended_silence_barely_matters() {
        // 8320 samples at 10 kHz end exactly on a frame boundary, so the padding adds
        // no partially filled frames
        let x = voice(0.832);
        let y = add_noise_snr(&x, 5.0, 2).unwrap();
        let pad = |c: &AudioClip| {
            let mut s = c.samples().to_vec();
            s.extend(std::iter::repeat_n(0.0, 48_000));
            AudioClip::new(s, 48_000).unwrap()
        };
        let d = stoi_value(&x, &y).unwrap() - stoi_value(&pad(&x), &pad(&y)).unwrap();
        assert!(d.abs() < 0.01, "{d}");
    }

    #[test]
    fn invalid_inputs_rejected() {
        let x = voice(0.6);
        assert!(matches!(stoi(&x, &x.slice(0, 1000)), Err(Error::LengthMismatch { .. })));
        let other = AudioClip::new(x.samples().to_vec(), 44_100).unwrap();
        assert!(matches!(stoi(&x, &other), Err(Error::SampleRateMismatch { .. })));
        let silent = AudioClip::new(vec![0.0; x.len()], 48_000).unwrap();
        assert!(matches!(stoi(&silent, &x), Err(Error::SilentSignal)));
    }

    #[test]
    fn import_accepts_valid_rows() {
        let f = csv_file("metric,clip_id,value\nPESQ,clip3,2.6\nSTOI,clip1,0.5\n");
        let s = import_scores(f.path()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].metric, Metric::Pesq);
        assert_eq!(s[0].value, 2.6);
        assert_eq!(s[0].clip_id.as_deref(), Some("clip3"));
        assert_eq!(s[1].source, ScoreSource::Imported);
    }

    #[test]
    fn import_rejects_out_of_range_and_unknown() {
        let f = csv_file("metric,clip_id,value\nSTOI,clip1,1.2\n");
        assert!(matches!(
            import_scores(f.path()),
            Err(Error::InvalidScore { line: 2, .. })
        ));
        let f = csv_file("metric,clip_id,value\nPESQ,a,3\nMOSNET,clip1,3.0\n");
        assert!(matches!(
            import_scores(f.path()),
            Err(Error::InvalidScore { line: 3, .. })
        ));
        let f = csv_file("metric,clip_id,value\nVISQOL,a,0.5\n");
        assert!(import_scores(f.path()).is_err());
    }

    #[test]
    fn import_empty_file() {
        let f = csv_file("");
        assert!(import_scores(f.path()).unwrap().is_empty());
        assert!(import_scores("/nonexistent/scores.csv").unwrap_err().is_io());
    }
}
