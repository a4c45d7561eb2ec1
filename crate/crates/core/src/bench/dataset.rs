use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audio_io::{write_wav, WavEncoding};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, hash_label, stream_rng};
use crate::vocal_tract::{synthesize_static, NormalizedParams, SynthConfig, TractParams, N_PARAMS};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// WAV file name relative to the manifest directory.
    pub wav: PathBuf,
    pub params: TractParams,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub duration_s: f64,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Uniform random controls; every component drawn from `[0, 1)` in normalized space.
pub fn random_params(seed: u64, stream: u64) -> TractParams {
    let mut rng = stream_rng(seed, stream);
    let x: Vec<f64> = (0..N_PARAMS).map(|_| rng.random()).collect();
    NormalizedParams::clamped(&x).denormalize()
}

pub fn entry_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, &[hash_label("dataset"), index as u64])
}

/// One-second clips with random controls, plus `manifest.json`.
pub fn generate_dataset(n: usize, master_seed: u64, out_dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    generate_dataset_with_duration(n, master_seed, out_dir, 1.0)
}

pub fn generate_dataset_with_duration(
    n: usize,
    master_seed: u64,
    out_dir: impl AsRef<Path>,
    duration_s: f64,
) -> Result<DatasetManifest> {
    if n == 0 {
        return Err(Error::InvalidConfig("dataset needs at least one clip".into()));
    }
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width = n.to_string().len().max(3);
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let seed = entry_seed(master_seed, i);
        let params = random_params(seed, 0);
        let clip = synthesize_static(&params, duration_s, &SynthConfig::with_seed(seed))?;
        let id = format!("clip{i:0width$}");
        let wav = PathBuf::from(format!("{id}.wav"));
        write_wav(dir.join(&wav), &clip, WavEncoding::Float32)?;
        entries.push(ManifestEntry { id, wav, params, seed });
    }
    let manifest = DatasetManifest { duration_s, entries };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio_io::read_wav;

    #[test]
    fn dataset_is_reproducible() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = generate_dataset_with_duration(3, 17, a.path(), 0.1).unwrap();
        let mb = generate_dataset_with_duration(3, 17, b.path(), 0.1).unwrap();
        assert_eq!(ma, mb);
        for e in &ma.entries {
            assert_eq!(
                std::fs::read(a.path().join(&e.wav)).unwrap(),
                std::fs::read(b.path().join(&e.wav)).unwrap()
            );
            assert_eq!(read_wav(a.path().join(&e.wav)).unwrap().len(), 4800);
        }
        assert_eq!(DatasetManifest::load(a.path().join(MANIFEST_FILE)).unwrap(), ma);
    }

    #[test]
    fn ids_unique_and_params_valid() {
        let d = tempfile::tempdir().unwrap();
        let m = generate_dataset_with_duration(12, 3, d.path(), 0.05).unwrap();
        let mut ids: Vec<&str> = m.entries.iter().map(|e| e.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 12);
        for e in &m.entries {
            assert!(TractParams::from_array(e.params.as_array()).is_ok());
        }
        assert!(generate_dataset(0, 1, d.path()).is_err());
    }
}
