use vocalmatch::audio_io::{add_noise_snr, read_wav};
use vocalmatch::bench::{generate_dataset_with_duration, DatasetManifest, MANIFEST_FILE};
use vocalmatch::features::{extract, ReprKind};
use vocalmatch::inversion::{make_objective, match_single_param, match_windowed, MatchTask, WindowedConfig};
use vocalmatch::optimizers::{Method, OptimizerConfig, Problem, StopCriteria, StopReason};
use vocalmatch::quality::stoi_value;
use vocalmatch::vocal_tract::{synthesize_static, Param, SynthConfig, TractParams};

#[test]
fn dataset_clips_are_self_consistent_targets() {
    let dir = tempfile::tempdir().unwrap();
    generate_dataset_with_duration(2, 8, dir.path(), 0.2).unwrap();
    let manifest = DatasetManifest::load(dir.path().join(MANIFEST_FILE)).unwrap();
    for e in &manifest.entries {
        let clip = read_wav(dir.path().join(&e.wav)).unwrap();
        let task = MatchTask {
            synth: SynthConfig::with_seed(e.seed),
            ..MatchTask::new(clip, ReprKind::Mel, OptimizerConfig::default())
        };
        let obj = make_objective(&task).unwrap();
        // float WAVs store f32, so the match is exact only up to that rounding
        assert!(obj.cost(&e.params.normalize().as_array()) < 1e-6);
    }
}

#[test]
fn every_method_stops_at_once_from_the_truth() {
    let p = TractParams::new(200.0, 0.7, 24.0, 2.5, 0.7, 20.0, 0.8, 0.9).unwrap();
    let target = synthesize_static(&p, 0.2, &SynthConfig::default()).unwrap();
    for method in [Method::Ga, Method::Pso, Method::Nm, Method::Trf] {
        for param in [Param::Pitch, Param::LipsDiameter] {
            let cfg = OptimizerConfig::new(method, 1).with_initial(vec![p.normalize().get(param)]);
            let r = match_single_param(&MatchTask::single(target.clone(), ReprKind::Stft, cfg, param, p)).unwrap();
            assert_eq!(r.optimization.stop_reason, StopReason::Target);
            assert_eq!(r.optimization.n_evals, 1);
        }
    }
}

#[test]
fn constant_target_gives_flat_smoothed_pitch() {
    let p = TractParams::new(150.0, 0.9, 20.0, 2.0, 1.0, 30.0, 1.1, 0.8).unwrap();
    let target = synthesize_static(&p, 1.0, &SynthConfig::default()).unwrap();
    let task = MatchTask {
        stop: StopCriteria::with_budget(300),
        ..MatchTask::single(
            target,
            ReprKind::MultiScale,
            OptimizerConfig::new(Method::Ga, 2),
            Param::Pitch,
            p,
        )
    };
    let r = match_windowed(&task, &WindowedConfig::default()).unwrap();
    assert_eq!(r.windows.len(), 10);
    let series: Vec<f64> = r.smoothed.iter().map(|x| x.get(Param::Pitch)).collect();
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    assert!(series.iter().all(|v| (v - mean).abs() < 0.05), "{series:?}");
}

#[test]
fn noisy_targets_stay_matchable() {
    let p = TractParams::midpoint();
    let clean = synthesize_static(&p, 0.5, &SynthConfig::default()).unwrap();
    let noisy = add_noise_snr(&clean, 10.0, 5).unwrap();
    assert_eq!(
        extract(ReprKind::Mfcc, &noisy).unwrap().len(),
        ReprKind::Mfcc.feature_len(noisy.len())
    );
    let s20 = stoi_value(&clean, &add_noise_snr(&clean, 20.0, 5).unwrap()).unwrap();
    let s0 = stoi_value(&clean, &add_noise_snr(&clean, 0.0, 5).unwrap()).unwrap();
    assert!(s20 > s0);
}
