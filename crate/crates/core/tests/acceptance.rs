//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Desk scale: half-second clips, 2000 evaluations per run, 10 targets.

use std::time::Instant;

use vocalmatch::audio_io::{add_noise_snr, read_wav, write_wav, AudioClip, WavEncoding};
use vocalmatch::bench::{run_experiment, Experiment, ExperimentConfig, ExperimentReport, ReportRow};
use vocalmatch::features::{extract, mae, mel_spec, mfcc, multiscale_mag, stft_mag, ReprKind};
use vocalmatch::inversion::{match_windowed, savgol_filter, MatchTask, WindowedConfig};
use vocalmatch::optimizers::{optimize, Bounds, FnProblem, Method, OptimizerConfig, StopCriteria};
use vocalmatch::quality::stoi_value;
use vocalmatch::vocal_tract::{
    synthesize_static, synthesize_trajectory, DiameterProfile, Param, ParamTrajectory, SynthConfig, Tract, TractParams,
    TRACT_OVERSAMPLING, TRACT_SECTIONS,
};

const TARGETS: usize = 10;
const SEED: u64 = 2024;

fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty(), "median of no values");
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn config(experiment: Experiment, optimizers: &[Method], reprs: &[ReprKind]) -> ExperimentConfig {
    ExperimentConfig {
        optimizers: optimizers.to_vec(),
        representations: reprs.to_vec(),
        repetitions: TARGETS,
        master_seed: SEED,
        ..ExperimentConfig::desk(experiment)
    }
}

fn rows<'a>(r: &'a ExperimentReport, opt: &str, repr: &str) -> impl Iterator<Item = &'a ReportRow> {
    let (opt, repr) = (opt.to_owned(), repr.to_owned());
    r.rows
        .iter()
        .filter(move |row| row.optimizer == opt && row.representation == repr && !row.failed())
}

fn single_param_error(r: &ExperimentReport, opt: &str, p: Param) -> Vec<f64> {
    let suffix = format!("-{}", p.short_label());
    rows(r, opt, "multiscale")
        .filter(|row| row.target_id.ends_with(&suffix))
        .filter_map(|row| row.error(p))
        .collect()
}

fn timed<T>(label: &str, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    eprintln!("  [{label}: {:.0}s]", t.elapsed().as_secs_f64());
    out
}

fn criterion_1_2_6(single: &ExperimentReport) -> Vec<Outcome> {
    let mut worst = Vec::new();
    let mut pass1 = true;
    for p in Param::ALL {
        for opt in ["ga", "pso"] {
            let m = median(single_param_error(single, opt, p));
            pass1 &= m < 0.02;
            worst.push(format!("{opt}/{}={m:.4}", p.short_label()));
        }
    }

    let ga_all: Vec<f64> = Param::ALL
        .iter()
        .flat_map(|&p| single_param_error(single, "ga", p))
        .collect();
    let per_param: Vec<String> = Param::ALL
        .iter()
        .map(|&p| {
            format!(
                "{}={:.1e}",
                p.short_label(),
                median(single_param_error(single, "ga", p))
            )
        })
        .collect();
    let m2 = median(ga_all);

    let time = |opt: &str| median(rows(single, opt, "multiscale").map(|r| r.elapsed_s).collect());
    let (trf, pso, ga) = (time("trf"), time("pso"), time("ga"));
    let failed = single.failed_count();

    vec![
        Outcome {
            id: 1,
            name: "single-parameter recovery, GA and PSO median error < 0.02 per parameter",
            pass: pass1 && failed == 0,
            detail: format!("{} (failed cells {failed})", worst.join(" ")),
        },
        Outcome {
            id: 2,
            name: "single-parameter GA multiscale median error < 1e-3",
            pass: m2 < 1e-3,
            detail: format!(
                "median {m2:.2e} over {} runs; per parameter {}",
                TARGETS * 8,
                per_param.join(" ")
            ),
        },
        Outcome {
            id: 6,
            name: "single-parameter median wall time TRF < PSO < GA",
            pass: trf < pso && pso < ga,
            detail: format!(
                "trf {trf:.3}s pso {pso:.3}s ga {ga:.3}s (pso/trf {:.1}x, ga/trf {:.1}x)",
                pso / trf,
                ga / trf
            ),
        },
    ]
}

fn criterion_3_9(all: &ExperimentReport) -> Vec<Outcome> {
    let audio = |opt: &str| median(rows(all, opt, "mel").filter_map(|r| r.audio_mae).collect());
    let good: Vec<(&str, f64)> = ["ga", "pso", "cmaes"].iter().map(|&o| (o, audio(o))).collect();
    let bad: Vec<(&str, f64)> = ["nm", "trf"].iter().map(|&o| (o, audio(o))).collect();
    let pass3 = good.iter().all(|g| bad.iter().all(|b| g.1 < b.1));
    let fmt = |v: &[(&str, f64)]| {
        v.iter()
            .map(|(o, m)| format!("{o}={m:.4}"))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let stoi_all: Vec<f64> = all.rows.iter().filter_map(|r| r.stoi).collect();
    let per_opt: Vec<String> = Method::ALL
        .iter()
        .map(|m| {
            let v: Vec<f64> = rows(all, m.name(), "mel").filter_map(|r| r.stoi).collect();
            format!("{m}={:.2}", if v.is_empty() { f64::NAN } else { median(v) })
        })
        .collect();
    let m9 = if stoi_all.is_empty() {
        f64::NAN
    } else {
        median(stoi_all.clone())
    };

    vec![
        Outcome {
            id: 3,
            name: "all-parameter mel audio MAE: each of GA/PSO/CMA-ES below each of NM/TRF",
            pass: pass3 && all.failed_count() == 0,
            detail: format!("{} | {}", fmt(&good), fmt(&bad)),
        },
        Outcome {
            id: 9,
            name: "matched-output STOI on synthetic targets, median >= 0.3",
            pass: m9 >= 0.3,
            detail: format!(
                "median {m9:.3} over {} runs; per optimizer {}; real recordings: none supplied, not gated",
                stoi_all.len(),
                per_opt.join(" ")
            ),
        },
    ]
}

fn criterion_4(all: &ExperimentReport, reprs: &ExperimentReport) -> Outcome {
    let pitch =
        |r: &ExperimentReport, repr: &str| median(rows(r, "ga", repr).filter_map(|r| r.error(Param::Pitch)).collect());
    let (mfcc, mel, ms) = (pitch(reprs, "mfcc"), pitch(all, "mel"), pitch(reprs, "multiscale"));
    Outcome {
        id: 4,
        name: "GA median pitch error: MFCC above mel and multiscale",
        pass: mfcc > mel && mfcc > ms,
        detail: format!("mfcc {mfcc:.4} mel {mel:.4} multiscale {ms:.4}"),
    }
}

fn criterion_5(noisy: &ExperimentReport) -> Outcome {
    let at = |snr: Option<f64>| {
        median(
            noisy
                .rows
                .iter()
                .filter(|r| !r.failed() && r.snr_db() == snr)
                .filter_map(|r| r.audio_mae)
                .collect(),
        )
    };
    let clean = at(None);
    let levels: Vec<(f64, f64)> = [40.0, 30.0, 20.0, 0.0].iter().map(|&s| (s, at(Some(s)))).collect();
    let knee_ok = levels[..3].iter().all(|(_, m)| *m <= 2.0 * clean);
    let worse_at_0 = levels[3].1 > levels[2].1;
    Outcome {
        id: 5,
        name: "GA mel noise: MAE at 40/30/20 dB within 2x clean, 0 dB above 20 dB",
        pass: knee_ok && worse_at_0 && noisy.failed_count() == 0,
        detail: format!(
            "clean {clean:.4} {}",
            levels
                .iter()
                .map(|(s, m)| format!("{s}dB={m:.4}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    }
}

fn criterion_7() -> Outcome {
    let start = TractParams::new(110.0, 0.85, 22.0, 2.3, 0.9, 28.0, 1.0, 0.8).unwrap();
    let end = start.with(Param::Pitch, 260.0).unwrap();
    let traj = ParamTrajectory::glide(start, end, 1.0).unwrap();
    let synth = SynthConfig::with_seed(SEED);
    let target = synthesize_trajectory(&traj, 1.0, &synth).unwrap();
    let task = MatchTask {
        stop: StopCriteria::with_budget(2000),
        synth,
        ..MatchTask::new(target, ReprKind::MultiScale, OptimizerConfig::new(Method::Ga, SEED))
    };
    let r = match_windowed(&task, &WindowedConfig::default()).unwrap();
    let truth: Vec<f64> = r
        .window_centers_s
        .iter()
        .map(|&t| traj.normalized_at(t).get(Param::Pitch))
        .collect();
    let smoothed: Vec<f64> = r.smoothed.iter().map(|x| x.get(Param::Pitch)).collect();
    let raw: Vec<f64> = r.raw.iter().map(|x| x.get(Param::Pitch)).collect();
    let dev = truth.iter().zip(&smoothed).map(|(a, b)| (a - b).abs()).sum::<f64>() / truth.len() as f64;
    let per_window = median(truth.iter().zip(&raw).map(|(a, b)| (a - b).abs()).collect());
    Outcome {
        id: 7,
        name: "windowed GA on a pitch glide: smoothed deviation < 0.15, per-window median < 0.1",
        pass: dev < 0.15 && per_window < 0.1,
        detail: format!(
            "{} windows, smoothed mean deviation {dev:.4}, per-window median {per_window:.4}",
            r.windows.len()
        ),
    }
}

type Check = (&'static str, fn() -> Result<(), String>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sphere() -> FnProblem<impl Fn(&[f64]) -> f64 + Sync> {
    FnProblem::new(2, |x: &[f64]| (x[0] - 0.3).powi(2) + (x[1] - 0.3).powi(2))
}

fn check_sphere() -> Result<(), String> {
    for m in Method::ALL {
        let r = optimize(
            &sphere(),
            &Bounds::unit(2),
            &OptimizerConfig::new(m, 1),
            &StopCriteria::with_budget(5000),
        )
        .map_err(|e| e.to_string())?;
        ensure(r.best_cost < 1e-3, || format!("{m} reached {}", r.best_cost))?;
    }
    Ok(())
}

fn check_optimizer_contracts() -> Result<(), String> {
    let p = FnProblem::new(3, |x: &[f64]| {
        x.iter().map(|v| (v - 0.8).abs()).sum::<f64>() + (7.0 * x[0]).sin() * 0.2
    });
    let b = Bounds::unit(3);
    for m in Method::ALL {
        let cfg = OptimizerConfig::new(m, 5);
        let r1 = optimize(&p, &b, &cfg, &StopCriteria::with_budget(600)).map_err(|e| e.to_string())?;
        let r2 = optimize(&p, &b, &cfg, &StopCriteria::with_budget(600)).map_err(|e| e.to_string())?;
        ensure(b.contains(&r1.best_x), || format!("{m} left the box"))?;
        ensure(r1.history.windows(2).all(|w| w[1] <= w[0]), || {
            format!("{m} history increased")
        })?;
        ensure(r1.best_x == r2.best_x && r1.n_evals == r2.n_evals, || {
            format!("{m} not deterministic")
        })?;
        ensure(r1.n_evals <= 600, || format!("{m} overspent"))?;
    }
    Ok(())
}

fn check_savgol() -> Result<(), String> {
    let q: Vec<f64> = (0..25)
        .map(|i| 0.002 * (i * i) as f64 - 0.03 * i as f64 + 0.4)
        .collect();
    let out = savgol_filter(&q, 9, 2).map_err(|e| e.to_string())?;
    let err = q.iter().zip(&out).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(err < 1e-9, || format!("quadratic reproduced to {err:e}"))
}

fn check_mae() -> Result<(), String> {
    let a: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
    let b: Vec<f64> = (0..1000).map(|i| ((i * 104_729) % 997) as f64 / 997.0).collect();
    let mut sum = 0.0;
    for i in 0..a.len() {
        sum += (a[i] - b[i]).abs();
    }
    let got = mae(&a, &b).map_err(|e| e.to_string())?;
    ensure((got - sum / 1000.0).abs() < 1e-12, || {
        format!("{got} vs {}", sum / 1000.0)
    })
}

fn check_shapes() -> Result<(), String> {
    let clip = synthesize_static(&TractParams::midpoint(), 1.0, &SynthConfig::default()).map_err(|e| e.to_string())?;
    let s = stft_mag(&clip).map_err(|e| e.to_string())?;
    ensure(s.frames == 92 && s.bins == 513, || {
        format!("stft {}x{}", s.frames, s.bins)
    })?;
    let ms = multiscale_mag(&clip).map_err(|e| e.to_string())?;
    ensure(ms.len() == 5 && ms[0].frames == 2997, || "multiscale shape".into())?;
    let m = mel_spec(&clip).map_err(|e| e.to_string())?;
    ensure(m.bins == 128 && m.frames == 92, || "mel shape".into())?;
    let c = mfcc(&clip).map_err(|e| e.to_string())?;
    ensure(c.bins == 20, || "mfcc shape".into())?;
    ensure(
        extract(ReprKind::Stft, &clip).map_err(|e| e.to_string())?.len() == 47_196,
        || "stft length".into(),
    )?;
    ensure(
        extract(ReprKind::Mfcc, &clip).map_err(|e| e.to_string())?.len() == 1840,
        || "mfcc length".into(),
    )
}

fn autocorr_f0(x: &[f64], sr: f64) -> f64 {
    let (lo, hi) = ((sr / 400.0) as usize, (sr / 60.0) as usize);
    let r = |lag: usize| {
        let n = x.len() - lag;
        let num: f64 = (0..n).map(|i| x[i] * x[i + lag]).sum();
        let e: f64 = (0..n).map(|i| x[i] * x[i]).sum::<f64>() * (0..n).map(|i| x[i + lag] * x[i + lag]).sum::<f64>();
        num / e.sqrt()
    };
    let v: Vec<f64> = (lo..=hi).map(r).collect();
    let top = v.iter().copied().fold(f64::MIN, f64::max);
    let mut i = v.iter().position(|&a| a > 0.9 * top).unwrap();
    while i + 1 < v.len() && v[i + 1] > v[i] {
        i += 1;
    }
    let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
    sr / ((lo + i) as f64 + 0.5 * (a - c) / (a - 2.0 * b + c))
}

fn check_synth() -> Result<(), String> {
    let cfg = SynthConfig::with_seed(3);
    let p = TractParams::midpoint()
        .with(Param::Voiceness, 0.9)
        .map_err(|e| e.to_string())?;
    let a = synthesize_static(&p, 0.3, &cfg).map_err(|e| e.to_string())?;
    let b = synthesize_static(&p, 0.3, &cfg).map_err(|e| e.to_string())?;
    ensure(a == b, || "synthesis not deterministic".into())?;
    for pitch in [75.0, 150.0, 220.0, 330.0] {
        let p = p.with(Param::Pitch, pitch).map_err(|e| e.to_string())?;
        let clip = synthesize_static(&p, 0.4, &cfg).map_err(|e| e.to_string())?;
        let f0 = autocorr_f0(&clip.samples()[4800..], 48_000.0);
        ensure((f0 - pitch).abs() <= 0.01 * pitch, || format!("f0 {f0} for {pitch}"))?;
    }
    Ok(())
}

fn check_neutral_tube() -> Result<(), String> {
    let rate = 48_000.0 * TRACT_OVERSAMPLING as f64;
    let predicted = rate / (4.0 * TRACT_SECTIONS as f64);
    let mut tract = Tract::new(&DiameterProfile::uniform(TRACT_SECTIONS, 1.5).map_err(|e| e.to_string())?);
    let h: Vec<f64> = (0..16_384)
        .map(|i| tract.step(if i == 0 { 1.0 } else { 0.0 }))
        .collect();
    let mag = |f: f64| {
        let w = 2.0 * std::f64::consts::PI * f / rate;
        let (re, im) = h.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, v)| {
            (re + v * (w * n as f64).cos(), im - v * (w * n as f64).sin())
        });
        f64::hypot(re, im)
    };
    let peak = (100..1500)
        .map(f64::from)
        .max_by(|a, b| mag(*a).total_cmp(&mag(*b)))
        .unwrap();
    ensure((peak - predicted).abs() <= 0.1 * predicted, || {
        format!("peak {peak} vs {predicted}")
    })
}

fn check_stoi() -> Result<(), String> {
    let p = TractParams::midpoint()
        .with(Param::Voiceness, 0.9)
        .map_err(|e| e.to_string())?;
    let x = synthesize_static(&p, 1.0, &SynthConfig::default()).map_err(|e| e.to_string())?;
    let own = stoi_value(&x, &x).map_err(|e| e.to_string())?;
    ensure(own >= 0.99, || format!("stoi(x, x) = {own}"))?;
    let s: Vec<f64> = [20.0, 10.0, 0.0]
        .iter()
        .map(|&snr| stoi_value(&x, &add_noise_snr(&x, snr, 4).unwrap()).unwrap())
        .collect();
    ensure(s[0] > s[1] && s[1] > s[2], || format!("not monotone {s:?}"))
}

fn check_wav_and_noise() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let clip = synthesize_static(&TractParams::midpoint(), 0.2, &SynthConfig::default()).map_err(|e| e.to_string())?;
    // float WAVs hold f32 samples, so compare against the f32-rounded clip
    let rounded = AudioClip::new(clip.samples().iter().map(|&v| f64::from(v as f32)).collect(), 48_000).unwrap();
    let path = dir.path().join("x.wav");
    write_wav(&path, &rounded, WavEncoding::Float32).map_err(|e| e.to_string())?;
    ensure(read_wav(&path).map_err(|e| e.to_string())? == rounded, || {
        "float round trip".into()
    })?;
    write_wav(&path, &clip, WavEncoding::Pcm16).map_err(|e| e.to_string())?;
    let back = read_wav(&path).map_err(|e| e.to_string())?;
    let err = clip
        .samples()
        .iter()
        .zip(back.samples())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(err <= 1.0 / 32768.0, || format!("pcm error {err}"))?;
    for seed in 0..10 {
        let noisy = add_noise_snr(&clip, 20.0, seed).map_err(|e| e.to_string())?;
        let noise: f64 = noisy
            .samples()
            .iter()
            .zip(clip.samples())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let snr = 10.0 * (clip.samples().iter().map(|v| v * v).sum::<f64>() / noise).log10();
        ensure((snr - 20.0).abs() <= 0.2, || format!("seed {seed}: {snr} dB"))?;
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let checks: [Check; 10] = [
        ("sphere", check_sphere),
        ("optimizer contracts", check_optimizer_contracts),
        ("savitzky-golay", check_savgol),
        ("mae oracle", check_mae),
        ("feature shapes", check_shapes),
        ("synthesis", check_synth),
        ("neutral tube", check_neutral_tube),
        ("stoi", check_stoi),
        ("wav and noise", check_wav_and_noise),
        ("cmaes rejects 1-d", || {
            let p = FnProblem::new(1, |x: &[f64]| x[0]);
            ensure(
                optimize(
                    &p,
                    &Bounds::unit(1),
                    &OptimizerConfig::new(Method::Cmaes, 0),
                    &StopCriteria::default(),
                )
                .is_err(),
                || "accepted".into(),
            )
        }),
    ];
    let failures: Vec<String> = checks
        .iter()
        .filter_map(|(name, f)| f().err().map(|e| format!("{name}: {e}")))
        .collect();
    Outcome {
        id: 8,
        name: "property suites",
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{} checks passed", checks.len())
        } else {
            failures.join("; ")
        },
    }
}

fn main() {
    // `cargo test` passes harness flags such as --nocapture; none apply here
    let started = Instant::now();
    let mut outcomes = Vec::new();

    outcomes.push(timed("property suites", criterion_8));

    let single = timed("single-parameter grid", || {
        run_experiment(&config(
            Experiment::SingleParam,
            &[Method::Ga, Method::Pso, Method::Trf],
            &[ReprKind::MultiScale],
        ))
        .unwrap()
    });
    outcomes.extend(criterion_1_2_6(&single));

    let all = timed("all-parameter mel grid", || {
        run_experiment(&ExperimentConfig {
            compute_stoi: true,
            ..config(Experiment::AllParams, &Method::ALL, &[ReprKind::Mel])
        })
        .unwrap()
    });
    outcomes.extend(criterion_3_9(&all));

    let reprs = timed("GA representation grid", || {
        run_experiment(&config(
            Experiment::AllParams,
            &[Method::Ga],
            &[ReprKind::Mfcc, ReprKind::MultiScale],
        ))
        .unwrap()
    });
    outcomes.push(criterion_4(&all, &reprs));

    let noisy = timed("noise grid", || {
        run_experiment(&ExperimentConfig {
            snr_grid: vec![40.0, 30.0, 20.0, 0.0],
            ..config(Experiment::Noisy, &[Method::Ga], &[ReprKind::Mel])
        })
        .unwrap()
    });
    outcomes.push(criterion_5(&noisy));

    outcomes.push(timed("windowed glide", criterion_7));

    outcomes.sort_by_key(|o| o.id);
    let mut failed = 0;
    for o in &outcomes {
        println!(
            "criterion {} {}: {} | {}",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.0}s",
        outcomes.len() - failed,
        outcomes.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
