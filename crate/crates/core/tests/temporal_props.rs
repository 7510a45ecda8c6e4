use avdim_core::audio_features::AudioFrameFeatures;
use avdim_core::temporal_stats::*;
use avdim_core::visual_features::{ShotTrack, VisualFrameFeatures};
use proptest::prelude::*;

fn sequence(rows: Vec<Vec<f64>>) -> FrameFeatureSequence {
    let dim = rows[0].len();
    FrameFeatureSequence {
        clip_id: "p".into(),
        feature_names: (0..dim).map(|d| format!("f{d}")).collect(),
        windows: rows,
    }
}

fn rows(max_dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_dim, 1usize..30)
        .prop_flat_map(|(d, t)| prop::collection::vec(prop::collection::vec(-1e3f64..1e3, d), t))
}

#[test]
fn lower_median_by_sort() {
    let v = clip_stats(&sequence(vec![vec![3.0], vec![1.0], vec![4.0], vec![2.0]])).unwrap();
    assert_eq!(v.names, ["f0.med", "f0.max", "f0.min", "f0.mean"]);
    assert_eq!(v.values, [2.0, 4.0, 1.0, 2.5]);
}

#[test]
fn hand_z_score() {
    let (tz, az, s) = standardize(&[vec![0.0], vec![2.0]], &[vec![4.0]]).unwrap();
    assert_eq!((s.mean[0], s.std[0]), (1.0, 1.0));
    assert_eq!(tz, vec![vec![-1.0], vec![1.0]]);
    assert_eq!(az, vec![vec![3.0]]);
}

#[test]
fn test_outlier_leaves_training_statistics_alone() {
    let train = vec![vec![1.0, 5.0], vec![2.0, 6.0], vec![4.0, 9.0]];
    let (_, _, clean) = standardize(&train, &[vec![0.0, 0.0]]).unwrap();
    let (_, _, dirty) = standardize(&train, &[vec![1e9, -1e9]]).unwrap();
    assert_eq!(clean, dirty);
}

fn constant_frames(n_audio: usize, n_video: usize, c: f64) -> (Vec<AudioFrameFeatures>, Vec<VisualFrameFeatures>) {
    let audio = vec![
        AudioFrameFeatures {
            pitch_hz: 180.0,
            energy_rms: c,
            zcr: c,
            mfcc: [c; 12],
            formants: [c; 3],
            plp: [c; 8],
        };
        n_audio
    ];
    let visual = vec![
        VisualFrameFeatures {
            motion_intensity: c,
            lighting: c,
            color_energy: c,
            shot_cut: false,
            luma_delta: 0.0,
        };
        n_video
    ];
    (audio, visual)
}

proptest! {
    #[test]
    fn clip_stats_ignore_window_order(rows in rows(5), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(clip_stats(&sequence(rows)).unwrap(), clip_stats(&sequence(shuffled)).unwrap());
    }

    #[test]
    fn clip_stats_are_ordered(rows in rows(4)) {
        let v = clip_stats(&sequence(rows)).unwrap();
        for s in v.values.chunks(4) {
            let (med, max, min, mean) = (s[0], s[1], s[2], s[3]);
            prop_assert!(min <= med && med <= max);
            prop_assert!(min <= mean + 1e-9 && mean <= max + 1e-9);
        }
    }

    #[test]
    fn constant_frames_pool_to_constant_windows(c in -50.0f64..50.0, secs in 1usize..6) {
        let (audio, visual) = constant_frames(secs * 100, secs * 25, c);
        let rate = RateInfo { audio_hop: 0.01, video_fps: 25.0, duration: secs as f64 };
        let shots = ShotTrack { cut_indices: vec![], shot_lengths: vec![secs as f64] };
        let seq = pool_windows("k", &audio, &visual, &shots, &rate, &PoolingGrid::default()).unwrap();
        prop_assert_eq!(seq.windows.len(), 2 * secs - 1);
        prop_assert_eq!(&seq.feature_names, &window_feature_names());
        let names = window_feature_names();
        for row in &seq.windows {
            for (name, v) in names.iter().zip(row) {
                let expected = match name.as_str() {
                    "audio.pitch" => 180.0,
                    "visual.shot_rate" | "visual.zcr" => 0.0,
                    "visual.rhythm" => 1.0,
                    _ => c,
                };
                prop_assert!((v - expected).abs() <= 1e-9 * (1.0 + c.abs()), "{} = {}", name, v);
            }
        }
    }

    #[test]
    fn standardized_training_rows_have_zero_mean(rows in rows(6)) {
        let (tz, _, s) = standardize(&rows, &[]).unwrap();
        let n = tz.len() as f64;
        for d in 0..rows[0].len() {
            let m: f64 = tz.iter().map(|r| r[d]).sum::<f64>() / n;
            prop_assert!(m.abs() < 1e-9);
            if s.std[d] >= STD_FLOOR {
                let var: f64 = tz.iter().map(|r| r[d] * r[d]).sum::<f64>() / n;
                prop_assert!((var - 1.0).abs() < 1e-9);
            } else {
                prop_assert!(tz.iter().all(|r| r[d] == 0.0));
            }
        }
    }
}
