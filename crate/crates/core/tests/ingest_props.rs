use std::path::{Path, PathBuf};

use avdim_core::ingest::*;
use proptest::prelude::*;

fn y4m_header_len(bytes: &[u8]) -> usize {
    bytes.iter().position(|&b| b == b'\n').unwrap() + 1
}

#[test]
fn manifest_row_numbers_count_data_rows() {
    let text = "clip_id,audio_path,video_path,arousal,valence\nc1,a.wav,v.y4m,1.333,-0.667\nc2,a.wav,v.y4m,3,0\n";
    match parse_manifest(text, Path::new("/d")) {
        Err(IngestError::Manifest { row, .. }) => assert_eq!(row, 2),
        other => panic!("{other:?}"),
    }
    let ok = parse_manifest(&text.replace(",3,0", ",0,0"), Path::new("/d")).unwrap();
    assert_eq!(ok[0].arousal_label, 1.333);
    assert_eq!(ok[0].valence_label, -0.667);
    assert_eq!(ok[0].audio_path, PathBuf::from("/d/a.wav"));
}

#[test]
fn crlf_manifest() {
    let text = "clip_id,audio_path,video_path,arousal,valence\r\nc1,a.wav,v.y4m,1,-1\r\n";
    let recs = parse_manifest(text, Path::new(".")).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].valence_label, -1.0);
}

fn arb_frames() -> impl Strategy<Value = (usize, usize, Vec<(u8, u8, u8)>)> {
    (1usize..9, 1usize..9, prop::collection::vec(any::<(u8, u8, u8)>(), 1..5))
}

fn block_chroma_frame(w: usize, h: usize, seed: (u8, u8, u8)) -> Frame {
    let (y0, cb0, cr0) = seed;
    let n = w * h;
    let mut f = Frame {
        y: (0..n).map(|i| y0.wrapping_add(i as u8)).collect(),
        cb: vec![0; n],
        cr: vec![0; n],
    };
    for i in 0..n {
        let block = (i / w / 2) * w.div_ceil(2) + (i % w) / 2;
        f.cb[i] = cb0.wrapping_add(block as u8);
        f.cr[i] = cr0.wrapping_sub(block as u8);
    }
    f
}

proptest! {
    #[test]
    fn wav_payload_round_trips(samples in prop::collection::vec(any::<i16>(), 1..500), sr in 1000u32..96_000) {
        let bytes = write_wav(&samples, sr, 1);
        let track = parse_wav(&bytes).unwrap();
        prop_assert_eq!(track.sample_rate, sr);
        prop_assert!(track.samples.iter().all(|s| (-1.0..=1.0).contains(s)));
        prop_assert_eq!(track_to_pcm16(&track), samples.clone());
        prop_assert_eq!(write_wav(&track_to_pcm16(&track), sr, 1), bytes);
    }

    #[test]
    fn truncated_wav_is_a_parse_error(samples in prop::collection::vec(any::<i16>(), 2..100), cut in 1usize..4) {
        let bytes = write_wav(&samples, 8000, 1);
        let short = &bytes[..bytes.len() - cut];
        let is_parse_error = matches!(parse_wav(short), Err(IngestError::Parse { .. }));
        prop_assert!(is_parse_error);
    }

    #[test]
    fn y4m_length_accounts_for_every_byte((w, h, seeds) in arb_frames(), c444 in any::<bool>()) {
        let seq = FrameSequence {
            frames: seeds.iter().map(|&s| block_chroma_frame(w, h, s)).collect(),
            width: w,
            height: h,
            frame_rate: 25.0,
        };
        let chroma = if c444 { Chroma::C444 } else { Chroma::C420 };
        let bytes = write_y4m(&seq, chroma, 25, 1);
        let chroma_len = if c444 { 2 * w * h } else { 2 * w.div_ceil(2) * h.div_ceil(2) };
        let per_frame = b"FRAME\n".len() + w * h + chroma_len;
        prop_assert_eq!(bytes.len(), y4m_header_len(&bytes) + seq.frames.len() * per_frame);
        let back = parse_y4m(&bytes).unwrap();
        prop_assert_eq!(back, seq);
    }

    #[test]
    fn manifest_reserialization_is_idempotent(
        rows in prop::collection::vec(("[a-z][a-z0-9_]{0,8}", -2.0f64..=2.0, -2.0f64..=2.0), 1..12)
    ) {
        let mut text = String::from("clip_id,audio_path,video_path,arousal,valence\n");
        let mut seen = std::collections::HashSet::new();
        for (id, a, v) in &rows {
            if seen.insert(id.clone()) {
                text.push_str(&format!("{id},{id}.wav,{id}.y4m,{a},{v}\n"));
            }
        }
        let first = parse_manifest(&text, Path::new("/base")).unwrap();
        let again = parse_manifest(&manifest_to_string(&first), Path::new("/other")).unwrap();
        prop_assert_eq!(&first, &again);
        prop_assert_eq!(manifest_to_string(&again), manifest_to_string(&first));
    }
}
