//! Raw media and manifest ingestion.
//!
//! Only uncompressed containers are accepted: RIFF/WAVE with 16-bit PCM
//! samples and YUV4MPEG2 (4:2:0, 4:4:4 or mono) video. The dataset manifest
//! is a small CSV file that pairs each clip with its averaged arousal and
//! valence annotation.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lowest and highest annotation level.
pub const LABEL_MIN: f64 = -2.0;
pub const LABEL_MAX: f64 = 2.0;

pub const MANIFEST_HEADER: [&str; 5] = ["clip_id", "audio_path", "video_path", "arousal", "valence"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("parse error at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("media contains no samples")]
    EmptyMedia,
    #[error("manifest error at row {row}: {reason}")]
    Manifest { row: usize, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    fn parse(offset: usize, reason: impl Into<String>) -> Self {
        IngestError::Parse {
            offset,
            reason: reason.into(),
        }
    }
}

/// Mono audio with amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioTrack {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioTrack {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// One full-resolution Y'CbCr picture. Planes are row-major, `width * height` bytes each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub y: Vec<u8>,
    pub cb: Vec<u8>,
    pub cr: Vec<u8>,
}

impl Frame {
    pub fn uniform(width: usize, height: usize, y: u8, cb: u8, cr: u8) -> Self {
        let n = width * height;
        Frame {
            y: vec![y; n],
            cb: vec![cb; n],
            cr: vec![cr; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Frame>,
    pub width: usize,
    pub height: usize,
    pub frame_rate: f64,
}

impl FrameSequence {
    pub fn duration(&self) -> f64 {
        self.frames.len() as f64 / self.frame_rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipRecord {
    pub clip_id: String,
    pub audio_path: PathBuf,
    pub video_path: PathBuf,
    pub arousal_label: f64,
    pub valence_label: f64,
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

const WAVE_FORMAT_PCM: u16 = 0x0001;
const WAVE_FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct FmtChunk {
    channels: u16,
    sample_rate: u32,
}

fn parse_fmt(body: &[u8], offset: usize) -> Result<FmtChunk, IngestError> {
    if body.len() < 16 {
        return Err(IngestError::parse(offset, "fmt chunk shorter than 16 bytes"));
    }
    let mut format = read_u16(body, 0);
    if format == WAVE_FORMAT_EXTENSIBLE {
        if body.len() < 26 {
            return Err(IngestError::parse(offset, "extensible fmt chunk too short"));
        }
        format = read_u16(body, 24);
    }
    if format != WAVE_FORMAT_PCM {
        return Err(IngestError::UnsupportedFormat(format!(
            "wave format tag {format:#06x} is not PCM"
        )));
    }
    let channels = read_u16(body, 2);
    let sample_rate = read_u32(body, 4);
    let bits = read_u16(body, 14);
    if bits != 16 {
        return Err(IngestError::UnsupportedFormat(format!(
            "{bits}-bit PCM (only 16-bit is supported)"
        )));
    }
    if !(1..=2).contains(&channels) {
        return Err(IngestError::UnsupportedFormat(format!("{channels} channels")));
    }
    if sample_rate == 0 {
        return Err(IngestError::parse(offset + 4, "sample rate is zero"));
    }
    Ok(FmtChunk {
        channels,
        sample_rate,
    })
}

/// Decode a RIFF/WAVE PCM16 file. Stereo is averaged down to mono.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioTrack, IngestError> {
    if bytes.len() < 12 {
        return Err(IngestError::parse(bytes.len(), "file shorter than RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(IngestError::parse(0, "missing RIFF tag"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(IngestError::parse(8, "missing WAVE tag"));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut pos = 12;
    loop {
        if pos + 8 > bytes.len() {
            return Err(IngestError::parse(pos, "no data chunk found"));
        }
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        match id {
            b"fmt " => {
                if body_start + size > bytes.len() {
                    return Err(IngestError::parse(pos, "truncated fmt chunk"));
                }
                fmt = Some(parse_fmt(&bytes[body_start..body_start + size], body_start)?);
            }
            b"data" => {
                let fmt = fmt.ok_or_else(|| IngestError::parse(pos, "data chunk precedes fmt chunk"))?;
                if size == 0 {
                    return Err(IngestError::EmptyMedia);
                }
                if body_start + size > bytes.len() {
                    return Err(IngestError::parse(
                        bytes.len(),
                        format!("data chunk declares {size} bytes, only {} present", bytes.len() - body_start),
                    ));
                }
                let frame_bytes = 2 * fmt.channels as usize;
                if !size.is_multiple_of(frame_bytes) {
                    return Err(IngestError::parse(
                        body_start + size - size % frame_bytes,
                        "partial sample frame at end of data chunk",
                    ));
                }
                let data = &bytes[body_start..body_start + size];
                let samples = data
                    .chunks_exact(frame_bytes)
                    .map(|frame| {
                        let sum: f64 = frame
                            .chunks_exact(2)
                            .map(|s| i16::from_le_bytes([s[0], s[1]]) as f64 / 32768.0)
                            .sum();
                        sum / fmt.channels as f64
                    })
                    .collect();
                return Ok(AudioTrack {
                    samples,
                    sample_rate: fmt.sample_rate,
                });
            }
            _ => {
                if body_start + size > bytes.len() {
                    return Err(IngestError::parse(pos, "truncated chunk"));
                }
            }
        }
        // RIFF chunks are word aligned.
        pos = body_start + size + (size & 1);
    }
}

/// Encode interleaved PCM16 samples as a canonical 44-byte-header WAV file.
pub fn write_wav(samples: &[i16], sample_rate: u32, channels: u16) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&WAVE_FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    let block_align = channels as u32 * 2;
    out.extend_from_slice(&(sample_rate * block_align).to_le_bytes());
    out.extend_from_slice(&(block_align as u16).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Quantize a mono track back to PCM16. Exact inverse of [`parse_wav`] for PCM16 mono input.
pub fn track_to_pcm16(track: &AudioTrack) -> Vec<i16> {
    track
        .samples
        .iter()
        .map(|&s| (s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chroma {
    C420,
    C444,
    Mono,
}

impl Chroma {
    fn from_tag(tag: &str) -> Result<Self, IngestError> {
        match tag {
            "420" | "420jpeg" | "420paldv" | "420mpeg2" => Ok(Chroma::C420),
            "444" => Ok(Chroma::C444),
            "mono" => Ok(Chroma::Mono),
            other => Err(IngestError::UnsupportedFormat(format!("y4m colorspace C{other}"))),
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Chroma::C420 => "420jpeg",
            Chroma::C444 => "444",
            Chroma::Mono => "mono",
        }
    }

    fn plane_dims(self, width: usize, height: usize) -> (usize, usize) {
        match self {
            Chroma::C420 => (width.div_ceil(2), height.div_ceil(2)),
            Chroma::C444 => (width, height),
            Chroma::Mono => (0, 0),
        }
    }
}

fn find_newline(bytes: &[u8], from: usize) -> Option<usize> {
    bytes[from..].iter().position(|&b| b == b'\n').map(|p| from + p)
}

/// Decode a YUV4MPEG2 stream to full-resolution Y'CbCr frames.
pub fn parse_y4m(bytes: &[u8]) -> Result<FrameSequence, IngestError> {
    const MAGIC: &[u8] = b"YUV4MPEG2";
    if !bytes.starts_with(MAGIC) {
        return Err(IngestError::parse(0, "missing YUV4MPEG2 signature"));
    }
    let header_end =
        find_newline(bytes, 0).ok_or_else(|| IngestError::parse(bytes.len(), "unterminated stream header"))?;
    let header = std::str::from_utf8(&bytes[MAGIC.len()..header_end])
        .map_err(|_| IngestError::parse(MAGIC.len(), "stream header is not ASCII"))?;

    let mut width = None;
    let mut height = None;
    let mut rate = None;
    let mut chroma = Chroma::C420;
    let mut field_offset = MAGIC.len();
    for token in header.split(' ') {
        let at = field_offset;
        field_offset += token.len() + 1;
        if token.is_empty() {
            continue;
        }
        let (key, value) = token.split_at(1);
        match key {
            "W" => width = Some(value.parse::<usize>().map_err(|_| IngestError::parse(at, "bad W"))?),
            "H" => height = Some(value.parse::<usize>().map_err(|_| IngestError::parse(at, "bad H"))?),
            "F" => {
                let (num, den) = value.split_once(':').ok_or_else(|| IngestError::parse(at, "bad F"))?;
                let num: u64 = num.parse().map_err(|_| IngestError::parse(at, "bad F numerator"))?;
                let den: u64 = den.parse().map_err(|_| IngestError::parse(at, "bad F denominator"))?;
                if num == 0 || den == 0 {
                    return Err(IngestError::UnsupportedFormat(format!("frame rate {num}:{den}")));
                }
                rate = Some(num as f64 / den as f64);
            }
            "C" => chroma = Chroma::from_tag(value)?,
            // Interlacing, aspect and extension tokens carry nothing we use.
            _ => {}
        }
    }
    let width = width.ok_or_else(|| IngestError::parse(header_end, "missing W token"))?;
    let height = height.ok_or_else(|| IngestError::parse(header_end, "missing H token"))?;
    let frame_rate = rate.ok_or_else(|| IngestError::parse(header_end, "missing F token"))?;
    if width == 0 || height == 0 {
        return Err(IngestError::UnsupportedFormat(format!("{width}x{height} picture")));
    }

    let luma_len = width * height;
    let (cw, ch) = chroma.plane_dims(width, height);
    let chroma_len = cw * ch;
    let payload = luma_len + 2 * chroma_len;

    let mut frames = Vec::new();
    let mut pos = header_end + 1;
    while pos < bytes.len() {
        if !bytes[pos..].starts_with(b"FRAME") {
            return Err(IngestError::parse(pos, "expected FRAME marker"));
        }
        let line_end =
            find_newline(bytes, pos).ok_or_else(|| IngestError::parse(bytes.len(), "unterminated FRAME header"))?;
        let start = line_end + 1;
        if start + payload > bytes.len() {
            return Err(IngestError::parse(
                bytes.len(),
                format!("frame payload needs {payload} bytes, {} present", bytes.len() - start),
            ));
        }
        let y = bytes[start..start + luma_len].to_vec();
        let (cb, cr) = match chroma {
            Chroma::Mono => (vec![128; luma_len], vec![128; luma_len]),
            Chroma::C444 => (
                bytes[start + luma_len..start + luma_len + chroma_len].to_vec(),
                bytes[start + luma_len + chroma_len..start + payload].to_vec(),
            ),
            Chroma::C420 => {
                let cb_plane = &bytes[start + luma_len..start + luma_len + chroma_len];
                let cr_plane = &bytes[start + luma_len + chroma_len..start + payload];
                (
                    upsample_nearest(cb_plane, cw, width, height),
                    upsample_nearest(cr_plane, cw, width, height),
                )
            }
        };
        frames.push(Frame { y, cb, cr });
        pos = start + payload;
    }
    if frames.is_empty() {
        return Err(IngestError::EmptyMedia);
    }
    Ok(FrameSequence {
        frames,
        width,
        height,
        frame_rate,
    })
}

fn upsample_nearest(plane: &[u8], plane_width: usize, width: usize, height: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(width * height);
    for row in 0..height {
        let src = &plane[(row / 2) * plane_width..];
        out.extend((0..width).map(|col| src[col / 2]));
    }
    out
}

/// Encode frames as YUV4MPEG2. 4:2:0 chroma keeps the top-left sample of each 2x2 block,
/// so nearest-neighbour decoding restores block-constant chroma exactly.
pub fn write_y4m(seq: &FrameSequence, chroma: Chroma, rate_num: u32, rate_den: u32) -> Vec<u8> {
    let (w, h) = (seq.width, seq.height);
    let mut out = format!("YUV4MPEG2 W{w} H{h} F{rate_num}:{rate_den} Ip A1:1 C{}\n", chroma.tag()).into_bytes();
    let (cw, ch) = chroma.plane_dims(w, h);
    for frame in &seq.frames {
        out.extend_from_slice(b"FRAME\n");
        out.extend_from_slice(&frame.y);
        match chroma {
            Chroma::Mono => {}
            Chroma::C444 => {
                out.extend_from_slice(&frame.cb);
                out.extend_from_slice(&frame.cr);
            }
            Chroma::C420 => {
                for plane in [&frame.cb, &frame.cr] {
                    for row in 0..ch {
                        out.extend((0..cw).map(|col| plane[(2 * row) * w + 2 * col]));
                    }
                }
            }
        }
    }
    out
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_wav_file(path: &Path) -> Result<AudioTrack, IngestError> {
    parse_wav(&fs::read(path).map_err(io_err(path))?)
}

pub fn read_y4m_file(path: &Path) -> Result<FrameSequence, IngestError> {
    parse_y4m(&fs::read(path).map_err(io_err(path))?)
}

/// Parse manifest text. Rows are numbered from 1, counting data rows only.
/// Relative media paths are joined onto `base_dir`.
pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<Vec<ClipRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| IngestError::Manifest {
        row: 0,
        reason: e.to_string(),
    })?;
    if headers.iter().ne(MANIFEST_HEADER.iter().copied()) {
        return Err(IngestError::Manifest {
            row: 0,
            reason: format!("header must be `{}`", MANIFEST_HEADER.join(",")),
        });
    }

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let fail = |reason: String| IngestError::Manifest { row: row_no, reason };
        let row = row.map_err(|e| fail(e.to_string()))?;
        let field = |k: usize| row.get(k).unwrap_or_default();
        let clip_id = field(0).to_string();
        if clip_id.is_empty() {
            return Err(fail("empty clip_id".into()));
        }
        if !seen.insert(clip_id.clone()) {
            return Err(fail(format!("duplicate clip_id `{clip_id}`")));
        }
        let label = |k: usize, name: &str| -> Result<f64, IngestError> {
            let v: f64 = field(k)
                .trim()
                .parse()
                .map_err(|_| fail(format!("{name} `{}` is not a number", field(k))))?;
            if !(LABEL_MIN..=LABEL_MAX).contains(&v) {
                return Err(fail(format!("{name} {v} outside [-2, 2]")));
            }
            Ok(v)
        };
        let arousal_label = label(3, "arousal")?;
        let valence_label = label(4, "valence")?;
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_relative() {
                base_dir.join(p)
            } else {
                p
            }
        };
        records.push(ClipRecord {
            audio_path: resolve(field(1)),
            video_path: resolve(field(2)),
            clip_id,
            arousal_label,
            valence_label,
        });
    }
    Ok(records)
}

pub fn load_manifest(path: &Path) -> Result<Vec<ClipRecord>, IngestError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&text, base)
}

/// Serialize records in manifest form. Paths are written as given.
pub fn manifest_to_string(records: &[ClipRecord]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(MANIFEST_HEADER).expect("in-memory write");
    for r in records {
        writer
            .write_record([
                r.clip_id.as_str(),
                &r.audio_path.to_string_lossy(),
                &r.video_path.to_string_lossy(),
                &r.arousal_label.to_string(),
                &r.valence_label.to_string(),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wav_scaling() {
        let bytes = write_wav(&[0, 16384, -16384, 32767], 8000, 1);
        let track = parse_wav(&bytes).unwrap();
        assert_eq!(track.sample_rate, 8000);
        assert_eq!(track.samples, vec![0.0, 0.5, -0.5, 32767.0 / 32768.0]);
        assert_eq!(track.duration(), 4.0 / 8000.0);
    }

    #[test]
    fn wav_stereo_is_averaged() {
        let bytes = write_wav(&[16384, -16384, 16384, 16384], 44100, 2);
        let track = parse_wav(&bytes).unwrap();
        assert_eq!(track.samples, vec![0.0, 0.5]);
    }

    #[test]
    fn wav_truncated_data_reports_offset() {
        let bytes = write_wav(&[1, 2, 3, 4], 8000, 1);
        let cut = &bytes[..bytes.len() - 3];
        match parse_wav(cut) {
            Err(IngestError::Parse { offset, .. }) => assert_eq!(offset, cut.len()),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wav_non_pcm_rejected() {
        let mut bytes = write_wav(&[1, 2], 8000, 1);
        bytes[20] = 3; // IEEE float
        assert!(matches!(parse_wav(&bytes), Err(IngestError::UnsupportedFormat(_))));
    }

    #[test]
    fn wav_empty_data() {
        let bytes = write_wav(&[], 8000, 1);
        assert!(matches!(parse_wav(&bytes), Err(IngestError::EmptyMedia)));
    }

    #[test]
    fn wav_skips_unknown_chunks_and_padding() {
        let plain = write_wav(&[100, -100], 16000, 1);
        let mut bytes = plain[..36].to_vec();
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&[1, 2, 3, 0]);
        bytes.extend_from_slice(&plain[36..]);
        let track = parse_wav(&bytes).unwrap();
        assert_eq!(track.samples.len(), 2);
    }

    #[test]
    fn wav_data_before_fmt_is_malformed() {
        let mut bytes = b"RIFF\0\0\0\0WAVE".to_vec();
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&[0, 0]);
        assert!(matches!(parse_wav(&bytes), Err(IngestError::Parse { offset: 12, .. })));
    }

    #[test]
    fn wav_bad_magic() {
        assert!(matches!(parse_wav(b"RIFX\0\0\0\0WAVE"), Err(IngestError::Parse { offset: 0, .. })));
        assert!(matches!(parse_wav(b"RIFF"), Err(IngestError::Parse { .. })));
    }

    #[test]
    fn y4m_header_echo() {
        let mut bytes = b"YUV4MPEG2 W2 H2 F25:1 C444\nFRAME\n".to_vec();
        bytes.extend_from_slice(&[128; 12]);
        let seq = parse_y4m(&bytes).unwrap();
        assert_eq!(seq.frames.len(), 1);
        assert_eq!((seq.width, seq.height), (2, 2));
        assert_eq!(seq.frame_rate, 25.0);
        assert_eq!(seq.frames[0].y, vec![128; 4]);
    }

    #[test]
    fn y4m_420_upsampled() {
        let mut bytes = b"YUV4MPEG2 W2 H2 F30000:1001 C420jpeg\nFRAME\n".to_vec();
        bytes.extend_from_slice(&[10, 20, 30, 40, 90, 200]);
        let seq = parse_y4m(&bytes).unwrap();
        assert_eq!(seq.frames[0].cb, vec![90; 4]);
        assert_eq!(seq.frames[0].cr, vec![200; 4]);
        assert!((seq.frame_rate - 29.97002997).abs() < 1e-6);
    }

    #[test]
    fn y4m_two_frames_and_default_chroma() {
        let mut bytes = b"YUV4MPEG2 W2 H2 F25:1\n".to_vec();
        for _ in 0..2 {
            bytes.extend_from_slice(b"FRAME\n");
            bytes.extend_from_slice(&[0; 6]);
        }
        assert_eq!(parse_y4m(&bytes).unwrap().frames.len(), 2);
    }

    #[test]
    fn y4m_errors() {
        assert!(matches!(parse_y4m(b"YUV4MPEG2 H2 F25:1\n"), Err(IngestError::Parse { .. })));
        assert!(matches!(
            parse_y4m(b"YUV4MPEG2 W0 H2 F25:1\nFRAME\n"),
            Err(IngestError::UnsupportedFormat(_))
        ));
        assert!(matches!(
            parse_y4m(b"YUV4MPEG2 W2 H2 F25:1 C444\nFRAME\n\x01\x02"),
            Err(IngestError::Parse { .. })
        ));
        assert!(matches!(parse_y4m(b"YUV4MPEG2 W2 H2 F25:1\n"), Err(IngestError::EmptyMedia)));
        assert!(matches!(
            parse_y4m(b"YUV4MPEG2 W2 H2 F25:1 C422\n"),
            Err(IngestError::UnsupportedFormat(_))
        ));
        assert!(matches!(parse_y4m(b"MPEG"), Err(IngestError::Parse { offset: 0, .. })));
    }

    #[test]
    fn y4m_length_accounting() {
        let seq = FrameSequence {
            frames: vec![Frame::uniform(5, 3, 7, 100, 150); 3],
            width: 5,
            height: 3,
            frame_rate: 10.0,
        };
        let bytes = write_y4m(&seq, Chroma::C420, 10, 1);
        let header_len = bytes.iter().position(|&b| b == b'\n').unwrap() + 1;
        let payload = 15 + 2 * (3 * 2);
        assert_eq!(bytes.len(), header_len + 3 * (b"FRAME\n".len() + payload));
        assert_eq!(parse_y4m(&bytes).unwrap(), seq);
    }

    #[test]
    fn manifest_rows() {
        let text = "clip_id,audio_path,video_path,arousal,valence\nc1,a.wav,v.y4m,1.333,-0.667\n";
        let recs = parse_manifest(text, Path::new("/data")).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].arousal_label, 1.333);
        assert_eq!(recs[0].valence_label, -0.667);
        assert_eq!(recs[0].audio_path, PathBuf::from("/data/a.wav"));
    }

    #[test]
    fn manifest_crlf() {
        let text = "clip_id,audio_path,video_path,arousal,valence\r\nc1,a.wav,v.y4m,0,0\r\nc2,b.wav,w.y4m,1,-1\r\n";
        assert_eq!(parse_manifest(text, Path::new(".")).unwrap().len(), 2);
    }

    #[test]
    fn manifest_duplicate_id() {
        let text = "clip_id,audio_path,video_path,arousal,valence\nc1,a.wav,v.y4m,0,0\nc1,b.wav,w.y4m,0,0\n";
        assert!(matches!(
            parse_manifest(text, Path::new(".")),
            Err(IngestError::Manifest { row: 2, .. })
        ));
    }

    #[test]
    fn manifest_out_of_range() {
        let text = "clip_id,audio_path,video_path,arousal,valence\nc1,a.wav,v.y4m,0,0\nc2,a.wav,v.y4m,3,0\n";
        assert!(matches!(
            parse_manifest(text, Path::new(".")),
            Err(IngestError::Manifest { row: 2, .. })
        ));
    }

    #[test]
    fn manifest_bad_header() {
        let text = "id,audio,video,a,v\n";
        assert!(matches!(
            parse_manifest(text, Path::new(".")),
            Err(IngestError::Manifest { row: 0, .. })
        ));
    }

    #[test]
    fn manifest_reserialization_is_idempotent() {
        let text = "clip_id,audio_path,video_path,arousal,valence\nc1,a.wav,v.y4m,1.3333333333333333,-0.667\nc2,b b.wav,w.y4m,-2,2\n";
        let first = parse_manifest(text, Path::new("/d")).unwrap();
        let second = parse_manifest(&manifest_to_string(&first), Path::new("/elsewhere")).unwrap();
        assert_eq!(first, second);
    }
}
