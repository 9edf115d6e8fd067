//! RIFF/WAVE reader and writer for interleaved 32-bit float PCM.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::{SampleBlock, SignalKind, TriAxisSeries};

const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Decoded channels, de-interleaved, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct WavData {
    pub rate: u32,
    pub channels: Vec<Vec<f32>>,
}

impl WavData {
    pub fn frames(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }
}

fn integer_rate(rate: f64) -> Result<u32> {
    if rate.fract() != 0.0 || !(rate >= 1.0 && rate <= u32::MAX as f64) {
        return Err(Error::Contract(format!(
            "WAV needs an integral sample rate, got {rate}"
        )));
    }
    Ok(rate as u32)
}

/// Encodes equal-length channels as a float WAV image.
pub fn encode_wav(channels: &[&[f32]], rate: u32) -> Result<Vec<u8>> {
    let n_ch = channels.len();
    if n_ch == 0 || n_ch > u16::MAX as usize {
        return Err(Error::Contract(format!("cannot write {n_ch} channels")));
    }
    let frames = channels[0].len();
    if channels.iter().any(|c| c.len() != frames) {
        return Err(Error::Contract("channels differ in length".into()));
    }
    let data_len = frames * n_ch * 4;
    if data_len + 36 > u32::MAX as usize {
        return Err(Error::Contract("recording too long for RIFF".into()));
    }
    let block_align = (n_ch * 4) as u16;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_IEEE_FLOAT.to_le_bytes());
    out.extend_from_slice(&(n_ch as u16).to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&32u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for n in 0..frames {
        for c in channels {
            out.extend_from_slice(&c[n].to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Parse {
                offset: self.pos as u64,
                message: format!(
                    "truncated: need {n} bytes for {what}, {} left",
                    self.bytes.len() - self.pos
                ),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset: offset as u64,
        message: message.into(),
    }
}

pub fn decode_wav(bytes: &[u8]) -> Result<WavData> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "RIFF tag")? != b"RIFF" {
        return Err(parse_err(0, "missing RIFF tag"));
    }
    cur.u32("RIFF size")?;
    if cur.take(4, "WAVE tag")? != b"WAVE" {
        return Err(parse_err(8, "missing WAVE tag"));
    }

    let mut format: Option<(u16, u32)> = None;
    loop {
        let chunk_at = cur.pos;
        let id = cur.take(4, "chunk id")?;
        let size = cur.u32("chunk size")? as usize;
        match id {
            b"fmt " => {
                let body_at = cur.pos;
                let body = cur.take(size, "fmt chunk")?;
                let mut f = Cursor { bytes: body, pos: 0 };
                let tag = f
                    .u16("format tag")
                    .map_err(|_| parse_err(body_at, "fmt chunk too short"))?;
                let channels = f
                    .u16("channels")
                    .map_err(|_| parse_err(body_at, "fmt chunk too short"))?;
                let rate = f.u32("rate").map_err(|_| parse_err(body_at, "fmt chunk too short"))?;
                f.take(6, "byte rate/align")
                    .map_err(|_| parse_err(body_at, "fmt chunk too short"))?;
                let bits = f.u16("bits").map_err(|_| parse_err(body_at, "fmt chunk too short"))?;
                let float = match tag {
                    FORMAT_IEEE_FLOAT => true,
                    FORMAT_EXTENSIBLE => {
                        // cbSize, valid bits, channel mask, then the sub-format GUID
                        f.take(8, "extension")
                            .map_err(|_| parse_err(body_at, "truncated extensible fmt"))?;
                        let guid = f
                            .take(2, "sub-format")
                            .map_err(|_| parse_err(body_at, "truncated extensible fmt"))?;
                        u16::from_le_bytes([guid[0], guid[1]]) == FORMAT_IEEE_FLOAT
                    }
                    _ => false,
                };
                if !float || bits != 32 {
                    return Err(parse_err(
                        body_at,
                        format!("unsupported format tag {tag} / {bits} bits; need 32-bit float"),
                    ));
                }
                if channels == 0 {
                    return Err(parse_err(body_at + 2, "zero channels"));
                }
                format = Some((channels, rate));
                if size % 2 == 1 {
                    cur.take(1, "pad byte")?;
                }
            }
            b"data" => {
                let Some((channels, rate)) = format else {
                    return Err(parse_err(chunk_at, "data chunk before fmt chunk"));
                };
                let data_at = cur.pos;
                let data = cur.take(size, "sample data")?;
                let align = channels as usize * 4;
                if !size.is_multiple_of(align) {
                    return Err(parse_err(data_at + size - size % align, "partial sample frame"));
                }
                let frames = size / align;
                let mut out = vec![Vec::with_capacity(frames); channels as usize];
                for (i, chunk) in data.chunks_exact(4).enumerate() {
                    out[i % channels as usize].push(f32::from_le_bytes(chunk.try_into().unwrap()));
                }
                return Ok(WavData { rate, channels: out });
            }
            _ => {
                cur.take(size + size % 2, "skipped chunk")?;
            }
        }
    }
}

pub fn read_wav(path: &Path) -> Result<WavData> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes)
}

pub fn write_wav(path: &Path, channels: &[&[f32]], rate: u32) -> Result<()> {
    let bytes = encode_wav(channels, rate)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&s| s as f32).collect()
}

fn to_f64(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&s| s as f64).collect()
}

/// Writes x, y, z as channels 0, 1, 2.
pub fn write_tri_wav(series: &TriAxisSeries, path: &Path) -> Result<()> {
    let [x, y, z] = series.axes().map(to_f32);
    write_wav(path, &[&x, &y, &z], integer_rate(series.rate())?)
}

/// Reads a 3-channel file as x, y, z in channel order.
pub fn read_tri_wav(path: &Path, kind: SignalKind) -> Result<TriAxisSeries> {
    let wav = read_wav(path)?;
    tri_from_lanes(&wav, [0, 1, 2], kind).map_err(|e| match e {
        Error::Contract(m) => Error::schema(path, m),
        other => other,
    })
}

/// Picks three lanes of a multichannel file as x, y, z.
pub fn tri_from_lanes(wav: &WavData, lanes: [usize; 3], kind: SignalKind) -> Result<TriAxisSeries> {
    if lanes.iter().any(|&l| l >= wav.channels.len()) {
        return Err(Error::Contract(format!(
            "lanes {lanes:?} not all present in a {}-channel file",
            wav.channels.len()
        )));
    }
    TriAxisSeries::new(
        to_f64(&wav.channels[lanes[0]]),
        to_f64(&wav.channels[lanes[1]]),
        to_f64(&wav.channels[lanes[2]]),
        wav.rate as f64,
        kind,
    )
}

pub fn write_mono_wav(block: &SampleBlock, path: &Path) -> Result<()> {
    write_wav(path, &[&to_f32(&block.samples)], integer_rate(block.rate)?)
}

/// Writes several mono lanes of equal rate into one file.
pub fn write_lanes_wav(lanes: &[&[f64]], rate: f64, path: &Path) -> Result<()> {
    let converted: Vec<Vec<f32>> = lanes.iter().map(|l| to_f32(l)).collect();
    let refs: Vec<&[f32]> = converted.iter().map(Vec::as_slice).collect();
    write_wav(path, &refs, integer_rate(rate)?)
}

pub fn read_mono_wav(path: &Path) -> Result<SampleBlock> {
    let wav = read_wav(path)?;
    if wav.channels.len() != 1 {
        return Err(Error::schema(
            path,
            format!("expected 1 channel, found {}", wav.channels.len()),
        ));
    }
    Ok(SampleBlock::new(to_f64(&wav.channels[0]), wav.rate as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tri_round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tri.wav");
        let s = TriAxisSeries::from_fn(1000, 8000.0, SignalKind::Acceleration, |n| {
            let v = n as f32 * 0.001;
            [v as f64, -(v as f64), (v * 2.0) as f64]
        });
        write_tri_wav(&s, &path).unwrap();
        let back = read_tri_wav(&path, SignalKind::Acceleration).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.x()[10], s.x()[10]);
    }

    #[test]
    fn channel_order_is_x_y_z() {
        let bytes = encode_wav(&[&[1.0], &[2.0], &[3.0]], 8000).unwrap();
        let wav = decode_wav(&bytes).unwrap();
        let tri = tri_from_lanes(&wav, [0, 1, 2], SignalKind::Acceleration).unwrap();
        assert_eq!(tri.sample(0), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn truncated_file_reports_offset() {
        let bytes = encode_wav(&[&[0.5; 100]], 8000).unwrap();
        let cut = &bytes[..bytes.len() - 10];
        match decode_wav(cut) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 44),
            other => panic!("expected parse error, got {other:?}"),
        }
        match decode_wav(&bytes[..20]) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 20),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_header_rejected() {
        let mut bytes = encode_wav(&[&[0.5; 4]], 8000).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode_wav(&bytes), Err(Error::Parse { offset: 0, .. })));
        let mut pcm = encode_wav(&[&[0.5; 4]], 8000).unwrap();
        pcm[20] = 1; // integer PCM
        assert!(matches!(decode_wav(&pcm), Err(Error::Parse { offset: 20, .. })));
    }

    #[test]
    fn unknown_chunks_are_skipped() {
        let plain = encode_wav(&[&[0.25, -0.5]], 1000).unwrap();
        let mut with_list = plain[..36].to_vec();
        with_list.extend_from_slice(b"LIST");
        with_list.extend_from_slice(&3u32.to_le_bytes());
        with_list.extend_from_slice(&[1, 2, 3, 0]);
        with_list.extend_from_slice(&plain[36..]);
        assert_eq!(decode_wav(&with_list).unwrap(), decode_wav(&plain).unwrap());
    }

    #[test]
    fn non_integral_rate_rejected() {
        let b = SampleBlock::new(vec![0.0; 4], 8000.5);
        let dir = tempfile::tempdir().unwrap();
        assert!(write_mono_wav(&b, &dir.path().join("m.wav")).is_err());
    }

    proptest! {
        #[test]
        fn float_samples_round_trip_bit_exactly(
            samples in proptest::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), 0..200),
            channels in 1usize..5,
        ) {
            let lanes: Vec<Vec<f32>> = (0..channels).map(|c| samples.iter().map(|v| v * (c as f32 + 1.0)).collect()).collect();
            let refs: Vec<&[f32]> = lanes.iter().map(Vec::as_slice).collect();
            let wav = decode_wav(&encode_wav(&refs, 8000).unwrap()).unwrap();
            prop_assert_eq!(wav.rate, 8000);
            for (a, b) in wav.channels.iter().zip(&lanes) {
                prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            }
        }
    }
}
