//! RIFF/WAVE reading and writing (mono PCM).

use std::io::{Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::SpeechBuffer;
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 16000;

pub fn read_wav(path: impl AsRef<Path>) -> Result<SpeechBuffer> {
    let reader = WavReader::open(path)?;
    decode(reader)
}

pub fn read_wav_from<R: Read>(source: R) -> Result<SpeechBuffer> {
    decode(WavReader::new(source)?)
}

fn decode<R: Read>(mut reader: WavReader<R>) -> Result<SpeechBuffer> {
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Format(format!(
            "expected mono audio, found {} channels",
            spec.channels
        )));
    }
    let samples: Vec<f64> = match spec.sample_format {
        SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()?
        }
        SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()?,
    };
    SpeechBuffer::new(samples, spec.sample_rate)
}

fn spec_for(sample_rate: u32) -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    }
}

fn to_i16(v: f64) -> i16 {
    (v.clamp(-1.0, 1.0) * 32767.0).round() as i16
}

/// Write 16-bit PCM; samples outside `[-1, 1]` are clipped.
pub fn write_wav_to<W: Write + Seek>(sink: W, buffer: &SpeechBuffer) -> Result<()> {
    let mut writer = WavWriter::new(sink, spec_for(buffer.sample_rate()))?;
    for &s in buffer.samples() {
        writer.write_sample(to_i16(s))?;
    }
    writer.finalize()?;
    Ok(())
}

pub fn write_wav(path: impl AsRef<Path>, buffer: &SpeechBuffer) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_wav_to(file, buffer)
}

/// Encode to an in-memory WAV image.
pub fn wav_bytes(buffer: &SpeechBuffer) -> Result<Vec<u8>> {
    let mut cursor = std::io::Cursor::new(Vec::new());
    write_wav_to(&mut cursor, buffer)?;
    Ok(cursor.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_quantizes_to_16_bit() {
        let buf = SpeechBuffer::new(vec![0.0, 0.5, -0.5, 1.0, -1.0, 0.25], 22050).unwrap();
        let bytes = wav_bytes(&buf).unwrap();
        assert_eq!(&bytes[..4], b"RIFF");
        assert_eq!(bytes.len(), 44 + 2 * buf.len());
        let back = read_wav_from(std::io::Cursor::new(bytes)).unwrap();
        assert_eq!(back.sample_rate(), 22050);
        for (a, b) in buf.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() <= 1.0 / 32767.0);
        }
    }

    #[test]
    fn clipping_and_truncation() {
        let buf = SpeechBuffer::new(vec![3.0, -3.0], 16000).unwrap();
        let back = read_wav_from(std::io::Cursor::new(wav_bytes(&buf).unwrap())).unwrap();
        assert!(back.samples()[0] > 0.99 && back.samples()[1] < -0.99);

        let bytes = wav_bytes(&buf).unwrap();
        assert!(read_wav_from(std::io::Cursor::new(&bytes[..20])).is_err());
    }
}
