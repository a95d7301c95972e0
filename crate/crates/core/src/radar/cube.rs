use std::io::{Read, Write};

use num_complex::Complex64;

use super::{ChirpParams, PowerSetting, RadarFrame};
use crate::error::{Error, Result};

pub const CUBE_MAGIC: &[u8; 4] = b"RAGC";
pub const CUBE_VERSION: u16 = 1;

/// Writes a frame as a little-endian radar cube. Samples are narrowed to
/// `f32`.
pub fn write_cube<W: Write>(mut w: W, frame: &RadarFrame) -> Result<()> {
    let c = &frame.chirp;
    let mut buf = Vec::with_capacity(64 + frame.samples.len() * 8);
    buf.extend_from_slice(CUBE_MAGIC);
    buf.extend_from_slice(&CUBE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(c.samples_per_sweep as u32).to_le_bytes());
    buf.extend_from_slice(&(c.num_pulses as u32).to_le_bytes());
    for v in [
        c.carrier_freq_hz,
        c.bandwidth_hz,
        c.sweep_duration_s,
        c.pulse_repetition_interval_s,
        frame.power.db(),
        frame.noise_power_dbm,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for s in &frame.samples {
        buf.extend_from_slice(&(s.re as f32).to_le_bytes());
        buf.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_cube<R: Read>(mut r: R) -> Result<RadarFrame> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4)? != CUBE_MAGIC {
        return Err(Error::Data("not a radar cube (bad magic)".into()));
    }
    let version = u16::from_le_bytes(cur.array()?);
    if version != CUBE_VERSION {
        return Err(Error::Data(format!("unsupported cube version {version}")));
    }
    let n = u32::from_le_bytes(cur.array()?) as usize;
    let p = u32::from_le_bytes(cur.array()?) as usize;
    let mut f = [0.0f64; 6];
    for v in &mut f {
        *v = f64::from_le_bytes(cur.array()?);
    }
    let chirp = ChirpParams {
        carrier_freq_hz: f[0],
        bandwidth_hz: f[1],
        sweep_duration_s: f[2],
        pulse_repetition_interval_s: f[3],
        num_pulses: p,
        samples_per_sweep: n,
    };
    chirp
        .validate()
        .map_err(|e| Error::Data(format!("cube header: {e}")))?;
    let count = n
        .checked_mul(p)
        .ok_or_else(|| Error::Data("cube dimensions overflow".into()))?;
    if bytes.len() - cur.pos != count * 8 {
        return Err(Error::Data(format!(
            "cube payload holds {} bytes, expected {}",
            bytes.len() - cur.pos,
            count * 8
        )));
    }
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let re = f32::from_le_bytes(cur.array()?) as f64;
        let im = f32::from_le_bytes(cur.array()?) as f64;
        samples.push(Complex64::new(re, im));
    }
    Ok(RadarFrame {
        samples,
        chirp,
        power: PowerSetting(f[4]),
        noise_power_dbm: f[5],
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Data("radar cube truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar::{synth_baseband, ObjectClass, Scatterer};

    #[test]
    fn header_layout_is_fixed() {
        let chirp = ChirpParams {
            num_pulses: 4,
            samples_per_sweep: 8,
            ..ChirpParams::default()
        };
        let frame = RadarFrame::zeros(chirp, PowerSetting(12.5), -90.0);
        let mut out = Vec::new();
        write_cube(&mut out, &frame).unwrap();
        assert_eq!(&out[0..4], b"RAGC");
        assert_eq!(u16::from_le_bytes([out[4], out[5]]), 1);
        assert_eq!(u32::from_le_bytes(out[6..10].try_into().unwrap()), 8);
        assert_eq!(u32::from_le_bytes(out[10..14].try_into().unwrap()), 4);
        assert_eq!(f64::from_le_bytes(out[14..22].try_into().unwrap()), 77e9);
        assert_eq!(f64::from_le_bytes(out[46..54].try_into().unwrap()), 12.5);
        assert_eq!(out.len(), 62 + 4 * 8 * 8);
    }

    #[test]
    fn round_trip_and_truncation() {
        let chirp = ChirpParams::default();
        let s = Scatterer {
            range_m: 20.0,
            radial_velocity_mps: 1.0,
            rcs_m2: 1.0,
            class: ObjectClass::Pedestrian,
            object_id: 1,
        };
        let frame = synth_baseband(&[s], &chirp, PowerSetting(30.0), -90.0, 9).unwrap();
        let mut out = Vec::new();
        write_cube(&mut out, &frame).unwrap();
        let back = read_cube(&out[..]).unwrap();
        assert_eq!(back.chirp, chirp);
        assert_eq!(back.power, frame.power);
        for (a, b) in back.samples.iter().zip(&frame.samples) {
            assert_eq!(a.re, b.re as f32 as f64);
            assert_eq!(a.im, b.im as f32 as f64);
        }
        assert!(matches!(read_cube(&out[..out.len() - 3]), Err(Error::Data(_))));
        let mut bad = out.clone();
        bad[0] = b'X';
        assert!(matches!(read_cube(&bad[..]), Err(Error::Data(_))));
    }
}
