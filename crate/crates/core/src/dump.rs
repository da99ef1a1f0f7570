//! `GEFD` binary field dumps.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   b"GEFD"
//! version u16            (currently 1)
//! kind    u8             0 signal, 1 spinwave, 2 Wigner (t, f), 3 Wigner (z, k_z)
//! n_axes  u8             1 for fields, 2 for Wigner maps
//! axes    n_axes × { start f64, step f64, count u64 }
//! payload fields: count × (re f64, im f64); Wigner: count1·count2 × f64, row-major
//! ```
//!
//! The payload must fill the file exactly; trailing bytes are rejected.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phasespace::{Axis, WignerDomain, WignerMap};
use crate::signals::{PulseSignal, TimeGrid};

pub const MAGIC: &[u8; 4] = b"GEFD";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpKind {
    Signal,
    Spinwave,
    WignerTimeFrequency,
    WignerPositionWavenumber,
}

impl DumpKind {
    fn code(self) -> u8 {
        match self {
            DumpKind::Signal => 0,
            DumpKind::Spinwave => 1,
            DumpKind::WignerTimeFrequency => 2,
            DumpKind::WignerPositionWavenumber => 3,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        Ok(match c {
            0 => DumpKind::Signal,
            1 => DumpKind::Spinwave,
            2 => DumpKind::WignerTimeFrequency,
            3 => DumpKind::WignerPositionWavenumber,
            other => return Err(Error::Format(format!("unknown kind {other}"))),
        })
    }

    fn n_axes(self) -> usize {
        match self {
            DumpKind::Signal | DumpKind::Spinwave => 1,
            _ => 2,
        }
    }

    pub fn is_complex(self) -> bool {
        self.n_axes() == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Complex(Vec<Complex64>),
    Real(Vec<f64>),
}

impl Payload {
    fn len(&self) -> usize {
        match self {
            Payload::Complex(v) => v.len(),
            Payload::Real(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub kind: DumpKind,
    pub axes: Vec<Axis>,
    pub payload: Payload,
}

impl FieldDump {
    fn checked(kind: DumpKind, axes: Vec<Axis>, payload: Payload) -> Result<Self> {
        if axes.len() != kind.n_axes() {
            return Err(Error::Format(format!("{kind:?} needs {} axes, got {}", kind.n_axes(), axes.len())));
        }
        if kind.is_complex() != matches!(payload, Payload::Complex(_)) {
            return Err(Error::Format(format!("{kind:?} has the wrong payload type")));
        }
        let expected = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.count));
        if expected != Some(payload.len()) {
            return Err(Error::Format(format!(
                "payload has {} values, axes describe {:?}",
                payload.len(),
                expected
            )));
        }
        Ok(FieldDump { kind, axes, payload })
    }

    pub fn from_signal(signal: &PulseSignal) -> Self {
        let g = signal.grid();
        FieldDump {
            kind: DumpKind::Signal,
            axes: vec![Axis { start: g.t_start(), step: g.dt(), count: g.len() }],
            payload: Payload::Complex(signal.amplitude().to_vec()),
        }
    }

    pub fn from_spinwave(s: &[Complex64], z_start: f64, dz: f64) -> Self {
        FieldDump {
            kind: DumpKind::Spinwave,
            axes: vec![Axis { start: z_start, step: dz, count: s.len() }],
            payload: Payload::Complex(s.to_vec()),
        }
    }

    pub fn from_wigner(map: &WignerMap) -> Self {
        let kind = match map.domain {
            WignerDomain::TimeFrequency => DumpKind::WignerTimeFrequency,
            WignerDomain::PositionWavenumber => DumpKind::WignerPositionWavenumber,
        };
        FieldDump { kind, axes: vec![map.axis1, map.axis2], payload: Payload::Real(map.values.clone()) }
    }

    /// Complex payload and its axis, for signal and spinwave dumps.
    pub fn complex(&self) -> Result<(&Axis, &[Complex64])> {
        match &self.payload {
            Payload::Complex(v) => Ok((&self.axes[0], v)),
            Payload::Real(_) => Err(Error::Format(format!("{:?} dump has no complex payload", self.kind))),
        }
    }

    pub fn to_signal(&self) -> Result<PulseSignal> {
        if self.kind != DumpKind::Signal {
            return Err(Error::Format(format!("expected a signal dump, found {:?}", self.kind)));
        }
        let (axis, values) = self.complex()?;
        PulseSignal::new(TimeGrid::new(axis.start, axis.step, axis.count)?, values.to_vec())
    }

    pub fn to_wigner(&self) -> Result<WignerMap> {
        let domain = match self.kind {
            DumpKind::WignerTimeFrequency => WignerDomain::TimeFrequency,
            DumpKind::WignerPositionWavenumber => WignerDomain::PositionWavenumber,
            other => return Err(Error::Format(format!("expected a Wigner dump, found {other:?}"))),
        };
        let Payload::Real(values) = &self.payload else {
            return Err(Error::Format("Wigner dump has a complex payload".into()));
        };
        Ok(WignerMap { domain, axis1: self.axes[0], axis2: self.axes[1], values: values.clone() })
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = Vec::with_capacity(16 + 24 * self.axes.len() + 16 * self.payload.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(self.kind.code());
        buf.push(self.axes.len() as u8);
        for a in &self.axes {
            buf.extend_from_slice(&a.start.to_le_bytes());
            buf.extend_from_slice(&a.step.to_le_bytes());
            buf.extend_from_slice(&(a.count as u64).to_le_bytes());
        }
        match &self.payload {
            Payload::Complex(v) => {
                for c in v {
                    buf.extend_from_slice(&c.re.to_le_bytes());
                    buf.extend_from_slice(&c.im.to_le_bytes());
                }
            }
            Payload::Real(v) => {
                for x in v {
                    buf.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes(cur.array()?);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let kind = DumpKind::from_code(cur.take(1)?[0])?;
        let n_axes = cur.take(1)?[0] as usize;
        if n_axes != kind.n_axes() {
            return Err(Error::Format(format!("{kind:?} needs {} axes, header says {n_axes}", kind.n_axes())));
        }
        let mut axes = Vec::with_capacity(n_axes);
        for _ in 0..n_axes {
            let start = f64::from_le_bytes(cur.array()?);
            let step = f64::from_le_bytes(cur.array()?);
            let count = usize::try_from(u64::from_le_bytes(cur.array()?))
                .map_err(|_| Error::Format("axis count overflows".into()))?;
            axes.push(Axis { start, step, count });
        }
        let count = axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.count))
            .ok_or_else(|| Error::Format("payload size overflows".into()))?;
        let width = if kind.is_complex() { 16 } else { 8 };
        let remaining = bytes.len() - cur.pos;
        if count.checked_mul(width) != Some(remaining) {
            return Err(Error::Format(format!(
                "payload is {remaining} bytes, axes describe {count} values of {width} bytes"
            )));
        }
        let payload = if kind.is_complex() {
            let mut v = Vec::with_capacity(count);
            for _ in 0..count {
                let re = f64::from_le_bytes(cur.array()?);
                let im = f64::from_le_bytes(cur.array()?);
                v.push(Complex64::new(re, im));
            }
            Payload::Complex(v)
        } else {
            let mut v = Vec::with_capacity(count);
            for _ in 0..count {
                v.push(f64::from_le_bytes(cur.array()?));
            }
            Payload::Real(v)
        };
        Self::checked(kind, axes, payload)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("unexpected end of dump".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("slice length"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signal() -> PulseSignal {
        let g = TimeGrid::new(-1.5, 0.25, 7).unwrap();
        PulseSignal::from_fn(g, |t| Complex64::new(t.sin(), -t * 1e-300))
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        FieldDump::from_signal(&signal()).write(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"GEFD");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
        assert_eq!(buf[6], 0);
        assert_eq!(buf[7], 1);
        assert_eq!(f64::from_le_bytes(buf[8..16].try_into().unwrap()), -1.5);
        assert_eq!(u64::from_le_bytes(buf[24..32].try_into().unwrap()), 7);
        assert_eq!(buf.len(), 32 + 7 * 16);
    }

    #[test]
    fn truncated_and_padded_payloads_are_rejected() {
        let mut buf = Vec::new();
        FieldDump::from_signal(&signal()).write(&mut buf).unwrap();
        assert!(matches!(FieldDump::from_bytes(&buf[..buf.len() - 1]), Err(Error::Format(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(FieldDump::from_bytes(&long), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(FieldDump::from_bytes(&bad).is_err());
        let mut kind = buf;
        kind[6] = 9;
        assert!(FieldDump::from_bytes(&kind).is_err());
    }

    #[test]
    fn wigner_keeps_domain_and_shape() {
        let map = WignerMap {
            domain: WignerDomain::PositionWavenumber,
            axis1: Axis { start: 0.0, step: 0.5, count: 2 },
            axis2: Axis { start: -1.0, step: 1.0, count: 3 },
            values: vec![1.0, -2.0, 3.5, f64::MIN_POSITIVE, 0.0, -0.0],
        };
        let mut buf = Vec::new();
        FieldDump::from_wigner(&map).write(&mut buf).unwrap();
        let back = FieldDump::from_bytes(&buf).unwrap().to_wigner().unwrap();
        assert_eq!(back.domain, map.domain);
        assert_eq!(back.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), map.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn kind_mismatch_is_reported() {
        let d = FieldDump::from_spinwave(&[Complex64::new(1.0, 0.0); 4], 0.0, 0.25);
        assert!(d.to_signal().is_err());
        assert!(d.to_wigner().is_err());
    }
}
