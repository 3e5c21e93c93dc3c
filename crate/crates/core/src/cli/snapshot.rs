//! Binary field snapshots.
//!
//! Little-endian layout: magic `SNS2`, format version `u32`, `lmax` `u32`,
//! spectrum flag `u8`, time `f64`, then `v` and `z` as `(re, im)` `f64`
//! pairs for every `(l, m)` with `0 ≤ m ≤ l ≤ lmax`, l-major. The `l = 0`
//! slot is always written as zero.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::harmonics::{FieldKind, SpectralField};
use crate::operators::Spectrum;
use crate::solver::SimState;

pub const MAGIC: &[u8; 4] = b"SNS2";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub spectrum: Spectrum,
    pub v: SpectralField,
    pub z: SpectralField,
}

impl Snapshot {
    pub fn of(state: &SimState, spectrum: Spectrum) -> Self {
        Self {
            t: state.t,
            spectrum,
            v: state.v.clone(),
            z: state.ou.z.clone(),
        }
    }

    pub fn lmax(&self) -> usize {
        self.v.lmax()
    }
}

fn put_field<W: Write>(out: &mut W, f: &SpectralField) -> Result<()> {
    for l in 0..=f.lmax() {
        for m in 0..=l {
            let c = if l == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                f.get(l, m)
            };
            out.write_all(&c.re.to_le_bytes())?;
            out.write_all(&c.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_snapshot<W: Write>(snap: &Snapshot, mut out: W) -> Result<()> {
    if snap.v.lmax() != snap.z.lmax() {
        return Err(Error::Shape("snapshot fields differ in lmax".into()));
    }
    let lmax =
        u32::try_from(snap.lmax()).map_err(|_| Error::Snapshot("lmax exceeds u32".into()))?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&lmax.to_le_bytes())?;
    out.write_all(&[snap.spectrum.as_flag()])?;
    out.write_all(&snap.t.to_le_bytes())?;
    put_field(&mut out, &snap.v)?;
    put_field(&mut out, &snap.z)?;
    Ok(())
}

fn take<const N: usize, R: Read>(inp: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    inp.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Snapshot("truncated snapshot".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

fn get_field<R: Read>(inp: &mut R, lmax: usize) -> Result<SpectralField> {
    let mut f = SpectralField::zeros(lmax, FieldKind::Stream);
    for l in 0..=lmax {
        for m in 0..=l {
            let re = f64::from_le_bytes(take(inp)?);
            let im = f64::from_le_bytes(take(inp)?);
            if l > 0 {
                f.set(l, m, Complex64::new(re, im))?;
            }
        }
    }
    Ok(f)
}

pub fn read_snapshot<R: Read>(mut inp: R) -> Result<Snapshot> {
    if &take::<4, _>(&mut inp)? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(&mut inp)?);
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let lmax = u32::from_le_bytes(take(&mut inp)?) as usize;
    if lmax == 0 {
        return Err(Error::Snapshot("lmax must be at least 1".into()));
    }
    let [flag] = take::<1, _>(&mut inp)?;
    let spectrum = Spectrum::from_flag(flag)
        .ok_or_else(|| Error::Snapshot(format!("unknown spectrum flag {flag}")))?;
    let t = f64::from_le_bytes(take(&mut inp)?);
    let v = get_field(&mut inp, lmax)?;
    let z = get_field(&mut inp, lmax)?;
    let mut rest = [0u8; 1];
    if inp.read(&mut rest)? != 0 {
        return Err(Error::Snapshot("trailing bytes after snapshot".into()));
    }
    Ok(Snapshot { t, spectrum, v, z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(lmax: usize, vals: &[f64]) -> SpectralField {
        let mut f = SpectralField::zeros(lmax, FieldKind::Stream);
        for (i, c) in f.coeffs_mut().iter_mut().enumerate() {
            *c = Complex64::new(vals[(2 * i) % vals.len()], vals[(2 * i + 1) % vals.len()]);
        }
        f
    }

    #[test]
    fn layout_is_fixed() {
        let snap = Snapshot {
            t: 0.5,
            spectrum: Spectrum::RicciShifted,
            v: field(1, &[1.0, 2.0]),
            z: field(1, &[3.0, 4.0]),
        };
        let mut buf = Vec::new();
        write_snapshot(&snap, &mut buf).unwrap();
        // header 4+4+4+1+8, then 2 fields × 3 slots × 16 bytes
        assert_eq!(buf.len(), 21 + 96);
        assert_eq!(&buf[..4], b"SNS2");
        assert_eq!(buf[12], 1);
        assert_eq!(f64::from_le_bytes(buf[13..21].try_into().unwrap()), 0.5);
        // l = 0 slot of v is zero, then (1,0) = 1 + 2i.
        assert_eq!(&buf[21..37], &[0u8; 16]);
        assert_eq!(f64::from_le_bytes(buf[37..45].try_into().unwrap()), 1.0);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let snap = Snapshot {
            t: 1.0,
            spectrum: Spectrum::Paper,
            v: field(2, &[1.0]),
            z: field(2, &[2.0]),
        };
        let mut buf = Vec::new();
        write_snapshot(&snap, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_snapshot(&bad[..]), Err(Error::Snapshot(_))));
        assert!(matches!(
            read_snapshot(&buf[..buf.len() - 1]),
            Err(Error::Snapshot(_))
        ));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(read_snapshot(&long[..]), Err(Error::Snapshot(_))));
        let mut flag = buf;
        flag[12] = 9;
        assert!(matches!(read_snapshot(&flag[..]), Err(Error::Snapshot(_))));
    }

    proptest! {
        #[test]
        fn round_trip_is_bitwise(
            lmax in 1usize..10,
            t in -1e6f64..1e6,
            vals in proptest::collection::vec(proptest::num::f64::ANY, 2..40),
            ricci in any::<bool>(),
        ) {
            let snap = Snapshot {
                t,
                spectrum: if ricci { Spectrum::RicciShifted } else { Spectrum::Paper },
                v: field(lmax, &vals),
                z: field(lmax, &vals[1..]),
            };
            let mut buf = Vec::new();
            write_snapshot(&snap, &mut buf).unwrap();
            let back = read_snapshot(&buf[..]).unwrap();
            let bits = |f: &SpectralField| f.coeffs().iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]).collect::<Vec<_>>();
            prop_assert_eq!(back.t.to_bits(), t.to_bits());
            prop_assert_eq!(back.spectrum, snap.spectrum);
            prop_assert_eq!(bits(&back.v), bits(&snap.v));
            prop_assert_eq!(bits(&back.z), bits(&snap.z));
        }
    }
}
