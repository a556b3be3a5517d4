//! Volume interchange: a JSON header next to a raw little-endian payload.
//!
//! `foo.json` holds `{"dims":[x,y,z],"spacing":[sx,sy,sz],"dtype":"u8"|"f32",
//! "order":"x-fastest","endianness":"little"}` and `foo.raw` holds exactly
//! `x*y*z` elements.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Volume;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    U8,
    F32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub dtype: Dtype,
    pub order: String,
    pub endianness: String,
}

pub trait Element: Copy {
    const DTYPE: Dtype;
    const SIZE: usize;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

impl Element for u8 {
    const DTYPE: Dtype = Dtype::U8;
    const SIZE: usize = 1;
    fn write_le(self, out: &mut Vec<u8>) {
        out.push(self);
    }
    fn read_le(bytes: &[u8]) -> Self {
        bytes[0]
    }
}

impl Element for f32 {
    const DTYPE: Dtype = Dtype::F32;
    const SIZE: usize = 4;
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]])
    }
}

/// Payload path belonging to a header path (`.json` swapped for `.raw`).
pub fn payload_path(header: &Path) -> PathBuf {
    header.with_extension("raw")
}

pub fn write_volume<T: Element>(vol: &Volume<T>, header_path: &Path) -> Result<()> {
    let header = VolumeHeader {
        dims: vol.dims(),
        spacing: vol.spacing(),
        dtype: T::DTYPE,
        order: "x-fastest".into(),
        endianness: "little".into(),
    };
    fs::write(header_path, serde_json::to_string(&header)?)?;
    let mut payload = Vec::with_capacity(vol.len() * T::SIZE);
    for &x in vol.data() {
        x.write_le(&mut payload);
    }
    fs::write(payload_path(header_path), payload)?;
    Ok(())
}

fn read_volume<T: Element>(header_path: &Path) -> Result<Volume<T>> {
    let header: VolumeHeader = serde_json::from_str(&fs::read_to_string(header_path)?)?;
    if header.dtype != T::DTYPE {
        return Err(Error::Format(format!(
            "{}: expected dtype {:?}, found {:?}",
            header_path.display(),
            T::DTYPE,
            header.dtype
        )));
    }
    if header.order != "x-fastest" || header.endianness != "little" {
        return Err(Error::Format(format!(
            "{}: unsupported layout {}/{}",
            header_path.display(),
            header.order,
            header.endianness
        )));
    }
    let bytes = fs::read(payload_path(header_path))?;
    let count = header.dims.iter().product::<usize>();
    if bytes.len() != count * T::SIZE {
        return Err(Error::Format(format!(
            "{}: payload has {} bytes, expected {}",
            header_path.display(),
            bytes.len(),
            count * T::SIZE
        )));
    }
    let data = bytes.chunks_exact(T::SIZE).map(T::read_le).collect();
    Volume::from_vec(header.dims, header.spacing, data)
        .map_err(|e| Error::Format(format!("{}: {e}", header_path.display())))
}

pub fn read_mask(header_path: &Path) -> Result<Volume<u8>> {
    let v = read_volume::<u8>(header_path)?;
    if v.data().iter().any(|&x| x > 1) {
        return Err(Error::Format(format!(
            "{}: mask holds values other than 0/1",
            header_path.display()
        )));
    }
    Ok(v)
}

pub fn read_scalar(header_path: &Path) -> Result<Volume<f32>> {
    read_volume::<f32>(header_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = Volume::mask_from_vec([2, 1, 1], [0.5, 0.5, 1.25], vec![1, 0]).unwrap();
        write_volume(&m, &path).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            r#"{"dims":[2,1,1],"spacing":[0.5,0.5,1.25],"dtype":"u8","order":"x-fastest","endianness":"little"}"#
        );
        assert_eq!(fs::read(dir.path().join("m.raw")).unwrap(), vec![1, 0]);
        assert_eq!(read_mask(&path).unwrap(), m);
    }

    #[test]
    fn f32_payload_little_endian() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.json");
        let v = Volume::from_vec([1, 1, 2], [1.0; 3], vec![1.0f32, -2.5]).unwrap();
        write_volume(&v, &path).unwrap();
        let raw = fs::read(dir.path().join("f.raw")).unwrap();
        assert_eq!(&raw[..4], &1.0f32.to_le_bytes());
        assert_eq!(read_scalar(&path).unwrap(), v);
        assert!(read_mask(&path).is_err());
    }

    #[test]
    fn truncated_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = Volume::mask_from_vec([2, 2, 1], [1.0; 3], vec![1, 0, 0, 1]).unwrap();
        write_volume(&m, &path).unwrap();
        fs::write(dir.path().join("m.raw"), [1u8, 0]).unwrap();
        assert!(matches!(read_mask(&path), Err(Error::Format(_))));
    }
}
