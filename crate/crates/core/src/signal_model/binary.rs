//! Binary epoch container (`.miep`).
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      4 bytes  "MIEP"
//! version    u32      currently 1; readers reject anything else
//! n_trials   u32
//! n_channels u32
//! n_samples  u32      samples per channel (uniform across trials)
//! fs         f64      sampling rate in Hz
//! names      n_channels × { len: u32, UTF-8 bytes }
//! labels     n_trials × i8   (−1 = Left, 0 = Unlabeled, +1 = Right)
//! samples    n_trials × n_channels × n_samples × f32
//!            trial-major, channel-major within a trial
//! ```
//!
//! Samples are stored at `f32` precision: values already representable in
//! `f32` (everything this crate's generator and CLI produce) round-trip
//! bit-exactly. Montage coordinates and free-text provenance are *not*
//! persisted; coordinates are rebuilt from the standard table on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, WriteBytesExt};
use nalgebra::DMatrix;

use super::{DataError, Epoch, EpochSet, Label, Montage};

/// File magic, first four bytes of every epoch container.
pub const MAGIC: [u8; 4] = *b"MIEP";
/// Current (and only) format version.
pub const FORMAT_VERSION: u32 = 1;

/// Hard ceiling on total stored samples (~8 GiB of f32); guards the reader
/// against allocating on corrupt headers.
const MAX_TOTAL_SAMPLES: u64 = 1 << 31;

/// Serializes `set` into `w`.
///
/// Errors with `ShapeMismatch` if trials have ragged sample counts (the
/// format requires a uniform `n_samples`).
pub fn write_epochs<W: Write>(set: &EpochSet, w: &mut W) -> Result<(), DataError> {
    let n_trials = set.len();
    let n_channels = set.montage().len();
    let n_samples = set.epochs().first().map_or(0, Epoch::n_samples);
    for (t, e) in set.epochs().iter().enumerate() {
        if e.n_samples() != n_samples {
            return Err(DataError::ShapeMismatch {
                trial: t,
                what: "samples",
                expected: n_samples,
                got: e.n_samples(),
            });
        }
    }

    w.write_all(&MAGIC)?;
    w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    w.write_u32::<LittleEndian>(n_trials as u32)?;
    w.write_u32::<LittleEndian>(n_channels as u32)?;
    w.write_u32::<LittleEndian>(n_samples as u32)?;
    w.write_f64::<LittleEndian>(set.fs())?;
    for name in set.montage().names() {
        let bytes = name.as_bytes();
        w.write_u32::<LittleEndian>(bytes.len() as u32)?;
        w.write_all(bytes)?;
    }
    for e in set.epochs() {
        w.write_i8(e.label.to_i8())?;
    }
    for e in set.epochs() {
        for c in 0..n_channels {
            for s in 0..n_samples {
                w.write_f32::<LittleEndian>(e.data[(c, s)] as f32)?;
            }
        }
    }
    Ok(())
}

/// Deserializes a set from `r`. Truncated input is reported as
/// `MalformedHeader`, not a bare I/O error.
pub fn read_epochs<R: Read>(r: &mut R) -> Result<EpochSet, DataError> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic)?;
    if magic != MAGIC {
        return Err(DataError::MalformedHeader(format!(
            "bad magic {magic:02x?} (expected {MAGIC:02x?})"
        )));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(DataError::MalformedHeader(format!(
            "unsupported format version {version} (supported: {FORMAT_VERSION})"
        )));
    }
    let n_trials = read_u32(r)? as usize;
    let n_channels = read_u32(r)? as usize;
    let n_samples = read_u32(r)? as usize;
    let total = n_trials as u64 * n_channels as u64 * n_samples as u64;
    if total > MAX_TOTAL_SAMPLES {
        return Err(DataError::MalformedHeader(format!(
            "implausible size: {n_trials} trials x {n_channels} channels x {n_samples} samples"
        )));
    }
    let fs = read_f64(r)?;
    if !(fs.is_finite() && fs > 0.0) {
        return Err(DataError::MalformedHeader(format!("invalid sampling rate {fs}")));
    }

    let mut names = Vec::with_capacity(n_channels);
    for _ in 0..n_channels {
        let len = read_u32(r)? as usize;
        if len > 256 {
            return Err(DataError::MalformedHeader(format!(
                "channel name length {len} exceeds 256"
            )));
        }
        let mut buf = vec![0u8; len];
        read_exact(r, &mut buf)?;
        let name = String::from_utf8(buf)
            .map_err(|e| DataError::MalformedHeader(format!("channel name not UTF-8: {e}")))?;
        names.push(name);
    }

    let mut labels = Vec::with_capacity(n_trials);
    for _ in 0..n_trials {
        let mut byte = [0u8; 1];
        read_exact(r, &mut byte)?;
        labels.push(Label::from_i8(byte[0] as i8)?);
    }

    let mut epochs = Vec::with_capacity(n_trials);
    for &label in &labels {
        let mut data = DMatrix::zeros(n_channels, n_samples);
        for c in 0..n_channels {
            for s in 0..n_samples {
                data[(c, s)] = read_f32(r)? as f64;
            }
        }
        epochs.push(Epoch::new(data, fs, label));
    }

    EpochSet::new(Montage::from_names(&names), fs, epochs, "")
}

/// Writes `set` to `path` in the binary container format.
pub fn save_epochs<P: AsRef<Path>>(set: &EpochSet, path: P) -> Result<(), DataError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_epochs(set, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads a binary epoch container from `path`.
pub fn load_epochs<P: AsRef<Path>>(path: P) -> Result<EpochSet, DataError> {
    let mut r = BufReader::new(File::open(path)?);
    let set = read_epochs(&mut r)?;
    // Trailing junk would mean the writer and reader disagree on the layout.
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(set),
        _ => Err(DataError::MalformedHeader("trailing bytes after sample data".into())),
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), DataError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            DataError::MalformedHeader("truncated file".into())
        } else {
            DataError::IoFailure(e)
        }
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, DataError> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f32<R: Read>(r: &mut R) -> Result<f32, DataError> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf)?;
    Ok(f32::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, DataError> {
    let mut buf = [0u8; 8];
    read_exact(r, &mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A 1-trial, 2-sample set over the standard montage: the smallest legal
    /// non-empty file.
    fn tiny_set() -> EpochSet {
        let montage = Montage::standard_16();
        let data = DMatrix::from_fn(16, 2, |c, s| (c * 2 + s) as f64 * 0.25);
        let epochs = vec![Epoch::new(data, 256.0, Label::Right)];
        EpochSet::new(montage, 256.0, epochs, "").unwrap()
    }

    fn to_bytes(set: &EpochSet) -> Vec<u8> {
        let mut buf = Vec::new();
        write_epochs(set, &mut buf).unwrap();
        buf
    }

    #[test]
    fn smallest_legal_file_has_expected_length() {
        // Independent size derivation from the layout: fixed header, then
        // per-name length prefixes, then labels, then f32 samples.
        let set = tiny_set();
        let name_bytes: usize = set.montage().names().iter().map(|n| n.len()).sum();
        let expected = 4 + 4 + 4 + 4 + 4 + 8      // magic, version, counts, fs
            + set.montage().len() * 4 + name_bytes // name block
            + set.len()                            // label bytes
            + set.len() * 16 * 2 * 4;              // samples
        let buf = to_bytes(&set);
        assert_eq!(buf.len(), expected);
        assert_eq!(buf.len(), 261); // frozen: 28 + 104 + 1 + 128
    }

    #[test]
    fn round_trip_preserves_everything_persisted() {
        let set = tiny_set();
        let buf = to_bytes(&set);
        let loaded = read_epochs(&mut buf.as_slice()).unwrap();
        assert_eq!(loaded, set);
        // Save → load → save is byte-identical.
        assert_eq!(to_bytes(&loaded), buf);
    }

    #[test]
    fn empty_set_round_trips() {
        let set = EpochSet::new(Montage::standard_16(), 256.0, vec![], "").unwrap();
        let buf = to_bytes(&set);
        let loaded = read_epochs(&mut buf.as_slice()).unwrap();
        assert_eq!(loaded.len(), 0);
        assert_eq!(loaded.montage(), set.montage());
        assert_eq!(loaded.fs(), 256.0);
    }

    #[test]
    fn label_bytes_follow_encoding() {
        let montage = Montage::standard_16();
        let mk = |label| Epoch::new(DMatrix::zeros(16, 1), 256.0, label);
        let set = EpochSet::new(
            montage,
            256.0,
            vec![mk(Label::Left), mk(Label::Unlabeled), mk(Label::Right)],
            "",
        )
        .unwrap();
        let buf = to_bytes(&set);
        let label_offset = 28 + 104; // header + name block (see size test)
        assert_eq!(buf[label_offset] as i8, -1);
        assert_eq!(buf[label_offset + 1] as i8, 0);
        assert_eq!(buf[label_offset + 2] as i8, 1);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut buf = to_bytes(&tiny_set());
        buf[0] = b'X';
        let err = read_epochs(&mut buf.as_slice()).unwrap_err();
        assert!(matches!(err, DataError::MalformedHeader(m) if m.contains("magic")));
    }

    #[test]
    fn rejects_unknown_version() {
        let mut buf = to_bytes(&tiny_set());
        buf[4] = 2;
        let err = read_epochs(&mut buf.as_slice()).unwrap_err();
        assert!(matches!(err, DataError::MalformedHeader(m) if m.contains("version")));
    }

    #[test]
    fn rejects_truncation_anywhere() {
        let buf = to_bytes(&tiny_set());
        // Cutting the buffer at any prefix length must yield MalformedHeader.
        for cut in [0, 3, 7, 20, 27, 60, 132, buf.len() - 1] {
            let err = read_epochs(&mut &buf[..cut]).unwrap_err();
            assert!(
                matches!(err, DataError::MalformedHeader(_)),
                "cut at {cut} gave {err:?}"
            );
        }
    }

    #[test]
    fn rejects_invalid_label_byte() {
        let mut buf = to_bytes(&tiny_set());
        buf[28 + 104] = 5;
        let err = read_epochs(&mut buf.as_slice()).unwrap_err();
        assert!(matches!(err, DataError::MalformedHeader(m) if m.contains("label")));
    }

    #[test]
    fn rejects_implausible_dimensions() {
        let mut buf = to_bytes(&tiny_set());
        buf[8..12].copy_from_slice(&u32::MAX.to_le_bytes()); // n_trials
        let err = read_epochs(&mut buf.as_slice()).unwrap_err();
        assert!(matches!(err, DataError::MalformedHeader(m) if m.contains("implausible")));
    }

    #[test]
    fn rejects_ragged_trials_on_write() {
        let montage = Montage::standard_16();
        let epochs = vec![
            Epoch::new(DMatrix::zeros(16, 4), 256.0, Label::Left),
            Epoch::new(DMatrix::zeros(16, 5), 256.0, Label::Right),
        ];
        let set = EpochSet::new(montage, 256.0, epochs, "").unwrap();
        let mut buf = Vec::new();
        let err = write_epochs(&set, &mut buf).unwrap_err();
        assert!(matches!(err, DataError::ShapeMismatch { trial: 1, .. }));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.miep");
        let set = tiny_set();
        save_epochs(&set, &path).unwrap();
        let loaded = load_epochs(&path).unwrap();
        assert_eq!(loaded, set);
    }

    #[test]
    fn rejects_trailing_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.miep");
        let mut buf = to_bytes(&tiny_set());
        buf.push(0xAB);
        std::fs::write(&path, &buf).unwrap();
        let err = load_epochs(&path).unwrap_err();
        assert!(matches!(err, DataError::MalformedHeader(m) if m.contains("trailing")));
    }
}
