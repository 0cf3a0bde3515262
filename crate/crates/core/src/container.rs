//! The `.lttk` trajectory container.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic "LTTK" | version u16 = 1 | reserved u16 = 0 | record_count u32
//! per record:
//!   problem_id u64 | sample_id u32 | answer_id u32 (0xFFFFFFFF = none)
//!   label u8 (0, 1, 255 = unlabeled) | T u32 | L u32 | d u32
//!   T*L*d f32 values, ordered h[t][l][k]
//! ```

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::trajectory::{Label, LabeledSample, LatentThought, Trajectory, TrajectorySet};

pub const MAGIC: [u8; 4] = *b"LTTK";
pub const VERSION: u16 = 1;
pub const NO_ANSWER: u32 = u32::MAX;

const HEADER_LEN: usize = 12;
#[cfg(test)]
const RECORD_HEADER_LEN: usize = 8 + 4 + 4 + 1 + 4 + 4 + 4;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("bad magic {0:?}, expected \"LTTK\"")]
    BadMagic([u8; 4]),
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated payload: {0}")]
    Truncated(String),
    #[error("record {record}: declared dims {steps}x{tokens}x{dim} inconsistent with the {remaining} bytes remaining")]
    InconsistentDims {
        record: usize,
        steps: u32,
        tokens: u32,
        dim: u32,
        remaining: usize,
    },
    #[error("record {record}: invalid label byte {byte}")]
    InvalidLabel { record: usize, byte: u8 },
    #[error("set is not writable: {0}")]
    InvalidSet(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes `set` and returns the number of bytes written.
pub fn write_container<W: Write>(set: &TrajectorySet, mut sink: W) -> Result<u64, ContainerError> {
    let report = set.validate();
    if !report.is_valid() {
        return Err(ContainerError::InvalidSet(report.to_string()));
    }
    let count = u32::try_from(set.len())
        .map_err(|_| ContainerError::InvalidSet("more than u32::MAX records".into()))?;
    let mut written = 0u64;
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&0u16.to_le_bytes());
    header.extend_from_slice(&count.to_le_bytes());
    sink.write_all(&header)?;
    written += header.len() as u64;

    let mut buf = Vec::new();
    for sample in &set.samples {
        let traj = &sample.trajectory;
        let (tokens, dim) = traj.shape().expect("validated");
        buf.clear();
        buf.extend_from_slice(&traj.problem_id.to_le_bytes());
        buf.extend_from_slice(&traj.sample_id.to_le_bytes());
        buf.extend_from_slice(&traj.answer_id.unwrap_or(NO_ANSWER).to_le_bytes());
        buf.push(sample.label.to_byte());
        for n in [traj.steps(), tokens, dim] {
            let n = u32::try_from(n)
                .map_err(|_| ContainerError::InvalidSet("dimension exceeds u32".into()))?;
            buf.extend_from_slice(&n.to_le_bytes());
        }
        for thought in traj.thoughts() {
            for &v in thought.values() {
                buf.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        sink.write_all(&buf)?;
        written += buf.len() as u64;
    }
    sink.flush()?;
    Ok(written)
}

/// Reads a whole container. Values are widened from f32 to f64 exactly.
///
/// Non-finite values are loaded as-is; run [`TrajectorySet::validate`] on
/// the result to detect them.
pub fn read_container<R: Read>(mut source: R) -> Result<TrajectorySet, ContainerError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn decode(bytes: &[u8]) -> Result<TrajectorySet, ContainerError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic: [u8; 4] = cur.take(4, "header")?.try_into().unwrap();
    if magic != MAGIC {
        return Err(ContainerError::BadMagic(magic));
    }
    let version = cur.u16("header")?;
    if version != VERSION {
        return Err(ContainerError::UnsupportedVersion(version));
    }
    let _reserved = cur.u16("header")?;
    let count = cur.u32("header")? as usize;

    let mut samples = Vec::with_capacity(count.min(1 << 16));
    for record in 0..count {
        let what = format!("record {record} header");
        let problem_id = cur.u64(&what)?;
        let sample_id = cur.u32(&what)?;
        let answer_id = match cur.u32(&what)? {
            NO_ANSWER => None,
            a => Some(a),
        };
        let byte = cur.take(1, &what)?[0];
        let label = Label::from_byte(byte).ok_or(ContainerError::InvalidLabel { record, byte })?;
        let steps = cur.u32(&what)?;
        let tokens = cur.u32(&what)?;
        let dim = cur.u32(&what)?;

        let remaining = bytes.len() - cur.pos;
        let inconsistent = || ContainerError::InconsistentDims {
            record,
            steps,
            tokens,
            dim,
            remaining,
        };
        if steps == 0 || tokens == 0 || dim == 0 {
            return Err(inconsistent());
        }
        let per_step = (tokens as usize)
            .checked_mul(dim as usize)
            .ok_or_else(inconsistent)?;
        let payload = per_step
            .checked_mul(steps as usize)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(inconsistent)?;
        if payload > remaining {
            return Err(ContainerError::Truncated(format!(
                "record {record} needs {payload} value bytes, {remaining} remain"
            )));
        }
        let data = cur.take(payload, "values")?;
        let mut thoughts = Vec::with_capacity(steps as usize);
        for chunk in data.chunks_exact(per_step * 4) {
            let values = chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect();
            thoughts.push(
                LatentThought::new_unchecked(tokens as usize, dim as usize, values)
                    .expect("shape checked above"),
            );
        }
        samples.push(LabeledSample::new(
            Trajectory::new_unchecked(problem_id, sample_id, answer_id, thoughts),
            label,
        ));
    }
    if cur.pos != bytes.len() {
        let last = count.saturating_sub(1);
        let (steps, tokens, dim) = samples.last().map_or((0, 0, 0), |s: &LabeledSample| {
            let (l, d) = s.trajectory.shape().unwrap_or((0, 0));
            (s.trajectory.steps() as u32, l as u32, d as u32)
        });
        return Err(ContainerError::InconsistentDims {
            record: last,
            steps,
            tokens,
            dim,
            remaining: bytes.len() - cur.pos,
        });
    }
    Ok(TrajectorySet::new(samples))
}

pub fn encode(set: &TrajectorySet) -> Result<Vec<u8>, ContainerError> {
    let mut out = Vec::new();
    write_container(set, &mut out)?;
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ContainerError> {
        if self.bytes.len() - self.pos < n {
            return Err(ContainerError::Truncated(format!(
                "{what}: needed {n} bytes at offset {}, {} remain",
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16, ContainerError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, ContainerError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, ContainerError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_set() -> TrajectorySet {
        let mk = |pid, sid, ans, label, steps: usize, base: f64| {
            let thoughts = (0..steps)
                .map(|t| {
                    let vals = (0..6)
                        .map(|i| base + t as f64 * 0.5 + i as f64 * 0.25)
                        .collect();
                    LatentThought::new(2, 3, vals).unwrap()
                })
                .collect();
            LabeledSample::new(Trajectory::new(pid, sid, ans, thoughts).unwrap(), label)
        };
        TrajectorySet::new(vec![
            mk(7, 0, Some(3), Label::Correct, 2, 1.0),
            mk(7, 1, None, Label::Unlabeled, 3, -2.0),
            mk(8, 0, Some(0), Label::Incorrect, 1, 0.0),
        ])
    }

    #[test]
    fn roundtrip() {
        let set = small_set();
        let bytes = encode(&set).unwrap();
        assert_eq!(decode(&bytes).unwrap(), set);
    }

    #[test]
    fn byte_count_matches_layout() {
        let set = small_set();
        let mut out = Vec::new();
        let n = write_container(&set, &mut out).unwrap();
        assert_eq!(n as usize, out.len());
        let values: usize = set.iter().map(|s| s.trajectory.steps() * 6).sum();
        assert_eq!(out.len(), HEADER_LEN + 3 * RECORD_HEADER_LEN + 4 * values);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode(&small_set()).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode(&bytes), Err(ContainerError::BadMagic(_))));
    }

    #[test]
    fn unsupported_version() {
        let mut bytes = encode(&small_set()).unwrap();
        bytes[4..6].copy_from_slice(&2u16.to_le_bytes());
        assert!(matches!(
            decode(&bytes),
            Err(ContainerError::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn truncated_mid_record() {
        let bytes = encode(&small_set()).unwrap();
        for cut in [3, 11, HEADER_LEN + 5, bytes.len() - 1, bytes.len() - 10] {
            assert!(
                matches!(decode(&bytes[..cut]), Err(ContainerError::Truncated(_))),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn trailing_bytes_are_inconsistent() {
        let mut bytes = encode(&small_set()).unwrap();
        bytes.extend_from_slice(&[0; 8]);
        assert!(matches!(
            decode(&bytes),
            Err(ContainerError::InconsistentDims { record: 2, .. })
        ));
    }

    #[test]
    fn deflated_dims_are_inconsistent() {
        let mut set = small_set();
        set.samples.truncate(1);
        let mut bytes = encode(&set).unwrap();
        // T of the only record: 2 -> 1 leaves one step of values unread
        let t_off = HEADER_LEN + RECORD_HEADER_LEN - 12;
        bytes[t_off..t_off + 4].copy_from_slice(&1u32.to_le_bytes());
        assert!(matches!(
            decode(&bytes),
            Err(ContainerError::InconsistentDims { record: 0, .. })
        ));
    }

    #[test]
    fn inflated_dims_run_past_the_end() {
        let mut bytes = encode(&small_set()).unwrap();
        let d_off = HEADER_LEN + RECORD_HEADER_LEN - 4;
        bytes[d_off..d_off + 4].copy_from_slice(&1_000_000u32.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(ContainerError::Truncated(_))));
    }

    #[test]
    fn zero_dims_are_inconsistent() {
        let mut bytes = encode(&small_set()).unwrap();
        let t_off = HEADER_LEN + RECORD_HEADER_LEN - 12;
        bytes[t_off..t_off + 4].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(
            decode(&bytes),
            Err(ContainerError::InconsistentDims { .. })
        ));
    }

    #[test]
    fn invalid_label_byte() {
        let mut bytes = encode(&small_set()).unwrap();
        bytes[HEADER_LEN + 16] = 7;
        assert!(matches!(
            decode(&bytes),
            Err(ContainerError::InvalidLabel { record: 0, byte: 7 })
        ));
    }

    #[test]
    fn refuses_to_write_invalid_set() {
        let t = LatentThought::new_unchecked(1, 1, vec![f64::NAN]).unwrap();
        let set = TrajectorySet::new(vec![LabeledSample::new(
            Trajectory::new(0, 0, None, vec![t]).unwrap(),
            Label::Correct,
        )]);
        assert!(matches!(encode(&set), Err(ContainerError::InvalidSet(_))));
    }

    #[test]
    fn reader_loads_nan_for_validation() {
        let mut bytes = encode(&small_set()).unwrap();
        let v0 = HEADER_LEN + RECORD_HEADER_LEN;
        bytes[v0..v0 + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        let set = decode(&bytes).unwrap();
        assert!(!set.validate().is_valid());
    }
}
