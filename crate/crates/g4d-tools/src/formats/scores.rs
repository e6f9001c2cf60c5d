//! Score table exports: a binary ".scores" dump and a CSV.
//!
//! Binary layout: magic "G4DS", u32 N, then per Gaussian 4 x f32:
//! spatial sum, temporal sum, gamma, combined.

use std::path::Path;

use g4d_core::ScoreTable;

use super::{push_f32, push_u32, read_file, write_atomic, ByteReader};
use crate::Result;

pub const MAGIC: &[u8; 4] = b"G4DS";

/// Per-Gaussian summary rows of a score table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRows {
    /// (spatial_sum, temporal_sum, gamma, combined) per Gaussian.
    pub rows: Vec<[f64; 4]>,
}

impl ScoreRows {
    pub fn from_table(table: &ScoreTable) -> Self {
        let rows = (0..table.len())
            .map(|i| {
                [table.spatial_sum(i), table.temporal_sum(i), table.gamma[i], table.combined[i]]
            })
            .collect();
        ScoreRows { rows }
    }

    pub fn combined(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[3]).collect()
    }
}

pub fn scores_size(n: usize) -> usize {
    8 + n * 16
}

pub fn encode_scores(rows: &ScoreRows) -> Vec<u8> {
    let mut out = Vec::with_capacity(scores_size(rows.rows.len()));
    out.extend_from_slice(MAGIC);
    push_u32(&mut out, rows.rows.len() as u32);
    for row in &rows.rows {
        for &v in row {
            push_f32(&mut out, v as f32);
        }
    }
    out
}

pub fn decode_scores(bytes: &[u8]) -> Result<ScoreRows> {
    let mut r = ByteReader::new(bytes);
    r.magic(MAGIC)?;
    let n = r.u32_le("count")? as usize;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = [0.0f64; 4];
        for v in &mut row {
            *v = r.f32_le("score")? as f64;
        }
        rows.push(row);
    }
    r.finish()?;
    Ok(ScoreRows { rows })
}

pub fn scores_csv(rows: &ScoreRows) -> String {
    let mut out = String::from("index,spatial_sum,temporal_sum,gamma,combined\n");
    for (i, row) in rows.rows.iter().enumerate() {
        out.push_str(&format!("{i},{},{},{},{}\n", row[0], row[1], row[2], row[3]));
    }
    out
}

pub fn write_scores(path: &Path, rows: &ScoreRows) -> Result<()> {
    write_atomic(path, &encode_scores(rows))
}

pub fn read_scores(path: &Path) -> Result<ScoreRows> {
    decode_scores(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_csv_header() {
        let rows = ScoreRows {
            rows: vec![[1.0, 2.0, 0.5, 1.0], [0.25, 1.5, 1.0, 0.375]],
        };
        let bytes = encode_scores(&rows);
        assert_eq!(bytes.len(), scores_size(2));
        assert_eq!(decode_scores(&bytes).unwrap(), rows);
        let csv = scores_csv(&rows);
        assert!(csv.starts_with("index,spatial_sum,temporal_sum,gamma,combined\n"));
        assert!(csv.contains("\n1,0.25,1.5,1,0.375\n"));
    }

    #[test]
    fn bad_input_is_rejected() {
        let rows = ScoreRows { rows: vec![[0.0; 4]] };
        let bytes = encode_scores(&rows);
        assert!(decode_scores(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[2] = b'?';
        assert!(decode_scores(&bad).is_err());
    }
}
