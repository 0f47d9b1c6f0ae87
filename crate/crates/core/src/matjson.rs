//! JSON layout for matrices: row-major nested arrays, complex entries as
//! `[re, im]` pairs. Use with `#[serde(with = "...")]`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

fn check_rows<T, E: serde::de::Error>(rows: &[Vec<T>]) -> Result<(usize, usize), E> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(E::custom("ragged matrix rows"));
    }
    Ok((n, m))
}

pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<Complex64>, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let (n, m) = check_rows(&rows)?;
        Ok(DMatrix::from_fn(n, m, |r, c| Complex64::new(rows[r][c][0], rows[r][c][1])))
    }
}

pub mod real {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let (n, m) = check_rows(&rows)?;
        Ok(DMatrix::from_fn(n, m, |r, c| rows[r][c]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Wrap {
        #[serde(with = "complex")]
        c: DMatrix<Complex64>,
        #[serde(with = "real")]
        r: DMatrix<f64>,
    }

    #[test]
    fn row_major_pairs() {
        let w = Wrap {
            c: DMatrix::from_row_slice(1, 2, &[Complex64::new(1.0, 2.0), Complex64::new(3.0, -4.0)]),
            r: DMatrix::from_row_slice(2, 1, &[0.5, -0.25]),
        };
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, r#"{"c":[[[1.0,2.0],[3.0,-4.0]]],"r":[[0.5],[-0.25]]}"#);
        let back: Wrap = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn ragged_rejected() {
        let bad = r#"{"c":[[[1,2]],[]],"r":[]}"#;
        assert!(serde_json::from_str::<Wrap>(bad).is_err());
    }
}
