//! JSON encodings shared by every document the crate reads or writes.
//!
//! Complex numbers are `[re, im]` pairs; vectors are arrays of pairs; matrices
//! are row-major arrays of rows.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

pub(crate) type Pair = [f64; 2];

pub(crate) fn to_pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

pub(crate) fn from_pair(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub mod cvec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &DVector<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| to_pair(*z)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<Complex64>, D::Error> {
        let pairs = Vec::<Pair>::deserialize(d)?;
        Ok(DVector::from_iterator(
            pairs.len(),
            pairs.into_iter().map(from_pair),
        ))
    }
}

pub mod cmat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Pair>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| to_pair(m[(i, j)])).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<Complex64>, D::Error> {
        let rows = Vec::<Vec<Pair>>::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_row_iterator(
            n,
            m,
            rows.into_iter().flatten().map(from_pair),
        ))
    }
}

pub mod cmat_list {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[DMatrix<Complex64>], s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct W<'a>(#[serde(with = "super::cmat")] &'a DMatrix<Complex64>);
        ms.iter().map(W).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<Complex64>>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "super::cmat")] DMatrix<Complex64>);
        Ok(Vec::<W>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

pub mod cvec_list {
    use super::*;

    pub fn serialize<S: Serializer>(vs: &[DVector<Complex64>], s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct W<'a>(#[serde(with = "super::cvec")] &'a DVector<Complex64>);
        vs.iter().map(W).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DVector<Complex64>>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "super::cvec")] DVector<Complex64>);
        Ok(Vec::<W>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}
