//! ICA model as JSON with row-major nested arrays.

use std::path::Path;

use nse_core::ica::IcaModel;
use nse_core::nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcaFile {
    pub version: u32,
    pub whitening: Vec<Vec<f64>>,
    pub unmixing: Vec<Vec<f64>>,
    pub mixing_pseudo_inverse: Vec<Vec<f64>>,
    pub channel_means: Vec<f64>,
    pub iterations: usize,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(name: &'static str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n_cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n_cols) {
        return Err(nse_core::Error::Shape(format!("{name} has ragged rows")).into());
    }
    Ok(DMatrix::from_row_slice(rows.len(), n_cols, &rows.concat()))
}

impl From<&IcaModel> for IcaFile {
    fn from(m: &IcaModel) -> Self {
        Self {
            version: 1,
            whitening: rows(&m.whitening),
            unmixing: rows(&m.unmixing),
            mixing_pseudo_inverse: rows(&m.mixing_pseudo_inverse),
            channel_means: m.channel_means.clone(),
            iterations: m.iterations,
        }
    }
}

impl TryFrom<IcaFile> for IcaModel {
    type Error = crate::error::Error;

    fn try_from(f: IcaFile) -> Result<Self> {
        let model = IcaModel {
            whitening: matrix("whitening", &f.whitening)?,
            unmixing: matrix("unmixing", &f.unmixing)?,
            mixing_pseudo_inverse: matrix("mixing_pseudo_inverse", &f.mixing_pseudo_inverse)?,
            channel_means: f.channel_means,
            iterations: f.iterations,
        };
        let (k, n) = (model.unmixing.nrows(), model.whitening.ncols());
        if model.whitening.nrows() != k
            || model.unmixing.ncols() != k
            || model.mixing_pseudo_inverse.shape() != (n, k)
            || model.channel_means.len() != n
        {
            return Err(nse_core::Error::Shape("inconsistent ICA matrix shapes".into()).into());
        }
        Ok(model)
    }
}

pub fn read(path: &Path) -> Result<IcaModel> {
    read_json::<IcaFile>(path)?.try_into()
}

pub fn write(path: &Path, model: &IcaModel) -> Result<()> {
    write_json(path, &IcaFile::from(model))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let model = IcaModel {
            whitening: DMatrix::from_row_slice(2, 3, &[0.1, 0.2, 1.0 / 3.0, -4e-17, 5.5, 6.0]),
            unmixing: DMatrix::from_row_slice(2, 2, &[0.6, 0.8, -0.8, 0.6]),
            mixing_pseudo_inverse: DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, std::f64::consts::PI]),
            channel_means: vec![0.0, -1.5, 2.0 / 7.0],
            iterations: 17,
        };
        let text = serde_json::to_string(&IcaFile::from(&model)).unwrap();
        assert!(text.contains("[0.1,0.2,0.3333333333333333]"));
        let back: IcaModel = serde_json::from_str::<IcaFile>(&text).unwrap().try_into().unwrap();
        assert_eq!(back, model);
    }
}
