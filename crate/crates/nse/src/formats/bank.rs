//! Spatial filter bank as JSON with row-major filters.

use std::path::Path;

use nse_core::nalgebra::DMatrix;
use nse_core::signal::Domain;
use nse_core::spatial::SpatialFilterBank;
use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankFile {
    pub version: u32,
    pub n_channels: usize,
    pub class_ids: Vec<u32>,
    pub patterns_per_class: usize,
    pub eigenvalues: Vec<f64>,
    pub filters: Vec<Vec<f64>>,
    pub fitted_domain: String,
}

impl From<&SpatialFilterBank> for BankFile {
    fn from(bank: &SpatialFilterBank) -> Self {
        Self {
            version: 1,
            n_channels: bank.n_channels(),
            class_ids: bank.class_ids().to_vec(),
            patterns_per_class: bank.patterns_per_class(),
            eigenvalues: bank.eigenvalues().to_vec(),
            filters: (0..bank.n_filters()).map(|r| bank.filter(r)).collect(),
            fitted_domain: bank.fitted_domain().as_str().into(),
        }
    }
}

impl TryFrom<BankFile> for SpatialFilterBank {
    type Error = Error;

    fn try_from(f: BankFile) -> Result<Self> {
        if f.version != 1 {
            return Err(nse_core::Error::invalid("version", format!("unsupported bank version {}", f.version)).into());
        }
        if let Some(row) = f.filters.iter().position(|r| r.len() != f.n_channels) {
            return Err(nse_core::Error::Shape(format!("filter {row} does not have {} coefficients", f.n_channels)).into());
        }
        let domain: Domain = f
            .fitted_domain
            .parse()
            .map_err(|_| nse_core::Error::invalid("fitted_domain", format!("unknown domain {:?}", f.fitted_domain)))?;
        let flat: Vec<f64> = f.filters.concat();
        let filters = DMatrix::from_row_slice(f.filters.len(), f.n_channels, &flat);
        Ok(SpatialFilterBank::new(filters, f.class_ids, f.eigenvalues, f.patterns_per_class, domain)?)
    }
}

pub fn read(path: &Path) -> Result<SpatialFilterBank> {
    read_json::<BankFile>(path)?.try_into()
}

pub fn write(path: &Path, bank: &SpatialFilterBank) -> Result<()> {
    write_json(path, &BankFile::from(bank))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let filters = DMatrix::from_row_slice(2, 3, &[0.1, -2.0 / 3.0, 1e-300, std::f64::consts::E, 0.0, -7.5]);
        let bank = SpatialFilterBank::new(filters, vec![4, 9], vec![0.9, 1.0 / 3.0], 1, Domain::Imagined).unwrap();
        let text = serde_json::to_string(&BankFile::from(&bank)).unwrap();
        let back: SpatialFilterBank = serde_json::from_str::<BankFile>(&text).unwrap().try_into().unwrap();
        assert_eq!(back, bank);
    }

    #[test]
    fn ragged_rows_rejected() {
        let f = BankFile {
            version: 1,
            n_channels: 2,
            class_ids: vec![0],
            patterns_per_class: 1,
            eigenvalues: vec![0.5],
            filters: vec![vec![1.0]],
            fitted_domain: "imagined".into(),
        };
        assert!(SpatialFilterBank::try_from(f).is_err());
    }
}
