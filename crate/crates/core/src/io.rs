//! Project-wide file formats: operator JSON, Choi JSON, protocol JSON, and
//! the CSV report layout.
//!
//! Operator JSON is row-major with A-major subsystem ordering:
//! {"dims": [dA, dB, ...], "re": [[...]], "im": [[...]]}. Choi JSON adds
//! "in_dims"/"out_dims"; the operator lives on in (x) out.

use crate::channels::{ChoiOperator, ThermoOperation};
use crate::error::{Error, Result};
use crate::linalg::{C64, CMatrix, HermitianOperator, SubsystemDims};
use crate::protocols::Protocol;
use crate::states::DensityOperator;
use crate::workcost::AepPoint;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorJson {
    pub dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl OperatorJson {
    pub fn from_operator(op: &HermitianOperator, dims: &SubsystemDims) -> Self {
        let d = op.dim();
        let mut re = vec![vec![0.0; d]; d];
        let mut im = vec![vec![0.0; d]; d];
        for r in 0..d {
            for c in 0..d {
                re[r][c] = op.matrix()[(r, c)].re;
                im[r][c] = op.matrix()[(r, c)].im;
            }
        }
        Self {
            dims: dims.dims().to_vec(),
            re,
            im,
        }
    }

    pub fn to_operator(&self) -> Result<(HermitianOperator, SubsystemDims)> {
        let dims = SubsystemDims::new(&self.dims)?;
        let d = dims.product();
        if self.re.len() != d
            || self.im.len() != d
            || self.re.iter().any(|row| row.len() != d)
            || self.im.iter().any(|row| row.len() != d)
        {
            return Err(Error::DimMismatch(format!(
                "matrix shape does not match dims product {d}"
            )));
        }
        let mut m = CMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                m[(r, c)] = C64::new(self.re[r][c], self.im[r][c]);
            }
        }
        Ok((HermitianOperator::with_tol(m, 1e-8)?, dims))
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        let (op, dims) = self.to_operator()?;
        DensityOperator::with_tols(op, dims, 1e-7, 1e-7)
    }
}

pub fn density_to_json(rho: &DensityOperator) -> OperatorJson {
    OperatorJson::from_operator(rho.op(), rho.dims())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChoiJson {
    pub dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    pub in_dims: Vec<usize>,
    pub out_dims: Vec<usize>,
}

impl ChoiJson {
    pub fn from_choi(ch: &ChoiOperator) -> Self {
        let joint = SubsystemDims::new(&[ch.d_in(), ch.d_out()]).expect("positive dims");
        let op = OperatorJson::from_operator(ch.op(), &joint);
        Self {
            dims: op.dims,
            re: op.re,
            im: op.im,
            in_dims: ch.in_dims().dims().to_vec(),
            out_dims: ch.out_dims().dims().to_vec(),
        }
    }

    pub fn to_choi(&self) -> Result<ChoiOperator> {
        let op = OperatorJson {
            dims: self.dims.clone(),
            re: self.re.clone(),
            im: self.im.clone(),
        };
        let (op, _) = op.to_operator()?;
        ChoiOperator::new(
            op,
            SubsystemDims::new(&self.in_dims)?,
            SubsystemDims::new(&self.out_dims)?,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolJson {
    pub channel: ChoiJson,
    pub gamma_in: OperatorJson,
    pub gamma_out: OperatorJson,
    pub d_battery_in: usize,
    pub d_battery_out: usize,
    pub ideal_work_bits: f64,
    pub integer_work_bits: f64,
    pub target_error: f64,
    pub sys_in_dims: Vec<usize>,
    pub sys_out_dims: Vec<usize>,
}

impl ProtocolJson {
    pub fn from_protocol(p: &Protocol) -> Self {
        Self {
            channel: ChoiJson::from_choi(&p.operation.channel),
            gamma_in: density_to_json(&p.operation.gamma_in),
            gamma_out: density_to_json(&p.operation.gamma_out),
            d_battery_in: p.d_battery_in,
            d_battery_out: p.d_battery_out,
            ideal_work_bits: p.ideal_work_bits,
            integer_work_bits: p.integer_work_bits,
            target_error: p.target_error,
            sys_in_dims: p.sys_in_dims().dims().to_vec(),
            sys_out_dims: p.sys_out_dims().dims().to_vec(),
        }
    }

    /// Rebuilds the channel-and-ledger view of a serialized protocol; the
    /// composite provenance (if any) is not retained across serialization.
    pub fn to_operation(&self) -> Result<ThermoOperation> {
        ThermoOperation::new(
            self.channel.to_choi()?,
            self.gamma_in.to_density()?,
            self.gamma_out.to_density()?,
        )
    }
}

/// CSV for AEP reports: header mandated, '.' decimal separator.
pub fn aep_points_to_csv(points: &[AepPoint]) -> String {
    let mut out = String::from("n,eps,value_bits,lower_bound,upper_bound\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.n, p.eps, p.value_bits, p.lower_bound, p.upper_bound
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::thermalization_channel;
    use crate::states::random_state;

    #[test]
    fn operator_roundtrip_is_bitwise() {
        let dims = SubsystemDims::new(&[2, 3]).unwrap();
        let rho = random_state(&dims, 4, 77).unwrap();
        let json = density_to_json(&rho);
        let text = serde_json::to_string(&json).unwrap();
        let back: OperatorJson = serde_json::from_str(&text).unwrap();
        let rho2 = back.to_density().unwrap();
        assert_eq!(rho.op().matrix(), rho2.op().matrix());
        assert_eq!(rho.dims().dims(), rho2.dims().dims());
    }

    #[test]
    fn choi_roundtrip() {
        let gamma = random_state(&SubsystemDims::new(&[2]).unwrap(), 2, 5).unwrap();
        let ch = thermalization_channel(&gamma);
        let json = ChoiJson::from_choi(&ch);
        let text = serde_json::to_string(&json).unwrap();
        let back: ChoiJson = serde_json::from_str(&text).unwrap();
        let ch2 = back.to_choi().unwrap();
        assert_eq!(ch.op().matrix(), ch2.op().matrix());
        assert_eq!(ch.in_dims().dims(), ch2.in_dims().dims());
    }

    #[test]
    fn csv_has_header_and_dot_decimals() {
        let pts = vec![AepPoint {
            n: 1,
            eps: 0.1,
            value_bits: 0.5,
            lower_bound: 0.25,
            upper_bound: 8.125,
        }];
        let csv = aep_points_to_csv(&pts);
        assert!(csv.starts_with("n,eps,value_bits,lower_bound,upper_bound\n"));
        assert!(csv.contains("1,0.1,0.5,0.25,8.125"));
    }
}
