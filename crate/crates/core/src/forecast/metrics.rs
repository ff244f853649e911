use crate::error::{Error, Result};

fn check(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            actual: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::InvalidData("metrics need at least one point".into()));
    }
    Ok(())
}

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

/// Test MSE divided by the population variance of the test targets.
pub fn smse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat)?;
    if y.len() < 2 {
        return Err(Error::InvalidData("SMSE needs at least two test points".into()));
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(mse(y, yhat)? / var)
}
