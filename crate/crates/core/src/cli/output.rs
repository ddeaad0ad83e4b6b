//! CSV writers. Floats are written with 17 significant digits so reruns are
//! byte-identical and values round-trip.

use std::path::Path;

use crate::apportion::RoundingComparison;
use crate::error::Result;
use crate::model::DesignSpace;
use crate::optimizer::FrontierPoint;

pub fn fmt_full(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{:.16e}", x)
    }
}

/// Six significant digits in positional notation.
pub fn fmt_sig6(x: f64) -> String {
    if !x.is_finite() {
        return fmt_full(x);
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..=9).contains(&mag) {
        return format!("{:.5e}", x);
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{:.*}", decimals, x)
}

pub(crate) fn write_design(
    path: &Path,
    space: &DesignSpace,
    weights: &[f64],
    allocations: Option<&[usize]>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["index".to_string()];
    header.extend((1..=space.dim()).map(|k| format!("x{}", k)));
    header.push("weight".into());
    if allocations.is_some() {
        header.push("allocation".into());
    }
    w.write_record(&header)?;
    for (i, point) in space.points().iter().enumerate() {
        let mut row = vec![(i + 1).to_string()];
        row.extend(point.iter().map(|&x| fmt_full(x)));
        row.push(fmt_full(weights[i]));
        if let Some(a) = allocations {
            row.push(a[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn write_frontier(path: &Path, points: &[FrontierPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["nu", "var", "maxbias", "cmb", "loss"])?;
    for p in points {
        w.write_record([p.nu, p.var, p.maxbias, p.cmb, p.loss_value].map(fmt_full))?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn write_compare(path: &Path, rows: &[RoundingComparison]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "nu",
        "loss_continuous",
        "loss_ceil_remove",
        "loss_efficient_apportionment",
    ])?;
    for r in rows {
        w.write_record(
            [
                r.nu,
                r.loss_continuous,
                r.loss_ceil_remove,
                r.loss_efficient.unwrap_or(f64::NAN),
            ]
            .map(fmt_full),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_precision_round_trips() {
        for x in [0.1, 1.0 / 3.0, 54.017094017094, -2.5e-300, 1e300] {
            assert_eq!(fmt_full(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_full(f64::NAN), "NaN");
        assert!(fmt_full(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig6(54.017094), "54.0171");
        assert_eq!(fmt_sig6(20.0), "20.0000");
        assert_eq!(fmt_sig6(0.28125), "0.281250");
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(1.0), "1.00000");
    }
}
