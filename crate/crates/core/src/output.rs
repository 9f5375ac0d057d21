//! CSV and JSON emission. Floats are written with 17 significant digits in
//! scientific notation, `.` as decimal separator and `\n` line endings.

use std::io::Write;

use serde_json::{json, Value};

use crate::config::SpecFile;
use crate::diagnostics::DecayReport;
use crate::error::Result;
use crate::extremogram::ExtremogramEstimate;
use crate::montecarlo::{coverage_check, MCResult};

pub const RESULTS_HEADER: [&str; 6] = ["replicate", "h", "rho_hat", "rho_pa", "error", "scaled_error"];
pub const BANDS_HEADER: [&str; 7] =
    ["h", "rho_pa", "mean_rho_hat", "band_lo", "band_hi", "err_band_lo", "err_band_hi"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_results_csv<W: Write>(result: &MCResult, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(RESULTS_HEADER)?;
    for rep in &result.replicates {
        for &h in &result.lags {
            out.write_record([
                rep.index.to_string(),
                h.to_string(),
                fmt_f64(rep.rho_hat[h]),
                fmt_f64(result.pa[h]),
                fmt_f64(rep.errors[h]),
                fmt_f64(rep.scaled_errors[h]),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_bands_csv<W: Write>(result: &MCResult, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(BANDS_HEADER)?;
    for &h in &result.lags {
        out.write_record([
            h.to_string(),
            fmt_f64(result.pa[h]),
            fmt_f64(result.mean_rho_hat[h]),
            fmt_f64(result.band_lo[h]),
            fmt_f64(result.band_hi[h]),
            fmt_f64(result.err_band_lo[h]),
            fmt_f64(result.err_band_hi[h]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn summary_json(result: &MCResult, spec: &SpecFile, threads: Option<usize>) -> Value {
    let coverage = coverage_check(result, 0.95);
    let normality: Vec<Value> = result
        .normality
        .iter()
        .zip(&result.lags)
        .map(|(t, h)| match t {
            Some(t) => json!({"h": h, "statistic": t.statistic, "p_value": t.p_value, "n": t.n}),
            None => json!({"h": h, "statistic": null, "p_value": null, "n": result.replicates.len()}),
        })
        .collect();
    json!({
        "schema_version": crate::config::SCHEMA_VERSION,
        "config": spec,
        "runtime": {"threads": threads},
        "derived": {
            "u_n": result.u_n,
            "v_n": result.v_n,
            "sqrt_n_v_n": result.scale,
            "replicates_kept": result.replicates.len(),
            "excluded": result.excluded,
            "reference": result.pa_source,
            "band_method": result.band_method,
        },
        "lags": result.lags,
        "rho_pa": result.pa,
        "mean_rho_hat": result.mean_rho_hat,
        "sd_rho_hat": result.sd_rho_hat,
        "band_lo": result.band_lo,
        "band_hi": result.band_hi,
        "mean_error": result.mean_error,
        "err_band_lo": result.err_band_lo,
        "err_band_hi": result.err_band_hi,
        "normality": {
            "method": "Anderson-Darling on sqrt(n v_n) * error (finite-sample surrogate for asymptotic normality)",
            "per_lag": normality,
        },
        "coverage": coverage,
        "covariance_diagonal": result.covariance.as_ref().map(|c| c.diagonal()),
        "scheme_report": result.scheme_report,
        "warnings": result.warnings,
    })
}

pub fn write_series_csv<W: Write>(values: &[f64], w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["i", "x"])?;
    for (i, x) in values.iter().enumerate() {
        out.write_record([i.to_string(), fmt_f64(*x)])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the `x` column of a series CSV (or the only column when there is one).
pub fn read_series_csv<R: std::io::Read>(r: R) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let col = headers.iter().position(|h| h == "x").unwrap_or(headers.len().saturating_sub(1));
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = rec.get(col).unwrap_or("");
        let x: f64 = field.trim().parse().map_err(|_| {
            crate::Error::Config(format!("row {}: cannot parse '{field}' as a number", row + 2))
        })?;
        values.push(x);
    }
    Ok(values)
}

pub fn write_theory_csv<W: Write>(rows: &[(usize, f64, f64)], w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["h", "rho", "rho_pa"])?;
    for (h, rho, pa) in rows {
        out.write_record([h.to_string(), fmt_f64(*rho), fmt_f64(*pa)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_extremogram_csv<W: Write>(est: &ExtremogramEstimate, pa: Option<&[f64]>, v_n: f64, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record([
        "h",
        "numerator",
        "denominator",
        "rho_hat",
        "rho_pa",
        "block_sum",
        "delta_sum",
        "remainder",
        "delta_scaled",
        "remainder_scaled",
    ])?;
    let boundary = est.boundary_terms(v_n);
    for (l, (ds, rs)) in est.lags.iter().zip(boundary) {
        out.write_record([
            l.h.to_string(),
            l.numerator.to_string(),
            l.denominator.to_string(),
            fmt_f64(l.rho_hat),
            pa.map(|p| fmt_f64(p[l.h])).unwrap_or_default(),
            l.decomposition.block_sum.to_string(),
            l.decomposition.delta_sum.to_string(),
            l.decomposition.remainder.to_string(),
            fmt_f64(ds),
            fmt_f64(rs),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_decay_csv<W: Write>(reports: &[DecayReport], w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["pair", "lag", "signed", "measured", "std_error", "bound", "pass"])?;
    for rep in reports {
        for i in 0..rep.lags.len() {
            out.write_record([
                rep.pair.clone(),
                rep.lags[i].to_string(),
                fmt_f64(rep.signed[i]),
                fmt_f64(rep.measured[i]),
                fmt_f64(rep.std_error[i]),
                fmt_f64(rep.bound[i]),
                rep.pass[i].to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
