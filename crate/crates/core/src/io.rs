// SPDX-License-Identifier: Apache-2.0

//! CSV emitters for traces, matrices and approximation reports.

use std::io::{self, Write};

use crate::matrix::SquareMatrix;
use crate::metrics::ApproxReport;
use crate::scalar::Scalar;

/// Significant digits for probability traces.
pub const TRACE_DIGITS: usize = 12;
/// Significant digits for matrix dumps (round-trips an f64).
pub const MATRIX_DIGITS: usize = 17;

/// Formats `x` with `digits` significant digits, `%g` style: fixed notation
/// for moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn format_sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // Round first so the exponent reflects the printed mantissa.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        format!("{mantissa}e{exp}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `tau,p` rows.
pub fn write_trace_csv<W: Write, T: Scalar>(mut out: W, taus: &[T], probs: &[T]) -> io::Result<()> {
    writeln!(out, "tau,p")?;
    for (t, p) in taus.iter().zip(probs) {
        writeln!(out, "{},{}", format_sig(t.as_f64(), TRACE_DIGITS), format_sig(p.as_f64(), TRACE_DIGITS))?;
    }
    Ok(())
}

/// `tau,p_1,...,p_N` rows; `rows[i]` holds every site at `taus[i]`.
pub fn write_sites_csv<W: Write, T: Scalar>(mut out: W, taus: &[T], rows: &[Vec<T>]) -> io::Result<()> {
    let n = rows.first().map_or(0, Vec::len);
    let mut header = String::from("tau");
    for site in 1..=n {
        header.push_str(&format!(",p_{site}"));
    }
    writeln!(out, "{header}")?;
    for (t, row) in taus.iter().zip(rows) {
        let mut line = format_sig(t.as_f64(), TRACE_DIGITS);
        for p in row {
            line.push(',');
            line.push_str(&format_sig(p.as_f64(), TRACE_DIGITS));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Full row-major dump, no header.
pub fn write_matrix_csv<W: Write, T: Scalar>(mut out: W, m: &SquareMatrix<T>) -> io::Result<()> {
    for i in 0..m.dim() {
        let line: Vec<String> = m.row(i).iter().map(|x| format_sig(x.as_f64(), MATRIX_DIGITS)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// `M,J_M,ratio` rows followed by `calM=<int>,epsilon=<float>`.
pub fn write_approx_csv<W: Write, T: Scalar>(mut out: W, report: &ApproxReport<T>) -> io::Result<()> {
    writeln!(out, "M,J_M,ratio")?;
    for m in 1..=report.n_windows() {
        writeln!(
            out,
            "{m},{},{}",
            format_sig(report.j_for(m).as_f64(), TRACE_DIGITS),
            format_sig(report.ratio_for(m).as_f64(), TRACE_DIGITS)
        )?;
    }
    writeln!(out, "calM={},epsilon={}", report.cal_m, format_sig(report.epsilon.as_f64(), TRACE_DIGITS))
}
