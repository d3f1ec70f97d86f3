//! Largest exponent norm admitted by each truncation order.

use batchprop::chebyshev::{max_exponent_norm, M_MAX_GRID};
use batchprop::linalg::Precision;

pub fn table_row(precision: Precision) -> Vec<(usize, f64)> {
    M_MAX_GRID
        .iter()
        .map(|&m| (m, max_exponent_norm(m, precision)))
        .collect()
}

/// Three decimals, or one significant digit in scientific form below 10⁻³.
pub fn format_norm(v: f64) -> String {
    if v < 1e-3 {
        format!("{v:.0e}")
    } else {
        format!("{v:.3}")
    }
}

/// Plain-text table: a header of orders, then one row per precision.
pub fn render(precisions: &[Precision]) -> String {
    let mut out = String::from("m_max");
    for m in M_MAX_GRID {
        out += &format!("\t{m}");
    }
    out.push('\n');
    for &p in precisions {
        out += p.as_str();
        for (_, v) in table_row(p) {
            out += &format!("\t{}", format_norm(v));
        }
        out.push('\n');
    }
    out
}

pub fn write_csv<W: std::io::Write>(out: W, precisions: &[Precision]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["precision", "m_max", "max_norm"])?;
    for &p in precisions {
        for (m, v) in table_row(p) {
            w.write_record([p.as_str().to_string(), m.to_string(), format!("{v:.6e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(format_norm(2.136e-4), "2e-4");
        assert_eq!(format_norm(1.08779), "1.088");
        assert_eq!(format_norm(0.0076815), "0.008");
    }

    #[test]
    fn render_has_both_rows() {
        let text = render(&[Precision::Fp32, Precision::Fp64]);
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("fp32\t0.033"));
    }
}
