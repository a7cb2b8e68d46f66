//! Records of closed-form expressions that disagree with a direct evaluation.

use std::fmt::Write as _;
use std::io::{self, Write};

/// Relative discrepancy above which an explicit expression is recorded.
pub const DEVIATION_TOL: f64 = 1e-6;

pub const CSV_HEADER: &str = "operation,order,lambda,eta,kappa,alpha,tau,branch,paper_value,direct_value,abs_diff";

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationRecord {
    pub operation: String,
    pub order: usize,
    pub lambda: f64,
    pub eta: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub tau: f64,
    pub branch: String,
    pub paper_value: f64,
    pub direct_value: f64,
    pub abs_diff: f64,
}

/// Parameter point a record is attached to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationContext<'a> {
    pub operation: &'a str,
    pub order: usize,
    pub lambda: f64,
    pub eta: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub tau: f64,
}

impl DeviationContext<'_> {
    /// A record when `|explicit − direct| > tol · max(1, |direct|)`.
    pub fn compare(&self, branch: &str, explicit: f64, direct: f64) -> Option<DeviationRecord> {
        let abs_diff = (explicit - direct).abs();
        let exceeds = !(abs_diff <= DEVIATION_TOL * direct.abs().max(1.0));
        exceeds.then(|| self.record(branch, explicit, direct))
    }

    pub fn record(&self, branch: &str, explicit: f64, direct: f64) -> DeviationRecord {
        DeviationRecord {
            operation: self.operation.to_string(),
            order: self.order,
            lambda: self.lambda,
            eta: self.eta,
            kappa: self.kappa,
            alpha: self.alpha,
            tau: self.tau,
            branch: branch.to_string(),
            paper_value: explicit,
            direct_value: direct,
            abs_diff: (explicit - direct).abs(),
        }
    }
}

impl DeviationRecord {
    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.operation,
            self.order,
            fmt_e12(self.lambda),
            fmt_e12(self.eta),
            fmt_e12(self.kappa),
            fmt_e12(self.alpha),
            fmt_e12(self.tau),
            self.branch,
            fmt_e12(self.paper_value),
            fmt_e12(self.direct_value),
            fmt_e12(self.abs_diff)
        )
        .expect("writing to a String cannot fail");
        s
    }
}

pub fn write_csv<W: Write>(mut out: W, records: &[DeviationRecord]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// C `printf("%.12e")` formatting: `1.000000000000e+00`, `-2.500000000000e-03`.
pub fn fmt_e12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_exponent() {
        assert_eq!(fmt_e12(1.0), "1.000000000000e+00");
        assert_eq!(fmt_e12(-0.0025), "-2.500000000000e-03");
        assert_eq!(fmt_e12(0.0), "0.000000000000e+00");
        assert_eq!(fmt_e12(1.5e120), "1.500000000000e+120");
        assert_eq!(fmt_e12(f64::NAN), "nan");
    }

    #[test]
    fn compare_uses_relative_scale() {
        let ctx = DeviationContext { operation: "op", order: 1, lambda: 0.1, eta: 0.1, kappa: 0.0, alpha: 4.0, tau: 1.0 };
        assert!(ctx.compare("b", 1000.0, 1000.0005).is_none());
        assert!(ctx.compare("b", 1.0, 1.00001).is_some());
        assert!(ctx.compare("b", f64::NAN, 1.0).is_some());
        let r = ctx.compare("b", 2.0, 1.0).unwrap();
        assert_eq!(r.abs_diff, 1.0);
        let mut buf = Vec::new();
        write_csv(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 11);
    }
}
