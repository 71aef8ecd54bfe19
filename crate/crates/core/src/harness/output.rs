use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::optim::TraceRecord;

pub const TRACE_HEADER: &str = "step,train_loss,test_loss,lr,clock,event";

/// 17 significant digits, which round-trips every finite `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut s = String::with_capacity(96 * (trace.len() + 1));
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in trace {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.step,
            fmt_f64(r.train_loss),
            fmt_opt(r.test_loss),
            fmt_f64(r.lr),
            fmt_f64(r.clock),
            r.event.as_str()
        );
    }
    s
}

/// Comma-joined header plus rows of preformatted cells.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn write(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    fs::write(dir.join(name), contents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::Event;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 12345.678, -2.5e17, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn trace_layout() {
        let r = TraceRecord {
            step: 1,
            train_loss: 0.5,
            test_loss: None,
            lr: 0.25,
            clock: 0.25,
            event: Event::Improve,
            stall: 0,
        };
        let s = trace_csv(&[r]);
        assert_eq!(
            s,
            "step,train_loss,test_loss,lr,clock,event\n1,5.0000000000000000e-1,,2.5000000000000000e-1,2.5000000000000000e-1,improve\n"
        );
    }
}
