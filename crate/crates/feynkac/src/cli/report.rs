//! Result rows, observed rates, CSV and console rendering.

use std::fmt::Write as _;

pub const CSV_HEADER: &str = "scheme,alpha,gamma,p_re,p_im,d,J,N,mesh,err2,err1,maxerr,rate2,rate1,iters,cpu_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Err2,
    Err1,
    MaxErr,
    Iters,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Err2 => "err2",
            Metric::Err1 => "err1",
            Metric::MaxErr => "maxerr",
            Metric::Iters => "iters",
        }
    }
}

/// A reference value to compare a row against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub metric: Metric,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub scheme: String,
    pub alpha: f64,
    pub gamma: f64,
    pub p_re: f64,
    pub p_im: f64,
    pub d: usize,
    pub level: usize,
    pub steps: usize,
    pub mesh: String,
    pub err2: f64,
    pub err1: f64,
    pub maxerr: f64,
    pub rate2: Option<f64>,
    pub rate1: Option<f64>,
    pub iters: f64,
    pub cpu_s: f64,
    pub reference: Option<Reference>,
}

impl Row {
    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::Err2 => self.err2,
            Metric::Err1 => self.err1,
            Metric::MaxErr => self.maxerr,
            Metric::Iters => self.iters,
        }
    }
}

fn rate(prev: &Row, next: &Row, e0: f64, e1: f64) -> Option<f64> {
    if !(e0 > 0.0 && e1 > 0.0) {
        return None;
    }
    // space sweeps measure against h = 2^-J, time sweeps against 1/N
    let scale = if next.level != prev.level {
        (next.level as f64 - prev.level as f64) * std::f64::consts::LN_2
    } else if next.steps != prev.steps {
        (next.steps as f64 / prev.steps as f64).ln()
    } else {
        return None;
    };
    Some((e0 / e1).ln() / scale)
}

/// Fill `rate2`/`rate1` between consecutive rows that share a group id.
pub fn fill_rates(rows: &mut [Row], groups: &[usize]) {
    for k in 0..rows.len() {
        let (r2, r1) = if k > 0 && groups[k] == groups[k - 1] {
            let (prev, next) = (&rows[k - 1], &rows[k]);
            (rate(prev, next, prev.err2, next.err2), rate(prev, next, prev.err1, next.err1))
        } else {
            (None, None)
        };
        rows[k].rate2 = r2;
        rows[k].rate1 = r1;
    }
}

fn sci(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6e}")
    } else {
        String::new()
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.filter(|x| x.is_finite()).map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

/// Four significant digits.
fn sig4(v: f64) -> String {
    format!("{v:.3e}")
}

fn fields(r: &Row) -> Vec<String> {
    vec![
        r.scheme.clone(),
        format!("{}", r.alpha),
        format!("{}", r.gamma),
        format!("{}", r.p_re),
        format!("{}", r.p_im),
        r.d.to_string(),
        r.level.to_string(),
        r.steps.to_string(),
        r.mesh.clone(),
        sci(r.err2),
        sci(r.err1),
        sci(r.maxerr),
        opt(r.rate2, 4),
        opt(r.rate1, 4),
        format!("{:.2}", r.iters),
        sig4(r.cpu_s),
    ]
}

fn ref_fields(r: &Row) -> Vec<String> {
    match r.reference {
        Some(rf) => {
            let v = if rf.metric == Metric::Iters { format!("{}", rf.value) } else { format!("{:.4e}", rf.value) };
            vec![rf.metric.as_str().to_string(), v]
        }
        None => vec![String::new(), String::new()],
    }
}

/// CSV text. Reference columns are appended only when some row has one.
pub fn to_csv(rows: &[Row]) -> String {
    let with_ref = rows.iter().any(|r| r.reference.is_some());
    let mut out = String::from(CSV_HEADER);
    if with_ref {
        out.push_str(",ref_metric,ref_value");
    }
    out.push('\n');
    for r in rows {
        let mut f = fields(r);
        if with_ref {
            f.extend(ref_fields(r));
        }
        out.push_str(&f.join(","));
        out.push('\n');
    }
    out
}

/// Aligned console table with the same columns as the CSV.
pub fn pretty(rows: &[Row]) -> String {
    let with_ref = rows.iter().any(|r| r.reference.is_some());
    let mut header: Vec<String> = CSV_HEADER.split(',').map(str::to_string).collect();
    if with_ref {
        header.extend(["ref_metric".to_string(), "ref_value".to_string()]);
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut f = fields(r);
            if with_ref {
                f.extend(ref_fields(r));
            }
            f
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| body.iter().map(|f| f[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let line = |cells: &[String], out: &mut String| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&header, &mut out);
    let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    for f in &body {
        line(f, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(level: usize, steps: usize, err2: f64) -> Row {
        Row {
            scheme: "II-PI".into(),
            alpha: 1.6,
            gamma: 0.4,
            p_re: 3.0,
            p_im: 0.0,
            d: 2,
            level,
            steps,
            mesh: "uniform".into(),
            err2,
            err1: f64::NAN,
            maxerr: err2,
            rate2: None,
            rate1: None,
            iters: 0.0,
            cpu_s: 0.012341,
            reference: None,
        }
    }

    #[test]
    fn rates_follow_the_varying_parameter() {
        let mut rows = vec![row(9, 40, 4e-4), row(9, 80, 1e-4), row(3, 64, 8e-3), row(4, 256, 2e-3)];
        fill_rates(&mut rows, &[0, 0, 1, 1]);
        assert_eq!(rows[0].rate2, None);
        assert!((rows[1].rate2.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(rows[2].rate2, None);
        assert!((rows[3].rate2.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(rows[3].rate1, None);
    }

    #[test]
    fn csv_layout() {
        let csv = to_csv(&[row(9, 40, 5.4194e-6)]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("II-PI,1.6,0.4,3,0,2,9,40,uniform,5.419400e-6,,5.419400e-6,,,0.00,1.234e-2"));
        let mut r = row(9, 40, 1.0);
        r.reference = Some(Reference { metric: Metric::Err2, value: 5.4194e-6 });
        assert!(to_csv(&[r]).starts_with(&format!("{CSV_HEADER},ref_metric,ref_value\n")));
    }
}
