//! Plain-text series files and diagnostics output.
//!
//! Input files hold one time point per line with fields separated by commas
//! and/or whitespace. Blank lines and lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::estimator::OrderEstimate;
use crate::operator::{wrap_angle, DataKind, ObservedSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// `d` numeric columns.
    Columns(usize),
    /// One angle per line in degrees.
    AnglesDegrees,
    /// One angle per line in radians.
    AnglesRadians,
    /// A leading integer sequence id followed by `d` columns. Rows are grouped
    /// by id in order of first appearance.
    MultiSequence(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetDescriptor {
    pub path: PathBuf,
    pub layout: Layout,
    /// Keep every `stride`-th observation of each sequence.
    pub stride: usize,
}

impl DatasetDescriptor {
    pub fn new(path: impl Into<PathBuf>, layout: Layout) -> Self {
        Self {
            path: path.into(),
            layout,
            stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty())
}

/// Parses series text; `path` only labels errors.
pub fn parse_series(text: &str, layout: Layout, path: &Path) -> Result<ObservedSeries> {
    let (width, dim) = match layout {
        Layout::Columns(d) => (d, d),
        Layout::AnglesDegrees | Layout::AnglesRadians => (1, 1),
        Layout::MultiSequence(d) => (d + 1, d),
    };
    if dim == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut ids: Vec<i64> = Vec::new();
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = fields(line).collect();
        if parts.len() != width {
            return Err(parse_err(line_no, format!("expected {width} fields, found {}", parts.len())));
        }
        let (group, values) = match layout {
            Layout::MultiSequence(_) => {
                let id: i64 = parts[0]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("sequence id '{}' is not an integer", parts[0])))?;
                let g = match ids.iter().position(|&x| x == id) {
                    Some(g) => g,
                    None => {
                        ids.push(id);
                        groups.push(Vec::new());
                        ids.len() - 1
                    }
                };
                (g, &parts[1..])
            }
            _ => {
                if groups.is_empty() {
                    groups.push(Vec::new());
                }
                (0, &parts[..])
            }
        };
        for f in values {
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(line_no, format!("'{f}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("'{f}' is not finite")));
            }
            let v = match layout {
                Layout::AnglesDegrees => wrap_angle(v.rem_euclid(360.0).to_radians()),
                _ => v,
            };
            groups[group].push(v);
        }
    }
    if groups.is_empty() {
        return Err(parse_err(0, "no observations".into()));
    }
    let kind = match layout {
        Layout::AnglesDegrees | Layout::AnglesRadians => DataKind::Circular,
        _ => DataKind::Linear,
    };
    let lens: Vec<usize> = groups.iter().map(|g| g.len() / dim).collect();
    if let Some(short) = lens.iter().position(|&l| l < 2) {
        return Err(parse_err(
            0,
            format!("sequence {} has {} observations, at least 2 are needed", ids.get(short).copied().unwrap_or(0), lens[short]),
        ));
    }
    ObservedSeries::from_flat(groups.concat(), dim, lens, kind)
}

/// Reads a series file, converting angles to radians and applying the stride.
pub fn load_series(desc: &DatasetDescriptor) -> Result<ObservedSeries> {
    if desc.stride == 0 {
        return Err(Error::Config("stride must be at least 1".into()));
    }
    let text = std::fs::read_to_string(&desc.path).map_err(|e| Error::io(&desc.path, e))?;
    let series = parse_series(&text, desc.layout, &desc.path)?;
    if desc.stride == 1 {
        Ok(series)
    } else {
        series.subsample(desc.stride)
    }
}

/// Text form read back by [`parse_series`]: one point per line, with a
/// leading sequence id when there are several sequences. Values are written
/// in shortest round-trip form, angles in radians.
pub fn format_series(series: &ObservedSeries) -> String {
    let mut out = String::new();
    let multi = series.n_sequences() > 1;
    for (seq, (start, len)) in series.sequence_ranges().enumerate() {
        for t in start..start + len {
            let mut first = true;
            if multi {
                let _ = write!(out, "{seq}");
                first = false;
            }
            for v in series.point(t) {
                if !first {
                    out.push(' ');
                }
                let _ = write!(out, "{v:?}");
                first = false;
            }
            out.push('\n');
        }
    }
    out
}

/// Layout matching [`format_series`] output for this series.
pub fn layout_of(series: &ObservedSeries) -> Layout {
    if series.n_sequences() > 1 {
        Layout::MultiSequence(series.dim())
    } else if series.kind() == DataKind::Circular {
        Layout::AnglesRadians
    } else {
        Layout::Columns(series.dim())
    }
}

pub fn write_series(series: &ObservedSeries, path: &Path) -> Result<()> {
    std::fs::write(path, format_series(series)).map_err(|e| Error::io(path, e))
}

/// CSV with columns `ell, r_ell, tau, exceeds`, one row per `ell`.
pub fn diagnostics_csv(estimate: &OrderEstimate) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ell", "r_ell", "tau", "exceeds"]).expect("writing to memory");
    for (i, r) in estimate.r_values.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            format!("{r:?}"),
            format!("{:?}", estimate.tau),
            u8::from(*r > estimate.tau).to_string(),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8")
}

pub fn export_diagnostics(estimate: &OrderEstimate, path: &Path) -> Result<()> {
    std::fs::write(path, diagnostics_csv(estimate)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn parse(text: &str, layout: Layout) -> Result<ObservedSeries> {
        parse_series(text, layout, Path::new("mem.txt"))
    }

    #[test]
    fn degrees_become_radians() {
        let s = parse("90\n180\n270\n", Layout::AnglesDegrees).unwrap();
        assert_eq!(s.kind(), DataKind::Circular);
        for (v, e) in s.values().iter().zip([PI / 2.0, PI, 1.5 * PI]) {
            assert!((v - e).abs() < 1e-15);
        }
        let s = parse("360\n-90\n", Layout::AnglesDegrees).unwrap();
        assert_eq!(s.values()[0], 0.0);
        assert!((s.values()[1] - 1.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn separators_and_comments() {
        let s = parse("# header comment\n1,2\n3 4\n\n5,\t6\n", Layout::Columns(2)).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("1 2\n3\n", Layout::Columns(2)) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse("1\n2\nabc\n", Layout::Columns(1)) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("abc"));
            }
            other => panic!("{other:?}"),
        }
        // locale-style decimal commas split into two fields
        assert!(matches!(parse("1,5\n2,5\n", Layout::Columns(1)), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("1.5\nnan\n", Layout::Columns(1)), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("", Layout::Columns(1)), Err(Error::Parse { .. })));
        assert!(matches!(parse("x 1\n", Layout::MultiSequence(1)), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn multisequence_groups_by_first_appearance() {
        let s = parse("7 1\n3 10\n7 2\n3 11\n7 3\n", Layout::MultiSequence(1)).unwrap();
        assert_eq!(s.sequence_lengths(), &[3, 2]);
        assert_eq!(s.values(), &[1.0, 2.0, 3.0, 10.0, 11.0]);
        assert_eq!(s.n_pairs(), 3);
        assert!(matches!(parse("1 1\n1 2\n2 5\n", Layout::MultiSequence(1)), Err(Error::Parse { .. })));
    }

    #[test]
    fn pooled_pair_count() {
        let mut text = String::new();
        for (id, len) in [(1, 168), (2, 134), (3, 137)] {
            for t in 0..len {
                text.push_str(&format!("{id},{t}.5,{}\n", t * 2));
            }
        }
        let s = parse(&text, Layout::MultiSequence(2)).unwrap();
        assert_eq!(s.n_pairs(), 167 + 133 + 136);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let values: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin() * 1e3 + 1.0 / 3.0).collect();
        let s = ObservedSeries::from_flat(values, 2, vec![15, 10], DataKind::Linear).unwrap();
        let back = parse(&format_series(&s), layout_of(&s)).unwrap();
        assert_eq!(back, s);
        let c = ObservedSeries::circular(vec![0.1, 6.2, 3.3]).unwrap();
        assert_eq!(parse(&format_series(&c), layout_of(&c)).unwrap(), c);
    }
}
