//! CSV point input.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use regpave_core::PointSet;

use crate::error::{Error, Result};

/// Points read from a file, plus the number of malformed rows skipped in
/// lenient mode.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub points: PointSet,
    pub skipped: usize,
    pub header: Option<Vec<String>>,
}

/// Reads rows of `d` comma-separated finite numbers. Lines starting with `#`
/// are comments. A first row that does not parse is taken as a header. In
/// strict mode any other malformed row is an error; otherwise it is skipped
/// and counted.
pub fn ingest_csv(path: impl AsRef<Path>, d: usize, strict: bool) -> Result<Ingested> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, d, strict)
}

pub fn read_csv<R: Read>(reader: R, d: usize, strict: bool) -> Result<Ingested> {
    if d == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut points = PointSet::new(d);
    let mut skipped = 0;
    let mut header = None;
    let mut first = true;
    let mut row = vec![0.0; d];
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed = parse_row(&record, line, &mut row);
        let was_first = std::mem::replace(&mut first, false);
        match parsed {
            Ok(()) => points.push(&row)?,
            Err(Error::Parse { .. }) if was_first && record.iter().any(|f| f.parse::<f64>().is_err()) => {
                header = Some(record.iter().map(str::to_owned).collect());
            }
            Err(e) if strict => return Err(e),
            Err(_) => skipped += 1,
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(Ingested { points, skipped, header })
}

fn parse_row(record: &csv::StringRecord, line: u64, out: &mut [f64]) -> Result<()> {
    if record.len() != out.len() {
        return Err(Error::DimensionMismatch { line, expected: out.len(), found: record.len() });
    }
    for (slot, field) in out.iter_mut().zip(record.iter()) {
        let v: f64 = field
            .parse()
            .map_err(|_| Error::Parse { line, msg: format!("cannot parse {field:?} as a number") })?;
        if !v.is_finite() {
            return Err(Error::Parse { line, msg: format!("non-finite value {field:?}") });
        }
        *slot = v;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str, d: usize, strict: bool) -> Result<Ingested> {
        read_csv(s.as_bytes(), d, strict)
    }

    #[test]
    fn two_points() {
        let got = read("0.1,0.2\n0.3,0.4", 2, true).unwrap();
        assert_eq!(got.points.len(), 2);
        assert_eq!(got.points.get(1), &[0.3, 0.4]);
    }

    #[test]
    fn bad_value_reports_line() {
        match read("0.1,0.2\n0.1,abc\n", 2, true) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let got = read("0.1,0.2\n0.1,abc\n0.5,0.5\n", 2, false).unwrap();
        assert_eq!((got.points.len(), got.skipped), (2, 1));
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(read("", 2, true), Err(Error::EmptyInput)));
        assert!(matches!(read("# only a comment\n\n", 2, true), Err(Error::EmptyInput)));
        assert!(matches!(read("x,y\n", 2, true), Err(Error::EmptyInput)));
    }

    #[test]
    fn header_comments_and_width() {
        let got = read("# generated\nx,y\n1,2\n# mid\n 3 , 4 \n", 2, true).unwrap();
        assert_eq!(got.header.as_deref(), Some(&["x".to_string(), "y".to_string()][..]));
        assert_eq!(got.points.as_flat(), &[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            read("1,2\n1,2,3\n", 2, true),
            Err(Error::DimensionMismatch { line: 2, expected: 2, found: 3 })
        ));
        assert!(matches!(read("1,2\nnan,1\n", 2, true), Err(Error::Parse { line: 2, .. })));
    }
}
