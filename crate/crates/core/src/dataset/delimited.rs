use nalgebra::DMatrix;

use super::{Dataset, DefectiveTokens, CLEAN, DEFECTIVE};
use crate::error::{Error, Result};

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line: line as usize,
        message: message.into(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    parse_err(line, e.to_string())
}

/// Parses comma-separated text with a header row.
///
/// `label_column` is removed from the features; a row is defective when its
/// label cell matches one of `positive`.
pub fn parse_csv(text: &str, label_column: &str, positive: &DefectiveTokens) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header = reader.headers().map_err(csv_err)?.clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(parse_err(1, "missing header row"));
    }
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| parse_err(1, format!("label column `{label_column}` not in header")))?;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    if names.is_empty() {
        return Err(Error::InvalidData(
            "CSV has no feature columns besides the label".into(),
        ));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} cells, found {}", header.len(), record.len()),
            ));
        }
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                labels.push(if positive.matches(cell) { DEFECTIVE } else { CLEAN });
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line, format!("non-numeric cell `{cell}`")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite cell `{cell}`")));
            }
            values.push(v);
        }
    }
    let features = DMatrix::from_row_slice(labels.len(), names.len(), &values);
    Dataset::new("csv", names, features, labels)
}

/// Renders a dataset as CSV with the label in a trailing `label_column`.
///
/// Values are written with 17 significant digits so that re-parsing yields
/// the identical matrix.
pub fn write_csv(dataset: &Dataset, label_column: &str) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header: Vec<&str> = dataset.feature_names().iter().map(String::as_str).collect();
    header.push(label_column);
    writer.write_record(&header).expect("in-memory write");
    let x = dataset.features();
    let mut row: Vec<String> = Vec::with_capacity(x.ncols() + 1);
    for (i, &label) in dataset.labels().iter().enumerate() {
        row.clear();
        row.extend((0..x.ncols()).map(|j| format!("{:.16e}", x[(i, j)])));
        row.push(label.to_string());
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("ascii output")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn yes() -> DefectiveTokens {
        DefectiveTokens::new(["Y"])
    }

    #[test]
    fn parses_small_csv() {
        let d = parse_csv("a,b,bug\n1,2,Y\n3,4,N", "bug", &yes()).unwrap();
        assert_eq!(d.n_samples(), 2);
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.labels(), &[1, 0]);
        assert_eq!(d.feature_names(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn label_column_may_be_anywhere() {
        let d = parse_csv("bug,a\r\nY,1\r\nN,2\r\n", "bug", &yes()).unwrap();
        assert_eq!(d.features().as_slice(), &[1.0, 2.0]);
        assert_eq!(d.labels(), &[1, 0]);
    }

    #[test]
    fn label_only_csv_is_rejected() {
        assert!(parse_csv("bug\nY\nN\n", "bug", &yes()).is_err());
    }

    #[test]
    fn structural_errors() {
        assert!(parse_csv("", "bug", &yes()).is_err());
        assert!(parse_csv("a,b\n1,2\n3,4\n", "bug", &yes()).is_err());
        assert!(matches!(
            parse_csv("a,bug\n1,Y\nx,N\n", "bug", &yes()),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_csv("a,b,bug\n1,2,Y\n3,N\n", "bug", &yes()),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn written_csv_reparses_identically() {
        let x = DMatrix::from_row_slice(3, 2, &[0.1, 1.0 / 3.0, -2.5e-300, 7.0, 1e300, -0.0]);
        let d = Dataset::new("x", vec!["a".into(), "b,c".into()], x, vec![1, 0, 1]).unwrap();
        let text = write_csv(&d, "label");
        let back = parse_csv(&text, "label", &DefectiveTokens::default()).unwrap();
        assert_eq!(back.features(), d.features());
        assert_eq!(back.labels(), d.labels());
        assert_eq!(back.feature_names(), d.feature_names());
    }
}
