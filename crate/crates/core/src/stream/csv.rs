//! Single-pass CSV ingestion: numeric features followed by an integer label.

use std::fs::File;
use std::path::Path;

use super::{ClassId, Instance, StreamSchema};
use crate::error::{Error, Result};

pub struct CsvStream<R: std::io::Read = File> {
    records: csv::StringRecordsIntoIter<R>,
    schema: StreamSchema,
    row: usize,
    failed: bool,
}

/// Opens `path` as a stream of instances under `schema`.
pub fn load_csv_stream(
    path: impl AsRef<Path>,
    schema: StreamSchema,
    has_header: bool,
) -> Result<CsvStream> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    CsvStream::from_reader(file, schema, has_header)
}

impl<R: std::io::Read> CsvStream<R> {
    pub fn from_reader(reader: R, schema: StreamSchema, has_header: bool) -> Result<Self> {
        schema.validate()?;
        let records = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader)
            .into_records();
        Ok(Self {
            records,
            schema,
            row: 0,
            failed: false,
        })
    }

    pub fn schema(&self) -> &StreamSchema {
        &self.schema
    }

    fn parse(&self, record: &csv::StringRecord) -> Result<Instance> {
        let row = self.row;
        let found = record.len().saturating_sub(1);
        if found != self.schema.n_features {
            return Err(Error::Schema {
                row,
                expected: self.schema.n_features,
                found,
            });
        }
        let mut features = Vec::with_capacity(found);
        for (column, cell) in record.iter().take(found).enumerate() {
            let value = cell.parse::<f64>().map_err(|e| Error::Parse {
                row,
                column: column + 1,
                message: format!("`{cell}`: {e}"),
            })?;
            features.push(value);
        }
        let label = self.parse_label(&record[found], found + 1)?;
        Ok(Instance::labeled(row as u64, features, label))
    }

    fn parse_label(&self, cell: &str, column: usize) -> Result<ClassId> {
        let parse_error = |message: String| Error::Parse {
            row: self.row,
            column,
            message,
        };
        let raw = match cell.parse::<i64>() {
            Ok(v) => v,
            Err(_) => {
                let v = cell
                    .parse::<f64>()
                    .map_err(|e| parse_error(format!("label `{cell}`: {e}")))?;
                if v.fract() != 0.0 {
                    return Err(parse_error(format!("label `{cell}` is not an integer")));
                }
                v as i64
            }
        };
        self.schema
            .class_index(raw)
            .ok_or_else(|| parse_error(format!("label {raw} not declared in schema")))
    }
}

impl<R: std::io::Read> Iterator for CsvStream<R> {
    type Item = Result<Instance>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let record = self.records.next()?;
        self.row += 1;
        let item = record
            .map_err(Error::from)
            .and_then(|record| self.parse(&record));
        self.failed = item.is_err();
        Some(item)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(text: &str, n_features: usize, header: bool) -> CsvStream<&[u8]> {
        CsvStream::from_reader(text.as_bytes(), StreamSchema::binary(n_features), header).unwrap()
    }

    #[test]
    fn reads_rows_in_order() {
        let rows: Vec<Instance> = stream("1,2,0\n3,4,1", 2, false)
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(
            rows,
            vec![
                Instance::labeled(1, vec![1.0, 2.0], 0),
                Instance::labeled(2, vec![3.0, 4.0], 1),
            ]
        );
    }

    #[test]
    fn header_is_skipped() {
        let rows: Vec<Instance> = stream("a,b,class\n0.5,1e-3,1.0\n", 2, true)
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(rows, vec![Instance::labeled(1, vec![0.5, 0.001], 1)]);
    }

    #[test]
    fn wrong_width_names_the_row() {
        let err = stream("1,2,3,0\n", 2, false).next().unwrap().unwrap_err();
        match err {
            Error::Schema { row, expected, found } => {
                assert_eq!((row, expected, found), (1, 2, 3));
            }
            other => panic!("unexpected {other}"),
        }
        assert!(err_text("1,2,0\n1,x,1\n").contains("row 2, column 2"));
    }

    fn err_text(text: &str) -> String {
        stream(text, 2, false)
            .find_map(|r| r.err())
            .map(|e| e.to_string())
            .unwrap()
    }

    #[test]
    fn unknown_label_is_rejected() {
        assert!(err_text("1,2,7\n").contains("label 7"));
        assert!(err_text("1,2,0.5\n").contains("not an integer"));
    }

    #[test]
    fn stops_after_first_error() {
        let mut s = stream("1,2\n1,2,0\n", 2, false);
        assert!(s.next().unwrap().is_err());
        assert!(s.next().is_none());
    }

    #[test]
    fn missing_file() {
        let err = load_csv_stream("/nonexistent/file.csv", StreamSchema::binary(2), false);
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}
