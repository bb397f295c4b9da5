//! CSV exchange format: `t,location,category,value,label,group`.
//!
//! A null value is an empty field. `label` is empty for normal readings;
//! `group` is empty unless the reading is labeled. Files without the `group`
//! column are accepted on input.

use std::io::{Read, Write};

use thiserror::Error;

use super::{SensorKind, SensorReading};
use crate::anomaly::{AnomalyKind, AnomalyLabel};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("missing column `{0}`")]
    MissingColumn(&'static str),
}

pub const HEADER: [&str; 6] = ["t", "location", "category", "value", "label", "group"];

pub fn write_csv<W: Write>(readings: &[SensorReading], out: W) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in readings {
        let value = r.value.map(|v| v.to_string()).unwrap_or_default();
        let (label, group) = match &r.label {
            Some(l) => (l.kind.name().to_string(), l.group.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            r.t.to_string(),
            r.location.to_string(),
            r.kind.name().to_string(),
            value,
            label,
            group,
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SensorReading>, CsvError> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    let col = |name: &'static str| headers.iter().position(|h| h == name);
    let t_col = col("t").ok_or(CsvError::MissingColumn("t"))?;
    let loc_col = col("location").ok_or(CsvError::MissingColumn("location"))?;
    let cat_col = col("category").ok_or(CsvError::MissingColumn("category"))?;
    let val_col = col("value").ok_or(CsvError::MissingColumn("value"))?;
    let label_col = col("label").ok_or(CsvError::MissingColumn("label"))?;
    let group_col = col("group");

    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let err = |msg: String| CsvError::Row { row, msg };
        let field = |c: usize| rec.get(c).unwrap_or("");
        let t = field(t_col)
            .parse::<u64>()
            .map_err(|e| err(format!("bad t: {e}")))?;
        let location = field(loc_col)
            .parse::<u32>()
            .map_err(|e| err(format!("bad location: {e}")))?;
        let kind: SensorKind = field(cat_col).parse().map_err(err)?;
        let value = match field(val_col) {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|e| err(format!("bad value: {e}")))?),
        };
        let label = match field(label_col) {
            "" => None,
            s => {
                let kind = AnomalyKind::from_name(s)
                    .ok_or_else(|| err(format!("unknown label `{s}`")))?;
                let group = match group_col.map(field) {
                    Some("") | None => 0,
                    Some(g) => g.parse::<u64>().map_err(|e| err(format!("bad group: {e}")))?,
                };
                Some(AnomalyLabel { kind, group })
            }
        };
        out.push(SensorReading {
            id: i as u64,
            location,
            kind,
            t,
            value,
            label,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_value_is_empty_field() {
        let r = vec![SensorReading {
            id: 0,
            location: 3,
            kind: SensorKind::Humidity,
            t: 9,
            value: None,
            label: Some(AnomalyLabel {
                kind: AnomalyKind::Missing,
                group: 4,
            }),
        }];
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,location,category,value,label,group\n9,3,humidity,,missing,4\n");
        assert_eq!(read_csv(text.as_bytes()).unwrap(), r);
    }

    #[test]
    fn accepts_files_without_group_column() {
        let text = "t,location,category,value,label\n1,0,temperature,20.5,\n2,0,temperature,31,point\n";
        let rs = read_csv(text.as_bytes()).unwrap();
        assert_eq!(rs.len(), 2);
        assert_eq!(rs[1].label.unwrap().kind, AnomalyKind::Point);
        assert_eq!(rs[0].value, Some(20.5));
    }

    #[test]
    fn rejects_unknown_category() {
        let text = "t,location,category,value,label\n1,0,velocity,1,\n";
        assert!(matches!(read_csv(text.as_bytes()), Err(CsvError::Row { row: 2, .. })));
    }
}
