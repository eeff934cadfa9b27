//! Observation CSV ingestion: headered, one row per day, blank cells are
//! masked days.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::inference::ObservationSeries;
use crate::model::Observable;

const DAY_COLUMN: &str = "day";

/// Parse observations from any reader. Days may be listed sparsely; missing
/// rows are fully masked.
pub fn read_observations(reader: impl Read) -> Result<ObservationSeries> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = csv_reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let day_idx = find(DAY_COLUMN)?;
    let mut series_idx = [0usize; 6];
    for (i, series) in Observable::ALL.iter().enumerate() {
        series_idx[i] = find(series.column_name())?;
    }

    let mut rows: Vec<(usize, [Option<u64>; 6])> = Vec::new();
    for (row_number, record) in csv_reader.records().enumerate() {
        // header is line 1; data rows start at line 2
        let line = row_number + 2;
        let record = record?;
        let parse_cell = |idx: usize, name: &str| -> Result<Option<u64>> {
            let raw = record.get(idx).unwrap_or("");
            if raw.is_empty() {
                return Ok(None);
            }
            raw.parse::<u64>().map(Some).map_err(|_| Error::ParseRow {
                row: line,
                detail: format!("column '{name}' value '{raw}' is not a nonnegative integer"),
            })
        };
        let day_raw = record.get(day_idx).unwrap_or("");
        let day: usize = day_raw.parse().map_err(|_| Error::ParseRow {
            row: line,
            detail: format!("column 'day' value '{day_raw}' is not a nonnegative integer"),
        })?;
        let mut values = [None; 6];
        for (i, series) in Observable::ALL.iter().enumerate() {
            values[i] = parse_cell(series_idx[i], series.column_name())?;
        }
        if rows.iter().any(|(d, _)| *d == day) {
            return Err(Error::ParseRow {
                row: line,
                detail: format!("duplicate day {day}"),
            });
        }
        rows.push((day, values));
    }
    if rows.is_empty() {
        return Err(Error::Validation("observations file has no data rows".into()));
    }

    let max_day = rows.iter().map(|(d, _)| *d).max().unwrap();
    let mut columns: [Vec<Option<u64>>; 6] = std::array::from_fn(|_| vec![None; max_day + 1]);
    for (day, values) in rows {
        for i in 0..6 {
            columns[i][day] = values[i];
        }
    }
    ObservationSeries::from_columns(columns)
}

pub fn load_observations(path: impl AsRef<Path>) -> Result<ObservationSeries> {
    let file = std::fs::File::open(path.as_ref())?;
    read_observations(std::io::BufReader::new(file))
}

/// Write observations with blank cells for masked days.
pub fn write_observations(obs: &ObservationSeries, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![DAY_COLUMN.to_string()];
    header.extend(Observable::ALL.iter().map(|s| s.column_name().to_string()));
    w.write_record(&header)?;
    for day in 0..obs.n_days() {
        let mut row = vec![day.to_string()];
        for series in Observable::ALL {
            row.push(match obs.get(series, day) {
                Some(v) => v.to_string(),
                None => String::new(),
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_observations(obs: &ObservationSeries, path: impl AsRef<Path>) -> Result<()> {
    if let Some(parent) = path.as_ref().parent() {
        std::fs::create_dir_all(parent)?;
    }
    let file = std::fs::File::create(path.as_ref())?;
    write_observations(obs, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masked_cells_parse_as_none() {
        let csv = "day,infected,recovered,deaths,reinfected,recovered_reinfected,vaccinated\n\
                   0,1,0,0,,,\n";
        let obs = read_observations(csv.as_bytes()).unwrap();
        assert_eq!(obs.get(Observable::Infected, 0), Some(1));
        assert_eq!(obs.get(Observable::RecoveredInfected, 0), Some(0));
        assert_eq!(obs.get(Observable::Deaths, 0), Some(0));
        assert_eq!(obs.get(Observable::Reinfected, 0), None);
        assert_eq!(obs.get(Observable::RecoveredReinfected, 0), None);
        assert_eq!(obs.get(Observable::Vaccinated, 0), None);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let csv = "day,infected,recovered,reinfected,recovered_reinfected,vaccinated\n\
                   0,1,0,0,0,0\n";
        let err = read_observations(csv.as_bytes()).unwrap_err();
        assert_eq!(err.category(), crate::error::Category::Schema);
        assert!(err.to_string().contains("deaths"));
    }

    #[test]
    fn non_integer_count_is_parse_error_with_row() {
        let csv = "day,infected,recovered,deaths,reinfected,recovered_reinfected,vaccinated\n\
                   0,1,0,0,,,\n\
                   1,2.5,0,0,,,\n";
        let err = read_observations(csv.as_bytes()).unwrap_err();
        assert_eq!(err.category(), crate::error::Category::Parse);
        assert!(err.to_string().contains("row 3"), "got: {err}");
    }

    #[test]
    fn decreasing_cumulative_column_is_flagged_at_its_day() {
        let csv = "day,infected,recovered,deaths,reinfected,recovered_reinfected,vaccinated\n\
                   0,1,0,5,,,\n\
                   1,1,0,3,,,\n";
        let err = read_observations(csv.as_bytes()).unwrap_err();
        assert_eq!(err.category(), crate::error::Category::Validation);
        assert!(err.to_string().contains("day 1"), "got: {err}");
    }

    #[test]
    fn sparse_days_are_fully_masked() {
        let csv = "day,infected,recovered,deaths,reinfected,recovered_reinfected,vaccinated\n\
                   0,1,0,0,,,\n\
                   3,9,2,1,,,\n";
        let obs = read_observations(csv.as_bytes()).unwrap();
        assert_eq!(obs.n_days(), 4);
        assert_eq!(obs.get(Observable::Infected, 1), None);
        assert_eq!(obs.get(Observable::Infected, 3), Some(9));
    }

    #[test]
    fn round_trip_preserves_masks_and_values() {
        let csv = "day,infected,recovered,deaths,reinfected,recovered_reinfected,vaccinated\n\
                   0,1,0,0,,,\n\
                   1,4,1,0,2,,10\n";
        let obs = read_observations(csv.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_observations(&obs, &mut buf).unwrap();
        let again = read_observations(buf.as_slice()).unwrap();
        assert_eq!(obs, again);
    }
}
