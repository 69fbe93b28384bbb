//! Ingestion of per-day step counts and assembly into the binary week matrix.
//!
//! Input is a three-column CSV (`subject_id,date,steps`). Days are grouped by
//! subject and ISO-8601 week, each recorded day is reduced to a usage bit, and
//! weeks without a single recorded day are dropped.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use ndarray::Array2;

use crate::error::{Error, Result};

pub const DAYS_PER_WEEK: usize = 7;

pub const RECORD_HEADER: [&str; 3] = ["subject_id", "date", "steps"];
pub const MATRIX_HEADER: [&str; 9] = [
    "subject_id", "iso_week", "mon", "tue", "wed", "thu", "fri", "sat", "sun",
];

/// Usage indicator for one day: 1 iff at least one step was recorded.
pub fn dichotomize(steps: i64) -> Result<u8> {
    if steps < 0 {
        return Err(Error::data(format!("negative step count {steps}")));
    }
    Ok(u8::from(steps > 0))
}

/// One person-day of raw tracker output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub subject_id: String,
    pub date: NaiveDate,
    pub steps: u64,
}

impl StepRecord {
    pub fn new(subject_id: impl Into<String>, date: NaiveDate, steps: u64) -> Self {
        Self {
            subject_id: subject_id.into(),
            date,
            steps,
        }
    }
}

/// Output of [`load_records`].
#[derive(Debug, Clone, Default)]
pub struct RecordSet {
    pub records: Vec<StepRecord>,
    /// (subject, date) of every line whose steps field was empty.
    pub unrecorded: Vec<(String, NaiveDate)>,
}

impl RecordSet {
    /// Number of distinct (subject, ISO week) pairs touched by any input line,
    /// recorded or not. This is the week count before empty-week deletion.
    pub fn distinct_weeks(&self) -> usize {
        self.records
            .iter()
            .map(|r| (r.subject_id.as_str(), IsoWeek::of(r.date)))
            .chain(self.unrecorded.iter().map(|(s, d)| (s.as_str(), IsoWeek::of(*d))))
            .collect::<BTreeSet<_>>()
            .len()
    }
}

/// Parses the step-record CSV. Lines with an empty steps field are not
/// returned as records; they are listed in [`RecordSet::unrecorded`].
pub fn load_records<R: Read>(source: R) -> Result<RecordSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut rows = reader.records();

    match rows.next() {
        None => return Err(Error::Parse { line: 1, message: "missing header".into() }),
        Some(header) => {
            let header = header?;
            if header.iter().ne(RECORD_HEADER) {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header `{}`", RECORD_HEADER.join(",")),
                });
            }
        }
    }

    let mut out = RecordSet::default();
    let mut seen: HashMap<(String, NaiveDate), usize> = HashMap::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if row.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", row.len()),
            });
        }
        let subject_id = row[0].to_string();
        if subject_id.is_empty() {
            return Err(Error::Parse { line, message: "empty subject_id".into() });
        }
        let date = NaiveDate::parse_from_str(&row[1], "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            message: format!("invalid date `{}`: {e}", &row[1]),
        })?;
        if let Some(first) = seen.insert((subject_id.clone(), date), line) {
            return Err(Error::Data {
                line: Some(line),
                message: format!("duplicate date {date} for subject `{subject_id}` (first seen on line {first})"),
            });
        }
        let steps_field = &row[2];
        if steps_field.is_empty() {
            out.unrecorded.push((subject_id, date));
            continue;
        }
        let steps: i64 = steps_field.parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid step count `{steps_field}`"),
        })?;
        if steps < 0 {
            return Err(Error::Data {
                line: Some(line),
                message: format!("negative step count {steps}"),
            });
        }
        out.records.push(StepRecord::new(subject_id, date, steps as u64));
    }
    Ok(out)
}

/// ISO-8601 week identifier, rendered as `YYYY-Www`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IsoWeek {
    pub year: i32,
    pub week: u32,
}

impl IsoWeek {
    pub fn of(date: NaiveDate) -> Self {
        let w = date.iso_week();
        Self { year: w.year(), week: w.week() }
    }
}

impl fmt::Display for IsoWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-W{:02}", self.year, self.week)
    }
}

impl FromStr for IsoWeek {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let bad = || format!("invalid ISO week `{s}` (expected YYYY-Www)");
        let (year, week) = s.split_once("-W").ok_or_else(bad)?;
        let year: i32 = year.parse().map_err(|_| bad())?;
        let week: u32 = week.parse().map_err(|_| bad())?;
        NaiveDate::from_isoywd_opt(year, week, chrono::Weekday::Mon).ok_or_else(bad)?;
        Ok(Self { year, week })
    }
}

/// One week instance of one subject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeekRow {
    pub subject_id: String,
    pub week: IsoWeek,
    /// Usage bits, Monday first.
    pub values: [u8; DAYS_PER_WEEK],
    /// Per-day provenance: `true` where a step count was recorded. `None` when
    /// the row was read back from an exported matrix, which does not carry it.
    pub recorded: Option<[bool; DAYS_PER_WEEK]>,
}

/// Binary usage dataset: one row per retained week, seven weekday columns.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeekMatrix {
    pub rows: Vec<WeekRow>,
}

/// Groups records by (subject, ISO week) and dichotomizes them. Rows come out
/// sorted by (subject, week); weeks with no recorded day cannot occur because
/// every row is created by at least one record.
pub fn assemble_weeks(records: &[StepRecord]) -> Result<WeekMatrix> {
    let mut weeks: BTreeMap<(&str, IsoWeek), ([u8; 7], [bool; 7])> = BTreeMap::new();
    for r in records {
        let day = r.date.weekday().num_days_from_monday() as usize;
        let entry = weeks
            .entry((r.subject_id.as_str(), IsoWeek::of(r.date)))
            .or_insert(([0; 7], [false; 7]));
        if entry.1[day] {
            return Err(Error::data(format!(
                "duplicate date {} for subject `{}`",
                r.date, r.subject_id
            )));
        }
        entry.0[day] = u8::from(r.steps > 0);
        entry.1[day] = true;
    }
    let rows = weeks
        .into_iter()
        .filter(|(_, (_, recorded))| recorded.iter().any(|&x| x))
        .map(|((subject, week), (values, recorded))| WeekRow {
            subject_id: subject.to_string(),
            week,
            values,
            recorded: Some(recorded),
        })
        .collect();
    Ok(WeekMatrix { rows })
}

impl WeekMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Builds an anonymous matrix from bare usage vectors (used for synthetic data).
    pub fn from_values(values: impl IntoIterator<Item = [u8; DAYS_PER_WEEK]>) -> Self {
        let rows = values
            .into_iter()
            .enumerate()
            .map(|(i, values)| WeekRow {
                subject_id: "synthetic".into(),
                week: IsoWeek { year: 2000 + (i / 52) as i32, week: (i % 52) as u32 + 1 },
                values,
                recorded: None,
            })
            .collect();
        Self { rows }
    }

    /// Rows × 7 matrix of 0.0/1.0 values, the form the models consume.
    pub fn to_array(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.rows.len(), DAYS_PER_WEEK), |(r, c)| {
            f64::from(self.rows[r].values[c])
        })
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(MATRIX_HEADER)?;
        for row in &self.rows {
            let mut fields = vec![row.subject_id.clone(), row.week.to_string()];
            fields.extend(row.values.iter().map(|v| v.to_string()));
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(source);
        let mut records = reader.records();
        match records.next() {
            Some(h) if h.as_ref().is_ok_and(|h| h.iter().eq(MATRIX_HEADER)) => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header `{}`", MATRIX_HEADER.join(",")),
                })
            }
        }
        let mut rows = Vec::new();
        for rec in records {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != MATRIX_HEADER.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", MATRIX_HEADER.len(), rec.len()),
                });
            }
            let week = rec[1].parse().map_err(|message| Error::Parse { line, message })?;
            let mut values = [0u8; DAYS_PER_WEEK];
            for (d, v) in values.iter_mut().enumerate() {
                *v = match &rec[2 + d] {
                    "0" => 0,
                    "1" => 1,
                    other => {
                        return Err(Error::Parse {
                            line,
                            message: format!("usage value `{other}` is not 0 or 1"),
                        })
                    }
                };
            }
            rows.push(WeekRow { subject_id: rec[0].to_string(), week, values, recorded: None });
        }
        Ok(Self { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn dichotomize_examples() {
        assert_eq!(dichotomize(0).unwrap(), 0);
        assert_eq!(dichotomize(3500).unwrap(), 1);
        assert_eq!(dichotomize(1).unwrap(), 1);
        assert!(matches!(dichotomize(-1), Err(Error::Data { .. })));
    }

    #[test]
    fn dichotomize_is_idempotent() {
        for x in [0, 1, 2, 99, 100_000] {
            let once = dichotomize(x).unwrap();
            assert_eq!(dichotomize(i64::from(once)).unwrap(), once);
        }
    }

    #[test]
    fn load_records_maps_fields() {
        let csv = "subject_id,date,steps\nu1,2018-01-01,4200\nu1,2018-01-02,0\nu1,2018-01-03,\n";
        let set = load_records(csv.as_bytes()).unwrap();
        assert_eq!(
            set.records,
            vec![
                StepRecord::new("u1", date("2018-01-01"), 4200),
                StepRecord::new("u1", date("2018-01-02"), 0),
            ]
        );
        assert_eq!(set.unrecorded, vec![("u1".to_string(), date("2018-01-03"))]);
    }

    #[test]
    fn load_records_rejects_bad_month_with_line() {
        let csv = "subject_id,date,steps\nu1,2018-01-01,1\nu1,2018-13-01,5\n";
        match load_records(csv.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_records_rejects_negative_steps_with_line() {
        let csv = "subject_id,date,steps\nu1,2018-01-01,-4\n";
        match load_records(csv.as_bytes()) {
            Err(Error::Data { line, .. }) => assert_eq!(line, Some(2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_records_rejects_duplicates_and_missing_header() {
        let dup = "subject_id,date,steps\nu1,2018-01-01,1\nu1,2018-01-01,2\n";
        let err = load_records(dup.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(load_records("a,b,c\n".as_bytes()).is_err());
        assert!(load_records("".as_bytes()).is_err());
    }

    #[test]
    fn single_monday_week() {
        // 2018-01-01 is a Monday.
        let m = assemble_weeks(&[StepRecord::new("u1", date("2018-01-01"), 500)]).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.rows[0].values, [1, 0, 0, 0, 0, 0, 0]);
        assert_eq!(
            m.rows[0].recorded,
            Some([true, false, false, false, false, false, false])
        );
        assert_eq!(m.rows[0].week.to_string(), "2018-W01");
    }

    #[test]
    fn all_empty_week_is_deleted() {
        let csv = "subject_id,date,steps\nu1,2018-01-01,\nu1,2018-01-02,\n";
        let set = load_records(csv.as_bytes()).unwrap();
        assert_eq!(set.distinct_weeks(), 1);
        let m = assemble_weeks(&set.records).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn full_week_of_ones() {
        let records: Vec<_> = (1..=7)
            .map(|d| StepRecord::new("u1", date(&format!("2018-01-0{d}")), 10 * d))
            .collect();
        let m = assemble_weeks(&records).unwrap();
        assert_eq!(m.rows[0].values, [1; 7]);
    }

    #[test]
    fn duplicate_records_rejected() {
        let r = StepRecord::new("u1", date("2018-01-01"), 1);
        assert!(assemble_weeks(&[r.clone(), r]).is_err());
    }

    #[test]
    fn matrix_csv_round_trip() {
        let records = vec![
            StepRecord::new("u2", date("2018-01-03"), 0),
            StepRecord::new("u1", date("2018-12-31"), 9),
        ];
        let m = assemble_weeks(&records).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "subject_id,iso_week,mon,tue,wed,thu,fri,sat,sun\n\
             u1,2019-W01,1,0,0,0,0,0,0\n\
             u2,2018-W01,0,0,0,0,0,0,0\n"
        );
        let back = WeekMatrix::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.rows.len(), 2);
        assert_eq!(back.rows[0].values, m.rows[0].values);
        assert_eq!(back.rows[1].week, m.rows[1].week);
    }

    #[test]
    fn read_csv_rejects_non_binary() {
        let text = "subject_id,iso_week,mon,tue,wed,thu,fri,sat,sun\nu,2018-W01,2,0,0,0,0,0,0\n";
        assert!(matches!(
            WeekMatrix::read_csv(text.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
