//! Data model and CSV ingestion for isolated application resource profiles.
//!
//! A profile is the per-resource utilization vector of an application running
//! alone, normalized to `[0, 1]` against configured capacity bounds. The
//! dataset is the set of all profiled applications sharing one resource
//! space.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered resource dimensions, their normalization bounds, and the subset
/// used for design-of-experiments stress targeting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceSpace {
    pub names: Vec<String>,
    pub bounds: Vec<f64>,
    pub stress_dims: Vec<String>,
}

impl ResourceSpace {
    pub fn new(names: Vec<String>, bounds: Vec<f64>, stress_dims: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidSpace("no resources defined".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for n in &names {
            if n.is_empty() {
                return Err(Error::InvalidSpace("empty resource name".into()));
            }
            if !seen.insert(n.clone()) {
                return Err(Error::InvalidSpace(format!("duplicate resource `{n}`")));
            }
        }
        if bounds.len() != names.len() {
            return Err(Error::InvalidSpace(format!(
                "{} bounds for {} resources",
                bounds.len(),
                names.len()
            )));
        }
        if let Some(b) = bounds.iter().find(|b| !(**b > 0.0)) {
            return Err(Error::InvalidSpace(format!("bound {b} is not positive")));
        }
        if stress_dims.is_empty() || stress_dims.len() > names.len() {
            return Err(Error::InvalidSpace(format!(
                "{} stress dims for {} resources",
                stress_dims.len(),
                names.len()
            )));
        }
        for d in &stress_dims {
            if !names.contains(d) {
                return Err(Error::InvalidSpace(format!("unknown stress dim `{d}`")));
            }
        }
        Ok(Self {
            names,
            bounds,
            stress_dims,
        })
    }

    /// Number of resources R.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Indices of the stress dimensions within the full resource order.
    pub fn stress_indices(&self) -> Vec<usize> {
        self.stress_dims
            .iter()
            .map(|d| self.index_of(d).expect("validated at construction"))
            .collect()
    }

    /// Restricts a full-length utilization vector to the stress dimensions.
    pub fn restrict_to_stress(&self, full: &[f64]) -> Result<Vec<f64>> {
        if full.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: full.len(),
            });
        }
        Ok(self.stress_indices().iter().map(|&i| full[i]).collect())
    }
}

/// Isolated utilization vector of one application, components in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationProfile {
    pub app_id: String,
    pub utilization: Vec<f64>,
}

/// A raw value that fell outside `[0, bound]` during ingestion and was
/// clamped. Kept as ingestion metadata so validation can report it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClampEvent {
    pub row: usize,
    pub app_id: String,
    pub column: String,
    pub raw: f64,
}

/// All profiles sharing one resource space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileDataset {
    pub space: ResourceSpace,
    pub profiles: Vec<ApplicationProfile>,
    /// Pre-clamp out-of-range observations from ingestion. Not part of
    /// dataset identity; two loads of equivalent data compare equal even if
    /// one was clamped on the way in.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clamp_events: Vec<ClampEvent>,
}

impl PartialEq for ProfileDataset {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.profiles == other.profiles
    }
}

impl ProfileDataset {
    pub fn get(&self, app_id: &str) -> Option<&ApplicationProfile> {
        self.profiles.iter().find(|p| p.app_id == app_id)
    }

    /// Map from app_id to profile for repeated lookups.
    pub fn by_id(&self) -> BTreeMap<&str, &ApplicationProfile> {
        self.profiles
            .iter()
            .map(|p| (p.app_id.as_str(), p))
            .collect()
    }
}

/// Report-only findings about a dataset: nothing here rejects data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub out_of_range: Vec<ClampEvent>,
    pub constant_columns: Vec<String>,
    pub duplicate_vectors: Vec<(String, String)>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.out_of_range.is_empty()
            && self.constant_columns.is_empty()
            && self.duplicate_vectors.is_empty()
    }
}

/// Loads a profile CSV (`app_id,<resource>,...` header, UTF-8, decimal
/// point). Raw values are divided by the per-resource bound and clamped to
/// `[0, 1]`; row order is preserved.
pub fn load_profiles(path: &Path, space: &ResourceSpace) -> Result<ProfileDataset> {
    let file = std::fs::File::open(path)?;
    load_profiles_from_reader(file, space)
}

pub fn load_profiles_from_reader<R: Read>(reader: R, space: &ResourceSpace) -> Result<ProfileDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col_of = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id_col = col_of("app_id")?;
    let resource_cols: Vec<usize> = space
        .names
        .iter()
        .map(|n| col_of(n))
        .collect::<Result<_>>()?;

    let mut profiles = Vec::new();
    let mut clamp_events = Vec::new();
    let mut seen = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 2; // 1-based, after the header row
        let app_id = record
            .get(id_col)
            .unwrap_or_default()
            .trim()
            .to_string();
        if let Some(&first) = seen.get(&app_id) {
            return Err(Error::DuplicateAppId {
                app_id,
                row: first,
            });
        }
        seen.insert(app_id.clone(), row);

        let mut utilization = Vec::with_capacity(space.len());
        for (r, &col) in resource_cols.iter().enumerate() {
            let cell = record.get(col).unwrap_or_default().trim();
            let raw: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row,
                column: space.names[r].clone(),
                value: cell.to_string(),
            })?;
            let normalized = raw / space.bounds[r];
            if !(0.0..=1.0).contains(&normalized) {
                clamp_events.push(ClampEvent {
                    row,
                    app_id: app_id.clone(),
                    column: space.names[r].clone(),
                    raw,
                });
            }
            utilization.push(normalized.clamp(0.0, 1.0));
        }
        profiles.push(ApplicationProfile { app_id, utilization });
    }
    if profiles.is_empty() {
        return Err(Error::EmptyProfileFile);
    }
    Ok(ProfileDataset {
        space: space.clone(),
        profiles,
        clamp_events,
    })
}

/// Writes a dataset back out in the ingestion format. Values are written
/// de-normalized against the bounds, so `load_profiles` on the output
/// recovers the same dataset.
pub fn write_profiles<W: std::io::Write>(writer: W, ds: &ProfileDataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["app_id".to_string()];
    header.extend(ds.space.names.iter().cloned());
    wtr.write_record(&header)?;
    for p in &ds.profiles {
        let mut rec = vec![p.app_id.clone()];
        for (r, u) in p.utilization.iter().enumerate() {
            rec.push(format!("{}", u * ds.space.bounds[r]));
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_profiles_to_path(path: &Path, ds: &ProfileDataset) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_profiles(file, ds)
}

/// Report-only dataset checks: pre-clamp range violations, constant
/// columns, and duplicate utilization vectors under distinct ids.
pub fn validate(ds: &ProfileDataset) -> ValidationReport {
    let mut report = ValidationReport {
        out_of_range: ds.clamp_events.clone(),
        ..Default::default()
    };
    for r in 0..ds.space.len() {
        let mut values = ds.profiles.iter().map(|p| p.utilization[r]);
        if let Some(first) = values.next() {
            if values.all(|v| v == first) {
                report.constant_columns.push(ds.space.names[r].clone());
            }
        }
    }
    for i in 0..ds.profiles.len() {
        for j in (i + 1)..ds.profiles.len() {
            if ds.profiles[i].utilization == ds.profiles[j].utilization {
                report.duplicate_vectors.push((
                    ds.profiles[i].app_id.clone(),
                    ds.profiles[j].app_id.clone(),
                ));
            }
        }
    }
    report
}

/// Component-wise sum of utilization vectors. Deliberately not clamped:
/// co-location demand can exceed capacity, and the stressor model consumes
/// the raw sum. An empty input yields the zero vector.
pub fn summed_utilization<'a, I>(r: usize, profiles: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a ApplicationProfile>,
{
    let mut sum = vec![0.0; r];
    for p in profiles {
        debug_assert_eq!(p.utilization.len(), r);
        for (s, u) in sum.iter_mut().zip(&p.utilization) {
            *s += u;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn space3() -> ResourceSpace {
        ResourceSpace::new(
            vec!["CPU".into(), "MEM_BW".into(), "DISK".into()],
            vec![1600.0, 100.0, 1.0],
            vec!["CPU".into(), "MEM_BW".into()],
        )
        .unwrap()
    }

    fn load(csv: &str, space: &ResourceSpace) -> Result<ProfileDataset> {
        load_profiles_from_reader(csv.as_bytes(), space)
    }

    #[test]
    fn loads_and_normalizes() {
        let ds = load(
            "app_id,CPU,MEM_BW,DISK\na,800,50,0.25\nb,1600,100,1.0\n",
            &space3(),
        )
        .unwrap();
        assert_eq!(ds.profiles.len(), 2);
        assert_eq!(ds.profiles[0].app_id, "a");
        assert_eq!(ds.profiles[0].utilization, vec![0.5, 0.5, 0.25]);
        assert_eq!(ds.profiles[1].utilization, vec![1.0, 1.0, 1.0]);
        assert!(ds.clamp_events.is_empty());
    }

    #[test]
    fn column_order_is_free_but_names_required() {
        let ds = load(
            "MEM_BW,app_id,DISK,CPU\n50,a,0.5,800\n",
            &space3(),
        )
        .unwrap();
        assert_eq!(ds.profiles[0].utilization, vec![0.5, 0.5, 0.5]);

        let err = load("app_id,CPU,DISK\na,1,1\n", &space3()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "MEM_BW"));
    }

    #[test]
    fn zero_row_is_a_zero_vector() {
        let ds = load("app_id,CPU,MEM_BW,DISK\nz,0,0,0\n", &space3()).unwrap();
        assert_eq!(ds.profiles[0].utilization, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn many_rows_many_columns() {
        let names: Vec<String> = (0..8).map(|i| format!("R{i}")).collect();
        let space = ResourceSpace::new(names.clone(), vec![1.0; 8], vec!["R0".into()]).unwrap();
        let mut csv = format!("app_id,{}\n", names.join(","));
        for i in 0..106 {
            csv.push_str(&format!("app-{i:03},{}\n", vec!["0.5"; 8].join(",")));
        }
        let ds = load(&csv, &space).unwrap();
        assert_eq!(ds.profiles.len(), 106);
    }

    #[test]
    fn error_locations_are_reported() {
        let err = load("app_id,CPU,MEM_BW,DISK\na,1,x,1\n", &space3()).unwrap_err();
        match err {
            Error::NonNumericCell { row, column, value } => {
                assert_eq!(row, 2);
                assert_eq!(column, "MEM_BW");
                assert_eq!(value, "x");
            }
            other => panic!("unexpected error {other:?}"),
        }

        let err = load(
            "app_id,CPU,MEM_BW,DISK\na,1,1,1\na,2,2,2\n",
            &space3(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateAppId { app_id, .. } if app_id == "a"));

        let err = load("app_id,CPU,MEM_BW,DISK\n", &space3()).unwrap_err();
        assert!(matches!(err, Error::EmptyProfileFile));
    }

    #[test]
    fn out_of_range_values_clamp_and_flag() {
        let ds = load(
            "app_id,CPU,MEM_BW,DISK\na,2080,130,-0.5\n",
            &space3(),
        )
        .unwrap();
        assert_eq!(ds.profiles[0].utilization, vec![1.0, 1.0, 0.0]);
        let report = validate(&ds);
        assert_eq!(report.out_of_range.len(), 3);
        assert_eq!(report.out_of_range[0].column, "CPU");
        assert_eq!(report.out_of_range[0].raw, 2080.0);
    }

    #[test]
    fn validate_clean_and_duplicates() {
        let ds = load(
            "app_id,CPU,MEM_BW,DISK\na,800,10,0.5\nb,400,20,0.25\n",
            &space3(),
        )
        .unwrap();
        assert!(validate(&ds).is_clean());

        let ds = load(
            "app_id,CPU,MEM_BW,DISK\na,800,10,0.5\nb,800,10,0.5\n",
            &space3(),
        )
        .unwrap();
        let report = validate(&ds);
        assert_eq!(report.duplicate_vectors, vec![("a".into(), "b".into())]);
    }

    #[test]
    fn validate_constant_columns() {
        let ds = load(
            "app_id,CPU,MEM_BW,DISK\na,800,10,0.5\nb,800,20,0.25\n",
            &space3(),
        )
        .unwrap();
        assert_eq!(validate(&ds).constant_columns, vec!["CPU".to_string()]);
    }

    #[test]
    fn summed_utilization_cases() {
        let a = ApplicationProfile {
            app_id: "a".into(),
            utilization: vec![0.6, 0.2],
        };
        let b = ApplicationProfile {
            app_id: "b".into(),
            utilization: vec![0.6, 0.2],
        };
        assert_eq!(summed_utilization(2, [&a, &b]), vec![1.2, 0.4]);
        assert_eq!(summed_utilization(2, [&a]), a.utilization);
        assert_eq!(summed_utilization(2, []), vec![0.0, 0.0]);
        // Input is a multiset: order cannot matter.
        assert_eq!(summed_utilization(2, [&a, &b]), summed_utilization(2, [&b, &a]));
    }

    #[test]
    fn round_trips_through_serialization() {
        let ds = load(
            "app_id,CPU,MEM_BW,DISK\na,800,10,0.5\nb,423.7,99.99,0.125\n",
            &space3(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_profiles(&mut buf, &ds).unwrap();
        let reloaded = load_profiles_from_reader(buf.as_slice(), &space3()).unwrap();
        assert_eq!(ds, reloaded);
    }

    #[test]
    fn normalization_is_idempotent() {
        // A dataset written with unit bounds re-loads unchanged.
        let unit = ResourceSpace::new(
            vec!["CPU".into(), "MEM_BW".into()],
            vec![1.0, 1.0],
            vec!["CPU".into()],
        )
        .unwrap();
        let ds = load_profiles_from_reader("app_id,CPU,MEM_BW\na,0.25,0.75\n".as_bytes(), &unit).unwrap();
        let mut buf = Vec::new();
        write_profiles(&mut buf, &ds).unwrap();
        let again = load_profiles_from_reader(buf.as_slice(), &unit).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn space_invariants_enforced() {
        assert!(ResourceSpace::new(vec![], vec![], vec![]).is_err());
        assert!(ResourceSpace::new(
            vec!["A".into(), "A".into()],
            vec![1.0, 1.0],
            vec!["A".into()]
        )
        .is_err());
        assert!(ResourceSpace::new(vec!["A".into()], vec![0.0], vec!["A".into()]).is_err());
        assert!(ResourceSpace::new(vec!["A".into()], vec![1.0], vec!["B".into()]).is_err());
    }
}
