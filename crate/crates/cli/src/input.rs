//! CSV readers for observed experiments and potential-outcome tables.

use std::path::Path;

use randex::{ObservedDataset, PotentialOutcomeTable};

use crate::error::{CliError, Result};

/// An observed experiment together with the original treatment labels,
/// where arm `j` (zero-based) carries `labels[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub data: ObservedDataset,
    pub labels: Vec<String>,
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn parse_number(field: &str, row: usize, what: &str) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(CliError::parse(row, format!("{what} `{field}` is not finite"))),
        Err(_) => Err(CliError::parse(row, format!("{what} `{field}` is not a number"))),
    }
}

/// Parses `treatment,outcome` data. Labels are arms in order of first
/// appearance.
pub fn parse_dataset(text: &str) -> Result<LabeledDataset> {
    let mut records = reader(text).into_records();
    let header = loop {
        match records.next() {
            None => return Err(CliError::parse(None, "empty input; expected a `treatment,outcome` header")),
            Some(r) => {
                let r = r.map_err(|e| CliError::parse(None, e.to_string()))?;
                if r.iter().all(str::is_empty) {
                    continue;
                }
                break r;
            }
        }
    };
    let names: Vec<String> = header.iter().map(str::to_ascii_lowercase).collect();
    let header_row = header.position().map_or(1, |p| p.line() as usize);
    let find = |name: &str| -> Result<usize> {
        let hits: Vec<usize> = (0..names.len()).filter(|&i| names[i] == name).collect();
        match hits.as_slice() {
            [i] => Ok(*i),
            [] => Err(CliError::parse(header_row, format!("header lacks a `{name}` column"))),
            _ => Err(CliError::parse(header_row, format!("duplicate header column `{name}`"))),
        }
    };
    let (t_col, y_col) = (find("treatment")?, find("outcome")?);
    if names.len() != 2 {
        return Err(CliError::parse(header_row, "header must be exactly `treatment,outcome`"));
    }

    let mut labels: Vec<String> = Vec::new();
    let mut treatments = Vec::new();
    let mut outcomes = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let row = e.position().map(|p| p.line() as usize);
            CliError::parse(row, e.to_string())
        })?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != 2 {
            return Err(CliError::parse(row, format!("expected 2 fields, found {}", rec.len())));
        }
        let lower: Vec<String> = rec.iter().map(str::to_ascii_lowercase).collect();
        if lower == names {
            return Err(CliError::parse(row, "duplicate header"));
        }
        let label = &rec[t_col];
        if label.is_empty() {
            return Err(CliError::parse(row, "empty treatment label"));
        }
        outcomes.push(parse_number(&rec[y_col], row, "outcome")?);
        let arm = match labels.iter().position(|l| l == label) {
            Some(a) => a,
            None => {
                labels.push(label.to_string());
                labels.len() - 1
            }
        };
        treatments.push(arm);
    }
    if labels.len() < 2 {
        return Err(CliError::parse(None, format!("J ≥ 2 required: found {} treatment level(s)", labels.len())));
    }
    let data = ObservedDataset::new(outcomes, treatments)?;
    Ok(LabeledDataset { data, labels })
}

/// Parses a headerless `N × J` matrix of potential outcomes.
pub fn parse_population(text: &str) -> Result<PotentialOutcomeTable> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader(text).into_records() {
        let rec = rec.map_err(|e| CliError::parse(e.position().map(|p| p.line() as usize), e.to_string()))?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let values = rec.iter().map(|f| parse_number(f, row, "value")).collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if values.len() != first.len() {
                return Err(CliError::parse(row, format!("expected {} columns, found {}", first.len(), values.len())));
            }
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(CliError::parse(None, "population file is empty"));
    }
    if rows[0].len() < 2 {
        return Err(CliError::parse(None, "population needs at least two columns"));
    }
    Ok(PotentialOutcomeTable::from_rows(&rows)?)
}

/// Parses `N1,N2,...` group sizes.
pub fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("design size `{}` is not a non-negative integer", s.trim())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_labels_in_first_appearance_order() {
        let text = "treatment,outcome\nssp,1\nctrl,2\r\nssp,3\nsfsp,4.5\nsfp,5\nctrl,6\nsfp,7\nsfsp,8\n";
        let d = parse_dataset(text).unwrap();
        assert_eq!(d.labels, vec!["ssp", "ctrl", "sfsp", "sfp"]);
        assert_eq!(d.data.treatments(), &[0, 1, 0, 2, 3, 1, 3, 2]);
        assert_eq!(d.data.outcomes()[3], 4.5);
    }

    #[test]
    fn reversed_columns_and_bom() {
        let d = parse_dataset("\u{feff}Outcome,Treatment\n1,a\n2,b\n3,a\n").unwrap();
        assert_eq!(d.labels, vec!["a", "b"]);
        assert_eq!(d.data.outcomes(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn errors_carry_rows() {
        let e = parse_dataset("treatment,outcome\na,1\nb,x\n").unwrap_err();
        assert!(matches!(e, CliError::Parse { row: Some(3), .. }), "{e}");
        let e = parse_dataset("treatment,outcome\na,1\ntreatment,outcome\nb,2\n").unwrap_err();
        assert!(matches!(e, CliError::Parse { row: Some(3), .. }), "{e}");
        let e = parse_dataset("treatment,treatment\na,1\n").unwrap_err();
        assert!(e.to_string().contains("duplicate header"), "{e}");
        let e = parse_dataset("treatment,outcome\na,1\na,2\n").unwrap_err();
        assert!(e.to_string().contains("J ≥ 2 required"), "{e}");
        let e = parse_dataset("treatment,outcome\na,1\nb,inf\n").unwrap_err();
        assert!(e.to_string().contains("row 3"), "{e}");
        assert!(parse_dataset("").is_err());
        assert!(parse_dataset("group,y\na,1\n").is_err());
        assert_eq!(e.exit_code(), crate::error::EXIT_INPUT);
    }

    #[test]
    fn population_matrix() {
        let p = parse_population("1,2,3\n4,5,6\n\n7,8,9\n").unwrap();
        assert_eq!((p.units(), p.arms()), (3, 3));
        assert_eq!(p.get(2, 1), 8.0);
        let e = parse_population("1,2\n3\n").unwrap_err();
        assert!(matches!(e, CliError::Parse { row: Some(2), .. }));
        assert!(parse_population("1\n2\n").is_err());
        assert_eq!(parse_sizes("3, 4,5").unwrap(), vec![3, 4, 5]);
        assert!(parse_sizes("3,x").is_err());
    }
}
