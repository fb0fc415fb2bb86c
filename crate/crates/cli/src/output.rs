use std::fs;
use std::io::{self, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use nopo_lqg::SchemeResult;

/// Rounds to 12 significant digits, the precision of every emitted number.
pub fn round12(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.11e}").parse().expect("formatted float parses")
    } else {
        x
    }
}

pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

/// One row of the curve table. Rates are in units of the cavity linewidth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub chi: f64,
    pub scheme: String,
    pub param_name: String,
    pub param_value: Option<f64>,
    #[serde(rename = "L_bits")]
    pub l_bits: f64,
    #[serde(rename = "S_bits")]
    pub s_bits: f64,
    pub m_cost: f64,
    pub stability_flag: bool,
}

impl Record {
    pub fn from_result(r: &SchemeResult) -> Self {
        let param = r.primary_param();
        Record {
            chi: round12(r.chi),
            scheme: r.scheme.name().to_string(),
            param_name: param.map(|p| p.name.to_string()).unwrap_or_default(),
            param_value: param.map(|p| round12(p.value)),
            l_bits: round12(r.log_negativity),
            s_bits: round12(r.entropy),
            m_cost: round12(r.cost),
            stability_flag: r.stability_margin > 0.0,
        }
    }

    fn csv_fields(&self) -> [String; 8] {
        [
            fmt12(self.chi),
            self.scheme.clone(),
            self.param_name.clone(),
            self.param_value.map(fmt12).unwrap_or_default(),
            fmt12(self.l_bits),
            fmt12(self.s_bits),
            fmt12(self.m_cost),
            self.stability_flag.to_string(),
        ]
    }
}

pub const RECORD_HEADER: [&str; 8] = [
    "chi",
    "scheme",
    "param_name",
    "param_value",
    "L_bits",
    "S_bits",
    "m_cost",
    "stability_flag",
];

/// CSV with a header row, even when `rows` is empty.
pub fn csv_table<I, R>(header: &[&str], rows: I) -> io::Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn records_csv(records: &[Record]) -> io::Result<String> {
    csv_table(&RECORD_HEADER, records.iter().map(Record::csv_fields))
}

pub fn records_text(records: &[Record]) -> String {
    let mut s = format!(
        "{:>19} {:<11} {:<13} {:>19} {:>19} {:>19} {:>19} {}\n",
        "chi", "scheme", "param_name", "param_value", "L_bits", "S_bits", "m_cost", "stable"
    );
    for r in records {
        let f = r.csv_fields();
        s.push_str(&format!(
            "{:>19} {:<11} {:<13} {:>19} {:>19} {:>19} {:>19} {}\n",
            f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7]
        ));
    }
    s
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().map(round12).collect()).collect()
}

pub fn matrix_text(label: &str, m: &DMatrix<f64>) -> String {
    let mut s = format!("{label}\n");
    for row in m.row_iter() {
        let cells: Vec<String> = row
            .iter()
            .map(|&x| format!("{:>13.6}", if x.abs() < 5e-7 { 0.0 } else { x }))
            .collect();
        s.push_str(&format!("  {}\n", cells.join(" ")));
    }
    s
}

pub fn emit(out: Option<&Path>, content: &str) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, content),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            stdout.flush()
        }
    }
}
