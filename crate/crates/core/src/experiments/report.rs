//! Report files: RFC-4180 CSV series, JSON summaries and gnuplot scripts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::loss::LossRateFit;
use super::suite::{EnergyRecord, VerifyReport};
use crate::error::{Error, Result};

pub const LOSS_CSV: &str = "loss_rate.csv";
pub const ENERGY_CSV: &str = "energy.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub t: f64,
    pub k0: i64,
    pub sigma_star: f64,
    pub series: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub case: String,
    pub t: f64,
    pub s: f64,
    pub u: f64,
    pub u_t: f64,
    pub u_half: f64,
    pub u_t_half: f64,
    pub f1: f64,
    pub f2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LossSummary {
    series: String,
    family: String,
    params: std::collections::BTreeMap<String, f64>,
    frequencies: Vec<i64>,
    lambda_emp: f64,
    fit_residual: f64,
    inconclusive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct EnergySummary {
    case: String,
    lambda: f64,
    gamma: f64,
    t_end: f64,
    lhs: f64,
    rhs: f64,
    k_emp: Option<f64>,
}

/// Everything a report directory can hold.
#[derive(Clone, Debug, Default)]
pub struct ReportInputs<'a> {
    pub verify: Option<&'a VerifyReport>,
    pub loss: &'a [LossRateFit],
    pub energy: &'a [EnergyRecord],
}

/// Series label of a fit: the family id plus its amplitude when it has one.
pub fn series_label(fit: &LossRateFit) -> String {
    match fit.params.get("A") {
        Some(a) if fit.family != "constant" => format!("{}.A{a}", fit.family),
        _ => fit.family.clone(),
    }
}

pub fn loss_rows(fits: &[LossRateFit]) -> Vec<LossRow> {
    let mut rows = Vec::new();
    for fit in fits {
        let series = series_label(fit);
        for (k0, sig) in fit.frequencies.iter().zip(&fit.blowup_times) {
            for (t, s) in fit.times.iter().zip(sig) {
                rows.push(LossRow { t: *t, k0: *k0, sigma_star: *s, series: series.clone() });
            }
        }
    }
    rows
}

pub fn energy_rows(records: &[EnergyRecord]) -> Vec<EnergyRow> {
    records
        .iter()
        .flat_map(|r| {
            r.trace.samples.iter().map(move |s| EnergyRow {
                case: r.case.clone(),
                t: s.t,
                s: s.s,
                u: s.u,
                u_t: s.u_t,
                u_half: s.u_half,
                u_t_half: s.u_t_half,
                f1: s.f1,
                f2: s.f2,
            })
        })
        .collect()
}

const LOSS_HEADER: [&str; 4] = ["t", "k0", "sigma_star", "series"];
const ENERGY_HEADER: [&str; 9] = ["case", "t", "s", "u", "u_t", "u_half", "u_t_half", "f1", "f2"];

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let io = |e: csv::Error| Error::format(path, e);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| Error::format(path, e))).collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

fn loss_script(fits: &[LossRateFit]) -> String {
    let mut s = String::from(
        "set datafile separator ','\nset key outside\nset xlabel 't'\nset ylabel 'sigma*(t)'\n\
         set terminal pngcairo size 1000,600\nset output 'loss_rate.png'\n",
    );
    let mut plots = Vec::new();
    for fit in fits {
        let label = series_label(fit);
        for k in &fit.frequencies {
            plots.push(format!(
                "'{LOSS_CSV}' using ($2=={k} && strcol(4) eq '{label}' ? $1 : 1/0):3 with lines title '{label} k0={k}'"
            ));
        }
    }
    if plots.is_empty() {
        plots.push(format!("'{LOSS_CSV}' using 1:3 with points title 'sigma*'"));
    }
    s.push_str("plot ");
    s.push_str(&plots.join(", \\\n     "));
    s.push('\n');
    s
}

fn energy_script(records: &[EnergyRecord]) -> String {
    let mut s = String::from(
        "set datafile separator ','\nset key outside\nset xlabel 't'\nset ylabel 'weighted norm'\nset logscale y\n\
         set terminal pngcairo size 1000,600\nset output 'energy.png'\n",
    );
    let mut plots = Vec::new();
    for r in records {
        let c = &r.case;
        plots.push(format!("'{ENERGY_CSV}' using (strcol(1) eq '{c}' ? $2 : 1/0):4 with lines title '{c} |u|'"));
        plots.push(format!("'{ENERGY_CSV}' using (strcol(1) eq '{c}' ? $2 : 1/0):5 with lines title '{c} |u_t|'"));
    }
    if plots.is_empty() {
        plots.push(format!("'{ENERGY_CSV}' using 2:4 with points title '|u|'"));
    }
    s.push_str("plot ");
    s.push_str(&plots.join(", \\\n     "));
    s.push('\n');
    s
}

/// Writes the report files into `out_dir` and returns their paths in writing order. Output
/// depends only on the inputs.
pub fn emit_report(inputs: &ReportInputs<'_>, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut out = |name: &str| {
        let p = out_dir.join(name);
        written.push(p.clone());
        p
    };
    write_csv(&out(LOSS_CSV), &LOSS_HEADER, &loss_rows(inputs.loss))?;
    write_csv(&out(ENERGY_CSV), &ENERGY_HEADER, &energy_rows(inputs.energy))?;
    let loss: Vec<LossSummary> = inputs
        .loss
        .iter()
        .map(|f| LossSummary {
            series: series_label(f),
            family: f.family.clone(),
            params: f.params.clone(),
            frequencies: f.frequencies.clone(),
            lambda_emp: f.lambda_emp,
            fit_residual: f.fit_residual,
            inconclusive: f.inconclusive,
        })
        .collect();
    write_json(&out("loss_rate.json"), &loss)?;
    let energy: Vec<EnergySummary> = inputs
        .energy
        .iter()
        .map(|r| EnergySummary {
            case: r.case.clone(),
            lambda: r.lambda,
            gamma: r.trace.params.gamma,
            t_end: r.trace.t_end,
            lhs: r.trace.lhs,
            rhs: r.trace.rhs,
            k_emp: r.trace.k_emp,
        })
        .collect();
    write_json(&out("energy.json"), &energy)?;
    write_text(&out("loss_rate.gp"), &loss_script(inputs.loss))?;
    write_text(&out("energy.gp"), &energy_script(inputs.energy))?;
    if let Some(v) = inputs.verify {
        write_json(&out("verify.json"), v)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{EnergyParams, EnergySample, EnergyTrace};
    use std::collections::BTreeMap;

    fn fit() -> LossRateFit {
        LossRateFit {
            family: "cgs_oscillatory".into(),
            params: BTreeMap::from([("A".to_string(), 0.5)]),
            frequencies: vec![8, 64],
            times: vec![0.0, 0.1, 0.2],
            blowup_times: vec![vec![2.1, 2.0999999999999996, 1.0 / 3.0], vec![1.5, 1.4, 1.3]],
            intercepts: vec![2.1, 1.5],
            lambda_emp: 0.5,
            fit_residual: 0.01,
            inconclusive: false,
            clamped: false,
        }
    }

    fn record() -> EnergyRecord {
        let params = EnergyParams { theta: 0.4, theta1: 0.6, lambda: 0.1, gamma: 2.0 };
        let sample = |t: f64| EnergySample { t, s: 0.4 + 0.1 * t, u: 1.0 / 7.0, u_t: 2.0, u_half: 3.0, u_t_half: 4.0, f1: 0.0, f2: 1e-300 };
        EnergyRecord {
            case: "with, comma \"quoted\"".into(),
            lambda: 0.1,
            trace: EnergyTrace { params, t_end: 1.0, samples: vec![sample(0.0), sample(0.5)], lhs: 1.0, rhs: 2.0, k_emp: Some(0.5) },
        }
    }

    #[test]
    fn empty_results_give_header_only_csv() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&ReportInputs::default(), dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(LOSS_CSV)).unwrap();
        assert_eq!(text, "t,k0,sigma_star,series\n");
        assert!(read_csv::<EnergyRow>(&dir.path().join(ENERGY_CSV)).unwrap().is_empty());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let fits = [fit()];
        let records = [record()];
        emit_report(&ReportInputs { verify: None, loss: &fits, energy: &records }, dir.path()).unwrap();
        assert_eq!(read_csv::<LossRow>(&dir.path().join(LOSS_CSV)).unwrap(), loss_rows(&fits));
        assert_eq!(read_csv::<EnergyRow>(&dir.path().join(ENERGY_CSV)).unwrap(), energy_rows(&records));
        let script = fs::read_to_string(dir.path().join("loss_rate.gp")).unwrap();
        assert!(script.contains(LOSS_CSV) && script.contains("cgs_oscillatory.A0.5 k0=64"));
    }

    #[test]
    fn output_is_deterministic() {
        let fits = [fit()];
        let records = [record()];
        let read_all = |dir: &Path| -> Vec<Vec<u8>> {
            let inputs = ReportInputs { verify: None, loss: &fits, energy: &records };
            emit_report(&inputs, dir).unwrap().iter().map(|p| fs::read(p).unwrap()).collect()
        };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert_eq!(read_all(a.path()), read_all(b.path()));
    }

    #[test]
    fn unwritable_directory_reports_its_path() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("occupied");
        fs::write(&file, "x").unwrap();
        let err = emit_report(&ReportInputs::default(), &file.join("sub")).unwrap_err();
        assert!(err.to_string().contains("occupied"), "{err}");
    }
}
