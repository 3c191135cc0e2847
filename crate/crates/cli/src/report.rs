//! Machine-readable run reports: a versioned JSON document on stdout,
//! with optional CSV files for the tabular sections.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Echo of the parameters a command ran with; fields a command does not
/// take are `null`.
#[derive(Serialize)]
pub struct ConfigEcho {
    pub d: Option<usize>,
    pub q: Option<f64>,
    pub n_max: Option<usize>,
    pub tol: f64,
}

/// One named check: the measured value, the threshold it was held
/// against, and the verdict. The comparison direction is baked into
/// `pass`.
#[derive(Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            threshold,
            pass: value >= threshold,
        }
    }

    pub fn strictly_below(name: &str, value: f64, threshold: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            threshold,
            pass: value < threshold,
        }
    }
}

#[derive(Serialize)]
pub struct SpectrumRow {
    pub n: usize,
    pub alpha: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub contraction_factor: Option<f64>,
    pub iterate_distance: Option<f64>,
}

#[derive(Serialize)]
pub struct SweepRow {
    pub q: f64,
    pub n_max: usize,
    pub min_alpha: f64,
    pub threshold: f64,
    pub margin: f64,
    pub verdict: qfock::Verdict,
    pub trend: qfock::Trend,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

#[derive(Serialize)]
pub struct BenchMode {
    pub mode: String,
    pub wall_seconds: f64,
    pub peak_dim: usize,
    pub entries_touched: u64,
    pub alphas: Vec<f64>,
}

#[derive(Serialize)]
pub struct BoundSection {
    pub terms: usize,
    pub root: f64,
    pub margin_at_root: f64,
}

#[derive(Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub config: ConfigEcho,
    pub checks: Vec<Check>,
    /// Wall time per phase, in seconds.
    pub timing: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<SpectrumRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bench: Option<Vec<BenchMode>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_files: Option<Vec<String>>,
}

impl RunReport {
    pub fn new(command: &str, config: ConfigEcho) -> RunReport {
        RunReport {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            checks: Vec::new(),
            timing: BTreeMap::new(),
            spectrum: None,
            sweep: None,
            bound: None,
            bench: None,
            table_files: None,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Moves the spectrum rows out of the report into `<dir>/spectrum.csv`.
pub fn spectrum_to_csv(report: &mut RunReport, dir: &Path) -> std::io::Result<()> {
    let Some(rows) = report.spectrum.take() else {
        return Ok(());
    };
    let path = dir.join("spectrum.csv");
    let mut file = fs::File::create(&path)?;
    writeln!(
        file,
        "n,alpha,lower_bound,upper_bound,contraction_factor,iterate_distance"
    )?;
    for r in rows {
        writeln!(
            file,
            "{},{:e},{:e},{:e},{},{}",
            r.n,
            r.alpha,
            r.lower_bound,
            r.upper_bound,
            opt(r.contraction_factor),
            opt(r.iterate_distance)
        )?;
    }
    note_table(report, &path);
    Ok(())
}

/// Moves the sweep rows out of the report into `<dir>/sweep.csv`.
pub fn sweep_to_csv(report: &mut RunReport, dir: &Path) -> std::io::Result<()> {
    let Some(rows) = report.sweep.take() else {
        return Ok(());
    };
    let path = dir.join("sweep.csv");
    let mut file = fs::File::create(&path)?;
    writeln!(
        file,
        "q,n_max,min_alpha,threshold,margin,verdict,trend,lower_bound,upper_bound"
    )?;
    for r in rows {
        writeln!(
            file,
            "{:e},{},{:e},{:e},{:e},{},{},{:e},{:e}",
            r.q,
            r.n_max,
            r.min_alpha,
            r.threshold,
            r.margin,
            serde_plain(&r.verdict),
            serde_plain(&r.trend),
            r.lower_bound,
            r.upper_bound
        )?;
    }
    note_table(report, &path);
    Ok(())
}

/// Moves the per-mode bench tables into `<dir>/bench.csv`.
pub fn bench_to_csv(report: &mut RunReport, dir: &Path) -> std::io::Result<()> {
    let Some(modes) = report.bench.take() else {
        return Ok(());
    };
    let path = dir.join("bench.csv");
    let mut file = fs::File::create(&path)?;
    writeln!(file, "mode,n,alpha,wall_seconds,peak_dim,entries_touched")?;
    for m in &modes {
        for (k, alpha) in m.alphas.iter().enumerate() {
            writeln!(
                file,
                "{},{},{:e},{:e},{},{}",
                m.mode,
                k + 1,
                alpha,
                m.wall_seconds,
                m.peak_dim,
                m.entries_touched
            )?;
        }
    }
    note_table(report, &path);
    Ok(())
}

fn note_table(report: &mut RunReport, path: &Path) {
    report
        .table_files
        .get_or_insert_with(Vec::new)
        .push(path.display().to_string());
}

fn serde_plain<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .expect("serializes")
        .as_str()
        .expect("plain string variant")
        .to_string()
}
