//! Output writers and exit-code mapping for the `wavepacket` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use wavepacket::scenario::{Record, ScenarioResults, Task, WignerSnapshot};

pub const TRAJECTORY_HEADER: &str = "t,eta,eta_dot,alpha,alpha_dot,phi,var_x,var_p,corr,det_M,I_L,p_phi,E_cl,E_tilde";

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CHECKS_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const DIVERGENCE: i32 = 3;
    pub const CAPABILITY: i32 = 4;
    pub const IO: i32 = 5;
    pub const RESOLUTION: i32 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] wavepacket::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use wavepacket::Error as E;
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Core(e) => match e {
                E::Config(_) | E::InvalidParameter { .. } | E::OutOfRange { .. } => exit::CONFIG,
                E::Divergence { .. } | E::Singularity(_) | E::Validation(_) => exit::DIVERGENCE,
                E::Capability(_) | E::DeltaLimit { .. } => exit::CAPABILITY,
                E::Resolution(_) | E::Shape(_) => exit::RESOLUTION,
            },
        }
    }
}

pub fn trajectory_csv(records: &[Record]) -> String {
    let mut out = String::with_capacity(records.len() * 256);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in records {
        let row = [
            r.t, r.eta, r.eta_dot, r.alpha, r.alpha_dot, r.phi, r.var_x, r.var_p, r.corr, r.det_m, r.i_l, r.p_phi, r.e_cl, r.e_tilde,
        ];
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn wigner_dat(scenario: &str, snap: &WignerSnapshot) -> String {
    let g = &snap.grid;
    let mut out = String::new();
    writeln!(out, "# Wigner function W(x, p)").unwrap();
    writeln!(out, "# scenario: {scenario}").unwrap();
    writeln!(out, "# snapshot: {}", snap.id).unwrap();
    writeln!(out, "# t: {:?}", snap.t).unwrap();
    writeln!(out, "# x_min: {:?} dx: {:?} nx: {}", g.x.min, g.x.step, g.x.len).unwrap();
    writeln!(out, "# p_min: {:?} dp: {:?} np: {}", g.p.min, g.p.step, g.p.len).unwrap();
    writeln!(out, "# rows: p index, columns: x index").unwrap();
    for ip in 0..g.p.len {
        for (i, v) in g.row(ip).iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, CliError> {
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Writes `trajectory.csv` (with the evolve task), one `wigner_t<id>.dat`
/// per Wigner snapshot, and `report.json`. Returns the paths written.
pub fn emit_outputs(results: &ScenarioResults, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    if results.config.has(Task::Evolve) {
        written.push(write(dir.join("trajectory.csv"), &trajectory_csv(&results.report.records))?);
    }
    for snap in &results.wigner {
        written.push(write(dir.join(format!("wigner_t{}.dat", snap.id)), &wigner_dat(&results.config.name, snap))?);
    }
    let mut json = serde_json::to_string_pretty(&results.report).expect("report serializes");
    json.push('\n');
    written.push(write(dir.join("report.json"), &json)?);
    Ok(written)
}
