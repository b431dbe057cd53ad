//! File formats: network JSON, trajectory CSV, raster text, transition-graph
//! JSON, orbit-report JSON and sweep / heatmap CSV.
//!
//! CSV files start with `# key=value` lines echoing the effective run
//! configuration. Floats are written in the shortest form that parses back
//! to the same value.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{OmegaSample, OrbitReport, RegimeLabel};
use crate::ensemble::{LyapunovCell, SweepCell};
use crate::error::{Error, Result};
use crate::graph::{EdgeKind, TransitionGraph};
use crate::model::{NetworkParams, Trajectory};
use crate::pattern::Raster;

pub type ConfigEcho = Vec<(String, String)>;

/// Shortest round-trip text for a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn read_network(path: impl AsRef<Path>) -> Result<NetworkParams> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_network(path: impl AsRef<Path>, net: &NetworkParams) -> Result<()> {
    let mut text = serde_json::to_string_pretty(net)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_echo<W: Write>(w: &mut W, echo: &[(String, String)]) -> Result<()> {
    for (k, v) in echo {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

/// Reads the `# key=value` header of a CSV file.
pub fn read_echo<R: Read>(r: R) -> Result<ConfigEcho> {
    let mut out = Vec::new();
    for line in BufReader::new(r).lines() {
        let line = line?;
        let Some(rest) = line.strip_prefix("# ") else {
            break;
        };
        if let Some((k, v)) = rest.split_once('=') {
            out.push((k.to_string(), v.to_string()));
        }
    }
    Ok(out)
}

/// Header `t,v_0,...,v_{N-1}`, one row per time step, potentials.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory, echo: &[(String, String)]) -> Result<()> {
    write_echo(&mut w, echo)?;
    let n = traj.states().first().map_or(0, |s| s.n());
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..n).map(|i| format!("v_{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (t, s) in traj.states().iter().enumerate() {
        let row: Vec<String> = std::iter::once(t.to_string())
            .chain(s.potentials().into_iter().map(fmt_f64))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Potentials per row, skipping the echo and header.
pub fn read_trajectory_csv<R: Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    for rec in reader.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .skip(1)
            .map(|x| x.parse::<f64>().map_err(Error::parse))
            .collect::<Result<Vec<_>>>()?;
        rows.push(vals);
    }
    Ok(rows)
}

pub fn write_raster<W: Write>(mut w: W, raster: &Raster) -> Result<()> {
    w.write_all(raster.to_text().as_bytes())?;
    Ok(())
}

pub fn read_raster<R: Read>(mut r: R) -> Result<Raster> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    Raster::from_text(&text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    pub n: usize,
    pub edges: Vec<EdgeRecord>,
    /// Effective run configuration.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub config: BTreeMap<String, String>,
}

impl GraphExport {
    pub fn from_graph(graph: &TransitionGraph, include_illegal: bool) -> GraphExport {
        GraphExport {
            n: graph.n(),
            edges: graph
                .edges(include_illegal)
                .into_iter()
                .map(|(from, to, kind)| EdgeRecord {
                    from: from.to_bitstring(),
                    to: to.to_bitstring(),
                    kind,
                })
                .collect(),
            config: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub transient: usize,
    pub period: usize,
    pub min_threshold_gap: f64,
    pub cycle_raster: Vec<String>,
    /// Orbit potentials, one row per phase.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<Vec<f64>>>,
}

impl OrbitRecord {
    pub fn from_report(report: &OrbitReport, with_states: bool) -> OrbitRecord {
        OrbitRecord {
            transient: report.transient,
            period: report.period,
            min_threshold_gap: report.min_threshold_gap,
            cycle_raster: report.cycle_raster.iter().map(|p| p.to_bitstring()).collect(),
            states: with_states.then(|| report.states.iter().map(|s| s.potentials()).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitFile {
    pub regime: RegimeLabel,
    /// Attractor distance estimate; absent when no orbit was detected.
    pub d_as: Option<f64>,
    pub orbits_found: usize,
    pub undetermined: usize,
    pub runs: usize,
    pub horizon: usize,
    pub orbits: Vec<OrbitRecord>,
    /// Effective run configuration.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub config: BTreeMap<String, String>,
}

impl OrbitFile {
    pub fn new(sample: &OmegaSample, regime: RegimeLabel, d_as: Option<f64>, with_states: bool) -> OrbitFile {
        OrbitFile {
            regime,
            d_as,
            orbits_found: sample.orbits.len(),
            undetermined: sample.undetermined,
            runs: sample.runs,
            horizon: sample.horizon,
            orbits: sample
                .orbits
                .iter()
                .map(|o| OrbitRecord::from_report(o, with_states))
                .collect(),
            config: BTreeMap::new(),
        }
    }
}

pub fn write_sweep_csv<W: Write>(mut w: W, cells: &[SweepCell], echo: &[(String, String)]) -> Result<()> {
    write_echo(&mut w, echo)?;
    let mut writer = csv::Writer::from_writer(w);
    for cell in cells {
        writer.serialize(cell)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(r: R) -> Result<Vec<SweepCell>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    reader
        .deserialize()
        .map(|rec| rec.map_err(Error::from))
        .collect()
}

/// Matrix of `log10_d_as` with one row per gamma and one column per C, in
/// order of first appearance in `cells`.
pub fn write_heatmap_csv<W: Write>(mut w: W, cells: &[SweepCell], echo: &[(String, String)]) -> Result<()> {
    let mut gammas: Vec<f64> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    for cell in cells {
        if !gammas.iter().any(|g| g.to_bits() == cell.gamma.to_bits()) {
            gammas.push(cell.gamma);
        }
        if !cs.iter().any(|c| c.to_bits() == cell.c.to_bits()) {
            cs.push(cell.c);
        }
    }
    write_echo(&mut w, echo)?;
    let header: Vec<String> = std::iter::once("gamma".to_string())
        .chain(cs.iter().map(|c| fmt_f64(*c)))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for g in &gammas {
        let mut row = vec![fmt_f64(*g)];
        for c in &cs {
            let value = cells
                .iter()
                .find(|x| x.gamma.to_bits() == g.to_bits() && x.c.to_bits() == c.to_bits())
                .map_or(f64::NAN, |x| x.log10_d_as);
            row.push(fmt_f64(value));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_lyapunov_csv<W: Write>(mut w: W, cells: &[LyapunovCell], echo: &[(String, String)]) -> Result<()> {
    write_echo(&mut w, echo)?;
    let mut writer = csv::Writer::from_writer(w);
    for cell in cells {
        writer.serialize(cell)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_lyapunov_csv<R: Read>(r: R) -> Result<Vec<LyapunovCell>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    reader
        .deserialize()
        .map(|rec| rec.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate, State};

    #[test]
    fn trajectory_csv_layout() {
        let net = NetworkParams::new(0.5, 1.0, vec![vec![0.0]], vec![0.5]).unwrap();
        let traj = simulate(&net, &State::zeros(&net), 10).unwrap();
        let mut buf = Vec::new();
        let echo = vec![("command".to_string(), "simulate".to_string())];
        write_trajectory_csv(&mut buf, &traj, &echo).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# command=simulate");
        assert_eq!(lines[1], "t,v_0");
        assert_eq!(lines[2], "0,0.0");
        assert_eq!(lines.last().unwrap(), &"10,0.9990234375");
        assert_eq!(read_echo(buf.as_slice()).unwrap(), echo);
        let rows = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 11);
    }

    #[test]
    fn sweep_csv_round_trip_with_nan() {
        let cells = vec![
            SweepCell {
                gamma: 0.125,
                c: 0.1,
                samples: 10,
                avg_d_as: 1.0,
                log10_d_as: 0.0,
                death_fraction: 1.0,
                avg_period: 1.0,
                undetermined_fraction: 0.0,
            },
            SweepCell {
                gamma: 0.875,
                c: 3.0,
                samples: 10,
                avg_d_as: f64::NAN,
                log10_d_as: f64::NAN,
                death_fraction: 0.0,
                avg_period: f64::NAN,
                undetermined_fraction: 1.0,
            },
        ];
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &cells, &[("seed".into(), "1".into())]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with(
            "gamma,c,samples,avg_d_as,log10_d_as,death_fraction,avg_period,undetermined_fraction"
        ));
        let back = read_sweep_csv(buf.as_slice()).unwrap();
        assert_eq!(format!("{back:?}"), format!("{cells:?}"));
    }
}
