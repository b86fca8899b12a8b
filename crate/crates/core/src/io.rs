//! On-disk formats.
//!
//! Matrices are CSV with a `# m=<dim> delta=<Δ>` header or JSON objects
//! `{"dim", "delta", "entries"}`; observed paths are one 1-based state per
//! line; chains are JSON lines with one header record followed by one record
//! per retained state. Every writer can stamp a config hash and seed.

use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::diagnostics::{AcceptanceEcho, MatrixMoments, SummaryReport};
use crate::posterior::{GibbsState, PosteriorChain};
use crate::riva::{assemble_l, RivaChain};
use crate::sim::{ContinuousPath, ObservedPath, SimError, TransitionCounts};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn bad(msg: impl Into<String>) -> IoError {
    IoError::Format(msg.into())
}

/// Config hash and root seed of the run that produced a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

/// Key-value pairs collected from `# k=v k=v` comment lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    pub fields: Vec<(String, String)>,
}

impl Header {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, IoError> {
        let raw = self.get(key).ok_or_else(|| bad(format!("header is missing {key}")))?;
        raw.parse().map_err(|_| bad(format!("header field {key}={raw} is invalid")))
    }

    pub fn provenance(&self) -> Option<Provenance> {
        Some(Provenance {
            config_hash: self.get("config_hash")?.to_string(),
            seed: self.get("seed")?.parse().ok()?,
        })
    }
}

/// Splits leading `#` lines into a header and returns the remaining text.
fn split_header<R: Read>(r: R) -> Result<(Header, String), IoError> {
    let mut header = Header::default();
    let mut body = String::new();
    for line in BufReader::new(r).lines() {
        let line = line?;
        match line.trim_start().strip_prefix('#') {
            Some(rest) => {
                for tok in rest.split_whitespace() {
                    if let Some((k, v)) = tok.split_once('=') {
                        header.fields.push((k.to_string(), v.to_string()));
                    }
                }
            }
            None if line.trim().is_empty() => {}
            None => {
                body.push_str(&line);
                body.push('\n');
            }
        }
    }
    Ok((header, body))
}

fn write_provenance<W: Write>(w: &mut W, prov: Option<&Provenance>) -> Result<(), IoError> {
    if let Some(p) = prov {
        writeln!(w, "# config_hash={} seed={}", p.config_hash, p.seed)?;
    }
    Ok(())
}

fn write_rows<W: Write, T: ToString + Copy>(w: W, rows: usize, cols: usize, at: impl Fn(usize, usize) -> T) -> Result<(), IoError> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..rows {
        out.write_record((0..cols).map(|j| at(i, j).to_string()))?;
    }
    out.flush()?;
    Ok(())
}

fn read_rows<T: std::str::FromStr>(body: &str) -> Result<Vec<Vec<T>>, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse().map_err(|_| bad(format!("cannot parse entry {f:?}"))))
            .collect::<Result<Vec<T>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn square<T: Copy + nalgebra::Scalar>(rows: Vec<Vec<T>>, m: usize) -> Result<DMatrix<T>, IoError> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(bad(format!("expected a {m}×{m} matrix")));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

pub fn write_matrix_csv<W: Write>(mut w: W, m: &DMatrix<f64>, delta: f64, prov: Option<&Provenance>) -> Result<(), IoError> {
    writeln!(w, "# m={} delta={}", m.nrows(), delta)?;
    write_provenance(&mut w, prov)?;
    write_rows(w, m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Returns the matrix, its `delta` and the full header.
pub fn read_matrix_csv<R: Read>(r: R) -> Result<(DMatrix<f64>, f64, Header), IoError> {
    let (header, body) = split_header(r)?;
    let m: usize = header.parse("m")?;
    let delta: f64 = header.parse("delta")?;
    Ok((square(read_rows(&body)?, m)?, delta, header))
}

pub fn write_counts_csv<W: Write>(mut w: W, c: &TransitionCounts, prov: Option<&Provenance>) -> Result<(), IoError> {
    writeln!(w, "# m={} delta={}", c.m(), c.delta())?;
    write_provenance(&mut w, prov)?;
    write_rows(w, c.m(), c.m(), |i, j| c.get(i, j))
}

pub fn read_counts_csv<R: Read>(r: R) -> Result<(TransitionCounts, Header), IoError> {
    let (header, body) = split_header(r)?;
    let m: usize = header.parse("m")?;
    let delta: f64 = header.parse("delta")?;
    Ok((TransitionCounts::new(square(read_rows(&body)?, m)?, delta)?, header))
}

pub fn matrix_to_json(m: &DMatrix<f64>, delta: f64) -> Value {
    json!({ "dim": m.nrows(), "delta": delta, "entries": nested(m) })
}

pub fn matrix_from_json(v: &Value) -> Result<(DMatrix<f64>, f64), IoError> {
    #[derive(Deserialize)]
    struct Raw {
        dim: usize,
        delta: f64,
        entries: Vec<Vec<f64>>,
    }
    let raw: Raw = serde_json::from_value(v.clone())?;
    Ok((square(raw.entries, raw.dim)?, raw.delta))
}

/// Rows as nested arrays.
pub fn nested(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn from_row_major(v: &[f64], m: usize) -> Result<DMatrix<f64>, IoError> {
    if v.len() != m * m {
        return Err(bad(format!("expected {} entries, found {}", m * m, v.len())));
    }
    Ok(DMatrix::from_row_slice(m, m, v))
}

pub fn write_path_csv<W: Write>(mut w: W, path: &ObservedPath, prov: Option<&Provenance>) -> Result<(), IoError> {
    let seed = prov.map(|p| p.seed.to_string()).unwrap_or_else(|| "none".into());
    writeln!(w, "# m={} delta={} seed={}", path.m(), path.delta(), seed)?;
    if let Some(p) = prov {
        writeln!(w, "# config_hash={}", p.config_hash)?;
    }
    for s in path.states() {
        writeln!(w, "{}", s + 1)?;
    }
    Ok(())
}

pub fn read_path_csv<R: Read>(r: R) -> Result<(ObservedPath, Header), IoError> {
    let (header, body) = split_header(r)?;
    let m: usize = header.parse("m")?;
    let delta: f64 = header.parse("delta")?;
    let states = body
        .lines()
        .map(|l| match l.trim().parse::<usize>() {
            Ok(s) if s >= 1 => Ok(s - 1),
            _ => Err(bad(format!("invalid state {l:?}; states are 1-based"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((ObservedPath::new(states, m, delta)?, header))
}

pub fn write_continuous_path_csv<W: Write>(mut w: W, path: &ContinuousPath, prov: Option<&Provenance>) -> Result<(), IoError> {
    writeln!(w, "# total_time={}", path.total_time)?;
    write_provenance(&mut w, prov)?;
    writeln!(w, "state,holding_time")?;
    for (s, t) in path.jump_states.iter().zip(&path.holding_times) {
        writeln!(w, "{},{}", s + 1, t)?;
    }
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &[f64], dt: f64, prov: Option<&Provenance>) -> Result<(), IoError> {
    writeln!(w, "# dt={dt} points={}", traj.len())?;
    write_provenance(&mut w, prov)?;
    for x in traj {
        writeln!(w, "{x}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainHeader {
    pub sampler: String,
    pub m: usize,
    pub delta: f64,
    pub samples: usize,
    pub config_hash: Option<String>,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct GibbsRecord {
    iteration: usize,
    #[serde(rename = "P")]
    p: Vec<f64>,
    #[serde(rename = "Lambda")]
    lambda: Vec<f64>,
    #[serde(rename = "Phi")]
    phi: Vec<f64>,
    #[serde(rename = "Psi")]
    psi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RivaRecord {
    iteration: usize,
    #[serde(rename = "L")]
    l: Vec<f64>,
    a: Vec<f64>,
    #[serde(rename = "Q")]
    q: Vec<f64>,
}

fn write_line<W: Write, T: Serialize>(w: &mut W, v: &T) -> Result<(), IoError> {
    serde_json::to_writer(&mut *w, v)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_gibbs_chain<W: Write>(mut w: W, chain: &PosteriorChain, prov: Option<&Provenance>) -> Result<(), IoError> {
    let m = chain.samples.first().map_or(0, GibbsState::dim);
    write_line(
        &mut w,
        &ChainHeader {
            sampler: "bigmac".into(),
            m,
            delta: chain.delta,
            samples: chain.len(),
            config_hash: prov.map(|p| p.config_hash.clone()),
            seed: chain.seed,
        },
    )?;
    for s in &chain.samples {
        write_line(
            &mut w,
            &GibbsRecord {
                iteration: s.iteration,
                p: row_major(&s.p),
                lambda: s.lambda.iter().copied().collect(),
                phi: row_major(&s.phi),
                psi: row_major(&s.psi),
            },
        )?;
    }
    Ok(())
}

pub fn write_riva_chain<W: Write>(mut w: W, chain: &RivaChain, prov: Option<&Provenance>) -> Result<(), IoError> {
    let m = chain.samples.first().map_or(0, |s| s.dim());
    write_line(
        &mut w,
        &ChainHeader {
            sampler: "mhriva".into(),
            m,
            delta: chain.delta,
            samples: chain.len(),
            config_hash: prov.map(|p| p.config_hash.clone()),
            seed: chain.seed,
        },
    )?;
    let cfg = chain.config;
    for (i, s) in chain.samples.iter().enumerate() {
        write_line(
            &mut w,
            &RivaRecord {
                iteration: cfg.burn_in + (i + 1) * cfg.thin,
                l: row_major(assemble_l(s).entries()),
                a: s.a().iter().copied().collect(),
                q: row_major(s.q()),
            },
        )?;
    }
    Ok(())
}

/// A chain file read back: generator samples for either sampler, plus the
/// full states for the spectral sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainFile {
    pub header: ChainHeader,
    pub generators: Vec<DMatrix<f64>>,
    pub states: Option<Vec<GibbsState>>,
}

pub fn read_chain<R: Read>(r: R) -> Result<ChainFile, IoError> {
    let mut lines = BufReader::new(r).lines();
    let first = lines.next().ok_or_else(|| bad("empty chain file"))??;
    let header: ChainHeader = serde_json::from_str(&first)?;
    let m = header.m;
    let mut generators = Vec::with_capacity(header.samples);
    let mut states = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match header.sampler.as_str() {
            "bigmac" => {
                let rec: GibbsRecord = serde_json::from_str(&line)?;
                let s = GibbsState {
                    p: from_row_major(&rec.p, m)?,
                    lambda: DVector::from_vec(rec.lambda),
                    phi: from_row_major(&rec.phi, m)?,
                    psi: from_row_major(&rec.psi, m)?,
                    delta: header.delta,
                    iteration: rec.iteration,
                };
                generators.push(s.generator());
                states.push(s);
            }
            "mhriva" => {
                let rec: RivaRecord = serde_json::from_str(&line)?;
                generators.push(from_row_major(&rec.l, m)?);
            }
            other => return Err(bad(format!("unknown sampler tag {other:?}"))),
        }
    }
    let states = (header.sampler == "bigmac").then_some(states);
    Ok(ChainFile {
        header,
        generators,
        states,
    })
}

fn moments_json(mm: &MatrixMoments) -> Value {
    json!({ "mean": nested(&mm.mean), "sd": nested(&mm.sd) })
}

pub fn summary_to_json(r: &SummaryReport, delta: f64, prov: Option<&Provenance>) -> Value {
    let acceptance = match &r.acceptance {
        AcceptanceEcho::Bigmac(s) => json!({
            "sampler": "bigmac",
            "row_acceptance_rate": s.row_acceptance_rate(),
            "row_proposals": s.row_proposals,
            "row_accepts": s.row_accepts,
            "lambda_updates": s.lambda_updates,
            "lambda_skips": s.lambda_skips,
            "component_updates": s.component_updates,
            "component_skips": s.component_skips,
        }),
        AcceptanceEcho::Mhriva {
            a_acceptance,
            q_acceptance,
            overall,
        } => json!({
            "sampler": "mhriva",
            "a_acceptance": a_acceptance,
            "q_acceptance": q_acceptance,
            "overall": overall,
        }),
    };
    json!({
        "m": r.m,
        "delta": delta,
        "n_samples": r.n_samples,
        "L": moments_json(&r.l),
        "P": r.p.as_ref().map(moments_json),
        "P_tilde": r.reconstruction.as_ref().map(moments_json),
        "ess_L": nested(&r.ess_l),
        "ess_per_100": r.ess_per_100,
        "frobenius_error": r.errors.as_ref().map(|e| json!({ "L": e.l, "P": e.p })),
        "acceptance": acceptance,
        "config_hash": prov.map(|p| p.config_hash.clone()),
        "seed": prov.map(|p| p.seed),
    })
}

/// One row per matrix entry: `matrix,row,col,mean,sd` (1-based indices).
pub fn write_summary_table<W: Write>(mut w: W, r: &SummaryReport, prov: Option<&Provenance>) -> Result<(), IoError> {
    write_provenance(&mut w, prov)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["matrix", "row", "col", "mean", "sd"])?;
    let mut emit = |name: &str, mm: &MatrixMoments| -> Result<(), IoError> {
        for i in 0..mm.mean.nrows() {
            for j in 0..mm.mean.ncols() {
                out.write_record([
                    name.to_string(),
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    mm.mean[(i, j)].to_string(),
                    mm.sd[(i, j)].to_string(),
                ])?;
            }
        }
        Ok(())
    };
    emit("L", &r.l)?;
    if let Some(p) = &r.p {
        emit("P", p)?;
    }
    if let Some(p) = &r.reconstruction {
        emit("P_tilde", p)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::{run_gibbs, GibbsConfig, Hyperparameters};
    use crate::riva::{run_mhriva, RivaConfig};

    fn prov() -> Provenance {
        Provenance {
            config_hash: "abc123".into(),
            seed: 7,
        }
    }

    #[test]
    fn matrix_csv_roundtrip() {
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 2.0, -2.0 / 3.0]);
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m, 0.5, Some(&prov())).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# m=2 delta=0.5\n# config_hash=abc123 seed=7\n"));
        let (back, delta, header) = read_matrix_csv(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert_eq!(delta, 0.5);
        assert_eq!(header.provenance(), Some(prov()));
    }

    #[test]
    fn matrix_json_roundtrip() {
        let m = DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.1, 0.9]);
        let v = matrix_to_json(&m, 1.0);
        assert_eq!(v["entries"][1][0], 0.1);
        assert_eq!(matrix_from_json(&v).unwrap(), (m, 1.0));
    }

    #[test]
    fn path_is_one_based() {
        let path = ObservedPath::new(vec![0, 1, 1, 0], 2, 1.0).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &path, Some(&prov())).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "# m=2 delta=1 seed=7\n# config_hash=abc123\n1\n2\n2\n1\n");
        let (back, _) = read_path_csv(buf.as_slice()).unwrap();
        assert_eq!(back, path);
        assert!(read_path_csv("# m=2 delta=1\n0\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn counts_roundtrip_and_shape_check() {
        let c = TransitionCounts::new(DMatrix::from_row_slice(2, 2, &[3, 1, 4, 1]), 2.0).unwrap();
        let mut buf = Vec::new();
        write_counts_csv(&mut buf, &c, None).unwrap();
        assert_eq!(read_counts_csv(buf.as_slice()).unwrap().0, c);
        assert!(read_counts_csv("# m=3 delta=1\n1,2\n3,4\n".as_bytes()).is_err());
        assert!(read_counts_csv("1,2\n3,4\n".as_bytes()).is_err());
    }

    #[test]
    fn chains_roundtrip() {
        let c = TransitionCounts::new(DMatrix::from_row_slice(2, 2, &[60, 30, 50, 40]), 1.0).unwrap();
        let chain = run_gibbs(
            &c,
            &Hyperparameters::paper_defaults(2),
            &GibbsConfig {
                iters: 40,
                burn_in: 10,
                thin: 3,
            },
            1,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_gibbs_chain(&mut buf, &chain, Some(&prov())).unwrap();
        let back = read_chain(buf.as_slice()).unwrap();
        assert_eq!(back.header.sampler, "bigmac");
        assert_eq!(back.header.config_hash.as_deref(), Some("abc123"));
        assert_eq!(back.states.as_ref().unwrap(), &chain.samples);
        assert_eq!(back.generators, chain.generators());

        let riva = run_mhriva(&c, &RivaConfig::new(180, 30, 10), 1).unwrap();
        let mut buf = Vec::new();
        write_riva_chain(&mut buf, &riva, None).unwrap();
        let back = read_chain(buf.as_slice()).unwrap();
        assert_eq!(back.header.sampler, "mhriva");
        assert!(back.states.is_none());
        assert_eq!(back.generators, riva.generators());
    }
}
