//! Scenario loading, small input formats and channel CSV output.

use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use num_complex::Complex64;
use risfad::{ChannelMatrix, Position, RisConfiguration, Scenario};

use crate::error::{CliError, CliResult};

/// The bundled demo scenario, identical to `risfad::scenario::demo_scenario()`.
pub const DEMO_SCENARIO: &str = include_str!("../scenarios/demo.json");

pub const CHANNEL_HEADER: [&str; 6] = ["freq_ghz", "realization", "rx", "tx", "re", "im"];
pub const TRAJECTORY_HEADER: [&str; 8] = ["freq_ghz", "realization", "x", "y", "rx", "tx", "re", "im"];

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::File { path: path.display().to_string(), source })
}

pub fn load_scenario(path: Option<&Path>) -> CliResult<Scenario> {
    let sc = match path {
        Some(p) => Scenario::from_json(&read(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        None => Scenario::from_json(DEMO_SCENARIO)?,
    };
    sc.ensure_valid()?;
    Ok(sc)
}

/// Grid points selected by an index range (all if `None`).
pub fn select_freqs(sc: &Scenario, range: Option<Range<usize>>) -> CliResult<Vec<f64>> {
    let all = sc.freq_grid.points();
    match range {
        None => Ok(all),
        Some(r) if r.end <= all.len() => Ok(all[r].to_vec()),
        Some(r) => Err(CliError::Input(format!(
            "frequency index range {}..{} exceeds the grid of {} points",
            r.start,
            r.end,
            all.len()
        ))),
    }
}

pub fn parse_bits(s: Option<&str>, n_ris: usize) -> CliResult<Vec<bool>> {
    let bits = match s {
        None => vec![false; n_ris],
        Some(s) => RisConfiguration::parse_bits(s)?.bits().expect("parsed bits").to_vec(),
    };
    if bits.len() != n_ris {
        return Err(CliError::Input(format!("configuration has {} bits, scenario has {n_ris} RIS elements", bits.len())));
    }
    Ok(bits)
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn read_configs(path: &Path, n_ris: usize) -> CliResult<Vec<Vec<bool>>> {
    let text = read(path)?;
    content_lines(&text)
        .map(|(line, l)| parse_bits(Some(l), n_ris).map_err(|e| CliError::Input(format!("{}:{line}: {e}", path.display()))))
        .collect()
}

pub fn parse_complex(s: &str) -> CliResult<Complex64> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| CliError::Input(format!("bad number {t:?}: {e}")))
    };
    match s.split_once(',') {
        Some((re, im)) => Ok(Complex64::new(num(re)?, num(im)?)),
        None => Ok(Complex64::new(num(s)?, 0.0)),
    }
}

pub fn read_lambdas(path: &Path) -> CliResult<Vec<Complex64>> {
    let text = read(path)?;
    content_lines(&text)
        .map(|(line, l)| parse_complex(l).map_err(|e| CliError::Input(format!("{}:{line}: {e}", path.display()))))
        .collect()
}

/// `x,y` per record; a leading non-numeric header row is skipped.
pub fn read_positions(path: &Path) -> CliResult<Vec<Position>> {
    let text = read(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(CliError::Input(format!("{}:{line}: expected two columns x,y", path.display())));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => out.push(Position { x, y }),
            _ if k == 0 && out.is_empty() => continue,
            _ => return Err(CliError::Input(format!("{}:{line}: invalid position", path.display()))),
        }
    }
    if out.is_empty() {
        return Err(CliError::Input(format!("{}: no positions", path.display())));
    }
    Ok(out)
}

/// One channel realization to be written.
pub struct Realization {
    pub index: usize,
    pub position: Option<Position>,
    pub h: ChannelMatrix,
}

pub fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            fs::File::create(p).map_err(|source| CliError::File { path: p.display().to_string(), source })?,
        )),
        None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    })
}

/// Writes realizations in frequency-major, realization, rx, tx order.
pub fn write_channels<W: Write>(out: W, per_freq: &[Vec<Realization>], with_position: bool) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    if with_position {
        w.write_record(TRAJECTORY_HEADER)?;
    } else {
        w.write_record(CHANNEL_HEADER)?;
    }
    for rows in per_freq {
        for r in rows {
            let h = &r.h.h;
            for rx in 0..h.nrows() {
                for tx in 0..h.ncols() {
                    let v = h[(rx, tx)];
                    let mut rec = vec![r.h.f.to_string(), r.index.to_string()];
                    if with_position {
                        let p = r.position.expect("trajectory rows carry positions");
                        rec.push(p.x.to_string());
                        rec.push(p.y.to_string());
                    }
                    rec.extend([rx.to_string(), tx.to_string(), v.re.to_string(), v.im.to_string()]);
                    w.write_record(&rec)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
