use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{AbcError, Result};
use crate::samplers::Chain;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits in scientific notation; parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| AbcError::Input(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Chain CSV: comment lines, the header `iteration,accepted,theta_*,eps_*`
/// and one row per retained state.
pub fn render_chain_csv(chain: &Chain, canonical_config: &str) -> String {
    let mut out = String::new();
    writeln!(out, "# abcmu {VERSION}").unwrap();
    writeln!(out, "# config {canonical_config}").unwrap();
    writeln!(
        out,
        "# chain {} proposals={} accepted={}",
        chain.chain_index, chain.proposals, chain.accepted
    )
    .unwrap();
    let mut header = vec!["iteration".to_string(), "accepted".to_string()];
    header.extend(chain.theta_names.iter().map(|n| format!("theta_{n}")));
    header.extend(chain.eps_names.iter().map(|n| format!("eps_{n}")));
    writeln!(out, "{}", header.join(",")).unwrap();
    for s in &chain.states {
        let mut row = vec![s.iteration.to_string(), (s.accepted as u8).to_string()];
        row.extend(s.theta.values().iter().map(|v| fmt_f64(*v)));
        row.extend(s.eps.values().iter().map(|v| fmt_f64(*v)));
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainRow {
    pub iteration: u64,
    pub accepted: bool,
    pub theta: Vec<f64>,
    pub eps: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainFile {
    pub comments: Vec<String>,
    pub theta_names: Vec<String>,
    pub eps_names: Vec<String>,
    pub rows: Vec<ChainRow>,
}

impl ChainFile {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["iteration".to_string(), "accepted".to_string()];
        h.extend(self.theta_names.iter().map(|n| format!("theta_{n}")));
        h.extend(self.eps_names.iter().map(|n| format!("eps_{n}")));
        h
    }

    pub fn theta_column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.theta[i]).collect()
    }

    pub fn eps_column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.eps[k]).collect()
    }

    /// The `proposals=`/`accepted=` counters of the chain comment, if present.
    pub fn acceptance_rate(&self) -> Option<f64> {
        let line = self.comments.iter().find(|c| c.starts_with("chain "))?;
        let field = |key: &str| -> Option<f64> {
            line.split_whitespace()
                .find_map(|t| t.strip_prefix(key))
                .and_then(|v| v.parse().ok())
        };
        let (p, a) = (field("proposals=")?, field("accepted=")?);
        (p > 0.0).then(|| a / p)
    }

    pub fn config_json(&self) -> Option<&str> {
        self.comments.iter().find_map(|c| c.strip_prefix("config "))
    }
}

pub fn parse_chain_csv(text: &str, source: &str) -> Result<ChainFile> {
    let bad = |line: usize, msg: String| AbcError::Input(format!("{source}:{line}: {msg}"));
    let mut comments = Vec::new();
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = loop {
        match lines.next() {
            Some((_, l)) if l.starts_with('#') => {
                comments.push(l.trim_start_matches('#').trim().to_string())
            }
            Some((i, l)) => break (i + 1, l),
            None => return Err(AbcError::Input(format!("{source}: missing header line"))),
        }
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "iteration" || cols[1] != "accepted" {
        return Err(bad(
            hline,
            "header must start with `iteration,accepted`".into(),
        ));
    }
    let theta_names: Vec<String> = cols[2..]
        .iter()
        .take_while(|c| c.starts_with("theta_"))
        .map(|c| c["theta_".len()..].to_string())
        .collect();
    let rest = &cols[2 + theta_names.len()..];
    if rest.iter().any(|c| !c.starts_with("eps_")) || rest.is_empty() {
        return Err(bad(
            hline,
            "expected theta_* columns followed by at least one eps_* column".into(),
        ));
    }
    let eps_names: Vec<String> = rest.iter().map(|c| c["eps_".len()..].to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(bad(
                i + 1,
                format!("expected {} fields, got {}", cols.len(), fields.len()),
            ));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| bad(i + 1, format!("`{s}` is not a number")))
        };
        let iteration = fields[0]
            .parse()
            .map_err(|_| bad(i + 1, format!("`{}` is not an iteration count", fields[0])))?;
        let accepted = match fields[1] {
            "1" => true,
            "0" => false,
            other => return Err(bad(i + 1, format!("`{other}` is not 0 or 1"))),
        };
        let values = fields[2..]
            .iter()
            .map(|s| num(s))
            .collect::<Result<Vec<f64>>>()?;
        let (theta, eps) = values.split_at(theta_names.len());
        rows.push(ChainRow {
            iteration,
            accepted,
            theta: theta.to_vec(),
            eps: eps.to_vec(),
        });
    }
    Ok(ChainFile {
        comments,
        theta_names,
        eps_names,
        rows,
    })
}

pub fn read_chain_csv(path: &Path) -> Result<ChainFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| AbcError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_chain_csv(&text, &path.display().to_string())
}

/// Predictive draws: `index,weight,eps_*`.
pub fn render_draws_csv(
    eps_names: &[String],
    draws: &[Vec<f64>],
    weights: &[f64],
    canonical_config: &str,
) -> String {
    let mut out = String::new();
    writeln!(out, "# abcmu {VERSION}").unwrap();
    writeln!(out, "# config {canonical_config}").unwrap();
    let mut header = vec!["index".to_string(), "weight".to_string()];
    header.extend(eps_names.iter().map(|n| format!("eps_{n}")));
    writeln!(out, "{}", header.join(",")).unwrap();
    for (i, (d, w)) in draws.iter().zip(weights).enumerate() {
        let mut row = vec![i.to_string(), fmt_f64(*w)];
        row.extend(d.iter().map(|v| fmt_f64(*v)));
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}
