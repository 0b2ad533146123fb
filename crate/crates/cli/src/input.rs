//! Parsing of probability lists, numeric grids and key=value config files.

use std::path::Path;

use catcool::state::DiagonalState;

use crate::CliError;

/// Inputs summing to 1 within this are renormalized silently.
pub const SILENT_TOL: f64 = 1e-9;
/// Inputs summing to 1 within this are renormalized with a warning.
pub const WARN_TOL: f64 = 1e-6;

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("'{t}' is not a number")))
        })
        .collect()
}

/// Comma-separated probabilities in non-increasing order.
pub fn parse_probs(name: &str, s: &str) -> Result<DiagonalState, CliError> {
    let mut p = parse_list(s)?;
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(CliError::Usage(format!(
            "--{name}: entries must be finite and non-negative"
        )));
    }
    let sum: f64 = p.iter().sum();
    let dev = (sum - 1.0).abs();
    if dev > WARN_TOL {
        return Err(CliError::Usage(format!(
            "--{name}: probabilities sum to {sum}, not 1"
        )));
    }
    if dev > SILENT_TOL {
        eprintln!("warning: --{name} sums to {sum}; renormalizing");
    }
    p.iter_mut().for_each(|x| *x /= sum);
    Ok(DiagonalState::new(p)?)
}

/// A grid: a comma list, `lo:hi:points` (linear) or `log:lo:hi:points`.
pub fn parse_grid(name: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: &str| CliError::Usage(format!("--{name}: {m}"));
    let parts: Vec<&str> = s.split(':').collect();
    let (log, spec) = match parts.as_slice() {
        [single] => return parse_list(single),
        ["log", rest @ ..] => (true, rest),
        rest => (false, rest),
    };
    let [lo, hi, n] = spec else {
        return Err(bad("expected lo:hi:points or log:lo:hi:points"));
    };
    let lo: f64 = lo.parse().map_err(|_| bad("bad lower bound"))?;
    let hi: f64 = hi.parse().map_err(|_| bad("bad upper bound"))?;
    let n: usize = n.parse().map_err(|_| bad("bad point count"))?;
    if n < 2 || lo >= hi || lo.is_nan() || hi.is_nan() {
        return Err(bad("need points >= 2 and lo < hi"));
    }
    if log && lo <= 0.0 {
        return Err(bad("log grids need lo > 0"));
    }
    let t = |k: usize| k as f64 / (n - 1) as f64;
    Ok((0..n)
        .map(|k| match (log, k) {
            (_, 0) => lo,
            (_, k) if k + 1 == n => hi,
            (true, k) => (lo.ln() + (hi.ln() - lo.ln()) * t(k)).exp(),
            (false, k) => lo + (hi - lo) * t(k),
        })
        .collect())
}

pub fn parse_usize_list(name: &str, s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim().parse::<usize>().map_err(|_| {
                CliError::Usage(format!("--{name}: '{t}' is not a non-negative integer"))
            })
        })
        .collect()
}

/// Reads `key=value` lines (blank lines and `#` comments skipped).
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Appends config entries as `--key value` unless the flag is already present.
pub fn merge_config(mut args: Vec<String>) -> Result<Vec<String>, CliError> {
    let pos = args
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else {
        return Ok(args);
    };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => args
            .get(pos + 1)
            .cloned()
            .ok_or_else(|| CliError::Usage("--config needs a path".into()))?,
    };
    for (k, v) in read_config(Path::new(&path))? {
        let flag = format!("--{k}");
        let given = args
            .iter()
            .any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if !given {
            args.push(format!("{flag}={v}"));
        }
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probabilities_are_validated_and_renormalized() {
        assert_eq!(parse_probs("p", "0.6, 0.4").unwrap().probs(), &[0.6, 0.4]);
        let p = parse_probs("p", "0.6,0.4000005").unwrap();
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(parse_probs("p", "0.6,0.5").is_err());
        assert!(parse_probs("p", "0.4,0.6").is_err());
        assert!(parse_probs("p", "1.2,-0.2").is_err());
        assert!(parse_probs("p", "a,b").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("g", "0.1,0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(
            parse_grid("g", "0:1:5").unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        let g = parse_grid("g", "log:1e-4:1:5").unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[1] - 1e-3).abs() < 1e-15 && g[4] == 1.0);
        assert!(parse_grid("g", "1:0:3").is_err());
        assert!(parse_grid("g", "log:0:1:3").is_err());
        assert!(parse_grid("g", "0:1").is_err());
    }

    #[test]
    fn config_fills_missing_flags_only() {
        let dir = std::env::temp_dir().join(format!("catcool-cfg-{}", std::process::id()));
        std::fs::write(&dir, "# sweep\nratio = 0.3\npoints=10\n\n").unwrap();
        let args: Vec<String> = ["catcool", "thermometry", "--points", "5", "--config"]
            .iter()
            .map(|s| s.to_string())
            .chain([dir.display().to_string()])
            .collect();
        let merged = merge_config(args).unwrap();
        assert!(merged.contains(&"--ratio=0.3".to_string()));
        assert!(!merged.iter().any(|a| a == "--points=10"));
        std::fs::write(&dir, "oops\n").unwrap();
        assert!(read_config(&dir).is_err());
        std::fs::remove_file(&dir).ok();
    }
}
