//! Run configuration from flags and an optional `key=value` file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mhd_hdg::verification::{make_case, ManufacturedCase};
use mhd_hdg::PhysicalParameters;
use sha2::{Digest, Sha256};

/// A configuration problem; reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

pub const DEFAULT_LEVELS: [usize; 3] = [4, 8, 16];

/// Values that may be given on the command line; `None` means not given.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub example: Option<usize>,
    pub params_file: Option<PathBuf>,
    pub k: Option<usize>,
    pub levels: Option<Vec<usize>>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub example: usize,
    pub params: PhysicalParameters,
    pub k: usize,
    pub levels: Vec<usize>,
    pub tol: f64,
    pub max_iter: usize,
    /// Path and verbatim contents of the parameter file, if one was read.
    pub params_file: Option<(PathBuf, String)>,
}

const KEYS: [&str; 11] = ["example", "ha", "n", "re", "rm", "pr", "gr", "k", "levels", "tol", "max_iter"];

/// Parses `key=value` lines; `#` starts a comment. Keys are case-insensitive.
pub fn parse_params_file(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(format!("line {}: expected key=value, got `{line}`", no + 1));
        };
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return err(format!("line {}: unknown key `{key}` (known: {})", no + 1, KEYS.join(", ")));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return err(format!("line {}: `{key}` given twice", no + 1));
        }
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().or_else(|_| err(format!("`{key}`: cannot parse `{v}`")))
}

pub fn parse_levels(v: &str) -> Result<Vec<usize>, ConfigError> {
    v.split(',').map(|s| number("levels", s.trim())).collect()
}

impl RunConfig {
    pub fn resolve(o: &Overrides) -> Result<Self, ConfigError> {
        let (file, params_file) = match &o.params_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .or_else(|e| err(format!("cannot read parameter file {}: {e}", path.display())))?;
                (parse_params_file(&text)?, Some((path.clone(), text)))
            }
            None => (BTreeMap::new(), None),
        };
        let get = |key: &str| file.get(key).map(String::as_str);
        let example = match (o.example, get("example")) {
            (Some(e), _) => e,
            (None, Some(v)) => number("example", v)?,
            (None, None) => 1,
        };
        let case = case_for(example)?;
        let mut params = case.params;
        for (key, slot) in [
            ("ha", &mut params.ha),
            ("n", &mut params.n),
            ("re", &mut params.re),
            ("rm", &mut params.rm),
            ("pr", &mut params.pr),
            ("gr", &mut params.gr),
        ] {
            if let Some(v) = get(key) {
                *slot = number(key, v)?;
            }
        }
        params.validate().or_else(|e| err(e.to_string()))?;
        let k = match (o.k, get("k")) {
            (Some(k), _) => k,
            (None, Some(v)) => number("k", v)?,
            (None, None) => 1,
        };
        let levels = match (&o.levels, get("levels")) {
            (Some(l), _) => l.clone(),
            (None, Some(v)) => parse_levels(v)?,
            (None, None) => DEFAULT_LEVELS.to_vec(),
        };
        let tol = match (o.tol, get("tol")) {
            (Some(t), _) => t,
            (None, Some(v)) => number("tol", v)?,
            (None, None) => 1e-8,
        };
        let max_iter = match (o.max_iter, get("max_iter")) {
            (Some(m), _) => m,
            (None, Some(v)) => number("max_iter", v)?,
            (None, None) => 50,
        };
        let cfg = RunConfig { example, params, k, levels, tol, max_iter, params_file };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return err("k must be at least 1");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return err(format!("tol must be a positive number, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return err("max_iter must be at least 1");
        }
        if self.levels.is_empty() {
            return err("levels must not be empty");
        }
        if self.levels[0] == 0 {
            return err("mesh levels must be positive");
        }
        if let Some(w) = self.levels.windows(2).find(|w| w[1] != 2 * w[0]) {
            return err(format!("mesh levels must double: {} is followed by {}", w[0], w[1]));
        }
        Ok(())
    }

    pub fn case(&self) -> ManufacturedCase {
        case_for(self.example).expect("validated example").with_params(self.params)
    }

    /// Stable text form of everything that affects the results.
    pub fn canonical(&self) -> String {
        let p = &self.params;
        let levels: Vec<String> = self.levels.iter().map(usize::to_string).collect();
        let mut s = String::new();
        let _ = writeln!(s, "example={}", self.example);
        let _ = writeln!(s, "k={}", self.k);
        let _ = writeln!(s, "levels={}", levels.join(","));
        let _ = writeln!(s, "tol={:e}", self.tol);
        let _ = writeln!(s, "max_iter={}", self.max_iter);
        for (key, v) in [("ha", p.ha), ("n", p.n), ("re", p.re), ("rm", p.rm), ("pr", p.pr), ("gr", p.gr)] {
            let _ = writeln!(s, "{key}={v:e}");
        }
        let _ = writeln!(s, "gravity={:e},{:e},{:e}", p.g[0], p.g[1], p.g[2]);
        s
    }

    /// SHA-256 of [`canonical`](Self::canonical), in hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Config echo and solver conventions, one `# ` comment line each.
    pub fn provenance(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# mhd-hdg {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# config_hash={}", self.hash());
        for line in self.canonical().lines() {
            let _ = writeln!(s, "# {line}");
        }
        if let Some((path, text)) = &self.params_file {
            let _ = writeln!(s, "# params_file={}", path.display());
            for line in text.lines() {
                let _ = writeln!(s, "#   | {line}");
            }
        }
        let _ = writeln!(s, "# stop criterion: L2 norm of the interior velocity update < tol, traces excluded");
        let _ = writeln!(s, "# initial guess: zero velocity and magnetic field");
        let _ = writeln!(s, "# parameter defaults: all dimensionless numbers 1, gravity along the last axis");
        let _ = writeln!(s, "# errors: relative L2 norms; p and r compared up to their best constant shift");
        s
    }
}

fn case_for(example: usize) -> Result<ManufacturedCase, ConfigError> {
    make_case(example).or_else(|_| err(format!("example must be 1 or 2, got {example}")))
}

/// Creates `dir` and checks that it accepts files.
pub fn prepare_output(dir: &Path) -> Result<(), ConfigError> {
    std::fs::create_dir_all(dir.join("levels"))
        .or_else(|e| err(format!("cannot create output directory {}: {e}", dir.display())))?;
    let probe = dir.join(".write-test");
    std::fs::write(&probe, b"")
        .and_then(|_| std::fs::remove_file(&probe))
        .or_else(|e| err(format!("output directory {} is not writable: {e}", dir.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_are_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# study\nexample = 2\nHa=2.5\nk=2\nlevels=2,4\n").unwrap();
        let o = Overrides { params_file: Some(path), k: Some(1), ..Default::default() };
        let cfg = RunConfig::resolve(&o).unwrap();
        assert_eq!((cfg.example, cfg.k), (2, 1));
        assert_eq!(cfg.levels, vec![2, 4]);
        assert_eq!(cfg.params.ha, 2.5);
        assert_eq!(cfg.params.g, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn bad_files_are_rejected() {
        assert!(parse_params_file("ha 2").is_err());
        assert!(parse_params_file("speed=2").is_err());
        assert!(parse_params_file("ha=1\nHa=2").is_err());
        assert_eq!(parse_params_file("  # only a comment\n\n").unwrap().len(), 0);
    }

    #[test]
    fn invalid_values_are_rejected() {
        for o in [
            Overrides { k: Some(0), ..Default::default() },
            Overrides { tol: Some(0.0), ..Default::default() },
            Overrides { max_iter: Some(0), ..Default::default() },
            Overrides { levels: Some(vec![]), ..Default::default() },
            Overrides { levels: Some(vec![4, 6]), ..Default::default() },
            Overrides { example: Some(3), ..Default::default() },
        ] {
            assert!(RunConfig::resolve(&o).is_err(), "{o:?}");
        }
    }

    #[test]
    fn hash_tracks_every_setting() {
        let base = RunConfig::resolve(&Overrides::default()).unwrap();
        assert_eq!(base.hash(), RunConfig::resolve(&Overrides::default()).unwrap().hash());
        assert_eq!(base.hash().len(), 64);
        let mut other = base.clone();
        other.params.gr = 2.0;
        assert_ne!(base.hash(), other.hash());
        let mut other = base.clone();
        other.tol = 1e-9;
        assert_ne!(base.hash(), other.hash());
    }
}
