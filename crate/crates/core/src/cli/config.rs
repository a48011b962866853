//! Resolution of flags, config file and defaults into a [`RunConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::Flags;
use crate::geometry::Domain;
use crate::hilbert::DEFAULT_RANK_TOL;
use crate::sampling::DEFAULT_SEED;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Run,
    Sweep,
    VerifyMp,
    Mesh,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {message}")]
    File {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid value for `{key}`: {message}")]
    Value { key: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Structured(Domain),
    File(PathBuf),
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: MeshSource,
    pub n: usize,
    pub n_list: Vec<usize>,
    pub rank_tol: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub truncation: Option<usize>,
    pub samples: usize,
    pub s_values: Vec<f64>,
    pub export_solution: bool,
}

const KEYS: [&str; 11] = [
    "domain",
    "mesh",
    "n",
    "n-list",
    "seed",
    "rank-tol",
    "out",
    "truncation",
    "samples",
    "s-values",
    "export-solution",
];

fn read_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError::File {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(err(format!("unknown key `{}`", k.trim())));
        }
        if map.insert(key, v.trim().to_string()).is_some() {
            return Err(err(format!("duplicate key `{}`", k.trim())));
        }
    }
    Ok(map)
}

fn parse<T: std::str::FromStr>(key: &'static str, s: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| ConfigError::Value {
        key,
        message: format!("`{s}`: {e}"),
    })
}

fn parse_list<T: std::str::FromStr>(key: &'static str, s: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    s.split(',').map(|t| parse(key, t.trim())).collect()
}

impl RunConfig {
    pub(crate) fn resolve(flags: &Flags, kind: Kind) -> Result<Self, ConfigError> {
        let file = match &flags.config {
            Some(p) => read_file(p)?,
            None => BTreeMap::new(),
        };
        let from_file = |k: &str| file.get(k).map(String::as_str);

        let domain = match (&flags.domain, from_file("domain")) {
            (Some(d), _) => Some(d.clone()),
            (None, Some(d)) => Some(d.to_string()),
            _ => None,
        };
        let mesh = flags.mesh.clone().or_else(|| from_file("mesh").map(PathBuf::from));
        let source = match (domain, mesh) {
            (Some(_), Some(_)) if flags.domain.is_some() && flags.mesh.is_some() => {
                return Err(ConfigError::Value {
                    key: "mesh",
                    message: "give either --domain or --mesh, not both".into(),
                })
            }
            // a flag beats a file entry of the other kind
            (Some(_), Some(m)) if flags.mesh.is_some() => MeshSource::File(m),
            (Some(d), _) => MeshSource::Structured(parse::<Domain>("domain", &d)?),
            (None, Some(m)) => MeshSource::File(m),
            (None, None) => MeshSource::Structured(Domain::UnitSquare),
        };

        let n = match flags.n {
            Some(n) => n,
            None => from_file("n").map(|s| parse("n", s)).transpose()?.unwrap_or(8),
        };
        let n_list = match &flags.n_list {
            Some(l) => l.clone(),
            None => from_file("n-list")
                .map(|s| parse_list("n-list", s))
                .transpose()?
                .unwrap_or_else(|| vec![4, 8, 16]),
        };
        let rank_tol = match flags.rank_tol {
            Some(r) => r,
            None => from_file("rank-tol")
                .map(|s| parse("rank-tol", s))
                .transpose()?
                .unwrap_or(DEFAULT_RANK_TOL),
        };
        let seed = match flags.seed {
            Some(s) => s,
            None => from_file("seed")
                .map(|s| parse("seed", s))
                .transpose()?
                .unwrap_or(DEFAULT_SEED),
        };
        let out = flags
            .out
            .clone()
            .or_else(|| from_file("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("riesz-trace-out"));
        let truncation = match flags.truncation {
            Some(t) => Some(t),
            None => from_file("truncation").map(|s| parse("truncation", s)).transpose()?,
        };
        let samples = match flags.samples {
            Some(s) => s,
            None => from_file("samples")
                .map(|s| parse("samples", s))
                .transpose()?
                .unwrap_or(100),
        };
        let s_values = match &flags.s_values {
            Some(v) => v.clone(),
            None => from_file("s-values")
                .map(|s| parse_list("s-values", s))
                .transpose()?
                .unwrap_or_else(|| vec![0.0, 0.5, 1.0]),
        };
        let export_solution = flags.export_solution
            || from_file("export-solution")
                .map(|s| parse::<bool>("export-solution", s))
                .transpose()?
                .unwrap_or(false);

        let cfg = RunConfig {
            source,
            n,
            n_list,
            rank_tol,
            seed,
            out,
            truncation,
            samples,
            s_values,
            export_solution,
        };
        cfg.validate(kind)?;
        Ok(cfg)
    }

    fn validate(&self, kind: Kind) -> Result<(), ConfigError> {
        let bad = |key, message: String| Err(ConfigError::Value { key, message });
        if self.n == 0 {
            return bad("n", "must be at least 1".into());
        }
        if self.n_list.contains(&0) {
            return bad("n-list", "levels must be at least 1".into());
        }
        if kind == Kind::Sweep {
            if self.n_list.len() < 2 {
                return bad("n-list", "a sweep needs at least two levels".into());
            }
            if matches!(self.source, MeshSource::File(_)) {
                return bad("mesh", "sweeps refine built-in domains only".into());
            }
        }
        if !(self.rank_tol > 0.0 && self.rank_tol <= 1e-4) {
            return bad("rank-tol", format!("{} is outside (0, 1e-4]", self.rank_tol));
        }
        if let Some(&s) = self.s_values.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return bad("s-values", format!("{s} is outside [0, 1]"));
        }
        if self.samples == 0 {
            return bad("samples", "must be at least 1".into());
        }
        if self.truncation == Some(0) {
            return bad("truncation", "must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> Flags {
        Flags::default()
    }

    #[test]
    fn defaults() {
        let c = RunConfig::resolve(&flags(), Kind::Run).unwrap();
        assert_eq!(c.source, MeshSource::Structured(Domain::UnitSquare));
        assert_eq!(c.n, 8);
        assert_eq!(c.rank_tol, DEFAULT_RANK_TOL);
        assert_eq!(c.seed, DEFAULT_SEED);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.cfg");
        std::fs::write(&p, "# sweep settings\ndomain = l-shape\nn = 4\nseed=9\nn_list = 4, 8\n").unwrap();
        let mut f = flags();
        f.config = Some(p);
        f.n = Some(6);
        let c = RunConfig::resolve(&f, Kind::Sweep).unwrap();
        assert_eq!(c.source, MeshSource::Structured(Domain::LShape));
        assert_eq!((c.n, c.seed), (6, 9));
        assert_eq!(c.n_list, vec![4, 8]);
    }

    #[test]
    fn file_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.cfg");
        std::fs::write(&p, "n = 4\nbogus = 1\n").unwrap();
        let mut f = flags();
        f.config = Some(p);
        let e = RunConfig::resolve(&f, Kind::Run).unwrap_err();
        assert!(e.to_string().contains(":2:"), "{e}");
    }

    #[test]
    fn invariants_enforced() {
        let mut f = flags();
        f.rank_tol = Some(1e-3);
        assert!(RunConfig::resolve(&f, Kind::Run).is_err());
        let mut f = flags();
        f.n = Some(0);
        assert!(RunConfig::resolve(&f, Kind::Run).is_err());
        let mut f = flags();
        f.s_values = Some(vec![0.5, 1.5]);
        assert!(RunConfig::resolve(&f, Kind::Run).is_err());
        let mut f = flags();
        f.n_list = Some(vec![4]);
        assert!(RunConfig::resolve(&f, Kind::Sweep).is_err());
        let mut f = flags();
        f.domain = Some("circle".into());
        assert!(RunConfig::resolve(&f, Kind::Run).is_err());
    }
}
