//! Scenario files.
//!
//! A scenario is a TOML document: top-level keys, an optional `[rf]`
//! section and one repeated `[[agent]]` section per device. Times are
//! integer milliseconds since the scenario epoch (underscores allowed).
//!
//! ```toml
//! name = "pair"
//! seed = 42
//! duration_ms = 3_600_000
//! accel_noise_sigma = 0.1          # optional, m/s² per axis
//!
//! [rf]                             # optional, every key defaulted
//! p_ref_dbm = -40.0
//! pathloss_exp = 2.7
//! shadowing_sigma_db = 2.0
//! scan_interval_ms = 60_000
//! max_range_m = 30.0
//!
//! [[agent]]
//! id = "USense2"
//! waypoints = [{ t_ms = 0, x = 0.0, y = 0.0 }]
//! sound = [{ from_ms = 0, to_ms = 3_600_000, amplitude = 0.01 }]
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::simulator::ScenarioConfig;

/// Scenario files shipped with the crate, by file name.
pub const BUILTIN: &[(&str, &str)] = &[
    (
        "experiment1.scn",
        include_str!("../scenarios/experiment1.scn"),
    ),
    (
        "experiment2.scn",
        include_str!("../scenarios/experiment2.scn"),
    ),
    (
        "experiment3.scn",
        include_str!("../scenarios/experiment3.scn"),
    ),
];

/// Parses and validates a scenario document.
pub fn parse(text: &str) -> Result<ScenarioConfig> {
    let de = toml::Deserializer::new(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." {
            "scenario".to_string()
        } else {
            path
        };
        Error::config(path, e.into_inner().message().trim().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Text of a built-in scenario; `name` may omit the `.scn` suffix.
pub fn builtin(name: &str) -> Option<&'static str> {
    BUILTIN
        .iter()
        .find(|(file, _)| *file == name || file.trim_end_matches(".scn") == name)
        .map(|(_, text)| *text)
}

/// Loads a scenario from a file, falling back to the built-in of that name
/// when no such file exists.
pub fn load(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    match std::fs::read_to_string(path) {
        Ok(text) => parse(&text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default();
            match builtin(name) {
                Some(text) if path.parent().is_none_or(|p| p.as_os_str().is_empty()) => parse(text),
                _ => Err(Error::Io(std::io::Error::new(
                    e.kind(),
                    format!("{}: no such scenario file", path.display()),
                ))),
            }
        }
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for (name, text) in BUILTIN {
            let cfg = parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!cfg.agents.is_empty(), "{name}");
        }
        assert!(builtin("experiment1").is_some());
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let cfg = parse("seed = 1\nduration_ms = 60_000\n[[agent]]\nid = \"a\"\nwaypoints = [{t_ms = 0, x = 0, y = 0}]\n").unwrap();
        assert_eq!(cfg.rf.p_ref_dbm, -40.0);
        assert_eq!(cfg.rf.pathloss_exp, 2.7);
        assert_eq!(cfg.rf.scan_interval_ms, 60_000);
        assert_eq!(cfg.rf.max_range_m, 30.0);
        assert_eq!(cfg.accel_noise_sigma, 0.1);
        assert!(cfg.agents[0].sound.is_empty());
    }

    #[test]
    fn errors_carry_field_paths() {
        let head = "seed = 1\nduration_ms = 60_000\n";
        let agent = "[[agent]]\nid = \"a\"\nwaypoints = [{t_ms = 0, x = 0, y = 0}]\n";
        let cases = [
            (format!("{head}{agent}[[agent]]\nid = \"b\"\nwaypoints = [{{t_ms = 0, x = 0, y = 0}}, {{t_ms = -5, x = 1, y = 0}}]\n"), "agent[1].waypoints[1].t_ms"),
            (format!("{head}[rf]\npathloss_exp = -1.0\n{agent}"), "rf.pathloss_exp"),
            (format!("{head}[rf]\nbogus = 1\n{agent}"), "rf"),
            (format!("seed = 1\n{agent}"), "scenario"),
            (format!("{head}{agent}[[agent]]\nid = \"a,b\"\nwaypoints = [{{t_ms = 0, x = 0, y = 0}}]\n"), "agent[1].id"),
            (format!("{head}{agent}[[agent]]\nid = \"a\"\nwaypoints = [{{t_ms = 0, x = 0, y = 0}}]\n"), "agent[1].id"),
        ];
        for (text, path) in cases {
            match parse(&text) {
                Err(Error::Config { path: got, .. }) => {
                    assert!(got.starts_with(path), "{got} vs {path}")
                }
                other => panic!("expected config error at {path}, got {other:?}"),
            }
        }
    }

    #[test]
    fn load_prefers_files_then_builtins() {
        assert!(load("experiment3.scn").is_ok());
        assert!(load("experiment3").is_ok());
        assert!(matches!(
            load("/definitely/missing/experiment3.scn"),
            Err(Error::Io(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.scn");
        std::fs::write(&p, "seed = 1\nduration_ms = 60_000\n").unwrap();
        assert!(load(&p).unwrap().agents.is_empty());
    }
}
