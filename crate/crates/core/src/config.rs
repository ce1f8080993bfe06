//! `key = value` run configuration.

use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{InitKind, InitParams, ModelParams, Variant};
use crate::stepper::{Scheme, StepperConfig};

/// Every accepted key, in the order the manifest echoes them.
pub const KEYS: &[&str] = &[
    "grid.n1",
    "grid.n2",
    "grid.length",
    "model.variant",
    "model.kappa",
    "model.alpha",
    "model.beta",
    "init.kind",
    "init.amplitude",
    "init.amplitude_minus",
    "init.sigma",
    "init.center_x",
    "init.center_y",
    "init.separation",
    "init.mode_k1",
    "init.mode_k2",
    "init.snapshot",
    "time.scheme",
    "time.dt",
    "time.cfl",
    "time.t_end",
    "output.every",
    "output.snapshot_every",
    "output.dir",
    "diag.p",
    "diag.m",
    "moc.track",
    "moc.delta",
    "moc.gamma",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n1: usize,
    pub n2: usize,
    pub length: f64,
    pub params: ModelParams,
    pub init_kind: InitKind,
    pub init: InitParams,
    pub stepper: StepperConfig,
    /// Steps between diagnostics records.
    pub output_every: usize,
    /// Steps between snapshots; 0 keeps only the final one.
    pub snapshot_every: usize,
    pub output_dir: PathBuf,
    pub diag_p: f64,
    pub diag_m: f64,
    pub moc_track: bool,
    pub moc_delta: f64,
    /// `delta / 10` when absent.
    pub moc_gamma: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n1: 256,
            n2: 256,
            length: 8.0 * std::f64::consts::PI,
            params: ModelParams::new(Variant::ThetaForm, 1.0, 1.5),
            init_kind: InitKind::SeparableGaussian,
            init: InitParams::default(),
            stepper: StepperConfig::default(),
            output_every: 10,
            snapshot_every: 0,
            output_dir: PathBuf::from("out"),
            diag_p: 4.0,
            diag_m: 1.0,
            moc_track: false,
            moc_delta: 0.1,
            moc_gamma: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>().map_err(|e| Error::Config { line, message: format!("{key}: cannot parse {raw:?}: {e}") })
}

fn parse_bool(key: &str, raw: &str, line: usize) -> Result<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config { line, message: format!("{key}: expected a boolean, got {raw:?}") }),
    }
}

impl RunConfig {
    /// Parses and validates. Errors carry the offending line (0 for
    /// cross-key problems not tied to one line).
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen: HashMap<String, (String, usize)> = HashMap::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(Error::Config { line, message: format!("expected `key = value`, got {content:?}") });
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config { line, message: format!("unknown key {k:?}") });
            }
            if v.is_empty() {
                return Err(Error::Config { line, message: format!("{k}: missing value") });
            }
            if let Some((_, first)) = seen.insert(k.to_string(), (v.to_string(), line)) {
                return Err(Error::Config { line, message: format!("{k} repeats line {first}") });
            }
        }
        let mut cfg = RunConfig::default();
        let get = |k: &str| seen.get(k).map(|(v, l)| (v.as_str(), *l));
        let line_of = |k: &str| seen.get(k).map_or(0, |(_, l)| *l);

        if let Some((v, l)) = get("grid.n1") {
            cfg.n1 = parse_value("grid.n1", v, l)?;
        }
        if let Some((v, l)) = get("grid.n2") {
            cfg.n2 = parse_value("grid.n2", v, l)?;
        }
        if let Some((v, l)) = get("grid.length") {
            cfg.length = parse_value("grid.length", v, l)?;
        }
        if let Some((v, l)) = get("model.variant") {
            cfg.params.variant = v.parse::<Variant>().map_err(|e| Error::Config { line: l, message: e.to_string() })?;
        }
        if let Some((v, l)) = get("model.kappa") {
            cfg.params.kappa = parse_value("model.kappa", v, l)?;
        }
        if let Some((v, l)) = get("model.alpha") {
            cfg.params.alpha = parse_value("model.alpha", v, l)?;
        }
        if let Some((v, l)) = get("model.beta") {
            cfg.params.beta = Some(parse_value("model.beta", v, l)?);
        }
        if let Some((v, l)) = get("init.kind") {
            cfg.init_kind = v.parse::<InitKind>().map_err(|e| Error::Config { line: l, message: e.to_string() })?;
        }
        let p = &mut cfg.init;
        if let Some((v, l)) = get("init.amplitude") {
            p.amplitude = parse_value("init.amplitude", v, l)?;
        }
        if let Some((v, l)) = get("init.amplitude_minus") {
            p.amplitude_minus = parse_value("init.amplitude_minus", v, l)?;
        }
        if let Some((v, l)) = get("init.sigma") {
            p.sigma = parse_value("init.sigma", v, l)?;
        }
        match (get("init.center_x"), get("init.center_y")) {
            (Some((x, lx)), Some((y, ly))) => {
                p.center = Some([parse_value("init.center_x", x, lx)?, parse_value("init.center_y", y, ly)?])
            }
            (None, None) => {}
            (Some((_, l)), None) | (None, Some((_, l))) => {
                return Err(Error::Config { line: l, message: "init.center_x and init.center_y go together".into() })
            }
        }
        if let Some((v, l)) = get("init.separation") {
            p.separation = Some(parse_value("init.separation", v, l)?);
        }
        if let Some((v, l)) = get("init.mode_k1") {
            p.mode.0 = parse_value("init.mode_k1", v, l)?;
        }
        if let Some((v, l)) = get("init.mode_k2") {
            p.mode.1 = parse_value("init.mode_k2", v, l)?;
        }
        if let Some((v, _)) = get("init.snapshot") {
            p.snapshot = Some(PathBuf::from(v));
        }
        let s = &mut cfg.stepper;
        if let Some((v, l)) = get("time.scheme") {
            s.scheme = v.parse::<Scheme>().map_err(|e| Error::Config { line: l, message: e.to_string() })?;
        }
        if let Some((v, l)) = get("time.dt") {
            s.dt = parse_value("time.dt", v, l)?;
        }
        if let Some((v, l)) = get("time.cfl") {
            s.cfl = parse_value("time.cfl", v, l)?;
        }
        if let Some((v, l)) = get("time.t_end") {
            s.t_end = parse_value("time.t_end", v, l)?;
        }
        if let Some((v, l)) = get("output.every") {
            cfg.output_every = parse_value("output.every", v, l)?;
        }
        if let Some((v, l)) = get("output.snapshot_every") {
            cfg.snapshot_every = parse_value("output.snapshot_every", v, l)?;
        }
        if let Some((v, _)) = get("output.dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        if let Some((v, l)) = get("diag.p") {
            cfg.diag_p = parse_value("diag.p", v, l)?;
        }
        if let Some((v, l)) = get("diag.m") {
            cfg.diag_m = parse_value("diag.m", v, l)?;
        }
        if let Some((v, l)) = get("moc.track") {
            cfg.moc_track = parse_bool("moc.track", v, l)?;
        }
        if let Some((v, l)) = get("moc.delta") {
            cfg.moc_delta = parse_value("moc.delta", v, l)?;
        }
        if let Some((v, l)) = get("moc.gamma") {
            cfg.moc_gamma = Some(parse_value("moc.gamma", v, l)?);
        }

        let at = |keys: &[&str]| keys.iter().map(|k| line_of(k)).find(|l| *l > 0).unwrap_or(0);
        let wrap = |keys: &[&str], e: Error| match e {
            Error::InvalidArgument(message) | Error::InvalidGrid(message) => Error::Config { line: at(keys), message },
            other => other,
        };
        cfg.validate_parts().map_err(|(keys, e)| wrap(keys, e))?;
        Ok(cfg)
    }

    fn validate_parts(&self) -> std::result::Result<(), (&'static [&'static str], Error)> {
        crate::spectral::Grid2D::new(self.n1, self.n2, self.length, self.length)
            .map_err(|e| (&["grid.n1", "grid.n2", "grid.length"][..], e))?;
        self.params.validate().map_err(|e| (&["model.alpha", "model.beta", "model.kappa", "model.variant"][..], e))?;
        self.stepper.validate().map_err(|e| (&["time.dt", "time.cfl", "time.t_end"][..], e))?;
        let bad = |keys: &'static [&'static str], msg: String| Err((keys, Error::InvalidArgument(msg)));
        if self.output_every == 0 {
            return bad(&["output.every"], "output.every must be at least 1".into());
        }
        if !(self.diag_p >= 1.0) {
            return bad(&["diag.p"], format!("diag.p = {} must be >= 1", self.diag_p));
        }
        if !(self.diag_m >= 0.0) {
            return bad(&["diag.m"], format!("diag.m = {} must be >= 0", self.diag_m));
        }
        if self.init_kind == InitKind::FromSnapshot && self.init.snapshot.is_none() {
            return bad(&["init.kind"], "init.kind = FromSnapshot needs init.snapshot".into());
        }
        if self.moc_track {
            if !(self.moc_delta > 0.0 && self.moc_delta < 4.0 / 9.0) {
                return bad(&["moc.delta"], format!("moc.delta = {} must lie in (0, 4/9)", self.moc_delta));
            }
            if self.params.exponents().0.min(self.params.exponents().1) < 1.0 {
                return bad(&["moc.track", "model.alpha"], "MOC tracking needs dissipation exponents >= 1".into());
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<crate::spectral::Grid2D> {
        crate::spectral::Grid2D::new(self.n1, self.n2, self.length, self.length)
    }

    /// Canonical `key = value` text that parses back to the same config.
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("grid.n1 = {}", self.n1),
            format!("grid.n2 = {}", self.n2),
            format!("grid.length = {:?}", self.length),
            format!("model.variant = {}", self.params.variant),
            format!("model.kappa = {:?}", self.params.kappa),
            format!("model.alpha = {:?}", self.params.alpha),
        ];
        if let Some(b) = self.params.beta {
            lines.push(format!("model.beta = {b:?}"));
        }
        lines.push(format!("init.kind = {}", self.init_kind.name()));
        lines.push(format!("init.amplitude = {:?}", self.init.amplitude));
        lines.push(format!("init.amplitude_minus = {:?}", self.init.amplitude_minus));
        lines.push(format!("init.sigma = {:?}", self.init.sigma));
        if let Some([x, y]) = self.init.center {
            lines.push(format!("init.center_x = {x:?}"));
            lines.push(format!("init.center_y = {y:?}"));
        }
        if let Some(s) = self.init.separation {
            lines.push(format!("init.separation = {s:?}"));
        }
        lines.push(format!("init.mode_k1 = {}", self.init.mode.0));
        lines.push(format!("init.mode_k2 = {}", self.init.mode.1));
        if let Some(p) = &self.init.snapshot {
            lines.push(format!("init.snapshot = {}", p.display()));
        }
        lines.push(format!("time.scheme = {}", self.stepper.scheme));
        lines.push(format!("time.dt = {:?}", self.stepper.dt));
        lines.push(format!("time.cfl = {:?}", self.stepper.cfl));
        lines.push(format!("time.t_end = {:?}", self.stepper.t_end));
        lines.push(format!("output.every = {}", self.output_every));
        lines.push(format!("output.snapshot_every = {}", self.snapshot_every));
        lines.push(format!("output.dir = {}", self.output_dir.display()));
        lines.push(format!("diag.p = {:?}", self.diag_p));
        lines.push(format!("diag.m = {:?}", self.diag_m));
        lines.push(format!("moc.track = {}", self.moc_track));
        lines.push(format!("moc.delta = {:?}", self.moc_delta));
        if let Some(g) = self.moc_gamma {
            lines.push(format!("moc.gamma = {g:?}"));
        }
        lines.join("\n") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of(e: Error) -> usize {
        match e {
            Error::Config { line, .. } => line,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn empty_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!((c.n1, c.n2), (256, 256));
        assert_eq!(c.stepper.scheme, Scheme::IfRk2);
        assert_eq!(c.params.alpha, 1.5);
    }

    #[test]
    fn rejects_alpha_out_of_range() {
        let e = RunConfig::parse("# header\n\nmodel.alpha = 2.5\n").unwrap_err();
        assert_eq!(line_of(e), 3);
    }

    #[test]
    fn generalized_needs_beta() {
        let e = RunConfig::parse("model.variant = GeneralizedTheta\n").unwrap_err();
        assert_eq!(line_of(e), 1);
        assert!(RunConfig::parse("model.variant = GeneralizedTheta\nmodel.beta = 1.2\n").is_ok());
    }

    #[test]
    fn unknown_and_malformed() {
        assert_eq!(line_of(RunConfig::parse("grid.n1 = 64\ngrid.nx = 3\n").unwrap_err()), 2);
        assert_eq!(line_of(RunConfig::parse("time.dt = fast\n").unwrap_err()), 1);
        assert_eq!(line_of(RunConfig::parse("just words\n").unwrap_err()), 1);
        assert_eq!(line_of(RunConfig::parse("grid.n1 = 64\ngrid.n1 = 32\n").unwrap_err()), 2);
        assert_eq!(line_of(RunConfig::parse("grid.n1 = 7\n").unwrap_err()), 1);
    }

    #[test]
    fn text_round_trip() {
        let text = "grid.n1 = 32\ngrid.n2 = 16\nmodel.variant = SQGReduced\ninit.center_x = 1.5\ninit.center_y = 2\n\
                    time.scheme = IFRK4 # inline comment\nmoc.track = true\nmoc.gamma = 0.001\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.params.variant, Variant::SqgReduced);
        assert_eq!(c.init.center, Some([1.5, 2.0]));
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }
}
