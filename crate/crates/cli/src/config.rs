//! The flat run configuration: a JSON file and command-line flags share one
//! set of keys, flags win.

use std::path::Path;
use std::str::FromStr;

use planar_orbits::density::TestFunction;
use planar_orbits::diophantine::{CfInput, QuadraticSurd};
use planar_orbits::experiments::Window;
use planar_orbits::{LatticeKind, LatticeSpec, MatrixNorm, Vec2};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Every key a config file may set. Keys a subcommand does not use are
/// ignored by it, so one file can drive several subcommands.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub lattice: Option<LatticeKind>,
    pub norm: Option<MatrixNorm>,
    pub u: Option<Vec2>,
    pub v: Option<Vec2>,
    pub f: Option<TestFunction>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub tol: Option<f64>,
    pub admissibility_c: Option<f64>,
    pub delta0: Option<f64>,
    pub window: Option<Window>,
    pub z: Option<String>,
    pub depth: Option<usize>,
    pub s1: Option<f64>,
    pub s2: Option<f64>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub corrupt_bump: Option<f64>,
    pub workers: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Keys set in `top` replace those in `self`.
    pub fn overlay(mut self, top: Settings) -> Settings {
        overlay!(self, top; lattice, norm, u, v, f, t, t_grid, alpha, tol, admissibility_c, delta0, window, z, depth,
            s1, s2, grid, seed, samples, corrupt_bump, workers);
        self
    }

    pub fn lattice_spec(&self, default: LatticeKind) -> LatticeSpec {
        LatticeSpec::new(self.lattice.unwrap_or(default), self.norm.unwrap_or_default())
    }

    pub fn workers(&self) -> Result<usize, CliError> {
        match self.workers {
            Some(0) => Err(CliError::Config("workers must be positive".into())),
            Some(n) => Ok(n),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

pub fn parse_vec2(s: &str) -> Result<Vec2, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => Ok(Vec2::new(parse_f64(x)?, parse_f64(y)?)),
        _ => Err(format!("expected `x,y`, got `{s}`")),
    }
}

/// A comma-separated list of radii, kept whole so clap treats it as one value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

pub fn parse_grid_arg(s: &str) -> Result<Grid, String> {
    parse_grid(s).map(Grid)
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|p| parse_f64(p.trim())).collect()
}

fn parse_f64(s: &str) -> Result<f64, String> {
    f64::from_str(s).map_err(|_| format!("`{s}` is not a number"))
}

/// `kind:args` shorthand (`annulus:1,2`, `box:x0,x1,y0,y1`, `bump:x,y,r`,
/// `hat:r0,r1`) or an inline JSON object.
pub fn parse_function(s: &str) -> Result<TestFunction, String> {
    if s.trim_start().starts_with('{') {
        return serde_json::from_str(s).map_err(|e| e.to_string());
    }
    let (kind, args) = s.split_once(':').ok_or_else(|| format!("expected `kind:args`, got `{s}`"))?;
    let a = parse_grid(args)?;
    let f = match (kind, a.as_slice()) {
        ("annulus", [r0, r1]) => TestFunction::annulus(*r0, *r1),
        ("box", [x0, x1, y0, y1]) => TestFunction::indicator_box(*x0, *x1, *y0, *y1),
        ("bump", [x, y, r]) => TestFunction::bump(Vec2::new(*x, *y), *r),
        ("hat", [r0, r1]) => TestFunction::hat(*r0, *r1),
        _ => return Err(format!("cannot read test function `{s}`")),
    };
    f.map_err(|e| e.to_string())
}

/// `golden`, `sqrt2-1`, `p/q`, `surd:p,d,q` for `(p + √d)/q`,
/// `quotients:a1,a2,…` or a decimal.
pub fn parse_slope(s: &str) -> Result<CfInput, String> {
    let s = s.trim();
    match s {
        "golden" => return Ok(CfInput::golden()),
        "sqrt2-1" => return Ok(CfInput::Surd(QuadraticSurd::SQRT2_MINUS_1)),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix("surd:") {
        let v: Vec<&str> = rest.split(',').map(str::trim).collect();
        let [p, d, q] = v.as_slice() else { return Err(format!("expected `surd:p,d,q`, got `{s}`")) };
        let num = |x: &str| x.parse::<i64>().map_err(|_| format!("`{x}` is not an integer"));
        let d = d.parse::<u64>().map_err(|_| format!("`{d}` is not a nonnegative integer"))?;
        return QuadraticSurd::new(num(p)?, d, num(q)?).map(CfInput::Surd).map_err(|e| e.to_string());
    }
    if let Some(rest) = s.strip_prefix("quotients:") {
        let a: Result<Vec<u64>, _> = rest.split(',').map(|x| x.trim().parse::<u64>()).collect();
        return a.map(CfInput::Quotients).map_err(|_| format!("cannot read quotients `{rest}`"));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = p.trim().parse::<i128>().map_err(|_| format!("`{p}` is not an integer"))?;
        let q = q.trim().parse::<i128>().map_err(|_| format!("`{q}` is not an integer"))?;
        return Ok(CfInput::Rational { p, q });
    }
    parse_f64(s).map(CfInput::Float)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win() {
        let file = Settings { t: Some(10.0), depth: Some(3), ..Default::default() };
        let flags = Settings { t: Some(20.0), ..Default::default() };
        let s = file.overlay(flags);
        assert_eq!((s.t, s.depth), (Some(20.0), Some(3)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<Settings>(r#"{"T": 5, "tee": 3}"#).is_err());
        let s: Settings = serde_json::from_str(r#"{"T": 5, "u": [1, 0], "lattice": "quaternion23"}"#).unwrap();
        assert_eq!(s.u, Some(Vec2::new(1.0, 0.0)));
    }

    #[test]
    fn shorthands() {
        assert_eq!(parse_vec2("1, 0").unwrap(), Vec2::new(1.0, 0.0));
        assert!(parse_vec2("1").is_err());
        assert_eq!(parse_function("hat:0.5,4").unwrap(), TestFunction::hat(0.5, 4.0).unwrap());
        assert!(parse_function("hat:4,0.5").is_err());
        assert_eq!(parse_slope("2/5").unwrap(), CfInput::Rational { p: 2, q: 5 });
        assert_eq!(parse_slope("golden").unwrap(), CfInput::golden());
        assert!(matches!(parse_slope("0.25").unwrap(), CfInput::Float(x) if x == 0.25));
        assert!(parse_slope("surd:1,2").is_err());
    }
}
