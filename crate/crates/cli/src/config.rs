//! Run configuration: a flat key-value format with `[section]` headers.
//!
//! Lines are `key = value`; `#` starts a comment; repeated keys accumulate in
//! order (used for atoms, density segments and anchor offsets). The format
//! round-trips: parse -> serialize -> parse is the identity on the parsed
//! representation. The full schema is documented in `docs/config.md`.

use anyhow::{anyhow, bail, Context, Result};
use hplan::{
    AnchorRule, AnchorSpec, CompactSpace, CostFunction, Map1D, Measure, Measure1D, Piecewise1D,
    Segment,
};
use std::fmt::Write as _;

/// Raw parsed file: ordered (section, key, value) triples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    pub entries: Vec<(String, String, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig> {
        let mut section = String::new();
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| anyhow!("line {}: unterminated section header", lineno + 1))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            entries.push((
                section.clone(),
                key.trim().to_string(),
                value.trim().to_string(),
            ));
        }
        Ok(RawConfig { entries })
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut current = None::<&str>;
        for (section, key, value) in &self.entries {
            if current != Some(section.as_str()) {
                if current.is_some() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{section}]");
                current = Some(section);
            }
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(s, k, _)| s == section && k == key)
            .map(|(_, _, v)| v.as_str())
    }

    fn get_all(&self, section: &str, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(s, k, _)| s == section && k == key)
            .map(|(_, _, v)| v.as_str())
            .collect()
    }

    fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key)
            .ok_or_else(|| anyhow!("missing `{key}` in section [{section}]"))
    }
}

fn floats(s: &str) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|t| t.parse::<f64>().with_context(|| format!("bad number `{t}`")))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolverChoice {
    Exact,
    Entropic { eps_target: f64, max_iter: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProjectionConfig {
    Barycentric,
    GeometricMedianHNet,
    None,
}

/// Fully resolved run configuration.
#[derive(Debug)]
pub struct RunConfig {
    pub x: CompactSpace,
    pub y: CompactSpace,
    pub mu: Measure,
    pub nu: Measure,
    pub cost: CostFunction,
    pub cost_name: String,
    pub k: usize,
    pub anchor: AnchorSpec,
    pub solver: SolverChoice,
    pub projection: ProjectionConfig,
    pub p_values: Vec<f64>,
    pub reference: Option<Piecewise1D>,
    pub reference_optimal: bool,
    pub out_dir: String,
    pub seed: u64,
}

fn parse_space(raw: &RawConfig, section: &str) -> Result<CompactSpace> {
    let kind = raw.require(section, "kind")?;
    match kind {
        "interval" => {
            let b = floats(raw.require(section, "bounds")?)?;
            if b.len() != 2 {
                bail!("[{section}] bounds needs `lo hi`");
            }
            Ok(CompactSpace::interval(b[0], b[1])?)
        }
        "circle" => {
            let c: f64 = raw.require(section, "circumference")?.parse()?;
            Ok(CompactSpace::circle(c)?)
        }
        other => bail!("[{section}] unsupported space kind `{other}` for configs"),
    }
}

fn parse_measure(raw: &RawConfig, section: &str) -> Result<Measure> {
    if let Some(u) = raw.get(section, "uniform") {
        let b = floats(u)?;
        if b.len() != 2 {
            bail!("[{section}] uniform needs `lo hi`");
        }
        return Ok(Measure::uniform_interval(b[0], b[1])?);
    }
    let mut atoms = Vec::new();
    for a in raw.get_all(section, "atom") {
        let v = floats(a)?;
        if v.len() != 2 {
            bail!("[{section}] atom needs `location mass`");
        }
        atoms.push((v[0], v[1]));
    }
    let mut segments = Vec::new();
    for s in raw.get_all(section, "segment") {
        let v = floats(s)?;
        if v.len() != 3 {
            bail!("[{section}] segment needs `lo hi height`");
        }
        segments.push(Segment { lo: v[0], hi: v[1], height: v[2] });
    }
    if atoms.is_empty() && segments.is_empty() {
        bail!("[{section}] needs `uniform`, `atom` or `segment` entries");
    }
    Ok(Measure::Line(Measure1D::new(atoms, segments)?))
}

fn parse_reference(raw: &RawConfig) -> Result<Option<Piecewise1D>> {
    let Some(spec) = raw.get("reference", "map") else {
        return Ok(None);
    };
    let mut parts = spec.split_whitespace();
    match parts.next() {
        Some("affine") => {
            let rest: Vec<f64> = parts
                .map(|t| t.parse::<f64>().map_err(|e| anyhow!("{e}")))
                .collect::<Result<_>>()?;
            if rest.len() != 4 {
                bail!("reference map affine needs `lo hi intercept slope`");
            }
            Ok(Some(Piecewise1D::affine(rest[0], rest[1], rest[2], rest[3])))
        }
        Some("pieces") => {
            // pieces lo hi intercept slope ; ... given as repeated `piece` keys
            bail!("use repeated `piece = lo hi intercept slope` keys instead")
        }
        _ => bail!("unsupported reference map `{spec}`"),
    }
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<RunConfig> {
        let raw = RawConfig::parse(text)?;
        let x = parse_space(&raw, "space.x")?;
        let y = parse_space(&raw, "space.y")?;
        let mu = parse_measure(&raw, "measure.mu")?;
        let nu = parse_measure(&raw, "measure.nu")?;
        let cost_name = raw.require("cost", "name")?.to_string();
        let mut cost = CostFunction::from_name(&cost_name)?;
        if let Some(l) = raw.get("cost", "lipschitz") {
            cost = cost.with_lipschitz(l.parse()?);
        }
        let k: usize = raw.require("partition", "k")?.parse()?;
        let anchor = match raw.get("partition", "anchor").unwrap_or("center") {
            "center" => AnchorSpec::Rule(AnchorRule::Center),
            "left" => AnchorSpec::Rule(AnchorRule::Left),
            "right" => AnchorSpec::Rule(AnchorRule::Right),
            "offsets" => {
                let offs = raw
                    .get_all("partition", "offset")
                    .iter()
                    .map(|t| t.parse::<f64>().map_err(|e| anyhow!("{e}")))
                    .collect::<Result<Vec<_>>>()?;
                AnchorSpec::Offsets(offs)
            }
            other => bail!("unknown anchor rule `{other}`"),
        };
        let solver = match raw.get("solver", "kind").unwrap_or("exact") {
            "exact" => SolverChoice::Exact,
            "entropic" => SolverChoice::Entropic {
                eps_target: raw
                    .get("solver", "eps_target")
                    .unwrap_or("1e-3")
                    .parse()?,
                max_iter: raw.get("solver", "max_iter").unwrap_or("100000").parse()?,
            },
            other => bail!("unknown solver kind `{other}`"),
        };
        let projection = match raw.get("projection", "kind") {
            None | Some("none") => ProjectionConfig::None,
            Some("barycentric") => ProjectionConfig::Barycentric,
            Some("gm") => ProjectionConfig::GeometricMedianHNet,
            Some(other) => bail!("unknown projection kind `{other}`"),
        };
        let p_values = match raw.get("metrics", "p") {
            Some(s) => floats(s)?,
            None => vec![1.0, 2.0],
        };
        let reference = parse_reference(&raw)?;
        let reference_optimal = raw
            .get("reference", "optimal")
            .map(|v| v == "true")
            .unwrap_or(false);
        let out_dir = raw.get("output", "dir").unwrap_or("out").to_string();
        let seed: u64 = raw.get("run", "seed").unwrap_or("0").parse()?;
        Ok(RunConfig {
            x,
            y,
            mu,
            nu,
            cost,
            cost_name,
            k,
            anchor,
            solver,
            projection,
            p_values,
            reference,
            reference_optimal,
            out_dir,
            seed,
        })
    }

    pub fn reference_map(&self) -> Option<Map1D> {
        self.reference.clone().map(Map1D::Piecewise)
    }
}
