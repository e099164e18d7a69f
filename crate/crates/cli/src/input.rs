//! Resolution of spec arguments: JSON files or built-in names.

use anyhow::{anyhow, bail, Context, Result};
use hamstat::construct::{AssociatedFamily, TorusSpec};
use hamstat::examples::{castro_urbano, rhombic_torus, standard_torus, CastroUrbano};
use hamstat::finitetype::standard_torus_fixture;
use hamstat::io::{parse_complex, SeedConfig, SpecConfig};
use hamstat::lattice::Lattice;
use hamstat::Complex64 as C;
use std::path::Path;

/// Default shear of the negative-control probe.
const DEFAULT_SHEAR: f64 = 0.3;

/// A surface to evaluate: a torus spec, optionally precomposed with the
/// non-conformal shear `x + iy ↦ (x + sy) + iy`.
#[derive(Debug, Clone)]
pub struct Target {
    pub name: String,
    pub spec: TorusSpec,
    pub shear: Option<f64>,
}

impl Target {
    pub fn lattice(&self) -> &Lattice {
        self.spec.lattice()
    }

    /// `z ↦ X_λ(z)` for this target.
    pub fn evaluator(&self, lambda: C) -> Result<impl Fn(C) -> hamstat::algebra::Vec4 + Sync> {
        let family = AssociatedFamily::new(&self.spec, lambda)?;
        let shear = self.shear.unwrap_or(0.0);
        Ok(move |z: C| family.eval(C::new(z.re + shear * z.im, z.im)))
    }

    /// FNV-1a hash of the canonical numeric config.
    pub fn hash(&self) -> String {
        let mut text = serde_json::to_string(&SpecConfig::from_spec(&self.spec, None)).expect("serializable");
        if let Some(s) = self.shear {
            text.push_str(&format!("|shear={s:?}"));
        }
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("fnv1a64:{h:016x}")
    }
}

fn parse_list<const N: usize>(args: &str, what: &str) -> Result<[f64; N]> {
    let vals: Vec<f64> = args
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("invalid {what} parameter {s:?}")))
        .collect::<Result<_>>()?;
    vals.try_into().map_err(|v: Vec<f64>| anyhow!("{what} expects {N} parameters, got {}", v.len()))
}

fn builtin(name: &str) -> Result<Target> {
    let (head, args) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let spec = match head {
        "standard" => {
            let [w1, w2] = args.map_or(Ok([1.0, 1.0]), |a| parse_list(a, "standard"))?;
            standard_torus(w1, w2)?.spec
        }
        "rhombic" => rhombic_torus().spec,
        "castro-urbano" => {
            let [p, q, r, s] = args.map_or(Ok([2.0, 1.0, 1.0, 2.0]), |a| parse_list(a, "castro-urbano"))?;
            let ints = [p, q, r, s];
            if ints.iter().any(|x| x.fract() != 0.0 || *x < 0.0) {
                bail!("castro-urbano expects non-negative integers");
            }
            match castro_urbano(p as u32, q as u32, r as u32, s as u32)? {
                CastroUrbano::Family(f) => f.spec(C::new(1.0, 0.0), C::new(1.0, 0.0))?,
                CastroUrbano::Degenerate(t) => t.spec,
            }
        }
        _ => bail!("unknown builtin {name:?} (expected standard, rhombic or castro-urbano)"),
    };
    Ok(Target { name: format!("builtin:{name}"), spec, shear: None })
}

/// `builtin:<name>[:args]`, `probe:sheared[:s]`, or a JSON spec file.
pub fn load_target(arg: &str) -> Result<Target> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return builtin(name);
    }
    if let Some(rest) = arg.strip_prefix("probe:") {
        let shear = match rest.strip_prefix("sheared") {
            Some("") => DEFAULT_SHEAR,
            Some(s) if s.starts_with(':') => s[1..].parse().with_context(|| format!("invalid shear {:?}", &s[1..]))?,
            _ => bail!("unknown probe {rest:?} (expected sheared)"),
        };
        let spec = standard_torus(1.0, 1.0)?.spec;
        return Ok(Target { name: arg.to_string(), spec, shear: Some(shear) });
    }
    let cfg = load_spec_config(Path::new(arg))?;
    let spec = cfg.build().with_context(|| format!("invalid spec in {arg}"))?;
    Ok(Target { name: cfg.name.unwrap_or_else(|| arg.to_string()), spec, shear: None })
}

pub fn load_spec_config(path: &Path) -> Result<SpecConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    SpecConfig::from_json(&text).with_context(|| format!("in {}", path.display()))
}

/// `builtin:standard[:w1,w2]` or a JSON seed file.
pub fn load_seed(arg: &str) -> Result<SeedConfig> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        let (head, args) = match name.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (name, None),
        };
        if head != "standard" {
            bail!("unknown builtin seed {name:?} (expected standard)");
        }
        let [w1, w2] = args.map_or(Ok([1.0, 1.0]), |a| parse_list(a, "standard"))?;
        let fx = standard_torus_fixture(w1, w2)?;
        return Ok(SeedConfig::from_fixture(&fx, Some(arg.to_string())));
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("cannot read {arg}"))?;
    SeedConfig::from_json(&text).with_context(|| format!("in {arg}"))
}

/// Comma-separated complex expressions, each on the unit circle.
pub fn parse_lambdas(arg: &str) -> Result<Vec<C>> {
    arg.split(',')
        .map(|s| {
            let l = parse_complex(s.trim())?;
            if (l.norm() - 1.0).abs() > 1e-12 {
                bail!("λ = {s} is not on the unit circle");
            }
            Ok(l)
        })
        .collect()
}

pub fn fmt_complex(z: C) -> String {
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    if im < 0.0 {
        format!("{re}-{}i", -im)
    } else {
        format!("{re}+{im}i")
    }
}
