//! Parsing of space definitions, function specs and point lists.

use std::path::Path;

use hbspace::harmonic::DiskFunction;
use hbspace::model::SpaceHandle;
use hbspace::symbols::{RowSymbol, SpaceSpec};
use hbspace::{Error, Result, C64};

pub fn load_space_spec(file: Option<&Path>, named: Option<&str>) -> Result<SpaceSpec> {
    match (file, named) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::InvalidArgument(format!("malformed space JSON in {}: {e}", path.display())))
        }
        (None, Some(name)) => Ok(SpaceSpec::named(name)),
        (None, None) => Err(Error::InvalidArgument("a space is required: pass --space FILE or --named NAME".into())),
    }
}

pub fn load_symbol(file: Option<&Path>, named: Option<&str>) -> Result<RowSymbol> {
    load_space_spec(file, named)?.to_symbol()
}

/// `"0.5"` or `"0.5:-0.25"` (real:imag).
pub fn parse_complex(s: &str) -> Result<C64> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("cannot parse complex number {s:?}; use RE or RE:IM"));
    match s.split_once(':') {
        Some((re, im)) => Ok(C64::new(re.trim().parse().map_err(|_| bad())?, im.trim().parse().map_err(|_| bad())?)),
        None => Ok(C64::new(s.parse().map_err(|_| bad())?, 0.0)),
    }
}

pub fn parse_points(list: &[String]) -> Result<Vec<C64>> {
    list.iter().map(|s| parse_complex(s)).collect()
}

/// Function specs:
/// - `coeffs:c0,c1,...` Taylor coefficients (each `RE` or `RE:IM`),
/// - `monomial:K`,
/// - `szego:A` for `1/(1 - conj(a) z)`,
/// - `kernel:A` for the reproducing kernel of the space at `a`.
///
/// A bare list `c0,c1,...` is read as coefficients.
pub fn parse_function(spec: &str, space: &SpaceHandle) -> Result<DiskFunction> {
    let (kind, arg) = spec.split_once(':').unwrap_or(("coeffs", spec));
    let bad = |m: &str| Error::InvalidArgument(format!("bad function spec {spec:?}: {m}"));
    match kind {
        "coeffs" => {
            let t = arg.split(',').map(parse_complex).collect::<Result<Vec<_>>>()?;
            if t.is_empty() {
                return Err(bad("no coefficients"));
            }
            Ok(DiskFunction::new(t))
        }
        "monomial" => Ok(DiskFunction::monomial(arg.trim().parse().map_err(|_| bad("expected an integer"))?)),
        "szego" => {
            let a = parse_complex(arg)?;
            if a.norm() >= 1.0 {
                return Err(bad("point must lie in the disk"));
            }
            Ok(DiskFunction::szego(a, space.degree()))
        }
        "kernel" => space.kernel(parse_complex(arg)?),
        _ if spec.contains(',') || kind.trim().parse::<f64>().is_ok() => parse_function(&format!("coeffs:{spec}"), space),
        _ => Err(bad("unknown kind; use coeffs:, monomial:, szego: or kernel:")),
    }
}
