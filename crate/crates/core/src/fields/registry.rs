//! Registry names such as `counterexample:n=4:gamma=auto` or `twisting:levels=8`.

use std::collections::BTreeMap;

use super::stream::bump_stream_field;
use super::*;

/// Registry names of the built-in fields, as accepted by [`field_from_registry`].
pub const BUILTIN: &[&str] = &[
    "counterexample:n=4:gamma=auto",
    "twisting:levels=8",
    "capillary:R=1",
    "stream:bump",
    "stream3:bump",
    "constant:c=0,-1",
    "zero:n=2",
];

fn parse_f64(name: &str, key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::UnknownField(format!("{name}: `{key}={v}` is not a number")))
}

fn params(name: &str, parts: &[&str]) -> Result<(BTreeMap<String, String>, Vec<String>)> {
    let mut map = BTreeMap::new();
    let mut flags = Vec::new();
    for p in parts {
        match p.split_once('=') {
            Some((k, v)) => {
                if map.insert(k.to_string(), v.to_string()).is_some() {
                    return Err(Error::UnknownField(format!("{name}: duplicate key `{k}`")));
                }
            }
            None => flags.push(p.to_string()),
        }
    }
    Ok((map, flags))
}

fn take_f64(name: &str, map: &mut BTreeMap<String, String>, key: &str, default: f64) -> Result<f64> {
    match map.remove(key) {
        Some(v) => parse_f64(name, key, &v),
        None => Ok(default),
    }
}

fn finish(name: &str, map: BTreeMap<String, String>) -> Result<()> {
    match map.keys().next() {
        Some(k) => Err(Error::UnknownField(format!("{name}: unknown parameter `{k}`"))),
        None => Ok(()),
    }
}

/// Builds a field from its registry name.
pub fn field_from_registry(name: &str) -> Result<VectorField> {
    let parts: Vec<&str> = name.trim().split(':').collect();
    let (kind, rest) = parts.split_first().ok_or_else(|| Error::UnknownField(name.into()))?;
    let (mut map, flags) = params(name, rest)?;
    let field = match *kind {
        "counterexample" => {
            let n = take_f64(name, &mut map, "n", 4.0)? as usize;
            let gamma = match map.remove("gamma").as_deref() {
                None | Some("auto") | Some("AUTO") => Gamma::Auto,
                Some(v) => Gamma::Value(parse_f64(name, "gamma", v)?),
            };
            make_counterexample_field(n, gamma)?
        }
        "twisting" => {
            let levels = take_f64(name, &mut map, "levels", 8.0)?;
            if levels < 1.0 || levels.fract() != 0.0 {
                return Err(Error::InvalidParameter(format!("levels must be a positive integer, got {levels}")));
            }
            make_twisting_field(levels as u32, None)?
        }
        "capillary" => make_capillary_field(take_f64(name, &mut map, "R", 1.0)?)?,
        "stream" => {
            if flags.iter().any(|f| f != "bump") {
                return Err(Error::UnknownField(name.into()));
            }
            let bump = RadialBump::new(
                vec![take_f64(name, &mut map, "cx", 0.0)?, take_f64(name, &mut map, "cy", 2.0)?],
                take_f64(name, &mut map, "R", 1.0)?,
                take_f64(name, &mut map, "A", 1.0)?,
            )?;
            bump_stream_field(bump)?
        }
        "stream3" => {
            if flags.iter().any(|f| f != "bump") {
                return Err(Error::UnknownField(name.into()));
            }
            let bump = RadialBump::new(
                vec![
                    take_f64(name, &mut map, "cx", 0.0)?,
                    take_f64(name, &mut map, "cy", 0.0)?,
                    take_f64(name, &mut map, "cz", 2.0)?,
                ],
                take_f64(name, &mut map, "R", 1.0)?,
                take_f64(name, &mut map, "A", 1.0)?,
            )?;
            make_stream_field_3d(bump)?
        }
        "constant" => {
            let c = map
                .remove("c")
                .ok_or_else(|| Error::UnknownField(format!("{name}: missing `c=`")))?;
            let values = c
                .split(',')
                .map(|v| parse_f64(name, "c", v))
                .collect::<Result<Vec<_>>>()?;
            if values.len() < 2 {
                return Err(Error::InvalidParameter("constant fields need dimension >= 2".into()));
            }
            VectorField::constant(&values)
        }
        "zero" => {
            let n = take_f64(name, &mut map, "n", 2.0)? as usize;
            if n < 2 {
                return Err(Error::InvalidParameter("zero fields need dimension >= 2".into()));
            }
            VectorField::zero(n)
        }
        _ => return Err(Error::UnknownField(name.into())),
    };
    if *kind != "stream" && *kind != "stream3" && !flags.is_empty() {
        return Err(Error::UnknownField(name.into()));
    }
    finish(name, map)?;
    Ok(field.renamed(name.trim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve() {
        for name in BUILTIN {
            let f = field_from_registry(name).unwrap();
            assert_eq!(f.id, *name);
        }
    }

    #[test]
    fn unknown_names_rejected() {
        for bad in ["nope", "capillary:Q=1", "stream:wave", "counterexample:n=x"] {
            assert!(field_from_registry(bad).is_err(), "{bad}");
        }
        assert!(matches!(field_from_registry("counterexample:n=3"), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn stream_parameters() {
        let f = field_from_registry("stream:bump:cx=5:cy=2").unwrap();
        assert_eq!(f.eval(&[0.0, 2.5]).unwrap(), vec![0.0, 0.0]);
        assert_ne!(f.eval(&[5.2, 2.5]).unwrap(), vec![0.0, 0.0]);
    }
}
