//! Field-unit parsing. Everything downstream works in SI.

use crate::error::{Error, Result};

pub const MILLIDARCY: f64 = 9.869233e-16;
pub const BAR: f64 = 1.0e5;
pub const CENTIPOISE: f64 = 1.0e-3;
pub const DAY: f64 = 86_400.0;

/// Physical dimension expected for a configuration value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    Dimensionless,
    Length,
    Permeability,
    Pressure,
    Viscosity,
    Time,
    Density,
    VolumeRate,
    Acceleration,
    /// `B_c` of the capillary law, Pa·m.
    CapillaryStrength,
}

impl Dimension {
    /// Canonical SI unit string, as written back by `validate`.
    pub fn si_unit(self) -> &'static str {
        match self {
            Dimension::Dimensionless => "",
            Dimension::Length => "m",
            Dimension::Permeability => "m2",
            Dimension::Pressure => "Pa",
            Dimension::Viscosity => "Pa*s",
            Dimension::Time => "s",
            Dimension::Density => "kg/m3",
            Dimension::VolumeRate => "m3/s",
            Dimension::Acceleration => "m/s2",
            Dimension::CapillaryStrength => "Pa*m",
        }
    }
}

/// Scale factor to SI and dimension of a unit string.
pub fn unit_factor(unit: &str) -> Result<(f64, Dimension)> {
    let u: String = unit
        .trim()
        .chars()
        .map(|c| match c {
            '·' | '.' => '*',
            '²' => '2',
            '³' => '3',
            other => other,
        })
        .filter(|c| !c.is_whitespace())
        .collect();
    let u = u.replace('^', "");
    let f = match u.as_str() {
        "" | "1" | "-" => (1.0, Dimension::Dimensionless),
        "m" => (1.0, Dimension::Length),
        "md" | "mD" => (MILLIDARCY, Dimension::Permeability),
        "m2" => (1.0, Dimension::Permeability),
        "bar" => (BAR, Dimension::Pressure),
        "Pa" => (1.0, Dimension::Pressure),
        "cP" | "cp" => (CENTIPOISE, Dimension::Viscosity),
        "Pa*s" => (1.0, Dimension::Viscosity),
        "day" | "days" => (DAY, Dimension::Time),
        "s" => (1.0, Dimension::Time),
        "kg/m3" => (1.0, Dimension::Density),
        "m3/day" => (1.0 / DAY, Dimension::VolumeRate),
        "m3/s" => (1.0, Dimension::VolumeRate),
        "m/s2" => (1.0, Dimension::Acceleration),
        "bar*md1/2" | "bar*md(1/2)" | "bar*md{1/2}" | "bar*md0*5" => {
            (BAR * MILLIDARCY.sqrt(), Dimension::CapillaryStrength)
        }
        "Pa*m" => (1.0, Dimension::CapillaryStrength),
        _ => return Err(Error::config(format!("unknown unit `{unit}`"))),
    };
    Ok(f)
}

/// Converts `value` given in `unit` to SI.
pub fn normalize(value: f64, unit: &str) -> Result<(f64, Dimension)> {
    let (f, d) = unit_factor(unit)?;
    Ok((value * f, d))
}

/// Parses `"<number> <unit>"` and checks the dimension.
pub fn parse_quantity(text: &str, expected: Dimension) -> Result<f64> {
    let text = text.trim();
    let split = text
        .find(|c: char| c.is_whitespace())
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 = num
        .parse()
        .map_err(|_| Error::config(format!("`{text}` does not start with a number")))?;
    let (si, dim) = normalize(value, unit)?;
    if dim != expected {
        return Err(Error::config(format!(
            "`{text}` has dimension {dim:?}, expected {expected:?}"
        )));
    }
    Ok(si)
}

/// SI value rendered with its canonical unit, shortest round-trip digits.
pub fn format_si(value: f64, dim: Dimension) -> String {
    match dim {
        Dimension::Dimensionless => format!("{value:?}"),
        _ => format!("{value:?} {}", dim.si_unit()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_conversions() {
        assert_eq!(normalize(1.0, "md").unwrap().0, 9.869233e-16);
        assert_eq!(normalize(100.0, "bar").unwrap().0, 1.0e7);
        assert!((normalize(0.1, "day").unwrap().0 - 8640.0).abs() < 1e-9);
        assert_eq!(normalize(1.0, "cP").unwrap().0, 1e-3);
        assert_eq!(normalize(1.0, "Pa·s").unwrap(), (1.0, Dimension::Viscosity));
        assert_eq!(normalize(1000.0, "kg/m³").unwrap().1, Dimension::Density);
        assert!((normalize(0.63, "m³/day").unwrap().0 - 0.63 / 86400.0).abs() < 1e-20);
        assert_eq!(normalize(2.0, "m²").unwrap(), (2.0, Dimension::Permeability));
    }

    #[test]
    fn capillary_strength_to_pascal_metres() {
        let (v, d) = normalize(60.0, "bar·md^{1/2}").unwrap();
        assert_eq!(d, Dimension::CapillaryStrength);
        assert!((v - 60.0 * 1e5 * 9.869233e-16f64.sqrt()).abs() < 1e-15);
        // p_c scale B_c/sqrt(K) in bar at K = 50 md
        let k = normalize(50.0, "md").unwrap().0;
        assert!((v / k.sqrt() / 1e5 - 60.0 / 50f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unknown_units_rejected() {
        assert!(normalize(1.0, "furlong").is_err());
        assert!(parse_quantity("3 psi", Dimension::Pressure).is_err());
        assert!(parse_quantity("3 cP", Dimension::Pressure).is_err());
        assert!(parse_quantity("abc bar", Dimension::Pressure).is_err());
        assert_eq!(parse_quantity("100 bar", Dimension::Pressure).unwrap(), 1e7);
        assert_eq!(parse_quantity("0.2", Dimension::Dimensionless).unwrap(), 0.2);
    }

    #[test]
    fn si_formatting_round_trips() {
        for (v, d) in [(1e-3, Dimension::Viscosity), (9.869233e-16, Dimension::Permeability), (0.2, Dimension::Dimensionless)] {
            assert_eq!(parse_quantity(&format_si(v, d), d).unwrap(), v);
        }
    }
}
