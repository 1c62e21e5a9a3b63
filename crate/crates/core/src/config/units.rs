//! Quantities written in config files: either a bare number (SI) or a string
//! carrying an explicit unit suffix, e.g. `"40um"`, `"0.58 ms"`, `"600 uS/cm2"`.

use serde::{Deserialize, Serialize};

/// Physical dimension a config quantity is expected to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Time,
    Velocity,
    Voltage,
    InverseVoltage,
    Conductivity,
    Conductance,
    SpecificConductance,
    SpecificCapacitance,
    Resistivity,
    Frequency,
    Dimensionless,
}

impl Dimension {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Length => &[("m", 1.0), ("cm", 1e-2), ("mm", 1e-3), ("um", 1e-6), ("nm", 1e-9)],
            Dimension::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6)],
            Dimension::Velocity => &[("m/s", 1.0), ("mm/ms", 1.0), ("mm/s", 1e-3), ("um/ms", 1e-3)],
            Dimension::Voltage => &[("V", 1.0), ("mV", 1e-3), ("uV", 1e-6)],
            Dimension::InverseVoltage => &[("/V", 1.0), ("/mV", 1e3)],
            Dimension::Conductivity => &[("S/m", 1.0), ("mS/m", 1e-3), ("S/cm", 1e2), ("mS/cm", 1e-1)],
            Dimension::Conductance => &[("S", 1.0), ("mS", 1e-3), ("uS", 1e-6), ("nS", 1e-9)],
            Dimension::SpecificConductance => &[("S/m2", 1.0), ("S/cm2", 1e4), ("mS/cm2", 10.0), ("uS/cm2", 1e-2)],
            Dimension::SpecificCapacitance => &[("F/m2", 1.0), ("uF/cm2", 1e-2)],
            Dimension::Resistivity => &[("ohm*m", 1.0), ("ohm*cm", 1e-2)],
            Dimension::Frequency => &[("Hz", 1.0), ("kHz", 1e3)],
            Dimension::Dimensionless => &[],
        }
    }
}

/// Raw quantity as written in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuantityInput {
    Integer(i64),
    Number(f64),
    Text(String),
}

impl QuantityInput {
    pub fn to_si(&self, dim: Dimension) -> Result<f64, String> {
        match self {
            QuantityInput::Integer(v) => Ok(*v as f64),
            QuantityInput::Number(v) => Ok(*v),
            QuantityInput::Text(s) => parse_quantity(s, dim),
        }
    }
}

fn canonical_unit(unit: &str) -> String {
    unit.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            'µ' | 'μ' => 'u',
            '·' | '.' => '*',
            _ => c,
        })
        .collect::<String>()
        .replace('Ω', "ohm")
        .replace("Ohm", "ohm")
        .replace("^2", "2")
        .replace("²", "2")
}

/// Parse `"<number> <unit>"` into SI. A missing unit means SI already.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, String> {
    let trimmed = text.trim();
    let split = trimmed
        .char_indices()
        .find(|&(i, c)| {
            let numeric = c.is_ascii_digit() || matches!(c, '+' | '-' | '.');
            let exponent = matches!(c, 'e' | 'E')
                && i > 0
                && trimmed[..i].chars().last().is_some_and(|p| p.is_ascii_digit() || p == '.')
                && trimmed[i + 1..].chars().next().is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+');
            !(numeric || exponent)
        })
        .map(|(i, _)| i)
        .unwrap_or(trimmed.len());
    let (number, unit) = trimmed.split_at(split);
    let value: f64 = number.trim().parse().map_err(|_| format!("cannot read a number from {text:?}"))?;
    let unit = canonical_unit(unit);
    if unit.is_empty() {
        return Ok(value);
    }
    dim.units().iter().find(|(suffix, _)| canonical_unit(suffix) == unit).map(|(_, factor)| value * factor).ok_or_else(|| {
        let known: Vec<&str> = dim.units().iter().map(|(s, _)| *s).collect();
        format!("unknown unit {unit:?} in {text:?}; expected one of {known:?}")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes_convert_to_si() {
        let close = |a: f64, b: f64| ((a - b) / b).abs() < 1e-12;
        assert!(close(parse_quantity("40um", Dimension::Length).unwrap(), 4e-5));
        assert!(close(parse_quantity("40 µm", Dimension::Length).unwrap(), 4e-5));
        assert!(close(parse_quantity("0.58 ms", Dimension::Time).unwrap(), 5.8e-4));
        assert!(close(parse_quantity("600 uS/cm2", Dimension::SpecificConductance).unwrap(), 6.0));
        assert!(close(parse_quantity("1 uF/cm²", Dimension::SpecificCapacitance).unwrap(), 1e-2));
        assert!(close(parse_quantity("-90mV", Dimension::Voltage).unwrap(), -0.09));
        assert!(close(parse_quantity("1.5e-4 m", Dimension::Length).unwrap(), 1.5e-4));
        assert!(close(parse_quantity("1 Ω·m", Dimension::Resistivity).unwrap(), 1.0));
        assert!(close(parse_quantity("0.1/mV", Dimension::InverseVoltage).unwrap(), 100.0));
        assert_eq!(parse_quantity("3", Dimension::Velocity).unwrap(), 3.0);
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        assert!(parse_quantity("40 ms", Dimension::Length).is_err());
        assert!(parse_quantity("abc", Dimension::Length).is_err());
    }
}
