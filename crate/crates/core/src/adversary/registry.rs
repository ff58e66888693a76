//! Attack registry: every strategy is registered under a stable name and
//! selected at runtime from config or the command line.
//!
//! Grammar: `<name>` or `<name>:<args>`. Registered names:
//!
//! | name                            | args                 | attack |
//! |---------------------------------|----------------------|--------|
//! | `none`                          |                      | honest channel |
//! | `intercept-resend`              | `<b><c>` or `random` | fake pair, default `+0` |
//! | `measure-resend-z`              |                      | Z basis on both particles |
//! | `measure-resend-x`              |                      | X basis on both particles |
//! | `measure-resend-random`         |                      | per-particle random basis |
//! | `entangle-measure`              | `<theta_b>,<theta_c>`| controlled probe rotations, identity backward |
//! | `entangle-measure-compensated`  | `<theta_b>,<theta_c>`| same forward, uncomputing backward |
//! | `dishonest-bob-i` / `-ii` / `-iii` |                   | participant schemes |

use super::{controlled_rotation_attack, AttackSpec, BasisPolicy, DishonestScheme, FakeStatePolicy, KetLabel};
use crate::error::{Error, Result};

/// Default probe width for entangle-measure attacks parsed by name.
pub const DEFAULT_PROBE_QUBITS: usize = 2;

/// One registered attack family.
pub struct RegistryEntry {
    pub name: &'static str,
    pub usage: &'static str,
    parse: fn(Option<&str>) -> Result<AttackSpec>,
}

impl RegistryEntry {
    pub fn parse_args(&self, args: Option<&str>) -> Result<AttackSpec> {
        (self.parse)(args)
    }
}

fn no_args(name: &str, args: Option<&str>, spec: AttackSpec) -> Result<AttackSpec> {
    match args {
        None => Ok(spec),
        Some(extra) => Err(Error::InvalidArgument(format!(
            "attack `{name}` takes no arguments, got `{extra}`"
        ))),
    }
}

fn parse_intercept(args: Option<&str>) -> Result<AttackSpec> {
    let policy = match args {
        None => FakeStatePolicy::FixedPair(KetLabel::Plus, KetLabel::Zero),
        Some("random") => FakeStatePolicy::UniformRandomProduct,
        Some(pair) => {
            let chars: Vec<char> = pair.chars().collect();
            if chars.len() != 2 {
                return Err(Error::InvalidArgument(format!(
                    "intercept-resend takes two ket labels (e.g. `+0`) or `random`, got `{pair}`"
                )));
            }
            FakeStatePolicy::FixedPair(KetLabel::from_char(chars[0])?, KetLabel::from_char(chars[1])?)
        }
    };
    Ok(AttackSpec::InterceptResend(policy))
}

fn parse_thetas(name: &str, args: Option<&str>) -> Result<(f64, f64)> {
    let args = args.ok_or_else(|| {
        Error::InvalidArgument(format!("attack `{name}` needs angles, e.g. `{name}:0.7,1.2`"))
    })?;
    let mut parts = args.splitn(2, ',');
    let parse_one = |s: Option<&str>| -> Result<f64> {
        s.and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "attack `{name}` needs two finite angles in radians, got `{args}`"
                ))
            })
    };
    let theta_b = parse_one(parts.next())?;
    let theta_c = parse_one(parts.next())?;
    Ok((theta_b, theta_c))
}

pub(super) fn controlled_ry_label(theta_b: f64, theta_c: f64, compensated: bool) -> String {
    let name = if compensated {
        "entangle-measure-compensated"
    } else {
        "entangle-measure"
    };
    format!("{name}:{theta_b},{theta_c}")
}

static REGISTRY: &[RegistryEntry] = &[
    RegistryEntry {
        name: "none",
        usage: "none",
        parse: |args| no_args("none", args, AttackSpec::None),
    },
    RegistryEntry {
        name: "intercept-resend",
        usage: "intercept-resend[:<b><c>|:random]   (kets from 0 1 + -, default +0)",
        parse: parse_intercept,
    },
    RegistryEntry {
        name: "measure-resend-z",
        usage: "measure-resend-z",
        parse: |args| no_args("measure-resend-z", args, AttackSpec::MeasureResend(BasisPolicy::AlwaysZ)),
    },
    RegistryEntry {
        name: "measure-resend-x",
        usage: "measure-resend-x",
        parse: |args| no_args("measure-resend-x", args, AttackSpec::MeasureResend(BasisPolicy::AlwaysX)),
    },
    RegistryEntry {
        name: "measure-resend-random",
        usage: "measure-resend-random",
        parse: |args| {
            no_args(
                "measure-resend-random",
                args,
                AttackSpec::MeasureResend(BasisPolicy::UniformRandom),
            )
        },
    },
    RegistryEntry {
        name: "entangle-measure",
        usage: "entangle-measure:<theta_b>,<theta_c>   (radians)",
        parse: |args| {
            let (tb, tc) = parse_thetas("entangle-measure", args)?;
            controlled_rotation_attack(tb, tc, DEFAULT_PROBE_QUBITS, false)
        },
    },
    RegistryEntry {
        name: "entangle-measure-compensated",
        usage: "entangle-measure-compensated:<theta_b>,<theta_c>   (radians)",
        parse: |args| {
            let (tb, tc) = parse_thetas("entangle-measure-compensated", args)?;
            controlled_rotation_attack(tb, tc, DEFAULT_PROBE_QUBITS, true)
        },
    },
    RegistryEntry {
        name: "dishonest-bob-i",
        usage: "dishonest-bob-i",
        parse: |args| no_args("dishonest-bob-i", args, AttackSpec::DishonestBob(DishonestScheme::I)),
    },
    RegistryEntry {
        name: "dishonest-bob-ii",
        usage: "dishonest-bob-ii",
        parse: |args| no_args("dishonest-bob-ii", args, AttackSpec::DishonestBob(DishonestScheme::II)),
    },
    RegistryEntry {
        name: "dishonest-bob-iii",
        usage: "dishonest-bob-iii",
        parse: |args| {
            no_args(
                "dishonest-bob-iii",
                args,
                AttackSpec::DishonestBob(DishonestScheme::III),
            )
        },
    },
];

/// The registered attack families.
pub fn registry() -> &'static [RegistryEntry] {
    REGISTRY
}

/// Resolves an attack name like `measure-resend-z` or
/// `intercept-resend:+0` to its specification.
pub fn parse_attack(text: &str) -> Result<AttackSpec> {
    let (name, args) = match text.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (text, None),
    };
    let entry = REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown attack `{name}`; known attacks:\n{}",
                attack_usage()
            ))
        })?;
    entry.parse_args(args)
}

/// One usage line per registered attack, for error messages and help.
pub fn attack_usage() -> String {
    REGISTRY
        .iter()
        .map(|e| format!("  {}", e.usage))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_names_round_trip() {
        let names = [
            "none",
            "intercept-resend:+0",
            "intercept-resend:random",
            "intercept-resend:-1",
            "measure-resend-z",
            "measure-resend-x",
            "measure-resend-random",
            "dishonest-bob-i",
            "dishonest-bob-ii",
            "dishonest-bob-iii",
            "entangle-measure:0.5,1.25",
            "entangle-measure-compensated:0.5,1.25",
        ];
        for name in names {
            let spec = parse_attack(name).unwrap();
            assert_eq!(spec.canonical_name(), name);
            // Parsing the canonical name again yields the same spec name.
            assert_eq!(parse_attack(&spec.canonical_name()).unwrap().canonical_name(), name);
        }
    }

    #[test]
    fn default_intercept_pair_is_plus_zero() {
        let spec = parse_attack("intercept-resend").unwrap();
        assert_eq!(spec.canonical_name(), "intercept-resend:+0");
    }

    #[test]
    fn bad_names_are_rejected_with_usage() {
        let err = parse_attack("teleport").unwrap_err().to_string();
        assert!(err.contains("unknown attack"));
        assert!(err.contains("measure-resend-z"));
        assert!(parse_attack("intercept-resend:xy").is_err());
        assert!(parse_attack("measure-resend-z:extra").is_err());
        assert!(parse_attack("entangle-measure").is_err());
        assert!(parse_attack("entangle-measure:1.0").is_err());
        assert!(parse_attack("entangle-measure:1.0,nan").is_err());
    }

    #[test]
    fn built_attacks_report_their_name() {
        for entry in registry() {
            // Use defaults that parse for every family.
            let text = match entry.name {
                "entangle-measure" => "entangle-measure:0.3,0.4".to_string(),
                "entangle-measure-compensated" => "entangle-measure-compensated:0.3,0.4".to_string(),
                other => other.to_string(),
            };
            let spec = parse_attack(&text).unwrap();
            assert_eq!(spec.build().name(), spec.canonical_name());
        }
    }
}
