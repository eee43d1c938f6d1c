//! Scenarios shipped with the library, one per verification target.

pub struct BundledScenario {
    pub name: &'static str,
    pub source: &'static str,
}

macro_rules! bundle {
    ($($name:literal),* $(,)?) => {
        &[$(BundledScenario { name: $name, source: include_str!(concat!("../../scenarios/", $name, ".toml")) }),*]
    };
}

pub const BUNDLED: &[BundledScenario] = bundle![
    "deviation-law",
    "sho-born-rule",
    "fluctuation-scaling",
    "classical-limit",
    "information-balance",
    "sho-ground-uncertainty",
    "free-gaussian-uncertainty",
    "box-uncertainty",
    "box-excited-uncertainty",
    "coherent-operator-averages",
    "plane-wave-operator-averages",
    "product-locality",
    "solver-cross-validation",
    "determinism",
];

pub fn bundled(name: &str) -> Option<&'static BundledScenario> {
    BUNDLED.iter().find(|b| b.name == name)
}

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|b| b.name).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::Scenario;

    #[test]
    fn every_bundled_scenario_resolves_under_its_own_name() {
        assert!(BUNDLED.len() >= 8);
        for b in BUNDLED {
            let s = Scenario::parse(b.source).unwrap_or_else(|e| panic!("{}: {e}", b.name));
            assert_eq!(s.name, b.name);
            s.resolve().unwrap_or_else(|e| panic!("{}: {e}", b.name));
        }
    }
}
